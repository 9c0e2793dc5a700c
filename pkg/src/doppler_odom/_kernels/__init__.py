"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the NumPy
fallback is always available. Set DOPPLER_ODOM_KERNEL=numpy (or =native) to
force a backend, e.g. for benchmarking or debugging a suspected build issue.
"""

from __future__ import annotations

import os

from . import _fallback

_choice = os.environ.get("DOPPLER_ODOM_KERNEL", "auto").lower()

BACKEND = "numpy"
ransac_select = _fallback.ransac_select

if _choice in ("auto", "native"):
    # Import the symbol, not the submodule: `from . import _native` would be
    # satisfied by any existing `_native` attribute on this package instead of
    # triggering the extension import.
    try:
        from ._native import ransac_select as _native_select
    except ImportError as exc:
        if _choice == "native":
            raise ImportError(
                "DOPPLER_ODOM_KERNEL=native but the compiled kernel is not "
                "available; reinstall the package with a C compiler present"
            ) from exc
    else:
        BACKEND = "native"
        ransac_select = _native_select


def available_backends() -> dict[str, object]:
    """Map backend name to its ransac_select callable, for tests/benchmarks."""
    out = {"numpy": _fallback.ransac_select}
    try:
        from ._native import ransac_select as native_select
    except ImportError:
        pass
    else:
        out["native"] = native_select
    return out
