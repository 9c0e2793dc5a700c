"""Relative pose error between an estimated and a reference trajectory.

Estimate poses are associated to reference poses by nearest timestamp within
50 ms. Error pairs are consecutive associated frames (`per-frame`) or frames
nearest to one second apart (`per-second`); each pair contributes the error
transform E = (Q_i^-1 Q_j)^-1 (P_i^-1 P_j), scored by translation norm and
rotation angle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset_io import format_float
from .errors import EmptyTrajectory, NoOverlap, ValidationError
from .geometry import Pose, rotation_angle

ASSOCIATION_TOL = 0.05  # s
PER_SECOND_DELTA = 1.0  # s

MODES = ("per-frame", "per-second")


@dataclass
class RpeReport:
    """Per-pair relative pose errors plus summary statistics."""

    mode: str
    pair_timestamps: np.ndarray
    translational: np.ndarray
    rotational: np.ndarray

    @property
    def n_pairs(self) -> int:
        return len(self.pair_timestamps)

    def summary(self) -> dict[str, float]:
        out = {}
        for name, err in (("trans", self.translational), ("rot", self.rotational)):
            out[f"{name}_mean"] = float(err.mean())
            out[f"{name}_median"] = float(np.median(err))
            out[f"{name}_rms"] = float(np.sqrt(np.mean(err**2)))
            out[f"{name}_max"] = float(err.max())
        return out

    def format_summary(self) -> str:
        s = self.summary()
        lines = [
            f"mode: {self.mode} ({self.n_pairs} pairs)",
            (
                "translational error (m): "
                f"mean {s['trans_mean']:.6g}  median {s['trans_median']:.6g}  "
                f"rms {s['trans_rms']:.6g}  max {s['trans_max']:.6g}"
            ),
            (
                "rotational error (rad): "
                f"mean {s['rot_mean']:.6g}  median {s['rot_median']:.6g}  "
                f"rms {s['rot_rms']:.6g}  max {s['rot_max']:.6g}"
            ),
        ]
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("pair_timestamp,trans_err,rot_err\n")
            for t, te, re_ in zip(self.pair_timestamps, self.translational, self.rotational):
                fh.write(f"{format_float(t)},{format_float(te)},{format_float(re_)}\n")


def _associate(estimate: list[Pose], reference: list[Pose]):
    ref_times = np.array([p.timestamp for p in reference])
    matched = []
    for pose in estimate:
        i = int(np.searchsorted(ref_times, pose.timestamp))
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(reference):
                delta = abs(ref_times[j] - pose.timestamp)
                if best is None or delta < best[0]:
                    best = (delta, j)
        if best is not None and best[0] <= ASSOCIATION_TOL:
            matched.append((pose, reference[best[1]]))
    return matched


def _pair_error(est_i: Pose, est_j: Pose, ref_i: Pose, ref_j: Pose):
    rel_p_rot = est_i.rotation.T @ est_j.rotation
    rel_p_trans = est_i.rotation.T @ (est_j.position - est_i.position)
    rel_q_rot = ref_i.rotation.T @ ref_j.rotation
    rel_q_trans = ref_i.rotation.T @ (ref_j.position - ref_i.position)
    err_rot = rel_q_rot.T @ rel_p_rot
    trans_err = float(np.linalg.norm(rel_p_trans - rel_q_trans))
    return trans_err, rotation_angle(err_rot)


def relative_pose_error(estimate, reference, mode: str = "per-frame") -> RpeReport:
    """Compute RPE of `estimate` against `reference`.

    Raises:
        ValidationError: unknown mode.
        EmptyTrajectory: either input has no poses.
        NoOverlap: no poses associate within 50 ms, or no pairs exist.
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    estimate = list(estimate)
    reference = list(reference)
    if not estimate or not reference:
        raise EmptyTrajectory("both trajectories need at least one pose")
    matched = _associate(estimate, reference)
    if not matched:
        raise NoOverlap(
            f"no estimate pose lies within {ASSOCIATION_TOL * 1e3:.0f} ms of the reference"
        )

    pairs = []
    if mode == "per-frame":
        pairs = [(k, k + 1) for k in range(len(matched) - 1)]
    else:
        times = np.array([p.timestamp for p, _ in matched])
        for k in range(len(matched)):
            target = times[k] + PER_SECOND_DELTA
            j = int(np.searchsorted(times, target))
            best = None
            for cand in (j - 1, j):
                if 0 <= cand < len(matched) and cand > k:
                    delta = abs(times[cand] - target)
                    if best is None or delta < best[0]:
                        best = (delta, cand)
            if best is not None and best[0] <= ASSOCIATION_TOL:
                pairs.append((k, best[1]))
    if not pairs:
        raise NoOverlap(f"no usable {mode} pairs in the overlapping span")

    stamps = np.empty(len(pairs))
    trans = np.empty(len(pairs))
    rot = np.empty(len(pairs))
    for row, (i, j) in enumerate(pairs):
        est_i, ref_i = matched[i]
        est_j, ref_j = matched[j]
        stamps[row] = est_i.timestamp
        trans[row], rot[row] = _pair_error(est_i, est_j, ref_i, ref_j)
    return RpeReport(mode, stamps, trans, rot)
