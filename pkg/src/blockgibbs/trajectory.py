"""Time series of empirical vectors and their CSV form."""
from __future__ import annotations

import io
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .model import ROLES


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    values: np.ndarray  # (len(times), 2r, K)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] != self.times.shape[0]:
            raise ValueError("times and values differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def sup_distance(self, other: "Trajectory") -> float:
        """Max over shared sample times of the max-norm gap."""
        if not np.allclose(self.times, other.times):
            raise ValueError("trajectories sampled at different times")
        return float(np.max(np.abs(self.values - other.values)))


def mean_trajectory(trajs) -> Trajectory:
    trajs = list(trajs)
    return Trajectory(trajs[0].times, np.mean([t.values for t in trajs], axis=0))


def csv_header(n_classes: int, K: int) -> list:
    cols = ["t"]
    for m in range(n_classes):
        for z in range(1, K + 1):
            cols.append(f"q.{m // 2 + 1}.{ROLES[m % 2]}.{z}")
    return cols


def trajectory_to_csv(traj: Trajectory) -> str:
    n, C, K = traj.values.shape
    buf = io.StringIO()
    buf.write(",".join(csv_header(C, K)) + "\n")
    flat = traj.values.reshape(n, C * K)
    for t, row in zip(traj.times, flat):
        buf.write(",".join(f"{v:.17g}" for v in (t, *row)) + "\n")
    return buf.getvalue()


def trajectory_from_csv(text: str) -> Trajectory:
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    last = header[-1].split(".")
    C, K = 2 * int(last[1]), int(last[3])
    return Trajectory(data[:, 0], data[:, 1:].reshape(-1, C, K))


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trajectory_csv(traj: Trajectory, path) -> None:
    atomic_write(path, trajectory_to_csv(traj))
