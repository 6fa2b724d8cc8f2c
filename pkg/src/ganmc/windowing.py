"""Sliding-window training sets over a price history.

A window set collects every length-T slice of the source series whose
start index steps by a stride d. The stride search walks d upward until
the set is large enough and a short training probe reports no collapse.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_RANK_TOL = 1e-8


class WindowingError(ValueError):
    pass


class NoViableStrideError(WindowingError):
    """No stride in 1..T yields a large-enough, non-collapsing window set."""

    def __init__(self, diagnostics: dict[int, str]):
        self.diagnostics = dict(diagnostics)
        lines = "; ".join(f"d={d}: {why}" for d, why in sorted(diagnostics.items()))
        super().__init__(f"no viable stride ({lines})")


@dataclass(frozen=True)
class WindowSet:
    """Training set of T-length price windows taken at stride d."""

    windows: np.ndarray  # shape (count, T)
    d: int
    T: int
    n: int
    n1: int | None = None

    def __post_init__(self):
        expected = (self.n - self.T) // self.d + 1
        if self.windows.shape != (expected, self.T):
            raise WindowingError(
                f"window matrix shape {self.windows.shape} != ({expected}, {self.T})"
            )

    def __len__(self) -> int:
        return self.windows.shape[0]


def partition(values: Sequence[float] | np.ndarray, d: int, T: int) -> WindowSet:
    """Slice a price series into windows starting at 0-based indices k*d."""
    src = np.asarray(values, dtype=float)
    n = src.shape[0]
    if d < 1:
        raise WindowingError(f"stride must be >= 1, got {d}")
    if T < 1:
        raise WindowingError(f"window length must be >= 1, got {T}")
    if T > n:
        raise WindowingError(f"series too short: T={T} > n={n}")
    if d > T:
        raise WindowingError(f"stride {d} exceeds window length {T}")
    count = (n - T) // d + 1
    windows = np.stack([src[k * d : k * d + T] for k in range(count)])
    return WindowSet(windows=windows, d=d, T=T, n=n)


def covariance_rank(ws: WindowSet, tol: float = DEFAULT_RANK_TOL) -> int:
    """Numerical rank of the sample covariance of the windows.

    Counts singular values above tol times the largest one; the zero
    matrix has rank 0.
    """
    if len(ws) < 2:
        raise WindowingError("need at least 2 windows for a covariance rank")
    centered = ws.windows - ws.windows.mean(axis=0, keepdims=True)
    cov = centered.T @ centered / (len(ws) - 1)
    sv = np.linalg.svd(cov, compute_uv=False)
    if sv[0] <= 0.0:
        return 0
    rank = int(np.sum(sv > tol * sv[0]))
    if rank < ws.T / 4:
        log.warning(
            "covariance rank %d is low relative to window length %d; "
            "training may be unstable",
            rank,
            ws.T,
        )
    return rank


def search_stride(
    values: Sequence[float] | np.ndarray,
    T: int,
    n1: int,
    train_probe: Callable[[WindowSet], bool],
) -> tuple[int, WindowSet]:
    """Smallest stride whose window set has >= n1 windows and a passing probe.

    train_probe returns True when training collapsed for that window set.
    """
    src = np.asarray(values, dtype=float)
    if n1 < 1:
        raise WindowingError(f"N1 must be >= 1, got {n1}")
    if T > src.shape[0]:
        raise WindowingError(f"series too short: T={T} > n={src.shape[0]}")
    diagnostics: dict[int, str] = {}
    for d in range(1, T + 1):
        ws = partition(src, d, T)
        if len(ws) < n1:
            diagnostics[d] = f"size {len(ws)} < N1={n1}"
            continue
        if train_probe(ws):
            diagnostics[d] = "probe collapsed"
            continue
        return d, WindowSet(windows=ws.windows, d=d, T=T, n=ws.n, n1=n1)
    raise NoViableStrideError(diagnostics)
