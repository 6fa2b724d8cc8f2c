import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ganmc.windowing import (
    NoViableStrideError,
    WindowingError,
    covariance_rank,
    partition,
    search_stride,
)


def brute_force_windows(values, d, T):
    """Direct transcription of the start-index rule: starts at k*d while they fit."""
    values = np.asarray(values, dtype=float)
    out = []
    k = 0
    while k * d + T <= len(values):
        out.append(values[k * d : k * d + T])
        k += 1
    return np.array(out)


class TestPartition:
    def test_n10_t4_d3(self):
        src = np.arange(1.0, 11.0)
        ws = partition(src, d=3, T=4)
        assert len(ws) == 3
        np.testing.assert_array_equal(ws.windows[0], [1, 2, 3, 4])
        np.testing.assert_array_equal(ws.windows[1], [4, 5, 6, 7])
        np.testing.assert_array_equal(ws.windows[2], [7, 8, 9, 10])

    def test_n_equals_t_single_window(self):
        src = np.arange(1.0, 7.0)
        for d in (1, 3, 6):
            ws = partition(src, d=d, T=6)
            assert len(ws) == 1
            np.testing.assert_array_equal(ws.windows[0], src)

    def test_n10_t4_d1_seven_windows(self):
        src = np.arange(10.0)
        ws = partition(src, d=1, T=4)
        assert len(ws) == 7
        np.testing.assert_array_equal(ws.windows, brute_force_windows(src, 1, 4))

    def test_too_short_series(self):
        with pytest.raises(WindowingError, match="series too short"):
            partition(np.arange(3.0), d=1, T=4)

    def test_bad_stride(self):
        with pytest.raises(WindowingError, match="stride"):
            partition(np.arange(10.0), d=0, T=4)

    @given(
        n=st.integers(2, 50),
        T=st.integers(1, 10),
        d=st.integers(1, 10),
        seed=st.integers(0, 10**6),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_brute_force(self, n, T, d, seed):
        if T > n or d > T:
            return
        src = np.random.default_rng(seed).uniform(1.0, 100.0, n)
        ws = partition(src, d=d, T=T)
        np.testing.assert_array_equal(ws.windows, brute_force_windows(src, d, T))
        assert len(ws) == (n - T) // d + 1

    def test_count_non_increasing_in_stride(self):
        src = np.arange(100.0)
        counts = [len(partition(src, d, 10)) for d in range(1, 11)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))


class TestCovarianceRank:
    def test_identical_windows_rank_zero(self):
        windows = np.tile(np.array([1.0, 2.0, 3.0]), (5, 1))
        ws = partition(np.arange(1.0, 8.0), 1, 3)
        ws = type(ws)(windows=windows, d=1, T=3, n=7)
        assert covariance_rank(ws) == 0

    def test_full_rank_sample(self, rng):
        T = 5
        windows = rng.uniform(1.0, 10.0, (50, T))
        ws = _make_ws(windows)
        rank = covariance_rank(ws)
        # independent eigen-decomposition oracle
        centered = windows - windows.mean(axis=0)
        eig = np.linalg.eigvalsh(centered.T @ centered / 49)
        oracle = int(np.sum(eig > 1e-8 * eig.max()))
        assert rank == oracle == T

    def test_rank_one_for_scalar_multiples(self, rng):
        v = np.array([1.0, 2.0, 3.0, 4.0])
        coeffs = rng.uniform(0.5, 2.0, 20)
        windows = np.outer(coeffs, v)
        assert covariance_rank(_make_ws(windows)) == 1

    def test_invariant_under_constant_shift(self, rng):
        windows = rng.uniform(1.0, 10.0, (12, 6))
        shift = rng.uniform(-5.0, 5.0, 6)
        assert covariance_rank(_make_ws(windows)) == covariance_rank(
            _make_ws(windows + shift)
        )

    def test_needs_two_windows(self):
        with pytest.raises(WindowingError):
            covariance_rank(_make_ws(np.ones((1, 4))))


def _make_ws(windows):
    from ganmc.windowing import WindowSet

    count, T = windows.shape
    return WindowSet(windows=windows, d=1, T=T, n=count + T - 1)


class TestSearchStride:
    def test_probe_never_collapses_picks_d1(self):
        src = np.random.default_rng(0).uniform(50, 150, 1000)
        d, ws = search_stride(src, T=100, n1=5, train_probe=lambda ws: False)
        assert d == 1
        assert len(ws) == 901

    def test_probe_collapses_until_d3(self):
        src = np.random.default_rng(0).uniform(50, 150, 200)
        d, ws = search_stride(src, T=20, n1=2, train_probe=lambda ws: ws.d < 3)
        assert d == 3
        assert len(ws) == (200 - 20) // 3 + 1

    def test_unreachable_n1(self):
        src = np.arange(1.0, 51.0)
        with pytest.raises(NoViableStrideError) as exc:
            search_stride(src, T=40, n1=100, train_probe=lambda ws: False)
        assert exc.value.diagnostics[1].startswith("size")

    def test_diagnostics_record_collapse(self):
        src = np.arange(1.0, 51.0)
        with pytest.raises(NoViableStrideError) as exc:
            search_stride(src, T=10, n1=1, train_probe=lambda ws: True)
        assert all(v == "probe collapsed" for v in exc.value.diagnostics.values())
