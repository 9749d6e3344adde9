"""Counter-based stream primitives: determinism, ranges, scalar/vector parity."""

import numpy as np
import pytest

from grouptest import rng


def test_mix64_is_deterministic_and_order_sensitive():
    assert rng.mix64(1, 2, 3) == rng.mix64(1, 2, 3)
    assert rng.mix64(1, 2, 3) != rng.mix64(3, 2, 1)
    assert rng.mix64(0) != rng.mix64(1)
    assert 0 <= rng.mix64(2**64 - 1, 17) < 2**64


def test_scalar_and_vector_u64_agree():
    keys = [rng.mix64(9, i) for i in range(8)]
    for key in keys:
        got = rng.u64_np(np.uint64(key), np.arange(16, dtype=np.uint64))
        want = [rng.u64_at(key, c) for c in range(16)]
        assert [int(v) for v in got] == want


@pytest.mark.parametrize("bound", [1, 2, 3, 7, 13, 64, 1000, 2**32])
def test_scalar_and_vector_bounded_agree(bound):
    key = rng.mix64(4, bound)
    got = rng.bounded_np(np.uint64(key), np.arange(64, dtype=np.uint64), bound)
    want = [rng.bounded_at(key, c, bound) for c in range(64)]
    assert [int(v) for v in got] == want
    assert all(0 <= v < bound for v in want)


def test_bounded_rejects_nonpositive_bound():
    with pytest.raises(ValueError):
        rng.bounded_at(1, 0, 0)
    with pytest.raises(ValueError):
        rng.bounded_np(np.uint64(1), np.uint64(0), -3)


def test_unit_at_range_and_parity():
    key = rng.mix64(77)
    vals = [rng.unit_at(key, c) for c in range(1000)]
    assert all(0.0 <= v < 1.0 for v in vals)
    vec = rng.unit_np(np.uint64(key), np.arange(1000, dtype=np.uint64))
    assert np.array_equal(np.array(vals), vec)
    # crude uniformity: mean of 1000 uniforms within 5 sigma of 1/2
    assert abs(np.mean(vals) - 0.5) < 5 * (1 / 12) ** 0.5 / 1000**0.5


def test_bounded_uniformity_chi_square():
    """10 bins, 50k draws: chi-square statistic below the 0.999 quantile (27.9)."""
    key = rng.mix64(123)
    draws = rng.bounded_np(np.uint64(key), np.arange(50_000, dtype=np.uint64), 10)
    counts = np.bincount(draws, minlength=10)
    expected = 5000.0
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 27.88, chi2
