import numpy as np
import pytest

from qsep.qlinalg import is_product_state, numerical_rank, partial_transpose
from qsep.separable_decomp import is_ppt
from qsep.states import StateRng, random_state, random_separable_with_ranks, werner


def test_philox_stream_is_keyed_by_seed():
    a, b = StateRng(1).uniform(8), StateRng(1).uniform(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, StateRng(2).uniform(8))
    raw = np.random.Philox(key=1).random_raw(1)[0]
    assert a[0] == (int(raw) >> 11) * 2.0**-53


def test_uniform_and_gaussian_moments():
    rng = StateRng(99)
    u = rng.uniform(200_000)
    assert 0 <= u.min() and u.max() < 1
    assert u.mean() == pytest.approx(0.5, abs=5e-3)
    z = rng.complex_normal(100_000)
    assert np.mean(z.real**2) == pytest.approx(1, abs=2e-2)
    assert np.mean(z.imag**2) == pytest.approx(1, abs=2e-2)


def test_simplex():
    w = StateRng(4).simplex(5)
    assert np.all(w > 0) and w.sum() == pytest.approx(1)


def test_kinds():
    assert is_product_state(random_state("product", 3))
    sep = random_state("separable", 3, rank=2)
    assert is_ppt(sep).is_ppt and numerical_rank(sep) <= 2
    assert not is_ppt(random_state("entangled", 3)).is_ppt
    assert numerical_rank(random_state("pure", 3)) == 1
    assert numerical_rank(random_state("mixed", 3, rank=3)) == 3
    with pytest.raises(ValueError):
        random_state("bogus", 1)


@pytest.mark.parametrize("ranks", [(1, 1), (2, 2), (3, 3), (3, 4), (4, 3), (4, 4)])
def test_rank_constructions(ranks):
    for seed in range(10):
        rho = random_separable_with_ranks(StateRng(seed), ranks)
        assert (numerical_rank(rho), numerical_rank(partial_transpose(rho))) == ranks


def test_werner_spectrum():
    for p in np.linspace(0, 1, 11):
        vals = np.linalg.eigvalsh(partial_transpose(werner(p)))
        assert vals[0] == pytest.approx((1 - 3 * p) / 4, abs=1e-12)
