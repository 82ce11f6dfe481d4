import math

import numpy as np
import pytest

from levyband.char_fn import (
    CfEvaluation,
    analytic_cf,
    ecf_eval,
    ecf_naive,
    frequency_grid,
)
from levyband.errors import ParameterError
from levyband.levy_models import IncrementSample, LevyModel, simulate_increments


def test_zero_sample():
    cf = ecf_eval(np.zeros(50), frequency_grid(30.0, 129))
    assert np.all(cf.phi == 1)
    assert np.all(cf.dphi == 0)
    assert np.all(cf.d2phi == 0)


def test_two_point_sample_at_pi():
    cf = ecf_eval(np.array([1.0, -1.0]), np.array([math.pi]))
    assert cf.phi[0] == pytest.approx(-1.0, abs=1e-15)
    assert abs(cf.dphi[0]) < 1e-15
    assert cf.d2phi[0] == pytest.approx(1.0, abs=1e-15)


def test_gaussian_clt_envelope():
    y = np.random.default_rng(0).standard_normal(10_000)
    cf = ecf_eval(y, np.array([1.0]))
    assert abs(cf.phi[0] - math.exp(-0.5)) <= 4 / math.sqrt(y.size)


def test_analytic_cf_examples():
    for m in [LevyModel.bcn(1, 0.5, 10), LevyModel.bcl(0, 0.5, 4), LevyModel.gamma(0.2, 1)]:
        assert analytic_cf(m, 0.01, 0.0) == 1
    assert analytic_cf(LevyModel.gamma(0.2, 1), 0.01, 1.0) == pytest.approx((1 - 1j) ** -0.002, abs=1e-15)
    assert analytic_cf(LevyModel.bcn(0, 0.5, 10), 0.01, 2.0) == pytest.approx(
        math.exp(0.1 * (math.exp(-0.5) - 1)), abs=1e-15)


@pytest.mark.parametrize("n_u,u_max", [(129, 10.0), (1025, 55.5), (4097, 100.0)])
def test_fast_path_matches_naive(n_u, u_max):
    y = simulate_increments(LevyModel.bcl(1, 0.5, 10), 3000, 0.01, np.random.default_rng(n_u)).y
    y = np.concatenate([y, [2.5, -3.0]])
    u = frequency_grid(u_max, n_u)
    fast = ecf_eval(y, u)
    ref = ecf_naive(y, u)
    for got, want in zip((fast.phi, fast.dphi, fast.d2phi), ref):
        assert np.max(np.abs(got - want)) <= 1e-12


def test_nonuniform_grid_uses_direct_sum():
    y = np.random.default_rng(1).normal(size=300)
    u = np.array([0.0, 0.3, 1.7, 5.0])
    cf = ecf_eval(IncrementSample(y, 0.1), u)
    ref = ecf_naive(y, u)
    assert np.allclose(cf.phi, ref[0], atol=0, rtol=0)


def test_symmetry_and_origin_values():
    y = simulate_increments(LevyModel.gamma(0.2, 1), 5000, 0.01, np.random.default_rng(2)).y
    cf = ecf_eval(y, frequency_grid(80.0, 1025))
    m = cf.u.size // 2
    assert cf.phi[m] == 1
    assert cf.dphi[m] == pytest.approx(1j * y.mean(), abs=1e-16)
    assert cf.d2phi[m] == pytest.approx(-np.mean(y * y), abs=1e-16)
    assert np.max(np.abs(cf.phi[::-1] - np.conj(cf.phi))) <= 1e-14
    assert np.max(np.abs(cf.dphi[::-1] + np.conj(cf.dphi))) <= 1e-14
    assert np.max(np.abs(cf.d2phi[::-1] - np.conj(cf.d2phi))) <= 1e-14
    assert np.all(np.abs(cf.phi) <= 1 + 1e-15)


def test_ecf_error_shrinks_with_n():
    model, delta, h = LevyModel.bcn(1, 0.5, 10), 0.01, 0.1
    u = frequency_grid(1 / h, 513)
    errs = []
    for n in (2_000, 8_000, 32_000):
        e = [np.max(np.abs(ecf_eval(simulate_increments(model, n, delta, np.random.default_rng(s)),
                                    u).phi - analytic_cf(model, delta, u))) for s in range(5)]
        errs.append(np.median(e))
    # sup error is O(log(1/h) / sqrt(n)): fit C on the smallest n and check the bound holds
    c_fit = errs[0] * math.sqrt(2_000) / math.log(1 / h)
    for n, e in zip((8_000, 32_000), errs[1:]):
        assert e <= 1.5 * c_fit * math.log(1 / h) / math.sqrt(n)
    assert errs[0] > errs[1] > errs[2]


def test_grid_and_input_validation():
    with pytest.raises(ParameterError):
        frequency_grid(1.0, 4)
    with pytest.raises(ParameterError):
        frequency_grid(0.0, 5)
    with pytest.raises(ParameterError):
        ecf_eval(np.array([]), np.array([1.0]))
    with pytest.raises(ParameterError):
        ecf_eval(np.ones(3), np.array([np.inf]))
    g = frequency_grid(2.0, 5)
    assert np.array_equal(g, -g[::-1]) and g[2] == 0


def test_csv_dump(tmp_path):
    cf = ecf_eval(np.array([0.1, -0.2, 0.3]), frequency_grid(5.0, 9))
    path = tmp_path / "cf.csv"
    cf.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "u,re_phi,im_phi,re_dphi,im_dphi,re_d2phi,im_d2phi"
    assert len(lines) == 10
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(back[:, 1] + 1j * back[:, 2], cf.phi)


def test_restrict():
    cf = ecf_eval(np.array([0.5, 1.0]), frequency_grid(10.0, 21))
    r = cf.restrict(5.0)
    assert isinstance(r, CfEvaluation)
    assert r.u.size == 11 and r.u[-1] == pytest.approx(5.0)
