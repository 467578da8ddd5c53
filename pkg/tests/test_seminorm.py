import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmreg import harmonic as H
from harmreg import majorant as M
from harmreg import seminorm as S
from harmreg.errors import ArgumentError, DegenerateMajorantError, NotTransversalError, PreconditionError
from harmreg.geometry import ball, custom_family, make_family

DISK = ball(1.0, 2)
TILT = math.radians(30)


@pytest.fixture(scope="module")
def tilted():
    return make_family("tilted", DISK, 0.5, theta=TILT)


def dense_global_oracle_holder(alpha=0.5, beta=0.5, floor=1e-6):
    """Oracle: pairs on the segment towards the singular point, log-spaced distances."""
    eps = np.geomspace(floor, 1.0, 1500)
    a, b = np.meshgrid(eps, eps)
    a, b = a.ravel(), b.ravel()
    keep = a != b
    a, b = a[keep], b[keep]
    return float(np.max(np.abs(a**alpha - b**alpha) / np.abs(a - b) ** beta))


def dense_transversal_oracle(u, fam, B, s_lo, s_hi, n_p=801, n_s=120):
    """Oracle: structured grid in boundary angle (clustered at angle 0) and log-spaced s, t."""
    ang = np.concatenate([np.linspace(-0.5, 0.5, n_p), np.geomspace(1e-7, 0.5, 200), -np.geomspace(1e-7, 0.5, 200)])
    s = np.geomspace(s_lo, s_hi, n_s)
    best = 0.0
    for a in ang:
        p = np.array([[math.cos(a), math.sin(a)]])
        vals = u(fam.gamma(np.repeat(p, n_s, axis=0), s))
        d = np.abs(s[:, None] - s[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.abs(vals[:, None] - vals[None, :]) / B(np.where(d > 0, d, 1.0))
        r[d == 0] = 0
        best = max(best, float(r.max()))
    return best


def test_constant_is_zero():
    u = H.constant(1.0, 2)
    assert S.global_seminorm(u, DISK, M.power(0.5), 2000, 1).value == 0.0
    fam = make_family("normal", DISK, 0.5)
    assert S.transversal_seminorm(u, fam, M.power(0.5), None, 2000, 1).value == 0.0


@pytest.mark.parametrize("dim", [2, 3])
def test_coordinate_global_identity(dim):
    est = S.global_seminorm(H.coordinate(dim), ball(1.0, dim), M.identity(), 4096, 2)
    assert est.value == pytest.approx(1.0, abs=1e-5)
    assert est.value <= 1.0 + 1e-12
    d = est.witness["x"] - est.witness["y"]
    assert abs(d[0]) / np.linalg.norm(d) == pytest.approx(1.0, abs=1e-3)


def test_witness_reproduces_value():
    u = H.holder_model(0.5)
    est = S.global_seminorm(u, DISK, M.power(0.5), 4096, 3)
    again = S.pair_ratio(u, M.power(0.5), est.witness["x"], est.witness["y"])[0]
    assert again == pytest.approx(est.value, rel=1e-12)


def test_holder_global_against_oracle():
    # |sqrt(a) - sqrt(b)| <= sqrt|a - b| for principal roots, so the true value is at most 1
    oracle = dense_global_oracle_holder()
    vals = [S.global_seminorm(H.holder_model(0.5), DISK, M.power(0.5), b, 4).value for b in (4096, 16384)]
    assert max(vals) <= 1.0 + 1e-12
    assert min(vals) >= 0.97 * oracle
    assert abs(vals[1] - vals[0]) <= 0.1 * vals[0]


def test_coordinate_transversal_identity():
    fam = make_family("normal", ball(1.0, 2), 0.5)
    est = S.transversal_seminorm(H.coordinate(2), fam, M.identity(), None, 4096, 5)
    assert est.value <= 1.0 + 1e-9
    assert est.value == pytest.approx(1.0, abs=1e-4)
    assert abs(est.witness["p"][0]) == pytest.approx(1.0, abs=1e-3)


def test_holder_transversal_against_oracle(tilted):
    u, B = H.holder_model(0.5), M.power(0.5)
    lo, hi = S.default_s_range(tilted)
    oracle = dense_transversal_oracle(u, tilted, B, lo, hi)
    vals = [S.transversal_seminorm(u, tilted, B, None, b, 6).value for b in (4096, 16384)]
    assert max(vals) <= 1.0 + 1e-12
    assert min(vals) >= 0.97 * oracle
    assert abs(vals[1] - vals[0]) <= 0.1 * vals[0]


def test_transversal_witness(tilted):
    u, B = H.holder_model(0.5), M.power(0.5)
    est = S.transversal_seminorm(u, tilted, B, None, 4096, 7)
    w = est.witness
    again = S.curve_ratio(u, tilted, B, w["p"], w["s"], w["t"])[0]
    assert again == pytest.approx(est.value, rel=1e-12)


def test_transversal_s_range_checked(tilted):
    with pytest.raises(ArgumentError):
        S.transversal_seminorm(H.coordinate(2), tilted, M.power(0.5), (0.1, 0.6), 2000, 1)
    with pytest.raises(ArgumentError):
        S.transversal_seminorm(H.coordinate(2), tilted, M.power(0.5), (0.0, 0.1), 2000, 1)


def test_budget_floor():
    with pytest.raises(ArgumentError):
        S.global_seminorm(H.coordinate(2), DISK, M.power(0.5), 999, 1)


def test_degenerate_majorant():
    flat = M.from_function(lambda t: np.where(t < 0.5, 0.0, t))
    with pytest.raises(DegenerateMajorantError):
        S.global_seminorm(H.coordinate(2), DISK, flat, 2000, 1)


@settings(max_examples=15)
@given(k=st.sampled_from([0.125, 0.5, 2.0, 8.0]), seed=st.integers(0, 2**32))
def test_scale_covariance_exact(k, seed):
    u = H.holder_model(0.5)
    a = S.global_seminorm(u, DISK, M.power(0.5), 1024, seed)
    b = S.global_seminorm(u.scaled(k), DISK, M.power(0.5), 1024, seed)
    assert b.value == k * a.value
    np.testing.assert_array_equal(a.witness["x"], b.witness["x"])


@settings(max_examples=15)
@given(k=st.floats(0.01, 100.0), seed=st.integers(0, 2**32))
def test_scale_covariance_general(k, seed):
    u = H.poisson_kernel([0.0, 1.0])
    a = S.global_seminorm(u, DISK, M.power(0.5), 1024, seed)
    b = S.global_seminorm(u.scaled(k), DISK, M.power(0.5), 1024, seed)
    assert b.value == pytest.approx(k * a.value, rel=1e-12)


@settings(max_examples=20)
@given(seed=st.integers(0, 2**32), beta=st.floats(0.2, 1.0))
def test_domination_on_matched_samples(seed, beta):
    # unit speed: |gamma_p(s) - gamma_p(t)| <= |s - t|, so each transversal ratio is at most the pair ratio;
    # on straight segments the two are equal up to rounding
    fam = make_family("tilted", DISK, 0.5, theta=TILT)
    u, B = H.holder_model(0.5), M.power(beta)
    rng = np.random.default_rng(seed)
    ang = rng.uniform(0, 2 * np.pi, 300)
    p = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    s = rng.uniform(1e-6, 0.25, 300)
    t = rng.uniform(1e-6, 0.25, 300)
    trans = S.curve_ratio(u, fam, B, p, s, t)
    glob = S.pair_ratio(u, B, fam.gamma(p, s), fam.gamma(p, t))
    assert np.all(trans <= glob * (1 + 1e-9))


def test_poisson_divergence_witness():
    u, B = H.poisson_kernel([1.0, 0.0]), M.power(0.5)
    v6 = S.global_seminorm(u, DISK, B, 4096, 8, delta_floor=1e-6).value
    v7 = S.global_seminorm(u, DISK, B, 4096, 8, delta_floor=1e-7).value
    assert v7 >= 2.0 * v6


def test_trace_monotone_and_nested():
    u, B = H.holder_model(0.5), M.power(0.5)
    small = S.global_seminorm(u, DISK, B, 2048, 9)
    big = S.global_seminorm(u, DISK, B, 8192, 9)
    for est in (small, big):
        vals = [v for _, v in est.trace]
        assert vals == sorted(vals) and vals[-1] == est.value
    assert dict(big.trace)[2048] == dict(small.trace)[2048]


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("bands", [(0.05, 0.1), (0.02, 0.2)])
def test_max_principle_catalog(dim, bands):
    dom = ball(1.0, dim)
    for u in H.catalog(dim) + [H.constant(1.0, dim)]:
        res = S.max_principle_transfer(u, dom, M.power(0.5), *bands, budget=4096, seed=10)
        assert res["bound_ok"], (u.name, res["A0"], res["A1"])


def test_max_principle_coordinate_closed_form():
    res = S.max_principle_transfer(H.coordinate(2), DISK, M.power(0.5), 0.05, 0.1, budget=4096, seed=11)
    assert res["A0"] == pytest.approx(0.05**0.5, rel=1e-9)
    assert res["A1"] == pytest.approx(0.1**0.5, rel=1e-9)
    assert res["bound_ok"]


def test_max_principle_band_order():
    with pytest.raises(ArgumentError):
        S.max_principle_transfer(H.coordinate(2), DISK, M.power(0.5), 0.1, 0.05)
    with pytest.raises(ArgumentError):
        S.max_principle_transfer(H.coordinate(2), DISK, M.power(0.5), 0.1, 1.5)


def test_main_theorem_coordinate():
    fam = make_family("normal", DISK, 0.5)
    res = S.main_theorem_check(H.coordinate(2), fam, DISK, M.power(0.5), 2048, seed=12)
    assert res.finite and res.stable
    assert res.T == pytest.approx(0.5**0.5 * 1.0, rel=0.05) or res.T <= 1.0


def test_main_theorem_constant_undefined_ratios():
    fam = make_family("normal", DISK, 0.5)
    res = S.main_theorem_check(H.constant(2.0, 2), fam, DISK, M.power(0.5), 2048, seed=13)
    assert (res.T, res.H, res.G) == (0.0, 0.0, 0.0)
    assert res.ratio_GT == S.UNDEFINED and res.ratio_HT == S.UNDEFINED
    assert res.stable


def test_main_theorem_holder(tilted):
    res = S.main_theorem_check(H.holder_model(0.5), tilted, DISK, M.power(0.5), 4096, seed=14)
    assert res.finite and res.stable
    assert res.H == pytest.approx(0.5, rel=1e-6)
    assert 0.9 <= res.T <= 1.0 and 0.9 <= res.G <= 1.0
    gts = [row["ratio_GT"] for row in res.per_budget]
    assert max(gts) / min(gts) <= 2.0


def test_main_theorem_preconditions(tilted):
    with pytest.raises(PreconditionError):
        S.main_theorem_check(H.holder_model(0.5), tilted, DISK, M.identity(), 2048)
    bad = custom_family(DISK, lambda p, t: p * (1 - t[:, None]), lambda p, t: -p + 0 * t[:, None], 0.3)
    object.__setattr__(bad, "trans_constant", 2.0)
    with pytest.raises(NotTransversalError):
        S.main_theorem_check(H.holder_model(0.5), bad, DISK, M.power(0.5), 2048)


def test_safe_ratio():
    assert S.safe_ratio(0.0, 0.0) == S.UNDEFINED
    assert S.safe_ratio(1.0, 4.0) == 0.25
