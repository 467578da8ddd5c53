"""Sampled Lipschitz-B seminorms, their transfer between boundary bands, and
the end-to-end comparison of transversal, gradient and global constants.

Every estimator is a seeded lower bound for a supremum.  Points closer to the
boundary than ``delta_floor`` are excluded, which keeps boundary singularities
out of reach; growth under a shrinking floor is how divergence shows up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from harmreg.errors import ArgumentError, DegenerateMajorantError, NotTransversalError, PreconditionError
from harmreg.geometry.domain import Domain
from harmreg.geometry.families import CurveFamily, check_family
from harmreg.harmonic import HarmonicFunction, SamplingConfig, hl_constant
from harmreg.majorant import Majorant, is_regular
from harmreg.supremum import SeminormEstimate, derive_seed, maximize

MIN_PAIRS = 1000
TRANSFER_SLACK = 1e-2
STABILITY_TOL = 0.25
UNDEFINED = "undefined"


def _evaluator(f) -> tuple[Callable[[np.ndarray], np.ndarray], np.ndarray]:
    if isinstance(f, HarmonicFunction):
        return f.eval_fn, f.singular_set
    if callable(f):
        return (lambda x: np.asarray(f(x), dtype=float)), np.empty((0, 0))
    raise ArgumentError("f must be a HarmonicFunction or a callable on (m, n) arrays")


def _ratio(fx, fy, B: Majorant, dist):
    bv = np.asarray(B(dist), dtype=float)
    if np.any((bv == 0) & (dist > 0)):
        raise DegenerateMajorantError(f"B vanishes at a positive distance {float(dist[(bv == 0) & (dist > 0)][0])}")
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.abs(fx - fy) / bv


def pair_ratio(f, B: Majorant, x, y) -> np.ndarray:
    """``|f(x) - f(y)| / B(|x - y|)`` row by row."""
    fn, _ = _evaluator(f)
    x, y = np.atleast_2d(x), np.atleast_2d(y)
    return _ratio(fn(x), fn(y), B, np.linalg.norm(x - y, axis=1))


def curve_ratio(f, fam: CurveFamily, B: Majorant, p, s, t) -> np.ndarray:
    """``|f(gamma_p(s)) - f(gamma_p(t))| / B(|s - t|)``."""
    fn, _ = _evaluator(f)
    x, y = fam.gamma(np.atleast_2d(p), np.atleast_1d(s)), fam.gamma(np.atleast_2d(p), np.atleast_1d(t))
    return _ratio(fn(x), fn(y), B, np.abs(np.atleast_1d(s) - np.atleast_1d(t)))


def _unit_rows(rng, m, n):
    v = rng.standard_normal((m, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _interior_uniform(domain: Domain, rng, m):
    n = domain.dim
    r = rng.random(m) ** (1.0 / n)
    return _unit_rows(rng, m, n) * r[:, None] * np.asarray(domain.axes)


def _log_uniform(rng, lo, hi, size):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def _near_boundary(domain: Domain, rng, m, lo, hi):
    p = domain.boundary_point(rng.random((m, domain.dim - 1)))
    return p - _log_uniform(rng, lo, hi, m)[:, None] * domain.normal(p)


def _singular_anchors(domain: Domain, singular: np.ndarray, reach: float) -> np.ndarray:
    if singular.size == 0 or singular.shape[1] != domain.dim:
        return np.empty((0, domain.dim))
    near = np.abs(np.asarray(domain.signed_distance(singular)).reshape(-1)) < reach
    return domain.closest_point(singular[near]) if near.any() else np.empty((0, domain.dim))


def _near_anchor(domain: Domain, rng, anchors, m, lo, hi):
    q = anchors[rng.integers(0, len(anchors), m)]
    d = _unit_rows(rng, m, domain.dim)
    nu = domain.normal(q)
    d = np.where(np.sum(d * nu, axis=1, keepdims=True) > 0, -d, d)
    return q + _log_uniform(rng, lo, hi, m)[:, None] * d


def _split(count, parts):
    base = [count // parts] * parts
    for i in range(count - sum(base)):
        base[i] += 1
    return base


def _feasible(domain: Domain, singular: np.ndarray, x: np.ndarray, floor: float) -> np.ndarray:
    ok = -np.asarray(domain.signed_distance(x), dtype=float) >= floor
    if singular.size and singular.shape[1] == x.shape[1]:
        dist = np.min(np.linalg.norm(x[:, None, :] - singular[None], axis=2), axis=1)
        ok &= dist > 0
    return ok


def global_seminorm(f, domain: Domain, B: Majorant, budget: int = 4096, seed: int = 0, *,
                    delta_floor: float | None = None, sampling: SamplingConfig | None = None) -> SeminormEstimate:
    """Sampled ``sup |f(x) - f(y)| / B(|x - y|)`` over pairs in the domain.

    Pairs mix uniform interior pairs, pairs near the boundary, short pairs
    with log-uniform separation, and (for functions with boundary
    singularities) pairs clustered around those points; the best pair is then
    refined with a box that shrinks with the separation and with the distance
    to the boundary.
    """
    if budget < MIN_PAIRS:
        raise ArgumentError(f"budget must be at least {MIN_PAIRS} pairs")
    cfg = sampling or SamplingConfig()
    fn, singular = _evaluator(f)
    n = domain.dim
    floor = 1e-6 * domain.diam if delta_floor is None else float(delta_floor)
    if floor <= 0:
        raise ArgumentError("delta_floor must be positive")
    shallow = 0.25 * min(domain.axes)
    anchors = _singular_anchors(domain, singular, shallow)

    def objective(c):
        x, y = c[:, :n], c[:, n:]
        dist = np.linalg.norm(x - y, axis=1)
        ok = _feasible(domain, singular, x, floor) & _feasible(domain, singular, y, floor) & (dist > 0)
        out = np.full(len(c), -np.inf)
        if ok.any():
            out[ok] = _ratio(fn(x[ok]), fn(y[ok]), B, dist[ok])
        return out

    def draw(rng, count):
        parts = 4 if len(anchors) else 3
        sizes = _split(count, parts)
        xs, ys = [], []
        m = sizes[0]
        xs.append(_interior_uniform(domain, rng, m))
        ys.append(_interior_uniform(domain, rng, m))
        m = sizes[1]
        x = _near_boundary(domain, rng, m, floor, shallow)
        xs.append(x)
        ys.append(_near_boundary(domain, rng, m, floor, shallow))
        m = sizes[2]
        half = m // 2
        x = np.concatenate([_interior_uniform(domain, rng, half), _near_boundary(domain, rng, m - half, floor, shallow)])
        xs.append(x)
        ys.append(x + _log_uniform(rng, floor, domain.diam, m)[:, None] * _unit_rows(rng, m, n))
        if parts == 4:
            m = sizes[3]
            xs.append(_near_anchor(domain, rng, anchors, m, floor, shallow))
            ys.append(_near_anchor(domain, rng, anchors, m, floor, shallow))
        return np.concatenate([np.concatenate(xs), np.concatenate(ys)], axis=1)

    def perturb(center, r, rng, count):
        x, y = center[:n], center[n:]
        dist = float(np.linalg.norm(x - y))
        dx = -float(domain.signed_distance(x))
        dy = -float(domain.signed_distance(y))
        hx = 0.5 * max(min(dist, dx), floor) / 2.0**r
        hy = 0.5 * max(min(dist, dy), floor) / 2.0**r
        offs = np.concatenate([rng.uniform(-hx, hx, (count, n)), rng.uniform(-hy, hy, (count, n))], axis=1)
        offs[0] = 0.0
        return center[None, :] + offs

    res = maximize(objective, draw, perturb, budget, seed, rounds=cfg.rounds, per_round=cfg.per_round)
    return SeminormEstimate(res.value, res.samples_used, {"x": res.argmax[:n], "y": res.argmax[n:]}, res.trace)


def default_s_range(fam: CurveFamily, delta_floor: float | None = None) -> tuple[float, float]:
    lo = 1e-6 * fam.domain.diam if delta_floor is None else float(delta_floor)
    return lo, 0.5 * fam.half_width


def transversal_seminorm(f, fam: CurveFamily, B: Majorant, s_range: tuple[float, float] | None = None,
                         budget: int = 4096, seed: int = 0, *,
                         sampling: SamplingConfig | None = None) -> SeminormEstimate:
    """Sampled ``sup |f(gamma_p(s)) - f(gamma_p(t))| / B(|s - t|)``.

    ``p`` is uniform in boundary parameters (a quarter of the samples sit
    near boundary singularities of ``f``), ``s`` is uniform or log-uniform in
    ``s_range`` and ``|s - t|`` is log-uniform.  The witness is ``(p, s, t)``.
    """
    if budget < MIN_PAIRS:
        raise ArgumentError(f"budget must be at least {MIN_PAIRS} samples")
    cfg = sampling or SamplingConfig()
    fn, singular = _evaluator(f)
    domain = fam.domain
    n = domain.dim
    lo, hi = default_s_range(fam) if s_range is None else (float(s_range[0]), float(s_range[1]))
    if not 0 < lo < hi < fam.half_width:
        raise ArgumentError(f"s_range must satisfy 0 < s_min < s_max < a = {fam.half_width}, got ({lo}, {hi})")
    llo, lhi = math.log(lo), math.log(hi)
    hmin = min(lo, 1e-6 * domain.diam)
    length = 2.0 * math.pi * max(domain.axes)
    anchors = _singular_anchors(domain, singular, hi)
    anchor_params = domain.boundary_param(anchors) if len(anchors) else None

    def decode(c):
        params = domain.wrap_params(c[:, : n - 1])
        s = np.exp(c[:, n - 1])
        t = s + np.sign(c[:, n + 1]) * np.exp(c[:, n])
        return domain.boundary_point(params), s, t

    def objective(c):
        p, s, t = decode(c)
        ok = (s >= lo) & (s <= hi) & (t >= lo) & (t <= hi)
        out = np.full(len(c), -np.inf)
        if not ok.any():
            return out
        idx = np.nonzero(ok)[0]
        x, y = fam.gamma(p[idx], s[idx]), fam.gamma(p[idx], t[idx])
        inside = _feasible(domain, singular, x, 0.0) & _feasible(domain, singular, y, 0.0)
        inside &= (-np.asarray(domain.signed_distance(x)) > 0) & (-np.asarray(domain.signed_distance(y)) > 0)
        idx, x, y = idx[inside], x[inside], y[inside]
        if idx.size:
            out[idx] = _ratio(fn(x), fn(y), B, np.abs(s[idx] - t[idx]))
        return out

    def draw(rng, count):
        params = rng.random((count, n - 1))
        if anchor_params is not None:
            k = count // 4
            which = rng.integers(0, len(anchor_params), k)
            mag = _log_uniform(rng, lo / length, 0.5, (k, n - 1)) * rng.choice([-1.0, 1.0], (k, n - 1))
            params[:k] = anchor_params[which] + mag
        half = count // 2
        s = np.concatenate([rng.uniform(lo, hi, half), _log_uniform(rng, lo, hi, count - half)])
        s = s[rng.permutation(count)]
        h = _log_uniform(rng, hmin, hi - lo, count)
        sgn = rng.choice([-1.0, 1.0], count)
        return np.concatenate([params, np.log(s)[:, None], np.log(h)[:, None], sgn[:, None]], axis=1)

    def perturb(center, r, rng, count):
        s = math.exp(center[n - 1])
        widths = np.concatenate([np.full(n - 1, 4.0 * s / length), [math.log(4.0), math.log(4.0)], [0.0]])
        offs = rng.uniform(-1.0, 1.0, (count, n + 2)) * widths / 2.0**r
        offs[0] = 0.0
        return center[None, :] + offs

    res = maximize(objective, draw, perturb, budget, seed, rounds=cfg.rounds, per_round=cfg.per_round)
    p, s, t = decode(res.argmax[None, :])
    return SeminormEstimate(res.value, res.samples_used, {"p": p[0], "s": s[0], "t": t[0]}, res.trace)


def injectivity_width(domain: Domain) -> float:
    """Smallest radius of curvature of the boundary: ``a_min^2 / a_max``."""
    return min(domain.axes) ** 2 / max(domain.axes)


def max_principle_transfer(u: HarmonicFunction, domain: Domain, B: Majorant, delta0: float, delta1: float,
                           budget: int = 4096, seed: int = 0, *, delta_floor: float | None = None,
                           sampling: SamplingConfig | None = None) -> dict:
    """Compare the gradient functional on the bands ``delta < delta1`` and
    ``delta < delta0`` against ``A1 <= (delta1/delta0) A0`` with 1% slack."""
    if not 0 < delta0 < delta1 < injectivity_width(domain):
        raise ArgumentError(
            f"need 0 < delta0 < delta1 < {injectivity_width(domain)}, got {delta0}, {delta1}")
    a0 = hl_constant(u, domain, B, delta0, budget=budget, seed=derive_seed(seed, 0),
                     delta_floor=delta_floor, sampling=sampling)
    a1 = hl_constant(u, domain, B, delta1, budget=budget, seed=derive_seed(seed, 1),
                     delta_floor=delta_floor, sampling=sampling)
    bound = delta1 / delta0 * a0.value
    return {
        "A0": a0.value,
        "A1": a1.value,
        "bound": bound,
        "bound_ok": bool(a1.value <= bound * (1.0 + TRANSFER_SLACK)),
        "slack": TRANSFER_SLACK,
        "A0_estimate": a0,
        "A1_estimate": a1,
    }


def safe_ratio(num: float, den: float):
    """``num/den``, or the ``"undefined"`` sentinel when ``den`` is zero."""
    return UNDEFINED if den == 0 else num / den


def _rel_change(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(b - a) / max(abs(a), abs(b))


@dataclass
class MainTheoremResult:
    T: float
    H: float
    G: float
    ratio_GT: object
    ratio_HT: object
    stable: bool
    budgets: tuple
    per_budget: list = field(default_factory=list)
    changes: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.T, self.H, self.G))

    def as_dict(self) -> dict:
        return {
            "T": self.T, "H": self.H, "G": self.G,
            "ratio_GT": self.ratio_GT, "ratio_HT": self.ratio_HT,
            "stable": self.stable, "finite": self.finite,
            "budgets": list(self.budgets),
            "per_budget": self.per_budget,
            "changes": self.changes,
        }


def main_theorem_check(u: HarmonicFunction, fam: CurveFamily, domain: Domain, B: Majorant,
                       budgets: tuple[int, int] | int = 4096, seed: int = 0, *,
                       s_range: tuple[float, float] | None = None, delta0: float = 0.1,
                       delta_floor: float | None = None, sampling: SamplingConfig | None = None,
                       check_regular: bool = True) -> MainTheoremResult:
    """Transversal (T), gradient (H) and global (G) constants at budgets
    ``b`` and ``4b``; stable when each moves by at most 25%.

    Estimator seeds are ``derive_seed(seed, k)`` with k = 0, 1, 2 for T, H, G,
    shared across budgets so the larger run sees a superset of samples.
    """
    if check_regular and not is_regular(B).is_regular:
        raise PreconditionError("B is not a regular majorant")
    if fam.domain != domain:
        raise ArgumentError("the curve family lives on a different domain")
    if not check_family(fam)["transversal"]:
        raise NotTransversalError("the curve family fails the sampled transversality check")
    if isinstance(budgets, int):
        budgets = (budgets, 4 * budgets)
    budgets = tuple(int(b) for b in budgets)
    floor = 1e-6 * domain.diam if delta_floor is None else float(delta_floor)
    rng = s_range if s_range is not None else default_s_range(fam, floor)

    per, est = [], {}
    for b in budgets:
        t = transversal_seminorm(u, fam, B, rng, b, derive_seed(seed, 0), sampling=sampling)
        h = hl_constant(u, domain, B, delta0, budget=b, seed=derive_seed(seed, 1), delta_floor=floor,
                        sampling=sampling)
        g = global_seminorm(u, domain, B, b, derive_seed(seed, 2), delta_floor=floor, sampling=sampling)
        per.append({
            "budget": b, "T": t.value, "H": h.value, "G": g.value,
            "ratio_GT": safe_ratio(g.value, t.value), "ratio_HT": safe_ratio(h.value, t.value),
        })
        est[b] = {"T": t, "H": h, "G": g}
    first, last = per[0], per[-1]
    changes = {k: _rel_change(first[k], last[k]) for k in ("T", "H", "G")}
    stable = all(v <= STABILITY_TOL for v in changes.values())
    return MainTheoremResult(
        last["T"], last["H"], last["G"], last["ratio_GT"], last["ratio_HT"], stable, budgets, per, changes, est,
    )
