"""Harmonic functions: a catalog of explicit examples, Poisson extension from a
sphere, gradients, the interior gradient bound on concentric spheres, and the
boundary growth functional ``sup |grad u| delta / B(delta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from harmreg.errors import ArgumentError, DomainError, PreconditionError
from harmreg.geometry.domain import Domain, ball
from harmreg.majorant import Majorant
from harmreg.quadrature import SphereQuadrature
from harmreg.supremum import SeminormEstimate, maximize

GRADIENT_BOUND_TOL = 1e-3


@dataclass(frozen=True)
class HarmonicFunction:
    name: str
    dim: int
    eval_fn: Callable[[np.ndarray], np.ndarray]
    grad_fn: Callable[[np.ndarray], np.ndarray] | None = None
    hessian_fn: Callable[[np.ndarray], np.ndarray] | None = None
    harmonic_on: Domain | None = None  # None: harmonic on all of R^n
    singular_set: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        pts = np.asarray(x, dtype=float)
        out = self.eval_fn(np.atleast_2d(pts))
        return float(out[0]) if pts.ndim == 1 else out

    @property
    def entire(self) -> bool:
        """True when harmonic on all of R^n (``harmonic_on`` is None)."""
        return self.harmonic_on is None

    def describe(self) -> dict:
        return {"name": self.name, "dim": self.dim, **self.params}

    def scaled(self, k: float) -> "HarmonicFunction":
        grad = None if self.grad_fn is None else (lambda x: k * self.grad_fn(x))
        hess = None if self.hessian_fn is None else (lambda x: k * self.hessian_fn(x))
        return HarmonicFunction(f"{k}*{self.name}", self.dim, lambda x: k * self.eval_fn(x), grad, hess,
                                self.harmonic_on, self.singular_set, {**self.params, "scale": k})


# -- catalog ------------------------------------------------------------------


def _sing(points, dim):
    return np.asarray(points, dtype=float).reshape(-1, dim)


def constant(value: float = 1.0, dim: int = 2) -> HarmonicFunction:
    return HarmonicFunction(
        "constant", dim,
        lambda x: np.full(x.shape[0], float(value)),
        lambda x: np.zeros_like(x),
        lambda x: np.zeros((x.shape[0], dim, dim)),
        None, _sing([], dim), {"value": float(value)},
    )


def coordinate(dim: int = 2) -> HarmonicFunction:
    e1 = np.eye(dim)[0]
    return HarmonicFunction(
        "coordinate", dim,
        lambda x: x[:, 0].copy(),
        lambda x: np.broadcast_to(e1, x.shape).copy(),
        lambda x: np.zeros((x.shape[0], dim, dim)),
        None, _sing([], dim),
    )


def saddle(dim: int = 2) -> HarmonicFunction:
    h = np.zeros((dim, dim))
    h[0, 0], h[1, 1] = 2.0, -2.0

    def grad(x):
        g = np.zeros_like(x)
        g[:, 0], g[:, 1] = 2 * x[:, 0], -2 * x[:, 1]
        return g

    return HarmonicFunction(
        "saddle", dim,
        lambda x: x[:, 0] ** 2 - x[:, 1] ** 2,
        grad,
        lambda x: np.broadcast_to(h, (x.shape[0], dim, dim)).copy(),
        None, _sing([], dim),
    )


def cubic(dim: int = 2) -> HarmonicFunction:
    """``Re (x1 + i x2)^3 = x1^3 - 3 x1 x2^2``."""

    def grad(x):
        g = np.zeros_like(x)
        g[:, 0] = 3 * x[:, 0] ** 2 - 3 * x[:, 1] ** 2
        g[:, 1] = -6 * x[:, 0] * x[:, 1]
        return g

    def hess(x):
        h = np.zeros((x.shape[0], dim, dim))
        h[:, 0, 0] = 6 * x[:, 0]
        h[:, 1, 1] = -6 * x[:, 0]
        h[:, 0, 1] = h[:, 1, 0] = -6 * x[:, 1]
        return h

    return HarmonicFunction(
        "cubic", dim,
        lambda x: x[:, 0] ** 3 - 3 * x[:, 0] * x[:, 1] ** 2,
        grad, hess, None, _sing([], dim),
    )


def poisson_kernel(xi) -> HarmonicFunction:
    """``(1 - |x|^2) / |xi - x|^n`` for a pole ``xi`` on the unit sphere."""
    xi = np.asarray(xi, dtype=float)
    dim = xi.size
    if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
        raise ArgumentError("the pole of the Poisson kernel must lie on the unit sphere")

    def ev(x):
        d = np.linalg.norm(xi - x, axis=1)
        return (1.0 - np.sum(x * x, axis=1)) / d**dim

    def grad(x):
        diff = xi - x
        d2 = np.sum(diff * diff, axis=1)
        num = 1.0 - np.sum(x * x, axis=1)
        return (-2.0 * x / d2[:, None] ** (dim / 2)
                + (dim * num / d2 ** (dim / 2 + 1))[:, None] * diff)

    return HarmonicFunction("poisson", dim, ev, grad, None, ball(1.0, dim), _sing(xi, dim),
                            {"xi": xi.tolist()})


def fundamental(y, domain: Domain | None = None) -> HarmonicFunction:
    """``ln|x - y|`` (n = 2) or ``|x - y|^(2-n)`` (n = 3) with ``y`` outside the closed domain."""
    y = np.asarray(y, dtype=float)
    dim = y.size
    domain = domain or ball(1.0, dim)
    if domain.signed_distance(y) <= 0:
        raise ArgumentError("the source point must lie outside the closed domain")
    if dim == 2:
        def ev(x):
            return np.log(np.linalg.norm(x - y, axis=1))

        def grad(x):
            d = x - y
            return d / np.sum(d * d, axis=1)[:, None]
    else:
        def ev(x):
            return np.linalg.norm(x - y, axis=1) ** (2 - dim)

        def grad(x):
            d = x - y
            r = np.linalg.norm(d, axis=1)
            return (2 - dim) * d / r[:, None] ** dim
    return HarmonicFunction("fundamental", dim, ev, grad, None, domain, _sing(y, dim), {"y": y.tolist()})


def holder_model(alpha: float) -> HarmonicFunction:
    """``Re (1 - z)^alpha`` on the unit disk, principal branch; Lipschitz-alpha up
    to the boundary with its only singularity at ``z = 1``."""
    if not 0 < alpha < 1:
        raise ArgumentError("holder model needs 0 < alpha < 1")

    def w(x):
        return 1.0 - (x[:, 0] + 1j * x[:, 1])

    def ev(x):
        return np.real(w(x) ** alpha)

    def grad(x):
        fp = -alpha * w(x) ** (alpha - 1)
        return np.stack([fp.real, -fp.imag], axis=1)

    def hess(x):
        fpp = alpha * (alpha - 1) * w(x) ** (alpha - 2)
        h = np.empty((x.shape[0], 2, 2))
        h[:, 0, 0] = fpp.real
        h[:, 1, 1] = -fpp.real
        h[:, 0, 1] = h[:, 1, 0] = -fpp.imag
        return h

    return HarmonicFunction("holder", 2, ev, grad, hess, ball(1.0, 2), _sing([1.0, 0.0], 2),
                            {"alpha": float(alpha)})


def catalog(dim: int = 2) -> list[HarmonicFunction]:
    """Every catalog entry available in ``dim`` (the Holder model is 2-D only)."""
    e1 = np.eye(dim)[0]
    items = [coordinate(dim), saddle(dim), cubic(dim), poisson_kernel(e1), fundamental(1.5 * e1)]
    if dim == 2:
        items.append(holder_model(0.5))
    return items


def from_spec(spec: dict, dim: int) -> HarmonicFunction:
    kind = str(spec.get("kind", "coordinate")).strip().lower()
    if kind == "constant":
        return constant(float(spec.get("value", 1.0)), dim)
    if kind == "coordinate":
        return coordinate(dim)
    if kind == "saddle":
        return saddle(dim)
    if kind == "cubic":
        return cubic(dim)
    if kind == "poisson":
        xi = spec.get("xi")
        xi = np.eye(dim)[0] if xi is None else np.array([float(v) for v in str(xi).split(",")])
        return poisson_kernel(xi)
    if kind == "fundamental":
        y = spec.get("y")
        y = 1.5 * np.eye(dim)[0] if y is None else np.array([float(v) for v in str(y).split(",")])
        return fundamental(y, ball(1.0, dim))
    if kind == "holder":
        if dim != 2:
            raise ArgumentError("the holder model is defined on the unit disk only")
        return holder_model(float(spec.get("alpha", 0.5)))
    raise ArgumentError(f"unknown function kind {kind!r}")


# -- evaluation ----------------------------------------------------------------


def _check_interior(u: HarmonicFunction, pts: np.ndarray) -> np.ndarray:
    if u.entire:
        delta = np.full(len(pts), np.inf)
    else:
        delta = -np.asarray(u.harmonic_on.signed_distance(pts), dtype=float).reshape(-1)
    if np.any(delta <= 0):
        bad = pts[np.argmin(delta)]
        raise DomainError(f"point {bad.tolist()} is not interior to the domain of harmonicity")
    if u.singular_set.size:
        dist = np.linalg.norm(pts[:, None, :] - u.singular_set[None, :, :], axis=2)
        if np.any(dist == 0):
            raise DomainError("point coincides with a singular point")
    return delta


def gradient(u: HarmonicFunction, x) -> np.ndarray:
    """Analytic gradient when available, else central differences with step
    ``min(1e-5, delta(x)/10)`` so the stencil stays inside the domain."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    delta = _check_interior(u, pts)
    if u.grad_fn is not None:
        g = u.grad_fn(pts)
    else:
        g = _fd_gradient(u.eval_fn, pts, np.minimum(1e-5, delta / 10.0))
    return g[0] if single else g


def _fd_gradient(fn, pts, h):
    m, n = pts.shape
    g = np.empty((m, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        step = h[:, None] * e
        g[:, j] = (fn(pts + step) - fn(pts - step)) / (2.0 * h)
    return g


def fd_gradient(u: HarmonicFunction, x, h=None) -> np.ndarray:
    """Central-difference gradient regardless of whether an analytic one exists."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    delta = _check_interior(u, pts)
    step = np.minimum(1e-5, delta / 10.0) if h is None else np.full(len(pts), float(h))
    return _fd_gradient(u.eval_fn, pts, step)


def mean_value_residual(u: HarmonicFunction, center, radius: float, quad: SphereQuadrature | None = None) -> float:
    """``|mean of u over the sphere - u(center)|``."""
    quad = quad or SphereQuadrature.default(u.dim)
    c = np.asarray(center, dtype=float)
    return abs(quad.mean(u.eval_fn, c, radius) - u(c))


def poisson_extend(g: Callable[[np.ndarray], np.ndarray], x, radius: float = 1.0,
                   quad: SphereQuadrature | None = None, dim: int | None = None):
    """Harmonic extension of boundary data ``g`` on ``|xi| = radius`` evaluated at ``x``.

    Uses the Poisson integral with the sphere rule of ``quad``; ``g`` takes an
    ``(m, n)`` array of sphere points.
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    n = dim or pts.shape[1]
    quad = quad or SphereQuadrature.default(n)
    if quad.dim != n:
        raise ArgumentError("quadrature dimension does not match the points")
    r2 = np.sum(pts * pts, axis=1)
    if np.any(r2 >= radius**2):
        raise DomainError("Poisson extension needs |x| < R")
    xi = radius * quad.nodes
    gv = np.asarray(g(xi), dtype=float)
    d2 = np.sum((xi[None, :, :] - pts[:, None, :]) ** 2, axis=2)
    kern = radius ** (n - 2) * (radius**2 - r2)[:, None] / d2 ** (n / 2)
    out = kern @ (quad.weights * gv)
    return float(out[0]) if single else out


# -- suprema over spheres -------------------------------------------------------


@dataclass(frozen=True)
class SamplingConfig:
    sphere_points_2d: int = 2048
    sphere_points_3d: int = 40000
    rounds: int = 3
    per_round: int = 100

    def sphere_points(self, dim: int) -> int:
        return self.sphere_points_2d if dim == 2 else self.sphere_points_3d


def _unit(v):
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _sphere_draw(dim):
    def draw(rng, count):
        if dim == 2:
            ang = 2.0 * np.pi * (np.arange(count) + rng.random(count)) / count
            return np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return _unit(rng.standard_normal((count, dim)))

    return draw


def _sphere_perturb(dim, width):
    def perturb(center, r, rng, count):
        c = center / np.linalg.norm(center)
        if dim == 2:
            basis = np.array([[-c[1], c[0]]])
        else:
            helper = np.eye(3)[0] if abs(c[0]) < 0.9 else np.eye(3)[1]
            e1 = helper - (helper @ c) * c
            e1 /= np.linalg.norm(e1)
            basis = np.stack([e1, np.cross(c, e1)])
        offs = rng.uniform(-1.0, 1.0, (count, dim - 1)) * (width / 2.0**r)
        offs[0] = 0.0
        return _unit(c[None, :] + offs @ basis)

    return perturb


def sphere_sup(fn, radius: float, dim: int, count: int, seed: int, cfg: SamplingConfig | None = None):
    """Sampled ``sup fn`` over ``|x| = radius``; returns the SupResult with the
    argmax stored as a unit direction."""
    cfg = cfg or SamplingConfig()
    spacing = 2.0 * np.pi / count if dim == 2 else np.sqrt(4.0 * np.pi / count)
    return maximize(
        lambda d: fn(radius * _unit(d)),
        _sphere_draw(dim),
        _sphere_perturb(dim, spacing),
        count, seed, rounds=cfg.rounds, per_round=cfg.per_round,
    )


@dataclass
class GradientBoundResult:
    lhs: float
    rhs: float
    ratio: float
    sup_abs_u: float
    grad_witness: np.ndarray
    value_witness: np.ndarray

    @property
    def ok(self) -> bool:
        return self.ratio <= 1.0 + GRADIENT_BOUND_TOL

    def as_dict(self) -> dict:
        return {
            "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio, "sup_abs_u": self.sup_abs_u,
            "grad_witness": self.grad_witness.tolist(), "value_witness": self.value_witness.tolist(),
        }


def verify_gradient_bound(u: HarmonicFunction, r: float, R: float, sampling: SamplingConfig | None = None,
                          seed: int = 0) -> GradientBoundResult:
    """Compare ``sup_{|x|=r} |grad u|`` with ``n/(R-r) sup_{|x|=R} |u|``."""
    if not 0 < r < R < 1:
        raise ArgumentError(f"need 0 < r < R < 1, got r={r}, R={R}")
    if u.singular_set.size and np.any(np.linalg.norm(u.singular_set, axis=1) <= R):
        raise PreconditionError("a singular point lies in the closed ball of radius R")
    cfg = sampling or SamplingConfig()
    n = u.dim
    count = cfg.sphere_points(n)
    g = sphere_sup(lambda x: np.linalg.norm(gradient(u, x), axis=1), r, n, count, seed, cfg)
    v = sphere_sup(lambda x: np.abs(u.eval_fn(x)), R, n, count, seed + 1, cfg)
    rhs = n / (R - r) * v.value
    ratio = g.value / rhs if rhs > 0 else (0.0 if g.value == 0 else np.inf)
    return GradientBoundResult(g.value, rhs, float(ratio), v.value,
                               r * _unit(g.argmax[None, :])[0], R * _unit(v.argmax[None, :])[0])


# -- boundary growth functional -------------------------------------------------------


def hl_value(u: HarmonicFunction, domain: Domain, B: Majorant, x) -> np.ndarray:
    """``|grad u(x)| delta(x) / B(delta(x))`` at interior points."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    delta = -np.asarray(domain.signed_distance(pts), dtype=float).reshape(-1)
    g = np.linalg.norm(gradient(u, pts), axis=1)
    return g * delta / np.asarray(B(delta))


def _log_offsets(rng, count, dim, lo, hi):
    mag = 10.0 ** rng.uniform(np.log10(lo), np.log10(hi), (count, dim))
    return mag * rng.choice([-1.0, 1.0], (count, dim))


def hl_constant(u: HarmonicFunction, domain: Domain, B: Majorant, delta0: float, *, budget: int = 4096,
                seed: int = 0, delta_floor: float | None = None, sampling: SamplingConfig | None = None,
                ) -> SeminormEstimate:
    """Sampled ``sup |grad u| delta / B(delta)`` over ``delta_floor <= delta <= delta0``.

    Points are ``p - s nu_p`` with ``p`` uniform in boundary angle and ``s``
    log-uniform; a quarter of the samples cluster (log-uniformly in angle)
    around boundary singularities of ``u``.  Refinement acts on the
    (boundary parameter, log s) coordinates with a neighbourhood scaled to
    the current depth.
    """
    cfg = sampling or SamplingConfig()
    floor = 1e-6 * domain.diam if delta_floor is None else float(delta_floor)
    if not 0 < floor < delta0:
        raise ArgumentError(f"need 0 < delta_floor < delta0, got {floor}, {delta0}")
    n = domain.dim
    lf, l0 = np.log(floor), np.log(delta0)
    length = 2.0 * np.pi * max(domain.axes)
    sing = u.singular_set
    sing = sing[np.abs(domain.signed_distance(sing)) < delta0] if sing.size else sing
    sing_params = domain.boundary_param(domain.closest_point(sing)) if len(sing) else None

    def decode(c):
        params = domain.wrap_params(c[:, : n - 1])
        s = np.exp(lf + np.clip(c[:, n - 1], 0.0, 1.0) * (l0 - lf))
        p = domain.boundary_point(params)
        return p - s[:, None] * domain.normal(p)

    def objective(c):
        x = decode(c)
        delta = -np.asarray(domain.signed_distance(x), dtype=float)
        ok = (delta >= floor * (1 - 1e-12)) & (delta <= delta0 * (1 + 1e-12))
        if u.singular_set.size:
            dist = np.min(np.linalg.norm(x[:, None, :] - u.singular_set[None], axis=2), axis=1)
            ok &= dist > 0
        out = np.full(len(c), -np.inf)
        if ok.any():
            out[ok] = hl_value(u, domain, B, x[ok])
        return out

    def draw(rng, count):
        c = rng.random((count, n))
        if sing_params is not None:
            k = count // 4
            which = rng.integers(0, len(sing_params), k)
            c[:k, : n - 1] = sing_params[which] + _log_offsets(rng, k, n - 1, floor / length, 0.5)
        return c

    def perturb(center, r, rng, count):
        s = np.exp(lf + np.clip(center[n - 1], 0.0, 1.0) * (l0 - lf))
        widths = np.concatenate([np.full(n - 1, 4.0 * s / length), [np.log(4.0) / (l0 - lf)]])
        offs = rng.uniform(-1.0, 1.0, (count, n)) * widths / 2.0**r
        offs[0] = 0.0
        return center[None, :] + offs

    res = maximize(objective, draw, perturb, budget, seed, rounds=cfg.rounds, per_round=cfg.per_round)
    x = decode(res.argmax[None, :])[0]
    return SeminormEstimate(res.value, res.samples_used, {"point": x, "delta": -domain.signed_distance(x)},
                            res.trace)
