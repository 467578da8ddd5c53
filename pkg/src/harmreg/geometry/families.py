"""Families of curves transversal to the boundary, and their verifiers.

A family maps ``(p, t)`` with ``p`` on the boundary and ``|t| < a`` to a point
``gamma_p(t)``; ``gamma_p(0) = p`` and ``gamma_p'(t) . nu_p <= -c < 0``, so
positive ``t`` moves into the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from harmreg.errors import (
    ArgumentError,
    DegenerateCurveError,
    DomainError,
    LambdaTooSmallError,
    NotTransversalError,
    OutsideTubularNeighbourhoodError,
    PreconditionError,
)
from harmreg.geometry.domain import Domain

PROJECTION_TOL = 1e-12  # residual target, relative to diam
MAX_NEWTON = 50


def _broadcast(p, t, dim):
    p = np.asarray(p, dtype=float)
    t = np.asarray(t, dtype=float)
    single = p.ndim == 1 and t.ndim == 0
    p2 = np.atleast_2d(p)
    t1 = np.atleast_1d(t)
    m = max(p2.shape[0], t1.shape[0])
    p2 = np.broadcast_to(p2, (m, dim))
    t1 = np.broadcast_to(t1, (m,))
    return p2, t1, single


@dataclass(frozen=True)
class CurveFamily:
    domain: Domain
    gamma_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    tangent_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    half_width: float
    trans_constant: float
    arc_length: bool
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def gamma(self, p, t) -> np.ndarray:
        p2, t1, single = _broadcast(p, t, self.domain.dim)
        out = self.gamma_fn(p2, t1)
        return out[0] if single else out

    def tangent(self, p, t) -> np.ndarray:
        p2, t1, single = _broadcast(p, t, self.domain.dim)
        out = self.tangent_fn(p2, t1)
        return out[0] if single else out

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "half_width": self.half_width,
            "trans_constant": self.trans_constant,
            "arc_length": self.arc_length,
            **self.params,
        }


def _sample_grid(domain: Domain, half_width: float, n_p: int, n_t: int):
    p = domain.boundary_grid(n_p)
    t = half_width * np.linspace(-1.0, 1.0, n_t + 2)[1:-1]
    return np.repeat(p, n_t, axis=0), np.tile(t, n_p)


def measured_trans_constant(family: CurveFamily, n_p: int = 64, n_t: int = 32, unit: bool = False) -> float:
    """``-max gamma_p'(t) . nu_p`` over a boundary x parameter grid."""
    pp, tt = _sample_grid(family.domain, family.half_width, n_p, n_t)
    tan = family.tangent(pp, tt)
    if unit:
        tan = tan / np.linalg.norm(tan, axis=1, keepdims=True)
    return float(-np.max(np.sum(tan * family.domain.normal(pp), axis=1)))


def make_family(kind: str, domain: Domain, a: float, *, theta: float = 0.0, beta: float = 0.0,
                check: bool = True) -> CurveFamily:
    """Construct one of the built-in families.

    ``normal``: ``p - t nu_p`` (c = 1).  ``tilted``: ``p - t w_p`` with ``w_p``
    the unit vector along ``nu_p + tan(theta) tau_p`` for the smooth tangent
    field ``tau``; in 2-D the tilt is exactly ``theta``, in 3-D it is at most
    ``theta`` and reaches it on the equator, so c = cos theta in both.
    ``bent``: ``p - t nu_p + beta t^2/2 tau_p``; its stored constant is the
    sampled bound for the unit tangent, ``1/sqrt(1 + beta^2 t^2)`` at the
    largest sampled ``t`` on balls.

    With ``check`` the half-width is halved until projection along the family
    round-trips on a probe grid (the tubular neighbourhood rule).
    """
    if a <= 0:
        raise ArgumentError("half-width a must be positive")
    kind = kind.strip().lower()
    if kind == "normal":
        fam = CurveFamily(
            domain,
            lambda p, t: p - t[:, None] * domain.normal(p),
            lambda p, t: -domain.normal(p) + 0.0 * t[:, None],
            float(a), 1.0, True, "normal", {},
        )
    elif kind == "tilted":
        if not abs(theta) < math.pi / 2:
            raise NotTransversalError(f"tilt angle {theta} rad is not below pi/2")
        ct, tt = math.cos(theta), math.tan(theta)

        def direction(p):
            w = domain.normal(p) + tt * domain.smooth_tangent_field(p)
            return w / np.linalg.norm(w, axis=1, keepdims=True)

        fam = CurveFamily(
            domain,
            lambda p, t: p - t[:, None] * direction(p),
            lambda p, t: -direction(p) + 0.0 * t[:, None],
            float(a), ct, True, "tilted", {"theta": float(theta)},
        )
    elif kind == "bent":
        def gam(p, t):
            return p - t[:, None] * domain.normal(p) + 0.5 * beta * t[:, None] ** 2 * domain.smooth_tangent_field(p)

        def tan(p, t):
            return -domain.normal(p) + beta * t[:, None] * domain.smooth_tangent_field(p)

        fam = CurveFamily(domain, gam, tan, float(a), 1.0, beta == 0.0, "bent", {"beta": float(beta)})
        fam = replace(fam, trans_constant=measured_trans_constant(fam, unit=True))
    else:
        raise ArgumentError(f"unknown family kind {kind!r}")
    if check:
        fam = _fit_tubular(fam)
    return fam


def custom_family(domain: Domain, gamma_fn, tangent_fn, a: float, *, arc_length: bool = False,
                  kind: str = "custom", params: dict | None = None) -> CurveFamily:
    """Wrap user callables; the transversality constant is measured on a grid."""
    fam = CurveFamily(domain, gamma_fn, tangent_fn, float(a), 1.0, arc_length, kind, dict(params or {}))
    c = measured_trans_constant(fam)
    if c <= 0:
        raise NotTransversalError(f"sampled gamma'.nu reaches {-c} >= 0")
    return replace(fam, trans_constant=c)


def _fit_tubular(fam: CurveFamily, probes: int = 64, steps: int = 8, max_halvings: int = 12) -> CurveFamily:
    p = fam.domain.boundary_grid(probes)
    for _ in range(max_halvings):
        t = fam.half_width * np.linspace(0.0, 1.0, steps + 2)[1:-1]
        pp, tt = np.repeat(p, steps, axis=0), np.tile(t, probes)
        x = fam.gamma(pp, tt)
        try:
            res = project_along(fam, x)
        except OutsideTubularNeighbourhoodError:
            res = None
        if res is not None and fam.domain.contains(x).all():
            ok = (np.max(np.abs(res.param - tt)) <= 1e-8 * fam.domain.diam
                  and np.max(np.linalg.norm(res.foot - pp, axis=1)) <= 1e-8 * fam.domain.diam)
            if ok:
                return fam
        fam = replace(fam, half_width=0.5 * fam.half_width)
    raise OutsideTubularNeighbourhoodError("could not find a half-width on which the family is a bijection")


def check_family(fam: CurveFamily, n_p: int = 64, n_t: int = 32, fd_step: float = 1e-6) -> dict:
    """Measure the defining properties of a family on a grid."""
    d = fam.domain
    p = d.boundary_grid(n_p)
    origin = float(np.max(np.linalg.norm(fam.gamma(p, 0.0) - p, axis=1)))
    pp, tt = _sample_grid(d, fam.half_width * (1 - 2 * fd_step), n_p, n_t)
    tan = fam.tangent(pp, tt)
    speed = np.linalg.norm(tan, axis=1)
    dots = np.sum(tan * d.normal(pp), axis=1)
    fd = (fam.gamma(pp, tt + fd_step) - fam.gamma(pp, tt - fd_step)) / (2 * fd_step)
    fd_err = float(np.max(np.linalg.norm(fd - tan, axis=1) / np.maximum(speed, 1e-300)))
    return {
        "origin_residual": origin,
        "max_dot": float(dots.max()),
        "transversal": bool(dots.max() <= -fam.trans_constant + 1e-12),
        "speed_min": float(speed.min()),
        "speed_max": float(speed.max()),
        "unit_speed_error": float(np.max(np.abs(speed - 1.0))),
        "fd_tangent_error": fd_err,
    }


# -- arc length -------------------------------------------------------------


def _arc_length(fam: CurveFamily, p: np.ndarray, t: np.ndarray, nodes, weights) -> np.ndarray:
    m = t.shape[0]
    k = nodes.size
    tau = 0.5 * t[:, None] * (nodes[None, :] + 1.0)
    sp = np.linalg.norm(fam.tangent(np.repeat(p, k, axis=0), tau.ravel()), axis=1).reshape(m, k)
    return 0.5 * t * (sp @ weights)


def arc_length_reparametrize(fam: CurveFamily, n_gauss: int = 32, n_p: int = 64, n_t: int = 32) -> CurveFamily:
    """Return the same curves traversed at unit speed from the boundary.

    Arc length is computed by Gauss-Legendre quadrature of the speed on
    ``[0, t]`` and inverted by Newton's method.
    """
    nodes, weights = np.polynomial.legendre.leggauss(n_gauss)
    pp, tt = _sample_grid(fam.domain, fam.half_width, n_p, n_t)
    speed = np.linalg.norm(fam.tangent(pp, tt), axis=1)
    if np.min(speed) <= 1e-12:
        raise DegenerateCurveError(f"tangent vanishes on the grid (min speed {np.min(speed):.3e})")
    pb = fam.domain.boundary_grid(n_p)
    ends = np.concatenate([
        _arc_length(fam, pb, np.full(n_p, fam.half_width), nodes, weights),
        -_arc_length(fam, pb, np.full(n_p, -fam.half_width), nodes, weights),
    ])
    new_a = float(np.min(ends)) * (1.0 - 1e-9)

    def param_of(p, s):
        t = s / np.linalg.norm(fam.tangent(p, np.zeros_like(s)), axis=1)
        for _ in range(40):
            err = _arc_length(fam, p, t, nodes, weights) - s
            t = t - err / np.linalg.norm(fam.tangent(p, t), axis=1)
            if np.all(np.abs(err) <= 1e-15 * np.maximum(1.0, np.abs(s))):
                break
        final = np.abs(_arc_length(fam, p, t, nodes, weights) - s)
        if np.any(final > 1e-12 * np.maximum(1.0, np.abs(s))):
            raise DegenerateCurveError("arc-length inversion did not converge")
        return t

    def gam(p, s):
        return fam.gamma(p, param_of(p, s))

    def tan(p, s):
        v = fam.tangent(p, param_of(p, s))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    out = CurveFamily(fam.domain, gam, tan, new_a, 1.0, True, fam.kind, {**fam.params, "reparametrized": True})
    return replace(out, trans_constant=measured_trans_constant(out, n_p, n_t))


# -- projection along the family ---------------------------------------------


@dataclass
class ProjectionResult:
    foot: np.ndarray
    param: np.ndarray
    residual: np.ndarray


def project_along(fam: CurveFamily, x) -> ProjectionResult:
    """Solve ``gamma(p, T) = x`` for the boundary foot ``p`` and parameter ``T``.

    Newton's method in local tangent coordinates around the nearest boundary
    point, starting from ``T = delta(x)``.  The boundary chart is
    ``xi -> closest_point(p0 + E xi)``; its Jacobian is taken by central
    differences, the t-column is the analytic tangent.
    """
    d = fam.domain
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    m, n = pts.shape
    p0 = d.closest_point(pts)
    basis = d.tangent_basis(p0).reshape(m, n, n - 1)
    xi = np.zeros((m, n - 1))
    t = np.asarray(d.delta(pts), dtype=float).reshape(m)
    h = 1e-6 * d.diam
    tol = PROJECTION_TOL * d.diam

    def chart(xi_):
        return d.closest_point(p0 + np.einsum("mij,mj->mi", basis, xi_))

    def resid(xi_, t_):
        return fam.gamma(chart(xi_), t_) - pts

    r = resid(xi, t)
    rn = np.linalg.norm(r, axis=1)
    for _ in range(MAX_NEWTON):
        if np.all(rn <= tol):
            break
        jac = np.empty((m, n, n))
        for j in range(n - 1):
            e = np.zeros(n - 1)
            e[j] = h
            jac[:, :, j] = (resid(xi + e, t) - resid(xi - e, t)) / (2 * h)
        jac[:, :, n - 1] = fam.tangent(chart(xi), t)
        try:
            step = np.linalg.solve(jac, -r[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError as exc:
            raise OutsideTubularNeighbourhoodError("singular Jacobian in projection") from exc
        lam = np.ones(m)
        active = rn > tol
        for _ in range(12):
            xi_new = xi + lam[:, None] * step[:, : n - 1] * active[:, None]
            t_new = t + lam * step[:, n - 1] * active
            r_new = resid(xi_new, t_new)
            rn_new = np.linalg.norm(r_new, axis=1)
            worse = active & ~(rn_new < rn)
            if not worse.any():
                break
            lam = np.where(worse, 0.5 * lam, lam)
        xi, t, r, rn = xi_new, t_new, r_new, rn_new
    if not np.all(rn <= tol) or not np.all(np.isfinite(rn)):
        raise OutsideTubularNeighbourhoodError(
            f"projection did not converge in {MAX_NEWTON} iterations (max residual {np.nanmax(rn):.3e})"
        )
    if np.any(t <= 0) or np.any(t >= fam.half_width):
        raise OutsideTubularNeighbourhoodError("projected parameter outside (0, a)")
    foot = chart(xi)
    if single:
        return ProjectionResult(foot[0], t[0], rn[0])
    return ProjectionResult(foot, t, rn)


# -- property verifiers --------------------------------------------------------


@dataclass
class TransDistReport:
    s_a_estimate: float
    violations: list
    upper_violations: list
    c: float
    deltas: np.ndarray

    def as_dict(self) -> dict:
        return {
            "s_a_estimate": self.s_a_estimate,
            "violations": list(self.violations),
            "upper_violations": list(self.upper_violations),
            "c": self.c,
        }


def verify_trans_dist(domain: Domain, p, v, a_frac: float, s_grid, c: float | None = None) -> TransDistReport:
    """Check ``a c s <= delta(p + s v) <= s`` along a transverse ray.

    ``s_a_estimate`` is the right end of the longest prefix of ``s_grid`` on
    which both inequalities hold; the upper one must hold on the whole grid.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    s = np.asarray(s_grid, dtype=float)
    if not 0 < a_frac < 1:
        raise ArgumentError("a_frac must lie in (0, 1)")
    if s.ndim != 1 or s.size == 0 or s[0] <= 0 or np.any(np.diff(s) <= 0):
        raise ArgumentError("s_grid must be positive and increasing")
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ArgumentError("v must be a unit vector")
    dot = float(v @ domain.normal(p))
    if c is None:
        c = -dot
    if c <= 0 or dot > -c:
        raise NotTransversalError(f"v . nu_p = {dot} is not <= -c = {-c}")
    x = p[None, :] + s[:, None] * v[None, :]
    delta_in = -np.asarray(domain.signed_distance(x))  # negative when outside
    slack = 1e-12 * domain.diam
    upper_ok = np.abs(delta_in) <= s + slack
    lower_ok = a_frac * c * s <= delta_in
    both = lower_ok & upper_ok
    k = int(np.argmin(both)) if not both.all() else s.size
    return TransDistReport(
        s_a_estimate=float(s[k - 1]) if k > 0 else 0.0,
        violations=[float(v_) for v_ in s[~lower_ok]],
        upper_violations=[float(v_) for v_ in s[~upper_ok]],
        c=float(c),
        deltas=delta_in,
    )


def dilate_family(fam: CurveFamily, lam: float, probes: int = 64) -> CurveFamily:
    """Rescaled family ``(1/lam) * Gamma(pi(lam p), t + T_{lam p})`` on the unit ball.

    The stored transversality constant is ``(c - max T)/lam^2`` with the max
    over a probe grid, the constant guaranteed by the transfer argument.
    """
    d = fam.domain
    if not (d.is_ball and abs(d.radius - 1.0) < 1e-15):
        raise PreconditionError("dilation is defined for families on the unit ball")
    if not fam.arc_length:
        raise PreconditionError("dilation needs an arc-length parametrised family")
    if not 0.5 < lam < 1.0:
        raise DomainError(f"lambda must lie in (1/2, 1), got {lam}")
    pb = d.boundary_grid(probes)
    t_probe = project_along(fam, lam * pb).param
    t_max = float(np.max(t_probe))
    if t_max >= fam.half_width / 2:
        raise LambdaTooSmallError(f"max T_(lam p) = {t_max:.4g} >= a/2 = {fam.half_width / 2:.4g}")
    if t_max >= fam.trans_constant / 2:
        raise LambdaTooSmallError(f"max T_(lam p) = {t_max:.4g} >= c/2 = {fam.trans_constant / 2:.4g}")

    def foot_and_shift(p):
        res = project_along(fam, lam * p)
        return np.atleast_2d(res.foot), np.atleast_1d(res.param)

    def gam(p, t):
        q, shift = foot_and_shift(p)
        return fam.gamma(q, t + shift) / lam

    def tan(p, t):
        q, shift = foot_and_shift(p)
        return fam.tangent(q, t + shift) / lam

    return CurveFamily(
        d, gam, tan, fam.half_width / 2,
        (fam.trans_constant - t_max) / lam**2, False,
        f"dilated-{fam.kind}",
        {**fam.params, "lambda": float(lam), "base_trans_constant": fam.trans_constant, "probe_max_T": t_max},
    )


def dilation_T(fam: CurveFamily, lam: float, p) -> np.ndarray:
    """``T_{lam p}`` for boundary points ``p`` of the base family."""
    return np.atleast_1d(project_along(fam, lam * np.atleast_2d(p)).param)


def check_dilation(fam: CurveFamily, lam: float, n_p: int = 64, n_t: int = 32) -> dict:
    """Measure the dilated family against the properties the construction promises."""
    dil = dilate_family(fam, lam)
    d = fam.domain
    p = d.boundary_grid(n_p)
    origin = float(np.max(np.linalg.norm(dil.gamma(p, 0.0) - p, axis=1)))
    pp, tt = _sample_grid(d, dil.half_width, n_p, n_t)
    tan = dil.tangent(pp, tt)
    speed_err = float(np.max(np.abs(np.linalg.norm(tan, axis=1) - 1.0 / lam)))
    max_dot = float(np.max(np.sum(tan * d.normal(pp), axis=1)))
    t_max = float(np.max(dilation_T(fam, lam, p)))
    bound = (-fam.trans_constant + t_max) / lam**2
    return {
        "lambda": float(lam),
        "origin_residual": origin,
        "speed_error": speed_err,
        "max_dot": max_dot,
        "max_T": t_max,
        "bound": bound,
        "origin_ok": origin <= 1e-10,
        "speed_ok": speed_err <= 1e-8,
        "bound_ok": max_dot <= bound + 1e-8,
    }


def from_spec(spec: dict, domain: Domain) -> CurveFamily:
    kind = str(spec.get("kind", "normal")).strip().lower()
    a = float(spec.get("half_width", 0.5))
    theta = math.radians(float(spec.get("angle_deg", 0.0)))
    beta = float(spec.get("beta", 0.0))
    return make_family(kind, domain, a, theta=theta, beta=beta)
