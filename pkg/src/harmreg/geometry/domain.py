"""Smooth bounded domains centred at the origin: balls, ellipses, ellipsoids.

The signed distance is exact: ``r(x) = -dist(x, bOmega)`` inside and
``+dist(x, bOmega)`` outside.  For ellipsoids the nearest boundary point is
found from the Lagrange condition ``q_i = a_i^2 x_i / (a_i^2 + t)`` by a
safeguarded Newton iteration on the scalar multiplier ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from harmreg.errors import ArgumentError, DomainError

_NEWTON_ITERS = 200


def _as_points(x, dim):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if pts.shape[-1] != dim:
        raise DomainError(f"expected points of dimension {dim}, got shape {arr.shape}")
    return pts, single


@dataclass(frozen=True)
class Domain:
    kind: str
    axes: tuple

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def diam(self) -> float:
        return 2.0 * max(self.axes)

    @property
    def is_ball(self) -> bool:
        return self.kind == "ball"

    @property
    def radius(self) -> float:
        if not self.is_ball:
            raise DomainError(f"{self.kind} has no radius")
        return self.axes[0]

    def describe(self) -> dict:
        return {"kind": self.kind, "axes": list(self.axes)}

    # -- distance -------------------------------------------------------------

    def closest_point(self, x) -> np.ndarray:
        """Nearest point of the boundary to each row of ``x``."""
        pts, single = _as_points(x, self.dim)
        if self.is_ball:
            norm = np.linalg.norm(pts, axis=1, keepdims=True)
            safe = np.where(norm > 0, norm, 1.0)
            q = np.where(norm > 0, pts / safe, np.eye(self.dim)[0]) * self.radius
        else:
            q = _ellipsoid_closest(pts, np.asarray(self.axes, dtype=float))
        return q[0] if single else q

    def signed_distance(self, x):
        pts, single = _as_points(x, self.dim)
        if self.is_ball:
            r = np.linalg.norm(pts, axis=1) - self.radius
        else:
            a = np.asarray(self.axes, dtype=float)
            q = _ellipsoid_closest(pts, a)
            d = np.linalg.norm(pts - q, axis=1)
            outside = np.sum((pts / a) ** 2, axis=1) > 1.0
            r = np.where(outside, d, -d)
        return float(r[0]) if single else r

    def delta(self, x):
        """Euclidean distance to the boundary, ``|r(x)|``."""
        return np.abs(self.signed_distance(x))

    def contains(self, x):
        return np.asarray(self.signed_distance(x)) < 0

    def normal(self, x) -> np.ndarray:
        """Outward unit normal at the nearest boundary point of ``x``."""
        pts, single = _as_points(x, self.dim)
        q = self.closest_point(pts)
        g = q / np.asarray(self.axes, dtype=float) ** 2
        nu = g / np.linalg.norm(g, axis=1, keepdims=True)
        return nu[0] if single else nu

    # -- boundary parametrisation --------------------------------------------

    def wrap_params(self, params) -> np.ndarray:
        """Fold arbitrary parameters back into ``[0, 1]^(n-1)``.

        The azimuth is periodic; the polar coordinate (n = 3) is reflected.
        """
        u = np.array(params, dtype=float, copy=True)
        u[..., 0] = np.mod(u[..., 0], 1.0)
        if self.dim == 3:
            v = np.mod(u[..., 1], 2.0)
            u[..., 1] = np.where(v > 1.0, 2.0 - v, v)
        return u

    def boundary_point(self, params) -> np.ndarray:
        """Map parameters in ``[0, 1]^(n-1)`` (uniform in angle) to ``bOmega``."""
        u = np.atleast_2d(np.asarray(params, dtype=float))
        a = np.asarray(self.axes, dtype=float)
        phi = 2.0 * np.pi * u[:, 0]
        if self.dim == 2:
            pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        else:
            theta = np.pi * u[:, 1]
            st = np.sin(theta)
            pts = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=1)
        pts = pts * a
        return pts[0] if np.ndim(params) == 1 else pts

    def boundary_param(self, p) -> np.ndarray:
        pts, single = _as_points(p, self.dim)
        a = np.asarray(self.axes, dtype=float)
        y = pts / a
        u = np.mod(np.arctan2(y[:, 1], y[:, 0]) / (2.0 * np.pi), 1.0)
        if self.dim == 2:
            out = u[:, None]
        else:
            ct = y[:, 2] / np.linalg.norm(y, axis=1)
            out = np.stack([u, np.arccos(np.clip(ct, -1.0, 1.0)) / np.pi], axis=1)
        return out[0] if single else out

    def boundary_sample(self, seed, count: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return self.boundary_point(rng.random((count, self.dim - 1)))

    def boundary_grid(self, count: int) -> np.ndarray:
        """Deterministic, roughly even boundary points (used by verifiers)."""
        if self.dim == 2:
            return self.boundary_point((np.arange(count)[:, None] + 0.5) / count)
        # Fibonacci lattice in (azimuth, cos polar)
        k = np.arange(count) + 0.5
        u = np.mod(k * (np.sqrt(5.0) - 1.0) / 2.0, 1.0)
        v = np.arccos(1.0 - 2.0 * k / count) / np.pi
        return self.boundary_point(np.stack([u, v], axis=1))

    def tangent_basis(self, p) -> np.ndarray:
        """Orthonormal tangent vectors at boundary points, shape ``(m, n, n-1)``."""
        pts, single = _as_points(p, self.dim)
        nu = self.normal(pts)
        if self.dim == 2:
            basis = np.stack([-nu[:, 1], nu[:, 0]], axis=1)[:, :, None]
        else:
            helper = np.where(np.abs(nu[:, :1]) < 0.9, np.eye(3)[0], np.eye(3)[1])
            e1 = helper - np.sum(helper * nu, axis=1, keepdims=True) * nu
            e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
            e2 = np.cross(nu, e1)
            basis = np.stack([e1, e2], axis=2)
        return basis[0] if single else basis

    def tangential_field(self, p) -> np.ndarray:
        """A unit tangent field: ``nu`` turned by +90 degrees in 2-D; in 3-D the
        normalised tangential part of ``e_z`` (``e_x``'s part near the poles)."""
        pts, single = _as_points(p, self.dim)
        nu = self.normal(pts)
        if self.dim == 2:
            tau = np.stack([-nu[:, 1], nu[:, 0]], axis=1)
        else:
            ez = np.eye(3)[2]
            proj = ez - nu[:, 2:3] * nu
            norm = np.linalg.norm(proj, axis=1, keepdims=True)
            ex = np.eye(3)[0]
            alt = ex - nu[:, 0:1] * nu
            alt /= np.linalg.norm(alt, axis=1, keepdims=True)
            tau = np.where(norm > 1e-6, proj / np.maximum(norm, 1e-300), alt)
        return tau[0] if single else tau

    def smooth_tangent_field(self, p) -> np.ndarray:
        """A smooth tangent field: the unit field of ``tangential_field`` in 2-D;
        in 3-D the tangential part of ``e_z`` itself, which has length
        ``sin(polar angle)`` and vanishes at the poles (no smooth unit field
        exists on a sphere)."""
        pts, single = _as_points(p, self.dim)
        if self.dim == 2:
            return self.tangential_field(p)
        nu = self.normal(pts)
        out = np.eye(3)[2] - nu[:, 2:3] * nu
        return out[0] if single else out


def ball(radius: float = 1.0, dim: int = 2) -> Domain:
    if radius <= 0:
        raise ArgumentError("ball radius must be positive")
    if dim not in (2, 3):
        raise ArgumentError(f"only dimensions 2 and 3 are supported, got {dim}")
    return Domain("ball", (float(radius),) * dim)


def ellipse(a1: float, a2: float) -> Domain:
    if min(a1, a2) <= 0:
        raise ArgumentError("ellipse semi-axes must be positive")
    return Domain("ellipse", (float(a1), float(a2)))


def ellipsoid(a1: float, a2: float, a3: float) -> Domain:
    if min(a1, a2, a3) <= 0:
        raise ArgumentError("ellipsoid semi-axes must be positive")
    return Domain("ellipsoid", (float(a1), float(a2), float(a3)))


def from_spec(spec: dict) -> Domain:
    kind = str(spec.get("kind", "ball")).strip().lower()
    if kind == "ball":
        return ball(float(spec.get("radius", 1.0)), int(spec.get("dim", 2)))
    if kind == "ellipse":
        return ellipse(float(spec["a1"]), float(spec["a2"]))
    if kind == "ellipsoid":
        return ellipsoid(float(spec["a1"]), float(spec["a2"]), float(spec["a3"]))
    raise ArgumentError(f"unknown domain kind {kind!r}")


def _ellipsoid_closest(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Nearest boundary point of the ellipsoid ``sum (x_i/a_i)^2 = 1``.

    Works on ``|x|`` (the problem is symmetric per axis) and restores signs at
    the end.  Coordinates that vanish drop out of the multiplier equation; if
    the smallest such axis is shorter than every active one, the nearest point
    may leave the coordinate plane (interior points inside the evolute), which
    is handled in closed form.
    """
    m, n = x.shape
    sign = np.where(x < 0, -1.0, 1.0)
    y = np.abs(x)
    a2 = a**2
    active = y > 0
    big = np.inf

    min_active = np.where(active, a2, big).min(axis=1)
    q = np.zeros_like(y)

    # evolute case: an inactive axis shorter than all active ones
    min_inactive = np.where(~active, a2, big).min(axis=1)
    k_inactive = np.where(~active, a2, big).argmin(axis=1)
    cand = min_inactive < min_active
    if np.any(cand):
        idx = np.nonzero(cand)[0]
        ak2 = min_inactive[idx][:, None]
        denom = a2[None, :] - ak2
        with np.errstate(divide="ignore", invalid="ignore"):
            qi = np.where(active[idx], a2 * y[idx] / denom, 0.0)
        g = np.sum(np.where(active[idx], (qi / a) ** 2, 0.0), axis=1)
        use = g < 1.0
        sel = idx[use]
        qi = qi[use]
        qi[np.arange(sel.size), k_inactive[sel]] = np.sqrt(a2[k_inactive[sel]] * (1.0 - g[use]))
        q[sel] = qi
        solved = np.zeros(m, dtype=bool)
        solved[sel] = True
    else:
        solved = np.zeros(m, dtype=bool)

    todo = np.nonzero(~solved)[0]
    if todo.size:
        # solve for tau = t + min active a_i^2 so the axis nearest the pole keeps full precision
        yy = y[todo]
        act = active[todo]
        m_act = min_active[todo]
        c = np.where(act, a2[None, :] - m_act[:, None], 1.0)
        pole = act & (c == 0.0)
        # unsquared weights: tiny coordinates would underflow when squared
        w = np.where(act & ~pole, a * yy, 0.0)

        # the multiplier is carried as v = ln(tau 2^-e) for a per-row binary scale e; on the
        # nearest-pole axes r = a y / tau is formed as exp(ln(a y 2^-e) - v), which neither
        # underflows for subnormal y nor loses digits once e matches the root's exponent
        def scaled(e):
            with np.errstate(divide="ignore", under="ignore"):
                log_wp = np.log(a * np.ldexp(np.where(pole, yy, 0.0), -e[:, None]))
            return np.where(pole, log_wp, -np.inf)

        def ratios(v, e, log_wp):
            with np.errstate(under="ignore", over="ignore"):
                # tau only meets c > 0 here, so digits lost when e is large do not matter
                tau = np.exp(v + e * np.log(2.0))[:, None]
                r = np.where(pole, np.exp(log_wp - v[:, None]), w / (c + tau))
                frac = np.where(pole, 1.0, tau / (c + tau))
            return np.where(act, r, 0.0), frac

        def solve(v, lo_v, hi_v, e):
            log_wp = scaled(e)
            for _ in range(_NEWTON_ITERS):
                r, frac = ratios(v, e, log_wp)
                r2 = r * r
                total = np.sum(r2, axis=1)
                with np.errstate(divide="ignore", invalid="ignore"):
                    # log of the constraint sum: close to linear in v both far out and near the pole
                    g = np.log(total)
                    dg = -2.0 * np.sum(r2 * frac, axis=1) / total
                lo_v = np.where(g > 0, v, lo_v)
                hi_v = np.where(g <= 0, v, hi_v)
                with np.errstate(divide="ignore", invalid="ignore"):
                    step = v - g / dg
                inside = (step > lo_v) & (step < hi_v) & np.isfinite(step)
                new = np.where(inside, step, 0.5 * (lo_v + hi_v))
                done = (np.abs(new - v) <= 4e-16) | (hi_v - lo_v <= 4e-16)
                v = new
                if np.all(done):
                    break
            return v, lo_v, hi_v, log_wp

        # first pass scaled by the largest nearest-pole coordinate when it is tiny;
        # root bracket: r <= 1 on every nearest-pole axis, tau <= m + max(a)|y|
        y_pole = np.max(np.where(pole, yy, 0.0), axis=1)
        e = np.where(y_pole < 2.0**-600, np.frexp(y_pole)[1], 0)
        lo_v = np.max(scaled(e), axis=1)
        hi_v = np.log(m_act + np.max(a) * np.sum(yy, axis=1)) - e * np.log(2.0)
        wmax = np.max(w, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            far = np.log(wmax) + 0.5 * np.log(np.sum((w / wmax[:, None]) ** 2, axis=1)) - e * np.log(2.0)
        far = np.where(wmax > 0, far, -np.inf)
        v = np.clip(np.maximum(far, lo_v), lo_v, hi_v)
        v, lo_v, hi_v, _ = solve(v, lo_v, hi_v, e)
        # second pass re-centred on the root so v is O(1) and carries full precision
        k = np.round(v / np.log(2.0)).astype(int)
        v = v - k * np.log(2.0)
        lo_v = np.minimum(lo_v - k * np.log(2.0), v - 1e-6)
        hi_v = np.maximum(hi_v - k * np.log(2.0), v + 1e-6)
        e = e + k
        v, _, _, log_wp = solve(v, lo_v, hi_v, e)
        q[todo] = a * ratios(v, e, log_wp)[0]
    return sign * q
