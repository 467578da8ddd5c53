"""Majorant functions B: [0, inf) -> [0, inf) and their regularity test.

A majorant satisfies B(0) = 0, B non-decreasing and B(t)/t non-increasing.
Regularity asks that

    C(delta) = [ int_0^delta B(t)/t dt + delta * int_delta^T B(t)/t^2 dt ] / B(delta)

stays bounded as delta -> 0, with the upper integral truncated at the cap T.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from harmreg.errors import (
    ArgumentError,
    DegenerateMajorantError,
    DomainError,
    NumericalError,
)

DEFAULT_CAP = 10.0
AXIOM_TOL = 1e-12
TAIL_TOL = 1e-13
_MAX_TAIL_PIECES = 200
# delta sequence used when the caller does not supply one: 1e-2 ... 1e-12
DEFAULT_DELTAS = tuple(10.0 ** -k for k in range(2, 13))


@dataclass(frozen=True)
class Majorant:
    """A majorant evaluator plus the metadata needed to integrate it.

    ``func`` receives a float array of strictly positive ``t`` and must be
    vectorised; ``B(0) = 0`` is enforced by :meth:`__call__`.
    """

    kind: str
    func: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)
    domain_cap: float = DEFAULT_CAP
    # points where B is only piecewise smooth (kinks of truncated kinds)
    breakpoints: tuple = ()
    # optional u -> B(exp(u)), accurate where exp(u) underflows
    log_func: Callable[[float], float] | None = None

    def __call__(self, t):
        return eval_majorant(self, t)

    def describe(self) -> dict:
        return {"kind": self.kind, "cap": self.domain_cap, **self.params}


def eval_majorant(B: Majorant, t):
    """Evaluate ``B(t)``; accepts scalars or arrays, rejects negative ``t``."""
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"majorant argument must be >= 0, got {t!r}")
    out = np.zeros_like(arr)
    pos = arr > 0
    if np.any(pos):
        out[pos] = B.func(arr[pos])
    if out.ndim == 0:
        return float(out)
    return out


# -- constructors -----------------------------------------------------------


def power(alpha: float, cap: float = DEFAULT_CAP) -> Majorant:
    """``t**alpha`` with ``0 < alpha <= 1``."""
    if not 0 < alpha <= 1:
        raise ArgumentError(f"power majorant needs 0 < alpha <= 1, got {alpha}")
    kind = "identity" if alpha == 1 else "power"
    return Majorant(kind, lambda t: t**alpha, {"alpha": float(alpha)}, float(cap),
                    log_func=lambda u: math.exp(alpha * u))


def identity(cap: float = DEFAULT_CAP) -> Majorant:
    return power(1.0, cap)


def power_log(alpha: float, cap: float = DEFAULT_CAP) -> Majorant:
    """``-t**alpha * ln t`` near 0, frozen at its maximum for ``t >= exp(-1/alpha)``.

    The raw expression stops being increasing at ``exp(-1/alpha)``; holding it
    constant from there keeps both axioms and leaves the behaviour near 0 intact.
    """
    if not 0 < alpha <= 1:
        raise ArgumentError(f"power-log majorant needs 0 < alpha <= 1, got {alpha}")
    knee = math.exp(-1.0 / alpha)
    top = math.exp(-1.0) / alpha

    def f(t):
        core = -(np.minimum(t, knee) ** alpha) * np.log(np.minimum(t, knee))
        return np.where(t < knee, core, top)

    def logf(u):
        return -math.exp(alpha * u) * u if u < -1.0 / alpha else top

    return Majorant("power-log", f, {"alpha": float(alpha)}, float(cap), (knee,), logf)


def inverse_log_square(cap: float = DEFAULT_CAP) -> Majorant:
    """``1/(ln t)**2`` for ``t <= exp(-2)``, constant ``1/4`` beyond."""
    knee = math.exp(-2.0)

    def f(t):
        lt = np.log(np.minimum(t, knee))
        return 1.0 / lt**2

    def logf(u):
        return 1.0 / min(u, -2.0) ** 2

    return Majorant("inverse-log-square", f, {}, float(cap), (knee,), logf)


def tabulated(t_nodes: Sequence[float], b_nodes: Sequence[float], cap: float = DEFAULT_CAP) -> Majorant:
    """Piecewise-linear majorant through ``(0, 0)`` and the given nodes.

    Between nodes the ratio ``B(t)/t`` is monotone iff it is monotone at the
    nodes, so validating the nodes validates the whole interpolant.  Beyond
    the last node the value is held constant.
    """
    t = np.asarray(t_nodes, dtype=float)
    b = np.asarray(b_nodes, dtype=float)
    if t.ndim != 1 or t.shape != b.shape or t.size == 0:
        raise ArgumentError("tabulated majorant needs two equal-length 1-D node arrays")
    if t[0] <= 0 or np.any(np.diff(t) <= 0):
        raise ArgumentError("tabulated t values must be positive and strictly increasing")
    if np.any(b < 0):
        raise ArgumentError("tabulated B values must be non-negative")
    report = _axiom_report(t, b)
    if not (report["nondecreasing"] and report["ratio_nonincreasing"]):
        raise ArgumentError(f"tabulated nodes violate the majorant axioms: {report}")
    tt = np.concatenate([[0.0], t])
    bb = np.concatenate([[0.0], b])
    return Majorant(
        "tabulated",
        lambda x: np.interp(x, tt, bb),
        {"nodes": int(t.size)},
        float(cap),
        tuple(float(v) for v in t),
        lambda u: b[0] / t[0] * math.exp(u) if u < math.log(t[0]) else float(np.interp(math.exp(u), tt, bb)),
    )


def load_tabulated(path, cap: float = DEFAULT_CAP) -> Majorant:
    """Read a two-column ``t B(t)`` text file.

    Lines starting with ``#`` are comments; a single non-numeric header line
    before the data is tolerated.  Columns may be separated by whitespace or
    commas.
    """
    rows = []
    header_seen = False
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").split()
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            if rows or header_seen:
                raise ArgumentError(f"{path}:{lineno}: cannot parse {raw!r}") from None
            header_seen = True
            continue
        if len(vals) != 2:
            raise ArgumentError(f"{path}:{lineno}: expected two columns, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise ArgumentError(f"{path}: no data rows")
    data = np.array(rows)
    return tabulated(data[:, 0], data[:, 1], cap)


def from_function(f: Callable[[np.ndarray], np.ndarray], kind: str = "custom", cap: float = DEFAULT_CAP) -> Majorant:
    """Wrap an arbitrary vectorised callable; no axioms are checked."""
    return Majorant(kind, f, {}, float(cap))


def from_spec(spec: dict) -> Majorant:
    """Build a majorant from a plain mapping (as read from a config file)."""
    kind = str(spec.get("kind", "power")).strip().lower()
    cap = float(spec.get("cap", DEFAULT_CAP))
    if kind == "power":
        return power(float(spec.get("alpha", 0.5)), cap)
    if kind in ("identity", "lipschitz"):
        return identity(cap)
    if kind in ("power-log", "power_log"):
        return power_log(float(spec.get("alpha", 0.5)), cap)
    if kind in ("inverse-log-square", "inverse_log_square"):
        return inverse_log_square(cap)
    if kind == "tabulated":
        if "path" not in spec:
            raise ArgumentError("tabulated majorant needs a 'path'")
        return load_tabulated(spec["path"], cap)
    raise ArgumentError(f"unknown majorant kind {kind!r}")


# -- axioms -----------------------------------------------------------------


def _axiom_report(grid: np.ndarray, values: np.ndarray) -> dict:
    ratio = values / grid
    scale_v = np.maximum(np.abs(values[:-1]), np.finfo(float).tiny)
    scale_r = np.maximum(np.abs(ratio[:-1]), np.finfo(float).tiny)
    v_viol = np.maximum(0.0, -(np.diff(values)) / scale_v)
    r_viol = np.maximum(0.0, np.diff(ratio) / scale_r)
    v_max = float(v_viol.max(initial=0.0))
    r_max = float(r_viol.max(initial=0.0))
    return {
        "nondecreasing": v_max <= AXIOM_TOL,
        "ratio_nonincreasing": r_max <= AXIOM_TOL,
        "max_violation": max(v_max, r_max),
    }


def check_axioms(B: Majorant, grid) -> dict:
    """Test monotonicity of ``B`` and of ``B(t)/t`` on an increasing grid.

    Violations are measured relative to the local value, so the tolerance is
    scale-free.
    """
    g = np.asarray(grid, dtype=float)
    if g.size == 0:
        raise ArgumentError("check_axioms needs a non-empty grid")
    if g.ndim != 1 or g[0] <= 0 or np.any(np.diff(g) <= 0):
        raise ArgumentError("grid must be positive and strictly increasing")
    if g[-1] > B.domain_cap:
        raise ArgumentError(f"grid exceeds the majorant cap {B.domain_cap}")
    return _axiom_report(g, np.asarray(B(g), dtype=float))


# -- regularity -------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureConfig:
    epsabs: float = 0.0
    epsrel: float = 1e-11
    limit: int = 400
    # accepted error estimate relative to the integral
    max_rel_error: float = 1e-8


@dataclass
class RegularityReport:
    is_regular: bool
    constant_estimates: list
    divergence_slope: float

    def as_dict(self) -> dict:
        return {
            "is_regular": self.is_regular,
            "constant_estimates": [[d, c] for d, c in self.constant_estimates],
            "divergence_slope": self.divergence_slope,
        }


def _quad(fn, lo, hi, cfg: QuadratureConfig, points=None, label=""):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        if points:
            value, err = integrate.quad(fn, lo, hi, epsabs=cfg.epsabs, epsrel=cfg.epsrel,
                                        limit=cfg.limit, points=points)
        else:
            value, err = integrate.quad(fn, lo, hi, epsabs=cfg.epsabs, epsrel=cfg.epsrel,
                                        limit=cfg.limit)
    bad = [w for w in caught if issubclass(w.category, integrate.IntegrationWarning)]
    if bad or not math.isfinite(value) or err > cfg.max_rel_error * max(abs(value), 1e-300):
        raise NumericalError(
            f"quadrature for {label} did not converge",
            {"interval": (lo, hi), "value": value, "error_estimate": err,
             "warnings": [str(w.message) for w in bad]},
        )
    return value


def _lower_tail(fn, edge: float, cfg: QuadratureConfig) -> float:
    """Integral of ``fn`` over ``(-inf, edge]`` by doubling intervals.

    ``fn`` is non-decreasing, so pieces shrink; summation stops once a piece
    falls below ``TAIL_TOL`` of the running total (the slowest built-in decay,
    ``1/u**2``, halves per piece, leaving a remainder of the same order).
    """
    total = 0.0
    hi, width = edge, 1.0
    for _ in range(_MAX_TAIL_PIECES):
        piece = _quad(fn, hi - width, hi, cfg, None, "lower integral tail")
        total += piece
        if piece <= TAIL_TOL * total:
            return total
        hi -= width
        width *= 2.0
    raise NumericalError("lower integral tail did not decay", {"edge": edge, "partial": total})


def regularity_constant(B: Majorant, delta: float, quadrature_cfg: QuadratureConfig | None = None) -> float:
    """Ratio of the two-sided regularity integral to ``B(delta)``.

    Both integrals are taken in the variable ``u = ln t``, where the
    integrands ``B(e^u)`` and ``B(e^u) e^{-u}`` are smooth and the lower
    limit becomes ``-inf`` (handled by the adaptive routine's own mapping).
    """
    cfg = quadrature_cfg or QuadratureConfig()
    if not 0 < delta < B.domain_cap:
        raise DomainError(f"need 0 < delta < cap={B.domain_cap}, got {delta}")
    b_delta = B(delta)
    if b_delta <= 0:
        raise DegenerateMajorantError(f"B({delta}) = {b_delta}; regularity ratio undefined")
    ld, lt = math.log(delta), math.log(B.domain_cap)

    def b_of_log(u):
        if B.log_func is not None:
            return B.log_func(u)
        return float(B.func(np.array([math.exp(u)]))[0])

    def upper_integrand(u):
        return b_of_log(u) * math.exp(-u)

    lower_pts = sorted(math.log(p) for p in B.breakpoints if 0 < p < delta)
    upper_pts = [math.log(p) for p in B.breakpoints if delta < p < B.domain_cap]
    lo_edge = lower_pts[0] if lower_pts else ld
    lower = 0.0
    if lower_pts:
        lower += _quad(b_of_log, lo_edge, ld, cfg, lower_pts[1:] or None, "lower integral")
    lower += _lower_tail(b_of_log, lo_edge, cfg)
    upper = delta * _quad(upper_integrand, ld, lt, cfg, upper_pts or None, "upper integral")
    return (lower + upper) / b_delta


def _tail_slope(deltas: np.ndarray, consts: np.ndarray) -> float:
    k = max(3, math.ceil(len(deltas) / 2))
    x = np.log(1.0 / deltas[-k:])
    y = consts[-k:]
    return float(np.polyfit(x, y, 1)[0])


def is_regular(B: Majorant, delta_sequence=DEFAULT_DELTAS,
               quadrature_cfg: QuadratureConfig | None = None) -> RegularityReport:
    """Classify ``B`` as regular when ``C(delta)`` shows no growth.

    Bounded means: the last constant is within 10% of the largest earlier one
    and the growth rate of ``C`` against ``ln(1/delta)``, fitted over the
    smaller half of the sequence (at least three points), is at most 0.05.
    """
    d = np.asarray(delta_sequence, dtype=float)
    if d.size < 4:
        raise ArgumentError("delta_sequence needs at least 4 points")
    if np.any(np.diff(d) >= 0) or d[-1] <= 0:
        raise ArgumentError("delta_sequence must be positive and strictly decreasing")
    if math.log10(d[0] / d[-1]) < 2 - 1e-12:
        raise ArgumentError("delta_sequence must span at least two decades")
    consts = np.array([regularity_constant(B, float(x), quadrature_cfg) for x in d])
    if np.any(consts <= 0):
        raise NumericalError("non-positive regularity constant", {"constants": consts.tolist()})
    slope = _tail_slope(d, consts)
    bounded = consts[-1] <= 1.1 * consts[:-1].max()
    return RegularityReport(
        is_regular=bool(bounded and slope <= 0.05),
        constant_estimates=[(float(a), float(c)) for a, c in zip(d, consts)],
        divergence_slope=slope,
    )
