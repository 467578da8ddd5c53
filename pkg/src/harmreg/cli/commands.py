"""Scenario runners: each builds its objects from the config, runs one family
of checks and returns a Report.  Construction errors surface as ConfigError
before any estimator runs."""

from __future__ import annotations

import math

import numpy as np

from harmreg import harmonic, majorant, seminorm
from harmreg.cli.config import ExperimentConfig
from harmreg.cli.report import Report
from harmreg.errors import ConfigError, HarmregError, NumericalError, PreconditionError
from harmreg.geometry import domain as geo_domain
from harmreg.geometry import families
from harmreg.supremum import derive_seed

COMMAND_INDEX = {
    "majorant-check": 1,
    "verify-har-est": 2,
    "verify-trans-dist": 3,
    "verify-max-principle": 4,
    "verify-dilate": 5,
    "seminorm-global": 6,
    "seminorm-transversal": 7,
    "seminorm-hl": 8,
    "main-theorem": 9,
}

HAR_EST_TOL = harmonic.GRADIENT_BOUND_TOL
TRANS_DIST_TOL = 1e-10
GT_FACTOR = 2.0


class Built:
    """Objects constructed from a config, with construction errors mapped to ConfigError."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg

    def _wrap(self, what, fn):
        try:
            return fn()
        except NumericalError:
            raise
        except (HarmregError, KeyError, ValueError) as exc:
            raise ConfigError(f"invalid [{what}] section: {exc}") from None

    def majorant(self):
        return self._wrap("majorant", lambda: majorant.from_spec(self.cfg.section("majorant")))

    def domain(self):
        return self._wrap("domain", lambda: geo_domain.from_spec(self.cfg.section("domain")))

    def family(self, dom):
        return self._wrap("family", lambda: families.from_spec(self.cfg.section("family"), dom))

    def function(self, dim):
        return self._wrap("function", lambda: harmonic.from_spec(self.cfg.section("function"), dim))

    def sampling(self, dim):
        cfg = self.cfg
        base = harmonic.SamplingConfig()
        pts = cfg.number("budgets", "sphere_points", base.sphere_points(dim), int)
        return harmonic.SamplingConfig(sphere_points_2d=pts if dim == 2 else base.sphere_points_2d,
                                       sphere_points_3d=pts if dim == 3 else base.sphere_points_3d)

    def samples(self) -> int:
        return self.cfg.number("budgets", "samples", 8192, int)

    def floor(self, dom):
        raw = self.cfg.get("bands", "delta_floor")
        return 1e-6 * dom.diam if raw is None else self.cfg.number("bands", "delta_floor")


def new_report(command: str, cfg: ExperimentConfig, seeds: dict | None = None) -> Report:
    prov = {"seed": cfg.seed, "command_index": COMMAND_INDEX[command], "seed_scheme": "derive_seed(seed, command_index, k)"}
    if seeds:
        prov["derived_seeds"] = seeds
    return Report(command, cfg.echo(), prov)


def _seed(cfg, command, k):
    return derive_seed(cfg.seed, COMMAND_INDEX[command], k)


def cmd_majorant_check(cfg: ExperimentConfig) -> Report:
    built = Built(cfg)
    B = built.majorant()
    rep = new_report("majorant-check", cfg)
    grid = np.geomspace(1e-12, B.domain_cap, 2001)
    ax = majorant.check_axioms(B, grid)
    rep.add("axioms", ax | {"grid_points": grid.size}, ax["nondecreasing"] and ax["ratio_nonincreasing"],
            majorant.AXIOM_TOL)
    deltas = cfg.numbers("majorant", "deltas", majorant.DEFAULT_DELTAS)
    try:
        reg = majorant.is_regular(B, deltas)
    except (ValueError, PreconditionError) as exc:
        raise ConfigError(f"invalid [majorant] deltas: {exc}") from None
    expect = str(cfg.get("majorant", "expect", "regular")).strip().lower()
    if expect not in ("regular", "nonregular"):
        raise ConfigError("[majorant] expect must be 'regular' or 'nonregular'")
    rep.add("regularity", reg.as_dict() | {"expected": expect}, reg.is_regular == (expect == "regular"))
    return rep


def _radius_grid(k: int):
    vals = np.linspace(0.1, 0.9, k)
    return [(float(r), float(R)) for r in vals for R in vals if R - r >= 0.05]


def cmd_verify_har_est(cfg: ExperimentConfig) -> Report:
    built = Built(cfg)
    dom = built.domain()
    if not (dom.is_ball and dom.radius == 1.0):
        raise ConfigError("har-est runs on the unit ball")
    u = built.function(dom.dim)
    sampling = built.sampling(dom.dim)
    if cfg.get("verify", "grid") is not None:
        pairs = _radius_grid(cfg.number("verify", "grid", 5, int))
    else:
        pairs = [(cfg.number("verify", "r", 0.5), cfg.number("verify", "R", 0.9))]
    rep = new_report("verify-har-est", cfg)
    for k, (r, R) in enumerate(pairs):
        try:
            res = harmonic.verify_gradient_bound(u, r, R, sampling, _seed(cfg, "verify-har-est", k))
        except (PreconditionError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        rep.add(f"gradient_bound[r={r:.6g},R={R:.6g}]", res.as_dict() | {"r": r, "R": R}, res.ok, HAR_EST_TOL)
    return rep


def cmd_verify_trans_dist(cfg: ExperimentConfig) -> Report:
    built = Built(cfg)
    dom = built.domain()
    if not (dom.is_ball and dom.radius == 1.0):
        raise ConfigError("trans-dist runs on the unit ball")
    theta = math.radians(cfg.number("verify", "angle_deg", 30.0))
    a_frac = cfg.number("verify", "a_frac", 0.5)
    s_max = cfg.number("verify", "s_max", 1.0)
    n_s = cfg.number("verify", "n_s", 200, int)
    n_points = cfg.number("verify", "n_points", 16, int)
    if not 0 <= theta < math.pi / 2:
        raise ConfigError("[verify] angle_deg must lie in [0, 90)")
    s = np.geomspace(1e-6, s_max, n_s)
    rep = new_report("verify-trans-dist", cfg)
    p = dom.boundary_grid(n_points)
    c = math.cos(theta)
    worst_closed, s_a, lower_ok, upper_ok = 0.0, math.inf, True, True
    for k in range(n_points):
        nu = dom.normal(p[k])
        v = -(c * nu + math.sin(theta) * dom.tangential_field(p[k]))
        v /= np.linalg.norm(v)
        try:
            res = families.verify_trans_dist(dom, p[k], v, a_frac, s, c=float(-v @ nu))
        except HarmregError as exc:
            raise ConfigError(str(exc)) from None
        cc = res.c
        closed = 1.0 - np.sqrt(np.maximum(1.0 - 2.0 * cc * s + s * s, 0.0))
        worst_closed = max(worst_closed, float(np.max(np.abs(closed - res.deltas))))
        s_a = min(s_a, res.s_a_estimate)
        prefix = s <= res.s_a_estimate
        lower_ok &= bool(np.all(a_frac * cc * s[prefix] <= res.deltas[prefix]))
        upper_ok &= not res.upper_violations
    rep.add("closed_form", {"max_abs_error": worst_closed, "angle_deg": math.degrees(theta)},
            worst_closed <= TRANS_DIST_TOL, TRANS_DIST_TOL)
    rep.add("lower_bound_prefix", {"s_a": s_a, "a_frac": a_frac, "c": c}, lower_ok and s_a > 0)
    rep.add("upper_bound", {"s_max": s_max}, upper_ok)
    radial = families.verify_trans_dist(dom, p[0], -dom.normal(p[0]), a_frac, s[s < 1.0])
    eq_err = float(np.max(np.abs(radial.deltas - s[s < 1.0])))
    rep.add("radial_equality", {"max_abs_error": eq_err}, eq_err <= TRANS_DIST_TOL, TRANS_DIST_TOL)
    return rep


def cmd_verify_max_principle(cfg: ExperimentConfig) -> Report:
    built = Built(cfg)
    dom = built.domain()
    u = built.function(dom.dim)
    B = built.majorant()
    d0 = cfg.number("bands", "delta0", 0.05)
    d1 = cfg.number("bands", "delta1", 0.1)
    rep = new_report("verify-max-principle", cfg)
    try:
        res = seminorm.max_principle_transfer(u, dom, B, d0, d1, built.samples(), _seed(cfg, "verify-max-principle", 0),
                                              delta_floor=built.floor(dom), sampling=built.sampling(dom.dim))
    except (PreconditionError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    vals = {k: res[k] for k in ("A0", "A1", "bound")} | {"delta0": d0, "delta1": d1}
    vals["A0_witness"] = res["A0_estimate"].as_dict()["witness"]
    vals["A1_witness"] = res["A1_estimate"].as_dict()["witness"]
    rep.add("band_transfer", vals, res["bound_ok"], res["slack"])
    rep.traces = {"A0": res["A0_estimate"].trace, "A1": res["A1_estimate"].trace}
    return rep


def cmd_verify_dilate(cfg: ExperimentConfig) -> Report:
    built = Built(cfg)
    dom = built.domain()
    fam = built.family(dom)
    lambdas = cfg.numbers("verify", "lambdas", (0.9, 0.99))
    rep = new_report("verify-dilate", cfg)
    for lam in lambdas:
        try:
            res = families.check_dilation(fam, lam)
        except (PreconditionError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        rep.add(f"dilation[lambda={lam:.6g}]", res, res["origin_ok"] and res["speed_ok"] and res["bound_ok"], 1e-8)
    return rep


def _estimate_check(rep, name, est, slack=None):
    ok = math.isfinite(est.value) and est.value >= 0
    rep.add(name, est.as_dict(), ok, slack)
    rep.traces = {name: est.trace}
    return est


def cmd_seminorm(which: str, cfg: ExperimentConfig) -> Report:
    built = Built(cfg)
    command = f"seminorm-{which}"
    dom = built.domain()
    u = built.function(dom.dim)
    B = built.majorant()
    budget = built.samples()
    seed = _seed(cfg, command, 0)
    rep = new_report(command, cfg)
    floor = built.floor(dom)
    sampling = built.sampling(dom.dim)
    try:
        if which == "global":
            est = seminorm.global_seminorm(u, dom, B, budget, seed, delta_floor=floor, sampling=sampling)
        elif which == "transversal":
            fam = built.family(dom)
            est = seminorm.transversal_seminorm(u, fam, B, _s_range(cfg, fam, floor), budget, seed, sampling=sampling)
        elif which == "hl":
            d0 = cfg.number("bands", "delta0", 0.05)
            est = harmonic.hl_constant(u, dom, B, d0, budget=budget, seed=seed, delta_floor=floor, sampling=sampling)
            rep.context["hl"] = (u, dom, B, d0, floor, est)
        else:
            raise ConfigError(f"unknown seminorm {which!r}")
    except (PreconditionError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    _estimate_check(rep, which, est)
    return rep


def _s_range(cfg, fam, floor):
    lo_default, hi_default = seminorm.default_s_range(fam, floor)
    return cfg.number("bands", "s_min", lo_default), cfg.number("bands", "s_max", hi_default)


def cmd_main_theorem(cfg: ExperimentConfig) -> Report:
    built = Built(cfg)
    dom = built.domain()
    u = built.function(dom.dim)
    B = built.majorant()
    fam = built.family(dom)
    reg = majorant.is_regular(B)
    if not reg.is_regular:
        raise ConfigError(f"majorant {B.kind} is not regular (slope {reg.divergence_slope:.3g}); "
                          "the comparison needs a regular majorant")
    chk = families.check_family(fam)
    if not chk["transversal"]:
        raise ConfigError("curve family fails the transversality check")
    floor = built.floor(dom)
    budget = built.samples()
    seed = _seed(cfg, "main-theorem", 0)
    d0 = cfg.number("bands", "delta0", 0.05)
    rep = new_report("main-theorem", cfg, {"main": seed})
    try:
        res = seminorm.main_theorem_check(u, fam, dom, B, budget, seed, s_range=_s_range(cfg, fam, floor),
                                          delta0=d0, delta_floor=floor, sampling=built.sampling(dom.dim),
                                          check_regular=False)
    except (PreconditionError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    rep.add("regularity", reg.as_dict(), True)
    rep.add("transversality", chk | {"trans_constant": fam.trans_constant, "half_width": fam.half_width}, True)
    rep.add("finite", {"T": res.T, "H": res.H, "G": res.G}, res.finite)
    rep.add("stable", {"changes": res.changes, "per_budget": res.per_budget}, res.stable, seminorm.STABILITY_TOL)
    gts = [row["ratio_GT"] for row in res.per_budget]
    if any(isinstance(g, str) for g in gts):
        consistent = all(isinstance(g, str) for g in gts)
        spread = seminorm.UNDEFINED
    else:
        spread = max(gts) / min(gts) if min(gts) > 0 else seminorm.UNDEFINED
        consistent = isinstance(spread, float) and spread <= GT_FACTOR
    rep.add("ratios", {"ratio_GT": res.ratio_GT, "ratio_HT": res.ratio_HT, "ratio_GT_spread": spread},
            consistent, GT_FACTOR)
    last = res.estimates[res.budgets[-1]]
    rep.traces = {k: v.trace for k, v in last.items()}
    rep.context["hl"] = (u, dom, B, d0, floor, last["H"])
    return rep


def run_command(name: str, cfg: ExperimentConfig) -> Report:
    if name == "majorant-check":
        return cmd_majorant_check(cfg)
    if name == "verify-har-est":
        return cmd_verify_har_est(cfg)
    if name == "verify-trans-dist":
        return cmd_verify_trans_dist(cfg)
    if name == "verify-max-principle":
        return cmd_verify_max_principle(cfg)
    if name == "verify-dilate":
        return cmd_verify_dilate(cfg)
    if name.startswith("seminorm-"):
        return cmd_seminorm(name.split("-", 1)[1], cfg)
    if name == "main-theorem":
        return cmd_main_theorem(cfg)
    raise ConfigError(f"unknown command {name!r}")
