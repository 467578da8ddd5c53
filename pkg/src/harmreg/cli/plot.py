"""Optional SVG figures: refinement traces and the gradient functional
``|grad u| delta / B(delta)`` along the inward normal through the witness."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from harmreg.errors import ConfigError
from harmreg.harmonic import hl_value


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        raise ConfigError("--plot needs matplotlib (pip install 'artifact[plot]')") from None
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "harmreg"
    import matplotlib.pyplot as plt

    return plt


def write_plots(report, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plt = _pyplot()
    paths = []
    if report.traces:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for name, trace in sorted(report.traces.items()):
            if trace:
                b, v = np.asarray(trace, dtype=float).T
                ax.step(b, v, where="post", label=name)
        ax.set_xscale("log")
        ax.set_xlabel("samples used")
        ax.set_ylabel("running sup")
        ax.legend()
        fig.tight_layout()
        path = out / f"{report.command}-trace.svg"
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    if "hl" in report.context:
        u, dom, B, d0, floor, est = report.context["hl"]
        x = np.asarray(est.witness["point"], dtype=float)
        p = dom.closest_point(x)
        nu = dom.normal(p)
        deltas = np.geomspace(floor, d0, 200)
        vals = hl_value(u, dom, B, p[None, :] - deltas[:, None] * nu[None, :])
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.loglog(deltas, np.maximum(vals, 1e-300))
        ax.set_xlabel("distance to boundary")
        ax.set_ylabel("|grad u| delta / B(delta)")
        fig.tight_layout()
        path = out / f"{report.command}-hl.svg"
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths
