"""Product quadrature for means over the unit circle and unit sphere.

n = 2: periodic trapezoid rule with ``n_phi`` equispaced nodes.
n = 3: Gauss-Legendre in cos(polar angle) times a trapezoid rule in azimuth.
Weights are normalised to sum to one, so ``weights @ f(nodes)`` is the mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from harmreg.errors import ConfigError

MIN_ORDER = {2: (1, 64), 3: (16, 32)}
DEFAULT_ORDER = {2: (1, 512), 3: (160, 320)}


@dataclass(frozen=True)
class SphereQuadrature:
    dim: int
    n_theta: int
    n_phi: int

    def __post_init__(self):
        if self.dim not in MIN_ORDER:
            raise ConfigError(f"sphere quadrature supports dim 2 or 3, got {self.dim}")
        lo_t, lo_p = MIN_ORDER[self.dim]
        if self.n_phi < lo_p or (self.dim == 3 and self.n_theta < lo_t):
            raise ConfigError(
                f"quadrature order ({self.n_theta}, {self.n_phi}) below minimum {MIN_ORDER[self.dim]} "
                f"for dim {self.dim}"
            )

    @classmethod
    def default(cls, dim: int) -> "SphereQuadrature":
        if dim not in DEFAULT_ORDER:
            raise ConfigError(f"sphere quadrature supports dim 2 or 3, got {dim}")
        t, p = DEFAULT_ORDER[dim]
        return cls(dim, t, p)

    @cached_property
    def _rule(self):
        phi = 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi
        if self.dim == 2:
            nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
            weights = np.full(self.n_phi, 1.0 / self.n_phi)
            return nodes, weights
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        sin_t = np.sqrt(1.0 - x**2)
        nodes = np.stack(
            [
                np.outer(sin_t, np.cos(phi)).ravel(),
                np.outer(sin_t, np.sin(phi)).ravel(),
                np.repeat(x, self.n_phi),
            ],
            axis=1,
        )
        weights = np.repeat(w / 2.0, self.n_phi) / self.n_phi
        return nodes, weights

    @property
    def nodes(self) -> np.ndarray:
        return self._rule[0]

    @property
    def weights(self) -> np.ndarray:
        return self._rule[1]

    def mean(self, fn, center=None, radius: float = 1.0) -> float:
        """Average of ``fn`` over the sphere ``|x - center| = radius``."""
        c = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float)
        vals = np.asarray(fn(c + radius * self.nodes), dtype=float)
        return float(self.weights @ vals)
