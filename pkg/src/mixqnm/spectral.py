"""Parametric bath spectral densities for the two-field mixing problem.

The bath enters the dynamics only through the 2x2 spectral density
rho_ab(k0).  Each channel contributes a rank-one coupling matrix
g_a*g_b times an odd scalar shape J(k0), so hermiticity, oddness in k0
and positive semidefiniteness for k0 > 0 hold by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SHAPES = ("ohmic-gaussian", "ohmic-lorentzian")


class ModelError(ValueError):
    """Raised for invalid spectral-model or mode parameters."""


def _shape_j(shape: str, lam: float, k0):
    """Odd scalar shape J(k0); positive for k0 > 0."""
    k0 = np.asarray(k0, dtype=float)
    if shape == "ohmic-gaussian":
        return k0 * np.exp(-(k0 * k0) / (lam * lam))
    if shape == "ohmic-lorentzian":
        return k0 * lam**4 / (k0 * k0 + lam * lam) ** 2
    raise ModelError(f"unknown shape {shape!r}")


@dataclass(frozen=True)
class Channel:
    g: tuple[float, float]
    shape: str = "ohmic-gaussian"
    lam: float = 10.0
    weight: float = 1.0

    def coupling_matrix(self) -> np.ndarray:
        g = np.asarray(self.g, dtype=float)
        return self.weight * np.outer(g, g)

    def j(self, k0):
        return _shape_j(self.shape, self.lam, k0)


@dataclass(frozen=True)
class SpectralModel:
    channels: tuple[Channel, ...]
    k_dependence: str = "none"

    def rho_matrix(self, k0) -> np.ndarray:
        """2x2 spectral density rho_ab(k0); odd in k0, symmetric in (a,b)."""
        k0 = np.asarray(k0, dtype=float)
        out = np.zeros(k0.shape + (2, 2))
        for ch in self.channels:
            out += np.multiply.outer(ch.j(k0), ch.coupling_matrix())
        return out

    def rho(self, a: int, b: int, k0) -> float | np.ndarray:
        """rho_ab(k0) with 1-based field indices a, b."""
        if a not in (1, 2) or b not in (1, 2):
            raise ModelError("field indices must be 1 or 2")
        k0 = np.asarray(k0, dtype=float)
        val = np.zeros_like(k0)
        for ch in self.channels:
            val = val + ch.weight * ch.g[a - 1] * ch.g[b - 1] * ch.j(k0)
        return val if val.ndim else float(val)

    def coupling_scales(self) -> tuple[float, float]:
        """Effective per-field coupling sqrt(sum_ch w*g_c^2)."""
        g1 = math.sqrt(sum(ch.weight * ch.g[0] ** 2 for ch in self.channels))
        g2 = math.sqrt(sum(ch.weight * ch.g[1] ** 2 for ch in self.channels))
        return g1, g2

    def max_coupling(self) -> float:
        return max(self.coupling_scales())

    def is_zero(self) -> bool:
        return all(ch.g[0] == 0.0 and ch.g[1] == 0.0 for ch in self.channels)


def build_model(config: dict) -> SpectralModel:
    """Build a validated SpectralModel from the model section of a run config."""
    if not isinstance(config, dict):
        raise ModelError("model section must be a mapping")
    raw_channels = config.get("channels")
    if not raw_channels:
        raise ModelError("empty channel list")
    channels = []
    for i, ch in enumerate(raw_channels):
        g = ch.get("g")
        if g is None or len(g) != 2:
            raise ModelError(f"channel {i}: coupling g must be a 2-vector")
        g = (float(g[0]), float(g[1]))
        if any(math.isnan(x) for x in g):
            raise ModelError(f"channel {i}: NaN coupling")
        shape = ch.get("shape", "ohmic-gaussian")
        if shape not in SHAPES:
            raise ModelError(f"channel {i}: unknown shape {shape!r}")
        lam = float(ch.get("lambda", ch.get("lam", 0.0)))
        if not lam > 0.0:
            raise ModelError(f"channel {i}: non-positive cutoff")
        weight = float(ch.get("weight", 1.0))
        if weight < 0.0 or math.isnan(weight):
            raise ModelError(f"channel {i}: negative weight")
        channels.append(Channel(g=g, shape=shape, lam=lam, weight=weight))
    k_dep = config.get("k_dependence", "none")
    if k_dep != "none":
        raise ModelError("only k_dependence='none' is supported")
    return SpectralModel(channels=tuple(channels), k_dependence=k_dep)


@dataclass(frozen=True)
class ModeParams:
    """Masses, momentum magnitude and inverse temperature of one k-mode.

    beta may be math.inf for a zero-temperature bath.  Dispersion
    omega_c = sqrt(m_c^2 + kmag^2); omega_bar and delta are the mean and
    difference used in the nearly-degenerate formulas.
    """

    m: tuple[float, float]
    kmag: float = 0.0
    beta: float = 1.0
    omega: tuple[float, float] = field(init=False)
    omega_bar: float = field(init=False)
    delta: float = field(init=False)

    def __post_init__(self):
        if len(self.m) != 2 or any(mc < 0 for mc in self.m):
            raise ModelError("masses must be a 2-vector of non-negative reals")
        if self.kmag < 0:
            raise ModelError("kmag must be non-negative")
        if not (self.beta > 0):
            raise ModelError("beta must be positive (math.inf for T=0)")
        w = tuple(math.sqrt(mc * mc + self.kmag * self.kmag) for mc in self.m)
        if min(w) <= 0.0:
            raise ModelError("mode frequencies must be positive")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "omega_bar", 0.5 * (w[0] + w[1]))
        object.__setattr__(self, "delta", w[0] - w[1])


@dataclass
class SymmetryReport:
    odd_violation: float
    symmetry_violation: float
    psd_violation: float
    tol: float = 1e-14

    @property
    def passed(self) -> bool:
        return max(self.odd_violation, self.symmetry_violation,
                   self.psd_violation) <= self.tol


def validate_symmetries(model: SpectralModel, k0_grid, rho_fn=None,
                        tol: float = 1e-14) -> SymmetryReport:
    """Check oddness, matrix symmetry and PSD of rho on a k0 grid.

    rho_fn(k0) -> 2x2 overrides the model evaluation (test hook for
    injecting a broken spectral density).
    """
    k0_grid = np.asarray(k0_grid, dtype=float)
    if k0_grid.size == 0:
        raise ModelError("empty k0 grid")
    rho = rho_fn if rho_fn is not None else model.rho_matrix

    odd = 0.0
    sym = 0.0
    psd = 0.0
    for k0 in k0_grid:
        rp = np.asarray(rho(k0), dtype=float)
        rm = np.asarray(rho(-k0), dtype=float)
        scale = max(1.0, np.abs(rp).max())
        odd = max(odd, np.abs(rm + rp.T).max() / scale)
        sym = max(sym, np.abs(rp - rp.T).max() / scale)
        if k0 > 0:
            w = np.linalg.eigvalsh(0.5 * (rp + rp.T))
            tr = max(np.trace(rp), 1e-300)
            psd = max(psd, max(0.0, -w.min()) / tr)
    return SymmetryReport(odd_violation=odd, symmetry_violation=sym,
                          psd_violation=psd, tol=tol)
