"""Quasi-normal modes of the field-amplitude Green's function.

The 2x2 Green's function in the Laplace domain is

    G^-1(s) = [[s^2 + w1^2 + S11(s), S12(s)], [S21(s), s^2 + w2^2 + S22(s)]]

with the self-energy truncated at the bare poles.  Poles and residues are
kept to the order that is consistent in each mass-degeneracy regime; the
general biquadratic root evaluation is retained as a diagnostic.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelMatrix, boundary_kernels, sigma_boundary
from .spectral import ModeParams, SpectralModel

REGIMES = ("non_degenerate", "nearly_degenerate",
           "hierarchy_g1sq", "hierarchy_g1g2")
A_LABELS = ("a1", "a1+", "a2", "a2+")

_D_TINY = 1e-300


class DegenerateResidueError(ArithmeticError):
    """Residue denominators blow up; use the nearly-degenerate branch."""


def classify_regime(model: SpectralModel, params: ModeParams,
                    kern: KernelMatrix | None = None, kappa: float = 10.0,
                    hierarchy_ratio: float = 10.0,
                    force: str | None = None) -> str:
    """Pick the mass-degeneracy regime for the QNM truncation.

    Nearly degenerate when |w1^2 - w2^2| <= kappa * max|Sigma_I(i wbar)|;
    the dissipative part sets the comparison scale.  Inside that window a
    coupling-strength ratio >= hierarchy_ratio selects the hierarchy
    sub-branches, split by the mass gap against the strong field's
    Sigma_I.  `force` overrides everything.
    """
    if force is not None:
        if force not in REGIMES:
            raise ValueError(f"unknown regime {force!r}")
        return force
    w1, w2 = params.omega
    gap = abs(w1 * w1 - w2 * w2)
    if model.is_zero():
        return "non_degenerate" if gap > 0 else "nearly_degenerate"
    if kern is None:
        kern = boundary_kernels(model, params, params.omega_bar, tilde=False)
    scale = float(np.abs(kern.sigma_I).max())
    if gap > kappa * scale:
        return "non_degenerate"
    g1, g2 = model.coupling_scales()
    ratio = math.inf if min(g1, g2) == 0 else max(g1, g2) / min(g1, g2)
    if ratio >= hierarchy_ratio:
        strong = 0 if g1 >= g2 else 1
        s_strong = abs(kern.sigma_I[strong, strong])
        return "hierarchy_g1sq" if gap >= s_strong else "hierarchy_g1g2"
    return "nearly_degenerate"


@dataclass
class QnmMode:
    label: str
    pole: complex
    residue: np.ndarray
    bare_pole: complex
    matrix: np.ndarray  # bracket factor; residue = matrix / (2 * pole-like)


@dataclass
class AmplitudeSpectrum:
    modes: dict[str, QnmMode]
    regime: str
    aux: dict
    Omega: np.ndarray
    Gamma: np.ndarray
    u_freqs: tuple[float, float]
    g_max: float = 0.0
    params: ModeParams = field(repr=False, default=None)

    def mode(self, label: str) -> QnmMode:
        return self.modes[label]

    @property
    def mode_list(self) -> list[QnmMode]:
        return [self.modes[lb] for lb in A_LABELS]


def _choose_D(delta2: complex, prod: complex) -> complex:
    """Square-root branch of D = sqrt(Delta2^2 + 4 S12 S21).

    Aligned with Delta2 when the mass gap dominates (g -> 0 continuity,
    so the '+D' pole tracks field 1); at exact degeneracy the branch with
    Im(D) >= 0 makes a1 the faster-decaying mode, matching the rank-1
    dark-mode convention.
    """
    d = cmath.sqrt(delta2 * delta2 + prod)
    if abs(delta2) > 1e-10 * max(abs(d), _D_TINY):
        if (d * delta2.conjugate()).real < 0:
            d = -d
    elif d.imag < 0:
        d = -d
    return d


def _omega2_D_delta2(params: ModeParams, sig: np.ndarray):
    w1, w2 = params.omega
    omega2 = w1 * w1 + w2 * w2 + sig[0, 0] + sig[1, 1]
    delta2 = w1 * w1 - w2 * w2 + sig[0, 0] - sig[1, 1]
    d = _choose_D(delta2, 4.0 * sig[0, 1] * sig[1, 0])
    return omega2, d, delta2


def _general_pole_candidates(params, sig):
    omega2, d, _ = _omega2_D_delta2(params, sig)
    return (-1j * cmath.sqrt(0.5 * (omega2 + d)),
            -1j * cmath.sqrt(0.5 * (omega2 - d)))


def amplitude_spectrum(model: SpectralModel, params: ModeParams,
                       regime: str | None = None) -> AmplitudeSpectrum:
    """Four-mode amplitude spectrum with regime-consistent truncation."""
    if regime is None:
        regime = classify_regime(model, params)
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    w1, w2 = params.omega
    wb = params.omega_bar

    aux: dict = {"Omega2": {}, "D": {}, "Delta2": {}, "general_poles": {},
                 "branch_mismatch": False}
    bare = {"a1": -1j * w1, "a1+": 1j * w1, "a2": -1j * w2, "a2+": 1j * w2}
    for lb, s0 in bare.items():
        sig = sigma_boundary(model, s0.imag)
        o2, d, d2 = _omega2_D_delta2(params, sig)
        aux["Omega2"][lb] = o2
        aux["D"][lb] = d
        aux["Delta2"][lb] = d2
        plus, minus = _general_pole_candidates(params, sig)
        target = s0 if s0.imag < 0 else s0.conjugate()
        cand = plus if abs(plus - target) <= abs(minus - target) else minus
        cand = cand if s0.imag < 0 else cand.conjugate()
        aux["general_poles"][lb] = cand
    # the two bare-pole families must not collapse onto one dressed root
    if abs(aux["general_poles"]["a1"] - aux["general_poles"]["a2"]) < 1e-14 \
            and abs(w1 - w2) > 1e-12:
        aux["branch_mismatch"] = True
        warnings.warn("general-pole branch matching is ambiguous; "
                      "dressed roots collapsed onto one bare pole")

    modes: dict[str, QnmMode] = {}
    if regime == "non_degenerate":
        dw2 = w1 * w1 - w2 * w2
        for lb, wc, idx in (("a1+", w1, 0), ("a2+", w2, 1)):
            s0 = 1j * wc
            sig = sigma_boundary(model, wc)
            if abs(aux["D"][lb]) < 1e-12 * abs(aux["Omega2"][lb]):
                raise DegenerateResidueError(
                    "degenerate-D singularity: use the nearly-degenerate branch")
            pole = s0 + 1j * sig[idx, idx] / (2.0 * wc)
            m = np.zeros((2, 2), dtype=complex)
            m[idx, idx] = 1.0
            off = sig[0, 1] / dw2 if idx == 0 else sig[0, 1] / (-dw2)
            off_t = sig[1, 0] / dw2 if idx == 0 else sig[1, 0] / (-dw2)
            m[0, 1] = off
            m[1, 0] = off_t
            res = m / (2.0 * pole)
            modes[lb] = QnmMode(lb, pole, res, s0, m)
        u_freqs = (w1, w2)
    else:
        sig = sigma_boundary(model, wb)
        o2, d, d2 = _omega2_D_delta2(params, sig)
        tr = sig[0, 0] + sig[1, 1]
        if abs(d) < 1e-30:
            # zero coupling at exact degeneracy: canonical mode split
            m_plus = np.diag([1.0, 0.0]).astype(complex)
            m_minus = np.diag([0.0, 1.0]).astype(complex)
            pole1 = 1j * wb
            pole2 = 1j * wb
        else:
            half_d2 = 0.5 * d2 / d
            m_plus = np.array([[0.5 + half_d2, sig[0, 1] / d],
                               [sig[1, 0] / d, 0.5 - half_d2]])
            m_minus = np.array([[0.5 - half_d2, -sig[0, 1] / d],
                                [-sig[1, 0] / d, 0.5 + half_d2]])
            pole1 = 1j * wb + 1j * (d + tr) / (4.0 * wb)
            pole2 = 1j * wb + 1j * (-d + tr) / (4.0 * wb)
        s0 = 1j * wb
        modes["a1+"] = QnmMode("a1+", pole1, m_plus / (2.0 * s0), s0, m_plus)
        modes["a2+"] = QnmMode("a2+", pole2, m_minus / (2.0 * s0), s0, m_minus)
        u_freqs = (wb, wb)

    for lb in ("a1", "a2"):
        m = modes[lb + "+"]
        modes[lb] = QnmMode(lb, m.pole.conjugate(), m.residue.conjugate(),
                            m.bare_pole.conjugate(), m.matrix.conjugate())

    gam = np.array([-modes["a1+"].pole.real, -modes["a2+"].pole.real])
    omg = np.array([abs(modes["a1+"].pole.imag), abs(modes["a2+"].pole.imag)])
    return AmplitudeSpectrum(modes=modes, regime=regime, aux=aux,
                             Omega=omg, Gamma=gam, u_freqs=u_freqs,
                             g_max=model.max_coupling(), params=params)


def _mode_sum(spec: AmplitudeSpectrum, tgrid, order: int) -> np.ndarray:
    """sum_i s_i^order * G_i * exp(s_i t); shape (T, 2, 2) complex."""
    tgrid = np.atleast_1d(np.asarray(tgrid, dtype=float))
    out = np.zeros((tgrid.size, 2, 2), dtype=complex)
    for m in spec.mode_list:
        out += np.multiply.outer(np.exp(m.pole * tgrid),
                                 (m.pole ** order) * m.residue)
    return out


def greens_time(spec: AmplitudeSpectrum, tgrid) -> np.ndarray:
    """Real G(t) on a time grid; imaginary residue must be conjugate noise."""
    g = _mode_sum(spec, tgrid, 0)
    scale = max(np.abs(g).max(), 1e-30)
    immax = np.abs(g.imag).max()
    if immax > 1e-12 * scale:
        raise ArithmeticError(
            f"conjugate pairing violated: imaginary part {immax:.2e}")
    out = g.real
    return out[0] if np.isscalar(tgrid) or np.ndim(tgrid) == 0 else out


def evolve_amplitudes(spec: AmplitudeSpectrum, phi0, pi0, tgrid):
    """Mean field and momentum trajectories from the QNM mode sum.

    phi(t) = Gdot(t) phi0 + G(t) pi0,  pi(t) = Gdot(t) pi0 + Gddot(t) phi0.
    """
    tgrid = np.asarray(tgrid, dtype=float)
    if tgrid.ndim != 1 or tgrid.size == 0 or np.any(np.diff(tgrid) < 0):
        raise ValueError("tgrid must be ascending")
    phi0 = np.asarray(phi0, dtype=float)
    pi0 = np.asarray(pi0, dtype=float)
    g0 = _mode_sum(spec, tgrid, 0).real
    g1 = _mode_sum(spec, tgrid, 1).real
    g2 = _mode_sum(spec, tgrid, 2).real
    phi = g1 @ phi0 + g0 @ pi0
    pi = g1 @ pi0 + g2 @ phi0
    return phi, pi
