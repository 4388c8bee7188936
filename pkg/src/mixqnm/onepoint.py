"""One-point (ladder-operator) quasi-normal modes from the amplitude modes.

The dimensionless one-point functions <a>, <a+> inherit the amplitude
poles; their residues follow from linear maps of the amplitude residues
built out of U_phi = diag(1/sqrt(2 w_c)) and U_pi = diag(-i sqrt(w_c/2)).
The kept maps are evaluated at the bare poles (the paper's leading-order
truncation); the dropped maps are recorded at the dressed poles as
order diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .amplitude import AmplitudeSpectrum, QnmMode
from .spectral import ModeParams


def _bracket(kind: str, s: complex, u: tuple[float, float]) -> np.ndarray:
    """Entrywise factor of the residue map; kind in {aa, aad, adad, ada}."""
    u1, u2 = u
    r = np.sqrt(np.array([[u1 / u1, u1 / u2], [u2 / u1, u2 / u2]]))
    sym = r + r.T  # sqrt(uc/ud) + sqrt(ud/uc)
    asym = r - r.T
    geo = np.sqrt(np.array([[u1 * u1, u1 * u2], [u1 * u2, u2 * u2]]))
    if kind == "aa":
        return 0.5 * (s * sym - 1j * geo + 1j * s * s / geo)
    if kind == "aad":
        return 0.5 * (s * asym + 1j * geo + 1j * s * s / geo)
    if kind == "adad":
        return 0.5 * (s * sym + 1j * geo - 1j * s * s / geo)
    if kind == "ada":
        return 0.5 * (s * asym - 1j * geo - 1j * s * s / geo)
    raise ValueError(kind)


def f_map(kind: str, residue: np.ndarray, s: complex,
          u: tuple[float, float]) -> np.ndarray:
    return _bracket(kind, s, u) * residue


@dataclass
class OnePointSpectrum:
    modes_a: dict[str, QnmMode]
    modes_adag: dict[str, QnmMode]
    discarded_orders: dict[str, float]
    regime: str
    u_freqs: tuple[float, float]

    def mode(self, label: str) -> QnmMode:
        return self.modes_adag[label] if label.endswith("+") else self.modes_a[label]


def onepoint_spectrum(amp: AmplitudeSpectrum,
                      params: ModeParams) -> OnePointSpectrum:
    """Kept QNMs of <a>, <a+> plus dropped-order diagnostics."""
    u = amp.u_freqs
    modes_a = {}
    modes_adag = {}
    for c in (1, 2):
        ma = amp.mode(f"a{c}")
        bare_res = ma.matrix / (2.0 * ma.bare_pole)
        res_a = f_map("aa", bare_res, ma.bare_pole, u)
        modes_a[f"a{c}"] = QnmMode(f"a{c}", ma.pole, res_a, ma.bare_pole,
                                   ma.matrix)
        md = amp.mode(f"a{c}+")
        bare_res_d = md.matrix / (2.0 * md.bare_pole)
        res_d = f_map("adad", bare_res_d, md.bare_pole, u)
        modes_adag[f"a{c}+"] = QnmMode(f"a{c}+", md.pole, res_d, md.bare_pole,
                                       md.matrix)
        pair_gap = np.abs(res_a.conj() - res_d).max()
        if pair_gap > 1e-12 * max(1.0, np.abs(res_a).max()):
            raise ArithmeticError(
                f"conjugate pairing of one-point residues broken: {pair_gap:.2e}")

    discarded = {}
    for c in (1, 2):
        md = amp.mode(f"a{c}+")
        # F_aa applied to a daggered amplitude mode: O(g^4), dropped
        discarded[f"aa[a{c}+]"] = float(
            np.abs(f_map("aa", md.residue, md.pole, u)).max())
        ma = amp.mode(f"a{c}")
        discarded[f"adad[a{c}]"] = float(
            np.abs(f_map("adad", ma.residue, ma.pole, u)).max())
        # cross maps a<->a+: O(g^2), dropped as evolution drivers
        discarded[f"aad[a{c}]"] = float(
            np.abs(f_map("aad", ma.residue, ma.pole, u)).max())
        discarded[f"ada[a{c}+]"] = float(
            np.abs(f_map("ada", md.residue, md.pole, u)).max())

    kept_scale = max(np.abs(m.residue).max()
                     for m in list(modes_a.values()) + list(modes_adag.values()))
    g4 = max(discarded[f"aa[a{c}+]"] for c in (1, 2))
    # dropped g^4-class terms must stay far below the kept residues
    if g4 > 10.0 * kept_scale * max(1e-12, amp.g_max ** 4):
        raise ArithmeticError(
            f"dropped O(g^4) one-point terms too large: {g4:.2e}")
    return OnePointSpectrum(modes_a=modes_a, modes_adag=modes_adag,
                            discarded_orders=discarded, regime=amp.regime,
                            u_freqs=u)
