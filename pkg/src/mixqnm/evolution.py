"""Closed-form time evolution of populations and coherence.

The leading-order solution evolves each 4x4 block by its QNM sum; the
A-part picks up thermal fixed points from the noise column, with the
noise kernel frozen at the bare frequencies.  The optional "g2-partial"
order adds the cross feed -G_A K_AB G_B (B(0) + I_B) and its B-part
mirror; those terms carry the paper's incomplete-O(g^2) caveat and power
both the rotating-wave gap and the single-species reduction.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np

from .correlator import BlockSystem, CorrelatorSpectrum
from .kernels import bose_occupation, sigma_boundary, tilde_matrix
from .spectral import ModeParams

VACUUM16 = np.array([1, 0, 0, 1, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
                    dtype=complex)


class EvolutionError(ValueError):
    pass


@dataclass
class Trajectory:
    tgrid: np.ndarray
    A: np.ndarray        # (T,4) complex, A_k block
    A_mk: np.ndarray     # (T,4)
    B: np.ndarray        # (T,4), B_k block
    B_star: np.ndarray   # (T,4)
    A_vac: np.ndarray    # (T,4)
    A_exc: np.ndarray    # (T,4)
    regime: str
    provenance: str
    phi: np.ndarray | None = None
    pi: np.ndarray | None = None
    keep_order: str = "leading"
    rich_err: np.ndarray | None = field(default=None, repr=False)

    def d_vector(self) -> np.ndarray:
        return np.concatenate([self.A, self.A_mk, self.B, self.B_star], axis=1)


@dataclass
class Observables:
    S: np.ndarray        # (T,4) real Stokes parameters (excitation part)
    Ntilde: np.ndarray   # (T,2) normalized populations
    N_raw: np.ndarray    # (T,2) bare populations (A_cc - 1)/2


def _growth(s: complex, t: np.ndarray) -> np.ndarray:
    """(1 - exp(s t)) / (-s) = (exp(s t) - 1)/s, stable for |s t| -> 0."""
    t = np.asarray(t, dtype=float)
    st = s * t
    out = np.empty(t.shape, dtype=complex)
    small = np.abs(st) < 1e-6
    sts = st[small]
    out[small] = t[small] * (1.0 + 0.5 * sts + sts * sts / 6.0)
    if (~small).any():
        out[~small] = (np.exp(st[~small]) - 1.0) / s
    return out


def check_initial(initial: np.ndarray) -> np.ndarray:
    """Hermiticity and vacuum-floor preconditions of D(0-)."""
    initial = np.asarray(initial, dtype=complex)
    if initial.shape != (16,):
        raise EvolutionError("initial correlator vector must have 16 entries")
    for off in (0, 4):
        a = initial[off:off + 4]
        if abs(a[1] - a[2].conjugate()) > 1e-10:
            raise EvolutionError("initial A12 must equal conj(A21)")
        if abs(a[0].imag) > 1e-10 or abs(a[3].imag) > 1e-10:
            raise EvolutionError("initial diagonal A entries must be real")
        if a[0].real < 1.0 - 1e-9 or a[3].real < 1.0 - 1e-9:
            raise EvolutionError(
                "anticommutator diagonal below the vacuum floor of 1")
    b, bs = initial[8:12], initial[12:16]
    if np.abs(bs - b.conjugate()).max() > 1e-10:
        raise EvolutionError("initial B* must equal conj(B)")
    return initial


def nearly_degenerate_noise(blocks: BlockSystem,
                            thermal: bool = True) -> np.ndarray:
    """N(0) of one A block in the (2n(wbar)+1)/(2 wbar) * Sigma_vec form.

    thermal=False drops the Bose factor (the vacuum share of 2n+1).
    """
    params = blocks.params
    wb = params.omega_bar
    sig_i = sigma_boundary(blocks.model, wb).imag
    vec = (2.0 * sig_i).reshape(-1).astype(complex)  # rho(wbar) entries
    pref = (2.0 * bose_occupation(params.beta, wb) + 1.0) if thermal else 1.0
    return pref / (2.0 * wb) * vec


def _block_mode_sum(modes, weights, tgrid):
    """sum_i exp(s_i t) * (R_i @ w) for one 4-dim block."""
    out = np.zeros((tgrid.size, 4), dtype=complex)
    for m, w in zip(modes, weights):
        out += np.outer(np.exp(m.pole * tgrid), w)
    return out


def _a_block_nearly_deg(modes, a0, nvec, tgrid):
    hom = np.zeros((tgrid.size, 4), dtype=complex)
    inh = np.zeros((tgrid.size, 4), dtype=complex)
    for m in modes:
        hom += np.outer(np.exp(m.pole * tgrid), m.residue @ a0)
        inh += np.outer(_growth(m.pole, tgrid), m.residue @ nvec)
    return hom + inh


def _a_block_diagonal(blocks, modes, a0, tgrid, bare):
    """Per-component solution A_i = A_i(0) e^{s_i t} + (N_i(0) - N_i(s_i^0) e^{s_i t})/(-s_i)."""
    out = np.zeros((tgrid.size, 4), dtype=complex)
    n0 = blocks.n_vector(0.0)[0:4]
    for idx, m in enumerate(modes):
        s = m.pole
        nb = blocks.n_vector(bare[idx])[0:4]
        hom = a0[idx] * np.exp(s * tgrid)
        inh = (n0[idx] - nb[idx] * np.exp(s * tgrid)) / (-s) if s != 0 \
            else np.zeros_like(tgrid, dtype=complex)
        out[:, idx] = hom + inh
    return out


def _cross_feed(blocks, recv_modes, src_modes, source0, nsrc_slice, kname,
                tgrid, slow_on_source: bool):
    """-L^-1[ G_X K_XY G_Y (Y(0) + I_Y) ] for the receiving part X.

    Modes are (s_dressed, s_bare, R 8x8).  Kernel arguments are frozen at
    the bare pole carrying each exponential and pole differences are taken
    bare.  For the noise feed only the 1/s pole and the slow O(g^2) pole
    are kept; the slow pole sits on the A side, i.e. on the receiver when
    X = A (slow_on_source=False) and on the source when X = B.
    """
    T = tgrid.size
    out = np.zeros((T, 8), dtype=complex)
    k_at = {}

    def K(s0):
        key = complex(s0)
        if key not in k_at:
            k_at[key] = blocks.k_block(kname, key)
        return k_at[key]

    n_at = {}

    def N(s0):
        key = complex(s0)
        if key not in n_at:
            n_at[key] = blocks.n_vector(key)[nsrc_slice]
        return n_at[key]

    for si, si0, Ri in recv_modes:
        for sj, sj0, Rj in src_modes:
            dji = si0 - sj0
            # initial-condition feed: both poles kept
            ci = Ri @ K(si0) @ (Rj @ source0) / dji
            cj = Ri @ K(sj0) @ (Rj @ source0) / dji
            out -= np.outer(np.exp(si * tgrid), ci)
            out += np.outer(np.exp(sj * tgrid), cj)
            # noise feed: 1/s pole plus the slow-pole share
            if slow_on_source:
                s_slow, s_slow0, s_fast0 = sj, sj0, si0
                carrier = np.exp(sj * tgrid)
            else:
                s_slow, s_slow0, s_fast0 = si, si0, sj0
                carrier = np.exp(si * tgrid)
            c0 = Ri @ K(0.0) @ (Rj @ N(0.0)) / (s_slow * s_fast0)
            cs = Ri @ K(s_slow0) @ (Rj @ N(s_slow0)) \
                / (s_slow * (s_slow0 - s_fast0))
            out -= c0[None, :]
            out -= np.outer(carrier, cs)
    return out


def _embed(modes_k, modes_mk):
    """8x8 residues for a pair of 4-dim blocks."""
    out = []
    for m in modes_k:
        r = np.zeros((8, 8), dtype=complex)
        r[0:4, 0:4] = m.residue
        out.append((m.pole, m.bare, r))
    for m in modes_mk:
        r = np.zeros((8, 8), dtype=complex)
        r[4:8, 4:8] = m.residue
        out.append((m.pole, m.bare, r))
    return out


@dataclass
class _Mode4:
    pole: complex
    bare: complex
    residue: np.ndarray


def _bare_pole(blocks, block, c, d):
    w1, w2 = blocks.params.omega
    w = {1: w1, 2: w2}
    if block in ("A_k", "A_mk"):
        return 1j * (w[c] - w[d])
    if block == "B_k":
        return -1j * (w[c] + w[d])
    return 1j * (w[c] + w[d])


def _collect(spec: CorrelatorSpectrum, blocks, block):
    return [_Mode4(m.pole, _bare_pole(blocks, block, m.c, m.d), m.residue)
            for m in spec.block_modes(block)]


def evolve_correlators(spec: CorrelatorSpectrum, blocks: BlockSystem,
                       initial, tgrid, regime: str | None = None,
                       keep_order: str = "leading") -> Trajectory:
    """Closed-form trajectory of the 16 equal-time correlators."""
    if regime is None:
        regime = spec.regime
    if regime != spec.regime:
        raise EvolutionError("regime mismatch between spectrum and request")
    if keep_order not in ("leading", "g2-partial"):
        raise EvolutionError(f"unknown keep_order {keep_order!r}")
    initial = check_initial(initial)
    tgrid = np.asarray(tgrid, dtype=float)
    if tgrid.ndim != 1 or np.any(np.diff(tgrid) < 0):
        raise EvolutionError("tgrid must be ascending")

    params = blocks.params
    gmax = float(np.max([-m.pole.real for m in spec.modes]))
    if np.isfinite(params.beta) and params.beta * gmax > 0.1:
        warnings.warn("beta * Gamma > 0.1: the frozen Bose-factor "
                      "truncation of the noise kernel is marginal here")

    a0k, a0mk = initial[0:4], initial[4:8]
    b0, bs0 = initial[8:12], initial[12:16]
    mk = {blk: _collect(spec, blocks, blk) for blk in
          ("A_k", "A_mk", "B_k", "B_ks")}

    vac4 = np.array([1, 0, 0, 1], dtype=complex)
    if regime == "nearly_degenerate":
        nv_th = nearly_degenerate_noise(blocks, thermal=True)
        nv_vac = nearly_degenerate_noise(blocks, thermal=False)
        A = _a_block_nearly_deg(mk["A_k"], a0k, nv_th, tgrid)
        A_mk = _a_block_nearly_deg(mk["A_mk"], a0mk, nv_th, tgrid)
        A_vac = _a_block_nearly_deg(mk["A_k"], vac4, nv_vac, tgrid)
    else:
        bare_a = [m.bare for m in mk["A_k"]]
        A = _a_block_diagonal(blocks, mk["A_k"], a0k, tgrid, bare_a)
        A_mk = _a_block_diagonal(blocks, mk["A_mk"], a0mk, tgrid, bare_a)
        A_vac = np.tile(vac4, (tgrid.size, 1))

    B = np.zeros((tgrid.size, 4), dtype=complex)
    Bs = np.zeros((tgrid.size, 4), dtype=complex)
    if regime == "nearly_degenerate":
        for m in mk["B_k"]:
            B += np.outer(np.exp(m.pole * tgrid), m.residue @ b0)
        for m in mk["B_ks"]:
            Bs += np.outer(np.exp(m.pole * tgrid), m.residue @ bs0)
    else:
        for idx, m in enumerate(mk["B_k"]):
            B[:, idx] = b0[idx] * np.exp(m.pole * tgrid)
        for idx, m in enumerate(mk["B_ks"]):
            Bs[:, idx] = bs0[idx] * np.exp(m.pole * tgrid)

    if keep_order == "g2-partial":
        a8 = _embed(mk["A_k"], mk["A_mk"])
        b8 = _embed(mk["B_k"], mk["B_ks"])
        src_b = np.concatenate([b0, bs0])
        crossA = _cross_feed(blocks, a8, b8, src_b, slice(8, 16), "AB", tgrid,
                             slow_on_source=False)
        A = A + crossA[:, 0:4]
        A_mk = A_mk + crossA[:, 4:8]
        # B-part O(g^2): its own noise feed plus the A-sourced cross term
        n0b = blocks.n_vector(0.0)
        for m in mk["B_k"]:
            nbar = blocks.n_vector(m.bare)[8:12]
            B += (np.outer(np.exp(m.pole * tgrid), m.residue @ nbar)
                  - (m.residue @ n0b[8:12])[None, :]) / m.pole
        for m in mk["B_ks"]:
            nbar = blocks.n_vector(m.bare)[12:16]
            Bs += (np.outer(np.exp(m.pole * tgrid), m.residue @ nbar)
                   - (m.residue @ n0b[12:16])[None, :]) / m.pole
        src_a = np.concatenate([a0k, a0mk])
        crossB = _cross_feed(blocks, b8, a8, src_a, slice(0, 8), "BA", tgrid,
                             slow_on_source=True)
        B = B + crossB[:, 0:4]
        Bs = Bs + crossB[:, 4:8]

    prov = f"{regime}:{_phash(params)}"
    return Trajectory(tgrid=tgrid, A=A, A_mk=A_mk, B=B, B_star=Bs,
                      A_vac=A_vac, A_exc=A - A_vac, regime=regime,
                      provenance=prov, keep_order=keep_order)


def _phash(params: ModeParams) -> str:
    key = repr((params.m, params.kmag, params.beta)).encode()
    return hashlib.sha256(key).hexdigest()[:12]


def observables(traj: Trajectory, regime: str | None = None) -> Observables:
    """Stokes parameters and normalized populations from a trajectory."""
    if regime is None:
        regime = traj.regime
    A, Ae, Av = traj.A, traj.A_exc, traj.A_vac
    if np.min(Av[:, 0].real) < 0.5 or np.min(Av[:, 3].real) < 0.5:
        raise EvolutionError("vacuum correlator collapsed below 1/2; "
                             "parameters are outside the validity domain")
    S = np.empty((A.shape[0], 4))
    S[:, 0] = 0.5 * (Ae[:, 0] + Ae[:, 3]).real
    S[:, 1] = 0.5 * (Ae[:, 0] - Ae[:, 3]).real
    S[:, 2] = 0.5 * (Ae[:, 1] + Ae[:, 2]).real
    S[:, 3] = (0.5 * (Ae[:, 1] - Ae[:, 2]) / 1j).real
    ntil = np.empty((A.shape[0], 2))
    ntil[:, 0] = (Ae[:, 0] / (2.0 * Av[:, 0])).real
    ntil[:, 1] = (Ae[:, 3] / (2.0 * Av[:, 3])).real
    nraw = 0.5 * np.stack([(A[:, 0] - 1.0).real, (A[:, 3] - 1.0).real], axis=1)
    return Observables(S=S, Ntilde=ntil, N_raw=nraw)


def auto_tmax(spec: CorrelatorSpectrum, factor: float = 6.0,
              clamp: float = 1e6) -> float:
    gmin = min(max(-m.pole.real, 0.0) for m in spec.modes)
    if gmin <= 0:
        return clamp
    return min(factor / gmin, clamp)


def final_value(blocks: BlockSystem, spec: CorrelatorSpectrum | None = None,
                initial=None) -> tuple[np.ndarray, np.ndarray]:
    """Asymptotic state from the s -> 0 linear solve (no regime branching).

    G_D^-1(0) D_inf = N(0) with exact boundary-value kernels; the initial
    data is irrelevant once every pole decays, which is checked when a
    spectrum is supplied.
    """
    if spec is not None:
        worst = max(m.pole.real for m in spec.modes)
        if worst >= 0:
            raise EvolutionError(
                f"limit does not exist: pole with Re s = {worst:.3e} >= 0")
    g0 = blocks.gd_inverse(0.0)
    cond = np.linalg.cond(g0)
    if not np.isfinite(cond) or cond > 1e12:
        raise EvolutionError(f"singular final-value system (cond={cond:.2e})")
    d_inf = np.linalg.solve(g0, blocks.n_vector(0.0))
    return np.zeros(2), d_inf
