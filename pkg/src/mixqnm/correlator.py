"""The 16-dimensional equal-time correlator system and its QNM spectrum.

State ordering: D = (A_k, A_-k, B_k, B_k*) with each 4-vector in (11, 12,
21, 22) order.  The memory matrix K and the noise column N are stored as
sparse term lists (coef, a, b, shift): a term contributes

    coef * i * Sigma~_ab(s + i*shift)   [K, Laplace domain]
    coef * i * Sigma~_ab(tau) * exp(-i*shift*tau)   [K, time domain]

and analogously without the i factor for N with the noise kernel.  The
same pattern table therefore feeds the Laplace-domain blocks, the
final-value solve and the time-domain Volterra oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .amplitude import AmplitudeSpectrum
from .kernels import noise_boundary, sigma_boundary, tilde_matrix
from .onepoint import OnePointSpectrum
from .spectral import ModeParams, SpectralModel

BLOCKS = ("A_k", "A_mk", "B_k", "B_ks")
PAIRS = ((1, 1), (1, 2), (2, 1), (2, 2))


def layout() -> list[str]:
    """Index map of the 16-component correlator vector."""
    names = []
    for blk in ("A_k", "A_-k", "B_k", "B_k*"):
        for c, d in PAIRS:
            names.append(f"{blk}[{c}{d}]")
    return names


def _k_patterns(w1: float, w2: float):
    """Nonzero entries of the diagonal and cross K blocks.

    Read off the four equations of motion: row (c,d), column (e,f); each
    delta picks one operator family, e.g. in the A_k equation the A_{bd}
    coupling contributes -i Sigma~_{ce}(s + i w_d) whenever f = d.
    """
    w = {1: w1, 2: w2}

    def KA():
        p = [[[] for _ in range(4)] for _ in range(4)]
        for r, (c, d) in enumerate(PAIRS):
            for col, (e, f) in enumerate(PAIRS):
                terms = []
                if f == d:  # A_{bd} with b = e
                    terms.append((-1.0, c, e, +w[d]))
                if e == c:  # A_{cb} with b = f
                    terms.append((+1.0, d, f, -w[c]))
                p[r][col] = terms
        return p

    def KB():
        p = [[[] for _ in range(4)] for _ in range(4)]
        for r, (c, d) in enumerate(PAIRS):
            for col, (e, f) in enumerate(PAIRS):
                terms = []
                if f == d:  # B_{bd}
                    terms.append((+1.0, c, e, +w[d]))
                if e == c:  # B_{cb}
                    terms.append((+1.0, d, f, +w[c]))
                p[r][col] = terms
        return p

    def KBs():
        p = [[[] for _ in range(4)] for _ in range(4)]
        for r, (c, d) in enumerate(PAIRS):
            for col, (e, f) in enumerate(PAIRS):
                terms = []
                if f == d:  # B*_{bd}
                    terms.append((-1.0, c, e, -w[d]))
                if e == c:  # B*_{cb}
                    terms.append((-1.0, d, f, -w[c]))
                p[r][col] = terms
        return p

    def KAB():
        # rows: A_k then A_-k; cols: B_k then B_k*
        p = [[[] for _ in range(8)] for _ in range(8)]
        for half in (0, 1):
            for r4, (c, d) in enumerate(PAIRS):
                r = 4 * half + r4
                for col4, (e, f) in enumerate(PAIRS):
                    tb, tbs = [], []
                    if half == 0:
                        if e == d:  # A_k eq, B_{db} with b = f
                            tb.append((-1.0, c, f, +w[d]))
                        if e == c:  # A_k eq, B*_{cb}
                            tbs.append((+1.0, d, f, -w[c]))
                    else:
                        if f == d:  # A_-k eq, B_{bd}
                            tb.append((-1.0, c, e, +w[d]))
                        if f == c:  # A_-k eq, B*_{bc}
                            tbs.append((+1.0, d, e, -w[c]))
                    p[r][col4] = tb
                    p[r][4 + col4] = tbs
        return p

    def KBA():
        # rows: B_k then B_k*; cols: A_k then A_-k
        p = [[[] for _ in range(8)] for _ in range(8)]
        for half in (0, 1):
            for r4, (c, d) in enumerate(PAIRS):
                r = 4 * half + r4
                for col4, (e, f) in enumerate(PAIRS):
                    tk, tmk = [], []
                    if half == 0:
                        if f == c:  # B_k eq, A_{bc,k}
                            tk.append((+1.0, d, e, +w[c]))
                        if f == d:  # B_k eq, A_{bd,-k}
                            tmk.append((+1.0, c, e, +w[d]))
                    else:
                        if e == c:  # B* eq, A_{cb,k}
                            tk.append((-1.0, d, f, -w[c]))
                        if e == d:  # B* eq, A_{db,-k}
                            tmk.append((-1.0, c, f, -w[d]))
                    p[r][col4] = tk
                    p[r][4 + col4] = tmk
        return p

    ka = KA()
    return {"A_k": ka, "A_mk": [row[:] for row in ka], "B_k": KB(),
            "B_ks": KBs(), "AB": KAB(), "BA": KBA()}


def _n_patterns(w1: float, w2: float):
    w = {1: w1, 2: w2}
    pat = []
    for blk in ("A_k", "A_mk", "B_k", "B_ks"):
        for c, d in PAIRS:
            if blk in ("A_k", "A_mk"):
                terms = [(+2.0, c, d, +w[d]), (+2.0, d, c, -w[c])]
            elif blk == "B_k":
                terms = [(-2.0, c, d, +w[d]), (-2.0, d, c, +w[c])]
            else:
                terms = [(-2.0, c, d, -w[d]), (-2.0, d, c, -w[c])]
            pat.append(terms)
    return pat


@dataclass
class BlockSystem:
    """Omega, K and N of the 16-dim system, with per-block accessors."""

    model: SpectralModel
    params: ModeParams
    _kpat: dict = field(init=False, repr=False)
    _npat: list = field(init=False, repr=False)

    def __post_init__(self):
        w1, w2 = self.params.omega
        self._kpat = _k_patterns(w1, w2)
        self._npat = _n_patterns(w1, w2)

    # -- frequency matrix ---------------------------------------------------
    def omega_vector(self) -> np.ndarray:
        w1, w2 = self.params.omega
        oa = np.array([0.0, w1 - w2, w2 - w1, 0.0])
        ob = np.array([-2 * w1, -w1 - w2, -w1 - w2, -2 * w2])
        return np.concatenate([oa, oa, ob, -ob])

    # -- Laplace-domain evaluation -------------------------------------------
    def _sigma_tilde(self, omega: float) -> np.ndarray:
        return sigma_boundary(self.model, omega) * tilde_matrix(self.params)

    def _noise_tilde(self, omega: float) -> np.ndarray:
        return noise_boundary(self.model, self.params.beta, omega) \
            * tilde_matrix(self.params)

    def _eval_terms(self, terms, s: complex, kernel) -> complex:
        tot = 0.0 + 0.0j
        for coef, a, b, sh in terms:
            # boundary value at the imaginary part: Sigma(s0) truncation
            arg = (s + 1j * sh).imag
            tot += coef * kernel(arg)[a - 1, b - 1]
        return tot

    def k_block(self, name: str, s: complex) -> np.ndarray:
        pat = self._kpat[name]
        n = len(pat)
        out = np.zeros((n, n), dtype=complex)
        for r in range(n):
            for c in range(n):
                if pat[r][c]:
                    out[r, c] = 1j * self._eval_terms(pat[r][c], s,
                                                      self._sigma_tilde)
        return out

    def k_matrix(self, s: complex) -> np.ndarray:
        out = np.zeros((16, 16), dtype=complex)
        out[0:4, 0:4] = self.k_block("A_k", s)
        out[4:8, 4:8] = self.k_block("A_mk", s)
        out[8:12, 8:12] = self.k_block("B_k", s)
        out[12:16, 12:16] = self.k_block("B_ks", s)
        out[0:8, 8:16] = self.k_block("AB", s)
        out[8:16, 0:8] = self.k_block("BA", s)
        return out

    def gd_inverse(self, s: complex) -> np.ndarray:
        return (s * np.eye(16) - 1j * np.diag(self.omega_vector())
                + self.k_matrix(s))

    def ga_inverse(self, name: str, s: complex) -> np.ndarray:
        """4x4 G_X^-1(s) for X in {A_k, A_mk, B_k, B_ks}."""
        idx = {"A_k": 0, "A_mk": 4, "B_k": 8, "B_ks": 12}[name]
        om = self.omega_vector()[idx:idx + 4]
        return s * np.eye(4) - 1j * np.diag(om) + self.k_block(name, s)

    def n_vector(self, s: complex) -> np.ndarray:
        out = np.zeros(16, dtype=complex)
        for i, terms in enumerate(self._npat):
            out[i] = self._eval_terms(terms, s, self._noise_tilde)
        return out

    # -- time-domain instantiation (for the Volterra oracle) -----------------
    def k_matrix_lattice(self, sig_lat: np.ndarray) -> np.ndarray:
        """K(tau) on a tau lattice from Sigma~(tau) values, (T,16,16)."""
        T = sig_lat.shape[0]
        taus = self._taus
        out = np.zeros((T, 16, 16), dtype=complex)
        slots = [("A_k", 0, 0), ("A_mk", 4, 4), ("B_k", 8, 8), ("B_ks", 12, 12),
                 ("AB", 0, 8), ("BA", 8, 0)]
        for name, r0, c0 in slots:
            pat = self._kpat[name]
            for r, row in enumerate(pat):
                for c, terms in enumerate(row):
                    for coef, a, b, sh in terms:
                        out[:, r0 + r, c0 + c] += (
                            coef * 1j * sig_lat[:, a - 1, b - 1]
                            * np.exp(-1j * sh * taus))
        return out

    def prepare_lattice(self, taus: np.ndarray):
        self._taus = np.asarray(taus, dtype=float)

    def n_integrand_lattice(self, noi_lat: np.ndarray,
                            taus: np.ndarray) -> np.ndarray:
        """dI/dt'(t') rows on the t' lattice, (T,16)."""
        T = noi_lat.shape[0]
        out = np.zeros((T, 16), dtype=complex)
        for i, terms in enumerate(self._npat):
            for coef, a, b, sh in terms:
                out[:, i] += coef * noi_lat[:, a - 1, b - 1] \
                    * np.exp(-1j * sh * taus)
        return out


def correlator_blocks(model: SpectralModel, params: ModeParams) -> BlockSystem:
    return BlockSystem(model=model, params=params)


@dataclass
class CorrelatorMode:
    block: str
    c: int
    d: int
    pole: complex
    residue: np.ndarray  # 4x4
    label: str = ""


@dataclass
class CorrelatorSpectrum:
    modes: list[CorrelatorMode]
    regime: str
    params: ModeParams = field(repr=False, default=None)

    def block_modes(self, block: str) -> list[CorrelatorMode]:
        return [m for m in self.modes if m.block == block]

    def mode(self, block: str, c: int, d: int) -> CorrelatorMode:
        for m in self.modes:
            if m.block == block and m.c == c and m.d == d:
                return m
        raise KeyError((block, c, d))


def _table_pole(block: str, c: int, d: int, regime: str, model, params,
                amp_aux) -> complex:
    """Pole formulas of the two-point Green's functions (per regime)."""
    w1, w2 = params.omega
    wb = params.omega_bar
    w = {1: w1, 2: w2}
    sig = lambda omega: sigma_boundary(model, omega)  # noqa: E731
    if regime == "non_degenerate":
        sp = {1: sig(w1)[0, 0], 2: sig(w2)[1, 1]}  # Sigma_cc(+i w_c)
        sm = {k: v.conjugate() for k, v in sp.items()}  # Sigma_cc(-i w_c)
        if block in ("A_k", "A_mk"):
            # s_{a_c+} + s_{a_d} = i(w_c - w_d)
            #                    + i[Sigma_cc(i w_c)/2w_c - Sigma_dd(-i w_d)/2w_d]
            return (1j * (w[c] - w[d])
                    + 1j * (sp[c] / (2 * w[c]) - sm[d] / (2 * w[d])))
        if block == "B_k":
            return (-1j * (w[c] + w[d])
                    - 1j * (sm[c] / (2 * w[c]) + sm[d] / (2 * w[d])))
        return (1j * (w[c] + w[d])
                + 1j * (sp[c] / (2 * w[c]) + sp[d] / (2 * w[d])))
    # nearly-degenerate / hierarchy column
    d_p = amp_aux["D_bar_plus"]
    d_m = d_p.conjugate()
    sp = sig(wb)
    sm = sp.conjugate()
    tr_p = sp[0, 0] + sp[1, 1]
    tr_m = sm[0, 0] + sm[1, 1]
    wmat = tr_m - tr_p  # = -2i (Sigma_I,11 + Sigma_I,22)(i wbar)
    sgn = {1: +1.0, 2: -1.0}
    if block in ("A_k", "A_mk"):
        if c == d:
            return -1j * (sgn[c] * (d_m - d_p) + wmat) / (4 * wb)
        if (c, d) == (1, 2):
            return 1j * (d_m + d_p - wmat) / (4 * wb)
        return -1j * (d_m + d_p + wmat) / (4 * wb)
    if block == "B_k":
        if c == d:
            return -2j * wb - 1j * (sgn[c] * d_m + tr_m) / (2 * wb)
        return -2j * wb - 1j * tr_m / (2 * wb)
    if c == d:
        return 2j * wb + 1j * (sgn[c] * d_p + tr_p) / (2 * wb)
    return 2j * wb + 1j * tr_p / (2 * wb)


def correlator_spectrum(blocks: BlockSystem, onept: OnePointSpectrum,
                        regime: str | None = None,
                        amp: AmplitudeSpectrum | None = None) -> CorrelatorSpectrum:
    """16 poles and Kronecker-product residues of the correlator system.

    Poles come from the explicit per-regime formulas (hierarchy uses the
    one-point pole sums); residues are Kronecker products of the one-point
    residues, one labeled mode per correlator.
    """
    if regime is None:
        regime = onept.regime
    if regime != onept.regime:
        raise ValueError("regime mismatch between blocks and one-point input")
    model, params = blocks.model, blocks.params
    aux = {"D_bar_plus": None}
    if regime != "non_degenerate":
        sigb = sigma_boundary(model, params.omega_bar)
        from .amplitude import _omega2_D_delta2
        _, dbar, _ = _omega2_D_delta2(params, sigb)
        aux["D_bar_plus"] = dbar

    ra = {c: onept.modes_a[f"a{c}"] for c in (1, 2)}
    rd = {c: onept.modes_adag[f"a{c}+"] for c in (1, 2)}
    modes = []
    for block in ("A_k", "A_mk", "B_k", "B_ks"):
        for c, d in PAIRS:
            if block in ("A_k", "A_mk"):
                left, right = rd[c], ra[d]
                label = f"{{a{c}+,a{d}}}"
            elif block == "B_k":
                left, right = ra[c], ra[d]
                label = f"{{a{c},a{d}-k}}"
            else:
                left, right = rd[c], rd[d]
                label = f"{{a{c}+,a{d}-k+}}"
            if regime.startswith("hierarchy"):
                pole = left.pole + right.pole
            else:
                pole = _table_pole(block, c, d, regime, model, params, aux)
            residue = np.kron(left.residue, right.residue)
            modes.append(CorrelatorMode(block=block, c=c, d=d, pole=pole,
                                        residue=residue, label=label))
    return CorrelatorSpectrum(modes=modes, regime=regime, params=params)


def kronecker_check(spec: CorrelatorSpectrum, onept: OnePointSpectrum) -> dict:
    """Entrywise deviation of block residues from the one-point Kronecker
    products, and of the block poles from the one-point pole sums."""
    ra = {c: onept.modes_a[f"a{c}"] for c in (1, 2)}
    rd = {c: onept.modes_adag[f"a{c}+"] for c in (1, 2)}
    worst_res = 0.0
    worst_pole = 0.0
    for m in spec.modes:
        if m.block in ("A_k", "A_mk"):
            left, right = rd[m.c], ra[m.d]
        elif m.block == "B_k":
            left, right = ra[m.c], ra[m.d]
        else:
            left, right = rd[m.c], rd[m.d]
        kron = np.kron(left.residue, right.residue)
        scale = max(np.abs(kron).max(), 1e-30)
        worst_res = max(worst_res, np.abs(m.residue - kron).max() / scale)
        worst_pole = max(worst_pole, abs(m.pole - (left.pole + right.pole)))
    return {"residue_deviation": worst_res, "pole_sum_deviation": worst_pole,
            "passed": worst_res <= 1e-10 and worst_pole <= 1e-10}


def cross_block_residue_norms(blocks: BlockSystem,
                              spec: CorrelatorSpectrum) -> dict[str, float]:
    """Norms of the dropped G_A residues at the fast (B-part) poles.

    res(G_A, s_fast) ~ G_A(s) K_AB(s) res(G_B, s_fast) K_BA(s) G_A(s);
    these scale as O(g^4) and are diagnostics, not modes.
    """
    out = {}
    for m in spec.modes:
        if m.block not in ("B_k", "B_ks"):
            continue
        s = m.pole
        ga = np.zeros((8, 8), dtype=complex)
        ga[0:4, 0:4] = np.linalg.inv(blocks.ga_inverse("A_k", s))
        ga[4:8, 4:8] = np.linalg.inv(blocks.ga_inverse("A_mk", s))
        res_b = np.zeros((8, 8), dtype=complex)
        off = 0 if m.block == "B_k" else 4
        res_b[off:off + 4, off:off + 4] = m.residue
        kab = blocks.k_block("AB", s)
        kba = blocks.k_block("BA", s)
        cross = ga @ kab @ res_b @ kba @ ga
        out[m.label] = float(np.abs(cross).max())
    return out
