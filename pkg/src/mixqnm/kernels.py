"""Self-energy and noise kernels of the bath, in frequency and time domain.

Boundary values at s = i*omega + 0+ decompose as Sigma_R + i*Sigma_I and
N_R + i*N_I.  The dissipative parts are local in the spectral density,

    Sigma_I(i w) = -rho(-w)/2,          N_R(i w) = (n(w) + 1/2) Sigma_I(i w),

while Sigma_R and N_I are principal-value transforms evaluated by adaptive
quadrature (QUADPACK qawc on the folded half line).  Time-domain kernels are
sine/cosine transforms of rho done with qawf.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .spectral import ModelError, ModeParams, SpectralModel, _shape_j

_REL_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Quadrature failed to converge; carries the achieved error estimate."""

    def __init__(self, msg, estimate):
        super().__init__(f"{msg} (error estimate {estimate:.3e})")
        self.estimate = estimate


def bose_occupation(beta: float, omega: float) -> float:
    """Bose-Einstein distribution n(omega) = 1/(exp(beta*omega)-1).

    At beta = inf returns 0 for omega > 0 and -1 for omega < 0, so that
    coth(beta*omega/2) = 2n+1 -> sign(omega).
    """
    if omega == 0.0:
        raise ZeroDivisionError("Bose pole at zero frequency")
    if math.isinf(beta):
        return 0.0 if omega > 0 else -1.0
    x = beta * omega
    if x > 700.0:
        return 0.0
    if x < -700.0:
        return -1.0
    return 1.0 / math.expm1(x)


def coth_half(beta: float, omega: float) -> float:
    """coth(beta*omega/2) = 2 n(omega) + 1; sign(omega) at beta = inf."""
    if omega == 0.0:
        raise ZeroDivisionError("Bose pole at zero frequency")
    if math.isinf(beta):
        return math.copysign(1.0, omega)
    return 1.0 / math.tanh(0.5 * beta * omega)


def _check_quad(val, err, what):
    if err > _REL_TOL * max(1.0, abs(val)):
        raise QuadratureError(f"{what} quadrature did not converge", err)


def _cutoff(lam: float, omega: float) -> float:
    return max(8.0 * lam, 2.0 * abs(omega) + 4.0 * lam)


@lru_cache(maxsize=4096)
def _pv_j(shape: str, lam: float, omega: float) -> float:
    """PV integral over the real line of J(k0)/(omega + k0).

    Folded to the half line: 2 * PV int_0^inf k0 J(k0) / (k0^2 - w^2) dk0
    with w = |omega| (J is odd).
    """
    if omega == 0.0:
        # J(k0)/k0 is regular at the origin.
        val, err = integrate.quad(lambda k: 2.0 * _shape_j(shape, lam, k) / k,
                                  0.0, np.inf, epsabs=1e-13, epsrel=1e-11,
                                  limit=200)
        _check_quad(val, err, "PV(J) at omega=0")
        return val
    w = abs(omega)
    K = _cutoff(lam, omega)

    def phi(k):
        return 2.0 * k * _shape_j(shape, lam, k) / (k + w)

    val, err = integrate.quad(phi, 0.0, K, weight="cauchy", wvar=w,
                              epsabs=1e-13, epsrel=1e-11, limit=400)
    tail, terr = integrate.quad(
        lambda k: 2.0 * k * _shape_j(shape, lam, k) / (k * k - w * w),
        K, np.inf, epsabs=1e-14, epsrel=1e-11, limit=200)
    _check_quad(val + tail, err + terr, "PV(J)")
    return val + tail


def _h_jcoth(shape: str, lam: float, beta: float, k):
    """coth(beta*k/2)/2 * J(k): even, smooth, finite at k = 0 (-> 1/beta)."""
    if math.isinf(beta):
        return 0.5 * abs(_shape_j(shape, lam, k))
    if abs(k) < 1e-8 / beta:
        if shape == "ohmic-gaussian":
            slope = math.exp(-(k * k) / (lam * lam))
        else:
            slope = lam**4 / (k * k + lam * lam) ** 2
        return slope / beta
    return 0.5 * coth_half(beta, k) * _shape_j(shape, lam, k)


@lru_cache(maxsize=4096)
def _pv_jcoth(shape: str, lam: float, beta: float, omega: float) -> float:
    """PV integral of coth(beta*k0/2)/2 * J(k0) / (omega + k0) over the line.

    The integrand's even part h(k0) folds to
    -2w * PV int_0^inf h(k0)/(k0^2 - w^2) dk0; it vanishes at omega = 0.
    """
    if omega == 0.0:
        return 0.0
    w = abs(omega)
    K = _cutoff(lam, omega)

    def h(k):
        return _h_jcoth(shape, lam, beta, k)

    sgn = math.copysign(1.0, omega)

    def phi(k):
        return -2.0 * w * h(k) / (k + w)

    val, err = integrate.quad(phi, 0.0, K, weight="cauchy", wvar=w,
                              epsabs=1e-13, epsrel=1e-11, limit=400)
    tail, terr = integrate.quad(lambda k: -2.0 * w * h(k) / (k * k - w * w),
                                K, np.inf, epsabs=1e-14, epsrel=1e-11,
                                limit=200)
    _check_quad(val + tail, err + terr, "PV(J*coth)")
    return sgn * (val + tail)


def sigma_boundary(model: SpectralModel, omega: float) -> np.ndarray:
    """Complex 2x2 boundary value Sigma(i*omega + 0+) = Sigma_R + i*Sigma_I."""
    sig = np.zeros((2, 2), dtype=complex)
    for ch in model.channels:
        cm = ch.coupling_matrix()
        if not cm.any():
            continue
        sr = -_pv_j(ch.shape, ch.lam, float(omega)) / (2.0 * math.pi)
        si = 0.5 * ch.j(omega)  # -rho(-w)/2 = +rho(w)/2 per channel
        sig += cm * (sr + 1j * si)
    return sig


def noise_boundary(model: SpectralModel, beta: float, omega: float) -> np.ndarray:
    """Complex 2x2 boundary value N(i*omega + 0+) = N_R + i*N_I.

    N_R uses the fluctuation-dissipation identity (n + 1/2)*Sigma_I;
    N_I is a principal-value transform of coth*rho/2.
    """
    nr = (bose_occupation(beta, omega) + 0.5) * sigma_boundary(model, omega).imag
    ni = np.zeros((2, 2))
    for ch in model.channels:
        cm = ch.coupling_matrix()
        if not cm.any():
            continue
        ni += cm * (-_pv_jcoth(ch.shape, ch.lam, float(beta), float(omega))
                    / (2.0 * math.pi))
    return nr + 1j * ni


@dataclass
class KernelMatrix:
    """Boundary kernels at one real frequency (optionally omega-scaled)."""

    sigma_R: np.ndarray
    sigma_I: np.ndarray
    noise_R: np.ndarray
    noise_I: np.ndarray
    omega: float
    tilde: bool
    beta: float

    @property
    def sigma(self) -> np.ndarray:
        return self.sigma_R + 1j * self.sigma_I

    @property
    def noise(self) -> np.ndarray:
        return self.noise_R + 1j * self.noise_I


def tilde_matrix(params: ModeParams) -> np.ndarray:
    """Entrywise scaling 1/sqrt(2 w_a 2 w_b)."""
    w = np.asarray(params.omega)
    return 1.0 / (2.0 * np.sqrt(np.outer(w, w)))


def boundary_kernels(model: SpectralModel, params: ModeParams, omega: float,
                     tilde: bool = False) -> KernelMatrix:
    sig = sigma_boundary(model, omega)
    noi = noise_boundary(model, params.beta, omega)
    if tilde:
        tm = tilde_matrix(params)
        sig = sig * tm
        noi = noi * tm
    return KernelMatrix(sigma_R=sig.real.copy(), sigma_I=sig.imag.copy(),
                        noise_R=noi.real.copy(), noise_I=noi.imag.copy(),
                        omega=float(omega), tilde=tilde, beta=params.beta)


def _fourier_halfline(f, t: float, kind: str, fast_decay: bool, K: float):
    """int_0^inf f(k) sin/cos(k t) dk.

    Fast-decaying integrands use a finite oscillatory rule on [0, K]
    (the tail is below roundoff there); algebraic tails go through
    QUADPACK's Fourier extrapolation on the half line.
    """
    # Accuracy is enforced through the returned error estimate; QUADPACK's
    # roundoff/cycle warnings fire spuriously when the result is ~eps.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if fast_decay:
            return integrate.quad(f, 0.0, K, weight=kind, wvar=t,
                                  epsabs=1e-13, epsrel=1e-11, limit=800)
        return integrate.quad(f, 0.0, np.inf, weight=kind, wvar=t,
                              epsabs=1e-13, limit=800)


@lru_cache(maxsize=65536)
def _j_sin(shape: str, lam: float, t: float) -> float:
    if t == 0.0:
        return 0.0
    fast = shape == "ohmic-gaussian"
    val, err = _fourier_halfline(lambda k: _shape_j(shape, lam, k), t, "sin",
                                 fast, 8.0 * lam)
    _check_quad(val, err, "sin transform of J")
    return val


@lru_cache(maxsize=65536)
def _jcoth_cos(shape: str, lam: float, beta: float, t: float) -> float:
    def h(k):
        return _h_jcoth(shape, lam, beta, k)

    if t == 0.0:
        val, err = integrate.quad(h, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11,
                                  limit=400)
    else:
        fast = shape == "ohmic-gaussian"
        val, err = _fourier_halfline(h, t, "cos", fast, 8.0 * lam)
    _check_quad(val, err, "cos transform of coth*J")
    return val


def time_kernels(model: SpectralModel, params: ModeParams, t: float,
                 tilde: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Real time-domain kernels (Sigma(t), N(t)); Sigma(0) = 0 exactly."""
    if t < 0:
        raise ModelError("time kernels defined for t >= 0")
    sig = np.zeros((2, 2))
    noi = np.zeros((2, 2))
    for ch in model.channels:
        cm = ch.coupling_matrix()
        if not cm.any():
            continue
        sig += cm * (-_j_sin(ch.shape, ch.lam, float(t)) / math.pi)
        noi += cm * (_jcoth_cos(ch.shape, ch.lam, float(params.beta), float(t))
                     / math.pi)
    if tilde:
        tm = tilde_matrix(params)
        sig = sig * tm
        noi = noi * tm
    return sig, noi


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(n: int):
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (x, w)
    return _GL_CACHE[n]


def time_kernel_lattice(model: SpectralModel, beta: float, taus: np.ndarray,
                        want_noise: bool = True):
    """Vectorized (Sigma(tau), N(tau)) on a tau lattice, shape (T, 2, 2).

    Gaussian channels use dense Gauss-Legendre transforms; Lorentzian
    channels fall back to per-point adaptive quadrature.
    """
    taus = np.asarray(taus, dtype=float)
    T = taus.size
    sig = np.zeros((T, 2, 2))
    noi = np.zeros((T, 2, 2)) if want_noise else None
    tmax = float(taus.max()) if T else 0.0
    for ch in model.channels:
        cm = ch.coupling_matrix()
        if not cm.any():
            continue
        if ch.shape == "ohmic-gaussian":
            K = 8.0 * ch.lam
            n = min(25000, max(600, int(3.0 * tmax * K / math.pi) + 400))
            x, w = _gl_nodes(n)
            k = 0.5 * K * (x + 1.0)
            wk = 0.5 * K * w
            j = ch.j(k)
            phase = np.outer(taus, k)
            s_vals = -(np.sin(phase) @ (wk * j)) / math.pi
            sig += np.multiply.outer(s_vals, cm)
            if want_noise:
                cth = (np.sign(k) if math.isinf(beta)
                       else 1.0 / np.tanh(0.5 * beta * k))
                n_vals = (np.cos(phase) @ (wk * 0.5 * cth * j)) / math.pi
                noi += np.multiply.outer(n_vals, cm)
        else:
            s_vals = np.array([-_j_sin(ch.shape, ch.lam, float(t)) / math.pi
                               for t in taus])
            sig += np.multiply.outer(s_vals, cm)
            if want_noise:
                n_vals = np.array(
                    [_jcoth_cos(ch.shape, ch.lam, float(beta), float(t))
                     / math.pi for t in taus])
                noi += np.multiply.outer(n_vals, cm)
    return (sig, noi) if want_noise else (sig, None)


def fdr_residual(model: SpectralModel, params: ModeParams, omega: float) -> float:
    """Max-norm residual of Sigma_I*coth(beta w/2) - 2*N_R at one frequency.

    N_R is recomputed from the time-inversion route N(k0=-w)/2 rather than
    through the fluctuation-dissipation shortcut.
    """
    if omega == 0.0:
        raise ZeroDivisionError("FDR undefined at zero frequency")
    beta = params.beta
    sig_i = sigma_boundary(model, omega).imag
    # Independent route: N_R(i w) = N(k0=-w)/2 = coth(-beta w/2) rho(-w)/4.
    n_r = 0.25 * coth_half(beta, -omega) * model.rho_matrix(-omega)
    res = sig_i * coth_half(beta, omega) - 2.0 * n_r
    return float(np.abs(res).max())
