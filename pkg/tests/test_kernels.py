import math

import numpy as np
import pytest

from mixqnm import kernels as kn
from mixqnm.spectral import ModeParams, build_model


@pytest.fixture(scope="module")
def gauss_model():
    return build_model({"channels": [
        {"g": [0.1, 0.1], "shape": "ohmic-gaussian", "lambda": 10.0}]})


@pytest.fixture(scope="module")
def params():
    return ModeParams(m=(1.0, 1.1), beta=1.0)


def test_bose_occupation_values():
    assert kn.bose_occupation(1.0, 1.0) == pytest.approx(1 / (math.e - 1), rel=1e-12)
    assert kn.bose_occupation(1.0, 1.0) == pytest.approx(0.58197671, abs=1e-8)
    assert kn.bose_occupation(math.inf, 1.0) == 0.0
    assert kn.bose_occupation(math.inf, -1.0) == -1.0
    assert kn.bose_occupation(0.1, 1.0) == pytest.approx(9.50833194, abs=1e-8)
    with pytest.raises(ZeroDivisionError):
        kn.bose_occupation(1.0, 0.0)


def test_sigma_boundary_values(gauss_model):
    sig = kn.sigma_boundary(gauss_model, 1.0)
    assert sig[0, 0].imag == pytest.approx(0.00495025, abs=5e-9)
    sig0 = kn.sigma_boundary(gauss_model, 0.0)
    assert sig0[0, 0].real == pytest.approx(-0.1 * 0.1 * 10 / (2 * math.sqrt(math.pi)), rel=1e-10)
    assert sig0[0, 0].real == pytest.approx(-0.02820948, abs=5e-9)
    assert sig0[0, 0].imag == 0.0


def test_zero_coupling_all_kernels_zero(params):
    m = build_model({"channels": [{"g": [0.0, 0.0], "lambda": 10.0}]})
    km = kn.boundary_kernels(m, params, 1.3)
    for mat in (km.sigma_R, km.sigma_I, km.noise_R, km.noise_I):
        assert np.all(mat == 0.0)
    st, nt = kn.time_kernels(m, params, 0.7)
    assert np.all(st == 0.0) and np.all(nt == 0.0)


def test_boundary_kernel_symmetries(gauss_model, params):
    for w in (0.3, 1.0, 2.7):
        km = kn.boundary_kernels(gauss_model, params, w)
        assert np.allclose(km.sigma_R, km.sigma_R.T, atol=0)
        assert np.allclose(km.sigma_I, km.sigma_I.T, atol=0)
        km_m = kn.boundary_kernels(gauss_model, params, -w)
        # sigma_R even, sigma_I odd in omega (symmetric matrices)
        assert np.allclose(km_m.sigma_R, km.sigma_R, rtol=1e-10, atol=1e-14)
        assert np.allclose(km_m.sigma_I, -km.sigma_I, rtol=0, atol=1e-16)
        # damping positivity
        assert km.sigma_I[0, 0] > 0
        # FDR built into noise_R
        n = kn.bose_occupation(params.beta, w)
        assert np.allclose(km.noise_R, (n + 0.5) * km.sigma_I, rtol=1e-14)


def test_tilde_scaling(gauss_model, params):
    km = kn.boundary_kernels(gauss_model, params, 1.0, tilde=True)
    km0 = kn.boundary_kernels(gauss_model, params, 1.0, tilde=False)
    w1, w2 = params.omega
    assert km.sigma_I[0, 0] == pytest.approx(km0.sigma_I[0, 0] / (2 * w1))
    assert km.sigma_I[0, 1] == pytest.approx(
        km0.sigma_I[0, 1] / (2 * math.sqrt(w1 * w2)))


def test_time_kernel_gaussian_analytic(gauss_model, params):
    st, _ = kn.time_kernels(gauss_model, params, 0.1)
    exact = -0.01 * 1000 * 0.1 * math.exp(-0.25) / (4 * math.sqrt(math.pi))
    assert st[0, 0] == pytest.approx(exact, rel=1e-10)
    assert st[0, 0] == pytest.approx(-0.1098478, abs=5e-8)
    st0, _ = kn.time_kernels(gauss_model, params, 0.0)
    assert np.all(st0 == 0.0)


def test_time_kernel_lorentzian_analytic(params):
    m = build_model({"channels": [
        {"g": [0.1, 0.1], "shape": "ohmic-lorentzian", "lambda": 10.0}]})
    for t in (0.05, 0.3, 1.0):
        st, _ = kn.time_kernels(m, params, t)
        exact = -0.01 * 1000 * t * math.exp(-10 * t) / 4
        assert st[0, 0] == pytest.approx(exact, rel=1e-8, abs=1e-14)


def test_fdr_residual(gauss_model, params):
    assert kn.fdr_residual(gauss_model, params, 1.0) <= 1e-12
    cold = ModeParams(m=params.m, beta=math.inf)
    assert kn.fdr_residual(gauss_model, cold, 2.0) <= 1e-12
    zero = build_model({"channels": [{"g": [0.0, 0.0], "lambda": 10.0}]})
    assert kn.fdr_residual(zero, params, 1.0) == 0.0


def test_fdr_many_frequencies_models():
    models = [
        build_model({"channels": [{"g": [0.1, 0.1], "lambda": 10.0}]}),
        build_model({"channels": [
            {"g": [0.1, -0.03], "lambda": 5.0},
            {"g": [0.0, 0.08], "shape": "ohmic-lorentzian", "lambda": 2.0}]}),
    ]
    for m in models:
        for beta in (0.1, 1.0, math.inf):
            p = ModeParams(m=(1.0, 1.1), beta=beta)
            for w in np.linspace(0.2, 4.0, 6):
                scale = max(1.0, np.abs(kn.sigma_boundary(m, w).imag).max())
                assert kn.fdr_residual(m, p, float(w)) <= 1e-12 * scale


def test_kramers_kronig_consistency(gauss_model):
    # Hilbert-transform route: sigma_R(iw) = (1/pi) PV int sigma_I(ik)/(w-k) dk
    grid = np.linspace(-85.0, 85.0, 34001)
    rho11 = np.array([gauss_model.rho(1, 1, k) for k in grid])
    sig_i = 0.5 * rho11  # sigma_I(ik) = rho(k)/2
    dfdk = np.gradient(sig_i, grid)
    for w in (0.1, 0.5, 1.0, 2.0, 5.0):
        denom = w - grid
        f_at_w = 0.5 * gauss_model.rho(1, 1, w)
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = (sig_i - f_at_w) / denom
        on_pole = np.abs(denom) <= 1e-12
        integrand[on_pole] = -dfdk[on_pole]  # removable-singularity limit
        val = np.trapezoid(integrand, grid) / math.pi
        val += f_at_w / math.pi * math.log(abs((w - grid[0]) / (grid[-1] - w)))
        ref = kn.sigma_boundary(gauss_model, w)[0, 0].real
        assert val == pytest.approx(ref, rel=1e-6)


def test_fourier_consistency_time_vs_boundary(gauss_model):
    from scipy.integrate import simpson
    T = 20 / 10.0
    ts = np.linspace(0, T, 4001)
    slat, _ = kn.time_kernel_lattice(gauss_model, 1.0, ts, want_noise=False)
    for w in (0.7, 1.3, 2.1):
        val = simpson(slat[:, 0, 0] * np.sin(w * ts), x=ts)
        assert val == pytest.approx(-kn.sigma_boundary(gauss_model, w)[0, 0].imag,
                                    rel=1e-6)


def test_lattice_matches_pointwise(gauss_model, params):
    taus = np.linspace(0.0, 2.0, 9)
    sl, nl = kn.time_kernel_lattice(gauss_model, params.beta, taus)
    for i, t in enumerate(taus):
        st, nt = kn.time_kernels(gauss_model, params, float(t))
        assert np.allclose(sl[i], st, atol=1e-12)
        assert np.allclose(nl[i], nt, atol=1e-12)
