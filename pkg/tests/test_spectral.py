import math

import numpy as np
import pytest

from mixqnm.spectral import (ModelError, ModeParams, build_model,
                             validate_symmetries)


def test_build_model_gaussian_value():
    m = build_model({"channels": [
        {"g": [0.1, 0.1], "shape": "ohmic-gaussian", "lambda": 10.0}]})
    assert m.rho(1, 1, 1.0) == pytest.approx(0.01 * math.exp(-0.01), rel=1e-14)
    # cross-check against direct shape formula
    assert m.rho(1, 1, 1.0) == pytest.approx(0.0099005, abs=5e-8)


def test_zero_coupling_model_vanishes():
    m = build_model({"channels": [{"g": [0.0, 0.0], "lambda": 10.0}]})
    for k0 in (0.3, 1.0, 7.0):
        assert np.all(m.rho_matrix(k0) == 0.0)


def test_build_model_rejects_bad_input():
    with pytest.raises(ModelError, match="non-positive cutoff"):
        build_model({"channels": [{"g": [0.1, 0.1], "lambda": -1.0}]})
    with pytest.raises(ModelError, match="empty channel"):
        build_model({"channels": []})
    with pytest.raises(ModelError, match="NaN"):
        build_model({"channels": [{"g": [float("nan"), 0.1], "lambda": 1.0}]})


def test_rho_eval_offdiagonal_and_oddness():
    m = build_model({"channels": [
        {"g": [0.1, 0.2], "shape": "ohmic-gaussian", "lambda": 10.0}]})
    assert m.rho(1, 2, 1.0) == pytest.approx(0.02 * math.exp(-0.01), rel=1e-14)
    assert m.rho(1, 2, 1.0) == pytest.approx(0.0198010, abs=5e-8)
    assert m.rho(1, 1, 0.0) == 0.0
    assert m.rho(1, 2, 2.4) == m.rho(2, 1, 2.4)
    rng = np.random.default_rng(7)
    for k0 in rng.uniform(0.01, 30.0, size=25):
        assert m.rho(1, 2, -k0) + m.rho(2, 1, k0) == pytest.approx(0.0, abs=1e-15 * abs(m.rho(1, 2, k0)) + 1e-300)


def test_symmetry_report_builtin_models():
    m = build_model({"channels": [
        {"g": [0.1, -0.05], "shape": "ohmic-gaussian", "lambda": 5.0},
        {"g": [0.02, 0.1], "shape": "ohmic-lorentzian", "lambda": 2.0}]})
    rep = validate_symmetries(m, [0.1, 1.0, 10.0])
    assert rep.passed
    assert rep.odd_violation == 0.0


def test_symmetry_report_negative_control():
    m = build_model({"channels": [{"g": [0.1, 0.1], "lambda": 10.0}]})

    def broken(k0):
        r = m.rho_matrix(k0)
        r = np.array(r)
        r[0, 1] += 0.001  # not symmetric, not odd
        return r

    rep = validate_symmetries(m, [0.5, 1.0], rho_fn=broken)
    assert not rep.passed
    assert rep.symmetry_violation > 0


def test_psd_single_channel_rank1():
    m = build_model({"channels": [{"g": [0.3, -0.7], "lambda": 4.0}]})
    for k0 in (0.2, 1.0, 3.0):
        r = m.rho_matrix(k0)
        assert np.linalg.det(r) == pytest.approx(0.0, abs=1e-16)
        assert np.linalg.eigvalsh(r).min() >= -1e-14 * np.trace(r)


def test_random_models_psd_and_odd():
    rng = np.random.default_rng(42)
    for _ in range(20):
        nch = rng.integers(1, 4)
        channels = [{"g": list(rng.normal(0, 0.1, 2)),
                     "shape": ("ohmic-gaussian", "ohmic-lorentzian")[rng.integers(0, 2)],
                     "lambda": float(rng.uniform(0.5, 20.0)),
                     "weight": float(rng.uniform(0.0, 2.0))}
                    for _ in range(nch)]
        m = build_model({"channels": channels})
        rep = validate_symmetries(m, rng.uniform(0.05, 20.0, size=8))
        assert rep.passed


def test_mode_params_derived_quantities():
    p = ModeParams(m=(1.0, 1.1), kmag=0.5, beta=2.0)
    assert p.omega[0] == pytest.approx(math.sqrt(1.25))
    assert p.omega[1] == pytest.approx(math.sqrt(1.21 + 0.25))
    assert p.omega_bar == pytest.approx(0.5 * (p.omega[0] + p.omega[1]))
    assert p.delta == pytest.approx(p.omega[0] - p.omega[1])
    with pytest.raises(ModelError):
        ModeParams(m=(1.0, 1.0), beta=-1.0)
    with pytest.raises(ModelError):
        ModeParams(m=(0.0, 1.0), kmag=0.0)
