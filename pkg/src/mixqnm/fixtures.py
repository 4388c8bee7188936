"""Built-in parameter sets used by the validation suite and tests.

P0: non-degenerate masses, one ohmic-gaussian channel.
P1: nearly-degenerate masses; two channels with well-separated cutoffs so
    the real and dissipative parts of Sigma have different matrix
    structure.  A single shared cutoff makes the cross quasi-normal modes
    decouple from symmetric initial data and from the thermal drive,
    suppressing the population beats this fixture exists to exhibit; the
    hot bath amplifies the noise-driven beat, and the cutoff contrast
    keeps the beat line several times narrower than its frequency.
P2: nearly-degenerate masses with a coupling-strength hierarchy; the
    second channel breaks the rank-1 structure so the long-lived field
    keeps a nonzero decay rate.
"""

from __future__ import annotations

from .spectral import ModeParams, SpectralModel, build_model

_BUILTIN = {
    "P0": {
        "model": {"channels": [
            {"g": [0.1, 0.1], "shape": "ohmic-gaussian", "lambda": 10.0,
             "weight": 1.0}]},
        "params": {"m": [1.0, 1.1], "kmag": 0.0, "beta": 1.0},
    },
    "P1": {
        "model": {"channels": [
            {"g": [0.0544, 0.1069], "shape": "ohmic-gaussian", "lambda": 15.0,
             "weight": 1.0},
            {"g": [-0.0273, 0.1169], "shape": "ohmic-gaussian", "lambda": 1.0,
             "weight": 1.0}]},
        "params": {"m": [1.0, 1.002], "kmag": 0.0, "beta": 0.15},
    },
    "P2": {
        "model": {"channels": [
            {"g": [0.1, 0.005], "shape": "ohmic-gaussian", "lambda": 10.0,
             "weight": 1.0},
            {"g": [0.0, 0.005], "shape": "ohmic-gaussian", "lambda": 10.0,
             "weight": 1.0}]},
        "params": {"m": [1.0, 1.0005], "kmag": 0.0, "beta": 1.0},
    },
}


def builtin_config(name: str) -> dict:
    if name not in _BUILTIN:
        raise KeyError(f"unknown builtin fixture {name!r}")
    cfg = _BUILTIN[name]
    return {"model": {"channels": [dict(ch) for ch in cfg["model"]["channels"]]},
            "params": dict(cfg["params"])}


def builtin(name: str) -> tuple[SpectralModel, ModeParams]:
    cfg = builtin_config(name)
    model = build_model(cfg["model"])
    pr = cfg["params"]
    params = ModeParams(m=tuple(pr["m"]), kmag=pr["kmag"], beta=pr["beta"])
    return model, params


def zero_coupling_model() -> SpectralModel:
    return build_model({"channels": [
        {"g": [0.0, 0.0], "shape": "ohmic-gaussian", "lambda": 10.0}]})
