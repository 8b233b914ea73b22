"""Built-in named presets.

Each preset is a nested mapping with the same sections as a config file:
``scenario``, ``mesh``, ``model``, ``stepper``, ``initial`` and ``study``.
"""
import copy
import math

from .errors import ConfigError

SCENARIO_KINDS = ("rect_shift", "strip_validation", "disk_shift", "shrinking_rect",
                  "manufactured")

_GAUSS_RECT = 10.0 / (2.0 * math.pi * 0.25)

_RECT_TEST = {
    "scenario": {"kind": "rect_shift"},
    "mesh": {"kind": "rect", "outer": (-17.0, 19.0, -17.0, 27.0), "inner": (3.0, 7.0, 3.0, 7.0),
             "n_inner_side": 20, "n_outer_side": 10, "grading_rate": 0.5,
             "conformity": "conformal"},
    "model": {"d0": 1.0, "d1": 2.0, "r": 1.2, "a": 0.8, "m": 1.0, "alpha": 0.5,
              "c": (1.0, 0.0)},
    "stepper": {"tau": 0.1, "tol_steady": 1e-5, "max_steps": 20000},
    "initial": {"kind": "gaussian", "height": _GAUSS_RECT, "center": (5.0, 5.0),
                "sigma": (0.5, 0.5)},
    "study": {"levels": (10, 20, 40, 80), "ref_level": 160},
}

_STRIP = {
    "scenario": {"kind": "strip_validation"},
    "mesh": {"kind": "strip", "L": 5.0, "L_far": 20.0, "y0": 0.0, "y1": 5.0,
             "n_gamma0": 50, "n_gamma1": 51, "nx0": 50, "nx1": 30, "n_far": 5},
    "model": {"d0": 1.0, "r": 1.0, "a": 1.0},
    "stepper": {"tau": 0.1, "tol_steady": 1e-5, "max_steps": 50000},
    "initial": {"kind": "habitat", "value": 1.0},
    "study": {"levels": (1, 2), "taus": (0.1, 0.05), "y_cut": 2.5,
              "oracle_h0": 1.25e-3, "oracle_tau": 1.25e-3, "oracle_tol": 1e-8, "rc": 1.005},
}

_DISK = {
    "scenario": {"kind": "disk_shift"},
    "mesh": {"kind": "disk", "r_inner": math.sqrt(2.0), "r_outer": 10.0, "n_gamma": 160,
             "n_outer": 80, "grading": 1.1},
    "model": {"d0": 1.0, "d1": 2.0, "r": 1.2, "a": 0.8, "m": 1.0, "alpha": 0.5,
              "c": (1.0, 0.0)},
    "stepper": {"tau": 0.025, "tol_steady": 1e-5, "max_steps": 40000},
    "initial": {"kind": "gaussian", "height": 40.0 / math.pi, "center": (0.0, 0.0),
                "sigma": (0.5, 0.5)},
    "study": {},
}

PRESETS = {
    "test1": _RECT_TEST,
    "test2": {**_RECT_TEST, "model": {**_RECT_TEST["model"], "alpha": 0.7}},
    "humped": {**_STRIP, "model": {**_STRIP["model"], "alpha": 0.3, "beta": 0.3, "d1": 1.0,
                                   "d2": 1.0, "m": 1.0, "m2": 1.0, "c": (1.0, 0.0)}},
    "decreasing": {**_STRIP, "model": {**_STRIP["model"], "alpha": 0.8, "beta": 0.5,
                                       "d1": 1.0, "d2": 1.0, "m": 1.0, "m2": 0.5,
                                       "c": (1.5, 0.0)}},
    "sharply_decreasing": {
        **_STRIP,
        "mesh": {**_STRIP["mesh"], "L_far": 250.0},
        "model": {**_STRIP["model"], "alpha": 0.8, "beta": 0.6, "d1": 2.0, "d2": 1.3,
                  "m": 0.1, "m2": 1.4, "c": (2.5, 0.0)},
        "stepper": {**_STRIP["stepper"], "tol_steady": 1e-7},
        "study": {**_STRIP["study"], "oracle_tol": 1e-8},
    },
    "disk_highbias": {**_DISK, "model": {**_DISK["model"], "alpha": 0.7}},
    "disk_nobias": _DISK,
    "shrink": {
        "scenario": {"kind": "shrinking_rect"},
        "mesh": {"kind": "rect", "outer": (-10.0, 20.0, -14.0, 14.0),
                 "inner": (0.0, 10.0, -4.0, 4.0), "n_inner_side": 80, "n_outer_side": 240,
                 "grading": 1.05, "conformity": "conformal"},
        "model": {"d0": 1.0, "d1": 2.0, "r": 1.0, "a": 1.0, "m": 0.5, "alpha": 0.3,
                  "c": (0.5, 0.1)},
        "stepper": {"tau": 0.01, "tol_steady": 1e-5, "max_steps": 1000000},
        "initial": {"kind": "gaussian", "height": 20.0 / math.pi, "center": (5.0, 0.0),
                    "sigma": (0.5, 0.5)},
        "study": {"Lx": 10.0, "Ly": 4.0, "horizon_margin": 0.05},
    },
    "manufactured": {
        "scenario": {"kind": "manufactured"},
        "mesh": {"kind": "strip"},
        "model": {"d0": 1.0, "d1": 2.0, "kappa": math.sqrt(2.0), "c": (1.0, 0.0)},
        "stepper": {"tau": 1.0},
        "initial": {},
        "study": {"levels": (10, 20, 40, 80), "conformity": "nonconformal"},
    },
}


def preset(name):
    """Deep copy of the named preset."""
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") \
            from None
