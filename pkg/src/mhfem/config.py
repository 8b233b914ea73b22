"""Run configuration: INI files layered over named presets.

A config file has the sections ``scenario``, ``mesh``, ``model``,
``stepper``, ``initial``, ``study`` and ``output``.  Values are Python
literals (numbers, tuples, strings); bare words are read as strings.  If
``scenario.preset`` is given the preset supplies every missing value.
"""
import ast
import configparser
from dataclasses import dataclass, field, fields
import math
import os
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError
from .model import AleMap, ModelParams, resolve_robin
from .scenarios import SCENARIO_KINDS, preset
from .stepper import StepperConfig

OUTPUT_ROOT_ENV = "MHFEM_OUTPUT_ROOT"
SECTIONS = ("scenario", "mesh", "model", "stepper", "initial", "study", "output")
_MODEL_FIELDS = {f.name for f in fields(ModelParams)}
_STEPPER_FIELDS = {f.name for f in fields(StepperConfig)}


def _literal(text):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text.strip()


@dataclass
class RunConfig:
    """Fully resolved settings of one experiment."""

    scenario: str
    mesh: dict
    model: dict
    stepper: dict
    initial: dict
    study: dict
    output_dir: Path
    snapshot_every: int = 0
    preset: str = None
    extra: dict = field(default_factory=dict)

    def params(self):
        """:class:`ModelParams` with the Robin coefficient resolved."""
        kw = {k: v for k, v in self.model.items() if k in _MODEL_FIELDS}
        try:
            return resolve_robin(ModelParams(**kw))
        except TypeError as exc:
            raise ConfigError(f"[model] {exc}") from None

    def stepper_config(self, **override):
        kw = {k: v for k, v in self.stepper.items() if k in _STEPPER_FIELDS}
        kw["snapshot_every"] = self.snapshot_every
        kw.update(override)
        if self.scenario == "shrinking_rect" and kw.get("t_final") is None:
            kw["t_final"] = self.ale().horizon * (1.0 - float(self.study.get("horizon_margin",
                                                                            0.05)))
        return StepperConfig(**kw)

    def ale(self):
        c1, c2 = self.params().c
        if self.scenario == "shrinking_rect":
            return AleMap("shrinking_rect", c1, c2, Ly=float(self.study["Ly"]),
                          Lx=float(self.study.get("Lx", 1.0)))
        return AleMap("linear_shift", c1, c2)

    def initial_field(self):
        """Callable ``f(x, y)`` for the initial condition."""
        ini = self.initial
        kind = ini.get("kind", "zero")
        if kind == "gaussian":
            h = float(ini["height"])
            x0, y0 = map(float, ini.get("center", (0.0, 0.0)))
            sx, sy = map(float, ini.get("sigma", (0.5, 0.5)))
            return lambda x, y: h * np.exp(-0.5 * (((x - x0) / sx) ** 2 + ((y - y0) / sy) ** 2))
        if kind == "habitat":
            v = float(ini.get("value", 1.0))
            return lambda x, y: np.where(np.asarray(x) >= 0.0, v, 0.0) + 0.0 * np.asarray(y)
        if kind == "constant":
            v = float(ini.get("value", 0.0))
            return lambda x, y: np.full(np.broadcast(x, y).shape, v)
        if kind == "zero":
            return lambda x, y: np.zeros(np.broadcast(x, y).shape)
        raise ConfigError(f"[initial] unknown kind {kind!r}")

    def as_sections(self):
        out = {
            "scenario": {"kind": self.scenario, **({"preset": self.preset} if self.preset else {})},
            "mesh": self.mesh, "model": self.model, "stepper": self.stepper,
            "initial": self.initial, "study": self.study,
            "output": {"dir": str(self.output_dir), "snapshot_every": self.snapshot_every},
        }
        return out


def _read_ini(path):
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(f"{path}: {exc.message if hasattr(exc, 'message') else exc}",
                         line=line) from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    data = {}
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"{path}: unknown section [{sec}]")
        data[sec] = {k: _literal(v) for k, v in cp.items(sec)}
    return data


def output_root():
    return Path(os.environ.get(OUTPUT_ROOT_ENV, ".")).expanduser()


def resolve(data, source="config"):
    """Layer ``data`` over its preset and validate.

    Parameters
    ----------
    data : dict
        Section name to key/value mapping.
    """
    data = {k: dict(v) for k, v in data.items()}
    name = data.get("scenario", {}).get("preset")
    base = preset(name) if name else {s: {} for s in SECTIONS}
    merged = {s: dict(base.get(s, {})) for s in SECTIONS}
    for sec, vals in data.items():
        merged.setdefault(sec, {}).update(vals)
    kind = merged["scenario"].get("kind")
    if kind not in SCENARIO_KINDS:
        raise ConfigError(f"{source}: [scenario] kind must be one of {', '.join(SCENARIO_KINDS)}"
                          f" (got {kind!r})")
    out = merged["output"]
    out_dir = Path(str(out.get("dir", f"out/{name or kind}"))).expanduser()
    if not out_dir.is_absolute():
        out_dir = output_root() / out_dir
    cfg = RunConfig(kind, merged["mesh"], merged["model"], merged["stepper"], merged["initial"],
                    merged["study"], out_dir, int(out.get("snapshot_every", 0)), name)
    validate(cfg)
    return cfg


def validate(cfg):
    """Check that the fields needed by the scenario are present."""
    unknown = set(cfg.model) - _MODEL_FIELDS - {"kappa"}
    if unknown:
        raise ConfigError(f"[model] unknown keys: {', '.join(sorted(unknown))}")
    unknown = set(cfg.stepper) - _STEPPER_FIELDS
    if unknown:
        raise ConfigError(f"[stepper] unknown keys: {', '.join(sorted(unknown))}")
    if cfg.snapshot_every < 0:
        raise ConfigError("[output] snapshot_every must be >= 0")
    if cfg.scenario == "manufactured":
        for key in ("d0", "d1", "kappa", "c"):
            if key not in cfg.model:
                raise ConfigError(f"[model] {key} is required for the manufactured scenario")
        return
    if "kind" not in cfg.mesh:
        raise ConfigError("[mesh] kind is required")
    params = cfg.params()
    if cfg.scenario == "strip_validation" and params.robin_b is None:
        raise ConfigError("[model] robin_b is required for strip_validation "
                          "(or give beta, d2 and m2)")
    if cfg.scenario == "strip_validation" and not math.isfinite(params.robin_b):
        raise ConfigError("[model] robin_b must be finite")
    if cfg.scenario == "shrinking_rect":
        for key in ("Ly",):
            if key not in cfg.study:
                raise ConfigError(f"[study] {key} is required for shrinking_rect")
        t_f = cfg.stepper.get("t_final")
        if t_f is not None and t_f >= cfg.ale().horizon:
            raise ConfigError(f"[stepper] t_final = {t_f} must lie below the horizon "
                              f"{cfg.ale().horizon}")
    cfg.stepper_config()


def load_config(path=None, preset_name=None):
    """Read a config file, or start from a preset alone."""
    if path is None and preset_name is None:
        raise ConfigError("give a config file or a preset name")
    data = _read_ini(path) if path is not None else {}
    if preset_name is not None:
        data.setdefault("scenario", {})["preset"] = preset_name
    return resolve(data, source=str(path or preset_name))


def echo_config(cfg, path):
    """Write the resolved config as INI (defaults materialised)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    sections = cfg.as_sections()
    stepper = dict(cfg.stepper)
    st = cfg.stepper_config()
    for f in fields(StepperConfig):
        stepper.setdefault(f.name, getattr(st, f.name))
    stepper.pop("snapshot_every", None)
    sections["stepper"] = stepper
    if cfg.scenario != "manufactured":
        model = dict(cfg.model)
        p = cfg.params()
        for f in fields(ModelParams):
            model.setdefault(f.name, getattr(p, f.name))
        if p.robin_b is not None:
            model["robin_b"] = p.robin_b
        sections["model"] = model
    for sec, vals in sections.items():
        cp[sec] = {k: repr(v) if not isinstance(v, str) else v for k, v in sorted(vals.items())}
    with open(path, "w") as fh:
        cp.write(fh)
