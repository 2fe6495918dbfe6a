"""Plain-text experiment configuration (INI sections ``process``, ``kernel``, ``experiment``).

Example::

    [process]
    distribution = gaussian
    mean = 0
    std = 1
    kind = linear
    coeffs = 0:1.0, 1:0.5

    [kernel]
    name = variance

    [experiment]
    n = 2000
    R = 1000

Unknown sections or keys are rejected, so a typo never falls back to a
default silently.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .kernels import PairKernel, get_kernel
from .processes import CUSTOM_EVALUATORS, InnovationSpec, ShiftFunctional, ShiftProcess, geometric_functional


def _int(text):
    return int(text)


def _float(text):
    return float(text)


def _int_list(text):
    return [int(t) for t in text.replace(",", " ").split()]


def _float_list(text):
    return [float(t) for t in text.replace(",", " ").split()]


def _str(text):
    return text.strip()


def _coeffs(text):
    out = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ValueError(f"expected offset:value, got {item!r}")
        k, v = item.split(":", 1)
        k = k.strip()
        try:
            off = int(k)
        except ValueError:
            raise ValueError(f"offset {k!r} is not an integer") from None
        out[off] = float(v)
    return out


PROCESS_KEYS = {
    "distribution": _str, "mean": _float, "std": _float, "lo": _float, "hi": _float,
    "kind": _str, "coeffs": _coeffs, "W": _int, "evaluator": _str, "ratio": _float,
}
KERNEL_KEYS = {"name": _str, "alpha": _float, "holder_c": _float, "holder_alpha": _float}
EXPERIMENT_KEYS = {
    "n": _int, "R": _int, "K_max": _int, "sigma_path": _int, "center_R": _int, "M": _int,
    "tail_samples": _int, "center_samples": _int, "p": _float, "ps": _float_list, "n_max": _int,
    "checkpoints": _int_list, "L_max": _int, "n_grid": _int_list, "theta_R": _int, "seed": _int,
}
SCHEMA = {"process": PROCESS_KEYS, "kernel": KERNEL_KEYS, "experiment": EXPERIMENT_KEYS}

EXPERIMENT_DEFAULTS = {
    "n": 200, "R": 100, "sigma_path": 1_000_000, "center_R": 100_000, "M": 4096, "tail_samples": 4096,
    "center_samples": 100_000, "p": 1.5, "ps": [1.0, 2.0], "n_max": 8000, "checkpoints": None,
    "L_max": None, "K_max": None, "n_grid": [200, 400, 800, 1600], "theta_R": 100_000, "seed": 0,
}
_POSITIVE = ("n", "R", "sigma_path", "center_R", "M", "tail_samples", "center_samples", "n_max", "theta_R")


@dataclass
class Config:
    process: ShiftProcess
    kernel: PairKernel
    experiment: dict
    raw: dict = field(default_factory=dict)
    text: str = ""

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def echo(self):
        """``section.key=value`` lines in file order."""
        return [f"{s}.{k}={v}" for s, items in self.raw.items() for k, v in items.items()]


def _parse_section(parser, name, required):
    if not parser.has_section(name):
        if required:
            raise ConfigurationError(f"missing section [{name}]", name)
        return {}, {}
    schema = SCHEMA[name]
    raw, values = {}, {}
    for key, text in parser.items(name):
        if key not in schema:
            raise ConfigurationError(f"unknown key {key!r} in [{name}]", f"{name}.{key}")
        raw[key] = text
        try:
            values[key] = schema[key](text)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {name}.{key}: {exc}", f"{name}.{key}") from None
    return raw, values


def _build_process(v):
    def need(key):
        if key not in v:
            raise ConfigurationError(f"missing required key process.{key}", f"process.{key}")
        return v[key]

    dist = need("distribution")
    extra = {"gaussian": ("mean", "std"), "uniform": ("lo", "hi"), "rademacher": ()}
    if dist not in extra:
        raise ConfigurationError(f"unknown distribution {dist!r}", "process.distribution")
    for key in ("mean", "std", "lo", "hi"):
        if key in v and key not in extra[dist]:
            raise ConfigurationError(f"process.{key} does not apply to {dist}", f"process.{key}")
    try:
        if dist == "gaussian":
            spec = InnovationSpec.gaussian(v.get("mean", 0.0), v.get("std", 1.0))
        elif dist == "uniform":
            spec = InnovationSpec.uniform(v.get("lo", 0.0), v.get("hi", 1.0))
        else:
            spec = InnovationSpec.rademacher()
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), f"process.{exc.key}") from None

    kind = need("kind")
    allowed = {"linear": {"coeffs", "W"}, "custom": {"W", "evaluator"}, "geometric": {"ratio"}}
    if kind not in allowed:
        raise ConfigurationError(f"unknown functional kind {kind!r}", "process.kind")
    for key in ("coeffs", "W", "evaluator", "ratio"):
        if key in v and key not in allowed[kind]:
            raise ConfigurationError(f"process.{key} does not apply to kind {kind}", f"process.{key}")
    try:
        if kind == "linear":
            func = ShiftFunctional.linear(need("coeffs"), v.get("W"))
        elif kind == "custom":
            name = need("evaluator")
            if name not in CUSTOM_EVALUATORS:
                raise ConfigurationError(f"unknown evaluator {name!r}; known: {sorted(CUSTOM_EVALUATORS)}",
                                         "evaluator")
            func = ShiftFunctional.custom(need("W"), CUSTOM_EVALUATORS[name], name=name)
        else:
            func = geometric_functional(v.get("ratio", 0.5))
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), f"process.{exc.key}") from None
    return ShiftProcess(spec, func)


def _build_kernel(v):
    if "name" not in v:
        raise ConfigurationError("missing required key kernel.name", "kernel.name")
    params = {k: v[k] for k in ("alpha", "holder_c", "holder_alpha") if k in v}
    try:
        return get_kernel(v["name"], **params)
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), f"kernel.{exc.key}") from None


def _validate_experiment(values, command, process):
    exp = dict(EXPERIMENT_DEFAULTS)
    exp.update(values)
    for key in _POSITIVE:
        if exp[key] < (2 if key in ("n", "R", "n_max") else 1):
            raise ConfigurationError(f"experiment.{key} is too small", f"experiment.{key}")
    if exp["K_max"] is None:
        exp["K_max"] = 2 * process.halfwidth + 2
    if exp["K_max"] < 0:
        raise ConfigurationError("experiment.K_max must be >= 0", "experiment.K_max")
    if exp["L_max"] is not None and exp["L_max"] < 0:
        raise ConfigurationError("experiment.L_max must be >= 0", "experiment.L_max")
    if not 0 <= exp["seed"] < 2**64:
        raise ConfigurationError("experiment.seed must be an unsigned 64-bit integer", "experiment.seed")
    if any(p < 1 for p in exp["ps"]) or exp["p"] < 1:
        raise ConfigurationError("norm exponents must be >= 1", "experiment.p")
    if command == "lln" and not 1 <= exp["p"] < 2:
        raise ConfigurationError("p in [1,2) is required for lln", "experiment.p")
    grid = exp["n_grid"]
    if any(b <= a for a, b in zip(grid, grid[1:])) or any(n < 2 for n in grid):
        raise ConfigurationError("experiment.n_grid must be increasing and >= 2", "experiment.n_grid")
    return exp


def parse_config(text: str, command: str | None = None) -> Config:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"unreadable config: {exc}", "config") from None
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigurationError(f"unknown section [{sec}]", sec)
    raw = {}
    raw["process"], pv = _parse_section(parser, "process", True)
    raw["kernel"], kv = _parse_section(parser, "kernel", True)
    raw["experiment"], ev = _parse_section(parser, "experiment", False)
    process = _build_process(pv)
    kernel = _build_kernel(kv)
    exp = _validate_experiment(ev, command, process)
    return Config(process, kernel, exp, raw, text)


def load_config(path, command: str | None = None) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}", "config") from None
    return parse_config(text, command)
