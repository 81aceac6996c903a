"""Experiment config files: INI-style ``key = value`` sections.

Each subcommand reads its own section (``[simulate]``, ``[doa]`` or
``[oracle]``). Keys are case-insensitive. Unknown sections and keys are
errors. Lists are whitespace separated; numeric lists may also use commas.
Norm pairs are written ``2,2``, ``1,1`` and ``2,1``.
"""
from __future__ import annotations

import configparser
import math
import os
import re

from .core import MixedNormIndex
from .doa import MUSIC, DoaConfig
from .experiments import ExperimentConfig, OracleConfig
from .noise import NoiseSpec

__all__ = ["ConfigError", "load_config", "read_section", "parse_methods", "SECTIONS"]


class ConfigError(ValueError):
    pass


def _int(v):
    return int(v)


def _float(v):
    return float(v)


def _floats(v):
    return tuple(float(t) for t in re.split(r"[,\s]+", v.strip()) if t)


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _str(v):
    return v.strip()


def parse_methods(text, allow_music=False):
    out = []
    for tok in text.split():
        if tok.lower() == MUSIC:
            if not allow_music:
                raise ValueError("music is only available for DOA runs")
            out.append(MUSIC)
        else:
            out.append(MixedNormIndex.parse(tok).require_supported())
    if not out:
        raise ValueError("no methods given")
    return tuple(out)


_COMMON = {
    "seed": _int,
    "threads": _int,
    "max_iters": _int,
}
_PROBLEM = {
    "m": _int,
    "p": _int,
    "k": _int,
    "q": _int,
    "trials": _int,
    "noise": _str,
    "snr_db": _float,
    "nu": _float,
    "lambda": _float,
    "sigma_x": _float,
    "methods": parse_methods,
    "rel_tol": _float,
}
SECTIONS = {
    "simulate": {**_COMMON, **_PROBLEM, "sweep": _str, "values": _floats, "record_wall_time": _bool},
    "oracle": {**_COMMON, **_PROBLEM},
    "doa": {
        **_COMMON,
        "m": _int,
        "k": _int,
        "doas": _floats,
        "q": _int,
        "snr_db": _floats,
        "lambda": _float,
        "grid_lo": _float,
        "grid_hi": _float,
        "grid_step": _float,
        "trials": _int,
        "methods": lambda v: parse_methods(v, allow_music=True),
    },
}


def read_section(path, section):
    """Parse ``section`` of the config file at ``path`` into a dict of typed
    values. Raises ConfigError on unknown keys or malformed values."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"{path}: unknown section [{sec}]")
    if not cp.has_section(section):
        raise ConfigError(f"{path}: missing section [{section}]")
    schema = SECTIONS[section]
    out = {}
    for key, raw in cp.items(section):
        if key not in schema:
            raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
        try:
            out[key] = schema[key](raw)
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for {key!r}: {exc}") from None
    return out


def _noise(d, default_family="gaussian"):
    return NoiseSpec(
        family=d.get("noise", default_family),
        snr_db=d.get("snr_db", math.inf),
        nu=d.get("nu"),
        lam=d.get("lambda"),
        sigma_x=d.get("sigma_x", 1.0),
    )


def _default_threads():
    return os.cpu_count() or 1


def load_config(path, section, seed=None, threads=None):
    """Build the run configuration for ``section`` from the file at ``path``.

    ``seed`` and ``threads`` override the file's values when given.
    """
    d = read_section(path, section)
    if seed is not None:
        d["seed"] = seed
    if threads is not None:
        d["threads"] = threads
    d.setdefault("threads", _default_threads())
    try:
        if section == "simulate":
            return _simulate(d)
        if section == "oracle":
            return _oracle(d)
        return _doa(d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _simulate(d):
    sweep = d.get("sweep", "snr")
    values = d.get("values")
    if values is None:
        raise ValueError("missing key 'values'")
    if sweep == "snr":
        d.setdefault("snr_db", values[0])
    elif sweep == "nu":
        d.setdefault("nu", values[0])
    noise = _noise(d)
    if sweep == "q":
        values = tuple(int(v) for v in values)
    kw = dict(
        sweep_var=sweep,
        sweep_values=values,
        noise=noise,
        threads=d["threads"],
    )
    for key, field in (("m", "m"), ("p", "p"), ("k", "K"), ("q", "q"), ("trials", "trials"),
                       ("methods", "methods"), ("seed", "seed"), ("max_iters", "max_iters"),
                       ("rel_tol", "rel_tol"), ("record_wall_time", "record_wall_time")):
        if key in d:
            kw[field] = d[key]
    return ExperimentConfig(**kw)


def _oracle(d):
    kw = dict(noise=_noise(d), threads=d["threads"])
    for key, field in (("m", "m"), ("p", "p"), ("k", "K"), ("q", "q"), ("trials", "trials"),
                       ("methods", "methods"), ("seed", "seed"), ("max_iters", "max_iters"),
                       ("rel_tol", "rel_tol")):
        if key in d:
            kw[field] = d[key]
    return OracleConfig(**kw)


def _doa(d):
    kw = dict(threads=d["threads"])
    for key, field in (("m", "m"), ("doas", "doas"), ("q", "q"), ("snr_db", "snr_db"),
                       ("lambda", "lam"), ("grid_lo", "grid_lo"), ("grid_hi", "grid_hi"),
                       ("grid_step", "grid_step"), ("trials", "trials"), ("seed", "seed"),
                       ("methods", "methods"), ("max_iters", "max_iters")):
        if key in d:
            kw[field] = d[key]
    cfg = DoaConfig(**kw)
    if "k" in d and d["k"] != cfg.K:
        raise ValueError(f"k = {d['k']} but {cfg.K} DOAs were given")
    return cfg
