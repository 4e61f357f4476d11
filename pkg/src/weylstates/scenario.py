"""Scenario configs: YAML (or JSON) files describing states, elements and command parameters.

Points are lists of numbers or rational strings (``["1/3", 2]``). A state is
a mapping with ``family`` plus family-specific keys and an optional ``h``;
an element is ``{terms: [{point, re, im}, ...], h}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .phase_space import PhasePoint
from .state_space import (
    CharacteristicState,
    FockDensity,
    Gaussian,
    Mixture,
    PointMixture,
    SubgroupCharacter,
    Tabulated,
    TraceState,
)
from .weyl_algebra import WeylElement

BUILTIN_PREFIX = "builtin:"

DEFAULT_TOLERANCES = {
    "phase": 1e-12,
    "psd": 1e-8,
    "psd_fock": 1e-6,
    "defect": 1e-2,
    "norm": 1e-3,
    "displacement": 1e-6,
    "unitarity": 1e-8,
    "clock": 1e-12,
    "rank": 1e-10,
    "ideal": 1e-10,
    "pullback": 1e-12,
    "residual": 1e-3,
}


class ConfigError(ValueError):
    """Invalid scenario; ``path`` locates the offending entry."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.detail = message


@dataclass
class Scenario:
    n: int
    seed: int
    tolerances: dict
    params: dict
    raw: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        out = dict(self.raw)
        out["n"] = self.n
        out["seed"] = self.seed
        out["tolerances"] = dict(sorted(self.tolerances.items()))
        return out

    def section(self, name: str) -> dict:
        sec = self.params.get(name, {}) or {}
        if not isinstance(sec, Mapping):
            raise ConfigError("must be a mapping", name)
        return dict(sec)


def builtin_names() -> list[str]:
    root = resources.files("weylstates") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def read_config(path: str | None) -> dict:
    if path is None:
        return {}
    if path.startswith(BUILTIN_PREFIX):
        name = path[len(BUILTIN_PREFIX) :]
        res = resources.files("weylstates") / "scenarios" / f"{name}.yaml"
        if not res.is_file():
            raise ConfigError(f"no bundled scenario {name!r}; available: {builtin_names()}", "config")
        text = res.read_text()
    else:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path} not found", "config")
        text = p.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError(f"unparseable config: {err}", "config") from err
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", "config")
    return data


def parse_tol_overrides(text: str | None) -> dict:
    """``"psd=1e-9,defect=0.02"`` -> {"psd": 1e-9, "defect": 0.02}."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}", "tol-overrides")
        k, v = (s.strip() for s in item.split("=", 1))
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {k!r}", "tol-overrides")
        try:
            out[k] = float(v)
        except ValueError:
            raise ConfigError(f"not a number: {v!r}", f"tol-overrides.{k}") from None
    return out


def build_scenario(data: dict, seed: int | None = None, tol_overrides: dict | None = None) -> Scenario:
    data = dict(data)
    n = data.get("n", 1)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError(f"phase-space half-dimension must be a positive integer, got {n!r}", "n")
    s = data.get("seed", 0) if seed is None else seed
    if not isinstance(s, int) or s < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {s!r}", "seed")
    tols = dict(DEFAULT_TOLERANCES)
    cfg_tols = data.get("tolerances", {}) or {}
    if not isinstance(cfg_tols, Mapping):
        raise ConfigError("must be a mapping", "tolerances")
    for k, v in cfg_tols.items():
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {k!r}", "tolerances")
        tols[k] = float(v)
    tols.update(tol_overrides or {})
    params = {k: v for k, v in data.items() if k not in ("n", "seed", "tolerances", "command")}
    return Scenario(n, s, tols, params, data)


# ------------------------------------------------------------------ parsers


def parse_point(value, n: int, path: str) -> PhasePoint:
    if not isinstance(value, (list, tuple)):
        raise ConfigError("point must be a list of coordinates", path)
    try:
        p = PhasePoint(value)
    except (ValueError, TypeError, ZeroDivisionError) as err:
        raise ConfigError(str(err), path) from None
    if p.n != n:
        raise ConfigError(f"point has {p.dim} coordinates, expected {2 * n}", path)
    return p


def parse_points(values, n: int, path: str) -> list[PhasePoint]:
    if not isinstance(values, list) or not values:
        raise ConfigError("expected a nonempty list of points", path)
    return [parse_point(v, n, f"{path}[{i}]") for i, v in enumerate(values)]


def parse_level(value, path: str) -> float:
    try:
        h = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"not a number: {value!r}", path) from None
    if not 0.0 <= h <= 1.0:
        raise ConfigError(f"level h={h} outside [0, 1]", path)
    return h


def parse_element(spec, n: int, path: str, default_h: float = 0.0) -> WeylElement:
    if not isinstance(spec, Mapping) or "terms" not in spec:
        raise ConfigError("element needs a 'terms' list", path)
    h = parse_level(spec.get("h", default_h), f"{path}.h")
    terms = []
    for i, t in enumerate(spec["terms"]):
        tp = f"{path}.terms[{i}]"
        if not isinstance(t, Mapping) or "point" not in t:
            raise ConfigError("term needs a 'point'", tp)
        c = complex(float(t.get("re", 1.0 if "im" not in t else 0.0)), float(t.get("im", 0.0)))
        terms.append((parse_point(t["point"], n, f"{tp}.point"), c))
    return WeylElement(terms, h=h, n=n)


def _matrix(value, path: str) -> np.ndarray:
    if isinstance(value, Mapping):
        re = np.asarray(value.get("re", 0.0), dtype=float)
        im = np.asarray(value.get("im", np.zeros_like(re)), dtype=float)
        return re + 1j * im
    try:
        return np.asarray(value, dtype=complex)
    except (TypeError, ValueError):
        raise ConfigError("not a numeric matrix", path) from None


def parse_family(spec: Mapping, n: int, h: float, rng: np.random.Generator, path: str):
    kind = spec.get("family")
    try:
        if kind == "gaussian":
            mean = spec.get("mean", [0.0] * (2 * n))
            cov = spec.get("cov", np.eye(2 * n).tolist())
            return Gaussian(np.asarray(mean, dtype=float), np.asarray(cov, dtype=float))
        if kind == "fock":
            hbar = float(spec.get("hbar", h))
            if hbar <= 0:
                raise ConfigError("fock family needs hbar > 0 (or a state level h > 0)", path)
            if "rho" in spec:
                return FockDensity(_matrix(spec["rho"], f"{path}.rho"), n, hbar)
            if "number" in spec:
                return FockDensity.number_state(int(spec["number"]), hbar, spec.get("N"), n)
            if spec.get("vacuum"):
                return FockDensity.vacuum(hbar, int(spec.get("N", 2)), n)
            N = int(spec.get("N", 16))
            return FockDensity.random(N, hbar, rng, n, spec.get("rank"))
        if kind == "point_mixture":
            return PointMixture(np.asarray(spec["support"], dtype=float), np.asarray(spec["weights"], dtype=float))
        if kind == "trace":
            return TraceState(n)
        if kind == "subgroup":
            gens = parse_points(spec.get("generators"), n, f"{path}.generators")
            char = spec.get("character", [0.0] * (2 * n))
            return SubgroupCharacter(tuple(gens), np.asarray(char, dtype=float), bool(spec.get("integer", False)))
        if kind == "tabulated":
            table = {}
            for i, e in enumerate(spec.get("entries", [])):
                p = parse_point(e.get("point"), n, f"{path}.entries[{i}].point")
                table[p] = complex(float(e.get("re", 0.0)), float(e.get("im", 0.0)))
            return Tabulated(table)
        if kind == "mixture":
            comps = [
                parse_family(c, n, h, rng, f"{path}.components[{i}]")
                for i, c in enumerate(spec.get("components", []))
            ]
            return Mixture(tuple(comps), np.asarray(spec.get("weights"), dtype=float))
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as err:
        raise ConfigError(str(err), path) from None
    raise ConfigError(f"unknown family {kind!r}", f"{path}.family")


def parse_state(spec, n: int, rng: np.random.Generator, path: str) -> tuple[str, CharacteristicState]:
    if not isinstance(spec, Mapping):
        raise ConfigError("state must be a mapping", path)
    h = parse_level(spec.get("h", 0.0), f"{path}.h")
    family = parse_family(spec, n, h, rng, path)
    if family.n != n:
        raise ConfigError(f"state lives on R^{2 * family.n}, scenario has n={n}", path)
    name = str(spec.get("name", spec.get("family")))
    return name, CharacteristicState(h, family)


def parse_states(sc: Scenario, rng: np.random.Generator, key: str = "states") -> list[tuple[str, CharacteristicState, dict]]:
    specs = sc.params.get(key)
    if not isinstance(specs, list) or not specs:
        raise ConfigError("expected a nonempty list of states", key)
    out = []
    for i, spec in enumerate(specs):
        name, st = parse_state(spec, sc.n, rng, f"{key}[{i}]")
        out.append((name, st, dict(spec)))
    return out


def json_ready(obj: Any):
    """Convert numpy scalars/arrays and complex numbers into JSON-friendly values."""
    if isinstance(obj, Mapping):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_ready(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj
