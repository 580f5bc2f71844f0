"""Flat ``section.key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored.  Lists are comma separated.
Every key is typed and checked before anything runs; defaults that were not
given are recorded so the manifest can show the full resolved configuration.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

from ..gaussian_fields import FieldVariant
from ..gns_ground_state import GnsParameters, critical_exponent
from ..spectral_core import Convention

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "SCHEMA", "load_config", "parse_config", "config_from_mapping"]

KINDS = ("ground_state", "gns_verify", "covariance", "partition_ladder", "threshold_scan", "ou_rates",
         "drift_divergence")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


def _int(text: str) -> int:
    return int(text, 0)


def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(_int(t.strip()) for t in text.split(",") if t.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(_float(t.strip()) for t in text.split(",") if t.strip())


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return text

    return parse


_NONE = object()

# key -> (parser, default, kinds using it or None for all)
SCHEMA: dict[str, tuple[Callable[[str], Any], Any, tuple[str, ...] | None]] = {
    "run.kind": (_choice(*KINDS), _NONE, None),
    "run.seed": (_int, 0, None),
    "run.convention": (_choice("twopi", "plain"), "twopi", None),
    "run.workers": (_int, 1, None),
    "run.out": (str, None, None),
    "model.d": (_int, 1, None),
    "model.s": (_float, 1.0, None),
    "model.p": (_float, None, ("ground_state", "gns_verify", "partition_ladder", "threshold_scan",
                               "drift_divergence")),
    "model.K": (_float, None, ("partition_ladder", "drift_divergence")),
    "model.variant": (_choice(*(v.value for v in FieldVariant)), "massless_complex",
                      ("covariance", "partition_ladder", "threshold_scan")),
    "solver.tol": (_float, 1e-9, ("ground_state", "gns_verify", "threshold_scan", "drift_divergence")),
    "solver.residual_tol": (_float, 1e-6, ("ground_state", "gns_verify", "threshold_scan", "drift_divergence")),
    "solver.max_iter": (_int, 20000, ("ground_state", "gns_verify", "threshold_scan", "drift_divergence")),
    "grid.modes": (_int, None, ("ground_state", "covariance")),
    "grid.box": (_float, None, ("ground_state",)),
    "sampling.samples": (_int, None, ("gns_verify", "covariance", "partition_ladder", "threshold_scan",
                                      "ou_rates", "drift_divergence")),
    "sampling.ladder": (_int_list, (16, 32, 64, 128), ("partition_ladder", "threshold_scan")),
    "verify.slack": (_float, 1e-6, ("gns_verify",)),
    "covariance.max_mode": (_int, 8, ("covariance",)),
    "covariance.z_max": (_float, 4.0, ("covariance",)),
    "scan.K": (_float_list, None, ("threshold_scan",)),
    "scan.K_over_mass": (_float_list, None, ("threshold_scan",)),
    "rates.M_ladder": (_int_list, (16, 32, 64, 128, 256), ("ou_rates",)),
    "rates.time_steps": (_int, 256, ("ou_rates", "drift_divergence")),
    "rates.oversample": (_int, 4, ("ou_rates",)),
    "drift.rho_inv": (_int_list, (8, 16, 32, 64), ("drift_divergence",)),
    "drift.delta": (_float, 0.05, ("drift_divergence",)),
    "drift.alpha": (_float, None, ("drift_divergence",)),
    "drift.eta": (_float, None, ("drift_divergence",)),
    "drift.modes_per_inv_rho": (_int, 32, ("drift_divergence",)),
    "drift.M_per_inv_rho": (_int, 1, ("drift_divergence",)),
}

_SAMPLE_DEFAULTS = {"gns_verify": 1000, "covariance": 10000, "partition_ladder": 100000,
                    "threshold_scan": 100000, "ou_rates": 1000, "drift_divergence": 1000}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    convention: Convention
    workers: int
    out: str | None
    params: dict[str, Any]
    defaults: tuple[str, ...] = ()
    source: str | None = None
    lines: dict[str, int] = field(default_factory=dict, compare=False)

    def __getitem__(self, key: str) -> Any:
        return self.params[key]

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    def resolved(self) -> dict[str, Any]:
        """Everything that determines the numbers (worker count and output
        location excluded)."""
        out = {"run.kind": self.kind, "run.seed": self.seed, "run.convention": self.convention.value}
        out.update({k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.params.items())})
        return out

    def digest(self) -> str:
        text = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_overrides(self, seed: int | None = None, out: str | None = None, workers: int | None = None,
                       convention: str | None = None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            _check_seed(seed, "run.seed", None)
            cfg = replace(cfg, seed=int(seed))
        if out is not None:
            cfg = replace(cfg, out=str(out))
        if workers is not None:
            if workers < 1:
                raise ConfigError("must be at least 1", "run.workers")
            cfg = replace(cfg, workers=int(workers))
        if convention is not None:
            cfg = replace(cfg, convention=Convention(_choice("twopi", "plain")(convention)))
            _validate(cfg)
        return cfg


def _check_seed(seed: int, key: str, line: int | None):
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", key, line)


def _dyadic(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def parse_config(text: str, source: str | None = None, kind: str | None = None) -> ExperimentConfig:
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'section.key = value', got {body!r}", None, lineno)
        key, value = (t.strip() for t in body.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError("unknown key", key, lineno)
        if key in raw:
            raise ConfigError(f"duplicate key (first set on line {raw[key][1]})", key, lineno)
        raw[key] = (value, lineno)
    return _build(raw, source, kind)


def config_from_mapping(values: dict[str, Any], kind: str | None = None) -> ExperimentConfig:
    """Build a config from already-split keys (values as text or numbers)."""
    raw = {}
    for key, value in values.items():
        if key not in SCHEMA:
            raise ConfigError("unknown key", key)
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        raw[key] = (str(value), None)
    return _build(raw, None, kind)


def load_config(path: str | Path, kind: str | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), str(path), kind)


def _build(raw: dict[str, tuple[str, int | None]], source: str | None, kind: str | None) -> ExperimentConfig:
    if "run.kind" in raw:
        text, line = raw["run.kind"]
        try:
            file_kind = SCHEMA["run.kind"][0](text)
        except ValueError as exc:
            raise ConfigError(str(exc), "run.kind", line) from None
        if kind is not None and kind != file_kind:
            raise ConfigError(f"config is for '{file_kind}', not '{kind}'", "run.kind", line)
        kind = file_kind
    if kind is None:
        raise ConfigError("experiment kind missing", "run.kind")
    values: dict[str, Any] = {}
    defaults = []
    lines = {k: ln for k, (_, ln) in raw.items() if ln is not None}
    for key, (parser, default, kinds) in SCHEMA.items():
        if key == "run.kind":
            continue
        applies = kinds is None or kind in kinds
        if key in raw:
            text, line = raw[key]
            if not applies:
                raise ConfigError(f"not used by experiment '{kind}'", key, line)
            try:
                values[key] = parser(text)
            except ValueError as exc:
                raise ConfigError(f"cannot parse {text!r}: {exc}", key, line) from None
        elif applies:
            if key == "sampling.samples":
                default = _SAMPLE_DEFAULTS[kind]
            values[key] = default
            defaults.append(key)
    run = {k: values.pop(k) for k in ("run.seed", "run.convention", "run.workers", "run.out")}
    _check_seed(run["run.seed"], "run.seed", lines.get("run.seed"))
    if run["run.workers"] < 1:
        raise ConfigError("must be at least 1", "run.workers", lines.get("run.workers"))
    cfg = ExperimentConfig(kind, run["run.seed"], Convention(run["run.convention"]), run["run.workers"],
                           run["run.out"], values, tuple(d for d in defaults if not d.startswith("run.")),
                           source, lines)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    """Module preconditions, checked before any computation."""
    v, kind = cfg.params, cfg.kind

    def fail(key, message):
        raise ConfigError(message, key, cfg.lines.get(key))

    d, s = v["model.d"], v["model.s"]
    if d not in (1, 2, 3):
        fail("model.d", "d must be 1, 2 or 3")
    if not s > 0:
        fail("model.s", "s must be positive (s > 0)")
    p = v.get("model.p")
    needs_p = kind in ("ground_state", "gns_verify", "partition_ladder", "drift_divergence")
    if needs_p and p is None:
        fail("model.p", "required for this experiment")
    if p is not None:
        if not p > 2:
            fail("model.p", f"need p > 2, got {p}")
        if kind in ("ground_state", "gns_verify", "drift_divergence"):
            try:
                GnsParameters(d, s, p)
            except ValueError as exc:
                fail("model.p", str(exc))
    if kind in ("covariance", "partition_ladder", "threshold_scan") and v["model.variant"] != "massless_complex":
        if kind != "covariance":
            fail("model.variant", "partition experiments use the massless complex field")
    if kind in ("partition_ladder", "threshold_scan", "ou_rates", "drift_divergence") and not s > d / 2:
        fail("model.s", f"need s > d/2 = {d / 2:g} for a function-valued field")
    if "sampling.samples" in v:
        minimum = 100 if kind == "covariance" else 2
        if v["sampling.samples"] < minimum:
            fail("sampling.samples", f"need at least {minimum} samples")
    if "solver.tol" in v:
        for key in ("solver.tol", "solver.residual_tol"):
            if not v[key] > 0:
                fail(key, "must be positive")
        if v["solver.max_iter"] < 1:
            fail("solver.max_iter", "must be at least 1")
    if v.get("grid.modes") is not None and v["grid.modes"] < 1:
        fail("grid.modes", "must be at least 1")
    if v.get("grid.box") is not None and not v["grid.box"] > 0:
        fail("grid.box", "must be positive")
    if "sampling.ladder" in v:
        ladder = v["sampling.ladder"]
        if len(ladder) < 3:
            fail("sampling.ladder", "a ladder needs at least 3 levels")
        if list(ladder) != sorted(set(ladder)) or ladder[0] < 1:
            fail("sampling.ladder", "levels must be positive, distinct and increasing")
    if kind == "partition_ladder" and not (v["model.K"] is not None and v["model.K"] > 0):
        fail("model.K", "need K > 0")
    if kind == "threshold_scan":
        p_crit = critical_exponent(d, s)
        if p is not None and abs(p - p_crit) > 1e-12:
            fail("model.p", f"threshold scans need the critical exponent p = 4s/d + 2 = {p_crit:g}")
        given = [k for k in ("scan.K", "scan.K_over_mass") if v[k] is not None]
        if len(given) != 1:
            fail("scan.K", "give exactly one of scan.K and scan.K_over_mass")
        grid = v[given[0]]
        if not grid or grid[0] <= 0 or list(grid) != sorted(grid):
            fail(given[0], "K grid must be positive and increasing")
    if kind == "covariance":
        if v["covariance.max_mode"] < 1:
            fail("covariance.max_mode", "must be at least 1")
        modes = v["grid.modes"]
        if modes is not None and modes < v["covariance.max_mode"]:
            fail("grid.modes", "must be at least covariance.max_mode")
    if kind == "ou_rates":
        M = v["rates.M_ladder"]
        if len(M) < 4:
            fail("rates.M_ladder", "need at least 4 values of M")
        if any(not _dyadic(m) for m in M) or list(M) != sorted(set(M)):
            fail("rates.M_ladder", "M values must be dyadic and increasing")
        if v["rates.oversample"] < 1:
            fail("rates.oversample", "must be at least 1")
    if "rates.time_steps" in v and v["rates.time_steps"] < 1:
        fail("rates.time_steps", "must be at least 1")
    if kind == "drift_divergence":
        K = v["model.K"]
        if K is None or not K > 0:
            fail("model.K", "need K > 0")
        if p < critical_exponent(d, s) - 1e-12:
            fail("model.p", f"need p >= 4s/d + 2 = {critical_exponent(d, s):g} for a divergent drift")
        rho_inv = v["drift.rho_inv"]
        if len(rho_inv) < 4 or any(not _dyadic(r) or r < 2 for r in rho_inv):
            fail("drift.rho_inv", "need at least 4 dyadic values of 1/rho, each >= 2")
        if not 0 < v["drift.delta"] < 0.2:
            fail("drift.delta", "need 0 < delta < 0.2")
        if v["drift.eta"] is not None and not 0 < v["drift.eta"] < K:
            fail("drift.eta", "need 0 < eta < K")
        if v["drift.alpha"] is not None and not v["drift.alpha"] > 0:
            fail("drift.alpha", "need alpha > 0")
        for key in ("drift.modes_per_inv_rho", "drift.M_per_inv_rho"):
            if not _dyadic(v[key]):
                fail(key, "must be a power of two")
