"""Job configuration: a small typed record, validated before anything runs."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields

from .jsonio import SCHEMA_VERSION, SchemaError, check_version

TOL_ENV = "WALLCROSS_TOL"
DEFAULT_TOL = 1e-10


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None or raw == "":
        return DEFAULT_TOL
    try:
        val = float(raw)
    except ValueError:
        raise SchemaError(f"{TOL_ENV}={raw!r} is not a number", TOL_ENV) from None
    if not val > 0:
        raise SchemaError(f"{TOL_ENV} must be positive", TOL_ENV)
    return val


@dataclass
class Truncation:
    N: int = 12      # lattice degree
    M: int = 6       # t-order for connections
    D: int = 2       # Z-polynomial degree


@dataclass
class Precision:
    tol: float = field(default_factory=default_tol)
    K: int = 30      # series orders
    depth: int = 5   # chain depth for Psi


@dataclass
class JobConfig:
    verb: str
    params: dict = field(default_factory=dict)
    truncation: Truncation = field(default_factory=Truncation)
    precision: Precision = field(default_factory=Precision)
    seed: int = 0
    out: str | None = None
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "JobConfig":
        if not isinstance(d, dict):
            raise SchemaError("config must be a JSON object")
        check_version(d, "config")
        _reject_unknown(d, JobConfig, "")
        if "verb" not in d or not isinstance(d["verb"], str):
            raise SchemaError("config needs a string 'verb'", "verb")
        tr = d.get("truncation", {})
        pr = d.get("precision", {})
        _reject_unknown(tr, Truncation, "truncation.")
        _reject_unknown(pr, Precision, "precision.")
        params = d.get("params", {})
        if not isinstance(params, dict):
            raise SchemaError("'params' must be an object", "params")
        try:
            cfg = JobConfig(d["verb"], dict(params), Truncation(**{k: int(v) for k, v in tr.items()}),
                            Precision(**{k: (float(v) if k == "tol" else int(v)) for k, v in pr.items()}),
                            int(d.get("seed", 0)), d.get("out"))
        except (TypeError, ValueError) as e:
            raise SchemaError(f"bad value in config: {e}") from None
        cfg.validate()
        return cfg

    def validate(self) -> None:
        t, p = self.truncation, self.precision
        for name, v in (("truncation.N", t.N), ("truncation.M", t.M), ("precision.K", p.K),
                        ("precision.depth", p.depth)):
            if v < 1:
                raise SchemaError(f"{name} must be >= 1", name)
        if t.D < 0:
            raise SchemaError("truncation.D must be >= 0", "truncation.D")
        if not p.tol > 0:
            raise SchemaError("precision.tol must be positive", "precision.tol")


def _reject_unknown(d, cls, prefix: str) -> None:
    if not isinstance(d, dict):
        raise SchemaError(f"'{prefix.rstrip('.')}' must be an object", prefix.rstrip("."))
    known = {f.name for f in fields(cls)}
    for k in d:
        if k not in known:
            raise SchemaError(f"unknown key '{prefix}{k}'", prefix + k)


def check_params(cfg: JobConfig, allowed) -> None:
    allowed = set(allowed)
    for k in cfg.params:
        if k not in allowed:
            raise SchemaError(f"unknown key 'params.{k}' for verb {cfg.verb!r}", "params." + k)
