"""JSON in/out: versioned documents, a tolerant encoder and content digests."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path

import flint
import numpy as np

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """A document that does not follow the expected layout.  `key` names the offending entry."""

    def __init__(self, msg: str, key: str | None = None):
        super().__init__(msg)
        self.key = key


def to_plain(x):
    """Recursively convert numbers and containers to JSON-compatible values.

    Exact rationals become strings like "3/4"; complex numbers become [re, im];
    non-finite floats become strings so the output stays strict JSON.
    """
    if hasattr(x, "to_json") and not isinstance(x, type):
        return to_plain(x.to_json())
    if isinstance(x, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): to_plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [to_plain(x.real), to_plain(x.imag)]
    if isinstance(x, (flint.fmpq, flint.fmpz)):
        return str(x)
    if is_dataclass(x):
        return to_plain(asdict(x))
    if x is None or isinstance(x, str):
        return x
    return str(x)


def dumps(obj) -> str:
    return json.dumps(to_plain(obj), indent=2, sort_keys=True)


def digest(obj) -> str:
    """sha256 of the canonical (sorted, compact) JSON form."""
    s = json.dumps(to_plain(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(s.encode()).hexdigest()


def load(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such file: {p}")
    with p.open() as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{p}: not valid JSON ({e})") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{p}: top level must be an object")
    return check_version(doc, str(p))


def check_version(doc: dict, where: str = "input") -> dict:
    v = doc.get("schema_version", SCHEMA_VERSION)
    if v != SCHEMA_VERSION:
        raise SchemaError(f"{where}: schema_version {v} is not supported (expected {SCHEMA_VERSION})",
                          "schema_version")
    return doc


def save(obj, path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps(obj) + "\n")


@dataclass
class Certificate:
    name: str
    passed: bool
    residual: float | None = None
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "residual": self.residual,
                "detail": to_plain(self.detail)}


@dataclass
class Report:
    verb: str
    config: dict
    inputs_digest: str
    results: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.certificates)

    def to_json(self, timing: bool = True) -> dict:
        out = {"schema_version": SCHEMA_VERSION, "verb": self.verb, "config": to_plain(self.config),
               "inputs_digest": self.inputs_digest, "results": to_plain(self.results),
               "certificates": [c.to_json() for c in self.certificates], "passed": self.passed}
        if timing:
            out["timing"] = to_plain(self.timing)
        return out
