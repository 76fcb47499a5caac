"""Claim objects and JSON reports shared by all experiments."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..stats import Estimate

SCHEMA_VERSION = 1


@dataclass
class Claim:
    claim: str
    ref: str
    observed: Any
    expected: Any
    tolerance: Any
    passed: bool

    def as_dict(self) -> dict:
        return {"claim": self.claim, "ref": self.ref, "observed": _plain(self.observed),
                "expected": _plain(self.expected), "tolerance": _plain(self.tolerance),
                "pass": bool(self.passed)}


def _plain(x):
    if isinstance(x, Estimate):
        return {"mean": _plain(x.mean), "stderr": _plain(x.stderr), "n": x.n_samples, "method": x.method}
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return {f.name: _plain(getattr(x, f.name)) for f in dataclasses.fields(x)}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _value(x) -> float:
    return x.mean if isinstance(x, Estimate) else float(x)


def band(claim: str, ref: str, observed, lo: float, hi: float, open_: bool = False) -> Claim:
    v = _value(observed)
    ok = (lo < v < hi) if open_ else (lo <= v <= hi)
    return Claim(claim, ref, observed, {"low": lo, "high": hi, "open": open_}, None, ok)


def near(claim: str, ref: str, observed, expected: float, tol: float) -> Claim:
    v = _value(observed)
    return Claim(claim, ref, observed, expected, tol, abs(v - expected) <= tol)


def sigma(claim: str, ref: str, observed: Estimate, expected: float, k: float = 3.0) -> Claim:
    tol = k * observed.stderr
    return Claim(claim, ref, observed, expected, {"stderr_multiple": k, "absolute": tol},
                 abs(observed.mean - expected) <= tol)


def truth(claim: str, ref: str, ok: bool, observed=None, expected=True) -> Claim:
    return Claim(claim, ref, observed if observed is not None else bool(ok), expected, None, bool(ok))


@dataclass
class Report:
    experiment: str
    config: dict
    claims: list[Claim] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    incomplete: bool = False
    files: dict[str, Callable] = field(default_factory=dict, repr=False)

    def add(self, *claims: Claim) -> None:
        self.claims.extend(claims)

    def add_table(self, name: str, rows: list[dict]) -> None:
        """Register ``rows`` to be written as ``name`` (a CSV file) by the caller."""
        self.files[name] = lambda path: write_rows(rows, path)

    def write_files(self, directory) -> list[str]:
        written = []
        for name, writer in self.files.items():
            path = os.path.join(directory, name)
            writer(path)
            written.append(path)
        return written

    @property
    def passed(self) -> bool:
        return not self.incomplete and all(c.passed for c in self.claims)

    def as_dict(self) -> dict:
        return {"schema": SCHEMA_VERSION, "experiment": self.experiment, "config": _plain(self.config),
                "claims": [c.as_dict() for c in self.claims], "data": _plain(self.data),
                "incomplete": self.incomplete, "pass": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def summary_lines(self) -> list[str]:
        out = []
        for c in self.claims:
            obs = c.observed.mean if isinstance(c.observed, Estimate) else c.observed
            out.append(f"{'PASS' if c.passed else 'FAIL'}  {self.experiment}: {c.claim}  observed={obs}")
        return out


def write_rows(rows: list[dict], path) -> None:
    fields: list[str] = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(v) for k, v in r.items()})


def _cell(v):
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return v
