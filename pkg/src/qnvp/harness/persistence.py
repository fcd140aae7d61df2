"""Deterministic CSV tables, structured-text summaries and the run manifest."""
from __future__ import annotations

import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from ..errors import ValidationError


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


@dataclass
class Table:
    name: str
    header: list
    rows: list = field(default_factory=list)
    operation: str = ""
    inputs: list = field(default_factory=list)

    def add(self, *row):
        if len(row) != len(self.header):
            raise ValueError(f"row of length {len(row)} for header {self.header}")
        self.rows.append(row)

    def column(self, name):
        i = self.header.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        lines = [",".join(self.header)] + [",".join(fmt(v) for v in r) for r in self.rows]
        return "\n".join(lines) + "\n"


@dataclass
class Report:
    kind: str
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    def table(self, name, header, operation="", inputs=()):
        t = Table(name, list(header), operation=operation, inputs=list(inputs))
        self.tables[name] = t
        return t

    def summary_text(self) -> str:
        lines = [f"study = {self.kind}"]
        lines += [f"{k} = {fmt(v)}" for k, v in sorted(self.summary.items())]
        lines += [f"violation = {v}" for v in self.violations]
        return "\n".join(lines) + "\n"


def prepare_output(path, force: bool = False) -> Path:
    out = Path(path)
    if (out / "manifest.json").exists() and not force:
        raise ValidationError(f"{out} already holds a completed run; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_report(report: Report, out: Path, config: dict, started: float) -> dict:
    """Write tables and summary, then the manifest indexing them."""
    artifacts = []
    for name in sorted(report.tables):
        t = report.tables[name]
        fname = f"{name}.csv"
        (out / fname).write_text(t.to_csv())
        artifacts.append({"path": fname, "operation": t.operation, "inputs": t.inputs,
                          "columns": t.header})
    (out / "summary.txt").write_text(report.summary_text())
    artifacts.append({"path": "summary.txt", "operation": f"study:{report.kind}", "inputs": []})
    manifest = {
        "study": report.kind,
        "config": config,
        "versions": {
            "qnvp": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
        },
        "wall_clock_s": time.time() - started,
        "artifacts": artifacts,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str))
    validate_manifest(out)
    return manifest


def validate_manifest(out) -> None:
    out = Path(out)
    manifest = json.loads((out / "manifest.json").read_text())
    missing = [a["path"] for a in manifest["artifacts"] if not (out / a["path"]).exists()]
    if missing:
        raise ValidationError(f"manifest references missing artifacts: {missing}")
