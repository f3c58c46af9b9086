"""Report emission, run manifests and config files.

CSV output uses ``.`` decimals, ``\\n`` line endings and a header naming
every column; floats are written with ``repr`` so equal reports give
byte-identical files.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import io
import json
import os
import time
from pathlib import Path

from .errors import ConfigError

VERSION = "0.1.0"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_plain)


def _plain(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


@dataclasses.dataclass
class RunManifest:
    subcommand: str
    config: dict
    master_seed: int | None = None
    outputs: list[str] = dataclasses.field(default_factory=list)
    timestamp: str = ""
    version: str = VERSION

    def __post_init__(self):
        if not self.timestamp:
            epoch = os.environ.get("SOURCE_DATE_EPOCH")
            t = time.gmtime(int(epoch)) if epoch else time.gmtime()
            self.timestamp = time.strftime("%Y-%m-%dT%H:%M:%SZ", t)

    @property
    def digest(self) -> str:
        return config_digest({"subcommand": self.subcommand, "config": self.config})

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["config_digest"] = self.digest
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        if "subcommand" not in d or "config" not in d:
            raise ConfigError("manifest lacks subcommand or config")
        return cls(d["subcommand"], d["config"], d.get("master_seed"), list(d.get("outputs", [])), d.get("timestamp", ""), d.get("version", VERSION))


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


@dataclasses.dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[dict]

    def csv(self) -> str:
        return csv_text(self.columns, self.rows)


def emit_report(tables: list[Table], summary: dict, manifest: RunManifest, out_dir, formats=("csv", "json")) -> list[Path]:
    """Write each table as ``<name>.csv`` and the summary as ``summary.json``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        if "csv" in formats:
            for t in tables:
                p = out / f"{t.name}.csv"
                p.write_text(t.csv(), newline="")
                paths.append(p)
        if "json" in formats:
            p = out / "summary.json"
            manifest.outputs = [q.name for q in paths] + [p.name]
            body = {"manifest": manifest.to_dict(), **summary}
            p.write_text(json.dumps(body, sort_keys=True, indent=2, default=_plain) + "\n")
            paths.append(p)
    except OSError as exc:
        raise ConfigError(f"cannot write to {out}: {exc}") from exc
    return paths


# -- config files -------------------------------------------------------------


def _coerce(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", ""):
        return None
    return text


def load_config(path) -> tuple[str | None, dict]:
    """Read an INI file or a JSON manifest into ``(subcommand, options)``.

    INI files are flat ``key = value`` pairs; section names are only for
    grouping, except a ``[run]`` key ``subcommand``.  JSON manifests carry
    the subcommand and the resolved options of an earlier run.
    """
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON in {p}: {exc}") from exc
        d = d.get("manifest", d)
        m = RunManifest.from_dict(d)
        return m.subcommand, dict(m.config)
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"bad config file {p}: {exc}") from exc
    opts = {}
    for sec in cp.sections():
        for key, val in cp[sec].items():
            opts[key.replace("-", "_")] = _coerce(val.strip())
    sub = opts.pop("subcommand", None)
    return sub, opts
