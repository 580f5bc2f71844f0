"""Result files: typed CSV tables, JSON reports and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

__all__ = ["OutputDir", "format_value", "read_csv", "sha256_file"]

_TYPES = {bool: "bool", int: "int", float: "float", str: "str"}


def format_value(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def _type_name(values: Sequence[Any]) -> str:
    kinds = set()
    for v in values:
        if v is None:
            continue
        if isinstance(v, (bool, np.bool_)):
            kinds.add("bool")
        elif isinstance(v, (int, np.integer)):
            kinds.add("int")
        elif isinstance(v, (float, np.floating)):
            kinds.add("float")
        else:
            kinds.add("str")
    if kinds <= {"int"} and kinds:
        return "int"
    if kinds <= {"int", "float"} and kinds:
        return "float"
    if kinds == {"bool"}:
        return "bool"
    return "str"


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class OutputDir:
    """All writes of one run go through this object and stay inside ``root``."""

    root: Path
    written: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.root = Path(self.root).resolve()
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, name: str) -> Path:
        path = (self.root / name).resolve()
        if self.root not in path.parents:
            raise ValueError(f"refusing to write outside the output directory: {name}")
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _record(self, name: str):
        if name not in self.written:
            self.written.append(name)

    def write_table(self, name: str, rows: Iterable[dict[str, Any]], columns: Sequence[str] | None = None) -> Path:
        """CSV whose header cells read ``name:type``."""
        rows = list(rows)
        if columns is None:
            columns = list(rows[0].keys()) if rows else []
        types = [_type_name([r.get(c) for r in rows]) for c in columns]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"{c}:{t}" for c, t in zip(columns, types)])
        for r in rows:
            w.writerow([format_value(r.get(c)) for c in columns])
        path = self._path(name)
        path.write_text(buf.getvalue())
        self._record(name)
        return path

    def write_json(self, name: str, obj: Any) -> Path:
        path = self._path(name)
        path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
        self._record(name)
        return path

    def checksums(self) -> dict[str, str]:
        return {name: sha256_file(self.root / name) for name in self.written}


_PARSERS = {"int": int, "float": float, "str": str, "bool": lambda t: t == "true"}


def read_csv(path: str | Path) -> list[dict[str, Any]]:
    """Read a typed table back with its column types."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = [h.rsplit(":", 1) for h in header]
        out = []
        for row in reader:
            rec = {}
            for (name, typ), cell in zip(cols, row):
                rec[name] = None if cell == "" else _PARSERS[typ](cell)
            out.append(rec)
    return out
