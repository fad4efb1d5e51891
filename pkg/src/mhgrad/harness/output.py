"""CSV emission with a leading ``#`` metadata block."""

from __future__ import annotations

import csv
import datetime as _dt
import functools
import io
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mhgrad import __version__


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name):
        return [r[name] for r in self.rows]

    def where(self, **match):
        return [r for r in self.rows if all(r[k] == v for k, v in match.items())]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


@functools.lru_cache(maxsize=1)
def version_string() -> str:
    """``git describe``-style version, falling back to the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def render(table: Table, timestamp: bool = True) -> str:
    buf = io.StringIO()
    buf.write(f"# mhgrad {version_string()}\n")
    if timestamp:
        buf.write(f"# timestamp={_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
    for k, v in table.meta.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([fmt(r.get(c)) for c in table.columns])
    return buf.getvalue()


def write(table: Table, path, timestamp: bool = True) -> None:
    text = render(table, timestamp)
    if path is None or str(path) == "-":
        print(text, end="")
        return
    Path(path).write_text(text, encoding="utf-8")


def read_rows(path_or_text) -> tuple[dict, list[dict]]:
    """Parse emitted CSV back into ``(meta, rows)``; values stay strings."""
    text = path_or_text
    if not ("\n" in str(path_or_text)):
        text = Path(path_or_text).read_text(encoding="utf-8")
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))
