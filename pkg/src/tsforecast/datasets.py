"""Embedded benchmark series with checksum verification."""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import IntegrityError
from .series import TimeSeries, parse_values


@dataclass(frozen=True)
class DatasetDescriptor:
    name: str
    length: int
    n_train: int
    n_test: int
    period: int | None
    source_citation: str


# name -> (length, n_train, period)
_TABLE = {
    "lynx": (114, 100, None),
    "sunspot": (288, 221, None),
    "airline": (144, 132, 12),
    "qsales": (24, 20, 4),
    "beer": (32, 24, 4),
    "deaths": (72, 60, 12),
}
DATASET_NAMES = tuple(_TABLE)


def _read_text(name: str) -> str:
    return resources.files("tsforecast").joinpath("data", f"{name}.dat").read_text()


@functools.cache
def descriptor(name: str) -> DatasetDescriptor:
    if name not in _TABLE:
        raise ValueError(f"unknown dataset {name!r}; choose from {', '.join(_TABLE)}")
    length, n_train, period = _TABLE[name]
    cite = next((l[len("# Source:"):].strip() for l in _read_text(name).splitlines()
                 if l.startswith("# Source:")), "")
    return DatasetDescriptor(name, length, n_train, length - n_train, period, cite)


def verify_text(text: str) -> list[float]:
    """Parse fixture text, checking the body against its `# sha256:` header."""
    lines = text.splitlines()
    declared = None
    body = []
    for line in lines:
        s = line.strip()
        if s.startswith("# sha256:"):
            declared = s.split(":", 1)[1].strip()
        elif s and not s.startswith("#"):
            body.append(s)
    if declared is None:
        raise IntegrityError("fixture has no checksum header")
    actual = hashlib.sha256(("\n".join(body) + "\n").encode()).hexdigest()
    if actual != declared:
        raise IntegrityError(f"checksum mismatch: header {declared[:12]}..., body {actual[:12]}...")
    return parse_values(body)


def load_dataset(name: str) -> TimeSeries:
    d = descriptor(name)
    values = verify_text(_read_text(name))
    if len(values) != d.length:
        raise IntegrityError(f"{name}: expected {d.length} values, found {len(values)}")
    return TimeSeries(values, d.period, name)


def load_file(path, period: int | None = None) -> TimeSeries:
    """External one-value-per-line file; a checksum header is verified when present."""
    text = Path(path).read_text()
    if "# sha256:" in text:
        values = verify_text(text)
    else:
        values = parse_values(text.splitlines())
    return TimeSeries(values, period, Path(path).stem)
