"""Line-oriented CTF training files: `|labels v1 .. vk|features f1 .. fn`.

Files can run to gigabytes, so both directions stream: the writer consumes a
record iterable, the parser yields records one line at a time and never holds
more than the current line.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

__all__ = ["CtfRecord", "CtfFormatError", "write_ctf", "parse_ctf", "write_ctf_file", "parse_ctf_file"]


@dataclass(frozen=True)
class CtfRecord:
    labels: tuple[float, ...]
    features: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(map(float, self.labels)))
        object.__setattr__(self, "features", tuple(map(float, self.features)))
        if not self.labels or not self.features:
            raise ValueError("labels and features must both be non-empty")

    def label_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.float64)

    def feature_array(self) -> np.ndarray:
        return np.asarray(self.features, dtype=np.float64)


class CtfFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


# pixel data is almost entirely a handful of values; short-circuit those
_COMMON = {1.0: "1", 255.0: "255"}


def _format_value(v: float) -> str:
    # integers print bare; everything else as shortest round-trip decimal
    if v == 0.0:
        return "-0" if np.signbit(v) else "0"  # keep -0.0 round-trippable
    cached = _COMMON.get(v)
    if cached is not None:
        return cached
    if abs(v) < 1e16 and v == int(v):
        return str(int(v))
    return repr(v)


def write_ctf(records: Iterable[CtfRecord], sink: IO[str]) -> int:
    """Write records one per line; returns the line count.

    All records must share the first record's dimensions.
    """
    count = 0
    dims: tuple[int, int] | None = None
    for rec in records:
        if dims is None:
            dims = (len(rec.labels), len(rec.features))
        elif (len(rec.labels), len(rec.features)) != dims:
            raise ValueError(
                f"record {count}: dimensions {(len(rec.labels), len(rec.features))} "
                f"differ from first record {dims}"
            )
        labels = " ".join(map(_format_value, rec.labels))
        features = " ".join(map(_format_value, rec.features))
        sink.write(f"|labels {labels}|features {features}\n")
        count += 1
    return count


def _parse_field(body: str, name: str, want_dim: int, line_no: int) -> tuple[float, ...]:
    tokens = body.split()
    if len(tokens) != want_dim:
        raise CtfFormatError(
            line_no, f"{name} has {len(tokens)} values, expected {want_dim}"
        )
    try:
        return tuple(map(float, tokens))
    except ValueError as exc:
        raise CtfFormatError(line_no, f"non-numeric {name} value: {exc}") from exc


def parse_ctf(source: IO[str], label_dim: int, feature_dim: int) -> Iterator[CtfRecord]:
    """Stream records out of a CTF text stream.

    A stray extra pipe before `labels` (seen in the wild) is tolerated; the
    writer never produces one.
    """
    if label_dim < 1 or feature_dim < 1:
        raise ValueError("label_dim and feature_dim must be >= 1")
    return _parse_lines(source, label_dim, feature_dim)


def _parse_lines(source: IO[str], label_dim: int, feature_dim: int) -> Iterator[CtfRecord]:
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line:
            continue
        stripped = line.lstrip("|")
        if len(line) - len(stripped) not in (1, 2):
            raise CtfFormatError(line_no, "expected line to start with '|labels'")
        parts = stripped.split("|")
        if len(parts) != 2:
            raise CtfFormatError(
                line_no, f"expected 2 pipe-separated fields, found {len(parts)}"
            )
        label_part, feature_part = parts
        if not label_part.startswith("labels "):
            raise CtfFormatError(line_no, "first field must be 'labels'")
        if not feature_part.startswith("features "):
            raise CtfFormatError(line_no, "second field must be 'features'")
        yield CtfRecord(
            labels=_parse_field(label_part[len("labels ") :], "labels", label_dim, line_no),
            features=_parse_field(
                feature_part[len("features ") :], "features", feature_dim, line_no
            ),
        )


def write_ctf_file(records: Iterable[CtfRecord], path: str | Path) -> int:
    with open(path, "w", encoding="ascii", newline="") as fh:
        return write_ctf(records, fh)


def parse_ctf_file(path: str | Path, label_dim: int, feature_dim: int) -> Iterator[CtfRecord]:
    with open(path, "r", encoding="ascii") as fh:
        yield from parse_ctf(fh, label_dim, feature_dim)
