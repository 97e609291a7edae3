"""Observed count samples and their on-disk format."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .special import DomainError


class CountFileError(DomainError):
    """A count file could not be parsed; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class CountData:
    """A finite sample of non-negative integer counts."""

    counts: np.ndarray
    _values: np.ndarray = field(init=False, repr=False, compare=False)
    _freqs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("count data must be a non-empty 1-d sequence")
        if arr.dtype.kind == "f":
            if not np.all(np.isfinite(arr)) or np.any(arr != np.floor(arr)):
                raise DomainError("counts must be integers")
        elif arr.dtype.kind not in "iu":
            raise DomainError(f"counts must be integers, got dtype {arr.dtype}")
        arr = arr.astype(np.int64)
        if arr.min() < 0:
            raise DomainError("counts must be non-negative")
        arr.setflags(write=False)
        values, freqs = np.unique(arr, return_counts=True)
        object.__setattr__(self, "counts", arr)
        object.__setattr__(self, "_values", values)
        object.__setattr__(self, "_freqs", freqs)

    @property
    def n(self):
        return int(self.counts.size)

    @property
    def mean(self):
        return float(self.counts.mean())

    @property
    def max(self):
        return int(self._values[-1])

    def frequencies(self):
        """Distinct values (sorted) and how often each occurs."""
        return self._values, self._freqs

    def __len__(self):
        return self.n


def read_counts(path):
    """Read counts: one integer per line, ``#`` comments, optional ``count`` header."""
    counts = []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not counts and line.strip('"').lower() == "count":
            continue
        try:
            value = int(line)
        except ValueError:
            raise CountFileError(f"not an integer: {line!r}", lineno) from None
        if value < 0:
            raise CountFileError(f"negative count {value}", lineno)
        counts.append(value)
    if not counts:
        raise CountFileError("no counts found")
    return CountData(np.array(counts, dtype=np.int64))


def write_counts(data, path):
    values = data.counts if isinstance(data, CountData) else np.asarray(data)
    Path(path).write_text("".join(f"{int(v)}\n" for v in values))
