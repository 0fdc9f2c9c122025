"""Measurement-value dictionaries: the legal readouts of one device mode.

A dictionary file is UTF-8 text with one value per line and no header, the
same layout EasyOCR uses for its character/word lists.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from .errors import DuplicateEntry, EmptyDictionary, InvalidRange, OverflowGuard

DEFAULT_ENTRY_CAP = 10**7

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def _as_decimal(value, name):
    if isinstance(value, float):
        value = repr(value)
    try:
        return Decimal(str(value))
    except InvalidOperation as exc:
        raise InvalidRange(f"{name} is not a number: {value!r}") from exc


@dataclass(frozen=True)
class RangeSpec:
    min_value: Decimal
    max_value: Decimal
    step: Decimal
    decimals: int = 0
    pad_width: int = 0
    prefix: str = ""
    suffix: str = ""

    def __post_init__(self):
        for name in ("min_value", "max_value", "step"):
            object.__setattr__(self, name, _as_decimal(getattr(self, name), name))
        if self.decimals < 0 or self.pad_width < 0:
            raise InvalidRange("decimals and pad_width must be non-negative")

    @classmethod
    def from_dict(cls, data):
        return cls(
            min_value=data["min_value"],
            max_value=data["max_value"],
            step=data["step"],
            decimals=int(data.get("decimals", 0)),
            pad_width=int(data.get("pad_width", 0)),
            prefix=data.get("prefix", ""),
            suffix=data.get("suffix", ""),
        )

    def scaled(self):
        """Return (min, max, step) as integers in units of 10**-decimals."""
        scale = Decimal(10) ** self.decimals
        out = []
        for name in ("min_value", "max_value", "step"):
            v = getattr(self, name) * scale
            if v != v.to_integral_value():
                raise InvalidRange(
                    f"{name}={getattr(self, name)} is not representable with {self.decimals} decimals"
                )
            out.append(int(v))
        return tuple(out)

    def format(self, scaled_value: int) -> str:
        value = Decimal(scaled_value).scaleb(-self.decimals)
        width = f"0{self.pad_width}" if self.pad_width else ""
        body = format(value, f"{width}.{self.decimals}f")
        return f"{self.prefix}{body}{self.suffix}"

    def parse(self, entry: str) -> Decimal:
        body = entry
        if self.prefix and body.startswith(self.prefix):
            body = body[len(self.prefix):]
        if self.suffix and body.endswith(self.suffix):
            body = body[: len(body) - len(self.suffix)]
        return Decimal(body)


@dataclass(frozen=True)
class PatternSpec:
    """A literal template with ``{NAME}`` placeholders.

    ``field_ranges`` maps each placeholder to ``[lo, hi]`` or ``[lo, hi, width]``
    (inclusive integer bounds, zero-padded to ``width``).
    """

    pattern: str
    field_ranges: dict = field(default_factory=dict)

    def __post_init__(self):
        names = self.field_names()
        if not names:
            raise InvalidRange(f"pattern {self.pattern!r} has no placeholders")
        for name in names:
            if name not in self.field_ranges:
                raise InvalidRange(f"no range for placeholder {name!r}")
            lo, hi, _ = self.bounds(name)
            if lo > hi:
                raise InvalidRange(f"field {name!r}: min {lo} > max {hi}")

    @classmethod
    def from_dict(cls, data):
        return cls(pattern=data["pattern"], field_ranges=dict(data["field_ranges"]))

    def field_names(self):
        seen = []
        for name in _PLACEHOLDER.findall(self.pattern):
            if name not in seen:
                seen.append(name)
        return seen

    def bounds(self, name):
        spec = self.field_ranges[name]
        if isinstance(spec, dict):
            return int(spec["min"]), int(spec["max"]), int(spec.get("width", 0))
        lo, hi = int(spec[0]), int(spec[1])
        width = int(spec[2]) if len(spec) > 2 else 0
        return lo, hi, width


@dataclass(frozen=True)
class Dictionary:
    name: str
    unit: str
    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise EmptyDictionary(f"dictionary {self.name!r} has no entries")
        seen = set()
        for e in entries:
            if not isinstance(e, str) or not e:
                raise ValueError(f"dictionary {self.name!r}: empty or non-string entry {e!r}")
            if "\n" in e or "\r" in e:
                raise ValueError(f"dictionary {self.name!r}: entry contains a line break: {e!r}")
            if e in seen:
                raise DuplicateEntry(f"dictionary {self.name!r}: duplicate entry {e!r}")
            seen.add(e)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, value):
        return value in self._set

    @property
    def _set(self):
        cached = self.__dict__.get("_entry_set")
        if cached is None:
            cached = frozenset(self.entries)
            object.__setattr__(self, "_entry_set", cached)
        return cached


def generate_numeric_dictionary(spec: RangeSpec, name="", unit="", cap=DEFAULT_ENTRY_CAP) -> Dictionary:
    lo, hi, step = spec.scaled()
    if step <= 0:
        raise InvalidRange(f"step must be positive, got {spec.step}")
    if lo > hi:
        raise InvalidRange(f"min {spec.min_value} > max {spec.max_value}")
    if (hi - lo) % step:
        raise InvalidRange(f"step {spec.step} does not divide [{spec.min_value}, {spec.max_value}]")
    count = (hi - lo) // step + 1
    if count > cap:
        raise OverflowGuard(f"{count} entries exceeds cap {cap}")
    entries = [spec.format(v) for v in range(lo, hi + 1, step)]
    return Dictionary(name=name, unit=unit, entries=tuple(entries))


def generate_pattern_dictionary(spec: PatternSpec, name="", unit="", cap=DEFAULT_ENTRY_CAP) -> Dictionary:
    names = spec.field_names()
    bounds = [spec.bounds(n) for n in names]
    count = 1
    for lo, hi, _ in bounds:
        count *= hi - lo + 1
    if count > cap:
        raise OverflowGuard(f"{count} entries exceeds cap {cap}")

    axes = [[f"{v:0{w}d}" for v in range(lo, hi + 1)] for lo, hi, w in bounds]
    entries = []
    seen = set()
    for combo in itertools.product(*axes):
        values = dict(zip(names, combo))
        text = _PLACEHOLDER.sub(lambda m: values[m.group(1)], spec.pattern)
        if text not in seen:
            seen.add(text)
            entries.append(text)
    return Dictionary(name=name, unit=unit, entries=tuple(entries))


def generate_from_spec(data: dict, cap=DEFAULT_ENTRY_CAP) -> Dictionary:
    """Build a dictionary from a spec JSON object (numeric or pattern)."""
    name = data.get("name", "")
    unit = data.get("unit", "")
    if "pattern" in data:
        return generate_pattern_dictionary(PatternSpec.from_dict(data), name, unit, cap)
    return generate_numeric_dictionary(RangeSpec.from_dict(data), name, unit, cap)


def save_dictionary(dictionary: Dictionary, path):
    path = Path(path)
    path.write_text("\n".join(dictionary.entries) + "\n", encoding="utf-8")


def load_dictionary(path, name=None, unit=None) -> Dictionary:
    """Read a dictionary file. Name and unit default to the file stem."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    entries = [line.rstrip("\r") for line in text.split("\n")]
    while entries and entries[-1] == "":
        entries.pop()
    if not entries:
        raise EmptyDictionary(f"{path} is empty")
    stem = path.stem
    return Dictionary(
        name=stem if name is None else name,
        unit=stem if unit is None else unit,
        entries=tuple(entries),
    )


def load_dictionary_dir(directory) -> dict:
    """Load every ``*.txt`` in a directory, keyed by file stem."""
    return {p.stem: load_dictionary(p) for p in sorted(Path(directory).glob("*.txt"))}


def sample_value(dictionary: Dictionary, rng: np.random.Generator) -> str:
    if not dictionary.entries:
        raise EmptyDictionary(dictionary.name)
    return dictionary.entries[int(rng.integers(len(dictionary.entries)))]
