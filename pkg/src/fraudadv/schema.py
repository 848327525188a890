"""Dataset schema: feature types, one-hot layout, editability and checked flags.

Schema files are INI-style. A ``[dataset]`` section names the label column
and its positive token; every other section declares one raw feature, in
vector-layout order::

    [dataset]
    label = class
    positive = 2

    [status_checking]
    type = cat
    levels = A11, A12, A13, A14
    editable = true
    checked = true

Categorical levels are expanded alphabetically by level code. Per-level flag
overrides (``editable[A12] = false``) are parsed so that inconsistent groups
can be detected and rejected.
"""

from __future__ import annotations

import configparser
import enum
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels


class SchemaError(ValueError):
    """Raised for malformed or inconsistent schema definitions."""


class FeatureType(enum.Enum):
    BOOLEAN = "bool"
    INTEGER = "int"
    POSITIVE_INTEGER = "posint"
    FLOAT = "float"
    POSITIVE_FLOAT = "posfloat"
    ONE_HOT = "cat"

    @property
    def code(self) -> int:
        return _KIND_CODES[self]

    @property
    def integral(self) -> bool:
        return self in (FeatureType.BOOLEAN, FeatureType.INTEGER, FeatureType.POSITIVE_INTEGER)


_KIND_CODES = {
    FeatureType.FLOAT: kernels.FLOAT,
    FeatureType.POSITIVE_FLOAT: kernels.POSFLOAT,
    FeatureType.INTEGER: kernels.INT,
    FeatureType.POSITIVE_INTEGER: kernels.POSINT,
    FeatureType.BOOLEAN: kernels.BOOL,
    FeatureType.ONE_HOT: kernels.ONEHOT,
}


@dataclass(frozen=True)
class FeatureSpec:
    """One encoded column.

    ``group`` is the one-hot group id (the source feature name) for
    ``ONE_HOT`` columns and ``None`` otherwise; ``level`` is the category code
    the column stands for.
    """

    name: str
    ftype: FeatureType
    editable: bool
    checked: bool
    source_feature: str
    group: str | None = None
    level: str | None = None


@dataclass(frozen=True)
class RawFeature:
    name: str
    ftype: FeatureType
    editable: bool
    checked: bool
    levels: tuple[str, ...] = ()


@dataclass(frozen=True)
class Schema:
    """Ordered encoded feature layout plus the raw features it came from."""

    features: tuple[FeatureSpec, ...]
    label_column: str
    positive_label: str = "1"
    negative_label: str | None = None

    def __post_init__(self):
        if not self.features:
            raise SchemaError("schema declares no features")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate feature name(s): {', '.join(dup)}")
        groups: dict[str, list[FeatureSpec]] = {}
        for f in self.features:
            if f.ftype is FeatureType.ONE_HOT:
                if f.group is None:
                    raise SchemaError(f"one-hot column {f.name!r} has no group")
                groups.setdefault(f.group, []).append(f)
        for gid, members in groups.items():
            if len(members) < 2:
                raise SchemaError(f"one-hot group {gid!r} needs at least 2 columns")
            first = members[0]
            for f in members[1:]:
                if (f.editable, f.checked, f.source_feature) != (first.editable, first.checked, first.source_feature):
                    raise SchemaError(f"one-hot group {gid!r} has inconsistent flags")
        # group members must be contiguous: projection kernels rely on it
        for gid, members in groups.items():
            idx = [i for i, f in enumerate(self.features) if f.group == gid]
            if idx != list(range(idx[0], idx[0] + len(idx))):
                raise SchemaError(f"one-hot group {gid!r} is not contiguous")

    @property
    def m(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @cached_property
    def raw_features(self) -> tuple[RawFeature, ...]:
        out: list[RawFeature] = []
        seen: dict[str, int] = {}
        for f in self.features:
            if f.source_feature in seen:
                i = seen[f.source_feature]
                out[i] = RawFeature(out[i].name, out[i].ftype, out[i].editable, out[i].checked,
                                    out[i].levels + (f.level,))
                continue
            seen[f.source_feature] = len(out)
            levels = (f.level,) if f.ftype is FeatureType.ONE_HOT else ()
            out.append(RawFeature(f.source_feature, f.ftype, f.editable, f.checked, levels))
        return tuple(out)

    @cached_property
    def raw_columns(self) -> dict[str, np.ndarray]:
        """Encoded column indices for every raw feature."""
        cols: dict[str, list[int]] = {}
        for i, f in enumerate(self.features):
            cols.setdefault(f.source_feature, []).append(i)
        return {k: np.asarray(v, dtype=np.int64) for k, v in cols.items()}

    # arrays consumed by the numeric kernels

    @cached_property
    def kind_codes(self) -> np.ndarray:
        return np.array([f.ftype.code for f in self.features], dtype=np.int64)

    @cached_property
    def group_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        starts, sizes = [], []
        for raw in self.raw_features:
            if raw.ftype is FeatureType.ONE_HOT:
                cols = self.raw_columns[raw.name]
                starts.append(int(cols[0]))
                sizes.append(len(cols))
        return np.asarray(starts, dtype=np.int64), np.asarray(sizes, dtype=np.int64)

    @property
    def n_slots(self) -> int:
        """Components that can hold an unrealistic value (groups count once)."""
        scalar = sum(1 for f in self.features
                     if f.ftype not in (FeatureType.FLOAT, FeatureType.ONE_HOT))
        return scalar + len(self.group_bounds[0])


def build_schema(raw: list[RawFeature], label_column: str, positive_label: str = "1",
                 negative_label: str | None = None) -> Schema:
    """Expand raw features into the encoded column layout."""
    features: list[FeatureSpec] = []
    for r in raw:
        if r.ftype is FeatureType.ONE_HOT:
            levels = sorted(r.levels)
            if len(set(levels)) != len(levels):
                raise SchemaError(f"feature {r.name!r} repeats a level")
            for lv in levels:
                features.append(FeatureSpec(f"{r.name}={lv}", r.ftype, r.editable, r.checked,
                                            r.name, group=r.name, level=lv))
        else:
            features.append(FeatureSpec(r.name, r.ftype, r.editable, r.checked, r.name))
    return Schema(tuple(features), label_column, positive_label, negative_label)


def _parse_bool(text: str, where: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise SchemaError(f"{where}: expected true/false, got {text!r}")


def load_schema(path: str | Path) -> Schema:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str  # keep level codes case-sensitive
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.DuplicateSectionError as exc:
        raise SchemaError(f"duplicate feature name: {exc.section}") from exc
    except configparser.Error as exc:
        raise SchemaError(f"cannot parse schema {path}: {exc}") from exc

    if "dataset" not in parser:
        raise SchemaError("schema lacks a [dataset] section")
    ds = parser["dataset"]
    if "label" not in ds:
        raise SchemaError("[dataset] must name the label column")

    features: list[FeatureSpec] = []
    for name in parser.sections():
        if name == "dataset":
            continue
        sec = parser[name]
        try:
            ftype = FeatureType(sec.get("type", "").strip())
        except ValueError:
            raise SchemaError(f"[{name}]: unknown type {sec.get('type')!r}") from None
        editable = _parse_bool(sec.get("editable", "true"), f"[{name}] editable")
        checked = _parse_bool(sec.get("checked", "false"), f"[{name}] checked")
        if ftype is FeatureType.ONE_HOT:
            levels = [lv.strip() for lv in sec.get("levels", "").replace(",", " ").split()]
            if len(levels) < 2:
                raise SchemaError(f"[{name}]: categorical feature needs >= 2 levels")
            if len(set(levels)) != len(levels):
                raise SchemaError(f"[{name}]: repeated level")
            for lv in sorted(levels):
                e = _parse_bool(sec[f"editable[{lv}]"], name) if f"editable[{lv}]" in sec else editable
                c = _parse_bool(sec[f"checked[{lv}]"], name) if f"checked[{lv}]" in sec else checked
                features.append(FeatureSpec(f"{name}={lv}", ftype, e, c, name, group=name, level=lv))
        else:
            features.append(FeatureSpec(name, ftype, editable, checked, name))

    negative = ds.get("negative")
    return Schema(tuple(features), ds["label"].strip(), ds.get("positive", "1").strip(),
                  negative.strip() if negative else None)


def write_schema(schema: Schema, path: str | Path) -> None:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser["dataset"] = {"label": schema.label_column, "positive": schema.positive_label}
    if schema.negative_label is not None:
        parser["dataset"]["negative"] = schema.negative_label
    for raw in schema.raw_features:
        sec = {"type": raw.ftype.value,
               "editable": str(raw.editable).lower(),
               "checked": str(raw.checked).lower()}
        if raw.ftype is FeatureType.ONE_HOT:
            sec["levels"] = ", ".join(raw.levels)
        parser[raw.name] = sec
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)


def editability_vector(schema: Schema) -> np.ndarray:
    return np.array([f.editable for f in schema.features], dtype=bool)


def checked_vector(schema: Schema) -> np.ndarray:
    return np.array([f.checked for f in schema.features], dtype=bool)
