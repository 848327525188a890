"""CSV ingestion, one-hot encoding and stratified train/validation/test splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .schema import FeatureType, Schema


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class RawRecord:
    values: dict[str, str]
    label: int = 0


@dataclass
class Part:
    X: np.ndarray
    y: np.ndarray
    index: np.ndarray  # positions in the input record list

    def __len__(self) -> int:
        return len(self.y)


@dataclass
class DatasetSplit:
    train: Part
    validation: Part
    test: Part
    seed: int = 0
    ratios: tuple[float, float, float] = field(default=(0.56, 0.14, 0.30))


def _parse_number(token: str, ftype: FeatureType, name: str) -> float:
    try:
        x = float(token)
    except (TypeError, ValueError):
        raise EncodingError(f"feature {name!r}: cannot parse {token!r} as a number") from None
    if not math.isfinite(x):
        raise EncodingError(f"feature {name!r}: non-finite value {token!r}")
    if ftype.integral and x != round(x):
        raise EncodingError(f"feature {name!r}: {token!r} is not integral")
    if ftype in (FeatureType.POSITIVE_INTEGER, FeatureType.POSITIVE_FLOAT) and x < 0:
        raise EncodingError(f"feature {name!r}: {token!r} is negative")
    if ftype is FeatureType.BOOLEAN and x not in (0.0, 1.0):
        raise EncodingError(f"feature {name!r}: boolean must be 0 or 1, got {token!r}")
    return x


_BOOL_TOKENS = {"true": "1", "false": "0"}


def encode(record: RawRecord, schema: Schema) -> np.ndarray:
    """Encode one raw record into its length-m real vector."""
    x = np.zeros(schema.m)
    cols = schema.raw_columns
    for raw in schema.raw_features:
        if raw.name not in record.values:
            raise EncodingError(f"record is missing feature {raw.name!r}")
        token = record.values[raw.name].strip()
        idx = cols[raw.name]
        if raw.ftype is FeatureType.ONE_HOT:
            try:
                pos = raw.levels.index(token)
            except ValueError:
                raise EncodingError(f"feature {raw.name!r}: unknown level {token!r}") from None
            x[idx[pos]] = 1.0
        else:
            if raw.ftype is FeatureType.BOOLEAN:
                token = _BOOL_TOKENS.get(token.lower(), token)
            x[idx[0]] = _parse_number(token, raw.ftype, raw.name)
    return x


def encode_many(records: list[RawRecord], schema: Schema) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([encode(r, schema) for r in records]).reshape(len(records), schema.m)
    y = np.array([r.label for r in records], dtype=np.int64)
    return X, y


def format_value(x: float, ftype: FeatureType) -> str:
    if ftype.integral and x == round(x):
        return str(int(round(x)))
    return repr(float(x))


def decode(x: np.ndarray, schema: Schema, strict: bool = True) -> dict[str, str]:
    """Map an encoded vector back to raw tokens.

    With ``strict=False`` unrealistic vectors are tolerated: numbers are
    printed as stored and a one-hot group decodes to its largest member.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (schema.m,):
        raise EncodingError(f"expected a vector of length {schema.m}, got shape {x.shape}")
    out: dict[str, str] = {}
    cols = schema.raw_columns
    for raw in schema.raw_features:
        idx = cols[raw.name]
        if raw.ftype is FeatureType.ONE_HOT:
            block = x[idx]
            active = np.flatnonzero(block == 1.0)
            if strict:
                if len(active) != 1 or np.count_nonzero(block) != 1:
                    raise EncodingError(f"one-hot group {raw.name!r} has no single active member")
                out[raw.name] = raw.levels[active[0]]
            else:
                out[raw.name] = raw.levels[int(np.argmax(block))]
        else:
            out[raw.name] = format_value(x[idx[0]], raw.ftype)
    return out


def read_records(path: str | Path, schema: Schema, space_separated: bool = False) -> list[RawRecord]:
    """Read labelled records.

    Comma-separated files need a header row naming the raw features and the
    label column. Space-separated files (the canonical German Credit layout)
    have no header: raw features in schema order, label last.
    """
    raw_names = [r.name for r in schema.raw_features]
    records: list[RawRecord] = []
    with open(path, encoding="utf-8", newline="") as fh:
        if space_separated:
            rows = (line.split() for line in fh if line.strip())
            header = raw_names + [schema.label_column]
        else:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise EncodingError(f"{path}: empty file") from None
            rows = reader
        missing = [n for n in raw_names + [schema.label_column] if n not in header]
        if missing:
            raise EncodingError(f"{path}: missing column(s) {', '.join(missing)}")
        pos = {n: header.index(n) for n in header}
        for lineno, row in enumerate(rows, start=2 if not space_separated else 1):
            if not row:
                continue
            if len(row) != len(header):
                raise EncodingError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            values = {n: row[pos[n]].strip() for n in raw_names}
            if any(v == "" for v in values.values()):
                raise EncodingError(f"{path}:{lineno}: missing value")
            records.append(RawRecord(values, _label(row[pos[schema.label_column]].strip(), schema, lineno)))
    return records


def _label(token: str, schema: Schema, lineno: int) -> int:
    if token == schema.positive_label:
        return 1
    if schema.negative_label is None or token == schema.negative_label:
        return 0
    raise EncodingError(f"line {lineno}: unexpected label {token!r}")


def _allocate(n: int, ratios) -> list[int]:
    # largest-remainder rounding so the parts always sum to n
    exact = [n * r for r in ratios]
    sizes = [math.floor(e + 1e-9) for e in exact]
    rest = n - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:rest]:
        sizes[i] += 1
    return sizes


def split(records: list[RawRecord], schema: Schema, ratios=(0.56, 0.14, 0.30), seed: int = 0) -> DatasetSplit:
    """Stratified, seeded partition into train/validation/test parts."""
    if not records:
        raise ValueError("cannot split an empty record list")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three positive fractions summing to 1, got {ratios}")
    X, y = encode_many(records, schema)
    rng = np.random.default_rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    for label in (0, 1):
        idx = np.flatnonzero(y == label)
        idx = idx[rng.permutation(len(idx))]
        start = 0
        for k, size in enumerate(_allocate(len(idx), ratios)):
            parts[k].append(idx[start:start + size])
            start += size
    out = []
    for chunks in parts:
        idx = np.sort(np.concatenate(chunks))
        out.append(Part(X[idx], y[idx], idx))
    return DatasetSplit(out[0], out[1], out[2], seed, ratios)


def write_encoded(path: str | Path, X: np.ndarray, schema: Schema, y: np.ndarray | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(schema.names + ([schema.label_column] if y is not None else []))
        for i, row in enumerate(X):
            cells = [format_value(v, f.ftype) for v, f in zip(row, schema.features)]
            if y is not None:
                cells.append(str(int(y[i])))
            w.writerow(cells)
