"""Two-view dataset model, ingestion from delimited text, and split enumeration.

A dataset is a pair of views over the same entities (aligned by row index).
Attributes are boolean, categorical or numeric; missing cells are allowed
everywhere and are represented by NaN (numeric) or -1 (boolean/categorical
codes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MISSING_TOKEN = "?"

LEFT = "L"
RIGHT = "R"


class ParseError(ValueError):
    """Raised when a data file is malformed."""


class SchemaError(ValueError):
    """Raised when a data file declares an unknown attribute kind."""


def opposite(side: str) -> str:
    return RIGHT if side == LEFT else LEFT


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str  # "boolean" | "categorical" | "numeric"
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("boolean", "categorical", "numeric"):
            raise SchemaError(f"unknown attribute kind {self.kind!r}")


class View:
    """Immutable column-typed table.

    Boolean columns are stored as int8 arrays with values {0, 1, -1(missing)},
    categorical columns as int16 category codes with -1 for missing, and
    numeric columns as float64 with NaN for missing.
    """

    def __init__(self, attributes: list[Attribute], columns: list[np.ndarray]):
        if len(attributes) != len(columns):
            raise ValueError("attribute/column count mismatch")
        names = [a.name for a in attributes]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate attribute name in view")
        n = columns[0].shape[0] if columns else 0
        for col in columns:
            if col.shape != (n,):
                raise ValueError("ragged columns")
        self.attributes = list(attributes)
        self.columns = [np.asarray(c) for c in columns]
        self.entity_count = n
        self._index = {a.name: i for i, a in enumerate(self.attributes)}
        self._eval_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}

    def attribute_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown attribute {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.attribute_index(name)]

    def missing_mask(self, attr_idx: int) -> np.ndarray:
        col = self.columns[attr_idx]
        if col.dtype.kind == "f":
            return np.isnan(col)
        return col < 0


@dataclass(frozen=True)
class Dataset:
    left: View
    right: View

    def __post_init__(self):
        if self.left.entity_count != self.right.entity_count:
            raise ValueError("views must cover the same entities")

    def view(self, side: str) -> View:
        return self.left if side == LEFT else self.right

    @property
    def entity_count(self) -> int:
        return self.left.entity_count


@dataclass(frozen=True)
class SplitPoint:
    """A binary pass/fail test on one attribute of one view.

    test is ("le", threshold) for numerics (pass iff value <= threshold),
    ("eq", category_code) for categoricals, or ("true",) for booleans.
    Entities with a missing value fail the test and are additionally
    reported as missing so that routing can drop them from leaf counts.
    """

    side: str
    attr_idx: int
    test: tuple

    def evaluate(self, view: View) -> tuple[np.ndarray, np.ndarray]:
        """Return (pass mask, missing mask); missing entities never pass."""
        key = (self.attr_idx, self.test)
        cached = view._eval_cache.get(key)
        if cached is not None:
            return cached
        col = view.columns[self.attr_idx]
        missing = view.missing_mask(self.attr_idx)
        kind = self.test[0]
        if kind == "le":
            with np.errstate(invalid="ignore"):
                passed = col <= self.test[1]
        elif kind == "eq":
            passed = col == self.test[1]
        elif kind == "true":
            passed = col == 1
        else:
            raise ValueError(f"unknown test {self.test!r}")
        passed = passed & ~missing
        view._eval_cache[key] = (passed, missing)
        return passed, missing

    def describe(self, view: View) -> str:
        attr = view.attributes[self.attr_idx]
        kind = self.test[0]
        if kind == "le":
            return f"{attr.name}<={self.test[1]:g}"
        if kind == "eq":
            return f"{attr.name}={attr.categories[self.test[1]]}"
        return attr.name


_KIND_TOKENS = {"bool": "boolean", "cat": "categorical", "num": "numeric"}


def _parse_bool_token(token: str, row: int) -> int:
    t = token.strip().lower()
    if t in ("1", "true", "t", "yes"):
        return 1
    if t in ("0", "false", "f", "no"):
        return 0
    raise ParseError(f"row {row}: bad boolean value {token!r}")


def _build_columns(attributes, rows):
    columns = []
    for j, attr in enumerate(attributes):
        tokens = [r[j] for r in rows]
        if attr.kind == "numeric":
            col = np.array(
                [np.nan if t == MISSING_TOKEN else float(t) for t in tokens],
                dtype=np.float64,
            )
        elif attr.kind == "boolean":
            col = np.array(
                [
                    -1 if t == MISSING_TOKEN else _parse_bool_token(t, i)
                    for i, t in enumerate(tokens)
                ],
                dtype=np.int8,
            )
        else:
            cats = sorted({t.strip() for t in tokens if t != MISSING_TOKEN})
            code = {c: k for k, c in enumerate(cats)}
            attr = Attribute(attr.name, "categorical", tuple(cats))
            col = np.array(
                [-1 if t == MISSING_TOKEN else code[t.strip()] for t in tokens],
                dtype=np.int16,
            )
        attributes[j] = attr
        columns.append(col)
    return attributes, columns


def _load_csv(lines: list[str]) -> View:
    if len(lines) < 2:
        raise ParseError("csv needs a name row and a kind row")
    names = [t.strip() for t in lines[0].split(",")]
    kinds = [t.strip() for t in lines[1].split(",")]
    if len(kinds) != len(names):
        raise ParseError("kind row length does not match header")
    attributes = []
    for name, kind in zip(names, kinds):
        if kind not in _KIND_TOKENS:
            raise SchemaError(f"unknown kind token {kind!r} for {name!r}")
        attributes.append(Attribute(name, _KIND_TOKENS[kind]))
    rows = []
    for i, line in enumerate(lines[2:]):
        cells = [t.strip() for t in line.split(",")]
        if len(cells) != len(names):
            raise ParseError(
                f"row {i}: expected {len(names)} cells, got {len(cells)}"
            )
        rows.append(cells)
    attributes, columns = _build_columns(attributes, rows)
    return View(attributes, columns)


_ARFF_KINDS = {
    "numeric": "numeric",
    "real": "numeric",
    "integer": "numeric",
    "boolean": "boolean",
}


def _load_arff(lines: list[str]) -> View:
    attributes = []
    data_rows: list[list[str]] = []
    in_data = False
    for i, raw in enumerate(lines):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            cells = [t.strip() for t in line.split(",")]
            if len(cells) != len(attributes):
                raise ParseError(
                    f"row {len(data_rows)}: expected {len(attributes)} cells, "
                    f"got {len(cells)}"
                )
            data_rows.append(cells)
            continue
        lower = line.lower()
        if lower.startswith("@attribute"):
            parts = line.split(None, 2)
            if len(parts) < 3:
                raise ParseError(f"line {i}: malformed @attribute")
            name, decl = parts[1], parts[2].strip()
            if decl.startswith("{"):
                attributes.append(Attribute(name, "categorical"))
            elif decl.lower() in _ARFF_KINDS:
                attributes.append(Attribute(name, _ARFF_KINDS[decl.lower()]))
            else:
                raise SchemaError(f"unknown kind token {decl!r} for {name!r}")
        elif lower.startswith("@data"):
            in_data = True
        elif lower.startswith("@relation"):
            continue
        else:
            raise ParseError(f"line {i}: unexpected {line!r}")
    attrs, columns = _build_columns(attributes, data_rows)
    return View(attrs, columns)


def load_view(path, format: str = "csv") -> View:
    """Load a view from a delimited text file.

    format "csv": first row attribute names, second row kinds (bool|cat|num).
    format "arff": @attribute declarations followed by @data rows.
    The token `?` marks a missing cell in either format.
    """
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if format == "csv":
        return _load_csv(lines)
    if format in ("arff", "arff-like"):
        return _load_arff(lines)
    raise ValueError(f"unknown format {format!r}")


def enumerate_split_points(view: View, side: str) -> list[SplitPoint]:
    """All candidate binary splits of a view, in a stable order.

    Booleans give one split, categoricals one per category, numerics one per
    midpoint between consecutive distinct observed values. Attributes whose
    values are all missing contribute nothing.
    """
    if view.entity_count == 0:
        raise ValueError("empty view has no split points")
    splits: list[SplitPoint] = []
    for j, attr in enumerate(view.attributes):
        col = view.columns[j]
        if attr.kind == "boolean":
            if np.any(col >= 0):
                splits.append(SplitPoint(side, j, ("true",)))
        elif attr.kind == "categorical":
            for code in range(len(attr.categories)):
                splits.append(SplitPoint(side, j, ("eq", code)))
        else:
            values = np.unique(col[~np.isnan(col)])
            for lo, hi in zip(values[:-1], values[1:]):
                splits.append(SplitPoint(side, j, ("le", float((lo + hi) / 2))))
    return splits
