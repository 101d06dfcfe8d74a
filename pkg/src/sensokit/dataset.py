"""Dataset import, validation, transformation and persistence.

A Dataset is a named numeric matrix with row/column labels, an analysis
role, optional missing cells (stored as NaN) and underscore-prefixed
group metadata used for coloring plots.
"""

from __future__ import annotations

import csv
import io
import json
import re
import uuid
import zipfile
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from .errors import ImportError_, ValidationError

ROLES = ("liking", "characteristics", "design", "descriptive", "other")

_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_COMMA_NUMBER_RE = re.compile(r"^[+-]?\d+,\d+$")
_PERIOD_NUMBER_RE = re.compile(r"^[+-]?\d+\.\d+$")
_MISSING_TOKENS = {"", "na", "nan"}

_ENCODINGS = {"ascii": "ascii", "utf8": "utf-8", "latin1": "latin-1"}
_DELIMITERS = {"tab": "\t", "comma": ",", "space": " "}


def new_id(prefix: str = "ds") -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"


@dataclass
class ImportOptions:
    format: str = "delimited"  # "delimited" | "workbook"
    delimiter: str = "comma"  # "tab" | "comma" | "space"
    decimal_mark: str = "period"  # "period" | "comma"
    encoding: str = "utf8"  # "ascii" | "utf8" | "latin1"
    has_row_names: bool = True
    has_col_names: bool = True
    dataset_name: str = "dataset"
    role: str = "other"

    def validate(self) -> None:
        if self.format not in ("delimited", "workbook"):
            raise ValidationError(f"unknown format {self.format!r}")
        if self.format == "delimited" and self.delimiter not in _DELIMITERS:
            raise ValidationError(f"unknown delimiter {self.delimiter!r}")
        if self.decimal_mark not in ("period", "comma"):
            raise ValidationError(f"unknown decimal mark {self.decimal_mark!r}")
        if self.encoding not in _ENCODINGS:
            raise ValidationError(f"unknown encoding {self.encoding!r}")
        if self.decimal_mark == "comma" and self.delimiter == "comma" and self.format == "delimited":
            raise ValidationError("decimal_mark=comma cannot be combined with delimiter=comma")
        if self.role not in ROLES:
            raise ValidationError(f"unknown role {self.role!r}; expected one of {ROLES}")


@dataclass
class DatasetSummary:
    dims: tuple[int, int]
    mean: float | None
    std: float | None
    min: float | None
    max: float | None
    missing_count: int
    degenerate_std: bool = False  # set when only one non-missing value exists

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "max": self.max,
            "missing_count": self.missing_count,
            "degenerate_std": self.degenerate_std,
        }


@dataclass
class Dataset:
    """Immutable numeric matrix with labels and group metadata.

    Missing cells are NaN in ``values``. Mutating operations return new
    Dataset instances under fresh ids; instances are safe to share.
    """

    id: str
    name: str
    role: str
    values: np.ndarray  # (J, K) float64, NaN = missing
    row_labels: list[str]
    col_labels: list[str]
    row_groups: dict[str, list[str]] = field(default_factory=dict)
    col_groups: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise ValidationError("values must be a matrix with at least one row and one column")
        j, k = self.values.shape
        if len(self.row_labels) != j:
            raise ValidationError(f"{len(self.row_labels)} row labels for {j} rows")
        if len(self.col_labels) != k:
            raise ValidationError(f"{len(self.col_labels)} column labels for {k} columns")
        for gname, labels in self.row_groups.items():
            if len(labels) != j:
                raise ValidationError(f"row group {gname!r} has {len(labels)} labels for {j} rows")
        for gname, labels in self.col_groups.items():
            if len(labels) != k:
                raise ValidationError(f"col group {gname!r} has {len(labels)} labels for {k} columns")
        if self.role not in ROLES:
            raise ValidationError(f"unknown role {self.role!r}")
        self.values.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def to_doc(self) -> dict:
        vals = [[None if np.isnan(v) else float(v) for v in row] for row in self.values]
        return {
            "meta": {"id": self.id, "name": self.name, "role": self.role},
            "row_labels": list(self.row_labels),
            "col_labels": list(self.col_labels),
            "values": vals,
            "groups": {"rows": dict(self.row_groups), "cols": dict(self.col_groups)},
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Dataset":
        values = np.array(
            [[np.nan if v is None else float(v) for v in row] for row in doc["values"]],
            dtype=float,
        )
        return cls(
            id=doc["meta"]["id"],
            name=doc["meta"]["name"],
            role=doc["meta"]["role"],
            values=values,
            row_labels=list(doc["row_labels"]),
            col_labels=list(doc["col_labels"]),
            row_groups=dict(doc["groups"].get("rows", {})),
            col_groups=dict(doc["groups"].get("cols", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "Dataset":
        return cls.from_doc(json.loads(text))


def _parse_cell(text: str, decimal_mark: str, row: int, col: int) -> float:
    """Parse one data cell; NaN for the missing sentinels, error otherwise."""
    s = text.strip()
    if s.lower() in _MISSING_TOKENS:
        return np.nan
    if decimal_mark == "comma":
        s = s.replace(",", ".", 1)
    if not _NUMBER_RE.match(s):
        raise ImportError_(f"unparseable cell r{row}c{col} {text.strip()!r}")
    return float(s)


def _split_delimited(text: str, delimiter: str) -> list[list[str]]:
    reader = csv.reader(io.StringIO(text), delimiter=_DELIMITERS[delimiter])
    rows = [row for row in reader if row and any(c.strip() for c in row)]
    if not rows:
        raise ImportError_("file contains no data rows")
    return rows


def _read_xlsx_grid(raw: bytes) -> list[list[str | float]]:
    """Read the first sheet of an xlsx workbook into a dense grid.

    Minimal reader built on the zip/XML structure of the format; numeric
    cells come back as floats, everything else as strings. Legacy binary
    .xls is not supported.
    """
    try:
        zf = zipfile.ZipFile(io.BytesIO(raw))
    except zipfile.BadZipFile as exc:
        raise ImportError_(
            "workbook is not an xlsx file (legacy .xls is not supported; save as .xlsx or csv)"
        ) from exc
    ns = {"m": "http://schemas.openxmlformats.org/spreadsheetml/2006/main"}
    names = zf.namelist()
    shared: list[str] = []
    if "xl/sharedStrings.xml" in names:
        root = ET.fromstring(zf.read("xl/sharedStrings.xml"))
        for si in root.findall("m:si", ns):
            shared.append("".join(t.text or "" for t in si.iter(f"{{{ns['m']}}}t")))
    sheet_names = sorted(n for n in names if re.match(r"xl/worksheets/sheet\d+\.xml$", n))
    if not sheet_names:
        raise ImportError_("workbook has no worksheets")
    root = ET.fromstring(zf.read(sheet_names[0]))
    cells: dict[tuple[int, int], str | float] = {}
    max_r = max_c = -1
    for row_el in root.iter(f"{{{ns['m']}}}row"):
        for c_el in row_el.findall("m:c", ns):
            ref = c_el.get("r", "")
            m = re.match(r"([A-Z]+)(\d+)", ref)
            if not m:
                continue
            col = 0
            for ch in m.group(1):
                col = col * 26 + (ord(ch) - ord("A") + 1)
            col -= 1
            row = int(m.group(2)) - 1
            ctype = c_el.get("t", "n")
            v_el = c_el.find("m:v", ns)
            if ctype == "inlineStr":
                is_el = c_el.find("m:is", ns)
                text = "".join(t.text or "" for t in is_el.iter(f"{{{ns['m']}}}t")) if is_el is not None else ""
                value: str | float = text
            elif v_el is None or v_el.text is None:
                value = ""
            elif ctype == "s":
                value = shared[int(v_el.text)]
            elif ctype == "str":
                value = v_el.text
            else:
                try:
                    value = float(v_el.text)
                except ValueError:
                    value = v_el.text
            cells[(row, col)] = value
            max_r = max(max_r, row)
            max_c = max(max_c, col)
    if max_r < 0:
        raise ImportError_("worksheet is empty")
    return [[cells.get((r, c), "") for c in range(max_c + 1)] for r in range(max_r + 1)]


def _detect_decimal_mark(grid: list[list[str | float]]) -> str:
    comma = period = 0
    for row in grid:
        for cell in row:
            if isinstance(cell, str):
                s = cell.strip()
                if _COMMA_NUMBER_RE.match(s):
                    comma += 1
                elif _PERIOD_NUMBER_RE.match(s):
                    period += 1
    return "comma" if comma > period else "period"


def import_dataset(raw: bytes, opts: ImportOptions, dataset_id: str | None = None) -> Dataset:
    """Build a Dataset from raw file bytes.

    Cells that are empty or read "NA"/"nan" (case-insensitive) become
    missing. Columns whose header starts with "_" are moved to row_groups;
    rows whose name starts with "_" are moved to col_groups.
    """
    opts.validate()
    if opts.format == "workbook":
        grid: list[list[str | float]] = _read_xlsx_grid(raw)
        decimal_mark = _detect_decimal_mark(grid)
    else:
        try:
            text = raw.decode(_ENCODINGS[opts.encoding])
        except UnicodeDecodeError as exc:
            raise ImportError_(f"cannot decode file as {opts.encoding}: {exc}") from exc
        grid = _split_delimited(text, opts.delimiter)
        decimal_mark = opts.decimal_mark

    widths = {len(r) for r in grid}
    if len(widths) > 1:
        # allow the common corner case: header row one cell shorter
        body_widths = {len(r) for r in grid[1:]} if opts.has_col_names else widths
        if not (opts.has_col_names and opts.has_row_names and len(body_widths) == 1
                and len(grid[0]) == next(iter(body_widths)) - 1):
            bad = next(i for i, r in enumerate(grid) if len(r) != len(grid[0]))
            raise ImportError_(
                f"ragged rows: row {bad + 1} has {len(grid[bad])} cells, expected {len(grid[0])}"
            )
        grid = [[""] + list(grid[0])] + grid[1:]

    def cell_str(v: str | float) -> str:
        if isinstance(v, float):
            return repr(int(v)) if v == int(v) else repr(v)
        return v.strip()

    if opts.has_col_names:
        header = [cell_str(c) for c in grid[0]]
        body = grid[1:]
        if not body:
            raise ImportError_("no data rows below the header")
        if opts.has_row_names:
            header = header[1:] if len(header) == len(body[0]) else header
    else:
        body = grid
        header = None

    if opts.has_row_names:
        raw_row_labels = [cell_str(r[0]) for r in body]
        data_rows = [r[1:] for r in body]
    else:
        raw_row_labels = [f"R{i + 1}" for i in range(len(body))]
        data_rows = body

    ncols = len(data_rows[0]) if data_rows else 0
    if ncols == 0:
        raise ImportError_("file contains no data columns")
    col_labels = header if header is not None else [f"C{i + 1}" for i in range(ncols)]
    if len(col_labels) != ncols:
        raise ImportError_(f"{len(col_labels)} column names for {ncols} data columns")

    meta_cols = [i for i, lab in enumerate(col_labels) if lab.startswith("_")]
    meta_rows = [i for i, lab in enumerate(raw_row_labels) if lab.startswith("_")]
    keep_cols = [i for i in range(ncols) if i not in meta_cols]
    keep_rows = [i for i in range(len(data_rows)) if i not in meta_rows]
    if not keep_rows or not keep_cols:
        raise ImportError_("all rows or all columns are underscore metadata")

    row_groups: dict[str, list[str]] = {}
    for ci in meta_cols:
        labels = []
        for ri in keep_rows:
            s = cell_str(data_rows[ri][ci])
            if s.lower() in _MISSING_TOKENS:
                raise ImportError_(
                    f"group column {col_labels[ci]!r} has a missing cell in row {ri + 1}"
                )
            labels.append(s)
        row_groups[col_labels[ci]] = labels
    col_groups: dict[str, list[str]] = {}
    for ri in meta_rows:
        labels = []
        for ci in keep_cols:
            s = cell_str(data_rows[ri][ci])
            if s.lower() in _MISSING_TOKENS:
                raise ImportError_(
                    f"group row {raw_row_labels[ri]!r} has a missing cell in column {ci + 1}"
                )
            labels.append(s)
        col_groups[raw_row_labels[ri]] = labels

    # error positions are raw-file coordinates, counting header/name cells
    row_off = 2 if opts.has_col_names else 1
    col_off = 2 if opts.has_row_names else 1
    values = np.empty((len(keep_rows), len(keep_cols)))
    for out_i, ri in enumerate(keep_rows):
        row = data_rows[ri]
        for out_j, ci in enumerate(keep_cols):
            cell = row[ci]
            if isinstance(cell, float):
                values[out_i, out_j] = cell
            else:
                values[out_i, out_j] = _parse_cell(cell, decimal_mark, ri + row_off, ci + col_off)

    row_labels = [raw_row_labels[i] for i in keep_rows]
    final_cols = [col_labels[i] for i in keep_cols]
    if not opts.has_row_names:
        row_labels = [f"R{i + 1}" for i in range(len(keep_rows))]
    return Dataset(
        id=dataset_id or new_id(),
        name=opts.dataset_name,
        role=opts.role,
        values=values,
        row_labels=row_labels,
        col_labels=final_cols,
        row_groups=row_groups,
        col_groups=col_groups,
    )


def export_delimited(d: Dataset, opts: ImportOptions, include_groups: bool = True) -> bytes:
    """Serialize a Dataset back to delimited text.

    Floats use shortest round-trip formatting so that re-import is
    bit-exact. Group metadata is written back as underscore rows/columns.
    """
    opts.validate()
    sep = _DELIMITERS[opts.delimiter]

    def fmt(v: float) -> str:
        if np.isnan(v):
            return ""
        s = repr(int(v)) if v == int(v) and abs(v) < 1e15 else repr(float(v))
        if opts.decimal_mark == "comma":
            s = s.replace(".", ",")
        return s

    group_cols = list(d.row_groups) if include_groups else []
    group_rows = list(d.col_groups) if include_groups else []
    lines = []
    header = [""] + list(d.col_labels) + group_cols
    lines.append(header)
    for i, lab in enumerate(d.row_labels):
        row = [lab] + [fmt(v) for v in d.values[i]] + [d.row_groups[g][i] for g in group_cols]
        lines.append(row)
    for g in group_rows:
        lines.append([g] + list(d.col_groups[g]) + [""] * len(group_cols))
    out = io.StringIO()
    writer = csv.writer(out, delimiter=sep, lineterminator="\n")
    writer.writerows(lines)
    return out.getvalue().encode(_ENCODINGS[opts.encoding])


def transpose_copy(d: Dataset) -> Dataset:
    """Transposed copy under a fresh id; the original is untouched."""
    return Dataset(
        id=new_id(),
        name=f"{d.name}-transposed",
        role=d.role,
        values=d.values.T.copy(),
        row_labels=list(d.col_labels),
        col_labels=list(d.row_labels),
        row_groups=dict(d.col_groups),
        col_groups=dict(d.row_groups),
    )


def summarize(d: Dataset) -> DatasetSummary:
    """Statistics over the non-missing cells; sample std (n-1)."""
    flat = d.values[~np.isnan(d.values)]
    missing = int(np.isnan(d.values).sum())
    dims = d.values.shape
    if flat.size == 0:
        return DatasetSummary(dims, None, None, None, None, missing)
    if flat.size == 1:
        v = float(flat[0])
        return DatasetSummary(dims, v, 0.0, v, v, missing, degenerate_std=True)
    return DatasetSummary(
        dims,
        float(flat.mean()),
        float(flat.std(ddof=1)),
        float(flat.min()),
        float(flat.max()),
        missing,
    )


@dataclass
class MethodNeeds:
    no_missing: bool = False
    min_rows: int | None = None
    min_cols: int | None = None
    roles: tuple[str, ...] | None = None


def validate_for_method(d: Dataset, needs: MethodNeeds) -> list[str]:
    """Return every violated requirement; an empty list means ok."""
    violations = []
    if needs.no_missing:
        mask = np.isnan(d.values)
        if mask.any():
            r, c = np.argwhere(mask)[0]
            n = int(mask.sum())
            more = f" and {n - 1} more" if n > 1 else ""
            violations.append(f"missing values present at ({r + 1},{c + 1}){more}")
    if needs.min_rows is not None and d.shape[0] < needs.min_rows:
        violations.append(f"needs at least {needs.min_rows} rows, has {d.shape[0]}")
    if needs.min_cols is not None and d.shape[1] < needs.min_cols:
        violations.append(f"needs at least {needs.min_cols} columns, has {d.shape[1]}")
    if needs.roles is not None and d.role not in needs.roles:
        violations.append(f"role {d.role!r} not usable here (expected {'/'.join(needs.roles)})")
    return violations
