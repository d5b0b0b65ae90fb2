"""Activity-dataset ingestion, threshold binarization and series selection.

File format (UTF-8 CSV, header required)::

    id,smiles,ic50_nm,qualifier,series

``qualifier`` is one of ``=`` ``>`` ``<`` (empty cell means ``=``) and
annotates censored assay values: ``>`` means only a lower bound on the IC50
was measured, ``<`` only an upper bound.  ``series`` is an optional scaffold
label.  A sidecar series file is one record id per line.

Rows with identical SMILES text are collapsed to a single record whose IC50
is the geometric mean of the duplicates (IC50s live on a log scale); the
collapsed qualifier is ``=`` only if every duplicate was exact, otherwise
the most pessimistic qualifier present (``>`` before ``<``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from . import smiles as sm
from .fingerprint import Fingerprint, FingerprintParams, morgan_fingerprint

EXACT = "exact"
GREATER_THAN = "greater_than"
LESS_THAN = "less_than"

_QUALIFIER_FROM_CELL = {"": EXACT, "=": EXACT, ">": GREATER_THAN, "<": LESS_THAN}
_CELL_FROM_QUALIFIER = {EXACT: "=", GREATER_THAN: ">", LESS_THAN: "<"}

HEADER = ["id", "smiles", "ic50_nm", "qualifier", "series"]

#: Returned by :func:`binarize` when the truth of ``IC50 < t`` is unknowable.
EXCLUDED = None


class DatasetError(ValueError):
    pass


class MalformedRow(DatasetError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class SmilesError(DatasetError):
    def __init__(self, line: int, cause: Exception):
        self.line = line
        self.cause = cause
        super().__init__(f"line {line}: bad SMILES: {cause}")


class EmptyDataset(DatasetError):
    pass


class UnknownLabel(DatasetError):
    pass


class SeriesIsWholeDataset(DatasetError):
    pass


@dataclass(frozen=True)
class ActivityRecord:
    id: str
    smiles: str
    ic50_nm: float
    qualifier: str = EXACT
    series: Optional[str] = None

    def __post_init__(self) -> None:
        if self.ic50_nm <= 0:
            raise ValueError("ic50_nm must be positive")
        if self.qualifier not in (EXACT, GREATER_THAN, LESS_THAN):
            raise ValueError(f"bad qualifier {self.qualifier!r}")


@dataclass(frozen=True)
class Dataset:
    records: tuple[ActivityRecord, ...]
    fingerprints: tuple[Fingerprint, ...]
    fp_params: FingerprintParams

    def __len__(self) -> int:
        return len(self.records)

    def index_of(self, record_id: str) -> int:
        try:
            return self._index[record_id]
        except AttributeError:
            object.__setattr__(
                self, "_index", {r.id: i for i, r in enumerate(self.records)})
            return self._index[record_id]


@dataclass(frozen=True)
class SeriesSelection:
    """Record indices of the scaffold series and of everything else."""

    series_ids: tuple[int, ...]
    complement_ids: tuple[int, ...]


def load_csv(path, fp_params: FingerprintParams) -> Dataset:
    """Load, validate, fingerprint and duplicate-collapse a dataset CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path}: empty file") from None
        if [c.strip() for c in header] != HEADER:
            raise MalformedRow(1, f"header must be {','.join(HEADER)}")

        raw: list[tuple[int, str, str, float, str, Optional[str]]] = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(HEADER):
                raise MalformedRow(line, f"expected {len(HEADER)} cells, got {len(row)}")
            rid, smi, ic50_cell, qual_cell, series_cell = (c.strip() for c in row)
            if not rid:
                raise MalformedRow(line, "empty id")
            if not smi:
                raise MalformedRow(line, "empty smiles")
            try:
                ic50 = float(ic50_cell)
            except ValueError:
                raise MalformedRow(line, f"bad ic50_nm {ic50_cell!r}") from None
            if not math.isfinite(ic50) or ic50 <= 0:
                raise MalformedRow(line, f"ic50_nm must be positive, got {ic50_cell}")
            if qual_cell not in _QUALIFIER_FROM_CELL:
                raise MalformedRow(line, f"bad qualifier {qual_cell!r}")
            raw.append((line, rid, smi, ic50, _QUALIFIER_FROM_CELL[qual_cell],
                        series_cell or None))

    if not raw:
        raise EmptyDataset(f"{path}: no data rows")

    # collapse duplicates by identical SMILES text, keeping file order
    groups: dict[str, list[tuple[int, str, float, str, Optional[str]]]] = {}
    order: list[str] = []
    id_to_smiles: dict[str, str] = {}
    for line, rid, smi, ic50, qual, series in raw:
        if rid in id_to_smiles and id_to_smiles[rid] != smi:
            raise MalformedRow(line, f"id {rid!r} reused for a different SMILES")
        id_to_smiles[rid] = smi
        if smi not in groups:
            groups[smi] = []
            order.append(smi)
        groups[smi].append((line, rid, ic50, qual, series))

    records: list[ActivityRecord] = []
    fps: list[Fingerprint] = []
    for smi in order:
        entries = groups[smi]
        line0, rid0, _, _, series0 = entries[0]
        ic50 = math.exp(sum(math.log(e[2]) for e in entries) / len(entries))
        quals = {e[3] for e in entries}
        if quals == {EXACT}:
            qual = EXACT
        elif GREATER_THAN in quals:
            qual = GREATER_THAN
        else:
            qual = LESS_THAN
        try:
            mol = sm.parse_smiles(smi)
        except sm.SmilesParseError as exc:
            raise SmilesError(line0, exc) from exc
        records.append(ActivityRecord(rid0, smi, ic50, qual, series0))
        fps.append(morgan_fingerprint(mol, fp_params))

    return Dataset(records=tuple(records), fingerprints=tuple(fps),
                   fp_params=fp_params)


def save_csv(records: Iterable[ActivityRecord], path) -> None:
    """Write records back out in the load_csv format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for r in records:
            writer.writerow([r.id, r.smiles, repr(r.ic50_nm),
                             _CELL_FROM_QUALIFIER[r.qualifier], r.series or ""])


def binarize(r: ActivityRecord, t: float):
    """Label a record at threshold ``t`` (nM): 1 active, 0 inactive, or
    :data:`EXCLUDED` when the censored value cannot decide ``IC50 < t``.

    Active means strictly ``IC50 < t``.  For ``>`` records the stored value
    is a lower bound, so the record is inactive once that bound reaches
    ``t`` and undecidable otherwise.  For ``<`` records the stored value is
    an upper bound, which implies activity whenever the bound is <= ``t``.
    """
    if t <= 0:
        raise ValueError("threshold must be positive")
    if r.qualifier == EXACT:
        return 1 if r.ic50_nm < t else 0
    if r.qualifier == GREATER_THAN:
        return 0 if r.ic50_nm >= t else EXCLUDED
    return 1 if r.ic50_nm <= t else EXCLUDED


def select_series(d: Dataset, selector: Union[str, Sequence[str]]) -> SeriesSelection:
    """Split the dataset into a scaffold series and its complement.

    ``selector`` is either a series label (matched against the ``series``
    column) or a sequence of record ids.
    """
    if isinstance(selector, str):
        member = [i for i, r in enumerate(d.records) if r.series == selector]
        if not member:
            raise UnknownLabel(f"no records carry series label {selector!r}")
    else:
        wanted = list(selector)
        if not wanted:
            raise UnknownLabel("empty id selection")
        seen = set()
        member = []
        for rid in wanted:
            try:
                idx = d.index_of(rid)
            except KeyError:
                raise UnknownLabel(f"unknown record id {rid!r}") from None
            if idx not in seen:
                seen.add(idx)
                member.append(idx)
        member.sort()
    if len(member) == len(d.records):
        raise SeriesIsWholeDataset("series selection covers the whole dataset")
    member_set = set(member)
    complement = [i for i in range(len(d.records)) if i not in member_set]
    return SeriesSelection(series_ids=tuple(member),
                           complement_ids=tuple(complement))


def load_series_ids(path) -> list[str]:
    """Read a series sidecar file: one record id per line, blanks skipped."""
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]
