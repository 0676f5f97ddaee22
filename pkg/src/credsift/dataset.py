"""Dataset loading (JSONL/CSV) and deterministic train/valid/test splitting."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError, ParseError
from .rng import shuffled
from .taxonomy import CredentialCategory, CredentialRecord, category_from_id, category_from_name

# Column map used by load_csv when the caller does not override it.
DEFAULT_CSV_MAPPING = {
    "text": "text",
    "category": "category",
    "is_true": "is_true",
    "source_path": "source_path",
    "line_number": "line_number",
    "language_tag": "language_tag",
}


@dataclass(frozen=True)
class LabeledDataset:
    """An ordered, immutable collection of labeled credential records."""

    records: tuple[CredentialRecord, ...]
    name: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def category_counts(self) -> dict[CredentialCategory, int]:
        counts = Counter(r.category for r in self.records)
        return {cat: counts.get(cat, 0) for cat in CredentialCategory}

    def filtered(self, *, true_only: bool) -> "LabeledDataset":
        if not true_only:
            return self
        kept = tuple(r for r in self.records if r.is_true)
        return LabeledDataset(kept, name=self.name)


@dataclass(frozen=True)
class SplitSpec:
    """Fractions, seed, and stratification policy for a three-way split."""

    train_fraction: float = 0.8
    valid_fraction: float = 0.1
    test_fraction: float = 0.1
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        for frac in (self.train_fraction, self.valid_fraction, self.test_fraction):
            if not 0.0 <= frac <= 1.0:
                raise DomainError(f"split fraction out of [0,1]: {frac}")
        total = self.train_fraction + self.valid_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"split fractions must sum to 1.0, got {total}")


def _parse_category(value) -> CredentialCategory:
    if isinstance(value, bool):
        raise DomainError(f"invalid category: {value!r}")
    if isinstance(value, int):
        return category_from_id(value)
    if isinstance(value, str):
        if value.strip().lstrip("-").isdigit():
            return category_from_id(int(value))
        return category_from_name(value)
    raise DomainError(f"invalid category: {value!r}")


def _parse_bool(value, *, where: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
    raise ParseError(f"{where}: cannot parse boolean from {value!r}")


def _record_from_fields(fields: dict, *, path: str, line_number: int) -> CredentialRecord:
    if "text" not in fields or fields["text"] is None:
        raise ParseError(f"{path}:{line_number}: missing 'text' field",
                         path=path, line_number=line_number)
    text = str(fields["text"]).strip()
    if not text:
        raise ParseError(f"{path}:{line_number}: empty 'text' field",
                         path=path, line_number=line_number)
    if "category" not in fields or fields["category"] is None:
        raise ParseError(f"{path}:{line_number}: missing 'category' field",
                         path=path, line_number=line_number)
    category = _parse_category(fields["category"])
    is_true = fields.get("is_true", True)
    if is_true is None:
        is_true = True
    is_true = _parse_bool(is_true, where=f"{path}:{line_number}")
    rec_line = fields.get("line_number")
    rec_line = int(rec_line) if rec_line not in (None, "") else 1
    return CredentialRecord(
        text=text,
        category=category,
        is_true=is_true,
        source_path=str(fields.get("source_path") or ""),
        line_number=rec_line,
        language_tag=str(fields.get("language_tag") or ""),
    )


def load_jsonl(path: str | Path) -> LabeledDataset:
    """Load a dataset from the JSONL interchange format (one object per line)."""
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {exc}",
                                 path=str(path), line_number=lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError(f"{path}:{lineno}: line must be a JSON object",
                                 path=str(path), line_number=lineno)
            records.append(_record_from_fields(obj, path=str(path), line_number=lineno))
    return LabeledDataset(tuple(records), name=path.stem)


def load_csv(path: str | Path, mapping: dict[str, str] | None = None) -> LabeledDataset:
    """Load a dataset from CSV with a header row and a column-name mapping."""
    path = Path(path)
    mapping = {**DEFAULT_CSV_MAPPING, **(mapping or {})}
    records = []
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ParseError(f"{path}: missing CSV header row", path=str(path))
        for required in ("text", "category"):
            column = mapping[required]
            if column not in reader.fieldnames:
                raise ParseError(f"{path}: mapped column {column!r} not in header",
                                 path=str(path))
        for lineno, row in enumerate(reader, start=2):
            fields = {}
            for key, column in mapping.items():
                if column in row and row[column] not in (None, ""):
                    fields[key] = row[column]
            records.append(_record_from_fields(fields, path=str(path), line_number=lineno))
    return LabeledDataset(tuple(records), name=path.stem)


def save_jsonl(dataset: LabeledDataset, path: str | Path) -> None:
    """Write a dataset in the JSONL interchange format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for rec in dataset.records:
            obj = {
                "text": rec.text,
                "category": rec.category.label,
                "is_true": rec.is_true,
            }
            if rec.source_path:
                obj["source_path"] = rec.source_path
            if rec.line_number != 1:
                obj["line_number"] = rec.line_number
            if rec.language_tag:
                obj["language_tag"] = rec.language_tag
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _quota_with_remainders(group_sizes: list[int], fraction: float,
                           target: int, available: list[int]) -> list[int]:
    """Largest-remainder allocation of `target` slots across groups.

    Each group receives floor(size*fraction) plus at most one remainder unit,
    never exceeding its `available` count, so per-group counts stay within one
    record of the proportional share.
    """
    quotas = []
    remainders = []
    for gid, size in enumerate(group_sizes):
        ideal = size * fraction
        base = min(math.floor(ideal), available[gid])
        quotas.append(base)
        remainders.append((-(ideal - math.floor(ideal)), gid))
    deficit = target - sum(quotas)
    for _, gid in sorted(remainders):
        if deficit <= 0:
            break
        if quotas[gid] < available[gid]:
            quotas[gid] += 1
            deficit -= 1
    if deficit > 0:
        # Remainder ordering exhausted (tiny groups); fill wherever room is left.
        for gid in range(len(group_sizes)):
            while deficit > 0 and quotas[gid] < available[gid]:
                quotas[gid] += 1
                deficit -= 1
    return quotas


def split_dataset(dataset: LabeledDataset,
                  spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Partition a dataset into (train, valid, test).

    Valid and test sizes are floor(n * fraction); the remainder goes to train.
    The shuffle is SplitMix64-driven Fisher-Yates, so identical (dataset, spec)
    inputs yield identical partitions on any platform. With stratification the
    per-category counts in valid/test stay within one record of proportional.
    Partition records keep the dataset's original relative order.
    """
    n = len(dataset.records)
    if n == 0:
        raise DomainError("cannot split an empty dataset")
    valid_n = math.floor(n * spec.valid_fraction)
    test_n = math.floor(n * spec.test_fraction)
    train_n = n - valid_n - test_n

    order = shuffled(range(n), spec.seed)
    valid_idx: list[int] = []
    test_idx: list[int] = []

    if spec.stratified:
        groups: dict[int, list[int]] = {}
        for idx in order:
            groups.setdefault(dataset.records[idx].category.id, []).append(idx)
        gids = sorted(groups)
        sizes = [len(groups[g]) for g in gids]
        avail = list(sizes)
        valid_q = _quota_with_remainders(sizes, spec.valid_fraction, valid_n, avail)
        avail = [a - q for a, q in zip(avail, valid_q)]
        test_q = _quota_with_remainders(sizes, spec.test_fraction, test_n, avail)
        for pos, gid in enumerate(gids):
            members = groups[gid]
            take_valid = valid_q[pos]
            take_test = test_q[pos]
            valid_idx.extend(members[:take_valid])
            test_idx.extend(members[take_valid:take_valid + take_test])
    else:
        valid_idx = order[train_n:train_n + valid_n]
        test_idx = order[train_n + valid_n:]

    valid_set = set(valid_idx)
    test_set = set(test_idx)
    train = tuple(dataset.records[i] for i in range(n)
                  if i not in valid_set and i not in test_set)
    valid = tuple(dataset.records[i] for i in sorted(valid_set))
    test = tuple(dataset.records[i] for i in sorted(test_set))
    assert len(train) == train_n and len(valid) == valid_n and len(test) == test_n
    return (
        LabeledDataset(train, name=f"{dataset.name}/train"),
        LabeledDataset(valid, name=f"{dataset.name}/valid"),
        LabeledDataset(test, name=f"{dataset.name}/test"),
    )
