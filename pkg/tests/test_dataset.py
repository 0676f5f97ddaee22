import json
from collections import Counter

import pytest

from credsift.dataset import (
    LabeledDataset,
    SplitSpec,
    load_csv,
    load_jsonl,
    save_jsonl,
    split_dataset,
)
from credsift.errors import DomainError, ParseError
from credsift.rng import SplitMix64
from credsift.taxonomy import CredentialCategory, CredentialRecord


def _write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


def _records(n, category=CredentialCategory.PASSWORDS):
    return tuple(
        CredentialRecord(text=f"cred-{i}", category=category, line_number=i + 1)
        for i in range(n)
    )


def test_load_jsonl_counts_and_order(tmp_path):
    rows = [
        {"text": "password = 'a'", "category": "Passwords", "is_true": True},
        {"text": "token: b", "category": 3, "is_true": False},
        {"text": "user:w@/uzpmce@/", "category": "Others", "is_true": True},
    ]
    path = tmp_path / "data.jsonl"
    _write_jsonl(path, rows)
    ds = load_jsonl(path)
    assert len(ds) == 3
    assert ds.records[0].text == "password = 'a'"
    assert ds.records[1].category is CredentialCategory.GENERIC_TOKENS
    assert ds.records[1].is_true is False


def test_load_jsonl_category_name_maps_to_id_zero(tmp_path):
    path = tmp_path / "one.jsonl"
    _write_jsonl(path, [{"text": "x = 1", "category": "Passwords"}])
    assert load_jsonl(path).records[0].category.id == 0


def test_load_jsonl_missing_text_names_the_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    _write_jsonl(path, [{"text": "ok", "category": 0}, {"category": 1}])
    with pytest.raises(ParseError) as err:
        load_jsonl(path)
    assert err.value.line_number == 2


def test_load_jsonl_rejects_unknown_category(tmp_path):
    path = tmp_path / "bad.jsonl"
    _write_jsonl(path, [{"text": "x", "category": "NotAThing"}])
    with pytest.raises(DomainError):
        load_jsonl(path)


def test_load_jsonl_rejects_malformed_json(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"text": "ok", "category": 0}\n{oops\n', encoding="utf-8")
    with pytest.raises(ParseError) as err:
        load_jsonl(path)
    assert err.value.line_number == 2


def test_load_jsonl_missing_file():
    with pytest.raises(OSError):
        load_jsonl("/nonexistent/nowhere.jsonl")


def test_load_csv_basic(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text(
        "text,category,is_true\n"
        'password = "a",Passwords,true\n'
        "token: b,GenericTokens,FALSE\n",
        encoding="utf-8")
    ds = load_csv(path)
    assert len(ds) == 2
    assert ds.records[0].is_true is True
    assert ds.records[1].is_true is False


def test_load_csv_missing_mapped_column(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("line,category\nx,0\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_csv(path)
    # and with an explicit mapping it works
    ds = load_csv(path, {"text": "line"})
    assert ds.records[0].text == "x"


def test_save_load_round_trip(tmp_path):
    ds = LabeledDataset(_records(5), name="five")
    out = tmp_path / "out.jsonl"
    save_jsonl(ds, out)
    loaded = load_jsonl(out)
    assert [r.text for r in loaded.records] == [r.text for r in ds.records]
    assert [r.category for r in loaded.records] == [r.category for r in ds.records]


def test_split_sizes_80_10_10_seed_42():
    ds = LabeledDataset(_records(100), name="hundred")
    train, valid, test = split_dataset(ds, SplitSpec(seed=42))
    assert (len(train), len(valid), len(test)) == (80, 10, 10)


def test_split_is_deterministic():
    ds = LabeledDataset(_records(57), name="d")
    spec = SplitSpec(seed=7)
    first = split_dataset(ds, spec)
    second = split_dataset(ds, spec)
    for a, b in zip(first, second):
        assert a.records == b.records


def test_split_single_category_stratified():
    ds = LabeledDataset(_records(10, CredentialCategory.GENERIC_SECRETS))
    train, valid, test = split_dataset(ds, SplitSpec(seed=1, stratified=True))
    assert (len(train), len(valid), len(test)) == (8, 1, 1)
    assert all(r.category is CredentialCategory.GENERIC_SECRETS
               for part in (train, valid, test) for r in part.records)


def _random_dataset(rng, n):
    cats = list(CredentialCategory)
    return LabeledDataset(tuple(
        CredentialRecord(text=f"t{i}-{rng.below(1000)}",
                         category=cats[rng.below(len(cats))],
                         line_number=i + 1)
        for i in range(n)))


@pytest.mark.parametrize("trial", range(10))
def test_split_partition_property(trial):
    rng = SplitMix64(9000 + trial)
    ds = _random_dataset(rng, 20 + rng.below(80))
    train, valid, test = split_dataset(ds, SplitSpec(seed=trial, stratified=bool(trial % 2)))
    merged = Counter(train.records) + Counter(valid.records) + Counter(test.records)
    assert merged == Counter(ds.records)


def test_split_stratified_within_one_of_proportional():
    rng = SplitMix64(77)
    ds = _random_dataset(rng, 200)
    _, valid, test = split_dataset(ds, SplitSpec(seed=3, stratified=True))
    totals = ds.category_counts()
    for part, fraction in ((valid, 0.1), (test, 0.1)):
        part_counts = part.category_counts()
        for cat, total in totals.items():
            if total == 0:
                assert part_counts[cat] == 0
                continue
            assert abs(part_counts[cat] - total * fraction) <= 1.0


def test_split_empty_dataset_rejected():
    with pytest.raises(DomainError):
        split_dataset(LabeledDataset(()), SplitSpec())


def test_split_fractions_must_sum_to_one():
    with pytest.raises(DomainError):
        SplitSpec(train_fraction=0.5, valid_fraction=0.1, test_fraction=0.1)


def test_filtered_true_only():
    records = _records(4) + (
        CredentialRecord(text="false one", category=CredentialCategory.OTHERS,
                         is_true=False),
    )
    ds = LabeledDataset(records)
    assert len(ds.filtered(true_only=True)) == 4
    assert len(ds.filtered(true_only=False)) == 5
