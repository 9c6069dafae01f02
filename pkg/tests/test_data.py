"""Dataset collection, naming, splits, serialization, device oracles."""

import json
import logging

import numpy as np
import pytest

from anbkit import data
from anbkit.archspace import sample_uniform
from anbkit.data import (DatasetError, DatasetVersionError, MetricDataset,
                         Record, collect, default_oracles, design_matrix,
                         latency_oracle, load_dataset, parse_dataset_name,
                         save_dataset, split, throughput_oracle)


def _acc_dataset(space, n, seed=0):
    rng = np.random.default_rng(seed)
    archs = [sample_uniform(space, rng) for _ in range(n)]
    values = np.round(rng.uniform(0.6, 0.8, size=n), 6)
    records = tuple(Record(str(a), float(v), "top1-fraction")
                    for a, v in zip(archs, values))
    return MetricDataset("ANB-Acc", records)


# ---------------------------------------------------------------------------
# dataset names
# ---------------------------------------------------------------------------

def test_parse_dataset_names():
    assert parse_dataset_name("ANB-Acc") == (None, "Acc")
    assert parse_dataset_name("ANB-A100-Thr") == ("A100", "Thr")
    assert parse_dataset_name("ANB-ZCU-Lat") == ("ZCU", "Lat")


@pytest.mark.parametrize("name", [
    "ANB-Thr",            # throughput needs a device
    "ANB-Lat",
    "ANB-Foo-Bar",        # unknown metric
    "Acc",
    "ANB-",
    "anb-Acc",
])
def test_parse_rejects_bad_names(name):
    with pytest.raises(DatasetError):
        parse_dataset_name(name)


def test_latency_on_gpu_warns(caplog):
    with caplog.at_level(logging.WARNING):
        parse_dataset_name("ANB-A100-Lat")
    assert any("latency" in r.message.lower() for r in caplog.records)


# ---------------------------------------------------------------------------
# collection
# ---------------------------------------------------------------------------

def test_collect_aligns_datasets(space):
    oracles_map = default_oracles(space, devices=("A100", "ZCU"), seed=0)
    assert set(oracles_map) == {"ANB-Acc", "ANB-A100-Thr", "ANB-ZCU-Thr",
                                "ANB-ZCU-Lat"}
    datasets = collect(space, 30, oracles_map, np.random.default_rng(4))
    archs = [r.arch for r in datasets["ANB-Acc"].records]
    assert len(archs) == 30
    for ds in datasets.values():
        assert [r.arch for r in ds.records] == archs


def test_collect_skips_failures_in_lockstep(space):
    oracles_map = default_oracles(space, devices=("A100",), seed=0)
    flaky = oracles_map["ANB-A100-Thr"]

    def failing(arch):
        if str(arch)[1] == "1":  # expansion 1 in the first block
            raise RuntimeError("measurement failed")
        return flaky(arch)

    oracles_map["ANB-A100-Thr"] = failing
    datasets = collect(space, 40, oracles_map, np.random.default_rng(5))
    archs = [r.arch for r in datasets["ANB-Acc"].records]
    assert 0 < len(archs) < 40
    assert [r.arch for r in datasets["ANB-A100-Thr"].records] == archs
    assert all(a[1] != "1" for a in archs)


def test_collect_rng_is_used_only_for_sampling(space):
    oracles_map = default_oracles(space, devices=("A100",), seed=0)
    full = collect(space, 20, oracles_map, np.random.default_rng(6))

    def failing(arch):
        raise RuntimeError("down")

    broken = dict(oracles_map)
    broken["ANB-A100-Thr"] = failing
    partial = collect(space, 20, broken, np.random.default_rng(6))
    # Same draw sequence: the accuracy dataset shrinks to the empty
    # intersection but sampling is unchanged, so rerunning without the
    # failure reproduces the full arch list.
    assert len(partial["ANB-Acc"].records) == 0
    again = collect(space, 20, oracles_map, np.random.default_rng(6))
    assert [r.arch for r in again["ANB-Acc"].records] == \
        [r.arch for r in full["ANB-Acc"].records]


def test_collect_validation(space):
    oracles_map = default_oracles(space, devices=("A100",), seed=0)
    with pytest.raises(ValueError):
        collect(space, 0, oracles_map, np.random.default_rng(0))
    with pytest.raises(ValueError):
        collect(space, 5, {}, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------

def test_split_sizes_small(space2):
    ds = _acc_dataset(space2, 10)
    assignment = split(ds, (0.8, 0.1, 0.1), seed=1)
    assert len(assignment.indices("train")) == 8
    assert len(assignment.indices("val")) == 1
    assert len(assignment.indices("test")) == 1


def test_split_sizes_large(space):
    ds = _acc_dataset(space, 5200)
    assignment = split(ds, (0.8, 0.1, 0.1), seed=1)
    assert len(assignment.indices("train")) == 4160
    assert len(assignment.indices("val")) == 520
    assert len(assignment.indices("test")) == 520


def test_split_is_a_seeded_partition(space2):
    ds = _acc_dataset(space2, 50)
    a = split(ds, (0.6, 0.2, 0.2), seed=3)
    b = split(ds, (0.6, 0.2, 0.2), seed=3)
    c = split(ds, (0.6, 0.2, 0.2), seed=4)
    assert np.array_equal(a.indices("train"), b.indices("train"))
    assert not np.array_equal(a.indices("train"), c.indices("train"))
    combined = sorted(list(a.indices("train")) + list(a.indices("val"))
                      + list(a.indices("test")))
    assert combined == list(range(50))


def test_split_ratio_validation(space2):
    ds = _acc_dataset(space2, 10)
    with pytest.raises(ValueError):
        split(ds, (0.8, 0.3, 0.1), seed=0)
    with pytest.raises(ValueError):
        split(ds, (0.8, -0.1, 0.1), seed=0)
    with pytest.raises(ValueError):
        split(ds, (0.8, 0.1), seed=0)


def test_design_matrix_respects_split(space2):
    ds = _acc_dataset(space2, 30)
    assignment = split(ds, (0.8, 0.1, 0.1), seed=2)
    X, y = design_matrix(ds, space2, assignment, "train")
    assert X.shape == (24, 18)
    assert y.shape == (24,)
    idx = assignment.indices("train")[0]
    assert y[0] == ds.records[idx].value

    X_all, y_all = design_matrix(ds, space2)
    assert X_all.shape == (30, 18)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_save_load_roundtrip(tmp_path, space2):
    ds = _acc_dataset(space2, 25)
    path = tmp_path / "ANB-Acc.jsonl"
    save_dataset(ds, path)
    again = load_dataset(path)
    assert again.name == ds.name
    assert again.records == ds.records

    second = tmp_path / "copy.jsonl"
    save_dataset(again, second)
    assert second.read_bytes() == path.read_bytes()


def test_load_reports_line_numbers(tmp_path, space2):
    ds = _acc_dataset(space2, 5)
    path = tmp_path / "ds.jsonl"
    save_dataset(ds, path)
    lines = path.read_text().splitlines()
    lines[3] = lines[3][:-10]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError) as err:
        load_dataset(path)
    assert "line 4" in str(err.value)


def test_load_rejects_version_mismatch(tmp_path, space2):
    ds = _acc_dataset(space2, 3)
    path = tmp_path / "ds.jsonl"
    save_dataset(ds, path)
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    header["schema_version"] = 99
    lines[0] = json.dumps(header, sort_keys=True)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetVersionError):
        load_dataset(path)
    assert issubclass(DatasetVersionError, DatasetError)


def test_load_rejects_count_mismatch(tmp_path, space2):
    ds = _acc_dataset(space2, 4)
    path = tmp_path / "ds.jsonl"
    save_dataset(ds, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(DatasetError):
        load_dataset(path)


def test_load_rejects_extra_record_keys(tmp_path, space2):
    ds = _acc_dataset(space2, 3)
    path = tmp_path / "ds.jsonl"
    save_dataset(ds, path)
    lines = path.read_text().splitlines()
    rec = json.loads(lines[1])
    rec["comment"] = "hello"
    lines[1] = json.dumps(rec, sort_keys=True)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError) as err:
        load_dataset(path)
    assert "line 2" in str(err.value)


def test_dataset_value_validation(space2):
    arch = str(sample_uniform(space2, np.random.default_rng(7)))
    with pytest.raises(DatasetError):
        MetricDataset("ANB-Acc", (Record(arch, 1.2, "top1-fraction"),))
    with pytest.raises(DatasetError):
        MetricDataset("ANB-A100-Thr", (Record(arch, -5.0, "images-per-sec"),))
    with pytest.raises(DatasetError):
        MetricDataset("ANB-Acc", (Record(arch, 0.7, "images-per-sec"),))


# ---------------------------------------------------------------------------
# device oracles
# ---------------------------------------------------------------------------

def test_device_oracles_are_deterministic(space):
    arch = sample_uniform(space, np.random.default_rng(8))
    thr = throughput_oracle(space, "A100", seed=0)
    lat = latency_oracle(space, "ZCU", seed=0)
    assert thr(arch) == thr(arch)
    assert lat(arch) == lat(arch)
    assert thr(arch) > 0
    assert lat(arch) > 0


def test_bigger_networks_run_slower(space):
    small = data.parse_arch(",".join(["e1k3l1se0"] * 7), space)
    large = data.parse_arch(",".join(["e6k5l3se0"] * 7), space)
    thr = throughput_oracle(space, "A100", seed=0)
    lat = latency_oracle(space, "ZCU", seed=0)
    assert thr(small) > thr(large)
    assert lat(small) < lat(large)


def test_latency_oracle_rejects_non_fpga(space):
    with pytest.raises(DatasetError):
        latency_oracle(space, "A100", seed=0)


def test_unknown_device_rejected(space):
    with pytest.raises(DatasetError):
        throughput_oracle(space, "Abacus", seed=0)
