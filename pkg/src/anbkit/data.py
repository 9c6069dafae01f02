"""Metric datasets: collection, splitting and JSON-Lines persistence.

A dataset is a named list of (architecture, value) records for one
metric on one device, e.g. accuracy, images-per-second throughput or
millisecond latency. Names follow ``ANB-{device}-{metric}`` with the
device part optional for accuracy. Files are JSON-Lines with a header
line carrying the name, record count and schema version.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from anbkit.archspace import (Architecture, SpaceDef, as_rng, encode,
                              flops_params, parse_arch, sample_uniform)
from anbkit.proxysearch import (DEFAULT_PROXY_SCHEME, SyntheticTrainerOracle,
                                TrainingScheme, synthetic_oracle)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
METRIC_UNITS = {"Acc": "top1-fraction", "Thr": "images-per-sec", "Lat": "ms"}
FPGA_DEVICES = ("ZCU", "VCK")
KNOWN_DEVICES = ("ZCU", "VCK", "TPUv2", "TPUv3", "A100", "RTX")

_NAME_RE = re.compile(r"^ANB-(?:(?P<device>[A-Za-z0-9]+)-)?"
                      r"(?P<metric>Acc|Thr|Lat)$")


class DatasetError(ValueError):
    """Dataset contents or file structure violate the schema."""


class DatasetVersionError(DatasetError):
    """Dataset file declares an unsupported schema version."""


def parse_dataset_name(name: str) -> tuple[str | None, str]:
    """Split a dataset name into (device, metric); device may be None."""
    match = _NAME_RE.match(name)
    if match is None:
        raise DatasetError(
            f"dataset name {name!r} does not follow ANB-{{device}}-{{metric}} "
            f"with metric in {sorted(METRIC_UNITS)}")
    device, metric = match.group("device"), match.group("metric")
    if metric != "Acc" and device is None:
        raise DatasetError(
            f"dataset name {name!r}: metric {metric} needs a device part")
    if metric == "Lat" and device not in FPGA_DEVICES:
        log.warning("dataset %s: latency is normally an FPGA metric "
                    "(devices %s)", name, ", ".join(FPGA_DEVICES))
    return device, metric


@dataclass(frozen=True)
class Record:
    arch: str
    value: float
    unit: str


@dataclass(frozen=True)
class SplitAssignment:
    """Reproducible train/val/test tags for each record position."""

    ratios: tuple[float, float, float]
    seed: int
    tags: tuple[str, ...]

    def __post_init__(self):
        if not math.isclose(sum(self.ratios), 1.0, abs_tol=1e-9):
            raise DatasetError(f"split ratios must sum to 1, "
                               f"got {self.ratios}")
        bad = set(self.tags) - {"train", "val", "test"}
        if bad:
            raise DatasetError(f"unknown split tags: {sorted(bad)}")

    def indices(self, tag: str) -> np.ndarray:
        return np.flatnonzero(np.array(self.tags) == tag)


@dataclass(frozen=True)
class MetricDataset:
    name: str
    records: tuple[Record, ...]
    split: SplitAssignment | None = None

    def __post_init__(self):
        device, metric = parse_dataset_name(self.name)
        unit = METRIC_UNITS[metric]
        for i, record in enumerate(self.records):
            where = f"dataset {self.name} record {i}"
            parse_arch(record.arch)
            if not math.isfinite(record.value):
                raise DatasetError(f"{where}: value must be finite")
            if record.unit != unit:
                raise DatasetError(
                    f"{where}: unit {record.unit!r} does not match "
                    f"{unit!r} for metric {metric}")
            if metric == "Acc" and not 0.0 <= record.value <= 1.0:
                raise DatasetError(
                    f"{where}: accuracy {record.value} outside [0, 1]")
            if metric in ("Thr", "Lat") and record.value <= 0.0:
                raise DatasetError(
                    f"{where}: {metric} value must be positive")
        if self.split is not None and len(self.split.tags) != len(self.records):
            raise DatasetError("split assignment length differs from records")

    @property
    def device(self) -> str | None:
        return parse_dataset_name(self.name)[0]

    @property
    def metric(self) -> str:
        return parse_dataset_name(self.name)[1]

    @property
    def unit(self) -> str:
        return METRIC_UNITS[self.metric]

    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    def archs(self) -> list[str]:
        return [r.arch for r in self.records]

    def with_split(self, assignment: SplitAssignment) -> "MetricDataset":
        return replace(self, split=assignment)


# ---------------------------------------------------------------------------
# collection
# ---------------------------------------------------------------------------

def collect(space: SpaceDef, n: int, oracles: Mapping[str, Callable],
            rng) -> dict[str, MetricDataset]:
    """Sample n architectures once and score them with every oracle.

    All returned datasets share the same architecture column in the same
    order. If any oracle fails on an architecture, that architecture is
    dropped from all datasets so the columns stay aligned.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not oracles:
        raise ValueError("need at least one oracle")
    units = {name: METRIC_UNITS[parse_dataset_name(name)[1]]
             for name in oracles}
    rng = as_rng(rng)
    archs = [sample_uniform(space, rng) for _ in range(n)]

    columns: dict[str, list[Record]] = {name: [] for name in oracles}
    for arch in archs:
        row = {}
        ok = True
        for name, oracle in oracles.items():
            try:
                row[name] = float(oracle(arch))
            except Exception as exc:
                log.warning("skipping %s: oracle %s failed: %s",
                            arch, name, exc)
                ok = False
                break
        if not ok:
            continue
        text = str(arch)
        for name, value in row.items():
            columns[name].append(Record(text, value, units[name]))
    return {name: MetricDataset(name, tuple(records))
            for name, records in columns.items()}


def split(ds: MetricDataset, ratios: Sequence[float],
          seed: int) -> SplitAssignment:
    """Seeded shuffle, then a contiguous train/val/test cut.

    Val and test sizes are floors of their ratios; the remainder goes to
    train, so val and test are never inflated by rounding.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) \
            or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise DatasetError(f"ratios must be three nonnegative values "
                           f"summing to 1, got {ratios}")
    n = len(ds.records)
    if n < 3:
        raise DatasetError("need at least 3 records to split")
    n_val = int(ratios[1] * n)
    n_test = int(ratios[2] * n)
    n_train = n - n_val - n_test
    if n_train <= 0:
        raise DatasetError("split leaves no training records")
    perm = np.random.default_rng(seed).permutation(n)
    tags = np.empty(n, dtype=object)
    tags[perm[:n_train]] = "train"
    tags[perm[n_train:n_train + n_val]] = "val"
    tags[perm[n_train + n_val:]] = "test"
    return SplitAssignment(ratios, int(seed), tuple(tags))


def design_matrix(ds: MetricDataset, space: SpaceDef,
                  assignment: SplitAssignment | None = None,
                  tag: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Encoded feature matrix and target vector, optionally one split."""
    records = ds.records
    if tag is not None:
        if assignment is None:
            assignment = ds.split
        if assignment is None:
            raise DatasetError("tag given but dataset has no split")
        keep = assignment.indices(tag)
        records = [records[i] for i in keep]
    X = np.array([encode(space, parse_arch(r.arch, space)) for r in records])
    y = np.array([r.value for r in records])
    return X, y


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_dataset(ds: MetricDataset, path) -> None:
    lines = [json.dumps({"name": ds.name, "count": len(ds.records),
                         "schema_version": SCHEMA_VERSION}, sort_keys=True)]
    for record in ds.records:
        lines.append(json.dumps({"arch": record.arch, "value": record.value,
                                 "unit": record.unit}, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path) -> MetricDataset:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset file {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise DatasetError(f"{path}: empty dataset file")

    def parse_line(i: int) -> dict:
        try:
            doc = json.loads(lines[i])
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path} line {i + 1}: {exc}") from exc
        if not isinstance(doc, dict):
            raise DatasetError(f"{path} line {i + 1}: expected an object")
        return doc

    header = parse_line(0)
    version = header.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DatasetVersionError(
            f"{path}: unsupported schema_version {version!r}, "
            f"expected {SCHEMA_VERSION}")
    missing = {"name", "count"} - set(header)
    if missing:
        raise DatasetError(f"{path} line 1: header missing {sorted(missing)}")
    count = header["count"]
    if count != len(lines) - 1:
        raise DatasetError(
            f"{path}: header count {count} but file has "
            f"{len(lines) - 1} records")

    records = []
    for i in range(1, len(lines)):
        doc = parse_line(i)
        if set(doc) != {"arch", "value", "unit"}:
            raise DatasetError(
                f"{path} line {i + 1}: record must have exactly "
                f"arch, value, unit")
        records.append(Record(str(doc["arch"]), float(doc["value"]),
                              str(doc["unit"])))
    try:
        return MetricDataset(str(header["name"]), tuple(records))
    except DatasetError as exc:
        raise DatasetError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# synthetic measurement oracles
# ---------------------------------------------------------------------------

# Per-device cost curves for the simulated measurements. Throughput
# scale is images/sec at 1e8 MACs; latency base is ms at 1e8 MACs.
THROUGHPUT_SCALE = {"A100": 9000.0, "RTX": 4200.0,
                    "TPUv2": 3500.0, "TPUv3": 6500.0,
                    "ZCU": 700.0, "VCK": 1800.0}
LATENCY_BASE = {"ZCU": 8.0, "VCK": 3.0}
_THR_EXP = 0.85
_LAT_EXP = 0.9
_JITTER = 0.02


def _arch_jitter(arch: Architecture, device: str, metric: str,
                 seed: int) -> float:
    key = f"{arch}|{device}|{metric}|{seed}"
    digest = hashlib.sha256(key.encode("ascii")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    return float(np.exp(_JITTER * rng.standard_normal()))


def _check_device(device: str) -> None:
    if device not in KNOWN_DEVICES:
        raise DatasetError(f"unknown device {device!r}; known: "
                           f"{', '.join(KNOWN_DEVICES)}")


def throughput_oracle(space: SpaceDef, device: str,
                      seed: int = 0) -> Callable[[Architecture], float]:
    """Deterministic images-per-second model: big networks run slower."""
    _check_device(device)
    scale = THROUGHPUT_SCALE[device]

    def oracle(arch: Architecture) -> float:
        flops, _ = flops_params(space, arch)
        se_frac = sum(b.se for b in arch.blocks) / space.num_blocks
        base = scale / (flops / 1e8) ** _THR_EXP
        return base * (1.0 - 0.1 * se_frac) * _arch_jitter(
            arch, device, "Thr", seed)

    return oracle


def latency_oracle(space: SpaceDef, device: str,
                   seed: int = 0) -> Callable[[Architecture], float]:
    """Deterministic millisecond latency model for FPGA-class devices."""
    _check_device(device)
    if device not in FPGA_DEVICES:
        raise DatasetError(f"no latency model for {device}; available on "
                           f"{', '.join(FPGA_DEVICES)}")
    base_ms = LATENCY_BASE[device]

    def oracle(arch: Architecture) -> float:
        flops, _ = flops_params(space, arch)
        se_frac = sum(b.se for b in arch.blocks) / space.num_blocks
        base = base_ms * (flops / 1e8) ** _LAT_EXP
        return base * (1.0 + 0.3 * se_frac) * _arch_jitter(
            arch, device, "Lat", seed)

    return oracle


def accuracy_oracle(space: SpaceDef,
                    scheme: TrainingScheme = DEFAULT_PROXY_SCHEME,
                    oracle: SyntheticTrainerOracle | None = None,
                    seed: int = 0) -> Callable[[Architecture], float]:
    """Top-1 accuracy as measured by training under the given scheme."""
    trainer = oracle if oracle is not None else synthetic_oracle(space)

    def fn(arch: Architecture) -> float:
        return trainer.evaluate(arch, scheme, seed)[0]

    return fn


def default_oracles(space: SpaceDef, devices: Sequence[str] = ("A100", "ZCU"),
                    seed: int = 0) -> dict[str, Callable]:
    """Accuracy plus per-device throughput (and latency on FPGAs)."""
    oracles: dict[str, Callable] = {"ANB-Acc": accuracy_oracle(space,
                                                               seed=seed)}
    for device in devices:
        oracles[f"ANB-{device}-Thr"] = throughput_oracle(space, device, seed)
        if device in FPGA_DEVICES:
            oracles[f"ANB-{device}-Lat"] = latency_oracle(space, device, seed)
    return oracles
