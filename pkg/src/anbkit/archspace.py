"""Block-based architecture search space.

The space is a fixed-length sequence of mobile inverted-bottleneck blocks.
Per block the searchable decisions are the expansion factor, depthwise
kernel size, number of layers, and whether squeeze-excitation is enabled.
Channel widths, strides and the base input resolution are not searched;
they live in the space definition and are only used for costing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

FIELDS = ("expansion", "kernel", "layers", "se")


class SpaceError(ValueError):
    """Raised for values outside the space or malformed encodings."""


def as_rng(rng) -> np.random.Generator:
    """Accept a Generator, a seed int, or None (fresh entropy)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class BlockSpec:
    """One block's searchable decisions."""

    expansion: int
    kernel: int
    layers: int
    se: bool

    def token(self) -> str:
        return f"e{self.expansion}k{self.kernel}l{self.layers}se{int(self.se)}"


@dataclass(frozen=True)
class Architecture:
    """A point in the search space: one BlockSpec per block."""

    blocks: tuple[BlockSpec, ...]

    def __str__(self) -> str:
        return ",".join(b.token() for b in self.blocks)


@dataclass(frozen=True)
class StageSpec:
    """Fixed per-block geometry used only by the cost model."""

    in_channels: int
    out_channels: int
    stride: int


@dataclass(frozen=True)
class SpaceDef:
    num_blocks: int = 7
    expansion_choices: tuple[int, ...] = (1, 4, 6)
    kernel_choices: tuple[int, ...] = (3, 5)
    layers_choices: tuple[int, ...] = (1, 2, 3)
    se_choices: tuple[bool, ...] = (False, True)
    stages: tuple[StageSpec, ...] = field(default=None)  # type: ignore[assignment]
    stem_channels: int = 32
    head_channels: int = 1280
    num_classes: int = 1000
    base_resolution: int = 224

    def __post_init__(self):
        if self.num_blocks < 1:
            raise SpaceError("num_blocks must be >= 1")
        for name in FIELDS:
            choices = self.choices(name)
            if not choices:
                raise SpaceError(f"empty choice set for {name}")
            if len(set(choices)) != len(choices):
                raise SpaceError(f"duplicate values in {name} choices")
        if self.stages is None:
            object.__setattr__(
                self, "stages", default_stages(self.num_blocks, self.stem_channels))
        if len(self.stages) != self.num_blocks:
            raise SpaceError("stage config length must equal num_blocks")

    def choices(self, field_name: str) -> tuple:
        return getattr(self, f"{field_name}_choices")

    def validate(self, arch: Architecture) -> None:
        if len(arch.blocks) != self.num_blocks:
            raise SpaceError(
                f"architecture has {len(arch.blocks)} blocks, space expects "
                f"{self.num_blocks}")
        for b, block in enumerate(arch.blocks):
            for name in FIELDS:
                if getattr(block, name) not in self.choices(name):
                    raise SpaceError(
                        f"block {b} field {name}: value "
                        f"{getattr(block, name)!r} not in {self.choices(name)}")


# Channel plan follows the EfficientNet-B0 convention for seven stages:
# stem 32, outputs 16/24/40/80/112/192/320, strides 1/2/2/2/1/2/1.
_B0_OUT = (16, 24, 40, 80, 112, 192, 320)
_B0_STRIDE = (1, 2, 2, 2, 1, 2, 1)


def default_stages(num_blocks: int, stem_channels: int = 32) -> tuple[StageSpec, ...]:
    if num_blocks > len(_B0_OUT):
        raise SpaceError(
            f"default stage table covers up to {len(_B0_OUT)} blocks")
    stages = []
    c_in = stem_channels
    for i in range(num_blocks):
        stages.append(StageSpec(c_in, _B0_OUT[i], _B0_STRIDE[i]))
        c_in = _B0_OUT[i]
    return tuple(stages)


def default_space() -> SpaceDef:
    return SpaceDef()


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------

def format_arch(arch: Architecture) -> str:
    return str(arch)


def parse_arch(text: str, space: SpaceDef | None = None) -> Architecture:
    """Parse the comma-separated token form, e.g. ``e6k5l3se1,...``."""
    import re

    blocks = []
    for i, token in enumerate(text.strip().split(",")):
        m = re.fullmatch(r"e(\d+)k(\d+)l(\d+)se([01])", token.strip())
        if m is None:
            raise SpaceError(f"bad block token {token!r} at position {i}")
        blocks.append(BlockSpec(int(m.group(1)), int(m.group(2)),
                                int(m.group(3)), m.group(4) == "1"))
    arch = Architecture(tuple(blocks))
    if space is not None:
        space.validate(arch)
    return arch


# ---------------------------------------------------------------------------
# combinatorics, sampling, mutation
# ---------------------------------------------------------------------------

def space_size(space: SpaceDef) -> int:
    per_block = 1
    for name in FIELDS:
        per_block *= len(space.choices(name))
    return per_block ** space.num_blocks


def sample_uniform(space: SpaceDef, rng) -> Architecture:
    rng = as_rng(rng)
    blocks = []
    for _ in range(space.num_blocks):
        values = {name: space.choices(name)[rng.integers(len(space.choices(name)))]
                  for name in FIELDS}
        blocks.append(BlockSpec(**values))
    return Architecture(tuple(blocks))


def mutate(space: SpaceDef, arch: Architecture, rng) -> Architecture:
    """Replace one uniformly chosen decision with a different value.

    Positions whose choice set is a singleton cannot change and are never
    picked; if every position is a singleton there is nothing to mutate.
    """
    space.validate(arch)
    rng = as_rng(rng)
    positions = [(b, name)
                 for b in range(space.num_blocks)
                 for name in FIELDS
                 if len(space.choices(name)) > 1]
    if not positions:
        raise SpaceError("every decision set is a singleton; cannot mutate")
    b, name = positions[rng.integers(len(positions))]
    current = getattr(arch.blocks[b], name)
    alternatives = [v for v in space.choices(name) if v != current]
    new_value = alternatives[rng.integers(len(alternatives))]
    blocks = list(arch.blocks)
    values = {f: getattr(blocks[b], f) for f in FIELDS}
    values[name] = new_value
    blocks[b] = BlockSpec(**values)
    return Architecture(tuple(blocks))


# ---------------------------------------------------------------------------
# feature encoding
# ---------------------------------------------------------------------------

def encoding_width(space: SpaceDef) -> int:
    per_block = sum(len(space.choices(name)) if name != "se" else 1
                    for name in FIELDS)
    return per_block * space.num_blocks


def encode(space: SpaceDef, arch: Architecture) -> np.ndarray:
    """One-hot per categorical decision plus a bare SE bit per block."""
    space.validate(arch)
    out = np.zeros(encoding_width(space), dtype=np.float64)
    pos = 0
    for block in arch.blocks:
        for name in FIELDS:
            choices = space.choices(name)
            if name == "se":
                out[pos] = 1.0 if block.se else 0.0
                pos += 1
            else:
                out[pos + choices.index(getattr(block, name))] = 1.0
                pos += len(choices)
    return out


def decode(space: SpaceDef, vec) -> Architecture:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (encoding_width(space),):
        raise SpaceError(
            f"expected encoding of length {encoding_width(space)}, "
            f"got shape {vec.shape}")
    blocks = []
    pos = 0
    for b in range(space.num_blocks):
        values = {}
        for name in FIELDS:
            choices = space.choices(name)
            if name == "se":
                bit = vec[pos]
                if bit not in (0.0, 1.0):
                    raise SpaceError(f"block {b} field se: bit must be 0 or 1")
                values["se"] = bool(bit)
                pos += 1
            else:
                group = vec[pos:pos + len(choices)]
                hot = np.flatnonzero(group == 1.0)
                if len(hot) != 1 or not np.all((group == 0.0) | (group == 1.0)):
                    raise SpaceError(
                        f"block {b} field {name}: one-hot group must have "
                        f"exactly one 1")
                values[name] = choices[int(hot[0])]
                pos += len(choices)
        blocks.append(BlockSpec(**values))
    return Architecture(tuple(blocks))


# ---------------------------------------------------------------------------
# analytic cost model
# ---------------------------------------------------------------------------

def _out_res(res: int, stride: int) -> int:
    return -(-res // stride)


def flops_params(space: SpaceDef, arch: Architecture,
                 input_res: int | None = None) -> tuple[int, int]:
    """MAC and parameter counts for the full network.

    Stem conv, every MBConv layer (expansion 1x1, depthwise kxk, optional
    squeeze-excitation, projection 1x1) and the head (1x1 conv plus
    classifier) are summed. Convolutions carry no bias; SE and classifier
    FC layers do. Parameters do not depend on the input resolution.
    """
    space.validate(arch)
    if input_res is None:
        input_res = space.base_resolution
    if input_res <= 0:
        raise SpaceError("input_res must be positive")

    res = _out_res(input_res, 2)
    macs = res * res * 9 * 3 * space.stem_channels
    params = 9 * 3 * space.stem_channels

    for block, stage in zip(arch.blocks, space.stages):
        for layer in range(block.layers):
            c_in = stage.in_channels if layer == 0 else stage.out_channels
            stride = stage.stride if layer == 0 else 1
            expanded = c_in * block.expansion

            macs += res * res * c_in * expanded
            params += c_in * expanded

            res_out = _out_res(res, stride)
            macs += res_out * res_out * block.kernel ** 2 * expanded
            params += block.kernel ** 2 * expanded

            if block.se:
                mid = max(1, expanded // 4)
                macs += 2 * expanded * mid
                params += (expanded * mid + mid) + (mid * expanded + expanded)

            macs += res_out * res_out * expanded * stage.out_channels
            params += expanded * stage.out_channels
            res = res_out

    last = space.stages[-1].out_channels
    macs += res * res * last * space.head_channels
    params += last * space.head_channels
    macs += space.head_channels * space.num_classes
    params += space.head_channels * space.num_classes + space.num_classes
    return macs, params


# ---------------------------------------------------------------------------
# FLOPs-uniform model grid
# ---------------------------------------------------------------------------

def uniform_grid(space: SpaceDef, n: int, pool: int, rng) -> list[Architecture]:
    """Select n architectures evenly spread over the pool's FLOPs axis.

    A random pool is sorted by FLOPs and cut into n equal-frequency bins;
    each bin contributes the architecture closest to its median FLOPs
    (ties broken by params, then lexicographic encoding). The returned
    sequence has strictly increasing FLOPs.
    """
    if n < 2:
        raise SpaceError("n must be >= 2")
    if pool < 10 * n:
        raise SpaceError("pool must be >= 10 * n")
    rng = as_rng(rng)

    archs = [sample_uniform(space, rng) for _ in range(pool)]
    costs = [flops_params(space, a) for a in archs]
    keys = [(c[0], c[1], str(a)) for c, a in zip(costs, archs)]
    order = sorted(range(pool), key=lambda i: keys[i])
    flops_sorted = [keys[i][0] for i in order]

    picked = []
    for k in range(n):
        lo = k * pool // n
        hi = (k + 1) * pool // n
        median = float(np.median(flops_sorted[lo:hi]))
        best = min(range(lo, hi),
                   key=lambda i: (abs(flops_sorted[i] - median),
                                  keys[order[i]][1], keys[order[i]][2]))
        picked.append(best)

    # Enforce strictly increasing FLOPs: on a tie, advance to the next
    # distinct FLOPs value in the sorted pool.
    result = [picked[0]]
    for k in range(1, n):
        i = picked[k]
        while i < pool and flops_sorted[i] <= flops_sorted[result[-1]]:
            i += 1
        if i == pool:
            raise SpaceError(
                "pool has too few distinct FLOPs values for the grid")
        result.append(i)
    return [archs[order[i]] for i in result]
