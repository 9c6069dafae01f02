"""Shared fixtures and helpers for the test suite."""

import itertools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from anbkit.archspace import Architecture, BlockSpec, SpaceDef


@pytest.fixture(scope="session")
def space():
    return SpaceDef()


@pytest.fixture(scope="session")
def space2():
    return SpaceDef(num_blocks=2)


def enumerate_space(space: SpaceDef) -> list[Architecture]:
    """Every architecture of a (small) space, in lexicographic order."""
    block_options = list(itertools.product(space.choices("expansion"),
                                           space.choices("kernel"),
                                           space.choices("layers"),
                                           space.choices("se")))
    blocks = [BlockSpec(*opt) for opt in block_options]
    return [Architecture(combo) for combo in
            itertools.product(blocks, repeat=space.num_blocks)]
