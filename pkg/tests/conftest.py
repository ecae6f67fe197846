import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the local oracles module

from keyflood.topology import Network

DATA = Path(__file__).parent.parent / "data"


def build_network(links: dict[tuple[str, str], float], unit="bps", block_seconds=1.0) -> Network:
    nodes = sorted({n for pair in links for n in pair})
    return Network(nodes=tuple(nodes), links=dict(links), unit=unit, block_seconds=block_seconds)


@pytest.fixture
def diamond() -> Network:
    """The four-user example: two end users, two intermediaries, value 3."""
    return build_network(
        {("A", "C"): 2, ("A", "D"): 1, ("C", "D"): 1, ("B", "C"): 1, ("B", "D"): 2}
    )


@pytest.fixture
def uniform_diamond() -> Network:
    """Same shape, every link 2 bits (10 key bits total)."""
    return build_network(
        {("A", "C"): 2, ("A", "D"): 2, ("C", "D"): 2, ("B", "C"): 2, ("B", "D"): 2}
    )


@pytest.fixture
def k4() -> Network:
    return build_network(
        {
            ("A", "B"): 1, ("A", "C"): 1, ("A", "D"): 1,
            ("B", "C"): 1, ("B", "D"): 1, ("C", "D"): 1,
        }
    )


def star_network(n_paths: int, bits: int = 8) -> Network:
    """A and B joined by n single-hop relay paths of equal capacity."""
    links = {}
    for i in range(n_paths):
        mid = f"X{i}"
        links[("A", mid)] = bits
        links[(mid, "B")] = bits
    return build_network(links)
