"""Bank lattice of a 3D memory stack.

Banks are numbered 0-based, row-major inside a layer and layer-major across
the stack, so for the default 4x4x8 stack the banks directly above and
below bank 25 are 41 and 9, and its row neighbours are 24 and 26.
Layer 0 is the die next to the logic die and heat sink.
"""

from dataclasses import dataclass
from enum import Enum

from .errors import DomainError


class Link(str, Enum):
    LATERAL = "lateral"
    VERTICAL = "vertical"


@dataclass(frozen=True)
class StackGeometry:
    width: int = 4
    depth: int = 4
    layers: int = 8

    def __post_init__(self):
        for name in ("width", "depth", "layers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")

    @property
    def banks_per_layer(self):
        return self.width * self.depth

    @property
    def total_banks(self):
        return self.width * self.depth * self.layers


@dataclass(frozen=True, order=True)
class BankCoord:
    layer: int
    row: int
    col: int


def _check_id(bank, geom):
    if isinstance(bank, bool) or not 0 <= bank < geom.total_banks:
        raise DomainError(f"bank {bank!r} outside [0, {geom.total_banks})")


def linear_index(coord: BankCoord, geom: StackGeometry) -> int:
    if not (0 <= coord.layer < geom.layers and 0 <= coord.row < geom.depth
            and 0 <= coord.col < geom.width):
        raise DomainError(f"{coord} outside {geom.width}x{geom.depth}x{geom.layers} stack")
    return coord.layer * geom.banks_per_layer + coord.row * geom.width + coord.col


def coord_of(bank: int, geom: StackGeometry) -> BankCoord:
    _check_id(bank, geom)
    layer, rem = divmod(int(bank), geom.banks_per_layer)
    row, col = divmod(rem, geom.width)
    return BankCoord(layer, row, col)


def neighbors(bank: int, geom: StackGeometry) -> list[tuple[int, Link]]:
    """Nearest neighbours of ``bank``: in-plane 4-neighbourhood, then the
    banks directly below and above. No diagonals, no wraparound."""
    c = coord_of(bank, geom)
    out = []
    for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
        r, k = c.row + dr, c.col + dc
        if 0 <= r < geom.depth and 0 <= k < geom.width:
            out.append((linear_index(BankCoord(c.layer, r, k), geom), Link.LATERAL))
    for dl in (-1, 1):
        layer = c.layer + dl
        if 0 <= layer < geom.layers:
            out.append((linear_index(BankCoord(layer, c.row, c.col), geom), Link.VERTICAL))
    return out


def edges(geom: StackGeometry):
    """Every undirected edge once, as ``(i, j, kind)`` with ``i < j``."""
    for i in range(geom.total_banks):
        for j, kind in neighbors(i, geom):
            if i < j:
                yield i, j, kind


def layer_of(bank: int, geom: StackGeometry) -> int:
    _check_id(bank, geom)
    return int(bank) // geom.banks_per_layer
