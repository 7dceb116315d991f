"""Coverage and node-count formulas for deployment planning.

Four nodes at the corners of a square can all hear a robot anywhere inside
it when the square's diagonal equals the sensing range r, giving area r^2/2.
Stretching one side by a factor k keeps the diagonal fixed and shrinks the
area to r^2 k / (1 + k^2). Tiling n such units in a strip shares two nodes
between neighbours, so 2n + 2 nodes suffice.
"""

from __future__ import annotations

from dataclasses import dataclass


def _positive(name: str, value: float) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")


def square_coverage_area(r: float) -> float:
    """Largest square (m^2) whose corner nodes all reach any interior point."""
    _positive("r", r)
    return r * r / 2.0


def rect_coverage_area(r: float, k: float) -> float:
    """Area of the rectangle with diagonal r and side ratio k."""
    _positive("r", r)
    _positive("k", k)
    return r * r * k / (1.0 + k * k)


def nodes_required(n_units: int) -> int:
    """Minimum node count for ``n_units`` adjacent unit areas."""
    if int(n_units) != n_units or n_units < 1:
        raise ValueError(f"n_units must be an integer >= 1, got {n_units}")
    return 2 * int(n_units) + 2


@dataclass(frozen=True)
class CoverageQuery:
    sensing_range: float
    aspect_k: float = 1.0
    area_units: int = 1

    def __post_init__(self) -> None:
        _positive("sensing_range", self.sensing_range)
        _positive("aspect_k", self.aspect_k)
        if self.area_units < 1:
            raise ValueError("area_units must be >= 1")

    def unit_area(self) -> float:
        return rect_coverage_area(self.sensing_range, self.aspect_k)

    def total_area(self) -> float:
        return self.area_units * self.unit_area()

    def nodes(self) -> int:
        return nodes_required(self.area_units)

    def summary(self) -> str:
        return (f"square coverage: {square_coverage_area(self.sensing_range):.1f} m², "
                f"min nodes for {self.area_units} unit{'s' if self.area_units > 1 else ''}: {self.nodes()}")
