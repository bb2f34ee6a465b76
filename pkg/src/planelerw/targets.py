"""Target specifications for LERW runs: interior point, side arc, prime end."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["InteriorPoint", "SideArc", "PrimeEnd", "TargetSpec"]


@dataclass(frozen=True)
class InteriorPoint:
    """Target at an interior point z_e != 0 (infinity for the sphere: None)."""

    z: complex | None

    @property
    def kind(self) -> str:
        return "point"

    @property
    def is_infinity(self) -> bool:
        return self.z is None


@dataclass(frozen=True)
class SideArc:
    """Target arc on the outer boundary, from ``a`` to ``b`` along the
    positive orientation of the boundary polygon."""

    a: complex
    b: complex

    @property
    def kind(self) -> str:
        return "arc"


@dataclass(frozen=True)
class PrimeEnd:
    """Target prime end at a boundary point on a locally flat (straight)
    boundary piece; ``normal`` is the inward unit normal there."""

    w: complex
    normal: complex

    @property
    def kind(self) -> str:
        return "prime_end"


TargetSpec = InteriorPoint | SideArc | PrimeEnd
