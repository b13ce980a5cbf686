"""Minkowski causal structure with c = 1 (seconds and light-seconds).

The past light cone is taken as closed: a point on the cone surface of Q
(lightlike separated and earlier) counts as being in Q's past.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


@dataclass(frozen=True, order=False)
class SpacetimePoint:
    x: tuple[float, float, float]
    t: float

    def __post_init__(self):
        x = tuple(float(c) for c in self.x)
        if len(x) == 1:
            x = (x[0], 0.0, 0.0)
        if len(x) != 3:
            raise ValueError(f"spatial position needs 3 coordinates, got {len(x)}")
        t = float(self.t)
        if not all(math.isfinite(c) for c in (*x, t)):
            raise ValueError("spacetime coordinates must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)

    @classmethod
    def on_line(cls, x: float, t: float) -> "SpacetimePoint":
        return cls((x, 0.0, 0.0), t)


class CausalRelation(enum.Enum):
    PAST = "past"
    FUTURE = "future"
    SPACELIKE = "spacelike"
    COINCIDENT = "coincident"


def interval_sq(p: SpacetimePoint, q: SpacetimePoint) -> float:
    """(dt)^2 - |dx|^2; positive for timelike, negative for spacelike pairs."""
    dt = q.t - p.t
    dx2 = sum((b - a) ** 2 for a, b in zip(p.x, q.x))
    return dt * dt - dx2


def relate(p: SpacetimePoint, q: SpacetimePoint) -> CausalRelation:
    """Relation of ``p`` to ``q``: PAST means p lies in q's (closed) past cone."""
    if p == q:
        return CausalRelation.COINCIDENT
    # distinct simultaneous points are spacelike even when |dx|^2 underflows to 0
    if p.t == q.t or interval_sq(p, q) < 0:
        return CausalRelation.SPACELIKE
    return CausalRelation.PAST if p.t < q.t else CausalRelation.FUTURE


def precedes(p: SpacetimePoint, q: SpacetimePoint) -> bool:
    return relate(p, q) is CausalRelation.PAST


def past_cone_filter(point: SpacetimePoint, events) -> list:
    """Events in the past cone of ``point``, sorted by time then site."""
    inside = [e for e in events if precedes(e.point, point)]
    return sorted(inside, key=lambda e: (e.point.t, e.site))
