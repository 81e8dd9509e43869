"""Evidence mapping: deciding whether a review's interaction is proven.

A review becomes feedback when the reviewer was close to the incident in
space and time and travelling in the same direction. Everything here is a
pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable

from .errors import InvalidGeometry

if TYPE_CHECKING:
    from .contracts import Incident, Review

DEFAULT_RADIUS = 200.0
DEFAULT_TIME_WINDOW = 900.0
DEFAULT_HEADING_TOLERANCE = 45.0

EARTH_RADIUS_M = 6_371_008.8


@dataclass(frozen=True)
class Position:
    """Planar position in meters."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidGeometry(f"non-finite position ({self.x}, {self.y})")


@dataclass(frozen=True)
class VerificationParams:
    radius: float = DEFAULT_RADIUS
    time_window: float = DEFAULT_TIME_WINDOW
    heading_tolerance: float = DEFAULT_HEADING_TOLERANCE

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        if not self.time_window > 0:
            raise ValueError(f"time_window must be > 0, got {self.time_window}")
        if not 0 < self.heading_tolerance <= 180:
            raise ValueError(f"heading_tolerance must be in (0, 180], got {self.heading_tolerance}")

    @classmethod
    def permissive(cls) -> "VerificationParams":
        """Parameters under which every review verifies."""
        return cls(math.inf, math.inf, 180.0)


Metric = Callable[[Position, Position], float]


def distance(a: Position, b: Position) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def haversine_distance(a: Position, b: Position) -> float:
    """Great-circle distance in meters, reading x as longitude and y as latitude (degrees).

    Drop-in replacement for ``distance`` when positions are geographic.
    """
    lon1, lat1, lon2, lat2 = map(math.radians, (a.x, a.y, b.x, b.y))
    h = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def normalize_heading(heading: float) -> float:
    if not math.isfinite(heading):
        raise InvalidGeometry(f"non-finite heading {heading}")
    h = math.fmod(heading, 360.0)
    if h < 0:
        h += 360.0
    # -1e-20 % 360 rounds up to 360.0
    return 0.0 if h >= 360.0 else h


def angular_difference(h1: float, h2: float) -> float:
    d = abs(h1 - h2) % 360.0
    return min(d, 360.0 - d)


def heading_aligned(h1: float, h2: float, tol: float) -> bool:
    if not 0 < tol <= 180:
        raise ValueError(f"tolerance must be in (0, 180], got {tol}")
    return angular_difference(h1, h2) <= tol


def verify_interaction(
    incident: "Incident",
    review: "Review",
    params: VerificationParams,
    metric: Metric = distance,
) -> bool:
    # inclusive bounds everywhere
    if metric(incident.location, review.location) > params.radius:
        return False
    if abs(incident.reported_at - review.observed_at) > params.time_window:
        return False
    return heading_aligned(incident.heading, review.heading, params.heading_tolerance)


def filter_feedback(
    incident: "Incident",
    reviews: Iterable["Review"],
    params: VerificationParams,
    metric: Metric = distance,
) -> list["Review"]:
    return [r for r in reviews if verify_interaction(incident, r, params, metric)]
