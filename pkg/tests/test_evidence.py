import math
import random

import pytest
from hypothesis import given, strategies as st

from veriblock.errors import InvalidGeometry
from veriblock.evidence import (
    Position,
    VerificationParams,
    distance,
    filter_feedback,
    haversine_distance,
    heading_aligned,
    normalize_heading,
    verify_interaction,
)

from conftest import make_incident, make_review

coords = st.floats(-1e6, 1e6, allow_nan=False)
headings = st.floats(0, 360, allow_nan=False, exclude_max=True)
PARAMS = VerificationParams(200.0, 900.0, 45.0)


def brute_force_verified(incident, review, radius, window, tol):
    """Independent geometric check, written without the library helpers."""
    dx = incident.location.x - review.location.x
    dy = incident.location.y - review.location.y
    near = math.sqrt(dx * dx + dy * dy) <= radius
    recent = abs(incident.reported_at - review.observed_at) <= window
    diff = abs(incident.heading - review.heading)
    while diff >= 360:
        diff -= 360
    if diff > 180:
        diff = 360 - diff
    return near and recent and diff <= tol


def test_distance_examples():
    assert distance(Position(0, 0), Position(3, 4)) == 5.0
    assert distance(Position(7, -2), Position(7, -2)) == 0.0


@given(coords, coords, coords, coords)
def test_distance_symmetric(ax, ay, bx, by):
    a, b = Position(ax, ay), Position(bx, by)
    assert distance(a, b) == distance(b, a)
    assert (distance(a, b) == 0) == (a == b)


def test_position_rejects_non_finite():
    with pytest.raises(InvalidGeometry):
        Position(math.nan, 0)
    with pytest.raises(InvalidGeometry):
        Position(0, math.inf)


@pytest.mark.parametrize(
    "h1, h2, tol, expected",
    [(10, 350, 45, True), (0, 180, 45, False), (90, 90, 1, True), (90, 90, 180, True),
     (0, 45, 45, True), (0, 45.0001, 45, False)],
)
def test_heading_aligned(h1, h2, tol, expected):
    assert heading_aligned(h1, h2, tol) is expected


def test_heading_tolerance_bounds():
    with pytest.raises(ValueError):
        heading_aligned(0, 0, 0)
    with pytest.raises(ValueError):
        heading_aligned(0, 0, 181)


@pytest.mark.parametrize("raw, expected", [(0, 0), (360, 0), (-90, 270), (725, 5), (-1e-20, 0.0)])
def test_normalize_heading(raw, expected):
    h = normalize_heading(raw)
    assert 0 <= h < 360
    assert h == pytest.approx(expected)


def test_params_validation():
    with pytest.raises(ValueError):
        VerificationParams(0, 900, 45)
    with pytest.raises(ValueError):
        VerificationParams(200, -1, 45)
    with pytest.raises(ValueError):
        VerificationParams(200, 900, 200)


def test_verify_nearby_review():
    incident = make_incident(t=0)
    assert verify_interaction(incident, make_review(50, 0, t=60), PARAMS)


def test_far_away_parked_reviewer_not_verified():
    incident = make_incident(0, 0, t=100)
    parked = make_review(5000, 3000, heading=0, t=120)
    assert not verify_interaction(incident, parked, PARAMS)


def test_opposite_direction_not_verified():
    incident = make_incident(heading=90, t=0)
    other_side = make_review(0, 20, heading=270, t=30)
    assert not verify_interaction(incident, other_side, PARAMS)


def test_boundaries_inclusive():
    incident = make_incident(heading=0, t=1000)
    assert verify_interaction(incident, make_review(200, 0, heading=45, t=100), PARAMS)
    assert not verify_interaction(incident, make_review(200.001, 0, heading=0, t=1000), PARAMS)
    assert not verify_interaction(incident, make_review(0, 0, heading=0, t=99), PARAMS)


def test_filter_empty():
    assert filter_feedback(make_incident(), [], PARAMS) == []


def test_filter_mixed_ten_against_brute_force():
    incident = make_incident(heading=90, t=0)
    reviews = [
        make_review(10, 0, 90, 5, review_id=1),  # pass
        make_review(500, 0, 90, 5, review_id=2),  # too far
        make_review(0, 150, 100, 800, review_id=3),  # pass
        make_review(0, 0, 270, 5, review_id=4),  # opposite
        make_review(0, 0, 90, 901, review_id=5),  # too late
        make_review(-120, -120, 60, 10, review_id=6),  # pass
        make_review(3000, 3000, 90, 1, review_id=7),  # parked far away
        make_review(0, 0, 136, 1, review_id=8),  # heading just outside
        make_review(0, 199, 45, 900, review_id=9),  # pass on every boundary
        make_review(0, 0, 90, -950, review_id=10),  # too early
    ]
    expected = [r for r in reviews if brute_force_verified(incident, r, 200, 900, 45)]
    assert [r.review_id for r in expected] == [1, 3, 6, 9]
    before = list(reviews)
    assert filter_feedback(incident, reviews, PARAMS) == expected
    assert reviews == before


def _random_review(rng, i):
    return make_review(
        rng.uniform(-400, 400), rng.uniform(-400, 400), rng.uniform(0, 360),
        rng.randint(-1500, 1500), rng.random() < 0.5, review_id=i,
    )


def test_degenerate_filter_keeps_everything():
    rng = random.Random(1)
    reviews = [_random_review(rng, i) for i in range(50)]
    assert filter_feedback(make_incident(), reviews, VerificationParams.permissive()) == reviews


@given(
    st.floats(1, 1000), st.floats(1, 1000), st.floats(1, 179),
    st.floats(0, 500), st.floats(0, 500), st.floats(0, 1),
    st.integers(0, 2**32),
)
def test_monotone_in_params(radius, window, tol, d_r, d_w, d_t, seed):
    rng = random.Random(seed)
    incident = make_incident(heading=rng.uniform(0, 360))
    reviews = [_random_review(rng, i) for i in range(20)]
    small = VerificationParams(radius, window, tol)
    big = VerificationParams(radius + d_r, window + d_w, min(180.0, tol + d_t))
    small_ids = {r.review_id for r in filter_feedback(incident, reviews, small)}
    big_ids = {r.review_id for r in filter_feedback(incident, reviews, big)}
    assert small_ids <= big_ids


def test_haversine_seam():
    # one degree of latitude is ~111.2 km
    d = haversine_distance(Position(0.0, 0.0), Position(0.0, 1.0))
    assert d == pytest.approx(111_195, rel=1e-3)
    incident = make_incident(0.0, 0.0)
    review = make_review(0.001, 0.0)
    assert verify_interaction(incident, review, PARAMS, metric=haversine_distance)
