"""Trust providers and their scoring algorithms.

Every provider builds its own evidence database by replaying the ledger's
event list, so all providers see the same evidence; they differ only in the
algorithm they apply to it.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .contracts import (
    Incident,
    IncidentScope,
    ProviderScope,
    RequestState,
    Review,
    TrustRequest,
    TrustScoreRecord,
)
from .errors import (
    AlreadyFulfilled,
    AlreadyRefunded,
    BadWeights,
    EmptyEvidence,
    EventGap,
    NoEvidence,
    RequestClosed,
    UnknownAlgorithm,
    UnknownScope,
)
from .evidence import VerificationParams, verify_interaction
from .ledger import EventKind, Ledger, LedgerEvent

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.5
DEFAULT_WEIGHTS = (0.7, 0.3)  # (filtered, unfiltered)

EVIDENCE_CSV_HEADER = [
    "incident_id", "review_id", "reviewer", "verdict", "x", "y", "heading", "observed_at",
]

Group = tuple[Incident, Sequence[Review]]


@dataclass
class EvidenceDB:
    """A provider's private copy of the evidence, rebuilt from events."""

    incidents: dict[int, Incident] = field(default_factory=dict)
    reviews: dict[int, list[Review]] = field(default_factory=dict)
    open_requests: dict[int, TrustRequest] = field(default_factory=dict)
    cursor: int = 0

    def ingest(self, events: Sequence[LedgerEvent]) -> "EvidenceDB":
        for offset, event in enumerate(events):
            expected = self.cursor + 1 + offset
            if event.event_seq != expected:
                raise EventGap(f"expected event {expected}, got {event.event_seq}")
        for event in events:
            self._apply(event)
            self.cursor = event.event_seq
        return self

    def _apply(self, event: LedgerEvent) -> None:
        kind = event.kind
        if kind is EventKind.INCIDENT_REPORTED:
            self.incidents[event.subject_id] = event.payload
            self.reviews.setdefault(event.subject_id, [])
        elif kind is EventKind.EVIDENCE_SUBMITTED:
            review: Review = event.payload
            bucket = self.reviews.setdefault(review.incident_id, [])
            # one review per (reviewer, incident); the newest replaces older ones
            bucket[:] = [r for r in bucket if r.reviewer != review.reviewer]
            bucket.append(review)
        elif kind is EventKind.TRUST_SCORE_REQUESTED:
            self.open_requests[event.subject_id] = event.payload
        elif kind in (EventKind.TRUST_SCORE_DELIVERED, EventKind.REQUEST_REFUNDED):
            self.open_requests.pop(event.subject_id, None)

    def reviews_for(self, incident_id: int) -> list[Review]:
        return list(self.reviews.get(incident_id, ()))

    def incidents_by(self, provider: str) -> list[Incident]:
        return [i for i in self.incidents.values() if i.provider == provider]

    @property
    def review_count(self) -> int:
        return sum(len(v) for v in self.reviews.values())

    def export_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(EVIDENCE_CSV_HEADER)
        for incident_id in sorted(self.reviews):
            for r in self.reviews[incident_id]:
                writer.writerow(
                    [
                        incident_id,
                        r.review_id,
                        r.reviewer,
                        r.verdict.value,
                        repr(float(r.location.x)),
                        repr(float(r.location.y)),
                        repr(float(r.heading)),
                        r.observed_at,
                    ]
                )
        return out.getvalue()


def ingest_events(db: EvidenceDB, events: Sequence[LedgerEvent]) -> EvidenceDB:
    return db.ingest(events)


@dataclass(frozen=True)
class ScoreResult:
    score: float
    trusted: bool
    total: int
    verified: int
    algorithm_id: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")
        if not 0 <= self.verified <= self.total:
            raise ValueError(f"verified {self.verified} exceeds total {self.total}")


@dataclass(frozen=True)
class _Tally:
    positive: int
    total: int
    verified_positive: int
    verified: int

    @property
    def unfiltered(self) -> float:
        return self.positive / self.total

    @property
    def filtered(self) -> float:
        # no verified feedback: fall back to the unfiltered fraction
        if self.verified == 0:
            return self.unfiltered
        return self.verified_positive / self.verified


def _tally(groups: Iterable[Group], params: Optional[VerificationParams]) -> _Tally:
    positive = total = verified_positive = verified = 0
    for incident, reviews in groups:
        for review in reviews:
            total += 1
            positive += review.positive
            if params is not None and verify_interaction(incident, review, params):
                verified += 1
                verified_positive += review.positive
    if total == 0:
        raise EmptyEvidence("no reviews to score")
    return _Tally(positive, total, verified_positive, verified)


def check_weights(w_filtered: float, w_unfiltered: float) -> None:
    if not (w_filtered >= 0 and w_unfiltered >= 0):
        raise BadWeights(f"weights must be non-negative: ({w_filtered}, {w_unfiltered})")
    if not math.isclose(w_filtered + w_unfiltered, 1.0, rel_tol=0, abs_tol=1e-9):
        raise BadWeights(f"weights must sum to 1: ({w_filtered}, {w_unfiltered})")


def _simple(tally: _Tally, threshold: float) -> ScoreResult:
    score = tally.unfiltered
    return ScoreResult(score, score >= threshold, tally.total, tally.total, SimpleScoring.algorithm_id)


def _filtered_average(tally: _Tally, threshold: float) -> ScoreResult:
    u, f = tally.unfiltered, tally.filtered
    score = (u + f) / 2
    return ScoreResult(
        score, score >= threshold, tally.total, tally.verified, FilteredAverageScoring.algorithm_id
    )


def _weighted(tally: _Tally, w_filtered: float, w_unfiltered: float, threshold: float) -> ScoreResult:
    u, f = tally.unfiltered, tally.filtered
    if f == u:
        # w_f*u + w_u*u is u exactly in real arithmetic; skip the rounding
        score = u
    else:
        score = w_filtered * f + w_unfiltered * u
        score = min(1.0, max(0.0, score))
    return ScoreResult(
        score, score >= threshold, tally.total, tally.verified, WeightedScoring.algorithm_id
    )


def score_simple(reviews: Sequence[Review], threshold: float = DEFAULT_THRESHOLD) -> ScoreResult:
    """Fraction of positive reviews, every review counted equally."""
    return _simple(_tally([(None, reviews)], None), threshold)


def score_filtered_average(
    incident: Incident,
    reviews: Sequence[Review],
    params: VerificationParams,
    threshold: float = DEFAULT_THRESHOLD,
) -> ScoreResult:
    """Mean of the unfiltered positive fraction and the verified-feedback positive fraction."""
    return _filtered_average(_tally([(incident, reviews)], params), threshold)


def score_weighted(
    incident: Incident,
    reviews: Sequence[Review],
    params: VerificationParams,
    w_filtered: float = DEFAULT_WEIGHTS[0],
    w_unfiltered: float = DEFAULT_WEIGHTS[1],
    threshold: float = DEFAULT_THRESHOLD,
) -> ScoreResult:
    check_weights(w_filtered, w_unfiltered)
    return _weighted(_tally([(incident, reviews)], params), w_filtered, w_unfiltered, threshold)


class ScoringAlgorithm(ABC):
    """A trust metric over groups of (incident, reviews).

    Pooled scopes pass several groups; each review is verified against the
    geometry of its own incident.
    """

    algorithm_id: str = ""

    @abstractmethod
    def score_groups(self, groups: Sequence[Group], threshold: float) -> ScoreResult:
        ...

    def score(
        self, incident: Incident, reviews: Sequence[Review], threshold: float = DEFAULT_THRESHOLD
    ) -> ScoreResult:
        return self.score_groups([(incident, reviews)], threshold)


class SimpleScoring(ScoringAlgorithm):
    algorithm_id = "simple"

    def score_groups(self, groups, threshold):
        return _simple(_tally(groups, None), threshold)


class FilteredAverageScoring(ScoringAlgorithm):
    algorithm_id = "filtered-average"

    def __init__(self, params: VerificationParams = VerificationParams()) -> None:
        self.params = params

    def score_groups(self, groups, threshold):
        return _filtered_average(_tally(groups, self.params), threshold)


class WeightedScoring(ScoringAlgorithm):
    algorithm_id = "weighted"

    def __init__(
        self,
        params: VerificationParams = VerificationParams(),
        w_filtered: float = DEFAULT_WEIGHTS[0],
        w_unfiltered: float = DEFAULT_WEIGHTS[1],
    ) -> None:
        check_weights(w_filtered, w_unfiltered)
        self.params = params
        self.w_filtered = w_filtered
        self.w_unfiltered = w_unfiltered

    def score_groups(self, groups, threshold):
        return _weighted(_tally(groups, self.params), self.w_filtered, self.w_unfiltered, threshold)


ALGORITHM_IDS = (
    SimpleScoring.algorithm_id,
    FilteredAverageScoring.algorithm_id,
    WeightedScoring.algorithm_id,
)


def make_algorithm(
    algorithm_id: str,
    params: VerificationParams = VerificationParams(),
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
) -> ScoringAlgorithm:
    if algorithm_id == SimpleScoring.algorithm_id:
        return SimpleScoring()
    if algorithm_id == FilteredAverageScoring.algorithm_id:
        return FilteredAverageScoring(params)
    if algorithm_id == WeightedScoring.algorithm_id:
        return WeightedScoring(params, *weights)
    raise UnknownAlgorithm(f"unknown algorithm {algorithm_id!r}; choose from {ALGORITHM_IDS}")


def scope_groups(db: EvidenceDB, scope) -> list[Group]:
    if isinstance(scope, IncidentScope):
        incident = db.incidents.get(scope.incident_id)
        if incident is None:
            raise UnknownScope(scope)
        return [(incident, db.reviews_for(incident.incident_id))]
    if isinstance(scope, ProviderScope):
        incidents = db.incidents_by(scope.provider)
        if not incidents:
            raise UnknownScope(scope)
        return [(i, db.reviews_for(i.incident_id)) for i in incidents]
    raise UnknownScope(scope)


def serve_request(
    request: TrustRequest,
    db: EvidenceDB,
    algorithm: ScoringAlgorithm,
    sim_time: int,
    threshold: float = DEFAULT_THRESHOLD,
) -> TrustScoreRecord:
    """Score a request's scope from ``db``; the request's own threshold wins if it set one."""
    if request.state is RequestState.FULFILLED:
        raise AlreadyFulfilled(request.request_id)
    if request.state is RequestState.REFUNDED:
        raise AlreadyRefunded(request.request_id)
    groups = scope_groups(db, request.scope)
    if not any(reviews for _, reviews in groups):
        raise NoEvidence(f"no reviews for {request.scope}")
    if request.threshold is not None:
        threshold = request.threshold
    result = algorithm.score_groups(groups, threshold)
    return TrustScoreRecord(
        request.request_id,
        result.algorithm_id,
        result.score,
        result.trusted,
        result.total,
        result.verified,
        sim_time,
    )


class TrustProvider:
    """An independent event listener that answers trust requests with one algorithm."""

    def __init__(
        self, account: str, algorithm: ScoringAlgorithm, threshold: float = DEFAULT_THRESHOLD
    ) -> None:
        self.account = account
        self.algorithm = algorithm
        self.threshold = threshold
        self.db = EvidenceDB()

    def sync(self, ledger: Ledger) -> int:
        """Consume every new sealed event; returns how many were read."""
        events = ledger.events_since(self.db.cursor)
        self.db.ingest(events)
        return len(events)

    def pending_requests(self) -> list[TrustRequest]:
        return [
            r
            for r in self.db.open_requests.values()
            if r.designated is None or r.designated == self.account
        ]

    def score(self, request: TrustRequest, sim_time: int) -> TrustScoreRecord:
        return serve_request(request, self.db, self.algorithm, sim_time, self.threshold)

    def serve_pending(self, network, sim_time: int) -> list[TrustScoreRecord]:
        """Score and deliver every open request this provider may answer.

        Requests another provider already fulfilled are skipped, as are
        requests whose scope has no evidence yet.
        """
        delivered = []
        for request in self.pending_requests():
            try:
                record = self.score(request, sim_time)
            except (NoEvidence, UnknownScope) as exc:
                log.info("%s skipping request %s: %s", self.account, request.request_id, exc)
                continue
            try:
                network.deliver_trust_score(self.account, request.request_id, record, sim_time)
            except RequestClosed:
                continue
            delivered.append(record)
        return delivered
