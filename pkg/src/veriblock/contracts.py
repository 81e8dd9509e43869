"""The information, feedback and trust-provider contracts.

Each contract validates a call, applies it to its own state, and records the
call as a ledger transaction carrying the event that listeners will see once
the block is sealed. Rejected calls leave neither a transaction nor an event.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Optional, Union

from .errors import (
    AlreadyFulfilled,
    AlreadyRefunded,
    InsufficientBalance,
    InvalidGeometry,
    InvalidRecord,
    NotYetExpired,
    SelfReview,
    UnknownIncident,
    UnknownRequest,
    UnknownScopeTarget,
    WrongProvider,
)
from .evidence import Position, distance, normalize_heading
from .ledger import EventKind, Ledger, PendingEvent

DEFAULT_DEDUP_RADIUS = 200.0
DEFAULT_DEDUP_WINDOW = 900.0
DEFAULT_REFUND_TIMEOUT = 3600


class Verdict(str, enum.Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"


class RequestState(str, enum.Enum):
    OPEN = "Open"
    FULFILLED = "Fulfilled"
    REFUNDED = "Refunded"


@dataclass(frozen=True)
class Incident:
    incident_id: int
    provider: str
    location: Position
    heading: float
    reported_at: int
    classification: str


@dataclass(frozen=True)
class Review:
    review_id: int
    reviewer: str
    incident_id: int
    verdict: Verdict
    location: Position
    heading: float
    observed_at: int

    @property
    def positive(self) -> bool:
        return self.verdict is Verdict.POSITIVE


@dataclass(frozen=True)
class IncidentScope:
    incident_id: int


@dataclass(frozen=True)
class ProviderScope:
    provider: str


Scope = Union[IncidentScope, ProviderScope]


@dataclass(frozen=True)
class TrustRequest:
    request_id: int
    consumer: str
    scope: Scope
    payment: int
    created_at: int
    state: RequestState = RequestState.OPEN
    threshold: Optional[float] = None
    designated: Optional[str] = None


@dataclass(frozen=True)
class TrustScoreRecord:
    request_id: int
    algorithm_id: str
    score: float
    trusted: bool
    total_reviews: int
    verified_feedback: int
    delivered_at: int

    def __post_init__(self) -> None:
        if not (isinstance(self.score, (int, float)) and 0.0 <= self.score <= 1.0):
            raise InvalidRecord(f"score {self.score!r} outside [0, 1]")
        if not 0 <= self.verified_feedback <= self.total_reviews:
            raise InvalidRecord(
                f"verified_feedback {self.verified_feedback} not in [0, {self.total_reviews}]"
            )

    @property
    def evidback_counts(self) -> tuple[int, int]:
        return (self.total_reviews, self.verified_feedback)


@dataclass(frozen=True)
class DedupRedirect:
    """A report that fell inside an existing incident's buffer and became a review."""

    incident_id: int
    review_id: int


@dataclass(frozen=True)
class Receipt:
    tx_id: int
    request_id: int
    state: RequestState
    amount: int
    beneficiary: str


@dataclass(frozen=True)
class DedupParams:
    radius: float = DEFAULT_DEDUP_RADIUS
    time_window: float = DEFAULT_DEDUP_WINDOW

    def __post_init__(self) -> None:
        if not (self.radius >= 0 and self.time_window >= 0):
            raise ValueError("dedup radius and window must be non-negative")


# call payloads


class CallType(enum.IntEnum):
    SUBMIT_INCIDENT = 1
    SUBMIT_REVIEW = 2
    REQUEST_TRUST_SCORE = 3
    DELIVER_TRUST_SCORE = 4
    REFUND_REQUEST = 5


def _plain(value: Any) -> Any:
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, Position):
        return [value.x, value.y]
    if isinstance(value, (IncidentScope, ProviderScope)):
        return {"kind": type(value).__name__, **asdict(value)}
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def asdict_shallow(obj: Any) -> dict[str, Any]:
    return {name: getattr(obj, name) for name in obj.__dataclass_fields__}


def call_json(call: CallType, fields: dict[str, Any]) -> str:
    """JSON mirror of a contract call, with sorted keys and no whitespace."""
    return json.dumps(
        {"call": call.name, "fields": _plain(fields)},
        sort_keys=True,
        separators=(",", ":"),
        allow_nan=False,
    )


def encode_call(call: CallType, fields: dict[str, Any]) -> bytes:
    """Canonical binary payload: one tag byte followed by the UTF-8 JSON mirror."""
    return bytes([call.value]) + call_json(call, fields).encode("utf-8")


def decode_call(payload: bytes) -> tuple[CallType, dict[str, Any]]:
    call = CallType(payload[0])
    body = json.loads(payload[1:].decode("utf-8"))
    if body["call"] != call.name:
        raise ValueError(f"tag {call.name} disagrees with body {body['call']}")
    return call, body["fields"]


def _check_geometry(location: Position, heading: float) -> float:
    if not isinstance(location, Position):
        raise InvalidGeometry(f"expected Position, got {type(location).__name__}")
    if not (math.isfinite(location.x) and math.isfinite(location.y)):
        raise InvalidGeometry("non-finite coordinates")
    return normalize_heading(heading)


class FeedbackContract:
    """Stores the universal evidence set: every accepted review, verified or not."""

    def __init__(self, ledger: Ledger, information: "InformationContract") -> None:
        self.ledger = ledger
        self.information = information
        self._reviews: dict[int, dict[str, Review]] = {}
        self._by_id: dict[int, Review] = {}
        self._next_id = 1

    def submit_review(
        self,
        reviewer: str,
        incident_id: int,
        verdict: Verdict,
        location: Position,
        heading: float,
        sim_time: int,
        observed_at: Optional[int] = None,
    ) -> int:
        """Store a review; ``observed_at`` defaults to the submission time."""
        heading = _check_geometry(location, heading)
        incident = self.information.incidents.get(incident_id)
        if incident is None:
            raise UnknownIncident(incident_id)
        if reviewer == incident.provider:
            raise SelfReview(f"{reviewer} provided incident {incident_id}")
        if observed_at is None:
            observed_at = sim_time
        elif observed_at > sim_time:
            raise ValueError(f"observed_at {observed_at} is after submission time {sim_time}")
        review = Review(
            self._next_id, reviewer, incident_id, Verdict(verdict), location, heading, observed_at
        )
        payload = encode_call(CallType.SUBMIT_REVIEW, asdict_shallow(review))
        self.ledger.append_transaction(
            reviewer,
            payload,
            sim_time,
            PendingEvent(EventKind.EVIDENCE_SUBMITTED, review.review_id, review),
        )
        self._next_id += 1
        per_incident = self._reviews.setdefault(incident_id, {})
        previous = per_incident.pop(reviewer, None)
        if previous is not None:
            del self._by_id[previous.review_id]
        per_incident[reviewer] = review
        self._by_id[review.review_id] = review
        return review.review_id

    def reviews_for(self, incident_id: int) -> list[Review]:
        return list(self._reviews.get(incident_id, {}).values())

    def get(self, review_id: int) -> Review:
        return self._by_id[review_id]

    @property
    def count(self) -> int:
        return len(self._by_id)


class InformationContract:
    """Incident reports with spatio-temporal duplicate detection."""

    def __init__(self, ledger: Ledger, dedup: DedupParams = DedupParams()) -> None:
        self.ledger = ledger
        self.dedup = dedup
        self.feedback: Optional[FeedbackContract] = None
        self.incidents: dict[int, Incident] = {}
        self._next_id = 1

    def find_duplicate(
        self, location: Position, sim_time: int, classification: str
    ) -> Optional[Incident]:
        for incident in self.incidents.values():
            if (
                incident.classification == classification
                and distance(incident.location, location) <= self.dedup.radius
                and abs(incident.reported_at - sim_time) <= self.dedup.time_window
            ):
                return incident
        return None

    def submit_incident(
        self,
        provider: str,
        location: Position,
        heading: float,
        sim_time: int,
        classification: str,
    ) -> Union[int, DedupRedirect]:
        heading = _check_geometry(location, heading)
        existing = self.find_duplicate(location, sim_time, classification)
        if existing is not None:
            assert self.feedback is not None
            review_id = self.feedback.submit_review(
                provider, existing.incident_id, Verdict.POSITIVE, location, heading, sim_time
            )
            return DedupRedirect(existing.incident_id, review_id)
        incident = Incident(self._next_id, provider, location, heading, sim_time, classification)
        payload = encode_call(CallType.SUBMIT_INCIDENT, asdict_shallow(incident))
        self.ledger.append_transaction(
            provider,
            payload,
            sim_time,
            PendingEvent(EventKind.INCIDENT_REPORTED, incident.incident_id, incident),
        )
        self._next_id += 1
        self.incidents[incident.incident_id] = incident
        return incident.incident_id

    def incidents_by(self, provider: str) -> list[Incident]:
        return [i for i in self.incidents.values() if i.provider == provider]


class TrustProviderContract:
    """Trust-score requests, deliveries, and the escrow that sits between them."""

    def __init__(
        self,
        ledger: Ledger,
        information: InformationContract,
        refund_timeout: int = DEFAULT_REFUND_TIMEOUT,
    ) -> None:
        self.ledger = ledger
        self.information = information
        self.refund_timeout = refund_timeout
        self.balances: dict[str, int] = {}
        self.escrow: dict[int, int] = {}
        self.requests: dict[int, TrustRequest] = {}
        self.records: dict[int, TrustScoreRecord] = {}
        self.fulfilled_by: dict[int, str] = {}
        self.minted = 0
        self._next_id = 1

    def fund(self, account: str, credits: int) -> None:
        """Harness-side initial allocation; the only way credits enter the system."""
        if credits < 0:
            raise ValueError("credits must be non-negative")
        self.balances[account] = self.balances.get(account, 0) + credits
        self.minted += credits

    def balance(self, account: str) -> int:
        return self.balances.get(account, 0)

    @property
    def escrow_total(self) -> int:
        return sum(self.escrow.values())

    def total_credits(self) -> int:
        return sum(self.balances.values()) + self.escrow_total

    def _scope_exists(self, scope: Scope) -> bool:
        if isinstance(scope, IncidentScope):
            return scope.incident_id in self.information.incidents
        if isinstance(scope, ProviderScope):
            return bool(self.information.incidents_by(scope.provider))
        return False

    def request_trust_score(
        self,
        consumer: str,
        scope: Scope,
        payment: int,
        sim_time: int,
        threshold: Optional[float] = None,
        designated: Optional[str] = None,
    ) -> int:
        """Open a request and move ``payment`` into escrow.

        ``designated`` restricts delivery to one trust provider; without it the
        first valid delivery wins.
        """
        if payment < 0:
            raise ValueError("payment must be non-negative")
        if threshold is not None and not 0.0 <= threshold <= 1.0:
            raise ValueError(f"threshold {threshold} outside [0, 1]")
        if not self._scope_exists(scope):
            raise UnknownScopeTarget(scope)
        if self.balance(consumer) < payment:
            raise InsufficientBalance(
                f"{consumer} holds {self.balance(consumer)}, needs {payment}"
            )
        request = TrustRequest(
            self._next_id, consumer, scope, payment, sim_time, RequestState.OPEN, threshold, designated
        )
        payload = encode_call(CallType.REQUEST_TRUST_SCORE, asdict_shallow(request))
        self.ledger.append_transaction(
            consumer,
            payload,
            sim_time,
            PendingEvent(EventKind.TRUST_SCORE_REQUESTED, request.request_id, request),
        )
        self._next_id += 1
        self.balances[consumer] = self.balance(consumer) - payment
        self.escrow[request.request_id] = payment
        self.requests[request.request_id] = request
        return request.request_id

    def _open_request(self, request_id: int) -> TrustRequest:
        request = self.requests.get(request_id)
        if request is None:
            raise UnknownRequest(request_id)
        if request.state is RequestState.FULFILLED:
            raise AlreadyFulfilled(request_id)
        if request.state is RequestState.REFUNDED:
            raise AlreadyRefunded(request_id)
        return request

    def deliver_trust_score(
        self,
        trust_provider: str,
        request_id: int,
        record: TrustScoreRecord,
        sim_time: Optional[int] = None,
    ) -> Receipt:
        if not isinstance(record, TrustScoreRecord):
            raise InvalidRecord(f"expected TrustScoreRecord, got {type(record).__name__}")
        request = self._open_request(request_id)
        if request.designated is not None and request.designated != trust_provider:
            raise WrongProvider(f"request {request_id} is designated to {request.designated}")
        if record.request_id != request_id:
            raise InvalidRecord(f"record is for request {record.request_id}, not {request_id}")
        # re-run invariants in case the record was built around __post_init__
        TrustScoreRecord(**asdict_shallow(record))
        sim_time = record.delivered_at if sim_time is None else sim_time
        payload = encode_call(
            CallType.DELIVER_TRUST_SCORE,
            {"trust_provider": trust_provider, **asdict_shallow(record)},
        )
        tx_id = self.ledger.append_transaction(
            trust_provider,
            payload,
            sim_time,
            PendingEvent(EventKind.TRUST_SCORE_DELIVERED, request_id, record),
        )
        amount = self.escrow.pop(request_id)
        self.balances[trust_provider] = self.balance(trust_provider) + amount
        self.requests[request_id] = replace(request, state=RequestState.FULFILLED)
        self.records[request_id] = record
        self.fulfilled_by[request_id] = trust_provider
        return Receipt(tx_id, request_id, RequestState.FULFILLED, amount, trust_provider)

    def refund_request(self, request_id: int, sim_time: int) -> Receipt:
        request = self._open_request(request_id)
        age = sim_time - request.created_at
        if age < self.refund_timeout:
            raise NotYetExpired(f"request {request_id} aged {age}s < {self.refund_timeout}s")
        payload = encode_call(
            CallType.REFUND_REQUEST, {"request_id": request_id, "sim_time": sim_time}
        )
        tx_id = self.ledger.append_transaction(
            request.consumer,
            payload,
            sim_time,
            PendingEvent(EventKind.REQUEST_REFUNDED, request_id, request_id),
        )
        amount = self.escrow.pop(request_id)
        self.balances[request.consumer] = self.balance(request.consumer) + amount
        self.requests[request_id] = replace(request, state=RequestState.REFUNDED)
        return Receipt(tx_id, request_id, RequestState.REFUNDED, amount, request.consumer)

    def balances_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["account_id", "balance"])
        for account in sorted(self.balances):
            writer.writerow([account, self.balances[account]])
        return out.getvalue()


@dataclass
class Network:
    """The three contracts deployed on one ledger."""

    ledger: Ledger = field(default_factory=Ledger)
    dedup: DedupParams = field(default_factory=DedupParams)
    refund_timeout: int = DEFAULT_REFUND_TIMEOUT

    def __post_init__(self) -> None:
        self.information = InformationContract(self.ledger, self.dedup)
        self.feedback = FeedbackContract(self.ledger, self.information)
        self.information.feedback = self.feedback
        self.trust = TrustProviderContract(self.ledger, self.information, self.refund_timeout)

    # thin delegation so callers can treat the network as one endpoint

    def submit_incident(self, provider, location, heading, sim_time, classification):
        return self.information.submit_incident(provider, location, heading, sim_time, classification)

    def submit_review(
        self, reviewer, incident_id, verdict, location, heading, sim_time, observed_at=None
    ):
        return self.feedback.submit_review(
            reviewer, incident_id, verdict, location, heading, sim_time, observed_at
        )

    def request_trust_score(
        self, consumer, scope, payment, sim_time, threshold=None, designated=None
    ):
        return self.trust.request_trust_score(
            consumer, scope, payment, sim_time, threshold, designated
        )

    def deliver_trust_score(self, trust_provider, request_id, record, sim_time=None):
        return self.trust.deliver_trust_score(trust_provider, request_id, record, sim_time)

    def refund_request(self, request_id, sim_time):
        return self.trust.refund_request(request_id, sim_time)

    def fund(self, account: str, credits: int) -> None:
        self.trust.fund(account, credits)

    @property
    def incidents(self) -> dict[int, Incident]:
        return self.information.incidents

    def reviews_for(self, incident_id: int) -> list[Review]:
        return self.feedback.reviews_for(incident_id)
