"""Seeded scenario generation and the incremental-evidence experiment.

Everything random is drawn from ``random.Random`` instances seeded by string
labels, so the verdict stream and the geometry stream are independent of each
other and identical on every run.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

from .contracts import IncidentScope, Network, TrustScoreRecord, Verdict
from .errors import BadStep, NoEvidence
from .evidence import Position, VerificationParams, normalize_heading
from .trust import (
    ALGORITHM_IDS,
    DEFAULT_THRESHOLD,
    DEFAULT_WEIGHTS,
    TrustProvider,
    make_algorithm,
)

DEFAULT_SEED = 2023
DEFAULT_P_PASS = 0.7
DEFAULT_TOTAL = 1000
DEFAULT_STEP = 10
MEAN_INTERARRIVAL = 1.0

PROVIDER = "car-00000"
CONSUMER = "consumer-0"


class ScenarioKind(str, enum.Enum):
    ALL_SUPPORTING = "AllSupporting"
    ALL_OPPOSING = "AllOpposing"
    RANDOM_SPLIT = "RandomSplit"

    @classmethod
    def parse(cls, text: str) -> "ScenarioKind":
        key = text.replace("-", "").replace("_", "").lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValueError(f"unknown scenario kind {text!r}")


@dataclass(frozen=True)
class Geometry:
    location: Position = Position(0.0, 0.0)
    heading: float = 90.0
    reported_at: int = 0
    classification: str = "Accident"


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind
    n_transactions: int
    seed: int = DEFAULT_SEED
    geometry: Geometry = Geometry()
    p_pass_filter: float = DEFAULT_P_PASS
    params: VerificationParams = VerificationParams()

    def __post_init__(self) -> None:
        if self.n_transactions <= 0:
            raise ValueError("n_transactions must be positive")
        if not 0.0 <= self.p_pass_filter <= 1.0:
            raise ValueError("p_pass_filter must be in [0, 1]")


@dataclass(frozen=True)
class IncidentCall:
    provider: str
    location: Position
    heading: float
    sim_time: int
    classification: str


@dataclass(frozen=True)
class ReviewCall:
    """A review of the scenario's incident (bound when the calls are applied)."""

    reviewer: str
    verdict: Verdict
    location: Position
    heading: float
    sim_time: int
    observed_at: int


Call = Union[IncidentCall, ReviewCall]


def reviewer_id(index: int) -> str:
    return f"car-{index:05d}"


class _ReviewFactory:
    """Places reviewing cars so a fixed share of them passes the evidence filter.

    Positions are uniform in a disk whose radius makes the filter radius
    cover ``p_pass`` of its area. Time and heading always fall inside the
    filter, so distance alone decides verification.
    """

    def __init__(
        self, geometry: Geometry, params: VerificationParams, p_pass: float, rng: random.Random
    ) -> None:
        self.geometry = geometry
        self.params = params
        self.p_pass = p_pass
        self.rng = rng
        self.clock = float(geometry.reported_at)

    def _offset_radius(self) -> float:
        base = self.params.radius
        if math.isinf(base):
            # nothing can fail on distance; keep cars within a plausible range
            return 200.0 * math.sqrt(self.rng.random())
        if self.p_pass == 0.0:
            return base * (1.001 + self.rng.random())
        outer = base / math.sqrt(self.p_pass)
        return outer * math.sqrt(self.rng.random())

    def make(self, index: int, verdict: Verdict) -> ReviewCall:
        rng, g = self.rng, self.geometry
        self.clock += rng.expovariate(1.0 / MEAN_INTERARRIVAL)
        sim_time = g.reported_at + round(self.clock - g.reported_at)
        r = self._offset_radius()
        theta = rng.uniform(0.0, 2 * math.pi)
        location = Position(g.location.x + r * math.cos(theta), g.location.y + r * math.sin(theta))
        spread = 0.9 * min(self.params.heading_tolerance, 180.0)
        heading = normalize_heading(g.heading + rng.uniform(-spread, spread))
        latest = sim_time - g.reported_at
        if math.isfinite(self.params.time_window):
            latest = min(latest, int(self.params.time_window))
        observed_at = g.reported_at + rng.randint(0, latest)
        return ReviewCall(reviewer_id(index), verdict, location, heading, sim_time, observed_at)


def _incident_call(geometry: Geometry) -> IncidentCall:
    return IncidentCall(
        PROVIDER, geometry.location, geometry.heading, geometry.reported_at, geometry.classification
    )


def generate_scenario(spec: ScenarioSpec) -> list[Call]:
    """One incident report followed by ``n_transactions - 1`` reviews."""
    verdict_rng = random.Random(f"verdicts/{spec.seed}")
    factory = _ReviewFactory(
        spec.geometry, spec.params, spec.p_pass_filter, random.Random(f"geometry/{spec.seed}")
    )
    calls: list[Call] = [_incident_call(spec.geometry)]
    for index in range(1, spec.n_transactions):
        if spec.kind is ScenarioKind.ALL_SUPPORTING:
            verdict = Verdict.POSITIVE
        elif spec.kind is ScenarioKind.ALL_OPPOSING:
            verdict = Verdict.NEGATIVE
        else:
            verdict = Verdict.POSITIVE if verdict_rng.random() < 0.5 else Verdict.NEGATIVE
        calls.append(factory.make(index, verdict))
    return calls


def apply_calls(network: Network, calls: Sequence[Call], incident_id: Optional[int] = None) -> int:
    """Submit calls to the network; reviews target the incident created by the first call."""
    for call in calls:
        if isinstance(call, IncidentCall):
            result = network.submit_incident(
                call.provider, call.location, call.heading, call.sim_time, call.classification
            )
            if not isinstance(result, int):
                raise RuntimeError(f"scenario incident was deduplicated into {result}")
            incident_id = result
        else:
            if incident_id is None:
                raise ValueError("review call before any incident")
            network.submit_review(
                call.reviewer,
                incident_id,
                call.verdict,
                call.location,
                call.heading,
                call.sim_time,
                call.observed_at,
            )
    if incident_id is None:
        raise ValueError("no incident in call list")
    return incident_id


def make_providers(
    params: VerificationParams = VerificationParams(),
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
    threshold: float = DEFAULT_THRESHOLD,
    algorithms: Sequence[str] = ALGORITHM_IDS,
) -> list[TrustProvider]:
    """One provider per requested algorithm, kept in the order of ``ALGORITHM_IDS``."""
    return [
        TrustProvider(f"tp-{a}", make_algorithm(a, params, weights), threshold)
        for a in ALGORITHM_IDS
        if a in algorithms
    ]


def request_round(
    network: Network,
    providers: Sequence[TrustProvider],
    incident_id: int,
    sim_time: int,
    payment: int = 0,
) -> list[TrustScoreRecord]:
    """Ask every provider for a score of ``incident_id`` and collect the deliveries.

    Each request is designated to one provider so that every algorithm answers.
    """
    ledger = network.ledger
    ledger.seal_block(sim_time)
    for provider in providers:
        network.request_trust_score(
            CONSUMER, IncidentScope(incident_id), payment, sim_time, designated=provider.account
        )
    ledger.seal_block(sim_time)
    records = []
    for provider in providers:
        provider.sync(ledger)
        delivered = provider.serve_pending(network, sim_time)
        if not delivered:
            raise NoEvidence(f"{provider.account} could not score incident {incident_id}")
        records.append(delivered[-1])
    ledger.seal_block(sim_time)
    return records


@dataclass
class ScenarioOutcome:
    network: Network
    providers: list[TrustProvider]
    incident_id: int
    records: list[TrustScoreRecord]

    @property
    def scores(self) -> dict[str, float]:
        """Scores keyed alg1..alg3 by each algorithm's position in ``ALGORITHM_IDS``."""
        return {
            f"alg{ALGORITHM_IDS.index(r.algorithm_id) + 1}": r.score for r in self.records
        }


def run_scenario(
    spec: ScenarioSpec,
    network: Optional[Network] = None,
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
    threshold: float = DEFAULT_THRESHOLD,
    payment: int = 1,
    algorithms: Sequence[str] = ALGORITHM_IDS,
) -> ScenarioOutcome:
    """Drive a generated scenario end to end and collect one score per algorithm."""
    network = network if network is not None else Network()
    calls = generate_scenario(spec)
    incident_id = apply_calls(network, calls)
    providers = make_providers(spec.params, weights, threshold, algorithms)
    network.fund(CONSUMER, payment * len(providers))
    records = request_round(network, providers, incident_id, network.ledger.clock, payment)
    return ScenarioOutcome(network, providers, incident_id, records)


# incremental experiment


@dataclass(frozen=True)
class SeriesRow:
    n: int
    alg1: float
    alg2: float
    alg3: float


@dataclass
class ExperimentSeries:
    p_good: float
    seed: int
    rows: list[SeriesRow] = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["n", "alg1", "alg2", "alg3"])
        for row in self.rows:
            writer.writerow([row.n, repr(row.alg1), repr(row.alg2), repr(row.alg3)])
        return out.getvalue()

    @property
    def final(self) -> SeriesRow:
        return self.rows[-1]


def check_step(total: int, step: int) -> None:
    if step <= 0 or total <= 0 or total % step != 0:
        raise BadStep(f"step {step} must be positive and divide total {total}")


def experiment_calls(
    p_good: float,
    total: int = DEFAULT_TOTAL,
    seed: int = DEFAULT_SEED,
    params: VerificationParams = VerificationParams(),
    p_pass_filter: float = DEFAULT_P_PASS,
    geometry: Geometry = Geometry(),
) -> list[Call]:
    """The incident report plus ``total`` reviews, each Positive with probability ``p_good``."""
    if not 0.0 <= p_good <= 1.0:
        raise ValueError(f"p_good {p_good} outside [0, 1]")
    verdict_rng = random.Random(f"verdicts/{seed}")
    factory = _ReviewFactory(geometry, params, p_pass_filter, random.Random(f"geometry/{seed}"))
    calls: list[Call] = [_incident_call(geometry)]
    for index in range(1, total + 1):
        good = verdict_rng.random() < p_good
        calls.append(factory.make(index, Verdict.POSITIVE if good else Verdict.NEGATIVE))
    return calls


def run_incremental_experiment(
    p_good: float,
    total: int = DEFAULT_TOTAL,
    step: int = DEFAULT_STEP,
    seed: int = DEFAULT_SEED,
    params: VerificationParams = VerificationParams(),
    threshold: float = DEFAULT_THRESHOLD,
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
    p_pass_filter: float = DEFAULT_P_PASS,
    network_factory: Callable[[], Network] = Network,
) -> ExperimentSeries:
    """Add ``step`` reviews per round and record all three scores after each round.

    Reviews, requests and deliveries all go through the ledger and contracts;
    the providers only ever see the evidence they read from sealed events.
    """
    check_step(total, step)
    calls = experiment_calls(p_good, total, seed, params, p_pass_filter)
    network = network_factory()
    incident_id = apply_calls(network, calls[:1])
    providers = make_providers(params, weights, threshold)
    series = ExperimentSeries(p_good, seed)
    for start in range(1, total + 1, step):
        batch = calls[start : start + step]
        apply_calls(network, batch, incident_id)
        records = request_round(network, providers, incident_id, batch[-1].sim_time)
        n = start + step - 1
        for record in records:
            if record.total_reviews != n:
                raise RuntimeError(f"provider saw {record.total_reviews} reviews, expected {n}")
        series.rows.append(SeriesRow(n, *(r.score for r in records)))
    return series


def run_random_percentage_experiment(seed: int = DEFAULT_SEED, **kwargs) -> ExperimentSeries:
    """Same experiment with the good-evidence share itself drawn from the seed."""
    p_good = random.Random(f"p_good/{seed}").random()
    return run_incremental_experiment(p_good, seed=seed, **kwargs)
