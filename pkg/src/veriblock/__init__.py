"""Simulated blockchain trust management with verifiable interactions."""

from .contracts import (
    DedupParams,
    DedupRedirect,
    Incident,
    IncidentScope,
    Network,
    ProviderScope,
    RequestState,
    Review,
    TrustRequest,
    TrustScoreRecord,
    Verdict,
)
from .evidence import (
    Position,
    VerificationParams,
    distance,
    filter_feedback,
    heading_aligned,
    verify_interaction,
)
from .ledger import Block, EventKind, Ledger, LedgerEvent, Transaction
from .trust import (
    EvidenceDB,
    ScoreResult,
    TrustProvider,
    ingest_events,
    score_filtered_average,
    score_simple,
    score_weighted,
    serve_request,
)

__version__ = "0.1.0"
