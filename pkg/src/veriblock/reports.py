"""Run configured scenarios and sweeps and write their output files."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional, Sequence

from .config import Config
from .ledger import first_invalid_height, load_chain
from .sim import (
    ExperimentSeries,
    ScenarioKind,
    ScenarioOutcome,
    ScenarioSpec,
    run_incremental_experiment,
    run_scenario,
)

SUMMARY_HEADER = ["p_good", "seed", "n", "alg1", "alg2", "alg3"]


def scenario_from_config(config: Config, kind: ScenarioKind, n: int, seed: int) -> ScenarioOutcome:
    spec = ScenarioSpec(
        kind, n, seed, p_pass_filter=config.p_pass_filter, params=config.verification
    )
    return run_scenario(
        spec,
        config.make_network(),
        weights=config.weights,
        threshold=config.threshold,
        algorithms=config.algorithms,
    )


def scenario_summary(outcome: ScenarioOutcome, kind: ScenarioKind, n: int, seed: int) -> dict:
    summary: dict = {"kind": kind.value, "n": n, "seed": seed, "incident_id": outcome.incident_id}
    summary.update(outcome.scores)
    summary["results"] = [
        {
            "algorithm_id": r.algorithm_id,
            "score": r.score,
            "trusted": r.trusted,
            "total": r.total_reviews,
            "verified": r.verified_feedback,
        }
        for r in outcome.records
    ]
    return summary


def write_scenario_outputs(
    outcome: ScenarioOutcome, out_dir: str | Path, kind: ScenarioKind, n: int, seed: int
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ledger = outcome.network.ledger
    paths = {
        "chain.jsonl": "".join(line + "\n" for line in ledger.debug_lines()),
        "evidence.csv": outcome.providers[0].db.export_csv(),
        "balances.csv": outcome.network.trust.balances_csv(),
        "scores.json": json.dumps(scenario_summary(outcome, kind, n, seed), indent=2) + "\n",
    }
    written = []
    for name, text in paths.items():
        (out / name).write_text(text)
        written.append(out / name)
    (out / "chain.bin").write_bytes(ledger.dump_bytes())
    written.append(out / "chain.bin")
    return written


def run_sweep(config: Config, seeds: Optional[Sequence[int]] = None) -> list[ExperimentSeries]:
    """One series per (p_good, seed) cell, p_good-major."""
    return [
        run_incremental_experiment(
            p_good,
            total=config.total,
            step=config.step,
            seed=seed,
            params=config.verification,
            threshold=config.threshold,
            weights=config.weights,
            p_pass_filter=config.p_pass_filter,
            network_factory=config.make_network,
        )
        for p_good in config.p_good
        for seed in (config.seeds if seeds is None else seeds)
    ]


def series_filename(series: ExperimentSeries) -> str:
    return f"series_p{round(series.p_good * 100)}_s{series.seed}.csv"


def summary_csv(series_list: Sequence[ExperimentSeries]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for s in series_list:
        f = s.final
        writer.writerow([repr(s.p_good), s.seed, f.n, repr(f.alg1), repr(f.alg2), repr(f.alg3)])
    return out.getvalue()


def write_experiment_outputs(series_list: Sequence[ExperimentSeries], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for series in series_list:
        path = out / series_filename(series)
        path.write_text(series.to_csv())
        written.append(path)
    (out / "summary.csv").write_text(summary_csv(series_list))
    written.append(out / "summary.csv")
    return written


def verify_dump(path: str | Path) -> Optional[int]:
    """First corrupted height in a chain dump, or None if intact.

    Raises OSError if unreadable and ChainFormatError if unparseable.
    """
    return first_invalid_height(load_chain(Path(path).read_bytes()))
