import pytest

from veriblock.contracts import Network, Verdict
from veriblock.errors import BadStep
from veriblock.evidence import VerificationParams, verify_interaction
from veriblock.ledger import Ledger
from veriblock.sim import (
    DEFAULT_SEED,
    IncidentCall,
    ReviewCall,
    ScenarioKind,
    ScenarioSpec,
    experiment_calls,
    generate_scenario,
    run_incremental_experiment,
    run_random_percentage_experiment,
    run_scenario,
)
from veriblock.trust import score_filtered_average, score_simple, score_weighted


def test_all_supporting():
    calls = generate_scenario(ScenarioSpec(ScenarioKind.ALL_SUPPORTING, 11, seed=1))
    assert isinstance(calls[0], IncidentCall)
    assert len(calls) == 11
    assert all(isinstance(c, ReviewCall) and c.verdict is Verdict.POSITIVE for c in calls[1:])
    assert len({c.reviewer for c in calls[1:]}) == 10


def test_all_opposing_end_to_end():
    outcome = run_scenario(ScenarioSpec(ScenarioKind.ALL_OPPOSING, 11, seed=1))
    simple = outcome.records[0]
    assert simple.algorithm_id == "simple"
    assert simple.score == 0.0 and not simple.trusted


def test_random_split_deterministic():
    spec = ScenarioSpec(ScenarioKind.RANDOM_SPLIT, 1001, seed=99)
    a, b = generate_scenario(spec), generate_scenario(spec)
    assert a == b
    positives = sum(c.verdict is Verdict.POSITIVE for c in a[1:])
    assert 0 < positives < 1000
    assert generate_scenario(ScenarioSpec(ScenarioKind.RANDOM_SPLIT, 1001, seed=100)) != a


def test_times_monotone_and_observed_before_submit():
    calls = generate_scenario(ScenarioSpec(ScenarioKind.RANDOM_SPLIT, 500, seed=5))
    times = [c.sim_time for c in calls]
    assert times == sorted(times)
    assert all(c.observed_at <= c.sim_time for c in calls[1:])


@pytest.mark.parametrize("p_pass", [0.0, 0.3, 0.7, 1.0])
def test_pass_rate_follows_p_pass(p_pass):
    params = VerificationParams()
    spec = ScenarioSpec(ScenarioKind.RANDOM_SPLIT, 2001, seed=11, p_pass_filter=p_pass, params=params)
    outcome = run_scenario(spec)
    incident = outcome.network.incidents[outcome.incident_id]
    reviews = outcome.network.reviews_for(outcome.incident_id)
    rate = sum(verify_interaction(incident, r, params) for r in reviews) / len(reviews)
    # 2000 Bernoulli draws: 4 standard deviations is at most 0.045
    assert rate == pytest.approx(p_pass, abs=0.045)
    if p_pass in (0.0, 1.0):
        assert rate == p_pass


def test_bad_step():
    with pytest.raises(BadStep):
        run_incremental_experiment(0.5, total=1000, step=7)
    with pytest.raises(BadStep):
        run_incremental_experiment(0.5, total=100, step=0)


def test_series_shape_and_reproducibility():
    a = run_incremental_experiment(0.6, total=200, step=10, seed=4)
    b = run_incremental_experiment(0.6, total=200, step=10, seed=4)
    assert a == b and a.to_csv() == b.to_csv()
    assert [r.n for r in a.rows] == list(range(10, 201, 10))
    for row in a.rows:
        assert all(0.0 <= s <= 1.0 for s in (row.alg1, row.alg2, row.alg3))
    assert a.to_csv().splitlines()[0] == "n,alg1,alg2,alg3"


def test_final_alg1_matches_direct_tally():
    """Oracle: count the generated verdicts directly, independent of the pipeline."""
    for p_good in (0.5, 0.8):
        calls = experiment_calls(p_good, 1000, DEFAULT_SEED)
        tally = sum(c.verdict is Verdict.POSITIVE for c in calls[1:]) / 1000
        assert tally == pytest.approx(p_good, abs=0.05)
        series = run_incremental_experiment(p_good, seed=DEFAULT_SEED)
        assert series.final.alg1 == tally
        assert series.final.alg1 == pytest.approx(p_good, abs=0.05)


def test_unanimous_evidence():
    series = run_incremental_experiment(1.0, total=100, step=10, p_pass_filter=1.0)
    assert all((r.alg1, r.alg2, r.alg3) == (1.0, 1.0, 1.0) for r in series.rows)
    series = run_incremental_experiment(1.0, total=100, step=10)
    assert all((r.alg1, r.alg2, r.alg3) == (1.0, 1.0, 1.0) for r in series.rows)


def test_pipeline_equivalence():
    """Scores through ledger, contracts and trust equal the algorithms applied to raw lists."""
    params = VerificationParams()
    network = Network(Ledger())
    series = run_incremental_experiment(0.7, total=300, step=10, seed=8,
                                        network_factory=lambda: network)
    incident = network.incidents[1]
    reviews = network.reviews_for(1)
    for row in series.rows:
        prefix = reviews[: row.n]
        assert row.alg1 == score_simple(prefix).score
        assert row.alg2 == score_filtered_average(incident, prefix, params).score
        assert row.alg3 == score_weighted(incident, prefix, params, 0.7, 0.3).score
    assert network.ledger.verify_chain()


def test_columns_agree_when_everything_verifies():
    series = run_incremental_experiment(0.6, total=200, step=10, seed=2, p_pass_filter=1.0,
                                        weights=(0.5, 0.5))
    assert all(r.alg1 == r.alg2 == r.alg3 for r in series.rows)


def test_random_percentage_mode():
    a = run_random_percentage_experiment(seed=12, total=50, step=10)
    b = run_random_percentage_experiment(seed=12, total=50, step=10)
    assert a == b
    assert 0.0 <= a.p_good <= 1.0


def test_scenario_kind_parse():
    assert ScenarioKind.parse("all-supporting") is ScenarioKind.ALL_SUPPORTING
    assert ScenarioKind.parse("RandomSplit") is ScenarioKind.RANDOM_SPLIT
    with pytest.raises(ValueError):
        ScenarioKind.parse("mostly-true")
