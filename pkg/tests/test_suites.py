"""Tests for rtlab acceptance suites."""
from fractions import Fraction
from unittest.mock import MagicMock

import pytest

from rtlab.const import ENV_THREADS
from rtlab.core.exceptions import InvalidParameterError, PreconditionError
from rtlab.pipeline import ClaimResult
from rtlab.regularity import split_pair
from rtlab.suites import (
    EDGE_GAIN_PREMISES,
    SUITES,
    InstanceOutcome,
    Suite,
    SuiteOptions,
    SuiteResult,
    SuiteRunner,
    algebra_instance,
    convexity_instance,
    exact_equivalence_instance,
    graph_from_mask,
    naive_eps_plus_irregular,
    observation_tasks,
    odd_cycle_free_instance,
    odd_cycle_free_tasks,
    resolve_suites,
    run_suites,
    symmetrization_instance,
    unsupported_failures,
    worker_count,
)

from .conftest import brute_irregular, complete_bipartite

SMALL = SuiteOptions(max_side=4, max_n=4, refuter_trials=5, oracle_nodes=10_000, be_n=20)


@pytest.fixture
def runner():
    """Create a thread-backed runner with small options."""
    return SuiteRunner(seed=1, options=SMALL, workers=2, processes=False)


class TestSuiteRegistry:
    """Tests for suite lookup and sizing."""

    def test_all(self):
        """Test "all" selects every suite."""
        assert [suite.name for suite in resolve_suites(["all"])] == list(SUITES)

    def test_named(self):
        """Test names map in order."""
        suites = resolve_suites(["core", "algebra"])
        assert [suite.name for suite in suites] == ["core", "algebra"]

    def test_unknown(self):
        """Test an unknown name is a parameter error."""
        with pytest.raises(InvalidParameterError):
            resolve_suites(["algebra", "nope"])

    def test_exhaustive_task_counts(self):
        """Test one mask chunk per size and the extra tight instance."""
        assert observation_tasks(SMALL) == [(1, 0, 1), (2, 0, 2), (3, 0, 8), (4, 0, 64)]
        assert len(odd_cycle_free_tasks(SMALL)) == 5
        assert odd_cycle_free_tasks(SMALL)[-1] == ("tight",)

    def test_eight_vertex_split_tasks(self):
        """Test two-colourings with vertex 0 on the first side are enumerated once each."""
        tasks = odd_cycle_free_tasks(SuiteOptions(max_n=8))
        splits = [task for task in tasks if task[0] == "split"]
        assert len(splits) == 2**7 - 1
        assert all(task[1][0] == 0 for task in splits)

    def test_options_cap(self):
        """Test None keeps the value."""
        assert SuiteOptions().cap(100, None) == 100
        assert SMALL.cap(100, SMALL.max_side) == 4


class TestWorkerCount:
    """Tests for the RTLAB_THREADS cap."""

    def test_unset(self, monkeypatch):
        """Test the CPU count is used when unset."""
        monkeypatch.delenv(ENV_THREADS, raising=False)
        assert worker_count() >= 1

    def test_set(self, monkeypatch):
        """Test an explicit value."""
        monkeypatch.setenv(ENV_THREADS, "3")
        assert worker_count() == 3

    @pytest.mark.parametrize("raw", ["0", "-2", "many"])
    def test_invalid(self, monkeypatch, raw):
        """Test values that are not positive integers."""
        monkeypatch.setenv(ENV_THREADS, raw)
        with pytest.raises(InvalidParameterError):
            worker_count()


class TestInstances:
    """Tests for single suite instances."""

    def test_graph_from_mask(self):
        """Test bit i selects the i-th pair."""
        g = graph_from_mask(3, 0b101, [(0, 1), (0, 2), (1, 2)])
        assert sorted(g.edges()) == [(0, 1), (1, 2)]

    @pytest.mark.parametrize("index", range(5))
    def test_algebra(self, index):
        """Test the closed form and monotonicity hold."""
        outcome = algebra_instance(0, index, SMALL)
        assert outcome.ok
        assert outcome.detail["identity"]

    @pytest.mark.parametrize("index", range(3))
    def test_convexity(self, index):
        """Test the averaging identity on small random pairs."""
        assert convexity_instance(2, index, SMALL).ok

    @pytest.mark.parametrize("index", range(6))
    def test_exact_equivalence(self, index):
        """Test the fast and naive scans agree."""
        outcome = exact_equivalence_instance(4, index, SMALL)
        assert outcome.ok
        assert outcome.detail["fast"] == outcome.detail["naive"]

    def test_odd_cycle_free_tight(self):
        """Test the K4,4 task reports the equality case."""
        index = len(odd_cycle_free_tasks(SMALL)) - 1
        outcome = odd_cycle_free_instance(0, index, SMALL)
        assert outcome.ok
        assert outcome.detail["tight"]["edges"] == 16

    @pytest.mark.parametrize("eps", [Fraction(1, 3), Fraction(1, 2)])
    def test_naive_scan_matches_brute_force(self, eps):
        """Test the naive scan against plain subset enumeration."""
        pair = split_pair(complete_bipartite(3, 3), 3)
        assert naive_eps_plus_irregular(pair, eps) == brute_irregular(pair, eps)


class TestSuiteRunner:
    """Tests for the concurrent runner."""

    async def test_runs_small_suites(self, runner):
        """Test exhaustive and algebra suites pass on a thread pool."""
        results = await runner.async_run(["observation", "odd-cycle-free", "algebra"], 4)
        assert [result.name for result in results] == ["observation", "odd-cycle-free", "algebra"]
        assert all(result.ok for result in results)
        assert [len(result.outcomes) for result in results] == [4, 4, 4]
        diagnostics = runner.get_diagnostics()
        assert diagnostics["instances_run"] == 12
        assert diagnostics["instances_failed"] == 0
        assert diagnostics["processes"] is False

    async def test_instance_error_becomes_failure(self, runner, monkeypatch):
        """Test an instance that raises is recorded as failed."""
        run_instance = MagicMock(side_effect=RuntimeError("boom"))
        monkeypatch.setitem(
            SUITES, "broken", Suite("broken", run_instance, lambda options: 2, "Always raises")
        )
        (result,) = await runner.async_run(["broken"])
        assert not result.ok
        assert len(result.failures) == 2
        assert result.failures[0].detail["error"] == "RuntimeError: boom"
        assert runner.get_diagnostics()["errors"] == 2
        assert run_instance.call_count == 2

    async def test_instances_are_written(self, tmp_path):
        """Test per-instance JSON files land under the suite name."""
        runner = SuiteRunner(options=SMALL, workers=1, out_dir=tmp_path, processes=False)
        await runner.async_run(["algebra"], 2)
        assert sorted(path.name for path in (tmp_path / "algebra").iterdir()) == [
            "00000.json",
            "00001.json",
        ]

    def test_suite_result_dict(self):
        """Test only failed instances are listed."""
        result = SuiteResult(
            "demo", [InstanceOutcome("demo", 0, True), InstanceOutcome("demo", 1, False)]
        )
        data = result.to_dict()
        assert data["instances"] == 2
        assert data["failures"] == 1
        assert data["failed_instances"][0]["index"] == 1

    def test_run_suites(self, monkeypatch):
        """Test the blocking entry point with one worker."""
        monkeypatch.setenv(ENV_THREADS, "1")
        results, diagnostics = run_suites(["algebra"], 2, seed=0, options=SMALL)
        assert results[0].ok
        assert diagnostics["workers"] == 1


def _claims(**overrides: bool) -> dict[str, ClaimResult]:
    names = [
        "symmetrized_edges",
        "symmetrized_k4_free",
        "light_cut_off_a",
        "light_cut_off_b",
        *EDGE_GAIN_PREMISES,
    ]
    results = {name: ClaimResult(name, overrides.get(name, True)) for name in names}
    for side in "ab":
        name = f"short_odd_cycles_{side}"
        results[name] = ClaimResult(name, True, detail={"cycles": {}})
    return results


def _run(claims: dict[str, ClaimResult], k4_free: bool = True, part: int = 40, alpha: int = 2):
    run = MagicMock()
    run.claims.results = claims
    run.k4_free = k4_free
    run.alpha_count = alpha
    run.certificate.a = range(part)
    run.certificate.b = range(part)
    return run


class TestSymmetrizationChecks:
    """Tests for the step-5 instance and its premise-aware verdict."""

    def test_both_nu_values_are_accepted(self, monkeypatch):
        """Test odd indices run with a nu inside (0, 1/15)."""
        run_pipeline = MagicMock(side_effect=PreconditionError("minimum degree too small"))
        monkeypatch.setattr("rtlab.suites.run_pipeline", run_pipeline)
        for index in (0, 1):
            outcome = symmetrization_instance(0, index, SMALL)
            assert outcome.ok
            assert outcome.detail["reached"] is False
        nus = [call.args[1].nu for call in run_pipeline.call_args_list]
        assert nus == [Fraction(1, 20), Fraction(1, 16)]

    def test_supported_k4_failure(self):
        """Test a K4 in G' counts when both parts are triangle-free and movers are cut off."""
        claims = _claims(symmetrized_k4_free=False)
        assert unsupported_failures(_run(claims)) == ["symmetrized_k4_free"]

    def test_k4_failure_after_inside_triangle(self):
        """Test a triangle inside a part releases the K4 check."""
        claims = _claims(symmetrized_k4_free=False)
        claims["short_odd_cycles_b"].detail["cycles"] = {"3": [0, 1, 2]}
        assert unsupported_failures(_run(claims)) == []

    def test_k4_failure_on_input_with_k4(self):
        """Test an input containing K4 releases the K4 check."""
        claims = _claims(symmetrized_k4_free=False)
        assert unsupported_failures(_run(claims, k4_free=False)) == []

    def test_edge_loss(self):
        """Test an edge loss counts only with the side claims and parts of 14 alpha."""
        claims = _claims(symmetrized_edges=False)
        assert unsupported_failures(_run(claims, part=28, alpha=2)) == ["symmetrized_edges"]
        assert unsupported_failures(_run(claims, part=27, alpha=2)) == []
        claims = _claims(symmetrized_edges=False, light_gain_a=False)
        assert unsupported_failures(_run(claims)) == []


def _reach_even(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    return InstanceOutcome("reach", index, True, {"reached": index % 2 == 0})


def _reach_never(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    return InstanceOutcome("reach", index, True, {"reached": False, "failed_claims": ["x"]})


class TestReachTarget:
    """Tests for suites that need a number of instances to reach the checked stage."""

    async def test_extends_until_target(self, runner, monkeypatch):
        """Test extra indices are drawn until enough instances reach the stage."""
        suite = Suite("reach", _reach_even, lambda options: 4, "Even indices", reach_cap=3)
        monkeypatch.setitem(SUITES, "reach", suite)
        (result,) = await runner.async_run(["reach"])
        assert [outcome.index for outcome in result.outcomes] == list(range(7))
        assert result.reached == 4
        assert result.ok
        assert result.to_dict()["target"] == 4

    async def test_fails_when_cap_is_hit(self, runner, monkeypatch):
        """Test the suite fails when too few instances reach the stage."""
        monkeypatch.setitem(
            SUITES, "reach", Suite("reach", _reach_never, lambda options: 2, "Never", reach_cap=3)
        )
        (result,) = await runner.async_run(["reach"])
        assert len(result.outcomes) == 6
        assert not result.failures
        assert not result.ok
        data = result.to_dict()
        assert data["reached"] == 0
        assert data["claim_failures"] == {"x": 6}
