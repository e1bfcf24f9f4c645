import pytest
from deepdiff import DeepDiff
from pydantic import ValidationError

from btembed.checks import (
    CHECKS,
    MAX_FILTRATION_POINTS,
    CheckResult,
    Verdict,
    run_scenario,
)
from btembed.dependencies import deps
from btembed.errors import ScenarioParseError
from btembed.scenarios import CATALOG
from btembed.settings import Settings


def test_registry_has_descriptions() -> None:
    assert "expected-embedding" in CHECKS
    assert "uniqueness-search" in CHECKS
    for check in CHECKS.values():
        assert check.description, check.name


def test_sp2_ramified_passes() -> None:
    report = run_scenario(CATALOG["sp2-ramified"])
    assert report.scenario == "sp2-ramified"
    assert report.prime == 3
    assert report.passed, [c for c in report.checks if c.verdict is Verdict.FAIL]
    assert report.exit_code == 0
    assert [c.name for c in report.checks] == list(CHECKS)


def test_report_is_deterministic() -> None:
    scenario = CATALOG["sp2-split-gl"]
    first = run_scenario(scenario, ["dual-norm", "square-recovery", "end-oracle"])
    second = run_scenario(scenario, ["dual-norm", "square-recovery", "end-oracle"])
    diff = DeepDiff(
        first.model_dump(),
        second.model_dump(),
        exclude_regex_paths=[r"\['millis'\]"],
    )
    assert diff == {}


def test_wrong_expectation_fails_with_witness() -> None:
    tampered = CATALOG["sp2-ramified"].model_copy(update={"expected_offsets": ["0", "0"]})
    report = run_scenario(tampered, ["expected-embedding"])
    (result,) = report.checks
    assert result.verdict is Verdict.FAIL
    assert result.witness["expected"] is not None
    assert result.witness["got"] is not None
    assert not report.passed
    assert report.exit_code == 1


def test_expected_embedding_only_at_its_prime() -> None:
    at_five = CATALOG["sp2-ramified"].model_copy(update={"prime": 5})
    (result,) = run_scenario(at_five, ["expected-embedding"]).checks
    assert result.verdict is Verdict.SKIP
    assert "p = 3" in result.details["reason"]


def test_pair_checks_skip_without_pairs() -> None:
    (result,) = run_scenario(CATALOG["sp2-ramified"], ["h-equivariance"]).checks
    assert result.verdict is Verdict.SKIP


def test_unknown_check() -> None:
    with pytest.raises(ScenarioParseError, match="no-such-check"):
        run_scenario(CATALOG["sp2-ramified"], ["no-such-check"])


def test_failure_needs_witness() -> None:
    with pytest.raises(ValidationError, match="without a witness"):
        CheckResult(name="x", verdict=Verdict.FAIL, millis=0)
    CheckResult(name="x", verdict=Verdict.PASS, millis=0)


def test_scenario_check_list_is_used() -> None:
    scenario = CATALOG["sp2-ramified"].model_copy(update={"checks": ["dual-norm"]})
    report = run_scenario(scenario)
    assert [c.name for c in report.checks] == ["dual-norm"]


ACCEPTANCE_SAMPLES = {
    "duality-involution": 200,
    "dual-norm": 100,
    "square-recovery": 200,
    "block-duals": 50,
    "form-independence": 20,
    "barycenter": 50,
    "apartment-image": 20,
    "filtration-bridge": 10,
    "trace-duality": 20,
}


def test_sample_count_comes_from_settings() -> None:
    with deps.override(settings_partial=Settings(property_samples=5)):
        (result,) = run_scenario(CATALOG["sp2-ramified"], ["dual-norm"]).checks
    assert result.verdict is Verdict.PASS
    assert result.details["samples"] == 5


@pytest.mark.slow
@pytest.mark.parametrize("name", tuple(CATALOG))
@pytest.mark.parametrize(("check", "samples"), tuple(ACCEPTANCE_SAMPLES.items()))
def test_property_check_at_acceptance_samples(check: str, samples: int, name: str) -> None:
    with deps.override(settings_partial=Settings(property_samples=samples)):
        (result,) = run_scenario(CATALOG[name], [check]).checks
    assert result.verdict is not Verdict.FAIL, result.witness
    if result.verdict is Verdict.SKIP:
        return
    if "samples" in result.details:
        assert result.details["samples"] == samples
    if "points" in result.details:
        assert result.details["points"] == min(samples, MAX_FILTRATION_POINTS)


@pytest.mark.parametrize("name", ("sp2-ramified", "sp4-mixed"))
def test_negative_control_is_strict(name: str) -> None:
    (result,) = run_scenario(CATALOG[name], ["negative-control"]).checks
    assert result.verdict is Verdict.PASS
    assert result.details["strictly_smaller"]
    compatible = {tuple(c) for c in result.details["compatible"]}
    assert compatible < {tuple(c) for c in result.details["chamber"]}
