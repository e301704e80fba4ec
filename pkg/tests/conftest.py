import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from drivecluster.synth import FleetSpec, make_archetype  # noqa: E402


def level_fleet(levels, drivers, sessions=2, minutes=10.0, std=5.0, theta=0.5, seed=1, jitter=0.0):
    """Archetypes differing only in gas-pedal level."""
    archetypes = tuple(
        make_archetype(f"g{i}", GAS={"mean": float(m), "std": std, "theta": theta}) for i, m in enumerate(levels)
    )
    return FleetSpec(archetypes, drivers, sessions, (minutes, minutes), seed, driver_jitter=jitter)


@pytest.fixture
def two_archetype_spec():
    return level_fleet([20.0, 60.0], drivers=10)


@pytest.fixture
def three_archetype_spec():
    return level_fleet([20.0, 50.0, 80.0], drivers=6)


def fleet_vectors(spec, signal="GAS", feature=1):
    """Per-user feature vectors for one (signal, feature) of a synthetic fleet."""
    from drivecluster.features import FeatureKind, extract_feature
    from drivecluster.ingest import SignalKind
    from drivecluster.synth import generate_synthetic_fleet

    sig, feat = SignalKind.parse(signal), FeatureKind.parse(feature)
    return {u.user_id: extract_feature(u, sig, feat).values for u in generate_synthetic_fleet(spec)}


# -- acceptance reporting ----------------------------------------------------
_criteria: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    failed = report.failed
    if report.when == "call" or failed:
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        status = "FAIL" if failed else ("SKIP" if report.skipped else "PASS")
        if number not in _criteria or _criteria[number][0] == "PASS":
            _criteria[number] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        status, title, detail = _criteria[number]
        line = f"criterion {number}: {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
