import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ikka.simulator import arm_manifest, run_batch  # noqa: E402
from ikka.simulator.manifest import STRESS_CONDITIONS  # noqa: E402
from ikka.simulator.profiles import TRACKERS  # noqa: E402

RUNS_PER_ARM = 30
STRESS_SEED = 1000
OCCLUSION_SEED = 3000
OCCLUSION_SEEDS = 50


def _by_arm(results):
    out = {}
    for r in results:
        assert r.ok, r.error
        out.setdefault(r.entry.tracker, []).append(r.metrics)
    return out


@pytest.fixture(scope="session")
def stress_batch():
    """Matched-seed stress runs, 30 per arm, cycling dim, occlusion and both."""
    return _by_arm(run_batch(arm_manifest(TRACKERS, STRESS_CONDITIONS, RUNS_PER_ARM, STRESS_SEED)))


@pytest.fixture(scope="session")
def occlusion_batch():
    """Matched-seed plain occlusion runs for the two hybrid arms over a 50-seed sweep."""
    man = arm_manifest(("hybrid", "hybrid_ikka"), ("occlusion",), OCCLUSION_SEEDS, OCCLUSION_SEED)
    return _by_arm(run_batch(man))


ACCEPTANCE = {}


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion.

    Call ``acceptance(number, ok, detail)`` before asserting.
    """

    def record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
