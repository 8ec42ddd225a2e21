"""Shared fixtures plus the release-gate reporter.

Tests marked ``acceptance`` get one PASS/FAIL line each in the terminal
summary so the gate can be read without scrolling through the full run.
"""
import pytest

from scm_triage.backends import StubLlmBackend
from scm_triage.fixtures import seed_demo
from scm_triage.generator import generate_cases
from scm_triage.pipeline import PromptLibrary
from scm_triage.rubric import load_vocabulary


# ---------------------------------------------------------------------------
# Acceptance reporting
# ---------------------------------------------------------------------------

def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(label): release-gate check reported as a PASS/FAIL line "
        "in the terminal summary",
    )
    config._acceptance_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None and report.when == "call":
        label = marker.kwargs.get("label") or item.name
        item.config._acceptance_results.append((label, report.passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", [])
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label, passed in results:
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {verdict}: {label}")


# ---------------------------------------------------------------------------
# Shared fixtures
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def prompts():
    return PromptLibrary.load()


@pytest.fixture(scope="session")
def vocab():
    return load_vocabulary()


@pytest.fixture()
def stub_backend(prompts):
    return StubLlmBackend(prompts=prompts)


@pytest.fixture(scope="session")
def generated_200():
    """A mid-size default-mix corpus reused by read-only tests."""
    return generate_cases(200, seed=4242)


@pytest.fixture(scope="session")
def demo_store_dir(tmp_path_factory):
    """A store seeded with the reference-shaped demo population."""
    path = tmp_path_factory.mktemp("demo-store")
    seed_demo(path, seed=11)
    return path
