import sys

import pytest

from _stubs import CaptureVlmClient, write_bundle, write_run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per adapter release criterion, outside capture."""
    module = sys.modules.get("test_adapter_acceptance")
    results = getattr(module, "ACCEPTANCE_RESULTS", [])
    if results:
        terminalreporter.section("adapter acceptance criteria")
        for name, ok in results:
            terminalreporter.write_line(
                f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'}"
            )


@pytest.fixture
def bundle_writer():
    return write_bundle


@pytest.fixture
def run_factory(tmp_path):
    def build(specs, name="run"):
        return write_run(tmp_path / name, specs)

    return build


@pytest.fixture
def capture_client():
    return CaptureVlmClient()
