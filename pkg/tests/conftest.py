import numpy as np
import pytest

from dunkl_lab.roots import build_root_system


@pytest.fixture
def a1():
    """Rank one, k = 1: m = 3."""
    return build_root_system("A1_product", d=1, k=1.0)


@pytest.fixture
def a1xa1():
    """A1 x A1 in the plane, k = 0.75: m = 5."""
    return build_root_system("A1_product", d=2, k=0.75)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Recorder for ``test_criterion_<n>``: one PASS/FAIL line per acceptance criterion.

    The entry starts as a failure so that a crash still shows up in the summary.
    """
    number = int(request.node.name.split("_")[2].split("[")[0])
    _CRITERIA[number] = (False, "did not complete")

    def record(ok: bool, detail: str) -> bool:
        _CRITERIA[number] = (bool(ok), detail)
        return bool(ok)

    yield record
    rep = getattr(request.node, "rep_call", None)
    if rep is not None and rep.failed and _CRITERIA[number][0]:
        _CRITERIA[number] = (False, "assertion failed after recording: " + str(rep.longrepr).splitlines()[-1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
