import numpy as np
import pytest

from qsep.qlinalg import ket, projector
from qsep.states import StateRng


@pytest.fixture
def rng():
    return StateRng(20240601)


@pytest.fixture
def phi_plus():
    return projector(ket(1, 0, 0, 1))


def random_hermitian(rng: StateRng) -> np.ndarray:
    g = rng.complex_normal(16).reshape(4, 4)
    return (g + g.conj().T) / 2


def random_local_unitary(rng: StateRng) -> np.ndarray:
    def u2():
        q, r = np.linalg.qr(rng.complex_normal(4).reshape(2, 2))
        return q * (np.diag(r) / abs(np.diag(r)))

    return np.kron(u2(), u2())


# One summary line per acceptance criterion, printed after the run.
_criteria: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when == "setup" and report.passed) or report.when == "teardown":
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    if report.failed:
        msg = str(report.longrepr).strip().splitlines()[-1] if report.longrepr else ""
        detail = f"{detail} {msg}".strip()
    _criteria[number] = (title, "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status, detail = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2} {status}  {title}" + (f"  [{detail}]" if detail else ""))
