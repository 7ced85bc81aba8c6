import numpy as np
import pytest
from hypothesis import settings

from sclab.scales import circle_scale

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def circle():
    return circle_scale((128, 256, 512))


@pytest.fixture
def odd_circle():
    return circle_scale((65, 129, 257))


_CRITERIA = []


@pytest.fixture
def criterion(request):
    """Context manager factory: times a block, records one PASS/FAIL line and enforces a runtime limit."""
    import contextlib
    import time

    @contextlib.contextmanager
    def run(number, title, limit=None):
        start = time.perf_counter()
        status, detail = "FAIL", ""
        try:
            yield
            elapsed = time.perf_counter() - start
            if limit is not None and elapsed >= limit:
                detail = f"runtime {elapsed:.2f} s exceeds {limit:g} s"
                raise AssertionError(detail)
            status = "PASS"
        except BaseException as exc:
            detail = detail or f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
            raise
        finally:
            elapsed = time.perf_counter() - start
            line = f"criterion {number:>2}: {status}  {title}  ({elapsed:.2f} s){'  ' + detail if detail else ''}"
            _CRITERIA.append((number, line))
            print(line)

    return run


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)
