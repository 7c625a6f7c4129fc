import numpy as np
import pytest

from metric_lie_surfaces.surface_geometry import SurfacePatch


def wavy_chart(a=1.0, b=1.0, c=1.0):
    """A generic non-symmetric chart; stays in a small box near the origin."""
    def f(u, v):
        return np.stack([0.3 * u + 0.1 * np.sin(v) * u,
                         a * 0.1 * np.cos(u + v) + 0.2 * v * b,
                         c * v + 0.05 * u * u], -1)
    return f


def wavy_patch(model, a=1.0, b=1.0, c=1.0, domain=(0.1, 1.0, 0.1, 1.0)):
    return SurfacePatch(model, wavy_chart(a, b, c), domain)


def observed_order(hs, errs):
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
