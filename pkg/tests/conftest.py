import numpy as np
import pytest

from pyramask.errors import PyramaskError
from pyramask.geometry import Box, Quad
from pyramask.synth import QuadSampler


def random_star_quad(rng, convex=False):
    """Quad from four sorted polar angles; convex or merely star-shaped."""
    while True:
        angles = np.sort(rng.uniform(0, 2 * np.pi, 4))
        radii = rng.uniform(5, 40, 4)
        c = rng.uniform(-20, 20, 2)
        pts = c + np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
        try:
            q = Quad(pts)
        except PyramaskError:
            continue
        if convex and not q.is_convex():
            continue
        return q


def text_quad(rng):
    return QuadSampler().sample(rng)


def margin_box(q, margin=0.15):
    return Box.around(q.vertices, margin)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in results:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    passed = sum(ok for _, ok, _ in results)
    terminalreporter.write_line(f"{passed}/{len(results)} criteria passed")
