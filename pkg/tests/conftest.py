import numpy as np
import pytest
from scipy import ndimage


def band_limited_texture(n=64, sigma=2.0, seed=0):
    """Periodic smoothed noise in [0.1, 0.9]; np.roll gives exact translations."""
    rng = np.random.default_rng(seed)
    t = ndimage.gaussian_filter(rng.random((n, n)), sigma, mode="wrap")
    t = (t - t.min()) / (t.max() - t.min())
    return 0.1 + 0.8 * t


def gaussian_blob(n, cx, cy, sigma=5.0, peak=0.9):
    y, x = np.mgrid[0:n, 0:n]
    return peak * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma * sigma))


def block_match(a, b, points, radius=4, search=5):
    """Exhaustive integer block matching: displacement minimizing patch SSD."""
    out = []
    for x, y in points:
        pa = a[y - radius:y + radius + 1, x - radius:x + radius + 1]
        best, best_d = np.inf, (0, 0)
        for dy in range(-search, search + 1):
            for dx in range(-search, search + 1):
                pb = b[y + dy - radius:y + dy + radius + 1, x + dx - radius:x + dx + radius + 1]
                ssd = float(np.sum((pa - pb) ** 2))
                if ssd < best:
                    best, best_d = ssd, (dx, dy)
        out.append(best_d)
    return np.array(out, dtype=float)


@pytest.fixture
def texture():
    return band_limited_texture()


_ACCEPTANCE_LINES = []


@pytest.fixture
def report_criterion():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
