import math

import numpy as np
import pytest


def smooth_panorama(W=1024, H=512, channels=3, seed=0):
    """Sum of a few low-degree spherical harmonics (real, unnormalised), scaled into [0, 1]."""
    rng = np.random.default_rng(seed)
    j, i = np.meshgrid(np.arange(H, dtype=np.float64), np.arange(W, dtype=np.float64), indexing="ij")
    lat = math.pi / 2 - j / H * math.pi
    lon = i / W * 2 * math.pi - math.pi
    x, y, z = np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)
    basis = [x, y, z, x * y, y * z, x * z, x * x - y * y, 3 * z * z - 1]
    out = np.empty((H, W, channels))
    for c in range(channels):
        idx = rng.choice(len(basis), size=4, replace=False)
        w = rng.uniform(-1, 1, size=4)
        f = sum(wk * basis[k] for wk, k in zip(w, idx))
        out[..., c] = 0.5 + 0.2 * f / np.abs(w).sum()
    return out


def psnr(a, b):
    mse = float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))
    return float("inf") if mse == 0 else 10 * math.log10(1.0 / mse)


@pytest.fixture(scope="session")
def panorama():
    return smooth_panorama()


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one verdict line per acceptance criterion and assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(number, title, ok, detail):
        lines.append(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)
