import numpy as np
import pytest

from secnoma.model import ChannelRealization, CovarianceDesign

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def record(num: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[num] = (bool(passed), detail)
    print(f"acceptance {num}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_channel(rng, n, noise=(1e-2, 1e-2, 1e-2)):
    h1, h2, g = cn(rng, n), cn(rng, n), cn(rng, n)
    if np.linalg.norm(h1) < np.linalg.norm(h2):
        h1, h2 = h2, h1
    return ChannelRealization(h1, h2, g, *noise)


def random_psd(rng, n, rank=None):
    A = cn(rng, n, rank or n)
    return A @ A.conj().T


def random_design(rng, n, scale=1.0):
    return CovarianceDesign(*(scale * random_psd(rng, n, int(rng.integers(1, n + 1))) for _ in range(3)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
