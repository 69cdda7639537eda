import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a.ravel() - a.mean()
    b = b.ravel() - b.mean()
    return float(a @ b / np.sqrt((a @ a) * (b @ b)))


def ramp_checker(n: int = 16) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smooth horizontal ramp times a fine two-tone checkerboard."""
    ramp = np.linspace(0.3, 0.9, n)[None, :].repeat(n, axis=0)
    checker = np.where((np.indices((n, n)).sum(0) % 2) == 0, 1.0, 0.7)
    return ramp, checker, ramp * checker
