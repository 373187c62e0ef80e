"""Shared generators for the test-suite."""
from pathlib import Path

import numpy as np

from hypertoric.arrangement import Arrangement, Flat

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def random_unimodular(rng: np.random.Generator, n: int | None = None) -> Arrangement:
    """A random subset of the totally unimodular system {e_i, e_i - e_j}, containing a basis,
    written in a random Z-basis, with Gaussian levels."""
    n = n or int(rng.integers(1, 5))
    while True:
        G = rng.integers(-2, 3, size=(n, n))
        if round(abs(np.linalg.det(G))) == 1:
            break
    eye = np.eye(n, dtype=int)
    system = [eye[i] for i in range(n)] + [eye[i] - eye[j] for i in range(n) for j in range(i + 1, n)]
    extra = rng.choice(len(system), size=int(rng.integers(0, len(system) + 1)), replace=False)
    chosen = list(range(n)) + [int(k) for k in extra if k >= n]
    flats = [Flat(tuple(int(x) for x in system[k] @ G), tuple(rng.normal(size=3))) for k in chosen]
    return Arrangement(n, tuple(flats))


def random_flats(rng: np.random.Generator, n: int, m: int) -> Arrangement:
    """m flats with small primitive weights and Gaussian levels."""
    flats, seen = [], set()
    while len(flats) < m:
        u = tuple(int(x) for x in rng.integers(-2, 3, size=n))
        if not any(u) or np.gcd.reduce(np.abs(u)) != 1:
            continue
        lam = tuple(rng.normal(size=3))
        f = Flat(u, lam)
        if any(f.same_subspace(g) for g in flats):
            continue
        flats.append(f)
    return Arrangement(n, tuple(flats), (), tuple(tuple(0 for _ in range(n)) for _ in range(n)))


def random_point(rng: np.random.Generator, n: int):
    from hypertoric.nonabelian_fibers import CotangentPoint
    return CotangentPoint(rng.normal(size=n) + 1j * rng.normal(size=n),
                          rng.normal(size=n) + 1j * rng.normal(size=n))


def random_target(rng: np.random.Generator, n: int):
    """Gaussian trace-free alpha (anti-Hermitian) and beta."""
    from hypertoric.nonabelian_fibers import MomentTarget
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    a = 0.5 * (a - a.conj().T)
    a -= np.trace(a) / n * np.eye(n)
    b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    b -= np.trace(b) / n * np.eye(n)
    return MomentTarget(a, b)


def random_special_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    from scipy.stats import unitary_group
    U = unitary_group.rvs(n, random_state=rng)
    return U * np.linalg.det(U) ** (-1.0 / n)


def case1_image_point(rng: np.random.Generator):
    """A point whose beta is upper triangular with diagonal (nu, -2 nu, nu) and xi1, xi2 != 0."""
    from hypertoric.nonabelian_fibers import CotangentPoint
    nu = complex(rng.normal(), rng.normal())
    xi1, xi2 = complex(rng.normal(), rng.normal()), complex(rng.normal(), rng.normal())
    a = np.array([xi1, -3 * nu, 0])
    b = np.array([0, 1, xi2 / (-3 * nu)])
    s = complex(rng.normal(), rng.normal())
    return CotangentPoint(a * s, b / s)
