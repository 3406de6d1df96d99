import numpy as np
import pytest

from cpmean.cpmaps import CpMap, from_choi


def random_unitary(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_psd(rng, dim, rank=None, lo=0.25, hi=4.0):
    """Random PSD matrix with eigenvalues drawn from [lo, hi] on a random frame."""
    rank = dim if rank is None else rank
    if rank == 0:
        return np.zeros((dim, dim), dtype=np.complex128)
    q = random_unitary(rng, dim)[:, :rank]
    w = rng.uniform(lo, hi, size=rank)
    m = (q * w) @ q.conj().T
    return 0.5 * (m + m.conj().T)


def random_density(rng, dim):
    m = random_psd(rng, dim)
    return m / np.trace(m).real


def random_cp(rng, m, n, rank=None, lo=0.25, hi=4.0) -> CpMap:
    return from_choi(m, n, random_psd(rng, m * n, rank=rank, lo=lo, hi=hi))


def max_abs(a):
    return float(np.abs(np.asarray(a)).max())


def min_eig(a):
    a = np.asarray(a)
    return float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
