import numpy as np
import pytest

from cdare import EnsembleSpec, gen_random_problem


def crandn(rng, n, m=None):
    m = n if m is None else m
    return (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2)


def random_hpd(rng, n, shift=1.0, scale=1.0):
    """Random Hermitian positive definite matrix with eigenvalues >= shift."""
    w = crandn(rng, n)
    return scale * (w @ w.conj().T + shift * np.eye(n))


def random_problem(seed, n=4, sign="plus", diag_scale=1.0):
    """Well-posed random problem via the ensemble generator."""
    spec = EnsembleSpec(n=n, trials=1, seed=seed, sign=sign,
                        diag_scale=diag_scale)
    return gen_random_problem(spec, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
