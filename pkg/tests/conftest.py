import math

import numpy as np
import pytest
from hypothesis import settings

from squeezed_mzi.fock import ModeState, TruncationPolicy, TwoModeState, make_coherent, make_squeezed_vacuum, tensor

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def coherent(alpha, dim=None):
    dim = dim or TruncationPolicy.for_mean(abs(alpha) ** 2).dim
    return make_coherent(alpha, TruncationPolicy(dim))


def squeezed(r, dim=None):
    dim = dim or TruncationPolicy.for_squeezed(r).dim
    return make_squeezed_vacuum(r, TruncationPolicy(dim))


def coherent_squeezed(alpha, r):
    return tensor(coherent(alpha), squeezed(r))


def random_mode(rng, dim, real=False, even=False, decay=0.5):
    """Random state with geometrically decaying weights so moments stay well inside the basis."""
    env = np.exp(-decay * np.arange(dim))
    v = rng.normal(size=dim) * env
    if not real:
        v = v + 1j * rng.normal(size=dim) * env
    if even:
        v[1::2] = 0
    return ModeState(v / np.linalg.norm(v))


def random_two_mode(rng, dim, real=True, decay=0.6):
    env = np.exp(-decay * np.add.outer(np.arange(dim), np.arange(dim)))
    g = rng.normal(size=(dim, dim)) * env
    if not real:
        g = g + 1j * rng.normal(size=(dim, dim)) * env
    return TwoModeState(g / np.linalg.norm(g))


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


SQRT2 = math.sqrt(2)
