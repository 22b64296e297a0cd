import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from squeezed_mzi.errors import TruncationTooSmall
from squeezed_mzi.fock import TwoModeState, annihilation, make_number, tensor, TruncationPolicy
from squeezed_mzi.interferometer import (
    PhasePair,
    TwoModeOperator,
    apply,
    beam_splitter,
    expectation,
    generator,
    generator_block,
    identity,
    mach_zehnder,
    phase_shift,
)

from conftest import coherent, random_two_mode


def basis(n1, n2, dim=4):
    g = np.zeros((dim, dim), complex)
    g[n1, n2] = 1
    return TwoModeState(g)


def dense_ops(d):
    a = annihilation(d)
    eye = np.eye(d)
    return np.kron(a, eye), np.kron(eye, a)


def block_index(d, n):
    """Indices of |n1, n - n1> (n1 ascending) in the kron basis."""
    return [n1 * d + (n - n1) for n1 in range(n + 1)]


def test_phase_pair_round_trip():
    p = PhasePair.from_arm_phases(0.3, -1.1)
    assert p.arm_phases() == pytest.approx((0.3, -1.1), abs=1e-15)


def test_beam_splitter_matches_dense_expm():
    d = 7
    a1, a2 = dense_ops(d)
    j = a1.conj().T @ a2 + a2.conj().T @ a1
    full = expm(-1j * j * math.pi / 4)
    b = beam_splitter(d - 1)
    for n in range(d):
        idx = block_index(d, n)
        np.testing.assert_allclose(b.blocks[n], full[np.ix_(idx, idx)], atol=1e-12)


def test_beam_splitter_heisenberg_picture():
    d = 8
    a1, a2 = dense_ops(d)
    bmat = np.zeros((d * d, d * d), complex)
    for n in range(d):
        idx = block_index(d, n)
        bmat[np.ix_(idx, idx)] = beam_splitter(d - 1).blocks[n]
    safe = [i for n in range(d - 1) for i in block_index(d, n)]
    lhs1 = bmat.conj().T @ a1 @ bmat
    lhs2 = bmat.conj().T @ a2 @ bmat
    ix = np.ix_(safe, safe)
    np.testing.assert_allclose(lhs1[ix], ((a1 - 1j * a2) / math.sqrt(2))[ix], atol=1e-10)
    np.testing.assert_allclose(lhs2[ix], ((a2 - 1j * a1) / math.sqrt(2))[ix], atol=1e-10)


def test_beam_splitter_small_cases():
    out = apply(beam_splitter(3), basis(0, 0))
    assert out.amps[0, 0] == pytest.approx(1)
    out = apply(beam_splitter(3), basis(1, 0))
    assert out.amps[1, 0] == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    assert out.amps[0, 1] == pytest.approx(-1j / math.sqrt(2), abs=1e-14)


def test_beam_splitter_coherent_product():
    alpha = 1.7
    state = tensor(coherent(alpha, 40), coherent(0, 40))
    out = apply(beam_splitter(60), state)
    expected = tensor(coherent(alpha / math.sqrt(2), 61), coherent(-1j * alpha / math.sqrt(2), 61))
    assert out.fidelity(expected) >= 1 - 1e-9


def test_phase_shift():
    assert phase_shift(PhasePair(), 5).max_unitarity_error() < 1e-15
    for b in phase_shift(PhasePair(), 5).blocks:
        np.testing.assert_allclose(b, np.eye(len(b)))
    out = apply(phase_shift(PhasePair(0, math.pi), 3), basis(1, 0))
    assert out.amps[1, 0] == pytest.approx(1j)
    out = apply(phase_shift(PhasePair(0, 0.77), 3), basis(1, 1))
    assert out.amps[1, 1] == pytest.approx(1)


@given(st.floats(-4, 4), st.floats(-4, 4))
def test_mach_zehnder_two_constructions_agree(ps, pd):
    pair = PhasePair(ps, pd)
    a = mach_zehnder(pair, 12, "composed")
    b = mach_zehnder(pair, 12, "generator")
    for x, y in zip(a.blocks, b.blocks):
        np.testing.assert_allclose(x, y, atol=1e-10)
    assert a.max_unitarity_error() < 1e-12


def test_mach_zehnder_identity_and_bad_method():
    for b in mach_zehnder(PhasePair(), 6).blocks:
        np.testing.assert_allclose(b, np.eye(len(b)), atol=1e-12)
    with pytest.raises(ValueError):
        mach_zehnder(PhasePair(), 3, "other")


@pytest.mark.parametrize("phi", [0.0, 0.4, 1.3, math.pi / 2, 2.8])
def test_mach_zehnder_coherent_output_means(phi):
    alpha = 2.0
    state = tensor(coherent(alpha, 40), coherent(0, 40))
    out = apply(mach_zehnder(PhasePair(0.3, phi), 60), state)
    p = np.abs(out.amps) ** 2
    n = np.arange(p.shape[0])
    assert n @ p.sum(axis=1) == pytest.approx(alpha**2 * math.cos(phi / 2) ** 2, abs=1e-9)
    assert n @ p.sum(axis=0) == pytest.approx(alpha**2 * math.sin(phi / 2) ** 2, abs=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_mean_k_vanishes_for_real_inputs(seed):
    state = random_two_mode(np.random.default_rng(seed), 8)
    assert abs(expectation(generator("K", 14), state)) < 1e-10


@pytest.mark.parametrize("n", [1, 2, 5, 10])
def test_angular_momentum_algebra(n):
    jx, jy, jz = (generator_block(k, n) for k in ("Jx", "Jy", "Jz"))
    np.testing.assert_allclose(jx @ jy - jy @ jx, 1j * jz, atol=1e-10)
    np.testing.assert_allclose(jy @ jz - jz @ jy, 1j * jx, atol=1e-10)
    np.testing.assert_allclose(jz @ jx - jx @ jz, 1j * jy, atol=1e-10)


@pytest.mark.parametrize("n", [0, 1, 4, 9])
def test_rotated_nd_is_k(n):
    b = beam_splitter(n).blocks[n]
    np.testing.assert_allclose(b.conj().T @ generator_block("Nd", n) @ b, generator_block("K", n), atol=1e-12)


def test_operators_conserve_number_and_unitary():
    for op in (beam_splitter(15), phase_shift(PhasePair(0.2, 1.0), 15), mach_zehnder(PhasePair(1, 2), 15)):
        assert op.max_unitarity_error() < 1e-12
        assert len(op.blocks) == 16


def test_apply_round_trip_and_norm(rng):
    s = random_two_mode(rng, 6, real=False)
    b = beam_splitter(10)
    back = apply(b, apply(b.dagger(), s))
    assert back.fidelity(s) == pytest.approx(1, abs=1e-10)
    assert apply(b, s).norm() == pytest.approx(1, abs=1e-10)
    assert apply(identity(10), s).fidelity(s) == pytest.approx(1, abs=1e-14)


def test_apply_refuses_support_above_cap():
    s = tensor(make_number(5, TruncationPolicy(8)), make_number(5, TruncationPolicy(8)))
    with pytest.raises(TruncationTooSmall):
        apply(beam_splitter(6), s)


def test_operator_block_shape_check():
    with pytest.raises(ValueError):
        TwoModeOperator((np.eye(2),))
