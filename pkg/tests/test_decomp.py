import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evohom.decomp import (GaussFactors, check_compatibility, congruence_residual,
                           diagonalize_thm_final, four_block, gauss_transform,
                           invert_degenerate_hat, invert_regular)
from evohom.errors import RangeChanged, StructureViolation
from evohom.linalg import adjoint, max_principal_angle, range_basis
from evohom.mlaw import MaterialLaw
from evohom.models.random import random_block_law, random_gauss_factors, random_periodic_sequence


def _diag_law(*mats, eps=2.0):
    return MaterialLaw.from_list([np.diag(m) for m in mats], eps=eps)


def test_four_block_diagonal():
    m = _diag_law([1.0, 0, 2.0, 0], [0, 1.0, 0, 1.0])
    dec = four_block(m, 2)
    assert dec.sizes == (1, 1, 1, 1)
    for g, e in zip((dec.g1, dec.g2, dec.g3, dec.g4), range(4)):
        assert g.shape[1] == 1
        assert abs(abs(g[e % 2, 0]) - 1) < 1e-12


def test_four_block_heat_like():
    m = _diag_law([1.0, 0.0], [0.0, 0.75])
    dec = four_block(m, 1)
    assert dec.sizes == (1, 0, 0, 1)


def test_four_block_coupled_positivity():
    m0 = np.zeros((3, 3))
    m0[:2, :2] = [[2.0, 1.0], [1.0, 1.0]]
    m1 = np.diag([0.0, 0.0, 1.0])
    dec = four_block(MaterialLaw.from_list([m0, m1], eps=2.0), 2)
    assert dec.sizes == (2, 0, 0, 1)
    assert dec.d == pytest.approx((3 - np.sqrt(5)) / 2)


def test_invert_regular_decoupled():
    m = _diag_law([1.0, 0.0], [0.0, 1.0])
    inv = invert_regular(m, split=1)
    assert np.allclose(inv.pole, np.diag([0.0, 1.0]))
    assert np.allclose(inv.coeffs[0], np.diag([1.0, 0.0]))
    assert np.allclose(inv.coeffs[1:], 0)


def test_invert_regular_symbolic_2x2():
    m = MaterialLaw.from_list([np.diag([2.0, 0.0]), np.array([[0.0, 1.0], [1.0, 1.0]])],
                              eps=1.0)
    inv = invert_regular(m, split=1, order=6)
    geo = np.array([0.5 ** (k + 1) for k in range(7)])  # (2 - z)^-1
    assert np.allclose(inv.coeffs[:, 0, 0], geo)
    assert np.allclose(inv.coeffs[:, 0, 1], -geo)
    assert np.allclose(inv.coeffs[:, 1, 1], geo)
    assert inv.pole[1, 1] == pytest.approx(1.0)
    assert np.allclose(inv.pole[0], 0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_invert_regular_residual(seed):
    rng = np.random.default_rng(seed)
    m = MaterialLaw.from_list(
        [np.diag([1.0, 2.0, 0.0, 0.0]),
         np.eye(4) + 0.2 * rng.standard_normal((4, 4))], eps=1.0)
    inv = invert_regular(m, split=2, order=12)
    rad = inv.eps / 8
    for phi in rng.uniform(0, 2 * np.pi, 50):
        z = rad * np.exp(1j * phi)
        assert np.allclose(m.evaluate(z) @ inv.evaluate(z), np.eye(4), atol=1e-9)


def test_invert_degenerate_hat_trivial():
    hat = MaterialLaw(np.array([np.diag([1.0, 0.0])]), eps=2.0, pole=np.diag([0.0, 1.0]))
    inv = invert_degenerate_hat(hat, split=1, order=1)
    assert np.allclose(inv.coeffs[0], np.diag([1.0, 0.0]))
    assert np.allclose(inv.coeffs[1], np.diag([0.0, 1.0]))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_roundtrip_invert_twice(seed):
    rng = np.random.default_rng(seed)
    law, _, u = random_block_law(rng, (2, 2, 2, 2), order=4, eps=2.0)
    g = law.conjugate_by(u)
    # G-coordinates ordered (G1, G3 | G2, G4): leading block is R(M(0))
    perm = np.r_[0:2, 4:6, 2:4, 6:8]
    mg = MaterialLaw(g.coeffs[:, perm][:, :, perm], g.eps)
    inv = invert_regular(mg, split=4)
    back = invert_degenerate_hat(inv, split=4, order=mg.order)
    assert np.allclose(back.coeffs, mg.coeffs, atol=1e-9)


def test_invert_degenerate_hat_leading_coefficient():
    rng = np.random.default_rng(5)
    m22 = np.eye(2) + 0.3 * rng.standard_normal((2, 2))
    c = np.zeros((3, 3, 3), dtype=complex)
    c[0, 0, 0] = 2.0
    c[0, 1:, 1:] = 0.0
    c[1, 1:, 1:] = 0.1 * rng.standard_normal((2, 2))
    hat = MaterialLaw(c, eps=2.0, pole=np.pad(m22, ((1, 0), (1, 0))))
    inv = invert_degenerate_hat(hat, split=1)
    assert np.allclose(inv.coeffs[0, 1:, 1:], 0)
    assert np.allclose(inv.coeffs[1, 1:, 1:], np.linalg.inv(m22))


def test_gauss_identity_factors():
    rng = np.random.default_rng(0)
    law, split, _ = random_block_law(rng, (1, 1, 1, 1), order=2, eps=2.0)
    res = gauss_transform(law, GaussFactors.identity(law.dim, split))
    dec = four_block(law, split)
    assert np.allclose(res.law.coeffs, law.coeffs)
    assert res.d_prime == pytest.approx(dec.d)
    assert res.c_prime == pytest.approx(dec.c_prime)


def test_gauss_eliminates_13_block():
    m0 = np.diag([1.0, 0.0, 2.0, 0.0])
    m0[0, 2] = m0[2, 0] = 0.5
    m = MaterialLaw.from_list([m0, np.diag([0.0, 1.0, 0.0, 1.0])], eps=2.0)
    n1 = np.zeros((1, 2, 2))
    n1[0, 0, 0] = -0.5 / 2.0
    f = GaussFactors(n1, np.transpose(n1, (0, 2, 1)).copy())
    res = gauss_transform(m, f)
    assert abs(res.law.coeffs[0, 0, 2]) < 1e-15
    assert abs(res.law.coeffs[0, 2, 0]) < 1e-15
    assert congruence_residual(m, res.law, f) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_gauss_congruence_and_range(seed):
    rng = np.random.default_rng(seed)
    law, split, _ = random_block_law(rng, (1, 2, 2, 1), order=3, eps=2.0)
    dec = four_block(law, split)
    f = random_gauss_factors(rng, dec)
    res = gauss_transform(law, f, dec)
    assert congruence_residual(law, res.law, f) < 1e-10
    angle = max_principal_angle(range_basis(res.law.coeffs[0]), range_basis(law.coeffs[0]))
    assert angle < 1e-8


def test_gauss_rejects_bad_structure():
    rng = np.random.default_rng(2)
    law, split, _ = random_block_law(rng, (1, 1, 1, 1), order=2, eps=2.0)
    dec = four_block(law, split)
    f = random_gauss_factors(rng, dec)
    n1 = f.n1.copy()
    n1[0] += 0.5 * dec.g2 @ adjoint(dec.g3)
    with pytest.raises((StructureViolation, RangeChanged)):
        gauss_transform(law, GaussFactors(n1, f.n1p), dec)


def test_compatibility_hermitian_zero():
    rng = np.random.default_rng(4)
    law, split, _ = random_block_law(rng, (1, 1, 1, 2), order=2, eps=2.0)
    assert check_compatibility(law, four_block(law, split)) < 1e-12


def test_compatibility_injective_a():
    law = _diag_law([1.0, 2.0], [1.0, 1.0])
    assert check_compatibility(law, four_block(law, 1)) == 0.0


def test_compatibility_direct_formula():
    rng = np.random.default_rng(6)
    m1 = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)) + 3 * np.eye(4)
    law = MaterialLaw.from_list([np.diag([1.0, 0.0, 1.0, 0.0]), m1], eps=2.0)
    dec = four_block(law, 2)
    r = check_compatibility(law, dec)
    mg = dec.to_g(m1)
    inv44 = 1 / dec.block(mg, 4, 4)
    direct = np.abs(dec.block(mg, 2, 4) * inv44 - np.conj(inv44 * dec.block(mg, 4, 2)))
    assert r > 0
    assert r == pytest.approx(float(direct.max()))


def test_diagonalize_constant_block_diagonal():
    law = _diag_law([1.0, 0.0, 2.0, 0.0], [0.0, 1.0, 0.0, 3.0])
    out = diagonalize_thm_final([law] * 4, 2)
    assert np.allclose(out.factors.n1, 0)
    assert np.allclose(out.factors.n1p, 0)
    assert np.allclose(out.law.coeffs[:, :2, 2:], 0)


def test_diagonalize_alternating_sequence():
    rng = np.random.default_rng(11)
    laws, split = random_periodic_sequence(rng, (1, 1, 1, 1), 8, order=3, eps=2.0)
    out = diagonalize_thm_final(laws, split)
    lim = laws[1]  # n = 2 member of the even cluster
    mt = out.law
    s = split
    assert np.allclose(mt.coeffs[0, :s, s:], 0, atol=1e-8)
    angle = max_principal_angle(range_basis(mt.coeffs[0]), range_basis(lim.coeffs[0]))
    assert angle < 1e-8
    assert out.certificate.r > 0
