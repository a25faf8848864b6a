import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evohom.errors import EvalOutsideDisc, NoConvergence, NotPSD, NotSelfadjoint
from evohom.mlaw import (MaterialLaw, certify, check_zero_order, coeff_bound, evaluate,
                         joint_series_limit, load_law, multiply, sample_positivity, save_law,
                         series_inverse, series_limit, tail_bound)
from evohom.mlaw.positivity import (PositivityCertificate, _split_min_eig,
                                     certify_constants)
from evohom.models.random import random_block_law


def test_evaluate_constant():
    c = np.array([[1.0, 2.0], [3.0, 4.0]])
    m = MaterialLaw.constant(c, eps=1.0)
    assert np.allclose(evaluate(m, 0.3), c)


def test_evaluate_zeroth_coefficient():
    b = np.array([[0.0, 1.0], [1.0, 0.0]])
    m = MaterialLaw.from_list([np.eye(2), b], eps=1.0)
    assert np.allclose(evaluate(m, 0), np.eye(2))


def test_evaluate_pole():
    m = MaterialLaw(np.zeros((1, 1, 1)), eps=1.0, pole=np.array([[2.0]]))
    assert np.isclose(evaluate(m, 0.5)[0, 0], 4.0)


def test_evaluate_outside_disc():
    m = MaterialLaw.constant(np.eye(2), eps=1.0)
    with pytest.raises(EvalOutsideDisc):
        evaluate(m, 1.5)


def test_coeff_bound_examples():
    m = MaterialLaw.constant(np.eye(1), eps=1.0, order=3)
    assert m.sup_bound == pytest.approx(1.0)
    assert coeff_bound(m, 3) == pytest.approx(8.0)
    assert np.linalg.norm(m.coeffs[3]) <= coeff_bound(m, 3)
    m2 = MaterialLaw.constant(np.eye(1), eps=4.0, order=2)
    m2 = MaterialLaw(m2.coeffs, 4.0, sup_bound=2.0)
    assert coeff_bound(m2, 2) == pytest.approx(0.5)


def test_coeff_bound_geometric_series():
    # 1/(1-z) on |z| < 1/2 has sup 2, coefficients 1
    m = MaterialLaw(np.ones((9, 1, 1)), eps=0.5, sup_bound=2.0)
    for n in range(9):
        assert abs(m.coeffs[n, 0, 0]) <= coeff_bound(m, n)


@pytest.mark.parametrize("sup,eps,k,expected", [
    (1.0, 2.0, 0, 2.0),
    (1.0, 2.0, 4, 2.0),
    (3.0, 6.0, 2, 2.0 / 3.0),
])
def test_tail_bound(sup, eps, k, expected):
    m = MaterialLaw(np.ones((1, 1, 1)), eps, sup_bound=sup)
    assert tail_bound(m, k) == pytest.approx(expected)


def test_check_zero_order_diagonal():
    m = MaterialLaw.from_list([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], eps=2.0)
    z = check_zero_order(m)
    assert z.selfadjoint and z.psd
    assert z.d == pytest.approx(1.0)
    assert z.c_prime == pytest.approx(1.0)
    assert z.null_basis.shape == (2, 1)
    assert abs(abs(z.null_basis[1, 0]) - 1) < 1e-12


def test_check_zero_order_heat():
    k = 4.0 / 3.0
    m = MaterialLaw.from_list([np.diag([1.0, 0.0]), np.diag([0.0, 1 / k])], eps=2.0)
    z = check_zero_order(m)
    assert z.d == pytest.approx(1.0)
    assert z.c_prime == pytest.approx(0.75)


def test_check_zero_order_coupled():
    m0 = np.array([[1.0, 1j], [-1j, 1.0]])
    m = MaterialLaw.from_list([m0, np.eye(2)], eps=2.0)
    z = check_zero_order(m)
    assert z.selfadjoint and z.psd
    assert z.d == pytest.approx(2.0)
    v = z.null_basis[:, 0]
    assert np.allclose(m0 @ v, 0, atol=1e-12)
    assert abs(abs(v[1] / v[0]) - 1) < 1e-12


def test_check_zero_order_rejects():
    with pytest.raises(NotSelfadjoint):
        check_zero_order(MaterialLaw.constant(np.array([[1.0, 1.0], [0.0, 1.0]])))
    with pytest.raises(NotPSD):
        check_zero_order(MaterialLaw.constant(-np.eye(2)))


def test_certify_worked_constants():
    m = MaterialLaw.from_list([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], eps=2.0,
                              sup_bound=1.0)
    cert = certify(m, c=1.0, d=1.0)
    assert cert.nu1 == pytest.approx(14 / 3, rel=1e-15)
    assert cert.delta_hat == pytest.approx(1 / 6, rel=1e-15)
    assert cert.r == pytest.approx(1 / 12, rel=1e-15)
    assert cert.c_out == pytest.approx(1 / 3, rel=1e-15)
    assert sample_positivity(m, cert)


def test_certify_constants_second_example():
    nu1, dh, r = certify_constants(3.0, 1.0, 4.0, 1.0)
    m = MaterialLaw.from_list([np.diag([1.0, 0.0]), np.diag([0.0, 3.0])], eps=4.0,
                              sup_bound=1.0)
    cert = certify(m, c=3.0, d=1.0)
    assert (cert.nu1, cert.delta_hat, cert.r) == pytest.approx((nu1, dh, r))
    assert sample_positivity(m, cert, num_samples=10_000)


def test_certify_constant_spd():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 3))
    m = MaterialLaw.constant(x @ x.T + np.eye(3), eps=1.0)
    cert = certify(m)
    assert sample_positivity(m, cert)


def test_sample_positivity_identity_and_negative():
    m = MaterialLaw.constant(np.eye(2), eps=1.0)
    cert = certify(m)
    assert sample_positivity(m, cert)
    neg = MaterialLaw.constant(-np.eye(2), eps=1.0)
    assert not sample_positivity(neg, cert)


def test_sample_positivity_split_matches_dense():
    # a radius where the dense eigenvalue solve is still accurate
    rng = np.random.default_rng(4)
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    m0 = np.diag([2.0, 1.0, 0.0])
    m = MaterialLaw.from_list([m0, x, np.eye(3)], eps=4.0)
    cert = PositivityCertificate(1.0, 1.0, 4.0, 1.0, 1.0, 1.0, 0.4, -100.0)
    got = sample_positivity(m, cert, num_samples=500, rng_seed=2)
    r = cert.r
    rr = np.random.default_rng(2)
    rad = r * np.sqrt(rr.uniform(size=500))
    zs = r + rad * np.exp(2j * np.pi * rr.uniform(size=500))
    h = m.evaluate_many(zs) / zs[:, None, None]
    dense = np.linalg.eigvalsh(0.5 * (h + np.conj(np.swapaxes(h, 1, 2))))[:, 0].min()
    assert got.min_value == pytest.approx(dense, rel=1e-9)
    tight = PositivityCertificate(1.0, 1.0, 4.0, 1.0, 1.0, 1.0, 0.4, dense + 1e-3)
    assert not sample_positivity(m, tight, num_samples=500, rng_seed=2)


def test_split_min_eig_matches_dense():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((40, 4, 4)) + 1j * rng.standard_normal((40, 4, 4))
    h = 0.5 * (x + np.conj(np.swapaxes(x, 1, 2)))
    h[:, 0, 0] += 1e5
    h[:, 1, 1] += 3e5
    on = np.array([True, True, False, False])
    dense = np.linalg.eigvalsh(h)[:, 0]
    assert np.allclose(_split_min_eig(h, on), dense, rtol=0, atol=1e-9)


def test_series_limit_constant():
    m = MaterialLaw.from_list([np.eye(2), np.ones((2, 2))], eps=1.0)
    lim = series_limit([m] * 5)
    assert np.allclose(lim.coeffs, m.coeffs)


def test_series_limit_one_over_n():
    laws = [MaterialLaw.constant((1 + 1 / n) * np.eye(2), eps=1.0) for n in range(1, 40)]
    lim = series_limit(laws)
    assert np.allclose(lim.coeffs[0], np.eye(2), atol=1e-8)


def test_series_limit_alternating():
    laws = [MaterialLaw.constant(np.array([[1.0 if n % 2 else 2.0]])) for n in range(1, 11)]
    with pytest.raises(NoConvergence) as info:
        series_limit(laws)
    vals = sorted(float(np.real(c.coeffs[0, 0, 0])) for c in info.value.clusters)
    assert vals == pytest.approx([1.0, 2.0])
    lim = series_limit(laws, allow_subsequence=True)
    assert lim.coeffs[0, 0, 0] == pytest.approx(2.0)


def test_joint_series_limit_shares_subsequence():
    a = [MaterialLaw.constant(np.array([[1.0 if n % 2 else 2.0]])) for n in range(1, 9)]
    b = [MaterialLaw.constant(np.array([[5.0 if n % 2 else 7.0]])) for n in range(1, 9)]
    la, lb = joint_series_limit([a, b], allow_subsequence=True)
    assert la.coeffs[0, 0, 0] == pytest.approx(2.0)
    assert lb.coeffs[0, 0, 0] == pytest.approx(7.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_series_inverse_roundtrip(seed):
    rng = np.random.default_rng(seed)
    c = 0.3 * rng.standard_normal((5, 3, 3))
    c[0] += 2 * np.eye(3)
    inv = series_inverse(c)
    m = MaterialLaw(c, eps=0.2)
    mi = MaterialLaw(inv, eps=0.2)
    prod = multiply(m, mi, order=4)
    assert np.allclose(prod.coeffs[0], np.eye(3), atol=1e-12)
    assert np.allclose(prod.coeffs[1:], 0, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_certificate_sampling_random_laws(seed):
    rng = np.random.default_rng(seed)
    sizes = tuple(int(x) for x in rng.integers(0, 3, 4))
    if sum(sizes) == 0:
        sizes = (1, 1, 0, 0)
    law, _, _ = random_block_law(rng, sizes, order=3, eps=2.0)
    cert = certify(law)
    s = sample_positivity(law, cert, num_samples=2000, rng_seed=seed)
    assert s.min_value >= cert.c_out - 1e-9


def test_law_json_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    law, _, _ = random_block_law(rng, (1, 1, 1, 1), order=2, eps=2.0)
    path = tmp_path / "law.json"
    save_law(law, path)
    back = load_law(path)
    assert np.array_equal(back.coeffs, law.coeffs)
    assert back.eps == law.eps
    pole = MaterialLaw(np.zeros((1, 2, 2)), 1.0, pole=np.diag([0.0, 1.0]))
    save_law(pole, path)
    assert np.array_equal(load_law(path).pole, pole.pole)
