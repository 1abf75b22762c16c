import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sympred.polyfield import PolyField

seeds = st.integers(min_value=0, max_value=10_000)


def random_field(rng, d, k, terms=6, max_deg=2):
    exps = rng.integers(0, max_deg + 1, size=(terms, d))
    coef = rng.standard_normal((terms, k))
    return PolyField(exps, coef)


def test_constant_linear_coordinate():
    x = np.array([1.0, 2.0, -3.0])
    assert np.array_equal(PolyField.constant_field(3, [1, 2, 3])(x), [1, 2, 3])
    B = np.arange(9.0).reshape(3, 3)
    assert np.allclose(PolyField.linear(B)(x), B @ x)
    assert PolyField.coordinate(3, 2)(x) == -3.0
    S = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
    assert PolyField.quadratic_form(S)(x) == pytest.approx(x @ S @ x)


def test_flat_derivative_examples():
    x = np.array([0.3, -1.0, 2.0, 0.5])
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.array_equal(PolyField.constant_field(4, [1, 1, 1, 1]).directional(x, y), np.zeros(4))
    assert np.allclose(PolyField.linear(np.eye(4)).directional(x, y), y)
    A = np.random.default_rng(0).standard_normal((4, 4))
    assert np.allclose(PolyField.linear(A).directional(x, y), A @ y)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_jacobian_matches_complex_step(seed):
    rng = np.random.default_rng(seed)
    F = random_field(rng, 3, 2, max_deg=3)
    x = rng.standard_normal(3)
    for j in range(3):
        e = np.zeros(3)
        e[j] = 1e-30
        cs = np.imag(F(x + 1j * e)) / 1e-30
        assert np.allclose(F.jacobian(x)[:, j], cs, rtol=1e-12, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_product_and_leibniz(seed):
    rng = np.random.default_rng(seed)
    f = random_field(rng, 3, 1)
    V = random_field(rng, 3, 3)
    Y = random_field(rng, 3, 3)
    x = rng.standard_normal(3)
    assert np.allclose((f * V)(x), f(x) * V(x))
    assert np.allclose((V * f)(x), f(x) * V(x))
    # D_Y (f V) = (D_Y f) V + f D_Y V
    lhs = (f * V).derivative_along(Y)(x)
    rhs = f.derivative_along(Y)(x) * V(x) + f(x) * V.derivative_along(Y)(x)
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_degree_drops_under_differentiation():
    F = PolyField(np.array([[2, 0], [1, 1], [0, 0]]), np.array([1.0, 1.0, 1.0]))
    assert F.degree == 2
    assert F.partial(0).degree == 1
    assert F.partial(0).partial(0).partial(0).degree == 0


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_bracket_is_antisymmetric_and_jacobi(seed):
    rng = np.random.default_rng(seed)
    X, Y, Z = (random_field(rng, 3, 3, terms=4) for _ in range(3))
    x = rng.standard_normal(3)
    assert np.allclose(X.bracket(Y)(x), -Y.bracket(X)(x), atol=1e-10)
    jac = X.bracket(Y.bracket(Z)) + Y.bracket(Z.bracket(X)) + Z.bracket(X.bracket(Y))
    scale = 1 + max(np.abs(X.bracket(Y.bracket(Z))(x)).max(), 1.0)
    assert np.max(np.abs(jac(x))) <= 1e-10 * scale


def test_combine_merges_and_drops_zeros():
    F = PolyField(np.array([[1, 0], [1, 0], [0, 1]]), np.array([[1.0], [-1.0], [2.0]]))
    assert F.exps.shape[0] == 1
    assert (F - F).exps.shape[0] == 0


def test_dot_and_matmul():
    rng = np.random.default_rng(3)
    F, G = random_field(rng, 4, 4), random_field(rng, 4, 4)
    M = rng.standard_normal((4, 4))
    x = rng.standard_normal(4)
    assert F.dot(G, M)(x) == pytest.approx(F(x) @ M @ G(x))
    assert np.allclose(F.matmul(M)(x), M @ F(x))


def test_stack_and_getitem():
    rng = np.random.default_rng(4)
    a, b = random_field(rng, 2, 1), random_field(rng, 2, 2)
    s = PolyField.stack([a, b])
    x = rng.standard_normal(2)
    assert np.allclose(s(x), np.concatenate([[a(x)], b(x)]))
    assert s[2](x) == pytest.approx(b(x)[1])


def test_json_roundtrip():
    rng = np.random.default_rng(5)
    F = random_field(rng, 3, 2)
    doc = F.to_json()
    assert set(doc[0][0]) == {"coords", "coeff"}
    G = PolyField.from_json(doc)
    x = rng.standard_normal(3)
    assert np.allclose(F(x), G(x))
    with pytest.raises(ValueError):
        PolyField.from_json([[{"coords": [1, 0], "coeff": 1.0}, {"coords": [1], "coeff": 1.0}]])


def test_wide_exponents_use_fallback_merge():
    # 12 variables of degree 40 overflow the packed integer key
    e = np.zeros((2, 12), dtype=np.int64)
    e[:, 0] = 40
    F = PolyField(e, np.array([1.0, 2.0]))
    assert F.exps.shape[0] == 1 and F.coef[0, 0] == 3.0
