import numpy as np
import pytest

from sympred.chart import LiftedField, coordinate_frame, make_chart
from sympred.connection import (
    complex_step,
    connection_field,
    frame_residuals,
    geodesic_defect,
    hamiltonian_polyfield,
    identity_field,
    invariance_residual,
    lift_bracket,
    parallelism_residual,
    random_tangent_field,
    reduced_connection,
    reduced_form,
    reduced_torsion,
    sigma_connection,
    torsion_residual,
    affine_defect,
    vertical_residual,
)
from sympred.errors import NotALiftError, NotHorizontalError, NotTangentError
from sympred.polyfield import PolyField
from sympred.quadric import Quadric, flow, flow_matrix, horizontal_part, sample_point
from sympred.symplectic import make_case_minus_id, make_case_nilpotent, make_case_plus_id, make_remark

FAMILIES = {
    "case1": lambda n=1: Quadric(make_case_minus_id(n, n + 1), 1.0),
    "case2": lambda n=1: Quadric(make_case_plus_id(n), -2.0),
    "case3": lambda n=1: Quadric(make_case_nilpotent(n, 2, 1), 1.0),
    "remark": lambda n=1: Quadric(make_remark(1, 1), 1.0),
}


@pytest.fixture(params=sorted(FAMILIES))
def q(request):
    return FAMILIES[request.param]()


def fields(q, seed, k=2, degree=2):
    rng = np.random.default_rng(seed)
    return [random_tangent_field(q, rng, degree=degree) for _ in range(k)]


def test_tangent_fields_are_tangent_everywhere(q):
    Y = fields(q, 0, 1, degree=3)[0]
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.standard_normal(q.dim)  # off the quadric too
        assert abs(q.omega(Y(x), q.A @ x)) <= 1e-12 * (1 + np.linalg.norm(x)) ** 4


def test_connection_output_is_tangent(q):
    Y, Z = fields(q, 2)
    for i in range(5):
        x = sample_point(q, 2, i).x
        cv = sigma_connection(q, Y, Z, x)
        assert cv.tangency_residual <= 1e-10 * (1 + np.linalg.norm(cv.value.v))
        assert np.allclose(cv.value.v, cv.flat + cv.correction)


def test_sigma_connection_rejects_non_tangent():
    q = FAMILIES["case1"]()
    x = sample_point(q, 0).x
    with pytest.raises(NotTangentError):
        sigma_connection(q, identity_field(q.dim), identity_field(q.dim), x)


@pytest.mark.parametrize("degree", [2, 3])
def test_torsion_free(q, degree):
    for k in range(5):
        Y, Z = fields(q, 10 + k, degree=degree)
        for i in range(4):
            assert torsion_residual(q, Y, Z, sample_point(q, 3, i)) <= 1e-10


def test_connection_field_matches_pointwise(q):
    Y, Z = fields(q, 4)
    x = sample_point(q, 4).x
    assert np.allclose(connection_field(q, Y, Z)(x), sigma_connection(q, Y, Z, x).value.v, atol=1e-12)


def test_flat_derivative_matches_complex_step(q):
    Y, Z = fields(q, 5)
    x = sample_point(q, 5).x
    y = Y(x)
    assert np.allclose(Z.directional(x, y), complex_step(Z, x, y), rtol=1e-12, atol=1e-12)


def test_hamiltonian_field_geodesic_for_minus_id():
    q = Quadric(make_case_minus_id(2, 3), 1.0)
    XH = hamiltonian_polyfield(q)
    for i in range(5):
        x = sample_point(q, 6, i).x
        assert np.linalg.norm(sigma_connection(q, XH, XH, x).value.v) <= 1e-12
        assert geodesic_defect(q, x) <= 1e-12


def test_geodesic_defect_is_quarter_of_covariant_derivative(q):
    XH = hamiltonian_polyfield(q)
    x = sample_point(q, 7).x
    nab = sigma_connection(q, XH, XH, x).value.v
    assert np.linalg.norm(nab) / 4.0 == pytest.approx(geodesic_defect(q, x), rel=1e-12, abs=1e-14)


def test_geodesic_defect_positive_for_remark():
    q = FAMILIES["remark"]()
    vals = [geodesic_defect(q, sample_point(q, 8, i)) for i in range(100)]
    assert np.median(vals) > 1e-3


def test_affine_defect(q):
    XH = hamiltonian_polyfield(q)
    x = sample_point(q, 9).x
    assert affine_defect(q, XH, XH, x) <= 1e-12
    for k in range(4):
        Y, Z = fields(q, 20 + k)
        assert affine_defect(q, Y, Z, x) <= 1e-10
        assert affine_defect(q, Y, Z, sample_point(q, 9, 1)) <= 1e-10


def test_affine_defect_mixed_with_hamiltonian_field(q):
    XH = hamiltonian_polyfield(q)
    (Y,) = fields(q, 40, 1)
    x = sample_point(q, 10).x
    assert affine_defect(q, XH, Y, x) <= 1e-10
    assert affine_defect(q, Y, XH, x) <= 1e-10


# --------------------------------------------------------------------------
# reduced connection on chart lifts

@pytest.fixture(params=sorted(FAMILIES))
def lifted(request):
    q = FAMILIES[request.param]()
    x = sample_point(q, 30).x
    chart = make_chart(q, x)
    frame = coordinate_frame(chart)
    rng = np.random.default_rng(31)
    m = chart.dim
    gen = [
        LiftedField(chart, PolyField.linear(rng.standard_normal((m, m)), rng.standard_normal(m)))
        for _ in range(3)
    ]
    return q, x, chart, frame, gen


def test_lifts_are_horizontal_and_invariant(lifted):
    q, x, chart, frame, gen = lifted
    for F in frame + gen:
        v = F(x)
        assert abs(q.omega(v, x)) <= 1e-12 and abs(q.omega(v, q.A @ x)) <= 1e-12
        assert invariance_residual(q, F, x) <= 1e-9
        # pushed forward along the flow
        y = flow(q, x, 0.05).x
        assert np.allclose(F(y), flow_matrix(q, 0.05) @ v, atol=1e-10)


def test_reduced_connection_is_horizontal(lifted):
    q, x, _, frame, gen = lifted
    for Y in gen:
        for Z in gen:
            r = reduced_connection(q, Y, Z, x)
            assert r.horizontal_residual <= 1e-10


def test_vertical_identity(lifted):
    q, x, _, frame, gen = lifted
    for Y in gen:
        for Z in gen:
            assert vertical_residual(q, Y, Z, x) <= 1e-10


def test_reduced_torsion_and_parallelism(lifted):
    q, x, chart, frame, gen = lifted
    Y, Z, U = gen
    assert reduced_torsion(q, Y, Z, x) <= 1e-9
    # independent bracket: lift of the chart bracket computed downstairs
    br = LiftedField(chart, Y.downstairs_bracket(Z))
    assert reduced_torsion(q, Y, Z, x, bracket_lift=br(x)) <= 1e-9
    assert parallelism_residual(q, Y, Z, U, x) <= 1e-9


def test_lift_bracket_identity(lifted):
    q, x, chart, frame, gen = lifted
    Y, Z, _ = gen
    lb = lift_bracket(q, Y, Z, x)
    assert lb.identity_residual <= 1e-10
    assert np.allclose(lb.value, -lift_bracket(q, Z, Y, x).value, atol=1e-12)
    assert np.allclose(lb.value, LiftedField(chart, Y.downstairs_bracket(Z))(x), atol=1e-9)
    # coordinate lifts commute downstairs: their bracket is vertical
    a, b = frame[0], frame[1]
    raw = lift_bracket(q, a, b, x).raw
    assert np.allclose(raw, -(2.0 / q.mu0) * q.omega(a(x), b(x)) * (q.A @ x), atol=1e-10)


def test_frame_residuals_agree_with_pointwise(lifted):
    q, x, _, frame, _ = lifted
    zero = np.zeros(q.dim)
    fr = frame_residuals(q, frame, x, bracket_lifts=[[zero] * len(frame)] * len(frame))
    assert max(fr.torsion, fr.parallelism, fr.lift_bracket, fr.vertical, fr.horizontality) <= 1e-9
    pw = max(parallelism_residual(q, frame[i], frame[j], frame[k], x)
             for i in range(len(frame)) for j in range(len(frame)) for k in range(len(frame)))
    assert pw <= 1e-9


def test_reduced_connection_rejects_non_lifts(lifted):
    q, x, *_ = lifted
    with pytest.raises(NotALiftError):
        reduced_connection(q, lambda p: p, lambda p: p, x)
    # horizontal but not invariant
    c = np.random.default_rng(0).standard_normal(q.dim)
    with pytest.raises(NotALiftError):
        reduced_connection(q, lambda p: horizontal_part(q, p, c.astype(p.dtype)), lambda p: horizontal_part(q, p, c.astype(p.dtype)), x)


def test_reduced_form(lifted):
    q, x, chart, frame, gen = lifted
    vals = [F(x) for F in frame]
    assert reduced_form(q, x, vals[0], vals[0]) == 0.0
    G = np.array([[reduced_form(q, x, a, b) for b in vals] for a in vals])
    assert abs(np.linalg.det(G)) > 1e-8
    y = flow(q, x, 0.3).x
    for a in frame:
        for b in frame:
            assert abs(reduced_form(q, x, a(x), b(x)) - reduced_form(q, y, a(y), b(y))) <= 1e-9
    with pytest.raises(NotHorizontalError):
        reduced_form(q, x, x, vals[0])
