"""The induced connection on Sigma_mu0 and the reduced connection on the orbit space.

Two kinds of vector fields appear here:

* :class:`~sympred.polyfield.PolyField` ambient fields.  ``tangent_field``
  turns any polynomial field V into ``H V - omega(V, Ax) x``, which is tangent
  to every level set of H, so brackets and derivatives stay polynomial.
* horizontal lifts of fields on the quotient: plain callables ``x -> vector``
  that must accept complex input.  Their derivatives are taken by complex-step
  differentiation, which has no subtractive cancellation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NotALiftError, NotHorizontalError, NotTangentError
from .polyfield import PolyField
from .quadric import (
    Quadric,
    QuadricPoint,
    TangentVector,
    coords,
    horizontal_part,
    horizontal_residual,
)

TANGENT_TOL = 1e-10
LIFT_TOL = 1e-9
COMPLEX_STEP = 1e-30

Field = Callable[[np.ndarray], np.ndarray]


# --------------------------------------------------------------------------
# polynomial fields on the ambient space

def identity_field(d: int) -> PolyField:
    return PolyField.linear(np.eye(d))


def hamiltonian_polyfield(q: Quadric) -> PolyField:
    """X_H as the linear field x -> -2 A x."""
    return PolyField.linear(-2.0 * q.A)


def hamiltonian_function(q: Quadric) -> PolyField:
    """H(x) = omega(x, Ax) = x^T (Omega A) x."""
    return PolyField.quadratic_form(q.space.omega @ q.A)


def tangent_field(q: Quadric, V: PolyField) -> PolyField:
    """H V - omega(V, Ax) x: tangent to every level set of H.

    On Sigma_mu0 this is mu0 times the projection of V along the radial direction.
    """
    x = identity_field(q.dim)
    H = hamiltonian_function(q)
    w = V.dot(x, q.space.omega @ q.A)
    return H * V - w * x


def random_tangent_field(q: Quadric, rng: np.random.Generator, scale: float = 1.0, degree: int = 2) -> PolyField:
    """Random tangent field of the given total degree.

    Degree 2 projects a random constant field, degree 3 a random affine one.
    On Sigma the degree-2 family already realises every tangent vector at every point.
    """
    d = q.dim
    if degree == 2:
        V = PolyField.constant_field(d, rng.standard_normal(d) * scale)
    elif degree == 3:
        V = PolyField.linear(rng.standard_normal((d, d)) * scale, rng.standard_normal(d) * scale)
    else:
        raise ValueError("degree must be 2 or 3")
    return tangent_field(q, V)


def flat_derivative(Z: PolyField, x, y) -> np.ndarray:
    """Directional derivative of Z at x along y for the flat connection."""
    return Z.directional(coords(x), y)


def tangency_residual(q: Quadric, x, v) -> float:
    xx = coords(x)
    Ax = q.A @ xx
    nv = np.linalg.norm(v)
    if nv == 0:
        return 0.0
    return float(abs(q.omega(v, Ax)) / (nv * max(np.linalg.norm(Ax), 1e-300)))


def require_tangent(q: Quadric, x, v, tol: float = TANGENT_TOL, what: str = "vector") -> None:
    r = tangency_residual(q, x, v)
    if r > tol:
        raise NotTangentError(f"{what} is not tangent to the quadric: residual {r:.3e}")


@dataclass(frozen=True)
class ConnectionValue:
    base: QuadricPoint
    value: TangentVector
    flat: np.ndarray
    correction: np.ndarray
    tangency_residual: float


def connection_field(q: Quadric, Y: PolyField, Z: PolyField) -> PolyField:
    """nabla_Y Z = D_Y Z + (1/mu0) omega(Z, AY) x as a polynomial field."""
    x = identity_field(q.dim)
    corr = Z.dot(Y, q.space.omega @ q.A)
    return Z.derivative_along(Y) + (corr * x).scale(1.0 / q.mu0)


def sigma_connection(q: Quadric, Y: PolyField, Z: PolyField, x) -> ConnectionValue:
    """Value of the induced connection (nabla_Y Z)(x) on Sigma_mu0."""
    pt = x if isinstance(x, QuadricPoint) else QuadricPoint(np.asarray(x, float), 0.0)
    xx = pt.x
    y, z = Y(xx), Z(xx)
    require_tangent(q, xx, y, what="Y(x)")
    require_tangent(q, xx, z, what="Z(x)")
    flat = Z.directional(xx, y)
    corr = (q.omega(z, q.A @ y) / q.mu0) * xx
    val = flat + corr
    return ConnectionValue(
        base=pt,
        value=TangentVector(base=pt, v=val),
        flat=flat,
        correction=corr,
        tangency_residual=float(abs(q.omega(val, q.A @ xx))),
    )


def torsion_residual(q: Quadric, Y: PolyField, Z: PolyField, x) -> float:
    """|nabla_Y Z - nabla_Z Y - [Y, Z]| at x."""
    xx = coords(x)
    a = sigma_connection(q, Y, Z, xx).value.v
    b = sigma_connection(q, Z, Y, xx).value.v
    br = Y.bracket(Z)(xx)
    return float(np.max(np.abs(a - b - br)))


def geodesic_defect(q: Quadric, x) -> float:
    """|A^2 x + (1/mu0) omega(Ax, A^2 x) x|, a quarter of |nabla_{X_H} X_H|."""
    xx = coords(x)
    Ax = q.A @ xx
    A2x = q.A @ Ax
    return float(np.linalg.norm(A2x + (q.omega(Ax, A2x) / q.mu0) * xx))


def affine_defect(q: Quadric, Y: PolyField, Z: PolyField, x) -> float:
    """|[X_H, nabla_Y Z] - nabla_{[X_H, Y]} Z - nabla_Y [X_H, Z]| at x, exact in polynomials."""
    xx = coords(x)
    XH = hamiltonian_polyfield(q)
    for name, F in (("Y", Y), ("Z", Z)):
        require_tangent(q, xx, F(xx), what=f"{name}(x)")
    lhs = XH.bracket(connection_field(q, Y, Z))(xx)
    XY = XH.bracket(Y)
    XZ = XH.bracket(Z)
    rhs = sigma_connection(q, XY, Z, xx).value.v + sigma_connection(q, Y, XZ, xx).value.v
    return float(np.linalg.norm(lhs - rhs))


# --------------------------------------------------------------------------
# horizontal lifts and the reduced connection

def complex_step(f: Field, x, v, h: float = COMPLEX_STEP) -> np.ndarray:
    """Derivative of f at x along v from Im f(x + i h v) / h."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0:
        return np.zeros_like(np.real(f(x.astype(complex))))
    s = h / nv
    return np.imag(f(x + 1j * s * v)) / s


def invariance_residual(q: Quadric, F: Field, x) -> float:
    """|[X_H, F](x)| relative to |F(x)|, zero for psi-invariant fields."""
    xx = coords(x)
    fx = np.real(F(xx.astype(complex)))
    br = complex_step(F, xx, -2.0 * q.A @ xx) + 2.0 * q.A @ fx
    return float(np.linalg.norm(br) / max(np.linalg.norm(fx), 1e-300))


def _eval(F: Field, x) -> np.ndarray:
    return np.real(F(np.asarray(x, dtype=float).astype(complex)))


def _check_lift(q: Quadric, F: Field, x, name: str, check_invariance: bool) -> np.ndarray:
    v = _eval(F, x)
    r = horizontal_residual(q, x, v)
    if r > LIFT_TOL:
        raise NotALiftError(f"{name} is not horizontal at x: residual {r:.3e}")
    if check_invariance:
        r = invariance_residual(q, F, x)
        if r > LIFT_TOL:
            raise NotALiftError(f"{name} is not invariant under the flow: residual {r:.3e}")
    return v


@dataclass(frozen=True)
class ReducedValue:
    """Lift of nabla^r_Y Z at x plus diagnostics."""

    value: np.ndarray
    ambient: np.ndarray
    horizontal_residual: float


def reduced_connection(q: Quadric, Y: Field, Z: Field, x, check: bool = True) -> ReducedValue:
    """Lift of nabla^r_Y Z: nabla_{Ybar} Zbar + (1/mu0) omega(Ybar, Zbar) Ax."""
    xx = coords(x)
    y = _check_lift(q, Y, xx, "Y", check) if check else _eval(Y, xx)
    z = _check_lift(q, Z, xx, "Z", check) if check else _eval(Z, xx)
    Ax = q.A @ xx
    nab = complex_step(Z, xx, y) + (q.omega(z, q.A @ y) / q.mu0) * xx
    val = nab + (q.omega(y, z) / q.mu0) * Ax
    return ReducedValue(value=val, ambient=nab, horizontal_residual=horizontal_residual(q, xx, val))


def reduced_form(q: Quadric, x, Y, Z, tol: float = LIFT_TOL) -> float:
    """Omega_y(Y, Z) = omega_x(Ybar, Zbar) for horizontal vectors at x."""
    xx = coords(x)
    y = getattr(Y, "v", Y)
    z = getattr(Z, "v", Z)
    for name, v in (("Y", y), ("Z", z)):
        r = horizontal_residual(q, xx, v)
        if r > tol:
            raise NotHorizontalError(f"{name} is not horizontal at x: residual {r:.3e}")
    return float(q.omega(y, z))


@dataclass(frozen=True)
class LiftBracket:
    """Horizontal part of [Ybar, Zbar] and the residual of the lift-bracket identity."""

    value: np.ndarray
    raw: np.ndarray
    identity_residual: float


def lift_bracket(q: Quadric, Y: Field, Z: Field, x) -> LiftBracket:
    """[Ybar, Zbar] + (2/mu0) omega(Ybar, Zbar) Ax, compared against the projection of [Ybar, Zbar]."""
    xx = coords(x)
    y, z = _eval(Y, xx), _eval(Z, xx)
    raw = complex_step(Z, xx, y) - complex_step(Y, xx, z)
    val = raw + (2.0 / q.mu0) * q.omega(y, z) * (q.A @ xx)
    proj = horizontal_part(q, xx, raw)
    return LiftBracket(value=val, raw=raw, identity_residual=float(np.max(np.abs(val - proj))))


def vertical_residual(q: Quadric, Y: Field, Z: Field, x) -> float:
    """|omega(nabla_{Ybar} Zbar, x) + omega(Zbar, Ybar)|."""
    xx = coords(x)
    r = reduced_connection(q, Y, Z, xx, check=False)
    y, z = _eval(Y, xx), _eval(Z, xx)
    return float(abs(q.omega(r.ambient, xx) + q.omega(z, y)))


def reduced_torsion(q: Quadric, Y: Field, Z: Field, x, bracket_lift=None) -> float:
    """|lift(nabla^r_Y Z - nabla^r_Z Y - [Y, Z])|.

    ``bracket_lift`` is the lift of the quotient bracket when known independently
    (e.g. from chart coordinates); otherwise the lift-bracket identity supplies it.
    """
    xx = coords(x)
    a = reduced_connection(q, Y, Z, xx).value
    b = reduced_connection(q, Z, Y, xx).value
    if bracket_lift is None:
        bracket_lift = lift_bracket(q, Y, Z, xx).value
    return float(np.max(np.abs(a - b - bracket_lift)))


def parallelism_residual(q: Quadric, X: Field, Y: Field, Z: Field, x) -> float:
    """|X Omega(Y, Z) - Omega(nabla^r_X Y, Z) - Omega(Y, nabla^r_X Z)|."""
    xx = coords(x)
    xv, yv, zv = _eval(X, xx), _eval(Y, xx), _eval(Z, xx)

    def omega_yz(p):
        return q.omega(Y(p), Z(p))

    lhs = complex_step(omega_yz, xx, xv)
    r1 = reduced_connection(q, X, Y, xx).value
    r2 = reduced_connection(q, X, Z, xx).value
    return float(abs(lhs - q.omega(r1, zv) - q.omega(yv, r2)))


@dataclass(frozen=True)
class FrameResiduals:
    """Reduced-connection identities over all pairs/triples of a lifted frame at one point."""

    torsion: float
    parallelism: float
    lift_bracket: float
    vertical: float
    horizontality: float


def frame_residuals(q: Quadric, fields, x, bracket_lifts=None) -> FrameResiduals:
    """Torsion, Omega-parallelism, lift-bracket and horizontality checks for a list of lifts.

    One complex-step derivative D[i][j] = D_{F_i} F_j(x) per ordered pair is
    shared by every identity.  ``bracket_lifts[i][j]`` is the independently known
    lift of the quotient bracket (zeros for coordinate frames); when omitted the
    torsion check falls back to the lift-bracket identity.
    """
    xx = coords(x)
    m = len(fields)
    vals = [_check_lift(q, F, xx, f"field {k}", True) for k, F in enumerate(fields)]
    Ax = q.A @ xx
    D = [[complex_step(fields[j], xx, vals[i]) for j in range(m)] for i in range(m)]
    red = [[None] * m for _ in range(m)]
    vert = horiz = 0.0
    for i in range(m):
        for j in range(m):
            y, z = vals[i], vals[j]
            nab = D[i][j] + (q.omega(z, q.A @ y) / q.mu0) * xx
            vert = max(vert, float(abs(q.omega(nab, xx) + q.omega(z, y))))
            red[i][j] = nab + (q.omega(y, z) / q.mu0) * Ax
            horiz = max(horiz, float(np.max(np.abs(red[i][j] - horizontal_part(q, xx, red[i][j])))))
    tors = brk = par = 0.0
    for i in range(m):
        for j in range(m):
            raw = D[i][j] - D[j][i]
            lb = raw + (2.0 / q.mu0) * q.omega(vals[i], vals[j]) * Ax
            brk = max(brk, float(np.max(np.abs(lb - horizontal_part(q, xx, raw)))))
            target = lb if bracket_lifts is None else bracket_lifts[i][j]
            tors = max(tors, float(np.max(np.abs(red[i][j] - red[j][i] - target))))
            for k in range(m):
                # X Omega(Y, Z) with omega constant: omega(D_X Y, Z) + omega(Y, D_X Z)
                lhs = q.omega(D[i][j], vals[k]) + q.omega(vals[j], D[i][k])
                rhs = q.omega(red[i][j], vals[k]) + q.omega(vals[j], red[i][k])
                par = max(par, float(abs(lhs - rhs)))
    return FrameResiduals(torsion=tors, parallelism=par, lift_bracket=brk, vertical=vert, horizontality=horiz)
