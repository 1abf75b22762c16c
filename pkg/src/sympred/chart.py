"""Local charts of the orbit space and the finite-difference curvature oracle.

A chart is built from the slice {H = mu0, omega(x, x0) = 0} through a centre
x0.  Coordinates u in R^{2n} are mapped to the slice by

    x = x0 + sum_k u^k h_k + a x0 + b A x0

with (a, b) found by Newton's method.  Points off the slice are first flowed
back onto it, which extends the coordinate frame to psi-invariant horizontal
lifts defined on a neighbourhood of the orbit through x0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .connection import reduced_connection
from .errors import ChartBreakdownError, InvalidInputError
from .polyfield import PolyField
from .quadric import Quadric, coords, hamiltonian, horizontal_basis, horizontal_part


@dataclass(frozen=True)
class Slice:
    q: Quadric
    x0: np.ndarray
    h: np.ndarray = field(repr=False)

    @property
    def transversality(self) -> float:
        """Derivative of omega(x, x0) along X_H at x0; equals 2 mu0."""
        return float(self.q.omega(-2.0 * self.q.A @ self.x0, self.x0))


@dataclass(frozen=True)
class Chart:
    slice: Slice
    radius: float = 1e-1
    newton_tol: float = 1e-13
    newton_max_iter: int = 25

    @property
    def q(self) -> Quadric:
        return self.slice.q

    @property
    def dim(self) -> int:
        return self.slice.h.shape[1]


def make_chart(q: Quadric, x0, basis: str = "orthonormal", **kwargs) -> Chart:
    x0 = np.array(coords(x0), dtype=float)
    x0.setflags(write=False)
    h = horizontal_basis(q, x0, kind=basis)
    h.setflags(write=False)
    return Chart(Slice(q, x0, h), **kwargs)


def _constraints(q: Quadric, x0, x):
    return hamiltonian(q, x) - q.mu0, q.omega(x, x0)


def _constraint_jacobian(q: Quadric, x0, x):
    """d(F1, F2)/d(a, b) at x for x = ... + a x0 + b A x0."""
    Ax0 = q.A @ x0
    Ax = q.A @ x
    return np.array(
        [
            [2.0 * q.omega(x0, Ax), 2.0 * q.omega(Ax0, Ax)],
            [q.omega(x0, x0), q.omega(Ax0, x0)],
        ]
    )


def _solve2(J, r):
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    return np.array([(J[1, 1] * r[0] - J[0, 1] * r[1]) / det, (J[0, 0] * r[1] - J[1, 0] * r[0]) / det]), det


def chart_solve(chart: Chart, u):
    """Newton solve for (a, b); returns (x, iterations, constraint residual).

    Works for complex u so that complex-step derivatives pass through.
    """
    q, x0, h = chart.q, chart.slice.x0, chart.slice.h
    u = np.asarray(u)
    base = x0 + h @ u
    Ax0 = q.A @ x0
    ab = np.zeros(2, dtype=np.result_type(u, float))
    tol = chart.newton_tol * max(1.0, abs(q.mu0))
    polished = not np.iscomplexobj(ab)
    for it in range(chart.newton_max_iter + 1):
        x = base + ab[0] * x0 + ab[1] * Ax0
        F = np.array(_constraints(q, x0, x))
        res = float(np.max(np.abs(np.real(F))))
        if res <= tol:
            if polished:
                return x, it, res
            # one extra step converges the imaginary (derivative) part too
            polished = True
        if it == chart.newton_max_iter:
            break
        step, det = _solve2(_constraint_jacobian(q, x0, x), F)
        if det == 0 or not np.all(np.isfinite(step)):
            raise ChartBreakdownError("singular constraint Jacobian in chart Newton solve")
        ab = ab - step
    raise ChartBreakdownError(
        f"chart Newton did not converge in {chart.newton_max_iter} iterations (residual {res:.3e})"
    )


def chart_to_sigma(chart: Chart, u) -> np.ndarray:
    u = np.asarray(u)
    if np.linalg.norm(np.real(u)) >= chart.radius:
        raise ChartBreakdownError(f"|u| = {np.linalg.norm(u):.3e} outside chart radius {chart.radius}")
    if not np.any(u):
        return chart.slice.x0.copy()
    return chart_solve(chart, u)[0]


def closed_form_slice_point(chart: Chart, u) -> np.ndarray:
    """sqrt(1 - H(w)/mu0) x0 + w, the exact slice point (used as an oracle in tests)."""
    q, x0, h = chart.q, chart.slice.x0, chart.slice.h
    w = h @ np.asarray(u)
    return np.sqrt(1.0 - hamiltonian(q, w) / q.mu0) * x0 + w


def chart_jacobian(chart: Chart, u, x=None) -> np.ndarray:
    """Columns d x / d u^j on the slice, by implicit differentiation of the constraints."""
    q, x0, h = chart.q, chart.slice.x0, chart.slice.h
    if x is None:
        x = chart_to_sigma(chart, u)
    Ax0 = q.A @ x0
    J = _constraint_jacobian(q, x0, x)
    Ax = q.A @ x
    # dF/du_j = (2 omega(h_j, Ax), omega(h_j, x0))
    dF = np.stack([2.0 * q.omega(h.T, Ax), q.omega(h.T, x0)])
    dab = -np.linalg.solve(J, dF)
    return h + np.outer(x0, dab[0]) + np.outer(Ax0, dab[1])


def slice_frame(chart: Chart, u):
    """(x, frame) at a slice point: frame columns are the lifts of d/du^j."""
    x = chart_to_sigma(chart, u) if np.any(np.asarray(u)) else chart.slice.x0.astype(np.result_type(u, float))
    Jc = chart_jacobian(chart, u, x)
    frame = np.stack([horizontal_part(chart.q, x, Jc[:, j]) for j in range(Jc.shape[1])], axis=1)
    return x, frame


def orbit_coordinates(chart: Chart, x, tol: float = 1e-14, max_iter: int = 30):
    """(t, u) with x = psi_t(chart_to_sigma(u)) on Sigma; defined near the orbit of x0."""
    q, x0, h = chart.q, chart.slice.x0, chart.slice.h
    x = np.asarray(x)
    t = 0.0 * x[0]
    A2 = 2.0 * q.A
    for _ in range(max_iter):
        E = scipy.linalg.expm(A2 * t)
        y = E @ x
        g = q.omega(y, x0)
        dg = q.omega(A2 @ y, x0)
        if dg == 0:
            raise ChartBreakdownError("orbit is tangent to the slice")
        dt = g / dg
        t = t - dt
        if abs(dt) <= tol * max(1.0, abs(t)):
            break
    else:
        raise ChartBreakdownError("could not flow the point back onto the slice")
    # polish once more so the complex part is converged as well
    E = scipy.linalg.expm(A2 * t)
    y = E @ x
    t = t - q.omega(y, x0) / q.omega(A2 @ y, x0)
    y = scipy.linalg.expm(A2 * t) @ x
    w = horizontal_part(q, x0, y)
    return t, np.linalg.pinv(h) @ w


class LiftedField:
    """Horizontal, flow-invariant lift of a chart vector field with polynomial components.

    ``components`` is a :class:`PolyField` in the 2n chart coordinates; the
    field downstairs is sum_k components_k(u) d/du^k.
    """

    def __init__(self, chart: Chart, components: PolyField):
        if components.nvars != chart.dim or components.ncomp != chart.dim:
            raise InvalidInputError("chart field must have 2n variables and 2n components")
        self.chart = chart
        self.components = components

    @classmethod
    def coordinate(cls, chart: Chart, k: int) -> "LiftedField":
        e = np.zeros(chart.dim)
        e[k] = 1.0
        return cls(chart, PolyField.constant_field(chart.dim, e))

    def __call__(self, x) -> np.ndarray:
        t, u = orbit_coordinates(self.chart, x)
        _, frame = slice_frame(self.chart, u)
        v = frame @ self.components(u)
        return scipy.linalg.expm(-2.0 * t * self.chart.q.A) @ v

    def downstairs_bracket(self, other: "LiftedField") -> PolyField:
        """Chart components of [self, other] on the quotient."""
        return other.components.derivative_along(self.components) - self.components.derivative_along(
            other.components
        )


def coordinate_frame(chart: Chart) -> list[LiftedField]:
    return [LiftedField.coordinate(chart, k) for k in range(chart.dim)]


def frame_coefficients(q: Quadric, frame: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Coefficients of a horizontal vector in a horizontal frame, via the omega-Gram matrix."""
    G = q.omega(frame.T[:, None, :], frame.T[None, :, :])
    rhs = q.omega(frame.T, v)
    return np.linalg.solve(G, rhs)


# --------------------------------------------------------------------------
# Christoffel symbols

def christoffels_exact(chart: Chart, u=None) -> np.ndarray:
    """Gamma[k, i, j] of nabla^r in chart coordinates, derivatives by complex step."""
    q = chart.q
    m = chart.dim
    u = np.zeros(m) if u is None else np.asarray(u, dtype=float)
    x, frame = slice_frame(chart, u)
    fields = coordinate_frame(chart)
    G = np.zeros((m, m, m))
    for i in range(m):
        for j in range(m):
            val = reduced_connection(q, fields[i], fields[j], x, check=False).value
            G[:, i, j] = frame_coefficients(q, frame, val)
    return G


def _reduced_from_frame_derivative(q: Quadric, x, frame, dframe, Jc):
    """Gamma[k, i, j] at a slice point from d(frame_j)/du^i (dframe[i] columns j)."""
    m = frame.shape[1]
    Ax = q.A @ x
    G = np.zeros((m, m, m))
    for i in range(m):
        # d/du^i moves along Jc_i = frame_i + c_i Ax; the vertical part acts by D_{Ax} Zbar = A Zbar
        c_i = -q.omega(Jc[:, i], x) / q.mu0
        yi = frame[:, i]
        for j in range(m):
            zj = frame[:, j]
            D = dframe[i][:, j] - c_i * (q.A @ zj)
            val = D + (q.omega(zj, q.A @ yi) / q.mu0) * x + (q.omega(yi, zj) / q.mu0) * Ax
            G[:, i, j] = frame_coefficients(q, frame, val)
    return G


def _fd_frame_derivative(frame_at, u, h: float) -> list[np.ndarray]:
    """Central differences d(frame)/du^i, one matrix per coordinate direction."""
    out = []
    for i in range(len(u)):
        e = np.zeros(len(u))
        e[i] = h
        out.append((frame_at(u + e) - frame_at(u - e)) / (2.0 * h))
    return out


def christoffels_fd(chart: Chart, h: float = 1e-3, u=None) -> np.ndarray:
    """Gamma[k, i, j] at chart point u with frame derivatives by central differences."""
    q = chart.q
    m = chart.dim
    u = np.zeros(m) if u is None else np.asarray(u, dtype=float)
    if np.linalg.norm(u) + h >= chart.radius:
        raise ChartBreakdownError("finite-difference stencil leaves the chart")
    x, frame = slice_frame(chart, u)
    Jc = chart_jacobian(chart, u, x)
    dframe = _fd_frame_derivative(lambda v: slice_frame(chart, v)[1], u, h)
    return _reduced_from_frame_derivative(q, x, frame, dframe, Jc)


def flat_christoffels_fd(d: int, h: float = 1e-3, seed: int = 0) -> np.ndarray:
    """Same difference-and-expand extraction for the flat connection on an affine chart of R^d."""
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((d, d))
    m = d
    u0 = np.zeros(m)
    dframe = _fd_frame_derivative(lambda v: P, u0, h)
    G = np.zeros((m, m, m))
    for i in range(m):
        G[:, i, :] = np.linalg.solve(P, dframe[i])
    return G


def curvature_from_christoffels(chart: Chart, h: float, christoffels=christoffels_fd) -> np.ndarray:
    """R[k, i, j, l] = (R(d_i, d_j) d_l)^k at u = 0 by central differences of Gamma."""
    m = chart.dim
    G0 = christoffels(chart, h, np.zeros(m))
    dG = []
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        dG.append((christoffels(chart, h, e) - christoffels(chart, h, -e)) / (2.0 * h))
    dG = np.stack(dG)  # dG[i, k, j, l] = d_i Gamma^k_{jl}
    R = np.einsum("ikjl->kijl", dG) - np.einsum("jkil->kijl", dG)
    R += np.einsum("kim,mjl->kijl", G0, G0) - np.einsum("kjm,mil->kijl", G0, G0)
    return R


@dataclass(frozen=True)
class OracleComparison:
    h: float
    discrepancy: float
    discrepancy_half: float
    richardson_ratio: float
    C: float
    R_fd: np.ndarray
    R_closed: np.ndarray
    max_constraint_residual: float

    def to_json(self):
        return {
            "h": self.h,
            "discrepancy": self.discrepancy,
            "discrepancy_half": self.discrepancy_half,
            "richardson_ratio": self.richardson_ratio,
            "C": self.C,
            "max_constraint_residual": self.max_constraint_residual,
        }


def curvature_fd(chart: Chart, h: float = 1e-3) -> OracleComparison:
    """Finite-difference curvature at the chart centre compared with the closed form.

    The closed form is evaluated in the coordinate frame at u = 0, which is the
    slice basis h itself.
    """
    from .curvature import closed_form_curvature

    closed = closed_form_curvature(chart.q, chart.slice.x0, basis=chart.slice.h).R
    R1 = curvature_from_christoffels(chart, h)
    R2 = curvature_from_christoffels(chart, h / 2.0)
    d1 = float(np.max(np.abs(R1 - closed)))
    d2 = float(np.max(np.abs(R2 - closed)))
    ratio = d1 / d2 if d2 > 0 else float("inf")
    return OracleComparison(
        h=h,
        discrepancy=d1,
        discrepancy_half=d2,
        richardson_ratio=ratio,
        C=d1 / h**2,
        R_fd=R1,
        R_closed=closed,
        max_constraint_residual=stencil_constraint_residual(chart, h),
    )


def stencil_constraint_residual(chart: Chart, h: float) -> float:
    """Largest scaled constraint violation over the stencil points of :func:`curvature_fd`."""
    m = chart.dim
    x0 = chart.slice.x0
    scale = max(1.0, abs(chart.q.mu0))
    worst = 0.0
    for step in (h, h / 2.0):
        for i in range(m):
            for j in range(m):
                for si in (-step, 0.0, step):
                    for sj in (-step, step):
                        u = np.zeros(m)
                        u[i] += si
                        u[j] += sj
                        x = chart_to_sigma(chart, u)
                        F1, F2 = _constraints(chart.q, x0, x)
                        worst = max(worst, abs(F1) / scale, abs(F2) / scale)
    return float(worst)
