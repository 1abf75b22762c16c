"""Closed-form curvature of the reduced connection and its Ricci-type analysis.

Tensors are stored over a basis e_1..e_{2n} of the horizontal space H_x, which
models T_y M at y = pi(x):

    R[a, i, j, k] = (R(e_i, e_j) e_k)^a,      ricci[j, k] = sum_a R[a, a, j, k]

so ``ricci(U, V) = trace(T -> R(T, U) V)``.  With this convention the
reduced Ricci tensor is ``kappa * Omega(U, A_y V)`` with ``kappa = (2n+2)/mu0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import BadBasisError, FitImpossibleError, InternalConsistencyError
from .quadric import Quadric, coords, horizontal_basis, horizontal_part, sample_point

GRAM_TOL = 1e-10
W_TOL = 1e-9
KAPPA_FIT_TOL = 1e-9
SYMMETRY_TOL = 1e-8
NABLA_RIC_TOL = 1e-6


def gram(q: Quadric, basis: np.ndarray) -> np.ndarray:
    """G[i, j] = omega(e_i, e_j)."""
    return basis.T @ q.space.omega @ basis


def _checked_gram(q: Quadric, basis: np.ndarray) -> np.ndarray:
    G = gram(q, basis)
    scale = max(1.0, float(np.max(np.abs(basis))) ** 2)
    det = np.linalg.det(G / scale)
    if not np.isfinite(det) or abs(det) < GRAM_TOL:
        raise BadBasisError(f"horizontal basis is degenerate for Omega (scaled det {det:.3e})")
    return G


@dataclass(frozen=True)
class AyOperator:
    """A_y U = A Ubar - (1/mu0) omega(A Ubar, Ax) x, as a matrix in a horizontal basis."""

    x: np.ndarray
    basis: np.ndarray = field(repr=False)
    matrix: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)
    horizontal_residual: float
    algebra_residual: float


def lift_ay(q: Quadric, x, u) -> np.ndarray:
    """Ambient vector A u - (1/mu0) omega(A u, Ax) x."""
    xx = coords(x)
    Au = q.A @ u
    return Au - (q.omega(Au, q.A @ xx) / q.mu0) * xx


def ay_operator(q: Quadric, x, basis=None) -> AyOperator:
    xx = coords(x)
    E = horizontal_basis(q, xx) if basis is None else np.asarray(basis, dtype=float)
    G = _checked_gram(q, E)
    lifted = np.stack([lift_ay(q, xx, E[:, j]) for j in range(E.shape[1])], axis=1)
    # coordinates via Omega-pairings with the basis
    M = np.linalg.solve(G, E.T @ q.space.omega @ lifted)
    hres = float(np.max(np.abs(lifted - np.stack(
        [horizontal_part(q, xx, lifted[:, j]) for j in range(E.shape[1])], axis=1))))
    # Omega(A_y U, V) + Omega(U, A_y V) = 0  <=>  G M symmetric
    GM = G @ M
    return AyOperator(
        x=xx,
        basis=E,
        matrix=M,
        gram=G,
        horizontal_residual=hres,
        algebra_residual=float(np.max(np.abs(GM - GM.T))),
    )


def five_term_tensor(G: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Tensor of  Om(Z,T) M Y - Om(Y,T) M Z - 2 Om(Y,Z) M T + Om(T, M Z) Y - Om(T, M Y) Z.

    ``G`` is the Omega-Gram matrix of the basis and ``M`` an operator in that basis.
    """
    m = G.shape[0]
    I = np.eye(m)
    GM = G @ M
    R = np.einsum("jk,ai->aijk", G, M)
    R -= np.einsum("ik,aj->aijk", G, M)
    R -= 2.0 * np.einsum("ij,ak->aijk", G, M)
    R += np.einsum("kj,ai->aijk", GM, I)
    R -= np.einsum("ki,aj->aijk", GM, I)
    return R


def ricci_of(R: np.ndarray) -> np.ndarray:
    return np.einsum("aajk->jk", R)


def lower(R: np.ndarray, G: np.ndarray) -> np.ndarray:
    """L[i, j, k, u] = Omega(R(e_i, e_j) e_k, e_u)."""
    return np.einsum("aijk,au->ijku", R, G)


def raise_last(L: np.ndarray, G: np.ndarray) -> np.ndarray:
    return np.einsum("ijku,ua->aijk", L, np.linalg.inv(G))


def antisymmetry_residual(R) -> float:
    return float(np.max(np.abs(R + R.transpose(0, 2, 1, 3))))


def bianchi_residual(R) -> float:
    cyc = R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)
    return float(np.max(np.abs(cyc)))


def symplectic_symmetry_residual(R, G) -> float:
    L = lower(R, G)
    return float(np.max(np.abs(L - L.transpose(0, 1, 3, 2))))


def ricci_type_split(R: np.ndarray, G: np.ndarray):
    """(E, W, w_norm): E is the five-term tensor of the Ricci endomorphism, W = R - E.

    The Ricci endomorphism B solves ricci(U, V) = Omega(U, B V); the prefactor of
    E is fitted so that ricci(E) = ricci(R).
    """
    ric = ricci_of(R)
    B = np.linalg.solve(G, ric)
    T = five_term_tensor(G, B)
    ricT = ricci_of(T)
    denom = float(np.sum(ricT * ricT))
    c = float(np.sum(ric * ricT)) / denom if denom > 0 else 0.0
    E = c * T
    W = R - E
    return E, W, float(np.max(np.abs(W)))


def fit_kappa(ric: np.ndarray, target: np.ndarray):
    """Least-squares kappa with ric ~ kappa * target; returns (kappa, max-abs residual)."""
    denom = float(np.sum(target * target))
    if denom == 0.0:
        if np.max(np.abs(ric)) > 0:
            raise FitImpossibleError("A_y vanishes but the Ricci tensor does not")
        return 0.0, 0.0
    kappa = float(np.sum(ric * target)) / denom
    return kappa, float(np.max(np.abs(ric - kappa * target)))


@dataclass(frozen=True)
class CurvatureAtPoint:
    x: np.ndarray
    basis: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    ricci: np.ndarray = field(repr=False)
    kappa: float
    kappa_fit_residual: float
    E: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)
    w_norm: float
    residuals: dict[str, float]

    def to_json(self) -> dict[str, Any]:
        return {
            "x": self.x.tolist(),
            "basis": self.basis.tolist(),
            "kappa": self.kappa,
            "kappa_fit_residual": self.kappa_fit_residual,
            "w_norm": self.w_norm,
            "ricci": self.ricci.tolist(),
            "R": self.R.tolist(),
            "residuals": dict(sorted(self.residuals.items())),
        }


def closed_form_curvature(q: Quadric, x, basis=None) -> CurvatureAtPoint:
    """R^r at y = pi(x) from the five-term formula, with Ricci, kappa and the E + W split."""
    xx = np.asarray(coords(x), dtype=float)
    ay = ay_operator(q, xx, basis)
    G, M = ay.gram, ay.matrix
    R = five_term_tensor(G, M) / q.mu0
    ric = ricci_of(R)
    kappa, kres = fit_kappa(ric, G @ M)
    E, W, w_norm = ricci_type_split(R, G)
    residuals = {
        "antisymmetry": antisymmetry_residual(R),
        "bianchi": bianchi_residual(R),
        "symplectic_symmetry": symplectic_symmetry_residual(R, G),
        "ricci_of_W": float(np.max(np.abs(ricci_of(W)))),
        "ay_horizontal": ay.horizontal_residual,
        "ay_algebra": ay.algebra_residual,
        "kappa_fit": kres,
    }
    return CurvatureAtPoint(
        x=xx,
        basis=ay.basis,
        gram=G,
        R=R,
        ricci=ric,
        kappa=kappa,
        kappa_fit_residual=kres,
        E=E,
        W=W,
        w_norm=w_norm,
        residuals=residuals,
    )


def lifted_curvature(q: Quadric, x, Y, Z, T) -> np.ndarray:
    """Ambient form of R^r(Y, Z)T before A_y is introduced (horizontal inputs)."""
    xx = coords(x)
    A, mu0, om = q.A, q.mu0, q.omega
    Ax = A @ xx

    def hz(v):
        return A @ v - (om(A @ v, Ax) / mu0) * xx

    return (
        om(Z, T) * hz(Y) - om(Y, T) * hz(Z) - 2.0 * om(Y, Z) * hz(T) + om(T, A @ Z) * Y - om(T, A @ Y) * Z
    ) / mu0


def ricci_and_kappa(c: CurvatureAtPoint, ay: AyOperator):
    """(ricci, kappa, residual) with ricci(U, V) fitted against Omega(U, A_y V)."""
    kappa, res = fit_kappa(c.ricci, ay.gram @ ay.matrix)
    return c.ricci, kappa, res


def kappa_closed(q: Quadric) -> float:
    """(2n+2)/mu0: the trace contraction of the five-term formula."""
    return (2 * q.gen.n + 2) / q.mu0


# --------------------------------------------------------------------------
# covariant derivative of Ricci and the 1-form u

@dataclass(frozen=True)
class OneFormU:
    x: np.ndarray
    components: np.ndarray
    norm: float


def u_form(q: Quadric, x, basis=None, kappa=None) -> OneFormU:
    """u(V) = (kappa/mu0) omega(Vbar, A^2 x).

    ``norm`` is the euclidean operator norm over unit horizontal vectors, so it
    does not depend on the basis used for the components.
    """
    xx = coords(x)
    kappa = kappa_closed(q) if kappa is None else kappa
    E = horizontal_basis(q, xx) if basis is None else np.asarray(basis)
    g = (kappa / q.mu0) * (q.space.omega @ (q.A @ (q.A @ xx)))
    comps = E.T @ g
    Q = horizontal_basis(q, xx, "orthonormal")
    return OneFormU(x=xx, components=comps, norm=float(np.linalg.norm(Q.T @ g)))


def nabla_ricci_formula(q: Quadric, x, basis, kappa=None) -> np.ndarray:
    """D[i, j, k] = (nabla_{e_i} Ric)(e_j, e_k) from the closed-form expression."""
    xx = coords(x)
    kappa = kappa_closed(q) if kappa is None else kappa
    E = np.asarray(basis)
    G = gram(q, E)
    a = q.omega(E.T, q.A @ (q.A @ xx))  # a[j] = omega(e_j, A^2 x)
    # (kappa/mu0)[omega(V, A^2 x) omega(U, X) + omega(U, A^2 x) omega(V, X)]
    return (kappa / q.mu0) * (np.einsum("k,ji->ijk", a, G) + np.einsum("j,ki->ijk", a, G))


@dataclass(frozen=True)
class NablaRicci:
    formula: np.ndarray
    direct: np.ndarray
    discrepancy: float
    u: OneFormU


def nabla_ricci_and_u(q: Quadric, x, h: float = 1e-4, tol: float = NABLA_RIC_TOL) -> NablaRicci:
    """Closed-form nabla Ric next to a direct computation in a chart centred at x.

    The direct route differentiates ricci (traced from the closed-form curvature
    in the moving lifted coordinate frame) by central differences and subtracts
    the Christoffel terms.
    """
    from .chart import christoffels_exact, make_chart, slice_frame

    xx = np.asarray(coords(x), dtype=float)
    chart = make_chart(q, xx)
    m = chart.dim

    def ric_at(u):
        p, frame = slice_frame(chart, u)
        return closed_form_curvature(q, p, basis=frame).ricci

    ric0 = ric_at(np.zeros(m))
    Gam = christoffels_exact(chart)
    direct = np.zeros((m, m, m))
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        d_ric = (ric_at(e) - ric_at(-e)) / (2.0 * h)
        direct[i] = d_ric - np.einsum("lj,lk->jk", Gam[:, i, :], ric0) - np.einsum("lk,jl->jk", Gam[:, i, :], ric0)
    formula = nabla_ricci_formula(q, xx, chart.slice.h)
    disc = float(np.max(np.abs(formula - direct)))
    if disc > tol:
        raise InternalConsistencyError(f"nabla Ric formula and direct differentiation differ by {disc:.3e}")
    return NablaRicci(formula=formula, direct=direct, discrepancy=disc, u=u_form(q, xx, chart.slice.h))


@dataclass(frozen=True)
class SymmetryVerdict:
    locally_symmetric: bool
    max_u_norm: float
    samples: int
    threshold: float
    label: str | None

    def to_json(self):
        return {
            "locally_symmetric": self.locally_symmetric,
            "max_u_norm": self.max_u_norm,
            "samples": self.samples,
            "threshold": self.threshold,
            "label": self.label,
        }


def symmetry_verdict(q: Quadric, samples: int, seed: int, threshold: float = SYMMETRY_TOL) -> SymmetryVerdict:
    """Local symmetry decided from max |u| over seeded sample points."""
    worst = 0.0
    for i in range(samples):
        pt = sample_point(q, seed, i)
        worst = max(worst, u_form(q, pt).norm)
    sym = worst <= threshold
    label = None
    if sym and q.gen.lam is not None:
        label = "globally symmetric"
    return SymmetryVerdict(locally_symmetric=sym, max_u_norm=worst, samples=samples, threshold=threshold, label=label)
