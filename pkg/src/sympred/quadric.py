"""The level set Sigma_mu0 = {H = mu0}, its Hamiltonian flow and horizontal structure."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    InvalidInputError,
    NotHorizontalError,
    NumericError,
    SamplingFailedError,
    UnsupportedError,
)
from .symplectic import CaseTag, Generator, SymplecticSpace, default_mu0, standard_form

ON_SURFACE_TOL = 1e-10
SAMPLING_RETRIES = 64
# reject draws where |H(u)| is tiny compared to |A| |u|^2: the rescaled point is huge
MIN_CONDITIONING = 1e-2


@dataclass(frozen=True)
class Quadric:
    gen: Generator
    mu0: float
    space: SymplecticSpace = field(init=False, repr=False)

    def __post_init__(self):
        if not np.isfinite(self.mu0) or self.mu0 == 0.0:
            raise InvalidInputError("mu0 must be a nonzero real number")
        object.__setattr__(self, "mu0", float(self.mu0))
        object.__setattr__(self, "space", standard_form(self.gen.n))

    @classmethod
    def default(cls, gen: Generator) -> "Quadric":
        return cls(gen, default_mu0(gen))

    @property
    def A(self) -> np.ndarray:
        return self.gen.A

    @property
    def dim(self) -> int:
        return self.gen.dim

    def omega(self, u, v):
        return self.space.form(u, v)


@dataclass(frozen=True)
class QuadricPoint:
    x: np.ndarray
    residual: float


@dataclass(frozen=True)
class TangentVector:
    base: QuadricPoint
    v: np.ndarray
    kind: str = "tangent"


def coords(x) -> np.ndarray:
    if isinstance(x, QuadricPoint):
        return x.x
    return np.asarray(x)


def hamiltonian(q: Quadric, x):
    """H(x) = omega(x, A x)."""
    x = coords(x)
    return q.omega(x, x @ q.A.T)


def make_point(q: Quadric, x, tol: float = ON_SURFACE_TOL) -> QuadricPoint:
    x = np.array(x, dtype=float)
    res = float(abs(hamiltonian(q, x) - q.mu0))
    if res > tol * max(1.0, abs(q.mu0)):
        raise InvalidInputError(f"point is off the quadric: |H(x) - mu0| = {res:.3e}")
    x.setflags(write=False)
    return QuadricPoint(x=x, residual=res)


def hamiltonian_field(q: Quadric, x) -> TangentVector:
    """X_H(x) = -2 A x, the field with omega(X_H, v) = dH(v)."""
    base = x if isinstance(x, QuadricPoint) else make_point(q, x)
    return TangentVector(base=base, v=-2.0 * q.A @ base.x)


def dH(q: Quadric, x, v):
    """Differential of H at x applied to v, i.e. 2 omega(v, A x)."""
    x = coords(x)
    return 2.0 * q.omega(v, q.A @ x)


def flow_matrix(q: Quadric, t) -> np.ndarray:
    """exp(-2 A t); t may be complex (used for complex-step derivatives)."""
    M = scipy.linalg.expm(-2.0 * t * q.A)
    if not np.all(np.isfinite(M)):
        bound = float(np.exp(2.0 * abs(t) * np.linalg.norm(q.A, 2)))
        raise NumericError(f"matrix exponential failed (norm bound {bound:.3e})")
    return M


def flow(q: Quadric, x, t: float) -> QuadricPoint:
    """psi_t(x) = exp(-2 A t) x."""
    y = flow_matrix(q, t) @ coords(x)
    y.setflags(write=False)
    return QuadricPoint(x=y, residual=float(abs(hamiltonian(q, y) - q.mu0)))


def project_tangent(q: Quadric, x, v) -> TangentVector:
    """v - (omega(v, Ax)/mu0) x; the radial direction is transversal to Sigma."""
    xx = coords(x)
    v = np.asarray(v)
    w = v - (q.omega(v, q.A @ xx) / q.mu0) * xx
    return TangentVector(base=_as_point(q, x), v=w)


def horizontal_components(q: Quadric, x, v):
    """Coefficients (alpha, beta) with v - alpha x - beta Ax horizontal."""
    xx = coords(x)
    alpha = q.omega(v, q.A @ xx) / q.mu0
    beta = -q.omega(v, xx) / q.mu0
    return alpha, beta


def horizontal_part(q: Quadric, x, v):
    """Array form of :func:`project_horizontal` (complex-safe, no point validation)."""
    xx = coords(x)
    alpha, beta = horizontal_components(q, xx, v)
    return v - alpha * xx - beta * (q.A @ xx)


def project_horizontal(q: Quadric, x, v) -> TangentVector:
    """Projection onto H_x = span(x, Ax)^perp along span(x, Ax)."""
    return TangentVector(base=_as_point(q, x), v=horizontal_part(q, x, np.asarray(v)), kind="horizontal")


def horizontal_residual(q: Quadric, x, v) -> float:
    """Scaled violation of omega(v, x) = omega(v, Ax) = 0."""
    xx = coords(x)
    Ax = q.A @ xx
    nv = np.linalg.norm(v)
    if nv == 0:
        return 0.0
    r1 = abs(q.omega(v, xx)) / (nv * np.linalg.norm(xx))
    r2 = abs(q.omega(v, Ax)) / (nv * max(np.linalg.norm(Ax), 1e-300))
    return float(max(r1, r2))


def require_horizontal(q: Quadric, x, v, tol: float = 1e-10) -> None:
    r = horizontal_residual(q, x, v)
    if r > tol:
        raise NotHorizontalError(f"vector is not horizontal: residual {r:.3e}")


def horizontal_basis(q: Quadric, x, kind: str = "orthonormal") -> np.ndarray:
    """Basis of H_x as columns, deterministic in x.

    ``orthonormal``: euclidean-orthonormal, from the null space of the two
    constraints.  ``symplectic``: omega-Gram-Schmidt on projected canonical
    vectors, so that omega(b_{2i-1}, b_{2i}) = 1 and other pairings vanish.
    """
    xx = coords(x)
    if kind == "orthonormal":
        C = np.stack([q.space.omega.T @ xx, q.space.omega.T @ (q.A @ xx)])
        # full QR of the constraint normals; trailing columns span the complement
        Q, _ = np.linalg.qr(C.T, mode="complete")
        B = Q[:, 2:]
        # fix column signs so the basis is a deterministic function of x
        idx = np.argmax(np.abs(B), axis=0)
        B = B * np.sign(B[idx, np.arange(B.shape[1])])
        return B
    if kind == "symplectic":
        return _symplectic_gram_schmidt(q, [horizontal_part(q, xx, e) for e in np.eye(q.dim)])
    raise InvalidInputError(f"unknown basis kind {kind!r}")


def _symplectic_gram_schmidt(q: Quadric, vectors) -> np.ndarray:
    pool = [np.asarray(v, dtype=float) for v in vectors]
    out = []
    m = q.dim - 2
    while len(out) < m:
        best = None
        for i in range(len(pool)):
            for j in range(i + 1, len(pool)):
                w = q.omega(pool[i], pool[j])
                if best is None or abs(w) > abs(best[0]):
                    best = (w, i, j)
        if best is None or abs(best[0]) < 1e-12:
            raise NumericError("symplectic Gram-Schmidt broke down")
        w, i, j = best
        e, f = pool[i], pool[j] / w
        out += [e, f]
        rest = [pool[k] for k in range(len(pool)) if k not in (i, j)]
        # remove the e, f components: v - omega(v, f) e + omega(v, e) f
        pool = [v - q.omega(v, f) * e + q.omega(v, e) * f for v in rest]
        pool = [v for v in pool if np.linalg.norm(v) > 1e-12]
    return np.stack(out, axis=1)


def _as_point(q: Quadric, x) -> QuadricPoint:
    if isinstance(x, QuadricPoint):
        return x
    x = np.asarray(x, dtype=float)
    return QuadricPoint(x=x, residual=float(abs(hamiltonian(q, x) - q.mu0)))


def retract(q: Quadric, x) -> QuadricPoint:
    """Radial retraction x -> x sqrt(mu0 / H(x)), valid when sign(H) = sign(mu0)."""
    x = np.asarray(coords(x), dtype=float)
    h = hamiltonian(q, x)
    if h == 0 or np.sign(h) != np.sign(q.mu0):
        raise InvalidInputError("radial retraction needs sign(H(x)) == sign(mu0)")
    y = x * np.sqrt(q.mu0 / h)
    y.setflags(write=False)
    return QuadricPoint(x=y, residual=float(abs(hamiltonian(q, y) - q.mu0)))


def sample_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator keyed on (seed, index), independent per index."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, int(index)])
    return np.random.Generator(np.random.Philox(ss))


def sample_point(q: Quadric, seed: int, index: int = 0, retries: int = SAMPLING_RETRIES) -> QuadricPoint:
    """Seeded random point of Sigma_mu0 by radial rescaling of a gaussian draw."""
    rng = sample_rng(seed, index)
    anorm = np.linalg.norm(q.A, 2)
    for _ in range(retries):
        u = rng.standard_normal(q.dim)
        h = hamiltonian(q, u)
        if h == 0 or np.sign(h) != np.sign(q.mu0):
            continue
        if abs(h) < MIN_CONDITIONING * anorm * (u @ u):
            continue
        return retract(q, u)
    raise SamplingFailedError(
        f"no point of Sigma_{{{q.mu0:g}}} found after {retries} draws; the quadric may be empty or thin"
    )


def sample_points(q: Quadric, count: int, seed: int) -> list[QuadricPoint]:
    return [sample_point(q, seed, i) for i in range(count)]


def representative_time(q: Quadric, x) -> float:
    """Flow time t such that psi_t(x) satisfies the case's normalisation."""
    gen = q.gen
    c = gen.adapted_coordinates(coords(x))
    tag = gen.case_tag
    if tag is CaseTag.PLUS_ID:
        # x-part scales as exp(-2t)
        r = np.linalg.norm(c[: gen.n + 1])
        return float(np.log(r) / 2.0)
    if tag is CaseTag.NILPOTENT:
        p = gen.p
        s = float(np.sum(gen.epsilons() * c[:p] * c[p : 2 * p]))
        return s / (2.0 * q.mu0)
    if tag is CaseTag.REMARK:
        # |x^1 + i x^2| evolves as exp(-2 a t)
        r = np.hypot(c[0], c[1])
        return float(np.log(r) / (2.0 * gen.a))
    raise UnsupportedError(f"no global orbit cross-section for {tag.value}")


def orbit_representative(q: Quadric, x) -> QuadricPoint:
    """Unique point of the psi-orbit of x on the case's cross-section."""
    return flow(q, x, representative_time(q, x))


def section_residual(q: Quadric, x) -> float:
    """How far x is from the cross-section used by :func:`orbit_representative`."""
    gen = q.gen
    c = gen.adapted_coordinates(coords(x))
    if gen.case_tag is CaseTag.PLUS_ID:
        return float(abs(np.sum(c[: gen.n + 1] ** 2) - 1.0))
    if gen.case_tag is CaseTag.NILPOTENT:
        p = gen.p
        return float(abs(np.sum(gen.epsilons() * c[:p] * c[p : 2 * p])))
    if gen.case_tag is CaseTag.REMARK:
        return float(abs(np.hypot(c[0], c[1]) - 1.0))
    raise UnsupportedError(f"no global orbit cross-section for {gen.case_tag.value}")
