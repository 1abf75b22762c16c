"""Ambient symplectic vector space, generators of sp(n+1, R) and the quotient catalog.

Every matrix lives in the canonical basis of R^{2n+2}, where the symplectic form
is the pairwise block form ``omega(e_{2i-1}, e_{2i}) = 1``.  Adapted bases used to
construct the generators are kept as change-of-basis matrices (columns are the
adapted vectors expressed canonically).
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidInputError, UnsupportedClassificationError

ALGEBRA_TOL = 1e-12
LAMBDA_DETECT_TOL = 1e-10


class CaseTag(str, enum.Enum):
    MINUS_ID = "CaseMinusId"
    PLUS_ID = "CasePlusId"
    NILPOTENT = "CaseNilpotent"
    REMARK = "CaseRemark"
    EXPLICIT = "Explicit"


_KIND_BY_TAG = {
    CaseTag.MINUS_ID: "case1",
    CaseTag.PLUS_ID: "case2",
    CaseTag.NILPOTENT: "case3",
    CaseTag.REMARK: "remark",
    CaseTag.EXPLICIT: "explicit",
}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SymplecticSpace:
    n: int
    omega: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return 2 * self.n + 2

    def form(self, u, v):
        """omega(u, v); works on stacked vectors along the last axis and on complex input."""
        return np.einsum("...i,ij,...j->...", u, self.omega, v)


def standard_form(n: int) -> SymplecticSpace:
    """Canonical symplectic structure on R^{2n+2}."""
    if int(n) != n or n < 0:
        raise InvalidInputError(f"n must be a non-negative integer, got {n!r}")
    n = int(n)
    d = 2 * n + 2
    omega = np.zeros((d, d))
    for i in range(n + 1):
        omega[2 * i, 2 * i + 1] = 1.0
        omega[2 * i + 1, 2 * i] = -1.0
    return SymplecticSpace(n=n, omega=_frozen(omega))


def complex_structure(n: int) -> np.ndarray:
    """J with J e_{2i-1} = e_{2i}, J e_{2i} = -e_{2i-1}."""
    d = 2 * n + 2
    J = np.zeros((d, d))
    for i in range(n + 1):
        J[2 * i + 1, 2 * i] = 1.0
        J[2 * i, 2 * i + 1] = -1.0
    return J


def _check_square(space: SymplecticSpace, A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape != (space.dim, space.dim):
        raise InvalidInputError(
            f"expected a {space.dim}x{space.dim} matrix, got shape {A.shape}"
        )
    return A


def algebra_residual(space: SymplecticSpace, A) -> float:
    """max over canonical basis pairs of |omega(Au, v) + omega(u, Av)|."""
    A = _check_square(space, A)
    W = space.omega
    return float(np.max(np.abs(A.T @ W + W @ A)))


def is_symplectic_algebra(space: SymplecticSpace, A, tol: float = ALGEBRA_TOL) -> tuple[bool, float]:
    res = algebra_residual(space, A)
    return res <= tol, res


@dataclass(frozen=True)
class Generator:
    """An element A != 0 of sp(n+1, R) together with how it was built.

    ``lam`` is set when A^2 = lam * Id holds; ``basis`` columns are the adapted
    basis vectors in canonical coordinates.
    """

    A: np.ndarray = field(repr=False)
    case_tag: CaseTag
    n: int
    p: int = 0
    q: int = 0
    lam: float | None = None
    basis: np.ndarray = field(default=None, repr=False)
    a: float | None = None
    b: float | None = None

    @property
    def space(self) -> SymplecticSpace:
        return standard_form(self.n)

    @property
    def dim(self) -> int:
        return 2 * self.n + 2

    def adapted_coordinates(self, x) -> np.ndarray:
        return np.linalg.solve(self.basis, np.asarray(x))

    def from_adapted(self, c) -> np.ndarray:
        return self.basis @ np.asarray(c)

    def epsilons(self) -> np.ndarray:
        """Signs eps_k of the nilpotent case (+1 for k <= q)."""
        return np.array([1.0 if k < self.q else -1.0 for k in range(self.p)])

    def to_json(self) -> dict[str, Any]:
        kind = _KIND_BY_TAG[self.case_tag]
        doc: dict[str, Any] = {"kind": kind, "n": self.n}
        if kind == "case1":
            doc["p"] = self.p
        elif kind == "case3":
            doc.update(p=self.p, q=self.q)
        elif kind == "remark":
            doc.update(a=self.a, b=self.b)
        elif kind == "explicit":
            doc["matrix"] = self.A.tolist()
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _make(A, tag, n, basis, *, p=0, q=0, lam=None, a=None, b=None) -> Generator:
    A = _frozen(A)
    if not np.any(A):
        raise InvalidInputError("generator A must be nonzero")
    return Generator(A=A, case_tag=tag, n=n, p=p, q=q, lam=lam, basis=_frozen(basis), a=a, b=b)


def _check_n(n) -> int:
    if int(n) != n or n < 0:
        raise InvalidInputError(f"n must be a non-negative integer, got {n!r}")
    return int(n)


def make_case_minus_id(n: int, p: int) -> Generator:
    """A with A^2 = -Id and signature (p, q = n+1-p).

    Adapted basis: omega(e_{2i-1}, e_{2i} = A e_{2i-1}) = +1 for i <= p and -1 after.
    """
    n = _check_n(n)
    if int(p) != p or not 0 <= p <= n + 1:
        raise InvalidInputError(f"p must satisfy 0 <= p <= n+1 = {n + 1}, got {p!r}")
    p = int(p)
    d = 2 * n + 2
    A = np.zeros((d, d))
    basis = np.zeros((d, d))
    for i in range(n + 1):
        c1, c2 = 2 * i, 2 * i + 1
        if i < p:
            basis[c1, c1] = basis[c2, c2] = 1.0
            A[c2, c1], A[c1, c2] = 1.0, -1.0
        else:
            # e_{2j-1} = c_{2j}, e_{2j} = c_{2j-1} so that the pairing is -1
            basis[c2, c1] = basis[c1, c2] = 1.0
            A[c1, c2], A[c2, c1] = 1.0, -1.0
    return _make(A, CaseTag.MINUS_ID, n, basis, p=p, q=n + 1 - p, lam=-1.0)


def make_case_plus_id(n: int) -> Generator:
    """A with A^2 = Id; V+ = span(e_i), V- = span(f_i) lagrangian with omega(e_i, f_j) = delta_ij.

    Basis columns are e_1..e_{n+1} followed by f_1..f_{n+1}.
    """
    n = _check_n(n)
    d = 2 * n + 2
    A = np.zeros((d, d))
    basis = np.zeros((d, d))
    for i in range(n + 1):
        A[2 * i, 2 * i] = 1.0
        A[2 * i + 1, 2 * i + 1] = -1.0
        basis[2 * i, i] = 1.0
        basis[2 * i + 1, n + 1 + i] = 1.0
    return _make(A, CaseTag.PLUS_ID, n, basis, p=n + 1, q=n + 1, lam=1.0)


def make_case_nilpotent(n: int, p: int, q: int) -> Generator:
    """A with A^2 = 0 and rank p; q of the signs eps_k are +1.

    Basis columns: e_1..e_p, A e_1..A e_p, u_1..u_{n+1-p}, v_1..v_{n+1-p} with
    omega(e_k, A e_l) = eps_k delta_kl and omega(u_a, v_b) = delta_ab.
    """
    n = _check_n(n)
    if int(p) != p or not 1 <= p <= n + 1:
        raise InvalidInputError(f"p must satisfy 1 <= p <= n+1 = {n + 1}, got {p!r}")
    if int(q) != q or not 0 <= q <= p:
        raise InvalidInputError(f"q must satisfy 0 <= q <= p = {p}, got {q!r}")
    p, q = int(p), int(q)
    d = 2 * n + 2
    A = np.zeros((d, d))
    basis = np.zeros((d, d))
    for k in range(p):
        eps = 1.0 if k < q else -1.0
        A[2 * k + 1, 2 * k] = eps
        basis[2 * k, k] = 1.0
        basis[2 * k + 1, p + k] = eps
    m = n + 1 - p
    for a in range(m):
        basis[2 * (p + a), 2 * p + a] = 1.0
        basis[2 * (p + a) + 1, 2 * p + m + a] = 1.0
    return _make(A, CaseTag.NILPOTENT, n, basis, p=p, q=q, lam=0.0)


def remark_action(a: float, b: float) -> np.ndarray:
    """Action of A on the complex-eigenvalue basis e_1..e_4 (columns are images)."""
    return np.array(
        [
            [a, b, 0.0, 0.0],
            [-b, a, 0.0, 0.0],
            [0.0, 0.0, -a, -b],
            [0.0, 0.0, b, -a],
        ]
    )


def remark_gram() -> np.ndarray:
    """omega(e_i, e_j) for the complex-eigenvalue basis: omega(e1,e3) = 1/2 = -omega(e2,e4)."""
    G = np.zeros((4, 4))
    G[0, 2], G[2, 0] = 0.5, -0.5
    G[1, 3], G[3, 1] = -0.5, 0.5
    return G


def make_remark(a: float, b: float) -> Generator:
    """Generator in sp(2, R) with eigenvalues +-a +- ib, ab != 0.

    The complex eigenbasis is normalised by omega(e_lambda, e_-lambda) = 1,
    and e_lambda = e1 + i e2, e_-lambda = e3 + i e4.
    """
    a, b = float(a), float(b)
    if a * b == 0.0:
        raise InvalidInputError("the complex-eigenvalue generator needs a*b != 0")
    # e1 = c1, e2 = c3, e3 = c2 / 2, e4 = -c4 / 2 realises the stated pairings
    P = np.zeros((4, 4))
    P[0, 0] = 1.0
    P[2, 1] = 1.0
    P[1, 2] = 0.5
    P[3, 3] = -0.5
    A = P @ remark_action(a, b) @ np.linalg.inv(P)
    return _make(A, CaseTag.REMARK, 1, P, a=a, b=b)


def make_explicit(A, lam_tol: float = LAMBDA_DETECT_TOL) -> Generator:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2 or A.shape[0] < 2:
        raise InvalidInputError(f"explicit matrix must be square of even size, got {A.shape}")
    n = A.shape[0] // 2 - 1
    space = standard_form(n)
    ok, res = is_symplectic_algebra(space, A)
    if not ok:
        raise InvalidInputError(f"matrix is not in sp(n+1, R): residual {res:.3e}")
    return _make(A, CaseTag.EXPLICIT, n, np.eye(A.shape[0]), lam=detect_lambda(A, lam_tol))


def detect_lambda(A, tol: float = LAMBDA_DETECT_TOL) -> float | None:
    """Least-squares lambda with A^2 ~ lambda Id, or None when the fit is off by more than tol."""
    A = np.asarray(A, dtype=float)
    A2 = A @ A
    lam = float(np.trace(A2) / A.shape[0])
    if np.max(np.abs(A2 - lam * np.eye(A.shape[0]))) <= tol:
        return lam
    return None


def square_fit_residual(A) -> float:
    A = np.asarray(A, dtype=float)
    A2 = A @ A
    lam = np.trace(A2) / A.shape[0]
    return float(np.max(np.abs(A2 - lam * np.eye(A.shape[0]))))


def generator_from_json(doc: dict[str, Any] | str) -> Generator:
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        kind = doc["kind"]
        if kind == "case1":
            return make_case_minus_id(doc["n"], doc["p"])
        if kind == "case2":
            return make_case_plus_id(doc["n"])
        if kind == "case3":
            return make_case_nilpotent(doc["n"], doc["p"], doc["q"])
        if kind == "remark":
            return make_remark(doc["a"], doc["b"])
        if kind == "explicit":
            return make_explicit(doc["matrix"])
    except KeyError as exc:
        raise InvalidInputError(f"generator document is missing field {exc}") from None
    raise InvalidInputError(f"unknown generator kind {kind!r}")


def default_mu0(gen: Generator) -> float:
    """Conventional level per case: -2 for A^2 = Id, otherwise +-1 on a nonempty quadric."""
    if gen.case_tag is CaseTag.PLUS_ID:
        return -2.0
    if gen.case_tag is CaseTag.MINUS_ID:
        return 1.0 if gen.p >= 1 else -1.0
    if gen.case_tag is CaseTag.NILPOTENT:
        return 1.0 if gen.q >= 1 else -1.0
    return 1.0


# --------------------------------------------------------------------------
# quotient catalog

@dataclass(frozen=True)
class ClassificationLabel:
    quadric_label: str
    quotient_label: str
    group: str
    case: str
    n: int
    p: int | None = None
    q: int | None = None
    ambiguous: bool = False

    def to_json(self) -> dict[str, Any]:
        return {
            "quadric_label": self.quadric_label,
            "quotient_label": self.quotient_label,
            "group": self.group,
            "case": self.case,
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "ambiguous": self.ambiguous,
        }


# (catalog key) -> (quadric label, quotient label, group)
CATALOG: dict[str, tuple[str, str, str]] = {
    "case1/sphere": ("S^{2n+1}", "CP^n", "U(1)"),
    "case1/p=1": ("S^{2p-1} × R^{2q}", "C^n", "U(1)"),
    "case1/bundle": (
        "S^{2p-1} × R^{2q}",
        "rank-q complex vector bundle over CP^{p-1}",
        "U(1)",
    ),
    "case2": ("Σ x^i y^i = 1", "T S^n", "R"),
    "case3/p=q=1": ("2 points × R^{2n+1}", "R^{2n} ∪ R^{2n}", "R"),
    "case3/q=p": (
        "S^{p-1} × R^{2n+2-p}",
        "T(S^{q-1} × R^{p-q}) × R^{2n+2-2p}",
        "R",
    ),
    "case3/q=1": (
        "(R^{p-1} ∪ R^{p-1}) × R^{2n+2-p}",
        "(R^{p-1} ∪ R^{p-1}) × R^{p-1} × R^{2n+2-2p}",
        "R",
    ),
    "case3/general": (
        "(S^{q-1} × R^{p-q}) × R^{2n+2-p}",
        "T(S^{q-1} × R^{p-q}) × R^{2n+2-2p}",
        "R",
    ),
    "remark": ("S^1 × R^2", "cylinder S^1 × R", "R"),
}


def _label(key: str, gen: Generator, p=None, q=None, ambiguous=False) -> ClassificationLabel:
    quadric, quotient, group = CATALOG[key]
    return ClassificationLabel(
        quadric_label=quadric,
        quotient_label=quotient,
        group=group,
        case=key,
        n=gen.n,
        p=p,
        q=q,
        ambiguous=ambiguous,
    )


def _signature_pq(gen: Generator) -> tuple[int, int]:
    """(p, q) read off the quadratic form H(x) = x^T (Omega A) x for an explicit generator."""
    S = standard_form(gen.n).omega @ gen.A
    S = 0.5 * (S + S.T)
    ev = np.linalg.eigvalsh(S)
    scale = max(1.0, float(np.max(np.abs(ev))))
    pos = int(np.sum(ev > 1e-9 * scale))
    neg = int(np.sum(ev < -1e-9 * scale))
    return pos, neg


def classify_quotient(gen: Generator, mu0: float) -> ClassificationLabel:
    """Catalog lookup of the quadric Sigma_mu0 and its orbit space."""
    mu0 = float(mu0)
    if mu0 == 0.0:
        raise InvalidInputError("mu0 must be nonzero")
    tag = gen.case_tag
    p, q = gen.p, gen.q
    lam = gen.lam
    if tag is CaseTag.EXPLICIT:
        if lam is None:
            raise UnsupportedClassificationError(
                "explicit generator without A^2 = lambda Id structure is not in the catalog"
            )
        pos, neg = _signature_pq(gen)
        if lam < 0:
            tag, p, q = CaseTag.MINUS_ID, pos // 2, neg // 2
        elif lam > 0:
            tag = CaseTag.PLUS_ID
        else:
            tag, p, q = CaseTag.NILPOTENT, pos + neg, pos
    if tag is CaseTag.REMARK:
        return _label("remark", gen)
    if tag is CaseTag.PLUS_ID:
        return _label("case2", gen)
    if tag is CaseTag.MINUS_ID:
        if mu0 < 0:
            p, q = q, p
        if p == 0:
            raise UnsupportedClassificationError(
                "empty quadric: H has the wrong sign everywhere for this mu0"
            )
        if p == gen.n + 1:
            return _label("case1/sphere", gen, p, q)
        if p == 1:
            return _label("case1/p=1", gen, p, q)
        return _label("case1/bundle", gen, p, q, ambiguous=(p == gen.n))
    if tag is CaseTag.NILPOTENT:
        if mu0 < 0:
            q = p - q
        if q == 0:
            raise UnsupportedClassificationError(
                "empty quadric: sum eps_k (x^k)^2 has the wrong sign everywhere for this mu0"
            )
        if p == 1:
            return _label("case3/p=q=1", gen, p, q)
        if q == p:
            return _label("case3/q=p", gen, p, q)
        if q == 1:
            return _label("case3/q=1", gen, p, q)
        return _label("case3/general", gen, p, q)
    raise UnsupportedClassificationError(f"no catalog entry for {tag}")
