"""Polynomial vector fields on R^d with exact arithmetic on coefficients.

A :class:`PolyField` with ``k`` components stores one row of exponents per
monomial and a ``(monomials, k)`` coefficient table, so scalar polynomials are
just fields with ``k = 1``.  Products, brackets and directional derivatives stay
polynomial, which keeps the identities checked on them free of truncation error.
"""
from __future__ import annotations

from typing import Any

import numpy as np


class PolyField:
    __slots__ = ("exps", "coef")

    def __init__(self, exps, coef):
        exps = np.asarray(exps, dtype=np.int64)
        coef = np.asarray(coef, dtype=float)
        if coef.ndim == 1:
            coef = coef[:, None]
        if exps.ndim != 2 or exps.shape[0] != coef.shape[0]:
            raise ValueError("exps and coef disagree in number of monomials")
        self.exps, self.coef = _combine(exps, coef)

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int, ncomp: int = 1) -> "PolyField":
        return cls(np.zeros((0, nvars), dtype=np.int64), np.zeros((0, ncomp)))

    @classmethod
    def constant_field(cls, nvars: int, c) -> "PolyField":
        c = np.atleast_1d(np.asarray(c, dtype=float))
        return cls(np.zeros((1, nvars), dtype=np.int64), c[None, :])

    @classmethod
    def linear(cls, B, c=None) -> "PolyField":
        """Field x -> B x (+ c)."""
        B = np.asarray(B, dtype=float)
        k, d = B.shape
        f = cls(np.eye(d, dtype=np.int64), B.T)
        if c is not None:
            f = f + cls.constant_field(d, c)
        return f

    @classmethod
    def coordinate(cls, nvars: int, j: int) -> "PolyField":
        e = np.zeros((1, nvars), dtype=np.int64)
        e[0, j] = 1
        return cls(e, np.ones((1, 1)))

    @classmethod
    def quadratic_form(cls, S) -> "PolyField":
        """Scalar polynomial x -> x^T S x."""
        S = np.asarray(S, dtype=float)
        d = S.shape[0]
        exps, coef = [], []
        for i in range(d):
            for j in range(d):
                if S[i, j] != 0.0:
                    e = np.zeros(d, dtype=np.int64)
                    e[i] += 1
                    e[j] += 1
                    exps.append(e)
                    coef.append([S[i, j]])
        if not exps:
            return cls.zero(d)
        return cls(np.array(exps), np.array(coef))

    @classmethod
    def stack(cls, comps) -> "PolyField":
        comps = list(comps)
        nvars = comps[0].nvars
        k = sum(c.ncomp for c in comps)
        exps, coef = [], []
        off = 0
        for c in comps:
            block = np.zeros((c.exps.shape[0], k))
            block[:, off : off + c.ncomp] = c.coef
            exps.append(c.exps)
            coef.append(block)
            off += c.ncomp
        return cls(np.concatenate(exps) if exps else np.zeros((0, nvars)), np.concatenate(coef))

    # -- shape --------------------------------------------------------------
    @property
    def nvars(self) -> int:
        return self.exps.shape[1]

    @property
    def ncomp(self) -> int:
        return self.coef.shape[1]

    @property
    def degree(self) -> int:
        return int(self.exps.sum(axis=1).max()) if self.exps.shape[0] else 0

    def __len__(self):
        return self.ncomp

    def __getitem__(self, i) -> "PolyField":
        # rows are already unique, so only the zero filter is needed
        coef = self.coef[:, [i]]
        keep = coef[:, 0] != 0.0
        out = object.__new__(PolyField)
        out.exps, out.coef = self.exps[keep], coef[keep]
        return out

    def __repr__(self):
        return f"PolyField(nvars={self.nvars}, ncomp={self.ncomp}, terms={self.exps.shape[0]}, degree={self.degree})"

    # -- evaluation ---------------------------------------------------------
    def monomials(self, x) -> np.ndarray:
        x = np.asarray(x)
        return np.prod(x[..., None, :] ** self.exps, axis=-1)

    def __call__(self, x):
        """Value at x (shape ``(..., nvars)``); scalar fields return a scalar per point."""
        val = self.monomials(x) @ self.coef
        return val[..., 0] if self.ncomp == 1 else val

    def partial(self, j: int) -> "PolyField":
        mask = self.exps[:, j] > 0
        exps = self.exps[mask].copy()
        coef = self.coef[mask] * exps[:, j, None]
        exps[:, j] -= 1
        if not exps.shape[0]:
            return PolyField.zero(self.nvars, self.ncomp)
        return PolyField(exps, coef)

    def jacobian(self, x) -> np.ndarray:
        """(ncomp, nvars) matrix of exact partial derivatives at x."""
        return np.stack([np.atleast_1d(self.partial(j)(x)) for j in range(self.nvars)], axis=-1)

    def directional(self, x, y) -> np.ndarray:
        """Exact derivative at x in the direction y."""
        return self.jacobian(x) @ np.asarray(y)

    # -- algebra ------------------------------------------------------------
    def __add__(self, other: "PolyField") -> "PolyField":
        if not isinstance(other, PolyField):
            return NotImplemented
        return PolyField(np.concatenate([self.exps, other.exps]), np.concatenate([self.coef, other.coef]))

    def __neg__(self) -> "PolyField":
        return PolyField(self.exps, -self.coef)

    def __sub__(self, other: "PolyField") -> "PolyField":
        return self + (-other)

    def scale(self, s: float) -> "PolyField":
        return PolyField(self.exps, s * self.coef)

    def __rmul__(self, s):
        if np.isscalar(s):
            return self.scale(float(s))
        return NotImplemented

    def __mul__(self, other):
        """Product with a scalar polynomial (either side) or a real number."""
        if np.isscalar(other):
            return self.scale(float(other))
        if not isinstance(other, PolyField):
            return NotImplemented
        return PolyField(*_product_terms(self, other))

    def matmul(self, M) -> "PolyField":
        """Field x -> M F(x)."""
        M = np.asarray(M, dtype=float)
        return PolyField(self.exps, self.coef @ M.T)

    def dot(self, other: "PolyField", M=None) -> "PolyField":
        """Scalar polynomial F^T M G (M defaults to the identity)."""
        G = other if M is None else other.matmul(M)
        terms = [_product_terms(self[i], G[i]) for i in range(self.ncomp)]
        return _from_terms(terms, self.nvars, 1)

    def derivative_along(self, Y: "PolyField") -> "PolyField":
        """D_Y F = sum_j Y_j dF/dx_j (flat directional derivative along a field)."""
        terms = []
        for j in range(self.nvars):
            dj = self.partial(j)
            if dj.exps.shape[0]:
                terms.append(_product_terms(dj, Y[j]))
        return _from_terms(terms, self.nvars, self.ncomp)

    def bracket(self, other: "PolyField") -> "PolyField":
        """Lie bracket [self, other] = D_self other - D_other self."""
        return other.derivative_along(self) - self.derivative_along(other)

    # -- serialisation ------------------------------------------------------
    def to_json(self) -> list[list[dict[str, Any]]]:
        out = []
        for i in range(self.ncomp):
            terms = [
                {"coords": [int(e) for e in self.exps[m]], "coeff": float(self.coef[m, i])}
                for m in range(self.exps.shape[0])
                if self.coef[m, i] != 0.0
            ]
            out.append(terms)
        return out

    @classmethod
    def from_json(cls, doc, nvars: int | None = None) -> "PolyField":
        if nvars is None:
            nvars = next((len(t["coords"]) for comp in doc for t in comp), None)
            if nvars is None:
                raise ValueError("cannot infer the number of variables of an all-zero field")
        exps, coef = [], []
        k = len(doc)
        for i, comp in enumerate(doc):
            for t in comp:
                if len(t["coords"]) != nvars:
                    raise ValueError("inconsistent exponent length")
                row = np.zeros(k)
                row[i] = t["coeff"]
                exps.append(t["coords"])
                coef.append(row)
        if not exps:
            return cls.zero(nvars, k)
        return cls(np.array(exps), np.array(coef))


def _product_terms(a: PolyField, b: PolyField):
    """Unmerged monomial table of a product where one factor is scalar."""
    if b.ncomp == 1:
        scal, vec = b, a
    elif a.ncomp == 1:
        scal, vec = a, b
    else:
        raise ValueError("can only multiply by a scalar polynomial")
    exps = (scal.exps[:, None, :] + vec.exps[None, :, :]).reshape(-1, vec.nvars)
    coef = (scal.coef[:, None, :] * vec.coef[None, :, :]).reshape(-1, vec.ncomp)
    return exps, coef


def _from_terms(terms, nvars: int, ncomp: int) -> PolyField:
    if not terms:
        return PolyField.zero(nvars, ncomp)
    return PolyField(np.concatenate([e for e, _ in terms]), np.concatenate([c for _, c in terms]))


def _combine(exps: np.ndarray, coef: np.ndarray):
    """Merge duplicate monomials and drop exact zeros."""
    if exps.shape[0] == 0:
        return exps.reshape(0, exps.shape[1]), coef.reshape(0, coef.shape[1])
    base = int(exps.max()) + 1 if exps.size else 1
    if exps.shape[1] * np.log2(max(base, 2)) < 62:
        # mixed-radix code of each exponent row; 1-d unique is much faster than axis=0
        keys = exps @ (base ** np.arange(exps.shape[1], dtype=np.int64))
        _, first, inv = np.unique(keys, return_index=True, return_inverse=True)
        uniq = exps[first]
    else:
        uniq, inv = np.unique(exps, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    acc = np.zeros((uniq.shape[0], coef.shape[1]))
    np.add.at(acc, inv, coef)
    keep = np.any(acc != 0.0, axis=1)
    return uniq[keep], acc[keep]
