"""Run configuration, the verification suite and its machine-readable report."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__
from .chart import coordinate_frame, curvature_fd, make_chart, stencil_constraint_residual
from .connection import (
    connection_field,
    frame_residuals,
    geodesic_defect,
    hamiltonian_polyfield,
    random_tangent_field,
)
from .curvature import closed_form_curvature, kappa_closed, nabla_ricci_and_u
from .errors import InvalidInputError, UnsupportedClassificationError
from .quadric import Quadric, hamiltonian, sample_point
from .symplectic import (
    Generator,
    algebra_residual,
    classify_quotient,
    default_mu0,
    generator_from_json,
)
from .tolerances import Tolerance, resolve

GROUPS = ("algebra", "sampling", "geodesic", "ambient", "reduced", "curvature", "kappa", "symmetry", "oracle")


@dataclass(frozen=True)
class RunConfig:
    generator: Generator
    mu0: float
    samples: int = 10
    seed: int = 0
    h: float = 1e-3
    workers: int = 1
    tolerances: dict[str, float] = field(default_factory=dict)
    expect_locally_symmetric: bool | None = None
    field_pairs: int = 20
    commands: tuple[str, ...] = GROUPS

    def __post_init__(self):
        if not math.isfinite(self.mu0) or self.mu0 == 0.0:
            raise InvalidInputError("mu0 must be a nonzero real number")
        if self.samples < 1:
            raise InvalidInputError("samples must be at least 1")
        if self.workers < 1:
            raise InvalidInputError("workers must be at least 1")
        if self.field_pairs < 0:
            raise InvalidInputError("field_pairs must be non-negative")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise InvalidInputError("h must be a positive number")
        unknown = [c for c in self.commands if c not in GROUPS]
        if unknown:
            raise InvalidInputError(f"unknown check groups {unknown}; choose from {list(GROUPS)}")
        resolve(self.tolerances)

    @property
    def expects_symmetric(self) -> bool:
        if self.expect_locally_symmetric is not None:
            return self.expect_locally_symmetric
        return self.generator.lam is not None

    @classmethod
    def from_json(cls, doc: dict[str, Any] | str) -> "RunConfig":
        if isinstance(doc, str):
            doc = json.loads(doc)
        if not isinstance(doc, dict) or "generator" not in doc:
            raise InvalidInputError("config needs a 'generator' object")
        gen = generator_from_json(doc["generator"])
        if "n" in doc and doc["n"] is not None and int(doc["n"]) != gen.n:
            raise InvalidInputError(f"config n={doc['n']} disagrees with the generator (n={gen.n})")
        known = {
            "generator", "n", "mu0", "samples", "seed", "h", "workers",
            "tolerances", "expect_locally_symmetric", "field_pairs", "commands",
        }
        extra = sorted(set(doc) - known)
        if extra:
            raise InvalidInputError(f"unknown config fields {extra}")
        try:
            mu0 = doc.get("mu0")
            return cls(
                generator=gen,
                mu0=default_mu0(gen) if mu0 is None else float(mu0),
                samples=int(doc.get("samples", 10)),
                seed=int(doc.get("seed", 0)),
                h=float(doc.get("h", 1e-3)),
                workers=int(doc.get("workers", 1)),
                tolerances=dict(doc.get("tolerances") or {}),
                expect_locally_symmetric=doc.get("expect_locally_symmetric"),
                field_pairs=int(doc.get("field_pairs", 20)),
                commands=tuple(doc.get("commands") or GROUPS),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"malformed config: {exc}") from None

    def to_json(self) -> dict[str, Any]:
        return {
            "generator": self.generator.to_json(),
            "n": self.generator.n,
            "mu0": self.mu0,
            "samples": self.samples,
            "seed": self.seed,
            "h": self.h,
            "workers": self.workers,
            "tolerances": dict(sorted(self.tolerances.items())),
            "expect_locally_symmetric": self.expect_locally_symmetric,
            "field_pairs": self.field_pairs,
            "commands": list(self.commands),
        }


@dataclass(frozen=True)
class CheckRecord:
    """One verification check.

    ``max_residual`` holds the aggregated statistic named by ``statistic``
    (max for upper-bound checks), and ``tolerance`` is the absolute bound it was
    compared with, so ``pass`` can be recomputed from the record alone.
    """

    name: str
    points_tested: int
    max_residual: float
    tolerance: float
    relation: str
    passed: bool
    per_point: list[float]
    statistic: str = "max"

    def recompute_pass(self) -> bool:
        return Tolerance(self.tolerance, self.relation).passes(self.max_residual)

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "points_tested": self.points_tested,
            "max_residual": self.max_residual,
            "statistic": self.statistic,
            "tolerance": self.tolerance,
            "relation": self.relation,
            "pass": self.passed,
            "per_point": list(self.per_point),
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "CheckRecord":
        return cls(
            name=d["name"],
            points_tested=int(d["points_tested"]),
            max_residual=float(d["max_residual"]),
            tolerance=float(d["tolerance"]),
            relation=d["relation"],
            passed=bool(d["pass"]),
            per_point=[float(v) for v in d["per_point"]],
            statistic=d.get("statistic", "max"),
        )


@dataclass(frozen=True)
class VerificationReport:
    config: RunConfig
    checks: list[CheckRecord]
    summary: dict[str, Any]
    environment: dict[str, Any]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def check(self, name: str) -> CheckRecord:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict[str, Any]:
        return {
            "config": self.config.to_json(),
            "checks": [c.to_json() for c in self.checks],
            "summary": self.summary,
            "environment": self.environment,
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any] | str) -> "VerificationReport":
        if isinstance(doc, str):
            doc = json.loads(doc)
        return cls(
            config=RunConfig.from_json(doc["config"]),
            checks=[CheckRecord.from_json(c) for c in doc["checks"]],
            summary=doc["summary"],
            environment=doc["environment"],
        )

    def dumps(self, fmt: str = "json") -> str:
        if fmt == "json":
            return json.dumps(self.to_json(), indent=2, allow_nan=True) + "\n"
        if fmt == "csv":
            return self._csv()
        if fmt == "text":
            return self._text()
        raise InvalidInputError(f"unknown report format {fmt!r}")

    def _csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "point", "residual", "statistic", "aggregate", "tolerance", "relation", "pass"])
        for c in self.checks:
            for i, r in enumerate(c.per_point):
                w.writerow([c.name, i, repr(r), c.statistic, repr(c.max_residual), repr(c.tolerance), c.relation, c.passed])
        return buf.getvalue()

    def _text(self) -> str:
        width = max(len(c.name) for c in self.checks) if self.checks else 0
        lines = []
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            lines.append(
                f"{flag}  {c.name:<{width}}  {c.statistic:>6} {c.max_residual:.3e} {c.relation} {c.tolerance:.1e}"
                f"  ({c.points_tested} points)"
            )
        s = self.summary
        lines.append(f"ricci_type={s['ricci_type']} locally_symmetric={s['locally_symmetric']}")
        cl = s.get("classification")
        if cl:
            lines.append(f"quotient: {cl['quotient_label']} (quadric {cl['quadric_label']}, group {cl['group']})")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# the suite

def _field_rng(seed: int, k: int) -> np.random.Generator:
    # stream distinct from the point sampler, which keys on (seed, index)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 0x5EED, k])))


def _ambient_fields(q: Quadric, pairs: int, seed: int):
    """Exact torsion and affine-defect polynomials for seeded random tangent field pairs."""
    XH = hamiltonian_polyfield(q)
    out = []
    for k in range(pairs):
        rng = _field_rng(seed, k)
        Y = random_tangent_field(q, rng)
        Z = random_tangent_field(q, rng)
        torsion = connection_field(q, Y, Z) - connection_field(q, Z, Y) - Y.bracket(Z)
        affine = (
            XH.bracket(connection_field(q, Y, Z))
            - connection_field(q, XH.bracket(Y), Z)
            - connection_field(q, Y, XH.bracket(Z))
        )
        out.append((torsion, affine))
    return out


def _point_checks(q: Quadric, cfg: RunConfig, fields, index: int) -> dict[str, float]:
    groups = set(cfg.commands)
    pt = sample_point(q, cfg.seed, index)
    x = pt.x
    r: dict[str, float] = {"on_surface": float(abs(hamiltonian(q, x) - q.mu0) / max(1.0, abs(q.mu0)))}
    if "geodesic" in groups:
        r["geodesic"] = geodesic_defect(q, x)
    if "ambient" in groups and fields:
        r["torsion"] = max(float(np.max(np.abs(t(x)))) for t, _ in fields)
        r["affine"] = max(float(np.max(np.abs(a(x)))) for _, a in fields)
    chart = None
    if groups & {"reduced", "symmetry", "oracle"}:
        chart = make_chart(q, x)
    if "reduced" in groups:
        frame = coordinate_frame(chart)
        zero = np.zeros(q.dim)
        fr = frame_residuals(q, frame, x, bracket_lifts=[[zero] * len(frame)] * len(frame))
        r.update(
            vertical=fr.vertical,
            reduced_torsion=fr.torsion,
            reduced_parallel=fr.parallelism,
            lift_bracket=fr.lift_bracket,
        )
    if groups & {"curvature", "kappa"}:
        c = closed_form_curvature(q, x)
        r.update(
            antisymmetry=c.residuals["antisymmetry"],
            bianchi=c.residuals["bianchi"],
            symplectic_symmetry=c.residuals["symplectic_symmetry"],
            w_norm=c.w_norm,
            kappa_fit=c.kappa_fit_residual,
            kappa=c.kappa,
        )
    if "symmetry" in groups:
        nr = nabla_ricci_and_u(q, x, tol=math.inf)
        r["u_norm"] = nr.u.norm
        r["nabla_ricci"] = nr.discrepancy
    if "oracle" in groups:
        oc = curvature_fd(chart, cfg.h)
        r["oracle_discrepancy"] = oc.discrepancy
        r["richardson"] = abs(oc.richardson_ratio / 4.0 - 1.0)
        r["chart_constraints"] = stencil_constraint_residual(chart, cfg.h)
    return r


def _record(name, tol: Tolerance, values, statistic="max", scale=1.0) -> CheckRecord:
    values = [float(v) for v in values]
    agg = {"max": max, "min": min, "median": lambda v: float(np.median(v))}[statistic](values)
    bound = tol.value * (abs(scale) if tol.relative else 1.0)
    return CheckRecord(
        name=name,
        points_tested=len(values),
        max_residual=float(agg),
        tolerance=float(bound),
        relation=tol.relation,
        passed=Tolerance(bound, tol.relation).passes(agg),
        per_point=values,
        statistic=statistic,
    )


def run_verify(cfg: RunConfig, progress: Callable[[str], None] | None = None) -> VerificationReport:
    """Run every selected check on ``cfg.samples`` seeded points of the quadric."""
    tol = resolve(cfg.tolerances)
    q = Quadric(cfg.generator, cfg.mu0)
    groups = set(cfg.commands)
    checks: list[CheckRecord] = []

    if "algebra" in groups:
        checks.append(_record("sp_membership", tol["sp_membership"], [algebra_residual(q.space, q.A)]))

    fields = _ambient_fields(q, cfg.field_pairs, cfg.seed) if "ambient" in groups else []
    idx = range(cfg.samples)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(lambda i: _point_checks(q, cfg, fields, i), idx))
    else:
        rows = [_point_checks(q, cfg, fields, i) for i in idx]

    def col(key):
        return [row[key] for row in rows]

    def add(name, key=None, **kw):
        checks.append(_record(name, tol[name], col(key or name), **kw))
        if progress:
            progress(name)

    if "sampling" in groups:
        add("on_surface")
    if "geodesic" in groups:
        if cfg.generator.lam is not None:
            add("geodesic")
        else:
            add("geodesic_converse_median", "geodesic", statistic="median")
    if "ambient" in groups and fields:
        add("torsion")
        add("affine")
    if "reduced" in groups:
        for name in ("vertical", "reduced_torsion", "reduced_parallel", "lift_bracket"):
            add(name)
    if "curvature" in groups:
        for name in ("antisymmetry", "bianchi", "symplectic_symmetry", "w_norm"):
            add(name)
    kappas = col("kappa") if groups & {"curvature", "kappa"} else []
    if "kappa" in groups:
        add("kappa_fit")
        k0 = kappas[0]
        checks.append(_record("kappa_variation", tol["kappa_variation"], [abs(k - k0) for k in kappas], scale=k0))
        kc = kappa_closed(q)
        checks.append(_record("kappa_value", tol["kappa_value"], [abs(k - kc) for k in kappas], scale=kc))
    locally_symmetric = None
    if "symmetry" in groups:
        if cfg.expects_symmetric:
            add("u_form", "u_norm")
        else:
            add("u_generic", "u_norm", statistic="min")
        add("nabla_ricci")
        locally_symmetric = bool(max(col("u_norm")) <= tol["u_form"].value)
    if "oracle" in groups:
        add("oracle_discrepancy")
        add("richardson")
        add("chart_constraints")

    ricci_type = None
    if "curvature" in groups:
        ricci_type = bool(max(col("w_norm")) <= tol["w_norm"].value)
    try:
        classification = classify_quotient(cfg.generator, cfg.mu0).to_json()
    except UnsupportedClassificationError:
        classification = None
    summary = {
        "ricci_type": ricci_type,
        "locally_symmetric": locally_symmetric,
        "expected_locally_symmetric": cfg.expects_symmetric,
        "kappa": kappa_closed(q),
        "classification": classification,
    }
    env = {"seed": cfg.seed, "version": __version__}
    return VerificationReport(config=cfg, checks=checks, summary=summary, environment=env)
