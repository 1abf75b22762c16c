"""Command-line entry point: ``sympred <command> [flags]``.

Exit codes: 0 success, 1 a verification check failed, 2 invalid input or an
unsupported request.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Any

from .chart import curvature_fd, make_chart
from .curvature import closed_form_curvature
from .errors import InvalidInputError, SympredError
from .quadric import Quadric, flow, hamiltonian, make_point, sample_point
from .symplectic import classify_quotient
from .tolerances import resolve
from .verify import RunConfig, run_verify

COMMANDS = ("classify", "verify", "report", "curvature", "oracle", "flow", "sample")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidInputError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="JSON run configuration; flags given explicitly override it")
    g.add_argument("--case", choices=["case1", "case2", "case3", "remark"])
    g.add_argument("--n", type=int)
    g.add_argument("--p", type=int)
    g.add_argument("--q", type=int)
    g.add_argument("--a", type=float, help="real part of the eigenvalues (remark generator)")
    g.add_argument("--b", type=float, help="imaginary part of the eigenvalues (remark generator)")
    g.add_argument("--mu0", type=float)
    g.add_argument("--samples", type=int)
    g.add_argument("--seed", type=int, help="random seed (fallback: $SYMPRED_SEED, then 0)")
    g.add_argument("--h", type=float, help="finite-difference step of the chart oracle")
    g.add_argument("--workers", type=int)
    g.add_argument("--format", choices=["text", "json", "csv"])
    g.add_argument("--out", help="write output to this file instead of stdout")

    parser = _Parser(prog="sympred", description="Reduced symplectic connections on quadrics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("classify", parents=[common], help="quadric and quotient labels from the catalog")
    sub.add_parser("verify", parents=[common], help="run the verification suite")
    sub.add_parser("report", parents=[common], help="write the verification report (json or csv)")
    sub.add_parser("curvature", parents=[common], help="closed-form curvature at sample points")
    sub.add_parser("oracle", parents=[common], help="finite-difference chart curvature against the closed form")
    fl = sub.add_parser("flow", parents=[common], help="apply the Hamiltonian flow to a point")
    fl.add_argument("--t", type=float, required=True)
    fl.add_argument("--x", help="comma-separated point on the quadric, written --x=... when it starts with a minus sign (default: first sample point)")
    sub.add_parser("sample", parents=[common], help="seeded points of the quadric")
    return parser


def _generator_doc(args) -> dict[str, Any] | None:
    if args.case is None:
        return None
    n = 1 if args.n is None else args.n
    if args.case == "case1":
        return {"kind": "case1", "n": n, "p": n + 1 if args.p is None else args.p}
    if args.case == "case2":
        return {"kind": "case2", "n": n}
    if args.case == "case3":
        p = min(2, n + 1) if args.p is None else args.p
        return {"kind": "case3", "n": n, "p": p, "q": 1 if args.q is None else args.q}
    return {"kind": "remark", "a": 1.0 if args.a is None else args.a, "b": 1.0 if args.b is None else args.b}


def _env_seed() -> int | None:
    raw = os.environ.get("SYMPRED_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise InvalidInputError(f"SYMPRED_SEED must be an integer, got {raw!r}") from None


def config_from_args(args) -> RunConfig:
    doc: dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise InvalidInputError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"config is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise InvalidInputError("config must be a JSON object")
    gen = _generator_doc(args)
    if gen is not None:
        doc["generator"] = gen
        doc.pop("n", None)
    elif "generator" not in doc:
        raise InvalidInputError("give --case or a --config with a generator")
    elif args.n is not None:
        doc["n"] = args.n
    for key in ("mu0", "samples", "seed", "h", "workers"):
        val = getattr(args, key)
        if val is not None:
            doc[key] = val
    if "seed" not in doc:
        env = _env_seed()
        if env is not None:
            doc["seed"] = env
    return RunConfig.from_json(doc)


# --------------------------------------------------------------------------
# commands

def cmd_classify(cfg: RunConfig, fmt: str) -> tuple[str, int]:
    label = classify_quotient(cfg.generator, cfg.mu0)
    if fmt == "json":
        return json.dumps(label.to_json(), indent=2, ensure_ascii=False) + "\n", 0
    lines = [
        f"quadric:  {label.quadric_label}",
        f"quotient: {label.quotient_label}",
        f"group:    {label.group}",
        f"entry:    {label.case}",
    ]
    if label.ambiguous:
        lines.append("note:     boundary case of the catalog; label is the nearest general entry")
    return "\n".join(lines) + "\n", 0


def cmd_verify(cfg: RunConfig, fmt: str) -> tuple[str, int]:
    report = run_verify(cfg)
    return report.dumps(fmt), report.exit_code


def cmd_report(cfg: RunConfig, fmt: str) -> tuple[str, int]:
    if fmt not in ("json", "csv"):
        raise InvalidInputError("report format must be json or csv")
    report = run_verify(cfg)
    return report.dumps(fmt), report.exit_code


def _points(cfg: RunConfig, q: Quadric):
    return [sample_point(q, cfg.seed, i) for i in range(cfg.samples)]


def cmd_curvature(cfg: RunConfig, fmt: str) -> tuple[str, int]:
    q = Quadric(cfg.generator, cfg.mu0)
    rows = []
    for i, pt in enumerate(_points(cfg, q)):
        c = closed_form_curvature(q, pt)
        rows.append(
            {
                "point": i,
                "x": c.x.tolist(),
                "kappa": c.kappa,
                "w_norm": c.w_norm,
                "kappa_fit_residual": c.kappa_fit_residual,
                "residuals": dict(sorted(c.residuals.items())),
            }
        )
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n", 0
    if fmt == "csv":
        return _csv(rows, ["point", "kappa", "w_norm", "kappa_fit_residual"]), 0
    lines = [f"{'point':>5}  {'kappa':>14}  {'w_norm':>10}  {'kappa_fit':>10}"]
    for r in rows:
        lines.append(f"{r['point']:>5}  {r['kappa']:>14.10f}  {r['w_norm']:>10.2e}  {r['kappa_fit_residual']:>10.2e}")
    return "\n".join(lines) + "\n", 0


def cmd_oracle(cfg: RunConfig, fmt: str) -> tuple[str, int]:
    q = Quadric(cfg.generator, cfg.mu0)
    tol = resolve(cfg.tolerances)
    rows, ok = [], True
    for i, pt in enumerate(_points(cfg, q)):
        oc = curvature_fd(make_chart(q, pt), cfg.h)
        disc_ok = tol["oracle_discrepancy"].passes(oc.discrepancy)
        rich_ok = tol["richardson"].passes(abs(oc.richardson_ratio / 4.0 - 1.0))
        ok = ok and disc_ok and rich_ok
        rows.append({"point": i, **oc.to_json(), "discrepancy_pass": disc_ok, "richardson_pass": rich_ok})
    code = 0 if ok else 1
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n", code
    if fmt == "csv":
        return _csv(rows, list(rows[0])), code
    lines = [f"{'point':>5}  {'h':>8}  {'discrepancy':>11}  {'at h/2':>11}  {'ratio':>7}  {'C':>9}  pass"]
    for r in rows:
        flag = "yes" if r["discrepancy_pass"] and r["richardson_pass"] else "no"
        lines.append(
            f"{r['point']:>5}  {r['h']:>8.1e}  {r['discrepancy']:>11.3e}  {r['discrepancy_half']:>11.3e}"
            f"  {r['richardson_ratio']:>7.3f}  {r['C']:>9.3e}  {flag}"
        )
    return "\n".join(lines) + "\n", code


def cmd_flow(cfg: RunConfig, fmt: str, t: float, x: str | None) -> tuple[str, int]:
    q = Quadric(cfg.generator, cfg.mu0)
    if x is None:
        pt = sample_point(q, cfg.seed, 0)
    else:
        try:
            vals = [float(v) for v in x.split(",")]
        except ValueError:
            raise InvalidInputError("--x must be comma-separated numbers") from None
        if len(vals) != q.dim:
            raise InvalidInputError(f"--x needs {q.dim} coordinates")
        pt = make_point(q, vals)
    y = flow(q, pt, t)
    doc = {"t": t, "x": pt.x.tolist(), "psi_t(x)": y.x.tolist(), "H_residual": float(abs(hamiltonian(q, y) - q.mu0))}
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n", 0
    fmtv = lambda v: " ".join(f"{c: .12g}" for c in v)  # noqa: E731
    return f"x        = {fmtv(pt.x)}\npsi_t(x) = {fmtv(y.x)}\n|H - mu0| = {doc['H_residual']:.3e}\n", 0


def cmd_sample(cfg: RunConfig, fmt: str) -> tuple[str, int]:
    q = Quadric(cfg.generator, cfg.mu0)
    pts = _points(cfg, q)
    if fmt == "json":
        return json.dumps([p.x.tolist() for p in pts], indent=2) + "\n", 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["point"] + [f"x{k}" for k in range(q.dim)])
    for i, p in enumerate(pts):
        w.writerow([i] + [repr(float(c)) for c in p.x])
    text = buf.getvalue()
    if fmt == "text":
        text = "\n".join(" ".join(f"{c: .12g}" for c in p.x) for p in pts) + "\n"
    return text, 0


def _csv(rows, cols) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols])
    return buf.getvalue()


_DEFAULT_FORMAT = {"report": "json", "curvature": "text", "oracle": "text", "flow": "text", "sample": "json"}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
        fmt = args.format or _DEFAULT_FORMAT.get(args.command, "text")
        if args.command == "flow":
            text, code = cmd_flow(cfg, fmt, args.t, args.x)
        else:
            text, code = globals()[f"cmd_{args.command}"](cfg, fmt)
        if args.out:
            try:
                with open(args.out, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
            except OSError as exc:
                raise InvalidInputError(f"cannot write {args.out}: {exc}") from None
        else:
            sys.stdout.write(text)
        return code
    except SympredError as exc:
        # invalid input, unsupported requests and numerical breakdowns alike
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
