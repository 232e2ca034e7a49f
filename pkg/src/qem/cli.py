"""Command-line interface: ``qem catalog-verify | solvable | sweep | check``.

Exit codes: 0 when every check passes, 1 when a verification check fails and
2 for input or configuration errors.  Reports are printed as text (one line
per check) or JSON; both carry the same numbers, written with Python's
shortest round-trip float repr.

Tolerances default to ``DEFAULT_TOLERANCES``.  ``QEM_TOL`` in the environment
replaces every residual tolerance, a ``tolerance`` key in a check file
replaces it again and ``--tol`` wins over both.  The rigidity split
(accept/reject) is never overridden.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import jsonschema

from . import __version__
from .errors import DomainError, InfeasibleError, InputError, QEMError
from .lie_geometry import LieAlgebraMetric, curvature, jacobi_residual, raw_ricci
from .qe_analysis import (
    LieGeometry,
    QEParameters,
    WarpedGeometry,
    build_pq,
    csw_identity_suite,
    deriv_p_identity,
    derive_structure,
    dim3_spectrum_defect,
    hessian_residual,
    left_invariant_qe_residual,
    p_quadratic_residual,
    pq_points,
    radial_curvature_defect,
    radial_q_flatness,
    rho_from_scal,
    rigidity_certificate,
    scalar_bound_violation,
    trace_p_defect,
)
from .solvable_family import FamilyParams, build, convergence_sweep
from .tensor_core import q_trace_check
from .warped_geometry import (
    PROFILE_KINDS,
    ProfileFunction,
    WarpedProductModel,
    catalog,
    mu_bar_at,
    qe_residual_at,
)

VERDICTS = ("pass", "fail", "inconclusive", "info")

DEFAULT_TOLERANCES = {
    "identity": 1e-10,
    "catalog_qe": 1e-9,
    "mubar": 1e-12,
    "jacobi": 1e-12,
}
CATALOG_M = (1.5, 2.0, 3.0, 7.0)
CATALOG_N = (3, 4, 5)


class ConfigError(Exception):
    """Bad command line or configuration; maps to exit code 2."""


# --------------------------------------------------------------------------- reports


def _clean(value):
    """Convert numpy values to JSON types; returns (clean, all_finite)."""
    if isinstance(value, dict):
        out, ok = {}, True
        for k, v in value.items():
            out[k], fine = _clean(v)
            ok = ok and fine
        return out, ok
    if isinstance(value, (list, tuple, np.ndarray)):
        items = [_clean(v) for v in value]
        return [v for v, _ in items], all(ok for _, ok in items)
    if isinstance(value, (bool, np.bool_)):
        return bool(value), True
    if isinstance(value, (int, np.integer)):
        return int(value), True
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return (v, True) if math.isfinite(v) else (None, False)
    return value, True


@dataclass
class CheckRecord:
    check_name: str
    inputs: dict
    values: dict
    verdict: str
    tolerance: Any = None

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        self.inputs, _ = _clean(self.inputs)
        self.values, finite = _clean(self.values)
        self.tolerance, _ = _clean(self.tolerance)
        if not finite:
            self.verdict = "fail"

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "inputs": self.inputs,
            "values": self.values,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
        }


@dataclass
class Report:
    command: str
    checks: list = field(default_factory=list)

    def add(self, name, inputs, values, verdict, tolerance=None) -> CheckRecord:
        rec = CheckRecord(name, inputs, values, verdict, tolerance)
        self.checks.append(rec)
        return rec

    def judge(self, name, inputs, values, tolerance, keys=None) -> CheckRecord:
        """Record a pass/fail check: every value named in ``keys`` must be <= tolerance."""
        keys = list(values) if keys is None else keys
        ok = all(values[k] is not None and values[k] <= tolerance for k in keys)
        return self.add(name, inputs, values, "pass" if ok else "fail", tolerance)

    @property
    def summary(self) -> dict:
        counts = {"passed": 0, "failed": 0, "inconclusive": 0, "info": 0}
        key = {"pass": "passed", "fail": "failed", "inconclusive": "inconclusive", "info": "info"}
        for c in self.checks:
            counts[key[c.verdict]] += 1
        return counts

    @property
    def exit_code(self) -> int:
        return 1 if self.summary["failed"] else 0

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "version": __version__,
            "checks": [c.to_dict() for c in self.checks],
            "summary": self.summary,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        rep = cls(d["command"])
        for c in d["checks"]:
            rep.checks.append(CheckRecord(c["check_name"], c["inputs"], c["values"], c["verdict"], c["tolerance"]))
        return rep

    def __eq__(self, other):
        return isinstance(other, Report) and self.to_dict() == other.to_dict()

    def to_text(self) -> str:
        lines = [f"qem {self.command}"]
        for c in self.checks:
            inputs = " ".join(f"{k}={json.dumps(v)}" for k, v in c.inputs.items())
            values = " ".join(f"{k}={json.dumps(v)}" for k, v in c.values.items())
            tol = "" if c.tolerance is None else f" tol={json.dumps(c.tolerance)}"
            lines.append(f"{c.verdict.upper():<12} {c.check_name} [{inputs}] {values}{tol}")
        s = self.summary
        lines.append(
            f"summary: {s['passed']} passed, {s['failed']} failed, "
            f"{s['inconclusive']} inconclusive, {s['info']} info"
        )
        return "\n".join(lines)


# --------------------------------------------------------------------------- tolerances


def _positive_float(text: str, what: str) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a number, got {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise ConfigError(f"{what} must be a positive finite number, got {text!r}")
    return v


def resolve_tolerances(cli_tol: Optional[float] = None, file_tol: Optional[float] = None) -> dict:
    tols = dict(DEFAULT_TOLERANCES)
    override = None
    env = os.environ.get("QEM_TOL")
    if env not in (None, ""):
        override = _positive_float(env, "QEM_TOL")
    if file_tol is not None:
        override = file_tol
    if cli_tol is not None:
        override = cli_tol
    if override is not None:
        tols = {k: override for k in tols}
    return tols


# --------------------------------------------------------------------------- shared checks


def _safe(fn, *args):
    """Run a check; domain/infeasible errors become (None, message)."""
    try:
        return fn(*args), None
    except (DomainError, InfeasibleError, InputError) as exc:
        return None, str(exc)


def structure_checks(report: Report, qe, tols: dict) -> None:
    """Identity and rigidity records for an admitted structure (Lie or warped)."""
    tol = tols["identity"]
    inputs = {"n": qe.n, "m": qe.m, "lambda": qe.lam}
    report.add("derived_constants", inputs,
               {"rho": qe.rho, "kbar": qe.kbar, "mubar": qe.mubar, "mu": qe.mu}, "info")
    report.judge("hessian_equation", inputs, {"residual": hessian_residual(qe)},
                 tols["identity"] if qe.is_lie else tols["catalog_qe"])
    pts = pq_points(qe)
    report.judge(
        "trace_identities",
        inputs,
        {
            "trace_p": max(trace_p_defect(qe, pq) for _, pq in pts),
            "q_trace": max(q_trace_check(pq.Q, pq.P, qe.n, qe.m) for _, pq in pts),
        },
        tol,
    )
    csw = csw_identity_suite(qe)
    report.judge("csw_identities", inputs, csw._asdict(), tol)
    report.judge("scalar_bounds", inputs, {"violation": scalar_bound_violation(qe)}, tol)
    if qe.is_lie and qe.kbar < 0:
        report.judge("deriv_p_identity", inputs, {"residual": deriv_p_identity(qe)}, tol)
    if qe.n == 3:
        val, err = _safe(dim3_spectrum_defect, qe)
        if err is None:
            report.judge("dim3_spectrum", inputs, {"defect": val}, tol)
        else:
            report.add("dim3_spectrum", inputs, {"error": err}, "fail", tol)

    rq, err = _safe(radial_q_flatness, qe)
    if err is None:
        report.add("radial_q_flatness", inputs, {"max_abs": rq}, "info", tol)
    else:
        report.add("radial_q_flatness", inputs, {"error": err}, "inconclusive", tol)
    report.add("radial_curvature", inputs, {"defect": radial_curvature_defect(qe)}, "info", tol)
    pq = build_pq(qe)
    report.add("p_quadratic", inputs, {"residual": p_quadratic_residual(pq, qe.lam, qe.rho)}, "info", tol)
    cert = rigidity_certificate(qe)
    report.add(
        "rigidity",
        inputs,
        {
            "verdict": cert.verdict,
            "ric_eigenvalues": cert.ric_eigenvalues.eigenvalues,
            "p_eigenvalues": cert.p_eigenvalues.eigenvalues,
            "max_spectral_distance": cert.max_spectral_distance,
            "integrability_defects": cert.integrability_defects,
            "dim3_p12": cert.dim3_p12,
        },
        "info",
    )


def lie_checks(report: Report, algebra: LieAlgebraMetric, radial, m: float, lam: float,
               tols: dict, rho: Optional[float] = None) -> None:
    """Checks shared by ``solvable`` and ``check`` on Lie-algebra inputs.

    ``rho`` may be supplied in closed form; otherwise it is read off the
    scalar curvature.  Brackets failing Jacobi get only the diagnostic
    left-invariant residual.
    """
    n = algebra.dim
    inputs = {"n": n, "m": m, "lambda": lam}
    jac = jacobi_residual(algebra)
    report.judge("jacobi", {"n": n}, {"residual": jac}, tols["jacobi"])
    admitted = report.checks[-1].verdict == "pass"
    ric = curvature(algebra).Ric.components if admitted else raw_ricci(algebra)
    if rho is None:
        if m == 1:
            raise ConfigError("m = 1 needs a closed-form rho; it cannot be read off the scalar curvature")
        rho = rho_from_scal(n, m, lam, float(np.trace(ric)))
    report.judge("left_invariant_equation", dict(inputs, rho=rho),
                 {"residual": left_invariant_qe_residual(algebra, radial, m, lam, rho, ric=ric)},
                 tols["identity"])
    if not admitted or m == 1:
        return
    try:
        qe = derive_structure(QEParameters(n, m, lam), LieGeometry(algebra, radial))
    except QEMError as exc:
        report.add("admission", inputs, {"error": str(exc)}, "fail")
        return
    structure_checks(report, qe, tols)


# --------------------------------------------------------------------------- commands


def cmd_catalog_verify(tols: dict, samples: int, ns=CATALOG_N, ms=CATALOG_M) -> Report:
    if samples < 1:
        raise ConfigError("--samples must be at least 1")
    report = Report("catalog-verify")
    for m in ms:
        seen_1d = set()
        for n in ns:
            for row in catalog(n, m):
                if row.n == 1:
                    if row.index in seen_1d:
                        continue
                    seen_1d.add(row.index)
                rs = row.model.samples(samples)
                qe_res = max(qe_residual_at(row.model, row.w, row.n, m, row.lam, r) for r in rs)
                kbar = (row.lam - row.rho) / m
                mus = [mu_bar_at(row.w, kbar, r) for r in rs]
                values = {
                    "qe_residual": qe_res,
                    "mubar_spread": max(mus) - min(mus),
                    "mu_defect": max(abs((m - 1) * mb - row.mu) for mb in mus),
                }
                tol = {"qe_residual": tols["catalog_qe"], "mubar_spread": tols["mubar"], "mu_defect": tols["mubar"]}
                ok = all(values[k] <= tol[k] for k in values)
                report.add(f"catalog.row{row.index}", {"n": row.n, "m": m, "samples": samples}, values,
                           "pass" if ok else "fail", tol)
    return report


def _family_report(params: FamilyParams, tols: dict, command: str) -> Report:
    r = build(params)
    report = Report(command)
    ric = curvature(r.algebra).Ric.components
    scal = float(np.trace(ric))
    inputs = {"m": params.m, "alpha": params.alpha, "beta": params.beta}
    report.add(
        "family",
        inputs,
        {
            "lambda": r.lam,
            "rho": r.rho,
            "z": r.z,
            "F": r.F,
            "scal": scal,
            "ricci": ric,
            "on_rigid_locus": params.on_rigid_locus,
        },
        "info",
    )
    report.judge("scal_identity", inputs, {"residual": abs(scal - (3 * r.lam - (params.m - 1) * r.rho))},
                 tols["identity"])
    lie_checks(report, r.algebra, r.radial, params.m, r.lam, tols, rho=r.rho if params.m == 1 else None)
    return report


def cmd_solvable(m: float, alpha: float, beta: float, tols: dict) -> Report:
    try:
        params = FamilyParams(m, alpha, beta)
    except InputError as exc:
        raise ConfigError(str(exc)) from None
    return _family_report(params, tols, "solvable")


def parse_m_list(text: str) -> list[float]:
    try:
        ms = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--m must be a comma-separated list of numbers, got {text!r}") from None
    if not ms:
        raise ConfigError("--m list is empty")
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise ConfigError(f"--m values must be strictly ascending, got {text!r}")
    return ms


def cmd_sweep(alpha: float, beta: float, ms: list, tols: dict) -> Report:
    try:
        result = convergence_sweep(alpha, beta, ms)
    except InputError as exc:
        raise ConfigError(str(exc)) from None
    report = Report("sweep")
    for p in result.points:
        report.add("sweep.point", {"alpha": alpha, "beta": beta, "m": p.m},
                   {"f_norm": p.f_norm, "relation_gap": p.relation_gap, "ricci_gap": p.ricci_gap}, "info")
    for name, ok in result.monotone.items():
        report.add(f"monotone.{name}", {"m": list(ms)}, {"nonincreasing": ok}, "pass" if ok else "fail", 1e-14)
    lim = result.limit
    report.judge("limit.solvsoliton", {"alpha": alpha, "beta": beta},
                 {"soliton_residual": lim.soliton_residual, "derivation_residual": lim.derivation_residual},
                 tols["identity"])
    ric = curvature(lim.algebra).Ric.components
    report.add("limit.ricci", {"alpha": alpha, "beta": beta},
               {"lambda": lim.lam, "ricci": ric, "einstein": bool(np.ptp(np.linalg.eigvalsh(ric)) <= 1e-12)}, "info")
    return report


# --------------------------------------------------------------------------- check files

_NUMBER = {"type": "number"}
LIE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "dim", "m", "lambda", "structure_constants", "radial"],
    "properties": {
        "kind": {"const": "lie"},
        "dim": {"type": "integer", "minimum": 1, "maximum": 16},
        "n": {"type": "integer", "minimum": 1, "maximum": 16},
        "m": {"type": "number", "exclusiveMinimum": 0},
        "lambda": _NUMBER,
        "structure_constants": {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [{"type": "integer", "minimum": 0}] * 3 + [_NUMBER],
                "minItems": 4,
                "maxItems": 4,
            },
        },
        "radial": {"type": "array", "items": _NUMBER, "minItems": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
}
_PROFILE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(PROFILE_KINDS)},
        "amplitude": _NUMBER,
        "frequency": _NUMBER,
    },
}
WARPED_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "interval", "fiber_dim", "fiber_einstein_constant", "profile", "w", "n", "m", "lambda"],
    "properties": {
        "kind": {"const": "warped"},
        "interval": {
            "type": "array",
            "prefixItems": [{"type": ["number", "null"]}, {"type": ["number", "null"]}],
            "minItems": 2,
            "maxItems": 2,
        },
        "fiber_dim": {"type": "integer", "minimum": 0},
        "fiber_einstein_constant": _NUMBER,
        "profile": _PROFILE,
        "w": _PROFILE,
        "n": {"type": "integer", "minimum": 1, "maximum": 16},
        "m": {"type": "number", "exclusiveMinimum": 0},
        "lambda": _NUMBER,
        "factor": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dim", "einstein_constant"],
            "properties": {"dim": {"type": "integer", "minimum": 0}, "einstein_constant": _NUMBER},
        },
        "samples": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
}


def _location(doc_text: str, path) -> str:
    """Best-effort ``line N`` for the JSON key at the end of ``path``."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return ""
    needle = json.dumps(keys[-1]) + ":"
    for lineno, line in enumerate(doc_text.splitlines(), start=1):
        if needle in line.replace('" :', '":'):
            return f" (line {lineno})"
    return ""


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if not text.strip():
        raise ConfigError(f"{path}: file is empty")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("kind") not in ("lie", "warped"):
        raise ConfigError(f"{path}: top level must be an object with kind 'lie' or 'warped'")
    schema = LIE_SCHEMA if doc["kind"] == "lie" else WARPED_SCHEMA
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            msgs.append(f"{path}: field {where}{_location(text, e.absolute_path)}: {e.message}")
        raise ConfigError("\n".join(msgs))
    return doc


def _profile(spec: dict) -> ProfileFunction:
    return ProfileFunction(spec["kind"], float(spec.get("amplitude", 1.0)), float(spec.get("frequency", 1.0)))


def cmd_check(path: str, tols_cli: Optional[float]) -> Report:
    doc = load_config(path)
    tols = resolve_tolerances(tols_cli, doc.get("tolerance"))
    m, lam = float(doc["m"]), float(doc["lambda"])
    report = Report("check")
    try:
        if doc["kind"] == "lie":
            dim = doc["dim"]
            if doc.get("n", dim) != dim:
                raise ConfigError(f"{path}: n = {doc['n']} differs from dim = {dim}")
            algebra = LieAlgebraMetric.from_triples(dim, [tuple(t) for t in doc["structure_constants"]])
            radial = np.asarray(doc["radial"], dtype=float)
            if radial.shape != (dim,):
                raise ConfigError(f"{path}: field radial must have {dim} entries")
            if m == 1:
                raise ConfigError(f"{path}: m = 1 leaves rho undefined")
            LieGeometry(algebra, radial)  # validates the unit radial vector
            lie_checks(report, algebra, radial, m, lam, tols)
        else:
            factor = doc.get("factor", {"dim": 0, "einstein_constant": 0.0})
            model = WarpedProductModel(
                interval=tuple(None if x is None else float(x) for x in doc["interval"]),
                fiber_dim=doc["fiber_dim"],
                fiber_einstein_constant=float(doc["fiber_einstein_constant"]),
                profile=_profile(doc["profile"]),
                factor_dim=factor["dim"],
                factor_einstein_constant=float(factor["einstein_constant"]),
            )
            if m == 1:
                raise ConfigError(f"{path}: m = 1 leaves rho undefined")
            params = QEParameters(doc["n"], m, lam)
            geometry = WarpedGeometry(model, _profile(doc["w"]), doc.get("samples", 20))
            try:
                qe = derive_structure(params, geometry)
            except QEMError as exc:
                if isinstance(exc, InputError):
                    raise
                report.add("admission", {"n": params.n, "m": m, "lambda": lam}, {"error": str(exc)}, "fail")
                return report
            structure_checks(report, qe, tols)
    except InputError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return report


# --------------------------------------------------------------------------- entry point


def _parse_n_list(text: str) -> list[int]:
    try:
        ns = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--n must be a comma-separated list of integers, got {text!r}") from None
    if not ns or any(not 2 <= n <= 16 for n in ns):
        raise ConfigError("--n values must lie in 2..16")
    return ns


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qem {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol", type=str, default=None, help="override every residual tolerance")
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("catalog-verify", help="verify the rigid catalog rows")
    common(p)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--n", type=str, default=",".join(map(str, CATALOG_N)), help="dimensions for rows 6-10")

    p = sub.add_parser("solvable", help="build and verify one member of the solvable family")
    common(p)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)

    p = sub.add_parser("sweep", help="convergence of the family as m grows")
    common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--m", type=str, required=True, help="comma-separated ascending m values")

    p = sub.add_parser("check", help="verify a structure described in a JSON file")
    common(p)
    p.add_argument("file")
    return parser


def run(args: argparse.Namespace) -> Report:
    cli_tol = None if args.tol is None else _positive_float(args.tol, "--tol")
    if args.command == "check":
        return cmd_check(args.file, cli_tol)
    tols = resolve_tolerances(cli_tol)
    if args.command == "catalog-verify":
        return cmd_catalog_verify(tols, args.samples, _parse_n_list(args.n))
    if args.command == "solvable":
        return cmd_solvable(args.m, args.alpha, args.beta, tols)
    return cmd_sweep(args.alpha, args.beta, parse_m_list(args.m), tols)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report = run(args)
    except ConfigError as exc:
        print(f"qem: error: {exc}", file=sys.stderr)
        return 2
    except (QEMError, ValueError, OverflowError, ZeroDivisionError) as exc:
        print(f"qem: error: {exc}", file=sys.stderr)
        return 2
    print(report.to_json() if args.format == "json" else report.to_text())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
