"""Command-line interface: ``curvtensor <subcommand> [options]``.

Reports are written to stdout (or ``--out``) as sorted, indented JSON with a
run manifest; a one-line human summary goes to stderr unless ``--quiet``.

Exit codes: 0 success, 1 malformed input or other error, 2 theorem
hypothesis or premise not met, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .chain_reduce import (
    Decomposition,
    analyze_four_chain,
    analyze_star,
    analyze_three_chain,
    is_chain,
    reduce_by_kernel,
    reduce_preserving_target,
)
from .curvature import (
    Build,
    CanonicalTerm,
    CurvatureTensor,
    build_RLambda,
    build_RS,
    identity_lambda_split,
    identity_main,
    identity_pullback,
    is_act,
)
from .decompose import Family, conjecture_campaign, constructive_decomposition, minimal_search
from .dependence import check_theorem_SLL, check_theorem_SSL, dependence, necessary_conditions_SSL, pairwise_exclusions
from .errors import CurvTensorError, HypothesisError, PremiseError
from .fuzz import CAMPAIGNS, run_campaign
from .linalg_core import DEFAULT_TOLERANCE, Kind, Mode, SpaceContext
from .serialization import (
    context_from_json,
    infer_dim,
    jsonable,
    operator_from_json,
    tensor_from_json,
    tensor_to_json,
    term_from_json,
    term_to_json,
)
from .structure_group import FormView, verify_structure_theorem

EXIT_OK, EXIT_ERROR, EXIT_HYPOTHESIS, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


class Session:
    """Parsed global options plus the inputs read so far (for the manifest)."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.digests: dict[str, str] = {}
        self._ctx: Optional[SpaceContext] = None
        self.mode_used: Optional[str] = None

    def load(self, name: str, path: str) -> Any:
        raw = Path(path).read_bytes()
        self.digests[name] = hashlib.sha256(raw).hexdigest()
        return json.loads(raw)

    def context(self, data: Any) -> SpaceContext:
        """Context from ``--context``, else an embedded ``"context"`` block, else identity phi."""
        if self._ctx is not None:
            return self._ctx
        args = self.args
        spec = None
        if getattr(args, "context", None):
            spec = self.load("context", args.context)
        elif isinstance(data, dict) and isinstance(data.get("context"), dict):
            spec = data["context"]
        mode = getattr(args, "mode", None)
        tol = getattr(args, "tolerance", None)
        if spec is None:
            spec = {"dim": infer_dim(data), "phi": "identity"}
        ctx = context_from_json(spec, mode=mode or spec.get("mode") or Mode.FLOAT.value, tolerance=tol)
        self._ctx = ctx
        return ctx

    @property
    def mode(self) -> str:
        if self.mode_used is not None:
            return self.mode_used
        return self._ctx.mode.value if self._ctx is not None else (getattr(self.args, "mode", None) or Mode.FLOAT.value)

    @property
    def seed(self) -> int:
        return getattr(self.args, "seed", None) or 0


_OWN_KEYS = {"operator": "matrix", "tensor": "entries", "ops": None, "terms": None}


def _body(data: Any, key: str) -> Any:
    """Unwrap envelopes such as ``{"context": ..., key: ...}`` or a previous report."""
    if isinstance(data, dict) and key in data and _OWN_KEYS.get(key) not in data:
        return data[key]
    return data


def _read_operator(session: Session, name: str, path: str):
    data = session.load(name, path)
    ctx = session.context(data)
    return operator_from_json(_body(data, "operator"), ctx)


def _read_operator_list(session: Session, name: str, path: str) -> list:
    data = session.load(name, path)
    ctx = session.context(data)
    items = _body(data, "ops")
    if not isinstance(items, list):
        raise ValueError("expected a list of operators")
    return [operator_from_json(_body(item, "operator"), ctx) for item in items]


def _read_tensor(session: Session, name: str, path: str) -> CurvatureTensor:
    data = session.load(name, path)
    ctx = session.context(data)
    return tensor_from_json(_body(data, "tensor"), ctx)


def _read_tensor_like(item: Any, ctx: SpaceContext) -> CurvatureTensor:
    """A canonical term, a bare operator (term with sign +1) or a raw tensor."""
    if "entries" in item:
        return tensor_from_json(item, ctx)
    if "operator" in item:
        return term_from_json(item, ctx).tensor()
    return term_from_json({"operator": item}, ctx).tensor()


def _parse_signs(text: str) -> list[int]:
    out = []
    for tok in text.replace(" ", "").split(","):
        if tok in ("+", "+1", "1"):
            out.append(1)
        elif tok in ("-", "-1"):
            out.append(-1)
        elif tok:
            raise ValueError(f"bad sign {tok!r}; use + or -")
    return out


# subcommands ----------------------------------------------------------------------


def cmd_build(s: Session):
    A = _read_operator(s, "op", s.args.op)
    build = Build(s.args.build) if s.args.build else (Build.S if A.kind is not Kind.SKEW_ADJOINT else Build.LAMBDA)
    raw = A.kind is not (Kind.SELF_ADJOINT if build is Build.S else Kind.SKEW_ADJOINT)
    R = CanonicalTerm(build, 1, A, raw=True).tensor() if raw else CanonicalTerm(build, 1, A).tensor()
    out = tensor_to_json(R)
    if raw:
        out["canonical"]["raw"] = True
    return {"tensor": out}, f"built R^{build.value} (dim {A.dim})"


def cmd_check(s: Session):
    if s.args.tensor:
        R = _read_tensor(s, "tensor", s.args.tensor)
    elif s.args.op:
        A = _read_operator(s, "op", s.args.op)
        build = Build(s.args.build or "S")
        R = build_RS(A) if build is Build.S else build_RLambda(A)
    else:
        raise UsageError("check needs --op or --tensor")
    result = is_act(R)
    report = {
        "is_act": result.ok,
        "witnesses": {k: None if v is None else list(v) for k, v in result.witnesses.items()},
        "max_violation": result.max_violation,
    }
    return report, f"is_act = {result.ok}"


def cmd_identity(s: Session):
    A = _read_operator(s, "op", s.args.op)
    which = s.args.which
    report: dict = {"kind": A.kind.value}
    if which in ("lambda-split", "all"):
        report["lambda_split_deviation"] = identity_lambda_split(A)
    if which in ("main", "all"):
        if A.kind is Kind.SKEW_ADJOINT or which == "main":
            report["main_deviation"] = identity_main(A)
        else:
            report["main_deviation"] = "not_applicable"
    if s.args.quadruple:
        quad = [int(v) for v in s.args.quadruple.split(",")]
        if len(quad) != 4:
            raise ValueError("--quadruple needs four basis indices")
        report["pullback"] = {"quadruple": quad, "values": list(identity_pullback(A, quad))}
    return report, "identity deviations computed"


def cmd_structgroup(s: Session):
    tau = FormView(_read_operator(s, "tau", s.args.tau))
    report = verify_structure_theorem(tau, trials=s.args.trials, seed=s.seed)
    return report.to_dict(), f"equivalence_holds = {report.equivalence_holds}"


def cmd_depend(s: Session):
    if s.args.theorem:
        ops = _read_operator_list(s, "ops", s.args.ops)
        if len(ops) != 2:
            raise ValueError("theorem checks take exactly two operators")
        fn = {
            "ssl": check_theorem_SSL,
            "sll": check_theorem_SLL,
            "ssl-necessary": necessary_conditions_SSL,
            "exclusions": pairwise_exclusions,
        }[s.args.theorem]
        report = fn(*ops)
        return report.to_dict(), f"{report.theorem}: falsified = {report.falsified}"
    if not s.args.terms:
        raise UsageError("depend needs --terms or --theorem with --ops")
    data = s.load("terms", s.args.terms)
    ctx = s.context(data)
    items = _body(data, "terms")
    if not isinstance(items, list) or not items:
        raise ValueError("terms file must hold a nonempty list")
    verdict = dependence([_read_tensor_like(item, ctx) for item in items])
    word = "independent" if verdict.independent else f"dependent (nullity {verdict.nullity})"
    return verdict.to_dict(), word


def _not_a_chain(pair) -> dict:
    return {"error": "not_a_chain", "failing_pair": list(pair)}


def cmd_chain(s: Session):
    ops = _read_operator_list(s, "ops", s.args.ops)
    theorem = s.args.theorem
    if theorem == "auto":
        theorem = {2: "star", 3: "three", 4: "four"}.get(len(ops))
        if theorem is None:
            raise ValueError("cannot pick a theorem for this many operators; pass --theorem")
    if theorem in ("three", "four"):
        check = is_chain(ops)
        if not check:
            return _not_a_chain(check.failing_pair), "not a chain", EXIT_HYPOTHESIS
    signs = _parse_signs(s.args.signs)
    if len(signs) != len(ops) - 1:
        raise ValueError(f"need {len(ops) - 1} signs for {len(ops)} operators")
    if theorem == "three":
        if len(ops) != 3:
            raise ValueError("the three-chain theorem takes three operators")
        report = analyze_three_chain(*ops, *signs)
    elif theorem == "four":
        if len(ops) != 4:
            raise ValueError("the four-chain theorem takes four operators")
        report = analyze_four_chain(*ops, *signs)
    else:
        report = analyze_star(ops[0], ops[1:], signs)
    return report.to_dict(), f"{report.theorem}: falsified = {report.falsified}"


def _read_decomposition(s: Session, path: str) -> Decomposition:
    data = s.load("decomp", path)
    ctx = s.context(data)
    terms = [term_from_json(t, ctx) for t in data["terms"]]
    target = tensor_from_json(data["target"], ctx) if data.get("target") is not None else None
    return Decomposition(ctx, terms, target)


def _decomposition_json(d: Decomposition) -> dict:
    return {
        "target": None if d.target is None else tensor_to_json(d.target),
        "terms": [term_to_json(t) for t in d.terms],
    }


def cmd_reduce(s: Session):
    decomp = _read_decomposition(s, s.args.decomp)
    A = _read_operator(s, "map", s.args.map) if s.args.map else None
    if s.args.preserve:
        out = reduce_preserving_target(decomp, s.args.pivot, A)
    else:
        out = reduce_by_kernel(decomp, s.args.pivot, A)
    report = _decomposition_json(out)
    report["residual"] = out.residual()
    return report, f"reduced {len(decomp)} -> {len(out)} terms"


def cmd_decompose(s: Session):
    R = _read_tensor(s, "tensor", s.args.tensor)
    if s.args.constructive:
        d = constructive_decomposition(R, s.args.family, seed=s.seed)
        report = _decomposition_json(d)
        report.update({"k": len(d.terms), "residual": d.residual(), "family": Family(s.args.family).value})
        return report, f"constructive decomposition with {len(d.terms)} terms"
    rep = minimal_search(R, s.args.family, k_max=s.args.kmax, budget=s.args.budget, seed=s.seed)
    return rep.to_dict(), f"k = {rep.k} ({rep.bound_kind.value})"


def cmd_fuzz(s: Session):
    if s.args.campaign == "conjecture":
        report = conjecture_campaign(s.args.n, s.args.count, seed=s.seed, k_max=s.args.kmax, budget=s.args.budget)
        return report, f"gap distribution {report['gap_distribution']}"
    s.mode_used = s.args.mode or Mode.EXACT.value
    report = run_campaign(s.args.campaign, s.args.count, seed=s.seed, mode=s.mode_used)
    return report, f"{report['campaign']}: {len(report['failures'])} failures in {report['count']} instances"


# parser ---------------------------------------------------------------------------


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--mode", choices=[m.value for m in Mode], default=d(None), help="arithmetic (default float64)")
    parser.add_argument("--tolerance", type=float, default=d(None), help=f"float tolerance (default {DEFAULT_TOLERANCE})")
    parser.add_argument("--seed", type=int, default=d(0))
    parser.add_argument("--quiet", action="store_true", default=d(False))
    parser.add_argument("--out", default=d(None), help="write the report to FILE instead of stdout")
    parser.add_argument("--context", default=d(None), help="context JSON (dim, mode, tolerance, phi)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="curvtensor", description="Canonical algebraic curvature tensor toolkit.")
    parser.add_argument("--version", action="version", version=f"curvtensor {__version__}")
    _global_options(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", parents=[common], help="build R^S_A or R^Lambda_A")
    p.add_argument("--op", required=True)
    p.add_argument("--build", choices=["S", "Lambda"])
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("check", parents=[common], help="check the curvature axioms")
    p.add_argument("--op")
    p.add_argument("--build", choices=["S", "Lambda"])
    p.add_argument("--tensor")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("identity", parents=[common], help="evaluate the build identities")
    p.add_argument("--op", required=True)
    p.add_argument("--which", choices=["all", "lambda-split", "main"], default="all")
    p.add_argument("--quadruple", help="basis indices x,y,z,w for the pullback identity")
    p.set_defaults(func=cmd_identity)

    p = sub.add_parser("structgroup", parents=[common], help="sample the structure-group theorem")
    p.add_argument("--tau", required=True)
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_structgroup)

    p = sub.add_parser("depend", parents=[common], help="linear dependence of tensors")
    p.add_argument("--terms")
    p.add_argument("--theorem", choices=["ssl", "sll", "ssl-necessary", "exclusions"])
    p.add_argument("--ops")
    p.set_defaults(func=cmd_depend)

    p = sub.add_parser("chain", parents=[common], help="chain-complex theorems")
    p.add_argument("--ops", required=True)
    p.add_argument("--signs", required=True, help='comma-separated signs, e.g. "+,-"')
    p.add_argument("--theorem", choices=["auto", "three", "star", "four"], default="auto")
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("reduce", parents=[common], help="kernel reduction of a decomposition")
    p.add_argument("--decomp", required=True)
    p.add_argument("--pivot", type=int, required=True, help="0-based index of the term with a kernel")
    p.add_argument("--map", help="operator JSON for the reduction map (default: projection onto the kernel)")
    p.add_argument("--preserve", action="store_true", help="require the map to fix the canonical target")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("decompose", parents=[common], help="estimate the minimal number of terms")
    p.add_argument("--tensor", required=True)
    p.add_argument("--family", choices=[f.value for f in Family], default="sym")
    p.add_argument("--kmax", type=int, default=3)
    p.add_argument("--budget", type=int, default=8, help="random starts per sign pattern")
    p.add_argument("--constructive", action="store_true")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("fuzz", parents=[common], help="run a falsification campaign")
    p.add_argument("--campaign", required=True, choices=sorted(CAMPAIGNS) + ["conjecture"])
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--n", type=int, default=3, help="dimension for the conjecture campaign")
    p.add_argument("--kmax", type=int, default=3)
    p.add_argument("--budget", type=int, default=4)
    p.set_defaults(func=cmd_fuzz)
    return parser


def _emit(report: dict, args: argparse.Namespace) -> None:
    text = json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    session = Session(args)
    start = time.perf_counter()
    code = EXIT_OK
    try:
        result = args.func(session)
        report, summary = result[0], result[1]
        if len(result) > 2:
            code = result[2]
    except UsageError as exc:
        parser.error(str(exc))
    except (HypothesisError, PremiseError) as exc:
        report, summary, code = {"error": exc.code, "message": str(exc)}, f"{exc.code}: {exc}", EXIT_HYPOTHESIS
    except CurvTensorError as exc:
        report, summary, code = {"error": exc.code, "message": str(exc)}, f"{exc.code}: {exc}", EXIT_ERROR
    except (OSError, ValueError, KeyError, TypeError, IndexError) as exc:
        report, summary, code = {"error": "malformed_input", "message": str(exc)}, f"malformed input: {exc}", EXIT_ERROR
    report = dict(report)
    report["manifest"] = {
        "subcommand": args.command,
        "inputs": dict(sorted(session.digests.items())),
        "seed": session.seed,
        "mode": session.mode,
        "version": __version__,
    }
    _emit(report, args)
    if not getattr(args, "quiet", False):
        # wall time stays out of the report so identical runs give identical bytes
        sys.stderr.write(f"{args.command}: {summary} [{time.perf_counter() - start:.2f}s]\n")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
