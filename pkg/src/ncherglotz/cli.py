"""Command-line front end: ``ncherglotz <subcommand> ...``.

Every subcommand builds a run report (command echo, input digests, residual
table, per-check pass/fail, seed).  The report goes to stdout, except for
``eval`` and ``cayley``, which print the resulting matrix; ``--json-out``
always receives the full report.  Wall time is included only with
``--timing`` so that reports stay byte-identical across runs.

Exit codes: 0 pass, 2 validation, 3 domain, 4 inconsistency, 5 internal.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import serialization as ser
from .algebra import AlgebraDescriptor, LeveledElement
from .classical import (
    herglotz_transform,
    moments_of,
    rep_from_measure,
    taylor_coefficients,
    toeplitz_psd_check,
)
from .errors import HerglotzError, InconsistencyError, StructureError
from .freefunc import cayley_to_herglotz, cayley_to_schur, eval_herglotz
from .lurking import lurking_recovery, model_from_rep, roundtrip_verify, sample_points, sample_reproduction_error
from .matrixcore import Tolerance, hermitian_part, lambda_min, opnorm
from .moments import (
    MomentTable,
    alternating_word,
    conditional_expectation_check,
    direct_moment,
    extract_moments,
    module_property_residual,
    state_gram,
)
from .nonuniq import (
    AlgebraMap,
    balanced_word,
    crossed_product_expectation,
    distinguishing_element,
    haar_pair_states,
    identity_function_rep,
    nonuniqueness_witness,
    shift_endomorphism_expectation,
)

DEFAULT_SEED = 20240917
SEED_ENV = "NCH_SEED"


class Run:
    """Accumulates the pieces of a run report."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.tol = Tolerance(args.tol_abs, args.tol_rel)
        self.seed = resolve_seed(args.seed)
        self.rng = np.random.default_rng(self.seed)
        self.inputs: dict[str, str] = {}
        self.residuals: dict[str, float] = {}
        self.checks: dict[str, bool] = {}
        self.result = None

    def load(self, path) -> dict:
        path = str(path)
        self.inputs[path] = ser.file_digest(path)
        return ser.load_json(path)

    def check(self, name: str, value: float, bound: float) -> bool:
        self.residuals[name] = float(value)
        ok = bool(value <= bound)
        self.checks[name] = ok
        return ok

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def report(self, wall_time: float | None) -> dict:
        echo = {
            k: v for k, v in sorted(vars(self.args).items())
            if k not in ("json_out", "timing", "func") and v is not None
        }
        out = {
            "command": echo,
            "inputs": self.inputs,
            "seed": self.seed,
            "tolerance": {"absolute": self.tol.absolute, "relative": self.tol.relative},
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "checks": {k: bool(v) for k, v in self.checks.items()},
            "pass": self.passed,
            "result": self.result,
        }
        if wall_time is not None:
            out["wall_time"] = wall_time
        return out


def resolve_seed(cli_seed: int | None) -> int:
    if cli_seed is not None:
        return int(cli_seed)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise StructureError(f"{SEED_ENV} must be an integer (got {env!r})") from None
    return DEFAULT_SEED


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise StructureError(f"not a complex number: {text!r}") from None


def cmd_eval(run: Run):
    rep = ser.rep_from_json(run.load(run.args.rep))
    rep.validate(run.tol)
    X = ser.point_from_json(run.load(run.args.point), rep.algebra)
    delta = ser.delta_from_json(run.load(run.args.delta)) if run.args.delta else None
    H = eval_herglotz(rep, X, delta, run.tol)
    run.residuals["lambda_min_real_part"] = lambda_min(hermitian_part(H))
    run.checks["real_part_psd"] = run.residuals["lambda_min_real_part"] >= -run.tol.bound(max(1.0, opnorm(H)))
    run.result = ser.matrix_to_json(H)
    return run.result


def cmd_cayley(run: Run):
    M = ser.matrix_from_json(run.load(run.args.matrix), "input matrix")
    if run.args.direction == "to-schur":
        out = cayley_to_schur(M, run.tol)
        back = cayley_to_herglotz(out, run.tol)
    else:
        out = cayley_to_herglotz(M, run.tol)
        back = cayley_to_schur(out, run.tol)
    run.check("inverse_roundtrip", opnorm(back - M), run.tol.bound(max(1.0, opnorm(M))))
    run.result = ser.matrix_to_json(out)
    return run.result


def _letters(run: Run, algebra: AlgebraDescriptor) -> dict:
    if run.args.letters:
        obj = run.load(run.args.letters)
        return {name: algebra.element(ser.matrix_from_json(b, f"letter {name}")) for name, b in obj.items()}
    return {f"b{i}": algebra.random_element(run.rng, norm=0.9) for i in range(run.args.num_letters)}


def cmd_moments(run: Run):
    rep = ser.rep_from_json(run.load(run.args.rep))
    rep.validate(run.tol)
    letters = _letters(run, rep.algebra)
    table = MomentTable.from_representation(rep, letters, run.args.max_length)
    run.residuals.update({f"table_{k}": v for k, v in table.validate(run.tol).items()})
    worst = 0.0
    names = sorted(letters)
    for p in range(1, run.args.max_length // 2 + 1):
        for combo in itertools.product(names, repeat=p):
            b_list = [letters[c] for c in combo]
            ext = extract_moments(rep, b_list)
            for (i, j), val in ext.items():
                word = alternating_word(b_list[i - 1:j])
                worst = max(worst, opnorm(val - direct_moment(rep, word)))
    run.check("extraction_vs_direct", worst, run.tol.bound())
    table_json = ser.moment_table_to_json(table)
    if run.args.emit_table:
        Path(run.args.emit_table).write_text(ser.dumps(table_json))
    run.result = {"entry_count": len(table.entries), "table": table_json}
    return None


def cmd_gram(run: Run):
    table = ser.moment_table_from_json(run.load(run.args.table))
    run.residuals.update({f"table_{k}": v for k, v in table.validate(run.tol).items()})
    half = table.max_length // 2 if run.args.word_length is None else run.args.word_length
    words = [w for w in table.entries if len(w) <= half]
    G = state_gram(table, words)
    lam = lambda_min(G)
    run.residuals["gram_lambda_min"] = lam
    run.checks["gram_psd"] = bool(lam >= -run.tol.bound(max(1.0, opnorm(G))))
    run.result = {"words": [list(w) for w in words], "gram": ser.matrix_to_json(G)}
    return None


def cmd_roundtrip(run: Run):
    a = run.args
    if a.samples < 1:
        raise StructureError("roundtrip: --samples n >= 1")
    delta = ser.delta_from_json(run.load(a.delta)) if a.delta else None
    rep = None
    if a.rep:
        rep = ser.rep_from_json(run.load(a.rep))
        rep.validate(run.tol)
    if a.model:
        model = ser.model_from_json(run.load(a.model))
        run.residuals.update({f"model_{k}": v for k, v in model.validate(run.tol).items()})
        rec = lurking_recovery(model, run.tol)
        run.residuals["gram_residual"] = rec.gram_residual
        run.check("sample_max_error", sample_reproduction_error(rec.rep, model), a.max_error)
        if rep is not None:
            fresh = sample_points(rep, model.delta, a.fresh, (1, 2, 3), run.rng)
            err = max(opnorm(eval_herglotz(rep, X, model.delta) - eval_herglotz(rec.rep, X, model.delta)) for X in fresh)
            run.check("roundtrip_max_error", err, a.max_error)
        run.result = {"recovered": ser.rep_to_json(rec.rep), "recovery_rank": rec.rank}
    elif rep is not None:
        if a.emit_model:
            points = sample_points(rep, delta or ser.delta_from_json(None), a.samples, (1, 2), run.rng, include_zero=True)
            Path(a.emit_model).write_text(ser.dumps(ser.model_to_json(model_from_rep(rep, delta, points, run.tol))))
        report = roundtrip_verify(rep, delta, a.samples, a.fresh, run.rng, tol=run.tol)
        for key in ("gram_residual", "U_defect", "V_defect", "A_norm"):
            run.residuals[key] = getattr(report, key)
        run.check("sample_max_error", report.sample_max_error, a.max_error)
        run.check("roundtrip_max_error", report.roundtrip_max_error, a.max_error)
        run.result = report.to_dict()
    else:
        raise StructureError("roundtrip: a representation file or --model is required")
    if not run.passed:
        raise InconsistencyError(
            f"roundtrip error exceeds {a.max_error:g}", max(run.residuals.get("roundtrip_max_error", 0.0),
                                                           run.residuals.get("sample_max_error", 0.0))
        )
    return None


def _classical_points(run: Run) -> np.ndarray:
    if run.args.x:
        return np.array([_parse_complex(t) for t in run.args.x])
    r = np.sqrt(run.rng.uniform(0, 0.95 ** 2, run.args.count))
    return r * np.exp(2j * np.pi * run.rng.uniform(0, 1, run.args.count))


def cmd_classical_transform(run: Run):
    mu = ser.measure_from_json(run.load(run.args.measure))
    xs = _classical_points(run)
    vals = np.atleast_1d(herglotz_transform(mu, xs))
    rep = rep_from_measure(mu)
    alg = AlgebraDescriptor.full(1)
    worst = max(
        abs(eval_herglotz(rep, LeveledElement(alg, 1, [[x]]), tol=run.tol)[0, 0] - v) for x, v in zip(xs, vals)
    )
    run.check("realization_vs_transform", worst, run.tol.bound())
    run.residuals["min_real_part"] = float(vals.real.min())
    run.checks["real_part_nonnegative"] = bool(vals.real.min() >= -run.tol.bound())
    run.result = {"points": [ser.complex_to_json(x) for x in xs], "values": [ser.complex_to_json(v) for v in vals]}
    return None


def cmd_classical_moments(run: Run):
    mu = ser.measure_from_json(run.load(run.args.measure))
    N = run.args.N
    m = moments_of(mu, N)
    c = taylor_coefficients(lambda x: herglotz_transform(mu, x), N)
    oracle = np.concatenate([[1.0], c[1:] / 2])
    run.check("taylor_oracle", float(np.max(np.abs(m - oracle))), 1e-8)
    tc = toeplitz_psd_check(m, run.tol)
    run.residuals["toeplitz_lambda_min"] = tc.lambda_min
    run.checks["toeplitz_psd"] = tc.ok
    run.result = {"moments": [ser.complex_to_json(z) for z in m]}
    return None


def cmd_toeplitz_check(run: Run):
    obj = run.load(run.args.input)
    if "atoms" in obj:
        m = moments_of(ser.measure_from_json(obj), run.args.N)
    elif "moments" in obj:
        m = np.array([ser.complex_from_json(z) for z in obj["moments"]])
    else:
        raise StructureError("toeplitz-check: expected {\"moments\": [...]} or a CircleMeasure")
    tc = toeplitz_psd_check(m, run.tol)
    run.residuals["toeplitz_lambda_min"] = tc.lambda_min
    run.checks["toeplitz_psd"] = tc.ok
    run.result = {"size": int(m.size), "lambda_min": tc.lambda_min}
    if not tc.ok:
        raise InconsistencyError(
            f"Toeplitz matrix not positive semidefinite (lambda_min = {tc.lambda_min:.3e})", -tc.lambda_min
        )
    return None


def _demo_pair(kind: str, N: int):
    """Two representations, the distinguishing word, and whether each realizes a conditional expectation."""
    if kind == "haar":
        F2 = AlgebraDescriptor.full(2)
        rho1, rho2 = np.diag([0.9, 0.1]), np.diag([0.1, 0.9])
        r1, r2 = haar_pair_states(F2, rho1, rho2, N)
        return r1, r2, balanced_word(distinguishing_element(rho1, rho2), "u* b u"), F2
    if kind == "crossed":
        F2 = AlgebraDescriptor.full(2)
        psi = AlgebraMap(F2, unitary=np.diag([1, np.exp(2j * np.pi / N)]))
        b = np.array([[0, 1], [1, 0]], dtype=complex)
        return identity_function_rep(F2, N), crossed_product_expectation(F2, psi, N), balanced_word(b), F2
    if kind == "shift":
        D3 = AlgebraDescriptor.diagonal(3)
        r1 = shift_endomorphism_expectation(D3, AlgebraMap.constant(D3, 0), N)
        r2 = shift_endomorphism_expectation(D3, AlgebraMap.constant(D3, 1), N)
        return r1, r2, balanced_word(np.diag([1.0, 0, 0]), "u* b u"), D3
    raise StructureError(f"demo-nonuniq: kind must be haar, crossed or shift (got {kind!r})")


def cmd_demo_nonuniq(run: Run):
    a = run.args
    if a.N < 2:
        raise StructureError("TruncationParam: N >= 2")
    r1, r2, word, algebra = _demo_pair(a.kind, a.N)
    w = nonuniqueness_witness(r1, r2, word, a.N, run.rng, samples=a.samples)
    run.residuals["distinguishing_moment"] = w.moment_difference
    run.checks["moments_differ"] = w.moment_difference >= 0.1
    run.check("g_agreement", w.max_g_difference, w.g_bound)
    b = algebra.random_element(run.rng, norm=0.5)
    ce = {}
    for label, rep in (("first", r1), ("second", r2)):
        run.check(f"module_residual_{label}", module_property_residual(rep, [b, b], b), run.tol.bound())
        ce[label] = conditional_expectation_check(rep, 20, run.rng).is_conditional_expectation(run.tol)
    run.result = {
        "kind": a.kind,
        "N": a.N,
        "distinguishing_word": w.distinguishing_word,
        "distinguishing_moment": w.moment_difference,
        "g_sup_difference": w.max_g_difference,
        "g_bound": w.g_bound,
        "conditional_expectation": ce,
        "representations": [ser.rep_to_json(r1), ser.rep_to_json(r2)],
    }
    return None


def _detect_type(obj: dict) -> str:
    if "atoms" in obj:
        return "measure"
    if "samples" in obj:
        return "model"
    if "entries" in obj:
        return "moment-table"
    if "U" in obj and "V" in obj:
        return "rep"
    if "X" in obj:
        return "point"
    if "data" in obj:
        return "matrix"
    raise StructureError("validate: cannot detect input type")


def cmd_validate(run: Run):
    obj = run.load(run.args.input)
    kind = run.args.type if run.args.type != "auto" else _detect_type(obj)
    if kind == "rep":
        rep = ser.rep_from_json(obj)
        rep.alpha.validate(run.tol)
        rep.validate(run.tol)
        run.residuals.update(rep.defects())
    elif kind == "point":
        X = ser.point_from_json(obj)
        run.residuals["norm"] = X.norm()
        run.checks["strict_contraction"] = X.norm() < 1
    elif kind == "measure":
        mu = ser.measure_from_json(obj)
        run.residuals["atom_count"] = float(mu.thetas.size)
    elif kind == "model":
        run.residuals.update(ser.model_from_json(obj).validate(run.tol))
    elif kind == "moment-table":
        run.residuals.update(ser.moment_table_from_json(obj).validate(run.tol))
    elif kind == "matrix":
        M = ser.matrix_from_json(obj)
        run.residuals["norm"] = opnorm(M)
    run.result = {"type": kind, "valid": True}
    return None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-abs", type=float, default=1e-10, help="absolute tolerance")
    common.add_argument("--tol-rel", type=float, default=1e-8, help="relative tolerance")
    common.add_argument("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV} or {DEFAULT_SEED})")
    common.add_argument("--json-out", metavar="FILE", default=None, help="write the run report here")
    common.add_argument("--timing", action="store_true", help="include wall time in the report")

    p = argparse.ArgumentParser(prog="ncherglotz", description="Free Herglotz realizations over finite-dimensional algebras.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eval", parents=[common], help="evaluate h(X)")
    s.add_argument("rep")
    s.add_argument("point")
    s.add_argument("--delta", default=None, help="free polynomial file (default: identity)")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("cayley", parents=[common], help="Cayley transform of a matrix")
    s.add_argument("matrix")
    s.add_argument("--direction", choices=["to-schur", "to-herglotz"], default="to-schur")
    s.set_defaults(func=cmd_cayley)

    s = sub.add_parser("moments", parents=[common], help="moment table and extraction check")
    s.add_argument("rep")
    s.add_argument("--letters", default=None, help="JSON object name -> JsonMatrix")
    s.add_argument("--num-letters", type=int, default=1, help="random letters when --letters is absent")
    s.add_argument("--max-length", type=int, default=4)
    s.add_argument("--emit-table", default=None, metavar="FILE")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("gram", parents=[common], help="state Gram matrix of a moment table")
    s.add_argument("table")
    s.add_argument("--word-length", type=int, default=None)
    s.set_defaults(func=cmd_gram)

    s = sub.add_parser("roundtrip", parents=[common], help="model synthesis and lurking-isometry recovery")
    s.add_argument("rep", nargs="?", default=None)
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--fresh", type=int, default=20)
    s.add_argument("--model", default=None, help="recover from this model file")
    s.add_argument("--emit-model", default=None, metavar="FILE")
    s.add_argument("--delta", default=None)
    s.add_argument("--max-error", type=float, default=1e-6)
    s.set_defaults(func=cmd_roundtrip)

    s = sub.add_parser("classical-transform", parents=[common], help="scalar transform of a circle measure")
    s.add_argument("measure")
    s.add_argument("--x", action="append", default=None, help="evaluation point (repeatable)")
    s.add_argument("--count", type=int, default=50, help="random points when --x is absent")
    s.set_defaults(func=cmd_classical_transform)

    s = sub.add_parser("classical-moments", parents=[common], help="trigonometric moments of a circle measure")
    s.add_argument("measure")
    s.add_argument("--N", type=int, default=10)
    s.set_defaults(func=cmd_classical_moments)

    s = sub.add_parser("toeplitz-check", parents=[common], help="positivity of a moment Toeplitz matrix")
    s.add_argument("input")
    s.add_argument("--N", type=int, default=10, help="moments to use when the input is a measure")
    s.set_defaults(func=cmd_toeplitz_check)

    s = sub.add_parser("demo-nonuniq", parents=[common], help="distinct states with the same function")
    s.add_argument("kind", choices=["haar", "crossed", "shift"])
    s.add_argument("--N", type=int, default=8)
    s.add_argument("--samples", type=int, default=30)
    s.set_defaults(func=cmd_demo_nonuniq)

    s = sub.add_parser("validate", parents=[common], help="parse and validate a JSON input")
    s.add_argument("input")
    s.add_argument("--type", choices=["auto", "rep", "point", "measure", "model", "moment-table", "matrix"], default="auto")
    s.set_defaults(func=cmd_validate)
    return p


def _emit(text: str, path: str | None = None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    run = None
    try:
        run = Run(args)
        primary = args.func(run)
        code = 0 if run.passed else 4
    except HerglotzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = exc.exit_code
        if isinstance(exc, InconsistencyError) and run is not None:
            run.residuals.setdefault("inconsistency", exc.residual)
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"error: singular system: {exc}", file=sys.stderr)
        code = 3
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: malformed input: {exc!r}", file=sys.stderr)
        code = 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 5
    if run is None:
        return code
    report = run.report(time.perf_counter() - start if args.timing else None)
    if code != 0:
        report["pass"] = False
        report["exit_code"] = code
    text = ser.dumps(report)
    if args.json_out:
        _emit(text, args.json_out)
    if code == 0:
        _emit(ser.dumps(primary) if primary is not None else text)
    elif code == 4 and not args.json_out:
        _emit(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
