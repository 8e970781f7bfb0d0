"""``attrikit`` command line.

Exit codes: 0 ok, 2 invalid input, 3 capacity cap exceeded, 4 undefined metric.
Every failure prints exactly one ``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .attribution import DEFAULT_GRID_RES, DEFAULT_MC_SAMPLES, METHODS, approx_attribution_sequence, attribute
from .axioms import EngineMethod, GradientTimesInput, IntegratedGradients, run_suite
from .errors import AttrikitError, ValidationError
from .geometry import regions_document
from .measures import DEFAULT_BANDWIDTH, MeasureFamily, load_dataset, load_family
from .metrics import precision, projected_attribution, recall, relu_precision, relu_recall
from .model import MODEL_FORMAT, Expression, ReluNetwork, load_network
from .parallel import resolve_threads

EXPR_FORMAT = "attrikit-expr/1"
CONVERGE_FORMAT = "attrikit-converge/1"
AXIOMS_FORMAT = "attrikit-axioms/1"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


def _vector(text: str, what: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise ValidationError(f"{what} must be comma-separated numbers, got {text!r}") from None


def load_model(args):
    """``--expr TEXT`` or ``--model FILE`` (a ReLU network or an expression document)."""
    if getattr(args, "expr", None):
        return Expression(args.expr, getattr(args, "input_dim", None))
    if not getattr(args, "model", None):
        raise ValidationError("one of --model or --expr is required")
    content = _read(args.model)
    try:
        doc = json.loads(content)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file is not valid JSON: {exc.msg}") from None
    fmt = doc.get("format") if isinstance(doc, dict) else None
    if fmt == MODEL_FORMAT:
        return load_network(content)
    if fmt == EXPR_FORMAT:
        if not isinstance(doc.get("expression"), str):
            raise ValidationError("expression document needs an 'expression' string")
        return Expression(doc["expression"], doc.get("input_dim"))
    raise ValidationError(f"model file format must be {MODEL_FORMAT!r} or {EXPR_FORMAT!r}")


def load_measure(args) -> MeasureFamily:
    data = load_dataset(_read(args.data)) if args.data else None
    if os.path.isfile(args.measure):
        return load_family(_read(args.measure), data)
    baseline = _vector(args.baseline, "--baseline") if args.baseline else None
    return MeasureFamily(args.measure, data=data, bandwidth=args.bandwidth, baseline=baseline)


def _emit(text: str, out: str | None):
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise ValidationError(f"cannot write {out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


# --------------------------------------------------------------------------
# subcommands


def cmd_attribute(args) -> int:
    f = load_model(args)
    family = load_measure(args)
    x = _vector(args.input, "--input")
    report = attribute(f, family, x, args.method, grid_res=args.grid_res, mc_samples=args.mc_samples,
                       seed=args.seed, p=args.p, threads=args.threads)
    _emit(report.to_json(), args.out)
    return 0


def cmd_regions(args) -> int:
    from .attribution import regions_for

    f = load_model(args)
    if not isinstance(f, ReluNetwork):
        raise ValidationError("regions requires relu model")
    _emit(_dumps(regions_document(regions_for(f))), args.out)
    return 0


def _centers(path: str) -> np.ndarray:
    try:
        doc = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"centers file is not valid JSON: {exc.msg}") from None
    if isinstance(doc, dict):
        doc = doc.get("centers")
    try:
        return np.array(doc, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError("centers must be a list of points") from None


def cmd_metrics(args) -> int:
    m_list = _centers(args.centers)
    config = {"alpha": args.alpha, "beta": args.beta}
    out = {"metric": args.metric}
    if args.metric in ("recall", "precision"):
        if not args.weights:
            raise ValidationError(f"{args.metric} needs --weights")
        w = _vector(args.weights, "--weights")
        phi = projected_attribution(w, m_list)
        fn = recall if args.metric == "recall" else precision
        out["value"] = fn(w, args.alpha, args.beta, phi)
        config["weights"] = w.tolist()
        out["config"] = config
    else:
        f = load_model(args)
        if not isinstance(f, ReluNetwork):
            raise ValidationError(f"{args.metric} requires relu model")
        fn = relu_recall if args.metric == "rrecall" else relu_precision
        res = fn(f, args.alpha, args.beta, m_list)
        out["value"] = res.value
        config["model_fingerprint"] = f.fingerprint
        config["regions"] = res.regions
        out["config"] = config
        out["skipped_regions"] = res.skipped_regions
    _emit(_dumps(out), args.out)
    return 0


def _method(name: str, steps: int):
    if name in ("integrated-gradients", "ig"):
        return IntegratedGradients(steps=steps)
    if name in ("gradient-x-input", "gxi"):
        return GradientTimesInput()
    if name in ("pdp", "engine-pdp"):
        return EngineMethod(MeasureFamily("pdp"), "grid", {"grid_res": 256}, name="engine:pdp:grid")
    raise ValidationError(f"unknown method {name!r}; choose integrated-gradients, gradient-x-input or pdp")


def cmd_axioms(args) -> int:
    method = _method(args.method, args.steps)
    reports = run_suite(method, args.suite, args.seed)
    doc = {"format": AXIOMS_FORMAT, "suite": args.suite, "reports": [r.to_dict() for r in reports]}
    _emit(_dumps(doc), args.out)
    return 0


def cmd_converge(args) -> int:
    f = load_model(args)
    family = load_measure(args)
    x = _vector(args.input, "--input")
    p_list = [int(v) for v in _vector(args.p_list, "--p-list")]
    reference = attribute(f, family, x, "grid", grid_res=args.grid_res, threads=args.threads).phi
    seq = approx_attribution_sequence(f, family, x, p_list)
    rows = [{"p": p, "phi": phi.tolist(), "sup_error": float(np.max(np.abs(phi - reference)))}
            for p, phi in zip(p_list, seq)]
    doc = {"format": CONVERGE_FORMAT, "x": x.tolist(), "reference": reference.tolist(),
           "reference_grid_res": args.grid_res, "model_fingerprint": f.fingerprint, "rows": rows}
    if args.csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["p", *[f"phi_{j + 1}" for j in range(x.shape[0])], "sup_error"])
        for r in rows:
            writer.writerow([r["p"], *[repr(v) for v in r["phi"]], repr(r["sup_error"])])
        _emit(buf.getvalue(), args.csv)
    _emit(_dumps(doc), args.out)
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: $ATTRIKIT_THREADS or 1)")
    common.add_argument("--out", help="write output here instead of stdout")

    model = _Parser(add_help=False)
    model.add_argument("--model", help="attrikit-relu/1 or attrikit-expr/1 JSON file")
    model.add_argument("--expr", help="analytic model, e.g. 'x1*x2 + 0.5*x1'")
    model.add_argument("--input-dim", type=int, help="dimension for --expr (default: highest variable used)")

    measure = _Parser(add_help=False)
    measure.add_argument("--measure", required=True, help="preset name or attrikit-measure/1 JSON file")
    measure.add_argument("--data", help="CSV dataset with a header row, values in [0,1]")
    measure.add_argument("--bandwidth", type=float, default=DEFAULT_BANDWIDTH)
    measure.add_argument("--baseline", help="baseline point for dirac-product, comma-separated")

    parser = _Parser(prog="attrikit", description="Measure-based feature attribution.")
    parser.add_argument("--version", action="version", version=f"attrikit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("attribute", parents=[common, model, measure], help="attribute a model at a point")
    p.add_argument("--input", required=True, help="explained point, comma-separated")
    p.add_argument("--method", choices=METHODS, default="auto")
    p.add_argument("--grid-res", type=int, default=DEFAULT_GRID_RES)
    p.add_argument("--mc-samples", type=int, default=DEFAULT_MC_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=int, help="resolution for --method atomic-sum")
    p.set_defaults(run=cmd_attribute)

    p = sub.add_parser("regions", parents=[common, model], help="dump the linear regions of a ReLU network")
    p.set_defaults(run=cmd_regions)

    p = sub.add_parser("metrics", parents=[common, model], help="recall / precision of projected attributions")
    p.add_argument("metric", choices=("recall", "precision", "rrecall", "rprecision"))
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--centers", required=True, help="JSON list of d centers of mass (one per feature)")
    p.add_argument("--weights", help="linear model weights, comma-separated")
    p.set_defaults(run=cmd_metrics)

    p = sub.add_parser("axioms", help="axiom checks")
    axsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = axsub.add_parser("check", parents=[common], help="run an axiom suite against a method")
    q.add_argument("--method", required=True, help="integrated-gradients | gradient-x-input | pdp")
    q.add_argument("--suite", default="polynomial", help="polynomial | quadratic")
    q.add_argument("--steps", type=int, default=256)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(run=cmd_axioms)

    p = sub.add_parser("converge", parents=[common, model, measure],
                       help="attribution of piecewise-constant approximations as p grows")
    p.add_argument("--input", required=True)
    p.add_argument("--p-list", default="8,16,32,64")
    p.add_argument("--grid-res", type=int, default=DEFAULT_GRID_RES)
    p.add_argument("--csv", help="also write (p, phi_1..phi_d, sup_error) as CSV")
    p.set_defaults(run=cmd_converge)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if hasattr(args, "threads"):
            args.threads = resolve_threads(args.threads)
        return args.run(args)
    except AttrikitError as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
