"""Command-line front end.

    infocorr measure  --input pmf.json --quantity maxcorr
    infocorr curve    --gaussian 0.9 --grid 0:0.1:0.9 --out curve.csv
    infocorr simulate --input experiment.json --out report.json

Exit codes: 0 ok, 2 input error, 3 optimizer budget / infeasible,
4 enumeration cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from . import common_info as ci
from . import correlation as corr
from . import probability as pr
from .errors import EnumerationCapExceeded, InfoCorrError, OptimizerBudgetExhausted, ParseError
from .synthesis import DEFAULT_CAP, sweep

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OPTIMIZER = 3
EXIT_CAP = 4

DEFAULT_SEED = 0

QUANTITIES = (
    "pearson", "theta", "maxcorr", "cond-maxcorr", "entropy", "mi",
    "gk", "wyner", "cbeta", "kbeta-ub", "betac",
)
CURVE_COLUMNS = ("beta", "c_beta", "lower", "upper", "certificate")


class InputError(InfoCorrError):
    """Bad flags or config; mapped to exit code 2."""


def _reject_nonfinite(token: str) -> float:
    raise ParseError(f"non-finite number {token} in config")


def parse_grid(spec: str) -> list[float]:
    """``start:step:end`` with both ends inclusive, all points inside [0, 1]."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise InputError(f"grid must look like start:step:end, got {spec!r}")
    try:
        start, step, end = (float(v) for v in parts)
    except ValueError:
        raise InputError(f"grid has a non-numeric field: {spec!r}") from None
    if not all(math.isfinite(v) for v in (start, step, end)) or step <= 0:
        raise InputError("grid step must be positive and all fields finite")
    if end < start:
        raise InputError("grid is empty")
    count = int(math.floor((end - start) / step + 1e-9)) + 1
    grid = [round(start + i * step, 12) for i in range(count)]
    if grid[0] < 0 or grid[-1] > 1:
        raise InputError("grid points must lie in [0, 1]")
    return grid


def _solver_config(args: argparse.Namespace) -> ci.SolverConfig:
    return ci.SolverConfig(restarts=args.restarts, seed=args.seed, strict=True)


def _load_pmf(path: str | None) -> pr.JointPmf | pr.ConditionedJoint:
    if not path:
        raise InputError("--input is required")
    return pr.load(path)


def _require(value: float | None, flag: str) -> float:
    if value is None:
        raise InputError(f"{flag} is required for this quantity")
    return value


def _as_pmf(obj: pr.JointPmf | pr.ConditionedJoint) -> pr.JointPmf:
    return obj.xy_marginal() if isinstance(obj, pr.ConditionedJoint) else obj


def measure(args: argparse.Namespace) -> dict:
    obj = _load_pmf(args.input)
    q = args.quantity
    meta: dict = {"input": str(args.input)}
    if q == "pearson":
        value = corr.pearson_given(obj) if isinstance(obj, pr.ConditionedJoint) else corr.pearson(obj)
    elif q == "theta":
        report = corr.correlation_report(obj)
        value = report.theta_x_given_y
        meta["theta_y_given_x"] = report.theta_y_given_x
    elif q == "maxcorr":
        value = corr.max_correlation(_as_pmf(obj))
    elif q == "cond-maxcorr":
        if not isinstance(obj, pr.ConditionedJoint):
            raise InputError("cond-maxcorr needs a file with u_weights and slices")
        value, u = corr.cond_max_correlation(obj)
        meta["achieving_u"] = u
    elif q == "entropy":
        value = pr.entropy(_as_pmf(obj).probs)
    elif q == "mi":
        value = pr.mi_xy_u(obj) if isinstance(obj, pr.ConditionedJoint) else pr.mutual_information(obj)
    elif q == "gk":
        gk = ci.gacs_korner(_as_pmf(obj))
        value = gk.entropy_bits
        meta["component_masses"] = [float(m) for m in gk.component_masses]
    elif q in ("wyner", "cbeta"):
        beta = 0.0 if q == "wyner" else _require(args.beta, "--beta")
        sol = ci.solve_c_beta(_as_pmf(obj), beta, _solver_config(args))
        value = sol.value
        meta.update(beta=beta, achieved_constraint=sol.achieved_constraint,
                    certificate=sol.certificate.value, lower=sol.bounds[0], upper=sol.bounds[1])
    elif q == "kbeta-ub":
        beta = _require(args.beta, "--beta")
        value = ci.k_beta_single_letter_upper(_as_pmf(obj), beta, _solver_config(args))
        meta["beta"] = beta
    elif q == "betac":
        cap = _require(args.capacity, "--capacity")
        value = ci.beta_c_inverse(_as_pmf(obj), cap, _solver_config(args))
        meta["capacity"] = cap
    else:  # argparse restricts choices
        raise InputError(f"unknown quantity {q!r}")
    return {"quantity": q, "value": float(value), "meta": meta}


def curve_rows(args: argparse.Namespace) -> list[dict]:
    grid = parse_grid(args.grid) if args.grid else None
    if grid is None:
        raise InputError("--grid is required")
    if (args.gaussian is None) == (args.input is None):
        raise InputError("give exactly one of --input and --gaussian")
    rows = []
    if args.gaussian is not None:
        pair = ci.GaussianPair(args.gaussian)
        h = pair.joint_entropy()
        for beta in grid:
            value = ci.gaussian_c_beta(pair, beta)
            rows.append({"beta": beta, "c_beta": value,
                         "lower": ci.continuous_lower_bound(h, pair.beta0, beta),
                         "upper": value, "certificate": "ClosedForm"})
        return rows
    p = _as_pmf(_load_pmf(args.input))
    for beta, sol in zip(grid, ci.c_beta_curve(p, grid, _solver_config(args))):
        rows.append({"beta": beta, "c_beta": sol.value, "lower": sol.bounds[0],
                     "upper": sol.bounds[1], "certificate": sol.certificate.value})
    return rows


def render_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CURVE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _base_from_config(spec: object, config_dir: Path) -> pr.ConditionedJoint:
    if not isinstance(spec, dict):
        raise InputError("'base' must be an object")
    if "dsbs" in spec:
        d = spec["dsbs"]
        try:
            return ci.dsbs_decomposition(float(d["p0"]), float(d["beta"]))
        except (KeyError, TypeError) as exc:
            raise InputError(f"dsbs base needs p0 and beta: {exc}") from None
    if "file" in spec:
        obj = pr.load(config_dir / spec["file"])
    else:
        obj = pr.conditioned_from_record(spec)
    if not isinstance(obj, pr.ConditionedJoint):
        raise InputError("base file must hold u_weights and slices")
    return obj


def simulate(args: argparse.Namespace) -> dict:
    if not args.input:
        raise InputError("--input is required")
    try:
        cfg = json.loads(Path(args.input).read_text(), parse_constant=_reject_nonfinite)
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise InputError("experiment config must be an object")
    base = _base_from_config(cfg.get("base"), Path(args.input).parent)
    ns = cfg.get("n")
    ns = [ns] if isinstance(ns, int) else ns
    if not isinstance(ns, list) or not ns or not all(isinstance(n, int) and n >= 1 for n in ns):
        raise InputError("'n' must be a positive integer or a list of them")
    seeds = cfg.get("seeds", [args.seed])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise InputError("'seeds' must be a nonempty list of integers")
    rate, excess = cfg.get("rate"), cfg.get("rate_excess")
    if (rate is None) == (excess is None):
        raise InputError("give exactly one of 'rate' and 'rate_excess'")
    beta_target = float(cfg.get("beta_target", 1.0))
    cap = args.cap if args.cap is not None else int(cfg.get("cap", DEFAULT_CAP))
    result = sweep(base, ns, seeds, rate=rate, rate_excess=excess, beta_target=beta_target, cap=cap)
    records = [{"seed": r.seed, "n": r.n, "tv_to_target": r.report.tv_to_target,
                "cond_maxcorr": r.report.cond_maxcorr, "codebook_size": r.report.codebook_size,
                "per_slice_max": r.report.per_slice_max} for r in result.records]
    summary = {"median_tv_to_target": {str(n): v for n, v in result.median_tv.items()},
               "median_cond_maxcorr": {str(n): v for n, v in result.median_cond_maxcorr.items()},
               "runs": len(records)}
    return {"records": records, "summary": summary}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infocorr", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--out")
        sp.add_argument("--restarts", type=int, default=ci.SolverConfig.restarts,
                        help="optimizer restarts per solve")

    m = sub.add_parser("measure", help="compute one measure of a distribution file")
    m.add_argument("--input")
    m.add_argument("--quantity", required=True, choices=QUANTITIES)
    m.add_argument("--beta", type=float)
    m.add_argument("--capacity", type=float)
    common(m)

    c = sub.add_parser("curve", help="C_beta over a beta grid as CSV")
    c.add_argument("--input")
    c.add_argument("--gaussian", type=float, metavar="BETA0")
    c.add_argument("--grid", required=True, metavar="START:STEP:END")
    common(c)

    s = sub.add_parser("simulate", help="run synthesis experiments from a JSON config")
    s.add_argument("--input")
    s.add_argument("--cap", type=int, help="max number of enumerated sequence pairs")
    common(s)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        if args.command == "measure":
            rec = measure(args)
            text = f"{rec['value']!r}\n{json.dumps(rec, sort_keys=True)}\n"
            sys.stdout.write(text)
            if args.out:
                Path(args.out).write_text(json.dumps(rec, sort_keys=True, indent=2) + "\n")
        elif args.command == "curve":
            _emit(render_csv(curve_rows(args)), args.out)
        else:
            _emit(json.dumps(simulate(args), indent=2, sort_keys=True) + "\n", args.out)
    except EnumerationCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except OptimizerBudgetExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.best is not None:
            print(f"best found: {exc.best.value!r}", file=sys.stderr)
        return EXIT_OPTIMIZER
    except (InfoCorrError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
