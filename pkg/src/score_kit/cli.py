"""Command-line interface.

Subcommands
-----------
``select``            deploy/abstain decisions (marginal) or eBH selection
                      (selective) on user-supplied calibration/test CSVs
``evalues``           emit the selective e-values without filtering
``simulate``          run a synthetic experiment and emit a metrics CSV
``estimate-weights``  fit covariate-shift weights by probabilistic
                      classification and score a query file

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Every run with ``--seed`` is bit-reproducible; without it a seed is drawn
from entropy and printed to stderr for replay.  Floats are written with 17
significant digits.  The ``SCORE_KIT_THREADS`` environment variable caps
worker parallelism (the current implementation is single-threaded, which
always respects the cap).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .core import Levels, ScoreKitError, read_calibration_csv, read_test_csv, validate_batch
from .mdr import deploy_mask
from .models import DivergedFit, logistic_fit_weights, weight_predict
from .sdr import sdr_evalues, sdr_evalues_conservative, weighted_sdr_evalues
from .selection import boost_hete, boost_homo, ebh
from .simulate import (DgpSetting, ExperimentConfig, RewardKind, RiskKind, ShiftModel,
                       canonical_risk, run_experiment, write_metrics_csv)

__all__ = ["main"]

_FMT = "{:.17g}".format


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the CLI contract wants 1.
    def error(self, message):
        raise _UsageError(message)


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2 ** 63))
        print(f"seed drawn from entropy: {seed} (pass --seed {seed} to replay)", file=sys.stderr)
    return seed


def _open_out(path):
    return open(path, "w", newline="", encoding="utf-8") if path else sys.stdout


def _close_out(fh):
    if fh is not sys.stdout:
        fh.close()


def _threads_cap() -> int:
    raw = os.environ.get("SCORE_KIT_THREADS")
    if raw is None:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        raise _UsageError(f"SCORE_KIT_THREADS must be an integer, got {raw!r}") from None
    if cap < 1:
        raise _UsageError(f"SCORE_KIT_THREADS must be >= 1, got {cap}")
    return cap


def _load_batch(args):
    """Build the validated batch; weights enter only under --weighted."""
    calib = read_calibration_csv(args.calib)
    tests = read_test_csv(args.test)
    if args.weighted:
        _require_weight_columns(args)
        return validate_batch(calib, tests)
    return validate_batch([(c.score, c.risk) for c in calib], [t.score for t in tests])


def _compute_evalues(args, batch, gamma):
    if args.conservative:
        return sdr_evalues_conservative(batch, None, alpha=args.alpha).evalues
    if args.weighted:
        return weighted_sdr_evalues(batch, None, gamma=gamma).evalues
    return sdr_evalues(batch, None, gamma=gamma).evalues


def _cmd_select(args) -> int:
    _threads_cap()
    batch = _load_batch(args)
    gamma = args.gamma if args.gamma is not None else args.alpha
    rng = np.random.default_rng(_resolve_seed(args.seed))

    out = _open_out(args.out)
    try:
        writer = csv.writer(out)
        if args.method == "mdr":
            mask = deploy_mask(batch, Levels(alpha=args.alpha, gamma=gamma))
            writer.writerow(["index", "score", "deploy"])
            for j in range(batch.m):
                writer.writerow([j, _FMT(batch.test_scores[j]), int(mask[j])])
        else:
            ev = _compute_evalues(args, batch, gamma)
            if args.boost == "none":
                result = ebh(ev, args.alpha)
            elif args.boost == "hete":
                result = boost_hete(ev, args.alpha, 1.0 - rng.uniform(size=batch.m))
            else:
                result = boost_homo(ev, args.alpha, 1.0 - float(rng.uniform()))
            writer.writerow(["index", "score", "evalue", "selected"])
            for j in range(batch.m):
                writer.writerow([j, _FMT(batch.test_scores[j]), _FMT(ev[j]),
                                 int(j in result.selected)])
    finally:
        _close_out(out)
    return 0


def _require_weight_columns(args) -> None:
    for path in (args.calib, args.test):
        with open(path, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), None)
        if header is None or "weight" not in header:
            raise ScoreKitError(f"{path}: --weighted requires a 'weight' column")


def _cmd_evalues(args) -> int:
    _threads_cap()
    batch = _load_batch(args)
    ev = _compute_evalues(args, batch, args.gamma)
    out = _open_out(args.out)
    try:
        writer = csv.writer(out)
        writer.writerow(["index", "score", "evalue"])
        for j in range(batch.m):
            writer.writerow([j, _FMT(batch.test_scores[j]), _FMT(ev[j])])
    finally:
        _close_out(out)
    return 0


_RISK_ALIASES = {"binary-all-one": "one"}


def _cmd_simulate(args) -> int:
    _threads_cap()
    setting = DgpSetting(id=args.setting)
    kind = _RISK_ALIASES.get(args.risk, args.risk)
    if kind == "auto" or kind == canonical_risk(args.setting).kind:
        risk = canonical_risk(args.setting)
    else:
        risk = RiskKind(kind)
    try:
        alphas = tuple(float(a) for a in args.alphas.split(","))
    except ValueError:
        raise _UsageError(f"--alphas must be a comma-separated float list, got {args.alphas!r}") from None

    config = ExperimentConfig(
        setting=setting,
        risk=risk,
        reward=RewardKind(args.reward),
        shift=ShiftModel(args.shift),
        n=args.n, m=args.m, reps=args.reps,
        alpha_grid=alphas,
        method=args.method,
        boost=args.boost,
        score_mode=args.score_mode,
        seed=_resolve_seed(args.seed),
        weighted=args.weighted,
    )
    rows = run_experiment(config)
    out = _open_out(args.out)
    try:
        write_metrics_csv(rows, out)
    finally:
        _close_out(out)
    return 0


def _read_feature_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ScoreKitError(f"{path}: file is empty, expected a header row")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ScoreKitError(f"{path}: line {line_no}: expected {len(header)} cells, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                bad = next(i for i, v in enumerate(row) if not _is_float(v))
                raise ScoreKitError(
                    f"{path}: line {line_no}, column {header[bad]!r}: non-numeric value {row[bad]!r}") from None
    return header, np.asarray(rows, dtype=float)


def _is_float(v: str) -> bool:
    try:
        float(v)
        return True
    except ValueError:
        return False


def _cmd_estimate_weights(args) -> int:
    _threads_cap()
    src_header, src = _read_feature_csv(args.source)
    tgt_header, tgt = _read_feature_csv(args.target)
    if src_header != tgt_header:
        raise ScoreKitError(
            f"feature columns differ between {args.source} ({src_header}) and {args.target} ({tgt_header})")
    try:
        lo, hi = (float(v) for v in args.clip.split(","))
    except ValueError:
        raise _UsageError(f"--clip must be 'LO,HI', got {args.clip!r}") from None

    model = logistic_fit_weights(src, tgt, lr=args.lr, iters=args.iters, clip=(lo, hi))
    print(f"fit done: final loss {model.final_loss:.6f}", file=sys.stderr)

    if args.query:
        q_header, query = _read_feature_csv(args.query)
        if q_header != src_header:
            raise ScoreKitError(f"query columns {q_header} do not match the training columns {src_header}")
    else:
        query = tgt
    weights = np.atleast_1d(weight_predict(model, query))

    out = _open_out(args.out)
    try:
        writer = csv.writer(out)
        writer.writerow(["index", "weight"])
        for j, w in enumerate(weights):
            writer.writerow([j, _FMT(w)])
    finally:
        _close_out(out)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="score-kit", description="Deployment-risk control with e-values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="select test points with marginal or selective risk control")
    p.add_argument("calib", help="calibration CSV (score,risk[,weight])")
    p.add_argument("test", help="test CSV (score[,weight])")
    p.add_argument("--method", choices=("mdr", "sdr"), required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, default=None, help="defaults to --alpha")
    p.add_argument("--boost", choices=("none", "hete", "homo"), default="none")
    p.add_argument("--weighted", action="store_true", help="use the weight columns (covariate shift)")
    p.add_argument("--conservative", action="store_true", help="use the simpler conservative e-values")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("evalues", help="emit selective e-values without filtering")
    p.add_argument("calib")
    p.add_argument("test")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None, help="level for --conservative")
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--conservative", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_evalues)

    p = sub.add_parser("simulate", help="run a synthetic experiment")
    p.add_argument("--setting", type=int, choices=range(1, 7), required=True)
    p.add_argument("--risk", default="auto",
                   choices=("auto", "excess", "l2", "sigmoid", "binary", "zero", "binary-all-one"))
    p.add_argument("--reward", choices=("constant", "squared"), default="constant")
    p.add_argument("--shift", choices=("none", "w1", "w2", "w3"), default="none")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--alphas", default="0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5")
    p.add_argument("--method", choices=("mdr", "sdr"), required=True)
    p.add_argument("--boost", choices=("none", "hete", "homo"), default="none")
    p.add_argument("--score-mode", dest="score_mode",
                   choices=("risk_prediction", "risk_reward_ratio"), default="risk_prediction")
    p.add_argument("--weighted", choices=("estimated", "true"), default="estimated",
                   help="how weights enter when --shift is not 'none'")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate-weights", help="fit covariate-shift weights from feature CSVs")
    p.add_argument("source", help="feature CSV from the calibration population")
    p.add_argument("target", help="feature CSV from the test population")
    p.add_argument("--query", default=None, help="feature CSV to score (default: the target file)")
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--clip", default="0.05,20", help="weight clip bounds 'LO,HI'")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_estimate_weights)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in ("select", "evalues") and args.conservative and args.weighted:
            raise _UsageError("--conservative and --weighted cannot be combined")
        if args.command == "select":
            if not (0.0 < args.alpha < 1.0):
                raise _UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
            if args.gamma is not None and not args.gamma > 0.0:
                raise _UsageError(f"--gamma must be positive, got {args.gamma}")
        if args.command == "evalues":
            if args.conservative and args.alpha is None:
                raise _UsageError("--conservative requires --alpha")
            if not args.conservative and (args.gamma is None or not args.gamma > 0.0):
                raise _UsageError("a positive --gamma is required (or pass --conservative with --alpha)")
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DivergedFit as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except (ScoreKitError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
