"""Command-line harness: curve emission, Monte-Carlo runs, sweeps, self-tests.

Subcommands
-----------
analytics    evaluate efficiency curves on an eps grid -> CSV
simulate     run a scheme over a parameter grid -> JSONL records + summary
sweep        empirical vs analytic comparison -> CSV
codec-bench  reconciliation failure rate vs syndrome margin -> CSV
selftest     sanity-check the statistical test battery

Exit codes: 0 success, 1 usage/parameter error, 2 runtime failure or decode
failure rate above threshold.  A flat key=value config file can seed any
flag; explicit flags win.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import analytics
from .core import ChannelParams, ParameterError, SourceParams, substream
from .model_c import run_scheme_c1, run_scheme_c2
from .model_s import run_scheme_s1, run_scheme_s2, run_scheme_s3
from .reconcile import (
    CorrelationModel,
    DecodeFailure,
    make_code,
    sw_decode,
    sw_encode,
    syndrome_length_for,
)
from .stats import chi2_independence, chi2_uniformity
from .report import SessionReport

__all__ = ["main"]

LN2 = math.log(2.0)

CURVE_CSV_HEADER = ["curve", "eps", "eta", "value_nats", "value_bits"]
SWEEP_CSV_HEADER = [
    "scheme",
    "eps",
    "eta",
    "uses",
    "trials",
    "empirical_nats",
    "empirical_bits",
    "empirical_ci95_nats",
    "exact_nats",
    "asymptote_nats",
    "gap_exact_nats",
    "gap_asymptote_nats",
    "agreement_rate",
    "decode_failure_rate",
]
BENCH_CSV_HEADER = ["margin", "block_len", "syndrome_bits", "blocks", "failures", "failure_rate"]

SCHEMES = ("c1", "c2", "s1", "s2", "s2-pnr", "s3")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); usage errors are exit 1 here
        raise UsageError(f"{self.prog}: {message}")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _parse_grid(spec: str) -> list[float]:
    """`min:max:points` -> log-spaced grid; plain comma list otherwise."""
    if ":" in spec:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
        if lo <= 0 or hi <= lo or n < 2:
            raise UsageError(f"bad grid spec {spec!r}")
        return [float(v) for v in np.geomspace(lo, hi, n)]
    return [float(v) for v in spec.split(",") if v]


def _load_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"bad config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def build_parser() -> _Parser:
    parser = _Parser(prog="photonkey", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser) -> None:
        p.add_argument("--config", help="flat key=value file providing flag defaults")
        p.add_argument("--eps", help="mean photon number(s), comma separated")
        p.add_argument("--eps-grid", help="log grid min:max:points")
        p.add_argument("--eta", help="channel / Bob-side transmissivity(ies), comma separated")
        p.add_argument("--eta-a", type=float, default=1.0, help="Alice-side transmissivity (source schemes)")
        p.add_argument("--eta-b", help="alias for --eta for source schemes")
        p.add_argument("--lambda-a", type=float, default=0.0, help="Alice dark counts per slot")
        p.add_argument("--lambda-b", type=float, default=0.0, help="Bob dark counts per slot")
        p.add_argument("--uses", type=int, default=1_000_000, help="channel uses / source slots per trial")
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--scheme", choices=SCHEMES)
        p.add_argument("--codec-margin", type=float, default=0.15)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--failure-threshold", type=float, default=0.01, help="decode failure rate above this exits 2")
        p.add_argument("--out", help="output path (CSV or JSONL); stdout when omitted")

    for name in ("analytics", "simulate", "sweep", "codec-bench", "selftest"):
        p = sub.add_parser(name)
        common(p)
        if name == "analytics":
            p.add_argument("--curves", help="comma list, default all: " + ",".join(analytics.CURVES))
        if name == "codec-bench":
            p.add_argument("--margins", default="0.2,0.15,0.1,0.05,0.0")
            p.add_argument("--blocks", type=int, default=50)
            p.add_argument("--block-len", type=int, default=10_000)
    return parser


def _apply_config(args: argparse.Namespace, parser_argv: list[str]) -> argparse.Namespace:
    if not args.config:
        return args
    overrides = _load_config(args.config)
    explicit = {a.split("=", 1)[0].lstrip("-").replace("-", "_") for a in parser_argv if a.startswith("--")}
    for key, value in overrides.items():
        if key in explicit or not hasattr(args, key):
            continue
        current = getattr(args, key)
        if isinstance(current, bool):
            value = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            value = int(value)
        elif isinstance(current, float):
            value = float(value)
        setattr(args, key, value)
    return args


def _eps_values(args: argparse.Namespace) -> list[float]:
    if args.eps_grid:
        return _parse_grid(args.eps_grid)
    if args.eps:
        return _parse_grid(args.eps)
    raise UsageError("provide --eps or --eps-grid")


def _eta_values(args: argparse.Namespace) -> list[float]:
    source = args.eta_b if args.eta_b else args.eta
    if not source:
        raise UsageError("provide --eta (or --eta-b)")
    return _parse_grid(str(source))


def _open_out(args: argparse.Namespace):
    if args.out:
        return open(args.out, "w", newline="")
    return sys.stdout


def run_scheme_point(
    scheme: str, eta: float, eps: float, args: argparse.Namespace, seed: int
) -> SessionReport:
    if scheme in ("c1", "c2"):
        cp = ChannelParams(eta=eta, eps=eps)
        if scheme == "c1":
            return run_scheme_c1(cp, args.uses, seed, workers=args.workers)
        return run_scheme_c2(cp, args.uses, seed, workers=args.workers)
    sp = SourceParams(
        eta_a=args.eta_a, eta_b=eta, eps=eps, lambda_a=args.lambda_a, lambda_b=args.lambda_b
    )
    if scheme == "s1":
        return run_scheme_s1(sp, args.uses, seed, codec_margin=args.codec_margin, workers=args.workers)
    if scheme == "s2":
        return run_scheme_s2(sp, args.uses, seed, pnr=False, workers=args.workers)
    if scheme == "s2-pnr":
        return run_scheme_s2(sp, args.uses, seed, pnr=True, workers=args.workers)
    if scheme == "s3":
        return run_scheme_s3(sp, args.uses, seed, codec_margin=args.codec_margin, workers=args.workers)
    raise UsageError(f"unknown scheme {scheme!r}")


def _analytic_reference(scheme: str, eta: float, eps: float) -> tuple[float, float]:
    """(exact finite-eps forecast, asymptote) for the sweep comparison.

    The forecast reproduces the simulator's own accounting in expectation,
    normalized per detected photon.
    """
    if scheme == "c1":
        b = math.ceil(1.0 / eps)
        return math.log(b), math.log(1.0 / eps)
    if scheme == "c2":
        b = analytics.frame_length_kd(eps)
        exact = math.log(b) - analytics.leakage_c2_bound(eta, eps, b)
        asym = math.log(1.0 / eps) - math.log(math.log(1.0 / eps)) - (1.0 - eta)
        return exact, asym
    if scheme == "s1":
        pair = analytics.r_s1(eta, eps)
        return pair.exact, pair.asym
    b = analytics.frame_length_kd(eps)
    click_rate = -math.expm1(-eta * eps) * b
    if scheme == "s2":
        p_keep = b * (-math.expm1(-eta * eps)) * math.exp(-(b - 1) * eps)
        exact = (p_keep * math.log(b) - analytics.leakage_s2_bound(eta, eps, b)) / click_rate
        return exact, analytics.r_s2_asym(eps)
    if scheme == "s2-pnr":
        p_keep = b * eta * eps * math.exp(-b * eps)
        return p_keep * math.log(b) / click_rate, analytics.r_s2_asym(eps)
    if scheme == "s3":
        p_keep = b * (-math.expm1(-eta * eps)) * math.exp(-(b - 1) * eps)
        part2 = (p_keep * math.log(b) - analytics.leakage_s2_bound(eta, eps, b)) / click_rate
        part1 = analytics.s3_first_part_rate(eta, eps, b) * (eta * b * eps) / click_rate
        return part1 + part2, analytics.r_s3_lower(eta, eps)
    raise UsageError(f"unknown scheme {scheme!r}")


def cmd_analytics(args: argparse.Namespace) -> int:
    curves = args.curves.split(",") if args.curves else list(analytics.CURVES)
    eps_values = _eps_values(args)
    rows = []
    for eta in _eta_values(args):
        points = analytics.curve_points(eps_values, eta, curves)
        rows.extend(points)
    rows.sort(key=lambda p: (p.curve, p.eta, p.eps))
    out = _open_out(args)
    writer = csv.writer(out)
    writer.writerow(CURVE_CSV_HEADER)
    for p in rows:
        writer.writerow([p.curve, _fmt(p.eps), _fmt(p.eta), _fmt(p.value), _fmt(p.value / LN2)])
    if out is not sys.stdout:
        out.close()
    return 0


def _simulate_points(args: argparse.Namespace):
    """Yield (eta, eps, reports | ParameterError) per grid point.

    An invalid scheme/params combination is reported for its point and the
    rest of the grid still runs.
    """
    if not args.scheme:
        raise UsageError("simulate/sweep need --scheme")
    for eta in _eta_values(args):
        for eps in _eps_values(args):
            try:
                reports = [
                    run_scheme_point(args.scheme, eta, eps, args, args.seed + trial)
                    for trial in range(args.trials)
                ]
            except ParameterError as exc:
                print(
                    f"# {args.scheme} eps={_fmt(eps)} eta={_fmt(eta)} parameter error: {exc}",
                    file=sys.stderr,
                )
                yield eta, eps, exc
                continue
            yield eta, eps, reports


def cmd_simulate(args: argparse.Namespace) -> int:
    out = _open_out(args)
    worst_failure = 0.0
    any_invalid = False
    for eta, eps, reports in _simulate_points(args):
        if isinstance(reports, ParameterError):
            any_invalid = True
            continue
        for rep in reports:
            out.write(rep.to_json() + "\n")
        effs = np.array([r.efficiency for r in reports])
        agree = np.mean([r.agreement for r in reports])
        fail = np.mean([r.failure_rate for r in reports])
        worst_failure = max(worst_failure, float(fail))
        ci = 1.96 * effs.std(ddof=1) / math.sqrt(len(effs)) if len(effs) > 1 else 0.0
        print(
            f"# {args.scheme} eps={_fmt(eps)} eta={_fmt(eta)} trials={args.trials} "
            f"eff={effs.mean():.6f}±{ci:.6f} nats/photon agreement={agree:.4f} "
            f"decode_failure_rate={fail:.4f}",
            file=sys.stderr,
        )
    if out is not sys.stdout:
        out.close()
    if worst_failure > args.failure_threshold:
        return 2
    return 1 if any_invalid else 0


def cmd_sweep(args: argparse.Namespace) -> int:
    out = _open_out(args)
    writer = csv.writer(out)
    writer.writerow(SWEEP_CSV_HEADER)
    worst_failure = 0.0
    any_invalid = False
    for eta, eps, reports in _simulate_points(args):
        if isinstance(reports, ParameterError):
            any_invalid = True
            continue
        effs = np.array([r.efficiency for r in reports])
        mean = float(effs.mean())
        ci = 1.96 * float(effs.std(ddof=1)) / math.sqrt(len(effs)) if len(effs) > 1 else 0.0
        exact, asym = _analytic_reference(args.scheme, eta, eps)
        agree = float(np.mean([r.agreement for r in reports]))
        fail = float(np.mean([r.failure_rate for r in reports]))
        worst_failure = max(worst_failure, fail)
        writer.writerow(
            [
                args.scheme,
                _fmt(eps),
                _fmt(eta),
                args.uses,
                args.trials,
                _fmt(mean),
                _fmt(mean / LN2),
                _fmt(ci),
                _fmt(exact),
                _fmt(asym),
                _fmt(mean - exact),
                _fmt(mean - asym),
                _fmt(agree),
                _fmt(fail),
            ]
        )
    if out is not sys.stdout:
        out.close()
    if worst_failure > args.failure_threshold:
        return 2
    return 1 if any_invalid else 0


def cmd_codec_bench(args: argparse.Namespace) -> int:
    eta = _eta_values(args)[0]
    eps = _eps_values(args)[0]
    b = analytics.frame_length_kd(eps)
    zp = analytics.frame_zparams(eta, eps, b)
    model = CorrelationModel(z=zp)
    out = _open_out(args)
    writer = csv.writer(out)
    writer.writerow(BENCH_CSV_HEADER)
    rng = substream(args.seed, 90, 0)
    for margin in [float(v) for v in str(args.margins).split(",")]:
        m = syndrome_length_for(model, args.block_len, margin)
        code = make_code(args.block_len, m, args.seed)
        failures = 0
        for _ in range(args.blocks):
            side = (rng.random(args.block_len) < zp.q).astype(np.uint8)
            src = (side & (rng.random(args.block_len) < zp.mu)).astype(np.uint8)
            syndrome = sw_encode(code, src)
            try:
                decoded = sw_decode(code, syndrome, side, model)
                if not np.array_equal(decoded, src):
                    failures += 1
            except DecodeFailure:
                failures += 1
        writer.writerow(
            [_fmt(margin), args.block_len, m, args.blocks, failures, _fmt(failures / args.blocks)]
        )
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_selftest(args: argparse.Namespace) -> int:
    rng = substream(args.seed, 91, 0)
    ok = True

    uniform_counts = np.bincount(rng.integers(0, 50, size=100_000), minlength=50)
    res = chi2_uniformity(uniform_counts, "uniform-input")
    print(res.summary())
    ok &= res.passed

    biased = np.bincount(rng.binomial(1, 0.6, size=100_000), minlength=2)
    res = chi2_uniformity(biased, "biased-coin (should fail)")
    print(res.summary())
    ok &= not res.passed

    x = rng.poisson(0.8, size=200_000)
    y = rng.poisson(1.3, size=200_000)
    res = chi2_independence(x, y, "independent-poisson")
    print(res.summary())
    ok &= res.passed

    res = chi2_independence(x, x + rng.poisson(0.2, size=x.size), "correlated (should fail)")
    print(res.summary())
    ok &= not res.passed

    print("selftest:", "ok" if ok else "FAILED")
    return 0 if ok else 2


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(args, argv)
        handler = {
            "analytics": cmd_analytics,
            "simulate": cmd_simulate,
            "sweep": cmd_sweep,
            "codec-bench": cmd_codec_bench,
            "selftest": cmd_selftest,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
