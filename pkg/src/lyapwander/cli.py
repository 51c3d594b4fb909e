"""Command-line front end.

    lyapwander trace --alpha 1 --beta 1 --out runs/
    lyapwander sweep --sigma 0.4,0.2,0.1,0.05
    lyapwander verify --config params.json
    lyapwander wander | spectrum | dump-sequences

Exit codes: 0 success, 1 verification or numerical failure, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cocycle import blocks_total, exponent_trace, omega_interval_estimate
from .errors import BoundViolation, DisjointnessFailure, LyapwanderError
from .parameters import (REFERENCE, Params, limit_exponents, load_params, params_from_sigma,
                         validate_params)
from .sequences import SequenceTable

log = logging.getLogger("lyapwander")


class ConfigError(Exception):
    pass


# -- output helpers -------------------------------------------------------------

def _meta(args, p: Params) -> dict:
    return {"version": __version__, "command": args.command, "params": p.to_dict(),
            "sigma": p.sigma, "M": p.M, "seed": args.seed}


def _timestamps() -> dict:
    return {"written": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}


def write_json(path: Path, meta: dict, body: dict) -> None:
    doc = {"meta": meta, **body, "timestamps": _timestamps()}
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def write_csv(path: Path, meta: dict, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _outdir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _params(args) -> Params:
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"parameter file not found: {path}")
        try:
            return load_params(path)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"invalid parameter file {path}: {exc}") from exc
    return validate_params(args.r, args.gamma, args.eps1, args.eps2)


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _m0(args, p: Params) -> int:
    if args.m0 is not None:
        return args.m0
    return (p.M + 1) if p.M is not None else 4


# -- commands -------------------------------------------------------------------

def cmd_trace(args) -> int:
    p = _params(args)
    out = _outdir(args)
    m0 = _m0(args, p)
    nmax = args.nmax or blocks_total(m0, 6, p.gamma)
    tr = exponent_trace(m0, nmax, args.alpha, args.beta, p)
    est = omega_interval_estimate(tr, args.tail)
    meta = _meta(args, p)
    meta.update(m0=m0, alpha=args.alpha, beta=args.beta, nmax=nmax, tail=args.tail)
    write_csv(out / "trace.csv", meta, ["n", "a_n", "epoch", "block_phase"],
              zip(tr.n.tolist(), tr.a.tolist(), tr.epoch.tolist(), tr.phase.tolist()))
    write_json(out / "omega.json", meta, est.to_dict())
    print(f"omega estimate [{est.lo:.6f}, {est.hi:.6f}]  predicted [{est.predicted_lo:.6f}, "
          f"{est.predicted_hi:.6f}]  n_last={est.n_last}")
    return 0


def sweep_row(sigma: float, base: dict, m0: int, nmax: int | None, alpha: float, beta: float, tail: float):
    p = params_from_sigma(sigma, eps1=base["eps1"], r=base["r"], gamma=base["gamma"], resolve_epoch=False)
    lim = limit_exponents(p)
    n = nmax or blocks_total(m0, 8, p.gamma)
    est = omega_interval_estimate(exponent_trace(m0, n, alpha, beta, p), tail)
    return [sigma, p.eps2, lim.xi0, lim.xi1, lim.mean, est.lo, est.hi, est.hi - est.lo,
            est.predicted_hi - est.predicted_lo]


def cmd_sweep(args) -> int:
    p = _params(args)
    out = _outdir(args)
    sigmas = args.sigma or [0.4, 0.2, 0.1, 0.05]
    for s in sigmas:
        if not 0.0 < s < 1.0:
            raise BoundViolation("0<sigma<1", min(s, 1.0 - s), f"sigma={s} outside (0, 1)")
    base = p.to_dict()
    m0 = args.m0 or 4
    a, b = (args.alpha, args.beta)
    jobs = [(s, base, m0, args.nmax, a, b, args.tail) for s in sigmas]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(sweep_row, *zip(*jobs)))
    else:
        rows = [sweep_row(*j) for j in jobs]
    meta = _meta(args, p)
    meta.update(m0=m0, alpha=a, beta=b, tail=args.tail)
    write_csv(out / "sweep.csv", meta, ["sigma", "eps2", "xi0", "xi1", "mean", "lo", "hi", "width",
                                        "predicted_width"], rows)
    for r in rows:
        print(f"sigma={r[0]:<6g} width={r[7]:.6g} predicted={r[8]:.6g} lo={r[5]:.6f}")
    return 0


def cmd_verify(args) -> int:
    from .verify import run_verify

    p = _params(args)
    out = _outdir(args)
    rep = run_verify(p, wandering_only=args.wandering_only)
    write_json(out / "verify.json", _meta(args, p), rep)
    for s in rep["suites"]:
        print(f"{'PASS' if s['ok'] else 'FAIL'} {s['name']}: {s['passed']} passed, {s['failed']} failed")
    return 0 if rep["ok"] else 1


def cmd_wander(args) -> int:
    from .wandering import birkhoff_stats, check_disjoint, epoch_total

    p = _params(args)
    if p.M is None:
        raise LyapwanderError("no base epoch M found for these parameters")
    out = _outdir(args)
    m_start = args.m_start or p.M + 1
    steps = args.steps or epoch_total(m_start, 2, p.gamma)
    scales = [p.gamma ** (p.M + j) for j in (4, 5, 6)]
    tab = SequenceTable(p, m_max=max(m_start + 8, p.M + 8))
    try:
        rep = check_disjoint(m_start, steps, tab)
        body = rep.to_dict()
    except DisjointnessFailure as exc:
        body = exc.report.to_dict()
    radius = args.radius or math.exp(-p.eps1 * p.gamma ** (p.M + 2))
    meta = _meta(args, p)
    meta.update(radius=radius)
    write_json(out / "wander.json", meta, body)
    write_csv(out / "birkhoff.csv", meta, ["steps", "fraction"],
              [(s, birkhoff_stats(m_start, s, radius, tab)) for s in scales])
    print(f"disjoint={body['disjoint']} min_gap_log={body['min_gap_log']:.6g}")
    return 0 if body["disjoint"] else 1


def cmd_spectrum(args) -> int:
    from .spectrum import (acim_supports, analytic_skeleton, build_ulam, hit_time_stats,
                           leading_spectrum, sigma_family)

    p = _params(args)
    out = _outdir(args)
    system = analytic_skeleton(p) if args.system == "skeleton" else sigma_family(p)
    op = build_ulam(system, args.grid, args.samples, args.seed)
    sd = leading_spectrum(op, count=args.count)
    sup = acim_supports(sd, args.threshold)
    horizons = sorted({max(1, args.horizon // 10), max(1, args.horizon // 2), args.horizon})
    uni = hit_time_stats(system, "uniform-D", sup, args.horizon, args.hit_samples, args.seed)
    body = {"n": args.grid, "s": args.samples, "seed": args.seed, "system": system.name,
            "steps_per_operator": op.steps,
            "eigenvalues": [{"re": float(z.real), "im": float(z.imag), "abs": float(abs(z))}
                            for z in sd.eigenvalues],
            "residuals": sd.residuals.tolist(), "q_hat": sup.q_hat, "threshold": args.threshold,
            "hit_fraction_by_horizon": {str(k): v for k, v in uni.fraction_by_horizon(horizons).items()}}
    if p.M is not None:
        wm = hit_time_stats(system, f"wandering-rectangle({p.M + 1})", sup, args.horizon,
                            min(args.hit_samples, 2000), args.seed)
        body["wandering_hit_fraction_by_horizon"] = {str(k): v for k, v in wm.fraction_by_horizon(horizons).items()}
    write_json(out / "spectrum.json", _meta(args, p), body)
    print(f"|lambda| = {[round(float(abs(z)), 6) for z in sd.eigenvalues]}  q_hat={sup.q_hat}")
    return 0


def cmd_dump(args) -> int:
    p = _params(args)
    out = _outdir(args)
    lo, hi = args.m_range
    tab = SequenceTable(p, m_max=hi + 1, m_min=max(1, lo))
    meta = _meta(args, p)

    def rows():
        for m in range(lo, hi + 1):
            e = tab.epoch_arrays(m)
            for i in range(e["k"].size):
                yield (m, int(e["k"][i]), e["logB"][i], e["logL"][i], e["logH"][i], e["logW"][i])

    write_csv(out / "sequences.csv", meta, ["m", "k", "logB", "logL", "logH", "logW"], rows())
    return 0


def _m_range(text: str) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LO:HI")
    if not 1 <= a <= b <= 16:
        raise argparse.ArgumentTypeError("need 1 <= LO <= HI <= 16")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("parameters")
    g.add_argument("--config", help="JSON file with keys r, gamma, eps1, eps2")
    g.add_argument("--r", type=int, default=REFERENCE["r"])
    g.add_argument("--gamma", type=int, default=REFERENCE["gamma"])
    g.add_argument("--eps1", type=float, default=REFERENCE["eps1"])
    g.add_argument("--eps2", type=float, default=REFERENCE["eps2"])
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="lyapwander", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def trace_knobs(sp):
        sp.add_argument("--alpha", type=float, default=2 ** -0.5)
        sp.add_argument("--beta", type=float, default=2 ** -0.5)
        sp.add_argument("--nmax", type=int, default=None, help="trace length")
        sp.add_argument("--tail", type=float, default=0.9, help="tail fraction for the omega window")
        sp.add_argument("--m0", type=int, default=None, help="starting epoch")

    sp = sub.add_parser("trace", parents=[common], help="exponent trace and omega-limit estimate")
    trace_knobs(sp)
    sp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("sweep", parents=[common], help="omega-interval width over sigma")
    trace_knobs(sp)
    sp.add_argument("--sigma", type=_float_list, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", parents=[common], help="run the verification suites")
    sp.add_argument("--wandering-only", action="store_true",
                    help="skip the stated inequality suite, keep the sufficient geometric checks")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("wander", parents=[common], help="disjointness and Birkhoff statistics")
    sp.add_argument("--m-start", type=int, default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--radius", type=float, default=None)
    sp.set_defaults(func=cmd_wander)

    sp = sub.add_parser("spectrum", parents=[common], help="Ulam operator probe")
    sp.add_argument("--grid", type=int, default=128)
    sp.add_argument("--samples", type=int, default=4, help="s: s x s samples per cell")
    sp.add_argument("--horizon", type=int, default=2000)
    sp.add_argument("--hit-samples", type=int, default=20000)
    sp.add_argument("--threshold", type=float, default=1e-5)
    sp.add_argument("--count", type=int, default=6)
    sp.add_argument("--system", choices=("skeleton", "sigma"), default="skeleton")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("dump-sequences", parents=[common], help="CSV of log B, L, H, W")
    sp.add_argument("--m-range", type=_m_range, default=(4, 6))
    sp.set_defaults(func=cmd_dump)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, BoundViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LyapwanderError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
