"""Command-line front end: moments, recurrence, verify, and pvi subcommands.

Configuration comes from a flat JSON file (--config) overridden by flags;
all numbers are emitted as full-precision decimal strings so reports are
reproducible across platforms.  Exit codes: 0 all checks pass, 1 any FAIL
in a verification run, 2 configuration or runtime error.
"""

import argparse
import json
import sys

from .errors import LaguerreHahnError
from .numerics import PrecisionContext, mpfr_to_str
from .opseq import recurrence_from_moments
from .verify import REPORT_SCHEMA_VERSION, run_verification
from .weights import WeightParams, moment_table

PVI_TABLE_HEADER = (
    "n,t,q,dq,d2q,p,delta1,delta2,delta3,delta4,pvi_residual,hamilton_residual"
)
PVI_TABLE_VERSION_LINE = "# laguerrehahn pvi-table schema v1"

_DEFAULTS = {
    "alpha": "0.3",
    "beta": "0.7",
    "mu": "1.5",
    "t_grid": ["2"],
    "n_max": 6,
    "bits": 320,
    "seed": 0,
    "format": "json",
    "output": None,
    "cache_dir": None,
    "corrupt": None,
    "timings": True,
    "n": 4,
}


def _add_common(p):
    p.add_argument("--alpha", help="exponent of x (> -1)")
    p.add_argument("--beta", help="exponent of 1-x (> -1)")
    p.add_argument("--mu", help="exponent of t-x (> -1)")
    p.add_argument("--t", help="single deformation value (> 1)")
    p.add_argument("--t-grid", help="comma-separated deformation values (> 1)")
    p.add_argument("--n-max", type=int, help="largest ladder index checked")
    p.add_argument("--bits", type=int, help="working mantissa precision (>= 64)")
    p.add_argument("--seed", type=int, help="seed for the random sample points")
    p.add_argument("--format", choices=["json", "csv", "text"], help="output format")
    p.add_argument("--output", help="output path (default: stdout)")
    p.add_argument("--config", help="flat JSON config file; flags win")
    p.add_argument("--cache-dir", help="moment cache directory")


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="laguerrehahn",
        description="High-precision identity verification for deformed "
        "Laguerre-Hahn orthogonal polynomial systems.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="compute a moment table (values + jets)")
    _add_common(p)
    p.add_argument("--n", type=int, help="largest moment index")

    p = sub.add_parser("recurrence", help="compute recurrence coefficients")
    _add_common(p)

    p = sub.add_parser("verify", help="run the full identity catalogue")
    _add_common(p)
    p.add_argument(
        "--corrupt",
        help="test hook kind:index:factor (gamma:2:1.01, beta:1:0.99, delta:2:flip)",
    )
    p.add_argument(
        "--no-timings",
        action="store_true",
        help="zero the elapsed fields for byte-reproducible reports",
    )

    p = sub.add_parser("pvi", help="tabulate the transcendent over the grid")
    _add_common(p)
    return ap


def _resolve_config(args):
    cfg = dict(_DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        for key, value in file_cfg.items():
            k = key.replace("-", "_")
            if k not in cfg:
                raise ValueError(f"unknown config key {key!r}")
            cfg[k] = value
    for key in ("alpha", "beta", "mu", "n_max", "bits", "seed", "format", "output",
                "cache_dir"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if getattr(args, "t_grid", None):
        cfg["t_grid"] = [s.strip() for s in args.t_grid.split(",") if s.strip()]
    elif getattr(args, "t", None):
        cfg["t_grid"] = [args.t]
    if isinstance(cfg["t_grid"], str):
        cfg["t_grid"] = [s.strip() for s in cfg["t_grid"].split(",") if s.strip()]
    if getattr(args, "n", None) is not None:
        cfg["n"] = args.n
    if getattr(args, "corrupt", None) is not None:
        cfg["corrupt"] = args.corrupt
    if getattr(args, "no_timings", False):
        cfg["timings"] = False

    if int(cfg["n_max"]) < 1:
        raise ValueError("n_max must be >= 1")
    if int(cfg["bits"]) < 64:
        raise ValueError("bits must be >= 64")
    for t in cfg["t_grid"]:
        if not float(t) > 1:
            raise ValueError(f"every t must exceed 1, got {t}")
    return cfg


def _short_decimal(s):
    """Compress a full-precision decimal string to a readable magnitude."""
    mantissa, _, exp = s.partition("e")
    if len(mantissa) > 8:
        mantissa = mantissa[:8]
    return mantissa + ("e" + exp if exp else "")


def _emit(text, output):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jet_strings(j):
    return mpfr_to_str(j.v), mpfr_to_str(j.d1), mpfr_to_str(j.d2)


def cmd_moments(cfg):
    ctx = PrecisionContext(bits=int(cfg["bits"]))
    docs = []
    for t in cfg["t_grid"]:
        params = WeightParams.create(cfg["alpha"], cfg["beta"], cfg["mu"], t, ctx)
        table = moment_table(params, int(cfg["n"]), ctx=ctx, cache_dir=cfg["cache_dir"])
        v, d1, d2 = zip(*(_jet_strings(j) for j in table.w))
        docs.append(
            {
                "schema_version": 1,
                "kind": "moment_table",
                "alpha": mpfr_to_str(params.alpha),
                "beta": mpfr_to_str(params.beta),
                "mu": mpfr_to_str(params.mu),
                "t": mpfr_to_str(params.t),
                "bits": ctx.bits,
                "N": table.N,
                "v": list(v),
                "d1": list(d1),
                "d2": list(d2),
            }
        )
    fmt = cfg["format"]
    if fmt == "json":
        text = json.dumps(docs if len(docs) > 1 else docs[0], indent=1, sort_keys=True)
        text += "\n"
    elif fmt == "csv":
        lines = ["t,k,v,d1,d2"]
        for doc in docs:
            for k in range(doc["N"] + 1):
                lines.append(
                    f'{doc["t"]},{k},{doc["v"][k]},{doc["d1"][k]},{doc["d2"][k]}'
                )
        text = "\n".join(lines) + "\n"
    else:
        lines = []
        for doc in docs:
            lines.append(f't = {doc["t"]}  (bits={doc["bits"]})')
            for k in range(doc["N"] + 1):
                lines.append(f'  w_{k} = {doc["v"][k]}')
                lines.append(f'        d1 {doc["d1"][k]}  d2 {doc["d2"][k]}')
        text = "\n".join(lines) + "\n"
    _emit(text, cfg["output"])
    return 0


def cmd_recurrence(cfg):
    ctx = PrecisionContext(bits=int(cfg["bits"]))
    n_max = int(cfg["n_max"])
    docs = []
    for t in cfg["t_grid"]:
        params = WeightParams.create(cfg["alpha"], cfg["beta"], cfg["mu"], t, ctx)
        table = moment_table(params, 2 * n_max + 2, ctx=ctx, cache_dir=cfg["cache_dir"])
        rc = recurrence_from_moments(table, n_max, ctx=ctx)
        docs.append(
            {
                "schema_version": 1,
                "kind": "recurrence",
                "t": mpfr_to_str(params.t),
                "bits": ctx.bits,
                "N": n_max,
                "beta": [list(_jet_strings(b)) for b in rc.beta],
                "gamma": [list(_jet_strings(g)) for g in rc.gamma],
                "h": [list(_jet_strings(h)) for h in rc.h],
                "hankel": [list(_jet_strings(d)) for d in rc.hankel],
            }
        )
    fmt = cfg["format"]
    if fmt == "json":
        text = json.dumps(docs if len(docs) > 1 else docs[0], indent=1, sort_keys=True)
        text += "\n"
    elif fmt == "csv":
        lines = ["t,n,beta,dbeta,gamma,dgamma"]
        for doc in docs:
            for n in range(doc["N"] + 1):
                lines.append(
                    f'{doc["t"]},{n},{doc["beta"][n][0]},{doc["beta"][n][1]},'
                    f'{doc["gamma"][n][0]},{doc["gamma"][n][1]}'
                )
        text = "\n".join(lines) + "\n"
    else:
        lines = []
        for doc in docs:
            lines.append(f't = {doc["t"]}')
            for n in range(doc["N"] + 1):
                lines.append(
                    f'  beta_{n} = {doc["beta"][n][0]}   gamma_{n} = {doc["gamma"][n][0]}'
                )
        text = "\n".join(lines) + "\n"
    _emit(text, cfg["output"])
    return 0


def cmd_verify(cfg):
    report = run_verification(cfg)
    fmt = cfg["format"]
    doc = report.as_dict(timings=cfg.get("timings", True))
    if fmt == "json":
        text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    elif fmt == "csv":
        lines = ["id,n,t,residual,tolerance,status,elapsed"]
        for r in doc["records"]:
            n = "" if r["n"] is None else r["n"]
            lines.append(
                f'{r["id"]},{n},{r["t"]},{r["residual"]},{r["tolerance"]},'
                f'{r["status"]},{r["elapsed"]}'
            )
        text = "\n".join(lines) + "\n"
    else:
        lines = []
        for r in doc["records"]:
            n = "  " if r["n"] is None else f'{r["n"]:2d}'
            res = _short_decimal(r["residual"]) if r["residual"] else "-"
            lines.append(
                f'{r["status"]:7s} {r["id"]:24s} n={n} t={r["t"]:6s} residual={res}'
            )
        s = doc["summary"]
        lines.append(
            f'{s["status"]}: {s["pass"]} pass, {s["fail"]} fail, {s["skipped"]} skipped'
        )
        text = "\n".join(lines) + "\n"
    _emit(text, cfg["output"])
    return 0 if report.status == "PASS" else 1


def cmd_pvi(cfg):
    from .mobius import build_tilde_system, closed_form_ladder
    from .painleve import (
        hamilton_residual,
        lock_branch,
        pvi_residual,
        pvi_state,
    )
    from .errors import DegenerateTranscendentError

    ctx = PrecisionContext(bits=int(cfg["bits"]))
    n_max = int(cfg["n_max"])
    rows = []
    for t in cfg["t_grid"]:
        params = WeightParams.create(cfg["alpha"], cfg["beta"], cfg["mu"], t, ctx)
        with ctx:
            ts = build_tilde_system(params, n_max, ctx=ctx, cache_dir=cfg["cache_dir"])
            branch = None
            for n in range(1, n_max + 1):
                cfl = closed_form_ladder(ts, n, ctx=ctx)
                try:
                    if branch is None:
                        branch, _ = lock_branch(ts, cfl, ctx=ctx)
                    st = pvi_state(ts, cfl, ctx=ctx, branch=branch)
                    pr = pvi_residual(st, ctx=ctx)
                    hr = hamilton_residual(st, ctx=ctx)
                    rows.append(
                        [
                            str(n),
                            mpfr_to_str(params.t),
                            mpfr_to_str(st.q.v),
                            mpfr_to_str(st.q.d1),
                            mpfr_to_str(st.q.d2),
                            mpfr_to_str(st.p.v),
                            mpfr_to_str(st.delta[0]),
                            mpfr_to_str(st.delta[1]),
                            mpfr_to_str(st.delta[2]),
                            mpfr_to_str(st.delta[3]),
                            mpfr_to_str(pr),
                            mpfr_to_str(hr),
                        ]
                    )
                except DegenerateTranscendentError:
                    rows.append(
                        [str(n), mpfr_to_str(params.t)] + [""] * 8 + ["skipped", "skipped"]
                    )
    fmt = cfg["format"]
    if fmt == "json":
        keys = PVI_TABLE_HEADER.split(",")
        doc = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "kind": "pvi_table",
            "rows": [dict(zip(keys, row)) for row in rows],
        }
        text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    else:
        lines = [PVI_TABLE_VERSION_LINE, PVI_TABLE_HEADER]
        lines.extend(",".join(row) for row in rows)
        text = "\n".join(lines) + "\n"
    _emit(text, cfg["output"])
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "moments":
            return cmd_moments(cfg)
        if args.command == "recurrence":
            return cmd_recurrence(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "pvi":
            return cmd_pvi(cfg)
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, OSError, LaguerreHahnError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, LaguerreHahnError):
            print("hint: increasing --bits often resolves precision-related failures",
                  file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
