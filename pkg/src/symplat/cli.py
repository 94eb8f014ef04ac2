"""Command line entry point.

Subcommands:
    orbits {classify|reduce|same-orbit}
    arith  {table|check-lfun|index|order}
    geom   {gs|condition|fubini-check}
    mc     {sample|mean|second-moment|discrepancy}

Global flags: --seed, --out, --config, --threads.  A config file is a flat
line-oriented "key = value" format with [section] headers named after the
subcommand ("[mc.mean]"; "[global]" applies everywhere).  Precedence is
flag > file > default; unknown config keys are rejected.  Experiments write
a CSV (stdout, or --out) plus a .manifest sidecar echoing the resolved
configuration when --out is given.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from symplat.records import ExperimentRecord, emit_csv, fmt_value

# (name, type, default, help); bools use None/true/false tri-state for merging
_GLOBAL_OPTS = [
    ("seed", int, 0, "RNG seed"),
    ("out", str, "", "output CSV path (stdout if empty)"),
    ("config", str, "", "config file"),
    ("threads", int, 1, "worker threads inside experiments"),
]

_SPECS = {
    "orbits.classify": [("pairs", str, "-", "file of 'u / v' lines, or - for stdin")],
    "orbits.reduce": [("pairs", str, "-", "file of 'u / v' lines, or - for stdin")],
    "orbits.same-orbit": [("pairs", str, "-", "file with two 'u / v' lines, or - for stdin")],
    "arith.table": [("n", int, 1, ""), ("max", int, 100, "")],
    "arith.check-lfun": [("n", int, 1, ""), ("sigma", float, 3.0, ""), ("max", int, 100000, "")],
    "arith.index": [
        ("n", int, 2, ""),
        ("s", int, 6, ""),
        ("d", int, 1, ""),
        ("brute", bool, False, "also run the enumeration oracle"),
    ],
    "arith.order": [
        ("n", int, 1, ""),
        ("q", int, 2, ""),
        ("brute", bool, False, "also run the enumeration oracle"),
    ],
    "geom.gs": [
        ("n", int, 1, ""),
        ("s", float, 1.0, ""),
        ("region", str, "ball", "ball|ellipsoid|box"),
        ("radius", float, 0.0, "region radius (0 = derive from volume)"),
        ("volume", float, 100.0, ""),
        ("aspect", float, 2.0, "ellipsoid axis aspect"),
        ("samples", int, 200000, ""),
        ("tilde", bool, False, "cone-averaged variant (integer s)"),
    ],
    "geom.condition": [
        ("n", int, 1, ""),
        ("delta", float, 0.5, ""),
        ("region", str, "ball", ""),
        ("radius", float, 0.0, ""),
        ("volume", float, 100.0, ""),
        ("aspect", float, 2.0, ""),
        ("samples", int, 200000, ""),
    ],
    "geom.fubini-check": [
        ("n", int, 1, ""),
        ("region", str, "ball", ""),
        ("radius", float, 0.0, ""),
        ("volume", float, 100.0, ""),
        ("aspect", float, 2.0, ""),
        ("samples", int, 400000, ""),
    ],
    "mc.sample": [("n", int, 1, ""), ("samples", int, 10, "")],
    "mc.mean": [
        ("n", int, 1, ""),
        ("samples", int, 2000, ""),
        ("region", str, "ball", ""),
        ("volume", float, 1000.0, ""),
        ("aspect", float, 2.0, ""),
    ],
    "mc.second-moment": [
        ("n", int, 1, ""),
        ("samples", int, 4000, ""),
        ("region", str, "ball", ""),
        ("volume", float, 100.0, ""),
        ("aspect", float, 2.0, ""),
        ("smax", int, 0, "s-sum cap (0 = automatic 4 R^2)"),
        ("kl-convention", str, "signed_half_zeta", "dependent-pairs convention"),
        ("formula-samples", int, 2000000, ""),
    ],
    "mc.discrepancy": [
        ("n", int, 1, ""),
        ("lattices", int, 50, ""),
        ("family", str, "100,1000,10000,100000", "comma-separated ladder volumes"),
    ],
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="symplat", description=__doc__)
    subs = ap.add_subparsers(dest="group", required=True)
    groups = {}
    for key in _SPECS:
        group, sub = key.split(".")
        if group not in groups:
            gp = subs.add_parser(group)
            groups[group] = gp.add_subparsers(dest="sub", required=True)
        sp = groups[group].add_parser(sub)
        for name, typ, _default, help_ in _SPECS[key] + _GLOBAL_OPTS:
            if typ is bool:
                sp.add_argument(_flag(name), action="store_const", const=True, default=None, help=help_)
            else:
                sp.add_argument(_flag(name), type=typ, default=None, help=help_)
    return ap


def _load_config(path: str) -> dict:
    sections: dict[str, dict] = {}
    current = "global"
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
                sections.setdefault(current, {})
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            k, v = (t.strip() for t in line.split("=", 1))
            sections.setdefault(current, {})[k.replace("-", "_")] = v
    return sections


def _coerce(raw: str, typ):
    if typ is bool:
        low = raw.lower()
        if low in ("1", "true", "yes"):
            return True
        if low in ("0", "false", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return typ(raw)


def _resolve(args: argparse.Namespace) -> dict:
    """flag > config file > default, rejecting unknown config keys."""
    key = f"{args.group}.{args.sub}"
    spec = _SPECS[key] + _GLOBAL_OPTS
    known = {name.replace("-", "_"): typ for name, typ, _d, _h in spec}
    defaults = {name.replace("-", "_"): d for name, _t, d, _h in spec}
    resolved = dict(defaults)
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        sections = _load_config(cfg_path)
        merged: dict[str, str] = {}
        for sec in ("global", args.group, key):
            merged.update(sections.get(sec, {}))
        for k, v in merged.items():
            if k not in known:
                raise ValueError(f"unknown config key {k!r} for {key}")
            resolved[k] = _coerce(v, known[k])
    for k in known:
        val = getattr(args, k, None)
        if val is not None:
            resolved[k] = val
    return resolved


# ----------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------


def _region(opt: dict):
    from symplat.geometry import RegionSpec, region_from_volume

    n = opt["n"]
    kind = opt["region"]
    g = None
    if kind == "ellipsoid":
        t = opt.get("aspect", 2.0)
        diag = np.concatenate([np.full(n, t), np.full(n, 1.0 / t)])
        g = np.diag(diag)
        if n == 1:
            th = 0.6
            c, s = math.cos(th), math.sin(th)
            g = np.array([[c, -s], [s, c]]) @ g
    if opt.get("radius", 0.0):
        return RegionSpec(kind, n, radius=opt["radius"], g=g)
    return region_from_volume(kind, n, opt["volume"], g=g)


def _read_pairs(source: str):
    from symplat.orbits import PrimitivePair

    text = sys.stdin.read() if source == "-" else open(source, "r", encoding="utf-8").read()
    pairs = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if "/" not in line:
            raise ValueError(f"pair line needs 'u / v': {line!r}")
        left, right = line.split("/", 1)
        u = [int(t) for t in left.split()]
        v = [int(t) for t in right.split()]
        pairs.append(PrimitivePair(u, v))
    return pairs


def _output(record: ExperimentRecord, opt: dict) -> None:
    if opt.get("out"):
        emit_csv(record, opt["out"])
    else:
        sys.stdout.write(record.csv_text())


# ----------------------------------------------------------------------
# subcommand implementations
# ----------------------------------------------------------------------


def _run_orbits(sub: str, opt: dict) -> ExperimentRecord:
    from symplat.orbits import orbit_invariants, reduce_pair, same_orbit

    pairs = _read_pairs(opt["pairs"])
    rows = []
    if sub == "classify":
        cols = ["n", "s", "d", "a", "kind"]
        for p in pairs:
            c = orbit_invariants(p)
            rows.append((c.n, c.s, c.d, c.a, c.kind))
        agg = {"pairs": len(rows)}
    elif sub == "reduce":
        cols = ["n", "s", "d", "a", "kind", "steps", "witness"]
        for p in pairs:
            w = reduce_pair(p)
            c = orbit_invariants(p)
            flat = ";".join(str(int(x)) for x in np.asarray(w.gamma.entries).ravel())
            rows.append((c.n, c.s, c.d, c.a, c.kind, len(w.steps), flat))
        agg = {"pairs": len(rows)}
    else:  # same-orbit
        if len(pairs) != 2:
            raise ValueError("same-orbit needs exactly two pairs")
        eq, gamma = same_orbit(pairs[0], pairs[1])
        cols = ["n", "same_orbit", "witness"]
        flat = (
            ";".join(str(int(x)) for x in np.asarray(gamma.entries).ravel()) if eq else ""
        )
        rows.append((pairs[0].n, eq, flat))
        agg = {"same_orbit": eq}
    return ExperimentRecord(f"orbits.{sub}", {"pairs": opt["pairs"]}, cols, rows, agg, opt["seed"])


def _run_arith(sub: str, opt: dict) -> ExperimentRecord:
    from symplat import arith

    if sub == "table":
        table = arith.ArithmeticTable(opt["n"], opt["max"])
        cols = ["s", "phi", "X", "conv", "a_rational"]
        rows = [
            (s, phi, X, conv, f"{rat.numerator}/{rat.denominator}")
            for s, phi, X, conv, rat in table.rows()
        ]
        agg = {"n": opt["n"], "max": opt["max"]}
        params = {"n": opt["n"], "max": opt["max"]}
    elif sub == "check-lfun":
        rep = arith.lfun_check(opt["n"], opt["sigma"], opt["max"])
        cols = ["n", "sigma", "N", "partial_sum", "target", "relative_error", "tail_bound"]
        rows = [
            (rep.n, rep.sigma, rep.N, rep.partial_sum, rep.target, rep.relative_error, rep.tail_bound)
        ]
        agg = {"relative_error": rep.relative_error}
        params = {"n": opt["n"], "sigma": opt["sigma"], "max": opt["max"]}
    elif sub == "index":
        rep = arith.stabilizer_index(opt["n"], opt["s"], opt["d"], brute=opt["brute"])
        cols = ["n", "s", "d", "q", "formula", "oracle", "match"]
        rows = [
            (
                rep.n,
                rep.s,
                rep.d,
                rep.q,
                rep.formula_value,
                "" if rep.oracle_value is None else rep.oracle_value,
                "" if rep.match is None else rep.match,
            )
        ]
        agg = {"formula": rep.formula_value}
        params = {"n": opt["n"], "s": opt["s"], "d": opt["d"], "brute": opt["brute"]}
    else:  # order
        formula = arith.sp_order_mod_q(opt["n"], opt["q"])
        oracle = ""
        match = ""
        if opt["brute"]:
            from symplat._kernels import sp_order_scan

            oracle = sp_order_scan(opt["n"], opt["q"])
            match = oracle == formula
        cols = ["n", "q", "formula", "oracle", "match"]
        rows = [(opt["n"], opt["q"], formula, oracle, match)]
        agg = {"formula": formula}
        params = {"n": opt["n"], "q": opt["q"], "brute": opt["brute"]}
    return ExperimentRecord(f"arith.{sub}", params, cols, rows, agg, opt["seed"])


def _run_geom(sub: str, opt: dict) -> ExperimentRecord:
    from symplat import geometry

    B = _region(opt)
    params = {k: opt[k] for k in ("n", "region", "volume", "samples") if k in opt}
    if sub == "gs":
        if opt["tilde"]:
            est, err = geometry.G_tilde(int(opt["s"]), B, opt["samples"], opt["seed"])
        else:
            est, err = geometry.G_integral(opt["s"], B, opt["samples"], opt["seed"])
        cols = ["s", "estimate", "stderr", "samples", "seed"]
        rows = [(opt["s"], est, err, opt["samples"], opt["seed"])]
        agg = {"estimate": est, "stderr": err}
        params["s"] = opt["s"]
        params["tilde"] = bool(opt["tilde"])
    elif sub == "condition":
        est, err = geometry.condition_integral(B, opt["delta"], opt["samples"], opt["seed"])
        cols = ["delta", "estimate", "stderr", "volume", "samples", "seed"]
        rows = [(opt["delta"], est, err, B.volume(), opt["samples"], opt["seed"])]
        agg = {"estimate": est, "stderr": err}
        params["delta"] = opt["delta"]
    else:  # fubini-check
        est, err = geometry.fubini_integral(B, opt["samples"], opt["seed"])
        vol2 = B.volume() ** 2
        cols = ["integral", "stderr", "vol_squared", "ratio", "samples", "seed"]
        rows = [(est, err, vol2, est / vol2, opt["samples"], opt["seed"])]
        agg = {"integral": est, "ratio": est / vol2}
    return ExperimentRecord(f"geom.{sub}", params, cols, rows, agg, opt["seed"])


def _run_mc(sub: str, opt: dict) -> ExperimentRecord:
    from symplat import montecarlo as mc

    if sub == "sample":
        return mc.sample_experiment(opt["n"], opt["samples"], opt["seed"])
    if sub == "mean":
        return mc.mean_experiment(opt["n"], _region(opt), opt["samples"], opt["seed"], opt["threads"])
    if sub == "second-moment":
        return mc.second_moment_experiment(
            opt["n"],
            _region(opt),
            opt["samples"],
            opt["seed"],
            s_cap=opt["smax"] or None,
            convention=opt["kl_convention"],
            formula_samples=opt["formula_samples"],
            threads=opt["threads"],
        )
    volumes = [float(v) for v in opt["family"].split(",")]
    return mc.discrepancy_series(opt["n"], volumes, opt["lattices"], opt["seed"], opt["threads"])


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        opt = _resolve(args)
        group, sub = args.group, args.sub
        if group == "orbits":
            rec = _run_orbits(sub, opt)
        elif group == "arith":
            rec = _run_arith(sub, opt)
        elif group == "geom":
            rec = _run_geom(sub, opt)
        else:
            rec = _run_mc(sub, opt)
        _output(rec, opt)
        return 0
    except BrokenPipeError:
        return 1
    except Exception as exc:  # surface context, nonzero exit
        print(f"symplat: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
