"""Command-line frontend: build gadget circuits, check their
fault-tolerance, run the exact exREC counting to pseudothresholds, and
reproduce the resource table.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 solver
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import costs, exrec, ft, gadgets
from .circuits import Circuit
from .code import CodeSpec, Z_GAUGE
from .noise import NoiseModel, build_decoder_table

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_SOLVER = 0, 1, 2, 3

DEFAULTS = {
    "m": 3,
    "n": 3,
    "k": 2,
    "gate": "CCZ",
    "model": "uniform",
    "grid": "1e-5:3e-3:25",
    "workers": 1,
    "p_rates": None,
    "out": None,
}


def _load_config(args):
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config) as f:
            file_cfg = json.load(f)
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in DEFAULTS:
        v = getattr(args, key.replace("-", "_"), None)
        if v is not None:
            cfg[key] = v
    return cfg


def _parse_grid(spec: str):
    lo, hi, num = spec.split(":")
    lo, hi, num = float(lo), float(hi), int(num)
    if num < 2:
        return [lo]
    return [
        math.exp(math.log(lo) + (math.log(hi) - math.log(lo)) * i / (num - 1))
        for i in range(num)
    ]


def _write(path, text):
    if path:
        with open(path, "w") as f:
            f.write(text)
        print(f"wrote {path}")
    else:
        print(text)


GADGETS = ("ckz", "rr", "ccz3x3", "two-transversal", "steane-ec",
           "cat", "teleported-h", "transversal-h")


def cmd_build(args) -> int:
    cfg = _load_config(args)
    m, n, k = cfg["m"], cfg["n"], cfg["k"]
    name = args.gadget
    try:
        if name == "ckz":
            circ = gadgets.ckz_depth_reduced(m, n, k)
        elif name == "rr":
            circ = gadgets.ckz_round_robin(m, n, k)
        elif name == "ccz3x3":
            circ = gadgets.ccz_3x3()
        elif name == "two-transversal":
            circ = gadgets.two_transversal_ccz(m, n)
        elif name == "steane-ec":
            circ = gadgets.steane_ec(CodeSpec(m, n, Z_GAUGE), order=args.order)
        elif name == "cat":
            circ = gadgets.cat_prep(args.size)
        elif name == "teleported-h":
            circ = gadgets.teleported_h(CodeSpec(m, n, Z_GAUGE))
        elif name == "transversal-h":
            circ = gadgets.transversal_h(CodeSpec(m, n, Z_GAUGE))
        else:
            print(f"unknown gadget {name!r}", file=sys.stderr)
            return EXIT_USAGE
    except ValueError as e:
        print(f"cannot build {name}: {e}", file=sys.stderr)
        return EXIT_USAGE
    _write(cfg["out"], circ.to_json())
    print(
        f"{name}: {circ.gate_count()} components, depth {circ.depth}, "
        f"{len(circ.block_map)} blocks, "
        f"{circ.gate_count(kinds=('CZ', 'CCZ', 'CkZ'))} multi-controlled gates",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_check(args) -> int:
    with open(args.circuit) as f:
        circ = Circuit.from_json(f.read())
    meta = circ.meta
    m, n, k = meta.get("m", 3), meta.get("n", 3), meta.get("k", 2)
    codes = [CodeSpec(m, n, Z_GAUGE)] * len(circ.block_map)
    expected = meta.get("logical", f"C{k}Z")
    report = gadgets.verify_logical_action(circ, codes, expected)
    print(f"logical action ({expected}): {'PASS' if report.ok else 'FAIL'}")
    for fmsg in report.failures[:10]:
        print(f"  {fmsg}")
    crit = ft.check_two_row_criterion(circ, codes)
    special = meta.get("special_tec", False)
    if crit == "pass":
        print("two-row criterion: PASS")
    else:
        word = "VIOLATED (expected, special TEC registered)" if special else "VIOLATED"
        print(f"two-row criterion: {word} on {len(crit)} gates")
        for v in crit[:5]:
            print(f"  gate {v.gate}: rows {v.rows_touched}")
    pieces = ft.piece_count(m, n, k, "plain")
    print(f"piece count (plain): {pieces}; "
          f"(2-transversal): {ft.piece_count(m, n, k, '2-transversal')}")
    rm = ft.range_metrics(circ, codes)
    print(f"range metrics: R_x={rm.r_x} R_y={rm.r_y} depth={rm.depth} "
          f"bound_saturated={rm.bound_saturated}")
    ok = report.ok and (crit == "pass" or special)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_threshold(args) -> int:
    cfg = _load_config(args)
    gate = cfg["gate"].upper().replace("CCZ", "CCZ")
    if gate not in exrec.GATE_LABELS:
        print(f"gate must be one of {exrec.GATE_LABELS}", file=sys.stderr)
        return EXIT_USAGE
    family = cfg["model"]
    ex = exrec.assemble(gate)
    workers = int(cfg["workers"])
    print(f"counting <=2-fault configurations for the {gate} exREC "
          f"({workers} worker{'s' if workers != 1 else ''}) ...", file=sys.stderr)
    sweep = exrec.get_sweep(ex, workers=workers)
    grid = _parse_grid(cfg["grid"]) if isinstance(cfg["grid"], str) else cfg["grid"]
    rows = exrec.curve_export(ex, family, grid, workers=workers)
    try:
        lower, upper = exrec.pseudothreshold(ex, family, workers=workers)
    except exrec.ThresholdError as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    csv = ["p,p2_fail,one_minus_p2_succ"]
    csv += [f"{p:.6e},{a:.6e},{b:.6e}" for (p, a, b) in rows]
    base = cfg["out"] or f"threshold_{gate.lower()}_{family}"
    with open(base + ".csv", "w") as f:
        f.write("\n".join(csv) + "\n")
    summary = {
        "gate": gate,
        "model": family,
        "p_grid": [p for p, _, _ in rows],
        "p2_fail": [a for _, a, _ in rows],
        "p2_succ": [1.0 - b for _, _, b in rows],
        "threshold_lower": lower,
        "threshold_upper": upper,
        "branch_probability_deviation": sweep.branch_dev,
        "configurations": sweep.n_runs,
    }
    with open(base + ".json", "w") as f:
        json.dump(summary, f, indent=1)
    print(f"wrote {base}.csv and {base}.json")
    print(f"{gate} ({family}): pseudothreshold lower {lower:.3e}, "
          f"upper {upper:.3e} (CNOT-rate units)")
    return EXIT_OK


def cmd_cost(args) -> int:
    cfg = _load_config(args)
    if args.protocol == "all":
        text = costs.table1_csv()
    else:
        try:
            rep = costs.protocol_report(args.protocol)
        except ValueError as e:
            print(e, file=sys.stderr)
            return EXIT_USAGE
        text = ("protocol,circuit_volume,spacetime_volume_usqubit,time_us,qubits\n"
                + rep.csv_row())
    _write(cfg["out"], text)
    return EXIT_OK


def cmd_export_decoder(args) -> int:
    cfg = _load_config(args)
    code = CodeSpec(cfg["m"], cfg["n"], Z_GAUGE)
    tbl = build_decoder_table(code, args.round_type)
    _write(cfg["out"], tbl.export_json())
    return EXIT_OK


def _add_common(p):
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--show-config", action="store_true")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="baconshor",
        description="Fault-tolerant gates on 2D Bacon-Shor codes: gadget "
                    "builders, static checks, exact exREC counting, and "
                    "resource estimates.",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("build", help="build a gadget circuit (JSON)")
    p.add_argument("gadget", choices=GADGETS)
    p.add_argument("--order", type=int, default=1, help="EC order (1 or 2)")
    p.add_argument("--size", type=int, default=3, help="CAT size")
    _add_common(p)

    p = sub.add_parser("check", help="verify a circuit file")
    p.add_argument("circuit")
    _add_common(p)

    p = sub.add_parser("threshold", help="exact counting and pseudothreshold")
    p.add_argument("--gate", default=None, help="I, H, CNOT or CCZ")
    p.add_argument("--model", choices=("uniform", "scaled"), default=None)
    p.add_argument("--grid", default=None, help="lo:hi:points (geometric)")
    p.add_argument("--p-rates", dest="p_rates", default=None,
                   help="explicit rate JSON {p_ccz,...} to evaluate once")
    p.add_argument("--workers", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("cost", help="resource-table rows")
    p.add_argument("protocol", choices=("magic7", "magic9", "bs3x3", "all"))
    _add_common(p)

    p = sub.add_parser("export-decoder", help="decoder table as JSON")
    p.add_argument("--round-type", choices=("from_z", "from_x"),
                   default="from_z")
    _add_common(p)

    args = ap.parse_args(argv)
    if getattr(args, "show_config", False):
        cfg = _load_config(args)
        print(json.dumps(cfg, indent=1, sort_keys=True))
        return EXIT_OK
    try:
        if args.cmd == "build":
            return cmd_build(args)
        if args.cmd == "check":
            return cmd_check(args)
        if args.cmd == "threshold":
            if getattr(args, "p_rates", None):
                cfg = _load_config(args)
                model = NoiseModel.from_json(args.p_rates)
                ex = exrec.assemble(cfg["gate"].upper())
                res = exrec.count(ex, model, workers=int(cfg["workers"]))
                print(json.dumps({
                    "gate": cfg["gate"].upper(),
                    "p2_fail": res.p2_fail,
                    "p2_succ": res.p2_succ,
                }, indent=1))
                return EXIT_OK
            return cmd_threshold(args)
        if args.cmd == "cost":
            return cmd_cost(args)
        if args.cmd == "export-decoder":
            return cmd_export_decoder(args)
    except FileNotFoundError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
