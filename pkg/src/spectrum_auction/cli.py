"""Command-line front end: ``gen``, ``solve``, ``exact``, ``verify`` and ``bench``.

Exit codes: 0 success, 1 other errors (including non-convergence),
2 verification failure, 3 size-cap errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Sequence

from .graph import InstanceTooLarge, NeighborhoodTooLarge, verify_allocation
from .instance import GEN_MODELS, InstanceError, InstanceFile, Model, build_model, fmt_number, generate, load_instance, parse_number
from .lp import NonConvergence
from .rounding import solve_end_to_end
from .valuations import BRUTE_FORCE_CAP, brute_force_opt
from .wireless import LinkScene, enforce_sinr, sinr_check

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_TOO_LARGE = 0, 1, 2, 3

BENCH_HEADER = ["instance", "n", "k", "rho", "lp_value", "opt_value", "achieved", "ratio_lp", "ratio_opt", "runtime_s"]

log = logging.getLogger("spectrum_auction")


def _json_out(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _assignment_json(assignment) -> list[list[int]]:
    return [sorted(b) for b in assignment]


def sinr_postprocess(model: Model, k: int):
    """Repair hook for fixed-power scenes: enforce the raw SINR constraint per channel."""
    scene = model.scene
    if not isinstance(scene, LinkScene) or scene.powers is None or not model.graph.weighted_kind:
        return None
    return lambda assignment: enforce_sinr(scene, assignment, k)


def verify_report(inst: InstanceFile, model: Model, assignment) -> dict:
    assignment = [frozenset(int(j) for j in b) for b in assignment]
    if len(assignment) != inst.n:
        return {"ok": False, "reason": f"allocation lists {len(assignment)} bidders, instance has {inst.n}"}
    try:
        verdict = verify_allocation(model.graph, assignment, inst.k)
    except ValueError as exc:
        return {"ok": False, "reason": str(exc)}
    out: dict = {"graph_ok": bool(verdict)}
    if not verdict:
        out["violation"] = {"channel": verdict.channel, "bidder": verdict.vertex}
    scene = model.scene
    if isinstance(scene, LinkScene) and scene.powers is not None:
        bad = [j for j in range(inst.k) if not sinr_check(scene, [v for v, b in enumerate(assignment) if j in b])]
        out["sinr_ok"] = not bad
        if bad:
            out["sinr_violations"] = bad
    out["ok"] = out["graph_ok"] and out.get("sinr_ok", True)
    out["value"] = fmt_number(inst.auction().welfare(assignment))
    return out


def solve_instance(inst: InstanceFile, *, mode: str, trials: int, seed: int, rho_override=None) -> dict:
    model = build_model(inst, rho_override)
    auction = inst.auction()
    post = sinr_postprocess(model, inst.k)
    alloc, rep = solve_end_to_end(auction, model.graph, model.ordering, trials=trials, seed=seed, mode=mode, postprocess=post)
    return {
        "status": "ok",
        "lp_value": rep.lp_value,
        "allocation": _assignment_json(alloc.assignment),
        "value": fmt_number(alloc.value),
        "ratio_vs_lp": rep.ratio,
        "rho_used": rep.rho_used,
        "rho_provenance": rep.rho_provenance,
        "rho_witnessed": model.ordering.witnessed,
        "guarantee_denominator": rep.guarantee,
        "mean_trial_value": rep.mean_value,
        "trials": trials,
        "seed": seed,
        "mode": mode,
        "lp_rounds": rep.lp_rounds,
        "stats": rep.stats,
        "timings": rep.timings,
    }


def exact_instance(inst: InstanceFile, cap: int = BRUTE_FORCE_CAP) -> dict:
    model = build_model(inst)
    assignment, value = brute_force_opt(inst.auction(), model.graph, cap)
    return {"status": "ok", "opt_value": fmt_number(value), "allocation": _assignment_json(assignment)}


def _bench_row(entry: dict, defaults: dict) -> list:
    if "file" in entry:
        inst = load_instance(entry["file"])
    else:
        inst = generate(
            entry["model"], int(entry["n"]), int(entry["k"]), int(entry.get("seed", 0)),
            entry.get("valuation", "mixed"), **entry.get("params", {}),
        )
    name = entry.get("name") or entry.get("file") or f"{entry['model']}-n{entry['n']}-k{entry['k']}-s{entry.get('seed', 0)}"
    t0 = time.perf_counter()
    rep = solve_instance(
        inst,
        mode=entry.get("mode", defaults.get("mode", "explicit")),
        trials=int(entry.get("trials", defaults.get("trials", 50))),
        seed=int(entry.get("seed", defaults.get("seed", 0))),
    )
    opt = ""
    if entry.get("exact", defaults.get("exact", False)):
        try:
            opt_value = Fraction(exact_instance(inst, int(defaults.get("max_bruteforce", BRUTE_FORCE_CAP)))["opt_value"])
            opt = float(opt_value)
        except InstanceTooLarge:
            opt = ""
    runtime = time.perf_counter() - t0
    achieved = float(Fraction(rep["value"]))
    lp_value = rep["lp_value"]
    ratio_lp = achieved / lp_value if lp_value > 1e-12 else ""
    ratio_opt = achieved / opt if opt not in ("", 0.0) else ""
    return [name, inst.n, inst.k, rep["rho_used"], lp_value, opt, achieved, ratio_lp, ratio_opt, round(runtime, 4)]


def run_bench(suite: dict, jobs: int = 1) -> str:
    """CSV text with one row per suite entry."""
    entries = suite.get("instances", [])
    defaults = {k: v for k, v in suite.items() if k != "instances"}
    if jobs > 1 and len(entries) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_bench_row, entries, [defaults] * len(entries)))
    else:
        rows = [_bench_row(e, defaults) for e in entries]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_HEADER)
    writer.writerows(rows)
    return buf.getvalue()


def _parse_params(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        key, _, val = item.partition("=")
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spectrum-auction", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="emit a random instance")
    g.add_argument("model", choices=GEN_MODELS)
    g.add_argument("--n", type=int, default=10)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--valuation", default="mixed")
    g.add_argument("--param", action="append", metavar="KEY=VALUE", help="model parameter (repeatable)")
    g.add_argument("-o", "--out")

    s = sub.add_parser("solve", help="LP + randomized rounding")
    s.add_argument("file")
    s.add_argument("--mode", choices=("explicit", "oracle"), default="explicit")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rho-override")
    s.add_argument("-o", "--out")

    e = sub.add_parser("exact", help="exhaustive optimum")
    e.add_argument("file")
    e.add_argument("--max-bruteforce", type=int, default=BRUTE_FORCE_CAP)
    e.add_argument("-o", "--out")

    v = sub.add_parser("verify", help="check an allocation (list per bidder, or a solve report)")
    v.add_argument("file")
    v.add_argument("allocation")

    b = sub.add_parser("bench", help="run a benchmark suite, CSV output")
    b.add_argument("suite")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--seed", type=int)
    b.add_argument("--trials", type=int)
    b.add_argument("--mode", choices=("explicit", "oracle"))
    b.add_argument("--max-bruteforce", type=int)
    b.add_argument("-o", "--out")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen":
            inst = generate(args.model, args.n, args.k, args.seed, args.valuation, **_parse_params(args.param))
            text = inst.dumps()
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        if args.command == "solve":
            inst = load_instance(args.file)
            rho = None if args.rho_override is None else parse_number(args.rho_override)
            try:
                report = solve_instance(inst, mode=args.mode, trials=args.trials, seed=args.seed, rho_override=rho)
            except NonConvergence as exc:
                _json_out({"status": "non-convergent", "error": str(exc)}, args.out)
                return EXIT_ERROR
            _json_out(report, args.out)
            return EXIT_OK
        if args.command == "exact":
            _json_out(exact_instance(load_instance(args.file), args.max_bruteforce), args.out)
            return EXIT_OK
        if args.command == "verify":
            inst = load_instance(args.file)
            with open(args.allocation, encoding="utf-8") as fh:
                doc = json.load(fh)
            assignment = doc["allocation"] if isinstance(doc, dict) else doc
            result = verify_report(inst, build_model(inst), assignment)
            _json_out(result, None)
            return EXIT_OK if result["ok"] else EXIT_INVALID
        if args.command == "bench":
            with open(args.suite, encoding="utf-8") as fh:
                suite = json.load(fh)
            for key in ("seed", "trials", "mode", "max_bruteforce"):
                if getattr(args, key) is not None:
                    suite[key] = getattr(args, key)
            text = run_bench(suite, args.jobs)
            if args.out:
                with open(args.out, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
    except (InstanceTooLarge, NeighborhoodTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (InstanceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
