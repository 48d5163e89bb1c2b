"""Command-line front end.

Subcommands:
    gen-constellation   write a synthetic vector set + chain description
    gen-chain           write a chain description only
    vectors validate    schema- and CRC-check a vector CSV
    forge tsf           forge a vector set towards a target position
    run                 execute scenario files, write JSON reports
    report diff         compare two reports

Exit codes for `run`: 0 clean, 2 when verification-failure verdicts are
present, 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .attacks import TsfConfig, tsf_forge_subframes
from .gst import Gst
from .positioning import geodetic_to_ecef
from .scenario import (
    DEFAULT_GST0,
    Scenario,
    diff_reports,
    generate_synthetic_constellation,
    report_to_json,
    run_scenario,
)
from .tesla import TeslaChain
from .vectors import CrcError, SchemaError, TestVectorSet


def _cmd_gen_constellation(args) -> int:
    bundle = generate_synthetic_constellation(
        args.seed, args.sats, args.subframes, Gst(args.wn, args.tow))
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    bundle.vectors.save(outdir / "vectors.csv")
    (outdir / "chain.json").write_text(
        json.dumps(bundle.chain_json(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {outdir / 'vectors.csv'} ({len(bundle.vectors.rows)} rows) "
          f"and {outdir / 'chain.json'}")
    return 0


def _cmd_gen_chain(args) -> int:
    import random

    rng = random.Random(args.seed)
    gst0 = Gst(args.wn, args.tow)
    chain = TeslaChain.generate(rng.randbytes(16), args.n, gst0)
    doc = {
        "gst0": gst0.as_dict(),
        "delta_t": chain.delta_t,
        "n": chain.n,
        "seed_hex": chain.seed.bits.hex(),
        "root_hex": chain.root.bits.hex(),
    }
    Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out} (chain of {chain.n} keys)")
    return 0


def _cmd_vectors_validate(args) -> int:
    try:
        vectors = TestVectorSet.load(args.path, mapping_path=args.mapping)
    except (SchemaError, CrcError, OSError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    groups = {(wn, tow, prn) for wn, tow, prn, _, _ in vectors.rows}
    print(f"ok: {len(vectors.rows)} pages, {len(groups)} subframes")
    return 0


def _cmd_forge_tsf(args) -> int:
    try:
        vectors = TestVectorSet.load(args.vectors)
    except (SchemaError, CrcError, OSError) as exc:
        print(f"cannot load vectors: {exc}", file=sys.stderr)
        return 1
    target = geodetic_to_ecef(args.lat, args.lon, args.height)
    cfg = TsfConfig(target_ecef_m=target, seg_count=args.segments,
                    forge_tags=not args.no_tags, iono_a0=args.iono_a0)
    forged = {prn: tsf_forge_subframes(sfs, cfg)
              for prn, sfs in vectors.subframes().items()}
    TestVectorSet.from_subframes(forged).save(args.out)
    print(f"wrote {args.out}")
    return 0


def _run_one(path: str, out_dir: str | None) -> tuple:
    scenario = Scenario.load(path)
    report = run_scenario(scenario)
    text = report_to_json(report)
    if out_dir is not None:
        out = Path(out_dir) / (Path(path).stem + ".report.json")
        out.write_text(text)
    else:
        sys.stdout.write(text)
    return path, report["exit_code"]


def _cmd_run(args) -> int:
    worst = 0
    try:
        if args.jobs > 1 and len(args.scenario) > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(
                    lambda p: _run_one(p, args.out_dir), args.scenario))
        else:
            results = [_run_one(p, args.out_dir) for p in args.scenario]
    except Exception as exc:    # noqa: BLE001 - surfaced as exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path, code in results:
        print(f"{path}: exit {code}", file=sys.stderr)
        worst = max(worst, code)
    return worst


def _cmd_report_diff(args) -> int:
    with open(args.a) as fh:
        a = json.load(fh)
    with open(args.b) as fh:
        b = json.load(fh)
    diffs = diff_reports(a, b)
    for path in diffs:
        print(path)
    return 1 if diffs else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="osnmasim",
        description="Message-level OSNMA authentication and attack simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-constellation",
                       help="generate a synthetic test-vector set")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--sats", type=int, default=8)
    p.add_argument("--subframes", type=int, default=14)
    p.add_argument("--wn", type=int, default=DEFAULT_GST0.wn)
    p.add_argument("--tow", type=int, default=DEFAULT_GST0.tow)
    p.add_argument("--out-dir", default="constellation")
    p.set_defaults(func=_cmd_gen_constellation)

    p = sub.add_parser("gen-chain", help="generate a key chain description")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--wn", type=int, default=DEFAULT_GST0.wn)
    p.add_argument("--tow", type=int, default=DEFAULT_GST0.tow)
    p.add_argument("--out", default="chain.json")
    p.set_defaults(func=_cmd_gen_chain)

    p = sub.add_parser("vectors", help="test-vector file operations")
    vsub = p.add_subparsers(dest="vectors_command", required=True)
    v = vsub.add_parser("validate", help="schema- and CRC-check a CSV")
    v.add_argument("path")
    v.add_argument("--mapping", default=None,
                   help="JSON column-mapping file for foreign formats")
    v.set_defaults(func=_cmd_vectors_validate)

    p = sub.add_parser("forge", help="attack-side forging tools")
    fsub = p.add_subparsers(dest="forge_command", required=True)
    f = fsub.add_parser("tsf", help="forge vectors towards a target position")
    f.add_argument("--vectors", required=True)
    f.add_argument("--lat", type=float, default=4.0)
    f.add_argument("--lon", type=float, default=50.0)
    f.add_argument("--height", type=float, default=100.0)
    f.add_argument("--segments", type=int, default=6)
    f.add_argument("--iono-a0", type=int, default=0)
    f.add_argument("--no-tags", action="store_true",
                   help="forge navigation data only, keep original tags")
    f.add_argument("--out", default="forged.csv")
    f.set_defaults(func=_cmd_forge_tsf)

    p = sub.add_parser("run", help="run scenario files")
    p.add_argument("scenario", nargs="+")
    p.add_argument("--out-dir", default=None,
                   help="write <name>.report.json files instead of stdout")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="report operations")
    rsub = p.add_subparsers(dest="report_command", required=True)
    r = rsub.add_parser("diff", help="compare two JSON reports")
    r.add_argument("a")
    r.add_argument("b")
    r.set_defaults(func=_cmd_report_diff)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
