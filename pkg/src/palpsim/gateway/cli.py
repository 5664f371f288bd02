"""Command line entry points: replay, decimate, serve, assess."""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from ..errors import PalpsimError
from ..geometry import decimate, load_mesh_file, sampled_hausdorff, save_obj_file
from ..haptics import HapticConfig
from ..session import read_tape
from ..session.report import round_floats
from ..tissue import ScenarioKind
from ..validity import assess_corpus
from .replay import run_replay


def bundled_asset_path(*parts: str) -> Path:
    return Path(resources.files("palpsim").joinpath("assets", *parts))


def default_mesh_path() -> Path:
    return bundled_asset_path("liver.obj")


def _add_replay(sub):
    p = sub.add_parser("replay", help="run a probe tape headless and write the report")
    p.add_argument("--tape", required=True, help="JSON-lines probe tape, or 'gentle'/'overpress'")
    p.add_argument("--scenario", required=True,
                   choices=[k.value for k in ScenarioKind])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--report", required=True, help="output report path")
    p.add_argument("--mesh", default=None, help="OBJ/X3D liver mesh (bundled by default)")
    p.add_argument("--answer", type=int, default=None,
                   help="questionnaire choice index (unanswered scores 0)")
    p.add_argument("--answer-elapsed", type=float, default=0.0)
    p.add_argument("--student", default=None)
    p.add_argument("--trace-out", default=None,
                   help="also write the full 1 kHz force trace as JSON")
    p.set_defaults(func=cmd_replay)


def resolve_tape_path(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    bundled = bundled_asset_path("tapes", f"{name}.jsonl")
    if bundled.exists():
        return bundled
    raise PalpsimError(f"tape '{name}' not found (no such file and no bundled tape)")


def cmd_replay(args) -> int:
    mesh_path = Path(args.mesh) if args.mesh else default_mesh_path()
    if not mesh_path.exists():
        raise PalpsimError(f"mesh file not found: {mesh_path}")
    mesh = load_mesh_file(mesh_path, mesh_id=mesh_path.stem)
    tape = read_tape(resolve_tape_path(args.tape))
    result = run_replay(
        mesh, tape, ScenarioKind(args.scenario), args.seed,
        haptics=HapticConfig(),
        answer=args.answer,
        answer_elapsed_s=args.answer_elapsed,
        report_path=args.report,
        student=args.student,
    )
    if args.trace_out:
        # full precision: parity checks against served sessions compare exactly
        trace = result.trace
        doc = {
            "t": trace.times.tolist(),
            "force_n": trace.magnitudes.tolist(),
        }
        Path(args.trace_out).write_text(json.dumps(doc) + "\n")
    record = result.report["scenarios"][0]
    print(f"replay complete: scenario={record['kind']} failed={record['failed']} "
          f"peaks={len(record['peaks'])} warnings={record['warning_count']} "
          f"score={record['score']}")
    print(f"report written to {args.report}")
    return 0


def _add_decimate(sub):
    p = sub.add_parser("decimate", help="reduce a mesh's triangle count")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hausdorff-samples", type=int, default=2000)
    p.set_defaults(func=cmd_decimate)


def cmd_decimate(args) -> int:
    if args.target < 4:
        raise PalpsimError(f"target must be at least 4, got {args.target}")
    mesh = load_mesh_file(args.input)
    result = decimate(mesh, args.target)
    save_obj_file(result.mesh, args.out)
    err = sampled_hausdorff(mesh, result.mesh, samples=args.hausdorff_samples)
    print(f"decimated {result.triangles_before} -> {result.triangles_after} triangles"
          f"{'' if result.reached_target else ' (target unreachable without degeneracy)'}")
    print(f"sampled Hausdorff distance: {err:.4f} mm")
    return 0


def _add_serve(sub):
    p = sub.add_parser("serve", help="run the live trainer session gateway")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--mesh", default=None)
    p.add_argument("--ct", default=None, help="CT stack manifest JSON ('bundled' for the demo stack)")
    p.add_argument("--out", default=".", help="report output directory")
    p.add_argument("--rate", type=int, default=25,
                   help="frame stream rate in Hz; must divide 1000")
    p.add_argument("--max-speed", action="store_true",
                   help="advance virtual time as fast as input arrives")
    p.add_argument("--scenario-config", default=None,
                   help="JSON session config overrides")
    p.set_defaults(func=cmd_serve)


def cmd_serve(args) -> int:
    from .server import GatewayServer, RuntimeConfig

    mesh_path = Path(args.mesh) if args.mesh else default_mesh_path()
    ct = args.ct
    if ct == "bundled":
        ct = str(bundled_asset_path("ct", "manifest.json"))
    overrides = {}
    if args.scenario_config:
        overrides = json.loads(Path(args.scenario_config).read_text())
    config = RuntimeConfig(
        host=args.host,
        port=args.port,
        mesh_path=str(mesh_path),
        ct_manifest_path=ct,
        report_dir=args.out,
        frame_rate_hz=args.rate,
        real_time=not args.max_speed,
        session_overrides=overrides,
    )
    server = GatewayServer(config)
    print(f"listening on ws://{config.host}:{config.port} "
          f"(mesh={Path(config.mesh_path).name}, rate={config.frame_rate_hz} Hz, "
          f"{'real-time' if config.real_time else 'max-speed'})")
    server.serve_forever()
    return 0


def _add_assess(sub):
    p = sub.add_parser("assess", help="aggregate validity sheets and session reports")
    p.add_argument("--reports-dir", default=None)
    p.add_argument("--sheets-dir", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assess)


def cmd_assess(args) -> int:
    summary = assess_corpus(sheets_dir=args.sheets_dir, reports_dir=args.reports_dir)
    text = json.dumps(round_floats(summary), sort_keys=True, indent=2) + "\n"
    Path(args.out).write_text(text)
    print(text, end="")
    print(f"summary written to {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="palpsim",
        description="Deterministic visuo-haptic liver palpation trainer",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_replay(sub)
    _add_decimate(sub)
    _add_serve(sub)
    _add_assess(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PalpsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
