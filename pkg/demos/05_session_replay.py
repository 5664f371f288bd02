"""Replay the bundled probe tapes through full training sessions.

The gentle tape palpates within the safe band and produces a clean report
with force peaks; the overpress tape crosses the damage threshold, so its
scenario is failed on the spot, the questionnaire is skipped, and the
score is zero. Identical inputs always reproduce identical report bytes.
"""

from palpsim import ScenarioKind, load_mesh_file
from palpsim.gateway.cli import bundled_asset_path
from palpsim.gateway.replay import run_replay
from palpsim.session import read_tape

mesh = load_mesh_file(bundled_asset_path("liver.obj"), mesh_id="liver")

for name, answer in (("gentle", 0), ("overpress", None)):
    tape = read_tape(bundled_asset_path("tapes", f"{name}.jsonl"))
    result = run_replay(mesh, tape, ScenarioKind.HEALTHY, seed=42,
                        answer=answer, answer_elapsed_s=12.0)
    record = result.report["scenarios"][0]
    print(f"{name} tape ({len(tape)} records):")
    print(f"  failed: {record['failed']}, warnings: {record['warning_count']}, "
          f"peaks: {len(record['peaks'])}, score: {record['score']}")
    for peak in record["peaks"]:
        print(f"    peak {peak['force_n']:.2f} N at t = {peak['t']:.3f} s")
    print(f"  elapsed: {record['elapsed_s']:.2f} s simulated")
    rerun = run_replay(mesh, tape, ScenarioKind.HEALTHY, seed=42,
                       answer=answer, answer_elapsed_s=12.0)
    print(f"  replay determinism: {result.report_text == rerun.report_text}\n")
