"""The dichotomy between tangential and wall-normal gradient noise.

With gradient noise sigma^{ik} D_i u dw^k, everything hinges on the
normal component sigma^{1k} at the wall.  If it vanishes (tangential
noise), wall regularity of the solution matches the deterministic
theory; if it does not, the normal derivative near the wall develops a
boundary layer whose profile blows up as the distance delta shrinks.

This run uses configs/compatibility.json with a trimmed ensemble so it
finishes in a few seconds.  For the full-resolution study use

    lab compatibility --config configs/compatibility.json
"""

import json
import pathlib

from spdelab.experiments import ExperimentConfig, run_study

HERE = pathlib.Path(__file__).resolve().parent


def main():
    raw = json.loads((HERE.parent / "configs" / "compatibility.json").read_text())
    # keep the grid (the delta ladder needs x1_cells divisible by 128 and
    # the tangential profile needs the full window to level off); shrink
    # only the ensemble
    raw["ensemble"]["paths"] = 8
    config = ExperimentConfig.from_dict(raw)

    report = run_study(config)
    print(f"study finished in {report.wall_clock:.1f}s, seed {report.seed}")

    profiles = {}
    for row in report.rows:
        if row["record"] == "profile":
            profiles.setdefault(row["index"], []).append((row["param"], row["value"]))

    print(f"{'delta':>10s} {'tangential':>14s} {'normal-noise':>14s}")
    tang = dict(profiles["tangential"])
    viol = dict(profiles["violating"])
    for delta in sorted(tang, reverse=True):
        print(f"{delta:10.4f} {tang[delta]:14.6f} {viol[delta]:14.6f}")

    for v in report.verdicts:
        print(f"verdict {v.name}: {'pass' if v.passed else 'FAIL'}  {v.detail}")


if __name__ == "__main__":
    main()
