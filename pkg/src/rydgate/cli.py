"""Command-line interface: simulate | optimize | budget | scan-b0 | hyperfine.

Every run emits a manifest (config hash, seed, version, outputs) and writes
CSV/JSON data files deterministically: equal config hash and seed give
byte-identical data files.
"""

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, basis, config as config_mod
from .constants import TWO_PI
from .dynamics import NumericalError, Propagation
from .fidelity import BLOCKADE_PROXY_B0
from .gate import simulate_gate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


class Runner:
    def __init__(self, cfg, out_dir, seed, subcommand):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.seed = seed
        self.subcommand = subcommand
        self.t0 = time.time()
        self.files = []

    def path(self, name):
        self.files.append(name)
        return self.out / name

    def finish(self):
        manifest = {
            "subcommand": self.subcommand,
            "config_hash": self.cfg.hash(),
            "seed": self.seed,
            "tool_version": __version__,
            "wall_time_s": round(time.time() - self.t0, 3),
            "outputs": self.files,
        }
        with open(self.out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return manifest


def _trajectory_rows(result):
    rows = []
    for i, t in enumerate(result.times):
        rows.append([t, *result.populations[i], result.trace[i], result.purity[i]])
    return rows


def _pad_target_populations(pops):
    """Lift target-sector populations (n_t, 5) to the 25-label layout."""
    out = np.zeros((pops.shape[0], 25))
    for k in range(5):
        out[:, 5 * basis.G1 + k] = pops[:, k]
    return out


def cmd_simulate(cfg, runner, args):
    pulses = config_mod.build_pulses(cfg)
    model = config_mod.build_model(cfg)
    prop = config_mod.build_propagation(cfg)
    pulses.check_adiabatic(warn=True)
    run = simulate_gate(pulses, model, prop, record=True, with_decay_budget=True)

    header = (["t_us"] + [f"pop_{lab}" for lab in basis.PAIR_LABELS]
              + ["trace", "purity"])
    for label in basis.COMPUTATIONAL_INPUTS:
        res = run.results[label]
        pops = res.populations
        if pops.shape[1] == 5:
            pops = _pad_target_populations(pops)
        rows = [[res.times[i], *pops[i], res.trace[i], res.purity[i]]
                for i in range(len(res.times))]
        _write_csv(runner.path(f"trajectory_{label}.csv"), header, rows)

    report = run.report
    summary = {
        "fidelity": report.fidelity,
        "fidelity_uhlmann": report.fidelity_uhlmann,
        "per_input": report.per_input,
        "decay_error_rydberg": report.decay_error_rydberg,
        "decay_error_intermediate": report.decay_error_intermediate,
        "blockade_error": None,
        "gate_time_us": pulses.gate_time,
        "b0_rad_us": model.b0,
    }
    if args.blockade_error:
        from .gate import gate_fidelity_value

        f_proxy = gate_fidelity_value(pulses, model.with_b0(BLOCKADE_PROXY_B0), prop)
        summary["blockade_error"] = f_proxy - report.fidelity_uhlmann
    _write_json(runner.path("summary.json"), summary)
    print(f"fidelity={report.fidelity:.6f} fidelity_uhlmann={report.fidelity_uhlmann:.6f}")
    return EXIT_OK


def cmd_budget(cfg, runner, args):
    from .noise import run_campaign

    pulses = config_mod.build_pulses(cfg)
    model = config_mod.build_model(cfg)
    prop = config_mod.build_campaign_propagation(cfg)
    noise = config_mod.build_noise(cfg)
    channels = cfg["noise"]["channels"] or ("intensity",)
    temps = cfg["noise"]["temperatures_uk"]
    if noise.samples < 100:
        print(f"warning: N={noise.samples} < 100; statistics will be poor",
              file=sys.stderr)

    rows = []
    for channel in channels:
        sweeps = temps if (temps and channel in ("position", "doppler", "beam")) \
            else (noise.thermal.temperature_uk,)
        for t_uk in sweeps:
            ncfg = _with_temperature(noise, t_uk)
            row = run_campaign(channel, ncfg, pulses, model, prop,
                               progress=args.progress)
            rows.append(row)
            print(f"{channel} @ {t_uk:g} uK: {row.mean_infidelity:.4e} "
                  f"+- {row.std_error:.2e}")

    header = ["channel", "amplitude_spec", "n_samples", "mean_infidelity",
              "std_error", "baseline_fidelity", "temperature_uk"]
    _write_csv(runner.path("budget.csv"), header,
               [[r.channel, r.amplitude_spec, r.samples, r.mean_infidelity,
                 r.std_error, r.baseline_fidelity, r.temperature_uk]
                for r in rows])
    _write_json(runner.path("budget.json"), {
        "seed": noise.samples and noise.seed,
        "config_hash": cfg.hash(),
        "rows": [
            {"channel": r.channel, "amplitude_spec": r.amplitude_spec,
             "n_samples": r.samples, "mean_infidelity": r.mean_infidelity,
             "std_error": r.std_error, "baseline_fidelity": r.baseline_fidelity,
             "temperature_uk": r.temperature_uk}
            for r in rows
        ],
    })
    return EXIT_OK


def _with_temperature(noise, t_uk):
    from dataclasses import replace

    return replace(noise, thermal=replace(noise.thermal, temperature_uk=t_uk))


def cmd_scan_b0(cfg, runner, args):
    from .noise import scan_b0

    pulses = config_mod.build_pulses(cfg)
    model = config_mod.build_model(cfg)
    prop = config_mod.build_campaign_propagation(cfg)
    b0_values = config_mod.build_scan_values(cfg)
    rows = scan_b0(b0_values, pulses, model, prop)
    _write_csv(runner.path("b0_scan.csv"),
               ["b0_rad_us", "b0_over_2pi_mhz", "infidelity"],
               [[b0, b0 / TWO_PI, inf] for b0, inf in rows])
    i_min = int(np.argmin(rows[:, 1]))
    print(f"minimum infidelity {rows[i_min, 1]:.3e} at "
          f"B0/2pi = {rows[i_min, 0] / TWO_PI:.2f} MHz")
    return EXIT_OK


def cmd_optimize(cfg, runner, args):
    from .optimizer import optimize

    pulses = config_mod.build_pulses(cfg)
    model = config_mod.build_model(cfg)
    space = config_mod.build_search_space(cfg, pulses)
    ga = config_mod.build_ga(cfg)
    result = optimize(space, ga, model, progress=args.progress)
    _write_csv(runner.path("convergence.csv"),
               ["generation", "best_f", "mean_f"], result.trace)
    best = result.pulses
    fragment = [
        "[pulses]",
        f"gate_time_us = {best.gate_time!r}",
        f"red_peak_mhz = {best.red.omega_max / TWO_PI!r}",
        f"red_width_us = {best.red.width!r}",
        f"red_corrected = {'true' if best.red.corrected else 'false'}",
        f"blue_mode = {best.blue.mode if best.blue.mode == 'constant' else 'gaussian_offset'}",
        f"blue_const_mhz = {best.blue.omega_const / TWO_PI!r}",
        f"blue_gauss_mhz = {best.blue.omega_gauss / TWO_PI!r}",
        f"blue_width_us = {best.blue.width!r}",
        f"blue_offset_mhz = {best.blue.offset / TWO_PI!r}",
        f"detuning_mode = {best.detuning.mode}",
        f"delta_const_mhz = {best.detuning.value / TWO_PI!r}",
        f"delta0_mhz = {best.detuning.d0 / TWO_PI!r}",
        f"delta1_mhz = {best.detuning.d1 / TWO_PI!r}",
        f"delta2_mhz = {best.detuning.d2 / TWO_PI!r}",
    ]
    (runner.out / "best_genome.ini").write_text("\n".join(fragment) + "\n")
    runner.files.append("best_genome.ini")
    _write_json(runner.path("optimize.json"), {
        "best_fidelity": result.best_fidelity,
        "best_fidelity_search": result.best_fidelity_search,
        "best_params": result.best_params,
        "evaluations": result.evaluations,
    })
    print(f"best fidelity {result.best_fidelity:.6f} "
          f"after {result.evaluations} evaluations")
    return EXIT_OK


def cmd_hyperfine(cfg, runner, args):
    from .hyperfine import evolve_reduced

    pulses = config_mod.build_pulses(cfg)
    model = config_mod.build_model(cfg)
    table = config_mod.build_hyperfine_table(cfg)
    h = cfg["hyperfine"]
    from .constants import mhz as _mhz

    res = evolve_reduced(pulses, model, table=table,
                         delta_prime_mode=h["delta_prime_mode"],
                         delta_prime=_mhz(h["delta_prime_mhz"]),
                         rtol=h["rtol"], sample_points=h["sample_points"])
    _write_json(runner.path("hyperfine.json"), {
        "fidelity": res.report.fidelity,
        "fidelity_uhlmann": res.report.fidelity_uhlmann,
        "per_input": res.report.per_input,
        "delta_prime_mode": res.delta_prime_mode,
        "gate_time_us": res.gate_time,
        "max_abs_delta_r_rad_us": res.max_abs_delta_r,
    })
    print(f"hyperfine fidelity={res.report.fidelity_uhlmann:.6f} "
          f"(mode {res.delta_prime_mode})")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "budget": cmd_budget,
    "scan-b0": cmd_scan_b0,
    "optimize": cmd_optimize,
    "hyperfine": cmd_hyperfine,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rydgate",
        description="Rydberg two-photon CNOT gate simulator and error auditor",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="path to an INI run configuration")
    parser.add_argument("--preset", help="name of a bundled preset")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override noise/GA seed")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="config override")
    parser.add_argument("--threads", type=int, default=None,
                        help="compute threads (results are independent of this)")
    parser.add_argument("--blockade-error", action="store_true",
                        help="also compute the finite-blockade error (simulate)")
    parser.add_argument("--progress", type=int, default=None,
                        help="print progress every N samples/generations")
    parser.add_argument("--list-presets", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        print("\n".join(config_mod.preset_names()))
        return EXIT_OK
    try:
        if args.config:
            cfg = config_mod.load(args.config)
        elif args.preset:
            cfg = config_mod.load_preset(args.preset)
        else:
            parser.error("one of --config or --preset is required")
        cfg.apply_overrides(args.overrides)
        if args.seed is not None:
            cfg.data["noise"]["seed"] = args.seed
            cfg.data["ga"]["seed"] = args.seed
    except config_mod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None:
        try:
            import numba

            numba.set_num_threads(max(1, args.threads))
        except Exception:
            pass
    runner = Runner(cfg, args.out, cfg["noise"]["seed"], args.command)
    try:
        code = COMMANDS[args.command](cfg, runner, args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    runner.finish()
    return code


if __name__ == "__main__":
    sys.exit(main())
