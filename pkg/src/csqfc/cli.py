"""Command-line front end.

Each subcommand reads a TOML run config (``--config``; defaults to the
bundled reference device), computes one experiment and writes plot-ready
CSV plus JSON metadata to ``--out`` (a directory, or ``-`` for stdout).
Diagnostics go to stderr. Exit codes: 0 success, 2 config or parameter
error, 3 physics-domain error, 4 analysis error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from csqfc import netsim, noise
from csqfc.channel_plan import decode_pump, resonance_in_band
from csqfc.config import RunConfig, load_config
from csqfc.core import (
    PumpSetting,
    conversion_bandwidth,
    conversion_efficiency,
    cold_finesse,
    max_channels,
)
from csqfc.errors import ConfigError, CsqfcError, FitError, OutOfBandError
from csqfc.fixtures import (
    FSR_FIXTURES,
    OSA_CONVERTED_RESOLUTION,
    OSA_SIGNAL_RESOLUTION,
    TWO_PI,
)
from csqfc.fsr import estimate_fsr
from csqfc.spectra import (
    BANDWIDTH,
    EFFICIENCY,
    PowerSweep,
    Spectrum,
    convolve_instrument,
    fit_bandwidth_sweep,
    fit_efficiency_sweep,
    fit_power_sweeps,
    read_spectrum,
    simulate_conversion,
    simulate_transmission,
    write_spectrum,
)

DEFAULT_POWER_GRID = "0:250:10"
CAPACITY_NOTE = "exact floor of F/2; commonly rounded to ~40 for the reference device"


def _diag(msg: str) -> None:
    print(f"csqfc: {msg}", file=sys.stderr)


def parse_power_grid(text: str) -> np.ndarray:
    """``"start:stop:step"`` (stop inclusive) or a comma list, in mW."""
    text = text.strip()
    if not text:
        return np.array([])
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ConfigError(f"power grid step must be positive, got {step}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return start + step * np.arange(max(count, 0))
        return np.array(sorted(float(v) for v in text.split(",") if v.strip()))
    except ValueError as exc:
        raise ConfigError(f"cannot parse power grid {text!r}: {exc}") from exc


def _out_dir(args, cfg: RunConfig) -> Path | None:
    out = args.out if args.out is not None else cfg.output_dir
    if out == "-":
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        (out / name).write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _render(out: Path | None, name: str, series, xlabel: str, ylabel: str) -> None:
    """Optional SVG rendering; skipped with a warning if matplotlib is absent."""
    if out is None:
        _diag("--render ignored for stdout output")
        return
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        _diag("matplotlib not installed; skipping rendering")
        return
    matplotlib.rcParams["svg.hashsalt"] = "csqfc"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, x, y in series:
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(out / name, format="svg", metadata={"Date": None})
    plt.close(fig)


# -- subcommands ---------------------------------------------------------------


def cmd_efficiency_sweep(args, cfg: RunConfig) -> int:
    cav = cfg.cavity
    powers = parse_power_grid(args.power_grid)
    if powers.size == 0:
        raise ConfigError("power grid is empty")
    if np.any(np.diff(powers) < 0):
        raise ConfigError("power grid must be ascending")
    eta = np.array([conversion_efficiency(cav, p) for p in powers])
    bw = np.array([conversion_bandwidth(cav, p) for p in powers])

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("power_mw", "eta", "bandwidth_rad_per_s", "bandwidth_hz"))
    for p, e, b in zip(powers, eta, bw):
        w.writerow((f"{p:.10g}", f"{e:.10g}", f"{b:.10g}", f"{b / TWO_PI:.10g}"))

    rng = np.random.default_rng(args.seed)
    eta_fit = eta * (1 + args.noise * rng.standard_normal(eta.shape)) if args.noise else eta
    bw_fit = bw * (1 + args.noise * rng.standard_normal(bw.shape)) if args.noise else bw
    fit: dict = {"noise": args.noise, "seed": args.seed}
    try:
        alpha, gamma_all, rms_bw = fit_bandwidth_sweep(PowerSweep(powers, bw_fit, BANDWIDTH))
        fit.update(alpha_per_mw=alpha, gamma_all_rad_per_s=gamma_all, bandwidth_rms=rms_bw)
    except FitError as exc:
        _diag(f"bandwidth fit skipped: {exc}; using configured alpha")
        alpha = cav.alpha
        fit.update(alpha_per_mw=None, gamma_all_rad_per_s=None, bandwidth_rms=None)
    try:
        g, rms_eta = fit_efficiency_sweep(PowerSweep(powers, eta_fit, EFFICIENCY), alpha)
        fit.update(gamma_r_tilde=g, efficiency_rms=rms_eta)
    except FitError as exc:
        _diag(f"efficiency fit skipped: {exc}")
        fit.update(gamma_r_tilde=None, efficiency_rms=None)
    try:
        a_j, g_j, r_j = fit_power_sweeps(PowerSweep(powers, bw_fit, BANDWIDTH),
                                         PowerSweep(powers, eta_fit, EFFICIENCY))
        fit.update(joint_alpha_per_mw=a_j, joint_gamma_all_rad_per_s=g_j,
                   joint_gamma_r_tilde=r_j)
    except FitError as exc:
        _diag(f"joint fit skipped: {exc}")
        fit.update(joint_alpha_per_mw=None, joint_gamma_all_rad_per_s=None,
                   joint_gamma_r_tilde=None)
    k = int(np.argmax(eta))
    fit.update(
        peak_power_mw=float(powers[k]),
        peak_eta=float(eta[k]),
        optimum_power_mw=cav.p_max,
        cold_finesse=cold_finesse(cav),
        max_channels=max_channels(cav),
        max_channels_note=CAPACITY_NOTE,
    )

    out = _out_dir(args, cfg)
    _write(out, "efficiency_sweep.csv", buf.getvalue())
    if out is None:
        _diag("fit " + json.dumps(fit, sort_keys=True))
    else:
        _write(out, "efficiency_sweep.fit.json", _json(fit))
    if args.render:
        _render(out, "efficiency_sweep.svg", [("eta", powers, eta)], "pump power [mW]",
                "conversion efficiency")
    return 0


def _spectra_tag(n: int, m: int) -> str:
    return f"comb{n:+d}_fsr{m:+d}"


def cmd_spectra(args, cfg: RunConfig) -> int:
    cav, plan = cfg.cavity, cfg.plan
    n, m = args.pump_offset_comb, args.pump_offset_fsr
    power = cfg.pump_power if args.pump_power is None else args.pump_power
    if not resonance_in_band(plan, m, cav):
        raise OutOfBandError(
            f"resonance {m} ({m} FSR from the anchor) lies outside the acceptance band"
        )
    freq = cfg.pump_00 + n * plan.comb_spacing + m * plan.fsr
    pump = PumpSetting(power=power, frequency=freq, phase=cfg.pump_phase)
    if power > 0 and not decode_pump(plan, cav, freq, power):
        raise OutOfBandError("pump pairs no comb tooth with an in-band resonance")

    tag = _spectra_tag(n, m)
    offsets = {"pump_offset_comb": n, "pump_offset_fsr": m}
    trans = simulate_transmission(plan, cav, pump)
    conv = simulate_conversion(plan, cav, pump)
    trans.meta.update(offsets)
    conv.meta.update(offsets)
    spectra = {
        f"transmitted_{tag}": trans,
        f"converted_{tag}": conv,
        f"transmitted_{tag}_osa": convolve_instrument(trans, OSA_SIGNAL_RESOLUTION),
    }
    if len(conv):
        spectra[f"converted_{tag}_osa"] = convolve_instrument(conv, OSA_CONVERTED_RESOLUTION)

    out = _out_dir(args, cfg)
    if out is None:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(("spectrum", "omega_rad_per_s", "power"))
        for name in (f"transmitted_{tag}", f"converted_{tag}"):
            s = spectra[name]
            for om, p in zip(s.frequencies, s.powers):
                w.writerow((name, repr(float(om)), repr(float(p))))
        _diag("metadata " + json.dumps({"transmitted": trans.metadata(),
                                        "converted": conv.metadata()}, sort_keys=True))
        return 0
    for name, spec in spectra.items():
        write_spectrum(spec, out / f"{name}.csv")
    if args.render:
        for name, spec in spectra.items():
            if name.endswith("_osa"):
                _render(out, f"{name}.svg", [(name, spec.frequencies / TWO_PI, spec.powers)],
                        "frequency [Hz]", "power [arb.]")
    _diag(f"target tooth {trans.meta['target_index']}, output resonance "
          f"{conv.meta['output_index']}")
    return 0


def _load_spectrum(ref: str) -> Spectrum:
    if ref.startswith("bundled:"):
        name = ref.split(":", 1)[1]
        if name not in FSR_FIXTURES:
            raise ConfigError(f"unknown bundled spectrum {name!r}; choose from {FSR_FIXTURES}")
        with resources.as_file(resources.files("csqfc.data").joinpath(f"{name}.csv")) as p:
            return read_spectrum(p)
    try:
        return read_spectrum(ref)
    except OSError as exc:
        raise ConfigError(f"cannot read spectrum {ref}: {exc}") from exc


def cmd_fsr(args, cfg: RunConfig) -> int:
    spec = _load_spectrum(args.spectrum)
    est = estimate_fsr(spec, expected=None)
    record = est.as_record()
    record["source"] = args.spectrum
    record["configured_fsr_rad_per_s"] = cfg.cavity.fsr
    out = _out_dir(args, cfg)
    _write(out, "fsr.json", _json(record))
    return 0


def cmd_snr(args, cfg: RunConfig) -> int:
    cav, sig = cfg.cavity, cfg.signal
    rounds = cfg.rounds if args.rounds is None else args.rounds
    if rounds < 1:
        raise ConfigError(f"rounds must be >= 1, got {rounds}")
    op = noise.operating_point(cav, sig, convention=cfg.convention)
    zeta = args.zeta if args.zeta is not None else (cfg.zeta if cfg.zeta is not None else op.zeta)
    n780 = op.s_780 / zeta
    table = noise.budget_table(sig.g2_in, zeta, rounds, op.s_780, n780)
    _diag(f"noise convention '{cfg.convention}': "
          f"s780={op.s_780:.6g}, n780={op.n_780:.6g}, computed zeta={op.zeta:.6g}, "
          f"zeta used={zeta:.6g}")
    meta = {
        "noise_convention": cfg.convention,
        "s780": op.s_780,
        "n780_computed": op.n_780,
        "zeta_computed": op.zeta,
        "zeta_used": zeta,
        "g2_in": sig.g2_in,
        "rounds": rounds,
        "rounds_below_half": noise.rounds_within_threshold(sig.g2_in, zeta, 0.5),
    }
    if math.isinf(meta["rounds_below_half"]):
        meta["rounds_below_half"] = "inf"
    out = _out_dir(args, cfg)
    _write(out, "snr.csv", noise.budgets_to_csv(table))
    if out is not None:
        _write(out, "snr.meta.json", _json(meta))
        if args.render:
            _render(out, "snr.svg", [("g2", [b.round_index for b in table],
                                      [b.g2_out for b in table])], "round", "g2(0)")
    return 0


def _scenario_table(args, cfg: RunConfig) -> dict:
    if args.scenario is None:
        table = cfg.scenario
    else:
        try:
            data = tomllib.loads(Path(args.scenario).read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read scenario {args.scenario}: {exc}") from exc
        table = data.get("scenario", data)
    if not table:
        raise ConfigError("no [scenario] section in config and no --scenario file")
    return table


def build_scenario(cfg: RunConfig, table: dict):
    """Topology, step list and policy from a scenario table."""
    if table.get("topology", "ring") != "ring":
        raise ConfigError(f"unsupported topology {table['topology']!r}")
    zeta = table.get("zeta", cfg.zeta)
    topo = netsim.ring_topology(
        cfg.cavity, cfg.signal,
        channel_count=int(table.get("channel_count", 40)),
        end_nodes=int(table.get("end_nodes", 4)),
        zeta=None if zeta is None else float(zeta),
        comb_center=cfg.plan.comb_center,
        resonance_anchor=cfg.plan.resonance_anchor,
    )
    losses = table.get("edge_loss_db", {})
    empty = tuple(int(c) for c in table.get("empty_channels", ()))
    if losses or empty:
        edge = {tuple(k.split("-", 1)): float(v) for k, v in losses.items()}
        topo = dataclasses.replace(topo, edge_loss_db=edge, empty_channels=empty)
    steps = [dict(s) for s in table.get("steps", [])]
    seq = table.get("sequential")
    if seq:
        if "a" not in seq or "b" not in seq:
            raise ConfigError("sequential scenario needs end nodes 'a' and 'b'")
        steps += [{"op": "link", "a": seq["a"], "b": seq["b"]}] * int(seq.get("count", 1))
    if not steps:
        raise ConfigError("scenario has no steps")
    policy = str(table.get("policy", "lowest"))
    if policy not in netsim.POLICIES:
        raise ConfigError(f"unknown policy {policy!r}; choose from {sorted(netsim.POLICIES)}")
    return topo, steps, policy


def cmd_network(args, cfg: RunConfig) -> int:
    topo, steps, policy = build_scenario(cfg, _scenario_table(args, cfg))
    cap = max_channels(cfg.cavity)
    _diag(f"channel capacity {cap} ({CAPACITY_NOTE}); using {topo.channel_count}")
    result = netsim.run_scenario(topo, steps, seed=args.seed, policy=policy)
    out = _out_dir(args, cfg)
    _write(out, "events.csv", result.log_text())
    if out is not None:
        _write(out, "summary.csv", result.summary_csv())
        if args.render:
            rows = [r for r in result.link_rows() if r[2] == steps[0].get("a", r[2])]
            _render(out, "network_g2.svg", [("g2", [r[0] for r in rows], [r[8] for r in rows])],
                    "round", "g2(0)")
    return 0


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run config (default: bundled reference device)")
    common.add_argument("--out", help="output directory, or '-' for stdout")
    common.add_argument("--seed", type=int, help="RNG seed (default: config seed)")
    common.add_argument("--render", action="store_true", help="also write SVG plots")

    parser = argparse.ArgumentParser(prog="csqfc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("efficiency-sweep", parents=[common],
                       help="efficiency and bandwidth versus pump power, with fits")
    p.add_argument("--power-grid", default=DEFAULT_POWER_GRID,
                   help="pump powers in mW: 'start:stop:step' or comma list")
    p.add_argument("--noise", type=float, default=0.0,
                   help="relative Gaussian noise added to the data before fitting")
    p.set_defaults(func=cmd_efficiency_sweep)

    p = sub.add_parser("spectra", parents=[common],
                       help="transmitted and converted comb spectra for one pump setting")
    p.add_argument("--pump-offset-comb", type=int, default=0, metavar="N",
                   help="pump detuning in comb spacings")
    p.add_argument("--pump-offset-fsr", type=int, default=0, metavar="M",
                   help="pump detuning in cavity FSRs")
    p.add_argument("--pump-power", type=float, help="override pump power [mW]; 0 = pump off")
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("fsr", parents=[common], help="estimate the FSR of a spectrum CSV")
    p.add_argument("spectrum", help="spectrum CSV path or bundled:<name>")
    p.set_defaults(func=cmd_fsr)

    p = sub.add_parser("snr", parents=[common], help="noise budget over extraction rounds")
    p.add_argument("--rounds", type=int, help="number of rounds (default: config)")
    p.add_argument("--zeta", type=float, help="override the single-round SNR")
    p.set_defaults(func=cmd_snr)

    p = sub.add_parser("network", parents=[common], help="run a ring-network scenario")
    p.add_argument("--scenario", help="scenario TOML (default: config [scenario])")
    p.set_defaults(func=cmd_network)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is None:
            args.seed = cfg.seed
        return args.func(args, cfg)
    except CsqfcError as exc:
        _diag(f"error: {type(exc).__name__}: {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
