"""Command-line entry point: ``dcekit simulate|calibrate|analyze|sweep|rate``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis as an
from . import io
from .calibration import fit_calibration
from .chain_sim import (
    device_covariance,
    input_referred_expectation,
    pump_cycle_dataset,
    simulate_shot_noise_sweep,
)
from .config import RunConfig, load_config
from .constants import F_PUMP
from .errors import (
    ConfigError,
    DcekitError,
    DomainError,
    FitError,
    NumericalDomainError,
    SamplingError,
)
from .gaussian import entanglement_report
from .rates import SpectralModel, comparison_table, ebit_rate, format_table, n_of_f
from .squid import dce_peak_density, dce_purity

log = logging.getLogger("dcekit")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4
SWEEP_COLUMNS = (
    "phi_ac_phi0", "n", "n_measured", "log_negativity",
    "duan_plus", "duan_minus", "purity", "p_value",
)


def _exit_code(exc: BaseException) -> int:
    # numerical subclasses of DomainError are checked first
    if isinstance(exc, (NumericalDomainError, FitError, SamplingError)):
        return EXIT_NUMERICAL
    if isinstance(exc, (ConfigError, DomainError)):
        return EXIT_CONFIG
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, DcekitError):
        return EXIT_NUMERICAL
    raise exc


def _load(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config is required for this subcommand")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out_dir(args, cfg: RunConfig | None = None) -> Path:
    if args.out is not None:
        return Path(args.out)
    return cfg.out_dir if cfg is not None else Path(".")


def _band_seed(seed: int, band: int) -> int:
    return int(np.random.SeedSequence([seed, 0x5407, band]).generate_state(1)[0])


def _shot_noise_sweeps(cfg: RunConfig):
    """Synthetic calibration sweeps per band, using the chain's mean gains."""
    gains = cfg.chain.mean_gains()
    t_n = (cfg.chain.t_n_minus, cfg.chain.t_n_plus)
    freqs = (cfg.pump.f_minus, cfg.pump.f_plus)
    out = []
    for band in range(2):
        env = cfg.env_for(freqs[band])
        data = simulate_shot_noise_sweep(
            gains[band], t_n[band], env, cfg.shot_noise.currents(),
            cfg.shot_noise.noise_frac, Bw=cfg.chain.bw, seed=_band_seed(cfg.seed, band),
        )
        out.append((data, env))
    return out


def _truth(cfg: RunConfig) -> dict:
    v_dev = device_covariance(cfg.pump, cfg.squid)
    expected = input_referred_expectation(v_dev, cfg.chain)
    if cfg.pump.phi_ac > 0:
        n_p = dce_peak_density(cfg.pump, cfg.squid)
        model = SpectralModel(n_p=n_p, f_p=cfg.pump.f_p)
        n_minus, n_plus = n_of_f(cfg.pump.f_minus, model), n_of_f(cfg.pump.f_plus, model)
    else:
        n_p = n_minus = n_plus = 0.0
    return {
        "seed": cfg.seed,
        "phi_ac_phi0": cfg.pump.phi_ac,
        "density_scale": cfg.squid.density_scale,
        "n_p": float(n_p),
        "n_minus": float(n_minus),
        "n_plus": float(n_plus),
        "r": float(np.arcsinh(np.sqrt(np.sqrt(n_minus * n_plus)))),
        "purity": dce_purity(cfg.pump, cfg.squid),
        "gains_start": list(cfg.chain.g_start),
        "gains_end": list(cfg.chain.g_end),
        "gains_mean": list(cfg.chain.mean_gains()),
        "t_n": [cfg.chain.t_n_minus, cfg.chain.t_n_plus],
        "eta": [cfg.chain.eta_minus, cfg.chain.eta_plus],
        "device_covariance": np.asarray(v_dev.elements).tolist(),
        "expected_covariance": np.asarray(expected.elements).tolist(),
        "expected_report": entanglement_report(expected).as_dict(),
    }


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    rs = pump_cycle_dataset(cfg.pump, cfg.squid, cfg.chain)
    suffix = "csv" if args.format == "csv" else "bin"
    io.write_records(out / f"records.{suffix}", rs, args.format)
    for name, (data, env) in zip(("minus", "plus"), _shot_noise_sweeps(cfg)):
        io.write_shot_noise_csv(out / f"shotnoise_{name}.csv", data, env, cfg.chain.bw)
    io.write_json(out / "truth.json", _truth(cfg))
    print(f"wrote {len(rs)} records to {out}")
    return EXIT_OK


def _calib_name(path: Path) -> str:
    stem = path.stem
    if stem.startswith("shotnoise_"):
        stem = stem[len("shotnoise_"):]
    return f"calib_{stem}.json"


def cmd_calibrate(args) -> int:
    out = _out_dir(args)
    for path in map(Path, args.inputs):
        data, env, bw = io.read_shot_noise_csv(path)
        fit = fit_calibration(data, env, bw, weighted=not args.unweighted)
        io.write_calibration(out / _calib_name(path), fit)
        print(
            f"{path.name}: G = {fit.G:.6g} +/- {fit.dG:.2g}, "
            f"T_n = {fit.T_n:.4g} +/- {fit.dT_n:.2g} K"
        )
        for w in fit.warnings:
            print(f"  warning: {w}", file=sys.stderr)
    return EXIT_OK


def _read_calib(path):
    if path is None or not Path(path).is_file():
        raise ConfigError(f"calibration file not found: {path}")
    return io.read_calibration(path)


def cmd_analyze(args) -> int:
    cal_m = _read_calib(args.calib_minus)
    cal_p = _read_calib(args.calib_plus)
    rs = io.read_records(args.records)
    out = _out_dir(args)
    seed = 0 if args.seed is None else args.seed
    res = an.analyze(
        rs, cal_m, cal_p, bootstrap=args.bootstrap, permutations=args.permutations,
        alpha=args.alpha, seed=seed,
    )
    io.write_json(out / "analysis.json", res.as_dict())
    for pair in an.PAIRS:
        hist = an.histogram2d(rs, pair, bins=args.bins)
        io.write_histogram_csv(out / f"hist_{pair.replace('-', 'm').replace('+', 'p')}.csv", hist)
    rep = res.report
    print(
        f"log-negativity {rep.log_negativity:.4f} +/- {rep.errors['log_negativity']:.4f} "
        f"(raw {res.log_negativity_raw:.4f}, p = {res.p_value:.3f}); "
        f"squeezing {res.squeezing_db:+.3f} dB, amplification {res.amplification_db:+.3f} dB"
    )
    return EXIT_OK


def sweep_point(cfg: RunConfig, phi_ac: float, index: int, bootstrap: int, permutations: int):
    """One sweep row; returns (row, error message or None)."""
    seed = int(np.random.SeedSequence([cfg.seed, index]).generate_state(1)[0])
    try:
        pump = replace(cfg.pump, phi_ac=phi_ac)
        point = replace(cfg.with_seed(seed), pump=pump)
        fits = [
            fit_calibration(data, env, point.chain.bw)
            for data, env in _shot_noise_sweeps(point)
        ]
        moments = an.simulate_cycle_moments(pump, point.squid, point.chain)
        res = an.analyze(
            moments, *fits, bootstrap=bootstrap, permutations=permutations, seed=seed
        )
        n_model = dce_peak_density(pump, point.squid) if phi_ac > 0 else 0.0
        row = [
            phi_ac, n_model, res.n_minus, res.report.log_negativity,
            res.report.duan_plus, res.report.duan_minus, dce_purity(pump, point.squid),
            res.p_value,
        ]
        return row, None
    except DcekitError as exc:
        return [phi_ac] + [math.nan] * (len(SWEEP_COLUMNS) - 1), f"{type(exc).__name__}: {exc}"


def run_sweep(cfg: RunConfig, amplitudes, jobs: int = 1, bootstrap: int = 200, permutations: int = 200):
    args = [(cfg, float(a), i, bootstrap, permutations) for i, a in enumerate(amplitudes)]
    if jobs <= 1 or len(args) <= 1:
        return [sweep_point(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(sweep_point, *zip(*args)))


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg.pump.phi_ac < 0:
        raise ConfigError("pump.phi_ac_phi0 must be non-negative")
    out = _out_dir(args, cfg)
    results = run_sweep(cfg, args.phi_ac, args.jobs, args.bootstrap, args.permutations)
    rows = [row for row, _ in results]
    io.write_table_csv(out / "sweep.csv", list(SWEEP_COLUMNS), rows)
    failed = [(row[0], err) for row, err in results if err is not None]
    for amp, err in failed:
        log.error("sweep point phi_ac = %g failed: %s", amp, err)
    print(f"wrote {len(rows)} sweep rows to {out / 'sweep.csv'}")
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_rate(args) -> int:
    if (args.n_p is None) == (args.peak_logneg is None):
        raise ConfigError("give exactly one of --n-p or --peak-logneg")
    if args.n_p is not None:
        model = SpectralModel(n_p=args.n_p, f_p=args.f_p)
    else:
        model = SpectralModel.from_peak_logneg(args.peak_logneg, args.f_p)
    lo, hi = args.band if args.band is not None else (0.0, args.f_p)
    res = ebit_rate(model, lo, hi, panels=args.panels)
    table = comparison_table()
    if args.out is not None:
        io.write_json(Path(args.out) / "rate.json", {"result": res.as_dict(), "comparison": table})
    print(f"ebit rate over [{lo:.4g}, {hi:.4g}] Hz: {res.rate / 1e6:.4g} Mebit/s")
    print(format_table(table))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration (JSON)")
    common.add_argument("--seed", type=int, help="overrides the configured seed")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dcekit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="synthetic records and calibration sweeps")
    p.add_argument("--format", choices=("csv", "bin"), default="bin")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="fit gain and noise temperature")
    p.add_argument("inputs", nargs="+", help="shot-noise CSV files")
    p.add_argument("--unweighted", action="store_true", help="absolute instead of relative residuals")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("analyze", parents=[common], help="entanglement measures from records")
    p.add_argument("records", type=Path)
    p.add_argument("--calib-minus", type=Path, required=True)
    p.add_argument("--calib-plus", type=Path, required=True)
    p.add_argument("--bootstrap", type=int, default=an.BOOTSTRAP)
    p.add_argument("--permutations", type=int, default=an.PERMUTATIONS)
    p.add_argument("--alpha", type=float, default=an.ALPHA)
    p.add_argument("--bins", type=int, default=101)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", parents=[common], help="simulate and analyze over pump amplitudes")
    p.add_argument("--phi-ac", type=float, nargs="+", required=True, metavar="PHI0",
                   help="pump amplitudes in flux quanta")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--bootstrap", type=int, default=an.BOOTSTRAP)
    p.add_argument("--permutations", type=int, default=an.PERMUTATIONS)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rate", parents=[common], help="ebit rate of the DCE spectrum")
    p.add_argument("--n-p", type=float, help="peak photon spectral density")
    p.add_argument("--peak-logneg", type=float, help="peak log-negativity")
    p.add_argument("--f-p", type=float, default=F_PUMP, help="pump frequency (Hz)")
    p.add_argument("--band", type=float, nargs=2, metavar=("F_LO", "F_HI"))
    p.add_argument("--panels", type=int, default=4096)
    p.set_defaults(func=cmd_rate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (DcekitError, OSError) as exc:
        code = _exit_code(exc)
        print(f"dcekit {args.command}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
