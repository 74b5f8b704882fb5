"""Command-line driver: single runs, step-size ladders, CSV tables and figures.

Exit status: 0 ok, 2 bad configuration, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import fit_power_law_samples, order_profile, run_ladder, tabulate
from .errors import AnnihilationError, ConfigError
from .model import ModelParams
from .solver import grid_index, solve_trajectory
from .stepper import SchemeKind

log = logging.getLogger("annihilation")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

EMIT_CHOICES = ("trajectory_csv", "table_csv", "order_csv", "fit_txt", "figure1_svg", "figure2_svg")

DEFAULTS = {"lambda": "0.1", "diffusion": "0.4", "ell": "0.001", "a0": "5000", "scheme": "2",
            "out": ".", "threads": "1"}

KEYS = ("lambda", "diffusion", "ell", "a0", "dt", "dt_ladder", "t_end", "scheme",
        "sample_times", "fit_window", "out", "emit", "threads")


@dataclass
class RunConfig:
    params: ModelParams
    t_end: float
    dt: float | None = None
    dt_ladder: tuple[float, ...] = ()
    scheme: SchemeKind = SchemeKind.BDF2
    fit_window: tuple[float, float] | None = None
    sample_times: tuple[float, ...] = ()
    output_dir: Path = Path(".")
    emit: frozenset = field(default_factory=frozenset)
    threads: int = 1


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    raw = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config {path}:{lineno}: expected 'key = value'")
        key = key.strip().replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"config {path}:{lineno}: unknown key '{key}'")
        raw[key] = value.strip()
    return raw


def _number(raw, key, cast=float):
    try:
        value = cast(raw[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw[key]!r} as a number") from None
    if cast is float and not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {raw[key]!r}")
    return value


def _number_list(raw, key, sep=","):
    parts = [p.strip() for p in raw[key].split(sep) if p.strip()]
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw[key]!r} as numbers") from None


def _is_halving_ladder(dts):
    return all(math.isclose(a, 2.0 * b, rel_tol=1e-12) for a, b in zip(dts, dts[1:]))


def build_config(raw: dict[str, str]) -> RunConfig:
    """Validate merged key/value settings into a RunConfig."""
    merged = {**DEFAULTS, **{k: v for k, v in raw.items() if v is not None}}
    missing = []
    if "t_end" not in merged:
        missing.append("t_end")
    if "dt" not in merged and "dt_ladder" not in merged:
        missing.append("dt or dt_ladder")
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    try:
        params = ModelParams(lam=_number(merged, "lambda"), diffusion=_number(merged, "diffusion"),
                             ell=_number(merged, "ell"), a0=_number(merged, "a0"))
    except ConfigError as exc:
        raise ConfigError(f"model parameters: {exc}") from None
    if params.a0 <= 0:
        raise ConfigError("a0: must be > 0")

    t_end = _number(merged, "t_end")
    dt = _number(merged, "dt") if "dt" in merged else None
    ladder = _number_list(merged, "dt_ladder") if "dt_ladder" in merged else ()
    for key, steps in (("dt", [dt] if dt is not None else []), ("dt_ladder", ladder)):
        for step in steps:
            if not step > 0:
                raise ConfigError(f"{key}: step must be > 0, got {step!r}")
            if not t_end >= step or grid_index(t_end, step) is None:
                raise ConfigError(f"t_end: {t_end!r} is not a positive multiple of {key} {step!r}")
    if "dt_ladder" in merged and not ladder:
        raise ConfigError("dt_ladder: empty list")

    try:
        scheme = SchemeKind.parse(merged["scheme"])
    except ValueError as exc:
        raise ConfigError(f"scheme: {exc}") from None

    fit_window = None
    if "fit_window" in merged:
        lo_hi = _number_list(merged, "fit_window", sep=":")
        if len(lo_hi) != 2 or not 0 <= lo_hi[0] < lo_hi[1] <= t_end:
            raise ConfigError(f"fit_window: expected LO:HI with 0 <= LO < HI <= t_end, "
                              f"got {merged['fit_window']!r}")
        fit_window = lo_hi

    sample_times = _number_list(merged, "sample_times") if "sample_times" in merged else ()
    for t in sample_times:
        if not 0 <= t <= t_end:
            raise ConfigError(f"sample_times: {t!r} outside [0, t_end]")
        for step in ladder:
            if grid_index(t, step) is None:
                raise ConfigError(f"sample_times: {t!r} is not on the grid dt={step!r}")

    threads = _number(merged, "threads", int)
    if threads < 1:
        raise ConfigError("threads: must be >= 1")

    if "emit" in merged:
        emit = frozenset(e.strip() for e in merged["emit"].split(",") if e.strip())
        unknown = emit - set(EMIT_CHOICES)
        if unknown:
            raise ConfigError(f"emit: unknown artifact(s) {sorted(unknown)}; "
                              f"choose from {', '.join(EMIT_CHOICES)}")
    else:
        emit = set()
        if dt is not None:
            emit |= {"trajectory_csv", "figure1_svg"}
            if fit_window is not None:
                emit.add("fit_txt")
        if ladder and sample_times:
            emit.add("table_csv")
        if len(ladder) >= 3 and _is_halving_ladder(ladder):
            emit |= {"order_csv", "figure2_svg"}
        emit = frozenset(emit)

    needs_dt = {"trajectory_csv", "fit_txt", "figure1_svg"} & emit
    if needs_dt and dt is None:
        raise ConfigError(f"emit: {sorted(needs_dt)} need --dt")
    if "fit_txt" in emit and fit_window is None:
        raise ConfigError("emit: fit_txt needs --fit-window")
    if "table_csv" in emit and not (ladder and sample_times):
        raise ConfigError("emit: table_csv needs --dt-ladder and --sample-times")
    if {"order_csv", "figure2_svg"} & emit:
        if len(ladder) < 3 or not _is_halving_ladder(ladder):
            raise ConfigError("dt_ladder: order estimates need >= 3 successively halved steps")

    return RunConfig(params=params, t_end=t_end, dt=dt, dt_ladder=ladder, scheme=scheme,
                     fit_window=fit_window, sample_times=sample_times,
                     output_dir=Path(merged["out"]), emit=emit, threads=threads)


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="annihilation",
        description="Solve the regularized annihilation-kinetics integro-differential equation.",
    )
    p.add_argument("--lambda", dest="lambda", metavar="X", help="rate constant (default 0.1)")
    p.add_argument("--diffusion", metavar="X", help="diffusion coefficient D (default 0.4)")
    p.add_argument("--ell", metavar="X", help="regularization length (default 0.001)")
    p.add_argument("--a0", metavar="X", help="initial density (default 5000)")
    p.add_argument("--dt", metavar="X", help="time step of a single run")
    p.add_argument("--dt-ladder", dest="dt_ladder", metavar="LIST",
                   help="comma-separated time steps for a refinement study")
    p.add_argument("--t-end", dest="t_end", metavar="X", help="final time")
    p.add_argument("--scheme", choices=("1", "2"), help="derivative order (default 2)")
    p.add_argument("--sample-times", dest="sample_times", metavar="LIST",
                   help="comma-separated times for table.csv")
    p.add_argument("--fit-window", dest="fit_window", metavar="LO:HI",
                   help="power-law fit window for the --dt run")
    p.add_argument("--out", metavar="DIR", help="output directory (default .)")
    p.add_argument("--emit", metavar="LIST", help="artifacts: " + ",".join(EMIT_CHOICES))
    p.add_argument("--config", metavar="FILE", help="'key = value' settings; flags override")
    p.add_argument("--threads", metavar="N", help="parallel ladder runs (default 1)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def parse_config(argv=None) -> tuple[RunConfig, bool]:
    """Parse flags (and an optional config file) into a validated RunConfig."""
    ns = make_parser().parse_args(argv)
    raw = read_config_file(ns.config) if ns.config else {}
    for key in KEYS:
        value = getattr(ns, key)
        if value is not None:
            raw[key] = value
    return build_config(raw), ns.verbose


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    log.info("wrote %s", path)


def _progress_logger(label):
    def hook(k, n):
        if k == n or k % max(n // 10, 1) == 0:
            log.info("%s: step %d/%d", label, k, n)
    return hook


def run(config: RunConfig) -> int:
    """Compute and write the artifacts selected in ``config.emit``."""
    from . import plotting

    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    emit = config.emit

    if config.dt is not None and {"trajectory_csv", "fit_txt", "figure1_svg"} & emit:
        traj = solve_trajectory(config.params, config.dt, config.t_end, config.scheme,
                                progress=_progress_logger(f"dt={config.dt!r}"),
                                progress_every=max(1, round(config.t_end / config.dt) // 10))
        traj_csv = out / "trajectory.csv"
        _write_csv(traj_csv, ["t", "a"],
                   ([_fmt(t), _fmt(a)] for t, a in zip(traj.times, traj.values)))
        fit_path = None
        if config.fit_window is not None and {"fit_txt", "figure1_svg"} & emit:
            fit = fit_power_law_samples(traj.times, traj.values, config.fit_window)
            fit_path = out / "fit.txt"
            fit_path.write_text(
                "".join(f"{k} = {v}\n" for k, v in (
                    ("dt", repr(traj.dt)),
                    ("amplitude", repr(fit.amplitude)),
                    ("shift", repr(fit.shift)),
                    ("exponent", repr(fit.exponent)),
                    ("window_lo", repr(fit.window[0])),
                    ("window_hi", repr(fit.window[1])),
                    ("n_points", str(fit.n_points)),
                    ("max_abs_error", repr(fit.max_abs_error)),
                    ("max_rel_error", repr(fit.max_rel_error)),
                )),
                encoding="utf-8",
            )
            log.info("fit: %.6g / (t - %.6g)^%.6g", fit.amplitude, fit.shift, fit.exponent)
        if "figure1_svg" in emit:
            plotting.plot_density_and_fit(traj_csv, out / "figure1.svg", fit_path)
        if "trajectory_csv" not in emit:
            traj_csv.unlink()
        if fit_path is not None and "fit_txt" not in emit:
            fit_path.unlink()

    if config.dt_ladder and {"table_csv", "order_csv", "figure2_svg"} & emit:
        log.info("running ladder %s", ", ".join(repr(d) for d in config.dt_ladder))
        trajs = run_ladder(config.params, config.dt_ladder, config.t_end, config.scheme,
                           threads=config.threads)
        if "table_csv" in emit:
            table = tabulate(trajs, config.sample_times)
            _write_csv(out / "table.csv", ["dt"] + [repr(t) for t in table.times],
                       ([repr(dt)] + [_fmt(v) for v in row]
                        for dt, row in zip(table.dts, table.values)))
        if {"order_csv", "figure2_svg"} & emit:
            columns, labels = [], []
            for j in range(len(trajs) - 2):
                _, p = order_profile(*trajs[j : j + 3])
                # keep only the coarsest grid, which every triple shares
                columns.append(p[2**j - 1 :: 2**j])
                labels.append("-".join(repr(tr.dt) for tr in trajs[j : j + 3]))
            n = min(len(col) for col in columns)
            header = ["t"] + [f"p_triple{j + 1}" for j in range(len(columns))]
            order_csv = out / "order.csv"
            _write_csv(order_csv, header,
                       ([_fmt((i + 1) * trajs[0].dt)] + [_fmt(col[i]) for col in columns]
                        for i in range(n)))
            if "figure2_svg" in emit:
                plotting.plot_orders(order_csv, out / "figure2.svg", labels)
            if "order_csv" not in emit:
                order_csv.unlink()
    return EXIT_OK


def main(argv=None) -> int:
    try:
        config, verbose = parse_config(argv)
    except ConfigError as exc:
        print(f"annihilation: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse usage errors and --help
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return run(config)
    except ConfigError as exc:
        print(f"annihilation: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AnnihilationError, ArithmeticError) as exc:
        print(f"annihilation: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"annihilation: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
