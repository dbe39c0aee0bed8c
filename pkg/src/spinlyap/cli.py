"""Experiment drivers: seeded sweeps over (eta, L) with CSV output.

Subcommands: lyapunov, gap-sweep, entanglement, cptp-check, oracle-check.
Cells of a sweep are independent (seed derived from master seed + cell
indices), so results do not depend on worker count or completion order;
every file is written atomically.  Exit codes: 0 ok, 2 bad config, 3
numerical failure.
"""

from __future__ import annotations

import argparse
import multiprocessing
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np

from .analysis import GapSeries, equilibration_time, fit_gap_extrapolation
from .circuit import FLOQUET, TEMPORALLY_RANDOM, CircuitModel
from .config import ExperimentConfig, load_config
from .cptp import (
    algebra_closure,
    build_superoperator,
    measurement_layer_operators,
    pauli_construction_check,
    spanning_generator_set,
    stationary_analysis,
)
from .errors import ConfigError
from .io import write_csv
from .lyapunov import (
    LyapunovAccumulator,
    default_bin_size,
    evolve_bin,
    orthonormalize,
    prepare_engine,
    record_bin,
    run_spectrum,
    svd_oracle,
)
from .observables import endpoint_mutual_information, ground_state_probe, half_chain_entropy

_VARIANT_CODE = {TEMPORALLY_RANDOM: 0, FLOQUET: 1}


def _cell_seed(config: ExperimentConfig, *indices: int) -> list[int]:
    return [config.seed, _VARIANT_CODE[config.model], *indices]


def _bin_for(config: ExperimentConfig, eta: float) -> int:
    return config.bin_size or default_bin_size(eta, config.model)


def _make_accumulator(config: ExperimentConfig, q: int, bin_size: int) -> LyapunovAccumulator:
    return LyapunovAccumulator(
        q=q,
        bin_size=bin_size,
        window=config.window,
        rel_threshold=config.rel_threshold,
    )


def _run_cells(fn, config: ExperimentConfig, cells):
    """Run cells serially or on a process pool; failures never stop the sweep."""
    results, failures = [], []
    if config.workers == 1:
        for cell in cells:
            try:
                results.append(fn(config, *cell))
            except Exception as exc:  # logged, sweep continues
                failures.append((cell, f"{type(exc).__name__}: {exc}"))
    else:
        # spawned workers start clean: forking a process whose BLAS
        # threads hold locks can deadlock the pool
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=config.workers, mp_context=ctx) as pool:
            futures = {pool.submit(fn, config, *cell): cell for cell in cells}
            for fut in as_completed(futures):
                cell = futures[fut]
                try:
                    results.append(fut.result())
                except Exception as exc:
                    failures.append((cell, f"{type(exc).__name__}: {exc}"))
    results.sort(key=lambda r: r["key"])
    failures.sort(key=lambda f: f[0])
    for cell, message in failures:
        print(f"cell {cell} failed: {message}", file=sys.stderr)
    return results, failures


def _write_failures(config: ExperimentConfig, command: str, failures) -> None:
    if failures:
        write_csv(
            Path(config.out) / f"failures_{command}.csv",
            ["cell", "error"],
            [(" ".join(map(str, cell)), msg) for cell, msg in failures],
        )


# --- lyapunov sweep -----------------------------------------------------------


def _lyapunov_cell(config: ExperimentConfig, eta_idx: int, size_idx: int, traj: int) -> dict:
    eta = config.etas[eta_idx]
    L = config.sizes[size_idx]
    b = _bin_for(config, eta)
    model = CircuitModel(config.model, L, eta)
    engine = prepare_engine(model, _cell_seed(config, eta_idx, size_idx, traj), q=config.q)
    acc = _make_accumulator(config, config.q, b)
    rows = []

    def on_bin(t, estimates, flags):
        shifted = estimates - estimates[0]
        for i in range(config.q):
            rows.append((t, i + 1, estimates[i], shifted[i], bool(flags[i])))

    estimate = run_spectrum(engine, acc, max_bins=max(config.max_steps // b, 1), on_bin=on_bin)
    path = Path(config.out) / (
        f"exponents_{config.model}_eta{eta:g}_L{L}_traj{traj}.csv"
    )
    write_csv(
        path, ["t", "i", "epsilon_tilde", "epsilon_shifted", "converged_flag"], rows
    )
    shifted = estimate.exponents - estimate.exponents[0]
    return {
        "key": (eta_idx, size_idx, traj),
        "eta": eta,
        "L": L,
        "traj": traj,
        "shifted": shifted,
        "converged": estimate.converged,
        "steps": estimate.total_steps,
    }


def run_lyapunov(config: ExperimentConfig) -> int:
    cells = [
        (ei, li, k)
        for ei in range(len(config.etas))
        for li in range(len(config.sizes))
        for k in range(config.trajectories)
    ]
    results, failures = _run_cells(_lyapunov_cell, config, cells)
    _write_failures(config, "lyapunov", failures)
    summary = []
    for ei, eta in enumerate(config.etas):
        for li, L in enumerate(config.sizes):
            group = [r for r in results if r["key"][:2] == (ei, li)]
            if not group:
                continue
            shifted = np.stack([r["shifted"] for r in group])
            conv = np.stack([r["converged"] for r in group])
            for i in range(config.q):
                mean = float(shifted[:, i].mean())
                spread = float(shifted[:, i].std()) if len(group) > 1 else 0.0
                summary.append(
                    (eta, L, i + 1, mean, spread, len(group), int(conv[:, i].sum()))
                )
    write_csv(
        Path(config.out) / f"lyapunov_summary_{config.model}.csv",
        ["eta", "L", "i", "mean_shifted", "spread", "n_trajectories", "n_converged"],
        summary,
    )
    print(f"lyapunov sweep: {len(results)} trajectories, {len(failures)} failed")
    return 3 if results == [] else 0


# --- gap sweep ----------------------------------------------------------------


def _gap_cell(config: ExperimentConfig, eta_idx: int, size_idx: int) -> dict:
    eta = config.etas[eta_idx]
    L = config.sizes[size_idx]
    b = _bin_for(config, eta)
    model = CircuitModel(config.model, L, eta)
    engine = prepare_engine(model, _cell_seed(config, eta_idx, size_idx), q=2)
    acc = _make_accumulator(config, 2, b)
    estimate = run_spectrum(
        engine, acc, max_bins=max(config.max_steps // b, 1), required=(1, 2)
    )
    return {
        "key": (eta_idx, size_idx),
        "eta": eta,
        "L": L,
        "delta": estimate.gap,
        "converged": bool(estimate.converged[:2].all()),
        "steps": estimate.total_steps,
    }


def run_gap_sweep(config: ExperimentConfig) -> int:
    cells = [
        (ei, li)
        for ei in range(len(config.etas))
        for li in range(len(config.sizes))
    ]
    results, failures = _run_cells(_gap_cell, config, cells)
    _write_failures(config, "gap_sweep", failures)
    write_csv(
        Path(config.out) / f"gaps_{config.model}.csv",
        ["eta", "L", "delta", "converged", "steps"],
        [(r["eta"], r["L"], r["delta"], r["converged"], r["steps"]) for r in results],
    )
    fit_rows = []
    for ei, eta in enumerate(config.etas):
        usable = [
            (r["L"], r["delta"])
            for r in results
            if r["key"][0] == ei and r["converged"] and r["delta"] > 0
        ]
        if len(usable) < 3:
            print(f"eta={eta:g}: {len(usable)} converged sizes, fit skipped", file=sys.stderr)
            continue
        fit = fit_gap_extrapolation(GapSeries(usable, eta), config.grid_points)
        fit_rows.append(
            (eta, fit.gamma, fit.alpha, fit.beta, fit.cost, fit.flat_fit)
        )
    write_csv(
        Path(config.out) / f"gap_fits_{config.model}.csv",
        ["eta", "gamma", "alpha", "beta", "cost", "flat_fit_flag"],
        fit_rows,
    )
    print(f"gap sweep: {len(results)} cells, {len(fit_rows)} fits, {len(failures)} failed")
    return 3 if results == [] else 0


# --- entanglement sweep ---------------------------------------------------------


def _entanglement_cell(config: ExperimentConfig, eta_idx: int, size_idx: int) -> dict:
    eta = config.etas[eta_idx]
    L = config.sizes[size_idx]
    b = _bin_for(config, eta)
    model = CircuitModel(config.model, L, eta)
    engine = prepare_engine(model, _cell_seed(config, eta_idx, size_idx), q=2)
    acc = _make_accumulator(config, 2, b)
    estimate = run_spectrum(
        engine, acc, max_bins=max(config.max_steps // b, 1), required=(1, 2)
    )
    gap = max(estimate.gap, 0.0)
    t_eq = equilibration_time(gap, cap=config.equilibration_cap)
    while acc.total_steps < t_eq:
        evolve_bin(engine, acc)
        _, log_norms = orthonormalize(engine.probes)
        record_bin(acc, log_norms)
    rows = []
    for _ in range(config.entropy_window):
        evolve_bin(engine, acc)
        _, log_norms = orthonormalize(engine.probes)
        record_bin(acc, log_norms)
        gs = ground_state_probe(engine.probes)
        rows.append(
            (acc.total_steps, half_chain_entropy(gs), endpoint_mutual_information(gs))
        )
    path = Path(config.out) / f"entanglement_{config.model}_eta{eta:g}_L{L}.csv"
    write_csv(path, ["t", "S_half", "I_1L"], rows)
    samples = np.asarray(rows, dtype=float)
    return {
        "key": (eta_idx, size_idx),
        "eta": eta,
        "L": L,
        "mean_S": float(samples[:, 1].mean()),
        "mean_I": float(samples[:, 2].mean()),
        "n_samples": len(rows),
        "gap": gap,
        "converged": bool(estimate.converged[:2].all()),
    }


def run_entanglement(config: ExperimentConfig) -> int:
    if any(L % 2 for L in config.sizes):
        raise ConfigError("entanglement sweep needs even sizes (half-chain cut)")
    cells = [
        (ei, li)
        for ei in range(len(config.etas))
        for li in range(len(config.sizes))
    ]
    results, failures = _run_cells(_entanglement_cell, config, cells)
    _write_failures(config, "entanglement", failures)
    write_csv(
        Path(config.out) / f"entanglement_summary_{config.model}.csv",
        ["eta", "L", "mean_S", "mean_I", "n_samples", "gap", "converged"],
        [
            (r["eta"], r["L"], r["mean_S"], r["mean_I"], r["n_samples"], r["gap"], r["converged"])
            for r in results
        ],
    )
    print(f"entanglement sweep: {len(results)} cells, {len(failures)} failed")
    return 3 if results == [] else 0


# --- channel checks --------------------------------------------------------------


def run_cptp_check(config: ExperimentConfig) -> int:
    rows = []
    for L in config.cptp_sizes:
        if L > 4:
            raise ConfigError("cptp-check limited to L <= 4")
        for variant in (TEMPORALLY_RANDOM, FLOQUET):
            for eta in config.etas:
                model = CircuitModel(variant, L, eta)
                gamma = build_superoperator(
                    model, theta_samples=config.theta_samples, seed=config.seed
                )
                report = stationary_analysis(gamma)
                if L <= 3:
                    if L == 1:
                        generators = measurement_layer_operators(eta, L)
                    else:
                        generators = spanning_generator_set(eta, L, seed=config.seed)
                    closure_dim = algebra_closure(generators).basis_dim
                else:
                    closure_dim = -1
                rows.append(
                    (
                        variant,
                        L,
                        eta,
                        report.multiplicity,
                        report.min_eigenvalue,
                        report.unique,
                        report.positive_definite,
                        closure_dim,
                    )
                )
    write_csv(
        Path(config.out) / "cptp_report.csv",
        ["model", "L", "eta", "multiplicity", "min_eig", "unique", "pd", "closure_dim"],
        rows,
    )
    for row in rows:
        print(
            f"{row[0]:>8} L={row[1]} eta={row[2]:g}: multiplicity={row[3]} "
            f"min_eig={row[4]:.3e} unique={row[5]} pd={row[6]} closure={row[7]}"
        )
    checks = {eta: pauli_construction_check(eta) for eta in config.etas}
    print("pauli construction:", ", ".join(f"eta={e:g}:{ok}" for e, ok in checks.items()))
    return 0


def run_oracle_check(config: ExperimentConfig) -> int:
    L = config.oracle_size
    t_max = config.oracle_steps
    if L > 8 or t_max > 512:
        raise ConfigError("oracle-check limited to L <= 8, t <= 512")
    q = min(config.q, 2**L)
    rows = []
    worst_rel, worst_overlap = 0.0, 1.0
    for ei, eta in enumerate(config.etas):
        b = min(_bin_for(config, eta), t_max)
        for traj in range(config.trajectories):
            model = CircuitModel(config.model, L, eta)
            engine = prepare_engine(
                model, _cell_seed(config, ei, 0, traj), q=q, keep_log=True
            )
            acc = LyapunovAccumulator(q=q, bin_size=b, window=config.window)
            for _ in range(t_max // b):
                evolve_bin(engine, acc)
                _, log_norms = orthonormalize(engine.probes)
                record_bin(acc, log_norms)
            estimates = acc.estimates()
            exponents, vectors = svd_oracle(engine.log, L, eta, acc.total_steps)
            overlap = abs(np.vdot(vectors[:, 0], engine.probes.vectors[:, 0]))
            for i in range(q):
                rel = abs(estimates[i] - exponents[i]) / abs(exponents[i])
                rows.append((eta, traj, i + 1, estimates[i], exponents[i], rel, overlap))
                if i > 0:
                    worst_rel = max(worst_rel, rel)
            worst_overlap = min(worst_overlap, overlap)
    write_csv(
        Path(config.out) / f"oracle_report_{config.model}.csv",
        ["eta", "traj", "i", "eps_gram_schmidt", "eps_svd", "rel_err", "overlap_top"],
        rows,
    )
    print(
        f"oracle check: worst relative error (i>=2) {worst_rel:.3e}, "
        f"worst top-vector overlap {worst_overlap:.6f}"
    )
    return 0


# --- argument parsing -------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinlyap",
        description="monitored spin-chain Lyapunov and entanglement experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-style config file")
    common.add_argument("--model", choices=[TEMPORALLY_RANDOM, FLOQUET])
    common.add_argument("--eta", type=float, nargs="+", dest="etas")
    common.add_argument("--L", type=int, nargs="+", dest="sizes")
    common.add_argument("--q", type=int)
    common.add_argument("--b", type=int, dest="bin_size")
    common.add_argument("--f", type=int, dest="window")
    common.add_argument("--d", type=float, dest="rel_threshold")
    common.add_argument("--seed", type=int)
    common.add_argument("--trajectories", type=int)
    common.add_argument("--max-steps", type=int, dest="max_steps")
    common.add_argument("--out")
    common.add_argument("--workers", type=int)
    common.add_argument(
        "--desk-scale",
        dest="desk_scale",
        action="store_const",
        const=True,
        default=None,
        help="shrink f, windows, and step budgets for quick runs",
    )
    handlers = {
        "lyapunov": run_lyapunov,
        "gap-sweep": run_gap_sweep,
        "entanglement": run_entanglement,
        "cptp-check": run_cptp_check,
        "oracle-check": run_oracle_check,
    }
    for name, handler in handlers.items():
        p = sub.add_parser(name, parents=[common])
        p.set_defaults(handler=handler)
    return parser


_CONFIG_KEYS = [
    "model",
    "etas",
    "sizes",
    "q",
    "bin_size",
    "window",
    "rel_threshold",
    "seed",
    "trajectories",
    "max_steps",
    "out",
    "workers",
    "desk_scale",
]


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS if getattr(args, k) is not None}
    try:
        config = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.handler(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
