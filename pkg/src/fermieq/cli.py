"""Command-line runner: simulate | spectral | verify | sweep.

Exit codes: 0 success, 2 configuration error, 3 Fock capacity exceeded,
4 violation of a proved bound inside its hypotheses.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from fermieq import __version__, bounds, spectral
from fermieq.config import RunSpec, apply_overrides, from_mapping, load
from fermieq.fockspace import CapacityError
from fermieq.lattice import ConfigError, LatticeConfig, box_side_for, derive
from fermieq.observables import box_moments
from fermieq.states import make_state
from fermieq.timeavg import delta_a, noneq_fraction

log = logging.getLogger("fermieq")

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_VIOLATION = 0, 2, 3, 4

TIMESERIES_COLUMNS = ["t", "center_id", "rho", "delta_rho_sq"]
FRACTION_COLUMNS = ["tau", "delta", "dt", "fraction", "surrogate_flag"]
SPECTRAL_COLUMNS = ["d", "L", "tau", "m", "J_exact", "lemma6_rhs", "margin", "hypothesis_ok"]
CHAIN_COLUMNS = ["d", "L", "n", "tau", "S", "S_upper", "delta_half", "ratio"]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _header(spec: RunSpec, columns, extra: dict | None = None) -> list[str]:
    lines = [f"# fermieq {__version__}", "# spec: " + json.dumps(spec.to_dict(), sort_keys=True)]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}: {json.dumps(v, sort_keys=True)}")
    lines.append(",".join(columns))
    return lines


def write_csv(path: Path, spec: RunSpec, columns, rows, extra=None):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(_header(spec, columns, extra)) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv_rows(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# -- simulate -----------------------------------------------------------------

def run_simulate(spec: RunSpec, out: Path) -> int:
    cfg = spec.lattice()
    state = make_state(cfg, spec.initial_state, spec.engine, spec.seed, spec.capacity)
    dt = spec.dt if spec.dt is not None else 0.1
    times = np.arange(0.0, spec.t_max + dt / 2, dt)
    rho, sq = box_moments(state, times)
    rows = ((t, j, rho[i, j], sq[i, j]) for i, t in enumerate(times) for j in range(rho.shape[1]))
    centers = {j: c.tolist() for j, (c, _) in enumerate(cfg.boxes)}
    write_csv(out / "timeseries.csv", spec, TIMESERIES_COLUMNS, rows,
              {"lattice": cfg.describe(), "centers": centers})
    if spec.tau is not None and spec.tau > cfg.L:
        fdt = min(spec.tau / 1e4, spec.dt) if spec.dt is not None else spec.tau / 1e4
        rep = noneq_fraction(state, spec.tau, delta_a(0.5, spec.tau, cfg.L, cfg.d), fdt)
        write_csv(out / "fraction.csv", spec, FRACTION_COLUMNS,
                  [(rep.tau, rep.delta, rep.dt, rep.fraction, rep.surrogate)],
                  {"samples": rep.samples})
    return EXIT_OK


# -- spectral -----------------------------------------------------------------

def _m_vector(m, d: int) -> tuple:
    m = list(np.atleast_1d(m).astype(int))
    if len(m) == 1:
        m = m + [0] * (d - 1)
    if len(m) != d:
        raise ConfigError(f"m={m} does not have {d} components")
    return tuple(m)


def spectral_row(cfg: LatticeConfig, tau: float, m) -> tuple:
    """One spectral-sweep row; for d > 1 the rhs column holds the dimension-reduction bound."""
    mv = _m_vector(m, cfg.d)
    J = spectral.jm_exact(mv, tau, cfg).value
    if cfg.d == 1:
        rhs = spectral.lemma6_bound(mv[0], tau, cfg.L)
    else:
        rhs = spectral.lemma7_rhs(mv, tau, cfg)
    m_txt = ";".join(str(v) for v in mv)
    return (cfg.d, cfg.L, tau, m_txt, J, rhs, rhs - J, spectral.hypothesis_ok(cfg.L, tau))


def run_spectral(spec: RunSpec, out: Path) -> int:
    cfg = spec.lattice()
    rows = [spectral_row(cfg, spec.tau, m) for m in spec.sweep.m]
    write_csv(out / "spectral.csv", spec, SPECTRAL_COLUMNS, rows)
    bad = [r for r in rows if r[-1] and r[-2] < 0]
    return EXIT_VIOLATION if bad else EXIT_OK


# -- verify -------------------------------------------------------------------

def default_reports(seed: int = 0) -> list:
    """The default verification grid: small exact systems plus cheap large-L spectral checks."""
    reps = []
    small = derive(1, 9, 3, 1 / 3, 0.5)
    fock_states = [make_state(small, "concentrated", "fock"),
                   make_state(small, "uniform_product", "fock")]
    fock_states += [make_state(small, f"random_fock({seed + k})", "fock") for k in range(3)]
    for psi in fock_states:
        reps.append(bounds.lemma3_report(psi, 0.0))
        reps.append(bounds.lemma3_report(psi, 1.7))
        reps.append(bounds.proposition2_check(psi, 0, 30.0))
    for L in (7, 9):
        cfg = derive(1, L, 3, 1 / 3, 0.5)
        for k in range(3):
            s = make_state(cfg, f"random_slater({seed + k})", "slater")
            for c, _ in cfg.boxes:
                reps.append(bounds.proposition2_check(s, c, 30.0))
    big = derive(1, 201, 67, 1 / 3, 0.5)
    conc = make_state(big, "concentrated", "slater")
    chain = bounds.chain_evaluate(big, 3 * 201)
    for c, _ in big.boxes:
        reps.append(bounds.proposition2_check(conc, c, 3 * 201, chain=chain))
    mid = derive(1, 31, 11, 1 / 3, 0.5)
    reps.append(bounds.theorem1prime_report(make_state(mid, "concentrated", "slater"), 2.5 * 31,
                                            dt=2.5 * 31 / 2000))
    L = 10001
    for r in (2.5, 5.0, 10.0):
        for m in (1, 2, 5, 100, 3333):
            reps.append(bounds.lemma6_report(m, r * L, L))
    cfg2 = derive(2, 27, 9, 1 / 3, 0.5)
    for m in [(1, 0), (0, 2), (3, 1), (2, 3)]:
        reps.append(bounds.lemma7_check(m, 2.5 * 27, cfg2))
    reps.extend(bounds.appendixF_estimates(derive(1, L, 2001, 1 / 3, 0.5), 3 * L))
    return reps


def run_verify(spec: RunSpec, out: Path) -> int:
    reports = default_reports(spec.seed)
    violated = [r for r in reports if r.violated]
    payload = {"spec": spec.to_dict(), "version": __version__,
               "violations": len(violated), "reports": [r.to_dict() for r in reports]}
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "verify.json", "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True, default=_json_default)
    for r in violated:
        log.error("violated: %s lhs=%g rhs=%g", r.name, r.lhs, r.rhs)
    return EXIT_VIOLATION if violated else EXIT_OK


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


# -- sweep --------------------------------------------------------------------

def _sweep_plan(spec: RunSpec):
    """(columns, key columns, grid points, row function) for the configured sweep kind."""
    g = spec.sweep
    if g.kind == "lemma6":
        cols = SPECTRAL_COLUMNS + ["status"]
        keys = ["L", "tau", "m"]
        grid = list(itertools.product(g.L, g.tau_ratio, g.m))

        def key(p):
            L, r, m = p
            return (str(int(L)), fmt(float(r * L)), ";".join(map(str, _m_vector(m, spec.d))))

        def row(p):
            L, r, m = p
            return spectral_row(derive(spec.d, int(L), 1, spec.rho_bar, spec.epsilon), r * L, m)
    elif g.kind == "fraction":
        cols = ["L", "n"] + FRACTION_COLUMNS + ["status"]
        keys = ["L", "n", "tau"]
        grid = list(itertools.product(g.L, g.n, g.tau_ratio))

        def key(p):
            L, n, r = p
            return (str(int(L)), str(int(n)), fmt(float(r * L)))

        def row(p):
            L, n, r = p
            cfg = derive(spec.d, int(L), box_side_for(int(L), int(n)), spec.rho_bar, spec.epsilon)
            state = make_state(cfg, spec.initial_state, spec.engine, spec.seed, spec.capacity)
            tau = r * L
            dt = spec.dt if spec.dt is not None else tau / 1e4
            rep = noneq_fraction(state, tau, delta_a(0.5, tau, cfg.L, cfg.d), dt)
            return (int(L), int(n), rep.tau, rep.delta, rep.dt, rep.fraction, rep.surrogate)
    else:
        cols = CHAIN_COLUMNS + ["status"]
        keys = ["L", "n", "tau"]
        grid = list(itertools.product(g.L, g.n, g.tau_ratio))

        def key(p):
            L, n, r = p
            return (str(int(L)), str(int(n)), fmt(float(r * L)))

        def row(p):
            L, n, r = p
            cfg = derive(spec.d, int(L), box_side_for(int(L), int(n)), spec.rho_bar, spec.epsilon)
            ch = bounds.chain_evaluate(cfg, r * L, spec.m_cut)
            return (cfg.d, cfg.L, cfg.n, r * L, ch.S, ch.S_upper, ch.delta_half, ch.ratio)
    return cols, keys, grid, key, row


def _guarded(row_fn, ncols):
    def run(p):
        try:
            return [fmt(v) for v in row_fn(p)] + ["ok"]
        except Exception as exc:  # recorded per row, the sweep continues
            log.warning("grid point %s failed: %s", p, exc)
            return [""] * ncols + [f"error: {type(exc).__name__}: {exc}".replace("\n", " ")]
    return run


def run_sweep(spec: RunSpec, out: Path) -> int:
    cols, keys, grid, key, row_fn = _sweep_plan(spec)
    path = out / f"sweep_{spec.sweep.kind}.csv"
    partial = path.with_suffix(".csv.partial")
    done = {}
    for existing in (path, partial):
        for r in read_csv_rows(existing):
            if r.get("status") == "ok":
                done[tuple(r[k] for k in keys)] = [r[c] for c in cols]
    todo = [p for p in grid if key(p) not in done]
    log.info("sweep %s: %d points, %d already done", spec.sweep.kind, len(grid), len(grid) - len(todo))
    work = _guarded(row_fn, len(cols) - 1)
    violations = 0
    out.mkdir(parents=True, exist_ok=True)
    with open(partial, "w", newline="") as fh, ThreadPoolExecutor(spec.threads) as pool:
        fh.write("\n".join(_header(spec, cols)) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        fresh = pool.map(work, todo)
        for p in grid:
            k = key(p)
            vals = done[k] if k in done else next(fresh)
            writer.writerow(vals)
            fh.flush()
            if spec.sweep.kind == "lemma6" and vals[-1] == "ok":
                if vals[cols.index("hypothesis_ok")] == "true" and float(vals[cols.index("margin")]) < 0:
                    violations += 1
    os.replace(partial, path)
    return EXIT_VIOLATION if violations else EXIT_OK


# -- entry point ---------------------------------------------------------------

RUNNERS = {"simulate": run_simulate, "spectral": run_spectral, "verify": run_verify,
           "sweep": run_sweep}


def run(spec: RunSpec) -> int:
    """Validate and execute a RunSpec, returning the process exit status."""
    try:
        spec.validate()
        return RUNNERS[spec.mode](spec, Path(spec.out))
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except CapacityError as exc:
        log.error("capacity exceeded: %s", exc)
        return EXIT_CAPACITY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fermieq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fermieq {__version__}")
    sub = p.add_subparsers(dest="mode", required=True)
    for name in RUNNERS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="TOML run specification")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int)
        s.add_argument("--dt", type=float)
        s.add_argument("--m-cut", type=int, dest="m_cut")
        s.add_argument("--engine", choices=["slater", "fock"])
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = load(args.config) if args.config else from_mapping({})
        spec.mode = args.mode
        apply_overrides(spec, out=args.out, seed=args.seed, threads=args.threads, dt=args.dt,
                        m_cut=args.m_cut, engine=args.engine)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
