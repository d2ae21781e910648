"""Batch driver: ``vibscat <subcommand> [options]``.

Every subcommand writes its tables into ``--out`` together with a
``manifest-<subcommand>.json`` recording the configuration, cache keys,
versions and timing.  CSV files start with a ``#`` line naming that manifest
and the configuration hash; they carry no timestamps, so identical inputs
give byte-identical CSVs.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from importlib import metadata as importlib_metadata
from pathlib import Path

import numpy as np
import scipy

from .config import ConfigError, load_config
from .coupling import unpack_symmetric
from .eigensolver import EigensolverError
from .ode import IntegrationError, benchmark_deviation, relative_deviations
from .pipeline import Pipeline, convergence_study
from .scattering import cross_section_table, sum_rule_defects, write_cross_sections, write_profiles

logger = logging.getLogger("vibscat")

CACHE_ENV = "VIBSCAT_CACHE_DIR"
DEFAULT_B = 0.01


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--mesh-points", type=int, help="interior radial mesh points")
    common.add_argument("--delta-r", type=float, help="coupling table spacing in R (bohr)")
    common.add_argument("--n", type=int, dest="n_states", help="number of vibrational states N")
    common.add_argument("--n-continuum", type=int, help="use all bound states plus this many continuum states")
    common.add_argument("--surface", choices=["pairwise_morse", "none"])
    common.add_argument("--tau", type=float, help="time step (a.u.)")
    common.add_argument("--b", type=float, help=f"impact parameter (bohr, default {DEFAULT_B})")
    common.add_argument("--b-grid", type=_float_list, help="comma separated impact parameters")
    common.add_argument("--initial", type=int, help="initial vibrational state")
    common.add_argument("--shots", type=int, help="measurement shots (0 = exact)")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for b scans")
    common.add_argument("--allow-large", action="store_true", help="permit more than 5 qubits")
    common.add_argument("--no-cache", action="store_true", help="do not read or write the coupling cache")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="vibscat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("basis", parents=[common], help="solve and dump the vibrational basis")
    sub.add_parser("couplings", parents=[common], help="build or reuse the coupling table")
    sub.add_parser("smatrix", parents=[common], help="full complex S-matrix via Hadamard tests")
    sub.add_parser("probs", parents=[common], help="transition probabilities from one initial state")
    sub.add_parser("xsec", parents=[common], help="cross sections over the impact-parameter grid")
    conv = sub.add_parser("converge", parents=[common], help="dissociation cross sections versus continuum size")
    conv.add_argument("--nc", type=_int_list, required=True, help="ascending continuum counts, e.g. 2,6,10,14")
    conv.add_argument("--initials", type=_int_list, default=[0], help="initial states (default 0)")
    sub.add_parser("benchmark", parents=[common], help="circuit path against the RK45 benchmark")
    return parser


_OVERRIDES = {
    "mesh_points": "mesh_points",
    "delta_r": "delta_r",
    "n_states": "n_states",
    "n_continuum": "n_continuum",
    "surface": "surface",
    "tau": "tau",
    "b_grid": "b_grid",
    "initial": "initial",
    "shots": "shots",
    "seed": "seed",
}


def resolve_config(args):
    cfg = load_config(args.config)
    changes = {key: getattr(args, attr) for attr, key in _OVERRIDES.items() if getattr(args, attr) is not None}
    if args.allow_large:
        changes["allow_large"] = True
    try:
        cfg = cfg.replace(**changes)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if args.b is not None and not 0 <= args.b < cfg.r_max:
        raise ConfigError(f"--b must lie in [0, r_max={cfg.r_max})")
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return cfg


def cache_dir(args) -> Path | None:
    if args.no_cache:
        return None
    return Path(os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "vibscat")


class Run:
    """Collects outputs and writes the manifest for one subcommand."""

    def __init__(self, command: str, cfg, out: Path, pipe: Pipeline):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.pipe = pipe
        self.files: list[str] = []
        self.results: dict = {}
        self.started = time.time()
        out.mkdir(parents=True, exist_ok=True)

    @property
    def manifest_name(self) -> str:
        return f"manifest-{self.command}.json"

    @property
    def header(self) -> str:
        return f"manifest={self.manifest_name} config={self.cfg.digest()}"

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    def write_manifest(self) -> None:
        doc = {
            "command": self.command,
            "config": self.cfg.snapshot(),
            "config_hash": self.cfg.digest(),
            "basis_hash": self.pipe.basis.digest() if "basis" in self.pipe.__dict__ else None,
            "coupling_key": self.pipe.table.key if "table" in self.pipe.__dict__ else None,
            "outputs": self.files,
            "results": self.results,
            "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(self.started)),
            "elapsed_s": round(time.time() - self.started, 3),
            "versions": {
                "vibscat": _version(),
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
        }
        (self.out / self.manifest_name).write_text(json.dumps(doc, indent=1, default=_json_default) + "\n")


def _version() -> str:
    try:
        return importlib_metadata.version("artifact")
    except importlib_metadata.PackageNotFoundError:
        return "unknown"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


def _write_rows(path: Path, header: str, columns: list[str], rows) -> None:
    with path.open("w") as fh:
        fh.write(f"# {header}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(repr(x) if isinstance(x, float) else str(x) for x in row) + "\n")


def cmd_basis(run: Run, args) -> None:
    basis = run.pipe.basis
    basis.to_csv(run.path("basis.csv"), header_comment=run.header)
    run.results.update(n_states=basis.n_states, n_bound=basis.n_bound,
                       bound_energies=basis.energies[: basis.n_bound].tolist())
    print(f"{basis.n_states} states, {basis.n_bound} bound; eps_0 = {basis.energies[0]:.8f} hartree")


def cmd_couplings(run: Run, args) -> None:
    table = run.pipe.table
    table.to_csv(run.path("couplings.csv"), header_comment=run.header)
    tail = unpack_symmetric(table.packed[-1], table.n_states)
    asym = float(np.max(np.abs(np.diag(tail) - table.energies)))
    run.results.update(key=table.key, n_states=table.n_states, n_r=len(table.r_grid), asymptote_defect=asym)
    print(f"coupling table {table.key}: {table.n_states} states x {len(table.r_grid)} R points; "
          f"max |h_ii(R_max) - eps_i| = {asym:.2e}")


def cmd_smatrix(run: Run, args) -> None:
    b = DEFAULT_B if args.b is None else args.b
    s = run.pipe.smatrix(b)
    s.to_csv(run.path("smatrix.csv"), header_comment=run.header)
    s.to_json(run.path("smatrix.json"))
    defect = s.unitarity_defect()
    run.results.update(b=b, unitarity_defect=defect, mode=s.metadata["mode"])
    print(f"S-matrix {s.n_states}x{s.n_states} at b={b}: unitarity defect |S^dagger S - I|_max = {defect:.3e}")


def cmd_probs(run: Run, args) -> None:
    b = DEFAULT_B if args.b is None else args.b
    i = run.cfg.initial
    p = run.pipe.probabilities(b, i)
    eps = run.pipe.table.energies
    _write_rows(run.path("probabilities.csv"), run.header, ["initial", "final", "energy", "P"],
                [(i, j, float(eps[j]), float(p[j])) for j in range(len(p))])
    run.results.update(b=b, initial=i, total=float(p.sum()))
    print(f"b={b} initial={i}: sum_j P = {p.sum():.12f}")


def cmd_xsec(run: Run, args) -> None:
    i = run.cfg.initial
    b = np.asarray(run.cfg.b_grid)
    probs = run.pipe.scan([i], jobs=args.jobs)[0]
    eps = run.pipe.table.energies
    rows = cross_section_table(b, probs, eps, i)
    write_cross_sections(run.path("cross_sections.csv"), rows, header_comment=run.header)
    write_profiles(run.path("bp_profiles.csv"), b, probs, eps, header_comment=run.header)
    _write_rows(run.path("scan_probabilities.csv"), run.header, ["b"] + [f"P_{j}" for j in range(probs.shape[1])],
                [(float(b[k]), *map(float, probs[k])) for k in range(len(b))])
    per_b, sigma_defect = sum_rule_defects(b, probs, eps)
    run.results.update(initial=i, max_probability_defect=float(per_b.max()), cross_section_sum_defect=sigma_defect)
    for r in rows:
        tag = " (elastic)" if r.elastic else ""
        print(f"sigma {r.initial}->{r.final} = {r.value:.6e} bohr^2{tag}")
    print(f"sum rules: max |sum P - 1| = {per_b.max():.2e}, cross-section defect = {sigma_defect:.2e}")
    if per_b.max() > 1e-6 or sigma_defect > 1e-6:
        raise NumericFailure("probability sum rule violated")


def cmd_converge(run: Run, args) -> None:
    table, _ = convergence_study(run.cfg, args.initials, args.nc, cache_dir(args), jobs=args.jobs)
    table.write(run.path("convergence.csv"), header_comment=run.header)
    run.results.update(
        n_continuum=table.n_continuum,
        mean_abs_deviation=table.mean_abs_deviation().tolist(),
        decreasing_on_average=table.decreasing_on_average(),
    )
    for m, nc in enumerate(table.n_continuum):
        print(f"N_c={nc:3d}  mean |deviation| = {table.mean_abs_deviation()[m]:.4f} %")


def cmd_benchmark(run: Run, args) -> None:
    b = DEFAULT_B if args.b is None else args.b
    i = run.cfg.initial
    p_circ = run.pipe.probabilities(b, i)
    p_ode, norm = run.pipe.ode_probabilities(b, i)
    dev = relative_deviations(p_circ, p_ode)
    _write_rows(run.path("benchmark.csv"), run.header, ["final", "P_circuit", "P_ode", "deviation_percent"],
                [(j, float(p_circ[j]), float(p_ode[j]), float(dev[j])) for j in range(len(p_ode))])
    full = benchmark_deviation(p_circ, p_ode)
    no_ground = benchmark_deviation(p_circ, p_ode, exclude=(0,))
    run.results.update(b=b, initial=i, tau=run.cfg.tau, max_deviation_percent=full,
                       max_deviation_excluding_ground_percent=no_ground, ode_norm=norm)
    print(f"b={b} tau={run.cfg.tau}: max relative deviation {full:.4f} % "
          f"({no_ground:.4f} % excluding the ground state); ODE norm {norm:.10f}")


class NumericFailure(RuntimeError):
    pass


COMMANDS = {
    "basis": cmd_basis,
    "couplings": cmd_couplings,
    "smatrix": cmd_smatrix,
    "probs": cmd_probs,
    "xsec": cmd_xsec,
    "converge": cmd_converge,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        pipe = Pipeline(cfg, cache_dir(args))
        run = Run(args.command, cfg, Path(args.out), pipe)
        COMMANDS[args.command](run, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (EigensolverError, IntegrationError, NumericFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    run.write_manifest()
    return 0


if __name__ == "__main__":
    sys.exit(main())
