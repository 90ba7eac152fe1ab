"""Command-line harness: ``clockwork <command> --config <path> [--out <path>] [--seed <u64>]``.

Configs are INI files. Keys shared by every command live in
``[experiment]``; per-command parameters live in a section named after the
command. Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .circuit_ir import Circuit, CircuitParseError, RingProgram, load_circuit, pad_ring, repeat_circuit
from .data import bundled_circuit
from .dynamics import (Schedule, StepSizeError, ThermalParams, evolve_schedule, initial_state,
                       measure_answer, quench_dispersion, thermal_relax, wavepacket_run)
from .hamiltonian import (InterpolationPoint, SpaceDescriptor, add_hopping_disorder, build_feynman, build_h0,
                          build_h1, interpolate, write_matrix_market)
from .spectral import (ConvergenceError, cluster_values, eigensystem, gap_scan, scaling_fit, sector_classify,
                       sector_expectation)
from .tagteam import BasisOverflowError, StructuralError, equivalence_check, tagteam_transform

COMMANDS = ("spectrum", "gaps", "sweep", "adiabatic", "quench", "thermal", "wavepacket", "tagteam")
EXPONENT_TOL = 0.15

COLUMNS = {
    "spectrum": "index, eigenvalue, residual, weight_correct",
    "gaps": "lambda, gap_total, gap_sector, gap_tower, ground_energy",
    "sweep": "n, lambda, gap_total, gap_sector, gap_tower, ground_energy (rows sorted by n then lambda); "
             "fitted exponents go to <out stem>.summary.json",
    "adiabatic": "time, lambda, norm, weight_correct",
    "quench": "time, p_correct, weight_correct, window_mass",
    "thermal": "trajectory, arrival_time (empty if censored), weight_deviation",
    "wavepacket": "time, p_correct, weight_correct, window_mass",
    "tagteam": "result, max_discrepancy, n_eigenvalues, tolerance",
}

SCHEMA = """\
[experiment]
  circuit        path relative to the config file, or bundled:<name>
  repeat         repeat the circuit this many times (default 1)
  idle_fraction  fraction of the ring spent idling, e.g. 1/2 (default 1/2)
  n              clock length override (idle padding fills the rest)
  eta            penalty strength (default 4)
  seed           integer seed, overridden by --seed (default 0)

[spectrum]   lambda, count, matrix_market (optional output path)
[gaps]       lambda_points (default 21) or lambda_grid = 0, 0.5, 1
[sweep]      n_list = 8, 16, 32, 64; lambda_points or lambda_grid; workers
[adiabatic]  total_time (or time_factor, T = factor * n^2), shape, dt, samples
[quench]     wait_time (or time_factor), samples
[thermal]    E, temperature or ratio, gamma, t_max, trajectories, dt, hopping
[wavepacket] tilt_E, k_width, k0, t_max, samples
[disorder]   strength, seed (applies to spectrum, adiabatic, quench, wavepacket)
"""


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    command: str
    circuit: Circuit
    circuit_ref: str
    idle_fraction: Fraction
    n: int | None
    eta: float
    seed: int
    params: "_Section"
    disorder: dict | None = None
    source_hash: str = ""
    base_dir: Path = Path(".")

    def ring(self, n: int | None = None) -> RingProgram:
        return pad_ring(self.circuit, self.idle_fraction, n=self.n if n is None else n)


def _resolve_circuit(ref: str, base_dir: Path) -> Circuit:
    if ref.startswith("bundled:"):
        name = ref.split(":", 1)[1]
        try:
            return bundled_circuit(name)
        except FileNotFoundError as exc:
            raise ConfigError(f"no bundled circuit named {name!r}") from exc
    path = Path(ref)
    if not path.is_absolute():
        path = base_dir / path
    if not path.is_file():
        raise ConfigError(f"circuit file not found: {path}")
    try:
        return load_circuit(path)
    except CircuitParseError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


class _Section:
    """Typed access to one config section with key validation."""

    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.data = dict(parser[name]) if parser.has_section(name) else {}

    def get(self, key, conv=str, default=None, required=False):
        if key not in self.data:
            if required:
                raise ConfigError(f"[{self.name}] is missing required key {key!r}")
            return default
        raw = self.data[key].strip()
        try:
            return conv(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"[{self.name}] {key} = {raw!r}: {exc}") from exc


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def load_config(path, command: str, seed: int | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = path.read_bytes()
    parser = configparser.ConfigParser()
    try:
        parser.read_string(raw.decode("utf-8"), source=str(path))
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    exp = _Section(parser, "experiment")
    declared = exp.get("command")
    if declared is not None and declared != command:
        raise ConfigError(f"config is for command {declared!r}, not {command!r}")
    ref = exp.get("circuit", required=True)
    circuit = _resolve_circuit(ref, path.parent)
    times = exp.get("repeat", int, 1)
    if times < 1:
        raise ConfigError("[experiment] repeat must be >= 1")
    if times > 1:
        circuit = repeat_circuit(circuit, times)
    frac = exp.get("idle_fraction", Fraction, Fraction(1, 2))
    if not 0 < frac < 1:
        raise ConfigError("[experiment] idle_fraction must lie in (0, 1)")
    cfg_seed = exp.get("seed", int, 0)
    seed = cfg_seed if seed is None else seed
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    eta = exp.get("eta", float, 4.0)
    if eta < 0:
        raise ConfigError("[experiment] eta must be >= 0")
    disorder = None
    if parser.has_section("disorder"):
        sec = _Section(parser, "disorder")
        disorder = {"strength": sec.get("strength", float, required=True),
                    "seed": sec.get("seed", int, seed)}
    params = _Section(parser, command)
    return ExperimentConfig(command, circuit, ref, frac, exp.get("n", int), eta, seed, params,
                            disorder, hashlib.sha256(raw).hexdigest(), path.parent)


def _lambda_grid(sec: _Section) -> list[float]:
    if "lambda_grid" in sec.data:
        return sec.get("lambda_grid", _float_list)
    points = sec.get("lambda_points", int, 21)
    return [float(x) for x in np.linspace(0.0, 1.0, points)]


def _feynman(cfg: ExperimentConfig, ring: RingProgram):
    HF = build_feynman(ring)
    if cfg.disorder and cfg.disorder["strength"] > 0:
        HF = add_hopping_disorder(HF, ring, cfg.disorder["strength"], cfg.disorder["seed"])
    return HF


# ---------------------------------------------------------------------------
# commands: each returns (header, rows, stdout summary lines, extra json)
# ---------------------------------------------------------------------------

def _r(x) -> str:
    return "" if x is None else repr(float(x))


def run_spectrum(cfg: ExperimentConfig):
    sec = cfg.params
    ring = cfg.ring()
    lam = sec.get("lambda", float, 1.0)
    count = sec.get("count", int, min(16, ring.dim))
    space = SpaceDescriptor.of(ring)
    op = interpolate(build_h0(space), build_h1(space), _feynman(cfg, ring), InterpolationPoint(cfg.eta, lam))
    mm = sec.get("matrix_market")
    if mm:
        target = Path(mm) if Path(mm).is_absolute() else cfg.base_dir / mm
        write_matrix_market(op, target, comment=f"eta={cfg.eta!r} lambda={lam!r}")
    spec = eigensystem(op, count)
    rows = [[i, _r(e), _r(res), _r(sector_classify(spec.eigenvectors[:, i], ring).weight_correct)]
            for i, (e, res) in enumerate(zip(spec.eigenvalues, spec.residuals))]
    clusters = cluster_values(spec.eigenvalues, op.norm_bound())
    gap = clusters[1] - clusters[0] if len(clusters) > 1 else 0.0
    summary = [f"n={ring.n} dim={ring.dim} ground={spec.eigenvalues[0]:.12g} gap={gap:.6g}"]
    return ["index", "eigenvalue", "residual", "weight_correct"], rows, summary, None


def run_gaps(cfg: ExperimentConfig):
    ring = cfg.ring()
    prof = gap_scan(ring, cfg.eta, _lambda_grid(cfg.params))
    rows = [[_r(p.lam), _r(p.gap_total), _r(p.gap_sector), _r(p.gap_tower), _r(p.ground_energy)]
            for p in sorted(prof.points, key=lambda q: q.lam)]
    summary = [f"n={ring.n} min gap_total={prof.min_gap:.6g} at lambda={prof.argmin_lambda:g}"]
    return ["lambda", "gap_total", "gap_sector", "gap_tower", "ground_energy"], rows, summary, None


def _sweep_one(args):
    circuit, frac, n, eta, grid = args
    ring = pad_ring(circuit, frac, n=n)
    prof = gap_scan(ring, eta, grid)
    penalty = min(sector_expectation(ring, b, eta) for b in range(1, ring.circuit.dim))
    return n, prof, penalty


def _claim(name, pairs, claim):
    fit = scaling_fit(pairs, min_pairs=3)
    return {"name": name, "exponent": fit.exponent, "prefactor": fit.prefactor, "r_squared": fit.r_squared,
            "claim": claim, "tolerance": EXPONENT_TOL,
            "pass": bool(abs(fit.exponent - claim) <= EXPONENT_TOL),
            "pairs": [[n, g] for n, g in sorted(fit.pairs)]}


def run_sweep(cfg: ExperimentConfig):
    sec = cfg.params
    n_list = sec.get("n_list", _int_list, required=True)
    if len(set(n_list)) < 3:
        raise ConfigError("[sweep] n_list needs at least 3 distinct clock lengths")
    grid = _lambda_grid(sec)
    workers = sec.get("workers", int, 1)
    jobs = [(cfg.circuit, cfg.idle_fraction, n, cfg.eta, grid) for n in sorted(set(n_list))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    results.sort(key=lambda t: t[0])
    rows = []
    for n, prof, _ in results:
        for p in sorted(prof.points, key=lambda q: q.lam):
            rows.append([n, _r(p.lam), _r(p.gap_total), _r(p.gap_sector), _r(p.gap_tower), _r(p.ground_energy)])
    at_one = {n: next(p for p in prof.points if p.lam == 1.0) for n, prof, _ in results}
    step = float(np.max(np.diff(sorted(set(grid)))))
    claims = [
        _claim("min_gap_total", [(n, prof.min_gap) for n, prof, _ in results], -2.0),
        _claim("gap_sector_at_1", [(n, at_one[n].gap_sector) for n, _, _ in results], -1.0),
        _claim("sector_penalty", [(n, pen) for n, _, pen in results], -1.0),
    ]
    argmins = [[n, prof.argmin_lambda] for n, prof, _ in results]
    claims.append({"name": "argmin_lambda", "values": argmins, "claim": 1.0, "tolerance": step,
                   "pass": bool(all(abs(v - 1.0) <= step + 1e-12 for _, v in argmins))})
    summary_json = {"command": "sweep", "eta": cfg.eta, "n_list": [n for n, _, _ in results], "claims": claims}
    summary = [_claim_line(c) for c in claims]
    return ["n", "lambda", "gap_total", "gap_sector", "gap_tower", "ground_energy"], rows, summary, summary_json


def _time_param(sec: _Section, key: str, n: int, default_factor: float) -> float:
    if key in sec.data:
        return sec.get(key, float)
    return sec.get("time_factor", float, default_factor) * n * n


def run_adiabatic(cfg: ExperimentConfig):
    sec = cfg.params
    ring = cfg.ring()
    T = _time_param(sec, "total_time", ring.n, 50.0)
    sched = Schedule(T, sec.get("shape", str, "smoothstep"))
    HF = _feynman(cfg, ring)
    traj = evolve_schedule(ring, cfg.eta, sched, initial_state(ring), sec.get("dt", float),
                           n_samples=sec.get("samples", int, 101), hamiltonian=HF)
    rows = list(csv.reader(io.StringIO(traj.to_csv(ring))))[1:]
    final = traj.states[-1]
    space = SpaceDescriptor.of(ring)
    op = interpolate(build_h0(space), build_h1(space), HF, InterpolationPoint(cfg.eta, 1.0))
    spec = eigensystem(op, min(ring.dim, 2 * ring.circuit.dim + 2))
    ground = spec.eigenvalues <= spec.eigenvalues[0] + 1e-9 * max(1.0, op.norm_bound())
    overlap = float(np.sum(np.abs(spec.eigenvectors[:, ground].conj().T @ final) ** 2))
    rep = sector_classify(final, ring)
    p = measure_answer(final, ring).p_correct
    summary = [f"T={T:g} weight_correct={rep.weight_correct:.12f} ground_overlap={overlap:.12f} p_correct={p:.6f}"]
    return ["time", "lambda", "norm", "weight_correct"], rows, summary, None


def run_quench(cfg: ExperimentConfig):
    sec = cfg.params
    ring = cfg.ring()
    wait = _time_param(sec, "wait_time", ring.n, 5.0)
    samples = sec.get("samples", int, 201)
    res = quench_dispersion(ring, wait, np.linspace(0.0, wait, samples), hamiltonian=_feynman(cfg, ring))
    rows = list(csv.reader(io.StringIO(res.to_csv())))[1:]
    dev = float(np.max(np.abs(res.weight_series - 1.0)))
    summary = [f"wait={wait:g} p_time_average={res.p_time_average:.6f} max_weight_deviation={dev:.3e}"]
    return ["time", "p_correct", "weight_correct", "window_mass"], rows, summary, None


def run_thermal(cfg: ExperimentConfig):
    sec = cfg.params
    ring = cfg.ring()
    kw = dict(gamma=sec.get("gamma", float, 1.0), t_max=sec.get("t_max", float, 20.0 * ring.n),
              trajectories=sec.get("trajectories", int, 200), seed=cfg.seed, dt=sec.get("dt", float, 0.05),
              hopping=sec.get("hopping", float, 0.0))
    E = sec.get("E", float, 8.0 / ring.n)
    if "ratio" in sec.data:
        params = ThermalParams.from_ratio(sec.get("ratio", float), E=E, **kw)
    else:
        params = ThermalParams(E=E, temperature=sec.get("temperature", float, required=True), **kw)
    res = thermal_relax(ring, params)
    arr = res.extra["arrival_times"]
    rows = [[j, "" if math.isnan(a) else _r(a), _r(w)]
            for j, (a, w) in enumerate(zip(arr, res.extra["weight_deviation"]))]
    mean = "nan" if res.arrival_time is None else f"{res.arrival_time:.6g}"
    err = "nan" if res.arrival_stderr is None else f"{res.arrival_stderr:.3g}"
    summary = [f"n={ring.n} r={params.ratio:.6g} mean_arrival={mean} stderr={err} censored={res.censored} "
               f"max_weight_deviation={res.extra['max_weight_deviation']:.3e}"]
    return ["trajectory", "arrival_time", "weight_deviation"], rows, summary, None


def run_wavepacket(cfg: ExperimentConfig):
    sec = cfg.params
    ring = cfg.ring()
    res = wavepacket_run(ring, sec.get("tilt_E", float, 8.0 / ring.n), sec.get("k_width", float, ring.n / 16),
                         sec.get("t_max", float, 4.0 * ring.n), k0=sec.get("k0", float, 0.0),
                         samples=sec.get("samples", int, 400), hamiltonian=_feynman(cfg, ring))
    rows = list(csv.reader(io.StringIO(res.to_csv())))[1:]
    arrival = "censored" if res.arrival_time is None else f"{res.arrival_time:.6g}"
    return ["time", "p_correct", "weight_correct", "window_mass"], rows, [f"arrival={arrival}"], None


def run_tagteam(cfg: ExperimentConfig):
    sec = cfg.params
    tol = sec.get("tolerance", float, 1e-8)
    rep = equivalence_check(tagteam_transform(cfg.circuit), tol)
    row = ["PASS" if rep.passed else "FAIL", _r(rep.max_discrepancy), rep.n_eigenvalues, _r(rep.tolerance)]
    return ["result", "max_discrepancy", "n_eigenvalues", "tolerance"], [row], [rep.line()], None


RUNNERS = {
    "spectrum": run_spectrum, "gaps": run_gaps, "sweep": run_sweep, "adiabatic": run_adiabatic,
    "quench": run_quench, "thermal": run_thermal, "wavepacket": run_wavepacket, "tagteam": run_tagteam,
}


def provenance(cfg: ExperimentConfig) -> str:
    ring = "" if cfg.command in ("sweep", "tagteam") else f" n={cfg.ring().n}"
    return (f"# clockwork {__version__} command={cfg.command} seed={cfg.seed} "
            f"circuit={cfg.circuit_ref}{ring} config_sha256={cfg.source_hash}")


def render_csv(cfg: ExperimentConfig, header, rows) -> str:
    buf = io.StringIO()
    buf.write(provenance(cfg) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def run(cfg: ExperimentConfig, out: Path | None = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    header, rows, summary, extra = RUNNERS[cfg.command](cfg)
    text = render_csv(cfg, header, rows)
    if out is None:
        stdout.write(text)
    else:
        out.write_text(text)
    if extra is not None:
        extra = dict(extra, provenance=provenance(cfg)[2:])
        blob = json.dumps(extra, indent=2, sort_keys=True) + "\n"
        if out is None:
            stderr.write(blob)
        else:
            out.with_name(out.stem + ".summary.json").write_text(blob)
    for line in summary:
        print(line, file=stderr)
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _claim_line(c: dict) -> str:
    verdict = "PASS" if c["pass"] else "FAIL"
    if "exponent" in c:
        return f"{c['name']}: exponent {c['exponent']:.2f} (claim {c['claim']:g}, tol {c['tolerance']:g}) {verdict}"
    vals = ", ".join(f"{v:g} (n={n})" for n, v in c["values"])
    return f"{c['name']}: {vals} (claim {c['claim']:g}, tol {c['tolerance']:g}) {verdict}"


def _read_result_csv(text: str):
    lines = text.splitlines()
    meta = {}
    while lines and lines[0].startswith("#"):
        for tok in lines.pop(0)[1:].split():
            if "=" in tok:
                k, v = tok.split("=", 1)
                meta[k] = v
    rows = list(csv.reader(lines))
    if not rows or len(rows) < 2:
        raise ConfigError("result file has no data rows")
    return meta, rows[0], rows[1:]


def report_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise ConfigError(f"result file not found: {path}")
    text = path.read_text()
    if not text.strip():
        raise ConfigError(f"result file is empty: {path}")
    if path.suffix == ".json":
        try:
            blob = json.loads(text)
            return [_claim_line(c) for c in blob["claims"]]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"malformed summary {path}: {exc}") from exc
    meta, header, rows = _read_result_csv(text)
    command = meta.get("command")
    try:
        if command == "gaps":
            lam = [float(r[header.index("lambda")]) for r in rows]
            gap = [float(r[header.index("gap_total")]) for r in rows]
            step = max(np.diff(lam)) if len(lam) > 1 else 0.0
            arg = lam[int(np.argmin(gap))]
            n = meta.get("n", "?")
            return [_claim_line({"name": "argmin_lambda", "values": [[n, arg]], "claim": 1.0,
                                 "tolerance": step, "pass": abs(arg - 1.0) <= step + 1e-12})]
        if command == "tagteam":
            r = rows[0]
            return [f"tagteam equivalence: max_discrepancy {float(r[1]):.3e} (claim 0, tol {float(r[3]):g}) {r[0]}"]
        if command == "quench":
            p = np.array([float(r[header.index("p_correct")]) for r in rows])
            w = np.array([float(r[header.index("weight_correct")]) for r in rows])
            ok = p.mean() >= 0.4 and np.max(np.abs(w - 1)) <= 1e-8
            return [f"quench: p_time_average {p.mean():.3f} (claim >= 0.4), max weight deviation "
                    f"{np.max(np.abs(w - 1)):.1e} {'PASS' if ok else 'FAIL'}"]
        if command == "thermal":
            arr = [float(r[1]) for r in rows if r[1]]
            return [f"thermal: mean arrival {np.mean(arr):.4g} over {len(arr)} trajectories, "
                    f"{len(rows) - len(arr)} censored"]
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"malformed result file {path}: {exc}") from exc
    if command not in COMMANDS:
        raise ConfigError(f"{path} has no clockwork provenance header")
    return [f"{command}: {len(rows)} rows, no claim to check"]


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _u64(text: str) -> int:
    val = int(text)
    if not 0 <= val < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clockwork", description=__doc__.splitlines()[0],
                                     epilog="config schema:\n" + SCHEMA,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"clockwork {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment", epilog=f"CSV columns: {COLUMNS[name]}",
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path)
        p.add_argument("--seed", type=_u64)
    rp = sub.add_parser("report", help="summarize result files claim by claim")
    rp.add_argument("results", nargs="+", type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            for path in args.results:
                for line in report_lines(path):
                    print(line)
            return 0
        cfg = load_config(args.config, args.command, args.seed)
        return run(cfg, args.out)
    except (ConfigError, CircuitParseError, FileNotFoundError) as exc:
        print(f"clockwork: config error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, StepSizeError, BasisOverflowError, StructuralError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"clockwork: numerical error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"clockwork: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
