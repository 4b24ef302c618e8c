"""Experiment driver: config files in, run directories out.

A config is flat `key = value` text ('#' starts a comment). Recognized keys:

    kind          optimize | correlator | ybar | energy-scan | zne
    L             chain length, or comma list to sweep (e.g. 8,10,12)
    b             boundary coupling, 0 (open) or 1 (periodic)
    v             impurity strength, or comma list (inf allowed)
    j             impurity site, 1-based; default L/2
    N             ansatz layers; default L/2
    eta           learning rate (default 0.05)
    max_iters     optimizer iteration cap (default 500)
    runs, shots   measurement repetitions and shots per run; defaults are
                  10 x 8192 for correlators and 5 x 1024 otherwise
    analytic      true for infinite-shot (exact) measurement
    seed          base RNG seed (default 0)
    p2, p1        two- and one-qubit error rates (zne; defaults 0.01, 0)
    factors       noise factors (zne; default 1.0,1.2,...,3.0)
    degree        extrapolation polynomial degree (zne; default 2)
    trajectories  Monte Carlo trajectories per factor (zne; default 10000)

Each run writes its data files plus a record.json manifest under the output
directory. Ground-state circuits are always optimized classically; shots and
noise enter only in the measurement stage that follows.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .ansatz import AnsatzSpec, prepare_state
from .measure import ShotPlan, sample_pauli_expectation
from .model import (
    ModelParams,
    build_hamiltonian,
    dense_matrix,
    energy_scan,
    energy_scan_csv,
    exact_ground,
)
from .observables import (
    correlator_csv,
    correlator_profile_shot,
    ybar_exact,
    ybar_hadamard,
)
from .qng import OptimizeOptions, optimize, trace_to_csv
from .zne import NoiseModel, ZneSchedule, ansatz_circuit, zne_pipeline

KINDS = ("optimize", "correlator", "ybar", "energy-scan", "zne")
ORACLE_LIMIT = 14


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    L: tuple = ()
    b: int = 0
    v: tuple = (0.0,)
    j: int | None = None
    N: int | None = None
    eta: float = 0.05
    max_iters: int = 500
    runs: int | None = None
    shots: int | None = None
    analytic: bool = False
    seed: int = 0
    p2: float = 0.01
    p1: float = 0.0
    factors: tuple | None = None
    degree: int = 2
    trajectories: int = 10_000

    def default_runs(self) -> int:
        if self.runs is not None:
            return self.runs
        return 10 if self.kind == "correlator" else 5

    def default_shots(self) -> int:
        if self.shots is not None:
            return self.shots
        return 8192 if self.kind == "correlator" else 1024


_BOOLS = {"true": True, "false": False, "1": True, "0": False,
          "yes": True, "no": False}


def _parse_value(key: str, text: str):
    if key in ("kind",):
        return text
    if key == "L":
        return tuple(int(tok) for tok in text.split(","))
    if key == "v":
        return tuple(float(tok) for tok in text.split(","))
    if key == "factors":
        return tuple(float(tok) for tok in text.split(","))
    if key == "analytic":
        try:
            return _BOOLS[text.lower()]
        except KeyError:
            raise ValueError(f"analytic must be true or false, got {text!r}")
    if key == "eta" or key == "p2" or key == "p1":
        return float(text)
    return int(text)


def parse_config_text(text: str) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        try:
            raw[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}")
    if "kind" not in raw:
        raise ValueError("missing required key 'kind'")
    if "L" not in raw:
        raise ValueError("missing required key 'L'")
    return ExperimentConfig(**raw)


def load_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


def config_canonical(config: ExperimentConfig) -> str:
    """Stable one-key-per-line rendering, input to the config hash."""
    lines = []
    for f in sorted(fields(ExperimentConfig), key=lambda f: f.name):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            rendered = ",".join(repr(x) for x in value)
        else:
            rendered = repr(value)
        lines.append(f"{f.name}={rendered}")
    return "\n".join(lines) + "\n"


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(config_canonical(config).encode()).hexdigest()


def validate(config: ExperimentConfig) -> list:
    """All problems with the config, as human-readable strings."""
    diags = []
    if config.kind not in KINDS:
        diags.append(f"kind must be one of {', '.join(KINDS)}; got {config.kind!r}")
        return diags
    if not config.L:
        diags.append("L must list at least one chain length")
    circuit_kind = config.kind != "energy-scan"
    for L in config.L:
        if L < 1:
            diags.append(f"L={L} is not a valid chain length")
            continue
        if circuit_kind and L < 2:
            diags.append(f"L={L}: circuit experiments need at least 2 sites")
        if circuit_kind and L > ORACLE_LIMIT:
            diags.append(f"L={L}: oracle range exceeded (dense reference "
                         f"needs L <= {ORACLE_LIMIT})")
        if circuit_kind and config.N is None and L % 2 != 0:
            diags.append(f"L={L} is odd; N defaults to L/2, so set N explicitly")
        for v in config.v:
            try:
                ModelParams(L=L, b=config.b, v=v, j=config.j)
            except ValueError as exc:
                diags.append(f"L={L}, v={v:g}: {exc}")
    if config.N is not None and config.N < 1:
        diags.append("N must be at least 1")
    if config.eta <= 0:
        diags.append("eta must be positive")
    if config.max_iters < 1:
        diags.append("max_iters must be at least 1")
    if config.default_runs() < 1:
        diags.append("runs must be positive")
    if config.default_shots() < 1:
        diags.append("shots must be positive")
    if config.seed < 0:
        diags.append("seed must be non-negative")
    if config.kind == "zne":
        if config.trajectories < 1:
            diags.append("trajectories must be positive")
        try:
            NoiseModel(p2=config.p2, p1=config.p1)
        except ValueError as exc:
            diags.append(str(exc))
        try:
            ZneSchedule(factors=config.factors or (), degree=config.degree)
        except ValueError as exc:
            diags.append(str(exc))
    return diags


@dataclass
class RunRecord:
    kind: str
    config_hash: str
    config: str
    outputs: list
    results: dict
    wall_time_s: float
    versions: dict

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "config_hash": self.config_hash,
            "config": self.config,
            "outputs": self.outputs,
            "results": self.results,
            "wall_time_s": self.wall_time_s,
            "versions": self.versions,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _spec_for(config: ExperimentConfig, L: int) -> AnsatzSpec:
    N = config.N if config.N is not None else max(1, L // 2)
    boundary = "periodic" if config.b == 1 else "open"
    return AnsatzSpec(L=L, N=N, boundary=boundary)


def _vtag(v: float) -> str:
    return f"{v:g}".replace(".", "p").replace("-", "m")


def _instances(config: ExperimentConfig):
    idx = 0
    for L in config.L:
        for v in config.v:
            yield idx, L, v
            idx += 1


def _optimized(config: ExperimentConfig, L: int, v: float, seed: int):
    mp = ModelParams(L=L, b=config.b, v=v, j=config.j)
    spec = _spec_for(config, L)
    options = OptimizeOptions(eta=config.eta, max_iters=config.max_iters,
                              seed=seed)
    state, trace = optimize(spec, mp, options)
    return mp, spec, state, trace


def _measured_energy(H, state, plan_base: ShotPlan, runs: int, tag: str):
    """Per-term sampling of <H>, repeated over runs; mean and spread."""
    per_run = []
    for run in range(runs):
        total = 0.0
        for k, (coeff, term) in enumerate(H.terms()):
            rec = sample_pauli_expectation(
                state, term, plan_base, circuit_id=f"energy:{tag}:run{run}:t{k}")
            total += coeff.real * rec.value
        per_run.append(total)
    arr = np.array(per_run)
    se = float(arr.std() / np.sqrt(runs)) if runs > 1 else 0.0
    return float(arr.mean()), se


def _write(out_dir: Path, name: str, text: str, outputs: list):
    (out_dir / name).write_text(text)
    outputs.append(name)


def _dump_instance(config, mp, state_vec, out_dir, tag, outputs,
                   dump_hamiltonian, dump_state):
    if dump_hamiltonian:
        name = f"hamiltonian_{tag}.npy"
        np.save(out_dir / name, dense_matrix(build_hamiltonian(mp)))
        outputs.append(name)
    if dump_state:
        name = f"state_{tag}.npy"
        np.save(out_dir / name, state_vec.amplitudes)
        outputs.append(name)


def _run_optimize(config, out_dir, outputs, dump_hamiltonian, dump_state):
    results = {"instances": []}
    runs, shots = config.default_runs(), config.default_shots()
    for idx, L, v in _instances(config):
        seed = config.seed + idx
        mp, spec, state, trace = _optimized(config, L, v, seed)
        tag = f"L{L}_v{_vtag(v)}"
        _write(out_dir, f"trace_{tag}.csv", trace_to_csv(trace), outputs)
        reference = exact_ground(mp).ground_energy
        psi = prepare_state(spec, state.params)
        plan = ShotPlan(shots=shots, seed=seed, analytic=config.analytic)
        H = build_hamiltonian(mp)
        measured, se = _measured_energy(H, psi, plan, runs, tag)
        _dump_instance(config, mp, psi, out_dir, tag, outputs,
                       dump_hamiltonian, dump_state)
        results["instances"].append({
            "L": L, "v": v, "b": config.b,
            "energy": state.energy,
            "exact_energy": reference,
            "rel_error": abs(state.energy - reference) / abs(reference),
            "iterations": state.iteration,
            "converged": state.converged,
            "measured_energy": measured,
            "measured_std_error": se,
            "runs": runs, "shots": shots,
        })
    return results


def _run_correlator(config, out_dir, outputs, dump_hamiltonian, dump_state):
    results = {"instances": []}
    runs, shots = config.default_runs(), config.default_shots()
    for idx, L, v in _instances(config):
        seed = config.seed + idx
        mp, spec, state, _ = _optimized(config, L, v, seed)
        tag = f"L{L}_v{_vtag(v)}"
        psi = prepare_state(spec, state.params)
        plan = ShotPlan(shots=shots, seed=seed, analytic=config.analytic)
        rows = correlator_profile_shot(psi, plan, runs=runs)
        _write(out_dir, f"correlator_{tag}.csv", correlator_csv(rows), outputs)
        _dump_instance(config, mp, psi, out_dir, tag, outputs,
                       dump_hamiltonian, dump_state)
        results["instances"].append({
            "L": L, "v": v, "j": mp.j, "converged": state.converged,
            "profile": [[r, value, se] for r, value, se in rows],
            "runs": runs, "shots": shots,
        })
    return results


def _run_ybar(config, out_dir, outputs, dump_hamiltonian, dump_state):
    results = {"instances": []}
    runs, shots = config.default_runs(), config.default_shots()
    rows = []
    for idx, L, v in _instances(config):
        seed = config.seed + idx
        mp, spec, state, _ = _optimized(config, L, v, seed)
        psi = prepare_state(spec, state.params)
        per_run = []
        for run in range(runs):
            plan = ShotPlan(shots=shots, seed=seed, analytic=config.analytic)
            rec = ybar_hadamard(spec, state.params, plan,
                                circuit_id=f"ybar:L{L}:v{_vtag(v)}:run{run}")
            per_run.append(rec.value)
        arr = np.array(per_run)
        estimate = float(arr.mean())
        se = float(arr.std() / np.sqrt(runs)) if runs > 1 else 0.0
        exact = ybar_exact(psi)
        tag = f"L{L}_v{_vtag(v)}"
        _dump_instance(config, mp, psi, out_dir, tag, outputs,
                       dump_hamiltonian, dump_state)
        rows.append((L, estimate, se, exact))
        results["instances"].append({
            "L": L, "v": v, "estimate": estimate, "std_error": se,
            "exact": exact, "converged": state.converged,
            "runs": runs, "shots": shots,
        })
    lines = ["L,estimate,std_error,exact"]
    for L, est, se, exact in rows:
        lines.append(f"{L},{est:.17g},{se:.17g},{exact:.17g}")
    _write(out_dir, "ybar.csv", "\n".join(lines) + "\n", outputs)
    return results


def _run_energy_scan(config, out_dir, outputs, dump_hamiltonian, dump_state):
    results = {"instances": []}
    for L in config.L:
        rows = energy_scan(L, config.b, config.v, config.j)
        _write(out_dir, f"scan_L{L}.csv", energy_scan_csv(rows), outputs)
        results["instances"].append({"L": L, "points": len(rows)})
        if dump_hamiltonian:
            for v in config.v:
                mp = ModelParams(L=L, b=config.b, v=v, j=config.j)
                name = f"hamiltonian_L{L}_v{_vtag(v)}.npy"
                np.save(out_dir / name, dense_matrix(build_hamiltonian(mp)))
                outputs.append(name)
    return results


def _run_zne(config, out_dir, outputs, dump_hamiltonian, dump_state):
    results = {"instances": []}
    noise = NoiseModel(p2=config.p2, p1=config.p1)
    schedule = ZneSchedule(factors=config.factors or (), degree=config.degree)
    for idx, L, v in _instances(config):
        seed = config.seed + idx
        mp, spec, state, _ = _optimized(config, L, v, seed)
        circuit = ansatz_circuit(spec, state.params)
        H = build_hamiltonian(mp)
        report = zne_pipeline(circuit, H, noise, schedule,
                              config.trajectories, seed=seed)
        tag = f"L{L}_v{_vtag(v)}"
        _write(out_dir, f"zne_{tag}.json",
               json.dumps(report, indent=2, sort_keys=True) + "\n", outputs)
        psi = prepare_state(spec, state.params)
        _dump_instance(config, mp, psi, out_dir, tag, outputs,
                       dump_hamiltonian, dump_state)
        results["instances"].append({
            "L": L, "v": v, "converged": state.converged,
            "unmitigated": report["estimates"][0],
            "extrapolated": report["extrapolated"],
            "noiseless_reference": report["noiseless_reference"],
            "exact_energy": exact_ground(mp).ground_energy,
        })
    return results


_RUNNERS = {
    "optimize": _run_optimize,
    "correlator": _run_correlator,
    "ybar": _run_ybar,
    "energy-scan": _run_energy_scan,
    "zne": _run_zne,
}


def run(config: ExperimentConfig, out_dir,
        dump_hamiltonian: bool = False, dump_state: bool = False) -> RunRecord:
    """Execute one experiment; write data files and record.json."""
    diags = validate(config)
    if diags:
        raise ValueError("invalid config: " + "; ".join(diags))
    if dump_state and config.kind == "energy-scan":
        raise ValueError("dump_state is not available for energy-scan: "
                         "no state is prepared")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    outputs = []
    results = _RUNNERS[config.kind](config, out_dir, outputs,
                                    dump_hamiltonian, dump_state)
    record = RunRecord(
        kind=config.kind,
        config_hash=config_hash(config),
        config=config_canonical(config),
        outputs=outputs,
        results=results,
        wall_time_s=time.monotonic() - started,
        versions={
            "python": ".".join(str(x) for x in sys.version_info[:3]),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "isingdefect": __version__,
        },
    )
    (out_dir / "record.json").write_text(record.to_json() + "\n")
    return record


def _summarize(record: RunRecord) -> str:
    lines = [f"kind: {record.kind}  config: {record.config_hash[:12]}"]
    for inst in record.results.get("instances", []):
        parts = []
        for key in ("L", "v", "energy", "exact_energy", "rel_error",
                    "measured_energy", "estimate", "exact", "extrapolated",
                    "noiseless_reference", "points", "converged"):
            if key in inst:
                value = inst[key]
                if isinstance(value, float):
                    parts.append(f"{key}={value:.6g}")
                else:
                    parts.append(f"{key}={value}")
        lines.append("  " + "  ".join(parts))
    lines.append(f"outputs: {', '.join(record.outputs)}")
    return "\n".join(lines)


def _all_converged(record: RunRecord) -> bool:
    return all(inst.get("converged", True)
               for inst in record.results.get("instances", []))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="isingdefect",
        description="Ising-impurity experiment driver (see module docstring "
                    "for the config schema)")
    sub = parser.add_subparsers(dest="command", required=True)
    p_val = sub.add_parser("validate", help="check a config, print diagnostics")
    p_val.add_argument("config")
    p_run = sub.add_parser("run", help="execute a config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out-dir", default=None)
    p_run.add_argument("--shots", type=int, default=None)
    p_run.add_argument("--analytic", action="store_true")
    p_run.add_argument("--dump-hamiltonian", action="store_true")
    p_run.add_argument("--dump-state", action="store_true")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if args.command == "validate":
        diags = validate(config)
        for d in diags:
            print(d)
        print("ok" if not diags else f"{len(diags)} problem(s) found")
        return 0 if not diags else 1

    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.shots is not None:
        config = replace(config, shots=args.shots)
    if args.analytic:
        config = replace(config, analytic=True)
    diags = validate(config)
    if diags:
        for d in diags:
            print(d, file=sys.stderr)
        return 1
    out_dir = args.out_dir or f"runs/{config.kind}-{config_hash(config)[:12]}"
    try:
        record = run(config, out_dir,
                     dump_hamiltonian=args.dump_hamiltonian,
                     dump_state=args.dump_state)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    print(_summarize(record))
    print(f"written to {out_dir}")
    return 0 if _all_converged(record) else 2


if __name__ == "__main__":
    sys.exit(main())
