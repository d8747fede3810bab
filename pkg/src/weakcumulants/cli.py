"""Batch front-end: ``scenario list``, ``run``, ``verify`` and ``sweep``.

Configs are JSON files validated against ``CONFIG_SCHEMA``. Results are
written as JSON (sweeps as CSV) with sorted keys and round-trip float
formatting, so identical configs give byte-identical output.

Exit codes: 0 success, 1 a verification failed, 2 bad config,
3 degenerate post-selection, 4 size or memory budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .engine import (Experiment, PointerConfig, expectation_product, pointer_moments, run_exact,
                     run_perturbative, run_trotter_simultaneous)
from .errors import DegeneratePostselectionError, SingularEtaError, SizeError
from .harness import (DEFAULT_LEVELS, WeakValueBundle, appendix_cumulant_identity, covariance_counterexample,
                      heisenberg_check, reports_to_json, theorem_sides, verify_appendix_oracle,
                      verify_cumulant_theorem, verify_lowering, verify_n1)
from .partitions import MomentFunctional, all_subsets, cumulant_table
from .pointer import PointerGrid, load_wavefunction_csv, moment_set, theta_factor, xi_factor
from .quantum import EvolutionChain, Observable, SystemState, UnitaryOp, weak_value_functional
from .scenarios import SCENARIOS, get_scenario, pointer_family

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_SIZE = 0, 1, 2, 3, 4

ENGINES = ("exact", "perturbative", "trotter", "simultaneous")
FAMILIES = ("gaussian", "real_nongaussian", "chirped", "boosted", "random")
VERIFICATIONS = ("cumulant_theorem", "n1", "lowering_n1", "lowering_cumulant", "lowering_corollary",
                 "appendix_oracle", "appendix_identity", "heisenberg", "covariance_counterexample")

_NUMBER = {"type": "number"}
_COMPLEX = {"oneOf": [_NUMBER, {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}]}
_VECTOR = {"type": "array", "items": _COMPLEX, "minItems": 1}
_MATRIX = {"type": "array", "items": _VECTOR, "minItems": 1}
_POINTER = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "family": {"enum": list(FAMILIES)},
        "params": {"type": "object"},
        "csv": {"type": "string"},
        "s": {"enum": ["q", "p"]},
        "r": {"enum": ["q", "p"]},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": {"type": "string"},
        "scenario_params": {"type": "object"},
        "chain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["psi_i", "psi_f", "unitaries", "observables"],
            "properties": {
                "psi_i": _VECTOR,
                "psi_f": _VECTOR,
                "unitaries": {"type": "array", "items": _MATRIX, "minItems": 1},
                "observables": {"type": "array", "items": _MATRIX},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"q_min": _NUMBER, "q_max": _NUMBER, "m_points": {"type": "integer"}},
        },
        "pointers": {"oneOf": [_POINTER, {"type": "array", "items": _POINTER, "minItems": 1}]},
        "g": {"oneOf": [_NUMBER, {"type": "array", "items": _NUMBER, "minItems": 1}]},
        "g_levels": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "engine": {"enum": list(ENGINES)},
        "order": {"type": "integer", "minimum": 0, "maximum": 4},
        "trotter_steps": {"type": "integer", "minimum": 1, "maximum": 10000},
        "verifications": {"type": "array", "items": {"enum": list(VERIFICATIONS)}, "minItems": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
    "oneOf": [{"required": ["scenario"]}, {"required": ["chain"]}],
}


class ConfigError(ValueError):
    pass


# ---- config -> experiment -------------------------------------------------------

def _complex(x) -> complex:
    return complex(x[0], x[1]) if isinstance(x, list) else complex(x)


def load_config(path, seed: int | None = None) -> dict:
    """Read and validate a config; ``seed`` overrides the config's seed."""
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    if seed is not None:
        cfg["seed"] = seed
    return cfg


def _build_chain(cfg: dict) -> EvolutionChain:
    if "scenario" in cfg:
        desc = get_scenario(cfg["scenario"])
        params = dict(cfg.get("scenario_params", {}))
        if "seed" in cfg and "seed" in desc.params:
            params["seed"] = cfg["seed"]
        return desc.build(**params)
    entry = cfg["chain"]
    return EvolutionChain(
        SystemState(np.array([_complex(v) for v in entry["psi_i"]])),
        SystemState(np.array([_complex(v) for v in entry["psi_f"]])),
        [UnitaryOp(_matrix(m)) for m in entry["unitaries"]],
        [Observable(_matrix(m)) for m in entry["observables"]],
    )


def _matrix(rows) -> np.ndarray:
    return np.array([[_complex(v) for v in row] for row in rows])


def _pointer_specs(cfg: dict, n: int) -> list[dict]:
    specs = cfg.get("pointers", {})
    if isinstance(specs, dict):
        return [dict(specs) for _ in range(n)]
    if len(specs) != n:
        raise ConfigError(f"{len(specs)} pointer specs for {n} observables")
    return [dict(s) for s in specs]


def _couplings(cfg: dict, n: int) -> list[float]:
    g = cfg.get("g", 0.01)
    gs = [g] * n if isinstance(g, (int, float)) else list(g)
    if len(gs) != n:
        raise ConfigError(f"{len(gs)} couplings for {n} observables")
    return [float(x) for x in gs]


def build_experiment(cfg: dict) -> Experiment:
    chain = _build_chain(cfg)
    grid = PointerGrid(**cfg.get("grid", {}))
    pointers = []
    for k, (entry, g) in enumerate(zip(_pointer_specs(cfg, chain.n), _couplings(cfg, chain.n))):
        if "csv" in entry:
            phi = load_wavefunction_csv(entry["csv"], normalize=True)
        else:
            params = dict(entry.get("params", {}))
            family = entry.get("family", "gaussian")
            if family == "random" and "seed" not in params:
                params["seed"] = cfg.get("seed", 0) + k
            phi = pointer_family(family, grid, **params)
        pointers.append(PointerConfig(phi, entry.get("s", "p"), entry.get("r", "q"), g))
    return Experiment(chain, pointers)


# ---- JSON helpers ---------------------------------------------------------------

def _key(subset) -> str:
    return ",".join(str(k) for k in subset)


def _encode(z) -> dict | float | None:
    if z is None:
        return None
    z = complex(z)
    return {"re": z.real + 0.0, "im": z.imag + 0.0}


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---- commands ---------------------------------------------------------------------

def cmd_scenario_list(pattern: str | None = None) -> str:
    lines = []
    for name in sorted(SCENARIOS):
        if pattern and pattern not in name:
            continue
        desc = SCENARIOS[name]
        lines.append(f"{name}\t{json.dumps(desc.params, sort_keys=True)}\t{desc.description}")
    return "\n".join(lines) + ("\n" if lines else "")


def _moments(exp: Experiment, cfg: dict, threads: int | None) -> MomentFunctional:
    engine = cfg.get("engine", "exact")
    if engine == "exact":
        return pointer_moments(exp, max_workers=threads)
    if engine == "simultaneous":
        return pointer_moments(exp, mode="simultaneous", max_workers=threads)
    if engine == "perturbative":
        order = cfg.get("order", 2)
        return MomentFunctional(exp.n, {s: run_perturbative(exp, s, order) for s in all_subsets(exp.n)})
    if exp.n != 2:
        raise ConfigError("the trotter engine needs exactly two pointers")
    steps = cfg.get("trotter_steps", 64)
    values = {s: expectation_product(run_exact(exp, s), [exp.pointers[k - 1].r for k in s])
              for s in [(1,), (2,)]}
    values[(1, 2)] = expectation_product(run_trotter_simultaneous(exp, steps), [p.r for p in exp.pointers])
    return MomentFunctional(2, values)


def cmd_run(cfg: dict, threads: int | None = None) -> dict:
    exp = build_experiment(cfg)
    moments = _moments(exp, cfg, threads)
    mode = "simultaneous" if cfg.get("engine") in ("simultaneous", "trotter") else "sequential"
    result = {"inputs": cfg, "expectations": {_key(s): moments(s).real for s in all_subsets(exp.n)}} \
        if exp.n else {"inputs": cfg, "expectations": {}}
    if exp.n:
        result["cumulants"] = {_key(s): complex(v).real for s, v in cumulant_table(moments).items()}
        wv = weak_value_functional(exp.chain)
        result["weak_values"] = {_key(s): _encode(wv(s)) for s in all_subsets(exp.n)}
        if mode == "simultaneous":
            sv = weak_value_functional(exp.chain, "simultaneous")
            result["simultaneous_weak_values"] = {_key(s): _encode(sv(s)) for s in all_subsets(exp.n)}
        result["weak_cumulant"] = _encode(cumulant_table(weak_value_functional(exp.chain, mode))[
            tuple(range(1, exp.n + 1))])
        result["xi"] = _encode(xi_factor([(p.phi, p.r, p.s) for p in exp.pointers]))
        try:
            result["theta"] = _encode(theta_factor([(p.phi, p.s) for p in exp.pointers]))
        except SingularEtaError:
            result["theta"] = None
    return result


def _levels(cfg: dict) -> list[float]:
    levels = [float(x) for x in cfg.get("g_levels", DEFAULT_LEVELS)]
    if len(levels) < 3:
        raise ConfigError("need at least three g levels")
    if len(set(levels)) != len(levels):
        raise ConfigError("duplicate g levels")
    return levels


def cmd_verify(cfg: dict, threads: int | None = None) -> list:
    exp = build_experiment(cfg)
    levels = _levels(cfg)
    mode = "simultaneous" if cfg.get("engine") in ("simultaneous", "trotter") else "sequential"
    default = ["cumulant_theorem"] if exp.n >= 2 else ["n1"]
    reports = []
    for name in cfg.get("verifications", default):
        if name == "cumulant_theorem":
            reports.append(verify_cumulant_theorem(exp, levels=levels, mode=mode, max_workers=threads))
        elif name == "n1":
            reports.append(verify_n1(exp, levels=levels))
        elif name == "lowering_n1":
            reports.append(verify_lowering(exp, "n1", levels))
        elif name == "lowering_cumulant":
            reports.append(verify_lowering(exp, "cumulant", levels))
        elif name == "lowering_corollary":
            reports.append(verify_lowering(exp, "anticumulant_corollary", levels))
        elif name == "appendix_oracle":
            reports.append(verify_appendix_oracle(exp, levels))
        elif name == "appendix_identity":
            ms = [moment_set(p.phi) for p in exp.pointers]
            reports.append(appendix_cumulant_identity(ms[0], ms[1], WeakValueBundle.from_chain(exp.chain),
                                                      *exp.couplings))
        elif name == "heisenberg":
            reports.append(heisenberg_check(exp))
        elif name == "covariance_counterexample":
            reports.append(covariance_counterexample(exp, levels, max_workers=threads))
    return reports


def cmd_sweep(cfg: dict, threads: int | None = None) -> str:
    exp = build_experiment(cfg)
    levels = _levels(cfg)
    mode = "simultaneous" if cfg.get("engine") in ("simultaneous", "trotter") else "sequential"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["g_product", "lhs", "rhs", "residual"] + [f"g_{k}" for k in range(1, exp.n + 1)])
    for level in levels:
        e = exp.scaled(level)
        lhs, rhs = theorem_sides(e, mode, threads)
        writer.writerow([repr(float(np.prod(e.couplings))), repr(float(lhs)), repr(float(rhs)),
                         repr(abs(lhs - rhs))] + [repr(g) for g in e.couplings])
    return buf.getvalue()


# ---- entry point --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write results here instead of stdout")
    common.add_argument("--threads", type=int, default=None, help="worker threads for independent runs")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")

    parser = argparse.ArgumentParser(prog="weakcumulants", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    scen = sub.add_parser("scenario", help="scenario registry")
    scen_sub = scen.add_subparsers(dest="action", required=True)
    lst = scen_sub.add_parser("list", parents=[common], help="list registered scenarios")
    lst.add_argument("filter", nargs="?", default=None)
    for name, text in [("run", "run one experiment"), ("verify", "run theorem checks"),
                       ("sweep", "residual table over g levels")]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("config", help="JSON config file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "scenario":
            _emit(cmd_scenario_list(args.filter), args.out)
            return EXIT_OK
        cfg = load_config(args.config, args.seed)
        if args.command == "run":
            _emit(_dump(cmd_run(cfg, args.threads)), args.out)
            return EXIT_OK
        if args.command == "verify":
            reports = cmd_verify(cfg, args.threads)
            _emit(reports_to_json(reports) + "\n", args.out)
            for r in reports:
                print(r.summary(), file=sys.stderr)
            return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED
        _emit(cmd_sweep(cfg, args.threads), args.out)
        return EXIT_OK
    except DegeneratePostselectionError as exc:
        print(f"error: degenerate post-selection: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (SizeError, MemoryError) as exc:
        print(f"error: size limit: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
