"""Config-driven experiment runner.

    localoco --config exp.json [--out DIR] [--seed N] [--jobs K]

Exit status: 0 all bound checks pass, 1 some check failed, 2 bad config or
unwritable output, 3 numerical failure (the failing run id is printed).
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import jsonschema
import numpy as np

from localoco.benchmark import (
    RunResult,
    SequenceSpec,
    generate_sequence,
    infeasible_start,
    run_algorithm,
    sequence_digest,
)
from localoco.core import ConstantsBundle
from localoco.errors import LocalOCOError, NumericalError, UsageError

log = logging.getLogger("localoco")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

SPEC_KEYS = [f.name for f in fields(SequenceSpec) if f.name != "seed"]
CONSTANT_KEYS = [f.name for f in fields(ConstantsBundle)]

_num = {"type": "number"}
_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_spec_props = {
    "dim": {"type": "integer", "minimum": 1},
    "horizon": {"type": "integer", "minimum": 1},
    "ambient_radius": _num,
    "drift_f": _num,
    "drift_g": _num,
    "g_level": _num,
    "eig_f": _pair,
    "eig_g": _pair,
    "dist": _num,
    "alpha": _num,
    "turn": _num,
    "start": {"enum": ["center", "infeasible"]},
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        **_spec_props,
        "name": {"type": "string"},
        "replications": {"type": "integer", "minimum": 1},
        "base_seed": {"type": "integer"},
        "out": {"type": "string"},
        "transcript": {"type": "boolean"},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "array", "minItems": 1, "items": v} for k, v in _spec_props.items()},
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"contraction_slack": _num, "bound_slack": _num},
        },
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _num for k in CONSTANT_KEYS},
        },
    },
}


@dataclass
class ExperimentConfig:
    spec: dict
    sweep: dict = field(default_factory=dict)
    replications: int = 1
    base_seed: int = 0
    out: str = "results"
    name: str = "experiment"
    transcript: bool = False
    contraction_slack: float = 1e-6
    bound_slack: float = 1e-4
    constants: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(raw, CONFIG_SCHEMA)
        except jsonschema.ValidationError as e:
            raise UsageError(f"config: {e.message} (at {'/'.join(map(str, e.absolute_path)) or 'top level'})") from None
        tol = raw.get("tolerances", {})
        cfg = cls(
            spec={k: raw[k] for k in SPEC_KEYS if k in raw},
            sweep=dict(raw.get("sweep", {})),
            replications=raw.get("replications", 1),
            base_seed=raw.get("base_seed", 0),
            out=raw.get("out", "results"),
            name=raw.get("name", "experiment"),
            transcript=raw.get("transcript", False),
            contraction_slack=tol.get("contraction_slack", 1e-6),
            bound_slack=tol.get("bound_slack", 1e-4),
            constants=dict(raw.get("constants", {})),
        )
        for point in cfg.points():
            cfg.sequence_spec(point, cfg.base_seed)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as e:
            raise UsageError(f"cannot read config {path}: {e}") from None
        except json.JSONDecodeError as e:
            raise UsageError(f"config {path} is not valid JSON: {e}") from None
        return cls.from_dict(raw)

    def points(self) -> list[dict]:
        """Cartesian product of the sweep lists (one empty point when there is no sweep)."""
        keys = sorted(self.sweep)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.sweep[k] for k in keys))]

    def sequence_spec(self, point: dict, seed: int) -> SequenceSpec:
        d = {**self.spec, **point, "seed": seed}
        for k in ("eig_f", "eig_g"):
            if k in d:
                d[k] = tuple(d[k])
        return SequenceSpec(**d)


@dataclass
class RunOutcome:
    run_id: str
    point: dict
    seed: int
    result: RunResult
    checks: dict
    digest: str


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and not np.isfinite(x)) else repr(float(x))


def evaluate_checks(res: RunResult, contraction_slack: float, bound_slack: float) -> dict:
    m = res.metrics
    bounds = res.regret_bounds()
    viol = res.contraction_violations(contraction_slack)
    return {
        "per_step_contraction": {"passed": not viol, "violations": [t for t, _, _ in viol]},
        "regret_bound": {"passed": m.R_d <= bounds["R_d_bound"] + bound_slack, "value": m.R_d, "bound": bounds["R_d_bound"]},
        "penalty_bound": {"passed": m.P_g <= bounds["P_g_bound"] + bound_slack, "value": m.P_g, "bound": bounds["P_g_bound"]},
        "penalty_ordering": {"passed": m.P_g >= m.P_g_prime, "P_g": m.P_g, "P_g_prime": m.P_g_prime},
    }


def execute_run(cfg: ExperimentConfig, point_idx: int, point: dict, rep: int) -> RunOutcome:
    seed = cfg.base_seed + rep
    run_id = f"p{point_idx:02d}_r{rep:02d}"
    spec = cfg.sequence_spec(point, seed)
    problem = generate_sequence(spec)
    k = problem.constants()
    if cfg.constants:
        k = k.replace(**cfg.constants)
    a1 = infeasible_start(problem) if spec.start == "infeasible" else None
    try:
        res = run_algorithm(problem, a1=a1, constants=k)
    except NumericalError as e:
        raise NumericalError(f"run {run_id}: {e}", e.iterate, e.residual) from e
    if res.contraction is None:
        raise UsageError(f"run {run_id}: alpha={k.alpha} gives contraction constant 1; bounds are undefined")
    checks = evaluate_checks(res, cfg.contraction_slack, cfg.bound_slack)
    return RunOutcome(run_id, point, seed, res, checks, sequence_digest(problem))


def round_csv(res: RunResult) -> str:
    """Per-round table; floats are written with repr so reruns are byte-identical."""
    n = res.problem.dim
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["t", "case"] + [f"a_{i}" for i in range(n)] + [f"xstar_{i}" for i in range(n)]
        + ["g_at", "f_gap", "ratio", "grad_points"]
    )
    for i, rec in enumerate(res.records):
        w.writerow(
            [rec.t, rec.case.value]
            + [_fmt(v) for v in rec.action]
            + [_fmt(v) for v in res.solutions[i].x_star]
            + [_fmt(rec.g_at), _fmt(res.metrics.f_gaps[i]), _fmt(res.metrics.ratios[i]), rec.gradient_points]
        )
    return buf.getvalue()


def transcript_csv(res: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "kind", "point", "answer_digest"])
    for rec in res.records:
        for e in rec.transcript:
            w.writerow([rec.t, e.kind, " ".join(repr(v) for v in e.point), e.digest])
    return buf.getvalue()


def summarize(cfg: ExperimentConfig, outcomes: list[RunOutcome], raw_config: dict | None = None) -> dict:
    blocks = []
    for idx, point in enumerate(cfg.points()):
        runs = [o for o in outcomes if o.point == point]
        if not runs:
            continue
        c = runs[0].result.contraction
        blocks.append(
            {
                "point": point,
                "contraction": asdict(c),
                "runs": [
                    {
                        "run_id": o.run_id,
                        "seed": o.seed,
                        "sequence_sha256": o.digest,
                        "metrics": {
                            "R_d": o.result.metrics.R_d,
                            "P_g": o.result.metrics.P_g,
                            "P_g_prime": o.result.metrics.P_g_prime,
                            "V": o.result.metrics.V,
                            "c_empirical": o.result.metrics.c_empirical,
                            "distance_sum": o.result.metrics.distance_sum,
                        },
                        "constants": asdict(o.result.constants),
                        "case_histogram": o.result.histogram,
                        "gradient_budget_exceeded": [r.t for r in o.result.gradient_audit()],
                        "checks": o.checks,
                    }
                    for o in runs
                ],
            }
        )
    return {
        "name": cfg.name,
        "config": raw_config if raw_config is not None else asdict(cfg),
        "points": blocks,
        "all_checks_passed": all(ch["passed"] for o in outcomes for ch in o.checks.values()),
    }


def emit_outputs(cfg: ExperimentConfig, outcomes: list[RunOutcome], out_dir, raw_config=None) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for o in outcomes:
            p = out / f"{cfg.name}_{o.run_id}.csv"
            p.write_text(round_csv(o.result))
            written.append(p)
            if cfg.transcript:
                p = out / f"{cfg.name}_{o.run_id}_transcript.csv"
                p.write_text(transcript_csv(o.result))
                written.append(p)
        p = out / f"{cfg.name}_summary.json"
        p.write_text(json.dumps(summarize(cfg, outcomes, raw_config), indent=2, sort_keys=True, default=_json_default))
        written.append(p)
    except OSError as e:
        raise UsageError(f"cannot write outputs to {out}: {e}") from None
    return written


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o).__name__)


def _job(args):
    return execute_run(*args)


def run_experiment(config_path, out=None, seed=None, jobs: int = 1) -> int:
    """Run every (sweep point x replication) and write CSV/JSON outputs; returns the exit status."""
    try:
        raw = json.loads(Path(config_path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        log.error("cannot load config %s: %s", config_path, e)
        return EXIT_CONFIG
    if seed is not None:
        raw["base_seed"] = int(seed)
    if out is not None:
        raw["out"] = str(out)
    try:
        cfg = ExperimentConfig.from_dict(raw)
    except (UsageError, TypeError) as e:
        log.error("%s", e)
        return EXIT_CONFIG
    tasks = [(cfg, i, p, r) for i, p in enumerate(cfg.points()) for r in range(cfg.replications)]
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                outcomes = list(ex.map(_job, tasks))
        else:
            outcomes = [_job(t) for t in tasks]
    except NumericalError as e:
        log.error("numerical failure: %s", e)
        return EXIT_NUMERICAL
    except LocalOCOError as e:
        log.error("%s", e)
        return EXIT_CONFIG
    try:
        emit_outputs(cfg, outcomes, cfg.out, raw)
    except UsageError as e:
        log.error("%s", e)
        return EXIT_CONFIG
    failed = [(o.run_id, k) for o in outcomes for k, ch in o.checks.items() if not ch["passed"]]
    for run_id, k in failed:
        log.error("check failed: %s %s", run_id, k)
    log.info("%d runs, %d failed checks, outputs in %s", len(outcomes), len(failed), cfg.out)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="localoco", description="Run local-information constrained OCO experiments.")
    ap.add_argument("--config", required=True, help="experiment JSON file")
    ap.add_argument("--out", help="output directory (overrides config)")
    ap.add_argument("--seed", type=int, help="base seed (overrides config)")
    ap.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return run_experiment(args.config, out=args.out, seed=args.seed, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
