import json
import logging
import platform
from pathlib import Path
from typing import Dict, List, Literal, Optional

import numpy as np
import pandas as pd
import pydantic
import scipy
from pydantic import BaseModel, ConfigDict, Field, model_validator

from analysis import (
    CI_METHOD,
    ReferenceSpec,
    implicit_growth_probe,
    implicit_lipschitz_probe,
    implicit_order_probe,
    local_error_probe,
    pmil_stability_probe,
    projection_probe,
    split_step_stability_probe,
    strong_errors,
    timing_sweep,
)
from database import insert_error_rows, record_run
from models import ConditionReport, ConfigError, ErrorReport, ProbeResult
from noise import RNG_ALGORITHM
from problems import ParametricProblem
from schemes import COMMUTATIVITY_TOL, ImplicitSolver, SchemeKind, SchemeSpec, make_scheme
from sde_model import (
    NoiseStructure,
    SodeProblem,
    check_commutativity,
    check_deriv_product,
    verify_coercivity,
    verify_jacobian_lipschitz,
    verify_monotonicity,
    verify_ssbm_monotonicity,
)
from settings import RuntimeSettings

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).resolve().parent / "presets"

# Central differences of g^{r1} at step 1e-5 must match g^{r1,r2} to this relative gap.
DERIV_PRODUCT_TOL = 1e-6
COEFFICIENT_CHECK_POINTS = 2000


class SchemeConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: SchemeKind
    alpha: Optional[float] = Field(default=None, gt=0.0)
    upper_step_bound: Optional[float] = Field(default=None, gt=0.0)
    solver: ImplicitSolver = Field(default_factory=ImplicitSolver)

    def build(self, problem: SodeProblem) -> SchemeSpec:
        return make_scheme(self.kind, problem, self.alpha, self.upper_step_bound, self.solver)


class ExperimentConfig(BaseModel):
    """Schema of presets and --config files; step sizes are h = 2^-k for k in h_exponents."""
    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1)
    mode: Literal["convergence", "timing", "probes", "conditions"] = "convergence"
    problem: ParametricProblem
    schemes: List[SchemeConfig] = Field(default_factory=list)
    h_exponents: List[int] = Field(default_factory=list)
    samples: int = Field(default=20000, ge=2)
    seed: int = Field(default=1, ge=0)
    reference: ReferenceSpec = Field(default_factory=ReferenceSpec)
    chunk_size: int = Field(default=512, ge=1)
    record_timings: bool = False

    probe_x0: Optional[List[float]] = None
    probe_t: float = Field(default=0.0, ge=0.0)
    probe_delta_exponents: List[int] = Field(default_factory=lambda: [4, 5, 6, 7, 8, 9])
    probe_fine_exponent: int = Field(default=16, ge=1, le=24)
    probe_region_radius: float = Field(default=5.0, gt=0.0)
    probe_points: int = Field(default=10000, ge=2)

    condition_region_radius: float = Field(default=5.0, gt=0.0)
    condition_points: int = Field(default=100000, ge=1)
    condition_p: List[float] = Field(default_factory=lambda: [14.0, 18.0])
    condition_eta1: float = Field(default=2.0, gt=1.0)
    condition_eta2: float = Field(default=1.0, gt=0.0)
    condition_jacobian_constant: Optional[float] = Field(default=None, gt=0.0)

    @property
    def h_list(self) -> List[float]:
        return [2.0 ** -k for k in self.h_exponents]

    @model_validator(mode="after")
    def _check_plan(self):
        if self.mode in ("convergence", "timing", "probes") and not self.schemes:
            raise ValueError(f"schemes: mode {self.mode} needs at least one scheme")
        if self.mode in ("convergence", "timing"):
            if not self.h_exponents:
                raise ValueError("h_exponents: empty step size list")
            if any(b <= a for a, b in zip(self.h_exponents, self.h_exponents[1:])):
                raise ValueError("h_exponents: step sizes must be strictly decreasing")
            if self.reference.fine_exponent < max(self.h_exponents):
                raise ValueError(
                    f"reference.fine_exponent: fine_dt=2^-{self.reference.fine_exponent} "
                    f"does not divide h=2^-{max(self.h_exponents)}"
                )
        if self.mode == "probes" and self.probe_fine_exponent < max(self.probe_delta_exponents):
            raise ValueError("probe_fine_exponent: fine step must divide every probe delta")
        if self.schemes and self.h_exponents:
            problem = self.problem.build()
            h_max = 2.0 ** -min(self.h_exponents)
            for cfg in self.schemes:
                scheme = cfg.build(problem)
                if h_max > scheme.upper_step_bound:
                    raise ValueError(
                        f"h_exponents: h={h_max} exceeds the bound {scheme.upper_step_bound:.6g} "
                        f"required by {scheme.name}"
                    )
        return self


def load_preset(name: str) -> ExperimentConfig:
    path = PRESET_DIR / f"{name}.json"
    if not path.exists():
        known = sorted(p.stem for p in PRESET_DIR.glob("*.json"))
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(known)}", field="preset")
    return load_config(path)


def load_config(path: Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}", field="config") from e
    return ExperimentConfig.model_validate_json(text)


def library_versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
    }


class ExperimentManager:
    """Runs one experiment config and writes its reports."""

    def __init__(self, config: ExperimentConfig, settings: Optional[RuntimeSettings] = None,
                 ledger: bool = True):
        self.config = config
        self.settings = settings or RuntimeSettings()
        self.ledger = ledger
        self.out_dir = Path(self.settings.out_dir)
        self.problem = config.problem.build()
        self.schemes = [cfg.build(self.problem) for cfg in config.schemes]

    def plan(self) -> Dict:
        """Resolved grids, bounds and reference, without computing anything."""
        cfg = self.config
        return {
            "name": cfg.name,
            "mode": cfg.mode,
            "problem": self.problem.name,
            "T": self.problem.horizon_T,
            "samples": cfg.samples,
            "seed": cfg.seed,
            "workers": self.settings.workers,
            "schemes": [
                {
                    "scheme": s.name,
                    "alpha": s.alpha,
                    "upper_step_bound": s.upper_step_bound,
                    "solver": s.solver.kind.value,
                }
                for s in self.schemes
            ],
            "grids": [
                {"h": h, "steps": int(round(self.problem.horizon_T / h))} for h in cfg.h_list
            ],
            "reference": cfg.reference.describe(),
            "outputs": str(self.out_dir),
        }

    def run(self) -> List[Path]:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        logger.info("running %s (%s) with %d samples, seed %d",
                    self.config.name, self.config.mode, self.config.samples, self.config.seed)
        run_id = None
        if self.ledger:
            run_id = record_run(
                self.config.name, self.config.mode, self.config.seed, self.config.samples,
                self.config.model_dump(mode="json"), db_path=self.settings.results_db,
            )

        handler = {
            "convergence": self._run_convergence,
            "timing": self._run_timing,
            "probes": self._run_probes,
            "conditions": self._run_conditions,
        }[self.config.mode]
        outputs = handler(run_id)
        outputs.append(self._write_meta(outputs))
        logger.info("wrote %d files to %s", len(outputs), self.out_dir)
        return outputs

    def _path(self, suffix: str) -> Path:
        return self.out_dir / f"{self.config.name}_{suffix}"

    def _write_meta(self, outputs: List[Path]) -> Path:
        meta = {
            "config": self.config.model_dump(mode="json"),
            "rng_algorithm": RNG_ALGORITHM,
            "ci_method": CI_METHOD,
            "versions": library_versions(),
            "outputs": [p.name for p in outputs],
        }
        path = self._path("meta.json")
        path.write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
        return path

    def _run_convergence(self, run_id: Optional[int]) -> List[Path]:
        cfg = self.config
        reports = strong_errors(
            self.problem, self.schemes, cfg.h_list, cfg.samples, cfg.seed, cfg.reference,
            workers=self.settings.workers, chunk_size=cfg.chunk_size,
        )
        return [path for report in reports for path in self._write_report(report, run_id)]

    def _write_report(self, report: ErrorReport, run_id: Optional[int]) -> List[Path]:
        csv_path = self._path(f"{report.scheme}.csv")
        json_path = self._path(f"{report.scheme}.json")
        report.write_csv(csv_path, include_seconds=self.config.record_timings)
        report.write_json(json_path)
        if run_id is not None:
            insert_error_rows(run_id, report, db_path=self.settings.results_db)
        return [csv_path, json_path]

    def _run_timing(self, run_id: Optional[int]) -> List[Path]:
        cfg = self.config
        rows = timing_sweep(
            self.problem, self.schemes, cfg.h_list, cfg.samples, cfg.seed, cfg.reference,
            workers=self.settings.workers, chunk_size=cfg.chunk_size,
        )
        path = self._path("timing.csv")
        pd.DataFrame([row.model_dump() for row in rows]).to_csv(path, index=False, float_format="%.10g")
        return [path]

    def _run_probes(self, run_id: Optional[int]) -> List[Path]:
        cfg = self.config
        problem = self.problem
        x0 = problem.initial_value if cfg.probe_x0 is None else np.asarray(cfg.probe_x0)
        deltas = [2.0 ** -k for k in cfg.probe_delta_exponents]
        outputs = []
        for scheme in self.schemes:
            report = local_error_probe(
                problem, scheme, x0, cfg.probe_t, deltas, cfg.samples, cfg.seed,
                fine_exponent=cfg.probe_fine_exponent, workers=self.settings.workers,
                chunk_size=cfg.chunk_size,
            )
            path = self._path(f"{scheme.name}_probe.json")
            path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
            outputs.append(path)

        results = self._structural_probes(deltas)
        path = self._path("probes.csv")
        pd.DataFrame([r.model_dump() for r in results]).to_csv(path, index=False, float_format="%.10g")
        outputs.append(path)
        return outputs

    def _structural_probes(self, deltas: List[float]) -> List[ProbeResult]:
        cfg = self.config
        problem = self.problem
        n, seed, radius = cfg.probe_points, cfg.seed, cfg.probe_region_radius
        results = [projection_probe(deltas, [problem.default_alpha], n, seed, dim=problem.dim, radius=radius)]
        results.append(pmil_stability_probe(problem, deltas, n, seed, radius=radius))
        # Implicit-map probes only for step sizes below 1/L.
        implicit = [d for d in deltas if d * problem.monotonicity_L < 1.0]
        if implicit:
            results.append(implicit_lipschitz_probe(problem, implicit[0], n, seed, radius))
            results.append(implicit_growth_probe(problem, implicit[0], n, seed, radius))
            if len(implicit) >= 2:
                results.extend(implicit_order_probe(problem, implicit, n, seed))
            if problem.eta1 is not None and problem.eta2 is not None:
                results.append(split_step_stability_probe(problem, implicit[0], n, seed, radius=radius))
        return results

    def _run_conditions(self, run_id: Optional[int]) -> List[Path]:
        cfg = self.config
        problem = self.problem
        radius, n, seed, workers = cfg.condition_region_radius, cfg.condition_points, cfg.seed, self.settings.workers
        reports: List[ConditionReport] = [
            verify_monotonicity(problem, problem.eta, radius, n, seed, workers),
            verify_ssbm_monotonicity(
                problem,
                problem.eta1 or cfg.condition_eta1,
                problem.eta2 or cfg.condition_eta2,
                radius, n, seed, workers,
            ),
        ]
        reports.extend(verify_coercivity(problem, p, radius, n, seed, workers) for p in cfg.condition_p)
        reports.append(verify_jacobian_lipschitz(
            problem, "drift", radius, n, seed, constant=cfg.condition_jacobian_constant, workers=workers,
        ))

        frame = pd.DataFrame([
            {
                "condition": r.condition_id.value,
                "parameters": json.dumps(r.parameters, sort_keys=True),
                "worst_ratio": r.worst_ratio,
                "verdict": r.verdict,
            }
            for r in reports
        ] + self._coefficient_checks(min(n, COEFFICIENT_CHECK_POINTS), radius))
        path = self._path("conditions.csv")
        frame.to_csv(path, index=False, float_format="%.10g")
        return [path]

    def _coefficient_checks(self, n: int, radius: float) -> List[Dict]:
        """Consistency of g^{r1,r2} with g, and its symmetry when the noise is labelled commutative."""
        problem, seed = self.problem, self.config.seed
        checks = [("deriv_product_consistency", check_deriv_product(problem, n, seed, radius), DERIV_PRODUCT_TOL)]
        if problem.noise_structure == NoiseStructure.COMMUTATIVE:
            checks.append(("commutativity", check_commutativity(problem, n, seed, radius), COMMUTATIVITY_TOL))
        rows = []
        for name, gap, tol in checks:
            passed = gap <= tol
            if not passed:
                logger.warning("%s: %s gap %.3e above %.1e", problem.name, name, gap, tol)
            rows.append({
                "condition": name,
                "parameters": json.dumps({"tolerance": tol}),
                "worst_ratio": gap / tol,
                "verdict": "no violation found" if passed else "violated",
            })
        return rows
