"""Scenario configuration and the experiment drivers behind each CLI task."""

import logging
import platform
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd
import scipy
from joblib import Parallel, delayed

from omega import __version__, manage, process, reference
from omega.baselines import PathologyParams, closest_approximant, hum_roots, make_pathology
from omega.errors import ConfigError, EnergyOrderingViolation, InvalidParameters, OverlapSaturation
from omega.functional import OmegaProblem, SteepeningParams, gradient_check, omega, omega_hessian
from omega.optimize import (
    OptimizationTrace,
    OptimizerConfig,
    complement_basis,
    estimate_curvature,
    minimize_energy_orthogonal,
    minimize_omega_restarts,
    minimize_steepened,
)
from omega.refine import alternate, improve_against_exact, leading_order_condition
from omega.space import (
    StateVector,
    SymmetricOperator,
    energy,
    spectral_decompose,
    subspace_eigenpairs,
    to_eigenbasis,
)

logger = logging.getLogger(__name__)

TASKS = ("spectrum", "omega-min", "hum", "refine", "pathology", "bench")
FORMATS = ("json", "tsv")
HESSIAN_MAX_DIM = 10
BOUND_TOL = 1e-10
CHAIN_TOL = 1e-9
EIGENSTATE_RTOL = 1e-12
GRADIENT_RTOL = 1e-5


@dataclass(frozen=True)
class SteepeningOptions:
    """N and (optionally) T of the steepened functional; T defaults to the curvature estimate."""

    scale_N: float = 1.0
    curvature_T: Optional[float] = None

    @classmethod
    def parse(cls, text: str) -> "SteepeningOptions":
        """Read ``N=<n>,T=<t>``; either key may be omitted."""
        values: Dict[str, float] = {}
        for item in filter(None, (part.strip() for part in text.split(","))):
            key, sep, raw = item.partition("=")
            key = key.strip().upper()
            if not sep or key not in ("N", "T"):
                raise ConfigError(f"Unknown steepening field '{item}'; expected N=<n>,T=<t>.")
            try:
                values[key] = float(raw)
            except ValueError as err:
                raise ConfigError(f"Steepening field '{key}' has a bad value '{raw}'.") from err
        options = cls(scale_N=values.get("N", 1.0), curvature_T=values.get("T"))
        options.validate()
        return options

    def validate(self) -> None:
        if not np.isfinite(self.scale_N) or self.scale_N < 1.0:
            raise ConfigError(f"Steepening N must be >= 1, got {self.scale_N!r}.")
        if self.curvature_T is not None and (not np.isfinite(self.curvature_T) or self.curvature_T <= 0.0):
            raise ConfigError(f"Steepening T must be > 0, got {self.curvature_T!r}.")


@dataclass
class ScenarioConfig:
    """
    Everything a run needs: the Hamiltonian source, the task and its settings.

    Exactly one of ``input_path``, ``builtin`` and ``random`` must be set.

    Parameters
    ----------
    task : str
        One of ``spectrum``, ``omega-min``, ``hum``, ``refine``, ``pathology``, ``bench``.
    input_path : str, optional
        Matrix file (see :func:`omega.manage.read_matrix`).
    builtin : str, optional
        Name of a builtin model, e.g. ``he-model``.
    random : RandomModelSpec, optional
        Seeded random model.
    optimizer : OptimizerConfig
        Minimization settings.
    steepening : SteepeningOptions, optional
        Minimize the steepened functional instead of Omega_1 in ``omega-min``.
    out : str, optional
        Report path; the report goes to standard output when omitted.
    fmt : str
        ``json`` or ``tsv``.
    seed : int
        Seed for trial states and bench trials.
    epsilon : float
        Energy offset of the ``pathology`` construction.
    trials : int
        Number of ``bench`` trials.
    outer_rounds : int
        Outer rounds of the ``refine`` alternation.
    perturbation : float
        Angle between generated approximants and the exact eigenstates.
    n_jobs : int
        joblib workers for ``bench``.

    """

    task: str
    input_path: Optional[str] = None
    builtin: Optional[str] = None
    random: Optional[process.RandomModelSpec] = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    steepening: Optional[SteepeningOptions] = None
    out: Optional[str] = None
    fmt: str = "json"
    seed: int = 0
    epsilon: float = 0.0
    trials: int = 100
    outer_rounds: int = 5
    perturbation: float = 0.1
    n_jobs: int = 1

    def validate(self) -> None:
        sources = [s for s in (self.input_path, self.builtin, self.random) if s is not None]
        if len(sources) != 1:
            raise ConfigError(f"Give exactly one Hamiltonian source (--input, --builtin, --random), got {len(sources)}.")
        if self.task not in TASKS:
            raise ConfigError(f"Unknown task '{self.task}'; choose from {', '.join(TASKS)}.")
        if self.fmt not in FORMATS:
            raise ConfigError(f"Unknown format '{self.fmt}'; choose json or tsv.")
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}.")
        if self.outer_rounds < 1:
            raise ConfigError(f"outer_rounds must be at least 1, got {self.outer_rounds}.")
        if not 0.0 < self.perturbation < np.pi / 2:
            raise ConfigError(f"perturbation must lie in (0, pi/2), got {self.perturbation!r}.")
        if not np.isfinite(self.epsilon) or self.epsilon < 0.0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon!r}.")
        if self.n_jobs == 0:
            raise ConfigError("n_jobs must be nonzero.")
        self.optimizer.validate()
        if self.steepening is not None:
            self.steepening.validate()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task": self.task,
            "source": self.source_label(),
            "input_path": self.input_path,
            "builtin": self.builtin,
            "random": self.random.to_dict() if self.random else None,
            "optimizer": asdict(self.optimizer),
            "steepening": asdict(self.steepening) if self.steepening else None,
            "format": self.fmt,
            "seed": self.seed,
            "epsilon": self.epsilon,
            "trials": self.trials,
            "outer_rounds": self.outer_rounds,
            "perturbation": self.perturbation,
            "n_jobs": self.n_jobs,
        }

    def source_label(self) -> str:
        if self.builtin is not None:
            return f"builtin:{self.builtin}"
        if self.random is not None:
            return "random:" + ",".join(f"{k}={v}" for k, v in self.random.to_dict().items())
        return f"input:{self.input_path}"


@dataclass
class RunReport:
    """
    Result of one scenario; serialized by :mod:`omega.manage`.

    ``timestamp`` is the only field that differs between identical runs.
    """

    scenario: Dict[str, Any]
    results: Dict[str, Any]
    versions: Dict[str, str]
    seeds: Dict[str, Any]
    timestamp: str = ""

    def to_dict(self, include_timestamp: bool = True) -> Dict[str, Any]:
        report = {
            "scenario": self.scenario,
            "results": self.results,
            "versions": self.versions,
            "seeds": self.seeds,
        }
        if include_timestamp:
            report["timestamp"] = self.timestamp
        return report


class Model:
    """A loaded Hamiltonian with its exact eigenpairs and, for builtins, named states."""

    def __init__(self, H: SymmetricOperator, builtin: Optional[reference.BuiltinModel] = None):
        self.H = H
        self.spec = builtin.spec if builtin is not None else spectral_decompose(H)
        self.builtin = builtin


def load_model(config: ScenarioConfig) -> Model:
    """Build the Hamiltonian named by the scenario."""
    if config.builtin is not None:
        builtin = reference.get_builtin(config.builtin)
        return Model(builtin.H, builtin)
    if config.random is not None:
        return Model(process.model_from_spec(config.random))
    return Model(manage.read_matrix(config.input_path))


def versions() -> Dict[str, str]:
    return {
        "omega": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "python": platform.python_version(),
    }


def _floats(values) -> List[float]:
    return [float(v) for v in np.asarray(values, dtype=float).reshape(-1)]


def _ground_approximant(model: Model, config: ScenarioConfig) -> StateVector:
    """The builtin phi0, or psi0 rotated by the scenario's perturbation angle."""
    if model.builtin is not None:
        return model.builtin.phi0
    rng = np.random.default_rng(config.seed)
    return process.perturb_state(model.spec.state(0), rng, config.perturbation)


def _trace_summary(trace: OptimizationTrace) -> Dict[str, Any]:
    return {
        "termination": trace.termination.value,
        "iterations": trace.iterations,
        "final_value": trace.final_value,
        "trace_iterations": [p.iteration for p in trace.iterates_kept],
        "trace_objective": _floats([p.objective for p in trace.iterates_kept]),
        "trace_grad_norm": _floats([p.grad_norm for p in trace.iterates_kept]),
    }


def run_spectrum(model: Model, config: ScenarioConfig) -> Dict[str, Any]:
    """Exact eigenvalues and eigenvectors."""
    return {
        "dim": model.spec.dim,
        "energies": _floats(model.spec.energies),
        "min_gap": float(np.min(np.diff(model.spec.energies))),
        "eigenvectors": [_floats(model.spec.vectors[:, i]) for i in range(model.spec.dim)],
    }


def run_omega_min(model: Model, config: ScenarioConfig) -> Dict[str, Any]:
    """
    Minimize Omega_1 given a ground-state approximant.

    The builtin He model starts from c psi0 + d psi2 + sqrt(1 - c^2 - d^2) psi1
    with c = 0.3, d = -0.5, alongside the random restarts.
    """
    spec = model.spec
    phi0 = _ground_approximant(model, config)
    problem = OmegaProblem(model.H, (phi0,))
    start = reference.demonstration_start() if model.builtin is not None else None

    restarts = minimize_omega_restarts(problem, config.optimizer, start=start)
    trace = restarts.best
    results: Dict[str, Any] = {"phi0": _floats(phi0.components)}
    results["restart_values"] = _floats([t.final_value for t in restarts.outcomes])
    results["restart_seeds"] = [-1 if s is None else s for s in restarts.seeds]

    if config.steepening is not None:
        first = start if start is not None else trace.final_state
        e_f = omega(problem, first)
        if config.steepening.curvature_T is None:
            params = SteepeningParams.from_curvature(
                estimate_curvature(problem, first), e_f, config.steepening.scale_N
            )
        else:
            params = SteepeningParams(config.steepening.scale_N, config.steepening.curvature_T, e_f)
        trace = minimize_steepened(problem, first, params, config.optimizer)
        results["steepened"] = {k: float(v) for k, v in trace.extras.items()}

    phi1 = trace.final_state
    coords = to_eigenbasis(phi1, spec, 1)
    results.update(
        {
            "omega": omega(problem, phi1),
            "energy": energy(model.H, phi1),
            "exact_energy": float(spec.energies[1]),
            "phi1": _floats(phi1.components),
            "coeffs_low": _floats(coords.coeffs_low),
            "coeffs_high": _floats(coords.coeffs_high),
            "max_abs_residual_coeff": float(np.max(np.abs(coords.chart))),
            "overlap_psi1_sq": float(coords.principal**2),
        }
    )
    results.update(_trace_summary(trace))
    if spec.dim <= HESSIAN_MAX_DIM:
        try:
            report = omega_hessian(problem, spec, phi1)
            results["hessian_minors"] = _floats(report.principal_minors)
            results["hessian_predicted_minors"] = _floats(report.predicted_minors)
            results["hessian_positive_definite"] = report.positive_definite
        except (EnergyOrderingViolation, OverlapSaturation) as err:
            logger.warning(f"   > Hessian stencil left the feasible region: {err}")
    return results


def run_hum(model: Model, config: ScenarioConfig) -> Dict[str, Any]:
    """Secular roots on a trial basis against the exact levels."""
    spec = model.spec
    if model.builtin is not None:
        basis = [model.builtin.phi0, model.builtin.phi1]
    else:
        rng = np.random.default_rng(config.seed)
        basis = process.approximants_near(spec.eigenvectors, rng, config.perturbation, min(spec.dim, 3))
    roots = hum_roots(model.H, basis)
    exact = spec.energies[: len(roots)]
    return {
        "basis_size": len(basis),
        "roots": _floats(roots),
        "exact": _floats(exact),
        "bound_holds": [bool(r >= e - BOUND_TOL) for r, e in zip(roots, exact)],
    }


def run_refine(model: Model, config: ScenarioConfig) -> Dict[str, Any]:
    """Alternate Omega_1 minimization with ground-state rotation."""
    spec = model.spec
    phi0 = _ground_approximant(model, config)
    condition = leading_order_condition(spec, phi0)
    exact = improve_against_exact(spec, phi0)
    outcome = alternate(model.H, phi0, config.optimizer, config.outer_rounds, oracle=spec)
    return {
        "phi0_initial_energy": energy(model.H, phi0),
        "leading_order_lhs": condition.lhs,
        "leading_order_rhs": condition.rhs,
        "improved_against_psi1_energy": exact.energy,
        "phi0": _floats(outcome.phi0.components),
        "phi1": _floats(outcome.phi1.components),
        "phi0_energy": energy(model.H, outcome.phi0),
        "phi1_energy": energy(model.H, outcome.phi1),
        "psi0_phi0_sq": float(spec.overlaps(outcome.phi0)[0] ** 2),
        "psi1_phi1_sq": float(spec.overlaps(outcome.phi1)[1] ** 2),
        "outer_rounds_used": len(outcome.history),
        "history": [asdict(record) for record in outcome.history],
    }


def run_pathology(model: Model, config: ScenarioConfig) -> Dict[str, Any]:
    """
    Three-level construction from the three lowest levels of the model.

    The witness minimizes the energy orthogonal to phi0 starting from phi1,
    which already sits at E_1 - epsilon with no psi1 component.
    """
    if model.spec.dim < 3:
        raise ConfigError("The pathology task needs at least three levels.")
    e0, e1, e2 = (float(e) for e in model.spec.energies[:3])
    params = PathologyParams(e0, e1, e2, epsilon=config.epsilon)
    built = make_pathology(params)
    spec = spectral_decompose(built.H)
    witness = minimize_energy_orthogonal(built.H, [built.phi0], built.phi1, config.optimizer)
    closest = closest_approximant(spec, built.phi0)
    return {
        "e0": e0,
        "e1": e1,
        "e2": e2,
        "epsilon": config.epsilon,
        "a": built.a,
        "b": built.b,
        "phi0": _floats(built.phi0.components),
        "phi1": _floats(built.phi1.components),
        "energy_phi0": energy(built.H, built.phi0),
        "energy_phi0_predicted": e0 + e2 - (e1 - config.epsilon),
        "energy_phi1": energy(built.H, built.phi1),
        "psi1_phi1": float(built.phi1.components[1]),
        "phi0_phi1": built.phi0.overlap(built.phi1),
        "orthogonal_min_energy": witness.final_value,
        "orthogonal_min_psi1_sq": float(witness.final_state.components[1] ** 2),
        "closest_energy": closest.energy,
        "hum_roots": _floats(hum_roots(built.H, [built.phi0, built.phi1])),
    }


def _valid_random_point(problem: OmegaProblem, rng: np.random.Generator, attempts: int = 100) -> Optional[StateVector]:
    for _ in range(attempts):
        candidate = StateVector.normalized(rng.standard_normal(problem.dim))
        try:
            omega(problem, candidate)
        except (EnergyOrderingViolation, OverlapSaturation):
            continue
        return candidate
    return None


def bench_trial(index: int, seed: int, config: ScenarioConfig, fixed: Optional[SymmetricOperator]) -> Dict[str, Any]:
    """
    One property-check trial.

    Checks Omega_n(psi_n) = E_n, the HUM bound, the chain
    E(phi1_MIN) <= E(phi1+) < E_1, and the analytic gradient.
    """
    if fixed is None:
        rspec = config.random
        H = process.generate_random_model(rspec.dim, seed, rspec.min_gap, rspec.spread)
    else:
        H = fixed
    spec = spectral_decompose(H)
    rng = np.random.default_rng(seed)
    levels = [n for n in (1, 2) if n < spec.dim]
    approximants = process.approximants_near(spec.eigenvectors, rng, config.perturbation, max(levels))

    eigen_ok = True
    eigen_checked = 0
    for n in levels:
        problem = OmegaProblem(H, tuple(approximants[:n]))
        try:
            value = omega(problem, spec.state(n))
        except (EnergyOrderingViolation, OverlapSaturation):
            # approximants too far from psi_0..psi_{n-1} for this level
            continue
        eigen_checked += 1
        eigen_ok &= abs(value - spec.energies[n]) <= EIGENSTATE_RTOL * max(1.0, abs(spec.energies[n]))

    basis = process.approximants_near(spec.eigenvectors, rng, config.perturbation, min(spec.dim, 3))
    roots = hum_roots(H, basis)
    hum_ok = bool(np.all(roots >= spec.energies[: len(roots)] - BOUND_TOL))

    phi0 = approximants[0]
    e1 = float(spec.energies[1])
    s = spec.state(1).overlap(phi0)
    chain_applicable = energy(H, phi0) < e1 and abs(s) > 1e-12
    chain_ok = None
    e_min = e_plus = None
    if chain_applicable:
        complement = complement_basis([phi0], spec.dim)
        values, _ = subspace_eigenpairs(H, [StateVector(c) for c in complement.T])
        e_min = float(values[0])
        e_plus = closest_approximant(spec, phi0).energy
        chain_ok = bool(e_min <= e_plus + CHAIN_TOL and e_plus < e1 + CHAIN_TOL)

    problem = OmegaProblem(H, (phi0,))
    point = _valid_random_point(problem, rng)
    gradient_error = gradient_check(problem, point).relative_error if point is not None else float("nan")

    return {
        "trial": index,
        "seed": seed,
        "dim": spec.dim,
        "omega_eigenstate_checked": eigen_checked,
        "omega_eigenstate_ok": bool(eigen_ok),
        "hum_ok": hum_ok,
        "chain_applicable": bool(chain_applicable),
        "chain_ok": chain_ok,
        "e_min": e_min,
        "e_plus": e_plus,
        "e1": e1,
        "gradient_rel_error": gradient_error,
        "gradient_ok": bool(gradient_error <= GRADIENT_RTOL),
    }


def run_bench(model: Optional[Model], config: ScenarioConfig) -> Dict[str, Any]:
    """
    Seeded property checks over many trials.

    With a random source every trial draws its own model (seed + trial index);
    otherwise the loaded Hamiltonian is reused and only the states vary.
    """
    base = config.random.seed if config.random is not None else config.seed
    fixed = None if config.random is not None else model.H
    trials = Parallel(n_jobs=config.n_jobs)(
        delayed(bench_trial)(k, base + k, config, fixed) for k in range(config.trials)
    )
    table = pd.DataFrame(trials)
    applicable = table[table["chain_applicable"]]
    return {
        "trials_run": len(trials),
        "hum_pass": int(table["hum_ok"].sum()),
        "omega_eigenstate_pass": int(table["omega_eigenstate_ok"].sum()),
        "chain_applicable": int(len(applicable)),
        "chain_pass": int(applicable["chain_ok"].astype(bool).sum()),
        "gradient_pass": int(table["gradient_ok"].sum()),
        "gradient_max_rel_error": float(table["gradient_rel_error"].max()),
        "trials": trials,
    }


DRIVERS: Dict[str, Callable[[Model, ScenarioConfig], Dict[str, Any]]] = {
    "spectrum": run_spectrum,
    "omega-min": run_omega_min,
    "hum": run_hum,
    "refine": run_refine,
    "pathology": run_pathology,
    "bench": run_bench,
}


def _seeds(config: ScenarioConfig) -> Dict[str, Any]:
    seeds: Dict[str, Any] = {"scenario": config.seed, "restarts": config.optimizer.seed}
    if config.random is not None:
        seeds["model"] = config.random.seed
    if config.task == "bench":
        base = config.random.seed if config.random is not None else config.seed
        seeds["trials"] = [base, base + config.trials - 1]
    return seeds


def run_scenario(config: ScenarioConfig) -> RunReport:
    """
    Run one task end to end and, when ``config.out`` is set, write its report.

    Parameters
    ----------
    config : ScenarioConfig
        Validated here.

    Returns
    -------
    RunReport

    Raises
    ------
    ConfigError
        If the configuration is invalid.
    IoError
        If an input file cannot be read or the report cannot be written.

    """
    start_time = time.time()
    config.validate()
    logger.info(f"> Running {config.task} on {config.source_label()}.")

    # Bench draws a fresh model per trial for random sources.
    model = None if (config.task == "bench" and config.random is not None) else load_model(config)
    try:
        results = DRIVERS[config.task](model, config)
    except InvalidParameters as err:
        raise ConfigError(str(err)) from err

    report = RunReport(
        scenario=config.to_dict(),
        results=results,
        versions=versions(),
        seeds=_seeds(config),
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    if config.out is not None:
        manage.write_report(report.to_dict(), config.out, config.fmt)

    total_time = round(time.time() - start_time, 3)
    logger.info(
        f"""
        \t----------------------------{config.task.upper()} END----------------------------
        \tRESULT: {config.task} finished on {config.source_label()}.
        \tOUTPUT: {config.out or 'standard output'}
        \tTIME: Total execution time: {total_time} seconds.
        \t--------------------------------------------------------------------\n
        """
    )
    return report
