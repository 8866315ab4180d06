"""Run orchestration behind the CLI: evolution tables, sweeps, convergence
ladders and short-time scaling checks, plus the CSV house format."""

from __future__ import annotations

import hashlib
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import RunConfig
from .dynamics import TimeGrid, coherent_state, evolve, evolve_many, required_m_cut
from .errors import ConfigError, KerrDynError, NumericalError, TruncationError
from .fockspace import FockBasis
from .model import ModelParams, build_hamiltonian, normal_frequencies
from .observables import (
    entanglement_entropy, gaussian_entropy, mode_moments, number_statistics_from_moments,
    partial_trace, squeezing_ratios_from_moments, symplectic_f, von_neumann_entropy,
)
from .shorttime import (
    commutator_defect, heisenberg_expansion, operator_error, scaling_table,
    short_time_population,
)
from .spectral import EigenSystem, cache_key, eigendecompose, load_eigensystem, save_eigensystem

log = logging.getLogger(__name__)

EVOLVE_COLUMNS = (
    "t", "E12", "dS1", "dS2", "N1", "N2", "Ntot_half", "varN1", "varN2", "D1", "D2",
    "mandelQ1", "mandelQ2", "fano1", "fano2", "g2_1", "g2_2", "dQ1", "dP1", "dQ2", "dP2",
    "f1", "f2", "norm", "edge_weight",
)
NORM_TOL = 1e-10
CONVERGENCE_TOL = 1e-4
CONVERGE_OBSERVABLES = ("E12", "N1", "N2", "dS1", "dS2")


def build_hash() -> str:
    """Digest of the package sources, identifying the code that wrote a file."""
    h = hashlib.sha256()
    for path in sorted(Path(__file__).parent.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:12]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, complex):
        return f"{fmt(x.real)}{'+' if x.imag >= 0 else '-'}{fmt(abs(x.imag))}j"
    x = float(x)
    if x == 0:
        return "0"
    return format(x, ".12g")


@dataclass
class RunReport:
    command: str
    status: str = "ok"
    exit_code: int = 0
    message: str = ""
    params: dict = field(default_factory=dict)
    normal_modes: dict = field(default_factory=dict)
    truncation_weight: float | None = None
    max_edge_weight: float | None = None
    edge_converged: bool | None = None
    required_m_cut: int | None = None
    eigen_residual: float | None = None
    orthonormality_defect: float | None = None
    outputs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def fail(self, exc: Exception, code: int) -> None:
        self.status = "error"
        self.exit_code = code
        self.message = f"{type(exc).__name__}: {exc}"
        if isinstance(exc, TruncationError):
            self.truncation_weight = exc.weight
            self.required_m_cut = exc.required_m_cut


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, TruncationError):
        return 3
    if isinstance(exc, KerrDynError):
        return 4
    raise exc


def derived_info(params: ModelParams) -> dict:
    nm = normal_frequencies(params)
    return {
        "lambda1": params.lambda1, "lambda2": params.lambda2,
        "omega_plus": nm.omega_plus, "omega_minus": nm.omega_minus,
        "delta": nm.delta, "stable": nm.stable,
    }


def header_lines(command: str, cfg: RunConfig, extra: Sequence[tuple[str, object]] = ()) -> list[str]:
    lines = [f"# kerrdyn {command}", f"# version {__version__} build {build_hash()}"]
    lines += [f"# config {k} = {fmt(v) if not isinstance(v, str) else v}" for k, v in cfg.items()]
    for k, v in derived_info(cfg.model_params()).items():
        lines.append(f"# derived {k} = {fmt(v)}")
    lines += [f"# {k} = {fmt(v) if not isinstance(v, str) else v}" for k, v in extra]
    return lines


def render_csv(header: Sequence[str], columns: Sequence[str], rows) -> str:
    out = list(header)
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(fmt(x) for x in row))
    return "\n".join(out) + "\n"


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


# -- eigensystems -----------------------------------------------------------

def get_eigensystem(params: ModelParams, basis: FockBasis, cache_dir=None) -> EigenSystem:
    if cache_dir is None:
        return eigendecompose(build_hamiltonian(params, basis))
    key = cache_key(params, basis.m_cut)
    path = Path(cache_dir) / f"eig-{key[:24]}.bin"
    if path.exists():
        try:
            return load_eigensystem(path, key)
        except KerrDynError as exc:
            log.warning("ignoring unusable cache %s: %s", path, exc)
    eig = eigendecompose(build_hamiltonian(params, basis))
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    save_eigensystem(eig, path, key)
    return eig


# -- evolution ----------------------------------------------------------------

@dataclass
class EvolutionResult:
    times: np.ndarray
    table: list  # rows in EVOLVE_COLUMNS order; None marks undefined ratios
    truncation_weight: float
    max_edge_weight: float
    eig: EigenSystem

    def column(self, name: str) -> np.ndarray:
        j = EVOLVE_COLUMNS.index(name)
        return np.array([np.nan if r[j] is None else r[j] for r in self.table], dtype=float)


def observable_row(t, state, ref_moments) -> list:
    """One evolve-table row for ``state``; invariant violations raise."""
    norm = state.norm
    if abs(norm - 1.0) > NORM_TOL:
        raise NumericalError(f"norm drifted to {norm!r} at t={t}")
    e12 = entanglement_entropy(state)
    s = [von_neumann_entropy(partial_trace(state, m)) for m in (1, 2)]
    mom = [mode_moments(state, m) for m in (1, 2)]
    f = [symplectic_f(m) for m in mom]
    ds = [gaussian_entropy(f[i]) - s[i] for i in range(2)]
    stats = [number_statistics_from_moments(m) for m in mom]
    sq = [squeezing_ratios_from_moments(mom[i], ref_moments[i]) for i in range(2)]
    return [
        t, e12, ds[0], ds[1], stats[0].meanN, stats[1].meanN,
        0.5 * (stats[0].meanN + stats[1].meanN), stats[0].varN, stats[1].varN,
        stats[0].D, stats[1].D, stats[0].mandelQ, stats[1].mandelQ,
        stats[0].fano, stats[1].fano, stats[0].g2, stats[1].g2,
        sq[0][0], sq[0][1], sq[1][0], sq[1][1], f[0], f[1], norm, state.edge_weight(),
    ]


def run_evolution(cfg: RunConfig, times=None, cache_dir=None, check_truncation=True,
                  eig: EigenSystem | None = None) -> EvolutionResult:
    """Full observable table for one config; ``eig`` may be shared between
    configs that differ only in the initial state."""
    params = cfg.model_params()
    basis = FockBasis(cfg.m_cut)
    threshold = cfg.truncation_weight_threshold if check_truncation else None
    state0 = coherent_state(cfg.alpha1, cfg.alpha2, basis, threshold=threshold)
    if eig is None:
        eig = get_eigensystem(params, basis, cache_dir)
    elif eig.dim != basis.dim:
        raise ConfigError(f"shared eigensystem has dim {eig.dim}, config needs {basis.dim}")
    if times is None:
        times = TimeGrid(0.0, cfg.t_max, cfg.n_points).times
    states = evolve_many(state0, eig, times)
    ref = [mode_moments(state0, m) for m in (1, 2)]
    table = [observable_row(float(t), st, ref) for t, st in zip(times, states)]
    edge = max(r[-1] for r in table)
    return EvolutionResult(np.asarray(times), table, state0.truncation_weight, edge, eig)


def fill_report(report: RunReport, cfg: RunConfig, res: EvolutionResult) -> None:
    report.truncation_weight = res.truncation_weight
    report.max_edge_weight = res.max_edge_weight
    report.edge_converged = res.max_edge_weight <= cfg.edge_weight_threshold
    report.eigen_residual = res.eig.residual
    report.orthonormality_defect = res.eig.orthonormality_defect
    if not report.edge_converged:
        log.warning("top-shell weight %.3e exceeds %.1e: run is truncation-unconverged; raise m_cut",
                    res.max_edge_weight, cfg.edge_weight_threshold)


def evolve_csv(cfg: RunConfig, res: EvolutionResult) -> str:
    extra = [("truncation_weight", res.truncation_weight),
             ("max_edge_weight", res.max_edge_weight),
             ("edge_converged", res.max_edge_weight <= cfg.edge_weight_threshold)]
    return render_csv(header_lines("evolve", cfg, extra), EVOLVE_COLUMNS, res.table)


# -- sweeps -----------------------------------------------------------------

SWEEP_AXES = ("omega", "beta", "alpha")


def sweep_config(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    if axis == "omega":
        return cfg.replace(omega=float(value), lambda1=None, lambda2=None).validate()
    if axis == "beta":
        return cfg.replace(beta1=float(value), beta2=float(value)).validate()
    if axis == "alpha":
        return cfg.replace(alpha1_re=float(value), alpha1_im=0.0,
                           alpha2_re=float(value), alpha2_im=0.0).validate()
    raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")


def run_sweep(cfg: RunConfig, axis: str, values: Sequence[float], jobs: int = 1, cache_dir=None):
    """Evolve every sweep point; returns ``[(value, EvolutionResult | Exception)]`` in input order."""
    if not values:
        raise ConfigError("sweep needs at least one value")
    configs = [sweep_config(cfg, axis, v) for v in values]
    shared = None
    if axis == "alpha":
        # the Hamiltonian does not depend on the initial state
        shared = get_eigensystem(cfg.model_params(), FockBasis(cfg.m_cut), cache_dir)

    def one(c):
        try:
            return run_evolution(c, cache_dir=cache_dir, eig=shared)
        except KerrDynError as exc:
            return exc

    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as pool:
        results = list(pool.map(one, configs))
    return list(zip(values, results))


# -- convergence ladder -------------------------------------------------------

def default_probe_times(t_max: float) -> list[float]:
    return [t_max / 6.0, t_max / 3.0, 2.0 * t_max / 3.0, t_max]


def run_converge(cfg: RunConfig, m_list: Sequence[int], probe_times: Sequence[float] | None = None,
                 cache_dir=None) -> dict:
    """Observables at probe times for each cutoff and their successive changes."""
    if not m_list:
        raise ConfigError("m_list must not be empty")
    if list(m_list) != sorted(set(m_list)):
        raise ConfigError("m_list must be strictly ascending")
    probes = list(probe_times) if probe_times else default_probe_times(cfg.t_max)
    grid = TimeGrid(0.0, cfg.t_max, cfg.n_points).times
    ladder = []
    prev = None
    for m in m_list:
        c = cfg.replace(m_cut=int(m)).validate()
        res = run_evolution(c, times=np.concatenate([probes, grid]), cache_dir=cache_dir,
                            check_truncation=False)
        vals = np.array([[row[EVOLVE_COLUMNS.index(k)] for k in CONVERGE_OBSERVABLES]
                         for row in res.table[:len(probes)]])
        delta = None if prev is None else float(np.abs(vals - prev).max())
        trunc_ok = res.truncation_weight <= cfg.truncation_weight_threshold
        ladder.append({
            "m_cut": int(m), "dim": (m + 1) ** 2, "values": vals, "delta": delta,
            "truncation_weight": res.truncation_weight, "max_edge_weight": res.max_edge_weight,
            "truncation_ok": trunc_ok,
            "converged": delta is not None and delta < CONVERGENCE_TOL and trunc_ok,
        })
        prev = vals
    converged_at = next((e["m_cut"] for e in ladder if e["converged"]), None)
    return {"probes": probes, "ladder": ladder, "converged_m_cut": converged_at}


CONVERGE_COLUMNS = ("m_cut", "dim", "truncation_weight", "max_edge_weight", "t",
                    *CONVERGE_OBSERVABLES, "delta", "truncation_ok", "converged")


def converge_csv(cfg: RunConfig, out: dict) -> str:
    rows = []
    for e in out["ladder"]:
        for t, vals in zip(out["probes"], e["values"]):
            rows.append([e["m_cut"], e["dim"], e["truncation_weight"], e["max_edge_weight"], t,
                         *vals, e["delta"], e["truncation_ok"], e["converged"]])
    extra = [("convergence_tol", CONVERGENCE_TOL), ("converged_m_cut", out["converged_m_cut"])]
    return render_csv(header_lines("converge", cfg, extra), CONVERGE_COLUMNS, rows)


# -- short-time scaling -------------------------------------------------------

SHORTTIME_QUANTITIES = ("population", "operator", "commutator")
DEFAULT_SHORT_TIMES = (1e-2, 5e-3, 2.5e-3)
RATIO_WINDOW = (6.0, 10.0)


POPULATION_TRUNCATION = 1e-15


def population_m_cut(cfg: RunConfig) -> int:
    """Cutoff for the population check.

    The expansion refers to the untruncated coherent state; any truncation
    weight shows up as a t-independent error floor that spoils the ratio test
    at the smallest times, so the cutoff is raised until the weight is ~1e-15.
    """
    return max(cfg.m_cut, required_m_cut(cfg.alpha1, cfg.alpha2, POPULATION_TRUNCATION))


def run_shorttime(cfg: RunConfig, quantity: str, times=DEFAULT_SHORT_TIMES, mode: int = 1):
    params = cfg.model_params()
    basis = FockBasis(cfg.m_cut)
    if quantity == "population":
        if cfg.alpha1_im or cfg.alpha2_im:
            raise ConfigError("population expansion needs real alpha1, alpha2")
        basis = FockBasis(population_m_cut(cfg))
        state0 = coherent_state(cfg.alpha1, cfg.alpha2, basis, cfg.truncation_weight_threshold)
        eig = get_eigensystem(params, basis)
        def error(t):
            exact = mode_moments(evolve(state0, eig, t), mode).mean_n
            return abs(exact - short_time_population(cfg.alpha1_re, cfg.alpha2_re, params, t, mode))
    elif quantity == "operator":
        eig = get_eigensystem(params, basis)
        expansion = heisenberg_expansion(params, basis, mode)

        def error(t):
            return operator_error(expansion, eig, t)
    elif quantity == "commutator":
        e1 = heisenberg_expansion(params, basis, 1)
        e2 = heisenberg_expansion(params, basis, 2)

        def error(t):
            return commutator_defect(e1, e2, t)
    else:
        raise ConfigError(f"quantity must be one of {SHORTTIME_QUANTITIES}, got {quantity!r}")
    return scaling_table(error, times)


def shorttime_csv(cfg: RunConfig, quantity: str, mode: int, rows) -> str:
    extra = [("quantity", quantity), ("mode", mode),
             ("ratio_window", f"{RATIO_WINDOW[0]:g}..{RATIO_WINDOW[1]:g}")]
    if quantity == "population":
        extra.append(("population_m_cut", population_m_cut(cfg)))
    return render_csv(header_lines("shorttime-check", cfg, extra), ("t", "error", "ratio"), rows)


def ratios_ok(rows) -> bool:
    lo, hi = RATIO_WINDOW
    return all(lo <= r[2] <= hi for r in rows)


def timed():
    start = time.perf_counter()
    return lambda: time.perf_counter() - start
