"""Deterministic problem generators and the benchmark harness.

Two experiment families:

* random ensembles: G and H are unitary conjugations of positive
  diagonals (scaled by ``diag_scale``), and A is a normalized complex
  Gaussian whose contraction factor rho(conj(A) A) equals a drawn
  uniform variate by construction;
* the scalar family: 1x1 problems built from a target contraction rate
  whose exact solution is known in closed form.

Every trial is reproducible bit for bit from (seed, trial_index).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import CdareError, OutOfRange, RetryExhausted
from .matcore import hermitian_verdict, spectral_radius, symmetrize
from .model import SIGN_PLUS, SIGNS, CdareProblem, transform_to_dare
from .solvers import SolverConfig, SolveReport, solve

log = logging.getLogger(__name__)

#: Canonical (rate, coefficient) pairs of the scalar benchmark family.
#: The rate is the contraction factor of the conjugate closed loop
#: a / (1 + x); the transformed closed-loop radius rho(T_1) equals its
#: square.
SCALAR_FAMILY_PAIRS: tuple[tuple[float, float], ...] = (
    (0.5, 1.0 / np.sqrt(2.0)),
    (1.0 / np.sqrt(2.0), np.sqrt(3.0) / 2.0),
    (np.sqrt(3.0) / 2.0, np.sqrt(0.9999)),
    (np.sqrt(0.9999), np.sqrt(0.99999)),
)


@dataclass(frozen=True)
class EnsembleSpec:
    """What to generate: size, trial count, seed, sign, and scaling."""

    n: int
    trials: int
    seed: int
    sign: str = SIGN_PLUS
    diag_scale: float = 100.0
    target_rho: float | None = None
    max_retries: int = 1000

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be one of {SIGNS}")


@dataclass(frozen=True)
class TrialRecord:
    """One row of the per-trial output table."""

    trial: int
    n: int
    rho_t1: float | None
    iterations: int
    predicted: int | None
    res: float
    nres: float
    time_s: float
    converged: bool
    error: str | None = None


@dataclass
class TrialStats:
    """Aggregate statistics over an ensemble run.

    ``failures`` counts trials that errored or did not converge; they are
    excluded from the iteration statistics.  ``the_it`` is the mean of the
    per-trial predicted iteration counts over the successful trials.
    """

    min_it: int
    max_it: int
    ave_it: float
    the_it: float
    ave_time: float
    failures: int
    records: list[TrialRecord] = field(default_factory=list)


@dataclass(frozen=True)
class ScalarCase:
    """A 1x1 problem with its exact solution attached.

    ``rho`` is the conjugate closed-loop contraction rate used to build
    the case (the transformed closed-loop radius is ``rho**2``), ``a``
    the coefficient, and ``x_exact`` the known positive solution.
    """

    problem: CdareProblem
    x_exact: float
    rho: float
    a: float


def _crandn(rng: np.random.Generator, n: int) -> np.ndarray:
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)


def _unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    # QR with the R-diagonal phase fix for a uniquely defined factor.
    q, r = np.linalg.qr(_crandn(rng, n))
    d = np.diagonal(r)
    return q * np.conj(d / np.abs(d))


def _draw(rng: np.random.Generator, spec: EnsembleSpec):
    n = spec.n
    ghat = spec.diag_scale * rng.uniform(size=n)
    hhat = spec.diag_scale * rng.uniform(size=n)
    q = _unitary(rng, n)
    g = symmetrize(q.conj().T @ np.diag(ghat) @ q)
    h = symmetrize(q.conj().T @ np.diag(hhat) @ q)
    ahat = _crandn(rng, n)
    a_val = rng.uniform()
    temp = spectral_radius(np.conj(ahat) @ ahat)
    a = np.sqrt(a_val) * ahat / np.sqrt(temp)
    return CdareProblem(a=a, g=g, h=h, sign=spec.sign)


def gen_random_problem(spec: EnsembleSpec, trial_index: int) -> CdareProblem:
    """Generate the trial's problem, bitwise reproducible from the seed.

    ``rho(conj(A) A)`` equals the drawn uniform variate, guaranteeing a
    unique positive definite solution in the plus case.  Minus-sign
    problems are rejection-sampled until the transformed G_1 and H_1 are
    positive definite, up to ``max_retries`` attempts
    (:class:`RetryExhausted` afterwards).
    """
    if spec.target_rho is not None:
        if spec.n != 1:
            raise ValueError("target_rho is only meaningful for n = 1")
        return gen_scalar_problem(spec.target_rho, spec.sign).problem
    rng = np.random.default_rng((spec.seed, trial_index))
    for _ in range(spec.max_retries):
        p = _draw(rng, spec)
        if spec.sign == SIGN_PLUS:
            return p
        try:
            t1 = transform_to_dare(p, check_pd=False)
        except CdareError:
            continue
        if (
            hermitian_verdict(t1.g_k).is_positive_definite
            and hermitian_verdict(t1.h_k).is_positive_definite
        ):
            return p
    raise RetryExhausted(
        f"no admissible minus-sign problem in {spec.max_retries} draws "
        f"(seed={spec.seed}, trial={trial_index})"
    )


def gen_scalar_problem(rho: float, sign: str = SIGN_PLUS, a: float | None = None) -> ScalarCase:
    """Build a 1x1 problem with known exact solution from a target rate.

    With g = 1 the positive solution is pinned to ``x = a / rho - 1`` and
    ``h = x -/+ a^2 x / (1 + x)`` (minus for the plus-sign equation), so
    the conjugate closed-loop rate at the solution is exactly ``rho``.
    The canonical (rho, a) pairs are used when ``rho`` matches one of
    them; otherwise ``a = sqrt((1 + rho^2) / 2)``, which keeps
    ``rho < a < 1``.  An explicit ``a`` overrides both.
    """
    if not 0.0 < rho < 1.0:
        raise OutOfRange(f"rho must lie in (0, 1), got {rho}")
    if sign not in SIGNS:
        raise ValueError(f"sign must be one of {SIGNS}")
    if a is None:
        for rho_ref, a_ref in SCALAR_FAMILY_PAIRS:
            if abs(rho - rho_ref) <= 1e-12:
                a = a_ref
                break
        else:
            a = float(np.sqrt((1.0 + rho * rho) / 2.0))
    if not rho < a < 1.0:
        raise OutOfRange(f"need rho < a < 1, got a = {a} for rho = {rho}")
    x = a / rho - 1.0
    s = 1.0 if sign == SIGN_PLUS else -1.0
    h = x - s * a * a * x / (1.0 + x)
    if h <= 0.0:
        raise OutOfRange(f"derived h = {h} is not positive")
    one = np.ones((1, 1))
    problem = CdareProblem(a=a * one, g=one.copy(), h=h * one, sign=sign)
    return ScalarCase(problem=problem, x_exact=x, rho=float(rho), a=float(a))


def _prediction(cfg: SolverConfig, report: SolveReport) -> int | None:
    diag = report.diagnostics
    if diag is None or diag.rho_t1 is None:
        return None
    if not 0.0 < diag.rho_t1 < 1.0:
        return 1
    if cfg.order_r == 1:
        return diag.n1_predicted
    return diag.nr_predicted.get(cfg.order_r)


def run_ensemble(spec: EnsembleSpec, cfg: SolverConfig | None = None) -> TrialStats:
    """Run the configured solver over every trial and aggregate.

    Aggregation is order-independent (extrema and sums), so results do
    not depend on scheduling.  Failed trials (errors or non-convergence)
    are excluded from the iteration statistics and counted in
    ``failures``.
    """
    cfg = cfg or SolverConfig()
    records: list[TrialRecord] = []
    for i in range(spec.trials):
        start = time.perf_counter()
        try:
            p = gen_random_problem(spec, i)
            report = solve(p, cfg)
        except CdareError as exc:
            log.warning("trial %d failed: %s", i, exc)
            records.append(TrialRecord(
                trial=i, n=spec.n, rho_t1=None, iterations=0, predicted=None,
                res=np.nan, nres=np.nan,
                time_s=time.perf_counter() - start,
                converged=False, error=f"{type(exc).__name__}: {exc}",
            ))
            continue
        elapsed = time.perf_counter() - start
        diag = report.diagnostics
        records.append(TrialRecord(
            trial=i,
            n=spec.n,
            rho_t1=None if diag is None else diag.rho_t1,
            iterations=report.iterations,
            predicted=_prediction(cfg, report),
            res=report.res,
            nres=report.nres,
            time_s=elapsed,
            converged=report.converged,
        ))
    good = [r for r in records if r.converged]
    failures = len(records) - len(good)
    if good:
        its = [r.iterations for r in good]
        preds = [r.predicted for r in good if r.predicted is not None]
        stats = TrialStats(
            min_it=min(its),
            max_it=max(its),
            ave_it=float(np.mean(its)),
            the_it=float(np.mean(preds)) if preds else float("nan"),
            ave_time=float(np.mean([r.time_s for r in good])),
            failures=failures,
            records=records,
        )
    else:
        stats = TrialStats(
            min_it=0, max_it=0, ave_it=0.0, the_it=float("nan"),
            ave_time=0.0, failures=failures, records=records,
        )
    return stats


def scalar_family_table(
    sign: str = SIGN_PLUS,
    orders=(1, 2, 3, 4, 5),
    rhos=None,
    max_iter_fixed_point: int = 10000,
) -> list[dict]:
    """Solve the scalar family with every method; one row per (method, rho).

    Mirrors the benchmark comparison: the fixed-point row is allowed up
    to ``max_iter_fixed_point`` steps and may report ``converged=False``
    on the near-critical rates, while the accelerated rows finish in a
    handful of outer iterations.
    """
    rhos = [pair[0] for pair in SCALAR_FAMILY_PAIRS] if rhos is None else rhos
    rows = []
    for r in orders:
        for rho in rhos:
            case = gen_scalar_problem(rho, sign)
            cfg = SolverConfig(order_r=r, max_iter=max_iter_fixed_point)
            start = time.perf_counter()
            report = solve(case.problem, cfg)
            elapsed = time.perf_counter() - start
            rows.append({
                "method": "fp" if r == 1 else f"accel:{r}",
                "rho": case.rho,
                "iterations": report.iterations,
                "res": report.res,
                "nres": report.nres,
                "converged": report.converged,
                "error_vs_exact": abs(complex(report.x_pos[0, 0]).real - case.x_exact),
                "time_s": elapsed,
            })
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def records_to_csv(records: list[TrialRecord], with_times: bool = False) -> str:
    """Per-trial CSV with the documented column set.

    ``time_s`` is zeroed unless ``with_times`` is set, so that two runs
    from the same seed produce byte-identical output.
    """
    lines = ["trial,n,rho_T1,iterations,predicted,res,nres,time_s,converged"]
    for r in records:
        lines.append(",".join(_fmt(v) for v in (
            r.trial, r.n, r.rho_t1, r.iterations, r.predicted,
            r.res, r.nres, r.time_s if with_times else 0.0, r.converged,
        )))
    return "\n".join(lines) + "\n"


def stats_to_row(method: str, stats: TrialStats, with_times: bool = False) -> dict:
    """One table row per method with the benchmark summary columns."""
    return {
        "method": method,
        "min_it": stats.min_it,
        "max_it": stats.max_it,
        "ave_it": stats.ave_it,
        "the_it": stats.the_it,
        "ave_time": stats.ave_time if with_times else 0.0,
        "failures": stats.failures,
    }
