"""Iterative solvers for the conjugate Riccati equation.

Three routes to the positive definite solution:

* plain fixed-point iteration ``X_{k+1} = F(X_k)`` from ``X_1 = H``,
* the three-term recursion on the transformed triple (A_k, G_k, H_k),
  whose index-additive composition rule is exposed as
  :func:`semigroup_combine`,
* the order-r accelerated scheme that repeatedly composes the running
  triple with itself so the outer iterate k holds the state of index r^k
  (r = 2 reproduces structured doubling).

When A is nonsingular the limit of the G-sequence also yields the unique
negative definite solution as ``-G_inf^{-1}``.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .errors import (
    NotPositiveDefinite,
    NotWellPosed,
    SingularA,
    SingularMatrix,
    ValidationFailed,
)
from .matcore import (
    UNIT_ROUNDOFF,
    as_cmatrix,
    condition_estimate as _condition_estimate,
    frob,
    hermitian_verdict,
    solve_linear,
    symmetrize,
)
from .model import (
    SIGN_MINUS,
    CdareProblem,
    DareTriple,
    ResidualPair,
    apply_f,
    dual_problem,
    residuals,
    transform_to_dare,
)

log = logging.getLogger(__name__)

VERDICT_CONVERGED = "converged"
VERDICT_MAX_ITER = "max_iter"
VERDICT_STAGNATED = "stagnated"

#: Consecutive relative-stagnation hits before the solver gives up.
STAGNATION_STREAK = 3

X_NEG_OK = "ok"
X_NEG_NOT_COMPUTED = "not_computed"
X_NEG_SINGULAR_A = "singular_a"
X_NEG_VALIDATION_FAILED = "validation_failed"


@dataclass
class SolverConfig:
    """Knobs shared by all solvers.

    ``order_r = 1`` selects the plain fixed-point iteration; ``order_r >= 2``
    the accelerated scheme of that order.  ``tol_res = None`` resolves to
    the stopping threshold n*u at solve time; an iterate converges when
    its residual or (with ``use_nres``) normalized residual drops to the
    threshold.  ``keep_matrices`` stores the full iterate chain in the
    trace, which is off by default to bound memory.
    """

    order_r: int = 2
    tol_res: float | None = None
    tol_stagnation: float = UNIT_ROUNDOFF
    max_iter: int = 10000
    use_nres: bool = True
    check_wellposed_each_step: bool = True
    keep_matrices: bool = False

    def __post_init__(self):
        if self.order_r < 1:
            raise ValueError("order_r must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol_res is not None and self.tol_res <= 0:
            raise ValueError("tol_res must be positive")

    def resolve_tol(self, n: int) -> float:
        return self.tol_res if self.tol_res is not None else n * UNIT_ROUNDOFF


@dataclass
class IterTrace:
    """Per-step history of a solve.

    ``wall_time`` holds elapsed seconds since the solve started, measured
    on a monotonic clock.  ``min_eig_h`` / ``min_eig_g`` record the
    smallest eigenvalue of the running H / G state (NaN when not
    computed; the fixed-point method has no G-sequence).  When matrices
    are kept, ``h_mats`` / ``g_mats`` / ``a_mats`` hold copies of the
    running states (the fixed-point method keeps only its iterates in
    ``h_mats``).
    """

    order_r: int = 1
    k: list[int] = field(default_factory=list)
    res: list[float] = field(default_factory=list)
    nres: list[float] = field(default_factory=list)
    wall_time: list[float] = field(default_factory=list)
    min_eig_h: list[float] = field(default_factory=list)
    min_eig_g: list[float] = field(default_factory=list)
    h_mats: list[np.ndarray] | None = None
    g_mats: list[np.ndarray] | None = None
    a_mats: list[np.ndarray] | None = None

    def append(self, k, res, nres, wall, meh=np.nan, meg=np.nan):
        self.k.append(int(k))
        self.res.append(float(res))
        self.nres.append(float(nres))
        self.wall_time.append(float(wall))
        self.min_eig_h.append(float(meh))
        self.min_eig_g.append(float(meg))

    def __len__(self) -> int:
        return len(self.k)


@dataclass
class SolveReport:
    """Everything a solve produced.

    ``x_pos`` is the positive definite solution candidate; its residuals
    are re-measured and stored in ``res`` / ``nres``.  ``x_neg`` is the
    negative definite solution ``-G_inf^{-1}`` when available;
    ``x_neg_status`` says why it is absent otherwise.  ``g_inf`` is the
    converged G-state (accelerated runs only).
    """

    x_pos: np.ndarray
    converged: bool
    verdict: str
    iterations: int
    res: float
    nres: float
    trace: IterTrace
    diagnostics: "analysis.SpectralDiagnostics | None" = None
    x_neg: np.ndarray | None = None
    x_neg_status: str = X_NEG_NOT_COMPUTED
    g_inf: np.ndarray | None = None


def _min_eig(m) -> float:
    return float(np.linalg.eigvalsh(symmetrize(m))[0])


def _nres_denominator(p: CdareProblem, x: np.ndarray) -> float:
    delta = solve_linear(np.eye(p.n) + p.g @ x, np.eye(p.n))
    return frob(p.h) + frob(p.a) ** 2 * frob(x) * frob(delta)


def _warn_minus_precondition(p: CdareProblem) -> None:
    # Minus-sign solvability wants G_1, H_1 > 0; attempt anyway but say so.
    if p.sign != SIGN_MINUS:
        return
    try:
        transform_to_dare(p, check_pd=True)
    except NotPositiveDefinite as exc:
        warnings.warn(
            f"minus-sign solvability hypothesis fails ({exc}); "
            "attempting the iteration anyway",
            stacklevel=3,
        )
    except SingularMatrix as exc:
        warnings.warn(
            f"transform to standard form failed ({exc}); "
            "attempting the iteration anyway",
            stacklevel=3,
        )


def _stopped(res: float, nres: float, tol: float, use_nres: bool) -> bool:
    return res <= tol or (use_nres and nres <= tol)


def _finish(p, cfg, x_pos, fallback, fallback_res, verdict, its, trace,
            g_inf=None):
    # Prefer the newest iterate, but never report a solution whose
    # residual was not verified to meet the stopping rule.
    converged = verdict == VERDICT_CONVERGED
    rp = residuals(p, x_pos)
    if converged and not _stopped(rp.res, rp.nres, cfg.resolve_tol(p.n),
                                  cfg.use_nres):
        x_pos = fallback
        rp = fallback_res
    report = SolveReport(
        x_pos=x_pos,
        converged=converged,
        verdict=verdict,
        iterations=its,
        res=rp.res,
        nres=rp.nres,
        trace=trace,
        g_inf=g_inf,
    )
    if g_inf is not None and converged:
        try:
            report.x_neg = negative_solution(p, g_inf, tol=cfg.resolve_tol(p.n))
            report.x_neg_status = X_NEG_OK
        except SingularA:
            report.x_neg_status = X_NEG_SINGULAR_A
        except (ValidationFailed, SingularMatrix, NotPositiveDefinite) as exc:
            log.warning("negative solution rejected: %s", exc)
            report.x_neg_status = X_NEG_VALIDATION_FAILED
    try:
        report.diagnostics = analysis.compute_diagnostics(
            p,
            x_pos=x_pos if converged else None,
            g_inf=g_inf if converged else None,
            orders=tuple(sorted({2, 3, 4, 5} | {cfg.order_r} - {1})),
        )
    except Exception:  # diagnostics are best-effort, never fail a solve
        log.exception("post-hoc diagnostics failed")
    return report


def fixed_point_solve(p: CdareProblem, cfg: SolverConfig | None = None) -> SolveReport:
    """Plain fixed-point iteration ``X_{k+1} = F(X_k)`` with ``X_1 = H``.

    Stops when the residual rule passes, on stagnation, or at
    ``max_iter`` (a non-error verdict with ``converged=False``).  A
    singular resolvent mid-iteration raises
    :class:`~cdare.errors.NotWellPosed` with the partial trace attached.

    The error contracts linearly with factor ``rho(T_1)``, the spectral
    radius of the transformed closed-loop matrix, so this method crawls
    when that radius approaches 1.
    """
    cfg = cfg or SolverConfig(order_r=1)
    tol = cfg.resolve_tol(p.n)
    _warn_minus_precondition(p)
    trace = IterTrace(order_r=1)
    if cfg.keep_matrices:
        trace.h_mats = []
    x = np.array(p.h, copy=True)
    start = time.perf_counter()
    verdict = VERDICT_MAX_ITER
    streak = 0
    its = 0
    last_res = residuals(p, x)
    for k in range(1, cfg.max_iter + 1):
        its = k
        try:
            fx = apply_f(p, x)
            res = frob(x - fx)
            nres = res / _nres_denominator(p, x)
        except SingularMatrix as exc:
            raise NotWellPosed(k, str(exc), trace=trace) from exc
        meh = _min_eig(x) if cfg.check_wellposed_each_step else np.nan
        trace.append(k, res, nres, time.perf_counter() - start, meh)
        if cfg.keep_matrices:
            trace.h_mats.append(x.copy())
        last_res = ResidualPair(res=res, nres=nres)
        if _stopped(res, nres, tol, cfg.use_nres):
            verdict = VERDICT_CONVERGED
            x, fallback = fx, x
            break
        streak = streak + 1 if res <= cfg.tol_stagnation * frob(x) else 0
        if streak >= STAGNATION_STREAK:
            verdict = VERDICT_STAGNATED
            x, fallback = fx, x
            break
        x = fx
    else:
        fallback = x
    return _finish(p, cfg, x, fallback, last_res, verdict, its, trace)


def semigroup_combine(ti: DareTriple, tj: DareTriple) -> DareTriple:
    """Compose two states of the recursion into the index-sum state.

    Implements the semigroup rule::

        A_{i+j} = A_j (I + G_i H_j)^-1 A_i
        G_{i+j} = G_j + A_j (I + G_i H_j)^-1 G_i A_j^H
        H_{i+j} = H_i + A_i^H H_j (I + G_i H_j)^-1 A_i

    With i = j this is one structured-doubling step.  A singular
    resolvent raises :class:`~cdare.errors.NotWellPosed` carrying the
    target index i + j.
    """
    if ti.n != tj.n:
        raise ValueError(f"dimension mismatch {ti.n} vs {tj.n}")
    n = ti.n
    kmat = np.eye(n) + ti.g_k @ tj.h_k
    try:
        dai = solve_linear(kmat, ti.a_k)                 # D A_i
        dgah = solve_linear(kmat, ti.g_k @ tj.a_k.conj().T)  # D G_i A_j^H
    except SingularMatrix as exc:
        raise NotWellPosed(ti.k + tj.k, str(exc)) from exc
    return DareTriple(
        a_k=tj.a_k @ dai,
        g_k=symmetrize(tj.g_k + tj.a_k @ dgah),
        h_k=symmetrize(ti.h_k + ti.a_k.conj().T @ (tj.h_k @ dai)),
        k=ti.k + tj.k,
    )


def semigroup_step(t: DareTriple, initial: DareTriple) -> DareTriple:
    """Advance the recursion one step: t_{k+1} from t_k and t_1.

    Specializes :func:`semigroup_combine` with the initial triple on the
    j side, reproducing the plain three-term recursion
    ``A_{k+1} = A_1 (I + G_k H_1)^-1 A_k`` and friends.
    """
    return semigroup_combine(t, initial)


def accelerated_solve(p: CdareProblem, cfg: SolverConfig | None = None) -> SolveReport:
    """Order-r accelerated iteration on the transformed triple.

    Starting from the hat state equal to the initial triple, every outer
    step composes the hat state with itself r times in total (an inner
    chain of r - 1 semigroup compositions), so after k outer steps the
    hat state holds the plain recursion's index r^k.  Convergence is
    measured on the hat H-state against the ORIGINAL conjugate equation;
    the error decays r-superlinearly with order r once the closed-loop
    spectral radius is below 1.

    On convergence the report also carries ``g_inf`` and, when A is
    nonsingular, the negative definite solution ``-G_inf^{-1}``.
    """
    cfg = cfg or SolverConfig()
    if cfg.order_r < 2:
        raise ValueError("accelerated_solve needs order_r >= 2")
    r = cfg.order_r
    tol = cfg.resolve_tol(p.n)
    _warn_minus_precondition(p)
    hat = transform_to_dare(p, check_pd=False)
    trace = IterTrace(order_r=r)
    if cfg.keep_matrices:
        trace.h_mats = []
        trace.g_mats = []
        trace.a_mats = []
    start = time.perf_counter()
    verdict = VERDICT_MAX_ITER
    streak = 0
    its = 0
    prev_h = hat.h_k
    last_res = residuals(p, prev_h)
    fallback = prev_h
    for k in range(1, cfg.max_iter + 1):
        its = k
        cur = hat
        for _ in range(r - 1):
            cur = semigroup_combine(hat, cur)
        hat = cur
        try:
            fx = apply_f(p, hat.h_k)
            res = frob(hat.h_k - fx)
            nres = res / _nres_denominator(p, hat.h_k)
        except SingularMatrix as exc:
            raise NotWellPosed(k, str(exc), trace=trace) from exc
        if cfg.check_wellposed_each_step:
            meh, meg = _min_eig(hat.h_k), _min_eig(hat.g_k)
        else:
            meh = meg = np.nan
        trace.append(k, res, nres, time.perf_counter() - start, meh, meg)
        if cfg.keep_matrices:
            trace.h_mats.append(np.array(hat.h_k, copy=True))
            trace.g_mats.append(np.array(hat.g_k, copy=True))
            trace.a_mats.append(np.array(hat.a_k, copy=True))
        last_res = ResidualPair(res=res, nres=nres)
        fallback = hat.h_k
        if _stopped(res, nres, tol, cfg.use_nres):
            verdict = VERDICT_CONVERGED
            break
        step = frob(hat.h_k - prev_h)
        streak = streak + 1 if step <= cfg.tol_stagnation * frob(prev_h) else 0
        if streak >= STAGNATION_STREAK:
            verdict = VERDICT_STAGNATED
            break
        prev_h = hat.h_k
    return _finish(
        p, cfg, hat.h_k, fallback, last_res, verdict, its, trace,
        g_inf=np.array(hat.g_k, copy=True),
    )


def negative_solution(p: CdareProblem, g_inf, tol: float | None = None) -> np.ndarray:
    """Extract the negative definite solution ``-G_inf^{-1}``.

    Requires nonsingular A: the rank identity
    ``rank(I + G conj(Y)) = rank(A)`` makes the candidate meaningless
    otherwise, so :class:`~cdare.errors.SingularA` is raised.

    The result is validated to be Hermitian negative definite with a
    conjugate-equation residual within 10x the stopping tolerance.  That
    same rank identity makes ``I + G conj(Y)`` nearly singular whenever A
    is badly conditioned, which amplifies the attainable residual at Y by
    its condition number, so the primal budget is scaled by an estimate
    of it; the residual of ``G_inf`` in the dual equation, which has no
    such amplification, is accepted as an alternative witness.
    :class:`ValidationFailed` carries the offending residual.
    """
    tol = tol if tol is not None else p.n * UNIT_ROUNDOFF
    g_inf = as_cmatrix(g_inf, "g_inf")
    sv = np.linalg.svd(p.a, compute_uv=False)
    if sv[-1] <= p.n * UNIT_ROUNDOFF * sv[0]:
        raise SingularA(
            f"A is numerically singular (sigma_min/sigma_max = "
            f"{sv[-1] / max(sv[0], 1e-300):.3e})"
        )
    if not hermitian_verdict(g_inf).is_positive_definite:
        raise NotPositiveDefinite("g_inf must be Hermitian positive definite")
    y = symmetrize(-solve_linear(g_inf, np.eye(p.n)))
    if not hermitian_verdict(-y).is_positive_definite:
        raise ValidationFailed("-g_inf^{-1} is not negative definite")
    rp = residuals(p, y)
    budget = 10.0 * tol
    kappa = _condition_estimate(np.eye(p.n) + p.g @ np.conj(y))
    # the amplified budget must stay far below the solution scale or an
    # extreme condition estimate would wave anything through
    primal_budget = min(
        budget * max(1.0, frob(p.h)) * max(1.0, kappa),
        np.sqrt(UNIT_ROUNDOFF) * max(1.0, frob(p.h)),
    )
    primal_ok = rp.nres <= budget or rp.res <= primal_budget
    if not primal_ok:
        rp_dual = residuals(dual_problem(p), g_inf)
        if rp_dual.nres > budget and rp_dual.res > budget * max(1.0, frob(p.g)):
            raise ValidationFailed(
                f"negative-solution residual {rp.res:.3e} "
                f"(nres {rp.nres:.3e}, dual nres {rp_dual.nres:.3e}) "
                f"exceeds budget", residual=rp.res,
            )
    return y


def solve(p: CdareProblem, cfg: SolverConfig | None = None) -> SolveReport:
    """Dispatch on ``cfg.order_r``: 1 means fixed point, >= 2 accelerated."""
    cfg = cfg or SolverConfig()
    if cfg.order_r == 1:
        return fixed_point_solve(p, cfg)
    return accelerated_solve(p, cfg)
