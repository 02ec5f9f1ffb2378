"""Solvability gates, spectral diagnostics, and convergence-rate tools.

The closed-loop matrices of the transformed recursion,

    T_k = (I + G_k H_inf)^-1 A_k,     S_k = A_k (I + G_inf H_k)^-1,

satisfy T_k = T_1^k, S_k = S_1^k and share their spectrum up to
conjugation; rho(T_1) governs every convergence rate in the package, so
the predicted iteration counts N_1 (fixed point) and N_r (order-r
acceleration) are derived from it.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import CdareError, InsufficientTrace, OutOfRange
from .matcore import (
    DEFAULT_TOL,
    UNIT_ROUNDOFF,
    as_cmatrix,
    eigenvalues,
    frob,
    hermitian_verdict,
    solve_linear,
    spectral_radius,
)
from .model import SIGN_MINUS, CdareProblem, DareTriple, transform_to_dare


@dataclass
class SpectralDiagnostics:
    """A-priori and post-hoc spectral quantities of a problem.

    ``rho_conj_a_a`` and ``rho_a_conj_a`` are available before solving;
    everything else needs the converged solution (and ``sigma_s1h``
    additionally needs the converged G-state), so absent values stay
    None/empty.
    """

    rho_conj_a_a: float
    rho_a_conj_a: float
    rho_t1: float | None = None
    n1_predicted: int | None = None
    nr_predicted: dict[int, int] = field(default_factory=dict)
    sigma_t1: list[complex] = field(default_factory=list)
    sigma_s1h: list[complex] = field(default_factory=list)


@dataclass(frozen=True)
class SolvabilityVerdict:
    """Sufficient-condition checks for a unique positive definite solution.

    ``plus_ok``: rho(conj(A) A) < 1, which settles the plus-sign equation.
    ``minus_ok``: the transformed G_1 and H_1 are both positive definite,
    which settles the minus-sign equation.
    """

    plus_ok: bool
    minus_ok: bool
    details: str


def check_solvability(p: CdareProblem, tol: float = DEFAULT_TOL) -> SolvabilityVerdict:
    """Evaluate both sufficient conditions; returns a verdict, never raises."""
    lines = []
    try:
        rho = spectral_radius(np.conj(p.a) @ p.a)
        plus_ok = rho < 1.0 - tol
        lines.append(f"rho(conj(A) A) = {rho:.6g} ({'<' if plus_ok else '>='} 1)")
    except CdareError as exc:
        plus_ok = False
        lines.append(f"rho(conj(A) A) unavailable: {exc}")
    try:
        pm = p if p.sign == SIGN_MINUS else dataclasses.replace(p, sign=SIGN_MINUS)
        t1 = transform_to_dare(pm, check_pd=False)
        vg = hermitian_verdict(t1.g_k, tol)
        vh = hermitian_verdict(t1.h_k, tol)
        minus_ok = vg.is_positive_definite and vh.is_positive_definite
        lines.append(
            f"minus-sign G_1 min eig = {vg.min_eigenvalue:.6g}, "
            f"H_1 min eig = {vh.min_eigenvalue:.6g}"
        )
    except CdareError as exc:
        minus_ok = False
        lines.append(f"minus-sign transform failed: {exc}")
    return SolvabilityVerdict(
        plus_ok=bool(plus_ok), minus_ok=bool(minus_ok), details="; ".join(lines)
    )


def closed_loop_T1(t1: DareTriple, h_inf) -> np.ndarray:
    """Closed-loop matrix (I + G_k H_inf)^-1 A_k of a recursion state."""
    h_inf = as_cmatrix(h_inf, "h_inf")
    return solve_linear(np.eye(t1.n) + t1.g_k @ h_inf, t1.a_k)


def closed_loop_S1(t1: DareTriple, g_inf) -> np.ndarray:
    """Dual closed-loop matrix A_k (I + G_inf H_k)^-1 of a recursion state."""
    g_inf = as_cmatrix(g_inf, "g_inf")
    kmat = np.eye(t1.n) + g_inf @ t1.h_k
    return solve_linear(kmat.T, t1.a_k.T).T


def error_identity_check(tk: DareTriple, h_inf, g_inf) -> float:
    """Largest relative defect of the closed-loop error identities.

    With T_k, S_k as above, a state of index k satisfies::

        H_inf - H_k = T_k^H H_inf A_k
                    = (H_inf T_k)^H (H_inf^-1 + G_k) (H_inf T_k)
        G_inf - G_k = S_k G_inf A_k^H
                    = (S_k G_inf) (G_inf^-1 + H_k) (S_k G_inf)^H

    Each defect is measured relative to max(||lhs||_F, ||limit||_F) so the
    check stays meaningful after convergence, when both sides vanish.
    """
    h_inf = as_cmatrix(h_inf, "h_inf")
    g_inf = as_cmatrix(g_inf, "g_inf")
    n = tk.n
    t_mat = solve_linear(np.eye(n) + tk.g_k @ h_inf, tk.a_k)
    s_mat = closed_loop_S1(tk, g_inf)
    h_inv = solve_linear(h_inf, np.eye(n))
    g_inv = solve_linear(g_inf, np.eye(n))

    lhs_h = h_inf - tk.h_k
    w = h_inf @ t_mat
    cand_h = (
        t_mat.conj().T @ (h_inf @ tk.a_k),
        w.conj().T @ ((h_inv + tk.g_k) @ w),
    )
    lhs_g = g_inf - tk.g_k
    v = s_mat @ g_inf
    cand_g = (
        v @ tk.a_k.conj().T,
        v @ ((g_inv + tk.h_k) @ v.conj().T),
    )
    defect = 0.0
    for lhs, cands, ref in ((lhs_h, cand_h, h_inf), (lhs_g, cand_g, g_inf)):
        denom = max(frob(lhs), frob(ref))
        for rhs in cands:
            defect = max(defect, frob(lhs - rhs) / denom)
    return defect


def predict_iterations(
    rho_t1: float, n: int, orders=(2, 3, 4, 5)
) -> tuple[int, dict[int, int]]:
    """Predicted iteration counts from the closed-loop spectral radius.

    N_1 is the least iteration count with ``rho^N < n*u`` for the fixed
    point, evaluated as ``floor(log10(n*u) / log10(rho)) + 1``; N_r is the
    least outer count with ``(rho^2)^(r^N) < n*u``, evaluated as
    ``floor(log_r(log10(n*u) / log10(rho^2))) + 1``.  Both are clamped to
    at least 1 since every solve performs one iteration.
    """
    if not 0.0 < rho_t1 < 1.0:
        raise OutOfRange(f"rho_t1 must lie in (0, 1), got {rho_t1}")
    if n < 1:
        raise OutOfRange(f"n must be >= 1, got {n}")
    target = np.log10(n * UNIT_ROUNDOFF)
    n1 = max(1, int(np.floor(target / np.log10(rho_t1))) + 1)
    nr: dict[int, int] = {}
    for r in orders:
        if r < 2:
            raise OutOfRange(f"acceleration orders must be >= 2, got {r}")
        ratio = target / (2.0 * np.log10(rho_t1))
        if ratio <= 1.0:
            nr[int(r)] = 1
        else:
            nr[int(r)] = max(1, int(np.floor(np.log(ratio) / np.log(r))) + 1)
    return n1, nr


def empirical_order(trace) -> float:
    """Estimate the convergence behavior from a residual trace.

    For fixed-point traces (``order_r == 1``) fits log(res) against the
    step index and returns exp(slope), an estimate of the per-step
    contraction factor.  For accelerated traces fits log(log(1/res))
    instead and returns exp(slope), an estimate of the order r.  Uses the
    longest strictly-decreasing positive prefix of the residuals and
    needs at least 4 such points.
    """
    res = list(getattr(trace, "res", []))
    ks = list(getattr(trace, "k", range(1, len(res) + 1)))
    order_r = int(getattr(trace, "order_r", 1))
    good_r, good_k = [], []
    for k, r in zip(ks, res):
        if r <= 0 or (good_r and r >= good_r[-1]):
            break
        good_r.append(r)
        good_k.append(k)
    if len(good_r) < 4:
        raise InsufficientTrace(
            f"need >= 4 strictly decreasing positive residuals, "
            f"got {len(good_r)}"
        )
    arr = np.asarray(good_r)
    kk = np.asarray(good_k, dtype=float)
    if order_r == 1:
        y = np.log(arr)
    else:
        keep = arr < 1.0
        if keep.sum() < 4:
            raise InsufficientTrace("need >= 4 residuals below 1")
        kk, arr = kk[keep], arr[keep]
        y = np.log(np.log(1.0 / arr))
    slope = np.polyfit(kk, y, 1)[0]
    return float(np.exp(slope))


def _modulus_sorted(s: np.ndarray) -> np.ndarray:
    return s[np.lexsort((np.angle(s), np.abs(s)))]


def match_spectra(sa, sb) -> float:
    """Largest pairwise gap under greedy multiset matching of two spectra.

    Both lists are sorted by (modulus, argument) with a stable tie-break,
    then each entry of the first is greedily paired with the nearest
    still-unused entry of the second.  The plain sorted comparison is not
    enough: a conjugate pair has equal moduli up to roundoff, so its two
    members can sort in opposite orders on the two sides.
    """
    sa = _modulus_sorted(np.asarray(sa, dtype=complex))
    sb = _modulus_sorted(np.asarray(sb, dtype=complex))
    if sa.shape != sb.shape:
        raise ValueError("spectra have different sizes")
    free = list(range(sb.size))
    worst = 0.0
    for value in sa:
        gaps = np.abs(sb[free] - value)
        pick = int(np.argmin(gaps))
        worst = max(worst, float(gaps[pick]))
        free.pop(pick)
    return worst


def compute_diagnostics(
    p: CdareProblem,
    x_pos=None,
    g_inf=None,
    orders=(2, 3, 4, 5),
) -> SpectralDiagnostics:
    """Assemble spectral diagnostics, post-hoc parts only when available."""
    diag = SpectralDiagnostics(
        rho_conj_a_a=spectral_radius(np.conj(p.a) @ p.a),
        rho_a_conj_a=spectral_radius(p.a @ np.conj(p.a)),
    )
    if x_pos is None:
        return diag
    try:
        t1 = transform_to_dare(p, check_pd=False)
        t_mat = closed_loop_T1(t1, x_pos)
        diag.rho_t1 = spectral_radius(t_mat)
        diag.sigma_t1 = list(eigenvalues(t_mat))
        if 0.0 < diag.rho_t1 < 1.0:
            diag.n1_predicted, diag.nr_predicted = predict_iterations(
                diag.rho_t1, p.n, orders
            )
        if g_inf is not None:
            s_mat = closed_loop_S1(t1, g_inf)
            diag.sigma_s1h = list(np.conj(eigenvalues(s_mat)))
    except CdareError:
        pass
    return diag
