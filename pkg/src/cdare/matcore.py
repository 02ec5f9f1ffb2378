"""Dense complex-matrix kernels shared by every other module.

Pivoted linear solves, the Sherman-Morrison-Woodbury update, spectral
radius, Hermitian/definiteness verdicts, the Loewner order test, and an
independent conjugate-Stein solver used as a cross-check oracle.

All functions are pure: inputs are coerced to fresh ``complex128``
arrays and never mutated, so values are safe to share between threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import (
    EigenFailure,
    IllConditionedWarning,
    NotHermitian,
    NotPositiveDefinite,
    SingularMatrix,
    SpectralRadiusTooLarge,
    ValidationFailed,
)

#: Unit roundoff of IEEE double precision, u = 2**-52.
UNIT_ROUNDOFF = 2.0 ** -52

#: Default relative tolerance for Hermitian / definiteness verdicts.
DEFAULT_TOL = 1e-12

#: Largest dimension handled by the dense Kronecker route in
#: :func:`stein_solve_conjugate`; beyond it the n^2 x n^2 system gets too
#: big and the truncated-series route takes over.
STEIN_KRON_LIMIT = 32


def as_cmatrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a fresh, finite, 2-D complex128 array.

    Scalars become 1x1; 1-D arrays become column vectors.  Non-finite
    entries (NaN/Inf) raise ``ValueError``.
    """
    out = np.array(m, dtype=np.complex128, copy=True)
    if out.ndim == 0:
        out = out.reshape(1, 1)
    elif out.ndim == 1:
        out = out.reshape(-1, 1)
    elif out.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {out.shape}")
    if out.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(out.real)) or not np.all(np.isfinite(out.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def conj(m) -> np.ndarray:
    """Entrywise complex conjugate (no transpose)."""
    return np.conj(np.asarray(m, dtype=np.complex128))


def conj_transpose(m) -> np.ndarray:
    """Conjugate transpose m^H."""
    return np.asarray(m, dtype=np.complex128).conj().T


def frob(m) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(m, "fro"))


def symmetrize(m) -> np.ndarray:
    """Hermitian part (m + m^H) / 2, used to kill roundoff drift."""
    m = np.asarray(m, dtype=np.complex128)
    return (m + m.conj().T) / 2.0


def _require_square(m: np.ndarray, name: str) -> None:
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")


def solve_linear(m, rhs) -> np.ndarray:
    """Solve ``m @ z = rhs`` by partial-pivoted LU.

    Raises
    ------
    SingularMatrix
        When the smallest pivot magnitude falls below ``u * ||m||_F``,
        which signals that the resolvent factor does not exist.

    Notes
    -----
    A reciprocal-condition estimate below ``u`` only emits
    :class:`~cdare.errors.IllConditionedWarning`; near-critical problems
    must keep running rather than abort.
    """
    m = as_cmatrix(m, "m")
    rhs = as_cmatrix(rhs, "rhs")
    _require_square(m, "m")
    if rhs.shape[0] != m.shape[0]:
        raise ValueError(
            f"rhs has {rhs.shape[0]} rows, expected {m.shape[0]}"
        )
    with warnings.catch_warnings():
        # exact-zero pivots are reported through SingularMatrix below
        warnings.simplefilter("ignore", la.LinAlgWarning)
        lu, piv = la.lu_factor(m, check_finite=False)
    pivots = np.abs(np.diagonal(lu))
    floor = UNIT_ROUNDOFF * frob(m)
    if not np.all(pivots > floor):
        raise SingularMatrix(
            f"pivot {pivots.min():.3e} below singularity floor {floor:.3e}"
        )
    anorm = np.linalg.norm(m, 1)
    rcond, info = la.lapack.zgecon(lu, anorm)
    if info == 0 and 0.0 < rcond < UNIT_ROUNDOFF:
        warnings.warn(
            f"condition estimate {1.0 / rcond:.3e} exceeds 1/u",
            IllConditionedWarning,
            stacklevel=2,
        )
    return la.lu_solve((lu, piv), rhs, check_finite=False)


def inverse(m) -> np.ndarray:
    """Matrix inverse via the pivoted solve."""
    m = as_cmatrix(m, "m")
    return solve_linear(m, np.eye(m.shape[0]))


def condition_estimate(m) -> float:
    """Cheap 1-norm condition estimate via LU; inf for singular input."""
    m = as_cmatrix(m, "m")
    _require_square(m, "m")
    lu, _ = la.lu_factor(m, check_finite=False)
    rcond, info = la.lapack.zgecon(lu, np.linalg.norm(m, 1))
    if info != 0 or rcond <= 0.0:
        return float("inf")
    return 1.0 / float(rcond)


def smw_inverse(x, a, y, b, sign: int = 1) -> np.ndarray:
    """Inverse of ``x + sign * a @ y @ b`` by Sherman-Morrison-Woodbury.

    Expands to ``x^-1 - sign * x^-1 a (y^-1 + sign * b x^-1 a)^-1 b x^-1``;
    both inner solves may raise :class:`SingularMatrix`.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    xi = inverse(x)
    yi = inverse(y)
    a = as_cmatrix(a, "a")
    b = as_cmatrix(b, "b")
    core = solve_linear(yi + sign * (b @ xi @ a), b @ xi)
    return xi - sign * (xi @ a @ core)


def eigenvalues(m) -> np.ndarray:
    """Full eigenvalue set from the dense general-purpose eigensolver."""
    m = as_cmatrix(m, "m")
    _require_square(m, "m")
    try:
        return np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc


def spectral_radius(m) -> float:
    """Spectral radius max |lambda| over the full eigenvalue set."""
    return float(np.max(np.abs(eigenvalues(m))))


@dataclass(frozen=True)
class HermitianVerdict:
    """Outcome of the Hermitian / positive-definiteness test.

    ``tolerance_used`` is the scaled threshold ``tol * ||m||_F`` that both
    the symmetry defect and the minimum eigenvalue were compared against.
    """

    is_hermitian: bool
    min_eigenvalue: float
    is_positive_definite: bool
    tolerance_used: float


def hermitian_verdict(m, tol: float = DEFAULT_TOL) -> HermitianVerdict:
    """Check Hermitian symmetry and positive definiteness of ``m``.

    The minimum eigenvalue comes from the Hermitian part so the same
    computation serves Loewner-order checks; positive definiteness means
    the minimum eigenvalue exceeds ``tol * ||m||_F``.
    """
    m = as_cmatrix(m, "m")
    _require_square(m, "m")
    scale = tol * frob(m)
    is_h = frob(m - m.conj().T) <= scale
    try:
        min_eig = float(np.linalg.eigvalsh(symmetrize(m))[0])
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    return HermitianVerdict(
        is_hermitian=bool(is_h),
        min_eigenvalue=min_eig,
        is_positive_definite=bool(is_h and min_eig > scale),
        tolerance_used=scale,
    )


def loewner_geq(a, b, tol: float = DEFAULT_TOL) -> bool:
    """Loewner order test a >= b: is a - b positive semidefinite?

    True when the minimum eigenvalue of the difference is at least
    ``-tol * max(1, ||a||_F, ||b||_F)``.  Raises :class:`NotHermitian`
    when either operand fails the Hermitian check.
    """
    a = as_cmatrix(a, "a")
    b = as_cmatrix(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    for name, m in (("a", a), ("b", b)):
        if not hermitian_verdict(m, tol).is_hermitian:
            raise NotHermitian(f"{name} is not Hermitian within tolerance")
    min_eig = float(np.linalg.eigvalsh(symmetrize(a - b))[0])
    return min_eig >= -tol * max(1.0, frob(a), frob(b))


def _stein_series(m, rhs, max_terms: int) -> np.ndarray:
    # Sum_{i>=0} (m^H)^i rhs m^i, truncated when terms stop mattering.
    acc = rhs.copy()
    term = rhs
    mh = m.conj().T
    for _ in range(max_terms):
        term = mh @ term @ m
        acc += term
        if frob(term) <= UNIT_ROUNDOFF * frob(acc):
            break
    return acc


def stein_solve_conjugate(
    a, q, tol: float = DEFAULT_TOL, max_terms: int = 10000
) -> np.ndarray:
    """Solve the conjugate Stein equation ``X = Q + A^H conj(X) A``.

    Eliminates the conjugate by one substitution, giving the standard
    Stein equation ``X = Q + A^H conj(Q) A + M^H X M`` with
    ``M = conj(A) A``, then solves the vectorized n^2 x n^2 system
    ``(I - M^T kron M^H) vec(X) = vec(Q + A^H conj(Q) A)``.  For
    ``n > STEIN_KRON_LIMIT`` a truncated series with an explicit term
    budget is used instead.

    Requires ``rho(conj(A) A) < 1`` and Hermitian positive definite Q;
    the returned X is Hermitian positive definite.
    """
    a = as_cmatrix(a, "a")
    q = as_cmatrix(q, "q")
    _require_square(a, "a")
    if a.shape != q.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {q.shape}")
    if not hermitian_verdict(q, tol).is_positive_definite:
        raise NotPositiveDefinite("q must be Hermitian positive definite")
    m = np.conj(a) @ a
    rho = spectral_radius(m)
    if rho >= 1.0 - tol:
        raise SpectralRadiusTooLarge(
            f"rho(conj(A) A) = {rho:.6g} is not below 1"
        )
    rhs = q + a.conj().T @ np.conj(q) @ a
    n = a.shape[0]
    if n <= STEIN_KRON_LIMIT:
        big = np.eye(n * n) - np.kron(m.T, m.conj().T)
        vec = solve_linear(big, rhs.reshape(-1, 1, order="F"))
        x = vec.reshape(n, n, order="F")
    else:
        x = _stein_series(m, rhs, max_terms)
    x = symmetrize(x)
    resid = frob(x - (q + a.conj().T @ np.conj(x) @ a))
    if resid > 1e-10 * max(1.0, frob(x)):
        raise ValidationFailed(
            f"conjugate Stein residual {resid:.3e} too large", residual=resid
        )
    return x
