"""Problem definition and the core Riccati operators.

Defines the conjugate equation ``X = H +/- A^H conj(X) (I + G conj(X))^-1 A``
for square complex A and Hermitian positive definite G, H, together with
its reduction to a standard (conjugation-free) Riccati recursion, residual
metrics, and the dual problem whose solution yields the negative definite
branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefinite
from .matcore import (
    DEFAULT_TOL,
    as_cmatrix,
    frob,
    hermitian_verdict,
    solve_linear,
    symmetrize,
)

SIGN_PLUS = "plus"
SIGN_MINUS = "minus"
SIGNS = (SIGN_PLUS, SIGN_MINUS)


def _freeze(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class CdareProblem:
    """Coefficient triple (A, G, H), sign, and dimension.

    G and H must be Hermitian positive definite; all three matrices are
    n x n.  Instances are immutable (arrays are locked read-only) and safe
    to share between threads.
    """

    a: np.ndarray
    g: np.ndarray
    h: np.ndarray
    sign: str = SIGN_PLUS

    def __post_init__(self):
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be one of {SIGNS}, got {self.sign!r}")
        a = as_cmatrix(self.a, "A")
        g = as_cmatrix(self.g, "G")
        h = as_cmatrix(self.h, "H")
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError(f"A must be square, got shape {a.shape}")
        for name, m in (("G", g), ("H", h)):
            if m.shape != (n, n):
                raise ValueError(
                    f"{name} must match A's shape {(n, n)}, got {m.shape}"
                )
            if not hermitian_verdict(m).is_positive_definite:
                raise ValueError(
                    f"{name} must be Hermitian positive definite"
                )
        object.__setattr__(self, "a", _freeze(a))
        # store exactly Hermitian copies so residuals at fixed points of
        # the operator vanish identically rather than at roundoff level
        object.__setattr__(self, "g", _freeze(symmetrize(g)))
        object.__setattr__(self, "h", _freeze(symmetrize(h)))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def sign_factor(self) -> float:
        return 1.0 if self.sign == SIGN_PLUS else -1.0


@dataclass(frozen=True)
class DareTriple:
    """Running state (A_k, G_k, H_k) of the transformed recursion.

    ``k`` is the semigroup index: composing states adds indices.  G_k and
    H_k are kept explicitly Hermitian (symmetrized after every update).
    """

    a_k: np.ndarray
    g_k: np.ndarray
    h_k: np.ndarray
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "a_k", _freeze(as_cmatrix(self.a_k, "A_k")))
        object.__setattr__(self, "g_k", _freeze(as_cmatrix(self.g_k, "G_k")))
        object.__setattr__(self, "h_k", _freeze(as_cmatrix(self.h_k, "H_k")))
        if self.k < 1:
            raise ValueError("semigroup index k must be >= 1")

    @property
    def n(self) -> int:
        return self.a_k.shape[0]


@dataclass(frozen=True)
class ResidualPair:
    """Residual ||X - F(X)||_F and its normalized companion."""

    res: float
    nres: float


def _is_hermitian_enough(x: np.ndarray) -> bool:
    nx = frob(x)
    return frob(x - x.conj().T) <= DEFAULT_TOL * max(nx, 1e-300)


def apply_f(p: CdareProblem, x) -> np.ndarray:
    """Evaluate F(X) = H +/- A^H conj(X) (I + G conj(X))^-1 A.

    Raises :class:`~cdare.errors.SingularMatrix` when I + G conj(X) is
    numerically singular.  Hermitian input yields exactly Hermitian
    output (symmetrized to kill roundoff drift).
    """
    x = as_cmatrix(x, "X")
    n = p.n
    xb = np.conj(x)
    z = solve_linear(np.eye(n) + p.g @ xb, p.a)
    out = p.h + p.sign_factor * (p.a.conj().T @ (xb @ z))
    if _is_hermitian_enough(x):
        out = symmetrize(out)
    return out


def transform_to_dare(p: CdareProblem, check_pd: bool = True) -> DareTriple:
    """Collapse the conjugate equation to its standard-form initial triple.

    Returns (A_1, G_1, H_1) with::

        A_1 = conj(A) D A,
        G_1 = conj(G) +/- conj(A) D G conj(A)^H,
        H_1 = H +/- A^H conj(H) D A,      D = (I + G conj(H))^-1.

    Any solution of the original equation also satisfies
    ``X = H_1 + A_1^H X (I + G_1 X)^-1 A_1``.  For the minus sign the
    solvability theory needs G_1 and H_1 positive definite; with
    ``check_pd`` this is verified and :class:`NotPositiveDefinite` raised
    on failure (callers that want to attempt the iteration anyway pass
    ``check_pd=False``).
    """
    n = p.n
    s = p.sign_factor
    hb = np.conj(p.h)
    kmat = np.eye(n) + p.g @ hb
    da = solve_linear(kmat, p.a)             # D A
    dgah = solve_linear(kmat, p.g @ p.a.T)   # D G conj(A)^H
    ab = np.conj(p.a)
    a1 = ab @ da
    g1 = symmetrize(np.conj(p.g) + s * (ab @ dgah))
    h1 = symmetrize(p.h + s * (p.a.conj().T @ (hb @ da)))
    if check_pd and p.sign == SIGN_MINUS:
        for name, m in (("G_1", g1), ("H_1", h1)):
            if not hermitian_verdict(m).is_positive_definite:
                raise NotPositiveDefinite(
                    f"{name} is not positive definite; the minus-sign "
                    "solvability hypothesis fails"
                )
    return DareTriple(a1, g1, h1, k=1)


def apply_dare(t: DareTriple, x) -> np.ndarray:
    """Evaluate the transformed operator H_k + A_k^H X (I + G_k X)^-1 A_k."""
    x = as_cmatrix(x, "X")
    z = solve_linear(np.eye(t.n) + t.g_k @ x, t.a_k)
    out = t.h_k + t.a_k.conj().T @ (x @ z)
    if _is_hermitian_enough(x):
        out = symmetrize(out)
    return out


def apply_f_squared(p: CdareProblem, x) -> np.ndarray:
    """Evaluate F(F(X)) through the transformed triple.

    Algebraically equal to composing :func:`apply_f` twice; computed as
    ``H_1 + A_1^H X (I + G_1 X)^-1 A_1`` instead, which is one resolvent
    cheaper and exactly the recursion the solvers iterate.
    """
    return apply_dare(transform_to_dare(p, check_pd=False), x)


def residuals(p: CdareProblem, x) -> ResidualPair:
    """Residual metrics of a candidate solution.

    ``res = ||X - F(X)||_F`` and
    ``nres = res / (||H||_F + ||A||_F^2 ||X||_F ||(I + G X)^-1||_F)``,
    the normalized form used by the stopping rule.  The normalization
    factor uses the iterate X as printed, not its conjugate.
    """
    x = as_cmatrix(x, "X")
    fx = apply_f(p, x)
    res = frob(x - fx)
    delta = solve_linear(np.eye(p.n) + p.g @ x, np.eye(p.n))
    denom = frob(p.h) + frob(p.a) ** 2 * frob(x) * frob(delta)
    return ResidualPair(res=res, nres=res / denom)


def dual_problem(p: CdareProblem) -> CdareProblem:
    """Companion problem whose positive solution encodes the negative one.

    Maps (A, G, H) to (conj(A)^H, conj(H), conj(G)) with the same sign:
    the dual equation ``X = conj(G) +/- conj(A) conj(X) (I + conj(H)
    conj(X))^-1 conj(A)^H`` rewritten in standard shape.  Applying it
    twice returns the original problem.
    """
    return CdareProblem(
        a=p.a.T.copy(),
        g=np.conj(p.h),
        h=np.conj(p.g),
        sign=p.sign,
    )


# ---------------------------------------------------------------------------
# JSON problem format: complex scalars as [re, im] pairs, matrices row-major.
# ---------------------------------------------------------------------------


def matrix_to_pairs(m) -> list:
    """Encode a complex matrix as nested [re, im] pairs, row-major."""
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def matrix_from_pairs(data, name: str = "matrix") -> np.ndarray:
    """Decode the nested [re, im] pair encoding back to a complex matrix."""
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name}: malformed matrix data ({exc})") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(
            f"{name}: expected nested [re, im] pairs, got shape {arr.shape}"
        )
    return as_cmatrix(arr[:, :, 0] + 1j * arr[:, :, 1], name)


def problem_to_dict(p: CdareProblem) -> dict:
    """Serialize a problem to the documented JSON object layout."""
    return {
        "n": p.n,
        "sign": p.sign,
        "A": matrix_to_pairs(p.a),
        "G": matrix_to_pairs(p.g),
        "H": matrix_to_pairs(p.h),
    }


def problem_from_dict(data: dict) -> CdareProblem:
    """Parse the JSON object layout; raises ValueError naming bad fields."""
    if not isinstance(data, dict):
        raise ValueError("problem must be a JSON object")
    for key in ("sign", "A", "G", "H"):
        if key not in data:
            raise ValueError(f"problem is missing required field {key!r}")
    p = CdareProblem(
        a=matrix_from_pairs(data["A"], "A"),
        g=matrix_from_pairs(data["G"], "G"),
        h=matrix_from_pairs(data["H"], "H"),
        sign=data["sign"],
    )
    if "n" in data and int(data["n"]) != p.n:
        raise ValueError(
            f"field 'n' = {data['n']} does not match matrix size {p.n}"
        )
    return p
