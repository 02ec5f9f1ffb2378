"""Acceptance suite: one test per criterion, run with ``pytest -v``.

Each test prints a single PASS line once its assertions hold, so
``pytest -s tests/test_acceptance.py`` gives a per-criterion scoreboard.
"""

import time

import numpy as np
import pytest

from cdare.analysis import (
    closed_loop_S1,
    closed_loop_T1,
    error_identity_check,
    match_spectra,
)
from cdare.bench import EnsembleSpec, gen_random_problem, gen_scalar_problem, run_ensemble
from cdare.matcore import (
    UNIT_ROUNDOFF,
    frob,
    hermitian_verdict,
    loewner_geq,
    spectral_radius,
    stein_solve_conjugate,
)
from cdare.model import CdareProblem, residuals, transform_to_dare
from cdare.solvers import (
    SolverConfig,
    X_NEG_SINGULAR_A,
    accelerated_solve,
    fixed_point_solve,
    semigroup_combine,
    semigroup_step,
)
from conftest import crandn, random_hpd


def plain_sequence(t1, count):
    seq = [t1]
    for _ in range(count - 1):
        seq.append(semigroup_step(seq[-1], t1))
    return seq


def rel_gap(got, ref):
    return frob(got - ref) / max(1.0, frob(ref))


def test_criterion_1_scalar_half_rate_iteration_counts():
    start = time.perf_counter()
    case = gen_scalar_problem(0.5, "plus")

    fp = fixed_point_solve(case.problem, SolverConfig(order_r=1))
    assert fp.converged
    assert fp.res <= UNIT_ROUNDOFF
    assert 22 <= fp.iterations <= 28

    budgets = {2: 5, 3: 4, 5: 3}
    counts = {}
    for r, budget in budgets.items():
        rep = accelerated_solve(case.problem, SolverConfig(order_r=r))
        assert rep.converged
        assert rep.res <= UNIT_ROUNDOFF
        assert rep.iterations <= budget
        counts[r] = rep.iterations
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    print(
        f"\nACCEPTANCE 1 PASS: half-rate scalar, fixed point "
        f"{fp.iterations} its (res {fp.res:.2e}); accelerated "
        f"r=2/3/5 -> {counts[2]}/{counts[3]}/{counts[5]} its "
        f"[{elapsed:.2f}s]"
    )


def test_criterion_2_near_critical_scalar():
    start = time.perf_counter()
    case = gen_scalar_problem(np.sqrt(0.9999), "plus")

    fp = fixed_point_solve(case.problem, SolverConfig(order_r=1, max_iter=10000))
    assert not fp.converged
    assert fp.iterations == 10000

    acc = accelerated_solve(case.problem, SolverConfig(order_r=2))
    assert acc.converged
    assert 15 <= acc.iterations <= 19
    assert acc.res <= 1e-15
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    print(
        f"\nACCEPTANCE 2 PASS: near-critical scalar, fixed point stalls "
        f"(res {fp.res:.2e} after 10000 its), r=2 converges in "
        f"{acc.iterations} its with res {acc.res:.2e} [{elapsed:.2f}s]"
    )


def test_criterion_3_random_ensemble_tracks_prediction():
    start = time.perf_counter()
    spec = EnsembleSpec(n=20, trials=50, seed=2024, sign="plus")
    stats = run_ensemble(spec, SolverConfig(order_r=2))
    assert stats.failures == 0
    assert all(r.converged for r in stats.records)
    assert abs(stats.ave_it - stats.the_it) <= 1.0
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    print(
        f"\nACCEPTANCE 3 PASS: n=20 x 50 trials, 100% converged, "
        f"AveIt {stats.ave_it:.2f} vs TheIt {stats.the_it:.2f} "
        f"[{elapsed:.1f}s]"
    )


def test_criterion_4_semigroup_property():
    worst = 0.0
    for seed in range(20):
        p = gen_random_problem(
            EnsembleSpec(n=4, trials=1, seed=300 + seed, diag_scale=1.0), 0
        )
        seq = plain_sequence(transform_to_dare(p), 8)
        for i in range(1, 8):
            for j in range(1, 9 - i):
                got = semigroup_combine(seq[i - 1], seq[j - 1])
                ref = seq[i + j - 1]
                assert got.k == i + j
                gap = max(
                    frob(got.a_k - ref.a_k) / max(1.0, frob(ref.a_k)),
                    frob(got.g_k - ref.g_k) / frob(ref.g_k),
                    frob(got.h_k - ref.h_k) / frob(ref.h_k),
                )
                worst = max(worst, gap)
                assert gap <= 1e-10, (seed, i, j)
    print(
        f"\nACCEPTANCE 4 PASS: semigroup composition matches the plain "
        f"recursion for 20 problems, all i+j <= 8 (worst gap {worst:.2e})"
    )


def test_criterion_5_acceleration_equivalence():
    worst = 0.0
    for seed in range(10):
        p = gen_random_problem(
            EnsembleSpec(n=4, trials=1, seed=400 + seed, diag_scale=1.0), 0
        )
        t1 = transform_to_dare(p)
        for r in (2, 3, 5):
            seq = plain_sequence(t1, r ** 3)
            rep = accelerated_solve(
                p,
                SolverConfig(order_r=r, max_iter=3, tol_res=1e-300,
                             keep_matrices=True),
            )
            for k in (1, 2, 3):
                ref = seq[r ** k - 1]
                gap = max(
                    rel_gap(rep.trace.a_mats[k - 1], ref.a_k),
                    frob(rep.trace.g_mats[k - 1] - ref.g_k) / frob(ref.g_k),
                    frob(rep.trace.h_mats[k - 1] - ref.h_k) / frob(ref.h_k),
                )
                worst = max(worst, gap)
                assert gap <= 1e-10, (seed, r, k)
    print(
        f"\nACCEPTANCE 5 PASS: accelerated states equal plain states at "
        f"indices r^k for r in (2,3,5), k <= 3, 10 problems "
        f"(worst gap {worst:.2e})"
    )


def test_criterion_6_stein_oracle_equivalence():
    rng = np.random.default_rng(606)
    worst_series, worst_fixed = 0.0, 0.0
    for trial in range(20):
        n = int(rng.integers(2, 7))
        a = crandn(rng, n)
        target = 0.2 + 0.5 * rng.uniform()  # rho(conj(A) A) <= 0.7
        a *= np.sqrt(target / spectral_radius(np.conj(a) @ a))
        q = random_hpd(rng, n)
        x = stein_solve_conjugate(a, q)

        m = np.conj(a) @ a
        rhs = q + a.conj().T @ np.conj(q) @ a
        series = rhs.copy()
        term = rhs
        for _ in range(400):
            term = m.conj().T @ term @ m
            series = series + term
        gap_series = frob(x - series) / frob(x)
        gap_fixed = frob(x - (q + a.conj().T @ np.conj(x) @ a)) / frob(x)
        worst_series = max(worst_series, gap_series)
        worst_fixed = max(worst_fixed, gap_fixed)
        assert gap_series <= 1e-10, trial
        assert gap_fixed <= 1e-10, trial
    print(
        f"\nACCEPTANCE 6 PASS: conjugate Stein solutions match the "
        f"truncated series (worst {worst_series:.2e}) and fix the "
        f"equation (worst {worst_fixed:.2e}) over 20 problems"
    )


def test_criterion_7_negative_definite_solution():
    worst = 0.0
    for seed in range(10):
        p = gen_random_problem(
            EnsembleSpec(n=4, trials=1, seed=700 + seed, diag_scale=1.0), 0
        )
        rep = accelerated_solve(p, SolverConfig(order_r=2))
        assert rep.converged
        assert rep.x_neg is not None, seed
        assert hermitian_verdict(-rep.x_neg).is_positive_definite
        res = residuals(p, rep.x_neg).res
        worst = max(worst, res)
        assert res <= 1e-9, seed

    singular = CdareProblem(
        a=np.array([[0.3, 0.3], [0.3, 0.3]]), g=np.eye(2), h=np.eye(2)
    )
    rep = accelerated_solve(singular, SolverConfig(order_r=2))
    assert rep.converged
    assert rep.x_neg is None
    assert rep.x_neg_status == X_NEG_SINGULAR_A
    print(
        f"\nACCEPTANCE 7 PASS: -G_inf^(-1) negative definite with residual "
        f"<= {worst:.2e} on 10 problems; singular A omits x_neg with the "
        f"singular-A verdict"
    )


def test_criterion_8_closed_loop_identities():
    worst_pow, worst_err, worst_sig = 0.0, 0.0, 0.0
    for seed in range(10):
        p = gen_random_problem(
            EnsembleSpec(n=3, trials=1, seed=800 + seed, diag_scale=1.0), 0
        )
        rep = accelerated_solve(p, SolverConfig(order_r=2))
        assert rep.converged
        t1 = transform_to_dare(p)
        seq = plain_sequence(t1, 4)
        t1_mat = closed_loop_T1(t1, rep.x_pos)
        for k in (1, 2, 3, 4):
            direct = closed_loop_T1(seq[k - 1], rep.x_pos)
            power = np.linalg.matrix_power(t1_mat, k)
            gap = frob(direct - power) / max(1.0, frob(direct))
            worst_pow = max(worst_pow, gap)
            assert gap <= 1e-9, (seed, k)
            defect = error_identity_check(seq[k - 1], rep.x_pos, rep.g_inf)
            worst_err = max(worst_err, defect)
            assert defect <= 1e-9, (seed, k)
        sig_gap = match_spectra(
            np.linalg.eigvals(t1_mat),
            np.conj(np.linalg.eigvals(closed_loop_S1(t1, rep.g_inf))),
        )
        worst_sig = max(worst_sig, sig_gap)
        assert sig_gap <= 1e-8, seed
    print(
        f"\nACCEPTANCE 8 PASS: T_k = T_1^k (worst {worst_pow:.2e}), error "
        f"identities (worst {worst_err:.2e}), spectra match "
        f"(worst {worst_sig:.2e}) on 10 solved instances"
    )


def test_criterion_9_monotone_iterate_chains():
    chains = 0

    def check_increasing(mats, upper=None):
        nonlocal chains
        for older, newer in zip(mats, mats[1:]):
            assert loewner_geq(newer, older, tol=1e-9)
        if upper is not None:
            for m in mats:
                assert loewner_geq(upper, m, tol=1e-9)
        chains += 1

    for seed in range(5):
        plus = gen_random_problem(
            EnsembleSpec(n=4, trials=1, seed=900 + seed, diag_scale=1.0), 0
        )
        fp = fixed_point_solve(plus, SolverConfig(order_r=1, keep_matrices=True))
        assert fp.converged
        check_increasing(fp.trace.h_mats, upper=fp.x_pos)

        acc = accelerated_solve(plus, SolverConfig(order_r=2, keep_matrices=True))
        assert acc.converged
        check_increasing(acc.trace.h_mats, upper=acc.x_pos)
        check_increasing(acc.trace.g_mats)

        minus = gen_random_problem(
            EnsembleSpec(n=4, trials=1, seed=950 + seed, sign="minus",
                         diag_scale=1.0), 0
        )
        accm = accelerated_solve(minus, SolverConfig(order_r=2, keep_matrices=True))
        assert accm.converged
        check_increasing(accm.trace.h_mats, upper=np.asarray(minus.h))
    print(
        f"\nACCEPTANCE 9 PASS: {chains} recorded iterate chains are "
        f"Loewner-monotone (plus increasing toward the solution, minus "
        f"increasing below H)"
    )
