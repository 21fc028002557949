"""Acceptance gate: ten go/no-go checks with one PASS/FAIL line each.

Run with ``pytest -v tests/test_acceptance.py`` (add ``-s`` to see the
PASS/FAIL lines on success).  Each check re-raises on failure so the gate
stays a normal pytest suite.
"""

from __future__ import annotations

import time

import numpy as np

from kyle_stability import (
    ModelParams,
    SimConfig,
    classify_fixed_point,
    equilibrium_config,
    equilibrium_from_params,
    insider_policy_step,
    insider_response,
    iterate,
    jacobian_closed_form,
    jacobian_fd,
    maker_policy_step,
    market_maker_response,
    perturbation_battery,
    pinned_coordinate_derivative,
    pinned_coordinate_step,
    pinned_step_polynomials,
    simulate,
    terminal_variance_check,
)

from conftest import (
    BUMPED_BETA_N3,
    EIG_EQ_N3,
    EIG_SECOND_N3,
    EQ_BETA_N3,
    SECOND_FP_N3,
    bumped_params_n3,
    random_params,
)

SEED = 20240901


def _report(num: int, description: str, check) -> None:
    try:
        check()
    except BaseException:
        print(f"FAIL: criterion {num} - {description}")
        raise
    print(f"PASS: criterion {num} - {description}")


def test_criterion_01_equilibrium_digits():
    def check():
        params = ModelParams(n_periods=3)
        eq = equilibrium_from_params(params)
        assert np.max(np.abs(eq.beta - EQ_BETA_N3)) <= 1e-12
        bumped = equilibrium_from_params(bumped_params_n3())
        assert np.max(np.abs(bumped.beta - BUMPED_BETA_N3)) <= 1e-12
        best = min(
            _timed(lambda: equilibrium_from_params(params)) for _ in range(20)
        )
        assert best < 1e-3, f"equilibrium solve took {best:.2e} s"

    _report(1, "three-round equilibrium digits to 1e-12 in under 1 ms", check)


def _timed(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def test_criterion_02_two_round_jacobian_entries():
    def check():
        rng = np.random.default_rng(SEED)
        param_sets = [ModelParams(n_periods=2)]
        for _ in range(2):
            param_sets.append(random_params(rng, 2))
        for params in param_sets:
            eq = equilibrium_from_params(params)
            jac = jacobian_fd(insider_policy_step, eq.beta, params)
            assert abs(jac[0, 0] - (-0.981214)) <= 1e-5
            assert abs(jac[1, 0] - 0.554958) <= 1e-5
            assert abs(jac[0, 1]) <= 1e-7
            assert abs(jac[1, 1]) <= 1e-7

    _report(
        2,
        "two-round Jacobian entries (-0.981214, 0, 0.554958, 0) across parameter sets",
        check,
    )


def test_criterion_03_eigenvalue_references():
    def check():
        params = ModelParams(n_periods=3)
        eq = equilibrium_from_params(params)
        ev_eq = np.linalg.eigvals(jacobian_fd(insider_policy_step, eq.beta, params))
        ev_second = np.linalg.eigvals(
            jacobian_fd(insider_policy_step, SECOND_FP_N3, params)
        )
        for got, want in ((ev_eq, EIG_EQ_N3), (ev_second, EIG_SECOND_N3)):
            got = sorted(got, key=lambda z: (z.real, z.imag))
            want = sorted(np.asarray(want, dtype=complex), key=lambda z: (z.real, z.imag))
            assert np.max(np.abs(np.asarray(got) - np.asarray(want))) <= 1e-4

    _report(3, "eigenvalues at both three-round fixed points to 1e-4", check)


def test_criterion_04_variance_perturbation_limit():
    def check():
        params = ModelParams(n_periods=3)
        start = equilibrium_from_params(bumped_params_n3()).beta
        start_time = time.perf_counter()
        trace = iterate(insider_policy_step, start, params)
        elapsed = time.perf_counter() - start_time
        assert trace.verdict == "converged"
        assert np.max(np.abs(trace.limit - SECOND_FP_N3)) <= 1e-10
        assert elapsed < 1.0, f"iteration took {elapsed:.2e} s"

    _report(
        4,
        "variance-perturbed start iterates to the second fixed point to 1e-10 in under 1 s",
        check,
    )


def test_criterion_05_pinned_derivative_invariance():
    def check():
        for n in (3, 4, 5):
            params = ModelParams(n_periods=n)
            third_last = pinned_coordinate_derivative(n - 2, params)
            assert abs(third_last - (-2.07611)) <= 1e-4
            assert abs(pinned_coordinate_derivative(n, params)) <= 1e-8
        assert abs(pinned_coordinate_derivative(1, ModelParams(n_periods=1))) <= 1e-8

    _report(
        5,
        "pinned-coordinate derivatives: -2.07611 at the third-from-last slot, 0 at the last",
        check,
    )


def test_criterion_06_classification_across_horizons():
    def check():
        rng = np.random.default_rng(SEED + 1)
        scale_sets = [(1.0, 1.0, 1.0)]
        for _ in range(5):
            scale_sets.append(tuple(10.0 ** rng.uniform(-1.0, 1.0, size=3)))
        expected = {1: "super_attractive", 2: "attractive"}
        for n in range(1, 9):
            for delta, sigma_u, sigma0 in scale_sets:
                params = ModelParams(
                    n_periods=n, delta=delta, sigma_u=sigma_u, sigma0=sigma0
                )
                eq = equilibrium_from_params(params)
                report = classify_fixed_point(insider_policy_step, eq.beta, params)
                assert report.classification == expected.get(n, "repellent"), (
                    f"N={n}, params={params}: {report.classification}"
                )

    _report(
        6,
        "insider-side classification by horizon holds for unit and 5 random parameter sets",
        check,
    )


def test_criterion_07_maker_side_spectral_radii():
    def check():
        params = ModelParams(n_periods=2)
        eq = equilibrium_from_params(params)
        report = classify_fixed_point(maker_policy_step, eq.lam, params)
        assert report.spectral_radius < 1.0
        for n in range(3, 7):
            params = ModelParams(n_periods=n)
            eq = equilibrium_from_params(params)
            report = classify_fixed_point(maker_policy_step, eq.lam, params)
            assert report.spectral_radius > 1.0

    _report(
        7,
        "maker-side spectral radius below 1 at two rounds, above 1 for three to six",
        check,
    )


def test_criterion_08_perturbation_return_battery():
    def check():
        for n in range(3, 7):
            params = ModelParams(n_periods=n)
            rows = perturbation_battery(params, bump=1e-3, return_tol=1e-10)
            returned = {row["coord"]: row["returned"] for row in rows}
            assert returned[n] and returned[n - 1], f"N={n}: {returned}"
            for coord in range(1, n - 1):
                assert not returned[coord], f"N={n}, coord={coord} returned"

    _report(
        8,
        "pinned perturbations return for the last two coordinates and escape otherwise",
        check,
    )


def test_criterion_09_property_suites():
    def check():
        start_time = time.perf_counter()
        rng = np.random.default_rng(SEED + 2)

        # Fixed-point residuals for both operators, N = 1..10.
        for n in range(1, 11):
            params = random_params(rng, n)
            eq = equilibrium_from_params(params)
            t_out = insider_policy_step(eq.beta, params)
            s_out = maker_policy_step(eq.lam, params)
            assert t_out.in_domain and s_out.in_domain
            assert np.max(np.abs(t_out.value - eq.beta)) <= 1e-10 * (
                1.0 + np.max(np.abs(eq.beta))
            )
            assert np.max(np.abs(s_out.value - eq.lam)) <= 1e-10 * (
                1.0 + np.max(np.abs(eq.lam))
            )

        # Closed-form composition vs the generic map, N = 1 and 2.
        for n in (1, 2):
            params = ModelParams(n_periods=n)
            eq = equilibrium_from_params(params)
            for _ in range(100):
                beta = eq.beta * rng.uniform(0.5, 1.5, size=n)
                out = insider_policy_step(beta, params)
                maker = market_maker_response(beta, params)
                inner = insider_response(maker.lam, params)
                if not (out.in_domain and inner.in_domain):
                    continue
                scale = 1.0 + np.max(np.abs(out.value))
                assert np.max(np.abs(out.value - inner.beta)) <= 1e-12 * scale

        # Rational form f/g vs the pinned scalar map, N = 3, 4, 5.
        for n in (3, 4, 5):
            params = ModelParams(n_periods=n)
            eq = equilibrium_from_params(params)
            for offset in np.linspace(-0.1, 0.1, 21):
                x = float(eq.beta[n - 3]) + offset
                direct = pinned_coordinate_step(x, n - 2, eq, params)
                f_val, g_val = pinned_step_polynomials(x, eq, params)
                if not np.isfinite(direct) or g_val == 0.0:
                    continue
                ratio = f_val / g_val
                assert abs(direct - ratio) <= 1e-10 * (1.0 + abs(direct))

        # Finite-difference vs closed-form Jacobians near the fixed point.
        for n in (1, 2):
            for _ in range(25):
                params = random_params(rng, n)
                beta = equilibrium_from_params(params).beta * rng.uniform(
                    0.8, 1.2, size=n
                )
                fd = jacobian_fd(insider_policy_step, beta, params)
                closed = jacobian_closed_form(beta, params)
                tol = 1e-7 * (1.0 + np.max(np.abs(closed)))
                assert np.max(np.abs(fd - closed)) <= tol

        elapsed = time.perf_counter() - start_time
        assert elapsed < 30.0, f"property suites took {elapsed:.1f} s"

    _report(9, "four property suites pass at stated tolerances in under 30 s", check)


def test_criterion_10_monte_carlo_verification():
    def check():
        start_time = time.perf_counter()
        params = ModelParams(n_periods=3)
        eq = equilibrium_from_params(params)
        base = simulate(equilibrium_config(params, n_paths=1_000_000, seed=SEED))
        for reg in base.efficiency:
            assert np.max(np.abs(reg.t_stat)) <= 3.0, reg
        check_var = terminal_variance_check(base, params)
        assert check_var.ok, check_var
        half = simulate(
            SimConfig(
                params=params,
                n_paths=1_000_000,
                seed=SEED + 1,
                strategy_beta=eq.beta * 0.5,
                pricing_lambda=eq.lam,
            )
        )
        joint_se = float(np.hypot(base.mean_profit_se, half.mean_profit_se))
        assert base.mean_profit - half.mean_profit > 3.0 * joint_se
        elapsed = time.perf_counter() - start_time
        assert elapsed < 60.0, f"Monte Carlo took {elapsed:.1f} s"

    _report(
        10,
        "million-path Monte Carlo: efficiency, terminal variance, and optimality checks",
        check,
    )
