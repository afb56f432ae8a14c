"""End-to-end acceptance suite.

Each test pins one headline behavior of the package at a fixed tolerance
and prints a single PASS line; several carry wall-clock budgets.  Module
tests cover the fine-grained contracts; nothing here is redundant with
them in tolerance or scale.
"""

import math
import time

import numpy as np

from patchlab import (
    CENTRAL_D2,
    CENTRAL_D4,
    UPWIND_D2,
    BlackBoxFunction,
    CoarseStepConfig,
    MacroState,
    PatchConfig,
    PdeSpec,
    ProbeSpec,
    RngStreamSpec,
    SdeModel,
    ToothConfig,
    coarse_projective_step,
    convergence_order,
    derivative_blackbox,
    detect_order,
    effective_noise_std,
    em_step,
    ensemble_normals,
    ensemble_velocities,
    gap_tooth_step,
    generator,
    growth_factor_probe,
    increment_moments,
    lift,
    main,
    msd_exponent,
    predicted_ou_tail_variance,
    restrict,
    run_coarse_trajectory,
    seeded_noise_state,
    stationary_variance_test,
)

TWO_PI = 2.0 * math.pi


def heat_patch_config(n_points: int, courant: float = 0.4) -> tuple[PdeSpec, PatchConfig, float]:
    dx = TWO_PI / n_points
    dt = courant * dx * dx
    cfg = PatchConfig(
        lifting=CENTRAL_D2,
        tooth=ToothConfig(h=0.2 * dx),
        dt_micro=1e-3 * dt,
        dt_macro=dt,
    )
    return PdeSpec.heat(1.0), cfg, dx


def step_matrix(pde: PdeSpec, cfg: PatchConfig, n_points: int, dx: float) -> np.ndarray:
    cols = []
    for j in range(n_points):
        basis = np.zeros(n_points)
        basis[j] = 1.0
        cols.append(gap_tooth_step(MacroState(basis, dx), pde, cfg).values)
    return np.column_stack(cols)


def test_01_effective_noise_law():
    start = time.perf_counter()
    cfg = CoarseStepConfig(
        ensemble_size=10, micro_steps=10, dt_micro=1e-3, dt_macro=0.1
    )
    target = cfg.dt_macro / math.sqrt(
        cfg.ensemble_size * cfg.micro_steps * cfg.dt_micro
    )
    assert target == effective_noise_std(cfg)
    assert abs(target - 0.31623) < 5e-6

    traj = run_coarse_trajectory(
        0.0, SdeModel.pure_noise(1.0), cfg, 10_000, RngStreamSpec(2026)
    )
    assert traj.diverged_at is None
    moments = increment_moments(traj.values)
    assert abs(moments.std - target) <= 3.0 * moments.se_std
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    print(f"ACCEPTANCE 01 effective-noise-law: PASS "
          f"(std={moments.std:.5f}, target={target:.5f}, {elapsed:.1f}s)")


def test_02_noise_suppression_regime():
    start = time.perf_counter()
    cfg = CoarseStepConfig(
        ensemble_size=1000, micro_steps=10, dt_micro=1e-3, dt_macro=0.1
    )
    # averaging horizon N*k*dt_micro = 10 = 100 * dt_macro: noise is crushed
    suppressed = predicted_ou_tail_variance(cfg, rate=1.0)
    assert abs(suppressed - 0.1 / 10.0 / (2.0 - 0.1)) < 1e-15
    assert abs(suppressed - 5.26e-3) < 5e-5

    traj = run_coarse_trajectory(
        0.0, SdeModel.ornstein_uhlenbeck(1.0), cfg, 10_000, RngStreamSpec(2027)
    )
    check = stationary_variance_test(traj.values, suppressed, 0.15)
    assert check.passed, (check.measured, suppressed)
    # the consistent stationary variance is 1/2; the suppressed chain misses it
    against_consistent = stationary_variance_test(traj.values, 0.5, 0.15)
    assert not against_consistent.passed
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    print(f"ACCEPTANCE 02 noise-suppression: PASS "
          f"(var={check.measured:.2e}, target={suppressed:.2e}, "
          f"consistent-value comparison fails as required, {elapsed:.1f}s)")


def test_03_consistency_and_cost_parity():
    cfg = CoarseStepConfig(
        ensemble_size=10, micro_steps=10, dt_micro=1e-3, dt_macro=0.1
    )
    horizon = cfg.ensemble_size * cfg.micro_steps * cfg.dt_micro
    assert abs(horizon - cfg.dt_macro) < 1e-15

    n_steps = 40_000
    model = SdeModel.ornstein_uhlenbeck(1.0)
    traj = run_coarse_trajectory(0.0, model, cfg, n_steps, RngStreamSpec(2028))
    tail = traj.values[n_steps // 10:]
    coarse_var = float(tail.var(ddof=1))

    # direct Euler-Maruyama reference: 32 independent paths, same micro step
    n_paths, n_micro = 32, 250_000
    gen = generator(RngStreamSpec(2029))
    x = np.zeros(n_paths)
    ref = np.empty((n_paths, n_micro))
    for i in range(n_micro):
        x = em_step(x, model, cfg.dt_micro, gen.standard_normal(n_paths))
        ref[:, i] = x
    ref_var = float(ref[:, n_micro // 10:].var(ddof=1))
    assert abs(coarse_var - ref_var) <= 0.10 * ref_var, (coarse_var, ref_var)

    brute_force_steps = round(n_steps * cfg.dt_macro / cfg.dt_micro)
    assert traj.ledger.micro_steps_total == brute_force_steps
    print(f"ACCEPTANCE 03 consistency-and-cost-parity: PASS "
          f"(var={coarse_var:.4f} vs reference {ref_var:.4f}; "
          f"micro steps {traj.ledger.micro_steps_total} == {brute_force_steps})")


def test_04_heat_gap_tooth():
    start = time.perf_counter()
    n = 32
    pde, cfg, dx = heat_patch_config(n)
    lam = cfg.dt_macro / dx**2
    got = step_matrix(pde, cfg, n, dx)
    classical = (
        np.eye(n)
        + lam * (np.roll(np.eye(n), 1, axis=1) + np.roll(np.eye(n), -1, axis=1) - 2 * np.eye(n))
    )
    assert np.max(np.abs(got - classical)) <= 1e-12

    def make_problem(m):
        pde_m, cfg_m, dx_m = heat_patch_config(m)
        x = dx_m * np.arange(m)
        return (
            lambda u: gap_tooth_step(u, pde_m, cfg_m),
            MacroState(np.sin(x), dx_m),
        )

    report = convergence_order(
        make_problem, (32, 64, 128), final_time=0.5,
        exact=lambda x, t: math.exp(-t) * np.sin(x),
    )
    assert abs(report.fitted_order - 2.0) <= 0.3, report
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    print(f"ACCEPTANCE 04 heat-gap-tooth: PASS "
          f"(matrix entrywise <=1e-12, order={report.fitted_order:.3f}, {elapsed:.1f}s)")


def test_05_advection_cfl_instability():
    start = time.perf_counter()
    pde = PdeSpec.advection(1.0)

    def advection_stepper(n, scheme):
        dx = TWO_PI / n
        dt = 0.5 * dx  # dt_macro/dx = 0.5
        cfg = PatchConfig(
            lifting=scheme,
            tooth=ToothConfig(h=0.2 * dx),
            dt_micro=1e-3 * dt,
            dt_macro=dt,
        )
        return (lambda u: gap_tooth_step(u, pde, cfg)), dx

    central, dx = advection_stepper(64, CENTRAL_D2)
    noisy = seeded_noise_state(64, dx, RngStreamSpec(5))
    central_report = growth_factor_probe(central, noisy, 300)
    assert 1.10 <= central_report.growth_factor <= 1.13, central_report
    assert central_report.classification == "unstable"

    upwind, dx = advection_stepper(64, UPWIND_D2)
    upwind_report = growth_factor_probe(upwind, seeded_noise_state(64, dx, RngStreamSpec(5)), 400)
    assert upwind_report.growth_factor <= 1.0 + 1e-8, upwind_report

    def make_problem(m):
        step, dx_m = advection_stepper(m, UPWIND_D2)
        x = dx_m * np.arange(m)
        return step, MacroState(np.sin(x), dx_m)

    report = convergence_order(
        make_problem, (32, 64, 128), final_time=0.5,
        exact=lambda x, t: np.sin(x - t),
    )
    assert abs(report.fitted_order - 1.0) <= 0.3, report
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    print(f"ACCEPTANCE 05 advection-cfl-instability: PASS "
          f"(central growth={central_report.growth_factor:.4f} in [1.10, 1.13], "
          f"upwind stable, order={report.fitted_order:.3f}, {elapsed:.1f}s)")


def test_06_biharmonic_lifting_mismatch():
    pde = PdeSpec.biharmonic(1.0)
    n = 32
    dx = TWO_PI / n
    dt = 0.0375 * dx**4

    def config(scheme):
        return PatchConfig(
            lifting=scheme,
            tooth=ToothConfig(h=0.2 * dx),
            dt_micro=1e-3 * dt,
            dt_macro=dt,
        )

    # quadratic lifting cannot see the fourth derivative: the step is frozen
    identity = step_matrix(pde, config(CENTRAL_D2), n, dx)
    assert np.max(np.abs(identity - np.eye(n))) <= 1e-12

    quartic = step_matrix(pde, config(CENTRAL_D4), n, dx)
    eye = np.eye(n)
    d4 = (
        np.roll(eye, 2, axis=1) - 4 * np.roll(eye, 1, axis=1) + 6 * eye
        - 4 * np.roll(eye, -1, axis=1) + np.roll(eye, -2, axis=1)
    ) / dx**4
    assert np.max(np.abs(quartic - (eye - dt * d4))) <= 1e-12

    def make_problem(m):
        dx_m = TWO_PI / m
        dt_m = 0.0375 * dx_m**4
        cfg_m = PatchConfig(
            lifting=CENTRAL_D4,
            tooth=ToothConfig(h=0.2 * dx_m),
            dt_micro=1e-3 * dt_m,
            dt_macro=dt_m,
        )
        x = dx_m * np.arange(m)
        return (
            lambda u: gap_tooth_step(u, pde, cfg_m),
            MacroState(np.sin(x), dx_m),
        )

    report = convergence_order(
        make_problem, (16, 24, 32), final_time=0.005,
        exact=lambda x, t: math.exp(-t) * np.sin(x),
    )
    assert all(b < a for a, b in zip(report.errors, report.errors[1:])), report
    print(f"ACCEPTANCE 06 biharmonic-lifting-mismatch: PASS "
          f"(d2 step is identity, d4 step is U - dt*D4, "
          f"errors {[f'{e:.2e}' for e in report.errors]} decreasing)")


def test_07_lift_restrict_round_trip():
    gen = generator(RngStreamSpec(2030))
    n = 32
    dx = TWO_PI / n
    h = 0.2 * dx
    worst = 0.0
    for trial in range(100):
        state = MacroState(gen.standard_normal(n), dx)
        j = int(gen.integers(n))
        for scheme in (CENTRAL_D2, UPWIND_D2, CENTRAL_D4):
            tooth = lift(state, j, scheme, h)
            worst = max(worst, abs(restrict(tooth, h) - state.values[j]))
    assert worst <= 1e-12
    print(f"ACCEPTANCE 07 lift-restrict-round-trip: PASS (worst |error|={worst:.2e})")


def test_08_order_detection():
    start = time.perf_counter()
    probe = ProbeSpec()
    dt, h = 1e-3, 0.1

    heat = detect_order(derivative_blackbox(PdeSpec.heat(1.0), 2, dt, h), probe)
    assert heat.detected_order == 2

    advection = detect_order(derivative_blackbox(PdeSpec.advection(1.0), 2, dt, h), probe)
    assert advection.detected_order == 1
    # the curvature response exists at O(dt) but sits below the threshold
    assert 0.0 < advection.variances[2] < advection.threshold

    b4 = detect_order(derivative_blackbox(PdeSpec.biharmonic(1.0), 4, dt, h), probe)
    assert b4.detected_order == 4

    b2 = detect_order(derivative_blackbox(PdeSpec.biharmonic(1.0), 2, dt, h), probe)
    assert b2.detected_order == 0

    sparse = BlackBoxFunction(lambda pt: pt[0] + pt[99], arity=100)
    adversarial = detect_order(sparse, probe, stop_after=5)
    assert adversarial.detected_order == 1
    assert adversarial.stopped_early
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    print(f"ACCEPTANCE 08 order-detection: PASS "
          f"(heat=2, advection=1, biharmonic d4=4, d2=0, "
          f"adversarial stops early at 1, {elapsed:.1f}s)")


def test_09_scale_dependent_msd_exponent():
    start = time.perf_counter()
    rng = RngStreamSpec(2031)
    protocol = dict(
        n_trajectories=24, n_modes=256, spectrum=0.0,
        total_time=0.008, n_samples=400,
    )
    gammas = {}
    for i, delta in enumerate((1.0, 0.05)):
        dt = min(1e-3 * delta**2, protocol["total_time"] / protocol["n_samples"])
        times, vels = ensemble_velocities(
            delta=delta, dt=dt, rng=rng.at(step_id=i), **protocol
        )
        gammas[delta] = msd_exponent(times, vels, 1e-4, 1e-3).gamma
    assert 1.7 <= gammas[1.0] <= 2.1, gammas
    assert 0.8 <= gammas[0.05] <= 1.2, gammas

    # estimator calibration on synthetic references
    gen = generator(RngStreamSpec(2032))
    n, steps = 64, 400
    times = np.linspace(0.0, 1.0, steps + 1)
    walks = np.concatenate(
        [np.zeros((n, 1)),
         np.cumsum(gen.standard_normal((n, steps)) / math.sqrt(steps), axis=1)],
        axis=1,
    )
    brownian = msd_exponent(times, walks, 0.012, 0.24).gamma
    assert abs(brownian - 1.0) <= 0.1
    lines = (gen.standard_normal((n, 1)) + 2.0) * times[None, :]
    ballistic = msd_exponent(times, lines, 0.012, 0.24).gamma
    assert abs(ballistic - 2.0) <= 0.1
    elapsed = time.perf_counter() - start
    assert elapsed < 300.0
    print(f"ACCEPTANCE 09 scale-dependent-msd-exponent: PASS "
          f"(gamma(1.0)={gammas[1.0]:.3f}, gamma(0.05)={gammas[0.05]:.3f}, "
          f"calibration {brownian:.3f}/{ballistic:.3f}, {elapsed:.1f}s)")


ACCEPTANCE_CONFIGS = {
    "projective": """
[experiment]
name = projective
seed = 2026

[parameters]
n_steps = 10000
""",
    "patch": """
[experiment]
name = patch
seed = 5

[parameters]
pde = heat
lifting = central_d2
grids = 32, 64, 128
final_time = 0.5
expect_stability = stable
expect_order = 2.0
""",
    "order-detect": """
[experiment]
name = order-detect
seed = 0

[parameters]
target = heat
expected_order = 2
""",
    "kp": """
[experiment]
name = kp
seed = 2031

[parameters]
deltas = 1.0, 0.05
gamma_bands = 1.7:2.1, 0.8:1.2
n_trajectories = 24
""",
}


def test_10_seeded_determinism(tmp_path):
    # repeating any experiment with the same seed reproduces every output byte
    for command, text in ACCEPTANCE_CONFIGS.items():
        cfg_path = tmp_path / f"{command}.cfg"
        cfg_path.write_text(text)
        dirs = [tmp_path / f"{command}-r1", tmp_path / f"{command}-r2"]
        for d in dirs:
            code = main([command, "--config", str(cfg_path), "--out", str(d)])
            assert code == 0, (command, code)
        names = sorted(p.name for p in dirs[0].iterdir())
        assert names == sorted(p.name for p in dirs[1].iterdir())
        for name in names:
            a = (dirs[0] / name).read_bytes()
            b = (dirs[1] / name).read_bytes()
            assert a == b, f"{command}/{name} differs between reruns"

    # ensemble draws are member-major, so the split across workers is moot:
    # chunked advancement reproduces the serial coarse step bit for bit
    cfg = CoarseStepConfig(ensemble_size=10, micro_steps=10, dt_micro=1e-3, dt_macro=0.1)
    model = SdeModel.ornstein_uhlenbeck(1.0)
    rng = RngStreamSpec(77)
    serial = coarse_projective_step(0.4, model, cfg, rng)
    for n_workers in (1, 2, 5, 10):
        draws = ensemble_normals(rng, cfg.ensemble_size, cfg.micro_steps)
        bounds = np.linspace(0, cfg.ensemble_size, n_workers + 1).astype(int)
        parts = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            members = np.full(b - a, 0.4)
            for i in range(cfg.micro_steps):
                members = em_step(members, model, cfg.dt_micro, draws[a:b, i])
            parts.append(members)
        mean_end = float(np.concatenate(parts).mean())
        chunked = 0.4 + cfg.dt_macro * (mean_end - 0.4) / cfg.micro_horizon
        assert chunked == serial
    print("ACCEPTANCE 10 seeded-determinism: PASS "
          "(byte-identical reruns for all four experiments; "
          "coarse step invariant under 1/2/5/10-way ensemble splits)")
