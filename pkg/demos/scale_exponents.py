"""Effective order depends on where you look: a particle in a random force field.

x' = v / delta^2,  v' = F(x) / delta, with F a random Fourier sum.  As
delta shrinks the velocity approaches a diffusion, so the mean-squared
displacement exponent gamma of v drifts from 2 (ballistic, smooth
dynamics) toward 1 (diffusive) over the same lag window.  No single
"order" describes the system; it depends on the observation scale delta.
"""

import numpy as np

from patchlab import RngStreamSpec, ensemble_velocities, msd_exponent

rng = RngStreamSpec(master_seed=9)

TOTAL_TIME = 0.008
N_SAMPLES = 400
LAG_LO, LAG_HI = 1e-4, 1e-3

print(f"flat-spectrum field, 256 modes, {TOTAL_TIME}s windows, "
      f"lag fit on [{LAG_LO:g}, {LAG_HI:g}]")
print(f"{'delta':>7} {'dt':>10} {'gamma':>7}")
for i, delta in enumerate((1.0, 0.3, 0.1, 0.05)):
    dt = min(1e-3 * delta**2, TOTAL_TIME / N_SAMPLES)
    times, vels = ensemble_velocities(
        n_trajectories=24,
        n_modes=256,
        spectrum=0.0,
        delta=delta,
        total_time=TOTAL_TIME,
        dt=dt,
        rng=rng.at(step_id=i),
    )
    fit = msd_exponent(times, vels, LAG_LO, LAG_HI)
    print(f"{delta:>7} {dt:>10.1e} {fit.gamma:>7.3f}")

print()
print("sanity-check the exponent estimator on synthetic references:")
gen = np.random.default_rng(2)
times = np.linspace(0.0, 1.0, 401)
dt = times[1] - times[0]

walks = np.cumsum(gen.standard_normal((64, 401)) * np.sqrt(dt), axis=1)
walks -= walks[:, :1]
print(f"  Brownian paths:  gamma = {msd_exponent(times, walks, 0.012, 0.24).gamma:.3f}  (want 1)")

lines = (gen.standard_normal((64, 1)) + 2.0) * times
print(f"  straight lines:  gamma = {msd_exponent(times, lines, 0.012, 0.24).gamma:.3f}  (want 2)")
