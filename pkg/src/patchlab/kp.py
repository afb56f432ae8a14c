"""Scale-dependent effective order of a particle in a random force field.

The rescaled system

    dx/dt = v / delta**2,      dv/dt = F(x) / delta

is integrated with a symplectic leapfrog.  The mean-square displacement of
the velocity over a fixed window of lags answers "what order of effective
equation does v follow here": exponent ~2 means ballistic (first-order
transport), ~1 means diffusive (second-order).  For a field with a flat
mode spectrum the answer genuinely depends on delta, which is the point of
the experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import RngStreamSpec, generator

__all__ = [
    "RandomForceField",
    "ScaledTrajectory",
    "MsdFit",
    "DtSelfConsistencyError",
    "synthesize_force_field",
    "kp_integrate",
    "ensemble_velocities",
    "energy",
    "msd_exponent",
]

SELF_CONSISTENCY_TOL = 0.01


class DtSelfConsistencyError(ValueError):
    """Halving the step changed the endpoint velocity by more than 1%."""


@dataclass(frozen=True)
class RandomForceField:
    """Superposition of cosine modes ``F(x) = sum_m a_m cos(k_m x + phi_m)``."""

    amplitudes: np.ndarray
    wavenumbers: np.ndarray
    phases: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.amplitudes, dtype=float)
        k = np.array(self.wavenumbers, dtype=float)
        p = np.array(self.phases, dtype=float)
        if not (a.shape == k.shape == p.shape) or a.ndim != 1:
            raise ValueError("amplitudes, wavenumbers, phases must be equal-length 1-d arrays")
        if np.any(k == 0):
            raise ValueError("wavenumbers must be nonzero (zero mode has no bounded potential)")
        for arr in (a, k, p):
            arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "phases", p)

    @property
    def n_modes(self) -> int:
        return int(self.amplitudes.size)

    def force(self, x):
        """F at ``x`` (scalar or array)."""
        x = np.asarray(x, dtype=float)
        phase = np.multiply.outer(x, self.wavenumbers) + self.phases
        out = np.cos(phase) @ self.amplitudes
        return float(out) if out.ndim == 0 else out

    def potential(self, x):
        """V with ``-dV/dx = F``; the integration constant is zero."""
        x = np.asarray(x, dtype=float)
        phase = np.multiply.outer(x, self.wavenumbers) + self.phases
        out = np.sin(phase) @ (-self.amplitudes / self.wavenumbers)
        return float(out) if out.ndim == 0 else out

    @property
    def stiffness_bound(self) -> float:
        """Upper bound on |dF/dx|, used for step-size sanity."""
        return float(np.abs(self.amplitudes * self.wavenumbers).sum())


@dataclass(frozen=True)
class ScaledTrajectory:
    """Uniformly sampled (t, x, v) of one rescaled run."""

    delta: float
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    dt_used: float

    def __post_init__(self) -> None:
        for name in ("times", "positions", "velocities"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class MsdFit:
    """Log-log fit of mean-square velocity displacement against lag."""

    gamma: float
    lags: np.ndarray
    msd: np.ndarray

    def __post_init__(self) -> None:
        for name in ("lags", "msd"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def synthesize_force_field(n_modes: int, spectrum: float, rng: RngStreamSpec) -> RandomForceField:
    """Random field with ``k_m = m``, ``a_m = m**-spectrum``, seeded phases."""
    n_modes = int(n_modes)
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    spectrum = float(spectrum)
    if not math.isfinite(spectrum):
        raise ValueError("spectrum exponent must be finite")
    m = np.arange(1, n_modes + 1, dtype=float)
    phases = generator(rng).uniform(0.0, 2.0 * math.pi, size=n_modes)
    return RandomForceField(amplitudes=m**-spectrum, wavenumbers=m, phases=phases)


def energy(field: RandomForceField, delta: float, x, v):
    """Conserved quantity ``v^2/2 + delta V(x)`` of the rescaled flow."""
    v = np.asarray(v, dtype=float)
    return 0.5 * v**2 + float(delta) * field.potential(x)


def _leapfrog(field, delta, x0, v0, dt, n_samples, steps_per_sample):
    inv_d2 = 1.0 / delta**2
    inv_d = 1.0 / delta
    xs = np.empty(n_samples + 1)
    vs = np.empty(n_samples + 1)
    xs[0], vs[0] = x0, v0
    x, v = float(x0), float(v0)
    f = field.force(x) * inv_d
    for s in range(1, n_samples + 1):
        for _ in range(steps_per_sample):
            v_half = v + 0.5 * dt * f
            x = x + dt * v_half * inv_d2
            f = field.force(x) * inv_d
            v = v_half + 0.5 * dt * f
        xs[s], vs[s] = x, v
    return xs, vs


def kp_integrate(
    field: RandomForceField,
    delta: float,
    total_time: float,
    dt: float,
    initial: tuple[float, float] = (0.0, 1.0),
    n_samples: int = 400,
    validate: bool = True,
) -> ScaledTrajectory:
    """Leapfrog integration of the rescaled system, sampled uniformly.

    ``dt`` is a ceiling; the actual step divides the sampling interval
    exactly.  With ``validate=True`` the run is repeated at half the step
    and rejected (``DtSelfConsistencyError``) if the endpoint velocity
    moves by more than 1% of the velocity scale -- the step-halving
    self-consistency check.
    """
    delta = float(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not total_time > 0:
        raise ValueError("total_time must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x0, v0 = (float(initial[0]), float(initial[1]))
    sample_dt = total_time / n_samples
    steps_per_sample = max(1, int(math.ceil(sample_dt / dt - 1e-12)))
    dt_used = sample_dt / steps_per_sample
    xs, vs = _leapfrog(field, delta, x0, v0, dt_used, n_samples, steps_per_sample)
    if validate:
        _, vs_half = _leapfrog(field, delta, x0, v0, dt_used / 2.0, n_samples, 2 * steps_per_sample)
        scale = max(abs(vs_half[-1]), float(np.sqrt(np.mean(vs_half**2))))
        deviation = abs(vs[-1] - vs_half[-1])
        if deviation > SELF_CONSISTENCY_TOL * scale:
            raise DtSelfConsistencyError(
                f"endpoint velocity moved by {deviation:g} (scale {scale:g}) when the step "
                f"was halved; dt {dt_used:g} is not resolving the dynamics"
            )
    times = np.linspace(0.0, total_time, n_samples + 1)
    return ScaledTrajectory(delta=delta, times=times, positions=xs, velocities=vs, dt_used=dt_used)


def ensemble_velocities(
    n_trajectories: int,
    n_modes: int,
    spectrum: float,
    delta: float,
    total_time: float,
    dt: float,
    rng: RngStreamSpec,
    initial: tuple[float, float] = (0.0, 1.0),
    n_samples: int = 400,
    validate: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Velocity samples of independent runs (fresh field per trajectory).

    Trajectory ``i`` draws its field phases from ``rng.at(stream_id=i)``.
    Returns ``(times, velocities)`` with velocities of shape
    ``(n_trajectories, n_samples + 1)``.
    """
    n_trajectories = int(n_trajectories)
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    velocities = np.empty((n_trajectories, int(n_samples) + 1))
    times = None
    for i in range(n_trajectories):
        field = synthesize_force_field(n_modes, spectrum, rng.at(stream_id=i))
        traj = kp_integrate(
            field, delta, total_time, dt,
            initial=initial, n_samples=n_samples, validate=validate,
        )
        velocities[i] = traj.velocities
        times = traj.times
    return times, velocities


def msd_exponent(
    times: np.ndarray,
    velocities: np.ndarray,
    lag_lo: float,
    lag_hi: float,
    n_lags: int = 10,
) -> MsdFit:
    """Exponent gamma of ``mean |v(t+s) - v(t)|^2 ~ s**gamma``.

    Lags are log-spaced in ``[lag_lo, lag_hi]``, which must lie within
    [T/100, T/4] of the sampled window; averaging runs over all time
    origins and all trajectories.
    """
    times = np.asarray(times, dtype=float)
    velocities = np.atleast_2d(np.asarray(velocities, dtype=float))
    if times.ndim != 1 or times.size < 3:
        raise ValueError("times must be a 1-d array of at least 3 samples")
    if velocities.shape[1] != times.size:
        raise ValueError("velocity rows must match the time grid")
    sample_dt = times[1] - times[0]
    if not np.allclose(np.diff(times), sample_dt, rtol=1e-9, atol=0.0):
        raise ValueError("time samples must be uniform")
    span = times[-1] - times[0]
    if lag_lo < span / 100.0 * (1.0 - 1e-9) or lag_hi > span / 4.0 * (1.0 + 1e-9):
        raise ValueError("lag range must lie within [T/100, T/4]")
    if not 0 < lag_lo < lag_hi:
        raise ValueError("need 0 < lag_lo < lag_hi")
    raw = np.logspace(math.log10(lag_lo), math.log10(lag_hi), int(n_lags))
    lag_steps = np.unique(np.maximum(1, np.round(raw / sample_dt).astype(int)))
    lags = lag_steps * sample_dt
    msd = np.empty(lag_steps.size)
    for i, L in enumerate(lag_steps):
        diffs = velocities[:, L:] - velocities[:, :-L]
        msd[i] = float(np.mean(diffs**2))
    if np.any(msd <= 0):
        raise ValueError("mean-square displacement vanished at some lag; nothing to fit")
    gamma = float(np.polyfit(np.log(lags), np.log(msd), 1)[0])
    return MsdFit(gamma=gamma, lags=lags, msd=msd)
