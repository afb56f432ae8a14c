"""Microscale solvers: SDE time stepping and local PDE evolution.

Two interchangeable micro solvers act on a local Taylor polynomial:

* ``evolve_poly_exact`` applies the exact constant-coefficient propagator
  ``exp(dt L)``.  On polynomials the series terminates, so this is the
  idealized no-boundary micro solver (``H = inf``).
* ``evolve_fd_buffered`` runs an explicit finite-difference scheme on a
  buffered patch with the boundary values frozen at their initial values.
  The buffer must be wide enough that boundary contamination cannot reach
  the tooth within the requested horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    PdeSpec,
    RngStreamSpec,
    TaylorPolynomial,
    ToothConfig,
    normal_stream,
    poly_eval,
)

__all__ = [
    "SdeModel",
    "MicroGrid",
    "MicroFieldState",
    "MicroStabilityError",
    "BufferTooSmallError",
    "ToothNotCoveredError",
    "em_step",
    "em_path",
    "propagator_matrix",
    "evolve_poly_exact",
    "evolve_fd_buffered",
    "stable_dt_bound",
    "influence_radius",
    "tooth_average",
]


class MicroStabilityError(ValueError):
    """Micro time step violates the explicit stability bound."""


class BufferTooSmallError(ValueError):
    """Patch buffer cannot shield the tooth over the requested horizon."""


class ToothNotCoveredError(ValueError):
    """Micro samples do not span the tooth to be averaged."""


@dataclass(frozen=True)
class SdeModel:
    """Scalar SDE ``dx = drift(x) dt + noise_amplitude dW``.

    ``drift`` must accept and return numpy arrays elementwise (plain
    arithmetic lambdas qualify), so ensembles can be advanced in one call.
    """

    drift: Callable[[np.ndarray], np.ndarray]
    noise_amplitude: float = 1.0

    def __post_init__(self) -> None:
        amp = float(self.noise_amplitude)
        if not (math.isfinite(amp) and amp >= 0):
            raise ValueError("noise_amplitude must be finite and >= 0")
        object.__setattr__(self, "noise_amplitude", amp)

    @classmethod
    def pure_noise(cls, noise_amplitude: float = 1.0) -> "SdeModel":
        return cls(drift=lambda x: np.zeros_like(np.asarray(x, dtype=float)), noise_amplitude=noise_amplitude)

    @classmethod
    def ornstein_uhlenbeck(cls, rate: float = 1.0, noise_amplitude: float = 1.0) -> "SdeModel":
        return cls(drift=lambda x, r=float(rate): -r * x, noise_amplitude=noise_amplitude)


@dataclass(frozen=True)
class MicroGrid:
    """Micro discretization: spacing ``dx`` and a ceiling ``dt`` on the step."""

    dx: float
    dt: float

    def __post_init__(self) -> None:
        dx = float(self.dx)
        dt = float(self.dt)
        if not (math.isfinite(dx) and dx > 0):
            raise ValueError("micro dx must be positive and finite")
        if not (math.isfinite(dt) and dt > 0):
            raise ValueError("micro dt must be positive and finite")
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dt", dt)


@dataclass(frozen=True)
class MicroFieldState:
    """Field samples on a uniform micro grid centered on a tooth."""

    center: float
    dx: float
    samples: np.ndarray
    time: float

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 5:
            raise ValueError("MicroFieldState needs a 1-d array of at least 5 samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "center", float(self.center))
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "time", float(self.time))

    def grid(self) -> np.ndarray:
        n = self.samples.size
        return self.center + self.dx * (np.arange(n) - (n - 1) / 2.0)


def em_step(x, model: SdeModel, dt: float, xi):
    """One Euler-Maruyama step: ``x + dt b(x) + amp sqrt(dt) xi``.

    Works elementwise on arrays; ``xi`` holds the standard-normal draws.
    """
    if dt < 0:
        raise ValueError("dt must be >= 0")
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return x + dt * np.asarray(model.drift(x), dtype=float) + model.noise_amplitude * math.sqrt(dt) * xi


def em_path(x0: float, model: SdeModel, dt: float, n_steps: int, rng: RngStreamSpec) -> np.ndarray:
    """Single Euler-Maruyama trajectory, ``n_steps + 1`` values including ``x0``."""
    n_steps = int(n_steps)
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    draws = normal_stream(rng, n_steps)
    out = np.empty(n_steps + 1)
    out[0] = float(x0)
    x = float(x0)
    b = model.drift
    amp_sqdt = model.noise_amplitude * math.sqrt(dt)
    for i in range(n_steps):
        x = x + dt * float(b(x)) + amp_sqdt * draws[i]
        out[i + 1] = x
    return out


def propagator_matrix(pde: PdeSpec, degree: int, dt: float) -> np.ndarray:
    """Matrix of ``exp(dt L)`` on raw coefficient vectors of ``degree``.

    ``L = sum_r a_r d^r/dx^r`` shifts raw coefficients, so it is nilpotent
    on polynomials and the exponential series terminates exactly.
    """
    degree = int(degree)
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if dt < 0:
        raise ValueError("dt must be >= 0")
    n = degree + 1
    L = np.zeros((n, n))
    for order, a in pde.terms:
        for k in range(n - order):
            L[k, k + order] += a
    M = np.eye(n)
    P = np.eye(n)
    factorial = 1.0
    for m in range(1, n + 1):
        P = P @ L
        if not P.any():
            break
        factorial *= m
        M = M + (dt**m / factorial) * P
    return M


def evolve_poly_exact(p: TaylorPolynomial, pde: PdeSpec, dt: float) -> TaylorPolynomial:
    """Exact free-space evolution of the polynomial field over ``dt``."""
    M = propagator_matrix(pde, p.degree, dt)
    return TaylorPolynomial(p.center, tuple(M @ np.asarray(p.coeffs)))


def stable_dt_bound(pde: PdeSpec, dx: float) -> float:
    """Largest admissible explicit micro step on spacing ``dx``."""
    if dx <= 0:
        raise ValueError("dx must be positive")
    bounds = []
    for order, a in pde.terms:
        if order == 1:
            bounds.append(0.8 * dx / abs(a))
        elif order == 2:
            bounds.append(0.4 * dx**2 / abs(a))
        elif order == 4:
            bounds.append(0.3 * dx**4 / (8.0 * abs(a)))
        else:
            raise ValueError(f"no finite-difference stencil for derivative order {order}")
    return min(bounds) if bounds else math.inf


def influence_radius(pde: PdeSpec, dt: float) -> float:
    """Distance boundary data can contaminate the interior within ``dt``.

    Advective transport moves |a| dt; diffusive spread is taken at six
    standard deviations of the corresponding kernel width.
    """
    if dt < 0:
        raise ValueError("dt must be >= 0")
    radius = 0.0
    for order, a in pde.terms:
        if order == 1:
            radius = max(radius, abs(a) * dt)
        elif order == 2:
            radius = max(radius, 6.0 * math.sqrt(abs(a) * dt))
        elif order == 4:
            radius = max(radius, 6.0 * (abs(a) * dt) ** 0.25)
        else:
            raise ValueError(f"no influence estimate for derivative order {order}")
    return radius


def _stencil_rhs(u: np.ndarray, pde: PdeSpec, dx: float) -> np.ndarray:
    """Spatial operator on the full patch; only interior entries are valid."""
    du = np.zeros_like(u)
    for order, a in pde.terms:
        if order == 1:
            one_sided = np.zeros_like(u)
            if a > 0:
                # information comes from the right (u_t = a u_x moves left)
                one_sided[:-1] = (u[1:] - u[:-1]) / dx
            else:
                one_sided[1:] = (u[1:] - u[:-1]) / dx
            du += a * one_sided
        elif order == 2:
            d2 = np.zeros_like(u)
            d2[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dx**2
            du += a * d2
        elif order == 4:
            d4 = np.zeros_like(u)
            d4[2:-2] = (u[4:] - 4.0 * u[3:-1] + 6.0 * u[2:-2] - 4.0 * u[1:-3] + u[:-4]) / dx**4
            du += a * d4
        else:  # pragma: no cover - rejected earlier by stable_dt_bound
            raise ValueError(f"no finite-difference stencil for derivative order {order}")
    return du


def evolve_fd_buffered(
    p: TaylorPolynomial,
    pde: PdeSpec,
    dt: float,
    tooth: ToothConfig,
    grid: MicroGrid,
) -> MicroFieldState:
    """Explicit finite-difference evolution of ``p`` on a buffered patch.

    The patch spans ``[center - H/2, center + H/2]``; boundary nodes are
    held at their initial values (frozen Dirichlet).  Raises
    ``MicroStabilityError`` if ``grid.dt`` violates the explicit bound and
    ``BufferTooSmallError`` if boundary influence could reach the tooth.
    """
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if math.isinf(tooth.H):
        raise ValueError("finite patch width H required for the buffered solver")
    bound = stable_dt_bound(pde, grid.dx)
    if grid.dt > bound * (1.0 + 1e-12):
        raise MicroStabilityError(
            f"micro dt {grid.dt:g} exceeds the explicit stability bound {bound:g} "
            f"for dx {grid.dx:g}"
        )
    radius = influence_radius(pde, dt)
    if radius > tooth.buffer_width:
        raise BufferTooSmallError(
            f"influence radius {radius:g} exceeds buffer {tooth.buffer_width:g}; "
            f"need H >= {tooth.h + 2 * radius:g}"
        )

    n_half = max(2, int(math.ceil(tooth.H / (2.0 * grid.dx) - 1e-12)))
    xs = p.center + grid.dx * np.arange(-n_half, n_half + 1)
    u = np.asarray(poly_eval(p, xs), dtype=float)

    if dt > 0:
        n_steps = max(1, int(math.ceil(dt / grid.dt - 1e-12)))
        step = dt / n_steps
        # widest stencil arm decides how many boundary nodes stay frozen
        frozen = 2 if pde.max_order >= 3 else 1
        for _ in range(n_steps):
            du = _stencil_rhs(u, pde, grid.dx)
            nxt = u + step * du
            nxt[:frozen] = u[:frozen]
            nxt[-frozen:] = u[-frozen:]
            u = nxt
    return MicroFieldState(center=p.center, dx=grid.dx, samples=u, time=dt)


def tooth_average(state: MicroFieldState, h: float) -> float:
    """Average of the micro field over the tooth ``[center - h/2, center + h/2]``.

    Trapezoidal rule on the micro samples, with linear interpolation to the
    exact tooth endpoints.
    """
    if h <= 0:
        raise ValueError("tooth width h must be positive")
    xs = state.grid()
    lo = state.center - h / 2.0
    hi = state.center + h / 2.0
    eps = 1e-12 * max(h, state.dx)
    if xs[0] > lo + eps or xs[-1] < hi - eps:
        raise ToothNotCoveredError(
            f"micro samples span [{xs[0]:g}, {xs[-1]:g}] but the tooth needs [{lo:g}, {hi:g}]"
        )
    u = state.samples
    inside = (xs > lo) & (xs < hi)
    nodes = np.concatenate(([lo], xs[inside], [hi]))
    vals = np.concatenate(([np.interp(lo, xs, u)], u[inside], [np.interp(hi, xs, u)]))
    return float(np.trapezoid(vals, nodes) / h)
