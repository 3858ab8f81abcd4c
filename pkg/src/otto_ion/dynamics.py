"""Closed evolution of the ion+phonon state under a linear field ramp."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qla
from .model import EngineParams, h_joint, two_level_spectrum
from .thermo import occupations, reduce_to_system

STABILITY_LIMIT = 0.1
SMALL_G_RATIO = 0.1


class StabilityError(ValueError):
    """RK4 step too large for the Hamiltonian's scale."""


@dataclass(frozen=True)
class RampSpec:
    b_start: float
    b_end: float
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("ramp duration tau must be positive")

    @property
    def slope(self) -> float:
        return (self.b_end - self.b_start) / self.tau


@dataclass(frozen=True)
class IntegratorConfig:
    steps: int = 5000
    scheme: str = "rk4"

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be a positive integer")
        if self.scheme != "rk4":
            raise ValueError("only the classical RK4 scheme is supported")


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    b: float
    rho: np.ndarray
    p1: float
    p2: float
    xi: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    @property
    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)


def field_ramp(spec: RampSpec, t: float) -> float:
    if not 0.0 <= t <= spec.tau:
        raise ValueError(f"t = {t} outside [0, {spec.tau}]")
    if t == spec.tau:
        return spec.b_end
    return spec.b_start + (spec.b_end - spec.b_start) * t / spec.tau


def adiabaticity_parameter(g: float, b: float, b_dot: float) -> float:
    """``|B' g / (4 (g^2 + B^2)^(3/2))|``."""
    r2 = g * g + b * b
    if r2 <= 0:
        raise ValueError("g^2 + B^2 must be positive")
    return abs(b_dot * g / (4.0 * r2**1.5))


def adiabaticity_small_g(g: float, b: float, b_dot: float) -> tuple[float, bool]:
    """Weak-drive approximation ``|B'| g / (4 |B|^3)``.

    Returns the value and a flag that is ``True`` when ``|g| > |B| / 10`` and the
    approximation should not be trusted.
    """
    if b == 0:
        raise ValueError("B must be non-zero")
    value = abs(b_dot * g / (4.0 * b**3))
    return value, abs(g) > SMALL_G_RATIO * abs(b)


def min_ramp_time(g: float, b_hot: float, b_cold: float) -> float:
    """Lower bound ``|g/8 (1/B_H^2 - 1/B_L^2)|`` on the ramp duration."""
    if b_hot <= 0 or b_cold <= 0:
        raise ValueError("field endpoints must be positive; the bound diverges at B = 0")
    return abs(g / 8.0 * (1.0 / b_hot**2 - 1.0 / b_cold**2))


def _check_stability(params: EngineParams, spec: RampSpec, steps: int) -> None:
    # H is affine in B, so its largest entry sits at a ramp endpoint
    h_max = max(np.max(np.abs(h_joint(params, b))) for b in (spec.b_start, spec.b_end))
    dt = spec.tau / steps
    if dt * h_max > STABILITY_LIMIT:
        need = math.ceil(spec.tau * h_max / STABILITY_LIMIT)
        raise StabilityError(
            f"step {dt:.3g} times |H|_max {h_max:.3g} exceeds {STABILITY_LIMIT}; use steps >= {need}"
        )


def _sample(t: float, b: float, rho: np.ndarray, params: EngineParams, b_dot: float) -> TrajectorySample:
    occ = occupations(reduce_to_system(rho), params.g, b)
    return TrajectorySample(
        t=t,
        b=b,
        rho=rho,
        p1=occ.p1,
        p2=occ.p2,
        xi=adiabaticity_parameter(params.g, b, b_dot),
    )


def evolve_liouville(
    rho0,
    params: EngineParams,
    spec: RampSpec,
    config: IntegratorConfig | None = None,
) -> list[TrajectorySample]:
    """Integrate ``drho/dt = -i [H(t), rho]`` with fixed-step RK4.

    ``H(t)`` is the joint Hamiltonian at ``B(t)`` and is rebuilt at each RK4
    stage time. The state is re-symmetrised after every step. One sample is
    returned for ``t = 0`` and after each step (``steps + 1`` in total).

    Raises:
        StabilityError: if ``(tau / steps) * max|H_ij| > STABILITY_LIMIT``.
    """
    if config is None:
        config = IntegratorConfig(steps=params.steps)
    rho = qla.check_density_matrix(rho0)
    steps = config.steps
    _check_stability(params, spec, steps)
    dt = spec.tau / steps
    b_dot = spec.slope
    # H(B) = H0 + B * Hb exactly, since B enters the diagonal linearly
    h0 = h_joint(params, 0.0)
    hb = h_joint(params, 1.0) - h0

    def rhs(t: float, r: np.ndarray) -> np.ndarray:
        h = h0 + field_ramp(spec, t) * hb
        return -1j * (h @ r - r @ h)

    samples = [_sample(0.0, spec.b_start, rho, params, b_dot)]
    for n in range(steps):
        t = n * dt
        t_next = spec.tau if n == steps - 1 else (n + 1) * dt
        half = t + 0.5 * dt
        k1 = rhs(t, rho)
        k2 = rhs(half, rho + 0.5 * dt * k1)
        k3 = rhs(half, rho + 0.5 * dt * k2)
        k4 = rhs(t_next, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        samples.append(_sample(t_next, field_ramp(spec, t_next), rho, params, b_dot))
    return samples


def system_energy(rho_joint, g: float, b: float) -> float:
    """``Tr(rho_S H_S)`` at field ``b``."""
    sp = two_level_spectrum(g, b)
    occ = occupations(reduce_to_system(rho_joint), g, b)
    return sp.e1 * occ.p1 + sp.e2 * occ.p2
