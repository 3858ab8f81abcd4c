"""Thermal states, occupations and the heat/work/efficiency ledger.

Sign convention: every heat and work entry is the energy change of the ion
(positive into the system). The magnitude ``|Q_L|`` only appears inside the
efficiency formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qla
from .model import EngineParams, ZConvention, joint_spectrum, two_level_spectrum

DEGENERATE_TOL = 1e-14


class DegenerateCycleError(ArithmeticError):
    """Efficiency is undefined (no heat absorbed, or zero net work)."""


@dataclass(frozen=True)
class Occupations:
    p1: float  # excited eigenstate |E1>
    p2: float  # ground eigenstate |E2>

    def as_tuple(self) -> tuple[float, float]:
        return (self.p1, self.p2)


def boltzmann_weights(energies, kt: float) -> np.ndarray:
    """Normalised ``exp(-E/kT)`` with the minimum energy shifted to zero."""
    if kt <= 0:
        raise ValueError("temperature must be positive")
    e = np.asarray(energies, dtype=float)
    w = np.exp(-(e - e.min()) / kt)
    return w / w.sum()


def gibbs_joint(params: EngineParams, b: float) -> np.ndarray:
    """Thermal ion+phonon state at field ``b`` and temperature ``params.kt_hot``."""
    spec = joint_spectrum(params, b)
    dec = spec.decomposition
    rho = qla.spectral_sum(boltzmann_weights(dec.values, params.kt_hot), dec.vectors)
    return 0.5 * (rho + qla.dagger(rho))


def reduce_to_system(rho_joint) -> np.ndarray:
    return qla.partial_trace(rho_joint, (2, 2), keep="A")


def reduce_to_phonon(rho_joint) -> np.ndarray:
    return qla.partial_trace(rho_joint, (2, 2), keep="B")


def reduced_gibbs_from_amplitudes(params: EngineParams, b: float) -> np.ndarray:
    """Ion reduced thermal state assembled term by term from the amplitudes ``a_ji``.

    Independent of ``partial_trace``: contracts the phonon index by hand using
    the real eigenvector components and closed-form-labelled Boltzmann factors.
    """
    spec = joint_spectrum(params, b)
    a = spec.amplitudes()
    p = boltzmann_weights(spec.decomposition.values, params.kt_hot)
    gg = ee = ge = 0.0
    for i in range(4):
        gg += p[i] * (a[0, i] ** 2 + a[1, i] ** 2)
        ee += p[i] * (a[2, i] ** 2 + a[3, i] ** 2)
        ge += p[i] * (a[0, i] * a[2, i] + a[1, i] * a[3, i])
    return np.array([[gg, ge], [ge, ee]], dtype=np.complex128)


def occupations(rho_s, g: float, b: float) -> Occupations:
    """Populations of the eigenstates of ``g sigma_x + b sigma_z`` in ``rho_s``."""
    m = qla.as_matrix(rho_s)
    sp = two_level_spectrum(g, b)
    p1 = np.vdot(sp.ket1, m @ sp.ket1).real
    p2 = np.vdot(sp.ket2, m @ sp.ket2).real
    return Occupations(float(p1), float(p2))


def thermal_occupations_from_amplitudes(params: EngineParams, b: float) -> Occupations:
    """Hot-bath populations via the explicit ``z``/``a`` double sum.

    Mirrors ``occupations(reduce_to_system(gibbs_joint(...)))`` without
    building any density matrix.
    """
    spec = joint_spectrum(params, b)
    a = spec.amplitudes()
    p = boltzmann_weights(spec.decomposition.values, params.kt_hot)
    sp = two_level_spectrum(params.g, b)
    out = []
    for zg, ze in ((sp.zg1, sp.ze1), (sp.zg2, sp.ze2)):
        total = 0.0
        for i in range(4):
            total += p[i] * (
                (a[0, i] ** 2 + a[1, i] ** 2) * zg**2
                + (a[2, i] ** 2 + a[3, i] ** 2) * ze**2
                + 2 * (a[0, i] * a[2, i] + a[1, i] * a[3, i]) * zg * ze
            )
        out.append(total)
    return Occupations(*out)


def hot_occupations(params: EngineParams) -> Occupations:
    rho_s = reduce_to_system(gibbs_joint(params, params.b_hot))
    return occupations(rho_s, params.g, params.b_hot)


def _levels(g: float, b: float) -> tuple[float, float]:
    sp = two_level_spectrum(g, b)
    return sp.e1, sp.e2


def reference_populations(params: EngineParams, stroke: str) -> tuple[float, float]:
    """Squared ``|g>`` coefficients ``(zg1^2, zg2^2)`` used for ``stroke``.

    ``stroke`` is one of ``"ignition"``, ``"exhaust"``, ``"compression"``.
    Under the transport convention every stroke uses the cold-field values;
    stroke-local evaluates the ignition entry at the hot field.
    """
    if stroke not in ("ignition", "exhaust", "compression"):
        raise ValueError(f"unknown stroke {stroke!r}")
    b = params.b_cold
    if params.z_convention is ZConvention.STROKE_LOCAL and stroke == "ignition":
        b = params.b_hot
    sp = two_level_spectrum(params.g, b)
    return sp.zg1**2, sp.zg2**2


def heat_ignition(params: EngineParams, occ_hot: Occupations | None = None) -> float:
    if occ_hot is None:
        occ_hot = hot_occupations(params)
    e = _levels(params.g, params.b_hot)
    z2 = reference_populations(params, "ignition")
    return sum(en * (pn - zn) for en, pn, zn in zip(e, occ_hot.as_tuple(), z2))


def heat_exhaust(params: EngineParams, occ_hot: Occupations) -> float:
    e = _levels(params.g, params.b_cold)
    z2 = reference_populations(params, "exhaust")
    return sum(en * (zn - pn) for en, pn, zn in zip(e, occ_hot.as_tuple(), z2))


def work_expansion(params: EngineParams, occ_hot: Occupations) -> float:
    e_hot = _levels(params.g, params.b_hot)
    e_cold = _levels(params.g, params.b_cold)
    return sum(pn * (lo - hi) for pn, lo, hi in zip(occ_hot.as_tuple(), e_cold, e_hot))


def work_compression(params: EngineParams) -> float:
    e_hot = _levels(params.g, params.b_hot)
    e_cold = _levels(params.g, params.b_cold)
    z2 = reference_populations(params, "compression")
    return sum(zn * (hi - lo) for zn, lo, hi in zip(z2, e_cold, e_hot))


@dataclass(frozen=True)
class StrokeLedger:
    q_hot: float
    w_expand: float
    q_cold: float
    w_compress: float
    meas_cost: float = 0.0

    @property
    def w_net_by_system(self) -> float:
        return -(self.w_expand + self.w_compress)

    @property
    def first_law_residual(self) -> float:
        return self.q_hot + self.q_cold + self.w_expand + self.w_compress

    @property
    def eta(self) -> float:
        return efficiency(self)

    @property
    def eta_m(self) -> float:
        return efficiency_with_cost(self, self.meas_cost)

    def as_dict(self) -> dict:
        return {
            "q_hot": self.q_hot,
            "w_expand": self.w_expand,
            "q_cold": self.q_cold,
            "w_compress": self.w_compress,
            "w_net_by_system": self.w_net_by_system,
            "meas_cost": self.meas_cost,
        }


def ledger(params: EngineParams, occ_hot: Occupations | None = None) -> StrokeLedger:
    """Closed-form bookkeeping of one cycle."""
    if occ_hot is None:
        occ_hot = hot_occupations(params)
    return StrokeLedger(
        q_hot=heat_ignition(params, occ_hot),
        w_expand=work_expansion(params, occ_hot),
        q_cold=heat_exhaust(params, occ_hot),
        w_compress=work_compression(params),
        meas_cost=params.meas_cost,
    )


def efficiency(led: StrokeLedger) -> float:
    """``(Q_H - |Q_L|) / Q_H``."""
    if abs(led.q_hot) <= DEGENERATE_TOL:
        raise DegenerateCycleError("no heat absorbed from the hot bath: efficiency undefined")
    return (led.q_hot - abs(led.q_cold)) / led.q_hot


def efficiency_with_cost(led: StrokeLedger, meas_cost: float) -> float:
    """``(Q_H - |Q_L|) / (Q_H + M)`` with ``M`` the measurement cost."""
    denom = led.q_hot + meas_cost
    if denom <= DEGENERATE_TOL:
        raise DegenerateCycleError(f"Q_H + M = {denom:.3e} is not positive")
    return (led.q_hot - abs(led.q_cold)) / denom


def ideal_efficiency(g_hot: float, b_hot: float, g_cold: float, b_cold: float) -> float:
    """``1 - sqrt((g_L^2 + B_L^2) / (g_H^2 + B_H^2))``."""
    hot = g_hot * g_hot + b_hot * b_hot
    if hot <= 0:
        raise ValueError("g_H^2 + B_H^2 must be positive")
    return 1.0 - math.sqrt((g_cold * g_cold + b_cold * b_cold) / hot)
