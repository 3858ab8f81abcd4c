"""Hamiltonians of the trapped-ion engine and their spectra.

Conventions (units with hbar = 1):

* ion basis ``(|g>, |e>)`` with ``sigma_z|g> = -|g>``, ``sigma_+ = |e><g|``;
* phonon mode truncated to Fock states ``|0>, |1>``;
* joint basis ``{|g,0>, |g,1>, |e,0>, |e,1>}`` (ion index slow).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import qla

RADICAND_TOL = 1e-12
SPECTRUM_MATCH_TOL = 1e-9


class ParameterError(ValueError):
    """Physical parameters outside their allowed domain."""


class ZConvention(str, Enum):
    """Field at which the ``|g>``-expansion coefficients enter the ledger.

    ``STROKE_LOCAL`` evaluates them at the field of the stroke being booked;
    ``TRANSPORT`` uses the coefficients of the ``|g>`` state prepared at the
    cold field for every stroke, which makes the four strokes close exactly.
    """

    STROKE_LOCAL = "stroke_local"
    TRANSPORT = "transport"


@dataclass(frozen=True)
class EngineParams:
    g: float = 0.2
    b_hot: float = 10.0
    b_cold: float = 0.01
    omega: float = 1.0
    k: float = 0.1
    kt_hot: float = 1.0
    tau: float = 5.0
    steps: int = 5000
    meas_cost: float | None = None  # None -> kt_hot * ln 2
    z_convention: ZConvention = ZConvention.TRANSPORT

    def __post_init__(self):
        object.__setattr__(self, "z_convention", ZConvention(self.z_convention))
        if self.meas_cost is None:
            object.__setattr__(self, "meas_cost", self.kt_hot * math.log(2.0))
        self.validate()

    def validate(self) -> None:
        names = ("g", "b_hot", "b_cold", "omega", "k", "kt_hot", "tau", "meas_cost")
        for name in names:
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.omega <= 0:
            raise ParameterError("omega must be positive")
        if self.k < 0:
            raise ParameterError("k must be non-negative")
        if self.kt_hot <= 0:
            raise ParameterError("kt_hot must be positive")
        if self.tau <= 0:
            raise ParameterError("tau must be positive")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ParameterError("steps must be a positive integer")
        if self.meas_cost < 0:
            raise ParameterError("meas_cost must be non-negative")
        if self.b_hot < self.b_cold:
            raise ParameterError("b_hot must be >= b_cold")
        # B(t) is linear, so g^2 + B^2 vanishes on the ramp only if g = 0 and
        # the ramp crosses zero.
        if self.g == 0 and self.b_cold <= 0 <= self.b_hot:
            raise ParameterError("g^2 + B^2 vanishes on the ramp")

    def with_(self, **changes) -> "EngineParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class TwoLevelSpectrum:
    e1: float
    e2: float
    ket1: np.ndarray
    ket2: np.ndarray
    zg1: float
    zg2: float
    ze1: float
    ze2: float


@dataclass(frozen=True)
class JointSpectrum:
    u: tuple[float, float, float, float]
    decomposition: qla.EigenDecomposition

    def amplitudes(self) -> np.ndarray:
        """Real components ``a[j, i]`` of ``|U_i>`` along joint basis state ``j``."""
        return self.decomposition.vectors.real


def _check_field(g: float, b: float) -> float:
    eps = math.hypot(g, b)
    if eps == 0.0:
        raise ParameterError("g = B = 0: two-level spectrum is degenerate")
    return eps


def h_system(g: float, b: float) -> np.ndarray:
    """``g sigma_x + B sigma_z`` in the ``(|g>, |e>)`` basis."""
    _check_field(g, b)
    return np.array([[-b, g], [g, b]], dtype=np.complex128)


def h_phonon(omega: float) -> np.ndarray:
    return np.diag([0.0, omega]).astype(np.complex128)


def h_interaction(k: float) -> np.ndarray:
    """``k (a^dag sigma_- + sigma_+ a)`` on the joint space."""
    sigma_plus = np.array([[0, 0], [1, 0]], dtype=np.complex128)  # |e><g|
    a = np.array([[0, 1], [0, 0]], dtype=np.complex128)  # |0><1|
    term = qla.kron(sigma_plus, a)
    return k * (term + qla.dagger(term))


def h_joint(params: EngineParams, b: float) -> np.ndarray:
    """The 4x4 ion+phonon Hamiltonian at field ``b``, written out entrywise."""
    g, k, w = params.g, params.k, params.omega
    return np.array(
        [
            [-b, 0.0, g, 0.0],
            [0.0, -b + w, k, g],
            [g, k, b, 0.0],
            [0.0, g, 0.0, b + w],
        ],
        dtype=np.complex128,
    )


def h_joint_assembled(params: EngineParams, b: float) -> np.ndarray:
    """Same operator built from tensor products; used as a cross-check."""
    eye = np.eye(2, dtype=np.complex128)
    sigma_x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sigma_z = np.diag([-1.0, 1.0]).astype(np.complex128)
    return (
        qla.kron(params.g * sigma_x + b * sigma_z, eye)
        + qla.kron(eye, h_phonon(params.omega))
        + h_interaction(params.k)
    )


def normalizations(g: float, b: float) -> tuple[float, float]:
    """``(N_minus, N_plus)`` with ``N_-+ = sqrt(2 (eps^2 -+ B eps))``.

    The difference ``eps - |B|`` is rewritten as ``g^2 / (eps + |B|)`` so the
    small normalisation keeps full relative precision when ``|g| << |B|``.
    """
    eps = _check_field(g, b)
    big = math.sqrt(2.0 * eps * (eps + abs(b)))
    small = abs(g) * math.sqrt(2.0 * eps / (eps + abs(b)))
    return (small, big) if b >= 0 else (big, small)


def two_level_spectrum(g: float, b: float) -> TwoLevelSpectrum:
    """Closed-form eigenpairs of ``h_system`` and the ``|g>``, ``|e>`` expansion.

    ``|E_1>`` (energy ``+eps``) and ``|E_2>`` (``-eps``) carry the phase
    ``(B -+ eps, -g) / N_-+``. For ``g = 0`` the vectors are the ``g -> 0+``
    limits, so ``|E_1> = -|e>`` when ``B > 0``.
    """
    eps = _check_field(g, b)
    s = 1.0 if g >= 0 else -1.0
    ag = abs(g)
    if b >= 0:
        d = math.sqrt(2.0 * eps * (eps + b))
        ket1 = (-ag / d, -s * math.sqrt((eps + b) / (2.0 * eps)))
        ket2 = (math.sqrt((eps + b) / (2.0 * eps)), -g / d)
    else:
        d = math.sqrt(2.0 * eps * (eps - b))
        ket1 = (-math.sqrt((eps - b) / (2.0 * eps)), -g / d)
        ket2 = (ag / d, -s * math.sqrt((eps - b) / (2.0 * eps)))
    # |g> = zg1|E1> - zg2|E2>,  |e> = ze1|E1> - ze2|E2>
    zg1, ze1 = ket1
    zg2, ze2 = -ket2[0], -ket2[1]
    return TwoLevelSpectrum(
        e1=eps,
        e2=-eps,
        ket1=np.array(ket1, dtype=np.complex128),
        ket2=np.array(ket2, dtype=np.complex128),
        zg1=zg1,
        zg2=zg2,
        ze1=ze1,
        ze2=ze2,
    )


def z_coefficients(g: float, b: float) -> tuple[float, float, float, float]:
    sp = two_level_spectrum(g, b)
    return sp.zg1, sp.zg2, sp.ze1, sp.ze2


def _root(x: float, what: str) -> float:
    if x < -RADICAND_TOL:
        raise ParameterError(f"negative radicand {x} in {what}")
    return math.sqrt(max(x, 0.0))


def joint_eigenvalues_closed_form(params: EngineParams, b: float) -> tuple[float, float, float, float]:
    """``(U1, U2, U3, U4)`` from the closed-form quartic roots (not sorted)."""
    g, k, w = params.g, params.k, params.omega
    c = 4 * b * b + 4 * g * g + 2 * k * k + w * w
    d = _root(
        4 * g * g * k * k + k**4 - 4 * b * k * k * w + 4 * b * b * w * w + 4 * g * g * w * w,
        "D",
    )
    a_minus = _root(c - 2 * d, "A_-")
    a_plus = _root(c + 2 * d, "A_+")
    return (
        0.5 * (w - a_minus),
        0.5 * (w + a_minus),
        0.5 * (w - a_plus),
        0.5 * (w + a_plus),
    )


def joint_spectrum(params: EngineParams, b: float) -> JointSpectrum:
    """Numeric eigendecomposition of ``h_joint``, cross-checked against the closed form.

    Raises:
        qla.LinalgError: if the eigenvectors are not real or the two routes
            disagree by more than ``SPECTRUM_MATCH_TOL``.
    """
    dec = qla.hermitian_eigen(h_joint(params, b))
    u = joint_eigenvalues_closed_form(params, b)
    mismatch = np.max(np.abs(np.sort(u) - dec.values))
    if mismatch > SPECTRUM_MATCH_TOL:
        raise qla.LinalgError(f"closed-form and numeric joint spectra differ by {mismatch:.3e}")
    if np.max(np.abs(dec.vectors.imag)) > 1e-12:
        raise qla.LinalgError("joint eigenvectors are not real")
    return JointSpectrum(u=u, decomposition=dec)
