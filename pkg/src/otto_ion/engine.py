"""The four-stroke cycle: ignition, expansion, measurement exhaust, compression."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import qla
from .dynamics import IntegratorConfig, RampSpec, evolve_liouville, system_energy
from .model import EngineParams, ZConvention
from .thermo import (
    DegenerateCycleError,
    Occupations,
    StrokeLedger,
    gibbs_joint,
    heat_exhaust,
    hot_occupations,
    ledger,
    occupations,
    reduce_to_phonon,
    reduce_to_system,
    work_compression,
    work_expansion,
)

MIN_OUTCOME_PROB = 1e-12

_PROJ_G = qla.kron(np.diag([1.0, 0.0]), np.eye(2))
_PROJ_E = qla.kron(np.diag([0.0, 1.0]), np.eye(2))


class MeasurementError(RuntimeError):
    """Cannot condition on an outcome of (numerically) zero probability."""


@dataclass(frozen=True)
class MeasurementOutcome:
    observed_g: bool
    probability: float
    post_state: np.ndarray

    def summary(self) -> dict:
        return {"observed_g": self.observed_g, "probability": self.probability}


@dataclass(frozen=True)
class CycleRecord:
    params: EngineParams
    ledger: StrokeLedger
    eta: float
    eta_m: float | None
    measurement: dict
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        params = asdict(self.params)
        params["z_convention"] = self.params.z_convention.value
        out = dict(self.ledger.as_dict())
        out.update(
            eta=self.eta,
            eta_m=self.eta_m,
            residual=self.ledger.first_law_residual,
            measurement=dict(self.measurement),
            diagnostics=dict(self.diagnostics),
            params=params,
        )
        return out


def ignition_stroke(params: EngineParams) -> np.ndarray:
    """Thermal joint state at the hot field (state assignment, no dissipator)."""
    return gibbs_joint(params, params.b_hot)


def _ramp(rho, params: EngineParams, b_start: float, b_end: float) -> np.ndarray:
    spec = RampSpec(b_start, b_end, params.tau)
    return evolve_liouville(rho, params, spec, IntegratorConfig(steps=params.steps))[-1].rho


def expansion_stroke(rho_hot, params: EngineParams, occ_hot: Occupations | None = None):
    """Ramp ``B_H -> B_L`` and book the frozen-population work.

    Returns ``(rho, work, delta_u)`` where ``delta_u`` is the change of
    ``Tr(rho_S H_S)`` along the simulated trajectory.
    """
    if occ_hot is None:
        occ_hot = occupations(reduce_to_system(rho_hot), params.g, params.b_hot)
    rho = _ramp(rho_hot, params, params.b_hot, params.b_cold)
    delta_u = system_energy(rho, params.g, params.b_cold) - system_energy(rho_hot, params.g, params.b_hot)
    return rho, work_expansion(params, occ_hot), delta_u


def _condition(rho: np.ndarray, proj: np.ndarray, observed_g: bool) -> MeasurementOutcome:
    prob = float(np.trace(proj @ rho).real)
    if prob < MIN_OUTCOME_PROB:
        raise MeasurementError(f"outcome probability {prob:.3e} too small to condition on")
    post = proj @ rho @ proj / prob
    return MeasurementOutcome(observed_g, prob, 0.5 * (post + qla.dagger(post)))


def projective_measure_g(rho, rng: np.random.Generator | None = None) -> MeasurementOutcome:
    """Measure the ion in ``{|g>, |e>}``.

    Without ``rng`` the outcome ``g`` is forced (post-selection). With ``rng``
    the outcome is sampled from the Born probabilities.

    Raises:
        MeasurementError: if the selected outcome has probability below
            ``MIN_OUTCOME_PROB``.
    """
    rho = qla.as_matrix(rho)
    if rng is None:
        return _condition(rho, _PROJ_G, True)
    p_g = float(np.trace(_PROJ_G @ rho).real)
    if rng.random() < p_g:
        return _condition(rho, _PROJ_G, True)
    return _condition(rho, _PROJ_E, False)


def nonselective_decouple(rho) -> np.ndarray:
    """Discard ion-phonon correlations: ``rho -> rho_S (x) rho_ph``."""
    return qla.kron(reduce_to_system(rho), reduce_to_phonon(rho))


def exhaust_stroke(
    rho,
    params: EngineParams,
    occ_hot: Occupations,
    mode: str = "selective",
    rng: np.random.Generator | None = None,
):
    """Measurement-driven heat release at the cold field.

    Returns ``(rho, q_cold, outcome)``; ``outcome`` is ``None`` in
    non-selective mode.
    """
    if mode == "selective":
        outcome = projective_measure_g(rho, rng)
        return outcome.post_state, heat_exhaust(params, occ_hot), outcome
    if mode == "nonselective":
        return nonselective_decouple(rho), heat_exhaust(params, occ_hot), None
    raise ValueError(f"unknown exhaust mode {mode!r}")


def compression_stroke(rho, params: EngineParams):
    """Ramp ``B_L -> B_H``; returns ``(rho, work, delta_u, ground_fidelity)``.

    ``ground_fidelity`` is ``<g|rho_S|g>`` at the end of the ramp.
    """
    rho_end = _ramp(rho, params, params.b_cold, params.b_hot)
    delta_u = system_energy(rho_end, params.g, params.b_hot) - system_energy(rho, params.g, params.b_cold)
    fidelity = float(reduce_to_system(rho_end)[0, 0].real)
    return rho_end, work_compression(params), delta_u, fidelity


def _z_discrepancy(params: EngineParams, occ_hot: Occupations) -> float:
    other = ZConvention.STROKE_LOCAL if params.z_convention is ZConvention.TRANSPORT else ZConvention.TRANSPORT
    a = ledger(params, occ_hot)
    b = ledger(params.with_(z_convention=other), occ_hot)
    return max(
        abs(a.q_hot - b.q_hot),
        abs(a.q_cold - b.q_cold),
        abs(a.w_expand - b.w_expand),
        abs(a.w_compress - b.w_compress),
    )


def _is_degenerate(led: StrokeLedger) -> bool:
    scale = max(1.0, abs(led.q_hot), abs(led.q_cold))
    return abs(led.q_hot) <= 1e-14 or abs(led.w_net_by_system) <= 1e-14 * scale


def run_cycle(
    params: EngineParams,
    mode: str = "selective",
    seed: int | None = None,
    dynamics: bool = True,
) -> CycleRecord:
    """Run ignition, expansion, exhaust and compression once.

    Heats and works come from the closed-form ledger; the simulated ramps only
    feed ``diagnostics``. ``seed=None`` forces the ``g`` outcome in selective
    mode, otherwise the outcome is sampled with ``numpy.random.default_rng(seed)``.
    With ``dynamics=False`` the ramps are skipped and the expansion is treated
    as ideal.

    ``eta_m`` is ``None`` when ``Q_H + M`` is not positive.

    Raises:
        DegenerateCycleError: if no heat is absorbed or the net work vanishes.
    """
    rng = None if seed is None else np.random.default_rng(seed)
    rho_hot = ignition_stroke(params)
    occ_hot = occupations(reduce_to_system(rho_hot), params.g, params.b_hot)
    led = ledger(params, occ_hot)
    if _is_degenerate(led):
        raise DegenerateCycleError(
            f"degenerate cycle: Q_H = {led.q_hot:.3e}, net work = {led.w_net_by_system:.3e}"
        )
    eta = led.eta
    try:
        eta_m = led.eta_m
    except DegenerateCycleError:
        eta_m = None

    work = led.w_net_by_system
    diag: dict = {
        "first_law_residual": led.first_law_residual,
        "operates_as_engine": led.q_hot > 0 and work > 0,
        "z_convention_discrepancy": _z_discrepancy(params, occ_hot),
        "p1_hot": occ_hot.p1,
        "p2_hot": occ_hot.p2,
    }
    if dynamics:
        rho_exp, _, du_exp = expansion_stroke(rho_hot, params, occ_hot)
    else:
        rho_exp, du_exp = rho_hot, None
    rho_exh, _, outcome = exhaust_stroke(rho_exp, params, occ_hot, mode=mode, rng=rng)
    if dynamics:
        _, _, du_comp, fidelity = compression_stroke(rho_exh, params)
    else:
        du_comp, fidelity = None, float(reduce_to_system(rho_exh)[0, 0].real)
    diag.update(
        expansion_delta_u=du_exp,
        compression_delta_u=du_comp,
        ground_fidelity_after_compression=fidelity,
    )
    if outcome is None:
        meas = {"mode": mode, "observed_g": None, "probability": None}
    else:
        meas = {"mode": mode, **outcome.summary()}
    return CycleRecord(params=params, ledger=led, eta=eta, eta_m=eta_m, measurement=meas, diagnostics=diag)


@dataclass(frozen=True)
class SweepPoint:
    b_hot: float
    work: float
    eta: float | None
    eta_m: float | None
    flagged: bool


def sweep_efficiency(params: EngineParams, b_h_grid) -> list[SweepPoint]:
    """Closed-form cycle at each hot field in ``b_h_grid`` (no dynamics).

    Every point keeps its work ``Q_H - |Q_L|``. An efficiency that is
    undefined there (degenerate cycle, or ``Q_H + M <= 0`` for ``eta_m``) is
    reported as ``None`` and the point is flagged.
    """
    out = []
    for b_hot in b_h_grid:
        b_hot = float(b_hot)
        if b_hot < params.b_cold:
            raise ValueError(f"grid value {b_hot} is below b_cold = {params.b_cold}")
        p = params.with_(b_hot=b_hot)
        led = ledger(p, hot_occupations(p))
        work = led.q_hot - abs(led.q_cold)
        eta = eta_m = None
        if not _is_degenerate(led):
            eta = led.eta
            try:
                eta_m = led.eta_m
            except DegenerateCycleError:
                pass
        out.append(SweepPoint(b_hot, work, eta, eta_m, eta is None or eta_m is None))
    return out


def field_grid(b_min: float = 0.01, b_max: float = 10.0, n: int = 200) -> np.ndarray:
    if n < 1:
        raise ValueError("n_points must be >= 1")
    if n == 1:
        return np.array([b_max])
    return np.linspace(b_min, b_max, n)

