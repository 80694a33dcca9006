# src/experiments.py
# Case studies: coverage, SIMO joint occurrence, local delay, relay outage, outage persistence.

import logging
from functools import partial
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .channel import ChannelParams
from .errors import InfiniteDelayError, ParameterDomainError, UsageError
from .interference import (
    ORIGIN,
    CorrelationMode,
    MacSpec,
    conditional_success_rayleigh,
    joint_success_rayleigh,
    mac_activity,
)
from .point_process import (
    MaternHardCoreII,
    Point,
    PointPattern,
    ProcessSpec,
    Window,
    matern_parent_intensity,
    sample,
    superpose,
)
from .streams import run_replications, substream, summarize

log = logging.getLogger(__name__)

SOURCE: Point = (-1.0, 0.0)
DESTINATION: Point = (1.0, 0.0)

ParamValue = Union[float, int, str]


class Tier(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    process: ProcessSpec
    power: float = Field(default=1.0, gt=0)


class ScenarioSpec(BaseModel):
    """Everything one experiment replication needs.

    Tier 1 is the tier the receiver of interest is served by: with `palm`
    set, its pattern is drawn as seen from a serving node at the receiver.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    tiers: List[Tier] = Field(min_length=1)
    window: Window
    channel: ChannelParams
    mac: MacSpec = MacSpec()
    theta: float = Field(default=1.0, gt=0)
    link_distance: float = Field(default=1.0, gt=0)
    reps: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    delay_cap: float = Field(default=1e6, ge=1)
    palm: bool = True

    @model_validator(mode="after")
    def _window_holds_origin(self):
        if not self.window.contains(np.zeros((1, 2)))[0]:
            raise ValueError("the window must contain the origin")
        return self

    def with_changes(self, **changes) -> "ScenarioSpec":
        return ScenarioSpec.model_validate({**dict(self), **changes})


class EstimateRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: str
    mode: str
    params: Dict[str, ParamValue] = Field(default_factory=dict)
    estimate: float
    std_error: float = Field(ge=0)
    reps: int
    seed: int
    capped_fraction: float = Field(default=0.0, ge=0, le=1)


def matched_matern(target_intensity: float, r_min: float) -> MaternHardCoreII:
    """Matérn II spec whose retained intensity equals `target_intensity`."""
    return MaternHardCoreII(lambda_parent=matern_parent_intensity(target_intensity, r_min), r_min=r_min)


def _scenario_params(scenario: ScenarioSpec) -> Dict[str, ParamValue]:
    ch = scenario.channel
    return {
        "alpha": ch.alpha,
        "r0": ch.r0,
        "noise": ch.noise,
        "theta": scenario.theta,
        "d": scenario.link_distance,
        "mac": scenario.mac.label(),
        "tiers": "+".join(t.process.kind for t in scenario.tiers),
    }


def _record(
    experiment: str,
    mode: str,
    scenario: ScenarioSpec,
    estimate: float,
    std_error: float,
    capped_fraction: float = 0.0,
    **extra: ParamValue,
) -> EstimateRecord:
    return EstimateRecord(
        experiment=experiment,
        mode=mode,
        params={**_scenario_params(scenario), **extra},
        estimate=estimate,
        std_error=std_error,
        reps=scenario.reps,
        seed=scenario.seed,
        capped_fraction=capped_fraction,
    )


def compose_tiers(
    scenario: ScenarioSpec,
    rng: Optional[np.random.Generator] = None,
    anchor: Optional[Point] = None,
) -> PointPattern:
    """Sample every tier independently, tag points with tier power, superpose.

    `anchor` is the serving node for the Palm view of tier 1.
    """
    if rng is None:
        rng = substream(scenario.seed, "compose_tiers", 0)
    patterns = []
    for k, tier in enumerate(scenario.tiers):
        tier_anchor = anchor if k == 0 else None
        patterns.append(sample(tier.process, scenario.window, rng, anchor=tier_anchor).with_power(tier.power))
    return superpose(patterns)


def _serving(scenario: ScenarioSpec, at: Point) -> Optional[Point]:
    return at if scenario.palm else None


# ------------------------------------------------------------------
# Per-replication kernels (module level so worker processes can pickle them)
# ------------------------------------------------------------------
def _success_kernel(scenario: ScenarioSpec, rng: np.random.Generator) -> List[float]:
    pattern = compose_tiers(scenario, rng, anchor=_serving(scenario, ORIGIN))
    return [
        conditional_success_rayleigh(
            scenario.link_distance, scenario.theta, pattern, scenario.mac, scenario.channel
        )
    ]


def _shared_marks_kernel(scenario: ScenarioSpec, antennas: int, rng: np.random.Generator) -> List[float]:
    pattern = compose_tiers(scenario, rng, anchor=_serving(scenario, ORIGIN))
    links = [(ORIGIN, scenario.link_distance)] * antennas
    return [joint_success_rayleigh(links, scenario.theta, pattern, scenario.mac, scenario.channel)]


def _frozen_success(scenario: ScenarioSpec, pattern: PointPattern, mac: MacSpec, rng: np.random.Generator) -> float:
    active = pattern.subset(mac_activity(pattern, mac, rng))
    return conditional_success_rayleigh(
        scenario.link_distance, scenario.theta, active, MacSpec.always_on(), scenario.channel
    )


def _delay_kernel(
    scenario: ScenarioSpec, macs: Sequence[MacSpec], frozen: bool, rng: np.random.Generator
) -> List[float]:
    pattern = compose_tiers(scenario, rng, anchor=_serving(scenario, ORIGIN))
    if frozen:
        return [_frozen_success(scenario, pattern, mac, rng) for mac in macs]
    return [
        conditional_success_rayleigh(scenario.link_distance, scenario.theta, pattern, mac, scenario.channel)
        for mac in macs
    ]


def _frozen_kernel(scenario: ScenarioSpec, rng: np.random.Generator) -> List[float]:
    pattern = compose_tiers(scenario, rng, anchor=_serving(scenario, ORIGIN))
    return [_frozen_success(scenario, pattern, scenario.mac, rng)]


def _relay_kernel(
    scenario: ScenarioSpec, positions: Sequence[float], independent: bool, rng: np.random.Generator
) -> List[float]:
    """Outage per relay position followed by the direct-link outage.

    Slot 1: the source transmits and both the relay and the destination
    listen. Slot 2: the relay forwards if it decoded. The destination keeps
    the better copy (selection combining).
    """
    ch, theta, mac = scenario.channel, scenario.theta, scenario.mac
    anchor = _serving(scenario, DESTINATION)
    sd_link = (DESTINATION, DESTINATION[0] - SOURCE[0])
    interferers = compose_tiers(scenario, rng, anchor=anchor)
    p_sd = joint_success_rayleigh([sd_link], theta, interferers, mac, ch)
    if independent:
        relay_field = compose_tiers(scenario, rng, anchor=anchor)
        forward_field = compose_tiers(scenario, rng, anchor=anchor)
    outages = []
    for r in positions:
        relay = (r, 0.0)
        sr_link = (relay, r - SOURCE[0])
        rd_link = (DESTINATION, DESTINATION[0] - r)
        if independent:
            p_sr = joint_success_rayleigh([sr_link], theta, relay_field, mac, ch)
            p_rd = joint_success_rayleigh([rd_link], theta, forward_field, mac, ch)
            success = p_sd + (1.0 - p_sd) * p_sr * p_rd
        else:
            p_sr = joint_success_rayleigh([sr_link], theta, interferers, mac, ch)
            p_both = joint_success_rayleigh([sd_link, sr_link], theta, interferers, mac, ch)
            p_rd = joint_success_rayleigh([rd_link], theta, interferers, mac, ch)
            success = p_sd + (p_sr - p_both) * p_rd
        outages.append(1.0 - success)
    outages.append(1.0 - p_sd)
    return outages


# ------------------------------------------------------------------
# Experiments
# ------------------------------------------------------------------
def _success_probabilities(scenario: ScenarioSpec, threads: int) -> np.ndarray:
    # coverage, SIMO and persistence share these streams, so they see the same patterns
    kernel = partial(_success_kernel, scenario)
    return run_replications(kernel, scenario.reps, scenario.seed, "coverage", threads)[:, 0]


def coverage_probability(scenario: ScenarioSpec, threads: int = 1) -> EstimateRecord:
    """E over patterns of the conditional success probability at the origin."""
    log.info("coverage: reps=%d seed=%d", scenario.reps, scenario.seed)
    estimate, se = summarize(_success_probabilities(scenario, threads))
    return _record("coverage", "marginal", scenario, estimate, se)


def simo_joint_occurrence(
    scenario: ScenarioSpec,
    antennas: int,
    mode: CorrelationMode = CorrelationMode.correlated(),
    threads: int = 1,
) -> EstimateRecord:
    """P(all co-located antennas see SIR above theta).

    correlated: one pattern per replication, MAC marks and fading fresh
    per antenna, statistic p_s^M. static: one pattern and one set of MAC
    marks for all antennas. independent: coverage^M.
    """
    if antennas < 1:
        raise ParameterDomainError(f"antenna count must be >= 1, got {antennas}")
    log.info("simo: M=%d mode=%s reps=%d", antennas, mode.name, scenario.reps)
    if mode.name == "static":
        kernel = partial(_shared_marks_kernel, scenario, antennas)
        values = run_replications(kernel, scenario.reps, scenario.seed, "coverage", threads)[:, 0]
        estimate, se = summarize(values)
    elif mode.name == "correlated":
        estimate, se = summarize(_success_probabilities(scenario, threads) ** antennas)
    else:
        coverage, coverage_se = summarize(_success_probabilities(scenario, threads))
        estimate = coverage**antennas
        se = antennas * coverage ** (antennas - 1) * coverage_se
    return _record("simo", mode.name, scenario, estimate, se, antennas=antennas)


def _delay_summary(successes: np.ndarray, cap: float):
    with np.errstate(divide="ignore"):
        delays = 1.0 / successes
    capped = delays > cap
    estimate, se = summarize(np.minimum(delays, cap))
    return estimate, se, float(np.mean(capped))


def mean_local_delay(
    scenario: ScenarioSpec,
    p_grid: Optional[Sequence[float]] = None,
    mode: CorrelationMode = CorrelationMode.correlated(),
    threads: int = 1,
) -> List[EstimateRecord]:
    """Mean number of slots until the first success, one record per ALOHA probability.

    Without a grid the scenario's own MAC is used. The desired link
    transmits every slot. correlated: E[1 / p_s] over static positions with
    fresh MAC marks per slot. static: positions and activity both frozen.
    independent: 1 / E[p_s].
    """
    if p_grid is None:
        if scenario.mac.scheme == "aloha" and scenario.mac.p == 0:
            raise InfiniteDelayError("ALOHA probability 0 never reaches a transmission")
        macs = [scenario.mac]
    else:
        macs = []
        for p in p_grid:
            if p == 0:
                raise InfiniteDelayError("ALOHA probability 0 never reaches a transmission")
            if not 0 < p <= 1:
                raise ParameterDomainError(f"ALOHA probability must lie in (0, 1], got {p}")
            macs.append(MacSpec.aloha(p))
    cap = scenario.delay_cap
    log.info("delay: %d MAC settings mode=%s reps=%d", len(macs), mode.name, scenario.reps)
    kernel = partial(_delay_kernel, scenario, macs, mode.name == "static")
    successes = run_replications(kernel, scenario.reps, scenario.seed, "delay", threads)

    records = []
    for k, mac in enumerate(macs):
        column = successes[:, k]
        if mode.name == "independent":
            mean_success, success_se = summarize(column)
            if mean_success == 0 or 1.0 / mean_success > cap:
                estimate, se, capped = cap, 0.0, 1.0
            else:
                estimate = 1.0 / mean_success
                se, capped = success_se / mean_success**2, 0.0
        else:
            estimate, se, capped = _delay_summary(column, cap)
        extra = {"aloha_p": mac.p} if mac.scheme == "aloha" else {"mac_scheme": mac.label()}
        records.append(_record("delay", mode.name, scenario, estimate, se, capped, **extra))
    return records


def relay_outage(
    scenario: ScenarioSpec,
    relay_positions: Sequence[float],
    mode: CorrelationMode = CorrelationMode.correlated(),
    threads: int = 1,
    include_direct: bool = False,
) -> List[EstimateRecord]:
    """End-to-end two-slot decode-and-forward outage for each relay position on the source-destination axis."""
    positions = [float(r) for r in relay_positions]
    for r in positions:
        if not -1.0 < r < 1.0:
            raise ParameterDomainError(f"relay position must lie strictly inside (-1, 1), got {r}")
    if mode.name == "static":
        raise UsageError("relay outage redraws MAC marks every slot; use correlated or independent")
    log.info("relay: %d positions mode=%s reps=%d", len(positions), mode.name, scenario.reps)
    kernel = partial(_relay_kernel, scenario, positions, mode.name == "independent")
    outages = run_replications(kernel, scenario.reps, scenario.seed, "relay", threads)

    records = []
    for k, r in enumerate(positions):
        estimate, se = summarize(outages[:, k])
        records.append(_record("relay", mode.name, scenario, estimate, se, relay_position=r))
    if include_direct:
        estimate, se = summarize(outages[:, -1])
        for r in positions:
            records.append(_record("relay", "direct", scenario, estimate, se, relay_position=r))
    return records


def outage_persistence(
    scenario: ScenarioSpec,
    mode: CorrelationMode = CorrelationMode.correlated(),
    threads: int = 1,
) -> EstimateRecord:
    """P(outage in one slot | outage in another slot) on the same link.

    With static positions this is E[(1 - p_s)^2] / E[1 - p_s], a ratio
    estimator with delta-method standard error; with fresh positions the
    slots are independent and it reduces to the outage probability.
    """
    log.info("persistence: mode=%s reps=%d", mode.name, scenario.reps)
    if mode.name == "static":
        kernel = partial(_frozen_kernel, scenario)
        success = run_replications(kernel, scenario.reps, scenario.seed, "persistence", threads)[:, 0]
    else:
        success = _success_probabilities(scenario, threads)
    outage = 1.0 - success
    if mode.name == "independent":
        estimate, se = summarize(outage)
        return _record("persistence", mode.name, scenario, estimate, se)

    first = float(np.mean(outage))
    if first == 0:
        log.warning("persistence: no outage in any replication, reporting 0")
        return _record("persistence", mode.name, scenario, 0.0, 0.0)
    estimate = float(np.mean(outage**2)) / first
    _, residual_se = summarize(outage**2 - estimate * outage)
    return _record("persistence", mode.name, scenario, estimate, residual_se / first)
