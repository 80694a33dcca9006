# src/interference.py
# Shot-noise interference, SIR/SINR, MAC activity and the fading-averaged success probability.

import math
from typing import Literal, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .channel import ChannelParams, draw_rayleigh_power, path_loss
from .errors import InvalidConfigurationError, ParameterDomainError, UsageError
from .point_process import Point, PointPattern

ORIGIN: Point = (0.0, 0.0)


class CorrelationMode(BaseModel):
    """Which randomness one replication reuses across antennas, slots and receivers.

    Fading is always redrawn per antenna, slot and link.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    positions: Literal["shared", "fresh"] = "shared"
    mac_marks: Literal["shared", "fresh"] = "fresh"

    @model_validator(mode="after")
    def _check_marks(self):
        if self.positions == "fresh" and self.mac_marks == "shared":
            raise ValueError("MAC marks cannot be shared across independently drawn positions")
        return self

    @property
    def fading(self) -> str:
        return "fresh"

    @property
    def name(self) -> str:
        if self.positions == "fresh":
            return "independent"
        return "static" if self.mac_marks == "shared" else "correlated"

    @classmethod
    def correlated(cls) -> "CorrelationMode":
        return cls(positions="shared", mac_marks="fresh")

    @classmethod
    def independent(cls) -> "CorrelationMode":
        return cls(positions="fresh", mac_marks="fresh")

    @classmethod
    def static(cls) -> "CorrelationMode":
        return cls(positions="shared", mac_marks="shared")

    @classmethod
    def from_name(cls, name: str) -> "CorrelationMode":
        factories = {"correlated": cls.correlated, "independent": cls.independent, "static": cls.static}
        if name not in factories:
            raise UsageError(f"unknown correlation mode '{name}'")
        return factories[name]()


class MacSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    scheme: Literal["always_on", "aloha", "fhma"] = "always_on"
    p: float = Field(default=1.0, ge=0, le=1)
    n: int = Field(default=1, ge=1)

    @classmethod
    def always_on(cls) -> "MacSpec":
        return cls()

    @classmethod
    def aloha(cls, p: float) -> "MacSpec":
        return cls(scheme="aloha", p=p)

    @classmethod
    def fhma(cls, n: int) -> "MacSpec":
        return cls(scheme="fhma", n=n)

    @property
    def activity_probability(self) -> float:
        if self.scheme == "aloha":
            return self.p
        if self.scheme == "fhma":
            return 1.0 / self.n
        return 1.0

    def label(self) -> str:
        if self.scheme == "aloha":
            return f"aloha(p={self.p:g})"
        if self.scheme == "fhma":
            return f"fhma(N={self.n})"
        return "always_on"


def _activity(mac: MacSpec, shape, rng: np.random.Generator) -> np.ndarray:
    if mac.scheme == "aloha":
        return rng.uniform(size=shape) < mac.p
    if mac.scheme == "fhma":
        # the receiver listens on sub-band 0
        return rng.integers(0, mac.n, size=shape) == 0
    return np.ones(shape, dtype=bool)


def mac_activity(pattern: PointPattern, mac: MacSpec, rng: np.random.Generator) -> np.ndarray:
    """One boolean per point: is that interferer transmitting on the receiver's band this slot."""
    return _activity(mac, len(pattern), rng)


def aggregate_interference(
    receiver: Point,
    pattern: PointPattern,
    mask: np.ndarray,
    fading: np.ndarray,
    params: ChannelParams,
) -> float:
    mask = np.asarray(mask, dtype=bool)
    fading = np.asarray(fading, dtype=float)
    if len(fading) != len(pattern) or len(mask) != len(pattern):
        raise UsageError("need exactly one fading draw and one activity flag per point")
    if not mask.any():
        return 0.0
    gains = path_loss(pattern.distances(receiver)[mask], params)
    return float(np.sum(pattern.power[mask] * fading[mask] * gains))


def received_power(receiver: Point, tx: Point, fading: float, power: float, params: ChannelParams) -> float:
    distance = math.hypot(tx[0] - receiver[0], tx[1] - receiver[1])
    return power * fading * path_loss(distance, params)


def _ratio(signal: float, denominator: float) -> float:
    if denominator == 0:
        if signal > 0:
            return math.inf
        raise InvalidConfigurationError("signal and interference-plus-noise are both zero")
    return signal / denominator


def sir(receiver: Point, tx: Point, tx_fading: float, interference: float, params: ChannelParams) -> float:
    signal = received_power(receiver, tx, tx_fading, params.tx_power, params)
    return _ratio(signal, interference)


def sinr(receiver: Point, tx: Point, tx_fading: float, interference: float, params: ChannelParams) -> float:
    signal = received_power(receiver, tx, tx_fading, params.tx_power, params)
    return _ratio(signal, interference + params.noise)


def joint_success_rayleigh(
    links: Sequence[Tuple[Point, float]],
    theta: float,
    pattern: PointPattern,
    mac: MacSpec,
    params: ChannelParams,
) -> float:
    """P(every link decodes in one slot | pattern), averaged over fading and MAC activity.

    Each link is (receiver, distance to its transmitter). The links share the
    slot's MAC marks while fading is independent per link, so every
    interferer contributes 1 - p + p * prod_l 1 / (1 + a_l(x)) with
    a_l(x) = theta * P_x l(|x - rx_l|) / (P l(d_l)).
    """
    if not theta > 0:
        raise ParameterDomainError(f"SIR threshold must be positive, got {theta}")
    if not links:
        return 1.0
    log_success = 0.0
    shrink = np.ones(len(pattern))
    for receiver, d in links:
        if not d > 0:
            raise ParameterDomainError(f"link distance must be positive, got {d}")
        s = theta / (params.tx_power * path_loss(d, params))
        log_success -= s * params.noise
        if len(pattern):
            a = s * pattern.power * path_loss(pattern.distances(receiver), params)
            shrink = shrink / (1.0 + a)
    if len(pattern):
        p = mac.activity_probability
        with np.errstate(divide="ignore"):
            log_success += float(np.sum(np.log1p(-p * (1.0 - shrink))))
    return float(math.exp(log_success))


def conditional_success_rayleigh(
    d: float,
    theta: float,
    pattern: PointPattern,
    mac: MacSpec,
    params: ChannelParams,
    receiver: Point = ORIGIN,
) -> float:
    """Fading- and MAC-averaged P(SINR > theta) with the interferer pattern held fixed."""
    return joint_success_rayleigh([(receiver, d)], theta, pattern, mac, params)


def empirical_success(
    d: float,
    theta: float,
    pattern: PointPattern,
    mac: MacSpec,
    params: ChannelParams,
    rng: np.random.Generator,
    draws: int = 100_000,
    receiver: Point = ORIGIN,
    chunk: int = 50_000,
) -> Tuple[float, float]:
    """Brute-force estimate of P(SINR > theta | pattern) with its standard error.

    The desired transmitter sits at distance d east of the receiver.
    """
    signal_mean = params.tx_power * path_loss(d, params)
    interferer_mean = pattern.power * path_loss(pattern.distances(receiver), params)
    hits = 0
    done = 0
    while done < draws:
        m = min(chunk, draws - done)
        signal = signal_mean * draw_rayleigh_power(rng, m)
        fading = draw_rayleigh_power(rng, (m, len(pattern)))
        active = _activity(mac, (m, len(pattern)), rng)
        interference = (fading * active) @ interferer_mean
        hits += int(np.count_nonzero(signal > theta * (interference + params.noise)))
        done += m
    estimate = hits / draws
    return estimate, math.sqrt(estimate * (1.0 - estimate) / draws)
