# src/channel.py
# Power-law path loss and Rayleigh fading draws.

from enum import Enum
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import ParameterDomainError, SingularGeometryError

ArrayLike = Union[float, np.ndarray]


class Fading(str, Enum):
    RAYLEIGH = "rayleigh"


class ChannelParams(BaseModel):
    """Propagation constants shared by every link of a scenario.

    `tx_power` is the desired transmitter's linear power; interferer powers
    are carried per point by the sampled pattern.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(gt=2, description="path-loss exponent")
    r0: float = Field(default=0.0, ge=0, description="near-field cutoff distance")
    noise: float = Field(default=0.0, ge=0, description="noise power N0, linear")
    tx_power: float = Field(default=1.0, gt=0)
    fading: Fading = Fading.RAYLEIGH


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def path_loss(distance: ArrayLike, params: ChannelParams) -> ArrayLike:
    """max(distance, r0) ** -alpha, element-wise for arrays."""
    d = np.asarray(distance, dtype=float)
    if np.any(d < 0):
        raise ParameterDomainError("distance must be non-negative")
    if params.r0 == 0 and np.any(d == 0):
        raise SingularGeometryError("zero link distance with no near-field cutoff")
    gain = np.maximum(d, params.r0) ** -params.alpha
    return float(gain) if gain.ndim == 0 else gain


def draw_rayleigh_power(rng: np.random.Generator, size: Optional[Union[int, tuple]] = None):
    """Unit-mean exponential power of a Rayleigh amplitude."""
    return rng.exponential(1.0, size=size)
