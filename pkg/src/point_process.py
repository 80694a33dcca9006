# src/point_process.py
# Spatial point process samplers over a rectangular window.

import math
from dataclasses import dataclass
from typing import Annotated, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import integrate
from scipy.spatial import cKDTree

from .errors import ParameterDomainError, UsageError

Point = Tuple[float, float]


class Window(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @model_validator(mode="after")
    def _check_bounds(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("window needs x_min < x_max and y_min < y_max")
        return self

    @classmethod
    def centered(cls, half: float) -> "Window":
        return cls(x_min=-half, x_max=half, y_min=-half, y_max=half)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def dilate(self, margin: float) -> "Window":
        if margin == 0:
            return self
        return Window(
            x_min=self.x_min - margin,
            x_max=self.x_max + margin,
            y_min=self.y_min - margin,
            y_max=self.y_max + margin,
        )

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of the rows of an (n, 2) array lying in the closed window."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return (
            (pts[:, 0] >= self.x_min)
            & (pts[:, 0] <= self.x_max)
            & (pts[:, 1] >= self.y_min)
            & (pts[:, 1] <= self.y_max)
        )

    def nearest_point(self, point: Point) -> np.ndarray:
        return np.array(
            [
                min(max(point[0], self.x_min), self.x_max),
                min(max(point[1], self.y_min), self.y_max),
            ]
        )

    def corners(self) -> np.ndarray:
        return np.array(
            [
                [self.x_min, self.y_min],
                [self.x_min, self.y_max],
                [self.x_max, self.y_min],
                [self.x_max, self.y_max],
            ]
        )


@dataclass(frozen=True, eq=False)
class PointPattern:
    """Finite planar point set inside a window.

    `points` keeps generation order; `power` tags each point with the linear
    transmit power of the tier it came from (ones unless a tier sets it).
    """

    points: np.ndarray
    window: Window
    power: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        if self.power is None:
            object.__setattr__(self, "power", np.ones(len(pts)))
        else:
            power = np.asarray(self.power, dtype=float).reshape(-1)
            if len(power) != len(pts):
                raise UsageError("power tags must match the number of points")
            object.__setattr__(self, "power", power)

    @classmethod
    def empty(cls, window: Window) -> "PointPattern":
        return cls(np.empty((0, 2)), window)

    def __len__(self) -> int:
        return len(self.points)

    def distances(self, to: Point = (0.0, 0.0)) -> np.ndarray:
        return np.hypot(self.points[:, 0] - to[0], self.points[:, 1] - to[1])

    def subset(self, mask: np.ndarray) -> "PointPattern":
        return PointPattern(self.points[mask], self.window, self.power[mask])

    def with_power(self, power: float) -> "PointPattern":
        return PointPattern(self.points, self.window, np.full(len(self), float(power)))


class _Spec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# ------------------------------------------------------------------
# Intensity families for the inhomogeneous PPP
# ------------------------------------------------------------------
class ConstantIntensity(_Spec):
    family: Literal["constant"] = "constant"
    lambda0: float = Field(ge=0)

    def __call__(self, xy: np.ndarray) -> np.ndarray:
        return np.full(len(xy), self.lambda0)

    def supremum(self, window: Window) -> float:
        return self.lambda0


class GaussianRing(_Spec):
    """Intensity peaking on a circle around the origin, e.g. pico cells near macro-cell edges."""

    family: Literal["gaussian_ring"] = "gaussian_ring"
    lambda0: float = Field(ge=0)
    ring_radius: float = Field(ge=0)
    width: float = Field(gt=0)

    def _profile(self, r):
        return self.lambda0 * np.exp(-0.5 * ((r - self.ring_radius) / self.width) ** 2)

    def __call__(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        return self._profile(np.hypot(xy[:, 0], xy[:, 1]))

    def supremum(self, window: Window) -> float:
        r_near = float(np.hypot(*window.nearest_point((0.0, 0.0))))
        r_far = float(np.max(np.hypot(*window.corners().T)))
        r_best = min(max(self.ring_radius, r_near), r_far)
        return float(self._profile(r_best))


class GaussianBump(_Spec):
    family: Literal["gaussian_bump"] = "gaussian_bump"
    lambda0: float = Field(ge=0)
    center: Tuple[float, float] = (0.0, 0.0)
    width: float = Field(gt=0)

    def __call__(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        r2 = (xy[:, 0] - self.center[0]) ** 2 + (xy[:, 1] - self.center[1]) ** 2
        return self.lambda0 * np.exp(-0.5 * r2 / self.width**2)

    def supremum(self, window: Window) -> float:
        return float(self(window.nearest_point(self.center))[0])


IntensityFamily = Annotated[
    Union[ConstantIntensity, GaussianRing, GaussianBump], Field(discriminator="family")
]


# ------------------------------------------------------------------
# Process specifications
# ------------------------------------------------------------------
class HomogeneousPPP(_Spec):
    kind: Literal["ppp"] = "ppp"
    intensity: float = Field(ge=0)


class InhomogeneousPPP(_Spec):
    kind: Literal["inhomogeneous_ppp"] = "inhomogeneous_ppp"
    family: IntensityFamily


class MaternHardCoreII(_Spec):
    kind: Literal["matern_hardcore"] = "matern_hardcore"
    lambda_parent: float = Field(ge=0)
    r_min: float = Field(ge=0)


class MaternCluster(_Spec):
    kind: Literal["matern_cluster"] = "matern_cluster"
    lambda_parent: float = Field(ge=0)
    mean_daughters: float = Field(ge=0)
    cluster_radius: float = Field(ge=0)


class ThomasCluster(_Spec):
    kind: Literal["thomas_cluster"] = "thomas_cluster"
    lambda_parent: float = Field(ge=0)
    mean_daughters: float = Field(ge=0)
    sigma: float = Field(ge=0)


ProcessSpec = Annotated[
    Union[HomogeneousPPP, InhomogeneousPPP, MaternHardCoreII, MaternCluster, ThomasCluster],
    Field(discriminator="kind"),
]


# ------------------------------------------------------------------
# Samplers
# ------------------------------------------------------------------
def _uniform_points(n: int, window: Window, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(
        low=(window.x_min, window.y_min), high=(window.x_max, window.y_max), size=(n, 2)
    )


def sample_ppp(intensity: float, window: Window, rng: np.random.Generator) -> PointPattern:
    if not (intensity >= 0) or not math.isfinite(intensity):
        raise ParameterDomainError(f"intensity must be a finite non-negative number, got {intensity}")
    n = int(rng.poisson(intensity * window.area))
    return PointPattern(_uniform_points(n, window, rng), window)


def sample_inhomogeneous_ppp(
    spec: InhomogeneousPPP, window: Window, rng: np.random.Generator
) -> PointPattern:
    family = spec.family
    lam_max = family.supremum(window)
    if not math.isfinite(lam_max):
        raise ParameterDomainError(f"{family.family} intensity is unbounded on the window")
    dominating = sample_ppp(lam_max, window, rng)
    if lam_max == 0 or len(dominating) == 0:
        return dominating
    retain = rng.uniform(size=len(dominating)) < family(dominating.points) / lam_max
    return dominating.subset(retain)


def _hardcore_survivors(points: np.ndarray, marks: np.ndarray, r_min: float) -> np.ndarray:
    """Matérn type-II rule: a point dies if a point closer than r_min carries a smaller mark."""
    keep = np.ones(len(points), dtype=bool)
    if r_min <= 0 or len(points) < 2:
        return keep
    pairs = cKDTree(points).query_pairs(r_min, output_type="ndarray")
    if len(pairs) == 0:
        return keep
    i, j = pairs[:, 0], pairs[:, 1]
    gap = points[i] - points[j]
    close = np.hypot(gap[:, 0], gap[:, 1]) < r_min
    i, j = i[close], j[close]
    keep[np.where(marks[i] > marks[j], i, j)] = False
    return keep


def _matern_parents(
    spec: MaternHardCoreII,
    window: Window,
    rng: np.random.Generator,
    anchor: Optional[Point] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Parents and their survival mask on the window dilated by r_min.

    With an anchor the anchor is appended as the last parent and the draw
    is repeated until it survives.
    """
    outer = window.dilate(spec.r_min)
    while True:
        parents = sample_ppp(spec.lambda_parent, outer, rng).points
        marks = rng.uniform(size=len(parents))
        if anchor is not None:
            parents = np.vstack([parents, np.asarray(anchor, dtype=float).reshape(1, 2)])
            marks = np.append(marks, rng.uniform())
        keep = _hardcore_survivors(parents, marks, spec.r_min)
        if anchor is None:
            return parents, keep
        if keep[-1]:
            return parents[:-1], keep[:-1]


def sample_matern_hardcore(
    spec: MaternHardCoreII,
    window: Window,
    rng: np.random.Generator,
    anchor: Optional[Point] = None,
) -> PointPattern:
    parents, keep = _matern_parents(spec, window, rng, anchor)
    kept = parents[keep]
    return PointPattern(kept[window.contains(kept)], window)


def _disk_offsets(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    u = rng.uniform(size=(n, 2))
    r = radius * np.sqrt(u[:, 0])
    theta = 2.0 * np.pi * u[:, 1]
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def sample_cluster(
    spec: Union[MaternCluster, ThomasCluster],
    window: Window,
    rng: np.random.Generator,
    anchor: Optional[Point] = None,
) -> PointPattern:
    """Neyman-Scott cluster process with Poisson(mean_daughters) daughters per parent.

    Parents live on the window dilated by the cluster reach (R_c for Matérn,
    4 sigma for Thomas); only daughters inside the window are returned. With
    an anchor, one extra parent is placed so that the anchor is one of its
    daughters and its Poisson(mean_daughters) siblings are added.
    """
    if isinstance(spec, MaternCluster):
        margin = spec.cluster_radius

        def scatter(n):
            return _disk_offsets(n, spec.cluster_radius, rng)

    elif isinstance(spec, ThomasCluster):
        margin = 4.0 * spec.sigma

        def scatter(n):
            return rng.normal(0.0, spec.sigma, size=(n, 2))

    else:
        raise UsageError(f"not a cluster process: {type(spec).__name__}")

    parents = sample_ppp(spec.lambda_parent, window.dilate(margin), rng).points
    if anchor is not None:
        sibling_parent = np.asarray(anchor, dtype=float).reshape(1, 2) - scatter(1)
        parents = np.vstack([parents, sibling_parent])
    counts = rng.poisson(spec.mean_daughters, size=len(parents))
    daughters = np.repeat(parents, counts, axis=0)
    daughters = daughters + scatter(len(daughters))
    return PointPattern(daughters[window.contains(daughters)], window)


def sample(
    spec: ProcessSpec,
    window: Window,
    rng: np.random.Generator,
    anchor: Optional[Point] = None,
) -> PointPattern:
    """Sample any supported process; with an anchor, its reduced Palm version at the anchor."""
    if isinstance(spec, HomogeneousPPP):
        return sample_ppp(spec.intensity, window, rng)
    if isinstance(spec, InhomogeneousPPP):
        return sample_inhomogeneous_ppp(spec, window, rng)
    if isinstance(spec, MaternHardCoreII):
        return sample_matern_hardcore(spec, window, rng, anchor=anchor)
    if isinstance(spec, (MaternCluster, ThomasCluster)):
        return sample_cluster(spec, window, rng, anchor=anchor)
    raise UsageError(f"unknown process spec: {spec!r}")


def superpose(patterns: Sequence[PointPattern]) -> PointPattern:
    if not patterns:
        raise UsageError("superpose needs at least one pattern")
    window = patterns[0].window
    if any(p.window != window for p in patterns[1:]):
        raise UsageError("cannot superpose patterns observed on different windows")
    return PointPattern(
        np.concatenate([p.points for p in patterns]),
        window,
        np.concatenate([p.power for p in patterns]),
    )


def thin(pattern: PointPattern, q: float, rng: np.random.Generator) -> PointPattern:
    if not 0.0 <= q <= 1.0:
        raise ParameterDomainError(f"retention probability must lie in [0, 1], got {q}")
    return pattern.subset(rng.uniform(size=len(pattern)) < q)


# ------------------------------------------------------------------
# Intensities
# ------------------------------------------------------------------
def matern_retained_intensity(lambda_parent: float, r_min: float) -> float:
    if r_min == 0:
        return float(lambda_parent)
    core = math.pi * r_min**2
    return -math.expm1(-lambda_parent * core) / core


def matern_parent_intensity(target: float, r_min: float) -> float:
    """Parent intensity whose type-II thinning retains `target` points per unit area."""
    if target < 0:
        raise ParameterDomainError(f"target intensity must be non-negative, got {target}")
    if r_min == 0 or target == 0:
        return float(target)
    core = math.pi * r_min**2
    if target * core >= 1.0:
        raise ParameterDomainError(
            f"a hard-core distance of {r_min} caps the intensity below {1.0 / core:.6g}, "
            f"cannot reach {target}"
        )
    return -math.log1p(-target * core) / core


def mean_intensity(spec: ProcessSpec, window: Window) -> float:
    """Mean number of points per unit area of the window."""
    if isinstance(spec, HomogeneousPPP):
        return spec.intensity
    if isinstance(spec, InhomogeneousPPP):
        family = spec.family
        total, _ = integrate.dblquad(
            lambda y, x: float(family(np.array([[x, y]]))[0]),
            window.x_min,
            window.x_max,
            window.y_min,
            window.y_max,
        )
        return total / window.area
    if isinstance(spec, MaternHardCoreII):
        return matern_retained_intensity(spec.lambda_parent, spec.r_min)
    return spec.lambda_parent * spec.mean_daughters
