# src/config.py
# Line-oriented `key = value` run configuration.

import math
import os
import re
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .channel import ChannelParams, db_to_linear
from .errors import ConfigError, ParameterDomainError
from .experiments import ScenarioSpec, Tier, matched_matern
from .interference import MacSpec
from .point_process import (
    ConstantIntensity,
    GaussianBump,
    GaussianRing,
    HomogeneousPPP,
    InhomogeneousPPP,
    MaternCluster,
    MaternHardCoreII,
    ThomasCluster,
    Window,
)

EXPERIMENTS = ("coverage", "simo", "delay", "relay", "persistence")
MODES = ("correlated", "independent", "both", "static")
MODELS = ("ppp", "inhomogeneous_ppp", "matern_hardcore", "matern_cluster", "thomas_cluster")
FAMILIES = ("constant", "gaussian_ring", "gaussian_bump")

FLOAT_KEYS = {
    "lambda", "lambda_parent", "r_min", "mu", "cluster_radius", "sigma", "ring_radius",
    "ring_width", "alpha", "r0", "noise", "theta", "d", "aloha_p", "window_half",
    "delay_cap", "power", "tx_power",
}
INT_KEYS = {"fhma_n", "antennas", "reps", "seed", "threads"}
LIST_KEYS = {"relay_grid", "sweep_values", "bump_center"}
CHOICE_KEYS = {
    "experiment": EXPERIMENTS,
    "mode": MODES,
    "model": MODELS,
    "intensity_family": FAMILIES,
}
TEXT_KEYS = {"sweep", "out"}
BOOL_KEYS = {"palm"}
DB_KEYS = {"theta", "noise", "power", "tx_power"}

KEYS = FLOAT_KEYS | INT_KEYS | LIST_KEYS | set(CHOICE_KEYS) | TEXT_KEYS | BOOL_KEYS
TIER_KEYS = {
    "model", "lambda", "lambda_parent", "r_min", "mu", "cluster_radius", "sigma",
    "intensity_family", "ring_radius", "ring_width", "bump_center", "power",
}
REQUIRED = ("experiment", "alpha", "reps", "seed")
MODEL_KEYS = {
    "ppp": ("lambda",),
    "inhomogeneous_ppp": ("lambda",),
    "matern_hardcore": ("r_min",),
    "matern_cluster": ("lambda_parent", "mu", "cluster_radius"),
    "thomas_cluster": ("lambda_parent", "mu", "sigma"),
}

DEFAULTS: Dict[str, Any] = {
    "mode": "correlated",
    "model": "ppp",
    "intensity_family": "constant",
    "ring_radius": 3.0,
    "ring_width": 0.5,
    "bump_center": [0.0, 0.0],
    "r0": 0.0,
    "noise": 0.0,
    "theta": 1.0,
    "d": 1.0,
    "window_half": 20.0,
    "antennas": 2,
    "relay_grid": [-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9],
    "threads": 1,
    "delay_cap": 1e6,
    "palm": True,
    "power": 1.0,
    "tx_power": 1.0,
}

# sweepable keys every scenario reads; the tier-1 model and the MAC add their own
CHANNEL_SWEEPS = ("alpha", "r0", "noise", "theta", "d", "window_half", "power", "tx_power")
FAMILY_SWEEPS = {
    "constant": (),
    "gaussian_ring": ("ring_radius", "ring_width"),
    "gaussian_bump": ("ring_width",),
}
EXTRA_SWEEPS = {"simo": ("antennas",)}

_TIER_KEY = re.compile(r"^tier(\d+)\.(\w+)$")


def _nonneg(key):
    return lambda v: None if v >= 0 else f"{key} must be non-negative"


def _positive(key):
    return lambda v: None if v > 0 else f"{key} must be positive"


def _relay_positions(key):
    return lambda v: None if all(-1 < r < 1 for r in v) else f"{key} values must lie strictly inside (-1, 1)"


CHECKS: Dict[str, Callable[[Any], Optional[str]]] = {
    "alpha": lambda v: None if v > 2 else "alpha must exceed 2",
    "lambda": _nonneg("lambda"),
    "lambda_parent": _nonneg("lambda_parent"),
    "r_min": _nonneg("r_min"),
    "mu": _nonneg("mu"),
    "cluster_radius": _nonneg("cluster_radius"),
    "sigma": _nonneg("sigma"),
    "ring_radius": _nonneg("ring_radius"),
    "ring_width": _positive("ring_width"),
    "r0": _nonneg("r0"),
    "noise": _nonneg("noise"),
    "theta": _positive("theta"),
    "d": _positive("d"),
    "aloha_p": lambda v: None if 0 <= v <= 1 else "aloha_p must lie in [0, 1]",
    "window_half": _positive("window_half"),
    "delay_cap": lambda v: None if v >= 1 else "delay_cap must be at least 1",
    "power": _positive("power"),
    "tx_power": _positive("tx_power"),
    "fhma_n": lambda v: None if v >= 1 else "fhma_n must be at least 1",
    "antennas": lambda v: None if v >= 1 else "antennas must be at least 1",
    "reps": lambda v: None if v >= 1 else "reps must be at least 1",
    "seed": lambda v: None if 0 <= v < 2**64 else "seed must be an unsigned 64-bit integer",
    "threads": lambda v: None if v >= 0 else "threads must be non-negative (0 = all cores)",
    "relay_grid": _relay_positions("relay_grid"),
    "bump_center": lambda v: None if len(v) == 2 else "bump_center needs exactly two coordinates",
}

# pydantic field name -> config key, for turning validation errors into line numbers
FIELD_KEYS = {
    "alpha": "alpha", "r0": "r0", "noise": "noise", "tx_power": "tx_power", "theta": "theta",
    "link_distance": "d", "reps": "reps", "seed": "seed", "delay_cap": "delay_cap",
    "intensity": "lambda", "lambda0": "lambda", "lambda_parent": "lambda_parent",
    "r_min": "r_min", "mean_daughters": "mu", "cluster_radius": "cluster_radius",
    "sigma": "sigma", "ring_radius": "ring_radius", "width": "ring_width", "p": "aloha_p",
    "n": "fhma_n", "power": "power", "center": "bump_center",
}


def _base_key(key: str) -> str:
    match = _TIER_KEY.match(key)
    return match.group(2) if match else key


def _convert(key: str, raw: str, line: int) -> Any:
    base = _base_key(key)
    try:
        if base in FLOAT_KEYS:
            if base in DB_KEYS and raw.lower().endswith("db"):
                value = db_to_linear(float(raw[:-2]))
            else:
                value = float(raw)
            if not math.isfinite(value):
                raise ValueError
        elif base in INT_KEYS:
            value = int(raw)
        elif base in LIST_KEYS:
            value = [float(item) for item in raw.split(",") if item.strip()]
            if not value:
                raise ConfigError(f"{key} needs at least one value", line)
        elif base in CHOICE_KEYS:
            value = raw.lower()
            if value not in CHOICE_KEYS[base]:
                raise ConfigError(f"{key} must be one of {', '.join(CHOICE_KEYS[base])}, got '{raw}'", line)
        elif base in BOOL_KEYS:
            lowered = raw.lower()
            if lowered not in ("true", "false", "yes", "no", "1", "0"):
                raise ConfigError(f"{key} must be true or false, got '{raw}'", line)
            value = lowered in ("true", "yes", "1")
        else:
            value = raw
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        kind = "an integer" if base in INT_KEYS else "a number" if base in FLOAT_KEYS else "numbers"
        raise ConfigError(f"{key} expects {kind}, got '{raw}'", line) from None
    check = CHECKS.get(base)
    problem = check(value) if check else None
    if problem:
        raise ConfigError(problem.replace(base, key, 1), line)
    return value


def _tier_settings(settings: Dict[str, Any]) -> List[Tuple[str, Dict[str, Any]]]:
    """Per-tier key/value views, tier 1 first, each tagged with its key prefix."""
    tiers = [("", settings)]
    numbers = sorted({int(m.group(1)) for m in map(_TIER_KEY.match, settings) if m})
    for n in numbers:
        prefix = f"tier{n}."
        own = {k[len(prefix):]: v for k, v in settings.items() if k.startswith(prefix)}
        own.setdefault("model", "ppp")
        tiers.append((prefix, own))
    return tiers


def _process(prefix: str, values: Dict[str, Any]):
    model = values.get("model", DEFAULTS["model"])
    for key in MODEL_KEYS[model]:
        if key not in values:
            raise ConfigError(f"missing required key '{prefix}{key}' for model {model}")

    def get(key):
        return values.get(key, DEFAULTS.get(key))

    if model == "ppp":
        return HomogeneousPPP(intensity=values["lambda"])
    if model == "inhomogeneous_ppp":
        family = get("intensity_family")
        if family == "gaussian_ring":
            shape = GaussianRing(lambda0=values["lambda"], ring_radius=get("ring_radius"), width=get("ring_width"))
        elif family == "gaussian_bump":
            shape = GaussianBump(lambda0=values["lambda"], center=tuple(get("bump_center")), width=get("ring_width"))
        else:
            shape = ConstantIntensity(lambda0=values["lambda"])
        return InhomogeneousPPP(family=shape)
    if model == "matern_hardcore":
        if "lambda_parent" in values:
            return MaternHardCoreII(lambda_parent=values["lambda_parent"], r_min=values["r_min"])
        if "lambda" not in values:
            raise ConfigError(f"missing required key '{prefix}lambda_parent' (or '{prefix}lambda') for model {model}")
        return matched_matern(values["lambda"], values["r_min"])
    if model == "matern_cluster":
        return MaternCluster(
            lambda_parent=values["lambda_parent"],
            mean_daughters=values["mu"],
            cluster_radius=values["cluster_radius"],
        )
    return ThomasCluster(lambda_parent=values["lambda_parent"], mean_daughters=values["mu"], sigma=values["sigma"])


def _mac(settings: Dict[str, Any]) -> MacSpec:
    if "fhma_n" in settings:
        return MacSpec.fhma(int(settings["fhma_n"]))
    if "aloha_p" in settings:
        return MacSpec.aloha(settings["aloha_p"])
    return MacSpec.always_on()


def build_scenario(settings: Dict[str, Any], lines: Optional[Dict[str, int]] = None) -> ScenarioSpec:
    """Assemble a ScenarioSpec from converted config values (defaults filled in here)."""
    lines = lines or {}

    def get(key):
        return settings.get(key, DEFAULTS.get(key))

    try:
        tiers = []
        for prefix, values in _tier_settings(settings):
            try:
                process = _process(prefix, values)
            except ParameterDomainError as exc:
                raise ConfigError(str(exc), lines.get(f"{prefix}lambda")) from None
            tiers.append(Tier(process=process, power=values.get("power", DEFAULTS["power"])))
        return ScenarioSpec(
            tiers=tiers,
            window=Window.centered(get("window_half")),
            channel=ChannelParams(
                alpha=settings["alpha"], r0=get("r0"), noise=get("noise"), tx_power=get("tx_power")
            ),
            mac=_mac(settings),
            theta=get("theta"),
            link_distance=get("d"),
            reps=settings["reps"],
            seed=settings["seed"],
            delay_cap=get("delay_cap"),
            palm=get("palm"),
        )
    except ValidationError as exc:
        first = exc.errors()[0]
        key = next((FIELD_KEYS[p] for p in reversed(first["loc"]) if p in FIELD_KEYS), None)
        raise ConfigError(f"{key or 'config'}: {first['msg']}", lines.get(key)) from None


class RunConfig(BaseModel):
    """A parsed run: the scenario plus experiment selection, sweep and output settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: Literal["coverage", "simo", "delay", "relay", "persistence"]
    modes: List[Literal["correlated", "independent", "static"]]
    scenario: ScenarioSpec
    antennas: int = Field(default=2, ge=1)
    relay_grid: List[float]
    sweep: Optional[str] = None
    sweep_values: List[float] = Field(default_factory=list)
    out: Optional[str] = None
    threads: int = Field(default=1, ge=0)
    settings: Dict[str, Any]
    lines: Dict[str, int] = Field(default_factory=dict)

    def sweep_axis(self) -> Tuple[Optional[str], List[Optional[float]]]:
        if self.sweep is not None:
            return self.sweep, list(self.sweep_values)
        if self.experiment == "relay":
            return "relay_position", list(self.relay_grid)
        return None, [None]

    def scenario_for(self, value: Optional[float]) -> Tuple[ScenarioSpec, int]:
        """Scenario and antenna count at one point of the sweep."""
        if self.sweep is None or value is None or self.sweep == "relay_position":
            return self.scenario, self.antennas
        if self.sweep == "antennas":
            return self.scenario, int(value)
        converted = int(value) if self.sweep in INT_KEYS else value
        settings = {**self.settings, self.sweep: converted}
        return build_scenario(settings, self.lines), self.antennas

    def with_overrides(
        self, out: Optional[str] = None, seed: Optional[int] = None, threads: Optional[int] = None
    ) -> "RunConfig":
        changes: Dict[str, Any] = {}
        if out is not None:
            changes["out"] = out
        if threads is not None:
            if threads < 0:
                raise ConfigError("threads must be non-negative (0 = all cores)")
            changes["threads"] = threads
        if seed is not None:
            problem = CHECKS["seed"](seed)
            if problem:
                raise ConfigError(problem)
            settings = {**self.settings, "seed": seed}
            changes["settings"] = settings
            changes["scenario"] = build_scenario(settings, self.lines)
        return self.model_copy(update=changes)


def _read_pairs(text: str) -> Tuple[Dict[str, Any], Dict[str, int]]:
    settings: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{line}'", number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", number)
        match = _TIER_KEY.match(key)
        if match:
            if int(match.group(1)) < 2 or match.group(2) not in TIER_KEYS:
                raise ConfigError(f"unknown key '{key}'", number)
        elif key not in KEYS:
            raise ConfigError(f"unknown key '{key}'", number)
        if key in settings:
            raise ConfigError(f"duplicate key '{key}' (first set on line {lines[key]})", number)
        if not value:
            raise ConfigError(f"missing value for '{key}'", number)
        settings[key] = _convert(key, value, number)
        lines[key] = number
    return settings, lines


def _sweepable(experiment: str, settings: Dict[str, Any]) -> Tuple[str, ...]:
    """Sweep axes that change what the configured experiment computes."""
    # relay rows are already one per relay position, so that is its only sweep axis
    if experiment == "relay":
        return ("relay_position",)
    model = settings.get("model", DEFAULTS["model"])
    if model == "matern_hardcore":
        own = ("r_min", "lambda_parent") if "lambda_parent" in settings else ("r_min", "lambda", "lambda_parent")
    elif model == "inhomogeneous_ppp":
        own = ("lambda",) + FAMILY_SWEEPS[settings.get("intensity_family", DEFAULTS["intensity_family"])]
    else:
        own = MODEL_KEYS[model]
    # fhma_n overrides aloha_p, except on the delay grid which builds its own ALOHA MACs
    mac = ("fhma_n",) if "fhma_n" in settings and experiment != "delay" else ("aloha_p", "fhma_n")
    return own + CHANNEL_SWEEPS + mac + EXTRA_SWEEPS.get(experiment, ())


def _check_sweep(experiment: str, settings: Dict[str, Any], lines: Dict[str, int]) -> None:
    sweep = settings.get("sweep")
    if sweep is None:
        if "sweep_values" in settings:
            raise ConfigError("sweep_values given without a sweep parameter", lines["sweep_values"])
        return
    allowed = _sweepable(experiment, settings)
    if sweep not in allowed:
        raise ConfigError(f"sweep '{sweep}' is not a parameter of the {experiment} experiment", lines["sweep"])
    if "sweep_values" not in settings:
        raise ConfigError("missing required key 'sweep_values' for the sweep", lines["sweep"])
    values = settings["sweep_values"]
    line = lines["sweep_values"]
    if sweep in INT_KEYS and any(v != int(v) for v in values):
        raise ConfigError(f"sweep over {sweep} needs integer values", line)
    if sweep == "relay_position":
        problem = _relay_positions("sweep_values")(values)
        if problem:
            raise ConfigError(problem, line)
    elif experiment == "delay" and sweep == "aloha_p" and any(v <= 0 for v in values):
        raise ConfigError("sweep_values: ALOHA probability 0 gives an infinite local delay", line)
    else:
        for v in values:
            problem = CHECKS.get(sweep, lambda _: None)(int(v) if sweep in INT_KEYS else v)
            if problem:
                raise ConfigError(f"sweep_values: {problem}", line)


def parse_config(text: str) -> RunConfig:
    settings, lines = _read_pairs(text)
    for key in REQUIRED:
        if key not in settings:
            raise ConfigError(f"missing required key '{key}'")
    experiment = settings["experiment"]
    _check_sweep(experiment, settings, lines)

    mode = settings.get("mode", DEFAULTS["mode"])
    if mode == "static" and experiment not in ("simo", "delay", "persistence"):
        raise ConfigError(f"mode static is not available for the {experiment} experiment", lines.get("mode"))
    if mode == "both" and experiment == "coverage":
        raise ConfigError("coverage has no correlation dimension, mode both does not apply", lines.get("mode"))
    modes = ["correlated", "independent"] if mode == "both" else [mode]
    if (
        experiment == "delay"
        and settings.get("aloha_p") == 0
        and "fhma_n" not in settings
        and settings.get("sweep") != "aloha_p"
    ):
        raise ConfigError("aloha_p = 0 gives an infinite local delay", lines["aloha_p"])

    scenario = build_scenario(settings, lines)
    config = RunConfig(
        experiment=experiment,
        modes=modes,
        scenario=scenario,
        antennas=settings.get("antennas", DEFAULTS["antennas"]),
        relay_grid=settings.get("relay_grid", DEFAULTS["relay_grid"]),
        sweep=settings.get("sweep"),
        sweep_values=settings.get("sweep_values", []),
        out=settings.get("out"),
        threads=settings.get("threads", DEFAULTS["threads"]),
        settings=settings,
        lines=lines,
    )
    # surface domain errors of every sweep point now, not halfway through a run
    for value in config.sweep_axis()[1]:
        config.scenario_for(value)
    return config


def load_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Config file not found at {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid UTF-8: {exc.reason} at byte {exc.start}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    return parse_config(text)
