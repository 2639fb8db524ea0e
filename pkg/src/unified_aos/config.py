"""Component choices, hyper-parameters and their JSON form.

An :class:`AosConfig` plus a :class:`DEParams` fully determine one optimiser.
Choices are string-valued enums so config files stay readable; the integer
position of each member is its categorical index in the tuning space.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists field-level diagnostics."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class _Choice(str, Enum):
    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str) and value.isdigit():
            value = int(value)
        if isinstance(value, int) and not isinstance(value, bool):
            members = list(cls)
            if 0 <= value < len(members):
                return members[value]
        elif isinstance(value, str):
            for member in cls:
                if value in (member.value, member.name):
                    return member
        raise ConfigError(f"{cls.__name__}: unknown choice {value!r}; "
                          f"expected one of {[m.value for m in cls]}")

    @property
    def index(self) -> int:
        return list(type(self)).index(self)


class OffspringMetric(_Choice):
    OFFSPRING_FITNESS = "offspring_fitness"
    IMPROVEMENT_PARENT = "improvement_parent"
    IMPROVEMENT_BEST_PARENT = "improvement_best_parent"
    IMPROVEMENT_BEST_SO_FAR = "improvement_best_so_far"
    IMPROVEMENT_MEDIAN = "improvement_median"
    RELATIVE_IMPROVEMENT = "relative_improvement"


class RewardType(_Choice):
    PARETO_DOMINANCE = "ParetoDominance"
    PARETO_RANK = "ParetoRank"
    COMPASS_PROJECTION = "CompassProjection"
    AUC = "AUC"
    SUM_OF_RANK = "SumOfRank"
    SUCCESS_RATE = "SuccessRate"
    IMMEDIATE_SUCCESS = "ImmediateSuccess"
    SUCCESS_SUM = "SuccessSum"
    NORM_SUCCESS_SUM_WINDOW = "NormSuccessSumWindow"
    NORM_SUCCESS_SUM_GEN = "NormSuccessSumGen"
    BEST_2_GEN = "Best2Gen"
    NORM_BEST_SUM = "NormBestSum"


DIVERSITY_QUALITY_REWARDS = frozenset({RewardType.PARETO_DOMINANCE, RewardType.PARETO_RANK,
                                       RewardType.COMPASS_PROJECTION})
WINDOW_REWARDS = frozenset({RewardType.AUC, RewardType.SUM_OF_RANK,
                            RewardType.NORM_SUCCESS_SUM_WINDOW})


class QualityType(_Choice):
    WEIGHTED_SUM = "WeightedSum"
    UCB = "UCB"
    IDENTITY = "Identity"
    WEIGHTED_NORMALISED_SUM = "WeightedNormalisedSum"
    BELLMAN = "Bellman"


class ProbabilityType(_Choice):
    NORMALISED_QUALITY = "NormalisedQuality"
    BIASED_RULE = "BiasedRule"
    IDENTITY = "Identity"


class SelectionType(_Choice):
    PROPORTIONAL = "Proportional"
    GREEDY = "Greedy"
    EPSILON_GREEDY = "EpsilonGreedy"
    LINEAR_ANNEALED = "LinearAnnealed"
    PROPORTIONAL_GREEDY = "ProportionalGreedy"


class MutationStrategy(_Choice):
    RAND_1 = "rand/1"
    RAND_2 = "rand/2"
    RAND_TO_BEST_2 = "rand-to-best/2"
    CURR_TO_RAND_1 = "curr-to-rand/1"
    CURR_TO_PBEST_1 = "curr-to-pbest/1"
    CURR_TO_PBEST_1_ARCHIVED = "curr-to-pbest/1(archived)"
    BEST_1 = "best/1"
    BEST_2 = "best/2"
    CURR_TO_BEST_1 = "curr-to-best/1"


ALL_STRATEGIES = tuple(MutationStrategy)


@dataclass(frozen=True)
class RewardParams:
    fix_appl: int = 30
    max_gen: int = 25
    theta: int = 45
    window_w: int = 85
    decay_d: float = 0.5
    gamma_sr: int = 1
    frac: float = 0.5
    eps_noise: float = 0.5
    omega: int = 0
    c_scale: float = 0.5
    alpha: int = 0
    beta: int = 0
    rho: int = 1


@dataclass(frozen=True)
class RewardChoice:
    tag: RewardType = RewardType.IMMEDIATE_SUCCESS
    params: RewardParams = field(default_factory=RewardParams)


@dataclass(frozen=True)
class QualityChoice:
    tag: QualityType = QualityType.WEIGHTED_SUM
    delta: float = 0.5
    c_ucb: float = 0.5
    q_min: float = 0.5
    c1: float = 0.5
    c2: float = 0.5
    gamma_b: float = 0.5


@dataclass(frozen=True)
class ProbabilityChoice:
    tag: ProbabilityType = ProbabilityType.NORMALISED_QUALITY
    p_min: float = 0.05
    eps_p: float = 0.5
    mu: float = 0.5
    p_max: float = 0.9


@dataclass(frozen=True)
class SelectionChoice:
    tag: SelectionType = SelectionType.PROPORTIONAL
    eps: float = 0.5


@dataclass(frozen=True)
class AosConfig:
    om_choice: OffspringMetric = OffspringMetric.IMPROVEMENT_PARENT
    reward: RewardChoice = field(default_factory=RewardChoice)
    quality: QualityChoice = field(default_factory=QualityChoice)
    probability: ProbabilityChoice = field(default_factory=ProbabilityChoice)
    selection: SelectionChoice = field(default_factory=SelectionChoice)
    enabled_strategies: tuple[MutationStrategy, ...] = ALL_STRATEGIES

    @property
    def n_ops(self) -> int:
        return len(self.enabled_strategies)

    def components(self) -> tuple[str, str, str, str, str]:
        return (self.om_choice.value, self.reward.tag.value, self.quality.tag.value,
                self.probability.tag.value, self.selection.tag.value)


@dataclass(frozen=True)
class DEParams:
    f_scale: float = 0.5
    cr: float = 0.9
    np: int = 100
    top_np: float = 0.1


# Legal domains.  Wider than the tuning ranges where published configurations
# fall outside them (e.g. fix_appl = 66).
_REAL_UNIT = (0.0, 1.0)
_RANGES: dict[str, dict[str, tuple]] = {
    "reward": {"fix_appl": (1, None), "max_gen": (1, None), "window_w": (1, None),
               "decay_d": _REAL_UNIT, "frac": _REAL_UNIT, "eps_noise": _REAL_UNIT,
               "c_scale": (0.0, None)},
    "quality": {"delta": _REAL_UNIT, "c_ucb": (0.0, None), "q_min": _REAL_UNIT,
                "c1": _REAL_UNIT, "c2": _REAL_UNIT, "gamma_b": (0.0, 0.999999)},
    "probability": {"p_min": _REAL_UNIT, "eps_p": (0.0, None), "mu": _REAL_UNIT,
                    "p_max": _REAL_UNIT},
    "selection": {"eps": _REAL_UNIT},
    "de": {"f_scale": (0.0, None), "cr": _REAL_UNIT, "np": (4, None),
           "top_np": (0.0, 1.0)},
}
_SETS = {"theta": (36, 45, 54, 90), "gamma_sr": (1, 2), "omega": (0, 1),
         "alpha": (0, 1), "beta": (0, 1), "rho": (1, 2, 3)}


def _check_fields(section: str, obj, problems: list[str]) -> None:
    for name, (lo, hi) in _RANGES[section].items():
        value = getattr(obj, name)
        if (lo is not None and value < lo) or (hi is not None and value > hi):
            problems.append(f"{section}.{name}={value!r} outside [{lo}, {hi}]")
    for name, allowed in _SETS.items():
        if hasattr(obj, name) and getattr(obj, name) not in allowed:
            problems.append(f"{section}.{name}={getattr(obj, name)!r} not in {allowed}")


def validate(aos: AosConfig, de: DEParams | None = None) -> None:
    problems: list[str] = []
    _check_fields("reward", aos.reward.params, problems)
    _check_fields("quality", aos.quality, problems)
    _check_fields("probability", aos.probability, problems)
    _check_fields("selection", aos.selection, problems)
    k = aos.n_ops
    if k < 1:
        problems.append("enabled_strategies must not be empty")
    if len(set(aos.enabled_strategies)) != k:
        problems.append("enabled_strategies contains duplicates")
    prob = aos.probability
    if prob.tag in (ProbabilityType.NORMALISED_QUALITY, ProbabilityType.BIASED_RULE) \
            and k * prob.p_min >= 1.0:
        problems.append(f"probability.p_min={prob.p_min} requires K*p_min < 1 (K={k})")
    if prob.tag is ProbabilityType.BIASED_RULE and prob.p_min >= prob.p_max:
        problems.append("probability.p_min must be < probability.p_max")
    if de is not None:
        _check_fields("de", de, problems)
    if problems:
        raise ConfigError(problems)


# --- JSON -------------------------------------------------------------------

def _dump_flat(obj) -> dict[str, Any]:
    out = {}
    for f in fields(obj):
        value = getattr(obj, f.name)
        out[f.name] = value.value if isinstance(value, Enum) else value
    return out


def aos_to_dict(aos: AosConfig) -> dict[str, Any]:
    return {
        "om_choice": aos.om_choice.value,
        "reward": {"tag": aos.reward.tag.value, "params": _dump_flat(aos.reward.params)},
        "quality": _dump_flat(aos.quality),
        "probability": _dump_flat(aos.probability),
        "selection": _dump_flat(aos.selection),
        "enabled_strategies": [s.value for s in aos.enabled_strategies],
    }


def de_to_dict(de: DEParams) -> dict[str, Any]:
    return _dump_flat(de)


def _build(cls, data, path: str, problems: list[str], enum_fields=None):
    enum_fields = enum_fields or {}
    if not isinstance(data, dict):
        problems.append(f"{path}: expected an object")
        return cls()
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            problems.append(f"{path}.{key}: unknown key")
            continue
        if key in enum_fields:
            try:
                value = enum_fields[key].parse(value)
            except ConfigError as exc:
                problems.append(f"{path}.{key}: {exc}")
                continue
        else:
            default = getattr(cls(), key)
            if isinstance(default, bool) or not isinstance(value, (int, float)) \
                    or isinstance(value, bool):
                problems.append(f"{path}.{key}: expected a number, got {value!r}")
                continue
            if isinstance(default, int) and not isinstance(default, bool):
                if float(value) != int(value):
                    problems.append(f"{path}.{key}: expected an integer, got {value!r}")
                    continue
                value = int(value)
            else:
                value = float(value)
        kwargs[key] = value
    return cls(**kwargs)


def aos_from_dict(data: dict[str, Any]) -> AosConfig:
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError("aos: expected an object")
    allowed = {"om_choice", "reward", "quality", "probability", "selection",
               "enabled_strategies"}
    for key in data:
        if key not in allowed:
            problems.append(f"aos.{key}: unknown key")
    kwargs: dict[str, Any] = {}
    if "om_choice" in data:
        try:
            kwargs["om_choice"] = OffspringMetric.parse(data["om_choice"])
        except ConfigError as exc:
            problems.append(f"aos.om_choice: {exc}")
    if "reward" in data:
        rdata = data["reward"]
        if not isinstance(rdata, dict):
            problems.append("aos.reward: expected an object")
        else:
            for key in rdata:
                if key not in ("tag", "params"):
                    problems.append(f"aos.reward.{key}: unknown key")
            tag = RewardType.IMMEDIATE_SUCCESS
            try:
                tag = RewardType.parse(rdata.get("tag", tag))
            except ConfigError as exc:
                problems.append(f"aos.reward.tag: {exc}")
            params = _build(RewardParams, rdata.get("params", {}), "aos.reward.params",
                            problems)
            kwargs["reward"] = RewardChoice(tag, params)
    for key, cls, enum in (("quality", QualityChoice, QualityType),
                           ("probability", ProbabilityChoice, ProbabilityType),
                           ("selection", SelectionChoice, SelectionType)):
        if key in data:
            kwargs[key] = _build(cls, data[key], f"aos.{key}", problems, {"tag": enum})
    if "enabled_strategies" in data:
        strategies = []
        for item in data["enabled_strategies"]:
            try:
                strategies.append(MutationStrategy.parse(item))
            except ConfigError as exc:
                problems.append(f"aos.enabled_strategies: {exc}")
        kwargs["enabled_strategies"] = tuple(strategies)
    if problems:
        raise ConfigError(problems)
    return AosConfig(**kwargs)


def de_from_dict(data: dict[str, Any]) -> DEParams:
    problems: list[str] = []
    de = _build(DEParams, data, "de", problems)
    if problems:
        raise ConfigError(problems)
    return de


def config_to_json(aos: AosConfig, de: DEParams) -> str:
    return json.dumps({"aos": aos_to_dict(aos), "de": de_to_dict(de)}, indent=2,
                      sort_keys=True) + "\n"


def config_from_json(text: str) -> tuple[AosConfig, DEParams]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config: expected an object with keys 'aos' and 'de'")
    unknown = set(data) - {"aos", "de"}
    if unknown:
        raise ConfigError([f"config.{k}: unknown key" for k in sorted(unknown)])
    aos = aos_from_dict(data.get("aos", {}))
    de = de_from_dict(data.get("de", {}))
    validate(aos, de)
    return aos, de


def load_config(path) -> tuple[AosConfig, DEParams]:
    return config_from_json(Path(path).read_text())


def save_config(path, aos: AosConfig, de: DEParams) -> None:
    Path(path).write_text(config_to_json(aos, de))


def replace(obj, **changes):
    """``dataclasses.replace`` re-exported for brevity in presets and tuner."""
    return dataclasses.replace(obj, **changes)
