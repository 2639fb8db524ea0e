"""Named configurations reproducing published AOS methods.

Each literature method is a component tuple plus the hyper-parameters its
authors fixed.  Unpinned hyper-parameters fall back to the tuned values of the
starting-configuration table where that method appears there, otherwise to the
mid-range defaults of :mod:`unified_aos.config`.

Five methods also exist as tuned configurations (``tuned=True``): the four
starting configurations of the tuner plus U-AOS-FW, the configuration it
returned.  ``preset("RecPM-AOS")`` and ``preset("U-AOS-FW")`` always give the
tuned version; the untuned RecPM literature row is available as ``"RecPM"``.
"""
from __future__ import annotations

from .config import (ALL_STRATEGIES, AosConfig, ConfigError, DEParams, MutationStrategy,
                     OffspringMetric as OM, ProbabilityChoice, ProbabilityType as PT,
                     QualityChoice, QualityType as QT, RewardChoice, RewardParams,
                     RewardType as RT, SelectionChoice, SelectionType as ST)

FOUR_OPERATORS = (MutationStrategy.RAND_1, MutationStrategy.RAND_2,
                  MutationStrategy.RAND_TO_BEST_2, MutationStrategy.CURR_TO_RAND_1)

# Component audit table: (offspring metric, reward, quality, probability, selection).
LITERATURE_COMPONENTS: dict[str, tuple[int, str, str, str, str]] = {
    "Hybrid": (0, "Best2Gen", "Bellman", "NormalisedQuality", "Proportional"),
    "Op-adapt": (2, "NormSuccessSumGen", "WeightedNormalisedSum", "Identity", "Proportional"),
    "PDP": (1, "SuccessRate", "Identity", "NormalisedQuality", "Proportional"),
    "ADOPP": (4, "SuccessRate", "Identity", "NormalisedQuality", "Proportional"),
    "ADOPP-ext": (4, "SuccessRate", "Identity", "NormalisedQuality", "Proportional"),
    "Adapt-NN": (1, "SuccessSum", "WeightedNormalisedSum", "NormalisedQuality", "Proportional"),
    "Dyn-GEPv1": (1, "SuccessSum", "Bellman", "NormalisedQuality", "Proportional"),
    "Dyn-GEPv2": (1, "NormBestSum", "Bellman", "NormalisedQuality", "Proportional"),
    "SaDE": (1, "SuccessRate", "Identity", "NormalisedQuality", "Proportional"),
    "MMRDE": (1, "SuccessRate", "Identity", "NormalisedQuality", "Proportional"),
    "Compass": (1, "CompassProjection", "Identity", "NormalisedQuality", "Proportional"),
    "PD-PM": (1, "ParetoDominance", "WeightedSum", "NormalisedQuality", "Proportional"),
    "PR-PM": (1, "ParetoRank", "WeightedSum", "NormalisedQuality", "Proportional"),
    "Proj-PM": (1, "CompassProjection", "WeightedSum", "NormalisedQuality", "Proportional"),
    "F-AUC-MAB": (1, "AUC", "UCB", "NormalisedQuality", "Greedy"),
    "F-SR-MAB": (1, "SumOfRank", "UCB", "NormalisedQuality", "Greedy"),
    "F-AUC-AP": (1, "AUC", "WeightedSum", "BiasedRule", "Proportional"),
    "F-SR-AP": (1, "SumOfRank", "WeightedSum", "BiasedRule", "Proportional"),
    "F-AUC-PM": (1, "AUC", "WeightedSum", "NormalisedQuality", "Proportional"),
    "F-SR-PM": (1, "SumOfRank", "WeightedSum", "NormalisedQuality", "Proportional"),
    "RecPM": (1, "ImmediateSuccess", "Bellman", "NormalisedQuality", "Proportional"),
    "MAENSm": (0, "SuccessRate", "UCB", "NormalisedQuality", "Proportional"),
    "PM-AdapSS-AA": (5, "NormSuccessSumWindow", "WeightedSum", "NormalisedQuality",
                     "Proportional"),
    "PM-AdapSS-N": (5, "NormSuccessSumWindow", "WeightedSum", "NormalisedQuality",
                    "Proportional"),
    "Ex-PM": (1, "NormBestSum", "WeightedSum", "NormalisedQuality", "Proportional"),
    "Ex-AP": (1, "NormBestSum", "WeightedSum", "BiasedRule", "Proportional"),
    "Ex-MAB": (1, "NormBestSum", "UCB", "NormalisedQuality", "Greedy"),
}

# Tuned configurations, one column per method; absent keys are not applicable.
TUNED_TABLE: dict[str, dict[str, object]] = {
    "RecPM-AOS": {"f_scale": 0.57, "cr": 0.93, "np": 154, "top_np": 0.05,
                  "om": 1, "reward": "ImmediateSuccess", "quality": "Bellman",
                  "probability": "NormalisedQuality", "selection": "Proportional",
                  "c1": 0.57, "c2": 0.96, "gamma_b": 0.43, "p_min": 0.08, "eps_p": 0.26},
    "PM-AdapSS-NN": {"f_scale": 0.47, "cr": 0.96, "np": 329, "top_np": 0.07,
                     "om": 1, "reward": "NormSuccessSumWindow", "quality": "WeightedSum",
                     "probability": "NormalisedQuality", "selection": "Proportional",
                     "window_w": 73, "omega": 1, "delta": 0.07, "p_min": 0.06,
                     "eps_p": 0.53},
    "F-AUC-MAB": {"f_scale": 0.45, "cr": 0.21, "np": 57, "top_np": 0.73,
                  "om": 1, "reward": "AUC", "quality": "UCB",
                  "probability": "NormalisedQuality", "selection": "Greedy",
                  "window_w": 138, "decay_d": 0.47, "c_ucb": 0.04, "p_min": 0.02,
                  "eps_p": 0.72},
    "Compass": {"f_scale": 0.51, "cr": 0.95, "np": 163, "top_np": 0.64,
                "om": 1, "reward": "CompassProjection", "quality": "Identity",
                "probability": "NormalisedQuality", "selection": "Proportional",
                "fix_appl": 66, "theta": 90, "p_min": 0.08, "eps_p": 0.55},
    "U-AOS-FW": {"f_scale": 0.41, "cr": 0.91, "np": 262, "top_np": 0.02,
                 "om": 1, "reward": "ImmediateSuccess", "quality": "Bellman",
                 "probability": "NormalisedQuality", "selection": "Proportional",
                 "c_ucb": 0.54, "c1": 0.66, "c2": 0.45, "p_min": 0.04, "eps_p": 0.22},
}
STARTING_CONFIGS = ("RecPM-AOS", "PM-AdapSS-NN", "F-AUC-MAB", "Compass")

_REWARD_KEYS = {f for f in RewardParams.__dataclass_fields__}
_QUALITY_KEYS = {"delta", "c_ucb", "q_min", "c1", "c2", "gamma_b"}
_PROB_KEYS = {"p_min", "eps_p", "mu", "p_max"}
_DE_KEYS = {"f_scale", "cr", "np", "top_np"}


def _assemble(components, reward=None, quality=None, probability=None, selection=None,
              strategies=ALL_STRATEGIES) -> AosConfig:
    om, r_tag, q_tag, p_tag, s_tag = components
    return AosConfig(
        om_choice=list(OM)[om],
        reward=RewardChoice(RT(r_tag), RewardParams(**(reward or {}))),
        quality=QualityChoice(QT(q_tag), **(quality or {})),
        probability=ProbabilityChoice(PT(p_tag), **(probability or {})),
        selection=SelectionChoice(ST(s_tag), **(selection or {})),
        enabled_strategies=tuple(strategies),
    )


def _from_tuned(name: str, strategies) -> tuple[AosConfig, DEParams]:
    row = TUNED_TABLE[name]
    comps = (row["om"], row["reward"], row["quality"], row["probability"], row["selection"])
    pick = lambda keys: {k: v for k, v in row.items() if k in keys}  # noqa: E731
    aos = _assemble(comps, pick(_REWARD_KEYS), pick(_QUALITY_KEYS), pick(_PROB_KEYS),
                    strategies=strategies)
    return aos, DEParams(**pick(_DE_KEYS))


def _tuned_or_default(name: str, keys) -> dict:
    row = TUNED_TABLE.get(name, {})
    return {k: v for k, v in row.items() if k in keys}


def _literature(name: str, strategies) -> tuple[AosConfig, DEParams]:
    k = len(strategies)
    comps = LITERATURE_COMPONENTS[name]
    # Hyper-parameters fixed by the method's authors.
    pinned: dict[str, dict] = {
        "Hybrid": dict(reward={"alpha": 0, "beta": 0, "c_scale": 1.0},
                       quality={"c1": 0.5, "c2": 0.5, "gamma_b": 0.0},
                       probability={"p_min": 0.0, "eps_p": 0.0}),
        "Op-adapt": {},
        "PDP": dict(reward={"gamma_sr": 2, "max_gen": 1, "frac": 0.0, "eps_noise": 0.0},
                    probability={"eps_p": 0.0, "p_min": 0.2 / k}),
        "ADOPP": dict(reward={"eps_noise": 0.0, "gamma_sr": 1, "max_gen": 1, "frac": 0.0},
                      probability={"p_min": 0.0, "eps_p": 0.0}),
        "ADOPP-ext": dict(reward={"eps_noise": 0.0, "gamma_sr": 1, "max_gen": 1},
                          probability={"p_min": 0.0, "eps_p": 0.0}),
        "Adapt-NN": dict(quality={"q_min": 0.0}, probability={"eps_p": 0.0}),
        "Dyn-GEPv1": dict(reward={"max_gen": 1}, quality={"c1": 1.0, "gamma_b": 0.0},
                          probability={"p_min": 0.0}),
        "Dyn-GEPv2": dict(reward={"rho": 3, "alpha": 0, "max_gen": 1},
                          quality={"c1": 1.0, "gamma_b": 0.0}, probability={"p_min": 0.0}),
        "SaDE": dict(reward={"gamma_sr": 1, "frac": 0.0},
                     probability={"p_min": 0.0, "eps_p": 0.0}),
        "MMRDE": dict(reward={"max_gen": 1, "gamma_sr": 1, "frac": 0.0, "eps_noise": 0.0},
                      probability={"eps_p": 0.0}),
        "Compass": dict(probability={"p_min": 0.0}),
        "PD-PM": dict(probability={"eps_p": 0.0}),
        "PR-PM": dict(probability={"eps_p": 0.0}),
        "Proj-PM": dict(probability={"eps_p": 0.0}),
        "F-AUC-MAB": dict(probability={"eps_p": 0.0, "p_min": 0.0}),
        "F-SR-MAB": dict(probability={"eps_p": 0.0, "p_min": 0.0}),
        "F-AUC-AP": {}, "F-SR-AP": {}, "F-AUC-PM": {}, "F-SR-PM": {},
        "RecPM": dict(quality={"c1": 1.0, "c2": 0.5, "gamma_b": 0.46},
                      probability={"eps_p": 0.0, "p_min": 0.11}),
        "MAENSm": dict(reward={"max_gen": 1, "gamma_sr": 1, "frac": 0.0, "eps_noise": 0.0}),
        "PM-AdapSS-AA": dict(reward={"omega": 0}, probability={"eps_p": 0.0}),
        "PM-AdapSS-N": dict(reward={"omega": 1}, probability={"eps_p": 0.0}),
        "Ex-PM": dict(reward={"rho": 1, "alpha": 0}),
        "Ex-AP": dict(reward={"rho": 1, "alpha": 0}),
        "Ex-MAB": dict(reward={"rho": 1, "alpha": 0},
                       probability={"eps_p": 0.0, "p_min": 0.0}),
    }[name]
    sections = {}
    for section, keys in (("reward", _REWARD_KEYS), ("quality", _QUALITY_KEYS),
                          ("probability", _PROB_KEYS)):
        values = _tuned_or_default(name, keys)
        values.update(pinned.get(section, {}))
        sections[section] = values
    aos = _assemble(comps, sections["reward"], sections["quality"], sections["probability"],
                    strategies=strategies)
    de = DEParams(**_tuned_or_default(name, _DE_KEYS))
    return aos, de


def catalog() -> list[str]:
    names = list(LITERATURE_COMPONENTS)
    for extra in ("RecPM-AOS", "PM-AdapSS-NN", "U-AOS-FW"):
        if extra not in names:
            names.append(extra)
    return names


def preset(name: str, tuned: bool = False,
           enabled_strategies=None) -> tuple[AosConfig, DEParams]:
    """Configuration of a named method.

    ``enabled_strategies`` restricts the operator set, e.g. to
    :data:`FOUR_OPERATORS` for four-operator comparisons."""
    strategies = tuple(MutationStrategy.parse(s) for s in enabled_strategies) \
        if enabled_strategies is not None else ALL_STRATEGIES
    always_tuned = name in ("RecPM-AOS", "PM-AdapSS-NN", "U-AOS-FW")
    if (tuned or always_tuned) and name in TUNED_TABLE:
        return _from_tuned(name, strategies)
    if tuned:
        raise ConfigError(f"no tuned configuration for {name!r}; "
                          f"tuned presets: {sorted(TUNED_TABLE)}")
    if name in LITERATURE_COMPONENTS:
        return _literature(name, strategies)
    raise ConfigError(f"unknown preset {name!r}; available: {catalog()}")


def tuned_starting_configs() -> list[tuple[str, AosConfig, DEParams]]:
    """The four tuned starting configurations handed to the tuner."""
    return [(name, *preset(name, tuned=True)) for name in STARTING_CONFIGS]

