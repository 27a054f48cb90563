"""
Acceptance Suite Configuration

Seeds and instance counts for the reproducible experiment runner.
"""

import os
from typing import Dict, Optional
from dataclasses import dataclass, field


@dataclass
class SuiteConfig:
    """Configuration for one acceptance suite."""
    name: str
    seed: int
    instances: int
    max_n: int = 3
    structure_limit: Optional[int] = None
    extra: Dict[str, int] = field(default_factory=dict)


# Default suite configurations
DEFAULT_SUITES = {
    "example": SuiteConfig(name="example", seed=0, instances=1, max_n=3),
    "flatness": SuiteConfig(name="flatness", seed=7, instances=50, max_n=3, structure_limit=32),
    "closure": SuiteConfig(name="closure", seed=11, instances=30, max_n=3, structure_limit=32),
    "substitution": SuiteConfig(name="substitution", seed=13, instances=500, max_n=3),
    "ultraproduct": SuiteConfig(name="ultraproduct", seed=17, instances=200, max_n=3),
    "los": SuiteConfig(name="los", seed=19, instances=100, max_n=3),
    "eso": SuiteConfig(name="eso", seed=23, instances=300, max_n=3, structure_limit=64, extra={"exhaustive_max_n": 2}),
    "intuition": SuiteConfig(name="intuition", seed=29, instances=100, max_n=3, extra={"mutations": 100}),
    "merge": SuiteConfig(name="merge", seed=31, instances=100, max_n=3),
}


def get_suite_config(name: str, seed: Optional[int] = None) -> SuiteConfig:
    """
    Get a suite configuration by name with environment variable overrides.

    Args:
        name: Suite name
        seed: Explicit seed; wins over the environment and the default

    Returns:
        SuiteConfig: Configuration object with resolved values

    Environment Variable Overrides:
        TEAMLOG_SEED: Override the suite seed (int)
        TEAMLOG_SUITE_SCALE: Scale instance counts and structure limits (float, e.g. 0.1 for smoke runs)
    """
    if name not in DEFAULT_SUITES:
        raise ValueError(f"Unknown suite: {name}. Available: {list(DEFAULT_SUITES.keys())}")

    base_config = DEFAULT_SUITES[name]
    scale = _get_float_env("TEAMLOG_SUITE_SCALE", 1.0)

    resolved_seed = seed if seed is not None else _get_int_env("TEAMLOG_SEED", base_config.seed)
    return SuiteConfig(
        name=base_config.name,
        seed=resolved_seed,
        instances=max(1, int(base_config.instances * scale)),
        max_n=base_config.max_n,
        structure_limit=(
            None if base_config.structure_limit is None
            else max(1, int(base_config.structure_limit * scale))
        ),
        extra={key: value for key, value in base_config.extra.items()},
    )


def _get_int_env(env_var: str, default: int) -> int:
    value = os.environ.get(env_var)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        return default


def _get_float_env(env_var: str, default: float) -> float:
    value = os.environ.get(env_var)
    if value is None:
        return default
    try:
        return float(value)
    except ValueError:
        return default
