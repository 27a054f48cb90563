"""
Search Budget Configuration

Central configuration for the limits every exponential search in the
workbench respects: split search, supplement search, team-space enumeration,
ultraproduct size and ESO relation enumeration. Exceeding a limit raises
BudgetExceededError instead of truncating the search.
"""

import os
from typing import Any, Dict, Optional
from dataclasses import asdict, dataclass


@dataclass
class BudgetConfig:
    """Limits for desk-scale searches."""
    max_eval_calls: int
    max_node_visits: int
    max_split_rows: int = 16
    max_team_space: int = 16
    max_product_size: int = 4096
    max_eso_tuples: int = 16
    max_structures: int = 200000
    memoize: bool = True
    prune_downward: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# Default budget profiles
DEFAULT_CONFIGS = {
    "desk": BudgetConfig(
        max_eval_calls=200000,
        max_node_visits=5000000,
    ),

    "quick": BudgetConfig(
        max_eval_calls=20000,
        max_node_visits=500000,
        max_split_rows=12,
        max_team_space=9,
        max_product_size=512,
        max_eso_tuples=12,
        max_structures=5000,
    ),

    "exhaustive": BudgetConfig(
        max_eval_calls=5000000,
        max_node_visits=100000000,
        max_split_rows=20,
        max_team_space=27,
        max_product_size=32768,
        max_eso_tuples=20,
        max_structures=5000000,
    ),
}


def get_budget_config(profile: str = "desk") -> BudgetConfig:
    """
    Get a budget profile by name with environment variable overrides.

    Args:
        profile: Name of the profile to load (default: desk)

    Returns:
        BudgetConfig: Configuration object with resolved values

    Environment Variable Overrides:
        TEAMLOG_BUDGET: Override the eval-call budget of the property checkers (int)
        TEAMLOG_MAX_NODE_VISITS: Override the per-evaluation node visit limit (int)
        TEAMLOG_MAX_SPLIT_ROWS: Override the largest team a split search accepts (int)
        TEAMLOG_MAX_TEAM_SPACE: Override the largest n^|D| for team enumeration (int)
        TEAMLOG_MAX_PRODUCT_SIZE: Override the largest product of domains (int)
        TEAMLOG_MAX_ESO_TUPLES: Override the candidate tuple limit per relation variable (int)
        TEAMLOG_MAX_STRUCTURES: Override the structure enumeration limit (int)
        TEAMLOG_MEMOIZE: Enable or disable the evaluation cache (bool)
        TEAMLOG_PRUNE_DOWNWARD: Enable or disable downward-closure pruning (bool)
    """
    if profile not in DEFAULT_CONFIGS:
        raise ValueError(f"Unknown budget profile: {profile}. Available: {list(DEFAULT_CONFIGS.keys())}")

    base_config = DEFAULT_CONFIGS[profile]

    # Create a new config with environment overrides
    return BudgetConfig(
        max_eval_calls=_get_int_env("TEAMLOG_BUDGET", base_config.max_eval_calls),
        max_node_visits=_get_int_env("TEAMLOG_MAX_NODE_VISITS", base_config.max_node_visits),
        max_split_rows=_get_int_env("TEAMLOG_MAX_SPLIT_ROWS", base_config.max_split_rows),
        max_team_space=_get_int_env("TEAMLOG_MAX_TEAM_SPACE", base_config.max_team_space),
        max_product_size=_get_int_env("TEAMLOG_MAX_PRODUCT_SIZE", base_config.max_product_size),
        max_eso_tuples=_get_int_env("TEAMLOG_MAX_ESO_TUPLES", base_config.max_eso_tuples),
        max_structures=_get_int_env("TEAMLOG_MAX_STRUCTURES", base_config.max_structures),
        memoize=_get_bool_env("TEAMLOG_MEMOIZE", base_config.memoize),
        prune_downward=_get_bool_env("TEAMLOG_PRUNE_DOWNWARD", base_config.prune_downward),
    )


def _get_int_env(env_var: str, default: int) -> int:
    """Get integer from environment variable, falling back on malformed values."""
    value = os.environ.get(env_var)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        return default


def _get_bool_env(env_var: str, default: bool) -> bool:
    """Get boolean from environment variable (1/0, true/false, yes/no)."""
    value = os.environ.get(env_var)
    if value is None:
        return default
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    return default


def with_overrides(config: BudgetConfig, **changes: Any) -> BudgetConfig:
    """Copy a config with some fields replaced; unknown fields raise ValueError."""
    unknown = set(changes) - set(asdict(config))
    if unknown:
        raise ValueError(f"Unknown budget fields: {sorted(unknown)}")
    values = asdict(config)
    values.update(changes)
    return BudgetConfig(**values)


# Convenience function to get the default config
def get_default_budget_config(profile: Optional[str] = None) -> BudgetConfig:
    """Get the default budget (desk profile, or TEAMLOG_PROFILE when set)."""
    return get_budget_config(profile or os.environ.get("TEAMLOG_PROFILE", "desk"))
