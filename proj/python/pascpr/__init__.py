from ._pascpr import (
    Ess,
    PascprError,
    aggregate_rate,
    entropy_bits,
    mb_fit,
    plot_data,
    preset,
    preset_names,
    read_results,
    resolve_config,
    run,
    simulate_point,
)

__all__ = [
    "Ess",
    "PascprError",
    "aggregate_rate",
    "entropy_bits",
    "mb_fit",
    "plot_data",
    "preset",
    "preset_names",
    "read_results",
    "resolve_config",
    "run",
    "simulate_point",
]
