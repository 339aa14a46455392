"""Charge-domain compute-in-memory macro simulator."""

from ._core import (
    BundleLayer,
    CapacityError,
    ConfigError,
    LayerConfig,
    LayerKind,
    LoadError,
    Macro,
    ModelBundle,
    QuantParams,
    SequencingError,
    UnmappableError,
    UsageError,
    __version__,
    alpha_eff,
    characterize,
    closed_form_cycles,
    config_hash,
    cycles_per_output,
    default_config,
    integer_oracle,
    read_noise_spec,
    reference_bundle,
    resolve_config,
    run_network,
    simulate_timeline,
    write_noise_spec,
)
