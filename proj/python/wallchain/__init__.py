from ._wallchain import (
    DensityProfile,
    MediumParams,
    OscillatorChain,
    __version__,
    bandgap_scan,
    canonical_config,
    chain_transfer,
    cutoff_frequency,
    discretize,
    format_double,
    run_config,
    single_wall_transmission,
)
