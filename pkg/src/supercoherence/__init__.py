"""Supercoherence laboratory: disordered spin ensembles with long-range couplings."""

__version__ = "0.1.0"

from .consistency import (  # noqa: E402
    Phase,
    SelfConsistentSolution,
    analytic_all_to_all,
    critical_sigma,
    fit_critical_exponent,
    solve_selfconsistent,
    table1_closed_forms,
)
from .disorder import (  # noqa: E402
    DisorderRealization,
    Family,
    FrequencyDistribution,
    Scheme,
    free_decay,
    pdf,
    sample,
)
from .meanfield import (  # noqa: E402
    BlochEnsemble,
    CoherenceTrace,
    MeanFieldAllToAll,
    init_coherent,
    integrate,
    oscillation_period,
    run_coherent,
    time_average,
)
from .netspec import parse_network_spec  # noqa: E402
from .network import (  # noqa: E402
    InteractionNetwork,
    Sign,
    all_to_all,
    barabasi_albert,
    connectivity,
    empty_network,
    erdos_renyi,
    lattice,
    watts_strogatz,
)
from .spectral import (  # noqa: E402
    SpectralResult,
    build_matrix,
    detect_gap,
    diagonalize,
    fidelity_n,
    relative_coherence_avg,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
