"""Modern Hopfield networks with continuous-time memories.

A sequence of ``L`` stored patterns is compressed into ``N`` coefficient rows
by ridge regression onto rectangular basis functions. Retrieval follows the
CCCP update of a continuous log-integral-exp energy, whose Gibbs density over
[0, 1] plays the role the softmax plays for a discrete modern Hopfield network.
"""

from .basis import (
    BasisFamily,
    design_matrix,
    eval_basis,
    make_rectangular_basis,
    uniform_times,
)
from .dynamics import (
    BatchRetrieval,
    ContinuousHopfield,
    DiscreteHopfield,
    IterationConfig,
    QuadratureGrid,
    RetrievalTrace,
    cccp_iterate,
    continuous_energy,
    continuous_update,
    discrete_energy,
    discrete_update,
    energy_gradient,
    gibbs_density,
    retrieve_batch,
)
from .errors import DimensionError, NumericalFailure, UndefinedMetricError
from .memfit import (
    ContinuousMemory,
    fit_continuous_memory,
    reconstruct,
    reconstruction_error,
)
from .synth import (
    ContinuousModel,
    CorruptionSpec,
    DiscreteModel,
    PatternSpec,
    benchmark_retrieval,
    corrupt,
    cosine_similarity,
    generate,
    subsample,
)

__version__ = "0.1.0"
