"""isoforge: r-uniform states and subspaces from pure code isometries.

Core objects live in :mod:`isoforge.tensor`, code machinery in
:mod:`isoforge.codes` and :mod:`isoforge.registry`, constructions in
:mod:`isoforge.constructors` and certification in :mod:`isoforge.verify`.
Recipes, file formats and the CLI are in :mod:`isoforge.pipeline` and
:mod:`isoforge.cli`.
"""

__version__ = "0.1.0"

from .constructors import (
    apply,
    combine,
    combine_eliminate,
    eliminate,
    feasibility_check,
    glue,
    is_qmds,
    me_state,
    me_subspace,
    merge,
    permute,
    predict_combine,
    predict_combine_eliminate,
    predict_corollary1,
    split,
)
from .errors import (
    CapacityError,
    DimensionError,
    ForgeError,
    FormatError,
    PreconditionError,
    RegistryError,
    ValidationError,
)
from .registry import registry_entries, registry_get, registry_materialize
from .tensor import PartySubset, PureState, Shape, Subspace, oracle_reduce, reduce
from .verify import (
    VerificationReport,
    max_uniformity,
    qmds_projector_check,
    state_uniformity,
    subspace_uniformity,
    verify_pure_code,
)
