"""posetforge: staged construction of a uniquely-extensive embedding into
the generic poset, with brute-force audits of every construction invariant."""

from .poset_core import FinitePoset, Relation, enumerate_posets, transitive_close
from .type_space import ValidTriple, is_valid_triple, lt_valid, inc_valid, meet, join
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "FinitePoset",
    "Relation",
    "ValidTriple",
    "enumerate_posets",
    "transitive_close",
    "is_valid_triple",
    "lt_valid",
    "inc_valid",
    "meet",
    "join",
    "KERNEL_BACKEND",
    "__version__",
]
