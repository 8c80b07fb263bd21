"""Causal structure learning by masked zero-fill incomplete Cholesky."""

from .core import LowerFactor, Ordering, SupportMask, support_of
from .graph_eval import Cpdag, cpdag_of, nshd, shd_cpdag, skeleton_f1
from .ic0 import check_admissible, induced_edges, masked_ic0
from .ordering import elimination_fill, min_degree_ordering, min_fill_ordering, reverse_topological
from .pipeline import ScopeOutput, scope_run
from .precision import Stage0Config, build_precision_estimate
from .refit import refit_and_test
from .sem import Dag, WeightedSem, moralize, population_precision, random_sem, sample

__version__ = "0.1.0"
