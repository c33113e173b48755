"""Certified Lyapunov exponent bounds for switching systems with dwell times.

Weighted joint spectral radii are bracketed by branch and bound and
certified by invariant polytopes; mixed jump/flow systems, systems on
graphs and dwell-time constrained systems reduce to that core.
"""
from ._backend import BACKEND
from .dwell import (
    DwellSystem, SignalSpec, build_dwell_graph, build_grid_graph, dwell_bounds, dwell_bounds_one,
    extract_signal,
)
from .graph import (
    Edge, GraphPath, GraphSystem, Multinorm, graph_bounds, graph_find_candidate, graph_ipa,
    graph_rho_k_exact, verify_multinorm,
)
from .ipa import (
    Candidate, IpaOutcome, IpaStatus, NilpotentError, ReducibleError, certify, find_candidate,
    run_ipa, verify_eps_extremal,
)
from .linalg import BranchCutError, expm, leading_eigenpair, logm, operator_norm, spectral_radius
from .lp import LpNumericalError, LpProblem, LpSolution, LpStatus, solve
from .mixed import (
    BoundsReport, Flow, Jump, MixedSystem, SwitchingLaw, discretize, lyapunov_bounds, shift,
    simulate,
)
from .polytope import SymPolytope, gauge, is_interior, mu_shift, polytope_norm
from .weighted import (
    JsrBracket, Stability, WeightedProduct, WeightedSystem, classify, dilate, gripenberg,
    rho_k_exact, wjsr_bisection, wjsr_bisection_bracket,
)

__version__ = "0.1.0"
