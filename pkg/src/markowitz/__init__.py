"""Algebraic classification of Markowitz markets and the portfolio theory that follows from it."""

from .classify import (
    CanonicalForm,
    Case,
    DegeneracyReport,
    DualInvariants,
    IsomorphismReport,
    canonical_model,
    canonicalize,
    compare_forms,
    degeneracy_report,
    find_arbitrage,
    invariants_dual,
    isomorphic,
    isomorphism_report,
    pointed_isomorphic,
)
from .errors import *  # noqa: F401,F403
from .files import (
    MarketFile,
    ReturnsTable,
    dumps_market,
    estimate_market,
    load_market,
    load_market_file,
    loads_market,
    read_returns,
    save_market,
    write_frontier_csv,
)
from .market import (
    DEFAULT_TOL,
    Market,
    MarketSpec,
    Portfolio,
    Subspace,
    ToleranceConfig,
    covariance,
    is_morphism,
    make_market,
    morphism_residual,
    pushforward,
    rank,
    risk,
    riskless_subspace,
    validate,
)
from .optimize import (
    CostFreePoint,
    FeasibleRule,
    FrontierCurve,
    MutualFundBasis,
    RiskReturnPoint,
    costless_admits,
    costless_frontier,
    efficient_frontier,
    feasible,
    frontier_points,
    min_risk_portfolio,
    mutual_funds,
    phi,
    psi,
)

__version__ = "0.1.0"
