"""Risk minimization, mutual funds and frontier geometry.

Everything is computed in canonical coordinates, where risk is Euclidean
length on the first ``k`` coordinates and cost and payoff only involve the
first two coordinates (plus the last one when a costly riskless portfolio
exists). Minimizing risk under the two linear constraints then amounts to
setting every unconstrained coordinate to zero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .classify import Case, canonicalize, degeneracy_report
from .errors import (
    DegenerateMarket,
    GNotPositive,
    InfeasibleTarget,
    ZeroCostMarket,
    ZeroCostPortfolio,
    ZeroG,
)
from .market import Market, Portfolio, PortfolioLike, _coords, risk


class FeasibleRule(str, enum.Enum):
    CURVE_ONLY = "CurveOnly"
    RIGHT_OF_CURVE = "RightOfCurve"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FrontierCurve:
    """Right arm of ``g^2 (x^2 - m^2) = (y + 1 - i)^2`` in the (relative risk,
    expected return) plane. With ``m = 0`` the hyperbola degenerates to the
    pair of rays ``x = |y + 1 - i| / g`` meeting at ``(0, i - 1)``."""

    m: float
    g: float
    i: float
    n: int
    feasible_rule: FeasibleRule

    @property
    def vertex(self) -> tuple[float, float]:
        return self.m, self.i - 1.0

    def x_at(self, y: float) -> float:
        if self.g == 0.0:
            raise ZeroG(f"g = 0: the frontier collapses to the single point {self.vertex}")
        return float(np.hypot(self.m, (y + 1.0 - self.i) / self.g))

    def residual(self, x: float, y: float) -> float:
        """``|g^2 (x^2 - m^2) - (y + 1 - i)^2| / max(1, g^2 x^2)``."""
        g2 = self.g * self.g
        return abs(g2 * (x * x - self.m * self.m) - (y + 1.0 - self.i) ** 2) / max(1.0, g2 * x * x)

    def admits(self, x: float, y: float, tol: float = 1e-9) -> bool:
        """Whether ``(x, y)`` lies in the feasible set."""
        if self.feasible_rule is FeasibleRule.CURVE_ONLY:
            return self.residual(x, y) <= tol and x >= self.m - tol
        return x >= self.x_at(y) - tol


@dataclass(frozen=True)
class RiskReturnPoint:
    rr: float
    er: float
    out_of_domain_sign: bool = False


@dataclass(frozen=True)
class CostFreePoint:
    risk: float
    payoff: float


@dataclass(frozen=True, eq=False)
class MutualFundBasis:
    funds: list[Portfolio]
    contains_riskfree: bool

    def matrix(self) -> np.ndarray:
        return np.column_stack([f.coords for f in self.funds])


def min_risk_portfolio(m: Market, cost: float, payoff: float) -> Portfolio:
    """Least-risk portfolio with the given cost and expected payoff.

    The market only has to be arbitrage free. Among minimizers that differ by
    valueless portfolios the one with no component along them is returned.

    Raises
    ------
    InfeasibleTarget
        If no portfolio has this cost and payoff.
    DegenerateMarket
        If the market has arbitrage (``ArbitrageMarket``).
    """
    f = canonicalize(m)
    tol = m.tol.tol_match
    u = np.zeros(m.n)
    if f.case is Case.ZERO_COST:
        if abs(cost) > tol:
            raise InfeasibleTarget(f"every portfolio is costless; cost {cost} is unreachable")
        slot, excess = 0, payoff
    elif f.case is Case.RISKLESS_WITH_COST:
        u[m.n - 1] = cost
        slot, excess = 0, payoff - f.i * cost
    else:
        u[0] = f.m * cost
        slot, excess = 1, payoff - f.i * cost
    if f.g > 0.0:
        u[slot] = excess / f.g
    elif abs(excess) > tol * max(1.0, abs(payoff), abs(payoff - excess)):
        raise InfeasibleTarget(
            f"payoff {payoff} is not attainable at cost {cost} (payoff is pinned by cost)"
        )
    return Portfolio(f.basis @ u)


def mutual_funds(m: Market) -> MutualFundBasis:
    """One or two portfolios spanning every risk-minimizing portfolio.

    With a costly riskless portfolio the cost-1 riskless fund is one of them.
    """
    f = canonicalize(m)
    cols: list[int] = []
    if f.case is Case.NO_COSTLY_RISKLESS:
        cols.append(0)
        if f.g > 0.0:
            cols.append(1)
    elif f.case is Case.RISKLESS_WITH_COST:
        if f.g > 0.0:
            cols.append(0)
        cols.append(m.n - 1)
    elif f.g > 0.0:
        cols.append(0)
    if not cols:
        raise DegenerateMarket("the zero portfolio is the only risk minimizer")
    return MutualFundBasis(
        funds=[Portfolio(f.basis[:, j].copy()) for j in cols],
        contains_riskfree=f.case is Case.RISKLESS_WITH_COST,
    )


def _require_nondegenerate(m: Market) -> None:
    c_norm = float(np.linalg.norm(m.c))
    if c_norm <= m.tol.tol_rank * max(1.0, float(np.linalg.norm(m.p))):
        raise ZeroCostMarket("the market has no costly portfolios")
    report = degeneracy_report(m)
    if report.arbitrage is not None:
        raise DegenerateMarket("the market has arbitrage")
    if report.has_valueless:
        raise DegenerateMarket("the market has valueless portfolios")
    if not report.cp_independent:
        raise DegenerateMarket("cost and payoff are linearly dependent")


def efficient_frontier(m: Market) -> FrontierCurve:
    _require_nondegenerate(m)
    f = canonicalize(m)
    rule = FeasibleRule.CURVE_ONLY if m.n == 2 else FeasibleRule.RIGHT_OF_CURVE
    return FrontierCurve(m=f.m, g=f.g, i=f.i, n=m.n, feasible_rule=rule)


def frontier_points(curve: FrontierCurve, y_min: float, y_max: float,
                    count: int) -> list[tuple[float, float]]:
    """``count`` frontier points ``(x, y)`` with ``y`` evenly spaced on ``[y_min, y_max]``."""
    if count < 2:
        raise ValueError("count must be at least 2")
    if curve.g == 0.0:
        raise ZeroG(f"g = 0: the frontier collapses to the single point {curve.vertex}")
    return [(curve.x_at(y), float(y)) for y in np.linspace(y_min, y_max, count)]


def feasible(m: Market, x: float, y: float, tol: float = 1e-9) -> bool:
    """Whether some costly portfolio has risk-return point ``(x, y)``."""
    return efficient_frontier(m).admits(x, y, tol)


def phi(m: Market, v: PortfolioLike) -> RiskReturnPoint:
    """(relative risk, expected return) of a portfolio with non-zero cost.

    For negative cost the relative risk comes out negative; the point is
    returned as is with ``out_of_domain_sign`` set.
    """
    x = _coords(v, m.n)
    cost = float(m.c @ x)
    if abs(cost) <= m.tol.tol_match * max(1.0, float(np.linalg.norm(m.c) * np.linalg.norm(x))):
        raise ZeroCostPortfolio("expected return is undefined for costless portfolios")
    return RiskReturnPoint(
        rr=risk(m, x) / cost,
        er=(float(m.p @ x) - cost) / cost,
        out_of_domain_sign=cost < 0,
    )


def psi(m: Market, v: PortfolioLike) -> CostFreePoint:
    """(risk, expected payoff) of any portfolio."""
    x = _coords(v, m.n)
    return CostFreePoint(risk=risk(m, x), payoff=float(m.p @ x))


def costless_frontier(m: Market) -> float:
    """Slope ``g`` of the costless frontier ``{(x, +-g x) : x >= 0}``."""
    f = canonicalize(m)
    if not (f.g_defined and f.g > 0.0):
        raise GNotPositive("costless portfolios cannot earn a non-zero payoff")
    return f.g


def costless_admits(g: float, x: float, y: float, tol: float = 1e-9) -> bool:
    """Whether ``(x, y)`` is on or to the right of the costless frontier of slope ``g``."""
    if g <= 0.0:
        raise GNotPositive("slope must be positive")
    return x >= abs(y) / g - tol
