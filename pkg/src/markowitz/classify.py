"""Classification of arbitrage-free markets up to isomorphism.

Every arbitrage-free market on ``R^n`` is isomorphic to exactly one canonical
model, labelled by a case and the invariants ``(k, m, g, i)``:

* ``RisklessWithCost``: there is a riskless portfolio of non-zero cost.
  ``r = diag(1_k, 0)``, ``c = (0, ..., 0, 1)``, ``p = (g, 0, ..., 0, i)``, ``m = 0``.
* ``NoCostlyRiskless``: ``c != 0`` but every riskless portfolio is costless.
  ``r = diag(1_k, 0)``, ``c = (1/m, 0, ...)``, ``p = (i/m, g, 0, ...)``;
  when ``k = 1`` the ``g`` slot does not exist and ``g`` is not an invariant.
* ``ZeroCost``: ``c = 0``. ``r = diag(1_k, 0)``, ``p = (g, 0, ...)``.

:func:`canonicalize` finds the change of basis explicitly, by Gram-Schmidt
under ``r`` followed by reflections that line the dual vectors of ``c`` and
``p`` up with the first basis vectors. :func:`invariants_dual` recovers
``(m, g, i)`` independently from the inverse of ``r + c c^T``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import (
    ArbitrageMarket,
    DegenerateMarket,
    IllConditioned,
    UnsupportedCostClass,
)
from .linalg import gram_schmidt, null_space, reflection_to
from .market import (
    Market,
    MarketSpec,
    Portfolio,
    PortfolioLike,
    ToleranceConfig,
    _coords,
    riskless_subspace,
    validate,
)


class Case(str, enum.Enum):
    RISKLESS_WITH_COST = "RisklessWithCost"
    NO_COSTLY_RISKLESS = "NoCostlyRiskless"
    ZERO_COST = "ZeroCost"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class DegeneracyReport:
    arbitrage: Portfolio | None
    has_valueless: bool
    valueless_basis: list[NDArray[np.float64]]
    cp_independent: bool
    nondegenerate: bool


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    """Result of :func:`canonicalize`.

    ``m`` and ``i`` are ``None`` in the ``ZeroCost`` case. When ``g_defined``
    is false (``NoCostlyRiskless`` with ``k = 1``) ``g`` is stored as 0.

    ``T`` maps original coordinates to canonical ones, so that
    ``pushforward(market, T)`` is the canonical model; ``basis = T^-1`` holds
    the canonical basis vectors as columns in original coordinates.
    ``residual`` is the largest entrywise deviation of the transformed market
    from the model, relative to the model's largest entry (floored at 1).
    """

    case: Case
    n: int
    k: int
    m: float | None
    g: float
    i: float | None
    g_defined: bool
    T: NDArray[np.float64]
    basis: NDArray[np.float64]
    residual: float

    def model(self, tol: ToleranceConfig | None = None) -> Market:
        return canonical_model(self.n, self.k, self.m, self.g, self.i,
                               zero_cost=self.case is Case.ZERO_COST, tol=tol)

    def summary(self) -> str:
        def fmt(x: float | None) -> str:
            return "undefined" if x is None else f"{x:.10g}"

        g = fmt(self.g) if self.g_defined else "ignored"
        return f"{self.case} k={self.k} m={fmt(self.m)} g={g} i={fmt(self.i)}"


@dataclass(frozen=True)
class DualInvariants:
    m: float
    g: float
    i: float
    rhat_cc: float
    rhat_pc: float
    rhat_pp: float


@dataclass(frozen=True)
class IsomorphismReport:
    """Verdict plus the raw invariant differences it was based on.

    ``deltas`` maps invariant names to ``value(m2) - value(m1)``; entries are
    omitted when an invariant is undefined or ignored on either side.
    """

    isomorphic: bool
    reason: str
    deltas: dict[str, float]


def _vanishes(on_subspace: NDArray[np.float64], full: NDArray[np.float64], tol: float) -> bool:
    return float(np.linalg.norm(on_subspace)) <= tol * float(np.linalg.norm(full))


def _costless_riskless(m: Market, K: NDArray[np.float64]) -> NDArray[np.float64]:
    """Orthonormal basis of ``ker r`` intersected with ``ker c``."""
    if K.shape[1] == 0:
        return K
    cK = m.c @ K
    if _vanishes(cK, m.c, m.tol.tol_kernel):
        return K
    return K @ null_space(cK[np.newaxis, :], 0.0)


def find_arbitrage(m: Market) -> Portfolio | None:
    """A portfolio with zero risk, zero cost and payoff 1, if one exists.

    The market is arbitrage free exactly when ``p`` vanishes on the riskless,
    costless subspace; otherwise the direction in that subspace along which
    ``p`` grows fastest, scaled to unit payoff, is returned.
    """
    W = _costless_riskless(m, riskless_subspace(m).basis)
    if W.shape[1] == 0:
        return None
    pw = m.p @ W
    if _vanishes(pw, m.p, m.tol.tol_kernel) or not np.any(pw):
        return None
    return Portfolio(W @ pw / float(pw @ pw))


def degeneracy_report(m: Market) -> DegeneracyReport:
    arbitrage = find_arbitrage(m)
    W = _costless_riskless(m, riskless_subspace(m).basis)
    if arbitrage is not None:
        W = W @ null_space((m.p @ W)[np.newaxis, :], 0.0)
    s = np.linalg.svd(np.vstack([m.c, m.p]), compute_uv=False)
    cp_independent = bool(len(s) > 1 and s[0] > 0.0 and s[1] > m.tol.tol_rank * s[0])
    has_valueless = W.shape[1] > 0
    return DegeneracyReport(
        arbitrage=arbitrage,
        has_valueless=has_valueless,
        valueless_basis=[W[:, j].copy() for j in range(W.shape[1])],
        cp_independent=cp_independent,
        nondegenerate=arbitrage is None and not has_valueless and cp_independent,
    )


def canonical_model(n: int, k: int, m: float | None, g: float, i: float | None, *,
                    zero_cost: bool = False, tol: ToleranceConfig | None = None) -> Market:
    """The canonical market with the given invariants.

    For ``zero_cost`` models ``m`` and ``i`` are ignored. Otherwise ``m = 0``
    selects the ``RisklessWithCost`` form and ``m > 0`` the
    ``NoCostlyRiskless`` form. Raises ``ValueError`` for parameters in the
    excluded set (``k = n`` with ``m = 0``, or ``k = 0`` with ``m != 0``) and
    for a non-zero ``g`` with ``k = 0``, which would describe a market with
    arbitrage.
    """
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside [0, {n}]")
    if g < 0:
        raise ValueError("g must be non-negative")
    if k == 0 and g != 0:
        raise ValueError("g must be 0 when k = 0")
    r = np.zeros((n, n))
    r[:k, :k] = np.eye(k)
    c = np.zeros(n)
    p = np.zeros(n)
    if zero_cost:
        if k:
            p[0] = g
    else:
        if m is None or i is None or m < 0:
            raise ValueError("m >= 0 and i are required unless zero_cost")
        if (k == n and m == 0) or (k == 0 and m != 0):
            raise ValueError(f"(k={k}, m={m}) lies in the excluded set")
        if m == 0:
            c[n - 1] = 1.0
            if k:
                p[0] = g
            p[n - 1] = i
        else:
            c[0] = 1.0 / m
            p[0] = i / m
            if k >= 2:
                p[1] = g
    return validate(MarketSpec(n, r, c, p), tol)


def _align(E: NDArray[np.float64], f: NDArray[np.float64]) -> tuple[float, NDArray[np.float64]]:
    """Rotate the r-orthonormal columns of ``E`` so the dual of ``f`` is a
    non-negative multiple of the first one; return that multiple and the new
    columns. A functional vanishing on ``span(E)`` leaves ``E`` unchanged."""
    if E.shape[1] == 0:
        return 0.0, E
    a = f @ E
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return 0.0, E
    return norm, E @ reflection_to(a / norm)


def canonicalize(m: Market) -> CanonicalForm:
    """Canonical form of an arbitrage-free market, with the witnessing basis.

    Raises
    ------
    ArbitrageMarket
        If the market has an arbitrage portfolio.
    IllConditioned
        If the construction cannot be carried out to tolerance, for
        instance when payoff on the riskless costless directions is too
        small to count as arbitrage yet too large for a residual within
        ``tol_canon``.
    """
    if find_arbitrage(m) is not None:
        raise ArbitrageMarket("only arbitrage-free markets have a canonical form")
    tol = m.tol
    n, r, c, p = m.n, m.r, m.c, m.p

    eigvals, eigvecs = np.linalg.eigh(r)
    kernel = eigvals <= tol.tol_rank * max(1.0, float(eigvals[-1]))
    K = eigvecs[:, kernel]
    R = eigvecs[:, ~kernel]
    k = R.shape[1]

    c_norm = float(np.linalg.norm(c))
    p_norm = float(np.linalg.norm(p))
    mm: float | None
    ii: float | None
    g_defined = True

    if c_norm <= tol.tol_rank * max(1.0, p_norm, c_norm):
        case = Case.ZERO_COST
        E = gram_schmidt(R, r, tol.tol_rank)
        g, E = _align(E, p)
        B = np.column_stack([E, K])
        mm = ii = None
    elif not _vanishes(c @ K, c, tol.tol_kernel):
        case = Case.RISKLESS_WITH_COST
        cK = c @ K
        v_riskless = K @ cK / float(cK @ cK)
        valueless = K @ null_space(cK[np.newaxis, :], 0.0)
        # project the risky directions into ker c along the cost-1 riskless fund
        U = R - np.outer(v_riskless, c @ R)
        E = gram_schmidt(U, r, tol.tol_rank)
        g, E = _align(E, p)
        B = np.column_stack([E, valueless, v_riskless])
        mm = 0.0
        ii = float(p @ v_riskless)
    else:
        case = Case.NO_COSTLY_RISKLESS
        if k == 0:
            raise IllConditioned("non-zero cost vanishes on every direction")
        E = gram_schmidt(R, r, tol.tol_rank)
        a_c = c @ E
        c_dual = float(np.linalg.norm(a_c))
        if c_dual * np.sqrt(max(1.0, float(eigvals[-1]))) <= tol.tol_rank * c_norm:
            raise IllConditioned("cost vanishes on the risky directions")
        E = E @ reflection_to(a_c / c_dual)
        mm = 1.0 / c_dual
        ii = float(p @ E[:, 0]) * mm
        if k >= 2:
            g, rest = _align(E[:, 1:], p)
            E = np.column_stack([E[:, :1], rest])
        else:
            g, g_defined = 0.0, False
        B = np.column_stack([E, K])

    T = np.linalg.inv(B)
    model = canonical_model(n, k, mm, g, ii, zero_cost=case is Case.ZERO_COST, tol=tol)
    residual = _residual(m, B, model)
    if not residual <= tol.tol_canon:
        raise IllConditioned(f"canonical form residual {residual:.3g} exceeds {tol.tol_canon:.3g}")
    return CanonicalForm(case, n, k, mm, g, ii, g_defined, T, B, residual)


def _residual(m: Market, B: NDArray[np.float64], model: Market) -> float:
    # pushforward by T = B^-1 is (B^T r B, c B, p B); B is used directly
    dev = max(
        float(np.max(np.abs(B.T @ m.r @ B - model.r))),
        float(np.max(np.abs(m.c @ B - model.c))),
        float(np.max(np.abs(m.p @ B - model.p))),
    )
    return dev / model.scale


def invariants_dual(m: Market) -> DualInvariants:
    """``(m, g, i)`` read off the dual of ``rhat = r + c c^T``.

    With ``x = rhat^-1 c`` and ``y = rhat^-1 p`` the pairings are
    ``rhat*(c, c) = c.x``, ``rhat*(p, c) = p.x``, ``rhat*(p, p) = p.y`` and

        m = sqrt(1 / rhat*(c, c) - 1),   i = rhat*(p, c) / rhat*(c, c),
        g = sqrt(rhat*(p, p) - rhat*(p, c)^2 / rhat*(c, c)).

    The square roots are evaluated through the equivalent quadratic forms
    ``m = sqrt(x.r.x) / c.x`` and ``g = sqrt(z.r.z)`` with ``z = y - i x``,
    which avoids cancellation when ``m`` or ``g`` is near zero. A vector
    whose risk falls under the rank tolerance counts as riskless and
    contributes exactly zero.
    """
    rhat = m.r + np.outer(m.c, m.c)
    cond = np.linalg.cond(rhat)
    if not np.isfinite(cond) or cond * m.tol.tol_rank >= 1.0:
        raise DegenerateMarket(f"r + c c^T is singular to tolerance (condition {cond:.3g})")
    x, y = np.linalg.solve(rhat, np.column_stack([m.c, m.p])).T
    rcc = float(m.c @ x)
    rpc = float(m.p @ x)
    rpp = float(m.p @ y)
    i = rpc / rcc
    z = y - i * x
    # same riskless criterion as the eigenvalue cut, so both routes agree on zeros
    floor = m.tol.tol_rank * max(1.0, float(np.linalg.eigvalsh(m.r)[-1]))

    def _root(v: np.ndarray) -> float:
        q = float(v @ m.r @ v)
        return 0.0 if q <= floor * float(v @ v) else float(np.sqrt(q))

    return DualInvariants(
        m=_root(x) / rcc,
        g=_root(z),
        i=i,
        rhat_cc=rcc,
        rhat_pc=rpc,
        rhat_pp=rpp,
    )


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def compare_forms(f1: CanonicalForm, f2: CanonicalForm, tol: float) -> IsomorphismReport:
    """Decide whether two canonical forms describe the same isomorphism class.

    Invariants are compared relatively with a unit floor:
    ``|a - b| <= tol * max(1, |a|, |b|)``.
    """
    deltas: dict[str, float] = {}
    if f1.case is not Case.ZERO_COST and f2.case is not Case.ZERO_COST:
        deltas["m"] = f2.m - f1.m
        deltas["i"] = f2.i - f1.i
    if f1.g_defined and f2.g_defined:
        deltas["g"] = f2.g - f1.g
    if f1.n != f2.n:
        return IsomorphismReport(False, f"dimension {f1.n} != {f2.n}", deltas)
    if f1.case is not f2.case:
        return IsomorphismReport(False, f"case {f1.case} != {f2.case}", deltas)
    if f1.k != f2.k:
        return IsomorphismReport(False, f"k {f1.k} != {f2.k}", deltas)
    names = ["g"] if f1.case is Case.ZERO_COST else ["m", "i", "g"]
    a = {"m": f1.m, "g": f1.g, "i": f1.i}
    b = {"m": f2.m, "g": f2.g, "i": f2.i}
    for name in names:
        if name == "g" and not (f1.g_defined and f2.g_defined):
            continue
        if not _close(a[name], b[name], tol):
            return IsomorphismReport(False, f"{name} {a[name]:.10g} != {b[name]:.10g}", deltas)
    return IsomorphismReport(True, "invariants agree", deltas)


def isomorphism_report(m1: Market, m2: Market, tol: float | None = None) -> IsomorphismReport:
    tol = m1.tol.tol_iso if tol is None else tol
    if m1.n != m2.n:
        return IsomorphismReport(False, f"dimension {m1.n} != {m2.n}", {})
    return compare_forms(canonicalize(m1), canonicalize(m2), tol)


def isomorphic(m1: Market, m2: Market, tol: float | None = None) -> bool:
    """Whether a bijective morphism between the two markets exists.

    Raises :class:`ArbitrageMarket` if either market has arbitrage.
    """
    return isomorphism_report(m1, m2, tol).isomorphic


def _cost_class(m: Market, v: NDArray[np.float64]) -> str:
    cost = float(m.c @ v)
    slack = m.tol.tol_match * max(1.0, float(np.linalg.norm(m.c) * np.linalg.norm(v)))
    if abs(cost - 1.0) <= slack:
        return "unit"
    if abs(cost) <= slack:
        return "costless"
    raise UnsupportedCostClass(f"portfolio cost {cost:.10g} is neither 1 nor 0")


def pointed_isomorphic(m1: Market, v1: PortfolioLike, m2: Market, v2: PortfolioLike,
                       tol: float | None = None) -> bool:
    """Whether some isomorphism ``m1 -> m2`` sends ``v1`` to ``v2``.

    Both markets must be non-degenerate and both portfolios must cost 1, or
    both be costless. Cost-1 portfolios are matched by their risk-return
    point ``phi``, costless ones by ``psi = (risk, payoff)``.
    """
    from .optimize import phi, psi

    tol = m1.tol.tol_iso if tol is None else tol
    for mk in (m1, m2):
        if not degeneracy_report(mk).nondegenerate:
            raise DegenerateMarket("pointed isomorphism is defined for non-degenerate markets")
    if m1.n != m2.n:
        return False
    x1, x2 = _coords(v1, m1.n), _coords(v2, m2.n)
    cls1, cls2 = _cost_class(m1, x1), _cost_class(m2, x2)
    if cls1 != cls2:
        raise UnsupportedCostClass(f"cannot match a {cls1} portfolio with a {cls2} one")
    if not isomorphic(m1, m2, tol):
        return False
    if cls1 == "unit":
        a, b = phi(m1, x1), phi(m2, x2)
        pairs = [(a.rr, b.rr), (a.er, b.er)]
    else:
        a, b = psi(m1, x1), psi(m2, x2)
        pairs = [(a.risk, b.risk), (a.payoff, b.payoff)]
    return all(_close(s, t, tol) for s, t in pairs)
