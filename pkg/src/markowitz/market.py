"""Markets, portfolios and the quadratic structure of risk.

A market on ``R^n`` is a positive-semidefinite covariance form ``r`` together
with two covectors, the cost ``c`` and the expected payoff ``p``. Everything
here is an immutable value; arrays handed out by :class:`Market` are
read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DimensionMismatch,
    NonFinite,
    NotPositiveSemidefinite,
    NotSymmetric,
    SingularTransform,
)


@dataclass(frozen=True)
class ToleranceConfig:
    """Dimensionless thresholds used for every numerical decision.

    Attributes:
        tol_sym: allowed asymmetry of ``r`` relative to ``max(1, max|r|)``.
        tol_psd: allowed negative eigenvalue relative to ``max(1, lambda_max)``.
        tol_rank: eigenvalue / singular value cutoff for rank decisions.
        tol_match: relative mismatch allowed by :func:`is_morphism`.
        tol_kernel: relative size below which a covector is considered to
            vanish on a computed null space.
        tol_canon: bound on the canonical-form residual.
        tol_iso: relative tolerance for comparing invariants.
    """

    tol_sym: float = 1e-9
    tol_psd: float = 1e-9
    tol_rank: float = 1e-9
    tol_match: float = 1e-8
    tol_kernel: float = 1e-7
    tol_canon: float = 1e-8
    tol_iso: float = 1e-7


DEFAULT_TOL = ToleranceConfig()


def _frozen(a: ArrayLike) -> NDArray[np.float64]:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MarketSpec:
    """Raw, unvalidated market data in coordinates.

    ``r`` is the ``n x n`` covariance of payoffs, ``c`` the cost covector and
    ``p`` the expected-payoff covector.
    """

    n: int
    r: NDArray[np.float64]
    c: NDArray[np.float64]
    p: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", _frozen(self.r))
        object.__setattr__(self, "c", _frozen(self.c))
        object.__setattr__(self, "p", _frozen(self.p))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MarketSpec):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.r, other.r)
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.p, other.p)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Market:
    """A validated market. Build one with :func:`validate` or :func:`make_market`."""

    spec: MarketSpec
    tol: ToleranceConfig = field(default=DEFAULT_TOL)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def r(self) -> NDArray[np.float64]:
        return self.spec.r

    @property
    def c(self) -> NDArray[np.float64]:
        return self.spec.c

    @property
    def p(self) -> NDArray[np.float64]:
        return self.spec.p

    @property
    def scale(self) -> float:
        """Largest absolute entry of the market data, floored at one."""
        return max(1.0, float(np.max(np.abs(self.r), initial=0.0)),
                   float(np.max(np.abs(self.c), initial=0.0)),
                   float(np.max(np.abs(self.p), initial=0.0)))

    def __repr__(self) -> str:
        return f"Market(n={self.n}, r={self.r.tolist()}, c={self.c.tolist()}, p={self.p.tolist()})"


@dataclass(frozen=True, eq=False)
class Portfolio:
    """Holdings of each asset. Negative entries are short positions."""

    coords: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", _frozen(self.coords))

    def cost(self, m: Market) -> float:
        return float(m.c @ _coords(self, m.n))

    def payoff(self, m: Market) -> float:
        return float(m.p @ _coords(self, m.n))

    def risk(self, m: Market) -> float:
        return risk(m, self)


PortfolioLike = Union[Portfolio, ArrayLike]


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of ``R^n`` held as basis columns of an ``n x dim`` array."""

    basis: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis", _frozen(self.basis))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def vectors(self) -> list[NDArray[np.float64]]:
        return [self.basis[:, j] for j in range(self.dim)]


def _coords(v: PortfolioLike, n: int) -> NDArray[np.float64]:
    x = v.coords if isinstance(v, Portfolio) else np.asarray(v, dtype=float)
    if x.shape != (n,):
        raise DimensionMismatch(f"portfolio has shape {x.shape}, market dimension is {n}")
    return x


def validate(spec: MarketSpec, tol: ToleranceConfig | None = None) -> Market:
    """Check ``spec`` against the definition of a Markowitz market.

    ``r`` is replaced by its symmetric part ``(r + r.T) / 2`` before the
    positive-semidefiniteness test. Failure of that test is reported first,
    since the quadratic form only sees the symmetric part; a matrix whose
    symmetric part is fine but which is visibly asymmetric is then rejected
    with :class:`NotSymmetric`.
    """
    tol = tol or DEFAULT_TOL
    n = spec.n
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DimensionMismatch(f"n must be a positive integer, got {n!r}")
    if spec.r.shape != (n, n):
        raise DimensionMismatch(f"r has shape {spec.r.shape}, expected {(n, n)}")
    if spec.c.shape != (n,):
        raise DimensionMismatch(f"c has shape {spec.c.shape}, expected {(n,)}")
    if spec.p.shape != (n,):
        raise DimensionMismatch(f"p has shape {spec.p.shape}, expected {(n,)}")
    for name in ("r", "c", "p"):
        if not np.all(np.isfinite(getattr(spec, name))):
            raise NonFinite(f"{name} contains NaN or infinite entries")

    r = spec.r
    sym = 0.5 * (r + r.T)
    eigvals = np.linalg.eigvalsh(sym)
    lam_max = float(eigvals[-1])
    floor = -tol.tol_psd * max(1.0, lam_max)
    if eigvals[0] < floor:
        raise NotPositiveSemidefinite(
            f"r has eigenvalue {eigvals[0]:.6g} below {floor:.3g}"
        )
    asym = float(np.max(np.abs(r - r.T)))
    if asym > tol.tol_sym * max(1.0, float(np.max(np.abs(r)))):
        raise NotSymmetric(f"r differs from its transpose by {asym:.6g}")

    return Market(MarketSpec(int(n), sym, spec.c, spec.p), tol)


def make_market(r: ArrayLike, c: ArrayLike, p: ArrayLike,
                tol: ToleranceConfig | None = None) -> Market:
    """Shorthand for ``validate(MarketSpec(len(c), r, c, p), tol)``."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return validate(MarketSpec(len(c), np.atleast_2d(r), c, p), tol)


def risk(m: Market, v: PortfolioLike) -> float:
    """Standard deviation ``sqrt(r(v, v))`` of the portfolio payoff."""
    x = _coords(v, m.n)
    return float(np.sqrt(max(0.0, float(x @ m.r @ x))))


def covariance(m: Market, v: PortfolioLike, w: PortfolioLike) -> float:
    return float(_coords(v, m.n) @ m.r @ _coords(w, m.n))


def riskless_subspace(m: Market) -> Subspace:
    """Orthonormal basis of the risk-free portfolios, i.e. the kernel of ``r``.

    An eigenvalue counts as zero when it is at most
    ``tol_rank * max(1, lambda_max)``.
    """
    eigvals, eigvecs = np.linalg.eigh(m.r)
    cutoff = m.tol.tol_rank * max(1.0, float(eigvals[-1]))
    return Subspace(eigvecs[:, eigvals <= cutoff])


def rank(m: Market) -> int:
    return m.n - riskless_subspace(m).dim


def _check_invertible(T: NDArray[np.float64], tol: ToleranceConfig) -> None:
    s = np.linalg.svd(T, compute_uv=False)
    if not np.all(np.isfinite(s)) or s[-1] <= tol.tol_rank * s[0]:
        raise SingularTransform(
            f"transform is singular to tolerance (singular values {s[0]:.3g} .. {s[-1]:.3g})"
        )


def pushforward(m: Market, T: ArrayLike) -> Market:
    """Market on the target of ``T`` for which ``T`` is an isomorphism from ``m``.

    ``r' = T^-T r T^-1``, ``c' = c T^-1``, ``p' = p T^-1``.
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (m.n, m.n):
        raise DimensionMismatch(f"transform has shape {T.shape}, expected {(m.n, m.n)}")
    _check_invertible(T, m.tol)
    T_inv = np.linalg.inv(T)
    r = T_inv.T @ m.r @ T_inv
    r = 0.5 * (r + r.T)
    return Market(MarketSpec(m.n, r, m.c @ T_inv, m.p @ T_inv), m.tol)


def _probes(n: int) -> NDArray[np.float64]:
    """Standard basis vectors followed by all pairwise sums, as columns."""
    cols = [np.eye(n)[:, a] for a in range(n)]
    cols += [np.eye(n)[:, a] + np.eye(n)[:, b] for a, b in combinations(range(n), 2)]
    return np.column_stack(cols)


def morphism_residual(m1: Market, m2: Market, T: ArrayLike) -> float:
    """Largest relative violation of the morphism conditions over the probe set.

    Risk, payoff and cost are compared on the standard basis and on all
    pairwise sums of basis vectors. By polarization, agreement of ``r(v, v)``
    on these probes pins down the whole bilinear form. The result is divided
    by the larger of the two markets' :attr:`Market.scale`.
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (m2.n, m1.n):
        raise DimensionMismatch(f"transform has shape {T.shape}, expected {(m2.n, m1.n)}")
    P = _probes(m1.n)
    TP = T @ P
    quad2 = np.einsum("ij,ik,kj->j", TP, m2.r, TP)
    quad1 = np.einsum("ij,ik,kj->j", P, m1.r, P)
    dev = max(
        float(np.max(np.abs(quad2 - quad1))),
        float(np.max(np.abs(m2.p @ TP - m1.p @ P))),
        float(np.max(np.abs(m2.c @ TP - m1.c @ P))),
    )
    return dev / max(m1.scale, m2.scale)


def is_morphism(m1: Market, m2: Market, T: ArrayLike) -> bool:
    """Whether ``T`` preserves risk, cost and payoff from ``m1`` to ``m2``."""
    return morphism_residual(m1, m2, T) <= m1.tol.tol_match
