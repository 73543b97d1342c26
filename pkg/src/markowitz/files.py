"""Market files, return-history ingestion and frontier output.

A market file is a JSON document::

    {
      "n": 2,
      "r": [[1, 0], [0, 1]],
      "c": [1, 0],
      "p": [0, 1],
      "labels": ["bond", "stock"],
      "meta": {"source": "desk"}
    }

``labels`` and ``meta`` are optional. Numbers are written with 17
significant digits so that a save/load round trip is exact.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import InsufficientData, ParseError
from .market import MarketSpec, ToleranceConfig, validate


@dataclass(frozen=True, eq=False)
class MarketFile:
    spec: MarketSpec
    labels: list[str] | None = None
    meta: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ReturnsTable:
    """Per-period payoffs (``T`` rows by ``n`` assets) and current prices."""

    rows: NDArray[np.float64]
    prices: NDArray[np.float64]
    names: list[str] | None = None


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _vec(v: Sequence[float]) -> str:
    return "[" + ", ".join(_num(x) for x in v) + "]"


def dumps_market(spec: MarketSpec, labels: Sequence[str] | None = None,
                 meta: dict[str, str] | None = None) -> str:
    rows = ",\n".join("    " + _vec(row) for row in spec.r)
    parts = [
        f'  "n": {spec.n}',
        f'  "r": [\n{rows}\n  ]',
        f'  "c": {_vec(spec.c)}',
        f'  "p": {_vec(spec.p)}',
    ]
    if labels is not None:
        parts.append(f'  "labels": {json.dumps(list(labels), ensure_ascii=False)}')
    if meta:
        parts.append(f'  "meta": {json.dumps(dict(meta), ensure_ascii=False, sort_keys=True)}')
    return "{\n" + ",\n".join(parts) + "\n}\n"


def save_market(spec: MarketSpec, path: str | Path, labels: Sequence[str] | None = None,
                meta: dict[str, str] | None = None) -> None:
    Path(path).write_text(dumps_market(spec, labels, meta), encoding="utf-8")


def _array(doc: dict[str, Any], key: str, shape: tuple[int, ...]) -> NDArray[np.float64]:
    if key not in doc:
        raise ParseError(f"field {key!r}: missing")
    try:
        arr = np.array(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field {key!r}: not a numeric array ({exc})") from None
    if arr.shape != shape:
        raise ParseError(f"field {key!r}: expected shape {shape}, got {arr.shape}")
    return arr


def loads_market(text: str, source: str = "<string>",
                 tol: ToleranceConfig | None = None) -> MarketFile:
    """Parse and validate a market document.

    Raises :class:`ParseError` for malformed documents and the relevant
    :class:`~markowitz.errors.ValidationError` for data that is not a market.
    """
    try:
        doc = json.loads(text, parse_int=float)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be an object")
    n = doc.get("n")
    if not isinstance(n, float) or n != int(n) or n < 1:
        raise ParseError(f"{source}: field 'n': expected a positive integer, got {n!r}")
    n = int(n)
    try:
        spec = MarketSpec(n, _array(doc, "r", (n, n)), _array(doc, "c", (n,)),
                          _array(doc, "p", (n,)))
        labels = doc.get("labels")
        if labels is not None and (
            not isinstance(labels, list) or len(labels) != n
            or not all(isinstance(s, str) for s in labels)
        ):
            raise ParseError(f"field 'labels': expected {n} strings")
        meta = doc.get("meta") or {}
        if not isinstance(meta, dict):
            raise ParseError("field 'meta': expected an object")
    except ParseError as exc:
        raise ParseError(f"{source}: {exc}") from None
    validate(spec, tol)
    return MarketFile(spec, labels, {str(k): str(v) for k, v in meta.items()})


def load_market_file(path: str | Path, tol: ToleranceConfig | None = None) -> MarketFile:
    return loads_market(Path(path).read_text(encoding="utf-8"), str(path), tol)


def load_market(path: str | Path, tol: ToleranceConfig | None = None) -> MarketSpec:
    return load_market_file(path, tol).spec


def estimate_market(returns: ReturnsTable) -> MarketSpec:
    """Sample market: mean payoffs, unbiased (``T - 1``) sample covariance, prices as cost."""
    rows = np.asarray(returns.rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise InsufficientData("at least two observations are needed")
    n = rows.shape[1]
    prices = np.asarray(returns.prices, dtype=float)
    if prices.shape != (n,):
        raise ParseError(f"expected {n} prices, got {prices.shape}")
    p = rows.mean(axis=0)
    r = np.atleast_2d(np.cov(rows, rowvar=False, ddof=1))
    r = 0.5 * (r + r.T)
    return MarketSpec(n, r, prices, p)


def _read_csv(path: str | Path) -> tuple[list[str], list[list[float]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        data = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric or missing cell") from None
            if not all(np.isfinite(values)):
                raise ParseError(f"{path}:{lineno}: non-finite cell")
            data.append(values)
    return header, data


def read_returns(returns_path: str | Path, prices_path: str | Path) -> ReturnsTable:
    """Read a payoff history CSV and a one-row prices CSV, aligning prices by header name."""
    names, rows = _read_csv(returns_path)
    price_names, price_rows = _read_csv(prices_path)
    if len(price_rows) != 1:
        raise ParseError(f"{prices_path}: expected exactly one row of prices")
    lookup = dict(zip(price_names, price_rows[0]))
    missing = [name for name in names if name not in lookup]
    if missing:
        raise ParseError(f"{prices_path}: no price for {', '.join(missing)}")
    prices = np.array([lookup[name] for name in names])
    return ReturnsTable(np.array(rows, dtype=float).reshape(len(rows), len(names)), prices, names)


def write_frontier_csv(points: Sequence[tuple[float, float]], path: str | Path) -> None:
    """Write ``(x, y)`` points as CSV with header ``y,x``, ascending in ``y``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y", "x"])
        for x, y in sorted(points, key=lambda pt: pt[1]):
            writer.writerow([_num(y), _num(x)])
