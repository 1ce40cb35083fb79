"""Comparison statistics: rank correlation, power-law fits, indicators.

These operate on plain mappings and delimited text files so rankings
produced by the pipeline can be compared against external country
indicators (h-index style rankings, research expenditure, GDP).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


class InsufficientDataError(ValueError):
    """Too few common entities to compute a statistic."""


@dataclass(frozen=True)
class IndicatorValue:
    """One external indicator observation."""

    country: str
    period: int
    value: float


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    residual: float  # sum of squared log-residuals


@dataclass(frozen=True)
class GerdMean:
    """Windowed mean research expenditure with data coverage in [0, 1]."""

    value: float
    coverage: float


def _average_ranks(values: Sequence[float]) -> list[float]:
    """Ascending ranks, ties receiving the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(
    rank_a: Mapping[str, float], rank_b: Mapping[str, float]
) -> float:
    """Spearman rank correlation over the intersection of keys.

    Values are re-ranked on the common set with average ranks for ties, then
    Pearson-correlated.  Fewer than 3 common keys, or a constant side, is an
    InsufficientDataError.
    """
    common = sorted(set(rank_a) & set(rank_b))
    if len(common) < 3:
        raise InsufficientDataError(
            f"need >= 3 common entities, got {len(common)}"
        )
    ra = np.array(_average_ranks([float(rank_a[k]) for k in common]))
    rb = np.array(_average_ranks([float(rank_b[k]) for k in common]))
    da = ra - ra.mean()
    db = rb - rb.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        raise InsufficientDataError("rank variance is zero on one side")
    return float(da @ db) / denom


def loglog_fit(
    x: Sequence[float], y: Sequence[float]
) -> PowerLawFit:
    """Least-squares line on (ln x, ln y); the slope is the exponent."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 3:
        raise ValueError(f"need >= 3 points, got {len(xs)}")
    if (xs <= 0).any() or (ys <= 0).any():
        raise ValueError("power-law fit requires strictly positive values")
    lx = np.log(xs)
    ly = np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.sum((ly - (slope * lx + intercept)) ** 2))
    return PowerLawFit(float(slope), float(math.exp(intercept)), residual)


def read_indicator_file(path: str | Path) -> list[IndicatorValue]:
    """Read (country, period, value) rows from delimited text.

    The delimiter is sniffed from the header (tab, comma, or semicolon);
    a header row naming the columns is required.  Rows with unparseable
    periods or values are skipped.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        sample = fh.readline()
        delimiter = "\t"
        for candidate in ("\t", ",", ";"):
            if candidate in sample:
                delimiter = candidate
                break
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            return []
        fields = {name.strip().lower(): name for name in reader.fieldnames}
        try:
            country_col = fields["country"]
            period_col = fields["period"]
            value_col = fields["value"]
        except KeyError as exc:
            raise ValueError(
                f"{path}: indicator file must have country/period/value "
                f"columns, found {reader.fieldnames}"
            ) from exc
        rows: list[IndicatorValue] = []
        for row in reader:
            try:
                rows.append(
                    IndicatorValue(
                        country=row[country_col].strip().upper(),
                        period=int(row[period_col]),
                        value=float(row[value_col]),
                    )
                )
            except (TypeError, ValueError, AttributeError):
                continue
    return rows


def gerd_means(
    rd_share: Sequence[IndicatorValue],
    gdp: Sequence[IndicatorValue],
    window: tuple[int, int],
) -> dict[str, GerdMean]:
    """Mean research expenditure (share/100 * GDP) per country over a window.

    Years missing either series are skipped; coverage reports the fraction
    of window years actually used.  Countries with no usable year are
    omitted.
    """
    lo, hi = window
    if lo > hi:
        raise ValueError(f"empty window {window}")
    share_by = {(r.country, r.period): r.value for r in rd_share}
    gdp_by = {(g.country, g.period): g.value for g in gdp}
    countries = sorted({c for c, _ in share_by} & {c for c, _ in gdp_by})
    span = hi - lo + 1
    out: dict[str, GerdMean] = {}
    for country in countries:
        products = [
            share_by[(country, year)] / 100.0 * gdp_by[(country, year)]
            for year in range(lo, hi + 1)
            if (country, year) in share_by and (country, year) in gdp_by
        ]
        if products:
            out[country] = GerdMean(
                value=sum(products) / len(products),
                coverage=len(products) / span,
            )
    return out
