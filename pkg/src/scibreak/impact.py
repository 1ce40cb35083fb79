"""Per-work impact metrics over a citation corpus.

Two scores are computed for a focal work f at an integer horizon T:

* NBNC — the network-based normalized citation score.  For each year offset
  t in 0..T, the citations c_t that f receives in that year are normalized by
  the average citations of the works co-cited with f at that offset:

      term_t = N_t * c_t / sum_j gamma_t(cocited_j)

  where N_t is the co-cited bag size and gamma_t(j) is the citation count of
  j in its own t-th year after publication (this convention is switchable).
  NBNC is the sum of the yearly terms; years with no citations or no
  co-citation evidence contribute exactly 0.

* CD — the disruption index.  Citers of f within the horizon are split into
  C_x (cite f but none of its references) and C_y (cite f and at least one
  reference); C_refs counts citations earned by f's references within the
  same window, excluding citing works that also cite f and excluding f's own
  references.  Then CD = (C_x - C_y) / (C_x + C_y + C_refs), which lies in
  [-1, 1].  A zero denominator yields 0 with a flag.

Both metrics are pure functions of an immutable corpus; batch evaluation is
a deterministic map over the per-work functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .corpus import CitationCorpus, cocited_member_indices


class BreakthroughClass(Enum):
    DISRUPTIVE = "DI"
    CONSOLIDATING = "CN"


@dataclass(frozen=True)
class NbncScore:
    """NBNC value of one work plus its per-year terms.

    ``truncated_horizon`` flags works whose horizon extends past the last
    publication year in the corpus, so late years are structurally empty.
    """

    work_id: str
    horizon: int
    value: float
    yearly_terms: tuple[float, ...]
    truncated_horizon: bool


@dataclass(frozen=True)
class CdScore:
    """CD index of one work with its integer components.

    ``c_total`` is always ``c_x + c_y``.  ``zero_denominator`` marks works
    where no citation evidence exists at all; their value is 0.
    """

    work_id: str
    horizon: int
    value: float
    c_x: int
    c_y: int
    c_total: int
    c_refs: int
    zero_denominator: bool


def nbnc(
    corpus: CitationCorpus,
    work_id: str,
    horizon: int,
    *,
    cocited_semantics: str = "multiset",
    gamma_convention: str = "own_age",
) -> NbncScore:
    """Normalized citation score of one work at the given horizon.

    ``gamma_convention`` selects how a co-cited work j is aged in the
    denominator: ``own_age`` reads its citations at offset t from j's own
    publication year; ``focal_calendar`` reads them in the calendar year the
    focal work turns t.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    if gamma_convention not in ("own_age", "focal_calendar"):
        raise ValueError(f"unknown gamma convention: {gamma_convention!r}")
    focal = corpus.work_index(work_id)
    year = corpus.pub_year_of(focal)
    year_max = corpus.year_max
    truncated = year_max is not None and year + horizon > year_max

    citer_years = [
        corpus.pub_year_of(int(c)) - year for c in corpus.citers_idx(focal)
    ]
    terms: list[float] = []
    for t in range(horizon + 1):
        cites_t = citer_years.count(t)
        if cites_t == 0:
            terms.append(0.0)
            continue
        members = cocited_member_indices(corpus, focal, t, cocited_semantics)
        if not members:
            terms.append(0.0)
            continue
        denom = 0
        for j in members:
            offsets = corpus.citation_offsets(j)
            if gamma_convention == "own_age":
                denom += offsets.get(t, 0)
            else:
                age = year + t - corpus.pub_year_of(j)
                if age >= 0:
                    denom += offsets.get(age, 0)
        terms.append(len(members) * cites_t / denom if denom else 0.0)
    return NbncScore(work_id, horizon, sum(terms), tuple(terms), truncated)


def nbnc_all(
    corpus: CitationCorpus,
    horizon: int,
    year_range: tuple[int, int] | None = None,
    *,
    cocited_semantics: str = "multiset",
    gamma_convention: str = "own_age",
) -> dict[str, NbncScore]:
    """NBNC for every work published in ``year_range`` (whole corpus if None).

    Equals calling :func:`nbnc` per work; iteration order is work index, so
    the result is deterministic regardless of how the corpus was built up.
    """
    result: dict[str, NbncScore] = {}
    for idx in _works_in_range(corpus, year_range):
        wid = corpus.work_id(idx)
        result[wid] = nbnc(
            corpus,
            wid,
            horizon,
            cocited_semantics=cocited_semantics,
            gamma_convention=gamma_convention,
        )
    return result


def cd_index(corpus: CitationCorpus, work_id: str, horizon: int) -> CdScore:
    """Disruption index of one work over citers within the horizon window.

    The window covers citing works published between the focal year and
    focal year + horizon inclusive; earlier citing works are corpus noise
    and ignored.  Reference citations are counted per citing edge.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    focal = corpus.work_index(work_id)
    year = corpus.pub_year_of(focal)
    refs = set(int(r) for r in corpus.references_idx(focal))
    all_citers = set(int(c) for c in corpus.citers_idx(focal))

    c_x = 0
    c_y = 0
    for citer in corpus.citers_idx(focal):
        citer = int(citer)
        offset = corpus.pub_year_of(citer) - year
        if offset < 0 or offset > horizon:
            continue
        if refs and any(int(r) in refs for r in corpus.references_idx(citer)):
            c_y += 1
        else:
            c_x += 1

    c_refs = 0
    for ref in sorted(refs):
        for citer in corpus.citers_idx(ref):
            citer = int(citer)
            if citer == focal or citer in all_citers:
                continue
            offset = corpus.pub_year_of(citer) - year
            if 0 <= offset <= horizon:
                c_refs += 1

    c_total = c_x + c_y
    denom = c_total + c_refs
    if denom == 0:
        return CdScore(work_id, horizon, 0.0, 0, 0, 0, 0, True)
    return CdScore(
        work_id, horizon, (c_x - c_y) / denom, c_x, c_y, c_total, c_refs, False
    )


def cd_all(
    corpus: CitationCorpus,
    horizon: int,
    year_range: tuple[int, int] | None = None,
) -> dict[str, CdScore]:
    """CD index for every work published in ``year_range``."""
    return {
        corpus.work_id(idx): cd_index(corpus, corpus.work_id(idx), horizon)
        for idx in _works_in_range(corpus, year_range)
    }


def classify(cd: CdScore) -> BreakthroughClass:
    """Disruptive iff CD > 0; zero (including flagged zeros) consolidates."""
    return (
        BreakthroughClass.DISRUPTIVE
        if cd.value > 0
        else BreakthroughClass.CONSOLIDATING
    )


def _works_in_range(
    corpus: CitationCorpus, year_range: tuple[int, int] | None
) -> Iterable[int]:
    if year_range is None:
        return range(corpus.n_works)
    lo, hi = year_range
    return (
        idx
        for idx in range(corpus.n_works)
        if lo <= corpus.pub_year_of(idx) <= hi
    )
