"""Shared builders for corpora used across the suite."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scibreak.corpus import ingest_works


def make_records(spec, subfields=None, countries=None):
    """Records from (id, year, refs) triples plus optional label maps."""
    subfields = subfields or {}
    countries = countries or {}
    records = []
    for wid, year, refs in spec:
        record = {
            "id": wid,
            "publication_year": year,
            "referenced_works": list(refs),
        }
        if wid in subfields:
            record["primary_topic"] = {"subfield": {"id": subfields[wid]}}
        if wid in countries:
            record["authorships"] = [{"countries": list(countries[wid])}]
        records.append(record)
    return records


def build(records, **kw):
    corpus, _ = ingest_works(records, **kw)
    return corpus


def random_citation_records(
    rng: np.random.Generator,
    n_works: int,
    *,
    year_lo: int = 1990,
    year_hi: int = 2010,
    max_refs: int = 6,
    n_subfields: int = 8,
    n_countries: int = 6,
    backward_edge_rate: float = 0.05,
):
    """Random corpus records with years, references, and labels.

    A small fraction of references point at works published later than the
    citer (corpus noise), exercising the noise-handling paths.
    """
    years = rng.integers(year_lo, year_hi + 1, size=n_works)
    ids = [f"W{i}" for i in range(n_works)]
    records = []
    for i in range(n_works):
        n_refs = int(rng.integers(0, max_refs + 1))
        refs: list[str] = []
        if n_works > 1 and n_refs:
            candidates = rng.choice(n_works, size=min(n_refs, n_works - 1), replace=False)
            for c in candidates:
                c = int(c)
                if c == i:
                    continue
                if years[c] <= years[i] or rng.random() < backward_edge_rate:
                    refs.append(ids[c])
        record = {
            "id": ids[i],
            "publication_year": int(years[i]),
            "referenced_works": refs,
            "primary_topic": {"subfield": {"id": 3100 + int(rng.integers(0, n_subfields))}},
            "authorships": [
                {
                    "countries": [
                        f"{chr(65 + int(c))}{chr(65 + int(c))}"
                        for c in rng.choice(
                            n_countries, size=int(rng.integers(1, 3)), replace=False
                        )
                    ]
                }
            ],
        }
        records.append(record)
    return records


@pytest.fixture
def six_work_corpus():
    """The hand-checked NBNC fixture: one focal, two co-cited, three citers."""
    return build(
        make_records(
            [
                ("f", 2000, []),
                ("a", 2000, []),
                ("b", 2000, []),
                ("P1", 2001, ["f", "a"]),
                ("Q1", 2001, ["a"]),
                ("P2", 2002, ["f", "b"]),
            ]
        )
    )
