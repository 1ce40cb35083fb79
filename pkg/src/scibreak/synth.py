"""Deterministic synthetic corpora shaped like OpenAlex works exports.

Used by the test suite and handy for demoing the pipeline without real
data.  Works get exponentially growing yearly volume, Zipf-ish subfield and
country popularity, and preferential-attachment-flavored references to
earlier works, all drawn from a seeded generator.
"""

from __future__ import annotations

import gzip
import json
from pathlib import Path
from typing import Any

import numpy as np


def synthetic_records(
    n_works: int,
    seed: int,
    *,
    year_start: int = 1960,
    year_end: int = 2010,
    n_subfields: int = 30,
    n_countries: int = 40,
    mean_refs: float = 8.0,
    growth: float = 0.04,
) -> list[dict[str, Any]]:
    """Generate OpenAlex-shaped work records, fully determined by the seed."""
    if n_works < 1:
        raise ValueError("n_works must be >= 1")
    rng = np.random.default_rng(seed)
    years = np.arange(year_start, year_end + 1)
    weights = np.exp(growth * (years - year_start))
    weights /= weights.sum()
    counts = rng.multinomial(n_works, weights)

    subfield_ids = 3100 + np.arange(n_subfields)
    subfield_w = 1.0 / np.arange(1, n_subfields + 1)
    subfield_w /= subfield_w.sum()
    country_codes = [
        f"{chr(ord('A') + i // 26)}{chr(ord('A') + i % 26)}"
        for i in range(n_countries)
    ]
    country_w = 1.0 / np.arange(1, n_countries + 1) ** 0.8
    country_w /= country_w.sum()

    records: list[dict[str, Any]] = []
    popularity: list[float] = []
    work_no = 0
    for year, count in zip(years, counts):
        n_prior = work_no  # only cite strictly earlier years
        if n_prior > 0:
            prior_weights = np.array(popularity[:n_prior])
            prior_weights = prior_weights / prior_weights.sum()
        for _ in range(int(count)):
            wid = f"W{work_no + 1:07d}"
            refs: list[str] = []
            if n_prior > 0:
                k = min(n_prior, int(rng.poisson(mean_refs)))
                if k > 0:
                    chosen = rng.choice(
                        n_prior, size=k, replace=False, p=prior_weights
                    )
                    refs = [f"W{int(c) + 1:07d}" for c in sorted(chosen)]
            n_countries_here = int(rng.integers(1, 4))
            picked = rng.choice(
                n_countries, size=n_countries_here, replace=False, p=country_w
            )
            subfield = int(rng.choice(subfield_ids, p=subfield_w))
            records.append(
                {
                    "id": wid,
                    "publication_year": int(year),
                    "referenced_works": refs,
                    "primary_topic": {"subfield": {"id": subfield}},
                    "authorships": [
                        {"countries": [country_codes[int(c)]]} for c in picked
                    ],
                }
            )
            popularity.append(1.0)
            for ref in refs:
                popularity[int(ref[1:]) - 1] += 0.5
            work_no += 1
    return records


def write_jsonl(
    records: list[dict[str, Any]], path: str | Path, *, compress: bool = False
) -> None:
    """Write records as newline-delimited JSON, optionally gzipped."""
    path = Path(path)
    opener = gzip.open if compress else open
    with opener(path, "wt", encoding="utf-8") as fh:  # type: ignore[arg-type]
        for record in records:
            fh.write(json.dumps(record, sort_keys=True))
            fh.write("\n")


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        description="Write a synthetic OpenAlex-shaped corpus as JSON lines."
    )
    parser.add_argument("output", help="output path (.gz for compression)")
    parser.add_argument("--works", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--year-start", type=int, default=1960)
    parser.add_argument("--year-end", type=int, default=2010)
    args = parser.parse_args(argv)
    records = synthetic_records(
        args.works,
        args.seed,
        year_start=args.year_start,
        year_end=args.year_end,
    )
    write_jsonl(records, args.output, compress=args.output.endswith(".gz"))
    print(f"wrote {len(records)} records to {args.output}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
