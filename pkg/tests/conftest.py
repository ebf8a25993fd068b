from __future__ import annotations

import random

import pytest
from hypothesis import settings

from browselab.corpus import DocumentRecord, build_index

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def make_record(
    doc_id,
    title="",
    abstract=None,
    authors=(),
    keywords=(),
    keywords_free=(),
    categories=(),
    journal=None,
    year=None,
    language=None,
):
    return DocumentRecord(
        doc_id=doc_id,
        title=title,
        abstracts={"en": abstract} if abstract else {},
        authors=tuple(authors),
        keywords=tuple(keywords),
        keywords_free=tuple(keywords_free),
        categories=tuple(categories),
        journal=journal,
        year=year,
        language=language,
    )


def random_records(rng: random.Random, n_docs: int) -> list[DocumentRecord]:
    """Small random corpus over a tiny shared vocabulary."""
    keywords = [f"kw{i}" for i in range(6)]
    authors = [f"author {i}" for i in range(5)]
    categories = [f"cat{i}" for i in range(4)]
    journals = [f"journal {i}" for i in range(3)]
    words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"]
    records = []
    for i in range(n_docs):
        records.append(
            make_record(
                f"d{i:03d}",
                title=" ".join(rng.choices(words, k=rng.randint(2, 5))),
                abstract=" ".join(rng.choices(words, k=rng.randint(5, 15))),
                authors=sorted({rng.choice(authors) for _ in range(rng.randint(1, 2))}),
                keywords=sorted({rng.choice(keywords) for _ in range(rng.randint(1, 3))}),
                keywords_free=sorted({rng.choice(keywords) for _ in range(rng.randint(0, 1))}),
                categories=sorted({rng.choice(categories) for _ in range(rng.randint(1, 2))}),
                journal=rng.choice(journals),
                year=rng.randint(1990, 2020),
            )
        )
    return records


@pytest.fixture
def ten_doc_index():
    records = random_records(random.Random(4), 10)
    return records, build_index(records)
