"""Contextual stratagem browsing over bibliographic metadata.

A document's keywords, authors, classifications, and journal are browsable
filters. Three interchangeable rankings order the filtered results: a boosted
default filter, a re-ranking by similarity to the seed document, and a
re-ranking driven by the session context. Sessions are assigned one ranking
arm, every interaction is logged, and the log feeds an evaluation suite
(mean-first-relevant, usefulness, significance tests). A seeded simulator
stands in for live traffic at desk scale.
"""

__version__ = "0.1.0"
