"""Template-classification question answering over a knowledge graph.

A dependency-tree LSTM classifies a natural-language question into one of a
fixed catalog of SPARQL templates; entity linking and a predicate lexicon
supply slot candidates; query generation grounds the template and executes
it against a SPARQL endpoint (or an in-process mock store).
"""

__version__ = "1.0.0"

__all__ = ["__version__"]
