"""citeweave: citation-aware retrieval-augmented writing assistance.

Ingest research-article PDFs with their section hierarchy and bibliographies,
retrieve query-relevant paragraphs with an LLM judge, synthesize answers
iteratively under the model's context budget, attach primary and secondary
references at coarse or fine grain, and evaluate runs with a judge-based
metric suite and per-call cost accounting.
"""

__version__ = "0.1.0"
