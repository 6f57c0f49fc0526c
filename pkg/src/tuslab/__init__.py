"""tuslab: a benchmark laboratory for table union search.

Profiles benchmark corpora, quantifies schema/value overlap in ground-truth
pairs, runs lexical and embedding retrieval baselines over an exact top-k
index, computes retrieval and ground-truth-integrity metrics, and adjudicates
disputed pairs with an LLM-judge protocol.
"""

__version__ = "0.1.0"
