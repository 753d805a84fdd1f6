"""convrec: conversational recommendation over linked interaction data.

The pipeline links a conversational corpus to an interaction corpus, trains
collaborative item embeddings, asks an LLM for candidate recommendations
from conversational context, resolves them to catalog items by exact title
matching, and re-ranks the whole candidate set by max-pooled cosine
similarity to the resolved suggestions.
"""

__version__ = "0.1.0"
