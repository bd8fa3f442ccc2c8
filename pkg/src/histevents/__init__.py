"""Event and participant extraction from dependency-parsed historical text."""

from .corpus import Document, Sentence, Span, Token, parse_corpus, read_corpus
from .events import EventMention, extract_corpus
from .graph import EventGraph, build_graph

__version__ = "0.1.0"

__all__ = [
    "Document", "Sentence", "Span", "Token", "parse_corpus", "read_corpus",
    "EventMention", "extract_corpus", "EventGraph", "build_graph",
]
