"""CoNLL-U ingestion and the token/dependency structures used downstream."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

NE_LABELS = ("PER", "LOC", "ORG")
TIMEX_LABELS = ("DATE", "TIME", "DURATION", "SET")
SUBCORPORA = ("memoirs", "bio", "wiki", "test", "other")

# UD v2 labels folded onto the v1 names the pattern dictionary uses
DEPREL_ALIASES = {
    "obj": "dobj",
    "nsubj:pass": "nsubjpass",
    "obl": "nmod",
}

# base preposition -> articulated forms (preposition + article)
_ARTICULATED = {
    "di": ("del", "dello", "della", "dei", "degli", "delle", "dell"),
    "a": ("al", "allo", "alla", "ai", "agli", "alle", "all"),
    "da": ("dal", "dallo", "dalla", "dai", "dagli", "dalle", "dall"),
    "in": ("nel", "nello", "nella", "nei", "negli", "nelle", "nell"),
    "con": ("col", "collo", "colla", "coi", "cogli", "colle", "coll"),
    "su": ("sul", "sullo", "sulla", "sui", "sugli", "sulle", "sull"),
    "per": ("pel", "pello", "pella", "pei", "pegli", "pelle"),
    "tra": (),
    "fra": (),
}
_PREP_TABLE = {form: base for base, forms in _ARTICULATED.items() for form in forms}
_PREP_TABLE.update({base: base for base in _ARTICULATED})


class ParseError(ValueError):
    """Raised for CoNLL-U input that cannot be read at all."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SentenceRejected(ValueError):
    """A single sentence violates a tree invariant; parsing goes on without it."""


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    lemma: str
    upos: str
    head: int
    deprel: str
    misc: dict = field(default_factory=dict, compare=True, hash=False)
    xpos: str = "_"
    feats: str = "_"

    @property
    def ne(self) -> str | None:
        return self.misc.get("NE")

    @property
    def timex(self) -> str | None:
        return self.misc.get("TIMEX")


@dataclass(frozen=True)
class Span:
    sentence_id: str
    first_token: int
    last_token: int

    def __post_init__(self):
        if self.first_token > self.last_token:
            raise ValueError(f"empty span {self.first_token}..{self.last_token}")

    def __contains__(self, index: int) -> bool:
        return self.first_token <= index <= self.last_token

    def overlaps(self, other: "Span") -> bool:
        return (
            self.sentence_id == other.sentence_id
            and self.first_token <= other.last_token
            and other.first_token <= self.last_token
        )


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[Token, ...]
    text: str = ""

    def __post_init__(self):
        if not self.text:
            object.__setattr__(self, "text", reconstruct_text(self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, index: int) -> Token:
        if not 1 <= index <= len(self.tokens):
            raise IndexError(f"sentence {self.id} has no token {index}")
        return self.tokens[index - 1]

    def span_text(self, first: int, last: int) -> str:
        return reconstruct_text(self.tokens[first - 1 : last])

    @property
    def root(self) -> Token:
        return next(t for t in self.tokens if t.head == 0)


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[Sentence, ...]
    subcorpus: str = "other"

    def sentence(self, sentence_id: str) -> Sentence:
        for s in self.sentences:
            if s.id == sentence_id:
                return s
        raise KeyError(f"document {self.id} has no sentence {sentence_id!r}")


def reconstruct_text(tokens: Iterable[Token]) -> str:
    parts = []
    for tok in tokens:
        parts.append(tok.surface)
        if tok.misc.get("SpaceAfter") != "No":
            parts.append(" ")
    return "".join(parts).rstrip()


def canonical_deprel(deprel: str) -> str:
    return DEPREL_ALIASES.get(deprel, deprel)


def normalize_preposition(lemma: str) -> str:
    """Reduce an (articulated) preposition lemma to its base form.

    Upstream tools encode fused forms differently (``dalla``, ``da+il``,
    ``da_il``, ``dall'``), so the leading element is taken before lookup.
    """
    text = lemma.lower().strip()
    text = re.split(r"[+_\s]", text, maxsplit=1)[0]
    text = text.rstrip("'’")
    return _PREP_TABLE.get(text, text)


def _parse_misc(raw: str) -> dict:
    if raw in ("", "_"):
        return {}
    misc = {}
    for item in raw.split("|"):
        key, sep, value = item.partition("=")
        misc[key] = value if sep else ""
    return misc


def _format_misc(misc: dict) -> str:
    if not misc:
        return "_"
    return "|".join(f"{k}={v}" if v != "" else k for k, v in misc.items())


def validate_tree(tokens: tuple[Token, ...], sentence_id: str) -> None:
    """Check head indices, single root and acyclicity; raise SentenceRejected."""
    n = len(tokens)
    roots = []
    for tok in tokens:
        if tok.head == tok.index:
            raise SentenceRejected(f"sentence {sentence_id}: token {tok.index} is its own head")
        if not 0 <= tok.head <= n:
            raise SentenceRejected(
                f"sentence {sentence_id}: token {tok.index} has dangling head {tok.head}"
            )
        if not tok.deprel:
            raise SentenceRejected(f"sentence {sentence_id}: token {tok.index} has empty deprel")
        if tok.head == 0:
            roots.append(tok.index)
    if len(roots) != 1:
        raise SentenceRejected(f"sentence {sentence_id}: {len(roots)} roots {roots}")
    for tok in tokens:
        seen = set()
        cur = tok.index
        while cur != 0:
            if cur in seen:
                raise SentenceRejected(f"sentence {sentence_id}: cycle through token {tok.index}")
            seen.add(cur)
            cur = tokens[cur - 1].head


def _blocks(lines: Iterable[str]) -> Iterator[tuple[int, list[tuple[int, str]]]]:
    block: list[tuple[int, str]] = []
    start = 0
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            if block:
                yield start, block
                block = []
            continue
        if not block:
            start = lineno
        block.append((lineno, line))
    if block:
        yield start, block


def parse_corpus(source: str | Iterable[str], subcorpus: str = "other") -> list[Document]:
    """Parse CoNLL-U text into documents.

    ``source`` is either the whole text or an iterable of lines.
    Sentences violating the tree invariants are logged and skipped.
    """
    if isinstance(source, str):
        source = source.splitlines()
    docs: list[tuple[str, list[Sentence]]] = []
    doc_ids: set[str] = set()
    for start, block in _blocks(source):
        sent_id = None
        text = ""
        rows = []
        for lineno, line in block:
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                key = key.strip()
                if not sep:
                    continue
                value = value.strip()
                if key == "newdoc id":
                    if value in doc_ids:
                        raise ParseError(f"duplicate document id {value!r}", lineno)
                    doc_ids.add(value)
                    docs.append((value, []))
                elif key == "sent_id":
                    sent_id = value
                elif key == "text":
                    text = value
                continue
            rows.append((lineno, line))
        if not rows:
            continue
        if not docs:
            raise ParseError("sentence outside any '# newdoc id' block", start)
        if sent_id is None:
            raise ParseError("sentence without '# sent_id'", start)
        tokens = _parse_rows(rows)
        try:
            validate_tree(tokens, sent_id)
        except SentenceRejected as exc:
            log.warning("rejected: %s", exc)
            continue
        docs[-1][1].append(Sentence(sent_id, tokens, text))
    return [Document(doc_id, tuple(sents), subcorpus) for doc_id, sents in docs]


def _parse_rows(rows: list[tuple[int, str]]) -> tuple[Token, ...]:
    tokens = []
    for lineno, line in rows:
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(f"expected 10 tab-separated columns, got {len(cols)}", lineno)
        ident = cols[0]
        if "-" in ident or "." in ident:
            continue  # multiword-token ranges and empty nodes
        try:
            index = int(ident)
        except ValueError:
            raise ParseError(f"non-numeric token id {ident!r}", lineno) from None
        try:
            head = int(cols[6])
        except ValueError:
            raise ParseError(f"non-numeric head {cols[6]!r}", lineno) from None
        if index != len(tokens) + 1:
            raise ParseError(f"token ids not contiguous at {index}", lineno)
        tokens.append(
            Token(
                index=index,
                surface=cols[1],
                lemma=cols[2],
                upos=cols[3],
                head=head,
                deprel=canonical_deprel(cols[7] if cols[7] != "_" else ""),
                misc=_parse_misc(cols[9]),
                xpos=cols[4],
                feats=cols[5],
            )
        )
    return tuple(tokens)


def read_corpus(path, subcorpus: str = "other") -> list[Document]:
    with open(path, encoding="utf-8") as f:
        return parse_corpus(f, subcorpus)


def to_conllu(docs: Iterable[Document]) -> str:
    out = []
    for doc in docs:
        out.append(f"# newdoc id = {doc.id}")
        for sent in doc.sentences:
            out.append(f"# sent_id = {sent.id}")
            out.append(f"# text = {sent.text}")
            for t in sent.tokens:
                out.append(
                    "\t".join(
                        [str(t.index), t.surface, t.lemma, t.upos, t.xpos, t.feats,
                         str(t.head), t.deprel, "_", _format_misc(t.misc)]
                    )
                )
            out.append("")
    return "\n".join(out) + ("\n" if out else "")


def dependents_of(sentence: Sentence, governor: int, relations: Iterable[str]) -> list[Token]:
    sentence.token(governor)
    relations = set(relations)
    return [t for t in sentence.tokens if t.head == governor and t.deprel in relations]


def case_marker(sentence: Sentence, head: int) -> str | None:
    """Base preposition governed by ``head`` via ``case``, leftmost if several."""
    sentence.token(head)
    for t in sentence.tokens:
        if t.head == head and t.deprel == "case":
            return normalize_preposition(t.lemma if t.lemma != "_" else t.surface)
    return None


def subtree(sentence: Sentence, index: int) -> list[int]:
    children: dict[int, list[int]] = {}
    for t in sentence.tokens:
        children.setdefault(t.head, []).append(t.index)
    out, stack = [], [index]
    while stack:
        cur = stack.pop()
        out.append(cur)
        stack.extend(children.get(cur, ()))
    return sorted(out)
