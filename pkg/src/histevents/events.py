"""Event anchors, argument extraction, class matching and role labeling."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace

from .corpus import TIMEX_LABELS, Sentence, Span, case_marker, dependents_of
from .resources import ARG_DEPRELS, LU_KINDS, LexicalUnit, PatternDictionary
from .semtypes import tag_argument

VERBAL_RELATIONS = frozenset(ARG_DEPRELS)
NOMINAL_RELATIONS = frozenset({"nmod"})
VERB_POS = frozenset({"VERB"})
NOUN_POS = frozenset({"NOUN"})

HIGH, LOW = "High", "Low"


@dataclass(frozen=True)
class Anchor:
    span: Span
    lexical_unit: LexicalUnit = field(compare=False)
    head: int

    @property
    def kind(self) -> str:
        return self.lexical_unit.kind


@dataclass(frozen=True)
class ExtractedArgument:
    span: Span
    head: int
    deprel: str
    sem_type: str
    text: str
    head_lemma: str
    preposition: str | None = None
    similarity: float | None = None
    entity_id: str | None = None
    role: str | None = None

    @property
    def matched(self) -> bool:
        return self.role is not None


@dataclass(frozen=True)
class EventMention:
    doc_id: str
    sentence_id: str
    anchor: Anchor
    event_class: str
    arguments: tuple[ExtractedArgument, ...]
    anchor_text: str = ""
    sentence_text: str = ""
    ranking: tuple = field(default=(), compare=False)

    @property
    def match_score(self) -> int:
        return sum(1 for a in self.arguments if a.matched)

    @property
    def confidence(self) -> str:
        return HIGH if self.match_score >= 2 else LOW

    def to_record(self) -> dict:
        args = []
        for a in self.arguments:
            r = {"span": [a.span.first_token, a.span.last_token], "text": a.text, "head": a.head,
                 "deprel": a.deprel}
            if a.preposition is not None:
                r["prep"] = a.preposition
            r["sem_type"] = a.sem_type
            if a.role is not None:
                r["role"] = a.role
            if a.entity_id is not None:
                r["entity_id"] = a.entity_id
            args.append(r)
        return {
            "doc": self.doc_id,
            "sentence": self.sentence_id,
            "anchor_span": [self.anchor.span.first_token, self.anchor.span.last_token],
            "anchor_text": self.anchor_text,
            "lemma": self.anchor.lexical_unit.label,
            "lu_kind": self.anchor.kind,
            "event_class": self.event_class,
            "confidence": self.confidence,
            "match_score": self.match_score,
            "ranking": [[c, n] for c, n in self.ranking],
            "sentence_text": self.sentence_text,
            "args": args,
        }


# -- anchors ------------------------------------------------------------------


def _lemma(tok) -> str:
    return (tok.lemma if tok.lemma != "_" else tok.surface).lower()


def detect_anchors(sentence: Sentence, dictionary: PatternDictionary) -> list[Anchor]:
    toks = sentence.tokens
    lemmas = [_lemma(t) for t in toks]
    n = len(toks)
    out = []
    i = 0
    while i < n:
        units = dictionary.units.get(lemmas[i], ())
        best = None
        for lu in units:
            if lu.kind != "multiword_verbal":
                continue
            m = len(lu.lemmas)
            if tuple(lemmas[i : i + m]) == lu.lemmas and (best is None or m > len(best.lemmas)):
                best = lu
        if best is not None:
            first, last = i + 1, i + len(best.lemmas)
            head = next((t.index for t in toks[i : last] if t.upos in VERB_POS), first)
            out.append(Anchor(Span(sentence.id, first, last), best, head))
            i = last
            continue
        tok = toks[i]
        for lu in units:
            if lu.kind == "verbal" and tok.upos in VERB_POS or lu.kind == "nominal" and tok.upos in NOUN_POS:
                out.append(Anchor(Span(sentence.id, tok.index, tok.index), lu, tok.index))
                break
        i += 1
    return out


# -- arguments ----------------------------------------------------------------


def _argument_span(sentence: Sentence, head: int) -> tuple[int, int]:
    """Head plus its dependents, minus case markers and punctuation."""
    children = defaultdict(list)
    for t in sentence.tokens:
        children[t.head].append(t)
    keep, stack = [head], [head]
    while stack:
        cur = stack.pop()
        for c in children.get(cur, ()):
            if cur == head and c.deprel in ("case", "punct"):
                continue
            if c.deprel == "punct":
                continue
            keep.append(c.index)
            stack.append(c.index)
    return min(keep), max(keep)


def _mention_at(mentions, index):
    for m in mentions:
        if m.first_token <= index <= m.last_token:
            return m
    return None


def _override(mention):
    """Type label implied by a linking-stage mention, if any."""
    if mention is None:
        return None
    if mention.status == "linked":
        return mention.entity_class
    if mention.status == "unlinked_ne":
        return mention.ne_label
    return mention.entity_class  # ambiguous within a single class


def extract_arguments(sentence: Sentence, anchor: Anchor, mentions=(), model=None, store=None) -> list[ExtractedArgument]:
    """Dependents of the anchor head, typed and with their preposition.

    ``mentions`` are the linking-stage mentions of this sentence; ``model``
    and ``store`` type everything that no mention or upstream tag covers.
    """
    relations = NOMINAL_RELATIONS if anchor.kind == "nominal" else VERBAL_RELATIONS
    out = []
    for dep in dependents_of(sentence, anchor.head, relations):
        if dep.index in anchor.span:
            continue
        mention = _mention_at(mentions, dep.index)
        label = _override(mention)
        if label is None:
            label = dep.ne or (dep.timex if dep.timex in TIMEX_LABELS else None)
        if mention is not None:
            first, last = mention.first_token, mention.last_token
        else:
            first, last = _argument_span(sentence, dep.index)
        if label is None and model is not None:
            typed = tag_argument(model, store, _lemma(dep), surface=dep.surface)
            sem_type, sim = typed.assigned_type, typed.similarity
        else:
            sem_type, sim = label or "OTHER", None
        out.append(
            ExtractedArgument(
                span=Span(sentence.id, first, last),
                head=dep.index,
                deprel=dep.deprel,
                sem_type=sem_type,
                text=sentence.span_text(first, last),
                head_lemma=_lemma(dep),
                preposition=case_marker(sentence, dep.index) if dep.deprel == "nmod" else None,
                similarity=sim,
                entity_id=mention.entity_id if mention is not None and mention.status == "linked" else None,
            )
        )
    return out


# -- classification ---------------------------------------------------------------


def pattern_matches(pattern, arg) -> bool:
    if pattern.deprel != arg.deprel or pattern.semantic_type != arg.sem_type:
        return False
    return pattern.preposition is None or pattern.preposition == arg.preposition


def best_pattern(patterns, arg):
    """Most specific matching pattern: preposition-bearing first, then file order."""
    hits = [p for p in patterns if pattern_matches(p, arg)]
    if not hits:
        return None
    with_prep = [p for p in hits if p.preposition is not None]
    return (with_prep or hits)[0]


def match_class(arguments, lexical_unit: LexicalUnit) -> list[tuple[str, dict[int, str], int]]:
    """Score every candidate class; returns (class, {arg position: role}, score), best first."""
    ranked = []
    for cls, patterns in lexical_unit.classes.items():
        roles = {}
        for pos, arg in enumerate(arguments):
            p = best_pattern(patterns, arg)
            if p is not None:
                roles[pos] = p.role
        ranked.append((cls, roles, len(roles)))
    ranked.sort(key=lambda r: -r[2])  # stable: dictionary order among equal scores
    return ranked


def classify(arguments, lexical_unit: LexicalUnit):
    """Return (event_class, role-labeled arguments, ranking) or None.

    No event is produced when the best score is zero or shared by
    two or more classes.
    """
    ranking = match_class(arguments, lexical_unit)
    if not ranking or ranking[0][2] < 1:
        return None
    if len(ranking) > 1 and ranking[1][2] == ranking[0][2]:
        return None
    cls, roles, _ = ranking[0]
    labeled = tuple(replace(a, role=roles.get(i)) for i, a in enumerate(arguments))
    return cls, labeled, tuple((c, s) for c, _, s in ranking)


def classify_anchor(doc_id, sentence, anchor, arguments) -> EventMention | None:
    res = classify(arguments, anchor.lexical_unit)
    if res is None:
        return None
    cls, labeled, ranking = res
    return EventMention(
        doc_id, sentence.id, anchor, cls, labeled,
        anchor_text=sentence.span_text(anchor.span.first_token, anchor.span.last_token),
        sentence_text=sentence.text,
        ranking=ranking,
    )


# -- corpus -------------------------------------------------------------------------


def empty_summary() -> dict:
    return {k: {"anchors": 0, HIGH: 0, LOW: 0} for k in LU_KINDS}


def extract_corpus(docs, dictionary: PatternDictionary, mentions=(), model=None, store=None):
    """Run anchors → arguments → classification over every sentence.

    Returns (mentions in corpus order, per-kind anchor and confidence counts).
    """
    by_sentence = defaultdict(list)
    for m in mentions:
        by_sentence[(m.doc_id, m.sentence_id)].append(m)
    events = []
    summary = empty_summary()
    for doc in docs:
        for sent in doc.sentences:
            ments = by_sentence.get((doc.id, sent.id), ())
            for anchor in detect_anchors(sent, dictionary):
                summary[anchor.kind]["anchors"] += 1
                args = extract_arguments(sent, anchor, ments, model, store)
                ev = classify_anchor(doc.id, sent, anchor, args)
                if ev is not None:
                    summary[anchor.kind][ev.confidence] += 1
                    events.append(ev)
    return events, summary


def summary_tsv(summary: dict) -> str:
    lines = ["lu_kind\tanchors\thigh\tlow\tsum"]
    tot = [0, 0, 0]
    for kind in LU_KINDS:
        row = summary[kind]
        s = row[HIGH] + row[LOW]
        lines.append(f"{kind}\t{row['anchors']}\t{row[HIGH]}\t{row[LOW]}\t{s}")
        tot[0] += row["anchors"]
        tot[1] += row[HIGH]
        tot[2] += row[LOW]
    lines.append(f"total\t{tot[0]}\t{tot[1]}\t{tot[2]}\t{tot[1] + tot[2]}")
    return "\n".join(lines) + "\n"
