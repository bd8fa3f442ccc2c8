"""Gazetteer-based mention detection and entity disambiguation.

Three stages, run in order by :func:`link_corpus`:

1. surface-form lookup: every gazetteer variant (and every generated
   person pattern) is matched leftmost-longest against sentence tokens;
   forms with a single candidate are linked directly;
2. cross-class resolution: a k-NN classifier trained on directly linked
   mentions picks PER/LOC/ORG for forms whose candidates span classes;
3. intra-class resolution: candidates are ranked by their summed
   association with entities already linked in the same sentence,
   iterating until no new mention gets linked.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from importlib import resources as importlib_resources
from itertools import combinations

import numpy as np

from .corpus import NE_LABELS, TIMEX_LABELS, Document, Sentence

log = logging.getLogger(__name__)

CLASS_ORDER = {c: i for i, c in enumerate(NE_LABELS)}
_PLACEHOLDER = re.compile(r"\b([NSK])\b")


# -- person patterns ------------------------------------------------------------


def load_person_patterns(path=None) -> list[str]:
    if path is None:
        text = importlib_resources.files("histevents").joinpath("data/person_patterns.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


def generate_person_patterns(entry, patterns=None) -> set[str]:
    if entry.entity_class != "PER":
        raise ValueError(f"{entry.entity_id} is {entry.entity_class}, not PER")
    if patterns is None:
        patterns = load_person_patterns()
    fields = {"N": entry.name, "S": entry.surname, "K": entry.nickname}
    out = set()
    for pat in patterns:
        used = set(_PLACEHOLDER.findall(pat))
        if not used or any(not fields[p] for p in used):
            continue
        out.add(_PLACEHOLDER.sub(lambda m: fields[m.group(1)], pat))
    return out


# -- surface forms --------------------------------------------------------------


def _key(text: str) -> str:
    # token-boundary-agnostic comparison key
    return "".join(text.split())


@dataclass(frozen=True)
class SurfaceForm:
    text: str
    candidates: frozenset[str]
    classes: frozenset[str]

    @property
    def ambiguous(self) -> bool:
        return len(self.candidates) > 1

    @property
    def cross_class(self) -> bool:
        return len(self.classes) > 1


class SurfaceIndex:
    def __init__(self, entries, patterns=None):
        self.entries = {e.entity_id: e for e in entries}
        forms: dict[str, set[str]] = defaultdict(set)
        texts: dict[str, str] = {}
        for e in entries:
            strings = set(e.variants)
            if e.entity_class == "PER":
                strings |= generate_person_patterns(e, patterns)
            elif e.name:
                strings.add(e.name)
            for s in strings:
                k = _key(s)
                if k:
                    forms[k].add(e.entity_id)
                    texts.setdefault(k, s)
        self.forms = {
            k: SurfaceForm(texts[k], frozenset(c), frozenset(self.entries[i].entity_class for i in c))
            for k, c in forms.items()
        }
        self.max_len = max((len(k) for k in self.forms), default=0)

    def lookup(self, text: str, sentence_initial: bool = False) -> frozenset[str]:
        k = _key(text)
        found = set()
        if k in self.forms:
            found |= self.forms[k].candidates
        if sentence_initial and k:
            folded = k[0].swapcase() + k[1:]
            if folded in self.forms:
                found |= self.forms[folded].candidates
        return frozenset(found)

    def entity_class(self, entity_id: str) -> str:
        return self.entries[entity_id].entity_class


# -- mentions -------------------------------------------------------------------


@dataclass(frozen=True)
class EntityMention:
    doc_id: str
    sentence_id: str
    first_token: int
    last_token: int
    surface: str
    status: str  # linked | ambiguous | unlinked_ne
    entity_id: str | None = None
    entity_class: str | None = None
    candidates: tuple[str, ...] = ()
    ne_label: str | None = None
    method: str | None = None  # direct | knn | association

    @property
    def key(self) -> tuple[str, str, int, int]:
        return self.doc_id, self.sentence_id, self.first_token, self.last_token

    @property
    def sentence_key(self) -> tuple[str, str]:
        return self.doc_id, self.sentence_id

    def covers(self, index: int) -> bool:
        return self.first_token <= index <= self.last_token

    def to_record(self) -> dict:
        r = {
            "doc": self.doc_id,
            "sentence": self.sentence_id,
            "first_token": self.first_token,
            "last_token": self.last_token,
            "surface": self.surface,
            "status": self.status,
        }
        if self.entity_id is not None:
            r["entity_id"] = self.entity_id
        if self.entity_class is not None:
            r["class"] = self.entity_class
        if self.status == "ambiguous":
            r["candidates"] = list(self.candidates)
        if self.ne_label is not None:
            r["ne_label"] = self.ne_label
        if self.method is not None:
            r["method"] = self.method
        return r

    @classmethod
    def from_record(cls, r: dict) -> "EntityMention":
        return cls(
            doc_id=r["doc"],
            sentence_id=r["sentence"],
            first_token=int(r["first_token"]),
            last_token=int(r["last_token"]),
            surface=r["surface"],
            status=r["status"],
            entity_id=r.get("entity_id"),
            entity_class=r.get("class"),
            candidates=tuple(r.get("candidates", ())),
            ne_label=r.get("ne_label"),
            method=r.get("method"),
        )


def _mention_from_candidates(doc_id, sent, i, j, cands, index) -> EntityMention:
    surface = sent.span_text(i, j)
    classes = {index.entity_class(c) for c in cands}
    cls = next(iter(classes)) if len(classes) == 1 else None
    if len(cands) == 1:
        (eid,) = cands
        return EntityMention(doc_id, sent.id, i, j, surface, "linked", eid, cls, method="direct")
    return EntityMention(doc_id, sent.id, i, j, surface, "ambiguous", None, cls, tuple(sorted(cands)))


def find_sentence_mentions(doc_id: str, sent: Sentence, index: SurfaceIndex) -> list[EntityMention]:
    toks = sent.tokens
    n = len(toks)
    out: list[EntityMention] = []
    covered = [False] * (n + 1)
    i = 1
    while i <= n:
        best = None
        acc = ""
        for j in range(i, n + 1):
            acc += toks[j - 1].surface
            if len(acc) > index.max_len:
                break
            cands = index.lookup(acc, sentence_initial=(i == 1))
            if cands:
                best = (j, cands)
        if best is None:
            i += 1
            continue
        j, cands = best
        out.append(_mention_from_candidates(doc_id, sent, i, j, cands, index))
        for k in range(i, j + 1):
            covered[k] = True
        i = j + 1

    # upstream NE / TIMEX runs outside gazetteer matches
    for attr, labels in (("ne", NE_LABELS), ("timex", TIMEX_LABELS)):
        i = 1
        while i <= n:
            label = getattr(toks[i - 1], attr)
            if covered[i] or label not in labels:
                i += 1
                continue
            j = i
            while j + 1 <= n and not covered[j + 1] and getattr(toks[j], attr) == label:
                j += 1
            ne_cls = label if attr == "ne" else None
            out.append(
                EntityMention(doc_id, sent.id, i, j, sent.span_text(i, j), "unlinked_ne",
                              entity_class=ne_cls, ne_label=label)
            )
            for k in range(i, j + 1):
                covered[k] = True
            i = j + 1
    out.sort(key=lambda m: m.first_token)
    return out


def find_mentions(doc: Document, index: SurfaceIndex) -> list[EntityMention]:
    out = []
    for sent in doc.sentences:
        out.extend(find_sentence_mentions(doc.id, sent, index))
    return out


# -- cross-class k-NN -------------------------------------------------------------


@dataclass(frozen=True)
class CrossClassSample:
    word_before: str
    pos_before: tuple[str, str]
    pos_after: tuple[str, str]
    context_vector: np.ndarray = field(compare=False)
    deprel: str
    verb_category: str
    label: str | None = None

    def categorical(self) -> tuple[str, ...]:
        return (self.word_before, *self.pos_before, *self.pos_after, self.deprel, self.verb_category)


N_CATEGORICAL = 7


def mention_head(sent: Sentence, first: int, last: int) -> int:
    for idx in range(first, last + 1):
        h = sent.token(idx).head
        if not first <= h <= last:
            return idx
    return first


def governing_verb(sent: Sentence, index: int):
    """(deprel of the path edge into the verb, verb token) or ("none", None)."""
    node = sent.token(index)
    while node.head != 0:
        parent = sent.token(node.head)
        if parent.upos == "VERB":
            return node.deprel, parent
        node = parent
    return "none", None


class FeatureExtractor:
    def __init__(self, store=None, dictionary=None, dimension: int | None = None):
        self.store = store
        self.dictionary = dictionary
        self.dimension = store.dimension if store is not None else (dimension or 0)

    def extract(self, sent: Sentence, first: int, last: int, label=None) -> CrossClassSample:
        toks = sent.tokens

        def pos(i):
            return toks[i - 1].upos if 1 <= i <= len(toks) else "<PAD>"

        word_before = toks[first - 2].surface.lower() if first > 1 else "<S>"
        vecs = []
        if self.store is not None:
            for i in (first - 1, first - 2):
                if i >= 1:
                    v = self.store.get(toks[i - 1].lemma) if toks[i - 1].lemma != "_" else None
                    if v is None:
                        v = self.store.get(toks[i - 1].surface)
                    if v is not None:
                        vecs.append(v)
        context = np.mean(vecs, axis=0) if vecs else np.zeros(self.dimension)
        deprel, verb = governing_verb(sent, mention_head(sent, first, last))
        category = "none"
        if verb is not None and self.dictionary is not None:
            cats = self.dictionary.categories_for_lemma(verb.lemma.lower())
            if cats:
                category = "|".join(cats)
        return CrossClassSample(
            word_before,
            (pos(first - 1), pos(first - 2)),
            (pos(last + 1), pos(last + 2)),
            context,
            deprel,
            category,
            label,
        )


def default_weights() -> tuple[np.ndarray, float]:
    cat = np.full(N_CATEGORICAL, (6 / 7) / N_CATEGORICAL)
    return cat, 1 / 7


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0 and nv == 0:
        return 0.0
    if nu == 0 or nv == 0:
        return 1.0
    return 1.0 - float(np.dot(u, v)) / (nu * nv)


class CrossClassModel:
    """k-NN over mixed categorical / embedding features."""

    def __init__(self, samples, k: int = 9, categorical_weights=None, embedding_weight=None):
        cat_w, emb_w = default_weights()
        self.cat_weights = np.asarray(categorical_weights if categorical_weights is not None else cat_w)
        self.emb_weight = embedding_weight if embedding_weight is not None else emb_w
        self.k = k
        self.labels = [s.label for s in samples]
        self.cats = np.array([s.categorical() for s in samples], dtype=object).reshape(len(samples), N_CATEGORICAL)
        vecs = np.array([s.context_vector for s in samples], dtype=np.float64)
        if vecs.ndim == 1:
            vecs = vecs.reshape(len(samples), -1)
        norms = np.linalg.norm(vecs, axis=1) if vecs.size else np.zeros(len(samples))
        self.zero = norms == 0
        safe = np.where(self.zero, 1.0, norms)
        self.unit = vecs / safe[:, None] if vecs.size else vecs

    def distances(self, sample: CrossClassSample) -> np.ndarray:
        q = np.array(sample.categorical(), dtype=object)
        cat = ((self.cats != q).astype(np.float64) * self.cat_weights).sum(axis=1)
        qv = np.asarray(sample.context_vector, dtype=np.float64)
        qn = float(np.linalg.norm(qv)) if qv.size else 0.0
        if qn == 0:
            emb = np.where(self.zero, 0.0, 1.0)
        else:
            emb = 1.0 - (self.unit @ (qv / qn)) if self.unit.size else np.zeros(len(self.labels))
            emb = np.where(self.zero, 1.0, emb)
        return cat + self.emb_weight * emb

    def neighbors(self, sample, exclude: int | None = None) -> list[tuple[int, float]]:
        d = self.distances(sample)
        order = np.lexsort((np.arange(len(d)), d))
        if exclude is not None:
            order = order[order != exclude]
        return [(int(i), float(d[i])) for i in order[: self.k]]

    def predict(self, sample, exclude: int | None = None) -> str:
        return vote([(self.labels[i], dist) for i, dist in self.neighbors(sample, exclude)])


def vote(neighbors: list[tuple[str, float]]) -> str:
    """Majority label; ties go to the smallest summed distance, then PER < LOC < ORG."""
    counts = Counter(label for label, _ in neighbors)
    top = max(counts.values())
    tied = [l for l, c in counts.items() if c == top]
    sums = {l: sum(d for lab, d in neighbors if lab == l) for l in tied}
    return min(tied, key=lambda l: (sums[l], CLASS_ORDER.get(l, len(CLASS_ORDER)), l))


def train_cross_class(samples, k: int = 9, **weights) -> CrossClassModel:
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(samples) < k:
        raise ValueError(f"need at least k={k} training samples, got {len(samples)}")
    bad = [s.label for s in samples if s.label not in NE_LABELS]
    if bad:
        raise ValueError(f"sample labels must be PER/LOC/ORG, got {bad[0]!r}")
    return CrossClassModel(samples, k, **weights)


# -- association --------------------------------------------------------------------


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass
class AssociationStats:
    freq: dict[str, int]
    cooccur: dict[tuple[str, str], int]
    n_sentences: int = 0

    def co(self, a: str, b: str) -> int:
        if a == b:
            raise ValueError(f"co-occurrence of {a!r} with itself is undefined")
        return self.cooccur.get(_pair(a, b), 0)


def compute_association_stats(docs, linked) -> AssociationStats:
    freq: Counter = Counter()
    per_sentence: dict[tuple[str, str], set[str]] = defaultdict(set)
    for m in linked:
        if m.status != "linked":
            continue
        freq[m.entity_id] += 1
        per_sentence[m.sentence_key].add(m.entity_id)
    cooccur: Counter = Counter()
    for ents in per_sentence.values():
        for a, b in combinations(sorted(ents), 2):
            cooccur[(a, b)] += 1
    n = sum(len(d.sentences) for d in docs)
    return AssociationStats(dict(freq), dict(cooccur), n)


def association_score(stats: AssociationStats, a: str, b: str) -> float:
    for e in (a, b):
        if stats.freq.get(e, 0) <= 0:
            raise KeyError(f"unknown entity {e!r}")
    co = stats.co(a, b)
    return co / ((stats.freq[a] + stats.freq[b]) / 2)


def pmi_score(stats: AssociationStats, a: str, b: str) -> float:
    """Pointwise mutual information over sentence counts; 0 when the pair never co-occurs."""
    for e in (a, b):
        if stats.freq.get(e, 0) <= 0:
            raise KeyError(f"unknown entity {e!r}")
    co = stats.co(a, b)
    if co == 0 or stats.n_sentences == 0:
        return 0.0
    return math.log2(co * stats.n_sentences / (stats.freq[a] * stats.freq[b]))


SCORERS = {"average-normalized": association_score, "pmi": pmi_score}


# -- disambiguation -------------------------------------------------------------


@dataclass
class DisambiguationResult:
    mentions: list[EntityMention]
    iterations: list[list[tuple[tuple, str]]]  # newly linked (mention key, entity) per round
    cross_class_resolved: int = 0

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)


def candidate_scores(candidates, context, stats, scorer=association_score) -> dict[str, float]:
    scores = {}
    for c in candidates:
        total = 0.0
        for e in context:
            if e == c or stats.co(c, e) == 0:
                continue
            total += scorer(stats, c, e)
        scores[c] = total
    return scores


def pick_candidate(scores: dict[str, float]) -> str | None:
    if not scores:
        return None
    top = max(scores.values())
    if top <= 0:
        return None
    best = [c for c, s in scores.items() if s == top]
    return best[0] if len(best) == 1 else None


def resolve_cross_class(docs, mentions, model, extractor, entity_classes) -> tuple[list[EntityMention], int]:
    sentences = {(d.id, s.id): s for d in docs for s in d.sentences}
    out, resolved = [], 0
    for m in mentions:
        if m.status != "ambiguous":
            out.append(m)
            continue
        classes = {entity_classes[c] for c in m.candidates}
        if len(classes) < 2:
            out.append(m)
            continue
        sample = extractor.extract(sentences[m.sentence_key], m.first_token, m.last_token)
        label = model.predict(sample)
        kept = tuple(c for c in m.candidates if entity_classes[c] == label)
        if not kept:
            out.append(m)  # label contradicts every candidate; leave for manual review
            continue
        resolved += 1
        if len(kept) == 1:
            out.append(replace(m, status="linked", entity_id=kept[0], entity_class=label,
                               candidates=(), method="knn"))
        else:
            out.append(replace(m, entity_class=label, candidates=kept))
    return out, resolved


def disambiguate(docs, mentions, stats, model=None, *, extractor=None, entity_classes=None,
                 max_iterations: int = 10, scorer: str = "average-normalized") -> DisambiguationResult:
    """Resolve ambiguous mentions; see the module docstring for the stages."""
    score_fn = SCORERS[scorer]
    resolved = 0
    mentions = list(mentions)
    if model is not None:
        if extractor is None or entity_classes is None:
            raise ValueError("cross-class resolution needs an extractor and entity classes")
        mentions, resolved = resolve_cross_class(docs, mentions, model, extractor, entity_classes)

    def intra(m):
        if m.status != "ambiguous":
            return False
        if entity_classes is None:
            return m.entity_class is not None
        return len({entity_classes[c] for c in m.candidates}) == 1

    rounds: list[list[tuple[tuple, str]]] = []
    for _ in range(max_iterations):
        context: dict[tuple, set[str]] = defaultdict(set)
        for m in mentions:
            if m.status == "linked":
                context[m.sentence_key].add(m.entity_id)
        pending = [(i, m) for i, m in enumerate(mentions) if intra(m)]
        pending.sort(key=lambda im: (-len(context[im[1].sentence_key]), im[0]))
        new = []
        for i, m in pending:
            ctx = context[m.sentence_key]
            if not ctx:
                continue
            choice = pick_candidate(candidate_scores(m.candidates, ctx, stats, score_fn))
            if choice is not None:
                new.append((i, choice))
        if not new:
            break
        for i, choice in new:
            m = mentions[i]
            mentions[i] = replace(m, status="linked", entity_id=choice, candidates=(), method="association")
        rounds.append([(mentions[i].key, c) for i, c in sorted(new)])
    return DisambiguationResult(mentions, rounds, resolved)


# -- full stage ---------------------------------------------------------------------


def sentence_has_lu(sent: Sentence, dictionary) -> bool:
    return any(t.lemma.lower() in dictionary.units for t in sent.tokens)


def training_samples(docs, mentions, extractor, dictionary=None) -> list[CrossClassSample]:
    sentences = {(d.id, s.id): s for d in docs for s in d.sentences}
    out = []
    for m in mentions:
        if m.status != "linked" or m.method != "direct":
            continue
        sent = sentences[m.sentence_key]
        if dictionary is not None and not sentence_has_lu(sent, dictionary):
            continue
        out.append(extractor.extract(sent, m.first_token, m.last_token, label=m.entity_class))
    return out


def link_corpus(docs, entries, *, dictionary=None, store=None, patterns=None, knn_k: int = 9,
                max_iterations: int = 10, scorer: str = "average-normalized"):
    """Run the three linking stages; returns (mentions, stats dict)."""
    index = SurfaceIndex(entries, patterns)
    mentions = [m for d in docs for m in find_mentions(d, index)]
    extractor = FeatureExtractor(store, dictionary)
    samples = training_samples(docs, mentions, extractor, dictionary)
    model = None
    try:
        model = train_cross_class(samples, knn_k)
    except ValueError as exc:
        log.warning("cross-class resolution disabled: %s", exc)
    stats = compute_association_stats(docs, mentions)
    classes = {e.entity_id: e.entity_class for e in entries}
    result = disambiguate(docs, mentions, stats, model, extractor=extractor, entity_classes=classes,
                          max_iterations=max_iterations, scorer=scorer)
    summary = linking_summary(result, len(samples))
    return result.mentions, summary


def linking_summary(result: DisambiguationResult, n_samples: int) -> dict:
    by_class = {c: {"linked": 0, "ambiguous": 0, "unlinked_ne": 0} for c in NE_LABELS}
    by_method: Counter = Counter()
    for m in result.mentions:
        if m.entity_class in by_class:
            by_class[m.entity_class][m.status] += 1
        if m.method:
            by_method[m.method] += 1
    return {
        "mentions": len(result.mentions),
        "by_class": by_class,
        "by_method": dict(sorted(by_method.items())),
        "training_samples": n_samples,
        "cross_class_resolved": result.cross_class_resolved,
        "iterations": result.n_iterations,
        "linked_per_iteration": [len(r) for r in result.iterations],
    }
