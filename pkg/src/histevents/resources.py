"""Loaders for gazetteers, the semantic-type dictionary, the event-predicate
pattern dictionary (with its class registry) and word embeddings.

Every loader validates its input and raises :class:`ResourceError` naming
the file and line of the first problem found.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import NE_LABELS, TIMEX_LABELS

log = logging.getLogger(__name__)

RESERVED_TYPES = frozenset(NE_LABELS + TIMEX_LABELS + ("OTHER",))
ARG_DEPRELS = ("nsubj", "nsubjpass", "dobj", "nmod", "nummod")
NOMINAL_DEPRELS = ("nmod", "nummod")
LU_KINDS = ("verbal", "nominal", "multiword_verbal")
CATEGORIES = ("conflict", "movement", "membership")
GAZETTEER_COLUMNS = ("entity_id", "class", "name", "surname", "nickname", "variants")


class ResourceError(ValueError):
    pass


def _fail(path, lineno, message):
    raise ResourceError(f"{path}:{lineno}: {message}")


def _rows(path):
    """Yield (lineno, columns) for non-blank, non-comment TSV lines."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def _opt(value: str) -> str | None:
    value = value.strip()
    return None if value in ("", "_") else value


# -- gazetteers ---------------------------------------------------------------


@dataclass(frozen=True)
class GazetteerEntry:
    entity_id: str
    entity_class: str
    name: str | None = None
    surname: str | None = None
    nickname: str | None = None
    variants: tuple[str, ...] = ()

    def __post_init__(self):
        if self.entity_class not in NE_LABELS:
            raise ValueError(f"{self.entity_id}: bad entity class {self.entity_class!r}")
        if not (self.name or self.surname or self.nickname or self.variants):
            raise ValueError(f"{self.entity_id}: no identity field")
        if self.entity_class != "PER" and (self.surname or self.nickname):
            raise ValueError(f"{self.entity_id}: surname/nickname only allowed for PER")

    @property
    def display_name(self) -> str:
        parts = [p for p in (self.name, self.surname) if p]
        if parts:
            return " ".join(parts)
        return self.nickname or self.variants[0]


def load_gazetteer(path, entity_class: str) -> list[GazetteerEntry]:
    entries = []
    for lineno, cols in _rows(path):
        if cols and cols[0] == "entity_id":
            continue  # header
        if len(cols) != len(GAZETTEER_COLUMNS):
            _fail(path, lineno, f"expected {len(GAZETTEER_COLUMNS)} columns, got {len(cols)}")
        eid, cls, name, surname, nick, variants = (c.strip() for c in cols)
        if not eid:
            _fail(path, lineno, "missing entity_id")
        if cls != entity_class:
            _fail(path, lineno, f"class {cls!r} in a {entity_class} gazetteer")
        vs = tuple(v.strip() for v in variants.split("|") if v.strip() not in ("", "_"))
        try:
            entries.append(
                GazetteerEntry(eid, cls, _opt(name), _opt(surname), _opt(nick), vs)
            )
        except ValueError as exc:
            _fail(path, lineno, str(exc))
    return entries


def load_gazetteers(per_path, loc_path, org_path) -> list[GazetteerEntry]:
    entries: list[GazetteerEntry] = []
    seen: dict[str, str] = {}
    for path, cls in ((per_path, "PER"), (loc_path, "LOC"), (org_path, "ORG")):
        for e in load_gazetteer(path, cls):
            if e.entity_id in seen:
                raise ResourceError(
                    f"{path}: duplicate entity_id {e.entity_id!r} (first seen in {seen[e.entity_id]})"
                )
            seen[e.entity_id] = str(path)
            entries.append(e)
    counts = Counter(e.entity_class for e in entries)
    log.info("gazetteers: %d PER, %d LOC, %d ORG", counts["PER"], counts["LOC"], counts["ORG"])
    return entries


def gazetteer_counts(entries) -> tuple[int, int, int]:
    c = Counter(e.entity_class for e in entries)
    return c["PER"], c["LOC"], c["ORG"]


def dump_gazetteer(entries, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(GAZETTEER_COLUMNS) + "\n")
        for e in entries:
            row = [e.entity_id, e.entity_class, e.name or "_", e.surname or "_",
                   e.nickname or "_", "|".join(e.variants) or "_"]
            f.write("\t".join(row) + "\n")


# -- semantic types -------------------------------------------------------------


@dataclass(frozen=True)
class SemanticTypeDictionary:
    entries: dict[str, frozenset[str]]

    @property
    def labels(self) -> frozenset[str]:
        return frozenset(self.entries)

    @property
    def word_count(self) -> int:
        return sum(len(ws) for ws in self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)


def load_semantic_types(path) -> SemanticTypeDictionary:
    entries: dict[str, set[str]] = {}
    for lineno, cols in _rows(path):
        if len(cols) != 2:
            _fail(path, lineno, f"expected 2 columns (type_label, word), got {len(cols)}")
        label, word = cols[0].strip(), cols[1].strip()
        if not label or not word:
            _fail(path, lineno, "empty type label or word")
        if label in RESERVED_TYPES:
            _fail(path, lineno, f"reserved label {label!r} cannot carry a centroid")
        entries.setdefault(label, set()).add(word)
    types = SemanticTypeDictionary({k: frozenset(v) for k, v in entries.items()})
    log.info("semantic types: %d labels, %d words", len(types), types.word_count)
    return types


def dump_semantic_types(types: SemanticTypeDictionary, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for label in sorted(types.entries):
            for word in sorted(types.entries[label]):
                f.write(f"{label}\t{word}\n")


# -- pattern dictionary -------------------------------------------------------


@dataclass(frozen=True)
class ArgumentPattern:
    deprel: str
    semantic_type: str
    role: str
    preposition: str | None = None

    def __post_init__(self):
        if self.deprel not in ARG_DEPRELS:
            raise ValueError(f"unsupported deprel {self.deprel!r}")
        if self.preposition is not None and self.deprel != "nmod":
            raise ValueError(f"preposition on non-nmod pattern ({self.deprel})")

    def __str__(self):
        if self.preposition:
            return f"{self.deprel} :: [{self.preposition} [{self.semantic_type}]] -> {self.role}"
        return f"{self.deprel} :: {self.semantic_type} -> {self.role}"


@dataclass(frozen=True)
class LexicalUnit:
    lemmas: tuple[str, ...]
    kind: str
    classes: dict[str, tuple[ArgumentPattern, ...]] = field(hash=False)

    @property
    def key(self) -> tuple[tuple[str, ...], str]:
        return self.lemmas, self.kind

    @property
    def label(self) -> str:
        return " ".join(self.lemmas)

    def roles(self, event_class: str) -> set[str]:
        return {p.role for p in self.classes[event_class]}


@dataclass
class PatternDictionary:
    units: dict[str, list[LexicalUnit]]
    class_registry: dict[str, str]

    def __post_init__(self):
        referenced = {c for lu in self.all_units() for c in lu.classes}
        missing = referenced - set(self.class_registry)
        orphans = set(self.class_registry) - referenced
        if missing:
            raise ResourceError(f"event classes missing from registry: {sorted(missing)}")
        if orphans:
            raise ResourceError(f"registry classes never used by a lexical unit: {sorted(orphans)}")

    def all_units(self) -> list[LexicalUnit]:
        return [lu for group in self.units.values() for lu in group]

    def lookup(self, lemmas, kind: str | None = None) -> LexicalUnit | None:
        lemmas = tuple(lemmas)
        for lu in self.units.get(lemmas[0], ()):
            if lu.lemmas == lemmas and (kind is None or lu.kind == kind):
                return lu
        return None

    @property
    def roles(self) -> set[str]:
        return {p.role for lu in self.all_units() for ps in lu.classes.values() for p in ps}

    def categories_for_lemma(self, lemma: str) -> list[str]:
        cats = set()
        for lu in self.units.get(lemma, ()):
            if len(lu.lemmas) == 1:
                cats.update(self.class_registry[c] for c in lu.classes)
        return sorted(cats)

    def summary(self) -> dict:
        kinds = Counter(lu.kind for lu in self.all_units())
        return {
            "roots": len(self.all_units()),
            "classes": len(self.class_registry),
            "verbal": kinds["verbal"],
            "nominal": kinds["nominal"],
            "multiword_verbal": kinds["multiword_verbal"],
        }


def load_class_registry(path) -> dict[str, str]:
    registry: dict[str, str] = {}
    for lineno, cols in _rows(path):
        if len(cols) != 2:
            _fail(path, lineno, f"expected 2 columns (event_class, category), got {len(cols)}")
        cls, cat = cols[0].strip(), cols[1].strip()
        if cat not in CATEGORIES:
            _fail(path, lineno, f"unknown category {cat!r}; expected one of {CATEGORIES}")
        if cls in registry:
            _fail(path, lineno, f"duplicate event class {cls!r}")
        registry[cls] = cat
    return registry


_LU_RE = re.compile(r"^LU\s+(\S+)\s+(\S+)\s*$")
_CLASS_RE = re.compile(r"^CLASS\s+(\S+)\s*$")
_PREP_PATTERN_RE = re.compile(r"^(\S+)\s*::\s*\[\s*(\S+)\s*\[\s*([^\]\s]+)\s*\]\s*\]\s*->\s*(\S+)$")
_BARE_PATTERN_RE = re.compile(r"^(\S+)\s*::\s*\[?\s*([^\]\s\[]+)\s*\]?\s*->\s*(\S+)$")


def parse_pattern(text: str) -> ArgumentPattern:
    """Parse ``nsubj :: PER -> Mover`` or ``nmod :: [da [LOC]] -> Source``."""
    text = text.strip()
    m = _PREP_PATTERN_RE.match(text)
    if m:
        deprel, prep, stype, role = m.groups()
        return ArgumentPattern(deprel, stype, role, prep.lower())
    m = _BARE_PATTERN_RE.match(text)
    if m:
        deprel, stype, role = m.groups()
        return ArgumentPattern(deprel, stype, role)
    raise ValueError(f"cannot parse pattern {text!r}")


def load_pattern_dictionary(path, registry_path, known_types=None) -> PatternDictionary:
    """Read the pattern DSL and its class registry.

    ``known_types`` is the set of centroid-bearing type labels; when given,
    every pattern type must be one of them or an NE/TIMEX label.
    """
    registry = load_class_registry(registry_path)
    allowed = None if known_types is None else set(known_types) | set(NE_LABELS) | set(TIMEX_LABELS)

    units: dict[str, list[LexicalUnit]] = {}
    seen_keys: set = set()
    current: tuple | None = None  # (lemmas, kind, classes, lineno)
    current_class: str | None = None

    def close():
        if current is None:
            return
        lemmas, kind, classes, lineno = current
        if not classes:
            _fail(path, lineno, f"lexical unit {' '.join(lemmas)!r} has no classes")
        for cls, pats in classes.items():
            if not pats:
                _fail(path, lineno, f"class {cls} of {' '.join(lemmas)!r} has no patterns")
        lu = LexicalUnit(lemmas, kind, {c: tuple(p) for c, p in classes.items()})
        units.setdefault(lemmas[0], []).append(lu)

    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("LU ") or line == "LU":
                close()
                m = _LU_RE.match(line)
                if not m:
                    _fail(path, lineno, f"malformed LU line {line!r}")
                lemmas = tuple(l.lower() for l in m.group(1).split("+"))
                kind = m.group(2)
                if kind not in LU_KINDS:
                    _fail(path, lineno, f"unknown LU kind {kind!r}")
                if (kind == "multiword_verbal") != (len(lemmas) > 1):
                    _fail(path, lineno, f"{kind} LU with {len(lemmas)} lemma(s)")
                if (lemmas, kind) in seen_keys:
                    _fail(path, lineno, f"duplicate lexical unit {m.group(1)} {kind}")
                seen_keys.add((lemmas, kind))
                current = (lemmas, kind, {}, lineno)
                current_class = None
            elif line.startswith("CLASS"):
                m = _CLASS_RE.match(line)
                if not m or current is None:
                    _fail(path, lineno, f"CLASS outside a lexical unit: {line!r}")
                current_class = m.group(1)
                if current_class not in registry:
                    _fail(path, lineno, f"event class {current_class!r} not in registry")
                if current_class in current[2]:
                    _fail(path, lineno, f"class {current_class} repeated in one lexical unit")
                current[2][current_class] = []
            else:
                if current is None or current_class is None:
                    _fail(path, lineno, "pattern outside a CLASS block")
                try:
                    pat = parse_pattern(line)
                except ValueError as exc:
                    _fail(path, lineno, str(exc))
                if allowed is not None and pat.semantic_type not in allowed:
                    _fail(path, lineno, f"unknown semantic type {pat.semantic_type!r}")
                if current[1] == "nominal" and pat.deprel not in NOMINAL_DEPRELS:
                    _fail(path, lineno, f"nominal lexical unit with {pat.deprel} pattern")
                current[2][current_class].append(pat)
    close()
    try:
        dictionary = PatternDictionary(units, registry)
    except ResourceError as exc:
        raise ResourceError(f"{path}: {exc}") from None
    log.info("pattern dictionary: %s", dictionary.summary())
    return dictionary


def dump_pattern_dictionary(dictionary: PatternDictionary, path, registry_path=None) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for lu in dictionary.all_units():
            f.write(f"LU {'+'.join(lu.lemmas)} {lu.kind}\n")
            for cls, pats in lu.classes.items():
                f.write(f"  CLASS {cls}\n")
                for p in pats:
                    f.write(f"    {p}\n")
    if registry_path is not None:
        with open(registry_path, "w", encoding="utf-8") as f:
            for cls, cat in dictionary.class_registry.items():
                f.write(f"{cls}\t{cat}\n")


# -- embeddings ---------------------------------------------------------------


class EmbeddingStore:
    """Word vectors keyed by lowercased word."""

    def __init__(self, vectors: dict[str, np.ndarray], dimension: int | None = None):
        if dimension is None:
            dimension = len(next(iter(vectors.values()))) if vectors else 0
        for w, v in vectors.items():
            if len(v) != dimension:
                raise ResourceError(f"vector for {w!r} has dimension {len(v)}, expected {dimension}")
        self.dimension = dimension
        self.vectors = vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.vectors

    def get(self, word: str) -> np.ndarray | None:
        return self.vectors.get(word.lower())


def load_embeddings(path, vocabulary_filter=None) -> EmbeddingStore:
    keep = None if vocabulary_filter is None else {w.lower() for w in vocabulary_filter}
    vectors: dict[str, np.ndarray] = {}
    dimension = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue  # "<count> <dim>" header
            word, values = parts[0].lower(), parts[1:]
            if dimension is None:
                dimension = len(values)
            elif len(values) != dimension:
                raise ResourceError(
                    f"{path}:{lineno}: vector for {parts[0]!r} has {len(values)} values, expected {dimension}"
                )
            if keep is not None and word not in keep:
                continue
            if word in vectors:
                continue  # first occurrence wins
            try:
                vectors[word] = np.asarray(values, dtype=np.float64)
            except ValueError:
                raise ResourceError(f"{path}:{lineno}: non-numeric value in vector for {parts[0]!r}") from None
    return EmbeddingStore(vectors, dimension or 0)


def dump_embeddings(store: EmbeddingStore, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(store)} {store.dimension}\n")
        for w, v in store.vectors.items():
            f.write(w + " " + " ".join(repr(float(x)) for x in v) + "\n")


def resolve(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise ResourceError(f"resource not found: {p}")
    return p
