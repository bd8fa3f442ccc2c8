"""Scoring harness for linking, typing, extraction and classification output.

Gold files share the system JSON-lines schema; gold labels live under
``gold_``-prefixed keys (``gold_entity_id``, ``gold_type``, ``gold_event``,
``gold_class``).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .corpus import NE_LABELS

NA = "n/a"


class EvaluationError(ValueError):
    pass


def ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def f1(p: float | None, r: float | None) -> float | None:
    if p is None or r is None:
        return None
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def fmt(x) -> str:
    return NA if x is None else f"{x:.3f}"


@dataclass
class MetricReport:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def precision(self):
        return ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self):
        return ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self):
        return f1(self.precision, self.recall)

    @property
    def true_negative_rate(self):
        return ratio(self.tn, self.tn + self.fp)

    def as_dict(self) -> dict:
        d = {"precision": self.precision, "recall": self.recall, "f1": self.f1,
             "tp": self.tp, "fp": self.fp, "fn": self.fn}
        d.update(self.extra)
        return d


# -- keys and corpus validation -------------------------------------------------


def span_key(r) -> tuple:
    return r["doc"], str(r["sentence"]), int(r["first_token"]), int(r["last_token"])


def sentence_key(r) -> tuple:
    return r["doc"], str(r["sentence"])


def _corpus_index(docs):
    return {(d.id, s.id): len(s.tokens) for d in docs for s in d.sentences}


def check_keys(gold, docs, with_span: bool = True) -> None:
    """Raise EvaluationError for gold keys that do not resolve in ``docs``."""
    if docs is None:
        return
    index = _corpus_index(docs)
    for r in gold:
        k = sentence_key(r)
        if k not in index:
            raise EvaluationError(f"gold key {k} not found in corpus")
        if with_span:
            first, last = int(r["first_token"]), int(r["last_token"])
            if not 1 <= first <= last <= index[k]:
                raise EvaluationError(f"gold span {first}-{last} outside sentence {k}")


# -- linking --------------------------------------------------------------------


def eval_linking(system, gold, docs=None) -> dict[str, MetricReport]:
    """Per-class P/R/F1 of links; a link counts only if span and entity both match."""
    check_keys(gold, docs)
    gold_by_key = {}
    for g in gold:
        gold_by_key[span_key(g)] = (g["gold_entity_id"], g.get("gold_class"))
    reports = {c: MetricReport(extra={"linked": 0, "ambiguous": 0}) for c in NE_LABELS}
    gold_sentences = {k[:2] for k in gold_by_key}
    for s in system:
        cls = s.get("class")
        if cls in reports and s["status"] in ("linked", "ambiguous"):
            reports[cls].extra[s["status"]] += 1
        if s["status"] != "linked" or cls not in reports:
            continue
        if gold_sentences and span_key(s)[:2] not in gold_sentences:
            continue  # outside the annotated sample
        g = gold_by_key.get(span_key(s))
        if g is not None and g[0] == s["entity_id"]:
            reports[cls].tp += 1
        else:
            reports[cls].fp += 1
    system_links = {span_key(s): s.get("entity_id") for s in system if s["status"] == "linked"}
    for k, (eid, gcls) in gold_by_key.items():
        if gcls not in reports:
            continue
        if system_links.get(k) != eid:
            reports[gcls].fn += 1
    return reports


def eval_class_labels(predicted: dict, gold: dict) -> dict[str, MetricReport]:
    """Per-class P/R/F1 for a plain labeling (e.g. cross-class PER/LOC/ORG)."""
    missing = set(gold) - set(predicted)
    if missing:
        raise EvaluationError(f"no prediction for gold key {sorted(missing)[0]}")
    labels = sorted(set(gold.values()) | set(predicted.values()))
    reports = {l: MetricReport() for l in labels}
    for k, g in gold.items():
        p = predicted[k]
        if p == g:
            reports[g].tp += 1
        else:
            reports[p].fp += 1
            reports[g].fn += 1
    return reports


def macro_f1(reports: dict[str, MetricReport]) -> float | None:
    vals = [r.f1 if r.f1 is not None else 0.0 for r in reports.values()]
    return sum(vals) / len(vals) if vals else None


# -- typing -----------------------------------------------------------------------


def typing_key(r) -> tuple:
    return r["doc"], str(r["sentence"]), int(r["token"])


@dataclass
class TypingReport:
    total: int
    hits: dict[int, int]

    def accuracy(self, k: int) -> float | None:
        return ratio(self.hits[k], self.total)


def eval_typing(system, gold, labels=None, ks=(1, 3)) -> TypingReport:
    """Accuracy@k of semantic typing.

    @1 compares the thresholded prediction (which may be OTHER); @k>1 also
    counts a hit when the gold type is among the top-k centroid labels.
    """
    sys_by_key = {typing_key(s): s for s in system}
    allowed = None if labels is None else set(labels) | {"OTHER"}
    hits = {k: 0 for k in ks}
    for g in gold:
        label = g["gold_type"]
        if allowed is not None and label not in allowed:
            raise EvaluationError(f"unknown gold label {label!r}")
        s = sys_by_key.get(typing_key(g))
        if s is None:
            raise EvaluationError(f"no system record for gold key {typing_key(g)}")
        top1 = s["prediction"] == label
        ranked = [r[0] if isinstance(r, (list, tuple)) else r for r in s.get("ranking", ())]
        for k in ks:
            if top1 or (k > 1 and label in ranked[:k]):
                hits[k] += 1
    return TypingReport(len(gold), hits)


# -- extraction -------------------------------------------------------------------


def eval_extraction(system, gold, docs=None) -> MetricReport:
    """Sentence-level event-hood: a sentence is predicted positive when it has an event."""
    check_keys(gold, docs, with_span=False)
    predicted = {sentence_key(s) for s in system}
    rep = MetricReport()
    for g in gold:
        pos = bool(g["gold_event"])
        pred = sentence_key(g) in predicted
        if pred and pos:
            rep.tp += 1
        elif pred:
            rep.fp += 1
        elif pos:
            rep.fn += 1
        else:
            rep.tn += 1
    return rep


# -- classification -----------------------------------------------------------


def event_key(r) -> tuple:
    return r["doc"], str(r["sentence"]), tuple(r["anchor_span"])


@dataclass
class ClassificationReport:
    correct: dict[str, int]
    total: dict[str, int]

    def precision(self, split: str | None = None) -> float | None:
        if split is None:
            return ratio(sum(self.correct.values()), sum(self.total.values()))
        return ratio(self.correct.get(split, 0), self.total.get(split, 0))


def eval_classification(system, gold, split_by_confidence: bool = True) -> ClassificationReport:
    sys_by_key = {event_key(s): s for s in system}
    correct: dict[str, int] = defaultdict(int)
    total: dict[str, int] = defaultdict(int)
    for g in gold:
        s = sys_by_key.get(event_key(g))
        if s is None:
            raise EvaluationError(f"gold mention {event_key(g)} was not extracted by the system")
        split = s["confidence"] if split_by_confidence else "all"
        total[split] += 1
        if s["event_class"] == g["gold_class"]:
            correct[split] += 1
    return ClassificationReport(dict(correct), dict(total))


# -- rendering ----------------------------------------------------------------------


def linking_tsv(reports: dict[str, MetricReport]) -> str:
    lines = ["class\tprecision\trecall\tf1\tlinked\tambiguous"]
    for c, r in reports.items():
        lines.append(f"{c}\t{fmt(r.precision)}\t{fmt(r.recall)}\t{fmt(r.f1)}\t"
                     f"{r.extra.get('linked', 0)}\t{r.extra.get('ambiguous', 0)}")
    return "\n".join(lines) + "\n"


def typing_tsv(rep: TypingReport) -> str:
    lines = ["rank\tcorrect\twrong\taccuracy"]
    for k in sorted(rep.hits):
        lines.append(f"@{k}\t{rep.hits[k]}\t{rep.total - rep.hits[k]}\t{fmt(rep.accuracy(k))}")
    return "\n".join(lines) + "\n"


def extraction_tsv(rep: MetricReport) -> str:
    return (
        "metric\tvalue\n"
        f"precision\t{fmt(rep.precision)}\n"
        f"recall\t{fmt(rep.recall)}\n"
        f"true_negatives\t{fmt(rep.true_negative_rate)}\n"
        f"f1\t{fmt(rep.f1)}\n"
    )


def classification_tsv(rep: ClassificationReport) -> str:
    lines = ["split\tcorrect\ttotal\tprecision"]
    for split in sorted(rep.total):
        lines.append(f"{split}\t{rep.correct.get(split, 0)}\t{rep.total[split]}\t{fmt(rep.precision(split))}")
    lines.append(f"all\t{sum(rep.correct.values())}\t{sum(rep.total.values())}\t{fmt(rep.precision())}")
    return "\n".join(lines) + "\n"
