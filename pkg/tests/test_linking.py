import random
from collections import Counter, defaultdict
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from histevents.corpus import parse_corpus
from histevents.linking import (AssociationStats, CrossClassSample, EntityMention, SurfaceIndex,
                                association_score, compute_association_stats, cosine_distance,
                                disambiguate, find_mentions, generate_person_patterns, link_corpus,
                                pick_candidate, pmi_score, train_cross_class, vote)
from histevents.resources import GazetteerEntry

from conftest import conllu


def by_id(entries, eid):
    return next(e for e in entries if e.entity_id == eid)


# -- surface forms ------------------------------------------------------------------


def test_person_patterns(entries, patterns):
    assert len(patterns) == 26
    forms = generate_person_patterns(by_id(entries, "P001"), patterns)
    assert {"Duccio Galimberti", "Tancredi Galimberti", "Galimberti", "Duccio",
            "Tancredi Galimberti detto Duccio", 'Tancredi "Duccio" Galimberti'} <= forms
    assert len(forms) <= 26
    # fields that are missing drop every pattern that needs them
    aimo = generate_person_patterns(by_id(entries, "P003"), patterns)
    assert aimo == {"Renato Aimo", "Aimo Renato", "Renato", "Aimo"}
    with pytest.raises(ValueError):
        generate_person_patterns(by_id(entries, "L001"), patterns)


def test_cross_class_surface(entries, patterns):
    index = SurfaceIndex(entries, patterns)
    assert index.lookup("Siracusa") == {"P002", "L006"}
    assert index.forms["Siracusa"].cross_class
    assert index.lookup("Renato") == {"P003", "P004", "P005"}
    assert index.lookup("Val Po") == {"L003"}
    assert index.lookup("Val  Po") == {"L003"}  # whitespace-agnostic key
    assert index.lookup("torino") == frozenset()
    assert index.lookup("torino", sentence_initial=True) == {"L005"}


def test_longest_match_wins(salire_docs, entries, patterns):
    index = SurfaceIndex(entries, patterns)
    mentions = find_mentions(salire_docs[0], index)
    spans = {(m.first_token, m.last_token): m for m in mentions}
    assert spans[(20, 21)].entity_id == "L003"  # "Valle Po", not "Po"
    assert (21, 21) not in spans
    assert spans[(8, 11)].status == "unlinked_ne"
    assert spans[(8, 11)].ne_label == "DATE"


def test_unlinked_ne_run():
    text = conllu("D", [("s", ["Vide vedere VERB 0 root", "Mario Mario PROPN 1 obj NE=PER",
                               "Neri Neri PROPN 2 flat NE=PER"])])
    [m] = find_mentions(parse_corpus(text)[0], SurfaceIndex([GazetteerEntry("L1", "LOC", "Cuneo")]))
    assert (m.first_token, m.last_token, m.status, m.entity_class) == (2, 3, "unlinked_ne", "PER")


def test_mention_record_round_trip():
    m = EntityMention("D", "s", 1, 2, "Nino Costa", "ambiguous", None, "PER", ("P006", "P007"))
    assert EntityMention.from_record(m.to_record()) == m


# -- k-NN -----------------------------------------------------------------------------


def sample(word="e", label=None, vec=(1.0, 0.0), deprel="nsubj", cat="movement", pos=("CCONJ", "PROPN")):
    return CrossClassSample(word, pos, ("ADP", "NUM"), np.array(vec, dtype=float), deprel, cat, label)


def brute_distance(a, b):
    cats = sum((6 / 7) / 7 for x, y in zip(a.categorical(), b.categorical()) if x != y)
    u, v = a.context_vector, b.context_vector
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 and nv == 0:
        emb = 0.0
    elif nu == 0 or nv == 0:
        emb = 1.0
    else:
        emb = 1 - float(u @ v) / (nu * nv)
    return cats + emb / 7


def brute_predict(samples, query, k, exclude=None):
    scored = sorted(
        ((brute_distance(query, s), i) for i, s in enumerate(samples) if i != exclude)
    )[:k]
    counts = Counter(samples[i].label for _, i in scored)
    top = max(counts.values())
    order = {"PER": 0, "LOC": 1, "ORG": 2}

    def key(label):
        return sum(d for d, i in scored if samples[i].label == label), order[label]

    return min((l for l, c in counts.items() if c == top), key=key)


def test_all_identical_training_samples():
    model = train_cross_class([sample(label="ORG") for _ in range(9)], k=9)
    assert model.predict(sample()) == "ORG"
    assert model.predict(sample(word="da", vec=(0.0, 1.0))) == "ORG"


def test_separable_clusters_leave_one_out():
    per = [sample("e", "PER", (1.0, 0.1 * i)) for i in range(10)]
    loc = [sample("da", "LOC", (0.1 * i, 1.0), deprel="nmod", pos=("ADP", "VERB")) for i in range(10)]
    samples = per + loc
    model = train_cross_class(samples, k=9)
    hits = sum(model.predict(s, exclude=i) == s.label for i, s in enumerate(samples))
    assert hits / len(samples) == 1.0


def test_too_few_samples_and_bad_labels():
    with pytest.raises(ValueError, match="at least"):
        train_cross_class([sample(label="PER")] * 3, k=9)
    with pytest.raises(ValueError, match="PER/LOC/ORG"):
        train_cross_class([sample(label="DATE")], k=1)


def test_vote_tie_rule():
    # 1-1-1: smallest summed distance wins
    assert vote([("ORG", 0.1), ("PER", 0.3), ("LOC", 0.2)]) == "ORG"
    # equal sums fall back to PER < LOC < ORG
    assert vote([("ORG", 0.2), ("LOC", 0.2), ("PER", 0.5), ("PER", 0.5), ("LOC", 0.8), ("ORG", 0.8)]) == "PER"
    assert vote([("ORG", 0.2), ("LOC", 0.2)]) == "LOC"


def test_cosine_distance_zero_vectors():
    z, v = np.zeros(3), np.array([1.0, 2.0, 0.0])
    assert cosine_distance(z, z) == 0.0
    assert cosine_distance(z, v) == 1.0
    assert cosine_distance(v, 2 * v) == pytest.approx(0.0)


_labels = st.sampled_from(["PER", "LOC", "ORG"])
_small = st.sampled_from(["a", "b"])
_vecs = st.sampled_from([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (-1.0, 0.0)])


@st.composite
def samples_st(draw, labeled=True):
    return CrossClassSample(draw(_small), (draw(_small), "X"), ("Y", draw(_small)),
                            np.array(draw(_vecs)), draw(_small), draw(_small),
                            draw(_labels) if labeled else None)


@settings(max_examples=150, deadline=None)
@given(st.lists(samples_st(), min_size=9, max_size=25), samples_st(labeled=False),
       st.sampled_from([1, 3, 5, 9]))
def test_knn_matches_brute_force(samples, query, k):
    model = train_cross_class(samples, k=k)
    assert model.predict(query) == brute_predict(samples, query, k)
    for i, s in enumerate(samples[:3]):
        assert model.predict(s, exclude=i) == brute_predict(samples, s, k, exclude=i)


# -- association ----------------------------------------------------------------


def corpus_of(n_sentences, doc="D"):
    return parse_corpus(conllu(doc, [(f"s{i}", ["x x X 0 root"]) for i in range(n_sentences)]))


def linked(sent, eid, pos=1):
    return EntityMention("D", f"s{sent}", pos, pos, eid, "linked", eid, "PER", method="direct")


def ambiguous(sent, cands, pos=9):
    return EntityMention("D", f"s{sent}", pos, pos, "?", "ambiguous", None, "PER", tuple(sorted(cands)))


def brute_stats(mentions):
    freq = Counter(m.entity_id for m in mentions if m.status == "linked")
    sets = defaultdict(set)
    for m in mentions:
        if m.status == "linked":
            sets[m.sentence_id].add(m.entity_id)
    co = {}
    ents = sorted(freq)
    for a, b in combinations(ents, 2):
        co[(a, b)] = sum(1 for s in sets.values() if a in s and b in s)
    return freq, co


def random_linked_corpus(rng, n_sentences=50, n_entities=8):
    mentions = []
    for s in range(n_sentences):
        for pos in range(1, rng.randint(0, 4) + 1):
            mentions.append(linked(s, f"E{rng.randrange(n_entities)}", pos))
    return mentions


@pytest.mark.parametrize("seed", range(5))
def test_association_stats_against_brute_force(seed):
    rng = random.Random(seed)
    mentions = random_linked_corpus(rng)
    stats = compute_association_stats(corpus_of(50), mentions)
    freq, co = brute_stats(mentions)
    assert stats.freq == dict(freq)
    assert stats.n_sentences == 50
    for (a, b), n in co.items():
        assert stats.co(a, b) == stats.co(b, a) == n
        score = association_score(stats, a, b)
        assert score == pytest.approx(n / ((freq[a] + freq[b]) / 2))
        assert 0.0 <= score <= 1.0
        assert score == association_score(stats, b, a)


def test_association_score_examples():
    stats = AssociationStats({"A": 2, "B": 2, "C": 1, "D": 5, "E": 3}, {("A", "B"): 2, ("C", "D"): 1}, 10)
    assert association_score(stats, "A", "B") == 1.0
    assert association_score(stats, "C", "D") == pytest.approx(1 / 3)
    assert association_score(stats, "A", "E") == 0.0
    with pytest.raises(ValueError):
        stats.co("A", "A")
    with pytest.raises(KeyError):
        association_score(stats, "A", "Z")
    assert pmi_score(stats, "A", "B") == pytest.approx(np.log2(2 * 10 / 4))
    assert pmi_score(stats, "A", "E") == 0.0


def test_pick_candidate():
    assert pick_candidate({"A": 0.5, "B": 0.2}) == "A"
    assert pick_candidate({"A": 0.5, "B": 0.5}) is None
    assert pick_candidate({"A": 0.0, "B": 0.0}) is None
    assert pick_candidate({}) is None


# -- disambiguation ---------------------------------------------------------------


def brute_disambiguate(mentions, max_iterations):
    """Jacobi rounds from scratch: every round scores against the previous round's links."""
    freq, co = brute_stats(mentions)
    state = list(mentions)
    rounds = 0
    for _ in range(max_iterations):
        ctx = defaultdict(set)
        for m in state:
            if m.status == "linked":
                ctx[m.sentence_id].add(m.entity_id)
        new = {}
        for i, m in enumerate(state):
            if m.status != "ambiguous" or not ctx[m.sentence_id]:
                continue
            scores = {}
            for c in m.candidates:
                total = 0.0
                for e in ctx[m.sentence_id]:
                    n = co.get(tuple(sorted((c, e))), 0) if c != e else 0
                    if n:
                        total += n / ((freq[c] + freq[e]) / 2)
                scores[c] = total
            best = max(scores.values())
            winners = [c for c, v in scores.items() if v == best]
            if best > 0 and len(winners) == 1:
                new[i] = winners[0]
        if not new:
            break
        for i, c in new.items():
            state[i] = EntityMention(*state[i].key, state[i].surface, "linked", c, "PER", (), None, "association")
        rounds += 1
    return {m.key: m.entity_id for m in state if m.status == "linked"}, rounds


@st.composite
def small_corpora(draw):
    n = draw(st.integers(1, 10))
    ents = [f"E{i}" for i in range(6)]
    mentions = []
    for s in range(n):
        for pos in range(1, draw(st.integers(0, 3)) + 1):
            mentions.append(linked(s, draw(st.sampled_from(ents)), pos))
        for pos in range(10, 10 + draw(st.integers(0, 2))):
            cands = draw(st.sets(st.sampled_from(ents), min_size=2, max_size=3))
            mentions.append(ambiguous(s, cands, pos))
    return n, mentions


@settings(max_examples=200, deadline=None)
@given(small_corpora(), st.integers(1, 4))
def test_disambiguation_matches_oracle(corpus, max_iterations):
    n, mentions = corpus
    docs = corpus_of(n)
    stats = compute_association_stats(docs, mentions)
    result = disambiguate(docs, mentions, stats, max_iterations=max_iterations)
    got = {m.key: m.entity_id for m in result.mentions if m.status == "linked"}
    expected, rounds = brute_disambiguate(mentions, max_iterations)
    assert got == expected
    assert result.n_iterations == rounds <= max_iterations


@settings(max_examples=100, deadline=None)
@given(small_corpora())
def test_disambiguation_is_monotone(corpus):
    n, mentions = corpus
    docs = corpus_of(n)
    stats = compute_association_stats(docs, mentions)
    before = {m.key: m.entity_id for m in mentions if m.status == "linked"}
    result = disambiguate(docs, mentions, stats, max_iterations=10)
    after = {m.key: m.entity_id for m in result.mentions if m.status == "linked"}
    assert before.items() <= after.items()
    assert all(len(r) > 0 for r in result.iterations)
    assert len(before) + sum(len(r) for r in result.iterations) == len(after)
    for m in result.mentions:
        if m.status == "linked" and m.key not in before:
            original = next(o for o in mentions if o.key == m.key)
            assert m.entity_id in original.candidates


def test_zero_context_stays_ambiguous():
    mentions = [linked(0, "A"), linked(0, "B"), ambiguous(1, {"A", "B"})]
    docs = corpus_of(2)
    result = disambiguate(docs, mentions, compute_association_stats(docs, mentions))
    assert result.mentions[2].status == "ambiguous"
    assert result.n_iterations == 0


def test_tied_candidates_stay_ambiguous():
    mentions = [linked(0, "A"), linked(0, "C"), linked(1, "B"), linked(1, "C"),
                linked(2, "C", 1), ambiguous(2, {"A", "B"})]
    docs = corpus_of(3)
    result = disambiguate(docs, mentions, compute_association_stats(docs, mentions))
    assert result.mentions[-1].status == "ambiguous"


def test_chained_resolution_takes_two_rounds():
    # s2: X resolves to A via C; then Y resolves to B via the newly linked A
    mentions = [linked(0, "A"), linked(0, "C"), linked(1, "A"), linked(1, "B"), linked(3, "D"),
                linked(2, "C", 1), ambiguous(2, {"A", "D"}, 5), ambiguous(2, {"B", "E"}, 6)]
    docs = corpus_of(4)
    stats = compute_association_stats(docs, mentions)
    result = disambiguate(docs, mentions, stats)
    assert result.n_iterations == 3 - 1
    assert [m.entity_id for m in result.mentions[-2:]] == ["A", "B"]
    one = disambiguate(docs, mentions, stats, max_iterations=1)
    assert [m.status for m in one.mentions[-2:]] == ["linked", "ambiguous"]


# -- full stage on the diary fixture -----------------------------------------


def test_diary_page(diary_docs, entries, dictionary, store):
    mentions, summary = link_corpus(diary_docs, entries, dictionary=dictionary, store=store, knn_k=9)
    first = {m.surface: m for m in mentions if m.sentence_id == "d1-s1"}
    assert (first["Siracusa"].entity_id, first["Siracusa"].method) == ("P002", "knn")
    assert (first["Renato"].entity_id, first["Renato"].method) == ("P003", "association")
    assert first["Nino"].entity_id == "P007"
    last = {m.surface: m for m in mentions if m.sentence_id == "d1-s8"}
    assert last["Siracusa"].entity_id == "L006"
    assert summary["training_samples"] == 15
    assert summary["cross_class_resolved"] == 2
    assert summary["linked_per_iteration"] == [2]


def test_knn_disabled_when_too_few_samples(diary_docs, entries, dictionary, store, caplog):
    mentions, summary = link_corpus(diary_docs, entries, dictionary=dictionary, store=store, knn_k=21)
    assert "cross-class resolution disabled" in caplog.text
    first = {m.surface: m for m in mentions if m.sentence_id == "d1-s1"}
    assert first["Siracusa"].status == "ambiguous"
    assert set(first["Siracusa"].candidates) == {"P002", "L006"}
