from pathlib import Path

import pytest

from histevents.corpus import parse_corpus, read_corpus
from histevents.linking import load_person_patterns
from histevents.resources import (load_embeddings, load_gazetteers, load_pattern_dictionary,
                                  load_semantic_types)
from histevents.semtypes import build_centroids

FIXTURES = Path(__file__).parent / "fixtures"


def conllu(doc_id, sentences):
    """Build CoNLL-U text from compact rows: ``"form lemma UPOS head deprel [MISC]"``."""
    out = [f"# newdoc id = {doc_id}"]
    for sent_id, rows in sentences:
        out.append(f"# sent_id = {sent_id}")
        for i, row in enumerate(rows, 1):
            parts = row.split()
            form, lemma, upos, head, deprel = parts[:5]
            misc = parts[5] if len(parts) > 5 else "_"
            out.append("\t".join([str(i), form, lemma, upos, "_", "_", head, deprel, "_", misc]))
        out.append("")
    return "\n".join(out) + "\n"


# Four accounts of the same arrest plus one unrelated event.
GALIMBERTI = "".join([
    conllu("G1", [("g1-s1", [
        "I il DET 2 det",
        "fascisti fascista NOUN 3 nsubj",
        "catturarono catturare VERB 0 root",
        "Duccio Duccio PROPN 3 obj NE=PER",
        "Galimberti Galimberti PROPN 4 flat:name NE=PER",
        "a a ADP 7 case",
        "Torino Torino PROPN 3 obl NE=LOC",
        ". . PUNCT 3 punct",
    ])]),
    conllu("G2", [("g2-s1", [
        "Galimberti Galimberti PROPN 3 nsubj:pass NE=PER",
        "fu essere AUX 3 aux:pass",
        "arrestato arrestare VERB 0 root",
        "il il DET 5 det",
        "28 28 NUM 3 nummod TIMEX=DATE",
        "novembre novembre NOUN 5 flat TIMEX=DATE",
        "1944 1944 NUM 5 flat TIMEX=DATE",
        ". . PUNCT 3 punct",
    ])]),
    conllu("G3", [("g3-s1", [
        "La il DET 2 det",
        "cattura cattura NOUN 0 root",
        "di di ADP 4 case",
        "Duccio Duccio PROPN 2 nmod NE=PER",
        "Galimberti Galimberti PROPN 4 flat:name NE=PER",
        "a a ADP 7 case",
        "Torino Torino PROPN 2 nmod NE=LOC",
        ". . PUNCT 2 punct",
    ])]),
    conllu("G4", [("g4-s1", [
        "Nel nel ADP 2 case",
        "marzo marzo NOUN 6 obl TIMEX=DATE",
        "1944 1944 NUM 2 nummod TIMEX=DATE",
        "i il DET 5 det",
        "militi milite NOUN 6 nsubj",
        "arrestarono arrestare VERB 0 root",
        "Galimberti Galimberti PROPN 6 obj NE=PER",
        ". . PUNCT 6 punct",
    ])]),
    conllu("G5", [("g5-s1", [
        "I il DET 2 det",
        "tedeschi tedesco NOUN 3 nsubj",
        "abbatterono abbattere VERB 0 root",
        "il il DET 5 det",
        "ponte ponte NOUN 3 obj",
        "a a ADP 7 case",
        "Boves Boves PROPN 3 obl NE=LOC",
        ". . PUNCT 3 punct",
    ])]),
])


def _partirono(sid, src, dst, src_misc="NE=LOC", dst_misc="NE=LOC"):
    return (sid, [
        "Partirono partire VERB 0 root",
        "da da ADP 3 case",
        f"{src} {src} PROPN 1 obl {src_misc}",
        "per per ADP 5 case",
        f"{dst} {dst} PROPN 1 obl {dst_misc}",
        ". . PUNCT 1 punct",
    ])


def _coppia(sid, a, b, n):
    """"Sono rientrati <A1 A2> e <B1 B2> con <n> uomini ." with two-token names."""
    (a1, a2), (b1, b2) = a.split(), b.split()
    return (sid, [
        "Sono essere AUX 2 aux",
        "rientrati rientrare VERB 0 root",
        f"{a1} {a1} PROPN 2 nsubj NE=PER",
        f"{a2} {a2} PROPN 3 flat:name NE=PER",
        "e e CCONJ 6 cc",
        f"{b1} {b1} PROPN 3 conj NE=PER",
        f"{b2} {b2} PROPN 6 flat:name NE=PER",
        "con con ADP 10 case",
        f"{n} {n} NUM 10 nummod",
        "uomini uomo NOUN 2 obl",
        ". . PUNCT 2 punct",
    ])


# A diary page: the first sentence only names people by first name or nickname.
DIARY = conllu("D1", [
    ("d1-s1", [
        "Sono essere AUX 2 aux",
        "rientrati rientrare VERB 0 root",
        "Renato Renato PROPN 2 nsubj NE=PER",
        ", , PUNCT 5 punct",
        "Nino Nino PROPN 3 conj NE=PER",
        "e e CCONJ 7 cc",
        "Siracusa Siracusa PROPN 3 conj NE=PER",
        "con con ADP 10 case",
        "26 26 NUM 10 nummod",
        "uomini uomo NOUN 2 obl",
        ". . PUNCT 2 punct",
    ]),
    ("d1-s2", [
        "Renato Renato PROPN 6 nsubj NE=PER",
        "Aimo Aimo PROPN 1 flat:name NE=PER",
        "e e CCONJ 4 cc",
        "Giovanni Giovanni PROPN 1 conj NE=PER",
        "Rossi Rossi PROPN 4 flat:name NE=PER",
        "partirono partire VERB 0 root",
        "da da ADP 8 case",
        "Cuneo Cuneo PROPN 6 obl NE=LOC",
        ". . PUNCT 6 punct",
    ]),
    ("d1-s3", [
        "Nino Nino PROPN 6 nsubj NE=PER",
        "Costa Costa PROPN 1 flat:name NE=PER",
        "e e CCONJ 4 cc",
        "Giovanni Giovanni PROPN 1 conj NE=PER",
        "Rossi Rossi PROPN 4 flat:name NE=PER",
        "partirono partire VERB 0 root",
        "per per ADP 8 case",
        "Boves Boves PROPN 6 obl NE=LOC",
        ". . PUNCT 6 punct",
    ]),
    _coppia("d1-s4", "Aldo Bianchi", "Carlo Verdi", 5),
    _coppia("d1-s5", "Carlo Verdi", "Aldo Bianchi", 3),
    _partirono("d1-s6", "Torino", "Boves"),
    _partirono("d1-s7", "Cuneo", "Torino"),
    _partirono("d1-s8", "Boves", "Siracusa"),
])


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def types():
    return load_semantic_types(FIXTURES / "semantic_types.tsv")


@pytest.fixture(scope="session")
def dictionary(types):
    return load_pattern_dictionary(FIXTURES / "patterns.dsl", FIXTURES / "classes.tsv", types.labels)


@pytest.fixture(scope="session")
def entries():
    return load_gazetteers(FIXTURES / "gazetteer_per.tsv", FIXTURES / "gazetteer_loc.tsv",
                           FIXTURES / "gazetteer_org.tsv")


@pytest.fixture(scope="session")
def store():
    return load_embeddings(FIXTURES / "embeddings.txt")


@pytest.fixture(scope="session")
def centroids(types, store):
    return build_centroids(types, store, 0.4)


@pytest.fixture(scope="session")
def patterns():
    return load_person_patterns()


@pytest.fixture(scope="session")
def salire_docs():
    return read_corpus(FIXTURES / "salire.conllu")


@pytest.fixture(scope="session")
def galimberti_docs():
    return parse_corpus(GALIMBERTI)


@pytest.fixture(scope="session")
def diary_docs():
    return parse_corpus(DIARY)
