"""Command-line entry point: ``histevents link|extract|tag|graph|eval``."""

from __future__ import annotations

import argparse
import logging
import sys
from datetime import date
from pathlib import Path

from . import evaluation as ev
from .config import ConfigError, PipelineConfig, load_config
from .corpus import SUBCORPORA, read_corpus
from .dates import interval
from .events import extract_corpus, summary_tsv
from .graph import (EventGraph, build_graph, constrained_query, date_network, document_subgraph,
                    ego_network, export_gexf, query_json)
from .jsonl import dumps, read_jsonl, write_jsonl
from .linking import EntityMention, link_corpus, load_person_patterns
from .resources import (load_embeddings, load_gazetteers, load_pattern_dictionary,
                        load_semantic_types)
from .semtypes import build_centroids, tag_argument, tag_top_k

log = logging.getLogger("histevents")


class StageError(RuntimeError):
    pass


def _config(args, required=()) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    cfg = cfg.override(
        knn_k=getattr(args, "knn_k", None),
        similarity_threshold=getattr(args, "threshold", None),
        max_disambiguation_iterations=getattr(args, "max_iterations", None),
        association_scorer=getattr(args, "scorer", None),
        ego_hops=getattr(args, "hops", None),
    )
    return cfg.validate(required)


def _dictionary(cfg: PipelineConfig, types=None):
    labels = types.labels if types is not None else None
    return load_pattern_dictionary(cfg.patterns, cfg.class_registry, labels)


def _stage(name, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except (ConfigError, StageError):
        raise
    except (ValueError, KeyError, OSError) as exc:
        raise StageError(f"{name}: {exc}") from exc


# -- link -----------------------------------------------------------------------


def cmd_link(args) -> int:
    cfg = _config(args, ("per_gazetteer", "loc_gazetteer", "org_gazetteer", "patterns", "class_registry"))
    entries = _stage("resources", load_gazetteers, cfg.per_gazetteer, cfg.loc_gazetteer, cfg.org_gazetteer)
    dictionary = _stage("resources", _dictionary, cfg)
    store = _stage("resources", load_embeddings, cfg.embeddings) if cfg.embeddings else None
    patterns = load_person_patterns(cfg.person_patterns)
    docs = _stage("corpus", read_corpus, args.corpus, args.subcorpus)
    mentions, stats = _stage(
        "linking", link_corpus, docs, entries, dictionary=dictionary, store=store, patterns=patterns,
        knn_k=cfg.knn_k, max_iterations=cfg.max_disambiguation_iterations, scorer=cfg.association_scorer,
    )
    write_jsonl((m.to_record() for m in mentions), args.output)
    stats_path = args.stats or f"{args.output}.stats.json"
    with open(stats_path, "w", encoding="utf-8") as f:
        f.write(dumps(stats) + "\n")
    log.info("wrote %d mentions to %s", len(mentions), args.output)
    return 0


# -- extract ----------------------------------------------------------------------


def _typing_model(cfg, docs=None):
    types = _stage("resources", load_semantic_types, cfg.semantic_types)
    vocab = None
    if docs is not None:
        vocab = {w for ws in types.entries.values() for w in ws}
        for d in docs:
            for s in d.sentences:
                for t in s.tokens:
                    vocab.update((t.lemma, t.surface))
    store = _stage("resources", load_embeddings, cfg.embeddings, vocab)
    model = _stage("typing", build_centroids, types, store, cfg.similarity_threshold)
    return types, store, model


def cmd_extract(args) -> int:
    cfg = _config(args, ("semantic_types", "patterns", "class_registry", "embeddings"))
    docs = _stage("corpus", read_corpus, args.corpus, args.subcorpus)
    types, store, model = _typing_model(cfg, docs)
    dictionary = _stage("resources", _dictionary, cfg, types)
    mentions = []
    if args.linked:
        mentions = [EntityMention.from_record(r) for r in _stage("linking", read_jsonl, args.linked)]
    events, summary = _stage("extraction", extract_corpus, docs, dictionary, mentions, model, store)
    write_jsonl((e.to_record() for e in events), args.output)
    table = summary_tsv(summary)
    if args.summary:
        Path(args.summary).write_text(table, encoding="utf-8")
    else:
        sys.stderr.write(table)
    log.info("wrote %d events to %s", len(events), args.output)
    return 0


# -- tag --------------------------------------------------------------------------


def cmd_tag(args) -> int:
    cfg = _config(args, ("semantic_types", "embeddings"))
    docs = _stage("corpus", read_corpus, args.corpus)
    _, store, model = _typing_model(cfg, docs)
    sentences = {(d.id, s.id): s for d in docs for s in d.sentences}
    out = []
    for r in _stage("tag", read_jsonl, args.targets):
        key = (r["doc"], str(r["sentence"]))
        if key not in sentences:
            raise StageError(f"tag: target {key} not in corpus")
        tok = sentences[key].token(int(r["token"]))
        lemma = (tok.lemma if tok.lemma != "_" else tok.surface).lower()
        typed = tag_argument(model, store, lemma, surface=tok.surface)
        ranking = tag_top_k(model, store, lemma, args.k, surface=tok.surface)
        out.append({"doc": r["doc"], "sentence": r["sentence"], "token": int(r["token"]),
                    "word": tok.surface, "prediction": typed.assigned_type,
                    "ranking": [[l, round(s, 6)] for l, s in ranking]})
    write_jsonl(out, args.output)
    return 0


# -- graph ------------------------------------------------------------------------


def _emit(text: str, path=None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _subgraph_out(args, sub: EventGraph) -> None:
    if getattr(args, "gexf", None):
        export_gexf(sub, args.gexf)
    _emit(sub.dumps(), getattr(args, "output", None))


def _period(args) -> tuple[date, date]:
    if args.period:
        return interval(args.period)
    if not (args.start and args.end):
        raise ValueError("give --period or both --start and --end")
    return interval(args.start)[0], interval(args.end)[1]


def cmd_graph(args) -> int:
    if args.action == "build":
        records = _stage("graph", read_jsonl, args.input)
        _stage("graph", build_graph, records).save(args.output)
        return 0
    graph = _stage("graph", EventGraph.load, args.input)
    if args.action == "export":
        export_gexf(graph, args.output)
    elif args.action == "ego":
        cfg = _config(args)
        _subgraph_out(args, ego_network(graph, args.entity, cfg.ego_hops))
    elif args.action == "date":
        start, end = _stage("graph", _period, args)
        _subgraph_out(args, date_network(graph, start, end))
    elif args.action == "docsub":
        _subgraph_out(args, document_subgraph(graph, args.doc))
    elif args.action == "query":
        known_classes = known_roles = None
        if args.config:
            cfg = _config(args, ("patterns", "class_registry"))
            d = _stage("resources", _dictionary, cfg)
            known_classes, known_roles = set(d.class_registry), d.roles
        hits = constrained_query(graph, set(args.entity_type), set(args.event_class), set(args.role),
                                 known_classes, known_roles)
        _emit(query_json(hits), args.output)
    return 0


# -- eval -------------------------------------------------------------------------


def cmd_eval(args) -> int:
    system = _stage("eval", read_jsonl, args.system)
    gold = _stage("eval", read_jsonl, args.gold)
    docs = _stage("corpus", read_corpus, args.corpus) if args.corpus else None
    if args.task == "linking":
        text = ev.linking_tsv(ev.eval_linking(system, gold, docs))
    elif args.task == "typing":
        labels = None
        if args.config:
            cfg = _config(args, ("semantic_types",))
            labels = load_semantic_types(cfg.semantic_types).labels
        text = ev.typing_tsv(ev.eval_typing(system, gold, labels))
    elif args.task == "extraction":
        text = ev.extraction_tsv(ev.eval_extraction(system, gold, docs))
    else:
        text = ev.classification_tsv(ev.eval_classification(system, gold))
    _emit(text, args.output)
    return 0


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="histevents", description=__doc__)
    p.add_argument("--config", help="pipeline config (JSON)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    link = sub.add_parser("link", help="find and disambiguate entity mentions")
    link.add_argument("corpus")
    link.add_argument("-o", "--output", required=True)
    link.add_argument("--stats", help="stats sidecar (default: OUTPUT.stats.json)")
    link.add_argument("--subcorpus", choices=SUBCORPORA, default="other")
    link.add_argument("--knn-k", type=int)
    link.add_argument("--max-iterations", type=int)
    link.add_argument("--scorer", choices=("average-normalized", "pmi"))
    link.set_defaults(func=cmd_link)

    ext = sub.add_parser("extract", help="type arguments and classify events")
    ext.add_argument("corpus")
    ext.add_argument("--linked", help="output of `histevents link`")
    ext.add_argument("-o", "--output", required=True)
    ext.add_argument("--summary", help="anchor/event summary TSV (default: stderr)")
    ext.add_argument("--subcorpus", choices=SUBCORPORA, default="other")
    ext.add_argument("--threshold", type=float)
    ext.set_defaults(func=cmd_extract)

    tag = sub.add_parser("tag", help="rank semantic types for target tokens")
    tag.add_argument("corpus")
    tag.add_argument("--targets", required=True, help="JSON-lines with doc, sentence, token")
    tag.add_argument("-o", "--output", required=True)
    tag.add_argument("-k", type=int, default=3)
    tag.add_argument("--threshold", type=float)
    tag.set_defaults(func=cmd_tag)

    g = sub.add_parser("graph", help="build, query and export the event graph")
    gs = g.add_subparsers(dest="action", required=True)
    b = gs.add_parser("build")
    b.add_argument("input", help="events JSON-lines")
    b.add_argument("-o", "--output", required=True)
    e = gs.add_parser("export")
    e.add_argument("input", help="graph snapshot")
    e.add_argument("-o", "--output", required=True)
    for name in ("ego", "date", "docsub", "query"):
        q = gs.add_parser(name)
        q.add_argument("input", help="graph snapshot")
        q.add_argument("-o", "--output", help="write JSON here instead of stdout")
        if name != "query":
            q.add_argument("--gexf", help="also export the subgraph as GEXF")
    ego = gs.choices["ego"]
    ego.add_argument("--entity", required=True)
    ego.add_argument("--hops", type=int)
    dt = gs.choices["date"]
    dt.add_argument("--period", help="ISO year, month or day, e.g. 1944-03")
    dt.add_argument("--start")
    dt.add_argument("--end")
    gs.choices["docsub"].add_argument("--doc", action="append", required=True)
    qq = gs.choices["query"]
    qq.add_argument("--entity-type", action="append", default=[])
    qq.add_argument("--event-class", action="append", default=[])
    qq.add_argument("--role", action="append", default=[])
    g.set_defaults(func=cmd_graph)

    evp = sub.add_parser("eval", help="score system output against gold")
    evp.add_argument("task", choices=("linking", "typing", "extraction", "classification"))
    evp.add_argument("--system", required=True)
    evp.add_argument("--gold", required=True)
    evp.add_argument("--corpus", help="CoNLL-U corpus for gold key validation")
    evp.add_argument("-o", "--output")
    evp.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        if args.verbose:
            raise
        msg = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
        print(f"histevents: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
