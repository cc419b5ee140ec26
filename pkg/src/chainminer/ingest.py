"""Turn a text corpus into an undirected entity graph with provenance.

Two input paths: pre-segmented documents carry their sentences and entity
lists verbatim (the reference path), while raw-text documents go through a
naive rule-based pipeline: sentence segmentation on terminal punctuation with
an abbreviation guard, then entity extraction as maximal runs of capitalized
tokens. Coreference is reduced to an explicit alias map.

Known limitation of the naive extractor: entities without a capitalized
anchor (bare phone numbers, all-lowercase aliases) are only picked up via the
pre-segmented path.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .graph import Graph, build_graph

__all__ = [
    "CORPUS_FORMAT_VERSION",
    "DEFAULT_ABBREVIATIONS",
    "DEFAULT_CONNECTORS",
    "DEFAULT_STOP_WORDS",
    "Corpus",
    "CorpusError",
    "Document",
    "Provenance",
    "Sentence",
    "segment_sentences",
    "extract_entities",
    "build_entity_graph",
    "parse_corpus",
    "load_corpus",
]

CORPUS_FORMAT_VERSION = 1

# Tokens whose trailing period does not end a sentence.
DEFAULT_ABBREVIATIONS = frozenset({
    "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "St.", "Jr.", "Sr.",
    "Gen.", "Col.", "Sgt.", "Lt.", "Capt.", "Rev.",
    "U.S.", "U.K.", "U.N.", "D.C.",
    "e.g.", "i.e.", "etc.", "vs.", "cf.",
    "Inc.", "Co.", "Corp.", "Ltd.", "No.", "Mt.", "Ft.",
})

# Lowercase particles allowed inside a capitalized run ("Hani al Hallak").
DEFAULT_CONNECTORS = frozenset({"al", "bin", "van", "de"})

# Common words dropped from the start of a sentence before runs form, so
# "Did Nadia Rahal..." yields "Nadia Rahal" and "He left." yields nothing.
DEFAULT_STOP_WORDS = frozenset({
    "a", "an", "the", "he", "she", "it", "they", "we", "i", "you",
    "this", "that", "these", "those", "his", "her", "their", "our", "its",
    "who", "what", "when", "where", "why", "how", "did", "do", "does",
    "in", "on", "at", "by", "for", "with", "from", "to", "as", "if",
    "several", "some", "many", "most", "later", "then", "there", "here",
    "however", "meanwhile", "after", "before", "during", "while",
})


class CorpusError(ValueError):
    """Malformed corpus document."""


@dataclass
class Sentence:
    text: str
    entities: list[str] = field(default_factory=list)


@dataclass
class Document:
    id: str
    sentences: list[Sentence] = field(default_factory=list)
    raw_text: str | None = None


@dataclass
class Corpus:
    documents: list[Document]
    alias_map: dict[str, list[str]] = field(default_factory=dict)
    stop_list: frozenset = DEFAULT_STOP_WORDS

    def surface_to_canonical(self) -> dict[str, str]:
        mapping = {}
        for canonical, surfaces in self.alias_map.items():
            for surface in surfaces:
                mapping[surface] = canonical
        return mapping


@dataclass
class Provenance:
    """Maps graph elements back to the sentences that witness them.

    ``mentions`` lists (document id, sentence index) per canonical entity;
    ``cooccurrences`` does the same per unordered entity pair. Every edge of
    the derived graph has at least one witnessing sentence.
    """

    mentions: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    cooccurrences: dict[tuple[str, str], list[tuple[str, int]]] = field(default_factory=dict)

    def witnesses(self, a: str, b: str) -> list[tuple[str, int]]:
        key = (a, b) if a <= b else (b, a)
        return self.cooccurrences.get(key, [])


def segment_sentences(text: str, abbreviations=DEFAULT_ABBREVIATIONS) -> list[str]:
    """Split text into sentences on terminal punctuation.

    A split happens after '.', '!' or '?' followed by whitespace and an
    uppercase letter (or end of text), unless the punctuation ends a protected
    abbreviation. Sentences are verbatim substrings of the input.
    """
    sentences = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in ".!?":
            # trailing closers stay with the sentence
            j = i + 1
            while j < n and text[j] in ")\"'”’":
                j += 1
            if ch == "." and _ends_with_abbreviation(text, i, abbreviations):
                i += 1
                continue
            k = j
            while k < n and text[k].isspace():
                k += 1
            if k == n or (k > j and text[k].isupper()):
                piece = text[start:j].strip()
                if piece:
                    sentences.append(piece)
                start = k
                i = k
                continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _ends_with_abbreviation(text: str, dot: int, abbreviations) -> bool:
    start = dot
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    token = text[start:dot + 1]
    return token in abbreviations


def _strip_punct(token: str) -> str:
    return token.strip(".,;:!?()[]{}\"'“”‘’")


def _is_capitalized(token: str) -> bool:
    core = _strip_punct(token)
    return bool(core) and core[0].isalpha() and core[0].isupper()


def _is_numeric(token: str) -> bool:
    core = _strip_punct(token)
    return bool(core) and all(c.isdigit() for c in core)


def extract_entities(
    sentence: str,
    alias_map: dict[str, list[str]] | None = None,
    stop_list=DEFAULT_STOP_WORDS,
    connectors=DEFAULT_CONNECTORS,
) -> set[str]:
    """Named entities as maximal runs of capitalized tokens.

    Runs may continue through lowercase connector particles between two
    capitalized tokens and through numeric tokens adjacent to a capitalized
    token (date-like patterns). A stop-listed sentence-initial word never
    joins a run. Tokens are punctuation-stripped and joined with single
    spaces; surface forms are folded through the alias map.
    """
    tokens = sentence.split()
    surface_map = {}
    if alias_map:
        for canonical, surfaces in alias_map.items():
            for surface in surfaces:
                surface_map[surface] = canonical

    def eligible(idx: int) -> bool:
        if idx == 0 and _strip_punct(tokens[0]).lower() in stop_list:
            return False
        return _is_capitalized(tokens[idx])

    entities = set()
    runs = []
    i = 0
    while i < len(tokens):
        if not eligible(i) and not (
            _is_numeric(tokens[i]) and i + 1 < len(tokens) and eligible(i + 1)
        ):
            i += 1
            continue
        run = [i]
        j = i + 1
        while j < len(tokens):
            if eligible(j):
                run.append(j)
            elif (
                _strip_punct(tokens[j]).lower() in connectors
                and j + 1 < len(tokens)
                and eligible(j + 1)
            ):
                run.append(j)
            elif _is_numeric(tokens[j]) and _is_capitalized(tokens[run[-1]]):
                run.append(j)
            else:
                break
            j += 1
        if any(_is_capitalized(tokens[idx]) for idx in run):
            runs.append(run)
        i = j if j > i + 1 else i + 1
    for run in runs:
        words = [_strip_punct(tokens[idx]) for idx in run]
        surface = " ".join(w for w in words if w)
        if not surface:
            continue
        entities.add(surface_map.get(surface, surface))
    return entities


def _document_sentences(doc: Document, corpus: Corpus) -> list[Sentence]:
    if doc.raw_text is None:
        return doc.sentences
    sentences = []
    for text in segment_sentences(doc.raw_text):
        found = extract_entities(text, corpus.alias_map, corpus.stop_list)
        sentences.append(Sentence(text=text, entities=sorted(found)))
    return sentences


def build_entity_graph(corpus: Corpus) -> tuple[Graph, Provenance]:
    """Undirected graph with one vertex per canonical entity and one edge per
    sentence-level co-occurrence; provenance records every witness.

    Deterministic: vertex labels are sorted, witnesses follow document order.
    A corpus yielding no entities produces an empty graph.
    """
    prov = Provenance()
    labels = set()
    for doc in corpus.documents:
        for sent_idx, sentence in enumerate(_document_sentences(doc, corpus)):
            where = (doc.id, sent_idx)
            uniq = sorted(set(sentence.entities))
            for entity in uniq:
                labels.add(entity)
                slot = prov.mentions.setdefault(entity, [])
                if not slot or slot[-1] != where:
                    slot.append(where)
            for a_idx, a in enumerate(uniq):
                for b in uniq[a_idx + 1:]:
                    slot = prov.cooccurrences.setdefault((a, b), [])
                    if not slot or slot[-1] != where:
                        slot.append(where)
    graph = build_graph(sorted(labels), list(prov.cooccurrences.keys()), directed=False)
    return graph, prov


def parse_corpus(doc: dict) -> Corpus:
    """Validate and load the corpus exchange document (a parsed JSON object)."""
    if not isinstance(doc, dict):
        raise CorpusError("corpus document must be an object")
    if doc.get("format_version") != CORPUS_FORMAT_VERSION:
        raise CorpusError(
            f"unsupported corpus format_version {doc.get('format_version')!r}"
        )
    raw_docs = doc.get("documents")
    if not isinstance(raw_docs, list):
        raise CorpusError("corpus needs a 'documents' list")
    documents = []
    seen_ids = set()
    for pos, entry in enumerate(raw_docs):
        doc_id = entry.get("id")
        if not isinstance(doc_id, str) or not doc_id:
            raise CorpusError(f"documents[{pos}] has no id")
        if doc_id in seen_ids:
            raise CorpusError(f"duplicate document id {doc_id!r}")
        seen_ids.add(doc_id)
        if "text" in entry:
            documents.append(Document(id=doc_id, raw_text=entry["text"]))
        elif "sentences" in entry:
            sentences = []
            for s_pos, s in enumerate(entry["sentences"]):
                entities = s.get("entities", [])
                if any(not isinstance(e, str) or not e for e in entities):
                    raise CorpusError(
                        f"documents[{pos}].sentences[{s_pos}] has an empty entity"
                    )
                sentences.append(Sentence(text=s.get("text", ""), entities=list(entities)))
            documents.append(Document(id=doc_id, sentences=sentences))
        else:
            raise CorpusError(f"documents[{pos}] needs either 'text' or 'sentences'")
    alias_map = doc.get("alias_map", {})
    if not isinstance(alias_map, dict):
        raise CorpusError("'alias_map' must map canonical names to surface lists")
    stop = doc.get("stop_list")
    stop_list = frozenset(w.lower() for w in stop) if stop is not None else DEFAULT_STOP_WORDS
    return Corpus(documents=documents, alias_map=dict(alias_map), stop_list=stop_list)


def load_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"invalid JSON in corpus file: {exc}") from exc
    return parse_corpus(doc)
