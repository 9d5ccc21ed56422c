"""Parsers and writers for the flat-file dataset formats, tf-idf weighting, Dataset assembly.

All files are UTF-8, tab separated. A dataset directory holds:

    link.tsv         #host_id<TAB>name...      host<TAB>v1...
    content.tsv      same layout as link.tsv
    dictionary.tsv   #N=<pages>                term_id<TAB>term<TAB>df
    terms.tsv        host<TAB>id:tf id:tf ...
    nlp_pages.tsv    #host_id<TAB>page_url<TAB>name...
    labels.tsv       host<TAB>genre<TAB>neutrality<TAB>bias<TAB>trust

Only the two dense host-level files are mandatory.
"""

from __future__ import annotations

import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Optional, Sequence, Union

from .core import (
    MAX_TERMS,
    DataError,
    Dictionary,
    FeatureBlock,
    FeatureKind,
    Genre,
    HostId,
    LabelSet,
    ParseError,
    SparseTermVector,
    validate_host_id,
)

PathLike = Union[str, os.PathLike]

LINK_FILE = "link.tsv"
CONTENT_FILE = "content.tsv"
DICTIONARY_FILE = "dictionary.tsv"
TERMS_FILE = "terms.tsv"
NLP_FILE = "nlp_pages.tsv"
LABELS_FILE = "labels.tsv"

MISSING_NUMERIC = "NA"
MISSING_LABEL = "-"
BIGRAM_PREFIX = "bigram_"


@dataclass(frozen=True)
class HostRecord:
    id: HostId
    link: FeatureBlock
    content: FeatureBlock
    terms: SparseTermVector = field(default_factory=SparseTermVector)

    def dense(self) -> list[float]:
        """Link and content values concatenated, the tree classifier's input."""
        return list(self.link.values) + list(self.content.values)


@dataclass(frozen=True)
class Dataset:
    hosts: tuple[HostRecord, ...]
    labels: Mapping[HostId, LabelSet] = field(default_factory=dict)
    dictionary: Optional[Dictionary] = None
    pages: Optional[Mapping[HostId, tuple[FeatureBlock, ...]]] = None

    def __post_init__(self):
        ids = {h.id for h in self.hosts}
        if len(ids) != len(self.hosts):
            raise DataError("duplicate host ids in dataset")
        for hid in self.labels:
            if hid not in ids:
                raise DataError(f"labeled host {hid!r} has no feature record")
        if self.hosts:
            lw, cw = len(self.hosts[0].link), len(self.hosts[0].content)
            for h in self.hosts:
                if len(h.link) != lw or len(h.content) != cw:
                    raise DataError(f"host {h.id!r} has inconsistent feature dimensions")
        if self.pages:
            widths = {len(b) for blocks in self.pages.values() for b in blocks}
            if len(widths) > 1:
                raise DataError("page NLP blocks have inconsistent dimensions")

    def host(self, hid: HostId) -> HostRecord:
        for h in self.hosts:
            if h.id == hid:
                return h
        raise KeyError(hid)

    def pages_for(self, hid: HostId) -> tuple[FeatureBlock, ...]:
        if not self.pages:
            return ()
        return tuple(self.pages.get(hid, ()))

    @property
    def host_ids(self) -> list[HostId]:
        return [h.id for h in self.hosts]

    def __len__(self) -> int:
        return len(self.hosts)


def _lines(path: PathLike) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if line.strip():
                yield lineno, line


def _number(cell: str, path: PathLike, lineno: int) -> float:
    if cell == MISSING_NUMERIC:
        return 0.0
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", str(path), lineno) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite cell {cell!r}", str(path), lineno)
    return value


def _header(line: str, path: PathLike, lineno: int, leading: Sequence[str]) -> list[str]:
    cols = line.split("\t")
    if not cols[0].startswith("#") or cols[0][1:] != leading[0]:
        raise ParseError(f"expected header starting '#{leading[0]}'", str(path), lineno)
    if cols[1 : len(leading)] != list(leading[1:]):
        raise ParseError(f"expected header columns {list(leading)}", str(path), lineno)
    return cols[len(leading) :]


def parse_host_features(path: PathLike, kind: FeatureKind) -> dict[HostId, FeatureBlock]:
    """Read a dense host-level feature file. ``NA`` cells become 0.0."""
    it = _lines(path)
    try:
        lineno, line = next(it)
    except StopIteration:
        raise ParseError("missing header line", str(path)) from None
    names = tuple(_header(line, path, lineno, ("host_id",)))
    width = len(names) + 1
    out: dict[HostId, FeatureBlock] = {}
    for lineno, line in it:
        cells = line.split("\t")
        if len(cells) != width:
            raise ParseError(f"expected {width} columns, found {len(cells)}", str(path), lineno)
        host = cells[0]
        if not host:
            raise ParseError("empty host id", str(path), lineno)
        if host in out:
            raise ParseError(f"duplicate host {host!r}", str(path), lineno)
        values = tuple(_number(c, path, lineno) for c in cells[1:])
        out[host] = FeatureBlock(kind, names, values)
    return out


def parse_dictionary(path: PathLike) -> Dictionary:
    it = _lines(path)
    try:
        lineno, line = next(it)
    except StopIteration:
        raise ParseError("missing '#N=' header", str(path)) from None
    if not line.startswith("#N="):
        raise ParseError("first line must be '#N=<corpus_size>'", str(path), lineno)
    try:
        corpus_size = int(line[3:])
    except ValueError:
        raise ParseError(f"bad corpus size {line[3:]!r}", str(path), lineno) from None
    entries: dict[int, tuple[str, int]] = {}
    for lineno, line in it:
        cells = line.split("\t")
        if len(cells) != 3:
            raise ParseError("dictionary rows need term_id, term, df", str(path), lineno)
        try:
            tid, df = int(cells[0]), int(cells[2])
        except ValueError:
            raise ParseError("term_id and df must be integers", str(path), lineno) from None
        if tid in entries:
            raise ParseError(f"duplicate term id {tid}", str(path), lineno)
        if not 0 <= tid < MAX_TERMS:
            raise ParseError(f"term id {tid} outside [0, {MAX_TERMS})", str(path), lineno)
        if df <= 0:
            raise ParseError(f"df must be positive, got {df}", str(path), lineno)
        entries[tid] = (cells[1], df)
    try:
        return Dictionary(entries, corpus_size)
    except DataError as exc:
        raise ParseError(str(exc), str(path)) from None


def parse_term_vector(text: str, dictionary: Optional[Dictionary] = None) -> SparseTermVector:
    """Parse ``"id:tf id:tf ..."`` into a canonical (ascending id) vector."""
    seen: dict[int, int] = {}
    for tok in text.split():
        tid_s, sep, tf_s = tok.partition(":")
        if not sep:
            raise DataError(f"malformed term entry {tok!r}")
        try:
            tid, tf = int(tid_s), int(tf_s)
        except ValueError:
            raise DataError(f"malformed term entry {tok!r}") from None
        if tf < 0:
            raise DataError(f"negative tf in {tok!r}")
        if tid in seen:
            raise DataError(f"duplicate term id {tid}")
        if dictionary is not None and tid not in dictionary:
            raise DataError(f"term id {tid} not in dictionary")
        seen[tid] = tf
    return SparseTermVector.from_pairs(seen.items())


def parse_term_vectors(path: PathLike, dictionary: Dictionary) -> dict[HostId, SparseTermVector]:
    out: dict[HostId, SparseTermVector] = {}
    for lineno, line in _lines(path):
        if line.startswith("#"):
            continue
        host, _, body = line.partition("\t")
        if not host:
            raise ParseError("empty host id", str(path), lineno)
        if host in out:
            raise ParseError(f"duplicate host {host!r}", str(path), lineno)
        try:
            out[host] = parse_term_vector(body, dictionary)
        except DataError as exc:
            raise ParseError(str(exc), str(path), lineno) from None
    return out


def tfidf_weight(v: SparseTermVector, dictionary: Dictionary) -> SparseTermVector:
    """Attach weights tf * ln(N / df); the tf entries are kept as they are."""
    n = dictionary.corpus_size
    weights = []
    for tid, tf in zip(v.ids, v.tfs):
        if tid not in dictionary:
            raise DataError(f"term id {tid} not in dictionary")
        df = dictionary.df(tid)
        if df <= 0:
            raise DataError(f"term id {tid} has df {df}")
        if df > n:
            raise DataError(f"term id {tid}: df {df} exceeds corpus size {n}")
        weights.append(tf * math.log(n / df))
    return SparseTermVector(v.ids, v.tfs, tuple(weights))


def _level(cell: str, path: PathLike, lineno: int) -> Optional[int]:
    if cell == MISSING_LABEL:
        return None
    if cell not in ("1", "2", "3"):
        raise ParseError(f"facet level {cell!r} not in {{1,2,3,-}}", str(path), lineno)
    return int(cell)


_GENRES = {g.value: g for g in Genre}


def parse_labels(path: PathLike) -> dict[HostId, LabelSet]:
    out: dict[HostId, LabelSet] = {}
    for lineno, line in _lines(path):
        if line.startswith("#"):
            continue
        cells = line.split("\t")
        if len(cells) != 5:
            raise ParseError(f"expected 5 columns, found {len(cells)}", str(path), lineno)
        host, genre_s = cells[0], cells[1]
        if not host:
            raise ParseError("empty host id", str(path), lineno)
        if host in out:
            raise ParseError(f"duplicate host {host!r}", str(path), lineno)
        if genre_s == MISSING_LABEL:
            genre = None
        elif genre_s in _GENRES:
            genre = _GENRES[genre_s]
        else:
            raise ParseError(f"unknown genre {genre_s!r}", str(path), lineno)
        out[host] = LabelSet(
            genre,
            _level(cells[2], path, lineno),
            _level(cells[3], path, lineno),
            _level(cells[4], path, lineno),
        )
    return out


def parse_page_nlp(path: PathLike) -> dict[HostId, list[FeatureBlock]]:
    """Group page-level NLP rows by host, dropping ``bigram_*`` columns.

    Pages of a host are ordered by URL so that line order never matters.
    """
    it = _lines(path)
    try:
        lineno, line = next(it)
    except StopIteration:
        raise ParseError("missing header line", str(path)) from None
    all_names = _header(line, path, lineno, ("host_id", "page_url"))
    keep = [i for i, n in enumerate(all_names) if not n.startswith(BIGRAM_PREFIX)]
    names = tuple(all_names[i] for i in keep)
    width = len(all_names) + 2
    grouped: dict[HostId, list[tuple[str, FeatureBlock]]] = defaultdict(list)
    for lineno, line in it:
        cells = line.split("\t")
        if len(cells) != width:
            raise ParseError(f"expected {width} columns, found {len(cells)}", str(path), lineno)
        host, url = cells[0], cells[1]
        if not host:
            raise ParseError("empty host id", str(path), lineno)
        raw = cells[2:]
        values = tuple(_number(raw[i], path, lineno) for i in keep)
        grouped[host].append((url, FeatureBlock(FeatureKind.NLP, names, values)))
    return {h: [b for _, b in sorted(rows, key=lambda r: r[0])] for h, rows in grouped.items()}


def load_dataset(directory: PathLike, *, with_terms: bool = True, with_pages: bool = True) -> Dataset:
    """Assemble a Dataset from a directory of flat files.

    Term vectors are tf-idf weighted on load. Missing optional files (terms,
    dictionary, pages, labels) simply leave the corresponding parts empty.
    """
    d = Path(directory)
    link_path, content_path = d / LINK_FILE, d / CONTENT_FILE
    for p in (link_path, content_path):
        if not p.exists():
            raise FileNotFoundError(f"required feature file not found: {p}")
    link = parse_host_features(link_path, FeatureKind.LINK)
    content = parse_host_features(content_path, FeatureKind.CONTENT)
    if set(link) != set(content):
        missing = sorted(set(link) ^ set(content))
        raise DataError(f"hosts present in only one of link/content: {missing[:5]}")

    dictionary = None
    terms: dict[HostId, SparseTermVector] = {}
    if with_terms and (d / DICTIONARY_FILE).exists():
        dictionary = parse_dictionary(d / DICTIONARY_FILE)
        if (d / TERMS_FILE).exists():
            raw_terms = parse_term_vectors(d / TERMS_FILE, dictionary)
            terms = {h: tfidf_weight(v, dictionary) for h, v in raw_terms.items()}

    pages = None
    if with_pages and (d / NLP_FILE).exists():
        pages = {h: tuple(blocks) for h, blocks in parse_page_nlp(d / NLP_FILE).items()}

    labels = parse_labels(d / LABELS_FILE) if (d / LABELS_FILE).exists() else {}

    empty = SparseTermVector((), (), ())
    hosts = tuple(
        HostRecord(validate_host_id(h), link[h], content[h], terms.get(h, empty)) for h in sorted(link)
    )
    return Dataset(hosts, labels, dictionary, pages)


# -- writers (the harness emits these formats) ------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_host_features(path: PathLike, names: Sequence[str], rows: Mapping[HostId, Sequence[float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("#host_id\t" + "\t".join(names) + "\n")
        for host in sorted(rows):
            fh.write(host + "\t" + "\t".join(_fmt(v) for v in rows[host]) + "\n")


def write_dictionary(path: PathLike, dictionary: Dictionary) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#N={dictionary.corpus_size}\n")
        for tid in sorted(dictionary.entries):
            term, df = dictionary.entries[tid]
            fh.write(f"{tid}\t{term}\t{df}\n")


def format_term_vector(v: SparseTermVector) -> str:
    return " ".join(f"{tid}:{tf}" for tid, tf in zip(v.ids, v.tfs))


def write_term_vectors(path: PathLike, vectors: Mapping[HostId, SparseTermVector]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for host in sorted(vectors):
            fh.write(f"{host}\t{format_term_vector(vectors[host])}\n")


def write_page_nlp(
    path: PathLike,
    names: Sequence[str],
    pages: Mapping[HostId, Sequence[tuple[str, Sequence[float]]]],
) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("#host_id\tpage_url\t" + "\t".join(names) + "\n")
        for host in sorted(pages):
            for url, values in pages[host]:
                fh.write(f"{host}\t{url}\t" + "\t".join(_fmt(v) for v in values) + "\n")


def format_label_row(host: HostId, labels: LabelSet) -> str:
    def lv(x: Optional[int]) -> str:
        return MISSING_LABEL if x is None else str(x)

    genre = MISSING_LABEL if labels.genre is None else labels.genre.value
    return f"{host}\t{genre}\t{lv(labels.neutrality)}\t{lv(labels.bias)}\t{lv(labels.trust)}"


def write_labels(path: PathLike, labels: Mapping[HostId, LabelSet]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for host in sorted(labels):
            fh.write(format_label_row(host, labels[host]) + "\n")
