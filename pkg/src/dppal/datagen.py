"""Deterministic synthetic CoNLL-U corpora for desk-scale experiments.

A small template grammar emits gold-annotated sentences with varied
clause structures plus a slice of boilerplate market-listing templates
whose slot vocabularies are tiny, so near-duplicate sentences occur
naturally, as they do in newswire.  Generation is fully reproducible
from the seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .treebank import Corpus, Sentence, Token, write_conllu

NOUNS = [
    "market", "price", "investor", "company", "report", "profit", "deal", "bank",
    "rate", "share", "plan", "board", "analyst", "quarter", "loss", "group",
    "contract", "order", "product", "factory", "union", "strike", "budget",
    "proposal", "merger", "chairman", "economy", "index", "bond", "fund",
    "law", "court", "ruling", "press", "journalist", "editor", "paper", "story",
]
PROPER = [
    "Acme", "Juno", "Vesta", "Orion", "Halcyon", "Meridian", "Kestrel",
    "Lumen", "Quanta", "Borealis", "Zephyr", "Aria",
]
VERBS = [
    "raised", "lowered", "bought", "sold", "announced", "rejected", "approved",
    "reported", "filed", "signed", "delayed", "reviewed", "praised", "blamed",
    "acquired", "offered", "released", "cut", "boosted", "outlined",
]
INTRANS_VERBS = ["fell", "rose", "climbed", "slipped", "rallied", "stabilized", "surged"]
INFINITIVES = ["buy", "sell", "review", "approve", "reject", "acquire", "release", "cut"]
ADJS = [
    "new", "large", "small", "quarterly", "annual", "foreign", "domestic",
    "strong", "weak", "unexpected", "preliminary", "final", "joint",
]
ADVS = ["sharply", "slightly", "quickly", "again", "earlier", "late", "abroad"]
DETS = ["the", "a", "this", "each", "another"]
ADPS = ["in", "on", "with", "from", "under", "near", "after", "before"]
MONTH_NOUNS = ["month", "months", "week", "weeks", "days"]
NUMBERS = ["8", "9", "7.5", "8.25", "8.5", "10"]
LISTING_HEADS = ["quotes", "rates", "yields", "spreads"]
LISTING_MODS = ["LONDON", "TOKYO", "FRANKFURT", "PARIS"]


class _Builder:
    def __init__(self) -> None:
        self.forms: list[str] = []
        self.upos: list[str] = []
        self.heads: list[int] = []
        self.rels: list[str] = []

    def add(self, form: str, upos: str, head: int, rel: str) -> int:
        """Append a token; head is an absolute index (0 = root, -1 = patch later)."""
        self.forms.append(form)
        self.upos.append(upos)
        self.heads.append(head)
        self.rels.append(rel)
        return len(self.forms)

    def patch(self, index: int, head: int) -> None:
        self.heads[index - 1] = head

    def to_sentence(self, sid: str) -> Sentence:
        toks = tuple(
            Token(index=i + 1, form=f, upos=u, gold_head=h, gold_rel=r)
            for i, (f, u, h, r) in enumerate(zip(self.forms, self.upos, self.heads, self.rels))
        )
        return Sentence(id=sid, tokens=toks)


def _pick(rng: np.random.Generator, options: list[str]) -> str:
    return options[int(rng.integers(len(options)))]


def _noun_phrase(b: _Builder, rng: np.random.Generator, rel: str, allow_pp: bool = True) -> int:
    """Emit an NP; returns the index of its head noun (head left unset, -1)."""
    if rng.random() < 0.2:
        head = b.add(_pick(rng, PROPER), "PROPN", -1, rel)
        if rng.random() < 0.3:
            b.add(_pick(rng, PROPER), "PROPN", head, "flat")
        return head
    pre: list[tuple[str, str, str]] = []
    if rng.random() < 0.15:
        pre.append((_pick(rng, NUMBERS), "NUM", "nummod"))
    elif rng.random() < 0.7:
        pre.append((_pick(rng, DETS), "DET", "det"))
    n_adj = int(rng.integers(0, 3)) if rng.random() < 0.5 else 0
    for _ in range(n_adj):
        pre.append((_pick(rng, ADJS), "ADJ", "amod"))
    pre_idx = [b.add(f, u, -1, r) for f, u, r in pre]
    head = b.add(_pick(rng, NOUNS), "NOUN", -1, rel)
    for i in pre_idx:
        b.patch(i, head)
    if allow_pp and rng.random() < 0.2:
        case = b.add(_pick(rng, ADPS), "ADP", -1, "case")
        inner = _noun_phrase(b, rng, "nmod", allow_pp=False)
        b.patch(inner, head)
        b.patch(case, inner)
    return head


def _pp(b: _Builder, rng: np.random.Generator, rel: str) -> int:
    case = b.add(_pick(rng, ADPS), "ADP", -1, "case")
    head = _noun_phrase(b, rng, rel, allow_pp=False)
    b.patch(case, head)
    return head


def _transitive(b: _Builder, rng: np.random.Generator) -> None:
    subj = _noun_phrase(b, rng, "nsubj")
    verb = b.add(_pick(rng, VERBS), "VERB", 0, "root")
    b.patch(subj, verb)
    obj = _noun_phrase(b, rng, "obj")
    b.patch(obj, verb)
    if rng.random() < 0.35:
        b.patch(_pp(b, rng, "obl"), verb)
    if rng.random() < 0.2:
        b.add(_pick(rng, ADVS), "ADV", verb, "advmod")
    b.add(".", "PUNCT", verb, "punct")


def _intransitive(b: _Builder, rng: np.random.Generator) -> None:
    subj = _noun_phrase(b, rng, "nsubj")
    verb = b.add(_pick(rng, INTRANS_VERBS), "VERB", 0, "root")
    b.patch(subj, verb)
    if rng.random() < 0.5:
        b.add(_pick(rng, ADVS), "ADV", verb, "advmod")
    if rng.random() < 0.5:
        b.patch(_pp(b, rng, "obl"), verb)
    b.add(".", "PUNCT", verb, "punct")


def _copular(b: _Builder, rng: np.random.Generator) -> None:
    subj = _noun_phrase(b, rng, "nsubj")
    cop = b.add("is", "AUX", -1, "cop")
    pred = b.add(_pick(rng, ADJS), "ADJ", 0, "root")
    b.patch(subj, pred)
    b.patch(cop, pred)
    if rng.random() < 0.3:
        b.patch(_pp(b, rng, "obl"), pred)
    b.add(".", "PUNCT", pred, "punct")


def _coordination(b: _Builder, rng: np.random.Generator) -> None:
    subj = _noun_phrase(b, rng, "nsubj")
    verb = b.add(_pick(rng, VERBS), "VERB", 0, "root")
    b.patch(subj, verb)
    obj1 = _noun_phrase(b, rng, "obj", allow_pp=False)
    b.patch(obj1, verb)
    cc = b.add("and", "CCONJ", -1, "cc")
    obj2 = _noun_phrase(b, rng, "conj", allow_pp=False)
    b.patch(obj2, obj1)
    b.patch(cc, obj2)
    b.add(".", "PUNCT", verb, "punct")


def _relative(b: _Builder, rng: np.random.Generator) -> None:
    det = b.add(_pick(rng, DETS), "DET", -1, "det")
    noun = b.add(_pick(rng, NOUNS), "NOUN", -1, "nsubj")
    b.patch(det, noun)
    mark = b.add("that", "SCONJ", -1, "mark")
    relverb = b.add(_pick(rng, VERBS), "VERB", noun, "acl")
    b.patch(mark, relverb)
    relobj = _noun_phrase(b, rng, "obj", allow_pp=False)
    b.patch(relobj, relverb)
    verb = b.add(_pick(rng, INTRANS_VERBS), "VERB", 0, "root")
    b.patch(noun, verb)
    if rng.random() < 0.4:
        b.add(_pick(rng, ADVS), "ADV", verb, "advmod")
    b.add(".", "PUNCT", verb, "punct")


def _xcomp(b: _Builder, rng: np.random.Generator) -> None:
    subj = _noun_phrase(b, rng, "nsubj")
    verb = b.add("plans", "VERB", 0, "root")
    b.patch(subj, verb)
    to = b.add("to", "PART", -1, "mark")
    inf = b.add(_pick(rng, INFINITIVES), "VERB", verb, "xcomp")
    b.patch(to, inf)
    obj = _noun_phrase(b, rng, "obj", allow_pp=False)
    b.patch(obj, inf)
    b.add(".", "PUNCT", verb, "punct")


def _listing(b: _Builder, rng: np.random.Generator) -> None:
    """Market-quote boilerplate: tiny slot vocabulary, many near-duplicates."""
    city = b.add(_pick(rng, LISTING_MODS), "PROPN", -1, "compound")
    head = b.add(_pick(rng, LISTING_HEADS), "NOUN", 0, "root")
    b.patch(city, head)
    b.add(":", "PUNCT", head, "punct")
    span_noun = _pick(rng, MONTH_NOUNS)  # one unit per listing, like real boilerplate
    n_groups = int(rng.integers(2, 4))
    for g in range(n_groups):
        num = b.add(_pick(rng, NUMBERS), "NUM", -1, "nummod")
        pct = b.add("%", "SYM", head, "conj")
        b.patch(num, pct)
        b.add(span_noun, "NOUN", pct, "nmod")
        if g < n_groups - 1:
            b.add(";", "PUNCT", head, "punct")
    b.add(".", "PUNCT", head, "punct")


_TEMPLATES = [
    (_transitive, 0.28),
    (_intransitive, 0.16),
    (_copular, 0.12),
    (_coordination, 0.14),
    (_relative, 0.12),
    (_xcomp, 0.08),
    (_listing, 0.10),
]


def make_corpus(n_sentences: int, rng_seed: int, id_prefix: str = "gen") -> Corpus:
    """Generate a gold-annotated corpus of the requested size."""
    rng = np.random.default_rng(rng_seed)
    weights = np.array([w for _, w in _TEMPLATES])
    weights = weights / weights.sum()
    sentences = []
    for i in range(n_sentences):
        b = _Builder()
        template = _TEMPLATES[int(rng.choice(len(_TEMPLATES), p=weights))][0]
        template(b, rng)
        sentences.append(b.to_sentence(f"{id_prefix}-{i:06d}"))
    return Corpus(sentences=tuple(sentences))


def write_corpus_files(
    out_dir: str | Path, n_train: int, n_test: int, rng_seed: int
) -> tuple[Path, Path]:
    """Write train.conllu and test.conllu under out_dir; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train = make_corpus(n_train, rng_seed, id_prefix="train")
    test = make_corpus(n_test, rng_seed + 1, id_prefix="test")
    train_path = out / "train.conllu"
    test_path = out / "test.conllu"
    write_conllu(train, train_path)
    write_conllu(test, test_path)
    return train_path, test_path
