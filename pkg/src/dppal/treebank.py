"""CoNLL-U ingestion, pool bookkeeping and corpus duplication.

The corpus is an immutable snapshot; annotation state lives in
:class:`PoolState`, and every pool update returns a new state, so
corpora and pools can be shared freely across scoring workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np


class ConlluParseError(ValueError):
    """Malformed CoNLL-U input; message carries the 1-based line number."""


class TreeValidationError(ValueError):
    """Gold annotations of a sentence do not form a rooted tree."""


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    upos: str = "_"
    gold_head: int | None = None
    gold_rel: str | None = None
    annotated: bool = False

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError(f"token index must be >= 1, got {self.index}")
        if self.gold_head is not None:
            if self.gold_head < 0:
                raise ValueError(f"gold head must be >= 0, got {self.gold_head}")
            if self.gold_head == self.index:
                raise ValueError(f"token {self.index} cannot head itself")
        if self.annotated and (self.gold_head is None or self.gold_rel is None):
            raise ValueError(f"token {self.index} annotated without gold head+relation")


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[Token, ...]
    origin: str = ""

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r} has no tokens")
        if not self.origin:
            object.__setattr__(self, "origin", self.id)
        n = len(self.tokens)
        for i, tok in enumerate(self.tokens, start=1):
            if tok.index != i:
                raise ValueError(f"sentence {self.id!r}: token index {tok.index} at position {i}")
            if tok.gold_head is not None and tok.gold_head > n:
                raise TreeValidationError(
                    f"sentence {self.id!r}: head {tok.gold_head} out of range for length {n}"
                )
        if all(t.gold_head is not None for t in self.tokens):
            _check_rooted(self)

    @property
    def n(self) -> int:
        return len(self.tokens)

    def gold_heads(self) -> np.ndarray:
        """Gold head array (length n); raises if any head is missing."""
        heads = [t.gold_head for t in self.tokens]
        if any(h is None for h in heads):
            raise ValueError(f"sentence {self.id!r} has unannotated gold heads")
        return np.array(heads, dtype=np.int64)

    def with_annotated(self, indices: Iterable[int]) -> "Sentence":
        """Copy of this sentence with the given token indices flagged annotated."""
        wanted = set(indices)
        toks = tuple(
            replace(t, annotated=True) if t.index in wanted else t for t in self.tokens
        )
        return replace(self, tokens=toks)


def _check_rooted(sentence: Sentence) -> None:
    n = sentence.n
    heads = [t.gold_head for t in sentence.tokens]
    for start in range(1, n + 1):
        node, steps = start, 0
        while node != 0:
            node = heads[node - 1]
            steps += 1
            if steps > n:
                raise TreeValidationError(
                    f"sentence {sentence.id!r}: gold heads contain a cycle"
                )


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    _by_id: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, Sentence] = {}
        for s in self.sentences:
            if s.id in by_id:
                raise ValueError(f"duplicate sentence id {s.id!r}")
            by_id[s.id] = s
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __getitem__(self, sid: str) -> Sentence:
        return self._by_id[sid]

    def n_tokens(self) -> int:
        return sum(s.n for s in self.sentences)


def read_conllu(path: str | Path, require_gold: bool = False) -> Corpus:
    """Parse a CoNLL-U file into a Corpus with all tokens unannotated.

    Multiword-token ranges (``1-2``) and empty nodes (``1.1``) are
    skipped.  ``require_gold=True`` rejects sentences with any missing
    gold head or relation (simulation mode: gold is the oracle).
    """
    path = Path(path)
    sentences: list[Sentence] = []
    tokens: list[Token] = []
    sent_id: str | None = None
    auto_id = 0

    def flush(line_no: int) -> None:
        nonlocal tokens, sent_id, auto_id
        if not tokens:
            sent_id = None
            return
        sid = sent_id if sent_id is not None else f"s{auto_id:05d}"
        auto_id += 1
        if require_gold and any(t.gold_head is None or t.gold_rel is None for t in tokens):
            raise TreeValidationError(
                f"sentence {sid!r} has missing gold annotations (required in simulation mode)"
            )
        try:
            sentences.append(Sentence(id=sid, tokens=tuple(tokens)))
        except ValueError as exc:
            if isinstance(exc, TreeValidationError):
                raise
            raise TreeValidationError(f"sentence {sid!r}: {exc}") from exc
        tokens = []
        sent_id = None

    with path.open(encoding="utf-8") as fh:
        line_no = 0
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush(line_no)
                continue
            if line.startswith("#"):
                if line[1:].split("=", 1)[0].strip() == "sent_id" and "=" in line:
                    sent_id = line.split("=", 1)[1].strip()
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise ConlluParseError(
                    f"line {line_no}: expected 10 tab-separated columns, got {len(cols)}"
                )
            tok_id = cols[0]
            if "-" in tok_id or "." in tok_id:
                continue  # multiword-token range or empty node
            try:
                index = int(tok_id)
            except ValueError as exc:
                raise ConlluParseError(f"line {line_no}: non-integer token id {tok_id!r}") from exc
            head: int | None
            if cols[6] == "_":
                head = None
            else:
                try:
                    head = int(cols[6])
                except ValueError as exc:
                    raise ConlluParseError(
                        f"line {line_no}: non-integer HEAD {cols[6]!r}"
                    ) from exc
            rel = None if cols[7] == "_" else cols[7]
            try:
                tokens.append(
                    Token(index=index, form=cols[1], upos=cols[3], gold_head=head, gold_rel=rel)
                )
            except ValueError as exc:
                raise ConlluParseError(f"line {line_no}: {exc}") from exc
        flush(line_no + 1)
    return Corpus(sentences=tuple(sentences))


def write_conllu(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to CoNLL-U (FORM/UPOS/HEAD/DEPREL columns kept)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for s in corpus:
            fh.write(f"# sent_id = {s.id}\n")
            for t in s.tokens:
                head = "_" if t.gold_head is None else str(t.gold_head)
                rel = t.gold_rel if t.gold_rel is not None else "_"
                fh.write(f"{t.index}\t{t.form}\t_\t{t.upos}\t_\t_\t{head}\t{rel}\t_\t_\n")
            fh.write("\n")


def duplicate_corpus(corpus: Corpus, fold: int) -> Corpus:
    """Repeat every sentence ``fold`` times in copy-major order.

    Copies are token-identical, share ``origin`` and get distinct ids.
    """
    if fold < 1:
        raise ValueError(f"fold must be >= 1, got {fold}")
    out: list[Sentence] = []
    for k in range(fold):
        for s in corpus:
            out.append(replace(s, id=f"{s.id}::copy{k}", origin=s.origin))
    return Corpus(sentences=tuple(out))


@dataclass(frozen=True)
class PoolState:
    """Snapshot of the labeled/unlabeled split after some round.

    ``labeled`` holds (sentence id, token index) pairs revealed so far;
    everything else in the corpus is the unlabeled remainder.
    """

    corpus: Corpus
    labeled: frozenset
    round: int = 0
    rng_seed: int = 0

    def is_annotated(self, sid: str, index: int) -> bool:
        return (sid, index) in self.labeled

    def n_labeled(self) -> int:
        return len(self.labeled)

    def unlabeled_sentences(self) -> tuple[Sentence, ...]:
        """Sentences that still contain at least one unannotated token."""
        out = []
        for s in self.corpus:
            if any((s.id, t.index) not in self.labeled for t in s.tokens):
                out.append(s)
        return tuple(out)

    def unannotated_indices(self, sentence: Sentence) -> list[int]:
        return [t.index for t in sentence.tokens if (sentence.id, t.index) not in self.labeled]

    def training_view(self) -> list[Sentence]:
        """Sentences holding at least one annotated token, flags set."""
        out = []
        for s in self.corpus:
            idxs = [t.index for t in s.tokens if (s.id, t.index) in self.labeled]
            if idxs:
                out.append(s.with_annotated(idxs))
        return out

    def with_annotations(self, pairs: Iterable[tuple[str, int]], advance_round: bool = True) -> "PoolState":
        """New state with the given (sentence id, token index) pairs revealed.

        Re-annotation is a caller bug and raises.
        """
        new_pairs = set(pairs)
        already = new_pairs & self.labeled
        if already:
            raise ValueError(f"tokens annotated twice: {sorted(already)[:5]}")
        for sid, idx in new_pairs:
            sent = self.corpus[sid]
            if not 1 <= idx <= sent.n:
                raise ValueError(f"token index {idx} out of range for sentence {sid!r}")
        return PoolState(
            corpus=self.corpus,
            labeled=self.labeled | new_pairs,
            round=self.round + 1 if advance_round else self.round,
            rng_seed=self.rng_seed,
        )

    def to_checkpoint(self) -> dict:
        per_sentence: dict[str, list[int]] = {}
        for sid, idx in sorted(self.labeled):
            per_sentence.setdefault(sid, []).append(idx)
        return {"round": self.round, "rng_seed": self.rng_seed, "annotated": per_sentence}

    def save_checkpoint(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_checkpoint(), sort_keys=True), encoding="utf-8")

    @classmethod
    def from_checkpoint(cls, corpus: Corpus, path: str | Path) -> "PoolState":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        labeled = frozenset(
            (sid, idx) for sid, idxs in data["annotated"].items() for idx in idxs
        )
        return cls(corpus=corpus, labeled=labeled, round=data["round"], rng_seed=data["rng_seed"])


def seed_pool(corpus: Corpus, n_seed: int, rng_seed: int) -> PoolState:
    """Draw ``n_seed`` sentences uniformly without replacement and label them fully."""
    if n_seed > len(corpus):
        raise ValueError(f"n_seed={n_seed} exceeds corpus size {len(corpus)}")
    rng = np.random.default_rng(rng_seed)
    chosen = rng.choice(len(corpus), size=n_seed, replace=False) if n_seed else []
    labeled = frozenset(
        (corpus.sentences[i].id, t.index) for i in chosen for t in corpus.sentences[i].tokens
    )
    return PoolState(corpus=corpus, labeled=labeled, round=0, rng_seed=rng_seed)


