import numpy as np
import pytest

from dppal.datagen import write_corpus_files
from dppal.parser import ArcScoreTable
from dppal.treebank import Corpus, Sentence, Token


@pytest.fixture(scope="session")
def toy_corpus_paths(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy-corpus")
    return write_corpus_files(out, n_train=120, n_test=40, rng_seed=5)


@pytest.fixture(scope="session")
def acceptance_corpus_paths(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance-corpus")
    return write_corpus_files(out, n_train=2000, n_test=400, rng_seed=7)


def make_sentence(forms, heads, rels=None, upos=None, sid="s0"):
    rels = rels or ["dep"] * len(forms)
    upos = upos or ["X"] * len(forms)
    toks = tuple(
        Token(index=i + 1, form=f, upos=u, gold_head=h, gold_rel=r)
        for i, (f, u, h, r) in enumerate(zip(forms, upos, heads, rels))
    )
    return Sentence(id=sid, tokens=toks)


def make_corpus(sentences):
    return Corpus(sentences=tuple(sentences))


def random_table(rng, n):
    return ArcScoreTable.from_log_scores(rng.standard_normal((n + 1, n)) * 2.0)


def uniform_table(n):
    return ArcScoreTable.from_log_scores(np.zeros((n + 1, n)))
