import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_sentence
from dppal.diversity import (
    AVERAGED,
    SUBGRAPH,
    AveragedProjection,
    DiversityFeature,
    ROOT_RELATION_SYMBOL,
    averaged_features,
    fit_subgraph_vocab,
    ibad_ibmd,
    subgraph_counts,
    subgraph_keys,
    token_subgraph_feature,
    write_features_csv,
    SubgraphVocabulary,
)
from dppal.trees import ParseTree


def _tree(heads, rels):
    return ParseTree(heads=tuple(heads), rels=tuple(rels))


def _chain_sentence(n, sid="c0"):
    return make_sentence(
        [f"w{i}" for i in range(n)], [0] + list(range(1, n)), upos=["N"] * n, sid=sid
    )


class TestAveragedProjection:
    def test_unit_norm(self):
        proj = AveragedProjection()
        for n in (1, 3, 8):
            feat = proj.sentence_feature(_chain_sentence(n))
            assert math.isclose(np.linalg.norm(feat.vector), 1.0, abs_tol=1e-9)
            assert feat.kind == AVERAGED

    def test_token_identical_sentences_have_cosine_one(self):
        proj = AveragedProjection()
        a = make_sentence(["x", "y"], [2, 0], sid="a")
        b = make_sentence(["x", "y"], [2, 0], sid="b")
        va = averaged_features(a, proj).vector
        vb = averaged_features(b, proj).vector
        assert float(va @ vb) == pytest.approx(1.0, abs=1e-12)

    def test_token_feature_is_own_projection(self):
        proj = AveragedProjection()
        s = make_sentence(["x", "y", "z"], [2, 0, 2], sid="t")
        f1 = proj.token_feature(s, 1)
        f2 = proj.token_feature(s, 3)
        assert f1.owner == ("t", 1)
        assert math.isclose(np.linalg.norm(f1.vector), 1.0, abs_tol=1e-9)
        assert abs(float(f1.vector @ f2.vector)) < 1.0

    def test_orthogonal_stub_gives_zero_cosine(self):
        # with exactly orthogonal indicator directions, disjoint vocabularies
        # have exactly orthogonal features
        proj = AveragedProjection(dim=64)
        counter = {}

        def one_hot(indicator):
            slot = counter.setdefault(indicator, len(counter))
            vec = np.zeros(64)
            vec[slot] = 1.0
            return vec

        proj._direction = one_hot
        a = make_sentence(["aa", "bb"], [2, 0], upos=["A", "B"], sid="a")
        b = make_sentence(["cc", "dd"], [2, 0], upos=["C", "D"], sid="b")
        cos = float(proj.sentence_feature(a).vector @ proj.sentence_feature(b).vector)
        assert abs(cos) < 1e-12

    def test_random_projection_cosine_bound(self):
        # frozen empirical run: 100 disjoint-vocabulary pairs at d=64
        proj = AveragedProjection(dim=64)
        rng = np.random.default_rng(15)
        worst = 0.0
        for trial in range(100):
            n1, n2 = int(rng.integers(3, 10)), int(rng.integers(3, 10))
            a = make_sentence(
                [f"c15_{trial}_{j}" for j in range(n1)],
                [0] + [1] * (n1 - 1),
                upos=[f"U15{trial}a{j % 5}" for j in range(n1)],
                sid=f"p{trial}",
            )
            b = make_sentence(
                [f"d15_{trial}_{j}" for j in range(n2)],
                [0] + [1] * (n2 - 1),
                upos=[f"V15{trial}b{j % 5}" for j in range(n2)],
                sid=f"q{trial}",
            )
            cos = float(proj.sentence_feature(a).vector @ proj.sentence_feature(b).vector)
            worst = max(worst, abs(cos))
        assert worst < 0.3

    def test_projection_seed_changes_features(self):
        s = _chain_sentence(4)
        v1 = AveragedProjection(seed=1).sentence_feature(s).vector
        v2 = AveragedProjection(seed=2).sentence_feature(s).vector
        assert not np.allclose(v1, v2)


class TestSubgraphs:
    def test_single_token_one_hot(self):
        s = _chain_sentence(1)
        tree = _tree([0], ["root"])
        vocab = fit_subgraph_vocab([(s, tree)])
        feat = subgraph_counts(s, tree, vocab)
        assert feat.kind == SUBGRAPH
        nonzero = np.flatnonzero(feat.vector)
        assert len(nonzero) == 1
        assert feat.vector[nonzero[0]] == pytest.approx(1.0)
        assert vocab.index[(ROOT_RELATION_SYMBOL, "root")] == nonzero[0]

    def test_chain_keys_hand_walk(self):
        s = _chain_sentence(3)
        tree = _tree([0, 1, 2], ["root", "obj", "nmod"])
        keys = subgraph_keys(tree)
        assert keys == [
            (ROOT_RELATION_SYMBOL, "root"),
            ("root", "obj"),
            ("obj", "nmod"),
        ]

    def test_emits_exactly_n_keys(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            n = int(rng.integers(1, 8))
            heads = [0] + [int(rng.integers(0, m)) for m in range(1, n)]
            tree = _tree(heads, [f"r{int(rng.integers(3))}" for _ in range(n)])
            assert len(subgraph_keys(tree)) == n

    def test_identical_multisets_cosine_one(self):
        s1 = _chain_sentence(3, "m1")
        s2 = _chain_sentence(3, "m2")
        tree = _tree([0, 1, 2], ["root", "obj", "nmod"])
        vocab = fit_subgraph_vocab([(s1, tree), (s2, tree)])
        v1 = subgraph_counts(s1, tree, vocab).vector
        v2 = subgraph_counts(s2, tree, vocab).vector
        assert float(v1 @ v2) == pytest.approx(1.0, abs=1e-12)

    def test_tf_doubling_invariance(self):
        # doubling every key count rescales the vector, not its direction
        s3 = _chain_sentence(3, "d3")
        t3 = _tree([0, 1, 2], ["root", "obj", "obj"])
        s6 = _chain_sentence(6, "d6")
        t6 = _tree([0, 1, 2, 0, 4, 5], ["root", "obj", "obj", "root", "obj", "obj"])
        vocab = fit_subgraph_vocab([(s3, t3), (s6, t6)])
        v3 = subgraph_counts(s3, t3, vocab).vector
        v6 = subgraph_counts(s6, t6, vocab).vector
        np.testing.assert_allclose(v3, v6, atol=1e-12)

    def test_idf_values(self):
        sentences = [(_chain_sentence(1, f"i{k}"), _tree([0], ["root"])) for k in range(10)]
        rare = (_chain_sentence(2, "rare"), _tree([0, 1], ["root", "obj"]))
        vocab = fit_subgraph_vocab(sentences[:9] + [rare])
        # key present in 1 of 10 documents
        assert vocab.idf(("root", "obj")) == pytest.approx(math.log(11 / 2) + 1, abs=1e-12)
        # key present in every document
        assert vocab.idf((ROOT_RELATION_SYMBOL, "root")) == pytest.approx(1.0, abs=1e-12)
        # unseen key
        assert vocab.idf(("x", "y")) == pytest.approx(math.log(11.0) + 1, abs=1e-12)

    def test_df_single_document(self):
        s = _chain_sentence(3)
        tree = _tree([0, 1, 1], ["root", "obj", "obj"])
        vocab = fit_subgraph_vocab([(s, tree)])
        assert vocab.n_documents == 1
        assert np.all(vocab.df == 1)  # duplicated key counted once per document

    def test_oov_key_maps_to_reserved_dimension(self):
        s = _chain_sentence(1, "fit")
        vocab = fit_subgraph_vocab([(s, _tree([0], ["root"]))])
        other = _chain_sentence(2, "new")
        feat = subgraph_counts(other, _tree([0, 1], ["root", "weird"]), vocab)
        assert feat.vector[vocab.dim - 1] > 0

    def test_token_level_one_hot(self):
        s = _chain_sentence(3)
        tree = _tree([0, 1, 2], ["root", "obj", "nmod"])
        vocab = fit_subgraph_vocab([(s, tree)])
        feat = token_subgraph_feature(s, tree, vocab, 2)
        assert feat.owner == ("c0", 2)
        assert np.flatnonzero(feat.vector).tolist() == [vocab.index[("root", "obj")]]

    def test_empty_pool_rejected(self):
        with pytest.raises(ValueError):
            fit_subgraph_vocab([])

    def test_unfitted_vocab_rejected(self):
        bogus = SubgraphVocabulary(index={}, df=np.zeros(0, dtype=np.int64), n_documents=0)
        s = _chain_sentence(1)
        with pytest.raises(RuntimeError):
            subgraph_counts(s, _tree([0], ["root"]), bogus)

    def test_unlabeled_tree_rejected(self):
        with pytest.raises(ValueError):
            subgraph_keys(ParseTree(heads=(0,)))


class TestIbadIbmd:
    def test_identical_batch(self):
        v = np.ones(4) / 2.0
        mat = np.tile(v, (3, 1))
        assert ibad_ibmd(mat) == (0.0, 0.0)

    def test_orthogonal_batch(self):
        assert ibad_ibmd(np.eye(3)) == (1.0, 1.0)

    def test_two_same_one_orthogonal(self):
        # pairs: (v,v)=0, (v,w)=1, (v,w)=1 -> IBAD 2/3
        # per-item minima: 0 (v), 0 (v), 1 (w, both others orthogonal) -> IBMD 1/3
        v = np.array([1.0, 0.0])
        w = np.array([0.0, 1.0])
        mat = np.stack([v, v, w])
        ibad, ibmd = ibad_ibmd(mat)
        assert ibad == pytest.approx(2 / 3, abs=1e-12)
        assert ibmd == pytest.approx(1 / 3, abs=1e-12)

    def test_batch_too_small(self):
        with pytest.raises(ValueError):
            ibad_ibmd(np.ones((1, 3)))

    def test_accepts_feature_objects(self):
        feats = [
            DiversityFeature(vector=np.eye(3)[i], kind=SUBGRAPH, owner=f"s{i}") for i in range(3)
        ]
        assert ibad_ibmd(feats) == (1.0, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(
        st.integers(min_value=2, max_value=8),
        st.integers(min_value=2, max_value=6),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_ibad_dominates_ibmd(self, b, d, seed):
        rng = np.random.default_rng(seed)
        mat = rng.standard_normal((b, d))
        mat /= np.linalg.norm(mat, axis=1, keepdims=True)
        ibad, ibmd = ibad_ibmd(mat)
        assert ibad >= ibmd - 1e-12
        assert 0.0 <= ibmd and ibad <= 2.0

    def test_nonnegative_vectors_stay_below_one(self):
        rng = np.random.default_rng(4)
        mat = np.abs(rng.standard_normal((6, 5)))
        mat /= np.linalg.norm(mat, axis=1, keepdims=True)
        ibad, ibmd = ibad_ibmd(mat)
        assert ibad <= 1.0 and ibmd <= 1.0


def test_features_csv_export(tmp_path):
    feats = [
        DiversityFeature(vector=np.eye(3)[0], kind=SUBGRAPH, owner="s1"),
        DiversityFeature(vector=np.eye(3)[1], kind=AVERAGED, owner=("s1", 2)),
    ]
    path = tmp_path / "features.csv"
    write_features_csv(feats, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "owner,kind,vector"
    assert lines[1].startswith("s1,SUBGRAPH,")
    assert lines[2].startswith("s1:2,AVERAGED,")


def test_non_unit_vector_rejected():
    with pytest.raises(ValueError):
        DiversityFeature(vector=np.array([1.0, 1.0]), kind=SUBGRAPH, owner="x")
