import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_sentence, random_table, uniform_table
from dppal.diversity import AVERAGED, DiversityFeature
from dppal.parser import HyperParams, ParserModel
from dppal.quality import (
    QualityScore,
    amp,
    bald,
    disagreement_token_q,
    information_density,
    random_quality,
    write_quality_csv,
)
from dppal.structured import MarginalTable, arc_marginals
from dppal.trees import ParseTree, decode_cle

DIMS = 2**14


def _unit(vec):
    vec = np.asarray(vec, dtype=np.float64)
    return vec / np.linalg.norm(vec)


class TestAmp:
    def test_certain_single_token_parse(self):
        table = uniform_table(1)
        score = amp(arc_marginals(table), decode_cle(table), sentence_id="x")
        assert score.sentence_q == 0.0
        assert score.token_q == (0.0,)

    def test_uniform_two_token_hand_value(self):
        table = uniform_table(2)
        score = amp(arc_marginals(table), ParseTree(heads=(0, 0)))
        assert score.sentence_q == pytest.approx(1 / 3, abs=1e-12)
        assert score.token_q[0] == pytest.approx(1 / 3, abs=1e-12)

    def test_high_confidence_bound(self):
        mar = np.zeros((3, 2))
        mar[0, 0] = 0.995
        mar[2, 0] = 0.005
        mar[0, 1] = 0.99
        mar[1, 1] = 0.01
        score = amp(MarginalTable(n=2, mar=mar), ParseTree(heads=(0, 0)))
        assert score.sentence_q <= 0.01

    def test_range_on_random_tables(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(1, 6))
            table = random_table(rng, n)
            score = amp(arc_marginals(table), decode_cle(table))
            assert 0.0 <= score.sentence_q <= 1.0
            assert all(0.0 <= t <= 1.0 for t in score.token_q)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            amp(arc_marginals(uniform_table(2)), ParseTree(heads=(0,)))


class TestBald:
    def test_all_agree_is_zero(self):
        heads = np.tile(np.array([2, 0, 2]), (5, 1))
        assert np.all(disagreement_token_q(heads) == 0.0)

    def test_five_way_split(self):
        heads = np.array([[0], [2], [3], [4], [5]])
        assert disagreement_token_q(heads)[0] == pytest.approx(0.8, abs=0)

    def test_mode_tie_breaks_to_smaller_head(self):
        heads = np.array([[2], [2], [3], [3], [4]])
        # mode tie {2, 3} -> 2, count 2 of 5
        assert disagreement_token_q(heads)[0] == pytest.approx(0.6, abs=0)

    def test_no_dropout_collapses_committee(self):
        model = ParserModel.initial(dims=DIMS, hyper=HyperParams(p_drop=0.0))
        rng = np.random.default_rng(4)
        model.arc_weights[:] = rng.standard_normal(DIMS)
        s = make_sentence(["a", "b", "c"], [2, 0, 2], upos=["N", "V", "N"])
        score = bald(model, s, k=5, rng_seed=11)
        assert score.sentence_q == 0.0

    def test_dropout_committee_disagrees_somewhere(self):
        model = ParserModel.initial(dims=DIMS, hyper=HyperParams(p_drop=0.5))
        rng = np.random.default_rng(5)
        model.arc_weights[:] = rng.standard_normal(DIMS)
        sentences = [
            make_sentence([f"w{i}{j}" for j in range(6)], [0, 1, 1, 1, 1, 1], sid=f"b{i}")
            for i in range(5)
        ]
        scores = [bald(model, s, k=5, rng_seed=13) for s in sentences]
        assert any(sc.sentence_q > 0 for sc in scores)
        again = [bald(model, s, k=5, rng_seed=13) for s in sentences]
        assert [a.sentence_q for a in again] == [s.sentence_q for s in scores]

    def test_bad_committee_size(self):
        model = ParserModel.initial(dims=DIMS)
        with pytest.raises(ValueError):
            bald(model, make_sentence(["a"], [0]), k=0, rng_seed=0)


def _amp_score(sid, sentence_q, token_q):
    return QualityScore(sentence_id=sid, sentence_q=sentence_q, token_q=token_q, strategy="AMP")


def _feat(sid, vec):
    return DiversityFeature(vector=_unit(vec), kind=AVERAGED, owner=sid)


class TestInformationDensity:
    def test_singleton_pool_is_exactly_amp(self):
        amp_score = _amp_score("a", 0.37, (0.2, 0.54))
        [out] = information_density([amp_score], [_feat("a", [0.3, 0.7, 0.1])])
        assert out.sentence_q == amp_score.sentence_q
        assert out.token_q == amp_score.token_q
        assert out.strategy == "ID"

    def test_orthogonal_pair_halves(self):
        scores = [_amp_score("a", 0.8, (0.8,)), _amp_score("b", 0.6, (0.6,))]
        feats = [_feat("a", [1, 0]), _feat("b", [0, 1])]
        out = information_density(scores, feats)
        assert out[0].sentence_q == pytest.approx(0.4, abs=1e-12)
        assert out[1].sentence_q == pytest.approx(0.3, abs=1e-12)

    def test_three_pool_hand_mean(self):
        # cosines from the first item: 1 (self), 0.5, 0.5 -> density 2/3
        v = np.array([1.0, 0.0])
        w = np.array([0.5, np.sqrt(3) / 2])
        u = np.array([0.5, -np.sqrt(3) / 2])
        scores = [_amp_score(s, 0.9, (0.9,)) for s in ("a", "b", "c")]
        feats = [_feat("a", v), _feat("b", w), _feat("c", u)]
        out = information_density(scores, feats)
        assert out[0].sentence_q == pytest.approx(0.9 * 2 / 3, abs=1e-9)

    def test_empty_pool_rejected(self):
        with pytest.raises(ValueError):
            information_density([], [])

    def test_id_never_exceeds_amp(self):
        rng = np.random.default_rng(6)
        scores, feats = [], []
        for i in range(40):
            q = float(rng.random())
            scores.append(_amp_score(f"s{i}", q, (q,)))
            feats.append(_feat(f"s{i}", rng.standard_normal(16)))
        for out, src in zip(information_density(scores, feats), scores):
            assert out.sentence_q <= src.sentence_q + 1e-12
            assert out.sentence_q >= 0.0


class TestRandomQuality:
    def _pool(self):
        return [make_sentence(["a", "b"], [2, 0], sid=f"r{i}") for i in range(10)]

    def test_deterministic(self):
        a = random_quality(self._pool(), rng_seed=5)
        b = random_quality(self._pool(), rng_seed=5)
        assert [x.sentence_q for x in a] == [x.sentence_q for x in b]
        assert [x.token_q for x in a] == [x.token_q for x in b]

    def test_range(self):
        for q in random_quality(self._pool(), rng_seed=6):
            assert 0.0 <= q.sentence_q <= 1.0
            assert all(0.0 <= t <= 1.0 for t in q.token_q)
            assert q.strategy == "RANDOM"

    def test_seeds_differ(self):
        a = random_quality(self._pool(), rng_seed=1)
        b = random_quality(self._pool(), rng_seed=2)
        assert [x.sentence_q for x in a] != [x.sentence_q for x in b]


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=2**32 - 1))
def test_amp_bounds_property(n, seed):
    table = random_table(np.random.default_rng(seed), n)
    score = amp(arc_marginals(table), decode_cle(table))
    assert -1e-12 <= score.sentence_q <= 1.0 + 1e-12


def test_quality_csv_dump(tmp_path):
    scores = [_amp_score("a", 0.5, (0.25, 0.75))]
    path = tmp_path / "quality.csv"
    write_quality_csv(scores, path)
    text = path.read_text()
    assert text.splitlines()[0] == "sentence_id,strategy,sentence_q,token_q"
    assert "0.25 0.75" in text


def test_unknown_strategy_rejected():
    with pytest.raises(ValueError):
        QualityScore(sentence_id="x", sentence_q=0.0, token_q=(), strategy="WAT")
