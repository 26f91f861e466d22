import json

import pytest

from conftest import make_corpus, make_sentence
from dppal.treebank import (
    ConlluParseError,
    PoolState,
    Token,
    TreeValidationError,
    duplicate_corpus,
    read_conllu,
    seed_pool,
    write_conllu,
)


def _write(tmp_path, text, name="sample.conllu"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


MINIMAL = (
    "# sent_id = ex1\n"
    "1\tHe\t_\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
    "2\tleft\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
    "\n"
)


class TestReadConllu:
    def test_minimal_two_token_sentence(self, tmp_path):
        corpus = read_conllu(_write(tmp_path, MINIMAL))
        assert len(corpus) == 1
        s = corpus.sentences[0]
        assert s.id == "ex1" and s.n == 2
        assert [t.gold_head for t in s.tokens] == [2, 0]
        assert all(not t.annotated for t in s.tokens)

    def test_multiword_token_range_skipped(self, tmp_path):
        text = (
            "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "1\tdo\t_\tAUX\t_\t_\t0\troot\t_\t_\n"
            "2\tnot\t_\tPART\t_\t_\t1\tadvmod\t_\t_\n"
            "\n"
        )
        corpus = read_conllu(_write(tmp_path, text))
        assert [t.form for t in corpus.sentences[0].tokens] == ["do", "not"]

    def test_empty_node_skipped(self, tmp_path):
        text = (
            "1\ta\t_\tX\t_\t_\t0\troot\t_\t_\n"
            "1.1\tghost\t_\tX\t_\t_\t_\t_\t_\t_\n"
            "\n"
        )
        corpus = read_conllu(_write(tmp_path, text))
        assert corpus.sentences[0].n == 1

    def test_two_cycle_rejected(self, tmp_path):
        text = (
            "# sent_id = bad\n"
            "1\ta\t_\tX\t_\t_\t2\tdep\t_\t_\n"
            "2\tb\t_\tX\t_\t_\t1\tdep\t_\t_\n"
            "\n"
        )
        with pytest.raises(TreeValidationError, match="bad"):
            read_conllu(_write(tmp_path, text))

    def test_wrong_column_count_names_line(self, tmp_path):
        text = "1\ta\tX\n\n"
        with pytest.raises(ConlluParseError, match="line 1"):
            read_conllu(_write(tmp_path, text))

    def test_non_integer_head_names_line(self, tmp_path):
        text = "1\ta\t_\tX\t_\t_\ttwo\tdep\t_\t_\n\n"
        with pytest.raises(ConlluParseError, match="line 1"):
            read_conllu(_write(tmp_path, text))

    def test_missing_gold_rejected_in_simulation_mode(self, tmp_path):
        text = "1\ta\t_\tX\t_\t_\t_\t_\t_\t_\n\n"
        path = _write(tmp_path, text)
        read_conllu(path)  # fine without the gold requirement
        with pytest.raises(TreeValidationError, match="missing gold"):
            read_conllu(path, require_gold=True)

    def test_head_out_of_range_rejected(self, tmp_path):
        text = "1\ta\t_\tX\t_\t_\t5\tdep\t_\t_\n\n"
        with pytest.raises(TreeValidationError):
            read_conllu(_write(tmp_path, text))

    def test_roundtrip(self, tmp_path, toy_corpus_paths):
        train_path, _ = toy_corpus_paths
        corpus = read_conllu(train_path)
        back = tmp_path / "back.conllu"
        write_conllu(corpus, back)
        again = read_conllu(back)
        assert len(again) == len(corpus)
        for a, b in zip(corpus, again):
            assert a.id == b.id
            assert [t.form for t in a.tokens] == [t.form for t in b.tokens]
            assert [t.upos for t in a.tokens] == [t.upos for t in b.tokens]
            assert [t.gold_head for t in a.tokens] == [t.gold_head for t in b.tokens]
            assert [t.gold_rel for t in a.tokens] == [t.gold_rel for t in b.tokens]

    def test_head_following_reaches_root(self, toy_corpus_paths):
        corpus = read_conllu(toy_corpus_paths[0])
        for s in corpus:
            heads = [t.gold_head for t in s.tokens]
            for start in range(1, s.n + 1):
                node, steps = start, 0
                while node != 0:
                    node = heads[node - 1]
                    steps += 1
                assert steps <= s.n


class TestTokenInvariants:
    def test_self_head_rejected(self):
        with pytest.raises(ValueError):
            Token(index=2, form="x", gold_head=2)

    def test_annotated_requires_gold(self):
        with pytest.raises(ValueError):
            Token(index=1, form="x", annotated=True)

    def test_duplicate_sentence_ids_rejected(self):
        s = make_sentence(["a"], [0])
        with pytest.raises(ValueError, match="duplicate"):
            make_corpus([s, s])


class TestDuplicateCorpus:
    def _corpus(self, k=3):
        return make_corpus(
            [make_sentence(["w", "v"], [2, 0], sid=f"s{i}") for i in range(k)]
        )

    def test_fold_two_groups_of_two(self):
        dup = duplicate_corpus(self._corpus(3), 2)
        assert len(dup) == 6
        groups = {}
        for s in dup:
            groups.setdefault(s.origin, []).append(s.id)
        assert len(groups) == 3
        assert all(len(v) == 2 for v in groups.values())

    def test_fold_one_changes_only_ids(self):
        base = self._corpus(2)
        dup = duplicate_corpus(base, 1)
        assert len(dup) == 2
        for a, b in zip(base, dup):
            assert b.id != a.id and b.origin == a.id
            assert [t.form for t in a.tokens] == [t.form for t in b.tokens]

    def test_fold_five_single_sentence(self):
        dup = duplicate_corpus(self._corpus(1), 5)
        assert len(dup) == 5
        assert len({s.origin for s in dup}) == 1
        forms = {tuple(t.form for t in s.tokens) for s in dup}
        assert len(forms) == 1

    def test_copy_major_order(self):
        dup = duplicate_corpus(self._corpus(3), 2)
        origins = [s.origin for s in dup]
        assert origins == ["s0", "s1", "s2", "s0", "s1", "s2"]

    def test_group_sizes_equal_fold(self):
        for fold in (1, 2, 5):
            dup = duplicate_corpus(self._corpus(4), fold)
            counts = {}
            for s in dup:
                counts[s.origin] = counts.get(s.origin, 0) + 1
            assert set(counts.values()) == {fold}

    def test_bad_fold(self):
        with pytest.raises(ValueError):
            duplicate_corpus(self._corpus(1), 0)


class TestSeedPool:
    def _corpus(self, k=200):
        return make_corpus(
            [make_sentence(["a", "b", "c"], [2, 0, 2], sid=f"s{i}") for i in range(k)]
        )

    def test_draws_requested_count_fully_annotated(self):
        corpus = self._corpus(200)
        state = seed_pool(corpus, 128, rng_seed=1)
        annotated_sents = {sid for sid, _ in state.labeled}
        assert len(annotated_sents) == 128
        for sid in annotated_sents:
            assert all(state.is_annotated(sid, t.index) for t in corpus[sid].tokens)
        assert state.round == 0
        assert len(state.unlabeled_sentences()) == 72

    def test_zero_seed(self):
        state = seed_pool(self._corpus(5), 0, rng_seed=3)
        assert state.n_labeled() == 0

    def test_deterministic(self):
        c = self._corpus(50)
        a = seed_pool(c, 10, rng_seed=9)
        b = seed_pool(c, 10, rng_seed=9)
        assert a.labeled == b.labeled

    def test_too_many_raises(self):
        with pytest.raises(ValueError):
            seed_pool(self._corpus(5), 6, rng_seed=0)


class TestPoolState:
    def _state(self):
        corpus = make_corpus(
            [make_sentence(["a", "b"], [2, 0], sid=f"s{i}") for i in range(3)]
        )
        return PoolState(corpus=corpus, labeled=frozenset({("s0", 1)}), round=0, rng_seed=4)

    def test_partition_of_token_universe(self):
        state = self._state()
        universe = {(s.id, t.index) for s in state.corpus for t in s.tokens}
        unlabeled = {
            (s.id, i) for s in state.unlabeled_sentences() for i in state.unannotated_indices(s)
        }
        assert state.labeled | unlabeled == universe
        assert not state.labeled & unlabeled

    def test_annotation_advances_round(self):
        state = self._state()
        new = state.with_annotations([("s1", 1), ("s1", 2)])
        assert new.round == 1
        assert new.n_labeled() == 3
        assert state.n_labeled() == 1  # original snapshot untouched

    def test_reannotation_rejected(self):
        state = self._state()
        with pytest.raises(ValueError, match="twice"):
            state.with_annotations([("s0", 1)])

    def test_out_of_range_token(self):
        with pytest.raises(ValueError):
            self._state().with_annotations([("s1", 7)])

    def test_training_view_flags(self):
        view = self._state().training_view()
        assert len(view) == 1
        assert [t.annotated for t in view[0].tokens] == [True, False]

    def test_checkpoint_roundtrip(self, tmp_path):
        state = self._state().with_annotations([("s2", 2)])
        path = tmp_path / "pool.json"
        state.save_checkpoint(path)
        data = json.loads(path.read_text())
        assert data["round"] == 1
        restored = PoolState.from_checkpoint(state.corpus, path)
        assert restored.labeled == state.labeled
        assert restored.round == state.round
        assert restored.rng_seed == state.rng_seed

    def test_unicode_forms_roundtrip(self, tmp_path):
        s = make_sentence(["dólar", "росла"], [2, 0], sid="u1")
        path = tmp_path / "u.conllu"
        write_conllu(make_corpus([s]), path)
        back = read_conllu(path)
        assert [t.form for t in back.sentences[0].tokens] == ["dólar", "росла"]
