"""Active-learning simulation rounds, evaluation and experiment harness.

Every round follows one pipeline regardless of strategy or selection
operator: train a fresh model on the annotated tokens, score the
unlabeled pool, pick sentences into a token-count budget (stage 1), pick
tokens from those sentences (stage 2), reveal gold annotations for the
picked tokens, evaluate on the held-out split and record the round.
Strategies differ only in where the quality scores come from; the
diversity-aware arm differs only in the selection operator.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import diversity as div
from . import quality as qual
from .config import RunConfig
from .dpp import GreedyStep, SelectionKernel, greedy_map
from .hashing import derive_seed
from .parser import HyperParams, ParserModel, label_relations, save_model, score_sentence, train
from .structured import arc_marginals
from .treebank import Corpus, PoolState, Sentence, duplicate_corpus, read_conllu, seed_pool
from .trees import ParseTree, decode_cle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    uas: float
    las: float
    tokens_annotated_cumulative: int
    ibad: dict
    ibmd: dict
    wall_time: float
    selected_sentences: tuple
    selected_tokens: tuple
    exhausted: bool = False


def evaluate(model: ParserModel, test: Corpus, single_root: bool = False) -> tuple[float, float]:
    """(UAS, LAS) percentages over every token of a fully gold test corpus."""
    if len(test) == 0:
        raise ValueError("test corpus is empty")
    total = head_ok = both_ok = 0
    for s in test:
        gold_heads = s.gold_heads()
        table = score_sentence(model, s)
        tree = decode_cle(table, single_root=single_root)
        rels = label_relations(model, s, tree.heads)
        for m in range(s.n):
            total += 1
            if tree.heads[m] == gold_heads[m]:
                head_ok += 1
                if rels[m] == s.tokens[m].gold_rel:
                    both_ok += 1
    return 100.0 * head_ok / total, 100.0 * both_ok / total


def _labels_in_view(view: Sequence[Sentence]) -> tuple[str, ...]:
    labels = {t.gold_rel for s in view for t in s.tokens if t.annotated}
    return tuple(sorted(labels))


def _greedy_quality_selection(q: np.ndarray, sizes: np.ndarray, budget: int) -> list[int]:
    """Descending-quality fill with the budget checked before each add."""
    order = np.argsort(-q, kind="stable")
    out: list[int] = []
    total = 0
    for i in order:
        if total >= budget:
            break
        out.append(int(i))
        total += int(sizes[i])
    return out


def _dpp_selection(
    ids: Sequence,
    q: np.ndarray,
    phi: np.ndarray,
    sizes: np.ndarray,
    budget: int,
    cap: int,
    trace: list[GreedyStep],
) -> list:
    if len(ids) > cap:
        keep = np.sort(np.argsort(-q, kind="stable")[:cap])
        ids = [ids[i] for i in keep]
        q, phi, sizes = q[keep], phi[keep], sizes[keep]
    kernel = SelectionKernel.build(ids, q, phi, sizes)
    return greedy_map(kernel, budget, trace)


@dataclass
class _PoolScores:
    sentences: list[Sentence]
    predictions: dict
    quality: dict
    averaged: dict
    subgraph: dict
    vocab: div.SubgraphVocabulary


def _score_pool(
    pool: Sequence[Sentence],
    model: ParserModel,
    config: RunConfig,
    projection: div.AveragedProjection,
    round_seed: int,
) -> _PoolScores:
    need_marginals = config.strategy in ("AMP", "ID")
    predictions: dict[str, ParseTree] = {}
    amps: list[qual.QualityScore] = []
    for s in pool:
        table = score_sentence(model, s)
        tree = decode_cle(table, single_root=config.single_root)
        rels = label_relations(model, s, tree.heads)
        predictions[s.id] = ParseTree(heads=tree.heads, rels=rels)
        if need_marginals:
            marg = arc_marginals(table, single_root=config.single_root)
            amps.append(qual.amp(marg, predictions[s.id], sentence_id=s.id))

    vocab = div.fit_subgraph_vocab([(s, predictions[s.id]) for s in pool])
    averaged = {s.id: projection.sentence_feature(s) for s in pool}
    subgraph = {s.id: div.subgraph_counts(s, predictions[s.id], vocab) for s in pool}

    quality: dict[str, qual.QualityScore] = {}
    if config.strategy == "RANDOM":
        for score in qual.random_quality(pool, derive_seed(round_seed, "random")):
            quality[score.sentence_id] = score
    elif config.strategy == "BALD":
        for s in pool:
            quality[s.id] = qual.bald(
                model,
                s,
                config.k_bald,
                derive_seed(round_seed, "bald", s.id),
                single_root=config.single_root,
            )
    else:
        if config.strategy == "AMP":
            for score in amps:
                quality[score.sentence_id] = score
        else:
            feats = [averaged[s.id] for s in pool]
            for score in qual.information_density(amps, feats):
                quality[score.sentence_id] = score
    return _PoolScores(
        sentences=list(pool),
        predictions=predictions,
        quality=quality,
        averaged=averaged,
        subgraph=subgraph,
        vocab=vocab,
    )


def run_round(
    state: PoolState,
    model: ParserModel,
    config: RunConfig,
    test_corpus: Corpus,
    round_seed: int | None = None,
    projection: div.AveragedProjection | None = None,
) -> tuple[PoolState, ParserModel, RoundRecord]:
    """One selection-train cycle; returns the new pool, the round's model and its record.

    ``model`` supplies the architecture (hash dim, hyperparameters); the
    weights are retrained from scratch on the current annotated set.
    """
    t0 = time.perf_counter()
    round_index = state.round + 1
    if round_seed is None:
        round_seed = derive_seed(state.rng_seed, "round", round_index)
    if projection is None:
        projection = div.AveragedProjection(config.projection_dim, config.projection_seed)

    view = state.training_view()
    labels = _labels_in_view(view)
    fresh = ParserModel.initial(dims=model.dims, labels=labels, hyper=model.hyper)
    trained = train(fresh, view, epochs=config.epochs, rng_seed=derive_seed(round_seed, "train"))

    pool = state.unlabeled_sentences()
    if not pool:
        raise ValueError("no unlabeled tokens remain")
    scores = _score_pool(pool, trained, config, projection, round_seed)

    # Stage 1: sentences into the token-count budget.
    sent_ids = [s.id for s in scores.sentences]
    sent_q = np.array([scores.quality[sid].sentence_q for sid in sent_ids])
    sent_sizes = np.array([s.n for s in scores.sentences], dtype=np.int64)
    stage1_trace: list[GreedyStep] = []
    if config.use_dpp:
        kind_feats = scores.subgraph if config.diversity_kind == div.SUBGRAPH else scores.averaged
        phi = np.stack([kind_feats[sid].vector for sid in sent_ids])
        batch_ids = _dpp_selection(
            sent_ids,
            sent_q,
            phi,
            sent_sizes,
            config.sentence_stage_token_budget,
            config.candidate_cap,
            stage1_trace,
        )
    else:
        picked = _greedy_quality_selection(sent_q, sent_sizes, config.sentence_stage_token_budget)
        batch_ids = [sent_ids[i] for i in picked]
    batch = [state.corpus[sid] for sid in batch_ids]

    # Stage 2: unannotated tokens of the stage-1 batch.
    cand: list[tuple[str, int]] = []
    cand_q: list[float] = []
    for s in batch:
        token_q = scores.quality[s.id].token_q
        for idx in state.unannotated_indices(s):
            cand.append((s.id, idx))
            cand_q.append(token_q[idx - 1])
    cand_q_arr = np.array(cand_q) if cand else np.zeros(0)
    stage2_trace: list[GreedyStep] = []
    if config.use_dpp and cand:
        if config.diversity_kind == div.SUBGRAPH:
            phi_tok = np.stack(
                [
                    div.token_subgraph_feature(
                        state.corpus[sid], scores.predictions[sid], scores.vocab, idx
                    ).vector
                    for sid, idx in cand
                ]
            )
        else:
            phi_tok = np.stack(
                [projection.token_feature(state.corpus[sid], idx).vector for sid, idx in cand]
            )
        selected_tokens = _dpp_selection(
            cand,
            cand_q_arr,
            phi_tok,
            np.ones(len(cand), dtype=np.int64),
            config.token_budget_per_round,
            config.candidate_cap,
            stage2_trace,
        )
    else:
        picked = _greedy_quality_selection(
            cand_q_arr, np.ones(len(cand), dtype=np.int64), config.token_budget_per_round
        )
        selected_tokens = [cand[i] for i in picked]

    exhausted = len(selected_tokens) < config.token_budget_per_round
    if exhausted:
        logger.warning(
            "round %d: pool exhausted, annotating %d of %d budgeted tokens",
            round_index,
            len(selected_tokens),
            config.token_budget_per_round,
        )

    new_state = state.with_annotations(selected_tokens)
    uas, las = evaluate(trained, test_corpus, single_root=config.single_root)

    ibad: dict[str, float] = {}
    ibmd: dict[str, float] = {}
    for kind, feats in ((div.AVERAGED, scores.averaged), (div.SUBGRAPH, scores.subgraph)):
        if len(batch_ids) >= 2:
            mat = np.stack([feats[sid].vector for sid in batch_ids])
            ibad[kind], ibmd[kind] = div.ibad_ibmd(mat)
        else:
            ibad[kind] = ibmd[kind] = float("nan")

    for step in stage1_trace + stage2_trace:
        if step.fallback:
            logger.info("round %d: greedy fallback pick %r", round_index, step.item)

    record = RoundRecord(
        round=round_index,
        uas=uas,
        las=las,
        tokens_annotated_cumulative=new_state.n_labeled(),
        ibad=ibad,
        ibmd=ibmd,
        wall_time=time.perf_counter() - t0,
        selected_sentences=tuple(batch_ids),
        selected_tokens=tuple(selected_tokens),
        exhausted=exhausted,
    )
    return new_state, trained, record


def _has_unlabeled(state: PoolState) -> bool:
    return any(True for _ in state.unlabeled_sentences())


def run_single(
    config: RunConfig,
    train_corpus: Corpus,
    test_corpus: Corpus,
    run_seed: int,
    out_dir: Path | None = None,
    repeat_index: int = 0,
) -> list[RoundRecord]:
    """One full AL run: seed pool, then ``config.rounds`` selection cycles."""
    state = seed_pool(train_corpus, config.n_seed_sentences, derive_seed(run_seed, "seed-pool"))
    state = PoolState(
        corpus=state.corpus, labeled=state.labeled, round=0, rng_seed=run_seed
    )
    hyper = HyperParams(
        learning_rate=config.learning_rate, epochs=config.epochs, p_drop=config.p_drop
    )
    template = ParserModel.initial(dims=config.hash_dim, labels=(), hyper=hyper)
    projection = div.AveragedProjection(config.projection_dim, config.projection_seed)

    records: list[RoundRecord] = []
    for _ in range(config.rounds):
        if not _has_unlabeled(state):
            break
        round_index = state.round + 1
        state, model, record = run_round(
            state,
            template,
            config,
            test_corpus,
            round_seed=derive_seed(run_seed, "round", round_index),
            projection=projection,
        )
        records.append(record)
        if out_dir is not None and config.save_models:
            models_dir = out_dir / "models"
            models_dir.mkdir(parents=True, exist_ok=True)
            save_model(model, models_dir / f"repeat{repeat_index}_round{round_index}.npz")
            state.save_checkpoint(models_dir / f"repeat{repeat_index}_round{round_index}.pool.json")
        if record.exhausted:
            break
    return records


def load_corpora(config: RunConfig) -> tuple[Corpus, Corpus]:
    """Training pool (after duplication) and test corpus for a config.

    Without an explicit test corpus, every 10th sentence is held out of
    the training file before duplication.
    """
    base = read_conllu(config.corpus, require_gold=True)
    if config.test_corpus:
        test = read_conllu(config.test_corpus, require_gold=True)
    else:
        held = tuple(s for i, s in enumerate(base) if i % 10 == 0)
        kept = tuple(s for i, s in enumerate(base) if i % 10 != 0)
        if not held or not kept:
            raise ValueError("corpus too small to hold out a test split")
        base, test = Corpus(sentences=kept), Corpus(sentences=held)
    pool = duplicate_corpus(base, config.fold) if config.fold > 1 else base
    return pool, test


@dataclass
class ExperimentReport:
    config: RunConfig
    n_repeats: int
    records: list  # one list[RoundRecord] per repeat

    def curve_rows(self) -> list[dict]:
        rows = []
        max_rounds = max(len(r) for r in self.records)
        for i in range(max_rounds):
            las = [r[i].las for r in self.records if len(r) > i]
            uas = [r[i].uas for r in self.records if len(r) > i]
            rows.append(
                {
                    "round": i + 1,
                    "strategy": self.config.strategy,
                    "use_dpp": self.config.use_dpp,
                    "mean_las": _mean(las),
                    "std_las": _std(las),
                    "mean_uas": _mean(uas),
                    "std_uas": _std(uas),
                }
            )
        return rows

    def diversity_rows(self) -> list[dict]:
        rows = []
        max_rounds = max(len(r) for r in self.records)
        for i in range(max_rounds):
            for kind in div.FEATURE_KINDS:
                ibad = [r[i].ibad[kind] for r in self.records if len(r) > i]
                ibmd = [r[i].ibmd[kind] for r in self.records if len(r) > i]
                rows.append(
                    {
                        "round": i + 1,
                        "strategy": self.config.strategy,
                        "use_dpp": self.config.use_dpp,
                        "kind": kind,
                        "mean_ibad": _mean(ibad),
                        "std_ibad": _std(ibad),
                        "mean_ibmd": _mean(ibmd),
                        "std_ibmd": _std(ibmd),
                    }
                )
        return rows


def _mean(values: Sequence[float]) -> float:
    return float(np.mean(values)) if values else float("nan")


def _std(values: Sequence[float]) -> float:
    """Sample standard deviation; a single observation has spread zero."""
    if len(values) <= 1:
        return 0.0
    return float(np.std(values, ddof=1))


CURVE_COLUMNS = ["round", "strategy", "use_dpp", "mean_las", "std_las", "mean_uas", "std_uas"]
DIVERSITY_COLUMNS = [
    "round",
    "strategy",
    "use_dpp",
    "kind",
    "mean_ibad",
    "std_ibad",
    "mean_ibmd",
    "std_ibmd",
]


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(rows: list[dict], columns: list[str], path: Path) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_selections_jsonl(report: ExperimentReport, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for repeat, records in enumerate(report.records):
            for rec in records:
                fh.write(
                    json.dumps(
                        {
                            "repeat": repeat,
                            "round": rec.round,
                            "sentences": list(rec.selected_sentences),
                            "tokens": [[sid, idx] for sid, idx in rec.selected_tokens],
                        },
                        sort_keys=True,
                        separators=(",", ":"),
                    )
                    + "\n"
                )


def run_experiment(
    config: RunConfig, n_repeats: int, out_dir: str | Path | None = None
) -> ExperimentReport:
    """Repeat the configured run with derived seeds and aggregate the curves.

    With an output directory, writes ``curves.csv``, ``diversity.csv``
    and ``selections.jsonl`` (plus optional model checkpoints).
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    pool, test = load_corpora(config)
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    all_records = []
    for repeat in range(n_repeats):
        run_seed = derive_seed(config.seed, "repeat", repeat)
        records = run_single(config, pool, test, run_seed, out_dir=out_path, repeat_index=repeat)
        all_records.append(records)
        logger.info(
            "repeat %d finished: %d rounds, final LAS %.2f",
            repeat,
            len(records),
            records[-1].las if records else float("nan"),
        )

    report = ExperimentReport(config=config, n_repeats=n_repeats, records=all_records)
    if out_path is not None:
        write_rows_csv(report.curve_rows(), CURVE_COLUMNS, out_path / "curves.csv")
        write_rows_csv(report.diversity_rows(), DIVERSITY_COLUMNS, out_path / "diversity.csv")
        write_selections_jsonl(report, out_path / "selections.jsonl")
    return report


def sweep_experiment(
    base_config: RunConfig,
    n_repeats: int,
    out_dir: str | Path,
    strategies: Sequence[str] = ("RANDOM", "AMP", "BALD", "ID"),
    dpp_options: Sequence[bool] = (False, True),
) -> list[ExperimentReport]:
    """Strategy x DPP grid; per-combo outputs plus merged top-level CSVs."""
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    reports = []
    for strategy in strategies:
        for use_dpp in dpp_options:
            combo = base_config.with_overrides(strategy=strategy, use_dpp=use_dpp)
            combo_dir = out_path / f"{strategy.lower()}{'-dpp' if use_dpp else ''}"
            reports.append(run_experiment(combo, n_repeats, combo_dir))
    merged_curves = [row for rep in reports for row in rep.curve_rows()]
    merged_div = [row for rep in reports for row in rep.diversity_rows()]
    write_rows_csv(merged_curves, CURVE_COLUMNS, out_path / "curves.csv")
    write_rows_csv(merged_div, DIVERSITY_COLUMNS, out_path / "diversity.csv")
    return reports
