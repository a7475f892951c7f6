"""Command-line front end.

    cwrank preprocess --input train.tsv --preset M2 --out runs
    cwrank chi2       --train train.tsv --out runs --top-k 20
    cwrank train      --preset M2 --train train.tsv --dev dev.tsv --out runs
    cwrank predict    --checkpoint runs/x.best.ckpt --vocab runs/x.vocab.tsv \
                      --input test.tsv --out runs
    cwrank evaluate   --gold dev.tsv --run runs/x.run.tsv
    cwrank presets

Every option can also come from a flat key=value config file (--config);
explicit flags win over config values. Exit codes: 0 success, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .data import (
    AugmentMode,
    augment,
    load_clef_tsv,
    load_pheme,
    load_twitter1516,
    read_predictions,
    write_predictions,
)
from .errors import ConfigError, CwrankError
from .features import Provider, ProviderKind, ProviderPlan, TfIdfModel, precomputed_provider
from .metrics import format_metrics_row, judge_run, metrics_row
from .model import ModelConfig, load_checkpoint, rank_topics, save_checkpoint, score_corpus
from .optim import OptimConfig, train, write_history
from .preprocess import (
    ConsolidationMap,
    PreprocessPolicy,
    chi2_scores,
    preprocess_texts,
    propose_consolidation,
    segment,
)
from .presets import PRESETS, Preset, get_preset
from .vocab import Vocabulary

log = logging.getLogger("cwrank")


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of calling sys.exit, so main() owns
    the exit code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_COERCERS = {int: int, float: float, str: str}


def _merge_config(args: argparse.Namespace, parser_types: dict[str, type]) -> None:
    """Fill None-valued options from the --config file; flags win."""
    if not getattr(args, "config", None):
        return
    values = _read_config_file(args.config)
    for key, raw in values.items():
        if key not in parser_types:
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key, None) is None:
            caster = _COERCERS[parser_types[key]]
            try:
                setattr(args, key, caster(raw))
            except ValueError:
                raise UsageError(f"config key {key!r}: cannot parse {raw!r}") from None


def _add(parser: _Parser, types: dict[str, type], flag: str, typ: type = str, **kw) -> None:
    dest = flag.lstrip("-").replace("-", "_")
    types[dest] = typ
    parser.add_argument(flag, type=typ, default=None, **kw)


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"missing required option(s): {flags}")


def _policy_for(args: argparse.Namespace) -> tuple[PreprocessPolicy, Preset]:
    preset = get_preset(args.preset)
    if getattr(args, "consolidation", None):
        preset = preset.with_consolidation(ConsolidationMap.load(args.consolidation))
    return preset.policy, preset


def _out_path(args: argparse.Namespace, filename: str) -> Path:
    out = Path(args.out if args.out is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out / filename


# --- subcommands -------------------------------------------------------------


def _cmd_presets(_args: argparse.Namespace) -> int:
    for name in sorted(PRESETS):
        print(f"{name}\t{PRESETS[name].description}")
    return 0


def _cmd_preprocess(args: argparse.Namespace) -> int:
    _require(args, "input", "preset")
    policy, _ = _policy_for(args)
    tweets = load_clef_tsv(args.input)
    run_id = args.run_id or "prep"
    path = _out_path(args, f"{run_id}.tokens.tsv")
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for tweet, tokens in zip(
            tweets, preprocess_texts([t.text for t in tweets], policy)
        ):
            fh.write(f"{tweet.topic_id}\t{tweet.tweet_id}\t{tweet.label}\t{' '.join(tokens)}\n")
    log.info("wrote %s (%d tweets)", path, len(tweets))
    return 0


def _cmd_chi2(args: argparse.Namespace) -> int:
    _require(args, "train")
    tweets = load_clef_tsv(args.train)
    table = chi2_scores([segment(t.text) for t in tweets], [t.label for t in tweets])
    run_id = args.run_id or "chi2"
    path = _out_path(args, f"{run_id}.chi2.tsv")
    table.export_tsv(path)
    top_k = args.top_k if args.top_k is not None else 20
    for term, score in propose_consolidation(table, top_k):
        print(f"{term}\t{score:.4f}")
    log.info("wrote %s (%d terms)", path, len(table.entries))
    return 0


def _load_augmentation(args: argparse.Namespace, mode: AugmentMode):
    pheme = tw15 = tw16 = None
    needs_pheme = mode in (
        AugmentMode.PHEME_RUMOURS_ONLY,
        AugmentMode.PHEME_ALL,
        AugmentMode.PHEME_PLUS_TW1516,
        AugmentMode.EXTERNAL_ONLY,
    )
    needs_tw = mode in (
        AugmentMode.TW1516,
        AugmentMode.PHEME_PLUS_TW1516,
        AugmentMode.EXTERNAL_ONLY,
    )
    if needs_pheme:
        _require(args, "pheme")
        loaded = load_pheme(
            args.pheme, rumours_only=mode is AugmentMode.PHEME_RUMOURS_ONLY
        )
        if loaded.skipped_conversations:
            log.warning(
                "skipped %d unreadable conversations under %s",
                loaded.skipped_conversations,
                args.pheme,
            )
        pheme = loaded.tweets
    if needs_tw:
        _require(args, "tw15", "tw16")
        tw15 = load_twitter1516(args.tw15, "tw15")
        tw16 = load_twitter1516(args.tw16, "tw16")
    return pheme, tw15, tw16


def _cmd_train(args: argparse.Namespace) -> int:
    _require(args, "preset", "train", "dev")
    policy, preset = _policy_for(args)
    clef_train = load_clef_tsv(args.train)
    dev = load_clef_tsv(args.dev)
    pheme, tw15, tw16 = _load_augmentation(args, preset.augment)
    dataset = augment(clef_train, preset.augment, pheme=pheme, tw15=tw15, tw16=tw16)

    dim = args.dim if args.dim is not None else 64
    if preset.provider_kind is ProviderKind.PRECOMPUTED:
        if args.embeddings:
            plan = ProviderPlan(ProviderKind.PRECOMPUTED, embeddings_path=args.embeddings)
        else:
            log.warning(
                "preset %s expects --embeddings; falling back to a trainable "
                "table (dim %d). Published static-vector scores are reference "
                "points only for this run.",
                preset.name,
                dim,
            )
            plan = ProviderPlan(ProviderKind.TRAINABLE, dim=dim)
    elif preset.provider_kind is ProviderKind.TFIDF_CONCAT:
        plan = ProviderPlan(ProviderKind.TFIDF_CONCAT, dim=dim)
    else:
        plan = ProviderPlan(ProviderKind.TRAINABLE, dim=dim)

    seed = args.seed if args.seed is not None else 0
    model_config = ModelConfig(
        filter_widths=preset.filter_widths,
        embed_dim=dim,
        seed=seed,
    )
    optim_config = OptimConfig(
        learning_rate=args.lr if args.lr is not None else 2e-5,
        epochs=args.epochs if args.epochs is not None else 8,
        batch_size=args.batch_size if args.batch_size is not None else 10,
        seed=seed,
    )
    result = train(dataset, dev, model_config, optim_config, plan, policy)

    run_id = args.run_id or f"{preset.name.lower()}-s{seed}"
    vocab_path = _out_path(args, f"{run_id}.vocab.tsv")
    result.vocabulary.save(vocab_path)
    meta = {
        "run_id": run_id,
        "preset": preset.name,
        "policy": policy.to_dict(),
        "provider": result.provider.describe(),
        "vocab_sha256": result.vocabulary.sha256(),
        "optim": {
            "learning_rate": optim_config.learning_rate,
            "epochs": optim_config.epochs,
            "batch_size": optim_config.batch_size,
            "seed": optim_config.seed,
            "shuffle": optim_config.shuffle,
        },
        "best_epoch": result.best_epoch,
    }
    if result.provider.tfidf is not None:
        meta["tfidf"] = {
            "n_docs": result.provider.tfidf.n_docs,
            "df": result.provider.tfidf.document_frequency,
        }
    final_path = _out_path(args, f"{run_id}.final.ckpt")
    best_path = _out_path(args, f"{run_id}.best.ckpt")
    save_checkpoint(final_path, result.params, result.config, meta)
    save_checkpoint(best_path, result.best_params, result.config, meta)
    history_path = _out_path(args, f"{run_id}.history.tsv")
    write_history(result.history, history_path)
    last = result.history[-1]
    log.info(
        "trained %d tweets, %d epochs; final dev MAP %.4f (best %.4f at epoch %d)",
        len(dataset),
        optim_config.epochs,
        last.dev_map,
        max(h.dev_map for h in result.history),
        result.best_epoch,
    )
    print(f"checkpoint\t{final_path}")
    print(f"best_checkpoint\t{best_path}")
    print(f"history\t{history_path}")
    print(f"vocab\t{vocab_path}")
    return 0


def _provider_from_header(
    header: dict, vocabulary: Vocabulary, args: argparse.Namespace
) -> Provider:
    desc = header["provider"]
    kind = ProviderKind(desc["kind"])
    if kind is ProviderKind.PRECOMPUTED:
        path = getattr(args, "embeddings", None) or desc.get("source_path")
        if not path or not Path(path).is_file():
            raise ConfigError(
                "checkpoint was trained with precomputed vectors; pass "
                "--embeddings with the original file"
            )
        return precomputed_provider(path, vocabulary)
    if kind is ProviderKind.TFIDF_CONCAT:
        stored = header.get("tfidf")
        if stored is None:
            raise ConfigError("checkpoint lacks the TF-IDF state it was trained with")
        return Provider(
            kind=kind,
            dim=int(desc["dim"]),
            tfidf=TfIdfModel(
                document_frequency=dict(stored["df"]), n_docs=int(stored["n_docs"])
            ),
            tfidf_terms=vocabulary.id_to_token[4:],
        )
    return Provider(kind=kind, dim=int(desc["dim"]))


def _cmd_predict(args: argparse.Namespace) -> int:
    _require(args, "checkpoint", "vocab", "input")
    ckpt = load_checkpoint(args.checkpoint)
    vocabulary = Vocabulary.load(args.vocab)
    stored_hash = ckpt.header.get("vocab_sha256")
    if stored_hash and vocabulary.sha256() != stored_hash:
        raise ConfigError(
            f"{args.vocab} does not match the vocabulary this checkpoint was trained with"
        )
    policy = PreprocessPolicy.from_dict(ckpt.header["policy"])
    provider = _provider_from_header(ckpt.header, vocabulary, args)
    tweets = load_clef_tsv(args.input)
    token_lists = preprocess_texts([t.text for t in tweets], policy)
    encoded = [vocabulary.encode(t) for t in token_lists]
    batch_size = args.batch_size if args.batch_size is not None else 10
    scores = score_corpus(
        encoded, token_lists, ckpt.params, ckpt.config, provider, batch_size
    )
    run_id = args.run_id or f"{ckpt.header.get('run_id', 'run')}-pred"
    runs = rank_topics(tweets, scores, run_id)
    path = _out_path(args, f"{run_id}.run.tsv")
    write_predictions(runs, path)
    log.info("wrote %s (%d topics, %d tweets)", path, len(runs), len(tweets))
    print(f"run\t{path}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    _require(args, "gold", "run")
    gold_tweets = load_clef_tsv(args.gold)
    gold = {(t.topic_id, t.tweet_id): t.label for t in gold_tweets}
    runs = read_predictions(args.run)
    by_run: dict[str, list] = {}
    for run in runs:
        by_run.setdefault(run.run_id, []).append(run)
    for run_id, topic_runs in by_run.items():
        judged = [judge_run(r, gold) for r in topic_runs]
        row = metrics_row(judged)
        print(f"run_id\t{run_id}")
        print(format_metrics_row(row))
    return 0


# --- parser ------------------------------------------------------------------


def build_parser() -> tuple[_Parser, dict[str, dict[str, type]]]:
    parser = _Parser(prog="cwrank", description=__doc__, add_help=True)
    sub = parser.add_subparsers(dest="command")
    type_maps: dict[str, dict[str, type]] = {}

    def new_parser(name: str, help_text: str) -> tuple[_Parser, dict[str, type]]:
        p = sub.add_parser(name, help=help_text)
        types: dict[str, type] = {}
        type_maps[name] = types
        _add(p, types, "--config")
        _add(p, types, "--out")
        _add(p, types, "--run-id")
        return p, types

    p, t = new_parser("preprocess", "tokenize a dataset under a preset policy")
    _add(p, t, "--input")
    _add(p, t, "--preset")
    _add(p, t, "--consolidation")

    p, t = new_parser("chi2", "score hashtags/mentions by class dependence")
    _add(p, t, "--train")
    _add(p, t, "--top-k", int)

    p, t = new_parser("train", "train a ranking model")
    _add(p, t, "--preset")
    _add(p, t, "--train")
    _add(p, t, "--dev")
    _add(p, t, "--embeddings")
    _add(p, t, "--consolidation")
    _add(p, t, "--pheme")
    _add(p, t, "--tw15")
    _add(p, t, "--tw16")
    _add(p, t, "--seed", int)
    _add(p, t, "--dim", int)
    _add(p, t, "--lr", float)
    _add(p, t, "--epochs", int)
    _add(p, t, "--batch-size", int)

    p, t = new_parser("predict", "score and rank tweets with a checkpoint")
    _add(p, t, "--checkpoint")
    _add(p, t, "--vocab")
    _add(p, t, "--input")
    _add(p, t, "--embeddings")
    _add(p, t, "--batch-size", int)

    p, t = new_parser("evaluate", "metrics row for a run file against gold labels")
    _add(p, t, "--gold")
    _add(p, t, "--run")

    sub.add_parser("presets", help="list run presets")
    return parser, type_maps


_COMMANDS = {
    "preprocess": _cmd_preprocess,
    "chi2": _cmd_chi2,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "presets": _cmd_presets,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser, type_maps = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no command given; see --help")
        if args.command in type_maps:
            _merge_config(args, type_maps[args.command])
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (CwrankError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
