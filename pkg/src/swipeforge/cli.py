"""Command-line entry point.

One binary with subcommands for synthesis, training, evaluation, analysis,
ablation, decoding, and the demo server. All randomness flows from --seed.
Failures print a single machine-readable line ``error<TAB>category<TAB>message``
to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import correct as cor
from . import ctcdecode as ctc
from . import pipeline as pl
from . import translit as tl
from .geometry import KeyboardLayout, LayoutError, load_bundled_layout, load_layout_file
from .synth import SynthConfig, Trace, featurize, read_traces, synthesize_dataset, write_traces


class CliError(RuntimeError):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _resolve_layout(spec: str) -> KeyboardLayout:
    if os.path.exists(spec):
        return load_layout_file(spec)
    try:
        return load_bundled_layout(spec)
    except LayoutError:
        raise CliError("layout", f"no layout file or bundled layout named {spec!r}")


def _read_words(path: str) -> list[str]:
    words = cor.read_vocabulary_file(path)
    if not words:
        raise CliError("input", f"word file {path!r} is empty")
    return words


def cmd_synth(args) -> int:
    layout = _resolve_layout(args.layout)
    words = _read_words(args.words)
    cfg = SynthConfig(points_per_unit=args.points_per_unit,
                      endpoint_sigma=args.endpoint_sigma,
                      via_noise=not args.no_via_noise,
                      rng_seed=args.seed)
    traces = list(synthesize_dataset(layout, words, cfg, args.traces_per_word))
    count = write_traces(traces, args.out)
    if args.sample_figure:
        from . import reports
        reports.save_trace_figure(traces[0], layout, args.sample_figure)
    print(f"wrote {count} traces to {args.out}")
    return 0


def cmd_train_path(args) -> int:
    layout = _resolve_layout(args.layout)
    traces = read_traces(args.traces)
    if not traces:
        raise CliError("input", f"trace file {args.traces!r} is empty")
    dataset = [(featurize(t, layout), t.word) for t in traces]
    config = ctc.PathDecoderConfig(
        alphabet=tuple(layout.chars),
        model_dim=args.model_dim, heads=args.heads, ff_dim=args.ff_dim,
        use_recurrent_stack=(args.task == pl.TASK_ENGLISH_TO_INDIC),
        recurrent_hidden=args.hidden, decoder_hidden=args.hidden, seed=args.seed)
    training = ctc.PathTrainingConfig(lr=args.lr, ctc_epochs=args.ctc_epochs,
                                      decoder_epochs=args.decoder_epochs, seed=args.seed)
    model, report = ctc.train_path_decoder(dataset, config, training)
    model.save(args.out)
    if args.report:
        Path(args.report).write_text(report.to_text(), encoding="utf-8")
    print(f"saved path decoder to {args.out} "
          f"(final ctc loss {report.ctc_epoch_losses[-1]:.4f}, "
          f"stage2 used {report.stage2_used}, skipped {report.stage2_skipped})")
    return 0


def cmd_train_translit(args) -> int:
    pairs = tl.read_lexicon(args.lexicon)
    if args.path_checkpoint:
        if not args.traces:
            raise CliError("config", "--path-checkpoint also needs --traces to decode")
        layout = _resolve_layout(args.layout)
        model = ctc.PathDecoderModel.load(args.path_checkpoint)
        lex = dict(pairs)
        decoded_pairs = []
        for trace in read_traces(args.traces):
            if trace.word not in lex:
                continue
            decoded = ctc.decode_word(model, featurize(trace, layout))
            if decoded:
                decoded_pairs.append((decoded, lex[trace.word]))
        if not decoded_pairs:
            raise CliError("input", "no usable decoded training pairs")
        src = tuple(sorted({c for s, _ in decoded_pairs for c in s}))
        tgt = tuple(sorted({c for _, t in pairs for c in t}))
        train_pairs = decoded_pairs
    else:
        src, tgt = tl.alphabets_from_pairs(pairs)
        train_pairs = pairs
    config = tl.TranslitConfig(source_alphabet=src, target_alphabet=tgt,
                               embed_dim=args.embed_dim, hidden=args.hidden,
                               use_attention=not args.no_attention, seed=args.seed)
    training = tl.TranslitTrainingConfig(lr=args.lr, epochs=args.epochs, seed=args.seed)
    model, report = tl.train_translit(train_pairs, config, training)
    model.save(args.out)
    print(f"saved transliteration model to {args.out} "
          f"(final loss {report.epoch_losses[-1]:.4f})")
    return 0


def cmd_train_correct(args) -> int:
    words = _read_words(args.vocab)
    alphabet = tuple(sorted({c for w in words for c in w}))
    model = cor.CorrectionModel(cor.CorrectConfig(
        alphabet=alphabet, embed_dim=args.embed_dim, seed=args.seed))
    rng = np.random.default_rng(args.seed)
    pairs = cor.generate_corruptions(words, rng, per_word=args.corruptions_per_word)
    training = cor.CorrectTrainingConfig(lr=args.lr, epochs=args.epochs,
                                         negatives=args.negatives, seed=args.seed)
    vocab, report = cor.train_correct(model, words, pairs, training)
    sample = words[: min(len(words), 200)]
    model.oov_threshold = cor.calibrate_threshold(model, vocab, sample,
                                                  quantile=args.threshold_quantile)
    model.save(args.out)
    print(f"saved correction model to {args.out} "
          f"(final loss {report.epoch_losses[-1]:.4f}, "
          f"oov threshold {model.oov_threshold:.4f})")
    return 0


def _build_task(args) -> pl.TaskSpec:
    layout = _resolve_layout(args.layout)
    path_model = ctc.PathDecoderModel.load(args.path_checkpoint)
    translit_model = None
    if args.task == pl.TASK_ENGLISH_TO_INDIC:
        if not args.translit_checkpoint:
            raise CliError("config", "english_to_indic needs --translit-checkpoint")
        translit_model = tl.TranslitModel.load(args.translit_checkpoint)
    elif args.translit_checkpoint:
        raise CliError("config", "indic_to_indic must not be given --translit-checkpoint")
    correct_model = None
    vocab = None
    bypass = getattr(args, "no_correction", False)
    if not bypass:
        if not (args.correct_checkpoint and args.vocab):
            raise CliError("config",
                           "correction needs --correct-checkpoint and --vocab "
                           "(or pass --no-correction)")
        correct_model = cor.CorrectionModel.load(args.correct_checkpoint)
        vocab = cor.Vocabulary.build(correct_model, _read_words(args.vocab))
    return pl.TaskSpec(task=args.task, layout=layout, path_model=path_model,
                       translit_model=translit_model, correct_model=correct_model,
                       vocab=vocab, k=args.k, bypass_correction=bypass)


def _eval_samples(args, task: pl.TaskSpec) -> list[pl.EvalSample]:
    traces = read_traces(args.traces)
    if not traces:
        raise CliError("input", f"trace file {args.traces!r} is empty")
    if task.task == pl.TASK_ENGLISH_TO_INDIC:
        if not args.lexicon:
            raise CliError("config", "english_to_indic evaluation needs --lexicon "
                                     "to map source words to gold targets")
        lex = dict(tl.read_lexicon(args.lexicon))
        missing = sorted({t.word for t in traces if t.word not in lex})
        if missing:
            raise CliError("input", f"traced words missing from lexicon: {missing[:5]}")
        return [pl.EvalSample(trace=t, gold=lex[t.word], gold_source=t.word)
                for t in traces]
    return [pl.EvalSample(trace=t, gold=t.word) for t in traces]


def cmd_eval(args) -> int:
    task = _build_task(args)
    report = pl.evaluate(task, _eval_samples(args, task))
    text = report.to_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_analyze(args) -> int:
    from . import reports
    task = _build_task(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = pl.evaluate(task, _eval_samples(args, task))
    tables = pl.error_analysis(report.items, task.layout)
    (out_dir / "report.tsv").write_text(report.to_text(), encoding="utf-8")
    (out_dir / "length_accuracy.tsv").write_text(tables.length_text(), encoding="utf-8")
    (out_dir / "angle_bins.tsv").write_text(tables.angle_text(), encoding="utf-8")
    reports.save_length_accuracy_figure(tables, out_dir / "length_accuracy.png")
    if tables.angle_rows:
        reports.save_angle_figure(tables, out_dir / "angle_bins.png")
    reports.save_speed_profile_figure(out_dir / "speed_profile.png")
    print(f"wrote report, tables, and figures to {out_dir}")
    return 0


def cmd_ablate(args) -> int:
    layout = _resolve_layout(args.layout)
    words = _read_words(args.words)
    lexicon = tl.read_lexicon(args.lexicon) if args.lexicon else None
    fixture = pl.ExperimentFixture(
        task=args.task, layout=layout, words=words, lexicon=lexicon,
        synth_config=SynthConfig(rng_seed=args.seed, points_per_unit=args.points_per_unit),
        traces_per_word=args.traces_per_word, split_seed=args.seed, k=args.k,
        path_training=ctc.PathTrainingConfig(ctc_epochs=args.ctc_epochs,
                                             decoder_epochs=args.decoder_epochs,
                                             seed=args.seed),
        translit_training=tl.TranslitTrainingConfig(epochs=args.translit_epochs,
                                                    seed=args.seed),
        correct_training=cor.CorrectTrainingConfig(epochs=args.correct_epochs,
                                                   seed=args.seed),
    )
    report = pl.ablate(fixture, args.switch or [])
    text = report.to_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_decode(args) -> int:
    task = _build_task(args)
    traces = read_traces(args.trace)
    if not traces:
        raise CliError("input", f"trace file {args.trace!r} is empty")
    for i, trace in enumerate(traces):
        result = pl.run_pipeline(task, trace)
        for rank_idx, cand in enumerate(result.candidates, 1):
            print(f"{i}\t{rank_idx}\t{cand.word}\t{cand.score_kind}\t{cand.score:.6f}"
                  f"\t{result.path_string}")
        if not result.candidates:
            print(f"{i}\t-\t\tno_candidates\t\t{result.path_string}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .serve import create_app

    app = create_app(args.model_dir, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swipeforge",
                                     description="Gesture-typing decode toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize swipe traces for a word list")
    p.add_argument("--layout", required=True, help="bundled layout name or layout file")
    p.add_argument("--words", required=True, help="one word per line")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--traces-per-word", type=int, default=1)
    p.add_argument("--points-per-unit", type=float, default=40.0)
    p.add_argument("--endpoint-sigma", type=float, default=0.15)
    p.add_argument("--no-via-noise", action="store_true")
    p.add_argument("--sample-figure", help="optional PNG of the first trace")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("train-path", help="train the CTC path decoder")
    p.add_argument("--traces", required=True)
    p.add_argument("--layout", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--task", choices=[pl.TASK_ENGLISH_TO_INDIC, pl.TASK_INDIC_TO_INDIC],
                   default=pl.TASK_ENGLISH_TO_INDIC)
    p.add_argument("--ctc-epochs", type=int, default=20)
    p.add_argument("--decoder-epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--model-dim", type=int, default=32)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--ff-dim", type=int, default=64)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="optional training report path")
    p.set_defaults(fn=cmd_train_path)

    p = sub.add_parser("train-translit", help="train the transliteration model")
    p.add_argument("--lexicon", required=True, help="source<TAB>target per line")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.005)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--no-attention", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--path-checkpoint", help="train on this decoder's outputs")
    p.add_argument("--traces", help="traces to decode for training pairs")
    p.add_argument("--layout", default="qwerty_en")
    p.set_defaults(fn=cmd_train_translit)

    p = sub.add_parser("train-correct", help="train the spelling corrector")
    p.add_argument("--vocab", required=True, help="one word per line")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=8)
    p.add_argument("--lr", type=float, default=0.002)
    p.add_argument("--embed-dim", type=int, default=64)
    p.add_argument("--negatives", type=int, default=32)
    p.add_argument("--corruptions-per-word", type=int, default=2)
    p.add_argument("--threshold-quantile", type=float, default=0.99)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train_correct)

    def add_task_flags(p):
        p.add_argument("--task", choices=[pl.TASK_ENGLISH_TO_INDIC, pl.TASK_INDIC_TO_INDIC],
                       required=True)
        p.add_argument("--layout", required=True)
        p.add_argument("--path-checkpoint", required=True)
        p.add_argument("--translit-checkpoint")
        p.add_argument("--correct-checkpoint")
        p.add_argument("--vocab")
        p.add_argument("--no-correction", action="store_true")
        p.add_argument("--k", type=int, default=3)

    p = sub.add_parser("eval", help="evaluate the pipeline on a trace file")
    add_task_flags(p)
    p.add_argument("--traces", required=True)
    p.add_argument("--lexicon", help="gold source->target pairs (english_to_indic)")
    p.add_argument("--out", help="write the report here as well as stdout")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("analyze", help="evaluation plus error-analysis tables and figures")
    add_task_flags(p)
    p.add_argument("--traces", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("ablate", help="retrain and evaluate with components disabled")
    p.add_argument("--task", choices=[pl.TASK_ENGLISH_TO_INDIC, pl.TASK_INDIC_TO_INDIC],
                   required=True)
    p.add_argument("--layout", required=True)
    p.add_argument("--words", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--switch", action="append", choices=list(pl.ABLATION_SWITCHES),
                   help="repeatable; no switches runs the unablated baseline")
    p.add_argument("--traces-per-word", type=int, default=10)
    p.add_argument("--points-per-unit", type=float, default=15.0)
    p.add_argument("--ctc-epochs", type=int, default=4)
    p.add_argument("--decoder-epochs", type=int, default=4)
    p.add_argument("--translit-epochs", type=int, default=6)
    p.add_argument("--correct-epochs", type=int, default=4)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("decode", help="decode traces from a file")
    add_task_flags(p)
    p.add_argument("--trace", required=True, help="trace record file (one JSON per line)")
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("serve", help="run the HTTP demo service")
    p.add_argument("--model-dir", default=os.environ.get("SWIPEFORGE_MODEL_DIR"),
                   help="directory with serve_config.json and checkpoints")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("SWIPEFORGE_PORT", "8700")))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir", help="static browser-demo bundle to host at /")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error\t{exc.category}\t{exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError, LayoutError) as exc:
        print(f"error\truntime\t{exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
