"""Command-line entry point wiring all modules together.

Subcommands: synth, train, eval (with --loso / --ablation), predict, viz,
gradcheck. Exit codes: 0 success, 1 usage, 2 data or format problem,
3 numerical failure. Every run writes a run.json with the fully resolved
configuration and seeds next to its outputs.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import metrics as me
from . import model as mo
from . import train as tr
from .config import load_config, resolved_config
from .errors import ConfigError, FileFormatError, ManifestError, NumericsError
from .features import read_features
from .numerics import gradient_check, load_checkpoint, save_checkpoint
from .synthcorpus import generate, read_manifest, write_corpus
from .visualize import quantize_bins, render, word_attention


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; we want 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_common(p):
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="SECTION.KEY=VALUE", help="override a config value")


def _build_parser():
    parser = _Parser(prog="sentasr", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser,
                                required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a sentiment decoder")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate / cross-validate / ablate")
    _add_common(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--manifest", required=True)
    p.add_argument("--loso", action="store_true",
                   help="leave-one-speaker-out cross validation")
    p.add_argument("--ablation", action="store_true",
                   help="train all decoder variants and print the table")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("predict", help="classify one feature file")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", required=True, help=".asrf feature file")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("viz", help="render word-level attention")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--format", choices=("ansi", "html"), default="ansi")
    p.add_argument("--head", type=int, default=None,
                   help="attention head to show (default: mean over heads)")
    p.add_argument("--out", default="viz.html",
                   help="output file for --format html")
    p.set_defaults(func=_cmd_viz)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    _add_common(p)
    p.add_argument("--variant", choices=mo.VARIANTS + ("all",), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=_cmd_gradcheck)
    return parser


def _write_run_json(out_dir, command, args, cfgs, extra=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    record = {
        "command": command,
        "args": {k: v for k, v in vars(args).items()
                 if k not in ("func", "overrides")},
        "overrides": args.overrides,
        "config": resolved_config(cfgs),
    }
    if extra:
        record.update(extra)
    (out_dir / "run.json").write_text(
        json.dumps(record, indent=2, default=str) + "\n", encoding="utf-8")


def _cmd_synth(args):
    cfgs = load_config(args.config, args.overrides)
    examples = generate(cfgs["synth"], args.seed)
    manifest = write_corpus(examples, args.out)
    _write_run_json(args.out, "synth", args, cfgs,
                    {"seed": args.seed, "manifest": str(manifest)})
    print(json.dumps({"manifest": str(manifest),
                      "num_examples": len(examples)}))
    return 0


def _load_corpus_checked(manifest, model_cfg):
    examples = read_manifest(manifest)
    dim = examples[0].features.dim
    if dim != model_cfg.input_dim:
        raise ValueError(
            f"corpus feature dim {dim} does not match model.input_dim "
            f"{model_cfg.input_dim}; use --set model.input_dim={dim}")
    return examples


def _cmd_train(args):
    cfgs = load_config(args.config, args.overrides)
    tcfg = cfgs["train"]
    examples = _load_corpus_checked(args.manifest, cfgs["model"])
    train_set, holdout = tr.split_holdout(examples, tcfg.holdout_fraction,
                                          tcfg.seed)
    result = tr.train(cfgs["model"], train_set, holdout, tcfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "checkpoint.sntc"
    save_checkpoint(ckpt, mo.params_to_entries(cfgs["model"],
                                               result.best_params))
    tr.write_metrics_log(out / "metrics.csv", result.log)
    _write_run_json(out, "train", args, cfgs,
                    {"checkpoint": str(ckpt), "best_step": result.best_step,
                     "best_wa": result.best_wa})
    print(json.dumps({"checkpoint": str(ckpt),
                      "best_step": result.best_step,
                      "best_wa": round(result.best_wa, 2)}))
    return 0


def _cmd_eval(args):
    cfgs = load_config(args.config, args.overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.ablation:
        examples = _load_corpus_checked(args.manifest, cfgs["model"])
        tcfg = cfgs["train"]
        train_set, test_set = tr.split_holdout(examples,
                                               tcfg.holdout_fraction,
                                               tcfg.seed)
        report = tr.run_ablation(train_set, test_set, cfgs["model"], tcfg,
                                 policy=cfgs["augment"])
        (out / "ablation.json").write_text(json.dumps(report, indent=2) + "\n",
                                           encoding="utf-8")
        _write_run_json(out, "eval", args, cfgs)
        print(tr.format_ablation(report))
        return 0
    if args.loso:
        examples = _load_corpus_checked(args.manifest, cfgs["model"])
        report = tr.loso_cv(examples, cfgs["model"], cfgs["train"])
        (out / "loso.json").write_text(json.dumps(report, indent=2) + "\n",
                                       encoding="utf-8")
        _write_run_json(out, "eval", args, cfgs)
        print(json.dumps({"pooled": report["pooled"],
                          "mean_fold": report["mean_fold"]}, indent=2))
        return 0
    if args.checkpoint is None:
        raise ValueError("--checkpoint is required unless --loso/--ablation")
    model_cfg, params = mo.entries_to_model(load_checkpoint(args.checkpoint))
    examples = _load_corpus_checked(args.manifest, model_cfg)
    ev = tr.evaluate(examples, model_cfg, params)
    report = me.report(ev["confusion"])
    (out / "eval.json").write_text(json.dumps(report, indent=2) + "\n",
                                   encoding="utf-8")
    _write_run_json(out, "eval", args, cfgs)
    print(json.dumps(report, indent=2))
    return 0


def _cmd_predict(args):
    cfgs = load_config(args.config, args.overrides)
    model_cfg, params = mo.entries_to_model(load_checkpoint(args.checkpoint))
    seq = read_features(args.features)
    if seq.dim != model_cfg.input_dim:
        raise ValueError(f"feature dim {seq.dim} does not match checkpoint "
                         f"input_dim {model_cfg.input_dim}")
    emb, _ = mo.decode(seq, model_cfg, params)
    logits, probs = mo.classify(emb, params)
    pred = int(np.argmax(logits.data))
    result = {"class": pred, "label": f"c{pred}",
              "probabilities": [float(p) for p in probs.data]}
    _write_run_json(args.out, "predict", args, cfgs, {"result": result})
    print(json.dumps(result))
    return 0


def _cmd_viz(args):
    cfgs = load_config(args.config, args.overrides)
    model_cfg, params = mo.entries_to_model(load_checkpoint(args.checkpoint))
    examples = read_manifest(args.manifest)
    if not 0 <= args.index < len(examples):
        raise ValueError(f"--index {args.index} out of range "
                         f"(corpus has {len(examples)} examples)")
    ex = examples[args.index]
    if ex.alignment is None:
        raise ValueError(f"example {args.index} has no word alignment")
    if ex.features.dim != model_cfg.input_dim:
        raise ValueError(f"corpus feature dim {ex.features.dim} does not "
                         f"match checkpoint input_dim {model_cfg.input_dim}")
    _, amap = mo.decode(ex.features, model_cfg, params)
    if amap is None:
        raise ValueError(
            f"checkpoint variant {model_cfg.variant!r} has no attention")
    weights = word_attention(amap, ex.alignment, head=args.head)
    bins = quantize_bins(weights)
    words = [w for w, _, _ in ex.alignment]
    art = render(words, bins.tolist(), args.format)
    if args.format == "html":
        out_file = Path(args.out)
        out_file.parent.mkdir(parents=True, exist_ok=True)
        out_file.write_text(art, encoding="utf-8")
        _write_run_json(out_file.parent, "viz", args, cfgs,
                        {"output": str(out_file)})
        print(json.dumps({"output": str(out_file)}))
    else:
        _write_run_json(".", "viz", args, cfgs)
        print(art)
    return 0


def run_gradcheck(variant, seed, num_coords=120):
    """Finite-difference check of one decoder variant at float64.

    Returns the max relative error over sampled coordinates. Shared by
    the CLI and the test suite.
    """
    cfg = mo.DecoderConfig(variant=variant, input_dim=10, lstm_units=6,
                           n_heads=3, d_head=4, mlp_hidden=(12, 8),
                           num_classes=3)
    rng = np.random.default_rng(np.random.SeedSequence([0x9CC, seed]))
    bsz, t_max = 3, 9
    lengths = np.array([t_max, 5, 7], dtype=np.int64)
    feats = rng.standard_normal((bsz, t_max, cfg.input_dim))
    for i, t_len in enumerate(lengths):
        feats[i, t_len:] = 0.0
    labels = rng.integers(0, cfg.num_classes, size=bsz)
    params = mo.init_params(cfg, seed, dtype=np.float64)

    def loss_fn(p):
        emb, _ = mo.decode_batch(feats, lengths, cfg, p)
        logits, _ = mo.classify(emb, p)
        return tr.cross_entropy(logits, labels)

    return gradient_check(loss_fn, params, rng, num_coords=num_coords)


def _cmd_gradcheck(args):
    cfgs = load_config(args.config, args.overrides)
    variants = mo.VARIANTS if args.variant == "all" else (args.variant,)
    worst = 0.0
    results = {}
    for v in variants:
        err = run_gradcheck(v, args.seed)
        results[v] = err
        worst = max(worst, err)
        print(f"{v}: max relative error {err:.3e}")
    _write_run_json(args.out, "gradcheck", args, cfgs,
                    {"seed": args.seed, "results": results})
    if worst > 1e-4:
        print(f"FAIL: max relative error {worst:.3e} > 1e-4", file=sys.stderr)
        return 3
    return 0


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (FileFormatError, ManifestError, ConfigError, ValueError,
            OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericsError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
