"""Loss, batching, the training loop, and cross-validation harnesses.

The loop is plain Adam with global-norm clipping on padded masked
batches, optional feature augmentation re-drawn per epoch, periodic
holdout evaluation, and best-checkpoint tracking by holdout WA (ties go
to the earlier step). Everything is reproducible from integer seeds.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import metrics as me
from . import model as mo
from .augment import apply_policy
from .errors import NumericsError
from .numerics import AdamState, GradTape, adam_step, clip_global_norm
from .numerics import tensor as nt
from .numerics.tensor import Tensor


@dataclass
class TrainConfig:
    lr: float = 1e-4
    clip_norm: float = 4.0
    batch_size: int = 16
    max_steps: int = 1000
    eval_interval: int = 100
    seed: int = 0
    augment: object = None  # SpecAugmentPolicy or None
    precision: str = "float32"
    target_wa: float = None  # stop once holdout WA reaches this
    holdout_fraction: float = 0.1  # used when the caller has one corpus
    eval_batch_size: int = 64

    def __post_init__(self):
        if self.lr <= 0 or self.clip_norm <= 0:
            raise ValueError("lr and clip_norm must be positive")
        if self.batch_size < 1 or self.max_steps < 1 or self.eval_interval < 1:
            raise ValueError("batch_size, max_steps, eval_interval must be >= 1")
        if self.precision not in ("float32", "float64"):
            raise ValueError("precision must be float32 or float64")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must lie in (0, 1)")

    @property
    def dtype(self):
        return np.float64 if self.precision == "float64" else np.float32


@dataclass
class Batch:
    feats: np.ndarray     # (B, T_max, D) zero-padded
    mask: np.ndarray      # (B, T_max) bool
    lengths: np.ndarray   # (B,)
    labels: np.ndarray    # (B,)
    speakers: np.ndarray  # (B,)


@dataclass
class TrainResult:
    best_params: dict
    best_step: int
    best_wa: float
    final_params: dict
    log: list = field(default_factory=list)


def cross_entropy(logits, labels):
    """Mean negative log softmax probability of the true class."""
    if logits.data.ndim == 1:
        logits = nt.reshape(logits, (1, logits.shape[0]))
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    c = logits.shape[1]
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"labels must lie in [0, {c})")
    lse = nt.logsumexp(logits, axis=1)
    picked = nt.take_class(logits, labels)
    return nt.mean_(nt.sub(lse, picked))


def _pack(examples):
    lengths = np.array([ex.features.length for ex in examples], dtype=np.int64)
    t_max = int(lengths.max())
    d = examples[0].features.dim
    feats = np.zeros((len(examples), t_max, d), dtype=np.float32)
    for i, ex in enumerate(examples):
        feats[i, :lengths[i]] = ex.features.values
    mask = np.arange(t_max)[None, :] < lengths[:, None]
    labels = np.array([ex.label for ex in examples], dtype=np.int64)
    speakers = np.array([ex.speaker for ex in examples], dtype=np.int64)
    return Batch(feats=feats, mask=mask, lengths=lengths,
                 labels=labels, speakers=speakers)


def make_batches(examples, batch_size, rng=None):
    """Chunk a (possibly shuffled) corpus into padded batches."""
    if not examples:
        raise ValueError("empty corpus")
    order = np.arange(len(examples))
    if rng is not None:
        order = rng.permutation(order)
    return [_pack([examples[i] for i in order[lo:lo + batch_size]])
            for lo in range(0, len(order), batch_size)]


def split_holdout(examples, fraction, seed):
    """Deterministic shuffle split into (train, holdout)."""
    if len(examples) < 2:
        raise ValueError("need at least 2 examples to split")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5B117]))
    order = rng.permutation(len(examples))
    n_hold = max(1, int(round(fraction * len(examples))))
    hold = set(order[:n_hold].tolist())
    train_set = [ex for i, ex in enumerate(examples) if i not in hold]
    hold_set = [ex for i, ex in enumerate(examples) if i in hold]
    return train_set, hold_set


def evaluate(examples, cfg, params, batch_size=64, want_attention=False):
    """Forward pass over a corpus; returns metrics plus raw predictions."""
    preds, labels = [], []
    attn_maps = [] if want_attention else None
    for batch in make_batches(examples, batch_size):
        emb, attn = mo.decode_batch(batch.feats, batch.lengths, cfg, params)
        logits, _ = mo.classify(emb, params)
        preds.append(np.argmax(logits.data, axis=1))
        labels.append(batch.labels)
        if want_attention and attn is not None:
            for b, t_len in enumerate(batch.lengths):
                attn_maps.append(attn[b, :, :t_len])
    preds = np.concatenate(preds)
    labels = np.concatenate(labels)
    cm = me.confusion(preds, labels, cfg.num_classes)
    out = {"wa": me.wa(cm), "ua": me.ua(cm), "confusion": cm,
           "preds": preds, "labels": labels}
    if want_attention:
        out["attention"] = attn_maps
    return out


def _snapshot(params):
    return {k: Tensor(t.data.copy(), requires_grad=True)
            for k, t in params.items()}


def train(model_cfg, train_examples, holdout_examples, tcfg):
    """Train a decoder; returns best/final params and the metrics log.

    The log holds one train row (mean loss since the previous eval) and
    one holdout row (loss blank, WA/UA filled) per eval point.
    """
    if not train_examples or not holdout_examples:
        raise ValueError("need nonempty train and holdout sets")
    params = mo.init_params(model_cfg, tcfg.seed, dtype=tcfg.dtype)
    opt = AdamState.for_params(params)
    log = []
    best = {"wa": -1.0, "step": -1, "params": _snapshot(params)}
    step = 0
    epoch = 0
    loss_acc, loss_n = 0.0, 0

    def run_eval():
        nonlocal loss_acc, loss_n
        ev = evaluate(holdout_examples, model_cfg, params, tcfg.eval_batch_size)
        mean_loss = loss_acc / max(loss_n, 1)
        log.append({"step": step, "split": "train",
                    "loss": mean_loss, "wa": "", "ua": ""})
        log.append({"step": step, "split": "holdout", "loss": "",
                    "wa": ev["wa"], "ua": ev["ua"]})
        loss_acc, loss_n = 0.0, 0
        if ev["wa"] > best["wa"]:
            best.update(wa=ev["wa"], step=step, params=_snapshot(params))
        return ev["wa"]

    done = False
    while not done:
        rng = np.random.default_rng(np.random.SeedSequence(
            [tcfg.seed, 0xBA7C, epoch]))
        order = rng.permutation(len(train_examples))
        for lo in range(0, len(order), tcfg.batch_size):
            idx = order[lo:lo + tcfg.batch_size]
            exs = [train_examples[i] for i in idx]
            if tcfg.augment is not None and tcfg.augment.enabled:
                exs = [apply_policy(ex, tcfg.augment,
                                    np.random.default_rng(np.random.SeedSequence(
                                        [tcfg.seed, int(i), epoch])))
                       for ex, i in zip(exs, idx)]
            batch = _pack(exs)
            with GradTape() as tape:
                emb, _ = mo.decode_batch(batch.feats, batch.lengths,
                                         model_cfg, params)
                logits, _ = mo.classify(emb, params)
                loss = cross_entropy(logits, batch.labels)
            loss_val = float(loss.data)
            if not np.isfinite(loss_val):
                raise NumericsError(
                    f"non-finite loss {loss_val!r} at step {step} "
                    f"(epoch {epoch}, lr {tcfg.lr})")
            grads = tape.grad(loss, params)
            grads, _ = clip_global_norm(grads, tcfg.clip_norm)
            opt, params = adam_step(opt, params, grads, tcfg.lr)
            step += 1
            loss_acc += loss_val
            loss_n += 1
            if step % tcfg.eval_interval == 0 or step == tcfg.max_steps:
                wa_now = run_eval()
                if tcfg.target_wa is not None and wa_now >= tcfg.target_wa:
                    done = True
            if step >= tcfg.max_steps:
                done = True
            if done:
                break
        epoch += 1
    if not log or log[-1]["step"] != step:
        run_eval()
    return TrainResult(best_params=best["params"], best_step=best["step"],
                       best_wa=best["wa"], final_params=params, log=log)


def write_metrics_log(path, log):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["step", "split", "loss", "wa", "ua"])
        w.writeheader()
        for row in log:
            w.writerow(row)


def loso_folds(examples):
    """One fold per distinct speaker: (train indices, test indices)."""
    speakers = sorted({ex.speaker for ex in examples})
    if len(speakers) < 2:
        raise ValueError("leave-one-speaker-out needs >= 2 speakers")
    folds = []
    for s in speakers:
        test = [i for i, ex in enumerate(examples) if ex.speaker == s]
        trn = [i for i, ex in enumerate(examples) if ex.speaker != s]
        folds.append((s, trn, test))
    return folds


def loso_cv(examples, model_cfg, tcfg):
    """Train one model per held-out speaker; aggregate pooled and per-fold."""
    all_preds, all_labels = [], []
    fold_rows = []
    for s, trn_idx, test_idx in loso_folds(examples):
        trn = [examples[i] for i in trn_idx]
        tst = [examples[i] for i in test_idx]
        res = train(model_cfg, trn, tst, tcfg)
        ev = evaluate(tst, model_cfg, res.best_params, tcfg.eval_batch_size)
        fold_rows.append({"speaker": s, "n": len(tst),
                          "wa": ev["wa"], "ua": ev["ua"]})
        all_preds.append(ev["preds"])
        all_labels.append(ev["labels"])
    cm = me.confusion(np.concatenate(all_preds), np.concatenate(all_labels),
                      model_cfg.num_classes)
    return {
        "folds": fold_rows,
        "pooled": {"wa": me.wa(cm), "ua": me.ua(cm),
                   "confusion": cm.counts.tolist()},
        "mean_fold": {"wa": float(np.mean([r["wa"] for r in fold_rows])),
                      "ua": float(np.mean([r["ua"] for r in fold_rows]))},
    }


ABLATION_ROWS = (
    ("rnn_attn+specaug", "rnn_attn", True),
    ("mlp_pool", "mlp_pool", False),
    ("rnn_pool", "rnn_pool", False),
    ("rnn_attn", "rnn_attn", False),
)


def run_ablation(train_examples, test_examples, base_model_cfg, tcfg,
                 seeds=(0, 1, 2, 3, 4), policy=None):
    """Train every decoder variant with and without augmentation.

    Returns a report dict with one row per variant holding per-seed and
    median WA/UA on the test set.
    """
    import dataclasses as dc
    rows = []
    for name, variant, use_aug in ABLATION_ROWS:
        was, uas = [], []
        for seed in seeds:
            mcfg = dc.replace(base_model_cfg, variant=variant)
            run_cfg = dc.replace(tcfg, seed=seed,
                                 augment=policy if use_aug else None)
            res = train(mcfg, train_examples, test_examples, run_cfg)
            ev = evaluate(test_examples, mcfg, res.best_params,
                          tcfg.eval_batch_size)
            was.append(ev["wa"])
            uas.append(ev["ua"])
        rows.append({"name": name,
                     "wa": float(np.median(was)), "ua": float(np.median(uas)),
                     "wa_seeds": was, "ua_seeds": uas})
    return {"rows": rows, "seeds": list(seeds)}


def format_ablation(report):
    """Fixed-width text table, WA/UA in percent to two decimals."""
    lines = [f"{'model':<20}{'WA':>8}{'UA':>8}"]
    for row in report["rows"]:
        lines.append(f"{row['name']:<20}{row['wa']:>8.2f}{row['ua']:>8.2f}")
    return "\n".join(lines)
