"""Acceptance suite: nine end-to-end checks, one printed verdict line each.

These run the real training loop at full model size, so this file is the
slow part of the suite (a few minutes on a laptop CPU). Each criterion
prints a [PASS]/[FAIL] line even when pytest captures regular output.
"""

import contextlib
import time
import warnings

import numpy as np
import pytest

from sentasr import metrics as me
from sentasr import model as mo
from sentasr import train as tr
from sentasr.augment import SpecAugmentPolicy, apply_policy, freq_mask, time_mask
from sentasr.cli import run_gradcheck
from sentasr.encoder import encode, init_encoder
from sentasr.features import FeatureSequence, read_features, write_features
from sentasr.frontend import AudioBuffer, log_mel
from sentasr.model import AttentionMap, DecoderConfig
from sentasr.numerics import load_checkpoint, save_checkpoint
from sentasr.synthcorpus import (SWBD_PRIORS, SentimentExample, SynthConfig,
                                 generate)
from sentasr.train import TrainConfig
from sentasr.visualize import quantize_bins, word_attention


@contextlib.contextmanager
def _verdict(capsys, num, summary):
    """Guarantee exactly one visible pass/fail line for a criterion."""
    info = {"detail": ""}
    ok = False
    try:
        yield info
        ok = True
    finally:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {summary}"
        if info["detail"]:
            line += f" ({info['detail']})"
        with capsys.disabled():
            print("\n" + line)


def test_criterion_1_gradients(capsys):
    with _verdict(capsys, 1, "finite-difference gradients, all decoder "
                             "variants at float64") as info:
        t0 = time.time()
        errs = {v: run_gradcheck(v, seed=0) for v in mo.VARIANTS}
        dt = time.time() - t0
        worst = max(errs.values())
        info["detail"] = (f"max rel err {worst:.2e} over 120 coords per "
                          f"variant, {dt:.1f}s")
        assert worst <= 1e-4, errs
        assert dt < 120.0


def test_criterion_2_metrics_anchors(capsys):
    with _verdict(capsys, 2, "majority-class WA/UA anchors plus exact "
                             "counting oracle") as info:
        cfg = SynthConfig(num_examples=10000, dim=8, min_len=6, max_len=10,
                          cue_len=3, priors=SWBD_PRIORS)
        labels = np.array([ex.label for ex in generate(cfg, seed=77)])
        preds = np.zeros(len(labels), dtype=np.int64)
        cm = me.confusion(preds, labels, 3)
        wa_val = me.wa(cm)
        ua_val = me.ua(cm)
        assert abs(wa_val - 52.6) <= 1.0
        assert abs(ua_val - 100.0 / 3.0) < 1e-9

        rng = np.random.default_rng(0x2AC)
        for _ in range(1000):
            k = int(rng.integers(2, 7))
            n = int(rng.integers(1, 200))
            lab = rng.integers(0, k, size=n)
            prd = rng.integers(0, k, size=n)
            m = me.confusion(prd, lab, k)
            counts = [[0] * k for _ in range(k)]
            for p, t in zip(prd.tolist(), lab.tolist()):
                counts[t][p] += 1
            assert m.counts.tolist() == counts
            total = sum(map(sum, counts))
            assert me.wa(m) == 100.0 * sum(counts[i][i]
                                           for i in range(k)) / total
            recs = [counts[i][i] / sum(counts[i]) for i in range(k)
                    if sum(counts[i])]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                assert me.ua(m) == 100.0 * float(np.mean(recs))
        info["detail"] = (f"constant predictor WA {wa_val:.2f} "
                          f"(target 52.6 within 1.0), |UA - 100/3| < 1e-9, "
                          f"1000 random matrices exact")


@pytest.fixture(scope="module")
def synthetic_runs():
    """Criterion 3 training runs, shared with criterion 4."""
    train_corpus = generate(SynthConfig(num_examples=5000), seed=101)
    test_corpus = generate(SynthConfig(num_examples=1000), seed=202)
    mcfg = DecoderConfig()
    runs = []
    t0 = time.time()
    for seed in (0, 1, 2):
        tcfg = TrainConfig(lr=3e-3, max_steps=5000, eval_interval=250,
                           seed=seed, target_wa=95.0)
        res = tr.train(mcfg, train_corpus, test_corpus, tcfg)
        runs.append({"seed": seed, "wa": res.best_wa,
                     "steps": res.log[-1]["step"],
                     "params": res.best_params})
    return {"runs": runs, "elapsed": time.time() - t0,
            "test": test_corpus, "mcfg": mcfg}


def test_criterion_3_synthetic_learning(capsys, synthetic_runs):
    with _verdict(capsys, 3, "rnn_attn reaches 95% test WA on the default "
                             "synthetic task, median of 3 seeds") as info:
        runs = synthetic_runs["runs"]
        median_wa = sorted(r["wa"] for r in runs)[1]
        info["detail"] = (f"per-seed WA {[round(r['wa'], 1) for r in runs]} "
                          f"at steps {[r['steps'] for r in runs]}, "
                          f"{synthetic_runs['elapsed']:.0f}s for all seeds")
        assert all(r["steps"] <= 5000 for r in runs)
        assert median_wa >= 95.0
        assert synthetic_runs["elapsed"] < 600.0


def test_criterion_4_attention_localization(capsys, synthetic_runs):
    with _verdict(capsys, 4, "attention concentrates on the planted cue and "
                             "marks the cue word") as info:
        median_run = sorted(synthetic_runs["runs"], key=lambda r: r["wa"])[1]
        mcfg = synthetic_runs["mcfg"]
        test_corpus = synthetic_runs["test"]
        ev = tr.evaluate(test_corpus, mcfg, median_run["params"],
                         want_attention=True)
        n_correct = mass_hits = word_hits = 0
        for ex, pred, label, attn in zip(test_corpus, ev["preds"],
                                         ev["labels"], ev["attention"]):
            if pred != label:
                continue
            n_correct += 1
            s, e = ex.cue_span
            t_len = ex.features.length
            mass = float(attn[:, s:e].mean(axis=0).sum())
            if mass >= 3.0 * (e - s) / t_len:
                mass_hits += 1
            amap = AttentionMap(weights=attn,
                                frame_period=ex.features.frame_period)
            bins = quantize_bins(word_attention(amap, ex.alignment))
            cue_idx = next(i for i, (_, ws, we) in enumerate(ex.alignment)
                           if (ws, we) == (s, e))
            if bins[cue_idx] == 2:
                word_hits += 1
        mass_frac = mass_hits / n_correct
        word_frac = word_hits / n_correct
        info["detail"] = (f"mass >= 3x uniform on {100 * mass_frac:.1f}% and "
                          f"cue word in bin 2 on {100 * word_frac:.1f}% of "
                          f"{n_correct} correct utterances, both need 80%")
        assert n_correct > 0
        assert mass_frac >= 0.80
        assert word_frac >= 0.80


def test_criterion_5_ablation_trend(capsys):
    with _verdict(capsys, 5, "ablation table over 5 seeds, ordering "
                             "reported not gated") as info:
        trn = generate(SynthConfig(num_examples=600), seed=303)
        tst = generate(SynthConfig(num_examples=240), seed=404)
        policy = SpecAugmentPolicy(warp_w=8, freq_f=8, freq_mf=1, time_t=10,
                                   time_p=0.3, time_mt=1)
        tcfg = TrainConfig(lr=3e-3, max_steps=400, eval_interval=100, seed=0)
        report = tr.run_ablation(trn, tst, DecoderConfig(), tcfg,
                                 seeds=(0, 1, 2, 3, 4), policy=policy)
        table = tr.format_ablation(report)
        with capsys.disabled():
            print("\n" + table)
        rows = {r["name"]: r["wa"] for r in report["rows"]}
        assert set(rows) == {"rnn_attn+specaug", "mlp_pool", "rnn_pool",
                             "rnn_attn"}
        assert len(table.splitlines()) == 5
        ordered = rows["rnn_attn"] >= rows["rnn_pool"] >= rows["mlp_pool"]
        info["detail"] = (f"median WA rnn_attn {rows['rnn_attn']:.1f}, "
                          f"rnn_pool {rows['rnn_pool']:.1f}, mlp_pool "
                          f"{rows['mlp_pool']:.1f}; ordering held: {ordered}")


def test_criterion_6_specaugment_contract(capsys):
    with _verdict(capsys, 6, "masking exactness, byte identities, and "
                             "determinism over 1000 random policies") as info:
        rng = np.random.default_rng(0xA6)
        zero = SpecAugmentPolicy(warp_w=0, freq_f=0, freq_mf=0, time_t=0,
                                 time_mt=0)
        t0 = time.time()
        for i in range(1000):
            t_len = int(rng.integers(3, 61))
            d = int(rng.integers(2, 41))
            vals = (rng.standard_normal((t_len, d)) + 10.0).astype(np.float32)
            seq = FeatureSequence(values=vals, frame_period=0.08)
            ex = SentimentExample(features=seq, label=int(rng.integers(3)),
                                  speaker=0)

            out0 = apply_policy(ex, zero, np.random.default_rng(i))
            assert out0.features.values.tobytes() == vals.tobytes()
            assert out0.label == ex.label

            mv = float(rng.choice([0.0, -1.0, 2.5]))
            pol = SpecAugmentPolicy(warp_w=int(rng.integers(0, 13)),
                                    freq_f=int(rng.integers(0, d + 1)),
                                    freq_mf=int(rng.integers(0, 4)),
                                    time_t=int(rng.integers(0, 31)),
                                    time_p=float(rng.uniform(0.0, 1.0)),
                                    time_mt=int(rng.integers(0, 4)),
                                    mask_value=mv)
            a = apply_policy(ex, pol, np.random.default_rng(1000 + i))
            b = apply_policy(ex, pol, np.random.default_rng(1000 + i))
            assert a.features.values.tobytes() == b.features.values.tobytes()
            assert a.label == ex.label and a.speaker == ex.speaker
            assert a.features.values.shape == vals.shape

            # masking alone: every cell is either the mask value or
            # bit-identical to the input
            m = freq_mask(seq, pol.freq_f, pol.freq_mf,
                          np.random.default_rng(2000 + i), mv)
            m = time_mask(m, pol.time_t, pol.time_mt, pol.time_p,
                          np.random.default_rng(3000 + i), mv)
            changed = m.values != vals
            assert np.all(m.values[changed] == mv)
            assert np.all((m.values == vals) | (m.values == mv))
        dt = time.time() - t0
        info["detail"] = f"1000 policy/sequence draws in {dt:.1f}s (limit 60)"
        assert dt < 60.0


def test_criterion_7_padding_invariance(capsys):
    with _verdict(capsys, 7, "batched decode equals single-utterance decode "
                             "within 1e-5, all variants") as info:
        cfgs = {v: DecoderConfig(variant=v, input_dim=12, lstm_units=8,
                                 n_heads=2, d_head=4, mlp_hidden=(16, 8))
                for v in mo.VARIANTS}
        params = {v: mo.init_params(cfgs[v], seed=7) for v in mo.VARIANTS}
        rng = np.random.default_rng(0x7AD)
        worst = 0.0
        for _ in range(100):
            bsz = int(rng.integers(2, 7))
            t_max = int(rng.integers(3, 31))
            lengths = rng.integers(1, t_max + 1, size=bsz)
            lengths[int(rng.integers(bsz))] = t_max
            feats = rng.standard_normal((bsz, t_max, 12)).astype(np.float32)
            for b, n in enumerate(lengths):
                feats[b, n:] = 0.0
            for v in mo.VARIANTS:
                emb, _ = mo.decode_batch(feats, lengths, cfgs[v], params[v])
                for b, n in enumerate(lengths):
                    one, _ = mo.decode_batch(feats[b:b + 1, :n], [n],
                                             cfgs[v], params[v])
                    dev = float(np.max(np.abs(emb.data[b] - one.data[0])))
                    worst = max(worst, dev)
        info["detail"] = f"max abs deviation {worst:.2e} over 100 batches"
        assert worst <= 1e-5


def test_criterion_8_shape_and_format_contracts(capsys, tmp_path):
    with _verdict(capsys, 8, "encoder length map, file round-trips, LOSO "
                             "speaker disjointness") as info:
        params = init_encoder(seed=0)
        rng = np.random.default_rng(0x88)
        t0 = time.time()
        for t in range(1, 201):
            seq = FeatureSequence(
                values=rng.standard_normal((t, 80)).astype(np.float32),
                frame_period=0.01)
            out = encode(seq, params)
            assert out.values.shape == (-(-t // 8), 1536), t
        sweep_dt = time.time() - t0

        seq = FeatureSequence(
            values=rng.standard_normal((33, 80)).astype(np.float32),
            frame_period=0.01)
        p1 = tmp_path / "f1.asrf"
        p2 = tmp_path / "f2.asrf"
        write_features(seq, p1)
        back = read_features(p1)
        assert back.values.tobytes() == seq.values.tobytes()
        assert back.frame_period == seq.frame_period
        write_features(back, p2)
        assert p1.read_bytes() == p2.read_bytes()

        entries = {"a.w": rng.standard_normal((5, 7)).astype(np.float32),
                   "b": rng.standard_normal(3).astype(np.float32)}
        c1 = tmp_path / "c1.sntc"
        c2 = tmp_path / "c2.sntc"
        save_checkpoint(c1, entries)
        loaded = load_checkpoint(c1)
        assert all(loaded[k].data.tobytes() == v.tobytes()
                   for k, v in entries.items())
        save_checkpoint(c2, loaded)
        assert c1.read_bytes() == c2.read_bytes()

        for k in range(2, 11):
            corpus = generate(SynthConfig(num_examples=5 * k, dim=8,
                                          min_len=8, max_len=12, cue_len=3,
                                          num_speakers=k), seed=k)
            folds = tr.loso_folds(corpus)
            assert len(folds) == k
            for s, trn_idx, tst_idx in folds:
                assert set(trn_idx) | set(tst_idx) == set(range(5 * k))
                assert not set(trn_idx) & set(tst_idx)
                assert {corpus[i].speaker for i in tst_idx} == {s}
                assert s not in {corpus[i].speaker for i in trn_idx}
        info["detail"] = (f"T=1..200 sweep in {sweep_dt:.0f}s, byte-exact "
                          f"round-trips, LOSO checked for 2..10 speakers")


def test_criterion_9_frontend_determinism(capsys):
    with _verdict(capsys, 9, "1 s of 16 kHz audio -> exactly 98x80; silence "
                             "pins the log floor") as info:
        silent = AudioBuffer(samples=np.zeros(16000), sample_rate=16000)
        feats = log_mel(silent)
        assert feats.values.shape == (98, 80)
        floor = np.float32(np.log(1e-6))
        assert np.all(feats.values == floor)
        rng = np.random.default_rng(9)
        noisy = AudioBuffer(samples=rng.uniform(-0.5, 0.5, 16000),
                            sample_rate=16000)
        nf = log_mel(noisy)
        assert nf.values.shape == (98, 80)
        assert np.isfinite(nf.values).all()
        info["detail"] = "98 frames x 80 bins, silence == log(1e-6) everywhere"
