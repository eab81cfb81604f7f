"""Release gate for the full pipeline.

Every check prints one ``ACCEPTANCE <name> PASS|FAIL`` line (pytest runs
with ``-s`` so the lines land in the terminal) and then asserts, so a
red build always names the property that broke.  The benchmark-dataset
checks at the bottom need a converted recording directory and are
skipped unless ``STRESSFUSE_WESAD_DIR`` points at one.
"""

import dataclasses
import os
import time
from types import SimpleNamespace

import numpy as np
import pytest

from reference import (
    HAND_CASE,
    MACRO_F1_CASE_A,
    MACRO_F1_CASE_B,
    kalman_oracle_step,
    macro_f1_oracle,
)
from stressfuse.classifiers import training_loss
from stressfuse.classifiers.boost import AdaBoostClassifier
from stressfuse.classifiers.discriminant import LinearDiscriminantAnalysis
from stressfuse.classifiers.forest import RandomForestClassifier
from stressfuse.classifiers.tree import DecisionTreeClassifier
from stressfuse.energy import DEFAULT_COST_MODEL, CostModel
from stressfuse.eval import (
    PipelineConfig,
    aggregate,
    evaluate_fold,
    macro_f1,
    prepare_table,
    train_folds,
)
from stressfuse.fusion import (
    KALMAN_2CLASS,
    KALMAN_3CLASS,
    BranchPrediction,
    KalmanConfig,
    KalmanState,
    kalman_init,
    kalman_step,
)
from stressfuse.gating import select_subset
from stressfuse.ingest import (
    ClassSignalProfile,
    SyntheticProfile,
    generate_synthetic,
    load_dataset,
)


def _report(name, ok, detail=""):
    line = f"ACCEPTANCE {name:<26s} {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, line


def _cfg_dict(cfg):
    return {
        "x0": list(cfg.x0),
        "p0_scale": cfg.p0_scale,
        "q_var": cfg.q_var,
        "epsilon": cfg.epsilon,
        "gamma": list(cfg.gamma),
        "r_factor": cfg.r_factor,
    }


# ---------------------------------------------------------------- fusion


def test_kalman_hand_case():
    """A single confident measurement must reproduce the worked update."""
    cfg = KalmanConfig(
        x0=(0.8, 0.1, 0.1), r_factor=2.0, epsilon=0.4, gamma=(1.0, 1.0, 1.0)
    )
    pred = BranchPrediction(branch_id=0, probs=np.array([0.9, 0.05, 0.05]))
    state, _ = kalman_step(kalman_init(cfg), [pred], cfg)
    dx = abs(state.x[0] - HAND_CASE["x_post"])
    dp = abs(state.P[0] - HAND_CASE["p_post"])
    _report("kalman-hand-case", dx <= 1e-5 and dp <= 1e-5,
            f"|dx|={dx:.2e} |dP|={dp:.2e}")


def test_kalman_matches_oracle():
    """1000 random (state, preds, config) triples within 1e-9 in <1s."""
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for i in range(1000):
        cfg = KALMAN_3CLASS if i % 2 == 0 else KALMAN_2CLASS
        c = cfg.n_classes
        x = rng.uniform(0.01, 0.99, size=c)
        P = rng.uniform(1e-6, 0.05, size=c)
        state = KalmanState(x=x, P=P, step=int(rng.integers(0, 100)))
        n_preds = int(rng.integers(0, 4))
        ids = rng.choice(5, size=n_preds, replace=False)
        probs = [rng.dirichlet(np.ones(c)) for _ in range(n_preds)]
        preds = [
            BranchPrediction(branch_id=int(b), probs=p)
            for b, p in zip(ids, probs)
        ]
        got, label = kalman_step(state, preds, cfg)
        rx, rp, ref_label = kalman_oracle_step(
            list(x), list(P), [(int(b), list(p)) for b, p in zip(ids, probs)],
            _cfg_dict(cfg),
        )
        diff = max(np.abs(got.x - rx).max(), np.abs(got.P - rp).max())
        worst = max(worst, diff)
        ok &= diff <= 1e-9 and label == ref_label
    elapsed = time.perf_counter() - t0
    _report("kalman-oracle-1000", ok and elapsed < 1.0,
            f"worst={worst:.2e} in {elapsed:.2f}s")


# ---------------------------------------------------------------- gating


def test_gate_subset_properties():
    """10000 random confidence vectors in <1s: the argmax branch is always
    kept, widening the band never drops a branch, the band edges give
    exactly one branch and the full set."""
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    ok = True
    full = tuple(range(5))
    for _ in range(10000):
        probs = rng.dirichlet(np.ones(5))
        lo, hi = np.sort(rng.uniform(0.0, 1.0, size=2))
        narrow = select_subset(probs, float(lo))
        wide = select_subset(probs, float(hi))
        top = int(np.argmax(probs))
        ok &= top in narrow and top in wide
        ok &= set(narrow) <= set(wide)
        ok &= select_subset(probs, 0.0) == (top,)
        ok &= select_subset(probs, 1.0) == full
    elapsed = time.perf_counter() - t0
    _report("gate-subset-properties", ok and elapsed < 1.0,
            f"10000 vectors in {elapsed:.2f}s")


# ---------------------------------------------------------------- metrics


def test_macro_f1_against_oracle():
    ok = True
    for case in (MACRO_F1_CASE_A, MACRO_F1_CASE_B):
        got = macro_f1(case["truth"], case["preds"], case["class_count"])
        ok &= abs(got - case["expected"]) <= 1e-12
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(300):
        c = int(rng.integers(2, 5))
        n = int(rng.integers(5, 60))
        truth = rng.integers(0, c, size=n)
        preds = rng.integers(0, c, size=n)
        diff = abs(
            macro_f1(truth, preds, c) - macro_f1_oracle(truth, preds, c)
        )
        worst = max(worst, diff)
        ok &= diff <= 1e-12
    _report("macro-f1-oracle", ok, f"worst={worst:.2e}")


# ----------------------------------------------------------- classifiers


def test_classifier_cross_checks():
    rng = np.random.default_rng(42)

    # a one-tree forest is a plain CART on its own bootstrap sample
    X = np.vstack([rng.normal(loc, 0.5, size=(30, 4)) for loc in (0, 3, 6)])
    y = np.repeat([0, 1, 2], 30)
    rf = RandomForestClassifier(
        n_estimators=1, min_samples_leaf=5, max_features=None, seed=9
    ).fit(X, y, n_classes=3)
    Xc, yc = rf.canonical_training_set(X, y)
    idx = rf.bootstrap_indices(len(yc), 0)
    dt = DecisionTreeClassifier(min_samples_leaf=5).fit(
        Xc[idx], yc[idx], n_classes=3
    )
    T = rng.normal(3.0, 2.5, size=(200, 4))
    rf_ok = np.array_equal(rf.predict(T), dt.predict(T)) and np.array_equal(
        rf.predict_proba(T), np.eye(3)[dt.predict(T)]
    )

    # one boosting round is the plain uniform-weight stump
    Xb = np.vstack([rng.normal(0.0, 0.6, (25, 3)), rng.normal(4.0, 0.6, (25, 3))])
    yb = np.repeat([0, 1], 25)
    ab = AdaBoostClassifier(n_estimators=1).fit(Xb, yb)
    stump = DecisionTreeClassifier(max_depth=1, min_samples_leaf=1).fit(
        Xb, yb, n_classes=2
    )
    Tb = rng.normal(2.0, 2.0, (200, 3))
    ab_ok = np.array_equal(ab.predict(Tb), stump.predict(Tb)) and np.array_equal(
        ab.predict_proba(Tb), np.eye(2)[stump.predict(Tb)]
    )

    # mirror-image classes leave the midpoint exactly undecided
    Xl = np.array(
        [[1.0, 0.0], [2.0, 1.0], [2.0, -1.0],
         [-1.0, 0.0], [-2.0, -1.0], [-2.0, 1.0]]
    )
    yl = np.array([0, 0, 0, 1, 1, 1])
    p = LinearDiscriminantAnalysis().fit(Xl, yl).predict_proba([[0.0, 0.0]])[0]
    lda_ok = abs(p[0] - 0.5) <= 1e-9 and abs(p[1] - 0.5) <= 1e-9

    # a tree forced to a single leaf on balanced labels predicts the
    # uniform distribution, whose cross-entropy is exactly ln(c)
    ce_ok = True
    for c, n in ((3, 30), (2, 24)):
        yu = np.repeat(np.arange(c), n // c)
        Xu = rng.normal(size=(n, 3))
        leaf = DecisionTreeClassifier(min_samples_leaf=n).fit(Xu, yu, n_classes=c)
        ce_ok &= abs(training_loss(leaf, Xu, yu) - np.log(c)) <= 1e-12

    _report(
        "classifier-cross-checks",
        rf_ok and ab_ok and lda_ok and ce_ok,
        f"rf1=dt:{rf_ok} ab1=stump:{ab_ok} lda-sym:{lda_ok} ce-ln(c):{ce_ok}",
    )


# ----------------------------------------------------------------- energy


def _feature_profile():
    """Classes separable one modality at a time: EDA lifts both affect
    states off baseline, motion amplitude singles out the third class."""
    base = ClassSignalProfile(
        heart_rate_bpm=70.0, eda_level_us=2.0, eda_scr_per_min=4.0,
        temp_c=33.5, acc_amp_g=0.05, acc_freq_hz=1.0,
    )
    stress = dataclasses.replace(base, eda_level_us=6.0)
    amused = dataclasses.replace(base, eda_level_us=6.0, acc_amp_g=0.30)
    return SyntheticProfile(classes=(base, stress, amused))


def test_energy_ratio_at_low_delta():
    """With a narrow band the gated pipeline must cost at most half the
    always-on baseline while selecting a single branch per window at
    least 80% of the time."""
    records = generate_synthetic(2, 900, seed=11, class_profile=_feature_profile())
    cfg = PipelineConfig(n_classes=3, fusion="kalman", delta=0.1)
    table = prepare_table(records, cfg)
    folds = train_folds(table, cfg)
    frs = [evaluate_fold(table, tf, cfg) for tf in folds]
    res = aggregate(frs, 3)
    singles = sum(1 for fr in frs for sel in fr.selections if len(sel) == 1)
    total = sum(len(fr.selections) for fr in frs)
    ok = res.energy_ratio >= 2.0 and singles / total >= 0.8
    _report(
        "energy-ratio-low-delta", ok,
        f"ratio={res.energy_ratio:.4f} singleton={singles}/{total} "
        f"acc={res.micro_accuracy:.4f}",
    )


def _random_cost_model(rng):
    return CostModel(
        extraction={m: float(rng.uniform(0, 5)) for m in ("ACC", "BVP", "EDA", "TEMP")},
        classifier={k: float(rng.uniform(0, 3)) for k in ("DT", "RF", "AB", "LDA", "KNN")},
        gate_cost=float(rng.uniform(0, 2)),
    )


def test_energy_monotone_in_delta():
    """Total consumption never decreases as the band widens, for the
    default cost table and for arbitrary non-negative ones (each table
    retrains the gate, since its labels depend on the costs)."""
    records = generate_synthetic(2, 300, seed=5)
    base = PipelineConfig(n_classes=3, fusion="single")
    table = prepare_table(records, base)
    rng = np.random.default_rng(99)
    deltas = [round(0.1 * i, 1) for i in range(11)]
    ok = True
    default_totals = None
    for cm in [DEFAULT_COST_MODEL, _random_cost_model(rng), _random_cost_model(rng)]:
        cfg = dataclasses.replace(base, cost_model=cm)
        folds = train_folds(table, cfg)
        totals = []
        for d in deltas:
            dcfg = dataclasses.replace(cfg, delta=d)
            totals.append(sum(evaluate_fold(table, tf, dcfg).energy.total for tf in folds))
        ok &= all(a <= b + 1e-9 for a, b in zip(totals, totals[1:]))
        if default_totals is None:
            default_totals = totals
    spread = default_totals[-1] - default_totals[0]
    _report(
        "energy-monotone-in-delta", ok and spread > 0,
        f"3 cost tables x {len(deltas)} deltas, default spread={spread:.1f}",
    )


# ------------------------------------------------------------ end-to-end


@pytest.fixture(scope="module")
def e2e():
    t0 = time.perf_counter()
    records = generate_synthetic(4, 600, seed=7)
    cfg = PipelineConfig(n_classes=3, fusion="kalman")
    table = prepare_table(records, cfg)
    log = []
    folds = train_folds(
        table, cfg,
        audit=lambda stage, held_out, ws: log.append(
            (stage, held_out, tuple(w.subject_id for w in ws))
        ),
    )
    results = {}
    for mode in ("kalman", "soft", "hard"):
        mcfg = dataclasses.replace(cfg, fusion=mode)
        results[mode] = aggregate(
            [evaluate_fold(table, tf, mcfg) for tf in folds], 3
        )
    elapsed = time.perf_counter() - t0
    return SimpleNamespace(folds=folds, audit=log, results=results, elapsed=elapsed)


def test_loso_synthetic_accuracy(e2e):
    """Held-out accuracy at least 0.95 for every fusion mode, within a
    five-minute budget for the whole generate/train/evaluate cycle."""
    accs = {m: r.micro_accuracy for m, r in e2e.results.items()}
    ok = all(a >= 0.95 for a in accs.values()) and e2e.elapsed < 300
    _report(
        "loso-synthetic-accuracy", ok,
        " ".join(f"{m}={a:.4f}" for m, a in accs.items())
        + f" in {e2e.elapsed:.1f}s",
    )


def test_loso_leakage_audit(e2e):
    """Every training call sees only windows from the non-held-out
    subjects — both branch selection and the gate, in every fold."""
    subjects = {tf.test_subject for tf in e2e.folds}
    ok = len(e2e.audit) == 2 * len(e2e.folds)
    stages = {}
    for stage, held_out, train_subjects in e2e.audit:
        ok &= held_out not in train_subjects
        ok &= set(train_subjects) == subjects - {held_out}
        stages.setdefault(held_out, set()).add(stage)
    ok &= all(v == {"select_branches", "train_gate"} for v in stages.values())
    _report("loso-leakage-audit", ok,
            f"{len(e2e.audit)} training calls across {len(e2e.folds)} folds")


# ------------------------------------------------- benchmark dataset

WESAD_DIR = os.environ.get("STRESSFUSE_WESAD_DIR")


@pytest.mark.skipif(
    WESAD_DIR is None,
    reason="STRESSFUSE_WESAD_DIR not set; benchmark-dataset checks skipped",
)
class TestBenchmarkDataset:
    @pytest.fixture(scope="class")
    def runs(self):
        t0 = time.perf_counter()
        records = load_dataset(WESAD_DIR)
        cfg3 = PipelineConfig(n_classes=3, fusion="kalman", delta=0.4)
        table = prepare_table(records, cfg3)
        classes, counts = np.unique(np.asarray(table.labels3), return_counts=True)
        out = {
            "n_windows": len(table.windows),
            "per_class": {int(c): int(n) for c, n in zip(classes, counts)},
        }
        for label, cfg in (
            ("3class", cfg3),
            ("2class", PipelineConfig(n_classes=2, fusion="kalman", delta=0.1)),
        ):
            folds = train_folds(table, cfg)
            for mode in ("kalman", "soft", "hard"):
                mcfg = dataclasses.replace(cfg, fusion=mode)
                out[(label, mode)] = aggregate(
                    [evaluate_fold(table, tf, mcfg) for tf in folds],
                    cfg.n_classes,
                )
        out["elapsed"] = time.perf_counter() - t0
        return out

    def test_segment_count(self, runs):
        _report("wesad-segment-count", runs["n_windows"] == 6458,
                f"{runs['n_windows']} windows, per class {runs['per_class']}")

    def test_three_class_benchmark(self, runs):
        acc = runs[("3class", "kalman")].micro_accuracy * 100.0
        hard = runs[("3class", "hard")].micro_accuracy * 100.0
        ok = abs(acc - 86.34) <= 6.0 and acc > hard
        _report("wesad-3class", ok, f"kalman={acc:.2f} hard={hard:.2f}")

    def test_two_class_benchmark(self, runs):
        acc = runs[("2class", "kalman")].micro_accuracy * 100.0
        hard = runs[("2class", "hard")].micro_accuracy * 100.0
        soft = runs[("2class", "soft")].micro_accuracy * 100.0
        ok = abs(acc - 94.12) <= 5.0 and acc > hard and acc > soft
        _report("wesad-2class", ok,
                f"kalman={acc:.2f} hard={hard:.2f} soft={soft:.2f}")

    def test_runtime_budget(self, runs):
        _report("wesad-runtime", runs["elapsed"] < 7200.0,
                f"{runs['elapsed']:.0f}s")
