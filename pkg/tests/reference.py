"""Independent reference implementations used as test oracles.

Everything here is deliberately written in plain Python scalar
arithmetic, separate from the library's vectorized code paths, so the
two can be compared without sharing any implementation detail. Written
and frozen before the corresponding library modules.
"""

# --- scalar Kalman recursion -------------------------------------------------
#
# Config dict keys: x0 (list), p0_scale, q_var, epsilon, gamma (list),
# r_factor. Measurement noise per class: ((1 - z_i) * r_factor)^2.


def kalman_oracle_init(cfg):
    x = [float(v) for v in cfg["x0"]]
    p = [float(cfg["p0_scale"])] * len(x)
    return x, p


def kalman_oracle_step(x, p, preds, cfg):
    """One time update then sequential per-branch measurement updates.

    ``preds`` is a list of (branch_id, probs) pairs; processed in
    ascending branch id. Returns (x, p, label).
    """
    c = len(x)
    x = [float(v) for v in x]
    p = [float(v) + float(cfg["q_var"]) for v in p]
    for _, probs in sorted(preds, key=lambda item: item[0]):
        if max(probs) > cfg["epsilon"]:
            for i in range(c):
                z = cfg["gamma"][i] * probs[i]
                r = ((1.0 - z) * cfg["r_factor"]) ** 2
                k = p[i] / (p[i] + r)
                x[i] = x[i] + k * (z - x[i])
                p[i] = (1.0 - k) * p[i]
    label = max(range(c), key=lambda i: x[i])
    return x, p, label


def kalman_oracle_sequence(pred_lists, cfg):
    """Run the scalar recursion from the initial state over a window
    sequence; returns the per-window labels."""
    x, p = kalman_oracle_init(cfg)
    labels = []
    for preds in pred_lists:
        x, p, label = kalman_oracle_step(x, p, preds, cfg)
        labels.append(label)
    return labels


# One fully hand-evaluated scalar measurement update, frozen here:
#   prior x = 0.8, prior P = 0.01 + 5e-4 = 0.0105
#   measurement z = 0.9 (gamma = 1), noise R = ((1 - 0.9) * 2)^2 = 0.04
#   gain K = 0.0105 / (0.0105 + 0.04) = 21/101
#   x' = 0.8 + K * (0.9 - 0.8) = 0.8 + 2.1/101
#   P' = (1 - K) * 0.0105 = 0.84/101
HAND_CASE = {
    "x_prior": 0.8,
    "p_prior": 0.0105,
    "z": 0.9,
    "r": 0.04,
    "gain": 21.0 / 101.0,          # 0.20792079207920792...
    "x_post": 0.8 + 2.1 / 101.0,   # 0.82079207920792079...
    "p_post": 0.84 / 101.0,        # 0.00831683168316831...
}


# --- macro F1 ----------------------------------------------------------------


def macro_f1_oracle(truth, preds, class_count):
    """Unweighted mean of per-class F1, counted with explicit loops.

    A class absent from both truth and predictions has 2TP+FP+FN = 0
    and contributes F1 = 0 while still being averaged over.
    """
    total = 0.0
    for c in range(class_count):
        tp = sum(1 for t, q in zip(truth, preds) if t == c and q == c)
        fp = sum(1 for t, q in zip(truth, preds) if t != c and q == c)
        fn = sum(1 for t, q in zip(truth, preds) if t == c and q != c)
        denom = 2 * tp + fp + fn
        total += (2.0 * tp / denom) if denom > 0 else 0.0
    return total / class_count


# Hand-computed macro-F1 cases, frozen.
#
# Case A: truth=[0,0,1,1], preds=[0,1,0,1], 2 classes.
#   class 0: TP=1 FP=1 FN=1 -> F1 = 2/(2+1+1) = 0.5; class 1 symmetric.
#   macro = 0.5
MACRO_F1_CASE_A = {
    "truth": [0, 0, 1, 1],
    "preds": [0, 1, 0, 1],
    "class_count": 2,
    "expected": 0.5,
}
# Case B: 3 balanced classes, everything predicted as class 0.
#   truth=[0,1,2], preds=[0,0,0]
#   class 0: TP=1 FP=2 FN=0 -> F1 = 2/(2+2+0) = 0.5
#   class 1: TP=0 -> 0; class 2: TP=0 -> 0
#   macro = 0.5/3 = 1/6
MACRO_F1_CASE_B = {
    "truth": [0, 1, 2],
    "preds": [0, 0, 0],
    "class_count": 3,
    "expected": 1.0 / 6.0,
}
