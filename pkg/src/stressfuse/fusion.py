"""Late fusion of branch predictions: voting and Kalman filtering.

The Kalman back-end treats the per-branch class-probability vectors as
sequential measurements of a latent class-score vector x. Transition
and measurement matrices are identity; process noise is diagonal; each
class is updated by an independent scalar filter. x is deliberately not
renormalized — only its argmax is used for classification.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ValidationError

_PROB_TOL = 1e-6

#: Covariance floor: a perfectly trusted measurement (R = 0) would
#: collapse P to exactly zero and lock the filter; the floor keeps P
#: strictly positive without affecting regular updates.
_P_FLOOR = 1e-12


def _check_probs(probs, name):
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or len(probs) < 2:
        raise ValidationError(f"{name}: expected a 1-D probability vector")
    if not np.all(np.isfinite(probs)):
        raise ValidationError(f"{name}: non-finite entries")
    if probs.min() < -_PROB_TOL or probs.max() > 1 + _PROB_TOL:
        raise ValidationError(f"{name}: entries outside [0, 1]")
    if abs(probs.sum() - 1.0) > _PROB_TOL:
        raise ValidationError(f"{name}: probabilities sum to {probs.sum()}, not 1")
    probs.setflags(write=False)
    return probs


@dataclass(frozen=True, eq=False)
class BranchPrediction:
    """One branch classifier's output for one window."""

    branch_id: int
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _check_probs(self.probs, "probs"))


@dataclass(frozen=True)
class KalmanConfig:
    """Filter parameters; per-class measurement noise is
    ``((1 - z_i) * r_factor)**2`` after the per-class scale gamma is
    applied. The confidence threshold epsilon is tested against the raw
    (unscaled) maximum probability of each measurement."""

    x0: tuple
    r_factor: float
    epsilon: float
    gamma: tuple
    p0_scale: float = 0.01
    q_var: float = 5e-4

    def __post_init__(self):
        x0 = tuple(float(v) for v in self.x0)
        gamma = tuple(float(g) for g in self.gamma)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "gamma", gamma)
        if len(x0) < 2:
            raise ConfigurationError("x0 needs at least two classes")
        if len(gamma) != len(x0):
            raise ConfigurationError("gamma length must match x0")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigurationError(f"epsilon {self.epsilon} outside [0, 1]")
        if any(g <= 0 for g in gamma):
            raise ConfigurationError("gamma entries must be > 0")
        if self.p0_scale <= 0:
            raise ConfigurationError("p0_scale must be > 0")
        if self.q_var < 0:
            raise ConfigurationError("q_var must be >= 0")

    @property
    def n_classes(self):
        return len(self.x0)


#: Defaults for the 3-class problem (baseline / stress / amusement).
KALMAN_3CLASS = KalmanConfig(
    x0=(0.8, 0.1, 0.1), r_factor=2.0, epsilon=0.4, gamma=(0.278, 1.0, 1.0)
)

#: Defaults for the binary problem (non-stress / stress).
KALMAN_2CLASS = KalmanConfig(
    x0=(0.8, 0.2), r_factor=0.5, epsilon=0.7, gamma=(0.667, 1.1)
)


def default_kalman_config(n_classes):
    if n_classes == 3:
        return KALMAN_3CLASS
    if n_classes == 2:
        return KALMAN_2CLASS
    raise ConfigurationError(f"no default Kalman config for {n_classes} classes")


@dataclass(frozen=True, eq=False)
class KalmanState:
    x: np.ndarray
    P: np.ndarray
    step: int = 0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        P = np.asarray(self.P, dtype=float)
        if x.shape != P.shape or x.ndim != 1:
            raise ValidationError("state vectors x and P must share a 1-D shape")
        if not np.all(np.isfinite(x)):
            raise ValidationError("state x has non-finite entries")
        if np.any(P <= 0):
            raise ValidationError("covariance entries must be strictly positive")
        x.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "P", P)


def kalman_init(cfg):
    return KalmanState(
        x=np.asarray(cfg.x0, dtype=float),
        P=np.full(cfg.n_classes, cfg.p0_scale),
        step=0,
    )


def kalman_step(state, preds, cfg):
    """One time update, then one measurement update per sufficiently
    confident prediction (ascending branch id). Returns the new state
    and the window's class decision, argmax(x)."""
    gamma = np.asarray(cfg.gamma)
    if len(state.x) != cfg.n_classes:
        raise ValidationError("state size does not match config")
    x = np.array(state.x)
    P = state.P + cfg.q_var
    for pred in sorted(preds, key=lambda p: p.branch_id):
        if len(pred.probs) != cfg.n_classes:
            raise ValidationError("prediction size does not match config")
        if float(np.max(pred.probs)) > cfg.epsilon:
            z = gamma * pred.probs
            R = ((1.0 - z) * cfg.r_factor) ** 2
            K = P / (P + R)
            x = x + K * (z - x)
            P = np.maximum((1.0 - K) * P, _P_FLOOR)
    new_state = KalmanState(x=x, P=P, step=state.step + 1)
    return new_state, int(np.argmax(x))


def count_confident(preds, cfg):
    """How many of the predictions pass the epsilon confidence test."""
    return sum(1 for p in preds if float(np.max(p.probs)) > cfg.epsilon)


def run_kalman_sequence(windows, preds_per_window, cfg, diagnostics=None):
    """Filter a window sequence; state persists within a subject's run
    and resets to (x0, P0) at every subject boundary.

    ``windows`` need ``subject_id`` and ``window_index`` attributes and
    must be sorted by window_index within each subject's contiguous
    run. Returns the per-window class decisions.
    """
    if len(windows) != len(preds_per_window):
        raise ValidationError("windows and predictions differ in length")
    labels = []
    skipped = 0
    measured = 0
    state = None
    prev_subject = None
    prev_index = None
    for window, preds in zip(windows, preds_per_window):
        if window.subject_id != prev_subject:
            state = kalman_init(cfg)
            prev_subject = window.subject_id
        elif window.window_index <= prev_index:
            raise ValidationError(
                f"subject {window.subject_id}: window_index "
                f"{window.window_index} out of order"
            )
        prev_index = window.window_index
        confident = count_confident(preds, cfg)
        skipped += len(preds) - confident
        measured += confident
        state, label = kalman_step(state, preds, cfg)
        labels.append(label)
    if diagnostics is not None:
        diagnostics["kalman_measurements"] = measured
        diagnostics["kalman_skipped"] = skipped
    return labels


def fuse_hard(preds):
    """Majority vote over per-branch argmax classes. Vote ties are
    broken by the highest summed probability among the tied classes,
    then by the lowest class index."""
    if not preds:
        raise ValidationError("need at least one prediction")
    c = len(preds[0].probs)
    votes = np.zeros(c)
    sums = np.zeros(c)
    for pred in preds:
        if len(pred.probs) != c:
            raise ValidationError("predictions disagree on class count")
        votes[int(np.argmax(pred.probs))] += 1.0
        sums += pred.probs
    top = np.flatnonzero(votes == votes.max())
    if len(top) == 1:
        return int(top[0])
    return int(top[np.argmax(sums[top])])


def fuse_soft(preds):
    """Argmax of the elementwise mean probability vector; ties go to the
    lowest class index."""
    if not preds:
        raise ValidationError("need at least one prediction")
    c = len(preds[0].probs)
    total = np.zeros(c)
    for pred in preds:
        if len(pred.probs) != c:
            raise ValidationError("predictions disagree on class count")
        total += pred.probs
    return int(np.argmax(total))
