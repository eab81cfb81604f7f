import numpy as np
import pytest

from stressfuse.energy import DEFAULT_COST_MODEL, CostModel
from stressfuse.errors import (
    ConfigurationError,
    DegenerateTrainingError,
    ValidationError,
)
from stressfuse.gating import (
    BRANCH_IDS,
    BRANCH_MODALITIES,
    DEFAULT_DELTA,
    BranchSpec,
    ConstantGate,
    GateDecision,
    decide,
    default_delta,
    gate,
    make_gate_labels,
    select_branches,
    select_subset,
    train_gate,
)

UNIT_COSTS = CostModel(
    extraction={m: 1.0 for m in ("ACC", "BVP", "EDA", "TEMP")},
    classifier={k: 1.0 for k in ("DT", "RF", "AB", "LDA", "KNN")},
    gate_cost=1.0,
)


class TestBranchSpec:
    def test_modality_sets(self):
        assert BRANCH_MODALITIES == {
            "B1": ("BVP", "EDA", "TEMP"),
            "B2": ("ACC", "BVP", "EDA"),
            "B3": ("BVP", "EDA"),
            "B4": ("ACC", "BVP"),
            "B5": ("ACC", "EDA"),
        }
        assert BRANCH_IDS == ("B1", "B2", "B3", "B4", "B5")

    def test_modalities_property(self):
        assert BranchSpec(id="B4", kind="KNN").modalities == ("ACC", "BVP")

    def test_unknown_branch_rejected(self):
        with pytest.raises(ConfigurationError):
            BranchSpec(id="B6", kind="DT")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigurationError):
            BranchSpec(id="B1", kind="SVM")


class TestSelectSubset:
    def test_delta_zero_is_argmax_only(self):
        assert select_subset((0.6, 0.3, 0.1), 0.0) == (0,)

    def test_band_admits_close_runners(self):
        # 0.3 > 0.6 - 0.4, while 0.1 sits exactly on the boundary and
        # strict ">" keeps it out
        assert select_subset((0.6, 0.3, 0.1), 0.4) == (0, 1)

    def test_delta_one_selects_everything(self):
        assert select_subset((0.6, 0.3, 0.1), 1.0) == (0, 1, 2)
        assert select_subset((1.0, 0.0, 0.0, 0.0, 0.0), 1.0) == (0, 1, 2, 3, 4)

    def test_argmax_always_selected(self, rng):
        for _ in range(200):
            probs = rng.dirichlet(np.ones(5))
            for delta in (0.0, 0.17, 0.5, 1.0):
                assert int(np.argmax(probs)) in select_subset(probs, delta)

    def test_monotone_in_delta(self, rng):
        deltas = np.linspace(0.0, 1.0, 11)
        for _ in range(100):
            probs = rng.dirichlet(np.ones(4))
            subsets = [set(select_subset(probs, d)) for d in deltas]
            for small, big in zip(subsets, subsets[1:]):
                assert small <= big

    def test_delta_out_of_range(self):
        with pytest.raises(ValidationError):
            select_subset((0.5, 0.5), -0.01)
        with pytest.raises(ValidationError):
            select_subset((0.5, 0.5), 1.01)

    def test_argmax_tie_goes_to_lowest_index(self):
        assert select_subset((0.4, 0.4, 0.2), 0.0) == (0,)


class TestGateDecision:
    SPECS = (BranchSpec("B1", "DT"), BranchSpec("B2", "RF"), BranchSpec("B3", "DT"))

    def test_decide_round_trip(self):
        d = decide((0.6, 0.3, 0.1), 0.4, self.SPECS)
        assert d.selected == (0, 1)
        assert [s.id for s in d.selected_specs] == ["B1", "B2"]
        assert d.delta == 0.4

    def test_inconsistent_selection_rejected(self):
        with pytest.raises(ValidationError):
            GateDecision(
                probs=(0.6, 0.3, 0.1), selected=(0, 2), delta=0.4, specs=self.SPECS
            )

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            GateDecision(
                probs=(0.6, 0.4), selected=(0,), delta=0.0, specs=self.SPECS
            )

    def test_probs_are_read_only(self):
        d = decide((0.6, 0.3, 0.1), 0.0, self.SPECS)
        with pytest.raises(ValueError):
            d.probs[0] = 0.0


def _branch_features(rng, y, informative):
    """Per-branch training matrices where only ``informative`` modalities
    separate the classes; everything else is pure noise."""
    blocks = {}
    for modality, width in (("ACC", 12), ("BVP", 6), ("EDA", 7), ("TEMP", 5)):
        X = rng.normal(size=(len(y), width))
        if modality in informative:
            X[:, 0] += 3.0 * y
        blocks[modality] = X
    return {
        bid: np.hstack([blocks[m] for m in mods])
        for bid, mods in BRANCH_MODALITIES.items()
    }


class TestSelectBranches:
    def test_eda_only_signal_selects_eda_branches(self, rng):
        y = np.repeat([0, 1, 2], 30)
        features = _branch_features(rng, y, informative={"EDA"})
        specs, models, losses = select_branches(features, y, k=3, seed=0)
        assert len(specs) == len(models) == 3
        for spec in specs:
            assert "EDA" in spec.modalities
        # the one EDA-free branch really is the loser on training loss
        best = {bid: min(v for (b, _), v in losses.items() if b == bid)
                for bid in BRANCH_IDS}
        assert best["B4"] > max(best[s.id] for s in specs)

    def test_k1_takes_global_minimum(self, rng):
        y = np.repeat([0, 1, 2], 30)
        features = _branch_features(rng, y, informative={"EDA"})
        specs, models, losses = select_branches(features, y, k=1, seed=0)
        assert len(specs) == 1
        best = {bid: min(v for (b, _), v in losses.items() if b == bid)
                for bid in BRANCH_IDS}
        assert best[specs[0].id] == min(best.values())

    def test_specs_come_back_in_branch_order(self, rng):
        y = np.repeat([0, 1, 2], 30)
        features = _branch_features(rng, y, informative={"EDA", "BVP", "ACC", "TEMP"})
        specs, _, _ = select_branches(features, y, k=3, seed=0)
        ids = [s.id for s in specs]
        assert ids == sorted(ids)

    def test_too_few_survivors_is_an_error(self, rng):
        y = np.repeat([0, 1, 2], 30)
        features = _branch_features(rng, y, informative={"EDA"})
        only_two = {b: features[b] for b in ("B1", "B3")}
        with pytest.raises(DegenerateTrainingError):
            select_branches(only_two, y, k=3, seed=0)

    def test_k_must_be_positive(self, rng):
        y = np.repeat([0, 1], 30)
        features = _branch_features(rng, y, informative={"EDA"})
        with pytest.raises(ConfigurationError):
            select_branches(features, y, k=0)


class TestMakeGateLabels:
    def test_cheapest_correct_branch_wins(self):
        # both branches correct; B3 runs a cheaper classifier than B2
        specs = (BranchSpec("B2", "RF"), BranchSpec("B3", "DT"))
        probs = [np.array([[0.9, 0.1]]), np.array([[0.8, 0.2]])]
        labels = make_gate_labels(probs, [0], specs, DEFAULT_COST_MODEL)
        np.testing.assert_array_equal(labels, [1])

    def test_no_correct_branch_falls_back_to_confidence(self):
        specs = (BranchSpec("B1", "DT"), BranchSpec("B2", "DT"), BranchSpec("B3", "DT"))
        probs = [
            np.array([[0.20, 0.80]]),
            np.array([[0.30, 0.70]]),
            np.array([[0.25, 0.75]]),
        ]
        labels = make_gate_labels(probs, [0], specs, UNIT_COSTS)
        np.testing.assert_array_equal(labels, [1])

    def test_equal_cost_tie_takes_lowest_index(self):
        specs = (BranchSpec("B2", "DT"), BranchSpec("B3", "DT"))
        probs = [np.array([[0.9, 0.1]]), np.array([[0.9, 0.1]])]
        labels = make_gate_labels(probs, [0], specs, UNIT_COSTS)
        np.testing.assert_array_equal(labels, [0])

    def test_rows_labelled_independently(self):
        specs = (BranchSpec("B2", "RF"), BranchSpec("B3", "DT"))
        probs = [
            np.array([[0.9, 0.1], [0.1, 0.9], [0.9, 0.1]]),
            np.array([[0.8, 0.2], [0.9, 0.1], [0.2, 0.8]]),
        ]
        # row 0: both correct -> cheaper B3; row 1: only B2 correct;
        # row 2: only B3 correct
        labels = make_gate_labels(probs, [0, 1, 1], specs, DEFAULT_COST_MODEL)
        np.testing.assert_array_equal(labels, [1, 0, 1])

    def test_length_mismatch_rejected(self):
        specs = (BranchSpec("B2", "DT"),)
        with pytest.raises(ValidationError):
            make_gate_labels(
                [np.zeros((1, 2)), np.zeros((1, 2))], [0], specs, UNIT_COSTS
            )


class TestTrainGate:
    def test_gate_runs_on_twelve_acc_features(self, rng):
        X = rng.normal(size=(80, 12))
        labels = (X[:, 0] > 0).astype(int)
        model = train_gate(X, labels, n_branches=3, seed=0)
        d = gate(rng.normal(size=12), model, 0.4, specs=(
            BranchSpec("B1", "DT"), BranchSpec("B2", "DT"), BranchSpec("B3", "DT"),
        ))
        assert len(d.probs) == 3
        assert d.selected

    def test_single_label_fold_yields_constant_gate(self, rng):
        X = rng.normal(size=(40, 12))
        model = train_gate(X, np.full(40, 2), n_branches=3)
        assert isinstance(model, ConstantGate)
        probs = model.predict_proba(rng.normal(size=(5, 12)))
        np.testing.assert_allclose(probs, np.tile([0.0, 0.0, 1.0], (5, 1)))

    def test_constant_gate_serializes(self):
        model = ConstantGate(branch_index=1, n_branches=3, n_features=12)
        clone = ConstantGate.from_dict(model.to_dict())
        np.testing.assert_array_equal(
            clone.predict_proba(np.zeros((2, 12))),
            model.predict_proba(np.zeros((2, 12))),
        )


class TestDefaults:
    def test_default_delta_table(self):
        assert DEFAULT_DELTA == {3: 0.4, 2: 0.1}
        assert default_delta(3) == 0.4
        assert default_delta(2) == 0.1

    def test_unknown_class_count(self):
        with pytest.raises(ConfigurationError):
            default_delta(4)
