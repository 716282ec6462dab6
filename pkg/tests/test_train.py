"""Adam optimizer, fit loop, early stopping and checkpoint tests."""

import numpy as np
import numpy.testing as npt
import pytest

from vibfault.errors import (BadMagic, EmptyDataset, NonFiniteGradient,
                             NonFiniteLoss, ShapeMismatch, TruncatedFile,
                             VersionUnsupported)
from vibfault.model import ModelConfig, build_model, init_params
from vibfault.pipeline import SegmentSet, build_segment_set
from vibfault.synth import SynthConfig, synth_signal
from vibfault.train import (AdamState, EarlyStopConfig, History, TrainConfig,
                            adam_step, fit, load_checkpoint, save_checkpoint)

TOY = ModelConfig(window_len=40, class_count=4, conv1_filters=4,
                  conv1_kernel=8, conv2_filters=3, conv2_kernel=5,
                  pool_size=2, pool_stride=2, dense_hidden=10)


def toy_set(n_per_class=6, classes=4, window=40, seed=0):
    rng = np.random.default_rng(seed)
    n = n_per_class * classes
    data = rng.standard_normal((n, window)).astype(np.float32)
    labels = np.repeat(np.arange(classes), n_per_class)
    return SegmentSet(data, labels, np.zeros(n, dtype=np.int64),
                      window, 1, classes)


def synth_training_set(windows_per_class=40, window=200, stride=100, seed=0):
    """Separable 4-class set from the synthetic generator."""
    kinds = ("healthy", "inner", "outer", "ball")
    n_samples = (windows_per_class - 1) * stride + window
    signals = []
    for idx, kind in enumerate(kinds):
        sig = synth_signal(SynthConfig(
            fault_kind=kind, duration_s=n_samples / 12_000.0,
            noise_std=0.25, seed=seed + idx))
        sig.class_label = idx
        signals.append(sig)
    return build_segment_set(signals, window, stride, len(kinds))


class TestAdamStep:
    def test_first_step_is_signed_learning_rate(self):
        p = np.array([1.0])
        g = np.array([0.5])
        cfg = TrainConfig()
        adam_step([p], [g], AdamState([p]), cfg)
        # -lr * g / (|g| + eps) for the first step
        npt.assert_allclose(p[0] - 1.0, -9.99999980e-4, rtol=1e-9)

    def test_bias_correction_at_t1(self):
        p = np.array([0.0, 0.0])
        g = np.array([0.3, -0.7])
        state = AdamState([p])
        adam_step([p], [g], state, TrainConfig())
        npt.assert_allclose(state.m[0] / (1 - 0.9), g, rtol=1e-12)
        npt.assert_allclose(state.v[0] / (1 - 0.999), g ** 2, rtol=1e-12)

    def test_zero_gradient_is_noop(self):
        p = np.array([2.0, -3.0])
        state = AdamState([p])
        adam_step([p], [np.zeros(2)], state, TrainConfig())
        npt.assert_array_equal(p, [2.0, -3.0])
        npt.assert_array_equal(state.m[0], np.zeros(2))
        npt.assert_array_equal(state.v[0], np.zeros(2))

    def test_identical_sequences_identical_trajectories(self):
        rng = np.random.default_rng(0)
        grads = [rng.standard_normal(5) for _ in range(20)]
        pa = np.ones(5)
        pb = np.ones(5)
        sa, sb = AdamState([pa]), AdamState([pb])
        cfg = TrainConfig()
        for g in grads:
            adam_step([pa], [g.copy()], sa, cfg)
            adam_step([pb], [g.copy()], sb, cfg)
        npt.assert_array_equal(pa, pb)

    def test_second_moment_stays_nonnegative(self):
        rng = np.random.default_rng(1)
        p = rng.standard_normal(8)
        state = AdamState([p])
        for _ in range(50):
            adam_step([p], [rng.standard_normal(8)], state, TrainConfig())
            assert (state.v[0] >= 0).all()

    def test_shape_mismatch(self):
        p = np.ones(3)
        with pytest.raises(ShapeMismatch):
            adam_step([p], [np.ones(4)], AdamState([p]), TrainConfig())

    def test_nonfinite_gradient(self):
        p = np.ones(3)
        with pytest.raises(NonFiniteGradient):
            adam_step([p], [np.array([1.0, np.nan, 0.0])], AdamState([p]),
                      TrainConfig())


class TestEarlyStopping:
    LOSSES = [1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95, 0.5, 0.4]

    def test_injected_sequence_stops_after_patience(self):
        model = init_params(build_model(TOY), seed=0)
        snapshots = {}

        def val_eval(m, epoch):
            snapshots[epoch] = m.snapshot()
            return self.LOSSES[epoch - 1], 0.0

        cfg = TrainConfig(max_epochs=20, batch_size=8, seed=0,
                          early_stop=EarlyStopConfig(patience=5))
        model, history = fit(model, toy_set(), cfg, val_eval=val_eval)
        assert len(history.epochs) == 7          # stops after epoch 7
        assert history.stopped_early
        assert history.best_epoch == 2
        for got, want in zip(model.parameters(), snapshots[2]):
            npt.assert_array_equal(got, want)    # bit-exact restoration

    def test_disabled_early_stop_runs_all_epochs(self):
        model = init_params(build_model(TOY), seed=0)
        cfg = TrainConfig(max_epochs=6, batch_size=8, seed=0,
                          early_stop=EarlyStopConfig(enabled=False))
        _, history = fit(model, toy_set(), cfg)
        assert len(history.epochs) == 6
        assert not history.stopped_early
        assert history.best_epoch == 6
        assert np.isnan(history.epochs[0][3])    # no validation carve-out

    def test_best_is_never_worse_than_any_epoch(self):
        model = init_params(build_model(TOY), seed=1)
        losses = [0.8, 0.6, 0.7, 0.65, 0.75, 0.72, 0.71, 0.70, 0.69]

        def val_eval(m, epoch):
            return losses[epoch - 1], 0.0

        cfg = TrainConfig(max_epochs=9, batch_size=8, seed=1,
                          early_stop=EarlyStopConfig(patience=5))
        _, history = fit(model, toy_set(), cfg, val_eval=val_eval)
        recorded = [row[3] for row in history.epochs]
        best_row = history.best_epoch - 1
        assert recorded[best_row] == min(recorded)


class TestFit:
    def test_empty_dataset(self):
        empty = SegmentSet(np.zeros((0, 40), np.float32),
                           np.zeros(0, np.int64), np.zeros(0, np.int64),
                           40, 1, 4)
        with pytest.raises(EmptyDataset):
            fit(build_model(TOY), empty, TrainConfig())

    def test_nonfinite_loss_diagnostics(self):
        model = init_params(build_model(TOY), seed=0)
        original = model.loss
        model.loss = lambda logits, labels: (float("nan"), original(logits, labels)[1])
        cfg = TrainConfig(max_epochs=2, batch_size=8, seed=0,
                          early_stop=EarlyStopConfig(enabled=False))
        with pytest.raises(NonFiniteLoss) as err:
            fit(model, toy_set(), cfg)
        assert err.value.epoch == 1
        assert err.value.batch == 0
        assert "epoch 1" in str(err.value)

    def test_nonfinite_weights_abort_loudly(self):
        from vibfault.errors import NonFiniteActivation
        model = init_params(build_model(TOY), seed=0)
        model.dense2.w[...] = np.inf
        cfg = TrainConfig(max_epochs=2, batch_size=8, seed=0,
                          early_stop=EarlyStopConfig(enabled=False))
        with pytest.raises(NonFiniteActivation), np.errstate(invalid="ignore"):
            fit(model, toy_set(), cfg)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_learns_separable_synthetic_classes(self, seed):
        segs = synth_training_set(seed=10 * seed)
        model_cfg = ModelConfig(window_len=200, class_count=4,
                                conv1_kernel=50, conv2_kernel=25,
                                conv1_filters=16, conv2_filters=8,
                                dense_hidden=32)
        cfg = TrainConfig(max_epochs=50, batch_size=32, seed=seed,
                          early_stop=EarlyStopConfig(enabled=False))
        model = init_params(build_model(model_cfg), seed=seed)
        model, history = fit(model, segs, cfg)
        first_loss = history.epochs[0][1]
        last_loss = history.epochs[-1][1]
        assert last_loss < first_loss
        assert last_loss < 0.05

    def test_full_run_determinism(self, tmp_path):
        segs = synth_training_set(windows_per_class=20)
        model_cfg = ModelConfig(window_len=200, class_count=4,
                                conv1_kernel=50, conv2_kernel=25,
                                conv1_filters=8, conv2_filters=4,
                                dense_hidden=16)
        cfg = TrainConfig(max_epochs=5, batch_size=16, seed=3)
        paths = []
        histories = []
        for run in (0, 1):
            model = init_params(build_model(model_cfg), seed=3)
            model, history = fit(model, segs, cfg)
            path = tmp_path / f"run{run}.vfck"
            save_checkpoint(path, model)
            paths.append(path)
            histories.append(history)
        assert histories[0].epochs == histories[1].epochs
        assert paths[0].read_bytes() == paths[1].read_bytes()


class TestCheckpoint:
    def _trained_toy(self):
        model = init_params(build_model(TOY), seed=2)
        return model

    def test_round_trip_bit_exact(self, tmp_path):
        model = self._trained_toy()
        path = tmp_path / "model.vfck"
        save_checkpoint(path, model)
        loaded, state = load_checkpoint(path)
        assert state is None
        assert loaded.config == model.config
        for a, b in zip(loaded.parameters(), model.parameters()):
            npt.assert_array_equal(a, b)

    def test_adam_state_round_trip(self, tmp_path):
        model = self._trained_toy()
        state = AdamState(model.parameters())
        rng = np.random.default_rng(0)
        for _ in range(3):
            grads = [rng.standard_normal(p.shape).astype(np.float32)
                     for p in model.parameters()]
            adam_step(model.parameters(), grads, state, TrainConfig())
        path = tmp_path / "model.vfck"
        save_checkpoint(path, model, optimizer_state=state)
        _, loaded_state = load_checkpoint(path)
        assert loaded_state.t == 3
        for a, b in zip(loaded_state.m + loaded_state.v,
                        state.m + state.v):
            npt.assert_array_equal(a, b)

    def test_truncated_by_one_byte(self, tmp_path):
        model = self._trained_toy()
        path = tmp_path / "model.vfck"
        save_checkpoint(path, model)
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(TruncatedFile):
            load_checkpoint(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "model.vfck"
        path.write_bytes(b"XXXX" + b"\0" * 100)
        with pytest.raises(BadMagic):
            load_checkpoint(path)

    def test_unsupported_version(self, tmp_path):
        model = self._trained_toy()
        path = tmp_path / "model.vfck"
        save_checkpoint(path, model)
        raw = bytearray(path.read_bytes())
        raw[4] = 9
        path.write_bytes(bytes(raw))
        with pytest.raises(VersionUnsupported):
            load_checkpoint(path)

    def test_window_mismatch_names_layer(self, tmp_path):
        model = init_params(
            build_model(ModelConfig(window_len=500, class_count=4)), seed=0)
        path = tmp_path / "model.vfck"
        save_checkpoint(path, model)
        wanted = ModelConfig(window_len=1200, class_count=4)
        with pytest.raises(ShapeMismatch) as err:
            load_checkpoint(path, expected_config=wanted)
        assert "dense1" in str(err.value)


class TestRunReport:
    def test_reference_parameter_count_reported(self):
        from vibfault.train import format_run_report
        model = build_model(ModelConfig(window_len=500, class_count=14))
        text = format_run_report(model, History(epochs=[(1, 1, 1, 1, 1)],
                                                best_epoch=1),
                                 TrainConfig(), 1.0, "compiled")
        assert "param_count=392010" in text
        assert "flatten_dim=2816" in text


class TestHistory:
    def test_csv_round_trip(self, tmp_path):
        hist = History(epochs=[(1, 1.5, 0.25, 1.2, 0.3),
                               (2, 0.9, 0.5, 0.8, 0.6)],
                       best_epoch=2, stopped_early=False)
        path = tmp_path / "history.csv"
        hist.to_csv(path)
        loaded = History.from_csv(path)
        assert loaded.best_epoch == 2
        assert len(loaded.epochs) == 2
        npt.assert_allclose(loaded.epochs[1][1], 0.9, atol=1e-6)

    def test_header_written(self, tmp_path):
        path = tmp_path / "history.csv"
        History(epochs=[(1, 1, 1, 1, 1)], best_epoch=1).to_csv(path)
        first = path.read_text().splitlines()[0]
        assert first == "epoch,train_loss,train_acc,val_loss,val_acc"
