import numpy as np
import pytest

from vidtext.adapter import (
    AdapterParams,
    TrainConfig,
    apply_adapter,
    apply_adapter_array,
    batch_loss_and_grads,
    dsl_loss,
    fit_adapter,
    init_adapter,
    read_adapter,
    train,
    write_adapter,
)
from vidtext.backends import text_eol
from vidtext.errors import CacheChecksumError, ContractViolation
from vidtext.planted import training_pairs
from vidtext.types import Embedding, Modality, SimilarityMatrix


def emb(values, item_id="x"):
    return Embedding(values=np.asarray(values, dtype=np.float32), layer=0,
                     modality=Modality.TEXT, item_id=item_id)


def sq(scores):
    n = len(scores)
    return SimilarityMatrix(np.asarray(scores, float),
                            [f"q{i}" for i in range(n)], [f"c{i}" for i in range(n)])


class TestApplyAdapter:
    def test_zero_matrices_identity(self):
        p = AdapterParams(down=np.zeros((2, 4)), up=np.zeros((4, 2)), rank=2, alpha=8.0)
        e = emb([1.0, -2.0, 3.0, 0.5])
        out = apply_adapter(p, e)
        assert np.array_equal(out.values, e.values)

    def test_full_rank_inverse_scale_doubles(self):
        # up @ down == (1/scale) * I  =>  output == 2 * input
        d = 4
        alpha, rank = 8.0, 4
        scale = alpha / rank
        p = AdapterParams(down=np.eye(d), up=np.eye(d) / scale, rank=rank, alpha=alpha)
        e = emb([1.0, 2.0, -3.0, 4.0])
        out = apply_adapter(p, e)
        assert np.allclose(out.values, 2.0 * e.values, atol=1e-6)

    def test_matches_scalar_loop_oracle(self):
        rng = np.random.default_rng(0)
        d, r = 4, 2
        down = rng.standard_normal((r, d))
        up = rng.standard_normal((d, r))
        p = AdapterParams(down=down, up=up, rank=r, alpha=3.0)
        x = rng.standard_normal(d).astype(np.float32)
        out = apply_adapter(p, emb(x)).values
        oracle = np.array(x, dtype=np.float64)
        scale = 3.0 / 2
        for a in range(d):
            acc = 0.0
            for b in range(r):
                inner = sum(down[b, c] * float(x[c]) for c in range(d))
                acc += up[a, b] * inner
            oracle[a] += scale * acc
        assert np.allclose(out, oracle, atol=1e-6)

    def test_dim_mismatch(self):
        p = init_adapter(8, rank=2)
        with pytest.raises(ContractViolation):
            apply_adapter(p, emb([1.0, 2.0]))

    def test_rank_exceeding_dim_rejected(self):
        with pytest.raises(ContractViolation):
            init_adapter(4, rank=8)

    def test_preserves_tags(self):
        p = init_adapter(3, rank=1)
        e = Embedding(values=np.ones(3, np.float32), layer=2,
                      modality=Modality.VIDEO, item_id="v1")
        out = apply_adapter(p, e)
        assert out.layer == 2 and out.modality is Modality.VIDEO and out.item_id == "v1"


class TestDslLoss:
    @pytest.mark.parametrize("n", [2, 4, 16])
    def test_uniform_equals_two_log_n(self, n):
        loss, _ = dsl_loss(sq(np.full((n, n), 0.7)), 1.0)
        assert loss == pytest.approx(2 * np.log(n), abs=1e-4)

    def test_diagonal_dominant_near_zero(self):
        scores = np.full((2, 2), -10.0)
        np.fill_diagonal(scores, 10.0)
        loss, _ = dsl_loss(sq(scores), 1.0)
        expected = -2 * np.log(np.exp(10.0) / (np.exp(10.0) + np.exp(-10.0)))
        assert loss == pytest.approx(expected, rel=1e-6)
        assert loss < 1e-8

    def test_loss_nonnegative(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            loss, _ = dsl_loss(sq(rng.standard_normal((5, 5))), 2.0)
            assert loss >= 0.0

    def test_shift_invariance(self):
        rng = np.random.default_rng(2)
        scores = rng.standard_normal((6, 6))
        base, _ = dsl_loss(sq(scores), 3.0)
        shifted, _ = dsl_loss(sq(scores + 17.3), 3.0)
        assert shifted == pytest.approx(base, abs=1e-9)

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(3)
        scores = rng.standard_normal((8, 8))
        tau = 2.7
        _, grad = dsl_loss(sq(scores), tau)
        h = 1e-4
        for i in range(8):
            for j in range(8):
                sp, sm = scores.copy(), scores.copy()
                sp[i, j] += h
                sm[i, j] -= h
                fd = (dsl_loss(sq(sp), tau)[0] - dsl_loss(sq(sm), tau)[0]) / (2 * h)
                assert grad[i, j] == pytest.approx(fd, rel=1e-5, abs=1e-9)

    def test_non_square_rejected(self):
        m = SimilarityMatrix(np.zeros((2, 3)), ["a", "b"], ["x", "y", "z"])
        with pytest.raises(ContractViolation):
            dsl_loss(m, 1.0)


class TestFullPipelineGradients:
    def test_adapter_gradients_match_finite_differences(self):
        rng = np.random.default_rng(4)
        d, r, n = 8, 2, 4
        x = rng.standard_normal((n, d))
        y = rng.standard_normal((n, d))
        params = AdapterParams(down=rng.standard_normal((r, d)) * 0.4,
                               up=rng.standard_normal((d, r)) * 0.4, rank=r, alpha=4.0)
        tau = 6.0
        _, g_up, g_down, g_tau = batch_loss_and_grads(params, x, y, tau)
        h = 1e-4

        def loss_at(down, up, t):
            p = AdapterParams(down=down, up=up, rank=r, alpha=4.0)
            return batch_loss_and_grads(p, x, y, t)[0]

        for a in range(d):
            for b in range(r):
                up_p, up_m = params.up.copy(), params.up.copy()
                up_p[a, b] += h
                up_m[a, b] -= h
                fd = (loss_at(params.down, up_p, tau) - loss_at(params.down, up_m, tau)) / (2 * h)
                assert g_up[a, b] == pytest.approx(fd, rel=1e-4, abs=1e-10)
        for a in range(r):
            for b in range(d):
                dn_p, dn_m = params.down.copy(), params.down.copy()
                dn_p[a, b] += h
                dn_m[a, b] -= h
                fd = (loss_at(dn_p, params.up, tau) - loss_at(dn_m, params.up, tau)) / (2 * h)
                assert g_down[a, b] == pytest.approx(fd, rel=1e-4, abs=1e-10)
        fd_tau = (loss_at(params.down, params.up, tau + h)
                  - loss_at(params.down, params.up, tau - h)) / (2 * h)
        assert g_tau == pytest.approx(fd_tau, rel=1e-4)


class TestTraining:
    def embedded_pairs(self, toy, n=96, layer=2):
        pairs = training_pairs(n, seed=0)
        x = np.stack([toy.embed_text(p.dense, text_eol(), layer).values for p in pairs])
        y = np.stack([toy.embed_text(p.summary, text_eol(), layer).values for p in pairs])
        return x.astype(np.float64), y.astype(np.float64)

    @staticmethod
    def r1(q, c):
        qn = q / np.linalg.norm(q, axis=1, keepdims=True)
        cn = c / np.linalg.norm(c, axis=1, keepdims=True)
        return float(np.mean(np.argmax(qn @ cn.T, axis=1) == np.arange(len(q))))

    def test_zero_learning_rate_is_noop(self, toy):
        # full-batch so every step sees the same data: with lr=0 the loss log
        # must be flat and the params untouched
        x, y = self.embedded_pairs(toy, 64)
        cfg = TrainConfig(batch_size=64, epochs=3, learning_rate=0.0, seed=0,
                          rank=4, alpha=8.0)
        result = fit_adapter(x, y, cfg)
        baseline = init_adapter(x.shape[1], rank=4, alpha=8.0, seed=0)
        assert np.array_equal(result.params.up, baseline.up)
        assert np.array_equal(result.params.down, baseline.down)
        losses = [row.loss for row in result.log]
        assert len(losses) == 3
        assert max(losses) - min(losses) < 1e-9

    def test_zero_init_is_identity(self):
        p = init_adapter(16, rank=4, seed=1)
        rng = np.random.default_rng(5)
        x = rng.standard_normal((3, 16))
        assert np.array_equal(apply_adapter_array(p, x), x)

    def test_training_improves_heldout_retrieval(self, toy):
        x, y = self.embedded_pairs(toy, 128)
        xtr, ytr, xte, yte = x[:-32], y[:-32], x[-32:], y[-32:]
        base = self.r1(yte, xte)
        cfg = TrainConfig(batch_size=16, learning_rate=0.05, seed=0, rank=8, alpha=16.0)
        result = fit_adapter(xtr, ytr, cfg)
        post = self.r1(apply_adapter_array(result.params, yte),
                       apply_adapter_array(result.params, xte))
        assert post > base

    def test_loss_decreases(self, toy):
        x, y = self.embedded_pairs(toy, 128)
        cfg = TrainConfig(batch_size=16, learning_rate=0.05, seed=0, rank=8, alpha=16.0)
        losses = [row.loss for row in fit_adapter(x, y, cfg).log]
        k = max(1, len(losses) // 10)
        assert np.mean(losses[-k:]) < np.mean(losses[:k])

    def test_bit_reproducible(self, toy):
        x, y = self.embedded_pairs(toy, 64)
        cfg = TrainConfig(batch_size=16, learning_rate=0.05, seed=7, rank=4, alpha=8.0)
        a = fit_adapter(x, y, cfg)
        b = fit_adapter(x, y, cfg)
        assert np.array_equal(a.params.up, b.params.up)
        assert np.array_equal(a.params.down, b.params.down)
        assert [r.loss for r in a.log] == [r.loss for r in b.log]

    def test_temperature_clamped_and_logged(self, toy):
        x, y = self.embedded_pairs(toy, 64)
        cfg = TrainConfig(batch_size=16, learning_rate=5.0, seed=0, rank=4, alpha=8.0)
        result = fit_adapter(x, y, cfg)
        for row in result.log:
            assert 1.0 <= row.temperature <= 100.0

    def test_train_entrypoint_warns_on_short_dense(self, toy, caplog):
        from vidtext.types import TextPair
        pairs = training_pairs(16, seed=0)
        pairs[0] = TextPair(dense="tiny", summary="much longer summary text here",
                            pair_id=pairs[0].pair_id)
        cfg = TrainConfig(batch_size=8, learning_rate=0.01, seed=0, rank=4, alpha=8.0)
        import logging
        with caplog.at_level(logging.WARNING):
            train(pairs, toy, cfg, layer=2)
        assert any("dense sides" in r.message for r in caplog.records)

    def test_too_few_pairs_rejected(self, toy):
        pairs = training_pairs(4, seed=0)
        with pytest.raises(ContractViolation):
            train(pairs, toy, TrainConfig(batch_size=16), layer=2)

    def test_batch_size_minimum(self):
        with pytest.raises(ContractViolation):
            TrainConfig(batch_size=1)


class TestAdapterSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        p = AdapterParams(down=rng.standard_normal((4, 16)),
                          up=rng.standard_normal((16, 4)), rank=4, alpha=8.0)
        path = tmp_path / "a.vadp"
        write_adapter(path, p)
        back = read_adapter(path)
        assert back.rank == 4 and back.alpha == 8.0 and back.dim == 16
        # storage is float32
        assert np.array_equal(back.down, p.down.astype(np.float32).astype(np.float64))
        assert np.array_equal(back.up, p.up.astype(np.float32).astype(np.float64))

    def test_corruption_detected(self, tmp_path):
        p = init_adapter(8, rank=2, seed=0)
        path = tmp_path / "a.vadp"
        write_adapter(path, p)
        data = bytearray(path.read_bytes())
        data[20] ^= 0x01
        path.write_bytes(bytes(data))
        with pytest.raises(CacheChecksumError):
            read_adapter(path)
