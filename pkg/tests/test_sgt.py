import numpy as np
import pytest

from transg.core.config import SgtConfig
from transg.core.errors import ConfigurationError, DimensionError
from transg.core.graphpe import build_graph, compute_pe
from transg.core.numerics import SeededRng, Tensor, no_record
from transg.core.sgt import embed_nodes, encode, fr_layer, full_relation_attention, new_encoder_state


def _state(config, num_joints=5, seq_len=3, seed=0):
    return new_encoder_state(config, num_joints, seq_len, SeededRng(seed))


def _warm_norms(state, spec, frames):
    """One training-mode pass so inference norms use non-trivial running stats."""
    with no_record():
        encode(frames, spec, state, training=True)


@pytest.fixture
def pe_graph(path_graph):
    return compute_pe(path_graph, 2)


@pytest.fixture
def frames():
    return SeededRng(1).normal(size=(3, 3, 5, 3))


def test_parameter_registry_layout():
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=2, pe_dim=2))
    assert state["layers.1.attn.query"].shape == (2, 4, 8)
    assert state["layers.0.attn.out"].shape == (8, 8)
    assert state["layers.0.ffn.w1"].shape == (16, 8)
    assert state["layers.0.ffn.w2"].shape == (8, 16)
    assert state["embed.position.weight"].shape == (8, 2)
    assert set(state.buffers) == {f"layers.{l}.norm{n}" for l in range(2) for n in (1, 2)}
    assert list(state.groups())[:2] == ["embed.value", "embed.position"]


def test_config_requires_d_equal_heads_times_dk():
    with pytest.raises(ConfigurationError) as info:
        _state(SgtConfig(d=10, heads=2, d_k=4))
    assert "d must equal heads * d_k" in info.value.violations[0]


def test_encode_shapes(pe_graph, frames):
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=2, pe_dim=2))
    reps = encode(frames, pe_graph, state, training=True, return_attention=True)
    assert reps.node_reps.shape == (3, 3, 5, 8)
    assert reps.skeleton_reps.shape == (3, 3, 8)
    assert reps.sequence_reps.shape == (3, 8)
    assert len(reps.attention) == 2 and reps.attention[0].shape == (3, 3, 2, 5, 5)


def test_pooling_is_a_plain_mean(pe_graph, frames):
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=1, pe_dim=2))
    reps = encode(frames, pe_graph, state)
    np.testing.assert_allclose(reps.skeleton_reps.data, reps.node_reps.data.mean(axis=2), atol=1e-12)
    np.testing.assert_allclose(reps.sequence_reps.data, reps.skeleton_reps.data.mean(axis=1), atol=1e-12)


def test_attention_rows_sum_to_one(pe_graph, frames):
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=2, pe_dim=2))
    reps = encode(frames, pe_graph, state, return_attention=True)
    for weights in reps.attention:
        np.testing.assert_allclose(weights.sum(axis=-1), 1.0, atol=1e-9)
        assert np.all(weights >= 0)


def test_embedding_matches_a_scalar_loop(pe_graph, frames):
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=1, pe_dim=2))
    h = embed_nodes(frames, pe_graph, state).data
    Wv, bv = state["embed.value.weight"].data, state["embed.value.bias"].data
    Wp, bp = state["embed.position.weight"].data, state["embed.position.bias"].data
    for b in range(frames.shape[0]):
        for t in range(frames.shape[1]):
            for i in range(frames.shape[2]):
                for c in range(8):
                    expected = bv[c] + bp[c]
                    expected += sum(Wv[c, k] * frames[b, t, i, k] for k in range(3))
                    expected += sum(Wp[c, k] * pe_graph.pe_matrix[i, k] for k in range(2))
                    assert h[b, t, i, c] == pytest.approx(expected, abs=1e-12)


def test_joint_permutation_equivariance_without_pe(frames):
    spec = build_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=2, use_pe=False, pe_dim=0))
    _warm_norms(state, spec, frames)
    perm = np.array([3, 0, 4, 1, 2])
    base = encode(frames, spec, state, training=False)
    permuted = encode(frames[:, :, perm], spec, state, training=False)
    np.testing.assert_allclose(permuted.node_reps.data, base.node_reps.data[:, :, perm], atol=1e-9)
    np.testing.assert_allclose(permuted.sequence_reps.data, base.sequence_reps.data, atol=1e-9)


def test_frames_do_not_attend_to_each_other(pe_graph, frames):
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=2, pe_dim=2))
    _warm_norms(state, pe_graph, frames)
    changed = frames.copy()
    changed[:, 1] += 0.5
    a = encode(frames, pe_graph, state, training=False).node_reps.data
    b = encode(changed, pe_graph, state, training=False).node_reps.data
    np.testing.assert_allclose(a[:, [0, 2]], b[:, [0, 2]], atol=1e-12)
    assert not np.allclose(a[:, 1], b[:, 1])


def test_inference_is_batch_size_independent(pe_graph, frames):
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=2, pe_dim=2))
    _warm_norms(state, pe_graph, frames)
    whole = encode(frames, pe_graph, state, training=False).sequence_reps.data
    single = np.concatenate([encode(frames[i : i + 1], pe_graph, state, training=False).sequence_reps.data for i in range(3)])
    np.testing.assert_allclose(whole, single, atol=1e-9)


def test_inference_does_not_touch_running_stats(pe_graph, frames):
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=1, pe_dim=2))
    before = {k: v.copy() for k, v in state.buffer_arrays().items()}
    encode(frames, pe_graph, state, training=False)
    for name, value in state.buffer_arrays().items():
        np.testing.assert_array_equal(value, before[name])


def test_wrong_input_shapes_raise(pe_graph):
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=1, pe_dim=2))
    with pytest.raises(DimensionError):
        encode(np.zeros((2, 3, 5, 2)), pe_graph, state)
    with pytest.raises(DimensionError):
        encode(np.zeros((2, 3, 4, 3)), pe_graph, state)


def test_same_seed_same_initialization():
    a = _state(SgtConfig(d=8, heads=2, d_k=4, layers=1, pe_dim=2), seed=4)
    b = _state(SgtConfig(d=8, heads=2, d_k=4, layers=1, pe_dim=2), seed=4)
    for name in a.params:
        np.testing.assert_array_equal(a[name].data, b[name].data)


# attention weights
def test_single_joint_attends_to_itself():
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=1, pe_dim=0), num_joints=1)
    h = Tensor(SeededRng(2).normal(size=(2, 3, 1, 8)))
    _, weights = full_relation_attention(h, 0, state)
    assert weights.shape == (2, 3, 2, 1, 1)
    assert np.all(weights == 1.0)
    assert fr_layer(h, 0, state).shape == (2, 3, 1, 8)


def test_zero_keys_give_uniform_attention():
    state = _state(SgtConfig(d=8, heads=2, d_k=4, layers=1, pe_dim=0))
    state["layers.0.attn.key"].data[...] = 0.0
    _, weights = full_relation_attention(Tensor(SeededRng(3).normal(size=(2, 3, 5, 8))), 0, state)
    np.testing.assert_allclose(weights, 1.0 / 5, atol=1e-15)


def test_hand_set_logits_weight_the_values():
    state = _state(SgtConfig(d=2, heads=2, d_k=1, layers=1, pe_dim=0), num_joints=2)
    state["layers.0.attn.query"].data[0] = [[1.0, 0.0]]
    state["layers.0.attn.key"].data[0] = [[1.0, 0.0]]
    state["layers.0.attn.value"].data[0] = [[0.0, 1.0]]
    # logits of joint 2 against (joint 1, joint 2) are (0, ln 3)
    h = Tensor(np.array([[[[0.0, 5.0], [np.sqrt(np.log(3.0)), -1.0]]]]))
    merged, weights = full_relation_attention(h, 0, state)
    np.testing.assert_allclose(weights[0, 0, 0, 1], [0.25, 0.75], atol=1e-12)
    np.testing.assert_allclose(weights[0, 0, 0, 0], [0.5, 0.5], atol=1e-12)
    assert merged.data[0, 0, 1, 0] == pytest.approx(0.25 * 5.0 + 0.75 * -1.0, abs=1e-12)
