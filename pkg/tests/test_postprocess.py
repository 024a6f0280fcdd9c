import numpy as np
import pytest

from gradcheck import check_grads, distinct_rows, random_projection_loss
from latentgraph import postprocess, tensor
from latentgraph.errors import ConfigurationError


def brute_topk_mask(values, k):
    """Exhaustive oracle: keep the k largest per row, ties to the lowest column."""
    n, m = values.shape
    mask = np.zeros((n, m))
    for i in range(n):
        # sort by (-value, column) so equal values prefer the earlier column
        order = sorted(range(m), key=lambda j: (-values[i, j], j))
        for j in order[:k]:
            mask[i, j] = 1.0
    return mask


def test_topk_mask_small_example():
    v = np.array([[3.0, 1.0, 2.0], [0.0, 5.0, 4.0]])
    assert np.array_equal(postprocess.topk_mask(v, 2), [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])


def test_topk_mask_tie_prefers_lowest_column():
    v = np.array([[1.0, 1.0, 1.0, 1.0]])
    assert np.array_equal(postprocess.topk_mask(v, 2), [[1.0, 1.0, 0.0, 0.0]])


def test_topk_mask_keeps_diagonal_competition():
    # the diagonal is not exempt: a large self weight occupies a slot
    v = np.array([[10.0, 1.0, 2.0], [1.0, 10.0, 2.0], [1.0, 2.0, 10.0]])
    mask = postprocess.topk_mask(v, 1)
    assert np.array_equal(mask, np.eye(3))


@pytest.mark.parametrize("seed", range(100))
def test_topk_mask_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    k = int(rng.integers(1, n))
    if rng.random() < 0.5:
        values = rng.normal(size=(n, n))
    else:
        # coarse grid forces plenty of ties
        values = rng.integers(0, 4, size=(n, n)).astype(np.float64)
    assert np.array_equal(postprocess.topk_mask(values, k), brute_topk_mask(values, k))


def test_topk_mask_k_bounds():
    v = np.ones((3, 3))
    with pytest.raises(ConfigurationError):
        postprocess.topk_mask(v, 0)
    with pytest.raises(ConfigurationError):
        postprocess.topk_mask(v, 3)


def test_topk_sparsify_values_and_grad():
    p = tensor.parameter([[3.0, 1.0, 2.0]])
    out = postprocess.topk_sparsify(p, 2)
    assert np.array_equal(out.value, [[3.0, 0.0, 2.0]])
    tensor.backward(tensor.sum_all(out), [p])
    # dropped entries get exactly zero gradient, kept ones pass through
    assert np.array_equal(p.grad, [[1.0, 0.0, 1.0]])


def test_activate_symmetrize_metric_uses_relu():
    raw = tensor.constant([[1.0, -2.0], [4.0, -0.5]])
    out = postprocess.activate_symmetrize(raw, "mlp")
    expect = np.maximum(raw.value, 0.0)
    expect = (expect + expect.T) / 2.0
    assert np.array_equal(out.value, expect)


def test_activate_symmetrize_fgp_uses_elu():
    raw = tensor.constant([[0.0, -1.0], [-1.0, 0.0]])
    out = postprocess.activate_symmetrize(raw, "fgp")
    assert np.isclose(out.value[0, 1], np.exp(-1.0) - 1.0)


def test_activate_symmetrize_unknown_kind():
    with pytest.raises(ConfigurationError):
        postprocess.activate_symmetrize(tensor.constant([[1.0]]), "laplacian")


def test_process_skips_topk_for_fgp():
    n = 6
    rng = np.random.default_rng(0)
    raw = tensor.constant(rng.normal(size=(n, n)))
    out = postprocess.process(raw, 2, "fgp").value
    # elu keeps every entry nonzero (elu(x) = 0 only at x = 0), so no row is sparse
    assert (np.count_nonzero(out, axis=1) > 2 + 1).all()


def test_process_metric_row_support():
    # circulant similarity: neighbor relations are mutual, so symmetrization
    # adds no new slots and every row keeps exactly k entries
    n, k = 12, 5
    idx = np.arange(n)
    circ = np.minimum(np.abs(idx[:, None] - idx[None, :]), n - np.abs(idx[:, None] - idx[None, :]))
    raw = tensor.constant((n - circ).astype(np.float64))
    out = postprocess.process(raw, k, "mlp").value
    assert (np.count_nonzero(out, axis=1) == k).all()
    assert np.array_equal(out, out.T)


@pytest.mark.parametrize("seed", range(30))
def test_process_metric_path_properties(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 24))
    k = int(rng.integers(1, min(n, 8)))
    raw_val = rng.normal(size=(n, n)) * rng.uniform(0.5, 3.0)
    out = postprocess.process(tensor.constant(raw_val), k, "attentive").value
    assert np.array_equal(out, out.T)
    assert out.min() >= 0.0
    assert out.max() <= 1.0 + 1e-12
    # row support is confined to the row's own k slots plus incoming picks;
    # a hub column can push a single row past 2k, but the total cannot
    mask = postprocess.topk_mask(raw_val, k)
    union = np.maximum(mask, mask.T)
    assert np.all(out[union == 0.0] == 0.0)
    assert np.count_nonzero(out) <= 2 * n * k


def test_process_zero_pattern_subset_of_mask_union():
    rng = np.random.default_rng(2)
    n, k = 10, 3
    raw_val = rng.normal(size=(n, n))
    raw = tensor.constant(raw_val)
    out = postprocess.process(raw, k, "mlp").value
    mask = postprocess.topk_mask(raw_val, k)
    union = np.maximum(mask, mask.T)
    assert np.all(out[union == 0.0] == 0.0)


def test_process_gradient_flows():
    rng = np.random.default_rng(3)
    x = distinct_rows(rng, (6, 6))
    proj = random_projection_loss(np.random.default_rng(4), (6, 6))
    check_grads(lambda a: proj(postprocess.process(a, 2, "mlp")), [x])
    # fgp path keeps negative elu weights; shift the draw up so every degree
    # stays clear of the clamp, where the derivative is deliberately cut
    x_pos = np.abs(x) + 0.2
    check_grads(lambda a: proj(postprocess.process(a, 2, "fgp")), [x_pos])


def test_normalize_sym_is_tensor_op():
    m = tensor.constant(np.ones((3, 3)))
    out = postprocess.normalize_sym(m)
    assert np.allclose(out.value, np.ones((3, 3)) / 3.0)


def test_learner_kinds_frozen():
    assert postprocess.LEARNER_KINDS == ("fgp", "attentive", "mlp", "gnn")
