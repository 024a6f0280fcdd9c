"""Dense float64 matrices with tape-based reverse-mode differentiation.

Every value flowing through the model is a 2-D ``float64`` numpy array.
Operations take and return :class:`DiffNode` wrappers that record their
parents and a backward closure; :func:`backward` walks the recorded graph
once in reverse topological order and accumulates vector-Jacobian products
into ``.grad``. Scalars are represented as 1x1 matrices so a single code
path covers everything.

All computation is deterministic: identical inputs produce bitwise
identical values and gradients.
"""

import numpy as np

from .errors import ContractError, ShapeError

_EPS_DEGREE = 1e-10

# incremented whenever sym_normalize has to clamp a negative row sum;
# exposed for training diagnostics
CLAMP_COUNTER = {"negative_degree": 0}


def as_matrix(data, name="matrix"):
    """Coerce ``data`` to a 2-D float64 array, rejecting anything else."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={arr.ndim}")
    return np.ascontiguousarray(arr)


class DiffNode:
    """A matrix value plus the bookkeeping needed for reverse-mode autodiff.

    ``parents`` and ``_vjp`` are the tape: ``_vjp(g)`` maps the gradient
    flowing into this node to a tuple of gradients, one per parent (``None``
    for parents that do not require grad). Gradient arrays materialize
    lazily; reading ``.grad`` before any backward pass yields zeros.
    """

    __slots__ = ("value", "parents", "_vjp", "requires_grad", "_grad")

    def __init__(self, value, parents=(), vjp=None, requires_grad=False):
        self.value = value
        self.parents = tuple(parents)
        self._vjp = vjp
        self.requires_grad = requires_grad or any(
            p.requires_grad for p in self.parents
        )
        self._grad = None

    @property
    def grad(self):
        if self._grad is None:
            self._grad = np.zeros_like(self.value)
        return self._grad

    @grad.setter
    def grad(self, g):
        self._grad = g

    @property
    def shape(self):
        return self.value.shape

    def detach(self):
        """A fresh leaf holding the same value, cut off from the tape."""
        return DiffNode(self.value)

    def __repr__(self):
        tag = "param" if (self.requires_grad and not self.parents) else "node"
        return f"DiffNode({tag}, shape={self.value.shape})"


def constant(data, name="constant"):
    """Leaf node that does not accumulate gradient."""
    return DiffNode(as_matrix(data, name))


def parameter(data, name="parameter"):
    """Trainable leaf node; ``backward`` fills its ``.grad``."""
    return DiffNode(as_matrix(data, name).copy(), requires_grad=True)


def _binary_shapes(a, b, op):
    if a.value.shape != b.value.shape:
        raise ShapeError(
            f"{op}: shapes {a.value.shape} and {b.value.shape} differ"
        )


def add(a, b):
    _binary_shapes(a, b, "add")
    return DiffNode(a.value + b.value, (a, b), lambda g: (g, g))


def sub(a, b):
    _binary_shapes(a, b, "sub")
    return DiffNode(a.value - b.value, (a, b), lambda g: (g, -g))


def scale(a, c):
    """Multiply every entry by the python float ``c``."""
    c = float(c)
    return DiffNode(a.value * c, (a,), lambda g: (g * c,))


def add_eye(a, c=1.0):
    """a + c*I on a square matrix (used for self-loops)."""
    n, m = a.value.shape
    if n != m:
        raise ShapeError(f"add_eye: matrix is {n}x{m}, not square")
    out = a.value.copy()
    out[np.arange(n), np.arange(n)] += float(c)
    return DiffNode(out, (a,), lambda g: (g,))


def transpose(a):
    return DiffNode(
        np.ascontiguousarray(a.value.T), (a,),
        lambda g: (np.ascontiguousarray(g.T),),
    )


def matmul(a, b):
    if a.value.shape[1] != b.value.shape[0]:
        raise ShapeError(
            f"matmul: inner dims {a.value.shape} x {b.value.shape} differ"
        )
    av, bv = a.value, b.value
    return DiffNode(
        av @ bv, (a, b),
        lambda g: (g @ bv.T, av.T @ g),
    )


def hadamard(a, b):
    _binary_shapes(a, b, "hadamard")
    av, bv = a.value, b.value
    return DiffNode(av * bv, (a, b), lambda g: (g * bv, g * av))


def symmetrize(a):
    """(a + a^T) / 2."""
    n, m = a.value.shape
    if n != m:
        raise ShapeError(f"symmetrize: matrix is {n}x{m}, not square")
    return DiffNode(
        (a.value + a.value.T) / 2.0, (a,),
        lambda g: ((g + g.T) / 2.0,),
    )


def activation(a, kind):
    """Elementwise nonlinearity: relu, elu (alpha=1), tanh or identity.

    relu uses subgradient 0 at the origin; elu is C^1 there.
    """
    x = a.value
    if kind == "relu":
        out = np.maximum(x, 0.0)
        mask = (x > 0).astype(np.float64)
        return DiffNode(out, (a,), lambda g: (g * mask,))
    if kind == "elu":
        neg = np.minimum(x, 0.0)  # clamp before expm1 so the dead branch cannot overflow
        out = np.where(x >= 0.0, x, np.expm1(neg))
        der = np.where(x >= 0.0, 1.0, np.exp(neg))
        return DiffNode(out, (a,), lambda g: (g * der,))
    if kind == "tanh":
        out = np.tanh(x)
        der = 1.0 - out * out
        return DiffNode(out, (a,), lambda g: (g * der,))
    if kind == "identity":
        return DiffNode(x, (a,), lambda g: (g,))
    raise ContractError(f"unknown activation kind {kind!r}")


def relu(a):
    return activation(a, "relu")


def elu(a):
    return activation(a, "elu")


def row_normalize(a):
    """Scale every row to unit L2 norm; all-zero rows stay zero.

    Rows with non-finite norm (overflowed or NaN inputs) are zeroed too:
    inf/inf would otherwise smuggle NaN past downstream finiteness checks.
    """
    x = a.value
    norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
    ok = (norms > 0.0) & np.isfinite(norms)
    safe = np.where(ok, norms, 1.0)
    out = np.where(ok, x / safe, 0.0)

    def vjp(g):
        # d/dx (x_i / r_i) pulled back: remove the component of g along
        # the normalized row, then divide by the norm; zero rows get zero
        inner = (g * out).sum(axis=1, keepdims=True)
        gx = (g - inner * out) / safe
        return (np.where(ok, gx, 0.0),)

    return DiffNode(out, (a,), vjp)


def cosine_similarity_matrix(a, b=None):
    """Pairwise cosine similarities between rows of ``a`` and rows of ``b``.

    Rows with zero norm yield zero similarity against everything.
    """
    if b is None:
        na = row_normalize(a)
        return matmul(na, transpose(na))
    if a.value.shape[1] != b.value.shape[1]:
        raise ShapeError(
            f"cosine: feature dims {a.value.shape} vs {b.value.shape} differ"
        )
    return matmul(row_normalize(a), transpose(row_normalize(b)))


def sym_normalize(a, eps=_EPS_DEGREE):
    """Symmetric degree normalization D^{-1/2} M D^{-1/2}.

    Degrees are row sums of M. Zero-degree rows come out as zero rows.
    A negative degree on a nonzero row means something upstream produced
    negative weights; it is clamped to ``eps`` and counted in
    ``CLAMP_COUNTER`` rather than poisoning the run with NaNs.
    """
    m = a.value
    n, cols = m.shape
    if n != cols:
        raise ShapeError(f"sym_normalize: matrix is {n}x{cols}, not square")
    deg = m.sum(axis=1)
    zero = deg == 0.0
    clamped = (deg < 0.0) & ~zero
    if clamped.any():
        CLAMP_COUNTER["negative_degree"] += int(clamped.sum())
    deg_safe = np.maximum(deg, eps)
    s = np.where(zero, 0.0, 1.0 / np.sqrt(deg_safe))
    # explicit outer product keeps output bitwise symmetric for symmetric m
    outer = s[:, None] * s[None, :]
    out = m * outer
    # ds/ddeg is zero wherever the degree was clamped or the row is zero
    live = (~zero) & (deg > eps)
    sprime = np.where(live, -0.5 * s**3, 0.0)

    def vjp(g):
        gm = g * outer
        p = (g * m * s[None, :]).sum(axis=1)  # dL/ds_i via row i
        q = (g * m * s[:, None]).sum(axis=0)  # dL/ds_i via column i
        return (gm + np.broadcast_to((sprime * (p + q))[:, None], (n, n)).copy(),)

    return DiffNode(out, (a,), vjp)


def logsumexp_rows(a):
    """Stable log(sum(exp(row))) for each row; result is n x 1."""
    x = a.value
    mx = x.max(axis=1, keepdims=True)
    out = mx + np.log(np.exp(x - mx).sum(axis=1, keepdims=True))
    soft = np.exp(x - out)

    def vjp(g):
        return (g * soft,)

    return DiffNode(out, (a,), vjp)


def trace_sum(a):
    """Sum of diagonal entries as a 1x1 matrix."""
    n, m = a.value.shape
    if n != m:
        raise ShapeError(f"trace_sum: matrix is {n}x{m}, not square")
    out = np.array([[np.trace(a.value)]])

    def vjp(g):
        return (float(g[0, 0]) * np.eye(n),)

    return DiffNode(out, (a,), vjp)


def sum_all(a):
    """Sum of every entry as a 1x1 matrix."""
    out = np.array([[a.value.sum()]])
    shape = a.value.shape

    def vjp(g):
        return (np.full(shape, float(g[0, 0])),)

    return DiffNode(out, (a,), vjp)


def mean_all(a):
    return scale(sum_all(a), 1.0 / a.value.size)


def add_rowvec(a, v):
    """Add a 1 x d row vector to every row of an n x d matrix."""
    if v.value.shape != (1, a.value.shape[1]):
        raise ShapeError(
            f"add_rowvec: vector {v.value.shape} does not match {a.value.shape}"
        )
    return DiffNode(
        a.value + v.value, (a, v),
        lambda g: (g, g.sum(axis=0, keepdims=True)),
    )


def scale_cols(a, v):
    """Multiply column j of ``a`` by v[0, j]."""
    if v.value.shape != (1, a.value.shape[1]):
        raise ShapeError(
            f"scale_cols: vector {v.value.shape} does not match {a.value.shape}"
        )
    av, vv = a.value, v.value
    return DiffNode(
        av * vv, (a, v),
        lambda g: (g * vv, (g * av).sum(axis=0, keepdims=True)),
    )


def dropout(a, p, rng):
    """Inverted dropout with keep-prob 1-p; identity when p == 0."""
    if not 0.0 <= p < 1.0:
        raise ContractError(f"dropout rate must be in [0, 1), got {p}")
    if p == 0.0:
        return DiffNode(a.value, (a,), lambda g: (g,))
    mask = (rng.random(a.value.shape) >= p) / (1.0 - p)
    return DiffNode(a.value * mask, (a,), lambda g: (g * mask,))


def cross_entropy_masked(logits, labels, index):
    """Mean cross entropy over the rows selected by ``index``.

    ``labels`` is a full-length int vector of class ids; ``index`` picks
    which rows participate (train/val/test split masks).
    """
    x = logits.value
    idx = np.asarray(index, dtype=np.int64)
    if idx.size == 0:
        raise ContractError("cross_entropy_masked: empty index")
    y = np.asarray(labels, dtype=np.int64)[idx]
    mx = x.max(axis=1, keepdims=True)
    lse = mx + np.log(np.exp(x - mx).sum(axis=1, keepdims=True))
    logp = x - lse
    out = np.array([[-logp[idx, y].mean()]])

    def vjp(g):
        gx = np.zeros_like(x)
        soft = np.exp(logp[idx])
        soft[np.arange(idx.size), y] -= 1.0
        gx[idx] = soft * (float(g[0, 0]) / idx.size)
        return (gx,)

    return DiffNode(out, (logits,), vjp)


def _toposort(root):
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss, params=None):
    """Accumulate dloss/dp into ``p.grad`` for every reachable parameter.

    ``loss`` must be a 1x1 node. Parameters passed in ``params`` that the
    loss never touched keep a zero gradient. Accumulation order follows
    the (deterministic) construction order of the tape, so repeated runs
    are bitwise identical.
    """
    if loss.value.shape != (1, 1):
        raise ContractError(
            f"backward expects a scalar loss, got shape {loss.value.shape}"
        )
    if params is not None:
        for p in params:
            p.grad = np.zeros_like(p.value)
    if not loss.requires_grad:
        return
    grads = {id(loss): np.ones((1, 1))}
    for node in reversed(_toposort(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._vjp is None:
            node.grad = node.grad + g
            continue
        for parent, pg in zip(node.parents, node._vjp(g)):
            if not parent.requires_grad or pg is None:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
