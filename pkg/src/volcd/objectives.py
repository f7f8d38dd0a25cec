"""Smooth objective functions with curvature matrices and cheap partial
gradients.

Each objective certifies its own upper curvature matrix B, meaning

    f(y) <= f(x) + <grad f(x), y - x> + ||y - x||_B^2 / 2

for all x, y.  Solvers hold a :class:`GradientState` per run; the state keeps
the iterate together with maintained residuals so that a coordinate step and
its partial gradient cost only the touched rows and columns, never a full
pass over the data.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse

from .linalg import CsrSymmetricUpper, symmetrize

__all__ = [
    "GradientState",
    "HuberLoss",
    "LogSumExpLoss",
    "LogisticLoss",
    "QuadraticObjective",
    "RegularizedObjective",
    "SeparableObjective",
    "SqrtNormLoss",
    "SquareLoss",
]

# Incremental caches are rebuilt from scratch this often to bound float drift.
REFRESH_INTERVAL = 10**6


def _csr_to_scipy(b: CsrSymmetricUpper) -> scipy.sparse.csr_matrix:
    """Full symmetric scipy matrix from upper-triangle storage."""
    rows = np.repeat(np.arange(b.n), np.diff(b.indptr))
    upper = scipy.sparse.coo_matrix((b.values, (rows, b.indices)), shape=b.shape)
    off = rows != b.indices
    lower = scipy.sparse.coo_matrix(
        (b.values[off], (b.indices[off], rows[off])), shape=b.shape
    )
    return (upper + lower).tocsr()


def _scipy_to_csr_upper(sp) -> CsrSymmetricUpper:
    """Upper-triangle storage from a full symmetric scipy matrix.

    Keeps the diagonal explicit for every nonempty row so construction-time
    validation sees the true diagonal values.
    """
    sp = scipy.sparse.csr_matrix(sp)
    sp.sum_duplicates()
    n = sp.shape[0]
    upper = scipy.sparse.triu(sp, k=1, format="csr")
    with_diag = upper + scipy.sparse.diags(sp.diagonal(), format="csr")
    with_diag.sort_indices()
    return CsrSymmetricUpper(n, with_diag.indptr, with_diag.indices, with_diag.data)


# ---------------------------------------------------------------------------
# Losses


class SquareLoss:
    """Least squares per row: (t - b_i)^2 / 2."""

    rowwise = True
    smoothness = 1.0

    def values(self, z, b):
        return 0.5 * (z - b) ** 2

    def derivs(self, z, b):
        return z - b


class LogisticLoss:
    """Logistic loss per row: ln(1 + exp(-b_i t)) with labels b_i in {-1, +1}.

    Evaluated as max(0, -s) + log1p(exp(-|s|)) for s = b_i t, which is stable
    for any magnitude of s.
    """

    rowwise = True
    smoothness = 0.25

    def values(self, z, b):
        s = b * z
        return np.maximum(0.0, -s) + np.log1p(np.exp(-np.abs(s)))

    def derivs(self, z, b):
        s = b * z
        # sigmoid(-s) without overflow on either tail
        out = np.empty_like(s)
        pos = s >= 0
        e = np.exp(-np.abs(s))
        out[pos] = e[pos] / (1.0 + e[pos])
        out[~pos] = 1.0 / (1.0 + e[~pos])
        return -b * out


class HuberLoss:
    """Smoothed absolute value per row, quadratic inside |t - b_i| <= mu."""

    rowwise = True

    def __init__(self, mu: float):
        if mu <= 0:
            raise ValueError("smoothing parameter must be positive")
        self.mu = float(mu)
        self.smoothness = 1.0 / self.mu

    def values(self, z, b):
        t = np.abs(z - b)
        return np.where(t <= self.mu, 0.5 * t**2 / self.mu, t - 0.5 * self.mu)

    def derivs(self, z, b):
        return np.clip((z - b) / self.mu, -1.0, 1.0)


class LogSumExpLoss:
    """Smoothed maximum of the residual vector: mu * ln sum exp(r_i / mu),
    shifted so the value at r = 0 is 0.  Operates on the full residual."""

    rowwise = False

    def __init__(self, mu: float):
        if mu <= 0:
            raise ValueError("smoothing parameter must be positive")
        self.mu = float(mu)
        self.smoothness = 1.0 / self.mu

    def value(self, r):
        top = float(np.max(r))
        return top + self.mu * (
            np.log(np.sum(np.exp((r - top) / self.mu))) - np.log(r.size)
        )

    def grad(self, r):
        e = np.exp((r - np.max(r)) / self.mu)
        return e / e.sum()


class SqrtNormLoss:
    """Smoothed Euclidean norm of the residual: sqrt(||r||^2 + mu^2) - mu."""

    rowwise = False

    def __init__(self, mu: float):
        if mu <= 0:
            raise ValueError("smoothing parameter must be positive")
        self.mu = float(mu)
        self.smoothness = 1.0 / self.mu

    def value(self, r):
        return float(np.sqrt(r @ r + self.mu**2) - self.mu)

    def grad(self, r):
        return r / np.sqrt(r @ r + self.mu**2)


# ---------------------------------------------------------------------------
# Gradient state


class GradientState:
    """Mutable per-run solver state: the iterate plus maintained residuals.

    Single-owner: one state per solver run, never shared between threads.
    Caches are rebuilt every ``REFRESH_INTERVAL`` steps to bound drift.
    """

    def __init__(self, x0: np.ndarray):
        self.x = np.array(x0, dtype=float, copy=True)
        self._steps = 0

    @property
    def value(self) -> float:
        return self._value

    def partial_gradient(self, s) -> np.ndarray:
        raise NotImplementedError

    def full_gradient(self) -> np.ndarray:
        raise NotImplementedError

    def apply_step(self, s, h) -> None:
        """Decrement x[S] by h and update residuals incrementally."""
        self._apply(np.asarray(s), np.asarray(h, dtype=float))
        self._steps += 1
        if self._steps >= REFRESH_INTERVAL:
            self.refresh()

    def refresh(self) -> None:
        self._steps = 0
        self._recompute()

    def _apply(self, s, h):
        raise NotImplementedError

    def _recompute(self):
        raise NotImplementedError


class _QuadraticDenseState(GradientState):
    def __init__(self, obj: "QuadraticObjective", x0):
        super().__init__(x0)
        self._a = obj._a_dense
        self._b = obj.b
        self._recompute()

    def _recompute(self):
        self._g = self._a @ self.x - self._b
        self._value = 0.5 * float(self.x @ (self._g - self._b))

    def partial_gradient(self, s):
        return self._g[s].copy()

    def full_gradient(self):
        return self._g.copy()

    def _apply(self, s, h):
        # h' A[S,S] h = h' (g_old[S] - g_new[S]), so the exact value change
        # -g_old[S]'h + h'A[S,S]h/2 collapses to -h'(g_old[S] + g_new[S])/2
        g = self._g
        a = self._a
        x = self.x
        if s.size == 1:
            i = s[0]
            hv = h[0]
            g_old = g[i]
            x[i] -= hv
            g -= a[i] * hv  # row view; symmetric, so row i is column i
            self._value -= 0.5 * hv * (g_old + g[i])
        elif s.size == 2:
            i, j = s
            hi, hj = h
            gi_old, gj_old = g[i], g[j]
            x[i] -= hi
            x[j] -= hj
            g -= a[i] * hi
            g -= a[j] * hj
            self._value -= 0.5 * (hi * (gi_old + g[i]) + hj * (gj_old + g[j]))
        else:
            gs_old = g[s].copy()
            x[s] -= h
            g -= a[:, s] @ h
            self._value -= 0.5 * float(h @ (gs_old + g[s]))


class _QuadraticSparseState(GradientState):
    def __init__(self, obj: "QuadraticObjective", x0):
        super().__init__(x0)
        op = obj._op_scipy()
        self._indptr = op.indptr
        self._rows = op.indices
        self._vals = op.data
        self._op = op
        self._b = obj.b
        self._recompute()

    def _recompute(self):
        self._g = self._op @ self.x - self._b
        self._value = 0.5 * float(self.x @ (self._g - self._b))

    def partial_gradient(self, s):
        return self._g[s].copy()

    def full_gradient(self):
        return self._g.copy()

    def _apply(self, s, h):
        g = self._g
        gs_old = g[s].copy()
        self.x[s] -= h
        for j, hj in zip(s, h):
            lo, hi = self._indptr[j], self._indptr[j + 1]
            g[self._rows[lo:hi]] -= self._vals[lo:hi] * hj
        self._value -= 0.5 * float(h @ (gs_old + g[s]))


class _SeparableDenseState(GradientState):
    def __init__(self, obj: "SeparableObjective", x0):
        super().__init__(x0)
        self._obj = obj
        self._recompute()

    def _recompute(self):
        obj = self._obj
        self._z = obj.a @ self.x
        self._sync()

    def _sync(self):
        obj = self._obj
        if obj.loss.rowwise:
            self._w = obj.loss.derivs(self._z, obj.b)
            self._value = float(obj.loss.values(self._z, obj.b).sum())
        else:
            r = self._z - obj.b
            self._w = obj.loss.grad(r)
            self._value = float(obj.loss.value(r))

    def partial_gradient(self, s):
        return self._obj.a[:, s].T @ self._w

    def full_gradient(self):
        return self._obj.a.T @ self._w

    def _apply(self, s, h):
        self.x[s] -= h
        self._z -= self._obj.a[:, s] @ h
        self._sync()


class _SeparableSparseState(GradientState):
    """Separable state over a scipy CSR data matrix.

    A companion CSC view provides the touched-rows structure: a coordinate
    step updates only the residuals of rows whose data columns it meets, and
    a partial gradient reads only those columns.
    """

    def __init__(self, obj: "SeparableObjective", x0):
        super().__init__(x0)
        self._obj = obj
        csc = obj._csc()
        self._cptr = csc.indptr
        self._crow = csc.indices
        self._cval = csc.data
        self._recompute()

    def _recompute(self):
        obj = self._obj
        self._z = np.asarray(obj.a @ self.x).ravel()
        obj_b = obj.b
        if obj.loss.rowwise:
            self._w = obj.loss.derivs(self._z, obj_b)
            self._value = float(obj.loss.values(self._z, obj_b).sum())
        else:
            r = self._z - obj_b
            self._w = obj.loss.grad(r)
            self._value = float(obj.loss.value(r))

    def partial_gradient(self, s):
        out = np.empty(len(s))
        for p, j in enumerate(s):
            lo, hi = self._cptr[j], self._cptr[j + 1]
            out[p] = self._cval[lo:hi] @ self._w[self._crow[lo:hi]]
        return out

    def full_gradient(self):
        return np.asarray(self._obj.a.T @ self._w).ravel()

    def _apply(self, s, h):
        obj = self._obj
        self.x[s] -= h
        slices = [slice(self._cptr[j], self._cptr[j + 1]) for j in s]
        rows = np.concatenate([self._crow[sl] for sl in slices])
        deltas = np.concatenate(
            [self._cval[sl] * hj for sl, hj in zip(slices, h)]
        )
        touched = np.unique(rows)
        if obj.loss.rowwise:
            old = obj.loss.values(self._z[touched], obj.b[touched]).sum()
            np.subtract.at(self._z, rows, deltas)
            zt = self._z[touched]
            self._w[touched] = obj.loss.derivs(zt, obj.b[touched])
            self._value += float(obj.loss.values(zt, obj.b[touched]).sum() - old)
        else:
            np.subtract.at(self._z, rows, deltas)
            r = self._z - obj.b
            self._w = obj.loss.grad(r)
            self._value = float(obj.loss.value(r))


class _RidgeState(GradientState):
    def __init__(self, obj: "RegularizedObjective", x0):
        self._inner = obj.inner.init_state(x0)
        self.x = self._inner.x  # shared iterate
        self._steps = 0
        self._gamma = obj.gamma
        self._sq = float(self.x @ self.x)

    @property
    def value(self):
        return self._inner.value + 0.5 * self._gamma * self._sq

    def partial_gradient(self, s):
        return self._inner.partial_gradient(s) + self._gamma * self.x[s]

    def full_gradient(self):
        return self._inner.full_gradient() + self._gamma * self.x

    def _apply(self, s, h):
        xs_old = self.x[s]
        self._sq += float(h @ h) - 2.0 * float(xs_old @ h)
        self._inner.apply_step(s, h)

    def _recompute(self):
        self._inner.refresh()
        self._sq = float(self.x @ self.x)


# ---------------------------------------------------------------------------
# Objectives


class QuadraticObjective:
    """f(x) = <Ax, x>/2 - <b, x> for symmetric PSD A; curvature matrix is A."""

    def __init__(self, a, b):
        if isinstance(a, CsrSymmetricUpper):
            self.a = a
            self.n = a.n
            self._a_dense = None
        else:
            self.a = np.asarray(a, dtype=float)
            self.n = self.a.shape[0]
            self._a_dense = self.a
        self.b = np.asarray(b, dtype=float)
        if self.b.shape != (self.n,):
            raise ValueError("linear term has wrong length")
        self._op = None

    def _op_scipy(self):
        if self._op is None:
            self._op = _csr_to_scipy(self.a)
        return self._op

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        ax = self._a_dense @ x if self._a_dense is not None else self._op_scipy() @ x
        return 0.5 * float(x @ ax) - float(self.b @ x)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ax = self._a_dense @ x if self._a_dense is not None else self._op_scipy() @ x
        return ax - self.b

    def curvature_matrix(self):
        return self.a

    def init_state(self, x0) -> GradientState:
        if self._a_dense is not None:
            return _QuadraticDenseState(self, x0)
        return _QuadraticSparseState(self, x0)


class SeparableObjective:
    """f(x) = sum_i g_i(<a_i, x>) for a rowwise loss, or g(Ax - b) for a
    full-residual loss; curvature matrix is L * A'A with L the loss
    smoothness constant."""

    def __init__(self, a, b, loss):
        if scipy.sparse.issparse(a):
            self.a = scipy.sparse.csr_matrix(a)
            self.sparse = True
        else:
            self.a = np.asarray(a, dtype=float)
            self.sparse = False
        self.m, self.n = self.a.shape
        self.b = np.asarray(b, dtype=float)
        if self.b.shape != (self.m,):
            raise ValueError("per-row parameter has wrong length")
        self.loss = loss
        self._csc_cache = None

    def _csc(self):
        if self._csc_cache is None:
            self._csc_cache = scipy.sparse.csc_matrix(self.a)
        return self._csc_cache

    def value(self, x) -> float:
        z = np.asarray(self.a @ np.asarray(x, dtype=float)).ravel()
        if self.loss.rowwise:
            return float(self.loss.values(z, self.b).sum())
        return float(self.loss.value(z - self.b))

    def gradient(self, x) -> np.ndarray:
        z = np.asarray(self.a @ np.asarray(x, dtype=float)).ravel()
        if self.loss.rowwise:
            w = self.loss.derivs(z, self.b)
        else:
            w = self.loss.grad(z - self.b)
        return np.asarray(self.a.T @ w).ravel()

    def curvature_matrix(self):
        scale = self.loss.smoothness
        if self.sparse:
            return _scipy_to_csr_upper(scale * (self.a.T @ self.a))
        return symmetrize(scale * (self.a.T @ self.a))

    def init_state(self, x0) -> GradientState:
        if self.sparse:
            return _SeparableSparseState(self, x0)
        return _SeparableDenseState(self, x0)


class RegularizedObjective:
    """inner(x) + gamma * ||x||^2 / 2; curvature gains gamma on the diagonal."""

    def __init__(self, inner, gamma: float):
        if gamma <= 0:
            raise ValueError("ridge weight must be positive")
        self.inner = inner
        self.gamma = float(gamma)
        self.n = inner.n

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return self.inner.value(x) + 0.5 * self.gamma * float(x @ x)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.inner.gradient(x) + self.gamma * x

    def curvature_matrix(self):
        core = self.inner.curvature_matrix()
        if isinstance(core, CsrSymmetricUpper):
            sp = _csr_to_scipy(core) + self.gamma * scipy.sparse.identity(self.n)
            return _scipy_to_csr_upper(sp)
        return core + self.gamma * np.eye(self.n)

    def init_state(self, x0) -> GradientState:
        return _RidgeState(self, x0)
