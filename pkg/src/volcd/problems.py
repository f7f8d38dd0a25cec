"""Benchmark problem generators, dataset ingestion, and reference optima."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import ConfigError, NumericError, ParseError, UnboundedLevelSet
from .linalg import CsrSymmetricUpper, symmetrize
from .objectives import (
    HuberLoss,
    LogisticLoss,
    QuadraticObjective,
    RegularizedObjective,
    SeparableObjective,
)
from .rng import RngStream

__all__ = [
    "ProblemSpec",
    "banded_psd",
    "gen_huber",
    "gen_quadratic",
    "generate",
    "load_libsvm",
    "read_libsvm",
    "reference_min",
]


@dataclass
class ProblemSpec:
    """Parameters of a synthetic problem instance.

    The synthetic spectra put ``lam1 >= lam2`` ahead of a flat tail of ones,
    so ``lam1 / lam2`` is the spectral gap under study.
    """

    kind: str  # quadratic | huber | logistic
    n: int
    m: int | None = None
    lam1: float = 400.0
    lam2: float = 100.0
    mu: float = 0.01
    gamma: float = 1.0
    sparsity: int | None = None  # nonzeros per reflection direction
    seed: int = 0
    reflections: int = 10

    def validate(self) -> None:
        if self.kind not in ("quadratic", "huber", "logistic"):
            raise ConfigError(f"unknown problem kind {self.kind!r}")
        if self.n < 1:
            raise ConfigError("dimension must be positive")
        if not self.lam1 >= self.lam2 > 0:
            raise ConfigError("need lam1 >= lam2 > 0")
        if self.mu <= 0:
            raise ConfigError("smoothing parameter must be positive")
        if self.kind == "huber" and (self.m is None or self.m < 1):
            raise ConfigError("huber problems need a row count m")
        if self.sparsity is not None:
            top = min(self.m or self.n, self.n)
            if not 1 <= self.sparsity <= top:
                raise ConfigError(f"sparsity must lie in [1, {top}]")


def _sphere_direction(dim: int, rng: RngStream) -> np.ndarray:
    u = rng.standard_normal(dim)
    return u / np.linalg.norm(u)


def _sparse_direction(dim: int, p: int, rng: RngStream) -> scipy.sparse.csc_matrix:
    idx = rng.generator.choice(dim, size=p, replace=False)
    vals = _sphere_direction(p, rng)
    return scipy.sparse.csc_matrix(
        (vals, (idx, np.zeros(p, dtype=np.int64))), shape=(dim, 1)
    )


def gen_quadratic(spec: ProblemSpec):
    """Random quadratic with eigenvalues exactly (lam1, lam2, 1, ..., 1).

    The matrix starts diagonal and is conjugated by random Householder
    reflections (orthogonal similarity, so the spectrum is preserved to
    roundoff).  The linear term makes a random hypercube point stationary,
    so the optimal value is known in closed form.

    Returns ``(objective, x_star, f_star)``.
    """
    spec.validate()
    rng = RngStream(spec.seed)
    n = spec.n
    diag = np.ones(n)
    diag[0] = spec.lam1
    if n > 1:
        diag[1] = spec.lam2
    a = np.diag(diag)
    for _ in range(spec.reflections):
        u = _sphere_direction(n, rng)
        w = a @ u
        uw = float(u @ w)
        a -= 2.0 * np.outer(u, w) + 2.0 * np.outer(w, u) - 4.0 * uw * np.outer(u, u)
    a = symmetrize(a)
    x_star = rng.generator.uniform(-1.0, 1.0, size=n)
    b = a @ x_star
    f_star = -0.5 * float(b @ x_star)
    return QuadraticObjective(a, b), x_star, f_star


def gen_huber(spec: ProblemSpec):
    """Random smoothed-l1 regression problem with a controlled spectrum.

    The m x n data matrix starts as the rectangular diagonal with entries
    sqrt(lam1/mu), sqrt(lam2/mu), sqrt(1/mu), ... and is hit by two-sided
    random reflections, so the curvature matrix (1/mu) A'A has eigenvalues
    (lam1, lam2, 1, ..., 1) plus n - m zeros when m < n.  With ``sparsity``
    set, reflection directions have that many nonzeros and the data matrix
    stays sparse.  Offsets are consistent (b = A x_star), so the optimal
    value is exactly 0.

    Returns ``(objective, x_star, f_star)``.
    """
    spec.validate()
    if spec.kind != "huber":
        raise ConfigError("gen_huber needs a huber ProblemSpec")
    rng = RngStream(spec.seed)
    m, n = spec.m, spec.n
    k = min(m, n)
    # (1/mu) A'A must end up with eigenvalues (lam1, lam2, 1, ..., 1), so
    # the rectangular diagonal carries sqrt(mu * lam_i)
    diag = np.full(k, np.sqrt(spec.mu))
    diag[0] = np.sqrt(spec.mu * spec.lam1)
    if k > 1:
        diag[1] = np.sqrt(spec.mu * spec.lam2)

    if spec.sparsity is None:
        a = np.zeros((m, n))
        a[np.arange(k), np.arange(k)] = diag
        for _ in range(spec.reflections):
            u = _sphere_direction(m, rng)
            v = _sphere_direction(n, rng)
            a -= 2.0 * np.outer(u, u @ a)
            a -= 2.0 * np.outer(a @ v, v)
    else:
        a = scipy.sparse.diags(diag, shape=(m, n), format="csr")
        for _ in range(spec.reflections):
            u = _sparse_direction(m, spec.sparsity, rng)
            v = _sparse_direction(n, spec.sparsity, rng)
            a = (a - 2.0 * (u @ (u.T @ a))).tocsr()
            a = (a - 2.0 * ((a @ v) @ v.T)).tocsr()

    x_star = rng.generator.uniform(-1.0, 1.0, size=n)
    b = np.asarray(a @ x_star).ravel()
    obj = SeparableObjective(a, b, HuberLoss(spec.mu))
    return obj, x_star, 0.0


def generate(spec: ProblemSpec):
    """Dispatch on the problem kind; logistic problems come from datasets."""
    if spec.kind == "quadratic":
        return gen_quadratic(spec)
    if spec.kind == "huber":
        return gen_huber(spec)
    raise ConfigError("logistic problems are loaded from LIBSVM files, not generated")


# ---------------------------------------------------------------------------
# LIBSVM ingestion


def read_libsvm(path):
    """Parse a LIBSVM text file into (csr data matrix, labels in {-1, +1}).

    Lines look like ``label idx:val idx:val ...`` with 1-based feature
    indices.  Exactly two distinct labels are allowed; the smaller maps to
    -1 and the larger to +1.
    """
    labels: list[float] = []
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    n = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                labels.append(float(parts[0]))
            except ValueError:
                raise ParseError(f"bad label {parts[0]!r}", line=lineno) from None
            prev = 0
            for item in parts[1:]:
                try:
                    idx_s, val_s = item.split(":", 1)
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise ParseError(
                        f"bad feature entry {item!r}", line=lineno
                    ) from None
                if idx < 1:
                    raise ParseError(f"feature index {idx} < 1", line=lineno)
                if idx <= prev:
                    raise ParseError(
                        f"feature indices must increase, got {idx} after {prev}",
                        line=lineno,
                    )
                prev = idx
                indices.append(idx - 1)
                data.append(val)
                n = max(n, idx)
            indptr.append(len(indices))
    if not labels:
        raise ParseError("no samples found")
    uniq = sorted(set(labels))
    if len(uniq) > 2:
        raise ValueError(f"expected binary labels, found {len(uniq)} distinct values")
    y = np.asarray(labels)
    if len(uniq) == 2:
        y = np.where(y == uniq[0], -1.0, 1.0)
    elif uniq[0] not in (-1.0, 1.0):
        raise ValueError(f"single label value {uniq[0]} is not interpretable")
    a = scipy.sparse.csr_matrix(
        (data, indices, indptr), shape=(len(labels), n)
    )
    return a, y


def load_libsvm(path, gamma: float = 1.0):
    """Ridge-regularized logistic regression objective from a LIBSVM file."""
    a, y = read_libsvm(path)
    core = SeparableObjective(a, y, LogisticLoss())
    if gamma > 0:
        return RegularizedObjective(core, gamma)
    return core


# ---------------------------------------------------------------------------
# Reference optimal values


def reference_min(obj, grad_tol: float = 1e-10, max_iters: int = 100_000) -> float:
    """Optimal objective value, exact for quadratics, iterative otherwise.

    Quadratics use the minimum-norm stationary point; an inconsistent linear
    term means an unbounded objective.  Other objectives must have a positive
    definite curvature matrix (e.g. any ridge weight > 0): the bound-
    minimizing full-gradient iteration x <- x - B^{-1} grad f(x) then
    converges deterministically and runs until the gradient norm is tiny.
    """
    if isinstance(obj, QuadraticObjective):
        a = obj.a.to_dense() if isinstance(obj.a, CsrSymmetricUpper) else obj.a
        x_star, _, _, _ = np.linalg.lstsq(a, obj.b, rcond=None)
        resid = a @ x_star - obj.b
        if np.linalg.norm(resid) > 1e-8 * (1.0 + np.linalg.norm(obj.b)):
            raise UnboundedLevelSet(
                "linear term has a component outside the curvature range; "
                "the quadratic is unbounded below"
            )
        return float(obj.value(x_star))

    b = obj.curvature_matrix()
    try:
        if isinstance(b, CsrSymmetricUpper):
            from .objectives import _csr_to_scipy

            solve = scipy.sparse.linalg.factorized(_csr_to_scipy(b).tocsc())
        else:
            cho = scipy.linalg.cho_factor(b, check_finite=False)
            solve = lambda g: scipy.linalg.cho_solve(cho, g, check_finite=False)
    except (scipy.linalg.LinAlgError, RuntimeError) as exc:
        raise NumericError(
            "curvature matrix is singular; the reference solve needs a "
            "strongly convex objective (any ridge weight > 0) or a quadratic"
        ) from exc

    x = np.zeros(obj.n)
    for _ in range(max_iters):
        g = obj.gradient(x)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= grad_tol:
            return float(obj.value(x))
        x = x - solve(g)
    raise NumericError(
        f"reference solve did not reach gradient norm {grad_tol:g} in "
        f"{max_iters} iterations (achieved {gnorm:.3e})"
    )


# ---------------------------------------------------------------------------
# Structured sparse test matrices


def banded_psd(n: int, bandwidth: int, seed: int = 0) -> CsrSymmetricUpper:
    """Random diagonally dominant banded matrix (hence positive definite).

    Off-diagonal entries are standard normal within the band; each diagonal
    entry exceeds the absolute sum of its row, column included implicitly by
    symmetry.  nnz is about n * (bandwidth + 1).
    """
    if bandwidth < 1 or bandwidth >= n:
        raise ValueError("need 1 <= bandwidth < n")
    rng = RngStream(seed)
    rows = []
    cols = []
    vals = []
    rowsum = np.zeros(n)
    for d in range(1, bandwidth + 1):
        cnt = n - d
        v = rng.standard_normal(cnt)
        i = np.arange(cnt)
        rows.append(i)
        cols.append(i + d)
        vals.append(v)
        np.add.at(rowsum, i, np.abs(v))
        np.add.at(rowsum, i + d, np.abs(v))
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(rowsum + 1.0)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    order = np.lexsort((c, r))
    r, c, v = r[order], c[order], v[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, r + 1, 1)
    indptr = np.cumsum(indptr)
    return CsrSymmetricUpper(n, indptr, c, v)
