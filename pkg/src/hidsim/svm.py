"""Soft-margin binary SVM with an RBF kernel, trained by SMO.

The solver maximizes the dual

    L(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    s.t.  sum_i y_i a_i = 0,  0 <= a_i <= C

by repeatedly optimizing the maximal-violating pair. Everything here is
deterministic: identical inputs produce bit-identical models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError

DEFAULT_C = 10.0
DEFAULT_SIGMA = 1.0
KKT_TOL = 1e-3
MAX_SWEEPS = 10_000
# Alphas below this are treated as zero and not stored. Small enough that
# dropping them keeps |sum a_i y_i| under 1e-6 even for thousands of points.
ALPHA_CUTOFF = 1e-10


@dataclass
class KernelParams:
    """RBF width. `squared_norm` selects exp(-|d|^2 / 2s^2) (the standard
    form, default) versus exp(-|d| / 2s^2) with an unsquared distance."""

    sigma: float = DEFAULT_SIGMA
    squared_norm: bool = True

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass
class Sample:
    """One labelled feature vector. `uid` is a corpus-level identity used by
    the exchange protocol to deduplicate vectors without comparing floats."""

    x: np.ndarray
    y: int
    uid: int | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim != 1 or self.x.size < 1:
            raise ValueError("feature vector must be 1-D and non-empty")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("feature vector contains non-finite values")
        if self.y not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.y!r}")

    @property
    def dim(self) -> int:
        return self.x.size


def rbf_kernel(x1, x2, k: KernelParams) -> float:
    """Kernel value for a single pair; exactly 1.0 iff the inputs coincide."""
    a = np.asarray(x1, dtype=float)
    b = np.asarray(x2, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d2 = float(np.sum((a - b) ** 2))
    arg = d2 if k.squared_norm else np.sqrt(d2)
    return float(np.exp(-arg / (2.0 * k.sigma**2)))


def kernel_matrix(xs_a: np.ndarray, xs_b: np.ndarray, k: KernelParams) -> np.ndarray:
    """Pairwise kernel values between the rows of two sample matrices."""
    sq_a = np.sum(xs_a**2, axis=1)[:, None]
    sq_b = np.sum(xs_b**2, axis=1)[None, :]
    d2 = np.maximum(sq_a + sq_b - 2.0 * (xs_a @ xs_b.T), 0.0)
    arg = d2 if k.squared_norm else np.sqrt(d2)
    return np.exp(-arg / (2.0 * k.sigma**2))


@dataclass
class SvmModel:
    support_vectors: list[Sample]
    alphas: np.ndarray
    bias: float
    c_param: float
    kernel: KernelParams
    _sv_x: np.ndarray = field(init=False, repr=False)
    _sv_y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._sv_x = np.array([s.x for s in self.support_vectors])
        self._sv_y = np.array([s.y for s in self.support_vectors], dtype=float)

    @property
    def dim(self) -> int:
        return self._sv_x.shape[1]

    def decision_values(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized decision function over rows of `xs`."""
        xs = np.asarray(xs, dtype=float)
        if xs.ndim == 1:
            xs = xs[None, :]
        if xs.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: {xs.shape[1]} vs model {self.dim}")
        km = kernel_matrix(xs, self._sv_x, self.kernel)
        return km @ (self.alphas * self._sv_y) + self.bias


def dual_objective(data: list[Sample], alphas: np.ndarray, kernel: KernelParams) -> float:
    """Dual objective value at `alphas` for the given training set."""
    xs = np.array([s.x for s in data])
    ys = np.array([s.y for s in data], dtype=float)
    km = kernel_matrix(xs, xs, kernel)
    ay = alphas * ys
    return float(np.sum(alphas) - 0.5 * (ay @ km @ ay))


def train(
    data: list[Sample],
    c_param: float = DEFAULT_C,
    kernel: KernelParams | None = None,
    tol: float = KKT_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> SvmModel:
    """Fit the dual problem on `data` and return the trained model.

    Raises ValueError for single-class input and SolverError if the KKT
    violation gap does not reach `tol` within `max_sweeps` sweeps (one
    sweep = len(data) pair updates).
    """
    if kernel is None:
        kernel = KernelParams()
    if not data:
        raise ValueError("training set is empty")
    if not (c_param > 0):
        raise ValueError(f"c_param must be positive, got {c_param}")
    ys = np.array([s.y for s in data], dtype=float)
    if not ((ys > 0).any() and (ys < 0).any()):
        raise ValueError("training set must contain both classes")
    dims = {s.dim for s in data}
    if len(dims) != 1:
        raise ValueError(f"inconsistent feature dimensions: {sorted(dims)}")

    xs = np.array([s.x for s in data])
    n = len(data)
    km = kernel_matrix(xs, xs, kernel)
    q = (ys[:, None] * ys[None, :]) * km

    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 aQa - sum(a)
    max_updates = max_sweeps * n
    updates = 0
    while True:
        viol = -ys * grad
        up = ((ys > 0) & (alpha < c_param)) | ((ys < 0) & (alpha > 0))
        low = ((ys < 0) & (alpha < c_param)) | ((ys > 0) & (alpha > 0))
        i = int(np.argmax(np.where(up, viol, -np.inf)))
        j = int(np.argmin(np.where(low, viol, np.inf)))
        gap = viol[i] - viol[j]
        if gap <= tol:
            break
        if updates >= max_updates:
            raise SolverError(
                f"SMO did not converge after {updates} pair updates (gap {gap:.3e})",
                iterations=updates,
            )
        _update_pair(alpha, grad, q, ys, i, j, c_param)
        updates += 1

    m_up = viol[i]
    m_low = viol[j]
    keep = alpha > ALPHA_CUTOFF
    unbounded = keep & (alpha < c_param)
    if unbounded.any():
        # b solves y_s (g(x_s) + b) = 1 on margin vectors; viol == y_s - g(x_s)
        bias = float(np.mean(viol[unbounded]))
    else:
        bias = float((m_up + m_low) / 2.0)

    sv = [data[t] for t in np.flatnonzero(keep)]
    return SvmModel(
        support_vectors=sv,
        alphas=alpha[keep].copy(),
        bias=bias,
        c_param=c_param,
        kernel=kernel,
    )


def _update_pair(alpha, grad, q, ys, i, j, c):
    """Analytic solution of the two-variable subproblem, then clip to the box.
    Both branches preserve sum_i y_i a_i exactly."""
    old_i, old_j = alpha[i], alpha[j]
    if ys[i] != ys[j]:
        quad = q[i, i] + q[j, j] + 2.0 * q[i, j]
        if quad <= 0:
            quad = 1e-12
        delta = (-grad[i] - grad[j]) / quad
        diff = alpha[i] - alpha[j]
        alpha[i] += delta
        alpha[j] += delta
        if diff > 0:
            if alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = diff
            if alpha[i] > c:
                alpha[i] = c
                alpha[j] = c - diff
        else:
            if alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if alpha[j] > c:
                alpha[j] = c
                alpha[i] = c + diff
    else:
        quad = q[i, i] + q[j, j] - 2.0 * q[i, j]
        if quad <= 0:
            quad = 1e-12
        delta = (grad[i] - grad[j]) / quad
        total = alpha[i] + alpha[j]
        alpha[i] -= delta
        alpha[j] += delta
        if total > c:
            if alpha[i] > c:
                alpha[i] = c
                alpha[j] = total - c
            if alpha[j] > c:
                alpha[j] = c
                alpha[i] = total - c
        else:
            if alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total
    grad += q[i] * (alpha[i] - old_i) + q[j] * (alpha[j] - old_j)


def decide(model: SvmModel, x) -> tuple[int, float]:
    """Classify one vector. Returns (label, decision value); an exact zero
    resolves to +1 so knife-edge traffic is treated as normal."""
    value = float(model.decision_values(np.asarray(x, dtype=float))[0])
    return (1 if value >= 0 else -1), value


def support_vector_set(model: SvmModel) -> list[Sample]:
    """The samples with nonzero dual coefficient, labels preserved."""
    return list(model.support_vectors)
