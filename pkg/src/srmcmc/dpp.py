"""Determinantal point process measures.

An L-ensemble assigns unnormalized weight pi(S) = det(L_S) to each subset S,
with pi(empty) = 1. The marginal kernel K = L(I+L)^{-1} gives inclusion
probabilities Pr(S subset T) = det(K_S). Acceptance ratios for the chains are
Schur complements, maintained incrementally by :class:`CholeskyCache`.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular

from .measures import NEG_INF, MeasureOracle, SubsetState

SYMMETRY_TOL = 1e-10
EIG_TOL = 1e-8
JITTER = 1e-10


class KernelValidationError(ValueError):
    pass


def _check_symmetric(M, tol, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise KernelValidationError(f"{name} must be a square matrix")
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > tol:
        raise KernelValidationError(f"{name} asymmetric: max |M - M^T| = {asym:.3e}")
    return 0.5 * (M + M.T)


def validate_marginal_kernel(K):
    """Validate a DPP marginal kernel: symmetric with spectrum in [0, 1]."""
    K = _check_symmetric(K, SYMMETRY_TOL, "marginal kernel")
    if K.size:
        evals = np.linalg.eigvalsh(K)
        if evals[0] < -EIG_TOL:
            raise KernelValidationError(
                f"marginal kernel eigenvalue {evals[0]:.6g} below 0"
            )
        if evals[-1] > 1.0 + EIG_TOL:
            raise KernelValidationError(
                f"marginal kernel eigenvalue {evals[-1]:.6g} above 1"
            )
    return K


class LEnsemble(MeasureOracle):
    """Measure oracle with pi(S) = det(L_S) for a symmetric PSD matrix L."""

    def __init__(self, L):
        L = _check_symmetric(L, SYMMETRY_TOL, "L-ensemble kernel")
        if L.size:
            lo = float(np.linalg.eigvalsh(L)[0])
            if lo < -EIG_TOL:
                raise KernelValidationError(
                    f"L-ensemble eigenvalue {lo:.6g} below 0"
                )
        self.L = L
        self.n = L.shape[0]

    def log_weight(self, S):
        self._check(S)
        return dpp_log_weight(self.L, S)

    def make_cache(self, S: SubsetState) -> "CholeskyCache":
        """Fresh per-chain incremental factor for the current state."""
        return CholeskyCache(self.L, S.indices())


def dpp_log_weight(L, S: SubsetState) -> float:
    """log det(L_S); 0 for the empty set, -inf for a singular minor."""
    L = getattr(L, "L", L)
    idx = S.indices()
    if idx.size == 0:
        return 0.0
    sub = L[np.ix_(idx, idx)]
    try:
        chol = np.linalg.cholesky(sub)
    except np.linalg.LinAlgError:
        return NEG_INF
    diag = np.diag(chol)
    if np.any(diag <= 0.0):
        return NEG_INF
    return float(2.0 * np.sum(np.log(diag)))


def marginal_to_l(K) -> LEnsemble:
    """L = K(I-K)^{-1}. Fails if K has an eigenvalue at 1 (elementary direction)."""
    K = validate_marginal_kernel(K)
    evals, vecs = np.linalg.eigh(K)
    if evals.size and evals[-1] >= 1.0 - EIG_TOL:
        raise KernelValidationError(
            f"marginal kernel eigenvalue {evals[-1]:.6g} at 1: elementary "
            "direction; not representable as L-ensemble"
        )
    lam = np.clip(evals, 0.0, None)
    L = (vecs * (lam / (1.0 - lam))) @ vecs.T
    return LEnsemble(0.5 * (L + L.T))


def l_to_marginal(L) -> np.ndarray:
    """K = L(I+L)^{-1}; diagonal entries are the singleton inclusion probabilities."""
    L = getattr(L, "L", L)
    evals, vecs = np.linalg.eigh(L)
    lam = np.clip(evals, 0.0, None)
    K = (vecs * (lam / (1.0 + lam))) @ vecs.T
    return validate_marginal_kernel(0.5 * (K + K.T))


class CholeskyCache:
    """Incrementally maintained Cholesky factor of L_S for one chain.

    Keeps the active index order, the lower-triangular factor of L_S in that
    order, and the running log-determinant. Rebuilds from scratch every
    ``REBUILD_INTERVAL`` accepted moves or on a tiny pivot. A failed rebuild
    flags the cache; a flagged cache reports -inf weight and zero ratios.
    """

    REBUILD_INTERVAL = 512
    PIVOT_TOL = 1e-12

    def __init__(self, L, indices=()):
        self.L = np.asarray(getattr(L, "L", L), dtype=float)
        self.order = [int(i) for i in indices]
        self.flagged = False
        self._accepted = 0
        self._pending_add = None
        self._rebuild()

    @property
    def size(self):
        return len(self.order)

    def state(self) -> SubsetState:
        return SubsetState.from_indices(self.order, self.L.shape[0])

    def copy(self):
        new = object.__new__(CholeskyCache)
        new.L = self.L
        new.order = list(self.order)
        new.chol = self.chol.copy()
        new.log_det = self.log_det
        new.flagged = self.flagged
        new._accepted = self._accepted
        new._pending_add = None
        return new

    def _rebuild(self):
        self._accepted = 0
        self._pending_add = None
        k = len(self.order)
        if k == 0:
            self.chol = np.zeros((0, 0))
            self.log_det = 0.0
            self.flagged = False
            return
        sub = self.L[np.ix_(self.order, self.order)]
        try:
            self.chol = np.linalg.cholesky(sub)
        except np.linalg.LinAlgError:
            self.chol = np.zeros((0, 0))
            self.log_det = NEG_INF
            self.flagged = True
            return
        self.flagged = False
        self._refresh_log_det()

    def _refresh_log_det(self):
        d = np.diag(self.chol)
        if d.size and np.any(d <= 0.0):
            self.log_det = NEG_INF
            self.flagged = True
        else:
            self.log_det = float(2.0 * np.sum(np.log(d))) if d.size else 0.0

    def add_ratio(self, t) -> float:
        """det(L_{S+t}) / det(L_S): the Schur complement pivot for element t."""
        if self.flagged:
            return 0.0
        t = int(t)
        if t in self.order:
            raise ValueError(f"element {t} already active")
        k = self.size
        if k == 0:
            pivot = float(self.L[t, t])
            w = np.zeros(0)
        else:
            c = self.L[self.order, t]
            w = solve_triangular(self.chol, c, lower=True, check_finite=False)
            pivot = float(self.L[t, t] - w @ w)
        self._pending_add = (t, w, pivot)
        return pivot if pivot > 0.0 else 0.0

    def delete_ratio(self, s) -> float:
        """det(L_{S-s}) / det(L_S) = [(L_S)^{-1}]_pp via one triangular solve."""
        if self.flagged:
            return 0.0
        p = self.order.index(int(s))
        e = np.zeros(self.size)
        e[p] = 1.0
        x = solve_triangular(self.chol, e, lower=True, check_finite=False)
        return float(x @ x)

    def swap_ratio(self, s, t) -> float:
        """det(L_{S-s+t}) / det(L_S), composed as delete-then-add on a scratch copy."""
        if self.flagged:
            return 0.0
        r_del = self.delete_ratio(s)
        scratch = self.copy()
        scratch.apply_delete(s)
        if scratch.flagged:
            return 0.0
        return r_del * scratch.add_ratio(t)

    def apply_add(self, t):
        t = int(t)
        if self._pending_add is not None and self._pending_add[0] == t:
            _, w, pivot = self._pending_add
        else:
            self.add_ratio(t)
            _, w, pivot = self._pending_add
        self._pending_add = None
        if pivot < self.PIVOT_TOL:
            self.order.append(t)
            self._rebuild()
            return
        k = self.size
        new = np.zeros((k + 1, k + 1))
        new[:k, :k] = self.chol
        new[k, :k] = w
        new[k, k] = math.sqrt(pivot)
        self.chol = new
        self.order.append(t)
        self._bump()

    def apply_delete(self, s):
        p = self.order.index(int(s))
        k = self.size
        self.order.pop(p)
        self._pending_add = None
        if p == k - 1:
            self.chol = np.ascontiguousarray(self.chol[:p, :p])
            self._bump()
            return
        # Rows below p keep columns < p; column p folds into the trailing
        # block by re-triangularizing [e | F] with an LQ step.
        e = self.chol[p + 1:, p]
        F = self.chol[p + 1:, p + 1:]
        A = np.column_stack([e, F])
        R = np.linalg.qr(A.T, mode="r")
        signs = np.sign(np.diag(R))
        signs[signs == 0.0] = 1.0
        T = (R * signs[:, None]).T
        m = k - 1
        new = np.zeros((m, m))
        new[:p, :p] = self.chol[:p, :p]
        new[p:, :p] = self.chol[p + 1:, :p]
        new[p:, p:] = T
        self.chol = new
        self._bump()

    def apply_swap(self, s, t):
        self.apply_delete(s)
        if not self.flagged:
            self.apply_add(t)

    def _bump(self):
        self._accepted += 1
        if self._accepted >= self.REBUILD_INTERVAL:
            self._rebuild()
        else:
            self._refresh_log_det()
            if self.flagged:
                self._rebuild()


class SpectralSampler:
    """Exact i.i.d. DPP sampler from the eigendecomposition of L."""

    def __init__(self, L):
        L = np.asarray(getattr(L, "L", L), dtype=float)
        evals, vecs = np.linalg.eigh(L)
        lam = np.clip(evals, 0.0, None)
        self.n = L.shape[0]
        self.inclusion = lam / (1.0 + lam)
        self.vecs = vecs

    def sample(self, rng) -> SubsetState:
        chosen = rng.random(self.n) < self.inclusion
        V = self.vecs[:, chosen].copy()
        picked = []
        while V.shape[1] > 0:
            p = np.sum(V * V, axis=1)
            total = p.sum()
            if total <= 0.0:
                raise ArithmeticError("spectral sampler: degenerate projection")
            i = int(np.searchsorted(np.cumsum(p / total), rng.random()))
            i = min(i, self.n - 1)
            picked.append(i)
            if V.shape[1] == 1:
                break
            # Eliminate coordinate i, drop one column, re-orthonormalize.
            j = int(np.argmax(np.abs(V[i, :])))
            col = V[:, j] / V[i, j]
            V = V - np.outer(col, V[i, :])
            V = np.delete(V, j, axis=1)
            V, _ = np.linalg.qr(V)
        return SubsetState.from_indices(picked, self.n)


def spectral_sample(L, rng) -> SubsetState:
    """Draw one exact sample from pi(S) = det(L_S) / det(L + I)."""
    return SpectralSampler(L).sample(rng)


def rbf_kernel(points, bandwidth) -> LEnsemble:
    """Gaussian similarity kernel L_ij = exp(-||x_i - x_j||^2 / (2 bw^2)) + jitter."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be an M x d matrix")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    sq = np.sum(points * points, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.maximum(d2, 0.0, out=d2)
    L = np.exp(-d2 / (2.0 * bandwidth**2))
    L[np.diag_indices_from(L)] += JITTER
    return LEnsemble(0.5 * (L + L.T))


def spectrum_step_kernel(n, k, hi, lo, rng) -> LEnsemble:
    """Kernel with a two-level spectrum: k eigenvalues at hi, n-k at lo."""
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside [0, {n}]")
    if hi <= 0 or lo <= 0:
        raise ValueError("hi and lo must be positive")
    G = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    Q = Q * np.sign(np.diag(R))
    lam = np.concatenate([np.full(k, float(hi)), np.full(n - k, float(lo))])
    L = (Q * lam) @ Q.T
    return LEnsemble(0.5 * (L + L.T))
