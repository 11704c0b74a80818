"""Multiplicative splitting gamma = gamma2 * gamma1 in the affine block group.

The group consists of n x n matrices ``[[A, b], [0, 1]]`` with ``A``
invertible.  Splitting iterates ``eta = log(gamma2^-1 gamma gamma1^-1)``,
``gamma1 <- exp(T1 eta) gamma1`` and ``gamma2 <- gamma2 exp(T2 eta)``, where
``T1, T2`` are the additive splitting operators of the pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .compacts import DiscretizedCompact, GoodPairContext
from .cousin import AdditiveSplitter


class CartanError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# batched matrix functions (arrays of shape (N, n, n))


def opnorm_inf(M: np.ndarray) -> np.ndarray:
    """Max row-sum norm of each matrix (the norm induced by max-modulus)."""
    return np.abs(M).sum(axis=-1).max(axis=-1)


def batch_inv(M: np.ndarray) -> np.ndarray:
    return np.linalg.inv(M)


def batch_expm(X: np.ndarray) -> np.ndarray:
    """exp of each matrix by scaling, an order-18 Taylor sum and squaring."""
    X = np.asarray(X, dtype=complex)
    nrm = float(opnorm_inf(X).max()) if X.size else 0.0
    s = max(0, int(math.ceil(math.log2(nrm / 0.25)))) if nrm > 0.25 else 0
    Y = X / (2 ** s)
    eye = np.broadcast_to(np.eye(X.shape[-1], dtype=complex), X.shape)
    out = eye.copy()
    term = eye.copy()
    for k in range(1, 19):
        term = term @ Y / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def _log_series(R: np.ndarray, terms: int = 60) -> np.ndarray:
    # log(I + R) for ||R|| < 1; the caller keeps ||R|| <= 0.3
    out = np.zeros_like(R)
    P = R.copy()
    for k in range(1, terms + 1):
        out = out + ((-1) ** (k + 1) / k) * P
        P = P @ R
        if float(np.abs(P).max(initial=0.0)) < 1e-18:
            break
    return out


def _sqrtm_db(M: np.ndarray, iters: int = 60) -> np.ndarray:
    """Denman-Beavers principal square root of each matrix."""
    Y = M.copy()
    Z = np.broadcast_to(np.eye(M.shape[-1], dtype=complex), M.shape).copy()
    for _ in range(iters):
        Yi = np.linalg.inv(Y)
        Zi = np.linalg.inv(Z)
        Y, Z = 0.5 * (Y + Zi), 0.5 * (Z + Yi)
        if float(np.abs(Y @ Y - M).max()) <= 1e-14 * max(1.0, float(np.abs(M).max())):
            break
    return Y


def batch_logm(M: np.ndarray) -> np.ndarray:
    """Principal matrix log by inverse scaling and squaring."""
    M = np.asarray(M, dtype=complex)
    eye = np.eye(M.shape[-1], dtype=complex)
    k = 0
    Y = M
    while float(opnorm_inf(Y - eye).max(initial=0.0)) > 0.3:
        if k >= 40:
            raise CartanError("matrix logarithm did not converge (spectrum near the negative axis?)")
        Y = _sqrtm_db(Y)
        k += 1
    return (2 ** k) * _log_series(Y - eye)


def _fix_block(M: np.ndarray, last_one: bool = True) -> np.ndarray:
    M = M.copy()
    M[..., -1, :] = 0.0
    if last_one:
        M[..., -1, -1] = 1.0
    return M


# ---------------------------------------------------------------------------
# group-valued maps


@dataclass(frozen=True)
class AffineBlockMatrix:
    """``[[A, b], [0, 1]]`` with ``A`` of size (n-1) x (n-1)."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        b = np.atleast_1d(np.asarray(self.b, dtype=complex)).ravel()
        if A.shape[0] != A.shape[1] or b.shape[0] != A.shape[0]:
            raise ValueError("block shapes do not match")
        if abs(np.linalg.det(A)) == 0:
            raise ValueError("A block must be invertible")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.A.shape[0] + 1

    def matrix(self) -> np.ndarray:
        n = self.n
        M = np.zeros((n, n), dtype=complex)
        M[:-1, :-1] = self.A
        M[:-1, -1] = self.b
        M[-1, -1] = 1.0
        return M

    def condition(self) -> float:
        return float(np.linalg.cond(self.A))


@dataclass(frozen=True, eq=False)
class GroupMapSample:
    """A group-valued map: one block matrix per sample, shape (N, n, n)."""

    domain: DiscretizedCompact
    matrices: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrices, dtype=complex)
        if M.ndim != 3 or M.shape[1] != M.shape[2] or M.shape[0] != len(self.domain):
            raise ValueError("matrices must have shape (N, n, n)")
        M = _fix_block(M)
        object.__setattr__(self, "matrices", M)

    @classmethod
    def identity(cls, domain: DiscretizedCompact, n: int) -> "GroupMapSample":
        return cls(domain, np.broadcast_to(np.eye(n, dtype=complex), (len(domain), n, n)))

    @classmethod
    def from_function(cls, domain: DiscretizedCompact, func) -> "GroupMapSample":
        return cls(domain, np.asarray(func(domain.points), dtype=complex))

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    def inverse(self) -> "GroupMapSample":
        return GroupMapSample(self.domain, batch_inv(self.matrices))

    def restrict(self, sub: DiscretizedCompact) -> "GroupMapSample":
        idx = self.domain.locate(sub)
        if np.any(idx < 0):
            raise ValueError("restriction target is not a subset of the domain")
        return GroupMapSample(sub, self.matrices[idx])

    def max_condition(self) -> float:
        A = self.matrices[:, :-1, :-1]
        return float(np.linalg.cond(A).max()) if len(A) else 1.0

    def sup_norm(self) -> float:
        return float(opnorm_inf(self.matrices).max()) if len(self.matrices) else 0.0

    def distance_to_identity(self) -> float:
        eye = np.eye(self.n)
        return float(opnorm_inf(self.matrices - eye).max()) if len(self.matrices) else 0.0


@dataclass(frozen=True, eq=False)
class CartanSplit:
    gamma1: GroupMapSample
    gamma2: GroupMapSample
    residual: float
    iterations: int
    history: list = field(default_factory=list)
    homotopy_steps: int = 1


def _eta_components(eta: np.ndarray) -> np.ndarray:
    # Lie algebra elements have zero last row: keep the top (n-1) x n block
    N, n, _ = eta.shape
    return eta[:, :-1, :].reshape(N, (n - 1) * n)


def _from_components(c: np.ndarray, n: int) -> np.ndarray:
    N = c.shape[0]
    out = np.zeros((N, n, n), dtype=complex)
    out[:, :-1, :] = c.reshape(N, n - 1, n)
    return out


def _residual(g: np.ndarray, g1: np.ndarray, g2: np.ndarray) -> float:
    return float(opnorm_inf(g - g2 @ g1).max()) if len(g) else 0.0


def split_multiplicative(gamma: GroupMapSample, ctx: GoodPairContext, max_iters: int = 60,
                         tol: float | None = None, splitter: AdditiveSplitter | None = None,
                         warm: tuple | None = None) -> CartanSplit:
    """Factor ``gamma = gamma2 * gamma1`` on K12 with gamma_j on K_j.

    When ``gamma`` is far from the identity (``sup ||gamma - I|| >= 0.5``) the
    path ``exp(t log gamma)``, ``t: 0 -> 1``, is followed in steps, each
    warm-started from the previous factors.
    """
    g = gamma.matrices if len(gamma.domain) == len(ctx.k12) else gamma.restrict(ctx.k12).matrices
    n = g.shape[1]
    tol = 1e-8 * (1.0 + float(opnorm_inf(g).max(initial=0.0))) if tol is None else tol
    splitter = AdditiveSplitter(ctx) if splitter is None else splitter
    i1 = ctx.k1.locate(ctx.k12)
    i2 = ctx.k2.locate(ctx.k12)
    eye = np.eye(n, dtype=complex)
    if warm is None:
        g1 = np.broadcast_to(eye, (len(ctx.k1), n, n)).copy()
        g2 = np.broadcast_to(eye, (len(ctx.k2), n, n)).copy()
    else:
        g1, g2 = warm[0].matrices.copy(), warm[1].matrices.copy()
    dist = float(opnorm_inf(g - eye).max(initial=0.0))
    if dist >= 0.5 and warm is None:
        L = _fix_block(batch_logm(g), last_one=False)
        steps = int(math.ceil(float(opnorm_inf(L).max()) / 0.3))
        history = []
        total = 0
        for k in range(1, steps + 1):
            gt = batch_expm(L * (k / steps)) if k < steps else g
            res = _iterate(_fix_block(gt), g1, g2, i1, i2, splitter, n, max_iters,
                           tol if k == steps else max(tol, 1e-6))
            g1, g2 = res[0], res[1]
            history.extend(res[2])
            total += res[3]
        return CartanSplit(GroupMapSample(ctx.k1, g1), GroupMapSample(ctx.k2, g2),
                           _residual(g, g1[i1], g2[i2]), total, history, steps)
    g1, g2, history, its = _iterate(g, g1, g2, i1, i2, splitter, n, max_iters, tol)
    return CartanSplit(GroupMapSample(ctx.k1, g1), GroupMapSample(ctx.k2, g2),
                       _residual(g, g1[i1], g2[i2]), its, history, 1)


def _iterate(g, g1, g2, i1, i2, splitter, n, max_iters, tol):
    history = []
    for it in range(max_iters + 1):
        r = batch_inv(g2[i2]) @ g @ batch_inv(g1[i1])
        res = _residual(g, g1[i1], g2[i2])
        history.append(res)
        if res <= tol:
            return g1, g2, history, it
        if it == max_iters:
            break
        dist = float(opnorm_inf(r - np.eye(n)).max())
        if dist >= 0.9:
            raise CartanError(f"iteration left the contraction basin (||r - I|| = {dist:.3g})")
        eta = _fix_block(batch_logm(_fix_block(r)), last_one=False)
        t1, t2, *_ = splitter.apply(_eta_components(eta))
        g1 = _fix_block(batch_expm(_from_components(t1, n)) @ g1)
        g2 = _fix_block(g2 @ batch_expm(_from_components(t2, n)))
    raise CartanError(f"no convergence in {max_iters} iterations (residual {history[-1]:.3g})")
