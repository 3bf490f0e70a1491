"""Constrained CP decomposition by alternating optimization with inner
ADMM blocks.

Each factor matrix is updated by a short ADMM run on its nonnegative
(and, for abundances, l1-regularized) least-squares subproblem, with the
normal-equation Cholesky factor cached across the inner iterations.
The abundance sum-to-one constraint comes in two flavors:

* ``embedded``: the tensor gains an extra lateral slice and the
  endmember matrix an extra row, chosen so that fitting the augmented
  data forces every abundance row to sum to one.  The extra row equals
  ``delta / psi[anchor, :]`` and the anchor entries of the extra slice
  are pinned to ``delta`` (the mean of the data); both are refreshed
  from the current factors at every outer iteration.
* ``naive``: each abundance row is projected onto the unit simplex
  right after its ADMM update.

The order-2 case (``K == 1``) degenerates to sparse NMF with the same
augmentation: the third-mode factor is pinned to ones, its update and
the norm-absorption step are skipped, and the extra endmember row
reduces to a constant ``delta``.  :func:`solve_nmf` is exactly this
path, so matrix and single-slice tensor solves agree bit for bit.
"""

from __future__ import annotations

import dataclasses
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from threadpoolctl import threadpool_limits

from .tensor import frobenius, reconstruct

__all__ = [
    "NumericalError",
    "SolverConfig",
    "FactorModel",
    "DualState",
    "ConvergenceTrace",
    "AugmentedProblem",
    "MultiStartResult",
    "rho_rule",
    "project_rows_to_simplex",
    "init_factors",
    "apply_asc_augmentation",
    "admm_update_abundances",
    "admm_update_endmembers",
    "admm_update_scalings",
    "solve_cpd",
    "solve_nmf",
    "multi_start",
]

_ASC_MODES = ("embedded", "naive", "none")


class NumericalError(RuntimeError):
    """Raised when input data or intermediate state is not finite."""


@dataclass
class SolverConfig:
    """Knobs for :func:`solve_cpd` / :func:`solve_nmf`.

    ``asc_anchor`` selects the frontal slice used to pin the sum-to-one
    identity in embedded mode (default: the last slice).  Pick a slice
    whose third-mode loadings stay well away from zero; the inverse of
    ``psi[anchor, :]`` enters the augmented endmember row, floored at
    ``eps_guard * max(psi)`` so that a vanishing loading cannot blow up
    the augmented data.  ``asc_strength`` scales the augmentation
    constant ``delta`` relative to its default, the mean of the data;
    larger values trade reconstruction accuracy on sum-to-one-violating
    pixels for faster and tighter constraint satisfaction.
    """

    rank: int
    asc_mode: str = "embedded"
    sparsity: float = 0.0
    outer_iters: int = 100
    inner_iters: int = 5
    inner_tol: float = 1e-8
    outer_tol: float = 1e-6
    outer_patience: int = 5
    rmse_floor: float = 0.0
    seed: int = 0
    eps_guard: float = 1e-2
    asc_anchor: int | None = None
    asc_strength: float = 1.0
    single_thread: bool = False

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.asc_mode not in _ASC_MODES:
            raise ValueError(f"asc_mode must be one of {_ASC_MODES}, got {self.asc_mode!r}")
        if self.sparsity < 0:
            raise ValueError(f"sparsity weight must be >= 0, got {self.sparsity}")
        if self.outer_iters < 1 or self.inner_iters < 1:
            raise ValueError("iteration budgets must be >= 1")
        if self.asc_strength <= 0:
            raise ValueError(f"asc_strength must be positive, got {self.asc_strength}")

    @property
    def asc(self) -> bool:
        return self.asc_mode != "none"


@dataclass
class FactorModel:
    """Rank-R factors: abundances ``a`` (I x R), endmembers ``b``
    (J x R, unit l2 columns for K > 1) and third-mode scalings ``psi``
    (K x R, carrying the absorbed column norms)."""

    a: np.ndarray
    b: np.ndarray
    psi: np.ndarray

    @property
    def rank(self) -> int:
        return self.a.shape[1]

    def reconstruct(self) -> np.ndarray:
        return reconstruct(self.a, self.b, self.psi)


@dataclass
class DualState:
    """ADMM dual variables, one per factor, zero-initialized."""

    u_a: np.ndarray
    u_b: np.ndarray
    u_psi: np.ndarray

    @classmethod
    def zeros(cls, n_pixels: int, n_bands: int, n_slices: int, rank: int) -> "DualState":
        return cls(
            u_a=np.zeros((n_pixels, rank)),
            u_b=np.zeros((n_bands, rank)),
            u_psi=np.zeros((n_slices, rank)),
        )


@dataclass
class ConvergenceTrace:
    """Per-outer-iteration diagnostics.

    Entry 0 describes the random initialization, so ``rmse[-1] <=
    rmse[0]`` is the basic sanity of any converged run.  The timing
    fields feed the scaling benchmark: ``update_seconds`` counts only
    time spent inside factor-update blocks and ``inner_iterations`` the
    total ADMM iterations they ran.
    """

    rmse: list[float] = field(default_factory=list)
    row_sum_dev: list[float] = field(default_factory=list)
    elapsed_s: list[float] = field(default_factory=list)
    update_seconds: float = 0.0
    inner_iterations: int = 0

    @property
    def final_rmse(self) -> float:
        return self.rmse[-1]

    @property
    def iterations(self) -> int:
        return len(self.rmse) - 1

    def rows(self):
        for it, (r, d, e) in enumerate(zip(self.rmse, self.row_sum_dev, self.elapsed_s)):
            yield it, r, d, e

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,rmse,row_sum_dev,elapsed_s\n")
            for it, r, d, e in self.rows():
                fh.write(f"{it},{r!r},{d!r},{e!r}\n")


def rho_rule(w: np.ndarray) -> float:
    """ADMM step size ``trace(w.T w) / R`` for a design matrix ``w``."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    r = w.shape[1]
    if r == 0:
        raise ValueError("design matrix has no columns")
    return float(np.sum(w * w) / r)


def project_rows_to_simplex(a: np.ndarray) -> np.ndarray:
    """Euclidean projection of every row onto the unit simplex
    (sort-and-threshold)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[1]
    s = -np.sort(-a, axis=1)
    css = np.cumsum(s, axis=1) - 1.0
    steps = np.arange(1, n + 1)
    active = s - css / steps > 0
    # prefix property: active is True up to the pivot index
    pivot = n - 1 - np.argmax(active[:, ::-1], axis=1)
    tau = css[np.arange(a.shape[0]), pivot] / (pivot + 1)
    return np.maximum(a - tau[:, None], 0.0)


def init_factors(dims, rank: int, seed: int) -> FactorModel:
    """Draw factors i.i.d. uniform on (0, 1] from a PCG64 generator and
    normalize the endmember columns."""
    i, j, k = dims
    rng = np.random.default_rng(seed)
    a = 1.0 - rng.random((i, rank))
    b = 1.0 - rng.random((j, rank))
    psi = 1.0 - rng.random((k, rank))
    b /= np.linalg.norm(b, axis=0)
    return FactorModel(a=a, b=b, psi=psi)


class AugmentedProblem:
    """Sum-to-one augmentation state: the widened tensor buffer and the
    extra endmember row.

    ``data`` holds the physical tensor in its first J lateral positions
    and the synthetic slice in position J; :meth:`refresh` rewrites the
    synthetic slice and ``b_aug`` from the current factors.
    """

    def __init__(self, t: np.ndarray, delta: float, eps_guard: float, anchor: int):
        i, j, k = t.shape
        if not 0 <= anchor < k:
            raise ValueError(f"anchor slice {anchor} out of range [0, {k})")
        if delta <= 0:
            raise ValueError(f"delta must be positive, got {delta}")
        self.delta = float(delta)
        self.eps_guard = float(eps_guard)
        self.anchor = int(anchor)
        self.n_bands = j
        self.data = np.empty((i, j + 1, k))
        self.data[:, :j, :] = t
        self.b_aug = np.full(0, np.nan)

    def refresh(self, a: np.ndarray, psi: np.ndarray) -> None:
        floor = self.eps_guard * psi.max() if psi.max() > 0 else self.eps_guard
        self.b_aug = self.delta / np.maximum(psi[self.anchor, :], floor)
        slab = a @ (self.b_aug * psi).T
        slab[:, self.anchor] = self.delta
        self.data[:, self.n_bands, :] = slab


def apply_asc_augmentation(
    t: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    psi: np.ndarray,
    delta: float,
    eps_guard: float = 1e-8,
    anchor: int | None = None,
) -> AugmentedProblem:
    """Build the augmented tensor and endmember row for the current
    factors; ``b`` is accepted only to pin the expected band count."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={t.ndim}")
    if b.shape[0] not in (t.shape[1], t.shape[1] + 1):
        raise ValueError(f"endmember rows {b.shape[0]} do not match band count {t.shape[1]}")
    aug = AugmentedProblem(t, delta, eps_guard, t.shape[2] - 1 if anchor is None else anchor)
    aug.refresh(np.asarray(a, dtype=float), np.asarray(psi, dtype=float))
    return aug


def _admm_block(gram, rhs, x, u, rho, l1, iters, tol):
    """Shared inner loop: cached Cholesky solve, thresholded projection,
    dual ascent.  Returns the updated primal/dual and iteration count."""
    r = gram.shape[0]
    chol = cho_factor(gram + rho * np.eye(r), lower=True)
    offset = l1 / rho
    done = 0
    for _ in range(iters):
        xbar_t = cho_solve(chol, (rhs + rho * (x + u)).T).T
        x_new = np.maximum(0.0, xbar_t - u - offset)
        primal = np.linalg.norm(x_new - xbar_t)
        shift = np.linalg.norm(x_new - x)
        u = u + x_new - xbar_t
        x = x_new
        done += 1
        scale = tol * max(np.linalg.norm(x), 1e-30)
        if tol > 0 and primal <= scale and shift <= scale:
            break
    return x, u, done


def _check_admm_args(unfolding, w, x, u, rho):
    unfolding = np.asarray(unfolding, dtype=float)
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (np.isfinite(unfolding).all() and np.isfinite(w).all() and np.isfinite(x).all()):
        raise NumericalError("ADMM inputs contain non-finite values")
    if w.shape[0] != unfolding.shape[0]:
        raise ValueError(f"design rows {w.shape[0]} != unfolding rows {unfolding.shape[0]}")
    if x.shape != (unfolding.shape[1], w.shape[1]) or u.shape != x.shape:
        raise ValueError("factor/dual shapes do not match the unfolding")
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    return unfolding, w, x, u


def admm_update_abundances(t1, w, a, u, alpha, rho, iters, tol=0.0):
    """One ADMM block for the abundance subproblem
    ``min 0.5 ||t1 - w a.T||_F^2 + alpha ||a||_1  s.t. a >= 0``.

    ``t1`` is the mode-1 unfolding of the (augmented) tensor and ``w``
    the matching Khatri-Rao design matrix.
    """
    t1, w, a, u = _check_admm_args(t1, w, a, u, rho)
    gram = w.T @ w
    rhs = (w.T @ t1).T
    a, u, _ = _admm_block(gram, rhs, a, u, rho, alpha, iters, tol)
    return a, u


def admm_update_endmembers(t2, w, b, u, rho, iters, tol=0.0):
    """ADMM block for the endmember subproblem (nonnegative only)."""
    t2, w, b, u = _check_admm_args(t2, w, b, u, rho)
    gram = w.T @ w
    rhs = (w.T @ t2).T
    b, u, _ = _admm_block(gram, rhs, b, u, rho, 0.0, iters, tol)
    return b, u


def admm_update_scalings(t3, w, psi, u, rho, iters, tol=0.0):
    """ADMM block for the third-mode scaling subproblem."""
    t3, w, psi, u = _check_admm_args(t3, w, psi, u, rho)
    gram = w.T @ w
    rhs = (w.T @ t3).T
    psi, u, _ = _admm_block(gram, rhs, psi, u, rho, 0.0, iters, tol)
    return psi, u


def _mttkrp(t, f1, f2, mode):
    # matricized tensor times Khatri-Rao product, without forming
    # either; looping over the small third mode keeps every product a
    # plain matmul
    i_dim, j_dim, k_dim = t.shape
    rank = f1.shape[1]
    if mode == 0:  # sum_jk t[i,j,k] b[j,r] psi[k,r]
        out = np.zeros((i_dim, rank))
        for k in range(k_dim):
            out += (t[:, :, k] @ f1) * f2[k, :]
        return out
    if mode == 1:  # sum_ik t[i,j,k] a[i,r] psi[k,r]
        out = np.zeros((j_dim, rank))
        for k in range(k_dim):
            out += t[:, :, k].T @ (f1 * f2[k, :])
        return out
    # sum_ij t[i,j,k] a[i,r] b[j,r]
    out = np.empty((k_dim, rank))
    for k in range(k_dim):
        out[k, :] = ((t[:, :, k] @ f2) * f1).sum(axis=0)
    return out


def _solve_cpd_impl(t: np.ndarray, cfg: SolverConfig):
    i_dim, j_dim, k_dim = t.shape
    rank = cfg.rank
    order2 = k_dim == 1

    init = init_factors(t.shape, rank, cfg.seed)
    a, b, psi = init.a, init.b, init.psi
    if order2:
        # NMF path: third-mode loadings pinned, norms stay in b
        psi = np.ones((1, rank))

    embedded = cfg.asc_mode == "embedded"
    anchor = cfg.asc_anchor if cfg.asc_anchor is not None else k_dim - 1
    if embedded:
        delta = cfg.asc_strength * float(t.mean())
        if delta <= 0:
            raise ValueError("embedded ASC needs strictly positive mean data")
        aug = AugmentedProblem(t, delta, cfg.eps_guard, anchor)
        work = aug.data
        bt = np.vstack([b, np.zeros((1, rank))])
    else:
        aug = None
        work = t
        bt = b
    n_rows_b = bt.shape[0]
    duals = DualState.zeros(i_dim, n_rows_b, k_dim, rank)

    norm_t = frobenius(t)
    trace = ConvergenceTrace()
    start = time.perf_counter()

    def record():
        resid = t - reconstruct(a, bt[:j_dim], psi)
        trace.rmse.append((frobenius(resid) / norm_t) ** 2)
        trace.row_sum_dev.append(float(np.mean(np.abs(a.sum(axis=1) - 1.0))))
        trace.elapsed_s.append(time.perf_counter() - start)

    record()

    for _ in range(cfg.outer_iters):
        if embedded:
            aug.refresh(a, psi)
            bt[-1, :] = aug.b_aug

        tic = time.perf_counter()

        gram = (bt.T @ bt) * (psi.T @ psi)
        rho = max(np.trace(gram) / rank, np.finfo(float).tiny)
        rhs = _mttkrp(work, bt, psi, mode=0)
        a, duals.u_a, n = _admm_block(
            gram, rhs, a, duals.u_a, rho, cfg.sparsity, cfg.inner_iters, cfg.inner_tol
        )
        trace.inner_iterations += n
        if cfg.asc_mode == "naive":
            a = project_rows_to_simplex(a)

        gram = (a.T @ a) * (psi.T @ psi)
        rho = max(np.trace(gram) / rank, np.finfo(float).tiny)
        rhs = _mttkrp(work, a, psi, mode=1)
        bt, duals.u_b, n = _admm_block(
            gram, rhs, bt, duals.u_b, rho, 0.0, cfg.inner_iters, cfg.inner_tol
        )
        trace.inner_iterations += n

        if not order2:
            gram = (a.T @ a) * (bt.T @ bt)
            rho = max(np.trace(gram) / rank, np.finfo(float).tiny)
            rhs = _mttkrp(work, a, bt, mode=2)
            psi, duals.u_psi, n = _admm_block(
                gram, rhs, psi, duals.u_psi, rho, 0.0, cfg.inner_iters, cfg.inner_tol
            )
            trace.inner_iterations += n

            # move endmember column norms into the scalings; the
            # augmented row is rebuilt next iteration, never normalized
            nb = np.linalg.norm(bt[:j_dim], axis=0)
            pos = nb > 0
            psi[:, pos] *= nb[pos]
            bt[:j_dim, pos] /= nb[pos]

        trace.update_seconds += time.perf_counter() - tic
        record()

        if cfg.rmse_floor > 0 and trace.rmse[-1] <= cfg.rmse_floor:
            break
        lag = cfg.outer_patience
        if len(trace.rmse) > lag + 1:
            prev, cur = trace.rmse[-1 - lag], trace.rmse[-1]
            if abs(prev - cur) <= cfg.outer_tol * max(prev, 1e-300):
                break

    model = FactorModel(a=a, b=bt[:j_dim].copy(), psi=psi)
    return model, trace


def solve_cpd(t: np.ndarray, cfg: SolverConfig):
    """Decompose a third-order tensor under nonnegativity, optional
    sparsity and the configured sum-to-one mode.

    Returns ``(FactorModel, ConvergenceTrace)``.  The trace reports the
    relative squared reconstruction error of the physical tensor after
    every outer iteration (entry 0 is the random initialization).
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={t.ndim}")
    if not np.isfinite(t).all():
        raise NumericalError("tensor contains non-finite values")
    if not t.any():
        raise ValueError("tensor is identically zero")
    if cfg.rank > min(t.shape[0], t.shape[1]):
        warnings.warn(
            f"rank {cfg.rank} exceeds min(pixels, bands) = {min(t.shape[:2])}; "
            "uniqueness of the decomposition is not guaranteed",
            stacklevel=2,
        )
    if cfg.single_thread:
        with threadpool_limits(limits=1):
            return _solve_cpd_impl(t, cfg)
    return _solve_cpd_impl(t, cfg)


def solve_nmf(m: np.ndarray, cfg: SolverConfig):
    """Sparse NMF with the same constraints, as the single-slice tensor
    solve.  Returns ``(a, b, trace)``; ``b`` keeps its natural scale."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    model, trace = solve_cpd(m[:, :, None], cfg)
    return model.a, model.b, trace


@dataclass
class MultiStartResult:
    model: FactorModel
    trace: ConvergenceTrace
    rmses: list[float]
    seeds: list[int]
    best_seed: int


def multi_start(t: np.ndarray, cfg: SolverConfig, n_inits: int, threads: int = 1):
    """Run ``n_inits`` solves from seeds ``cfg.seed .. cfg.seed+n-1``
    and keep the lowest final RMSE."""
    if n_inits < 1:
        raise ValueError(f"n_inits must be >= 1, got {n_inits}")
    seeds = [cfg.seed + k for k in range(n_inits)]
    configs = [dataclasses.replace(cfg, seed=s) for s in seeds]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: solve_cpd(t, c), configs))
    else:
        results = [solve_cpd(t, c) for c in configs]
    rmses = [trace.final_rmse for _, trace in results]
    best = int(np.argmin(rmses))
    model, trace = results[best]
    return MultiStartResult(
        model=model, trace=trace, rmses=rmses, seeds=seeds, best_seed=seeds[best]
    )
