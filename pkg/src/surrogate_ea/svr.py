"""Epsilon-insensitive support vector regression trained by SMO.

The dual is solved in the stacked ``2l`` form (alpha for the upper tube,
alpha* for the lower one) with second-order working-set selection. Targets
are min-max scaled to [0, 1] before training and the transform is kept on
the model so predictions come back in objective units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, TextIO

import numba
import numpy as np

from .kernels import KernelSpec, cross_gram, gram, median_heuristic_variance

_TAU = 1e-12


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (KKT gap {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SvrConfig:
    C: float = 100.0
    epsilon: float = 1e-3
    kernel: Optional[KernelSpec] = None  # None: gaussian, median-distance variance
    tol: float = 1e-3
    max_iter: int = 100_000
    target_transform: str = "minmax"  # or "log-minmax": log(y - min + shift) first

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be > 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.target_transform not in ("minmax", "log-minmax"):
            raise ValueError(f"unknown target transform {self.target_transform!r}")

    def kernel_for(self, X) -> KernelSpec:
        if self.kernel is not None:
            return self.kernel
        return KernelSpec.gaussian(median_heuristic_variance(X))


@dataclass(frozen=True)
class SurrogateModel:
    kernel: KernelSpec
    support: np.ndarray
    coef: np.ndarray  # alpha - alpha*, one per support point
    bias: float
    y_offset: float
    y_scale: float
    epsilon: float
    C: float
    iterations: int = 0
    kkt_gap: float = 0.0
    max_residual: float = 0.0
    dual_objective: float = 0.0
    log_shift: Optional[float] = None  # set when targets were log-transformed
    log_base: float = 0.0
    train_X: np.ndarray = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.support.shape[1]

    def decision(self, X) -> np.ndarray:
        """Predictions in the normalised target space."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dimension:
            raise ValueError(f"expected {self.dimension} features, got {X.shape[1]}")
        if self.coef.size == 0:
            return np.full(X.shape[0], self.bias)
        return cross_gram(self.kernel, X, self.support) @ self.coef + self.bias

    def normalize(self, y):
        y = np.asarray(y, dtype=float)
        if self.log_shift is not None:
            y = np.log(np.maximum(y - self.log_base + self.log_shift, 1e-300))
        return (y - self.y_offset) / self.y_scale

    def denormalize(self, z):
        u = np.asarray(z, dtype=float) * self.y_scale + self.y_offset
        if self.log_shift is not None:
            u = np.exp(np.minimum(u, 700.0)) - self.log_shift + self.log_base
        return u

    def predict_many(self, X) -> np.ndarray:
        return self.denormalize(self.decision(X))

    def dump(self, fh: TextIO) -> None:
        """Write the plain-text model dump (format documented in the README)."""
        fh.write("svr-model v1\n")
        fh.write(f"kernel {self.kernel.describe()}\n")
        fh.write(f"transform offset={self.y_offset!r} scale={self.y_scale!r}"
                 + ("" if self.log_shift is None else
                    f" log_shift={self.log_shift!r} log_base={self.log_base!r}") + "\n")
        fh.write(f"bias {self.bias!r}\n")
        fh.write(f"epsilon {self.epsilon!r} C {self.C!r}\n")
        fh.write(f"support {self.support.shape[0]} {self.dimension}\n")
        for c, s in zip(self.coef, self.support):
            fh.write(" ".join([repr(float(c))] + [repr(float(v)) for v in s]) + "\n")


def load_model(fh: TextIO) -> SurrogateModel:
    lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "svr-model v1":
        raise ValueError("not an svr-model v1 dump")
    kernel = KernelSpec.parse(lines[1].split(" ", 1)[1])
    tr = dict(p.split("=") for p in lines[2].split()[1:])
    bias = float(lines[3].split()[1])
    eps_c = lines[4].split()
    rows, dim = (int(v) for v in lines[5].split()[1:])
    data = np.array([[float(v) for v in ln.split()] for ln in lines[6:6 + rows]]).reshape(rows, dim + 1)
    return SurrogateModel(kernel, data[:, 1:], data[:, 0], bias, float(tr["offset"]),
                          float(tr["scale"]), float(eps_c[1]), float(eps_c[3]),
                          log_shift=float(tr["log_shift"]) if "log_shift" in tr else None,
                          log_base=float(tr.get("log_base", 0.0)))


@numba.njit(cache=True)
def _smo(K, z, eps, C, tol, max_iter):
    l = z.shape[0]
    n2 = 2 * l
    beta = np.zeros(n2)
    y = np.empty(n2)
    G = np.empty(n2)
    for t in range(l):
        y[t] = 1.0
        y[t + l] = -1.0
        G[t] = eps - z[t]
        G[t + l] = eps + z[t]
    it = 0
    gap = np.inf
    while it < max_iter:
        gmax = -np.inf
        i = -1
        for t in range(n2):
            if (y[t] > 0 and beta[t] < C) or (y[t] < 0 and beta[t] > 0):
                v = -y[t] * G[t]
                if v > gmax:
                    gmax = v
                    i = t
        gmin = np.inf
        j = -1
        best = np.inf
        if i >= 0:
            ii = i % l
            for t in range(n2):
                if (y[t] > 0 and beta[t] > 0) or (y[t] < 0 and beta[t] < C):
                    v = -y[t] * G[t]
                    if v < gmin:
                        gmin = v
                    b = gmax - v
                    if b > 0:
                        tt = t % l
                        a = K[ii, ii] + K[tt, tt] - 2.0 * K[ii, tt]
                        if a <= 0:
                            a = _TAU
                        obj = -(b * b) / a
                        if obj <= best:
                            best = obj
                            j = t
        gap = gmax - gmin
        if i < 0 or j < 0 or gap < tol:
            break
        ii = i % l
        jj = j % l
        Qii = K[ii, ii]
        Qjj = K[jj, jj]
        Qij = y[i] * y[j] * K[ii, jj]
        old_i = beta[i]
        old_j = beta[j]
        if y[i] != y[j]:
            quad = Qii + Qjj + 2.0 * Qij
            if quad <= 0:
                quad = _TAU
            delta = (-G[i] - G[j]) / quad
            diff = beta[i] - beta[j]
            beta[i] += delta
            beta[j] += delta
            if diff > 0:
                if beta[j] < 0:
                    beta[j] = 0.0
                    beta[i] = diff
            else:
                if beta[i] < 0:
                    beta[i] = 0.0
                    beta[j] = -diff
            if diff > 0:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = C - diff
            else:
                if beta[j] > C:
                    beta[j] = C
                    beta[i] = C + diff
        else:
            quad = Qii + Qjj - 2.0 * Qij
            if quad <= 0:
                quad = _TAU
            delta = (G[i] - G[j]) / quad
            s = beta[i] + beta[j]
            beta[i] -= delta
            beta[j] += delta
            if s > C:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = s - C
            else:
                if beta[j] < 0:
                    beta[j] = 0.0
                    beta[i] = s
            if s > C:
                if beta[j] > C:
                    beta[j] = C
                    beta[i] = s - C
            else:
                if beta[i] < 0:
                    beta[i] = 0.0
                    beta[j] = s
        di = beta[i] - old_i
        dj = beta[j] - old_j
        for t in range(n2):
            tt = t % l
            G[t] += y[t] * (y[i] * K[tt, ii] * di + y[j] * K[tt, jj] * dj)
        it += 1
    # bias from free variables, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    nfree = 0
    sfree = 0.0
    for t in range(n2):
        yg = y[t] * G[t]
        if beta[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif beta[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            sfree += yg
    if nfree > 0:
        rho = sfree / nfree
    else:
        rho = 0.5 * (ub + lb)
    return beta, rho, it, gap


def dual_objective(K, z, eps, gamma) -> float:
    """Minimisation-form dual value for coefficients gamma = alpha - alpha*."""
    gamma = np.asarray(gamma, dtype=float)
    return float(0.5 * gamma @ K @ gamma + eps * np.abs(gamma).sum() - z @ gamma)


def train_svr(X, y, cfg: SvrConfig = SvrConfig()) -> SurrogateModel:
    """Fit an epsilon-SVR on min-max normalised targets.

    Raises ConvergenceError when the KKT gap is still above ``cfg.tol``
    after ``cfg.max_iter`` SMO steps.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y have different lengths")
    if X.shape[0] < 2:
        raise ValueError("need at least two training points")
    kernel = cfg.kernel_for(X)
    log_shift, log_base = None, 0.0
    u = y
    if cfg.target_transform == "log-minmax":
        log_base = float(y.min())
        gaps = y - log_base
        positive = gaps[gaps > 0]
        if positive.size:
            log_shift = float(np.quantile(positive, 0.05))
            u = np.log(gaps + log_shift)
    y_min, y_max = float(u.min()), float(u.max())
    scale = y_max - y_min
    if not scale > 0:
        scale = 1.0
    z = (u - y_min) / scale
    K = gram(kernel, X)
    beta, rho, it, gap = _smo(K, z, float(cfg.epsilon), float(cfg.C), float(cfg.tol),
                              int(cfg.max_iter))
    if gap >= cfg.tol and it >= cfg.max_iter:
        raise ConvergenceError("SVR solver did not converge", float(gap), int(it))
    l = X.shape[0]
    gamma = beta[:l] - beta[l:]
    fitted = K @ gamma - rho
    keep = gamma != 0
    return SurrogateModel(
        kernel=kernel,
        support=X[keep].copy(),
        coef=gamma[keep].copy(),
        bias=float(-rho),
        y_offset=y_min,
        y_scale=scale,
        epsilon=float(cfg.epsilon),
        C=float(cfg.C),
        iterations=int(it),
        kkt_gap=float(gap),
        max_residual=float(np.max(np.abs(fitted - z))),
        dual_objective=dual_objective(K, z, cfg.epsilon, gamma),
        log_shift=log_shift,
        log_base=log_base,
        train_X=X.copy(),
    )


def predict(model: SurrogateModel, x) -> float:
    """De-normalised prediction at a single point."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict takes a single point; use predict_many for batches")
    return float(model.predict_many(x[None, :])[0])
