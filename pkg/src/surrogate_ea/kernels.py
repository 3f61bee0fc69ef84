"""Kernel functions and Gram matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("linear", "polynomial", "gaussian")


@dataclass(frozen=True)
class KernelSpec:
    """``linear``: x.y; ``polynomial``: (x.y + offset)^degree;
    ``gaussian``: exp(-|x-y|^2 / (2 variance))."""

    kind: str = "gaussian"
    degree: int = 2
    offset: float = 1.0
    variance: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "polynomial" and (self.degree < 1 or self.offset < 0):
            raise ValueError("polynomial kernel needs degree >= 1 and offset >= 0")
        if self.kind == "gaussian" and not self.variance > 0:
            raise ValueError("gaussian kernel variance must be > 0")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear")

    @classmethod
    def polynomial(cls, degree: int, offset: float = 1.0) -> "KernelSpec":
        return cls("polynomial", degree=degree, offset=offset)

    @classmethod
    def gaussian(cls, variance: float) -> "KernelSpec":
        return cls("gaussian", variance=variance)

    def describe(self) -> str:
        if self.kind == "linear":
            return "linear"
        if self.kind == "polynomial":
            return f"polynomial degree={self.degree} offset={self.offset!r}"
        return f"gaussian variance={self.variance!r}"

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Inverse of :meth:`describe`."""
        parts = text.split()
        kw = dict(p.split("=", 1) for p in parts[1:])
        if parts[0] == "linear":
            return cls.linear()
        if parts[0] == "polynomial":
            return cls.polynomial(int(kw["degree"]), float(kw.get("offset", 1.0)))
        if parts[0] == "gaussian":
            return cls.gaussian(float(kw["variance"]))
        raise ValueError(f"cannot parse kernel {text!r}")


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def cross_gram(kernel: KernelSpec, A, B) -> np.ndarray:
    """Matrix of k(a, b) for rows a of A and b of B."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if kernel.kind == "linear":
        return A @ B.T
    if kernel.kind == "polynomial":
        return (A @ B.T + kernel.offset) ** kernel.degree
    return np.exp(-_sq_dists(A, B) / (2.0 * kernel.variance))


def gram(kernel: KernelSpec, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("gram of an empty point set")
    K = cross_gram(kernel, X, X)
    K = 0.5 * (K + K.T)
    if kernel.kind == "gaussian":
        np.fill_diagonal(K, 1.0)
    return K


def median_heuristic_variance(X) -> float:
    """Squared median pairwise distance, floored to stay positive."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        return 1.0
    iu = np.triu_indices(X.shape[0], 1)
    d = np.sqrt(_sq_dists(X, X)[iu])
    med = float(np.median(d))
    if med <= 0:
        med = float(d.max()) if d.max() > 0 else 1.0
    return med * med
