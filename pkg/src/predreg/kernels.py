"""Compactly supported smoothing kernels and their constants.

All kernels are probability densities supported on [-1, 1]; users scale
via the bandwidth only. The uniform (box) kernel is deliberately absent:
it is not Lipschitz.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadBandwidth

__all__ = ["KernelSpec", "get_kernel", "KERNELS"]


def _epanechnikov(u):
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - np.square(u)), 0.0)


def _triangular(u):
    return np.maximum(1.0 - np.abs(u), 0.0)


def _quartic(u):
    return np.where(np.abs(u) <= 1.0, (15.0 / 16.0) * np.square(1.0 - np.square(u)), 0.0)


# kind -> (pointwise function, exact integral of K^2)
_KERNEL_TABLE = {
    "epanechnikov": (_epanechnikov, 3.0 / 5.0),
    "triangular": (_triangular, 2.0 / 3.0),
    "quartic": (_quartic, 5.0 / 7.0),
}

KERNELS = tuple(_KERNEL_TABLE)


@dataclass(frozen=True)
class KernelSpec:
    """A compactly supported probability-density kernel.

    Attributes
    ----------
    kind : str
        One of ``"epanechnikov"``, ``"triangular"``, ``"quartic"``.
    support_radius : float
        Always 1.0; rescaling happens through the bandwidth.
    l1 : float
        Integral of K (exactly 1 for every offered kernel).
    l2 : float
        Exact integral of K^2.
    """

    kind: str
    support_radius: float = field(default=1.0, init=False)
    l1: float = field(default=1.0, init=False)

    def __post_init__(self):
        if self.kind not in _KERNEL_TABLE:
            raise ValueError(
                f"unknown kernel {self.kind!r}; choose from {sorted(_KERNEL_TABLE)}"
            )

    @property
    def l2(self) -> float:
        return _KERNEL_TABLE[self.kind][1]

    def eval(self, u):
        """Pointwise kernel value K(u); zero outside [-1, 1]."""
        return _KERNEL_TABLE[self.kind][0](np.asarray(u, dtype=float))

    def eval_scaled(self, h: float, u):
        """Bandwidth-scaled kernel K_h(u) = K(u / h) / h."""
        if h <= 0:
            raise BadBandwidth(f"bandwidth must be > 0, got {h}")
        return self.eval(np.asarray(u, dtype=float) / h) / h

    def __call__(self, u):
        return self.eval(u)


def get_kernel(name) -> KernelSpec:
    """Resolve a kernel from its config name (or pass a KernelSpec through)."""
    if isinstance(name, KernelSpec):
        return name
    return KernelSpec(str(name).lower())
