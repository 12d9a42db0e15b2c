"""
Wendland C2 smoothing kernel with 2h support.

    W(q) = alpha_d (1 - q/2)^4 (2q + 1),   q = r / h in [0, 2]
    alpha_2 = 7 / (4 pi h^2),  alpha_3 = 21 / (16 pi h^3)

All functions accept scalars or numpy arrays; gradients take displacement
vectors with the spatial dimension on the last axis.
"""

from dataclasses import dataclass
import math

import numpy as np

from ..exceptions import KernelArgumentError

SUPPORTED_DIMENSIONS = (2, 3)


def _normalization(h: float, dimension: int) -> float:
    if dimension == 2:
        return 7.0 / (4.0 * math.pi * h * h)
    if dimension == 3:
        return 21.0 / (16.0 * math.pi * h * h * h)
    raise KernelArgumentError(f"unsupported dimension {dimension}; expected 2 or 3")


@dataclass(frozen=True)
class SmoothingKernel:
    h: float
    dimension: int

    def __post_init__(self):
        if not self.h > 0:
            raise KernelArgumentError(f"smoothing length must be positive, got {self.h}")
        if self.dimension not in SUPPORTED_DIMENSIONS:
            raise KernelArgumentError(f"unsupported dimension {self.dimension}; expected 2 or 3")

    @property
    def cutoff(self) -> float:
        return 2.0 * self.h

    @property
    def normalization(self) -> float:
        return _normalization(self.h, self.dimension)

    def value(self, r):
        """Kernel value W(r); zero at and beyond the cutoff."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise KernelArgumentError("kernel distance must be non-negative")
        q = r / self.h
        s = np.clip(1.0 - 0.5 * q, 0.0, None)
        w = self.normalization * s ** 4 * (2.0 * q + 1.0)
        return w if w.ndim else float(w)

    def derivative(self, r):
        """Radial derivative dW/dr (non-positive on the support)."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise KernelArgumentError("kernel distance must be non-negative")
        q = r / self.h
        s = np.clip(1.0 - 0.5 * q, 0.0, None)
        dw = -5.0 * self.normalization * q * s ** 3 / self.h
        return dw if dw.ndim else float(dw)

    def gradient(self, rvec):
        """
        Gradient of W with respect to the first point of rvec = x_i - x_j.

        Written as -5 alpha (1 - q/2)^3 / h^2 * rvec, which has no singular
        unit vector: the gradient vanishes at rvec = 0 and beyond 2h.
        """
        rvec = np.asarray(rvec, dtype=float)
        if rvec.shape[-1] != self.dimension:
            raise KernelArgumentError(
                f"displacement has {rvec.shape[-1]} components, kernel is {self.dimension}D"
            )
        r = np.sqrt(np.sum(rvec * rvec, axis=-1))
        s = np.clip(1.0 - 0.5 * r / self.h, 0.0, None)
        factor = -5.0 * self.normalization * s ** 3 / (self.h * self.h)
        return factor[..., None] * rvec


def kernel_value(r, h: float, dimension: int):
    return SmoothingKernel(h, dimension).value(r)


def kernel_gradient(rvec, h: float, dimension: int):
    return SmoothingKernel(h, dimension).gradient(rvec)
