"""Physical parameters and the reduced coefficients of the regularized equation."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigError


@dataclass(frozen=True)
class ModelParams:
    """Inputs of the initial value problem.

    Attributes:
        lam: reaction rate constant lambda.
        diffusion: diffusion coefficient D.
        ell: regularization length; the kernel denominator is D(t - s) + ell^2.
        a0: initial density a(0).
        gamma: optional externally supplied regularization time. Only needed
            (and only allowed to be omitted with) ``ell == 0``; otherwise
            ``gamma = ell**2 / diffusion``.
    """

    lam: float
    diffusion: float
    ell: float
    a0: float
    gamma: float | None = None

    def __post_init__(self):
        for name in ("lam", "diffusion", "ell", "a0"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}")
        if self.lam < 0:
            raise ConfigError(f"lam must be >= 0, got {self.lam!r}")
        if self.diffusion <= 0:
            raise ConfigError(f"diffusion must be > 0, got {self.diffusion!r}")
        if self.a0 < 0:
            raise ConfigError(f"a0 must be >= 0, got {self.a0!r}")
        if self.ell < 0:
            raise ConfigError(f"ell must be >= 0, got {self.ell!r}")
        if self.gamma is not None and not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ConfigError(f"gamma must be finite and > 0, got {self.gamma!r}")
        if self.ell == 0 and self.gamma is None:
            raise ConfigError("ell = 0 leaves the d=2 kernel unregularized; supply gamma > 0")

    @property
    def alpha(self) -> float:
        return 2.0 * self.lam * self.diffusion

    @property
    def beta(self) -> float:
        return self.alpha**2 / (8.0 * math.pi * self.diffusion)

    @property
    def regularization_time(self) -> float:
        if self.gamma is not None:
            return self.gamma
        return self.ell**2 / self.diffusion


@dataclass(frozen=True)
class DerivedCoeffs:
    """Coefficients of ``da/dt = -alpha a^2 + beta int a^2/(t - s + gamma) ds``.

    ``delta`` is gamma measured in units of the time step ``dt``.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt!r}")
        if not self.delta > 0:
            raise ConfigError(f"delta must be > 0, got {self.delta!r}")

    @property
    def log_ratio(self) -> float:
        """ln((1 + delta) / delta), the weight of the newest segment."""
        return math.log1p(1.0 / self.delta)

    def without_memory(self) -> DerivedCoeffs:
        """Same coefficients with the memory term switched off (beta = 0)."""
        return replace(self, beta=0.0)


def derive_coeffs(params: ModelParams, dt: float) -> DerivedCoeffs:
    """Reduce physical parameters to (alpha, beta, gamma, delta) for step ``dt``."""
    if not (dt > 0 and math.isfinite(dt)):
        raise ConfigError(f"dt must be finite and > 0, got {dt!r}")
    gamma = params.regularization_time
    delta = gamma / dt
    if not delta > 0:
        raise ConfigError(f"delta = gamma/dt underflowed to {delta!r}; kernel is unregularized")
    return DerivedCoeffs(alpha=params.alpha, beta=params.beta, gamma=gamma, delta=delta, dt=dt)
