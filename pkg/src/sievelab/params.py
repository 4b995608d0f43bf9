"""Sieve parameter sets: validation, desk presets, and scale-derived values."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ValidationError

KAPPA_DEFAULT = 17.0 / 31.0
BETA_DEFAULT = 30


@dataclass(frozen=True)
class SieveParams:
    """All knobs of the weighted sieve construction.

    ``level_d`` is the linear-sieve level, ``z`` its sifting limit,
    ``w_level`` the small-prime cutoff, ``level_e`` the small-sieve level,
    ``y`` the upper prime cutoff of the Richert weights, ``beta`` the
    small-sieve truncation exponent and ``eta`` the Richert normalizer.
    """

    x: float
    length: int
    q: int
    residue: int
    eps: float
    kappa: float
    level_d: float
    z: float
    y: float
    w_level: float
    level_e: float
    beta: int
    eta: float

    def validate(self) -> "SieveParams":
        problems = []
        if self.q < 1:
            problems.append("q")
        elif math.gcd(self.residue, self.q) != 1:
            problems.append("residue")
        if self.length < 1:
            problems.append("length")
        if self.x <= 1:
            problems.append("x")
        if not self.w_level >= 2:
            problems.append("w_level")
        if not self.z > self.w_level:
            problems.extend(["z", "w_level"])
        if not self.level_d >= self.z:
            problems.extend(["level_d", "z"])
        if not self.level_e > 1:
            problems.append("level_e")
        if not (isinstance(self.beta, int) and self.beta >= 2):
            problems.append("beta")
        if not 0 < self.eta < 1:
            problems.append("eta")
        if not self.y > 0:
            problems.append("y")
        if problems:
            seen = sorted(set(problems))
            raise ValidationError(
                "invalid sieve parameters: " + ", ".join(seen), fields=seen
            )
        return self

    @classmethod
    def desk(cls, **overrides) -> "SieveParams":
        """The standing desk-scale preset used throughout the test batteries."""
        base = cls(
            x=1.0e6,
            length=1000,
            q=1,
            residue=1,
            eps=0.01,
            kappa=KAPPA_DEFAULT,
            level_d=1.0e4,
            z=10.0,
            y=1.0e3,
            w_level=3.0,
            level_e=1.0e3,
            beta=BETA_DEFAULT,
            eta=0.5,
        )
        if overrides:
            base = replace(base, **overrides)
        return base.validate()

    @classmethod
    def from_scale(
        cls,
        x: float,
        eps: float,
        q: int = 1,
        residue: int = 1,
        length: int | None = None,
        kappa: float = KAPPA_DEFAULT,
        beta: int = BETA_DEFAULT,
        validate: bool = True,
    ) -> "SieveParams":
        """Derive every level from (x, eps) by the power formulas.

        D = x^(kappa - 100 eps), z = D^(1/4), y = x^(1/2 - 10 eps),
        w = x^(eps^2), E = x^(eps^3), eta = (1 - 60 eps)/(1 - 20 eps).
        At desk scale these derived values are usually rejected by
        validation (w < 2); the combinatorial identities hold for any
        admissible parameters, so desk presets set levels directly.
        """
        level_d = x ** (kappa - 100 * eps)
        params = cls(
            x=x,
            length=length if length is not None else max(2, round(x**0.4)),
            q=q,
            residue=residue,
            eps=eps,
            kappa=kappa,
            level_d=level_d,
            z=level_d**0.25,
            y=x ** (0.5 - 10 * eps),
            w_level=x ** (eps**2),
            level_e=x ** (eps**3),
            beta=beta,
            eta=(1 - 60 * eps) / (1 - 20 * eps),
        )
        return params.validate() if validate else params

    @classmethod
    def small_sieve_preset(
        cls, w_level: float, level_e: float, beta: int = BETA_DEFAULT, q: int = 1
    ) -> "SieveParams":
        """Parameters for small-prime-sieve studies; linear-sieve levels inert."""
        z = 4 * w_level
        return cls.desk(
            q=q,
            w_level=float(w_level),
            level_e=float(level_e),
            beta=beta,
            z=z,
            level_d=z**4,
            y=z**4,
        )

    @property
    def average_density(self) -> float:
        """A = L / (phi(q) log x)."""
        from .arith import euler_phi_int

        return self.length / (euler_phi_int(self.q) * math.log(self.x))
