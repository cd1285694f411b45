"""Sparse multivariate polynomials with analytic first and second derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Polynomial:
    """``sum_t coef_t * prod_i x_i ** powers_t[i]``."""

    nvars: int
    coefs: tuple[float, ...]
    powers: tuple[tuple[int, ...], ...]

    @classmethod
    def from_terms(cls, nvars: int, terms) -> "Polynomial":
        coefs, powers = [], []
        for coef, exps in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValueError(f"term exponents {exps} do not match {nvars} variables")
            if any(e < 0 for e in exps):
                raise ValueError("negative exponent")
            coefs.append(float(coef))
            powers.append(exps)
        return cls(nvars, tuple(coefs), tuple(powers))

    @classmethod
    def constant(cls, nvars: int, value: float) -> "Polynomial":
        return cls(nvars, (float(value),), ((0,) * nvars,))

    @property
    def degree(self) -> int:
        return max((sum(p) for p in self.powers), default=0)

    def terms(self) -> list:
        return [[c, list(p)] for c, p in zip(self.coefs, self.powers)]

    def __post_init__(self):
        object.__setattr__(self, "_c", np.asarray(self.coefs, dtype=float))
        object.__setattr__(self, "_p", np.asarray(self.powers, dtype=float).reshape(len(self.coefs), self.nvars))

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self._c @ np.prod(x**self._p, axis=1))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.nvars)
        for c, p in zip(self.coefs, self.powers):
            for i, e in enumerate(p):
                if e == 0:
                    continue
                q = list(p)
                q[i] -= 1
                out[i] += c * e * np.prod(x ** np.array(q))
        return out

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros((self.nvars, self.nvars))
        for c, p in zip(self.coefs, self.powers):
            for i in range(self.nvars):
                for j in range(self.nvars):
                    q = list(p)
                    f = q[i]
                    q[i] -= 1
                    f *= q[j]
                    q[j] -= 1
                    if f == 0:
                        continue
                    out[i, j] += c * f * np.prod(x ** np.array(q))
        return out


def random_polynomial(rng: np.random.Generator, nvars: int, degree: int = 3, scale: float = 0.3) -> Polynomial:
    """Random polynomial without constant or linear part (its graph is tangent to the plane at 0)."""
    terms = []
    for total in range(2, degree + 1):
        for exps in _compositions(total, nvars):
            terms.append((float(rng.normal(scale=scale)), exps))
    return Polynomial.from_terms(nvars, terms)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail
