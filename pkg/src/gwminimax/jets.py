"""Truncated Taylor-series (jet) arithmetic.

A jet of order ``m`` at a point ``x0`` stores the coefficients
``c[j] = g^(j)(x0) / j!`` of a smooth function ``g``, truncated after
``j = m``.  Sums, products, integer and real powers, and composition of jets
give the jets of the corresponding function combinations, which is how the
package obtains exact derivatives of composite maps (for polynomial and
closed-form generating functions the only rounding is ordinary floating
point; there is no truncation error below the jet order).

Only the handful of operations needed by the distribution kinds are
implemented; this is not a general autodiff library.
"""

from __future__ import annotations

import dataclasses

import numpy as np

__all__ = ["Jet"]


@dataclasses.dataclass(frozen=True)
class Jet:
    """Taylor coefficients ``coeffs[j] = g^(j)(x0)/j!`` of g about ``x0``.

    ``coeffs[0]`` is the value of the function at the expansion point.  The
    expansion point itself is deliberately not stored: composition keeps
    track of it naturally (the outer jet must be taken about the inner
    jet's value), and storing it invites stale bookkeeping.
    """

    coeffs: tuple[float, ...]

    # -- construction ---------------------------------------------------

    @staticmethod
    def constant(value: float, order: int) -> "Jet":
        return Jet((float(value),) + (0.0,) * order)

    @staticmethod
    def variable(value: float, order: int) -> "Jet":
        """The identity function expanded about ``value``."""
        if order == 0:
            return Jet((float(value),))
        return Jet((float(value), 1.0) + (0.0,) * (order - 1))

    # -- bookkeeping ----------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self) -> float:
        return self.coeffs[0]

    def derivative(self, j: int) -> float:
        """The j-th derivative at the expansion point, ``j <= order``."""
        if not 0 <= j <= self.order:
            raise ValueError(f"derivative order {j} outside jet order {self.order}")
        import math

        return self.coeffs[j] * math.factorial(j)

    # -- ring operations ------------------------------------------------

    def __add__(self, other: "Jet | float") -> "Jet":
        if isinstance(other, Jet):
            self._check_order(other)
            return Jet(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))
        return Jet((self.coeffs[0] + float(other),) + self.coeffs[1:])

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(tuple(-a for a in self.coeffs))

    def __sub__(self, other: "Jet | float") -> "Jet":
        return self + (-other if isinstance(other, Jet) else -float(other))

    def __rsub__(self, other: float) -> "Jet":
        return (-self) + float(other)

    def __mul__(self, other: "Jet | float") -> "Jet":
        if not isinstance(other, Jet):
            return Jet(tuple(a * float(other) for a in self.coeffs))
        self._check_order(other)
        m = self.order
        a = np.asarray(self.coeffs)
        b = np.asarray(other.coeffs)
        # Truncated Cauchy product.
        out = np.convolve(a, b)[: m + 1]
        return Jet(tuple(float(c) for c in out))

    __rmul__ = __mul__

    def __truediv__(self, other: float) -> "Jet":
        return self * (1.0 / float(other))

    # -- powers and composition ------------------------------------------

    def power(self, exponent: float) -> "Jet":
        """Raise the jet to a power.

        Non-negative integer exponents work for any jet (binary
        exponentiation).  Real exponents use the logarithmic-derivative
        recurrence, which requires a strictly positive constant term.
        """
        if float(exponent).is_integer() and exponent >= 0:
            n = int(exponent)
            result = Jet.constant(1.0, self.order)
            base = self
            while n:
                if n & 1:
                    result = result * base
                base = base * base
                n >>= 1
            return result
        u = self.coeffs
        if u[0] <= 0.0:
            raise ValueError(
                "real-exponent jet power needs a positive constant term, "
                f"got {u[0]!r}"
            )
        alpha = float(exponent)
        m = self.order
        w = [u[0] ** alpha] + [0.0] * m
        for j in range(1, m + 1):
            acc = 0.0
            for i in range(j):
                acc += (alpha * (j - i) - i) * w[i] * u[j - i]
            w[j] = acc / (j * u[0])
        return Jet(tuple(w))

    def compose(self, inner: "Jet") -> "Jet":
        """The jet of ``g(h(.))`` where ``self`` expands g about
        ``inner.value`` and ``inner`` expands h.

        Horner evaluation in the shifted inner jet (inner minus its constant
        term), so the result is exact up to the shared truncation order.
        """
        self._check_order(inner)
        m = self.order
        shifted = Jet((0.0,) + inner.coeffs[1:])
        result = Jet.constant(self.coeffs[m], m)
        for j in range(m - 1, -1, -1):
            result = result * shifted + self.coeffs[j]
        return result

    def _check_order(self, other: "Jet") -> None:
        if self.order != other.order:
            raise ValueError(
                f"jet order mismatch: {self.order} vs {other.order}"
            )
