"""Second-order forward jets of scalar functions of one variable.

A :class:`Jet` carries ``(f, f', f'')`` and propagates them through
arithmetic, which is all the metric and potential profiles need for
Hamilton's equations and for Gaussian curvature.
"""

from __future__ import annotations

import numpy as np


class Jet:
    __slots__ = ("v", "d1", "d2")

    def __init__(self, v, d1=0.0, d2=0.0):
        self.v = v
        self.d1 = d1
        self.d2 = d2

    @classmethod
    def variable(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x, np.ones_like(x), np.zeros_like(x))

    @staticmethod
    def _lift(other):
        return other if isinstance(other, Jet) else Jet(other, 0.0, 0.0)

    def __add__(self, other):
        o = self._lift(other)
        return Jet(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.d1, -self.d2)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        return Jet(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        inv = 1.0 / self.v
        return Jet(inv, -self.d1 * inv**2, -self.d2 * inv**2 + 2.0 * self.d1**2 * inv**3)

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def __pow__(self, k):
        f0 = self.v**k
        f1 = k * self.v ** (k - 1)
        f2 = k * (k - 1) * self.v ** (k - 2)
        return Jet(f0, f1 * self.d1, f2 * self.d1**2 + f1 * self.d2)

    def sqrt(self):
        return self**0.5

    def compose(self, f0, f1, f2):
        """Apply an outer function given its value and two derivatives at ``self.v``."""
        return Jet(f0, f1 * self.d1, f2 * self.d1**2 + f1 * self.d2)

    def __repr__(self):
        return f"Jet({self.v!r}, {self.d1!r}, {self.d2!r})"
