"""Truncated multivariate Taylor arithmetic over chart coordinates.

A :class:`Jet` stores the Taylor coefficients of a (batched, tensor-valued)
function of the ``2n`` chart variables ``(x^1..x^n, y^1..y^n)`` around a base
point.  Monomials are kept while their x-degree is at most ``ox`` and their
y-degree at most ``oy``.  Every arithmetic operation is exact up to that
truncation, so partial derivatives read off a jet carry no discretisation
error, only floating point rounding.

Each jet also remembers up to which bidegree its coefficients are valid.
Differentiating lowers the valid order by one in the corresponding group and
products take the minimum, so asking for a partial beyond what the inputs
support raises :class:`OrderExceeded` instead of returning garbage.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import binom


class OrderExceeded(ValueError):
    """Requested derivative lies outside the jet's valid order."""


class DomainError(ValueError):
    """A function was evaluated outside its real domain (sqrt(-1), log(0), ...)."""


class JetSpace:
    """Monomial bookkeeping for jets in ``n`` x-variables and ``n`` y-variables."""

    def __init__(self, n: int, ox: int, oy: int):
        self.n, self.ox, self.oy = n, ox, oy
        self.nvar = 2 * n
        xm = _monomials(n, ox)
        ym = _monomials(n, oy)
        exps = [tuple(a) + tuple(b) for a in xm for b in ym]
        exps.sort(key=lambda e: (sum(e), e[::-1]))
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), self.nvar)
        self.size = len(exps)
        self.index = {e: i for i, e in enumerate(exps)}
        self.xdeg = self.exps[:, :n].sum(axis=1)
        self.ydeg = self.exps[:, n:].sum(axis=1)
        self.max_degree = ox + oy
        # factorial weight turning Taylor coefficients into partial derivatives
        self.fact = np.array([math.prod(math.factorial(k) for k in e) for e in exps], dtype=float)
        self._build_products()
        self._build_derivatives()

    def _build_products(self):
        e = self.exps
        radix = np.array([max(self.ox, self.oy) + 1] * self.nvar, dtype=np.int64)
        weights = np.cumprod(np.concatenate([[1], radix[:-1]]))
        code = e @ weights
        lookup = {int(c): i for i, c in enumerate(code)}
        ia, ib, ic = [], [], []
        for c in range(self.size):
            diff = e[c] - e  # candidate right factors e[c] - e[a]
            ok = np.all(diff >= 0, axis=1)
            for a in np.nonzero(ok)[0]:
                ia.append(a)
                ib.append(lookup[int(diff[a] @ weights)])
                ic.append(c)
        self.pair_a = np.array(ia, dtype=np.int64)
        self.pair_b = np.array(ib, dtype=np.int64)
        ic = np.array(ic, dtype=np.int64)
        # pairs are generated grouped by output monomial, so segments are contiguous
        self.pair_starts = np.flatnonzero(np.r_[True, ic[1:] != ic[:-1]])
        self.npairs = len(ia)

    def _build_derivatives(self):
        self.deriv_src = np.full((self.nvar, self.size), self.size, dtype=np.int64)
        self.deriv_fac = np.zeros((self.nvar, self.size))
        for c, e in enumerate(self.exps):
            for v in range(self.nvar):
                up = list(e)
                up[v] += 1
                j = self.index.get(tuple(up))
                if j is not None:
                    self.deriv_src[v, c] = j
                    self.deriv_fac[v, c] = up[v]

    def __repr__(self):
        return f"JetSpace(n={self.n}, ox={self.ox}, oy={self.oy}, size={self.size})"


def _monomials(nv: int, deg: int) -> list[tuple[int, ...]]:
    out = []

    def rec(prefix, left, k):
        if k == nv:
            out.append(tuple(prefix))
            return
        for d in range(left + 1):
            rec(prefix + [d], left - d, k + 1)

    rec([], deg, 0)
    return out


@lru_cache(maxsize=None)
def jet_space(n: int, ox: int, oy: int) -> JetSpace:
    return JetSpace(n, ox, oy)


class Jet:
    """Batched tensor of truncated Taylor polynomials.

    ``coef`` has shape ``shape + (space.size,)``; ``coef[..., 0]`` is the value.
    """

    __slots__ = ("space", "coef", "valid")
    __array_priority__ = 1000

    def __init__(self, space: JetSpace, coef: np.ndarray, valid: tuple[int, int] | None = None):
        self.space = space
        self.coef = coef
        self.valid = (space.ox, space.oy) if valid is None else valid

    # construction -----------------------------------------------------------
    @classmethod
    def constant(cls, space: JetSpace, value) -> "Jet":
        value = np.asarray(value, dtype=float)
        coef = np.zeros(value.shape + (space.size,))
        coef[..., 0] = value
        return cls(space, coef)

    @classmethod
    def variable(cls, space: JetSpace, var: int, value) -> "Jet":
        jet = cls.constant(space, value)
        e = [0] * space.nvar
        e[var] = 1
        k = space.index.get(tuple(e))
        if k is not None:  # absent when that variable group has order 0
            jet.coef[..., k] = 1.0
        return jet

    # shape handling ----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coef.shape[:-1]

    @property
    def value(self) -> np.ndarray:
        return self.coef[..., 0]

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            raise IndexError("ellipsis indexing is not supported on jets")
        return Jet(self.space, self.coef[(*key, Ellipsis)], self.valid)

    def reshape(self, *shape) -> "Jet":
        return Jet(self.space, self.coef.reshape(*shape, self.space.size), self.valid)

    def transpose(self, *axes) -> "Jet":
        return Jet(self.space, self.coef.transpose(*axes, len(axes)), self.valid)

    def swap(self, a: int, b: int) -> "Jet":
        return Jet(self.space, np.swapaxes(self.coef, a, b), self.valid)

    def __repr__(self):
        return f"Jet(shape={self.shape}, valid={self.valid}, value={self.value!r})"

    # arithmetic --------------------------------------------------------------
    def _lift(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets live in different spaces")
            return other
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            other = np.asarray(other, dtype=float)
            shape = np.broadcast_shapes(self.shape, other.shape)
            coef = np.broadcast_to(self.coef, shape + (self.space.size,)).copy()
            coef[..., 0] += other
            return Jet(self.space, coef, self.valid)
        return Jet(self.space, self.coef + o.coef, _vmin(self.valid, o.valid))

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coef, self.valid)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return Jet(self.space, self.coef * np.asarray(other, dtype=float)[..., None], self.valid)
        sp = self.space
        prod = self.coef[..., sp.pair_a] * o.coef[..., sp.pair_b]
        return Jet(sp, np.add.reduceat(prod, sp.pair_starts, axis=-1), _vmin(self.valid, o.valid))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * reciprocal(o)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(log(self) * p)
        if float(p).is_integer():
            return _int_power(self, int(p))
        return _compose(self, lambda a0, k: binom(p, k) * _safe_pow(a0, p - k, "pow"))

    def __rpow__(self, base):
        return exp(self * math.log(base))

    # derivatives -------------------------------------------------------------
    def d(self, var: int) -> "Jet":
        sp = self.space
        padded = np.concatenate([self.coef, np.zeros(self.shape + (1,))], axis=-1)
        coef = padded[..., sp.deriv_src[var]] * sp.deriv_fac[var]
        vx, vy = self.valid
        valid = (vx - 1, vy) if var < sp.n else (vx, vy - 1)
        if min(valid) < 0:
            raise OrderExceeded(f"no derivative left in variable {var} (valid order {self.valid})")
        return Jet(sp, coef, valid)

    def dx(self) -> "Jet":
        """Gradient in x, appended as a trailing tensor axis."""
        return stack([self.d(i) for i in range(self.space.n)], axis=-1)

    def dy(self) -> "Jet":
        """Gradient in y, appended as a trailing tensor axis."""
        n = self.space.n
        return stack([self.d(n + i) for i in range(n)], axis=-1)

    def partial(self, exps: Sequence[int]) -> np.ndarray:
        """Mixed partial derivative with the given exponent vector (length 2n)."""
        sp = self.space
        exps = tuple(int(e) for e in exps)
        if len(exps) != sp.nvar:
            raise ValueError(f"multi-index must have length {sp.nvar}")
        ox, oy = sum(exps[:sp.n]), sum(exps[sp.n:])
        if ox > self.valid[0] or oy > self.valid[1]:
            raise OrderExceeded(f"order ({ox}, {oy}) exceeds valid jet order {self.valid}")
        i = sp.index[exps]
        return self.coef[..., i] * sp.fact[i]


def _vmin(a, b):
    return (min(a[0], b[0]), min(a[1], b[1]))


def stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    sp = jets[0].space
    ax = axis if axis >= 0 else axis - 1  # keep the coefficient axis last
    coef = np.stack([j.coef for j in jets], axis=ax)
    valid = jets[0].valid
    for j in jets[1:]:
        valid = _vmin(valid, j.valid)
    return Jet(sp, coef, valid)


def value(v):
    return v.value if isinstance(v, Jet) else np.asarray(v)


def einsum(subscripts: str, a, b) -> Jet:
    """Tensor contraction of two operands, at least one a jet.

    Subscripts follow :func:`numpy.einsum` and should start with ``...`` for
    the shared batch axes, e.g. ``"...ij,...jk->...ik"``.
    """
    lhs, out = subscripts.split("->")
    sa, sb = lhs.split(",")
    if isinstance(a, Jet) and isinstance(b, Jet):
        sp = a.space
        pa = a.coef[..., sp.pair_a]
        pb = b.coef[..., sp.pair_b]
        prod = np.einsum(f"{sa}#,{sb}#->{out}#".replace("#", "Z"), pa, pb, optimize=True)
        return Jet(sp, np.add.reduceat(prod, sp.pair_starts, axis=-1), _vmin(a.valid, b.valid))
    if isinstance(a, Jet):
        coef = np.einsum(f"{sa}Z,{sb}->{out}Z", a.coef, np.asarray(b, dtype=float), optimize=True)
        return Jet(a.space, coef, a.valid)
    coef = np.einsum(f"{sa},{sb}Z->{out}Z", np.asarray(a, dtype=float), b.coef, optimize=True)
    return Jet(b.space, coef, b.valid)


# elementary functions -----------------------------------------------------------

def _compose(a: Jet, taylor) -> Jet:
    """f(a) from the Taylor coefficients ``taylor(a0, k) = f^(k)(a0)/k!``."""
    a0 = a.value
    h = Jet(a.space, a.coef.copy(), a.valid)
    h.coef[..., 0] = 0.0
    K = a.space.max_degree
    res = Jet.constant(a.space, taylor(a0, K) * np.ones_like(a0))
    res.valid = a.valid
    for k in range(K - 1, -1, -1):
        res = res * h + taylor(a0, k)
    return res


def _safe_pow(a0, p, name):
    a0 = np.asarray(a0, dtype=float)
    if np.any(a0 <= 0):
        raise DomainError(f"{name} of non-positive argument {np.min(a0)!r}")
    return a0 ** p


def _int_power(a: Jet, p: int) -> Jet:
    if p < 0:
        return reciprocal(_int_power(a, -p))
    res = Jet.constant(a.space, np.ones(a.shape))
    res.valid = a.valid
    base = a
    while p:
        if p & 1:
            res = res * base
        p >>= 1
        if p:
            base = base * base
    return res


def reciprocal(a: Jet) -> Jet:
    a0 = a.value
    if np.any(a0 == 0):
        raise DomainError("division by a jet with zero value")
    return _compose(a, lambda v, k: (-1.0) ** k / v ** (k + 1))


def sqrt(a):
    if not isinstance(a, Jet):
        a = np.asarray(a, dtype=float)
        if np.any(a < 0):
            raise DomainError(f"sqrt of negative argument {np.min(a)!r}")
        return np.sqrt(a)
    return _compose(a, lambda v, k: binom(0.5, k) * _safe_pow(v, 0.5 - k, "sqrt"))


def exp(a):
    if not isinstance(a, Jet):
        return np.exp(a)
    return _compose(a, lambda v, k: np.exp(v) / math.factorial(k))


def log(a):
    if not isinstance(a, Jet):
        a = np.asarray(a, dtype=float)
        if np.any(a <= 0):
            raise DomainError(f"log of non-positive argument {np.min(a)!r}")
        return np.log(a)

    def taylor(v, k):
        if k == 0:
            return np.log(_safe_pow(v, 1.0, "log"))
        return (-1.0) ** (k + 1) / (k * v ** k)

    return _compose(a, taylor)


def sin(a):
    if not isinstance(a, Jet):
        return np.sin(a)
    return _compose(a, lambda v, k: np.sin(v + k * np.pi / 2) / math.factorial(k))


def cos(a):
    if not isinstance(a, Jet):
        return np.cos(a)
    return _compose(a, lambda v, k: np.cos(v + k * np.pi / 2) / math.factorial(k))


def power(a, p):
    """``a ** p`` with a real-domain check for non-integer exponents."""
    if isinstance(a, Jet) or isinstance(p, Jet):
        if not isinstance(a, Jet):
            return exp(p * log(a))
        return a ** p
    a = np.asarray(a, dtype=float)
    if not float(np.asarray(p)).is_integer() and np.any(a < 0):
        raise DomainError("non-integer power of a negative number")
    if float(np.asarray(p)).is_integer() and int(p) < 0 and np.any(a == 0):
        raise DomainError("negative power of zero")
    return a ** p


def inv(A: Jet) -> Jet:
    """Inverse of a batch of square jet matrices (last two tensor axes)."""
    A0 = A.value
    A0inv = np.linalg.inv(A0)
    H = Jet(A.space, A.coef.copy(), A.valid)
    H.coef[..., 0] = 0.0
    M = -einsum("...ij,...jk->...ik", A0inv, H)
    eye = np.broadcast_to(np.eye(A0.shape[-1]), A0.shape)
    S = Jet.constant(A.space, eye)
    S.valid = A.valid
    # Neumann series in the nilpotent part, Horner form
    for _ in range(A.space.max_degree):
        S = einsum("...ij,...jk->...ik", M, S) + eye
    return einsum("...ij,...jk->...ik", S, A0inv)


def variables(space: JetSpace, x, y) -> tuple[list[Jet], list[Jet]]:
    """Coordinate jets for base points ``x`` and ``y`` of shape ``(..., n)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = space.n
    xs = [Jet.variable(space, i, x[..., i]) for i in range(n)]
    ys = [Jet.variable(space, n + i, y[..., i]) for i in range(n)]
    return xs, ys


def mixed_partial(f, x, y, idx: Sequence[int], order: tuple[int, int] | None = None) -> np.ndarray:
    """Exact mixed partial of ``f(xs, ys)`` at ``(x, y)``.

    ``idx`` is the exponent vector over ``(x^1..x^n, y^1..y^n)``.  The jet order
    defaults to the smallest one that contains ``idx``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    idx = tuple(int(i) for i in idx)
    if order is None:
        order = (sum(idx[:n]), sum(idx[n:]))
    space = jet_space(n, *order)
    xs, ys = variables(space, x, y)
    out = f(xs, ys)
    if not isinstance(out, Jet):
        out = Jet.constant(space, np.broadcast_to(np.asarray(out, dtype=float), x.shape[:-1]))
    return out.partial(idx)
