"""Expression language and chart definitions for Randers metrics.

A chart is given by expressions ``a_ij(x)`` and ``b_i(x)`` in the coordinates
``x1..xn``.  Expressions support ``+ - * / ^``, unary minus, parentheses,
numeric literals (including exponent notation), the constant ``pi`` and the
functions ``sqrt sin cos exp log``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import jets
from .jets import Jet

FUNCTIONS = ("sqrt", "sin", "cos", "exp", "log")
BINARY = ("+", "-", "*", "/", "^")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int, text: str):
        super().__init__(f"{message} at position {position} in {text!r}")
        self.position = position


class ChartError(ValueError):
    """Malformed chart definition (bad JSON, asymmetric a, unknown identifier...)."""


class ChartValidationError(ValueError):
    """Chart fails positivity or ||beta|| < 1 at a sample point."""

    def __init__(self, message: str, point):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class Node:
    """Expression tree node.

    ``kind`` is ``const`` (uses ``value``), ``coord`` (uses ``index``, 1-based),
    one of the binary operators, ``neg``, or a function name.
    """

    kind: str
    children: tuple["Node", ...] = ()
    value: float = 0.0
    index: int = 0

    def __str__(self) -> str:
        return to_text(self)


def const(v: float) -> Node:
    return Node("const", value=float(v))


def coord(i: int) -> Node:
    return Node("coord", index=int(i))


def binop(op: str, a: Node, b: Node) -> Node:
    return Node(op, (a, b))


def call(fn: str, a: Node) -> Node:
    return Node(fn, (a,))


# parsing ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))")


def _tokenize(text: str):
    pos, toks = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r}",
                                  pos + len(text[pos:]) - len(text[pos:].lstrip()), text)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, dim: int | None):
        self.text = text
        self.dim = dim
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        where = "end of input" if tok[0] == "end" else repr(tok[1])
        raise ExprSyntaxError(f"{msg} (found {where})", tok[2], self.text)

    def expect(self, op):
        tok = self.take()
        if tok[1] != op or tok[0] != "op":
            self.fail(f"expected {op!r}", tok)

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("unexpected trailing input")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = binop(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = binop(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            if self.peek()[0] == "num":
                lit = self.atom()
                # fold "-<literal>" so negative constants round-trip
                if lit.kind == "const" and not (self.peek()[0] == "op" and self.peek()[1] == "^"):
                    return const(-lit.value)
                return Node("neg", (self._power_tail(lit),))
            return Node("neg", (self.unary(),))
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        return self._power_tail(self.atom())

    def _power_tail(self, base):
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return binop("^", base, self.unary())  # right associative
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return const(float(text))
        if kind == "id":
            if text == "pi":
                return const(math.pi)
            m = re.fullmatch(r"x(\d+)", text)
            if m:
                idx = int(m.group(1))
                if idx < 1 or (self.dim is not None and idx > self.dim):
                    raise ExprSyntaxError(f"coordinate {text} outside dimension {self.dim}", pos, self.text)
                return coord(idx)
            if text in FUNCTIONS:
                if not (self.peek()[0] == "op" and self.peek()[1] == "("):
                    self.fail(f"function {text} expects one parenthesised argument")
                self.take()
                arg = self.expr()
                if self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.fail(f"function {text} takes exactly one argument")
                self.expect(")")
                return call(text, arg)
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos, self.text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, coordinate, function or '('", (kind, text, pos))


def parse_expr(text: str, dim: int | None = None) -> Node:
    """Parse an expression; ``dim`` bounds the admissible coordinate indices."""
    if not isinstance(text, str):
        raise ChartError(f"expression must be a string, got {type(text).__name__}")
    return _Parser(text, dim).parse()


def to_text(node: Node) -> str:
    """Fully parenthesised text that parses back to an identical tree."""
    k = node.kind
    if k == "const":
        r = repr(node.value)
        if not math.isfinite(node.value):
            raise ValueError("non-finite constant cannot be printed")
        return f"({r})" if node.value < 0 or r.startswith("-") else r
    if k == "coord":
        return f"x{node.index}"
    if k == "neg":
        return f"(-({to_text(node.children[0])}))"
    if k in BINARY:
        a, b = node.children
        return f"({to_text(a)} {k} {to_text(b)})"
    return f"{k}({to_text(node.children[0])})"


def max_coord(node: Node) -> int:
    if node.kind == "coord":
        return node.index
    return max((max_coord(c) for c in node.children), default=0)


def evaluate(node: Node, xs: Sequence):
    """Evaluate on floats, arrays or jets (``xs[i]`` is coordinate ``x{i+1}``)."""
    k = node.kind
    if k == "const":
        return node.value
    if k == "coord":
        return xs[node.index - 1]
    if k == "neg":
        return -evaluate(node.children[0], xs)
    if k in BINARY:
        a = evaluate(node.children[0], xs)
        b = evaluate(node.children[1], xs)
        if k == "+":
            return a + b
        if k == "-":
            return a - b
        if k == "*":
            return a * b
        if k == "/":
            if not isinstance(b, Jet) and np.any(np.asarray(b) == 0):
                raise jets.DomainError("division by zero")
            return a / b
        return jets.power(a, b)
    return getattr(jets, k)(evaluate(node.children[0], xs))


# charts -----------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Hard coordinate domain: a closed ball about the origin or a box."""

    kind: str
    radius: float = 0.0
    bounds: tuple[tuple[float, float], ...] = ()

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            return np.linalg.norm(x, axis=-1) <= self.radius
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return np.all((x >= lo) & (x <= hi), axis=-1)

    def margin(self, x) -> float:
        """Signed distance-like margin, positive inside."""
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            return float(self.radius - np.linalg.norm(x))
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return float(np.min(np.minimum(x - lo, hi - x)))

    def to_dict(self) -> dict:
        if self.kind == "ball":
            return {"type": "ball", "radius": self.radius}
        return {"type": "box", "bounds": [list(b) for b in self.bounds]}

    @classmethod
    def from_dict(cls, d: dict, n: int) -> "Domain":
        kind = d.get("type")
        if kind == "ball":
            r = float(d["radius"])
            if not r > 0:
                raise ChartError("ball radius must be positive")
            return cls("ball", radius=r)
        if kind == "box":
            bounds = tuple((float(lo), float(hi)) for lo, hi in d["bounds"])
            if len(bounds) != n or any(lo >= hi for lo, hi in bounds):
                raise ChartError("box bounds must give n increasing intervals")
            return cls("box", bounds=bounds)
        raise ChartError(f"unknown domain type {kind!r}")


@dataclass(frozen=True)
class ChartSpec:
    """Randers metric F = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i on a coordinate domain.

    ``a`` is stored as a full symmetric grid; constructors enforce symmetry.
    ``sample_domain`` is where random test points are drawn (defaults to the
    hard domain).
    """

    n: int
    a: tuple[tuple[Node, ...], ...]
    b: tuple[Node, ...]
    domain: Domain
    name: str = "chart"
    sample_domain: Domain | None = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise ChartError("dimension must be at least 2")
        if len(self.a) != self.n or any(len(r) != self.n for r in self.a) or len(self.b) != self.n:
            raise ChartError("a must be n x n and b must have n entries")
        for i in range(self.n):
            for j in range(i):
                if self.a[i][j] != self.a[j][i]:
                    raise ChartError(f"a is not symmetric at ({i + 1}, {j + 1})")
        for node in [e for r in self.a for e in r] + list(self.b):
            if max_coord(node) > self.n:
                raise ChartError(f"coordinate index exceeds dimension {self.n}")

    @property
    def sampling(self) -> Domain:
        return self.sample_domain or self.domain

    def check_domain(self, x):
        x = np.asarray(x, dtype=float)
        inside = self.domain.contains(x)
        if not np.all(inside):
            bad = x.reshape(-1, self.n)[~np.asarray(inside).reshape(-1)][0]
            raise jets.DomainError(f"point {bad.tolist()} lies outside the domain of chart {self.name}")

    def coefficients(self, xs):
        """a_ij and b_i evaluated on coordinate values or jets."""
        cache = {}

        def ev(node):
            key = id(node)
            if key not in cache:
                cache[key] = evaluate(node, xs)
            return cache[key]

        a = [[ev(self.a[i][j]) for j in range(self.n)] for i in range(self.n)]
        b = [ev(e) for e in self.b]
        return a, b

    def metric_arrays(self, x):
        """Numeric a(x) with shape (..., n, n) and b(x) with shape (..., n)."""
        x = np.asarray(x, dtype=float)
        self.check_domain(x)
        xs = [x[..., i] for i in range(self.n)]
        a, b = self.coefficients(xs)
        shape = x.shape[:-1]
        A = np.stack([np.stack([np.broadcast_to(np.asarray(v, float), shape) for v in row], -1) for row in a], -2)
        B = np.stack([np.broadcast_to(np.asarray(v, float), shape) for v in b], -1)
        return A, B

    def beta_norm(self, x) -> np.ndarray:
        A, B = self.metric_arrays(x)
        return np.sqrt(np.einsum("...i,...i->...", B, np.linalg.solve(A, B[..., None])[..., 0]))

    def finsler(self, x, y):
        """F(x, y) for numeric input."""
        A, B = self.metric_arrays(x)
        y = np.asarray(y, dtype=float)
        return np.sqrt(np.einsum("...i,...ij,...j->...", y, A, y)) + np.einsum("...i,...i->...", B, y)

    def to_dict(self) -> dict:
        d = {
            "dimension": self.n,
            "a": [to_text(self.a[i][j]) for i in range(self.n) for j in range(self.n)],
            "b": [to_text(e) for e in self.b],
            "domain": self.domain.to_dict(),
            "name": self.name,
        }
        if self.sample_domain is not None:
            d["sample_domain"] = self.sample_domain.to_dict()
        return d


def chart_from_dict(d: dict) -> ChartSpec:
    try:
        n = int(d["dimension"])
        a_txt = d["a"]
        b_txt = d["b"]
        dom = d["domain"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ChartError(f"chart document missing or malformed key: {exc}") from exc
    if n < 2:
        raise ChartError("dimension must be at least 2")
    if len(a_txt) != n * n or len(b_txt) != n:
        raise ChartError(f"expected {n * n} entries in a and {n} in b")
    try:
        a_flat = [parse_expr(t, n) for t in a_txt]
        b = tuple(parse_expr(t, n) for t in b_txt)
    except ExprSyntaxError as exc:
        raise ChartError(str(exc)) from exc
    a = tuple(tuple(a_flat[i * n + j] for j in range(n)) for i in range(n))
    sample = Domain.from_dict(d["sample_domain"], n) if "sample_domain" in d else None
    return ChartSpec(n, a, b, Domain.from_dict(dom, n), name=d.get("name", "chart"), sample_domain=sample)


def load_chart(path) -> ChartSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ChartError(f"cannot read chart file {path}: {exc}") from exc
    return chart_from_dict(doc)


def dump_chart(chart: ChartSpec, path) -> None:
    Path(path).write_text(json.dumps(chart.to_dict(), indent=2) + "\n")


@dataclass
class ValidationReport:
    passed: bool
    min_eigenvalue: float
    max_beta_norm: float
    offending: list | None = None
    reason: str = ""

    def raise_if_failed(self):
        if not self.passed:
            raise ChartValidationError(self.reason, self.offending)


def validate_chart(chart: ChartSpec, samples) -> ValidationReport:
    """Positive definiteness of a(x) and ||beta||_x < 1 at each sample."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    outside = ~chart.domain.contains(samples)
    if np.any(outside):
        p = samples[np.argmax(outside)]
        return ValidationReport(False, math.nan, math.nan, p.tolist(), f"sample {p.tolist()} outside domain")
    try:
        A, B = chart.metric_arrays(samples)
    except jets.DomainError as exc:
        return ValidationReport(False, math.nan, math.nan, None, str(exc))
    eig = np.linalg.eigvalsh(A).min(axis=-1)
    min_eig = float(eig.min())
    if min_eig <= 0 or not np.all(np.isfinite(eig)):
        k = int(np.argmin(eig))
        p = samples[k].tolist()
        return ValidationReport(False, min_eig, math.nan, p,
                                f"a(x) not positive definite at sample {p} (min eigenvalue {eig[k]:.6g})")
    bn = np.sqrt(np.einsum("ki,ki->k", B, np.linalg.solve(A, B[..., None])[..., 0]))
    k = int(np.argmax(bn))
    if bn[k] >= 1:
        p = samples[k].tolist()
        return ValidationReport(False, min_eig, float(bn[k]), p,
                                f"||beta|| = {bn[k]:.6g} >= 1 at sample {p}")
    return ValidationReport(True, min_eig, float(bn[k]))
