"""Generalized If-formula terms.

Terms are immutable and hash-consed: building the same structure twice
returns the same object, so ``==`` is identity and hashing is O(1).
Commutative operators (``+``, ``*``, ``and``, ``or``, ``xor``, ``nor``,
``nand``) keep their operands in a canonical total order.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Union

__all__ = [
    "Term", "Const", "Label", "Var", "Sym", "Bound", "Arith", "Logic",
    "Compare", "If", "Func", "Tuple", "Index", "ForAll",
    "Wildcard", "Hole", "SeqHole",
    "TRUE", "FALSE", "ZERO", "ONE", "const", "num", "word",
    "ARITH_OPS", "LOGIC_OPS", "COMPARE_OPS", "COMMUTATIVE",
    "TupleSort", "BOOL", "NUM", "LABEL", "ANY", "Sort", "parse_sort", "format_sort",
    "is_ground", "walk", "free_symbols", "symbols", "subterm", "positions",
]

ARITH_OPS = ("+", "-", "*", "/")
LOGIC_OPS = ("not", "and", "or", "xor", "nor", "nand")
COMPARE_OPS = ("=", "<>", "<", "<=", ">", ">=")
COMMUTATIVE = frozenset({"+", "*", "and", "or", "xor", "nor", "nand"})


# ---------------------------------------------------------------- sorts

BOOL = "bool"
NUM = "num"
LABEL = "label"
ANY = "any"


@dataclass(frozen=True)
class TupleSort:
    elem: "Sort"
    length: int


Sort = Union[str, TupleSort]


def format_sort(sort: Sort) -> str:
    if isinstance(sort, TupleSort):
        if sort.elem == BOOL:
            return f"bits[{sort.length}]"
        return f"tuple[{format_sort(sort.elem)}, {sort.length}]"
    return sort


def parse_sort(text: str) -> Sort:
    """Inverse of :func:`format_sort` for the simple textual forms."""
    text = text.strip()
    if text in (BOOL, NUM, LABEL, ANY):
        return text
    if text.startswith("bits[") and text.endswith("]"):
        return TupleSort(BOOL, int(text[5:-1]))
    if text.startswith("tuple[") and text.endswith("]"):
        inner, _, n = text[6:-1].rpartition(",")
        return TupleSort(parse_sort(inner), int(n))
    raise ValueError(f"unknown sort {text!r}")


# ---------------------------------------------------------------- base

_INTERN: "weakref.WeakValueDictionary[tuple, Term]" = weakref.WeakValueDictionary()


class Term:
    """Base class of every term node."""

    __slots__ = ("_key", "_hash", "_order", "_size", "__weakref__")
    rank = 99
    children: tuple = ()

    @classmethod
    def _intern(cls, key: tuple, init: Callable[["Term"], None]) -> "Term":
        full = (cls,) + key
        obj = _INTERN.get(full)
        if obj is not None:
            return obj
        obj = object.__new__(cls)
        init(obj)
        obj._key = full
        obj._hash = hash(full)
        obj._order = None
        obj._size = None
        _INTERN[full] = obj
        return obj

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return self is other

    def __ne__(self, other: object) -> bool:
        return self is not other

    def __lt__(self, other: "Term") -> bool:
        return self.order_key() < other.order_key()

    def __reduce__(self):
        return (_rebuild, (type(self), self._ctor_args()))

    def _ctor_args(self) -> tuple:
        raise NotImplementedError

    def rebuild(self, children: tuple) -> "Term":
        """Same node type and fields, new children."""
        return self

    def order_key(self) -> tuple:
        key = self._order
        if key is None:
            key = self._order = self._compute_order()
        return key

    def _compute_order(self) -> tuple:
        return (self.rank,)

    @property
    def size(self) -> int:
        n = self._size
        if n is None:
            n = self._size = 1 + sum(c.size for c in self.children)
        return n

    def __repr__(self) -> str:
        from .dsl import format_term

        return format_term(self)

    __str__ = __repr__


def _rebuild(cls, args):
    return cls(*args)


def _compound_order(t: Term, tag: str, extra: tuple = ()) -> tuple:
    return (t.rank, tag) + extra + (tuple(c.order_key() for c in t.children),)


# ---------------------------------------------------------------- atoms


class Const(Term):
    """A boolean or exact rational constant."""

    __slots__ = ("value",)
    rank = 0

    def __new__(cls, value: Union[bool, int, Fraction]):
        if isinstance(value, bool):
            kind = "B"
        elif isinstance(value, (int, Fraction)):
            kind = "Q"
            value = Fraction(value)
        else:
            raise TypeError(f"constant must be bool or rational, got {type(value).__name__}")

        def init(o):
            o.value = value

        return cls._intern((kind, value), init)

    def _ctor_args(self):
        return (self.value,)

    @property
    def is_bool(self) -> bool:
        return isinstance(self.value, bool)

    @property
    def is_num(self) -> bool:
        return not isinstance(self.value, bool)

    @property
    def domain(self) -> str:
        """Numerical domain tag: N, Z, Q or B."""
        v = self.value
        if isinstance(v, bool):
            return "B"
        if v.denominator != 1:
            return "Q"
        return "N" if v >= 0 else "Z"

    def _compute_order(self):
        if self.is_bool:
            return (0, 0, int(self.value))
        return (0, 1, self.value)


class Label(Term):
    """Enumerated symbolic constant such as ``MODE_0`` or ``INVALID_DATA``.

    Two labels are equal exactly when their names are.
    """

    __slots__ = ("name",)
    rank = 1

    def __new__(cls, name: str):
        def init(o):
            o.name = name

        return cls._intern((name,), init)

    def _ctor_args(self):
        return (self.name,)

    def _compute_order(self):
        return (1, self.name)


class Var(Term):
    """Reference ``name(n - offset)`` to a system variable, input or control."""

    __slots__ = ("name", "offset")
    rank = 3

    def __new__(cls, name: str, offset: int = 0):
        offset = int(offset)

        def init(o):
            o.name = name
            o.offset = offset

        return cls._intern((name, offset), init)

    def _ctor_args(self):
        return (self.name, self.offset)

    def _compute_order(self):
        return (3, self.name, 1, self.offset)


class Sym(Term):
    """A free symbolic input value, optionally tagged with its sort."""

    __slots__ = ("name", "sort")
    rank = 3

    def __new__(cls, name: str, sort: str = ANY):
        def init(o):
            o.name = name
            o.sort = sort

        return cls._intern((name, sort), init)

    def _ctor_args(self):
        return (self.name, self.sort)

    def _compute_order(self):
        return (3, self.name, 0, self.sort)


class Bound(Term):
    """Index variable bound by an enclosing :class:`ForAll`."""

    __slots__ = ("name",)
    rank = 2

    def __new__(cls, name: str):
        def init(o):
            o.name = name

        return cls._intern((name,), init)

    def _ctor_args(self):
        return (self.name,)

    def _compute_order(self):
        return (2, self.name)


# ---------------------------------------------------------------- compounds


def _canon(op: str, args: Iterable[Term]) -> tuple:
    args = tuple(args)
    for a in args:
        if not isinstance(a, Term):
            raise TypeError(f"operand {a!r} is not a Term")
    if op in COMMUTATIVE:
        args = tuple(sorted(args, key=Term.order_key))
    return args


class Arith(Term):
    __slots__ = ("op", "args")
    rank = 5

    def __new__(cls, op: str, args: Iterable[Term]):
        if op not in ARITH_OPS:
            raise ValueError(f"unknown arithmetic operator {op!r}")
        args = _canon(op, args)
        if not args or (op in ("/",) and len(args) != 2) or (op == "-" and len(args) > 2):
            raise ValueError(f"bad arity {len(args)} for {op!r}")

        def init(o):
            o.op = op
            o.args = args

        return cls._intern((op, args), init)

    @property
    def children(self):
        return self.args

    def rebuild(self, children):
        return Arith(self.op, children)

    def _ctor_args(self):
        return (self.op, self.args)

    def _compute_order(self):
        return _compound_order(self, "arith", (self.op,))


class Logic(Term):
    __slots__ = ("op", "args")
    rank = 5

    def __new__(cls, op: str, args: Iterable[Term]):
        if op not in LOGIC_OPS:
            raise ValueError(f"unknown logical operator {op!r}")
        args = _canon(op, args)
        if op == "not" and len(args) != 1:
            raise ValueError("not expects 1 operand")

        def init(o):
            o.op = op
            o.args = args

        return cls._intern((op, args), init)

    @property
    def children(self):
        return self.args

    def rebuild(self, children):
        return Logic(self.op, children)

    def _ctor_args(self):
        return (self.op, self.args)

    def _compute_order(self):
        return _compound_order(self, "logic", (self.op,))


class Compare(Term):
    __slots__ = ("op", "lhs", "rhs")
    rank = 5

    def __new__(cls, op: str, lhs: Term, rhs: Term):
        if op not in COMPARE_OPS:
            raise ValueError(f"unknown comparison operator {op!r}")
        _canon(op, (lhs, rhs))

        def init(o):
            o.op = op
            o.lhs = lhs
            o.rhs = rhs

        return cls._intern((op, lhs, rhs), init)

    @property
    def children(self):
        return (self.lhs, self.rhs)

    def rebuild(self, children):
        return Compare(self.op, *children)

    def _ctor_args(self):
        return (self.op, self.lhs, self.rhs)

    def _compute_order(self):
        return _compound_order(self, "compare", (self.op,))


class If(Term):
    __slots__ = ("cond", "then", "else_")
    rank = 5

    def __new__(cls, cond: Term, then: Term, else_: Term):
        _canon("if", (cond, then, else_))

        def init(o):
            o.cond = cond
            o.then = then
            o.else_ = else_

        return cls._intern((cond, then, else_), init)

    @property
    def children(self):
        return (self.cond, self.then, self.else_)

    def rebuild(self, children):
        return If(*children)

    def _ctor_args(self):
        return (self.cond, self.then, self.else_)

    def _compute_order(self):
        return _compound_order(self, "if")


class Func(Term):
    """Application of a named (library or uninterpreted) function."""

    __slots__ = ("name", "args")
    rank = 5

    def __new__(cls, name: str, args: Iterable[Term] = ()):
        args = _canon("func", args)

        def init(o):
            o.name = name
            o.args = args

        return cls._intern((name, args), init)

    @property
    def children(self):
        return self.args

    def rebuild(self, children):
        return Func(self.name, children)

    def _ctor_args(self):
        return (self.name, self.args)

    def _compute_order(self):
        return _compound_order(self, "func", (self.name,))


class Tuple(Term):
    """Fixed-length word of bits or symbols."""

    __slots__ = ("items",)
    rank = 5

    def __new__(cls, items: Iterable[Term]):
        items = _canon("tuple", items)

        def init(o):
            o.items = items

        return cls._intern((items,), init)

    @property
    def children(self):
        return self.items

    def rebuild(self, children):
        return Tuple(children)

    def _ctor_args(self):
        return (self.items,)

    def __len__(self):
        return len(self.items)

    def _compute_order(self):
        return _compound_order(self, "tuple")


class Index(Term):
    """Zero-based element selection ``base[index]``."""

    __slots__ = ("base", "index")
    rank = 5

    def __new__(cls, base: Term, index: Term):
        if isinstance(index, int):
            index = Const(index)
        _canon("index", (base, index))

        def init(o):
            o.base = base
            o.index = index

        return cls._intern((base, index), init)

    @property
    def children(self):
        return (self.base, self.index)

    def rebuild(self, children):
        return Index(*children)

    def _ctor_args(self):
        return (self.base, self.index)

    def _compute_order(self):
        return _compound_order(self, "index")


class ForAll(Term):
    """Bounded universal quantifier ``forall var in lo..hi: body`` (inclusive)."""

    __slots__ = ("var", "lo", "hi", "body")
    rank = 5

    def __new__(cls, var: str, lo: Term, hi: Term, body: Term):
        _canon("forall", (lo, hi, body))

        def init(o):
            o.var = var
            o.lo = lo
            o.hi = hi
            o.body = body

        return cls._intern((var, lo, hi, body), init)

    @property
    def children(self):
        return (self.lo, self.hi, self.body)

    def rebuild(self, children):
        return ForAll(self.var, *children)

    def _ctor_args(self):
        return (self.var, self.lo, self.hi, self.body)

    def _compute_order(self):
        return _compound_order(self, "forall", (self.var,))


# ---------------------------------------------------------------- pattern holes


class Wildcard(Term):
    __slots__ = ()
    rank = 9

    def __new__(cls):
        return cls._intern((), lambda o: None)

    def _ctor_args(self):
        return ()

    def _compute_order(self):
        return (9, 0)


class Hole(Term):
    """Named pattern variable, optionally restricted to a sort."""

    __slots__ = ("name", "sort")
    rank = 9

    def __new__(cls, name: str, sort: Union[Sort, None] = None):
        def init(o):
            o.name = name
            o.sort = sort

        return cls._intern((name, sort), init)

    def _ctor_args(self):
        return (self.name, self.sort)

    def _compute_order(self):
        return (9, 1, self.name, str(self.sort))


class SeqHole(Term):
    """Matches zero or more operands of a flattened commutative operator."""

    __slots__ = ("name",)
    rank = 9

    def __new__(cls, name: Union[str, None] = None):
        def init(o):
            o.name = name

        return cls._intern((name,), init)

    def _ctor_args(self):
        return (self.name,)

    def _compute_order(self):
        return (9, 2, self.name or "")


# ---------------------------------------------------------------- helpers

TRUE = Const(True)
FALSE = Const(False)
ZERO = Const(0)
ONE = Const(1)


def const(value) -> Const:
    return Const(value)


def num(value) -> Const:
    return Const(Fraction(value))


def word(name: str, width: int) -> Tuple:
    """A word of ``width`` fresh boolean symbols ``name_0 .. name_{width-1}``."""
    return Tuple(Sym(f"{name}_{i}", BOOL) for i in range(width))


def is_ground(t: Term) -> bool:
    if isinstance(t, (Const, Label)):
        return True
    if isinstance(t, Tuple):
        return all(is_ground(i) for i in t.items)
    return False


def walk(t: Term) -> Iterator[Term]:
    """Pre-order traversal, each distinct node once."""
    seen = set()
    stack = [t]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        yield node
        stack.extend(reversed(node.children))


def free_symbols(t: Term) -> set:
    """``(name, offset)`` pairs for every Var and Sym (offset 0) occurring in ``t``."""
    out = set()
    for node in walk(t):
        if isinstance(node, Var):
            out.add((node.name, node.offset))
        elif isinstance(node, Sym):
            out.add((node.name, 0))
    return out


def symbols(t: Term) -> list:
    """Sym nodes of ``t`` in canonical order."""
    return sorted({n for n in walk(t) if isinstance(n, Sym)}, key=Term.order_key)


def subterm(t: Term, path: tuple) -> Term:
    for i in path:
        t = t.children[i]
    return t


def positions(t: Term, path: tuple = ()) -> Iterator[tuple]:
    yield path, t
    for i, c in enumerate(t.children):
        yield from positions(c, path + (i,))
