"""Block functions of the transmitter chain.

Each function maps words (tuples of bit terms) to words and works on
symbolic bits as well as on constants: the result is built from ``xor`` and
``IF`` terms that the simplifier folds when the bits are known.

randomizer
    XOR with a reference bit list passed as the second argument.
convolutional coder
    rate 1/2, constraint length 3, generators g0 = 111 and g1 = 101, zero
    initial state, output interleaved ``x0, y0, x1, y1, ...``.
puncturing
    rate 1/2 keeps every bit; rate 2/3 keeps offsets {0, 1, 3} of each group
    of 4; rate 3/4 keeps offsets {0, 1, 3, 4} of each group of 6. A trailing
    partial group is punctured with the same offsets.
interleaver
    bit ``i`` of a word of length ``L`` moves to ``(i * s) mod L`` where
    ``s`` is the smallest integer >= 3 coprime with ``L``.
repetition
    the whole word repeated ``r`` times.
mapping
    groups of ``b`` bits (zero padded) become numeric symbols, most
    significant bit first.
"""
from __future__ import annotations

from math import gcd

from ..library import DEFAULT, Registry
from ..terms import FALSE, Arith, Const, If, Logic, Term, Tuple

__all__ = [
    "BLOCK_FUNCTIONS", "PUNCTURE_KEEP", "register_blocks", "interleave_step",
    "reference_bits", "conv_encode_bits", "randomize_bits", "puncture_bits",
    "interleave_bits", "repeat_bits", "map_bits_values",
]

PUNCTURE_KEEP = {
    "12": (2, (0, 1)),
    "23": (4, (0, 1, 3)),
    "34": (6, (0, 1, 3, 4)),
}


def reference_bits(width: int) -> tuple:
    """Reference list of the randomizer: output of the 1 + x^14 + x^15 PRBS."""
    state = [1, 0, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0]
    out = []
    for _ in range(width):
        bit = state[13] ^ state[14]
        out.append(bool(bit))
        state = [bit] + state[:-1]
    return tuple(out)


def interleave_step(length: int) -> int:
    s = 3
    while gcd(s, length) != 1:
        s += 1
    return s


# ---------------------------------------------------------------- plain bit oracles
# These operate on Python bools and define the intended behavior; the
# symbolic versions below must agree with them.


def randomize_bits(bits, ref):
    return tuple(b ^ r for b, r in zip(bits, ref))


def conv_encode_bits(bits):
    out = []
    for i, b in enumerate(bits):
        b1 = bits[i - 1] if i >= 1 else False
        b2 = bits[i - 2] if i >= 2 else False
        out.append(b ^ b1 ^ b2)
        out.append(b ^ b2)
    return tuple(out)


def puncture_bits(bits, rate: str):
    period, keep = PUNCTURE_KEEP[rate]
    return tuple(b for i, b in enumerate(bits) if i % period in keep)


def interleave_bits(bits):
    n = len(bits)
    if n == 0:
        return ()
    s = interleave_step(n)
    out = [None] * n
    for i, b in enumerate(bits):
        out[(i * s) % n] = b
    return tuple(out)


def repeat_bits(bits, r: int):
    return tuple(bits) * r


def map_bits_values(bits, b: int):
    out = []
    for k in range(0, len(bits), b):
        group = list(bits[k:k + b]) + [False] * (b - len(bits[k:k + b]))
        v = 0
        for bit in group:
            v = 2 * v + int(bit)
        out.append(v)
    return tuple(out)


# ---------------------------------------------------------------- term versions


def _word(t: Term):
    return t.items if isinstance(t, Tuple) else None


def _int(t: Term):
    if isinstance(t, Const) and t.is_num and t.value.denominator == 1:
        return int(t.value)
    return None


def _xor(*bits) -> Term:
    bits = [b for b in bits if b is not FALSE]
    if not bits:
        return FALSE
    return bits[0] if len(bits) == 1 else Logic("xor", bits)


def randomize(args):
    """XOR a word with a reference word."""
    w, ref = _word(args[0]), _word(args[1])
    if w is None or ref is None or len(w) != len(ref):
        return None
    return Tuple(_xor(b, r) for b, r in zip(w, ref))


def conv_encode(args):
    """Rate 1/2, K = 3 convolutional code (g0 = 111, g1 = 101)."""
    w = _word(args[0])
    if w is None:
        return None
    out = []
    for i, b in enumerate(w):
        b1 = w[i - 1] if i >= 1 else FALSE
        b2 = w[i - 2] if i >= 2 else FALSE
        out.append(_xor(b, b1, b2))
        out.append(_xor(b, b2))
    return Tuple(out)


def _puncture(rate):
    period, keep = PUNCTURE_KEEP[rate]

    def fn(args):
        w = _word(args[0])
        if w is None:
            return None
        return Tuple(b for i, b in enumerate(w) if i % period in keep)

    fn.__doc__ = f"Puncturing for code rate {rate[0]}/{rate[1]}."
    return fn


def interleave(args):
    """Fixed stride permutation of a word."""
    w = _word(args[0])
    if w is None:
        return None
    n = len(w)
    if n == 0:
        return Tuple(())
    s = interleave_step(n)
    out = [None] * n
    for i, b in enumerate(w):
        out[(i * s) % n] = b
    return Tuple(out)


def repeat(args):
    """Repeat a word ``r`` times."""
    w, r = _word(args[0]), _int(args[1])
    if w is None or r is None or r < 1:
        return None
    return Tuple(w * r)


def map_bits(args):
    """Pack groups of ``b`` bits into numeric symbols, MSB first."""
    w, b = _word(args[0]), _int(args[1])
    if w is None or b is None or b < 1:
        return None
    out = []
    for k in range(0, len(w), b):
        group = list(w[k:k + b]) + [FALSE] * (b - len(w[k:k + b]))
        terms = []
        for j, bit in enumerate(group):
            weight = 2 ** (b - 1 - j)
            ind = If(bit, Const(1), Const(0))
            terms.append(ind if weight == 1 else Arith("*", (Const(weight), ind)))
        out.append(terms[0] if len(terms) == 1 else Arith("+", terms))
    return Tuple(out)


BLOCK_FUNCTIONS = {
    "randomize": randomize,
    "conv_encode": conv_encode,
    "punct_12": _puncture("12"),
    "punct_23": _puncture("23"),
    "punct_34": _puncture("34"),
    "interleave": interleave,
    "repeat": repeat,
    "map_bits": map_bits,
}


def register_blocks(registry: Registry = DEFAULT) -> Registry:
    for name, fn in BLOCK_FUNCTIONS.items():
        if name not in registry:
            registry.register(name, fn, symbolic=True)
    return registry


register_blocks()
