"""Text format for systems, rule sets, properties, scenarios and jobs.

The grammar is LL(2) and the parser never backtracks. Every syntax error
becomes a :class:`DslError` carrying line/column diagnostics with the set of
tokens that would have been accepted; no other exception escapes
:func:`parse`, whatever bytes it is given.

Example::

    labels MODE_0, MODE_1, INVALID_DATA;

    system randomizer {
      inputs RAND_IN: bits[8];
      controls RAND_CTRL: label;
      vars RAND_OUT: bits[8];
      outputs RAND_OUT;
      eq RAND_OUT(n) = IF(RAND_CTRL(n) = MODE_0, RAND_IN(n),
                          IF(RAND_CTRL(n) = MODE_1, randFunc_01(RAND_IN(n)), INVALID_DATA));
    }
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Union

from .decls import CATEGORIES, JobDecl, Property, RulesetDecl, Scenario
from .system import Equation, SreSystem
from .terms import (
    ANY, LOGIC_OPS, Arith, Bound, Compare, Const, ForAll, Func, Hole, If, Index, Label,
    Logic, SeqHole, Sym, Term, Tuple, TupleSort, Var, Wildcard, format_sort,
)

__all__ = [
    "SourceUnit", "DslError", "SyntaxDiagnostic", "parse", "parse_term", "parse_rules",
    "serialize", "format_term", "load", "KEYWORDS",
]

KEYWORDS = frozenset({
    "system", "ruleset", "property", "scenario", "job", "import", "labels",
    "IF", "True", "False", "Rational", "forall", "in", "n",
}) | frozenset(LOGIC_OPS)


@dataclass(frozen=True)
class SyntaxDiagnostic:
    line: int
    col: int
    message: str
    expected: tuple = ()

    def __str__(self) -> str:
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        return f"{self.line}:{self.col}: {self.message}{exp}"


class DslError(Exception):
    def __init__(self, diagnostics, path: Optional[str] = None):
        self.diagnostics = list(diagnostics)
        self.path = path
        prefix = f"{path}:" if path else ""
        super().__init__("\n".join(prefix + str(d) for d in self.diagnostics))


@dataclass
class SourceUnit:
    """The declarations of one file, in source order."""

    imports: tuple = ()
    labels: tuple = ()
    systems: dict = field(default_factory=dict)
    rulesets: dict = field(default_factory=dict)
    properties: dict = field(default_factory=dict)
    scenarios: dict = field(default_factory=dict)
    jobs: dict = field(default_factory=dict)
    path: Optional[str] = field(default=None, compare=False)
    spans: dict = field(default_factory=dict, compare=False)

    def merge(self, other: "SourceUnit") -> "SourceUnit":
        out = SourceUnit(
            imports=self.imports,
            labels=tuple(dict.fromkeys(other.labels + self.labels)),
            path=self.path,
        )
        for attr in ("systems", "rulesets", "properties", "scenarios", "jobs"):
            merged = dict(getattr(other, attr))
            merged.update(getattr(self, attr))
            setattr(out, attr, merged)
        out.spans = {**other.spans, **self.spans}
        return out


# ---------------------------------------------------------------- lexer

_PUNCT = [
    "...", "..", "=>", "->", "==", "!=", "<>", "<=", ">=",
    "(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "<", ">", "+", "-", "*", "/",
    "$", "?",
]


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, INT, STRING, EOF or the punctuation text itself
    text: str
    line: int
    col: int

    def show(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        return repr(self.text)


def _ident_start(c: str) -> bool:
    return c.isascii() and (c.isalpha() or c == "_")


def _ident_char(c: str) -> bool:
    return c.isascii() and (c.isalnum() or c == "_")


def tokenize(text: str) -> list:
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if c.isascii() and c.isdigit():
            j = i
            while j < n and text[j].isascii() and text[j].isdigit():
                j += 1
            toks.append(Token("INT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if _ident_start(c):
            j = i + 1
            while j < n:
                if _ident_char(text[j]):
                    j += 1
                elif text[j] == "." and j + 1 < n and _ident_start(text[j + 1]):
                    j += 1
                else:
                    break
            word = text[i:j]
            toks.append(Token("_" if word == "_" else "IDENT", word, line, start_col))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                raise DslError([SyntaxDiagnostic(line, start_col, "unterminated string")])
            toks.append(Token("STRING", text[i + 1:j], line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(Token(p, p, line, start_col))
                i += len(p)
                col += len(p)
                break
        else:
            raise DslError([SyntaxDiagnostic(line, start_col, f"unexpected character {c!r}")])
    toks.append(Token("EOF", "", line, col))
    return toks


# ---------------------------------------------------------------- parser

_CMP_TOKENS = {"=": "=", "==": "=", "<>": "<>", "!=": "<>", "<": "<", "<=": "<=",
               ">": ">", ">=": ">="}
_PRIMARY_START = ("INT", "IDENT", "(", "[", "$", "?", "_", "...", "-")


class _Parser:
    def __init__(self, tokens: list):
        self.toks = tokens
        self.pos = 0
        self.bound: list = []

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, kind: str, text: str = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_word(self, word: str) -> bool:
        return self.tok.kind == "IDENT" and self.tok.text == word

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.pos += 1
        return t

    def fail(self, message: str, expected=(), tok: Token = None):
        tok = tok or self.tok
        raise DslError([SyntaxDiagnostic(tok.line, tok.col, message, tuple(expected))])

    def expect(self, kind: str, what: str = None) -> Token:
        if self.tok.kind != kind:
            label = what or kind
            self.fail(f"expected {label}, found {self.tok.show()}", (label,))
        return self.advance()

    def expect_word(self, word: str) -> Token:
        if not self.at_word(word):
            self.fail(f"expected '{word}', found {self.tok.show()}", (word,))
        return self.advance()

    def ident(self, what: str = "identifier") -> str:
        return self.expect("IDENT", what).text

    def integer(self) -> int:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        v = int(self.expect("INT", "integer").text)
        return -v if neg else v

    # -- sorts
    def sort(self):
        name = self.ident("sort")
        if name in ("bool", "num", "label", "any"):
            return name
        if name == "bits":
            self.expect("[")
            n = int(self.expect("INT", "integer").text)
            self.expect("]")
            return TupleSort("bool", n)
        if name == "tuple":
            self.expect("[")
            elem = self.sort()
            self.expect(",")
            n = int(self.expect("INT", "integer").text)
            self.expect("]")
            return TupleSort(elem, n)
        self.fail(f"unknown sort {name!r}", ("bool", "num", "label", "any", "bits", "tuple"),
                  self.toks[self.pos - 1])

    # -- terms
    def expr(self) -> Term:
        if self.at_word("forall"):
            return self.forall()
        return self.or_level()

    def forall(self) -> Term:
        self.advance()
        var = self.ident("index variable")
        self.expect_word("in")
        lo = self.sum()
        self.expect("..")
        hi = self.sum()
        self.expect(":")
        self.bound.append(var)
        try:
            body = self.expr()
        finally:
            self.bound.pop()
        return ForAll(var, lo, hi, body)

    def _infix_chain(self, op: str, sub) -> Term:
        items = [sub()]
        while self.at_word(op):
            self.advance()
            items.append(sub())
        return items[0] if len(items) == 1 else Logic(op, items)

    def or_level(self) -> Term:
        return self._infix_chain("or", self.xor_level)

    def xor_level(self) -> Term:
        return self._infix_chain("xor", self.and_level)

    def and_level(self) -> Term:
        return self._infix_chain("and", self.not_level)

    def not_level(self) -> Term:
        if self.at_word("not") and self.peek().kind != "(":
            self.advance()
            return Logic("not", (self.not_level(),))
        return self.comparison()

    def comparison(self) -> Term:
        lhs = self.sum()
        op = _CMP_TOKENS.get(self.tok.kind)
        if op is None:
            return lhs
        self.advance()
        rhs = self.sum()
        if self.tok.kind in _CMP_TOKENS:
            self.fail("comparisons do not chain; add parentheses")
        return Compare(op, lhs, rhs)

    def _chain(self, ops: tuple, sub) -> Term:
        cur = sub()
        acc_op, acc = None, [cur]
        while self.tok.kind in ops:
            op = self.advance().kind
            rhs = sub()
            if op == acc_op:
                acc.append(rhs)
                continue
            cur = Arith(acc_op, acc) if acc_op else acc[0]
            if op in ("+", "*"):
                acc_op, acc = op, [cur, rhs]
            else:
                acc_op, acc = None, [Arith(op, (cur, rhs))]
        return Arith(acc_op, acc) if acc_op else acc[0]

    def sum(self) -> Term:
        return self._chain(("+", "-"), self.product)

    def product(self) -> Term:
        return self._chain(("*", "/"), self.unary)

    def unary(self) -> Term:
        if self.at("-") and self.peek().kind != "INT":
            self.advance()
            return Arith("-", (self.unary(),))
        return self.postfix()

    def postfix(self) -> Term:
        t = self.primary()
        if isinstance(t, SeqHole):
            return t
        while self.at("["):
            self.advance()
            idx = self.expr()
            self.expect("]")
            t = Index(t, idx)
        return t

    def args(self) -> list:
        self.expect("(")
        out = []
        if not self.at(")"):
            out.append(self.expr())
            while self.at(","):
                self.advance()
                out.append(self.expr())
        self.expect(")", "')'")
        return out

    def primary(self) -> Term:
        t = self.tok
        k = t.kind
        if k == "INT":
            self.advance()
            return Const(int(t.text))
        if k == "-":
            self.advance()
            return Const(-int(self.expect("INT", "integer").text))
        if k == "(":
            self.advance()
            inner = self.expr()
            self.expect(")", "')'")
            return inner
        if k == "[":
            self.advance()
            items = []
            if not self.at("]"):
                items.append(self.expr())
                while self.at(","):
                    self.advance()
                    items.append(self.expr())
            self.expect("]", "']'")
            return Tuple(items)
        if k == "$":
            self.advance()
            name = self.ident("symbol name")
            sort = ANY
            if self.at(":"):
                self.advance()
                sort = self.sort()
                if isinstance(sort, TupleSort):
                    self.fail("symbols carry scalar sorts only", tok=self.toks[self.pos - 1])
            return Sym(name, sort)
        if k == "?":
            self.advance()
            name = self.ident("pattern variable")
            sort = None
            if self.at(":"):
                self.advance()
                sort = self.sort()
            return Hole(name, sort)
        if k == "_":
            self.advance()
            return Wildcard()
        if k == "...":
            self.advance()
            name = None
            if self.at("[") and self.peek().kind == "IDENT" and self.peek(2).kind == "]":
                self.advance()
                name = self.advance().text
                self.advance()
            return SeqHole(name)
        if k == "IDENT":
            return self.named()
        self.fail(f"expected a term, found {t.show()}", _PRIMARY_START)

    def named(self) -> Term:
        t = self.advance()
        name = t.text
        if name == "True":
            return Const(True)
        if name == "False":
            return Const(False)
        if name == "forall":
            self.pos -= 1
            return self.forall()
        if not self.at("("):
            if name in self.bound:
                return Bound(name)
            if name in ("IF", "Rational") or name in LOGIC_OPS:
                self.fail(f"'{name}' must be applied to arguments", ("(",))
            return Label(name)
        # X(n) / X(n-k) references
        if self.peek().kind == "IDENT" and self.peek().text == "n":
            after = self.peek(2).kind
            if after == ")":
                self.pos += 3
                return Var(name, 0)
            if after == "-" and self.peek(3).kind == "INT" and self.peek(4).kind == ")":
                off = int(self.peek(3).text)
                self.pos += 5
                return Var(name, off)
        args = self.args()
        if name == "IF":
            if len(args) != 3:
                self.fail(f"IF expects 3 arguments, got {len(args)}", tok=t)
            return If(*args)
        if name in LOGIC_OPS:
            if name == "not" and len(args) != 1:
                self.fail(f"not expects 1 argument, got {len(args)}", tok=t)
            return Logic(name, args)
        if name == "Rational":
            if (len(args) != 2 or not all(isinstance(a, Const) and a.is_num for a in args)
                    or args[1].value == 0):
                self.fail("Rational expects two integer literals, denominator non-zero", tok=t)
            return Const(args[0].value / args[1].value)
        return Func(name, args)

    # -- declarations
    def unit(self) -> SourceUnit:
        u = SourceUnit()
        imports, labels = [], []
        while not self.at("EOF"):
            t = self.tok
            where = (t.line, t.col)
            if self.at_word("import"):
                self.advance()
                imports.append(self.expect("STRING", "string").text)
                self.expect(";", "';'")
            elif self.at_word("labels"):
                self.advance()
                labels.append(self.ident("label"))
                while self.at(","):
                    self.advance()
                    labels.append(self.ident("label"))
                self.expect(";", "';'")
            elif self.at_word("system"):
                s = self.system(where)
                self._add(u.systems, s.name, s, t)
                u.spans[("system", s.name)] = where
            elif self.at_word("ruleset"):
                r = self.ruleset(where)
                self._add(u.rulesets, r.name, r, t)
                u.spans[("ruleset", r.name)] = where
            elif self.at_word("property"):
                p = self.property(where)
                self._add(u.properties, p.name, p, t)
                u.spans[("property", p.name)] = where
            elif self.at_word("scenario"):
                s = self.scenario(where)
                self._add(u.scenarios, s.name, s, t)
                u.spans[("scenario", s.name)] = where
            elif self.at_word("job"):
                j = self.job(where)
                self._add(u.jobs, j.name, j, t)
                u.spans[("job", j.name)] = where
            else:
                self.fail(f"expected a declaration, found {t.show()}",
                          ("import", "labels", "system", "ruleset", "property", "scenario", "job"))
        u.imports = tuple(imports)
        u.labels = tuple(labels)
        return u

    def _add(self, table: dict, name: str, value, tok: Token):
        if name in table:
            self.fail(f"duplicate declaration {name!r}", tok=tok)
        table[name] = value

    def _decl_list(self) -> dict:
        out = {}
        while True:
            name_tok = self.expect("IDENT", "identifier")
            sort = ANY
            if self.at(":"):
                self.advance()
                sort = self.sort()
            if name_tok.text in out:
                self.fail(f"duplicate declaration {name_tok.text!r}", tok=name_tok)
            out[name_tok.text] = sort
            if not self.at(","):
                break
            self.advance()
        self.expect(";", "';'")
        return out

    def system(self, where) -> SreSystem:
        self.advance()
        name = self.ident("system name")
        self.expect("{", "'{'")
        inputs, controls, variables = {}, {}, {}
        outputs, equations, initial = [], {}, {}
        sections = ("inputs", "controls", "vars", "outputs", "init", "eq")
        while not self.at("}"):
            t = self.tok
            if self.at_word("inputs"):
                self.advance()
                inputs.update(self._decl_list())
            elif self.at_word("controls"):
                self.advance()
                controls.update(self._decl_list())
            elif self.at_word("vars"):
                self.advance()
                variables.update(self._decl_list())
            elif self.at_word("outputs"):
                self.advance()
                outputs.append(self.ident())
                while self.at(","):
                    self.advance()
                    outputs.append(self.ident())
                self.expect(";", "';'")
            elif self.at_word("init"):
                self.advance()
                target = self.ident("variable")
                self.expect("(")
                when = self.integer()
                self.expect(")", "')'")
                self.expect("=", "'='")
                body = self.expr()
                self.expect(";", "';'")
                if (target, when) in initial:
                    self.fail(f"duplicate initial condition {target}({when})", tok=t)
                initial[(target, when)] = body
            elif self.at_word("eq"):
                self.advance()
                target = self.ident("variable")
                self.expect("(")
                self.expect_word("n")
                self.expect(")", "')'")
                self.expect("=", "'='")
                body = self.expr()
                self.expect(";", "';'")
                if target in equations:
                    self.fail(f"duplicate equation for {target}", tok=t)
                equations[target] = Equation(target, body, (t.line, t.col))
            else:
                self.fail(f"expected a system section, found {t.show()}", sections + ("}",))
        self.expect("}")
        return SreSystem(name, inputs, controls, variables, tuple(outputs), equations,
                         initial, span=where)

    def rule_list(self, stop: str) -> list:
        rules = []
        while not self.at(stop):
            pat = self.expr()
            self.expect("=>", "'=>'")
            rep = self.expr()
            if self.at(";"):
                self.advance()
            rules.append((pat, rep))
        return rules

    def ruleset(self, where) -> RulesetDecl:
        self.advance()
        name = self.ident("ruleset name")
        self.expect("{", "'{'")
        rules = self.rule_list("}")
        self.expect("}")
        return RulesetDecl(name, tuple(rules), where)

    def _paren_names(self) -> tuple:
        self.expect("(")
        names = []
        if not self.at(")"):
            names.append(self.ident())
            while self.at(","):
                self.advance()
                names.append(self.ident())
        self.expect(")", "')'")
        return tuple(names)

    def property(self, where) -> Property:
        self.advance()
        name = self.ident("property name")
        cat_tok = self.expect("IDENT", "category")
        cat = cat_tok.text.capitalize()
        if cat not in CATEGORIES:
            self.fail(f"unknown category {cat_tok.text!r}", CATEGORIES, cat_tok)
        scope, scen = (), ()
        while self.at_word("scope") or self.at_word("scenarios"):
            which = self.advance().text
            names = self._paren_names()
            if which == "scope":
                scope = names
            else:
                scen = names
        self.expect("{", "'{'")
        body = self.expr()
        if self.at(";"):
            self.advance()
        self.expect("}", "'}'")
        return Property(name, cat, body, scope, scen, where)

    def scenario(self, where) -> Scenario:
        self.advance()
        name = self.ident("scenario name")
        self.expect("{", "'{'")
        bindings = {}
        while not self.at("}"):
            t = self.tok
            ctrl = self.ident("control")
            self.expect("=", "'='")
            value = self.expr()
            self.expect(";", "';'")
            if ctrl in bindings:
                self.fail(f"control {ctrl} bound twice", tok=t)
            bindings[ctrl] = value
        self.expect("}")
        return Scenario(name, bindings, where)

    def job(self, where) -> JobDecl:
        self.advance()
        name = self.ident("job name")
        self.expect("{", "'{'")
        f = dict(spec=None, impl=None, spec_path=None, impl_path=None, k_spec=1, k_imp=1)
        corr, scen, compare, inputs, rules = {}, [], [], [], []
        keys = ("spec", "impl", "k_spec", "k_imp", "map", "scenarios", "compare",
                "inputs", "rules")
        while not self.at("}"):
            t = self.tok
            key = self.ident("job field")
            if key in ("spec", "impl"):
                f[key] = self.ident("system name")
                if self.at_word("from"):
                    self.advance()
                    f[key + "_path"] = self.expect("STRING", "string").text
            elif key in ("k_spec", "k_imp"):
                k = int(self.expect("INT", "integer").text)
                if k < 1:
                    self.fail(f"{key} must be at least 1", tok=t)
                f[key] = k
            elif key == "map":
                a = self.ident()
                self.expect("->", "'->'")
                corr[a] = self.ident()
            elif key == "compare":
                a = self.ident()
                self.expect_word("with")
                compare.append((a, self.ident()))
            elif key in ("scenarios", "inputs", "rules"):
                target = {"scenarios": scen, "inputs": inputs, "rules": rules}[key]
                target.append(self.ident())
                while self.at(","):
                    self.advance()
                    target.append(self.ident())
            else:
                self.fail(f"unknown job field {key!r}", keys, t)
            self.expect(";", "';'")
        self.expect("}")
        for key in ("spec", "impl"):
            if f[key] is None:
                self.fail(f"job {name} lacks a '{key}' line")
        return JobDecl(name, f["spec"], f["impl"], f["spec_path"], f["impl_path"],
                       f["k_spec"], f["k_imp"], corr, tuple(scen), tuple(compare),
                       tuple(inputs), tuple(rules), where)


def _decode(text: Union[str, bytes]) -> str:
    if isinstance(text, (bytes, bytearray)):
        try:
            return bytes(text).decode("utf-8")
        except UnicodeDecodeError as e:
            prefix = bytes(text[:e.start])
            line = prefix.count(b"\n") + 1
            col = e.start - (prefix.rfind(b"\n") + 1) + 1
            raise DslError([SyntaxDiagnostic(line, col, "invalid UTF-8")]) from None
    return text


def _run(text, fn, path=None):
    try:
        p = _Parser(tokenize(_decode(text)))
        result = fn(p)
        if not p.at("EOF"):
            p.fail(f"unexpected {p.tok.show()} after end of input", ("end of input",))
        return result
    except DslError as e:
        e.path = path
        raise DslError(e.diagnostics, path) from None
    except RecursionError:
        raise DslError([SyntaxDiagnostic(1, 1, "nesting too deep")], path) from None
    except (ValueError, TypeError) as e:
        # constructor rejections such as a bad operator arity
        raise DslError([SyntaxDiagnostic(1, 1, str(e))], path) from None


def parse(text: Union[str, bytes], path: Optional[str] = None) -> SourceUnit:
    """Parse a whole file. Raises :class:`DslError` with diagnostics."""
    unit = _run(text, lambda p: p.unit(), path)
    unit.path = path
    return unit


def parse_term(text: Union[str, bytes], bound=()) -> Term:
    def go(p):
        p.bound.extend(bound)
        return p.expr()

    return _run(text, go)


def parse_rules(text: Union[str, bytes], name: str = "user"):
    """A rule file: ``pattern => replacement`` entries, optionally ``;``-terminated."""
    rules = _run(text, lambda p: p.rule_list("EOF"))
    return RulesetDecl(name, tuple(rules)).to_ruleset()


def load(path: str, _seen=None) -> SourceUnit:
    """Parse ``path`` and merge every imported file (relative to it)."""
    path = os.path.abspath(path)
    seen = _seen if _seen is not None else set()
    if path in seen:
        return SourceUnit(path=path)
    seen.add(path)
    with open(path, "rb") as fh:
        unit = parse(fh.read(), path)
    for imp in unit.imports:
        other = load(os.path.join(os.path.dirname(path), imp), seen)
        unit = unit.merge(other)
    return unit


# ---------------------------------------------------------------- serializer


def _fmt_const(c: Const) -> str:
    v = c.value
    if isinstance(v, bool):
        return "True" if v else "False"
    if v.denominator == 1:
        return str(v.numerator)
    return f"Rational({v.numerator}, {v.denominator})"


def _needs_parens_in_sum(t: Term) -> bool:
    if isinstance(t, Arith):
        return t.op in ("+", "-") and len(t.args) != 1
    return isinstance(t, (Compare, ForAll))


def _needs_parens_in_product(t: Term) -> bool:
    if isinstance(t, Arith):
        return len(t.args) != 1
    return isinstance(t, (Compare, ForAll))


def format_term(t: Term) -> str:
    """Canonical DSL text of a term."""
    out: list = []
    _fmt(t, out)
    return "".join(out)


def _fmt(t: Term, out: list):
    if isinstance(t, Const):
        out.append(_fmt_const(t))
    elif isinstance(t, (Label, Bound)):
        out.append(t.name)
    elif isinstance(t, Var):
        out.append(f"{t.name}(n)" if t.offset == 0 else f"{t.name}(n-{t.offset})")
    elif isinstance(t, Sym):
        out.append("$" + t.name + ("" if t.sort == ANY else ":" + format_sort(t.sort)))
    elif isinstance(t, Arith):
        if t.op == "-" and len(t.args) == 1:
            out.append("-(")
            _fmt(t.args[0], out)
            out.append(")")
            return
        wrap = _needs_parens_in_sum if t.op in ("+", "-") else _needs_parens_in_product
        for i, a in enumerate(t.args):
            if i:
                out.append(f" {t.op} ")
            # the right operand of a binary - or / is never flattened on parse
            w = wrap(a) or (i and t.op in ("-", "/") and isinstance(a, Arith)
                            and len(a.args) != 1 and (t.op == "/" or a.op in ("+", "-")))
            if w:
                out.append("(")
            _fmt(a, out)
            if w:
                out.append(")")
    elif isinstance(t, Logic):
        out.append(t.op + "(")
        _fmt_args(t.args, out)
        out.append(")")
    elif isinstance(t, Compare):
        for i, a in enumerate((t.lhs, t.rhs)):
            if i:
                out.append(f" {t.op} ")
            w = isinstance(a, (Compare, ForAll))
            if w:
                out.append("(")
            _fmt(a, out)
            if w:
                out.append(")")
    elif isinstance(t, If):
        out.append("IF(")
        _fmt_args(t.children, out)
        out.append(")")
    elif isinstance(t, Func):
        out.append(t.name + "(")
        _fmt_args(t.args, out)
        out.append(")")
    elif isinstance(t, Tuple):
        out.append("[")
        for i, a in enumerate(t.items):
            if i:
                out.append(",")
            _fmt(a, out)
        out.append("]")
    elif isinstance(t, Index):
        b = t.base
        w = isinstance(b, (Arith, Compare, ForAll, SeqHole))
        if w:
            out.append("(")
        _fmt(b, out)
        if w:
            out.append(")")
        out.append("[")
        _fmt(t.index, out)
        out.append("]")
    elif isinstance(t, ForAll):
        out.append(f"forall {t.var} in ")
        for i, a in enumerate((t.lo, t.hi)):
            if i:
                out.append("..")
            w = isinstance(a, (Compare, ForAll))
            if w:
                out.append("(")
            _fmt(a, out)
            if w:
                out.append(")")
        out.append(": ")
        _fmt(t.body, out)
    elif isinstance(t, Wildcard):
        out.append("_")
    elif isinstance(t, Hole):
        out.append("?" + t.name + ("" if t.sort is None else ":" + format_sort(t.sort)))
    elif isinstance(t, SeqHole):
        out.append("..." + (f"[{t.name}]" if t.name else ""))
    else:  # pragma: no cover
        raise TypeError(f"cannot format {type(t).__name__}")


def _fmt_args(args, out):
    for i, a in enumerate(args):
        if i:
            out.append(", ")
        _fmt(a, out)


def _fmt_decls(decls: dict) -> str:
    parts = []
    for name, sort in decls.items():
        parts.append(name if sort == ANY else f"{name}: {format_sort(sort)}")
    return ", ".join(parts)


def _serialize_system(s: SreSystem) -> list:
    lines = [f"system {s.name} {{"]
    for key, decls in (("inputs", s.inputs), ("controls", s.controls), ("vars", s.variables)):
        if decls:
            lines.append(f"  {key} {_fmt_decls(decls)};")
    if s.outputs:
        lines.append(f"  outputs {', '.join(s.outputs)};")
    for (name, t), body in s.initial.items():
        lines.append(f"  init {name}({t}) = {format_term(body)};")
    for name, eq in s.equations.items():
        lines.append(f"  eq {name}(n) = {format_term(eq.body)};")
    lines.append("}")
    return lines


def serialize(unit: SourceUnit) -> str:
    """Deterministic text of ``unit``; ``parse(serialize(u)) == u``."""
    lines = []
    for imp in unit.imports:
        lines.append(f'import "{imp}";')
    if unit.labels:
        lines.append(f"labels {', '.join(unit.labels)};")
    for s in unit.systems.values():
        lines.append("")
        lines.extend(_serialize_system(s))
    for r in unit.rulesets.values():
        lines.append("")
        lines.append(f"ruleset {r.name} {{")
        for pat, rep in r.rules:
            lines.append(f"  {format_term(pat)} => {format_term(rep)};")
        lines.append("}")
    for sc in unit.scenarios.values():
        lines.append("")
        lines.append(f"scenario {sc.name} {{")
        for ctrl, value in sc.bindings.items():
            lines.append(f"  {ctrl} = {format_term(value)};")
        lines.append("}")
    for p in unit.properties.values():
        lines.append("")
        head = f"property {p.name} {p.category}"
        if p.scope:
            head += f" scope ({', '.join(p.scope)})"
        if p.scenarios:
            head += f" scenarios ({', '.join(p.scenarios)})"
        lines.append(head + " {")
        lines.append(f"  {format_term(p.body)}")
        lines.append("}")
    for j in unit.jobs.values():
        lines.append("")
        lines.append(f"job {j.name} {{")
        for key in ("spec", "impl"):
            path = getattr(j, key + "_path")
            lines.append(f"  {key} {getattr(j, key)}" + (f' from "{path}"' if path else "") + ";")
        lines.append(f"  k_spec {j.k_spec};")
        lines.append(f"  k_imp {j.k_imp};")
        for a, b in j.correspondence.items():
            lines.append(f"  map {a} -> {b};")
        for a, b in j.compare:
            lines.append(f"  compare {a} with {b};")
        for key in ("scenarios", "inputs", "rules"):
            vals = getattr(j, key)
            if vals:
                lines.append(f"  {key} {', '.join(vals)};")
        lines.append("}")
    text = "\n".join(lines).lstrip("\n")
    return text + "\n" if text else ""
