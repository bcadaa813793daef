"""Process syntax: surface grammar, the binder-free internal representation, and
the translation between them.

Internally binders are de Bruijn indices (index 0 is the innermost binder), so
alpha-equivalence is plain structural equality.  Free names come in two kinds:
scoped constants with a level (``Nabla``) and instantiable variables with a
level ceiling (``Eigen``).  The parser leaves free names as ``Free``
placeholders which ``encode`` resolves against a quantifier prefix.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# --------------------------------------------------------------------------- names


@dataclass(frozen=True)
class Bound:
    """de Bruijn index pointing at an enclosing binder (0 = innermost)."""

    index: int

    def __repr__(self) -> str:
        return f"Bound({self.index})"


@dataclass(frozen=True)
class Nabla:
    """Scoped fresh constant; levels start at 1 and grow inward."""

    level: int

    def __repr__(self) -> str:
        return f"Nabla({self.level})"


@dataclass(frozen=True)
class Eigen:
    """Instantiable name variable; may only equal nabla levels <= ceiling."""

    id: int
    ceiling: int

    def __repr__(self) -> str:
        return f"Eigen({self.id},c{self.ceiling})"


@dataclass(frozen=True)
class Free:
    """Named placeholder produced by the parser; resolved by encode()."""

    ident: str

    def __repr__(self) -> str:
        return f"Free({self.ident!r})"


Name = Bound | Nabla | Eigen | Free

# ----------------------------------------------------------------------- processes


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class TauPref:
    cont: "Process"


@dataclass(frozen=True)
class Out:
    ch: Name
    obj: Name
    cont: "Process"


@dataclass(frozen=True)
class In:
    ch: Name
    body: "Process"  # one binder deep


@dataclass(frozen=True)
class Match:
    left: Name
    right: Name
    cont: "Process"


@dataclass(frozen=True)
class Sum:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class Nu:
    body: "Process"  # one binder deep


@dataclass(frozen=True)
class Bang:
    cont: "Process"


Process = Nil | TauPref | Out | In | Match | Sum | Par | Nu | Bang

NIL = Nil()

# -------------------------------------------------------------------------- actions


@dataclass(frozen=True)
class Tau:
    pass


@dataclass(frozen=True)
class FreeOut:
    ch: Name
    obj: Name


@dataclass(frozen=True)
class FreeIn:
    # Representable for completeness of the action sort; the late transition
    # system never emits it and the modal checker rejects formulas over it.
    ch: Name
    obj: Name


@dataclass(frozen=True)
class BoundOut:
    ch: Name


@dataclass(frozen=True)
class BoundIn:
    ch: Name


Action = Tau | FreeOut | FreeIn | BoundOut | BoundIn

TAU = Tau()

# ------------------------------------------------------------------- name traversal


def map_names(term, f, depth: int = 0):
    """Rebuild ``term`` (Process or Action) applying ``f(name, depth)`` to every
    name occurrence, where ``depth`` counts binders crossed."""
    match term:
        case Nil():
            return term
        case TauPref(cont):
            return TauPref(map_names(cont, f, depth))
        case Out(ch, obj, cont):
            return Out(f(ch, depth), f(obj, depth), map_names(cont, f, depth))
        case In(ch, body):
            return In(f(ch, depth), map_names(body, f, depth + 1))
        case Match(left, right, cont):
            return Match(f(left, depth), f(right, depth), map_names(cont, f, depth))
        case Sum(left, right):
            return Sum(map_names(left, f, depth), map_names(right, f, depth))
        case Par(left, right):
            return Par(map_names(left, f, depth), map_names(right, f, depth))
        case Nu(body):
            return Nu(map_names(body, f, depth + 1))
        case Bang(cont):
            return Bang(map_names(cont, f, depth))
        case Tau():
            return term
        case FreeOut(ch, obj):
            return FreeOut(f(ch, depth), f(obj, depth))
        case FreeIn(ch, obj):
            return FreeIn(f(ch, depth), f(obj, depth))
        case BoundOut(ch):
            return BoundOut(f(ch, depth))
        case BoundIn(ch):
            return BoundIn(f(ch, depth))
        case _:
            raise TypeError(f"not a process or action: {term!r}")


def open_abs(body, name: Name):
    """Instantiate a one-binder-deep term: the dangling index becomes ``name``
    and deeper dangling indices shift down by one."""

    def f(n, d):
        match n:
            case Bound(i) if i == d:
                return name
            case Bound(i) if i > d:
                return Bound(i - 1)
            case _:
                return n

    return map_names(body, f)


def close_abs(term, name: Name):
    """Abstract ``term`` over ``name``: occurrences of ``name`` become the new
    innermost dangling index and existing dangling indices shift up by one."""

    def f(n, d):
        match n:
            case Bound(i) if i >= d:
                return Bound(i + 1)
            case _ if n == name:
                return Bound(d)
            case _:
                return n

    return map_names(term, f)


def free_names(term) -> frozenset:
    """All Nabla/Eigen occurrences of a Process, Action or Name."""
    acc: set = set()

    def f(n, _d):
        if isinstance(n, (Nabla, Eigen)):
            acc.add(n)
        return n

    if isinstance(term, (Bound, Nabla, Eigen, Free)):
        f(term, 0)
    else:
        map_names(term, f)
    return frozenset(acc)


def alpha_eq(p, q) -> bool:
    """With de Bruijn binders, alpha-equivalence is structural equality."""
    return p == q


def contains_bang(p: Process) -> bool:
    match p:
        case Bang(_):
            return True
        case Nil():
            return False
        case TauPref(cont) | Out(_, _, cont) | Match(_, _, cont):
            return contains_bang(cont)
        case In(_, body) | Nu(body):
            return contains_bang(body)
        case Sum(left, right) | Par(left, right):
            return contains_bang(left) or contains_bang(right)
    raise TypeError(f"not a process: {p!r}")


def prefix_count(p: Process) -> int:
    """Number of action prefixes (tau/in/out); strictly decreases along
    Bang-free transitions."""
    match p:
        case Nil():
            return 0
        case TauPref(cont):
            return 1 + prefix_count(cont)
        case Out(_, _, cont):
            return 1 + prefix_count(cont)
        case In(_, body):
            return 1 + prefix_count(body)
        case Match(_, _, cont):
            return prefix_count(cont)
        case Sum(left, right) | Par(left, right):
            return prefix_count(left) + prefix_count(right)
        case Nu(body):
            return prefix_count(body)
        case Bang(cont):
            return prefix_count(cont)
    raise TypeError(f"not a process: {p!r}")


def max_nabla_level(term) -> int:
    return max((n.level for n in free_names(term) if isinstance(n, Nabla)), default=0)


def max_eigen_id(term) -> int:
    return max((n.id for n in free_names(term) if isinstance(n, Eigen)), default=0)


# --------------------------------------------------------------------------- errors


class ParseError(Exception):
    def __init__(self, position: int, expected, found: str = ""):
        self.position = position
        self.expected = tuple(expected)
        self.found = found
        what = " or ".join(self.expected)
        extra = f", found {found!r}" if found else ""
        super().__init__(f"at position {position}: expected {what}{extra}")


class UnboundName(Exception):
    def __init__(self, ident: str):
        self.ident = ident
        super().__init__(f"free name {ident!r} is not declared in the prefix")


class DuplicatePrefixName(Exception):
    def __init__(self, ident: str):
        self.ident = ident
        super().__init__(f"prefix declares {ident!r} more than once")


# --------------------------------------------------------------------------- prefix

RESERVED_OBJ = "_a"  # object of the `x!.P` output abbreviation
KEYWORDS = {"tau", "nu"}
IDENT_RE = re.compile(r"[a-z][a-zA-Z0-9_]*")


@dataclass(frozen=True)
class Prefix:
    """Ordered quantifier prefix over the free names, leftmost outermost.

    Each entry is ("forall" | "nabla", ident).  Nabla entries receive levels
    1..k left to right; forall entries become eigenvariables whose ceiling is
    the number of nabla entries to their left.
    """

    entries: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        seen = set()
        for quant, ident in self.entries:
            if quant not in ("forall", "nabla"):
                raise ValueError(f"bad quantifier {quant!r}")
            if ident in seen:
                raise DuplicatePrefixName(ident)
            seen.add(ident)

    def name_map(self) -> dict[str, Name]:
        """ident -> encoded Name, per the level/ceiling discipline."""
        out: dict[str, Name] = {}
        level = 0
        eigen_id = 0
        for quant, ident in self.entries:
            if quant == "nabla":
                level += 1
                out[ident] = Nabla(level)
            else:
                eigen_id += 1
                out[ident] = Eigen(eigen_id, level)
        return out

    def idents_by_name(self) -> dict[Name, str]:
        return {name: ident for ident, name in self.name_map().items()}

    @property
    def idents(self) -> tuple[str, ...]:
        return tuple(ident for _q, ident in self.entries)

    @property
    def nabla_count(self) -> int:
        return sum(1 for q, _ in self.entries if q == "nabla")

    @property
    def eigen_count(self) -> int:
        return sum(1 for q, _ in self.entries if q == "forall")

    def is_all_nabla(self) -> bool:
        return all(q == "nabla" for q, _ in self.entries)

    def extended(self, quant: str, ident: str) -> "Prefix":
        return Prefix(self.entries + ((quant, ident),))


def parse_prefix(text: str) -> Prefix:
    """Parse a comma list of "forall x" / "nabla x"; empty string allowed."""
    text = text.strip()
    if not text:
        return Prefix(())
    entries = []
    for chunk in text.split(","):
        parts = chunk.split()
        if len(parts) != 2 or parts[0] not in ("forall", "nabla"):
            raise ParseError(0, ("forall IDENT", "nabla IDENT"), chunk.strip())
        quant, ident = parts
        if not IDENT_RE.fullmatch(ident) or ident in KEYWORDS:
            raise ParseError(0, ("identifier",), ident)
        entries.append((quant, ident))
    return Prefix(tuple(entries))


# ------------------------------------------------------------------------ tokenizer

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<ident>[a-z][a-zA-Z0-9_]*)|(?P<punct>[0.!?()\[\]=+|,]))"
)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    """Return (kind, value, position) triples; kind is 'ident' or 'punct'."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(bad, ("a token",), text[bad])
        if m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("punct", m.group("punct"), m.start("punct")))
        pos = m.end()
    return tokens


# --------------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, text: str, defs: dict | None):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.defs = defs or {}

    # token helpers
    def peek(self, ahead: int = 0):
        j = self.i + ahead
        return self.tokens[j] if j < len(self.tokens) else ("eof", "", len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.peek()
        if val != value or kind == "eof":
            raise ParseError(pos, (repr(value),), val)
        return self.next()

    def expect_ident(self, what: str = "name"):
        kind, val, pos = self.peek()
        if kind != "ident" or val in KEYWORDS:
            raise ParseError(pos, (what,), val)
        self.next()
        return val

    # grammar: proc := sum ; sum := par ("+" par)* ; par := unary ("|" unary)*
    def parse(self) -> Process:
        p = self.proc([])
        kind, val, pos = self.peek()
        if kind != "eof":
            raise ParseError(pos, ("end of input",), val)
        return p

    def proc(self, env: list) -> Process:
        parts = [self.par(env)]
        while self.peek()[1] == "+":
            self.next()
            parts.append(self.par(env))
        out = parts[-1]
        for part in reversed(parts[:-1]):  # right-associative
            out = Sum(part, out)
        return out

    def par(self, env: list) -> Process:
        parts = [self.unary(env)]
        while self.peek()[1] == "|":
            self.next()
            parts.append(self.unary(env))
        out = parts[-1]
        for part in reversed(parts[:-1]):
            out = Par(part, out)
        return out

    def resolve(self, ident: str, env: list) -> Name:
        if ident in env:
            return Bound(env.index(ident))
        return Free(ident)

    def unary(self, env: list) -> Process:
        kind, val, pos = self.peek()
        if val == "0":
            self.next()
            return NIL
        if val == "!":
            self.next()
            return Bang(self.unary(env))
        if val == "tau":
            self.next()
            self.expect(".")
            return TauPref(self.unary(env))
        if val == "(":
            if self.peek(1)[1] == "nu":
                self.next()
                self.next()
                binder = self.expect_ident("restricted name")
                self.expect(")")
                return Nu(self.unary([binder] + env))
            self.next()
            inner = self.proc(env)
            self.expect(")")
            return inner
        if val == "[":
            self.next()
            left = self.resolve(self.expect_ident(), env)
            self.expect("=")
            right = self.resolve(self.expect_ident(), env)
            self.expect("]")
            return Match(left, right, self.unary(env))
        if kind == "ident" and val not in KEYWORDS:
            self.next()
            ch = self.resolve(val, env)
            nxt = self.peek()[1]
            if nxt == "!":
                self.next()
                if self.peek()[0] == "ident" and self.peek()[1] not in KEYWORDS:
                    obj = self.resolve(self.expect_ident(), env)
                else:
                    obj = self.resolve(RESERVED_OBJ, env)  # `x!.P` abbreviation
                self.expect(".")
                return Out(ch, obj, self.unary(env))
            if nxt == "?":
                self.next()
                self.expect("(")
                binder = self.expect_ident("input name")
                self.expect(")")
                self.expect(".")
                return In(ch, self.proc_body([binder] + env))
            if nxt == ".":
                self.next()
                # `x.P` abbreviation: input with a vacuous binder
                return In(ch, self.proc_body(["\0vacuous"] + env))
            if nxt == "(":
                return self.call(val, pos, env)
            raise ParseError(self.peek()[2], ("'!'", "'?'", "'.'", "'('"), nxt)
        raise ParseError(pos, ("a process",), val)

    def proc_body(self, env: list) -> Process:
        return self.unary(env)

    def call(self, ident: str, pos: int, env: list) -> Process:
        if ident not in self.defs:
            raise ParseError(pos, ("a declared identifier",), ident)
        params, body = self.defs[ident]
        self.expect("(")
        args: list[Name] = []
        if self.peek()[1] != ")":
            args.append(self.resolve(self.expect_ident("argument name"), env))
            while self.peek()[1] == ",":
                self.next()
                args.append(self.resolve(self.expect_ident("argument name"), env))
        self.expect(")")
        if len(args) != len(params):
            raise ParseError(pos, (f"{len(params)} argument(s) for {ident}",), str(len(args)))
        binding = dict(zip(params, args))

        def f(n, d):
            if isinstance(n, Free) and n.ident in binding:
                arg = binding[n.ident]
                if isinstance(arg, Bound):
                    return Bound(arg.index + d)
                return arg
            return n

        return map_names(body, f)


def parse_process(text: str, defs: dict | None = None) -> Process:
    """Parse surface syntax; free names stay as Free placeholders."""
    return _Parser(text, defs).parse()


def parse_decls(text: str) -> dict[str, tuple[list[str], Process]]:
    """Parse a declaration file: lines of ``ident(params) := proc`` with ``#``
    comments.  Declarations may call earlier ones; recursion is rejected."""
    defs: dict[str, tuple[list[str], Process]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(
            r"([a-z][a-zA-Z0-9_]*)\s*\(([^)]*)\)\s*:=\s*(.*)", line
        )
        if not m:
            raise ParseError(0, ("ident(params) := proc",), f"line {lineno}")
        ident, params_text, body_text = m.groups()
        if ident in defs:
            raise ParseError(0, ("a fresh declaration name",), ident)
        params = [p.strip() for p in params_text.split(",") if p.strip()]
        for p in params:
            if not IDENT_RE.fullmatch(p) or p in KEYWORDS:
                raise ParseError(0, ("parameter identifier",), p)
        body = parse_process(body_text, defs)
        defs[ident] = (params, body)
    return defs


# --------------------------------------------------------------------------- encode


def surface_free_idents(p: Process) -> frozenset:
    acc: set = set()

    def f(n, _d):
        if isinstance(n, Free):
            acc.add(n.ident)
        return n

    map_names(p, f)
    return frozenset(acc)


def encode(p: Process, prefix: Prefix) -> Process:
    """Resolve Free placeholders against the prefix."""
    mapping = prefix.name_map()

    def f(n, _d):
        if isinstance(n, Free):
            if n.ident not in mapping:
                raise UnboundName(n.ident)
            return mapping[n.ident]
        return n

    return map_names(p, f)


def extend_prefix_for_reserved(prefix: Prefix, *procs: Process) -> Prefix:
    """Append a trailing ``nabla _a`` entry when the output abbreviation's
    reserved object occurs free and the prefix lacks it."""
    if any(RESERVED_OBJ in surface_free_idents(p) for p in procs):
        if RESERVED_OBJ not in prefix.idents:
            return prefix.extended("nabla", RESERVED_OBJ)
    return prefix


# --------------------------------------------------------------------------- pretty

_BINDER_POOL = ("y", "z", "u", "v", "w", "m", "n", "o", "p", "q", "r", "s")


def _fresh_binder(taken: set) -> str:
    for cand in _BINDER_POOL:
        if cand not in taken:
            return cand
    i = 1
    while f"b{i}" in taken:
        i += 1
    return f"b{i}"


class _Namer:
    def __init__(self, prefix: Prefix):
        self.by_name = prefix.idents_by_name()
        self.taken = set(prefix.idents)

    def name(self, n: Name, binders: list[str]) -> str:
        match n:
            case Bound(i):
                if i < len(binders):
                    return binders[i]
                return f"?{i}"
            case Free(ident):
                return ident
            case _:
                if n in self.by_name:
                    return self.by_name[n]
                if isinstance(n, Nabla):
                    return f"n{n.level}"
                return f"e{n.id}"

    def binder(self, binders: list[str]) -> str:
        return _fresh_binder(self.taken | set(binders))


_SUM_LVL, _PAR_LVL, _UNARY_LVL = 0, 1, 2


def pretty(p: Process, prefix: Prefix = Prefix(())) -> str:
    namer = _Namer(prefix)

    def go(p: Process, need: int, binders: list[str]) -> str:
        match p:
            case Nil():
                return "0"
            case TauPref(cont):
                return f"tau.{go(cont, _UNARY_LVL, binders)}"
            case Out(ch, obj, cont):
                ch_s = namer.name(ch, binders)
                obj_s = namer.name(obj, binders)
                rest = go(cont, _UNARY_LVL, binders)
                if obj_s == RESERVED_OBJ:
                    return f"{ch_s}!.{rest}"
                return f"{ch_s}!{obj_s}.{rest}"
            case In(ch, body):
                ch_s = namer.name(ch, binders)
                if _uses_binder(body):
                    b = namer.binder(binders)
                    return f"{ch_s}?({b}).{go(body, _UNARY_LVL, [b] + binders)}"
                vacuous = ["\0"] + binders
                return f"{ch_s}.{go(body, _UNARY_LVL, vacuous)}"
            case Match(left, right, cont):
                l_s = namer.name(left, binders)
                r_s = namer.name(right, binders)
                return f"[{l_s}={r_s}]{go(cont, _UNARY_LVL, binders)}"
            case Sum(left, right):
                s = f"{go(left, _PAR_LVL, binders)} + {go(right, _SUM_LVL, binders)}"
                return f"({s})" if need > _SUM_LVL else s
            case Par(left, right):
                s = f"{go(left, _UNARY_LVL, binders)} | {go(right, _PAR_LVL, binders)}"
                return f"({s})" if need > _PAR_LVL else s
            case Nu(body):
                b = namer.binder(binders)
                return f"(nu {b}){go(body, _UNARY_LVL, [b] + binders)}"
            case Bang(cont):
                return f"!{go(cont, _UNARY_LVL, binders)}"
        raise TypeError(f"not a process: {p!r}")

    return go(p, _SUM_LVL, [])


def _uses_binder(body: Process) -> bool:
    used = False

    def f(n, d):
        nonlocal used
        if isinstance(n, Bound) and n.index == d:
            used = True
        return n

    map_names(body, f)
    return used


def pretty_name(n: Name, prefix: Prefix = Prefix(())) -> str:
    return _Namer(prefix).name(n, [])


def pretty_action(a: Action, prefix: Prefix = Prefix(()), binder: str | None = None) -> str:
    namer = _Namer(prefix)
    match a:
        case Tau():
            return "tau"
        case FreeOut(ch, obj):
            return f"{namer.name(ch, [])}!{namer.name(obj, [])}"
        case FreeIn(ch, obj):
            return f"{namer.name(ch, [])}?{namer.name(obj, [])}"
        case BoundOut(ch):
            return f"{namer.name(ch, [])}!({binder or 'w'})"
        case BoundIn(ch):
            return f"{namer.name(ch, [])}?({binder or 'w'})"
    raise TypeError(f"not an action: {a!r}")
