"""Modal assertions over processes and their satisfaction checking.

Two checking modes are provided.  Ground mode works under an all-nabla prefix
and computes a classical truth value: name quantifiers inside input modalities
are enumerated over the scoped constants in scope plus a budgeted supply of
fresh ones (one per bound-input modality on the path).  Open mode works under
a mixed forall/nabla prefix without case analysis on eigenvariables: boxes
quantify over every symbolic transition branch, diamonds must succeed without
instantiating anything, and input universals introduce fresh eigenvariables.
Open mode is restricted to the sublogic whose modalities are tau, free
output, bound output, match, and late bound input (with their duals).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (
    Action,
    Bound,
    BoundIn,
    BoundOut,
    Eigen,
    Free,
    FreeIn,
    FreeOut,
    Nabla,
    Name,
    Prefix,
    Process,
    TAU,
    Tau,
    free_names,
    open_abs,
    pretty_name,
    ParseError,
    UnboundName,
    KEYWORDS,
)
from .lts import successors_bound, successors_free
from .unify import IDENTITY, Subst, compose, unify_names


class FreeInputModality(Exception):
    def __init__(self):
        super().__init__("formulas over the free input action are not checkable")


class FormulaOutsideLM(Exception):
    def __init__(self, node: str):
        self.node = node
        super().__init__(
            f"open mode only supports the tau/out/match/late-input sublogic; got {node}"
        )


# ------------------------------------------------------------------------- formulas


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class MatchDia:
    left: Name
    right: Name
    body: "Formula"


@dataclass(frozen=True)
class MatchBox:
    left: Name
    right: Name
    body: "Formula"


@dataclass(frozen=True)
class FreeDia:
    action: Action  # Tau or FreeOut
    body: "Formula"


@dataclass(frozen=True)
class FreeBox:
    action: Action
    body: "Formula"


@dataclass(frozen=True)
class OutDia:
    ch: Name
    body: "Formula"  # one binder deep


@dataclass(frozen=True)
class OutBox:
    ch: Name
    body: "Formula"


@dataclass(frozen=True)
class InDia:
    ch: Name
    body: "Formula"


@dataclass(frozen=True)
class InBox:
    ch: Name
    body: "Formula"


@dataclass(frozen=True)
class InDiaL:
    ch: Name
    body: "Formula"


@dataclass(frozen=True)
class InBoxL:
    ch: Name
    body: "Formula"


@dataclass(frozen=True)
class InDiaE:
    ch: Name
    body: "Formula"


@dataclass(frozen=True)
class InBoxE:
    ch: Name
    body: "Formula"


Formula = (
    TrueF
    | FalseF
    | And
    | Or
    | MatchDia
    | MatchBox
    | FreeDia
    | FreeBox
    | OutDia
    | OutBox
    | InDia
    | InBox
    | InDiaL
    | InBoxL
    | InDiaE
    | InBoxE
)

TRUE = TrueF()
FALSE = FalseF()

_IN_NODES = (InDia, InBox, InDiaL, InBoxL, InDiaE, InBoxE)
_ABS_NODES = (OutDia, OutBox) + _IN_NODES


def map_formula_names(f: Formula, fn, depth: int = 0) -> Formula:
    match f:
        case TrueF() | FalseF():
            return f
        case And(l, r):
            return And(map_formula_names(l, fn, depth), map_formula_names(r, fn, depth))
        case Or(l, r):
            return Or(map_formula_names(l, fn, depth), map_formula_names(r, fn, depth))
        case MatchDia(a, b, body):
            return MatchDia(fn(a, depth), fn(b, depth), map_formula_names(body, fn, depth))
        case MatchBox(a, b, body):
            return MatchBox(fn(a, depth), fn(b, depth), map_formula_names(body, fn, depth))
        case FreeDia(act, body):
            return FreeDia(_map_action(act, fn, depth), map_formula_names(body, fn, depth))
        case FreeBox(act, body):
            return FreeBox(_map_action(act, fn, depth), map_formula_names(body, fn, depth))
        case _ if isinstance(f, _ABS_NODES):
            return type(f)(fn(f.ch, depth), map_formula_names(f.body, fn, depth + 1))
    raise TypeError(f"not a formula: {f!r}")


def _map_action(a: Action, fn, depth: int) -> Action:
    match a:
        case Tau():
            return a
        case FreeOut(ch, obj):
            return FreeOut(fn(ch, depth), fn(obj, depth))
        case FreeIn(ch, obj):
            return FreeIn(fn(ch, depth), fn(obj, depth))
        case BoundOut(ch):
            return BoundOut(fn(ch, depth))
        case BoundIn(ch):
            return BoundIn(fn(ch, depth))
    raise TypeError(f"not an action: {a!r}")


def open_formula(body: Formula, name: Name) -> Formula:
    def fn(n, d):
        match n:
            case Bound(i) if i == d:
                return name
            case Bound(i) if i > d:
                return Bound(i - 1)
            case _:
                return n

    return map_formula_names(body, fn)


def close_formula(f: Formula, name: Name) -> Formula:
    def fn(n, d):
        match n:
            case Bound(i) if i >= d:
                return Bound(i + 1)
            case _ if n == name:
                return Bound(d)
            case _:
                return n

    return map_formula_names(f, fn)


def apply_subst_formula(theta: Subst, f: Formula) -> Formula:
    if theta.is_identity():
        return f
    return map_formula_names(f, lambda n, _d: theta.lookup(n))


def formula_names(f: Formula) -> frozenset:
    acc: set = set()

    def fn(n, _d):
        if isinstance(n, (Nabla, Eigen)):
            acc.add(n)
        return n

    map_formula_names(f, fn)
    return frozenset(acc)


def fresh_budget(a: Formula) -> int:
    """Number of bound-input modality nodes in the formula."""
    match a:
        case TrueF() | FalseF():
            return 0
        case And(l, r) | Or(l, r):
            return fresh_budget(l) + fresh_budget(r)
        case MatchDia(_, _, body) | MatchBox(_, _, body):
            return fresh_budget(body)
        case FreeDia(_, body) | FreeBox(_, body):
            return fresh_budget(body)
        case OutDia(_, body) | OutBox(_, body):
            return fresh_budget(body)
        case _ if isinstance(a, _IN_NODES):
            return 1 + fresh_budget(a.body)
    raise TypeError(f"not a formula: {a!r}")


_DUALS = {
    TrueF: lambda f: FALSE,
    FalseF: lambda f: TRUE,
    And: lambda f: Or(dual(f.left), dual(f.right)),
    Or: lambda f: And(dual(f.left), dual(f.right)),
    MatchDia: lambda f: MatchBox(f.left, f.right, dual(f.body)),
    MatchBox: lambda f: MatchDia(f.left, f.right, dual(f.body)),
    FreeDia: lambda f: FreeBox(f.action, dual(f.body)),
    FreeBox: lambda f: FreeDia(f.action, dual(f.body)),
    OutDia: lambda f: OutBox(f.ch, dual(f.body)),
    OutBox: lambda f: OutDia(f.ch, dual(f.body)),
    InDia: lambda f: InBox(f.ch, dual(f.body)),
    InBox: lambda f: InDia(f.ch, dual(f.body)),
    InDiaL: lambda f: InBoxL(f.ch, dual(f.body)),
    InBoxL: lambda f: InDiaL(f.ch, dual(f.body)),
    InDiaE: lambda f: InBoxE(f.ch, dual(f.body)),
    InBoxE: lambda f: InDiaE(f.ch, dual(f.body)),
}


def dual(f: Formula) -> Formula:
    return _DUALS[type(f)](f)


def _check_no_free_input(f: Formula) -> None:
    match f:
        case FreeDia(act, _) | FreeBox(act, _):
            if isinstance(act, FreeIn):
                raise FreeInputModality()
    match f:
        case And(l, r) | Or(l, r):
            _check_no_free_input(l)
            _check_no_free_input(r)
        case MatchDia(_, _, b) | MatchBox(_, _, b) | FreeDia(_, b) | FreeBox(_, b):
            _check_no_free_input(b)
        case _ if isinstance(f, _ABS_NODES):
            _check_no_free_input(f.body)


def in_lm(f: Formula) -> bool:
    """Membership in the sublogic accepted by open mode."""
    match f:
        case TrueF() | FalseF():
            return True
        case And(l, r) | Or(l, r):
            return in_lm(l) and in_lm(r)
        case MatchDia(_, _, b) | MatchBox(_, _, b):
            return in_lm(b)
        case FreeDia(act, b) | FreeBox(act, b):
            return isinstance(act, (Tau, FreeOut)) and in_lm(b)
        case OutDia(_, b) | OutBox(_, b) | InDiaL(_, b) | InBoxL(_, b):
            return in_lm(b)
        case _:
            return False


def _first_non_lm(f: Formula) -> str:
    match f:
        case TrueF() | FalseF():
            return ""
        case And(l, r) | Or(l, r):
            return _first_non_lm(l) or _first_non_lm(r)
        case MatchDia(_, _, b) | MatchBox(_, _, b):
            return _first_non_lm(b)
        case FreeDia(act, b) | FreeBox(act, b):
            if not isinstance(act, (Tau, FreeOut)):
                return type(f).__name__
            return _first_non_lm(b)
        case OutDia(_, b) | OutBox(_, b) | InDiaL(_, b) | InBoxL(_, b):
            return _first_non_lm(b)
        case _:
            return type(f).__name__


# --------------------------------------------------------------------- ground mode


def sat_ground(
    p: Process,
    a: Formula,
    extra_names: int | None = None,
    depth: int | None = None,
) -> bool:
    """Classical satisfaction under an all-nabla prefix.  ``extra_names``
    bounds how many fresh constants the name quantifiers may consume; it
    defaults to the formula's fresh budget."""
    _check_no_free_input(a)
    if depth is None:
        levels = [n.level for n in free_names(p) | formula_names(a) if isinstance(n, Nabla)]
        depth = max(levels, default=0)
    budget = fresh_budget(a) if extra_names is None else extra_names
    return _sat(p, a, depth, budget)


def _in_candidates(depth: int, budget: int) -> list[tuple[Name, int, int]]:
    cands: list[tuple[Name, int, int]] = [(Nabla(l), depth, budget) for l in range(1, depth + 1)]
    if budget > 0:
        cands.append((Nabla(depth + 1), depth + 1, budget - 1))
    return cands


def _sat(p: Process, a: Formula, depth: int, budget: int) -> bool:
    match a:
        case TrueF():
            return True
        case FalseF():
            return False
        case And(l, r):
            return _sat(p, l, depth, budget) and _sat(p, r, depth, budget)
        case Or(l, r):
            return _sat(p, l, depth, budget) or _sat(p, r, depth, budget)
        case MatchDia(x, y, body):
            return x == y and _sat(p, body, depth, budget)
        case MatchBox(x, y, body):
            return x != y or _sat(p, body, depth, budget)
        case FreeDia(act, body):
            return any(
                _sat(t.cont, body, depth, budget)
                for t in successors_free(p, depth)
                if t.action == act
            )
        case FreeBox(act, body):
            return all(
                _sat(t.cont, body, depth, budget)
                for t in successors_free(p, depth)
                if t.action == act
            )
        case OutDia(ch, body):
            w = Nabla(depth + 1)
            return any(
                _sat(open_abs(t.cont, w), open_formula(body, w), depth + 1, budget)
                for t in successors_bound(p, depth)
                if t.action == BoundOut(ch)
            )
        case OutBox(ch, body):
            w = Nabla(depth + 1)
            return all(
                _sat(open_abs(t.cont, w), open_formula(body, w), depth + 1, budget)
                for t in successors_bound(p, depth)
                if t.action == BoundOut(ch)
            )
    # input modalities: quantifier nesting differs per flavour
    ts = [t for t in successors_bound(p, depth) if t.action == BoundIn(a.ch)]
    cands = _in_candidates(depth, budget)

    def hold(t, cand) -> bool:
        w, d2, b2 = cand
        return _sat(open_abs(t.cont, w), open_formula(a.body, w), d2, b2)

    match a:
        case InDia(_, _):
            return any(any(hold(t, c) for c in cands) for t in ts)
        case InBox(_, _):
            return all(all(hold(t, c) for c in cands) for t in ts)
        case InDiaL(_, _):
            return any(all(hold(t, c) for c in cands) for t in ts)
        case InBoxL(_, _):
            return all(any(hold(t, c) for c in cands) for t in ts)
        case InDiaE(_, _):
            return all(any(hold(t, c) for t in ts) for c in cands)
        case InBoxE(_, _):
            return any(all(hold(t, c) for t in ts) for c in cands)
    raise TypeError(f"not a formula: {a!r}")


# ----------------------------------------------------------------------- open mode


def unify_actions(a: Action, b: Action) -> Subst | None:
    match (a, b):
        case (Tau(), Tau()):
            return IDENTITY
        case (FreeOut(c1, o1), FreeOut(c2, o2)):
            r1 = unify_names(c1, c2)
            if r1 is None:
                return None
            r2 = unify_names(r1.name(o1), r1.name(o2))
            if r2 is None:
                return None
            return compose(r2, r1)
        case (BoundOut(c1), BoundOut(c2)) | (BoundIn(c1), BoundIn(c2)):
            return unify_names(c1, c2)
        case _:
            return None


def sat_open(p: Process, a: Formula, prefix: Prefix) -> bool:
    """Provability of the prefix-quantified satisfaction judgment, without
    excluded middle on eigenvariables."""
    _check_no_free_input(a)
    bad = _first_non_lm(a)
    if bad:
        raise FormulaOutsideLM(bad)
    return sat_open_at(p, a, prefix.nabla_count, prefix.eigen_count + 1)


def sat_open_at(p: Process, a: Formula, depth: int, next_eigen: int) -> bool:
    match a:
        case TrueF():
            return True
        case FalseF():
            return False
        case And(l, r):
            return sat_open_at(p, l, depth, next_eigen) and sat_open_at(p, r, depth, next_eigen)
        case Or(l, r):
            return sat_open_at(p, l, depth, next_eigen) or sat_open_at(p, r, depth, next_eigen)
        case MatchDia(x, y, body):
            # proving an equality outright: the names must already coincide
            return x == y and sat_open_at(p, body, depth, next_eigen)
        case MatchBox(x, y, body):
            rho = unify_names(x, y)
            if rho is None:
                return True  # the hypothesis x=y can never hold
            return sat_open_at(rho(p), apply_subst_formula(rho, body), depth, next_eigen)
        case FreeDia(act, body):
            return any(
                sat_open_at(t.cont, body, depth, next_eigen)
                for t in successors_free(p, depth)
                if t.theta.is_identity() and t.action == act
            )
        case FreeBox(act, body):
            for t in successors_free(p, depth):
                act_i = _apply_action(t.theta, act)
                rho = unify_actions(act_i, t.action)
                if rho is None:
                    continue
                sigma = compose(rho, t.theta)
                if not sat_open_at(
                    rho(t.cont), apply_subst_formula(sigma, body), depth, next_eigen
                ):
                    return False
            return True
        case OutDia(ch, body):
            w = Nabla(depth + 1)
            return any(
                sat_open_at(
                    open_abs(t.cont, w), open_formula(body, w), depth + 1, next_eigen
                )
                for t in successors_bound(p, depth)
                if t.theta.is_identity() and t.action == BoundOut(ch)
            )
        case OutBox(ch, body):
            w = Nabla(depth + 1)
            for t in successors_bound(p, depth):
                if not isinstance(t.action, BoundOut):
                    continue
                rho = unify_names(t.theta.name(ch), t.action.ch)
                if rho is None:
                    continue
                sigma = compose(rho, t.theta)
                if not sat_open_at(
                    open_abs(rho(t.cont), w),
                    open_formula(apply_subst_formula(sigma, body), w),
                    depth + 1,
                    next_eigen,
                ):
                    return False
            return True
        case InDiaL(ch, body):
            w = Eigen(next_eigen, depth)
            return any(
                sat_open_at(
                    open_abs(t.cont, w), open_formula(body, w), depth, next_eigen + 1
                )
                for t in successors_bound(p, depth)
                if t.theta.is_identity() and t.action == BoundIn(ch)
            )
        case InBoxL(ch, body):
            for t in successors_bound(p, depth):
                if not isinstance(t.action, BoundIn):
                    continue
                rho = unify_names(t.theta.name(ch), t.action.ch)
                if rho is None:
                    continue
                sigma = compose(rho, t.theta)
                cont = rho(t.cont)
                body_i = apply_subst_formula(sigma, body)
                scope = [Nabla(l) for l in range(1, depth + 1)]
                scope += sorted(
                    {
                        n
                        for n in (free_names(cont) | formula_names(body_i) | free_names(sigma(p)))
                        if isinstance(n, Eigen)
                    },
                    key=lambda e: e.id,
                )
                if not any(
                    sat_open_at(
                        open_abs(cont, y), open_formula(body_i, y), depth, next_eigen
                    )
                    for y in scope
                ):
                    return False
            return True
    raise FormulaOutsideLM(type(a).__name__)


def _apply_action(theta: Subst, act: Action) -> Action:
    if theta.is_identity():
        return act
    return _map_action(act, lambda n, _d: theta.lookup(n), 0)


# ------------------------------------------------------------------ surface syntax

_RESERVED_FORMULA = {"true", "false", "v", "L", "E"} | KEYWORDS


class _FormulaParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize_formula(text)
        self.i = 0

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

    def expect_name(self):
        kind, val, pos = self.peek()
        if kind != "ident" or val in _RESERVED_FORMULA:
            raise ParseError(pos, ("name",), val)
        self.next()
        return val

    def parse(self) -> Formula:
        f = self.disj([])
        kind, val, pos = self.peek()
        if kind != "eof":
            raise ParseError(pos, ("end of input",), val)
        return f

    def disj(self, env) -> Formula:
        parts = [self.conj(env)]
        while self.peek()[1] == "v":
            self.next()
            parts.append(self.conj(env))
        out = parts[-1]
        for part in reversed(parts[:-1]):
            out = Or(part, out)
        return out

    def conj(self, env) -> Formula:
        parts = [self.unary(env)]
        while self.peek()[1] == "&":
            self.next()
            parts.append(self.unary(env))
        out = parts[-1]
        for part in reversed(parts[:-1]):
            out = And(part, out)
        return out

    def resolve(self, ident: str, env: list) -> Name:
        if ident in env:
            return Bound(env.index(ident))
        return Free(ident)

    def unary(self, env) -> Formula:
        kind, val, pos = self.peek()
        if val == "true":
            self.next()
            return TRUE
        if val == "false":
            self.next()
            return FALSE
        if val == "(":
            self.next()
            f = self.disj(env)
            self.expect(")")
            return f
        if val in ("<", "["):
            closer = ">" if val == "<" else "]"
            is_dia = val == "<"
            self.next()
            return self.modal(is_dia, closer, env)
        raise ParseError(pos, ("a formula",), val)

    def modal(self, is_dia: bool, closer: str, env) -> Formula:
        kind, val, pos = self.peek()
        if val == "tau":
            self.next()
            self.expect(closer)
            body = self.unary(env)
            return FreeDia(TAU, body) if is_dia else FreeBox(TAU, body)
        ch_ident = self.expect_name()
        ch = self.resolve(ch_ident, env)
        kind, val, pos = self.peek()
        if val == "=":
            self.next()
            other = self.resolve(self.expect_name(), env)
            self.expect(closer)
            body = self.unary(env)
            return MatchDia(ch, other, body) if is_dia else MatchBox(ch, other, body)
        if val == "!":
            self.next()
            if self.peek()[1] == "(":
                self.next()
                binder = self.expect_name()
                self.expect(")")
                self.expect(closer)
                body = self.unary([binder] + env)
                return OutDia(ch, body) if is_dia else OutBox(ch, body)
            obj = self.resolve(self.expect_name(), env)
            self.expect(closer)
            body = self.unary(env)
            act = FreeOut(ch, obj)
            return FreeDia(act, body) if is_dia else FreeBox(act, body)
        if val == "?":
            self.next()
            self.expect("(")
            binder = self.expect_name()
            self.expect(")")
            self.expect(closer)
            flavour = ""
            if self.peek()[1] in ("L", "E"):
                flavour = self.next()[1]
            body = self.unary([binder] + env)
            table = {
                ("", True): InDia,
                ("", False): InBox,
                ("L", True): InDiaL,
                ("L", False): InBoxL,
                ("E", True): InDiaE,
                ("E", False): InBoxE,
            }
            return table[(flavour, is_dia)](ch, body)
        raise ParseError(pos, ("'='", "'!'", "'?'"), val)


_FORMULA_TOKEN_RE = re.compile(
    r"\s*(?:(?P<ident>[a-z][a-zA-Z0-9_]*|[LE])|(?P<punct>[<>\[\]=!?()&.]))"
)


def _tokenize_formula(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _FORMULA_TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(bad, ("a formula token",), text[bad])
        if m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("punct", m.group("punct"), m.start("punct")))
        pos = m.end()
    return tokens


def parse_formula(text: str) -> Formula:
    """Parse the surface formula grammar; free names stay as placeholders."""
    return _FormulaParser(text).parse()


def encode_formula(f: Formula, prefix: Prefix) -> Formula:
    mapping = prefix.name_map()

    def fn(n, _d):
        if isinstance(n, Free):
            if n.ident not in mapping:
                raise UnboundName(n.ident)
            return mapping[n.ident]
        return n

    return map_formula_names(f, fn)


# ------------------------------------------------------------------------- pretty

_OR_LVL, _AND_LVL, _UNARY_F = 0, 1, 2

_BINDER_POOL_F = ("y", "z", "u", "v", "w", "m", "n", "o", "p", "q", "r", "s")


def pretty_formula(f: Formula, prefix: Prefix = Prefix(())) -> str:
    taken = set(prefix.idents)

    def name(n: Name, binders: list) -> str:
        if isinstance(n, Bound):
            return binders[n.index] if n.index < len(binders) else f"?{n.index}"
        return pretty_name(n, prefix)

    def fresh(binders: list) -> str:
        for cand in _BINDER_POOL_F:
            if cand not in taken and cand not in binders:
                return cand
        i = 1
        while f"b{i}" in binders:
            i += 1
        return f"b{i}"

    def go(f: Formula, need: int, binders: list) -> str:
        match f:
            case TrueF():
                return "true"
            case FalseF():
                return "false"
            case And(l, r):
                s = f"{go(l, _UNARY_F, binders)} & {go(r, _AND_LVL, binders)}"
                return f"({s})" if need > _AND_LVL else s
            case Or(l, r):
                s = f"{go(l, _AND_LVL, binders)} v {go(r, _OR_LVL, binders)}"
                return f"({s})" if need > _OR_LVL else s
            case MatchDia(a, b, body):
                return f"<{name(a, binders)}={name(b, binders)}>{go(body, _UNARY_F, binders)}"
            case MatchBox(a, b, body):
                return f"[{name(a, binders)}={name(b, binders)}]{go(body, _UNARY_F, binders)}"
            case FreeDia(act, body):
                return f"<{_act(act, binders)}>{go(body, _UNARY_F, binders)}"
            case FreeBox(act, body):
                return f"[{_act(act, binders)}]{go(body, _UNARY_F, binders)}"
            case OutDia(ch, body):
                b = fresh(binders)
                return f"<{name(ch, binders)}!({b})>{go(body, _UNARY_F, [b] + binders)}"
            case OutBox(ch, body):
                b = fresh(binders)
                return f"[{name(ch, binders)}!({b})]{go(body, _UNARY_F, [b] + binders)}"
            case _ if isinstance(f, _IN_NODES):
                b = fresh(binders)
                flavour = {InDia: "", InBox: "", InDiaL: "L ", InBoxL: "L ", InDiaE: "E ", InBoxE: "E "}[type(f)]
                opener, closer = ("<", ">") if isinstance(f, (InDia, InDiaL, InDiaE)) else ("[", "]")
                return (
                    f"{opener}{name(f.ch, binders)}?({b}){closer}"
                    f"{flavour}{go(f.body, _UNARY_F, [b] + binders)}"
                )
        raise TypeError(f"not a formula: {f!r}")

    def _act(act: Action, binders: list) -> str:
        match act:
            case Tau():
                return "tau"
            case FreeOut(ch, obj):
                return f"{name(ch, binders)}!{name(obj, binders)}"
        raise TypeError(f"free modality over {act!r}")

    return go(f, _OR_LVL, [])


# --------------------------------------------------------------- formula enumeration


def enumerate_lm(names: list[Name], max_depth: int):
    """All formulas of the open-checkable sublogic over the given names, up to
    the given modal/connective depth, smaller first.  Abstraction bodies may
    mention the abstracted name (as a Bound index).

    Only layers below ``max_depth`` are materialized; the top layer streams
    lazily, so consumers that stop early (or cap the count) never pay for the
    full binary-connective cross product of the deepest layer."""

    def layer(depth: int, scope: tuple[Name, ...]) -> list[Formula]:
        seen = set()
        uniq = []
        for f in stream(depth, scope):
            if f not in seen:
                seen.add(f)
                uniq.append(f)
        return uniq

    def stream(depth: int, scope: tuple[Name, ...]):
        if depth == 0:
            yield TRUE
            yield FALSE
            return
        prev = layer(depth - 1, scope)
        yield from prev
        pairs = [(a, b) for a in scope for b in scope if a != b]
        for body in prev:
            for a, b in pairs:
                yield MatchDia(a, b, body)
                yield MatchBox(a, b, body)
        for body in prev:
            yield FreeDia(TAU, body)
            yield FreeBox(TAU, body)
            for ch in scope:
                for obj in scope:
                    yield FreeDia(FreeOut(ch, obj), body)
                    yield FreeBox(FreeOut(ch, obj), body)
        marker = Free("\0abs")
        inner_scope = scope + (marker,)
        for body in layer(depth - 1, inner_scope):
            closed = close_formula(body, marker)
            for ch in scope:
                yield OutDia(ch, closed)
                yield OutBox(ch, closed)
                yield InDiaL(ch, closed)
                yield InBoxL(ch, closed)
        for l in prev:
            for r in prev:
                if l not in (TRUE, FALSE) or r not in (TRUE, FALSE):
                    yield And(l, r)
                    yield Or(l, r)

    seen: set[Formula] = set()
    for f in stream(max_depth, tuple(names)):
        if f not in seen:
            seen.add(f)
            yield f
