"""Process corpus for the test suite.

Processes are generated in an independent "named tuple" representation with
string names and explicit binders:

    ("nil",)
    ("tau", p)
    ("out", ch, obj, p)
    ("in", ch, x, p)
    ("match", a, b, p)
    ("sum", l, r)
    ("par", l, r)
    ("nu", x, p)
    ("bang", p)

``to_text`` renders a tuple in the concrete surface syntax, which is how the
engine under test receives it; the oracles interpret the tuples directly.
"""

from __future__ import annotations

import itertools
import random

FREE_NAMES = ("a", "b", "c")


def to_text(p) -> str:
    def go(p, need: int) -> str:
        # precedence: sum 0 < par 1 < unary 2
        tag = p[0]
        if tag == "nil":
            return "0"
        if tag == "tau":
            return f"tau.{go(p[1], 2)}"
        if tag == "out":
            return f"{p[1]}!{p[2]}.{go(p[3], 2)}"
        if tag == "in":
            return f"{p[1]}?({p[2]}).{go(p[3], 2)}"
        if tag == "match":
            return f"[{p[1]}={p[2]}]{go(p[3], 2)}"
        if tag == "sum":
            s = f"{go(p[1], 1)} + {go(p[2], 0)}"
            return f"({s})" if need > 0 else s
        if tag == "par":
            s = f"{go(p[1], 2)} | {go(p[2], 1)}"
            return f"({s})" if need > 1 else s
        if tag == "nu":
            return f"(nu {p[1]}){go(p[2], 2)}"
        if tag == "bang":
            return f"!{go(p[1], 2)}"
        raise ValueError(f"bad tuple {p!r}")

    return go(p, 0)


def free_names_of(p) -> frozenset[str]:
    tag = p[0]
    if tag == "nil":
        return frozenset()
    if tag == "tau":
        return free_names_of(p[1])
    if tag == "out":
        return frozenset((p[1], p[2])) | free_names_of(p[3])
    if tag == "in":
        return frozenset((p[1],)) | (free_names_of(p[3]) - {p[2]})
    if tag == "match":
        return frozenset((p[1], p[2])) | free_names_of(p[3])
    if tag in ("sum", "par"):
        return free_names_of(p[1]) | free_names_of(p[2])
    if tag == "nu":
        return free_names_of(p[2]) - {p[1]}
    if tag == "bang":
        return free_names_of(p[1])
    raise ValueError(f"bad tuple {p!r}")


def prefix_ops(p) -> int:
    """Number of action prefixes (tau/in/out)."""
    tag = p[0]
    if tag == "nil":
        return 0
    if tag == "tau":
        return 1 + prefix_ops(p[1])
    if tag == "out":
        return 1 + prefix_ops(p[3])
    if tag == "in":
        return 1 + prefix_ops(p[3])
    if tag == "match":
        return prefix_ops(p[3])
    if tag in ("sum", "par"):
        return prefix_ops(p[1]) + prefix_ops(p[2])
    if tag == "nu":
        return prefix_ops(p[2])
    if tag == "bang":
        return prefix_ops(p[1])
    raise ValueError(f"bad tuple {p!r}")


# ------------------------------------------------------------------ exhaustive


def exhaustive(size: int, names: tuple[str, ...]):
    """Every Bang-free process tuple with exactly ``size`` constructor nodes
    (Nil is size 1) over the given free names.  Binders get canonical fresh
    names u1, u2, ... so generated terms never shadow."""

    def gen(size: int, scope: tuple[str, ...], next_b: int):
        if size <= 0:
            return
        if size == 1:
            yield ("nil",)
            return
        for q in gen(size - 1, scope, next_b):
            yield ("tau", q)
        for ch in scope:
            for obj in scope:
                for q in gen(size - 1, scope, next_b):
                    yield ("out", ch, obj, q)
        b = f"u{next_b}"
        for ch in scope:
            for q in gen(size - 1, scope + (b,), next_b + 1):
                yield ("in", ch, b, q)
        for x in scope:
            for y in scope:
                for q in gen(size - 1, scope, next_b):
                    yield ("match", x, y, q)
        for lsize in range(1, size - 1):
            for l in gen(lsize, scope, next_b):
                for r in gen(size - 1 - lsize, scope, next_b):
                    yield ("sum", l, r)
                    yield ("par", l, r)
        b = f"u{next_b}"
        for q in gen(size - 1, scope + (b,), next_b + 1):
            yield ("nu", b, q)

    yield from gen(size, names, 1)


def exhaustive_upto(size: int, names: tuple[str, ...]):
    for s in range(1, size + 1):
        yield from exhaustive(s, names)


# --------------------------------------------------------------------- random


def random_proc(
    rng: random.Random,
    max_prefixes: int = 6,
    names: tuple[str, ...] = FREE_NAMES,
    allow_bang: bool = False,
):
    """A random process tuple with at most ``max_prefixes`` action prefixes
    over at most the given free names."""
    counter = itertools.count(1)

    def gen(budget: int, scope: tuple[str, ...]) -> tuple:
        if budget <= 0:
            return ("nil",)
        kinds = ["nil", "tau", "out", "in", "match", "sum", "par", "nu"]
        weights = [1, 3, 3, 3, 2, 2, 2, 1]
        if allow_bang:
            kinds.append("bang")
            weights.append(1)
        kind = rng.choices(kinds, weights)[0]
        if kind == "nil":
            return ("nil",)
        if kind == "tau":
            return ("tau", gen(budget - 1, scope))
        if kind == "out":
            return ("out", rng.choice(scope), rng.choice(scope), gen(budget - 1, scope))
        if kind == "in":
            b = f"u{next(counter)}"
            return ("in", rng.choice(scope), b, gen(budget - 1, scope + (b,)))
        if kind == "match":
            return ("match", rng.choice(scope), rng.choice(scope), gen(budget - 1, scope))
        if kind in ("sum", "par"):
            lb = rng.randint(0, budget)
            return (kind, gen(lb, scope), gen(budget - lb, scope))
        if kind == "nu":
            b = f"u{next(counter)}"
            return ("nu", b, gen(budget - 1, scope + (b,)))
        return ("bang", gen(min(budget - 1, 2), scope))

    while True:
        p = gen(rng.randint(0, max_prefixes), names)
        if prefix_ops(p) <= max_prefixes:
            return p


def random_pair(rng: random.Random, max_prefixes: int = 4, names=FREE_NAMES):
    """A pair biased toward near-misses: sometimes independent, sometimes a
    mutation of one process."""
    p = random_proc(rng, max_prefixes, names)
    roll = rng.random()
    if roll < 0.35:
        return p, random_proc(rng, max_prefixes, names)
    if roll < 0.55:
        return p, p
    return p, mutate(rng, p, names)


def mutate(rng: random.Random, p, names=FREE_NAMES):
    """Structural tweak: swap a name, drop a branch, add a prefix, etc."""
    choices = ["rename", "add_tau", "add_sum", "swap", "drop_match"]
    kind = rng.choice(choices)
    if kind == "add_tau":
        return ("tau", p)
    if kind == "add_sum":
        return ("sum", p, random_proc(rng, 2, names))
    if kind == "swap" and p[0] in ("sum", "par"):
        return (p[0], p[2], p[1])

    def rename(q):
        tag = q[0]
        if tag == "out":
            return ("out", rng.choice(names), q[2], q[3])
        if tag == "in":
            return ("in", rng.choice(names), q[2], q[3])
        if tag == "match":
            return ("match", q[1], rng.choice(names), q[3])
        if tag == "tau":
            return ("tau", rename(q[1]))
        if tag in ("sum", "par"):
            return (tag, rename(q[1]), q[2])
        if tag == "nu":
            return ("nu", q[1], rename(q[2]))
        return q

    if kind == "rename":
        return rename(p)
    if kind == "drop_match":

        def drop(q):
            if q[0] == "match":
                return q[3]
            if q[0] == "tau":
                return ("tau", drop(q[1]))
            if q[0] in ("sum", "par"):
                return (q[0], drop(q[1]), q[2])
            if q[0] == "out":
                return ("out", q[1], q[2], drop(q[3]))
            return q

        return drop(p)
    return p
