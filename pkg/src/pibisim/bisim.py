"""Bisimilarity games over symbolic transitions.

Three deciders share one engine.  ``open`` plays the substitution-closed game:
an attacker move is any symbolic transition whose substitution respects the
current distinction, the defender must answer with an identity-substitution
transition of the instantiated opponent carrying exactly the same action, and
bound inputs continue at a fresh eigenvariable (capped at the current nabla
depth).  ``late`` and ``early`` play the classical games over an all-nabla
prefix, where a bound input is split over the scoped constants in scope plus
one strictly fresh constant; they differ only in whether the defender commits
to a continuation before or after the received name is chosen.

On refutation the engine can replay the winning attacker strategy as a
distinguishing formula, machine-checked against both processes before it is
returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import modal as M
from .lts import infer_depth, successors_bound, successors_free, Transition
from .syntax import (
    Action,
    BoundIn,
    BoundOut,
    Eigen,
    Free,
    FreeOut,
    Nabla,
    Name,
    Prefix,
    Process,
    Tau,
    contains_bang,
    map_names,
    max_eigen_id,
    open_abs,
)
from .unify import (
    Distinction,
    EMPTY_DISTINCTION,
    InternalError,
    Subst,
    respects,
)


class ReplicationUnsupported(Exception):
    def __init__(self):
        super().__init__("bisimilarity games require replication-free processes")


class WitnessMalformed(Exception):
    pass


class DepthBudgetExceeded(Exception):
    def __init__(self, max_depth: int):
        self.max_depth = max_depth
        super().__init__(f"game exceeded the requested depth budget {max_depth}")


@dataclass
class Stats:
    goals: int = 0
    branches: int = 0


@dataclass(frozen=True)
class Goal:
    """One game position: the processes, the nabla depth, the next unused
    eigenvariable id, and the distinctions the attacker must respect."""

    depth: int
    next_eigen: int
    distinct: Distinction
    left: Process
    right: Process

    def mirrored(self) -> "Goal":
        return Goal(self.depth, self.next_eigen, self.distinct, self.right, self.left)


@dataclass(frozen=True)
class Reply:
    defender_index: int
    instantiation: Name | None  # per-defender received name (late ground input)
    child: "FailNode"


@dataclass(frozen=True)
class FailNode:
    """A winning attacker move: every defender reply leads to a refuted goal."""

    goal: Goal
    side: str  # which process attacks: "left" | "right"
    attacker_index: int  # into the concatenated free+bound successor list
    theta: Subst
    action: Action
    instantiation: Name | None  # shared received/extruded name, if any
    replies: tuple[Reply, ...]


def _pair_key(pair):
    def k(n: Name):
        return (0, n.level, 0) if isinstance(n, Nabla) else (1, n.id, n.ceiling)

    a, b = pair
    return (k(a), k(b))


def canonical_key(goal: Goal):
    """Alpha-canonical form of a goal: eigenvariables renumbered by first
    occurrence so memoized verdicts transfer between alpha-variants."""
    order: list[Eigen] = []
    seen: set[int] = set()

    def note(n, _d):
        if isinstance(n, Eigen) and n.id not in seen:
            seen.add(n.id)
            order.append(n)
        return n

    map_names(goal.left, note)
    map_names(goal.right, note)
    for a, b in sorted(goal.distinct.pairs, key=_pair_key):
        note(a, 0)
        note(b, 0)
    ren = {e.id: Eigen(i + 1, e.ceiling) for i, e in enumerate(order)}

    def sub(n, _d):
        return ren[n.id] if isinstance(n, Eigen) else n

    pairs = frozenset(
        tuple(sorted(((sub(a, 0), sub(b, 0))), key=lambda n: _pair_key((n, n))))
        for a, b in goal.distinct.pairs
    )
    return (goal.depth, map_names(goal.left, sub), map_names(goal.right, sub), pairs)


def _defenders(q: Process, action: Action, depth: int) -> list[Transition]:
    if isinstance(action, (Tau, FreeOut)):
        ts = successors_free(q, depth)
    else:
        ts = successors_bound(q, depth)
    return [t for t in ts if t.theta.is_identity() and t.action == action]


def _ground_inputs(depth: int) -> list[Nabla]:
    return [Nabla(l) for l in range(1, depth + 2)]


class _Game:
    def __init__(self, mode: str, clause_style: str = "late", max_depth: int | None = None):
        if mode not in ("open", "late", "early"):
            raise ValueError(f"unknown mode {mode!r}")
        if clause_style not in ("late", "early"):
            raise ValueError(f"unknown clause style {clause_style!r}")
        self.mode = mode
        self.clause_style = clause_style
        self.max_depth = max_depth
        self.stats = Stats()
        self.memo: dict = {}
        self.fmemo: dict = {}
        self.cert: list[Goal] = []

    # ------------------------------------------------------------- the game

    def attacks(self, p: Process, depth: int) -> list[Transition]:
        return list(successors_free(p, depth)) + list(successors_bound(p, depth))

    def check(self, goal: Goal) -> bool:
        if self.max_depth is not None and goal.depth > self.max_depth:
            raise DepthBudgetExceeded(self.max_depth)
        key = canonical_key(goal)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.stats.goals += 1
        result = self._side_holds(goal, "left") and self._side_holds(goal, "right")
        self.memo[key] = result
        if result:
            self.cert.append(goal)
        return result

    def _side_holds(self, goal: Goal, side: str) -> bool:
        p = goal.left if side == "left" else goal.right
        for t in self.attacks(p, goal.depth):
            self.stats.branches += 1
            if not respects(t.theta, goal.distinct):
                continue  # the induced world collapses a distinction: discharged
            if not self._defended(goal, side, t):
                return False
        return True

    def _pair(self, side: str, attacker_cont: Process, defender_cont: Process):
        if side == "left":
            return attacker_cont, defender_cont
        return defender_cont, attacker_cont

    def _instantiated_opponent(self, goal: Goal, side: str, t: Transition) -> Process:
        q = goal.right if side == "left" else goal.left
        return t.theta(q)

    def _child(
        self,
        goal: Goal,
        side: str,
        t: Transition,
        d: Transition,
        w: Name | None,
        depth: int,
        next_eigen: int,
        d2: Distinction,
    ) -> Goal:
        if w is None:
            a_cont, d_cont = t.cont, d.cont
        else:
            a_cont, d_cont = open_abs(t.cont, w), open_abs(d.cont, w)
        l, r = self._pair(side, a_cont, d_cont)
        return Goal(depth, next_eigen, d2, l, r)

    def _defended(self, goal: Goal, side: str, t: Transition) -> bool:
        d2 = goal.distinct.apply(t.theta)
        q = self._instantiated_opponent(goal, side, t)
        dfs = _defenders(q, t.action, goal.depth)
        act = t.action
        if isinstance(act, (Tau, FreeOut)):
            return any(
                self.check(self._child(goal, side, t, d, None, goal.depth, goal.next_eigen, d2))
                for d in dfs
            )
        if isinstance(act, BoundOut):
            w = Nabla(goal.depth + 1)
            return any(
                self.check(self._child(goal, side, t, d, w, goal.depth + 1, goal.next_eigen, d2))
                for d in dfs
            )
        # bound input
        if self.mode == "open":
            w = Eigen(goal.next_eigen, goal.depth)
            ne = goal.next_eigen + 1
            return any(
                self.check(self._child(goal, side, t, d, w, goal.depth, ne, d2)) for d in dfs
            )
        cands = _ground_inputs(goal.depth)
        if self.mode == "late":
            return any(
                all(
                    self.check(
                        self._child(goal, side, t, d, w, max(goal.depth, w.level), goal.next_eigen, d2)
                    )
                    for w in cands
                )
                for d in dfs
            )
        # early: the received name is chosen before the defender commits
        return all(
            any(
                self.check(
                    self._child(goal, side, t, d, w, max(goal.depth, w.level), goal.next_eigen, d2)
                )
                for d in dfs
            )
            for w in cands
        )

    # ------------------------------------------------------ witness extraction

    def explain(self, goal: Goal) -> FailNode:
        for side in ("left", "right"):
            p = goal.left if side == "left" else goal.right
            for idx, t in enumerate(self.attacks(p, goal.depth)):
                if not respects(t.theta, goal.distinct):
                    continue
                if self._defended(goal, side, t):
                    continue
                return self._fail_node(goal, side, idx, t)
        raise InternalError("refuted goal has no winning attack")

    def _fail_node(self, goal: Goal, side: str, idx: int, t: Transition) -> FailNode:
        d2 = goal.distinct.apply(t.theta)
        q = self._instantiated_opponent(goal, side, t)
        dfs = _defenders(q, t.action, goal.depth)
        act = t.action
        inst: Name | None = None
        replies: list[Reply] = []
        if isinstance(act, (Tau, FreeOut)):
            for i, d in enumerate(dfs):
                child = self._child(goal, side, t, d, None, goal.depth, goal.next_eigen, d2)
                replies.append(Reply(i, None, self.explain(child)))
        elif isinstance(act, BoundOut):
            inst = Nabla(goal.depth + 1)
            for i, d in enumerate(dfs):
                child = self._child(goal, side, t, d, inst, goal.depth + 1, goal.next_eigen, d2)
                replies.append(Reply(i, None, self.explain(child)))
        elif self.mode == "open":
            inst = Eigen(goal.next_eigen, goal.depth)
            for i, d in enumerate(dfs):
                child = self._child(goal, side, t, d, inst, goal.depth, goal.next_eigen + 1, d2)
                replies.append(Reply(i, None, self.explain(child)))
        elif self.mode == "late":
            for i, d in enumerate(dfs):
                w, child = self._late_failing_input(goal, side, t, d, d2)
                replies.append(Reply(i, w, self.explain(child)))
        else:  # early
            inst = self._early_failing_input(goal, side, t, dfs, d2)
            for i, d in enumerate(dfs):
                child = self._child(
                    goal, side, t, d, inst, max(goal.depth, inst.level), goal.next_eigen, d2
                )
                replies.append(Reply(i, None, self.explain(child)))
        return FailNode(goal, side, idx, t.theta, t.action, inst, tuple(replies))

    def _late_failing_input(self, goal, side, t, d, d2) -> tuple[Nabla, Goal]:
        for w in _ground_inputs(goal.depth):
            child = self._child(goal, side, t, d, w, max(goal.depth, w.level), goal.next_eigen, d2)
            if not self.check(child):
                return w, child
        raise InternalError("defender reported defeated but every received name works")

    def _early_failing_input(self, goal, side, t, dfs, d2) -> Nabla:
        for w in _ground_inputs(goal.depth):
            children = [
                self._child(goal, side, t, d, w, max(goal.depth, w.level), goal.next_eigen, d2)
                for d in dfs
            ]
            if not any(self.check(c) for c in children):
                return w
        raise InternalError("attack reported winning but every received name is answered")

    # ------------------------------------------------- strategy re-verification

    def verify_node(self, goal: Goal, node: FailNode) -> bool:
        if node.goal != goal:
            return False
        p = goal.left if node.side == "left" else goal.right
        ats = self.attacks(p, goal.depth)
        if not (0 <= node.attacker_index < len(ats)):
            return False
        t = ats[node.attacker_index]
        if t.theta != node.theta or t.action != node.action:
            return False
        if not respects(t.theta, goal.distinct):
            return False
        if self._defended(goal, node.side, t):
            return False
        d2 = goal.distinct.apply(t.theta)
        q = self._instantiated_opponent(goal, node.side, t)
        dfs = _defenders(q, t.action, goal.depth)
        if len(node.replies) != len(dfs):
            return False
        if [r.defender_index for r in node.replies] != list(range(len(dfs))):
            return False
        for reply, d in zip(node.replies, dfs):
            expected = self._expected_child(goal, node, t, d, reply, d2)
            if expected is None or reply.child.goal != expected:
                return False
            if not self.verify_node(expected, reply.child):
                return False
        return True

    def _expected_child(self, goal, node, t, d, reply, d2) -> Goal | None:
        act = t.action
        if isinstance(act, (Tau, FreeOut)):
            return self._child(goal, node.side, t, d, None, goal.depth, goal.next_eigen, d2)
        if isinstance(act, BoundOut):
            if node.instantiation != Nabla(goal.depth + 1):
                return None
            return self._child(
                goal, node.side, t, d, node.instantiation, goal.depth + 1, goal.next_eigen, d2
            )
        if self.mode == "open":
            if node.instantiation != Eigen(goal.next_eigen, goal.depth):
                return None
            return self._child(
                goal, node.side, t, d, node.instantiation, goal.depth, goal.next_eigen + 1, d2
            )
        w = reply.instantiation if self.mode == "late" else node.instantiation
        if not isinstance(w, Nabla) or not 1 <= w.level <= goal.depth + 1:
            return None
        return self._child(
            goal, node.side, t, d, w, max(goal.depth, w.level), goal.next_eigen, d2
        )

    # ------------------------------------------------- distinguishing formulas

    def build_left(self, goal: Goal) -> M.Formula | None:
        """A formula true of goal.left and false of goal.right, or None if the
        goal is bisimilar (or, in open mode, if the search is exhausted)."""
        if goal in self.fmemo:
            return self.fmemo[goal]
        if self.check(goal):
            self.fmemo[goal] = None
            return None
        res = self._build_left(goal)
        self.fmemo[goal] = res
        return res

    def _build_left(self, goal: Goal) -> M.Formula | None:
        for side in ("left", "right"):
            p = goal.left if side == "left" else goal.right
            for t in self.attacks(p, goal.depth):
                if not respects(t.theta, goal.distinct):
                    continue
                if self._defended(goal, side, t):
                    continue
                f = (
                    self._compose_dia(goal, t)
                    if side == "left"
                    else self._compose_box(goal, t)
                )
                if f is not None:
                    return f
        if self.mode == "open":
            return self._enumerate_separator(goal)
        raise InternalError("formula composition failed in a ground mode")

    def _compose_dia(self, goal: Goal, t: Transition) -> M.Formula | None:
        """Attacker is the left process: guards + diamond + conjunction."""
        d2 = goal.distinct.apply(t.theta)
        q = self._instantiated_opponent(goal, "left", t)
        dfs = _defenders(q, t.action, goal.depth)
        act = t.action
        core: M.Formula | None = None
        if isinstance(act, (Tau, FreeOut)):
            subs = self._all_children(goal, "left", t, dfs, None, goal.depth, goal.next_eigen, d2)
            if subs is None:
                return None
            core = M.FreeDia(act, _conj(subs))
        elif isinstance(act, BoundOut):
            w = Nabla(goal.depth + 1)
            subs = self._all_children(goal, "left", t, dfs, w, goal.depth + 1, goal.next_eigen, d2)
            if subs is None:
                return None
            core = M.OutDia(act.ch, M.close_formula(_conj(subs), w))
        elif self.mode == "open":
            w = Eigen(goal.next_eigen, goal.depth)
            subs = self._all_children(goal, "left", t, dfs, w, goal.depth, goal.next_eigen + 1, d2)
            if subs is None:
                return None
            core = M.InDiaL(act.ch, M.close_formula(_conj(subs), w))
        elif self.mode == "late":
            marker = Free("\0recv")
            parts = []
            for d in dfs:
                w, child = self._late_failing_input(goal, "left", t, d, d2)
                h = self.build_left(child)
                if h is None:
                    return None
                parts.append(M.MatchBox(marker, w, h))
            core = M.InDiaL(act.ch, M.close_formula(_conj(parts), marker))
        else:  # early
            w = self._early_failing_input(goal, "left", t, dfs, d2)
            subs = self._all_children(
                goal, "left", t, dfs, w, max(goal.depth, w.level), goal.next_eigen, d2
            )
            if subs is None:
                return None
            marker = Free("\0recv")
            core = M.InDiaE(act.ch, M.close_formula(M.MatchBox(marker, w, _conj(subs)), marker))
        return _guard(t.theta, core)

    def _compose_box(self, goal: Goal, t: Transition) -> M.Formula | None:
        """Attacker is the right process: guards + box + disjunction.  In open
        mode the candidate is only kept if satisfaction checking confirms it."""
        d2 = goal.distinct.apply(t.theta)
        q = self._instantiated_opponent(goal, "right", t)
        dfs = _defenders(q, t.action, goal.depth)
        act = t.action
        core: M.Formula | None = None
        if isinstance(act, (Tau, FreeOut)):
            subs = self._all_children(goal, "right", t, dfs, None, goal.depth, goal.next_eigen, d2)
            if subs is None:
                return None
            core = M.FreeBox(act, _disj(subs))
        elif isinstance(act, BoundOut):
            w = Nabla(goal.depth + 1)
            subs = self._all_children(goal, "right", t, dfs, w, goal.depth + 1, goal.next_eigen, d2)
            if subs is None:
                return None
            core = M.OutBox(act.ch, M.close_formula(_disj(subs), w))
        elif self.mode == "open":
            w = Eigen(goal.next_eigen, goal.depth)
            subs = self._all_children(goal, "right", t, dfs, w, goal.depth, goal.next_eigen + 1, d2)
            if subs is None:
                return None
            core = M.InBoxL(act.ch, M.close_formula(_disj(subs), w))
        elif self.mode == "late":
            marker = Free("\0recv")
            parts = []
            for d in dfs:
                w, child = self._late_failing_input(goal, "right", t, d, d2)
                h = self.build_left(child)
                if h is None:
                    return None
                parts.append(M.MatchDia(marker, w, h))
            core = M.InBoxL(act.ch, M.close_formula(_disj(parts), marker))
        else:  # early
            w = self._early_failing_input(goal, "right", t, dfs, d2)
            subs = self._all_children(
                goal, "right", t, dfs, w, max(goal.depth, w.level), goal.next_eigen, d2
            )
            if subs is None:
                return None
            marker = Free("\0recv")
            core = M.InBoxE(act.ch, M.close_formula(M.MatchDia(marker, w, _disj(subs)), marker))
        f = _guard(t.theta, core)
        if self.mode == "open" and not self._holds_left_only(goal, f):
            return None
        return f

    def _all_children(self, goal, side, t, dfs, w, depth, ne, d2) -> list[M.Formula] | None:
        subs = []
        for d in dfs:
            child = self._child(goal, side, t, d, w, depth, ne, d2)
            h = self.build_left(child)
            if h is None:
                return None
            subs.append(h)
        return subs

    def _holds_left_only(self, goal: Goal, f: M.Formula) -> bool:
        if self.mode == "open":
            return M.sat_open_at(goal.left, f, goal.depth, goal.next_eigen) and not M.sat_open_at(
                goal.right, f, goal.depth, goal.next_eigen
            )
        return M.sat_ground(goal.left, f, depth=goal.depth) and not M.sat_ground(
            goal.right, f, depth=goal.depth
        )

    _ENUM_CAP = 50_000

    def _enumerate_separator(self, goal: Goal) -> M.Formula | None:
        names: list[Name] = [Nabla(l) for l in range(1, goal.depth + 1)]
        seen: set[int] = set()

        def note(n, _d):
            if isinstance(n, Eigen) and n.id not in seen:
                seen.add(n.id)
                names.append(n)
            return n

        map_names(goal.left, note)
        map_names(goal.right, note)
        tried = 0
        for f in M.enumerate_lm(names, 3):
            tried += 1
            if tried > self._ENUM_CAP:
                return None
            if self._holds_left_only(goal, f):
                return f
        return None


def _conj(fs: list[M.Formula]) -> M.Formula:
    if not fs:
        return M.TRUE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = M.And(f, out)
    return out


def _disj(fs: list[M.Formula]) -> M.Formula:
    if not fs:
        return M.FALSE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = M.Or(f, out)
    return out


def _guard(theta: Subst, f: M.Formula) -> M.Formula:
    for var, val in reversed(theta.bindings):
        f = M.MatchBox(var, val, f)
    return f


# ------------------------------------------------------------------ entry points


@dataclass
class BisimResult:
    bisimilar: bool
    mode: str
    root: Goal
    certificate: tuple[Goal, ...] | None
    witness: FailNode | None
    stats: Stats
    game: _Game = field(repr=False)


def _check_inputs(left: Process, right: Process) -> None:
    if contains_bang(left) or contains_bang(right):
        raise ReplicationUnsupported()


def _run(mode: str, root: Goal, game: _Game) -> BisimResult:
    ok = game.check(root)
    if ok:
        cert = tuple([root] + [g for g in game.cert if g != root])
        return BisimResult(True, mode, root, cert, None, game.stats, game)
    return BisimResult(False, mode, root, None, game.explain(root), game.stats, game)


def open_bisim(
    left: Process,
    right: Process,
    prefix: Prefix = Prefix(()),
    distinct: Distinction = EMPTY_DISTINCTION,
    clause_style: str = "late",
    max_depth: int | None = None,
) -> BisimResult:
    _check_inputs(left, right)
    depth = max(prefix.nabla_count, infer_depth(left), infer_depth(right))
    ne = max(prefix.eigen_count, max_eigen_id(left), max_eigen_id(right)) + 1
    root = Goal(depth, ne, distinct, left, right)
    return _run("open", root, _Game("open", clause_style, max_depth))


def _ground_bisim(mode: str, left, right, depth, distinct, max_depth) -> BisimResult:
    _check_inputs(left, right)
    if max_eigen_id(left) or max_eigen_id(right):
        raise ValueError("ground modes require an all-nabla prefix")
    if depth is None:
        depth = max(infer_depth(left), infer_depth(right))
    root = Goal(depth, 1, distinct, left, right)
    return _run(mode, root, _Game(mode, max_depth=max_depth))


def late_bisim(
    left: Process,
    right: Process,
    depth: int | None = None,
    distinct: Distinction = EMPTY_DISTINCTION,
    max_depth: int | None = None,
) -> BisimResult:
    return _ground_bisim("late", left, right, depth, distinct, max_depth)


def early_bisim(
    left: Process,
    right: Process,
    depth: int | None = None,
    distinct: Distinction = EMPTY_DISTINCTION,
    max_depth: int | None = None,
) -> BisimResult:
    return _ground_bisim("early", left, right, depth, distinct, max_depth)


def distinguishing_formula(result: BisimResult) -> tuple[M.Formula, str]:
    """A formula holding on exactly one side of a refuted root, paired with
    the side (``"left"``/``"right"``) it holds on.  Raises WitnessMalformed on
    bisimilar results and InternalError if no checkable separator is found."""
    if result.bisimilar:
        raise WitnessMalformed("bisimilar results carry no distinguishing formula")
    game = result.game
    f = game.build_left(result.root)
    side = "left"
    if f is None:
        f = game.build_left(result.root.mirrored())
        side = "right"
    if f is None:
        raise InternalError("distinguishing-formula search exhausted")
    holder = result.root if side == "left" else result.root.mirrored()
    if not game._holds_left_only(holder, f):
        raise InternalError("constructed formula failed verification")
    return f, side


def verify_witness(result: BisimResult) -> bool:
    """Structurally replay a refutation witness: every recorded attack must
    exist, respect the distinctions, defeat every defender reply, and match
    the recorded continuations."""
    if result.bisimilar or result.witness is None:
        raise WitnessMalformed("only refutations carry a witness")
    game = _Game(result.mode, result.game.clause_style)
    return game.verify_node(result.root, result.witness)


def witness_mainline(node: FailNode) -> list[tuple[FailNode, Reply | None]]:
    """The principal branch of a witness: at each step the attack plus the
    first defender reply (None when the defender is stuck)."""
    line = []
    cur: FailNode | None = node
    while cur is not None:
        reply = cur.replies[0] if cur.replies else None
        line.append((cur, reply))
        cur = reply.child if reply else None
    return line
