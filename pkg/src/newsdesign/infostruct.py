"""Posterior trees for binary-state dynamic information structures.

Per-state branch probabilities are the primitives; beliefs are derived
from them by Bayes' rule.  A node may additionally carry a stored belief,
which ``validate`` checks against the derived one and against the
martingale condition.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .gainloss import GainLossSpec, LambdaScaled, TwoPartLinear, mu_eval

TOL = 1e-10
MOVE_TOL = 1e-12


class InvalidTree(ValueError):
    pass


@dataclass(frozen=True)
class Branch:
    child: int
    prob_G: float
    prob_B: float


@dataclass(frozen=True)
class Node:
    id: int
    period: int
    children: tuple[Branch, ...] = ()
    belief: float | None = None


@dataclass(frozen=True)
class Violation:
    kind: str
    path: tuple[int, ...]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class TreePath:
    nodes: tuple[int, ...]
    beliefs: tuple[float, ...]
    prob_G: float  # P(path | G)
    prob_B: float  # P(path | B)

    def prob(self, pi0: float) -> float:
        return pi0 * self.prob_G + (1.0 - pi0) * self.prob_B

    @property
    def state(self) -> str:
        return "G" if self.beliefs[-1] >= 0.5 else "B"


class PosteriorTree:
    """Finite tree of beliefs about state G with per-state branch probabilities."""

    def __init__(self, pi0: float, T: int, nodes: Sequence[Node], root: int | None = None):
        if not 0.0 <= pi0 <= 1.0:
            raise InvalidTree(f"prior must lie in [0, 1], got {pi0}")
        if T < 1:
            raise InvalidTree(f"horizon must be at least 1, got {T}")
        self.pi0 = float(pi0)
        self.T = int(T)
        self.nodes: dict[int, Node] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise InvalidTree(f"duplicate node id {node.id}")
            self.nodes[node.id] = node
        if not self.nodes:
            raise InvalidTree("tree has no nodes")
        self.root = nodes[0].id if root is None else root
        if self.root not in self.nodes:
            raise InvalidTree(f"root {self.root} is not a node")

    # -- derived quantities ------------------------------------------------

    @cached_property
    def reach(self) -> dict[int, tuple[float, float]]:
        """Per-state probability of reaching each node."""
        out = {self.root: (1.0, 1.0)}
        stack = [self.root]
        while stack:
            nid = stack.pop()
            rg, rb = out[nid]
            for br in self.nodes[nid].children:
                if br.child in out:
                    raise InvalidTree(f"node {br.child} is reached twice")
                if br.child not in self.nodes:
                    raise InvalidTree(f"missing child node {br.child}")
                out[br.child] = (rg * br.prob_G, rb * br.prob_B)
                stack.append(br.child)
        return out

    @cached_property
    def beliefs(self) -> dict[int, float | None]:
        """Bayes beliefs in G; ``None`` for nodes reached with probability 0."""
        out: dict[int, float | None] = {}
        for nid, (rg, rb) in self.reach.items():
            num = self.pi0 * rg
            den = num + (1.0 - self.pi0) * rb
            out[nid] = num / den if den > 0 else None
        return out

    def belief(self, nid: int) -> float:
        """Stored belief when present, else the derived one."""
        node = self.nodes[nid]
        if node.belief is not None:
            return float(node.belief)
        b = self.beliefs[nid]
        if b is None:
            raise InvalidTree(f"node {nid} is unreachable and has no stored belief")
        return b

    def paths(self) -> Iterator[TreePath]:
        """Root-to-leaf paths with positive probability."""

        def walk(nid, ids, bels, pg, pb):
            node = self.nodes[nid]
            if not node.children:
                yield TreePath(tuple(ids), tuple(bels), pg, pb)
                return
            for br in node.children:
                cg, cb = pg * br.prob_G, pb * br.prob_B
                if self.pi0 * cg + (1.0 - self.pi0) * cb <= 0.0:
                    continue
                yield from walk(br.child, ids + [br.child], bels + [self.belief(br.child)], cg, cb)

        yield from walk(self.root, [self.root], [self.pi0], 1.0, 1.0)

    # -- serialisation -----------------------------------------------------

    def to_json(self) -> dict:
        nodes = []
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            bel = node.belief if node.belief is not None else self.beliefs.get(nid)
            entry = {
                "id": nid,
                "period": node.period,
                "children": [
                    {"id": br.child, "prob_G": br.prob_G, "prob_B": br.prob_B} for br in node.children
                ],
            }
            if bel is not None:
                entry["belief"] = bel
            nodes.append(entry)
        return {"pi0": self.pi0, "T": self.T, "root": self.root, "nodes": nodes}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, obj: Mapping | str) -> "PosteriorTree":
        if isinstance(obj, str):
            obj = json.loads(obj)
        extra = set(obj) - {"pi0", "T", "nodes", "root"}
        if extra:
            raise InvalidTree(f"unknown tree keys {sorted(extra)}")
        nodes = []
        for raw in obj["nodes"]:
            bad = set(raw) - {"id", "period", "children", "belief"}
            if bad:
                raise InvalidTree(f"unknown node keys {sorted(bad)}")
            kids = []
            for ch in raw.get("children", []):
                if set(ch) - {"id", "prob_G", "prob_B"}:
                    raise InvalidTree(f"unknown child keys {sorted(set(ch))}")
                kids.append(Branch(int(ch["id"]), float(ch["prob_G"]), float(ch["prob_B"])))
            bel = raw.get("belief")
            nodes.append(Node(int(raw["id"]), int(raw["period"]), tuple(kids), None if bel is None else float(bel)))
        return cls(float(obj["pi0"]), int(obj["T"]), nodes, obj.get("root"))


class TreeBuilder:
    """Incremental construction with automatic node ids."""

    def __init__(self, pi0: float, T: int):
        self.pi0, self.T = pi0, T
        self._nodes: dict[int, dict] = {}
        self.root = self.add(0)

    def add(self, period: int, belief: float | None = None) -> int:
        nid = len(self._nodes)
        self._nodes[nid] = {"period": period, "children": [], "belief": belief}
        return nid

    def link(self, parent: int, child: int, prob_G: float, prob_B: float) -> None:
        self._nodes[parent]["children"].append(Branch(child, prob_G, prob_B))

    def child(self, parent: int, prob_G: float, prob_B: float, belief: float | None = None) -> int:
        nid = self.add(self._nodes[parent]["period"] + 1, belief)
        self.link(parent, nid, prob_G, prob_B)
        return nid

    def chain(self, start: int, until: int) -> int:
        """Uninformative nodes from ``start`` down to period ``until``."""
        nid = start
        while self._nodes[nid]["period"] < until:
            nid = self.child(nid, 1.0, 1.0)
        return nid

    def reveal(self, nid: int) -> None:
        """Full revelation at the next period, then nothing until T."""
        g = self.child(nid, 1.0, 0.0)
        b = self.child(nid, 0.0, 1.0)
        self.chain(g, self.T)
        self.chain(b, self.T)

    def build(self) -> PosteriorTree:
        nodes = [
            Node(nid, d["period"], tuple(d["children"]), d["belief"]) for nid, d in sorted(self._nodes.items())
        ]
        return PosteriorTree(self.pi0, self.T, nodes, self.root)


# ---------------------------------------------------------------------------
# validation


def validate(tree: PosteriorTree, tol: float = TOL) -> ValidationReport:
    out: list[Violation] = []
    try:
        reach = tree.reach
    except InvalidTree as exc:
        return ValidationReport((Violation("structure", (tree.root,), str(exc)),))
    unreached = set(tree.nodes) - set(reach)
    for nid in sorted(unreached):
        out.append(Violation("structure", (nid,), "node not reachable from the root"))

    def path_to(nid: int) -> tuple[int, ...]:
        parent = {br.child: n.id for n in tree.nodes.values() for br in n.children}
        p = [nid]
        while p[-1] in parent:
            p.append(parent[p[-1]])
        return tuple(reversed(p))

    if tree.nodes[tree.root].period != 0:
        out.append(Violation("structure", (tree.root,), "root must be at period 0"))
    root_b = tree.nodes[tree.root].belief
    if root_b is not None and abs(root_b - tree.pi0) > tol:
        out.append(Violation("belief", (tree.root,), f"root belief {root_b} differs from prior {tree.pi0}"))

    for nid in sorted(reach):
        node = tree.nodes[nid]
        rg, rb = reach[nid]
        live = tree.pi0 * rg + (1.0 - tree.pi0) * rb > 0.0
        if node.children:
            if node.period >= tree.T:
                out.append(Violation("structure", path_to(nid), "node past the horizon has children"))
            sg = sb = 0.0
            for br in node.children:
                child = tree.nodes.get(br.child)
                if child is not None and child.period != node.period + 1:
                    out.append(Violation("structure", path_to(br.child), "child period is not parent period + 1"))
                for name, pr in (("G", br.prob_G), ("B", br.prob_B)):
                    if not (-tol <= pr <= 1.0 + tol) or not math.isfinite(pr):
                        out.append(Violation("probability", path_to(br.child), f"P(branch | {name}) = {pr} outside [0,1]"))
                sg += br.prob_G
                sb += br.prob_B
            for name, s in (("G", sg), ("B", sb)):
                if abs(s - 1.0) > tol:
                    out.append(Violation("probability", path_to(nid), f"branch probabilities given {name} sum to {s}"))
        elif node.period != tree.T:
            out.append(Violation("structure", path_to(nid), f"leaf at period {node.period}, expected {tree.T}"))
        if not live:
            continue
        derived = tree.beliefs[nid]
        if node.belief is not None and abs(node.belief - derived) > tol:
            out.append(
                Violation("belief", path_to(nid), f"stored belief {node.belief} differs from Bayes belief {derived}")
            )
        if not node.children and node.period == tree.T:
            b = tree.belief(nid)
            if min(abs(b), abs(1.0 - b)) > tol:
                out.append(Violation("terminal", path_to(nid), f"terminal belief {b} is not 0 or 1"))
        if node.children:
            # martingale on the beliefs as recorded
            b = tree.belief(nid)
            mass = 0.0
            mean = 0.0
            for br in node.children:
                w = b * br.prob_G + (1.0 - b) * br.prob_B
                cb = tree.nodes[br.child].belief if br.child in tree.nodes else None
                if cb is None:
                    cb = tree.beliefs.get(br.child)
                if w > 0 and cb is not None:
                    mass += w
                    mean += w * cb
            if mass > 0 and abs(mean / mass - b) > tol:
                out.append(
                    Violation("martingale", path_to(nid), f"children average {mean / mass:.12g} under belief {b:.12g}")
                )
    return ValidationReport(tuple(out))


def _require_valid(tree: PosteriorTree) -> None:
    rep = validate(tree)
    if not rep.ok:
        first = rep.violations[0]
        raise InvalidTree(f"{first.kind} at {first.path}: {first.message}")


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class PathValue:
    beliefs: tuple[float, ...]
    prob: float
    utility: float


@dataclass(frozen=True)
class NewsValue:
    total: float
    by_state: tuple[float, float]  # (given G, given B)
    by_path: tuple[PathValue, ...]


def _v(beliefs: Sequence[float], reverse_ranking: bool) -> np.ndarray:
    b = np.asarray(beliefs, dtype=float)
    return 1.0 - b if reverse_ranking else b


def expected_news_utility(
    tree: PosteriorTree, spec: GainLossSpec, reverse_ranking: bool = False
) -> NewsValue:
    """Expected sum of ``mu(v_t - v_{t-1})``; ``v`` is the belief in G, or in B when reversed."""
    _require_valid(tree)
    per_path = []
    eg = eb = 0.0
    for path in tree.paths():
        v = _v(path.beliefs, reverse_ranking)
        util = float(np.sum(mu_eval(spec, np.diff(v))))
        per_path.append(PathValue(path.beliefs, path.prob(tree.pi0), util))
        eg += path.prob_G * util
        eb += path.prob_B * util
    total = tree.pi0 * eg + (1.0 - tree.pi0) * eb
    return NewsValue(total, (eg, eb), tuple(per_path))


# ---------------------------------------------------------------------------
# canonical structures


def one_shot_structure(pi0: float, T: int, reveal_period: int = 1) -> PosteriorTree:
    """Nothing is learned except in ``reveal_period``, when the state is revealed."""
    if T < 1:
        raise ValueError("horizon must be at least 1")
    if not 1 <= reveal_period <= T:
        raise ValueError(f"reveal_period must lie in [1, {T}], got {reveal_period}")
    b = TreeBuilder(pi0, T)
    last = b.chain(b.root, reveal_period - 1)
    b.reveal(last)
    return b.build()


def sequential_binary_structure(success_probs: Sequence[float]) -> PosteriorTree:
    """Signals X_1..X_T with P(X_t = 1) = q_t; the state is G (``A``) iff all succeed."""
    qs = [float(q) for q in success_probs]
    if len(qs) < 2:
        raise ValueError("need at least two signals")
    if any(not 0.0 < q < 1.0 for q in qs):
        raise ValueError("success probabilities must lie in (0, 1)")
    T = len(qs)
    tails = [math.prod(qs[t:]) for t in range(T + 1)]  # belief after t successes
    b = TreeBuilder(tails[0], T)
    node = b.root
    for t in range(1, T + 1):
        prior = tails[t - 1]
        p_success_bad = (qs[t - 1] - prior) / (1.0 - prior)
        p_success_bad = min(max(p_success_bad, 0.0), 1.0)
        ok = b.child(node, 1.0, p_success_bad)
        fail = b.child(node, 0.0, 1.0 - p_success_bad)
        b.chain(fail, T)
        node = ok
    return b.build()


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class StructureClass:
    tag: str  # "OneShot", "GGN_OSB", "GBN_OSG" or "Other"
    strict: bool


def _moves(v: np.ndarray) -> tuple[int, int]:
    d = np.diff(v)
    return int(np.sum(d > MOVE_TOL)), int(np.sum(d < -MOVE_TOL))


def classify(tree: PosteriorTree, reverse_ranking: bool = False) -> StructureClass:
    _require_valid(tree)
    good, bad = [], []
    for path in tree.paths():
        v = _v(path.beliefs, reverse_ranking)
        ups, downs = _moves(v)
        in_good = path.prob_G > 0 if not reverse_ranking else path.prob_B > 0
        in_bad = path.prob_B > 0 if not reverse_ranking else path.prob_G > 0
        if in_good:
            good.append((ups, downs))
        if in_bad:
            bad.append((ups, downs))
    everything = good + bad
    if all(u + d <= 1 for u, d in everything):
        return StructureClass("OneShot", False)
    if all(d == 0 for _, d in good) and all(d <= 1 for _, d in bad):
        return StructureClass("GGN_OSB", any(u >= 2 for u, _ in good))
    if all(u == 0 for u, _ in bad) and all(u <= 1 for u, _ in good):
        return StructureClass("GBN_OSG", any(d >= 2 for _, d in bad))
    return StructureClass("Other", False)


# ---------------------------------------------------------------------------
# gradual vs one-shot for lambda-scaled receivers


@dataclass(frozen=True)
class Choice:
    choice: str  # "gradual", "one-shot" or "indifferent"
    utility_gap: float
    gradual_value: float
    one_shot_value: float


def compare_gradual_oneshot(
    spec: GainLossSpec, prefers: str, success_probs: Sequence[float], tol: float = 1e-12
) -> Choice:
    """Sequential signals versus learning everything at once.

    ``prefers='A'`` ranks the all-success state above the other one, and
    ``prefers='B'`` reverses the ranking.
    """
    if prefers not in ("A", "B"):
        raise ValueError("prefers must be 'A' or 'B'")
    gradual = sequential_binary_structure(success_probs)
    one_shot = one_shot_structure(gradual.pi0, gradual.T, reveal_period=gradual.T)
    rev = prefers == "B"
    ug = expected_news_utility(gradual, spec, rev).total
    uo = expected_news_utility(one_shot, spec, rev).total
    if abs(ug - uo) <= tol:
        return Choice("indifferent", abs(ug - uo), ug, uo)
    if ug > uo:
        return Choice("gradual", ug - uo, ug, uo)
    return Choice("one-shot", uo - ug, ug, uo)


# ---------------------------------------------------------------------------
# alternative preference models


def _identity(x):
    return x


@dataclass(frozen=True)
class Anticipatory:
    u: Callable[[np.ndarray], np.ndarray] = _identity


@dataclass(frozen=True)
class Suspense:
    u: Callable[[np.ndarray], np.ndarray] = _identity
    alpha_A: float = 1.0
    alpha_B: float = 1.0


@dataclass(frozen=True)
class Surprise:
    u: Callable[[np.ndarray], np.ndarray] = _identity
    alpha_A: float = 1.0
    alpha_B: float = 1.0


AltModel = TwoPartLinear | Anticipatory | Suspense | Surprise


def score_alternative_model(tree: PosteriorTree, model: AltModel, reverse_ranking: bool = False) -> float:
    """Expected utility of ``tree`` under a non-news preference model.

    Anticipatory utility adds ``u`` of the expected consumption utility in
    each period 1..T.  Suspense applies ``u`` to the conditional expected
    squared belief movement before it happens; surprise applies ``u`` to
    the realised squared movement.  With binary states the movement in the
    other state's probability equals the movement in G's, so the two
    weights enter only through their sum.  ``reverse_ranking`` swaps which
    state delivers consumption utility 1 (and swaps the two weights).
    """
    _require_valid(tree)
    if isinstance(model, TwoPartLinear):
        return expected_news_utility(tree, model, reverse_ranking).total
    if isinstance(model, Anticipatory):
        total = 0.0
        for path in tree.paths():
            v = _v(path.beliefs, reverse_ranking)
            total += path.prob(tree.pi0) * float(np.sum(model.u(v[1:])))
        return total
    if isinstance(model, Surprise):
        w = model.alpha_A + model.alpha_B
        total = 0.0
        for path in tree.paths():
            d = np.diff(np.asarray(path.beliefs))
            total += path.prob(tree.pi0) * float(np.sum(model.u(w * d * d)))
        return total
    if isinstance(model, Suspense):
        w = model.alpha_A + model.alpha_B
        total = 0.0
        for nid, (rg, rb) in tree.reach.items():
            node = tree.nodes[nid]
            p_node = tree.pi0 * rg + (1.0 - tree.pi0) * rb
            if not node.children or p_node <= 0:
                continue
            b = tree.belief(nid)
            expect = 0.0
            for br in node.children:
                pc = b * br.prob_G + (1.0 - b) * br.prob_B
                if pc > 0:
                    expect += pc * (tree.belief(br.child) - b) ** 2
            total += p_node * float(model.u(w * expect))
        return total
    raise TypeError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# relaxed smoothing comparator


@dataclass(frozen=True)
class RelaxedPath:
    path: tuple[float, ...]
    value: float


def relaxed_smoothing_value(spec: GainLossSpec, pi0: float, T: int) -> RelaxedPath:
    """Good-state value of equal increments from ``pi0`` to 1 over ``T`` periods."""
    if T < 1:
        raise ValueError("T must be at least 1")
    path = tuple(pi0 + (t / T) * (1.0 - pi0) for t in range(T + 1))
    value = T * float(mu_eval(spec, (1.0 - pi0) / T))
    return RelaxedPath(path, value)
