"""Optimization passes: circuit cutter, dependency reducer, qubit reuser.

Each structural pass exists in an exact variant (exhaustive search with a
hard instance-size bound, used as ground truth) and a heuristic variant.
Passes are pure with respect to their input: they deep-copy the IR and
return the optimized copy. A shared virtualization budget limits the total
number of gates virtualized across the pipeline.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, replace

import networkx as nx
import numpy as np
from networkx.algorithms.community import kernighan_lin_bisection

from .circuit import instr
from .vc import Gate2, VirtualCircuit, VirtualSide, virt_between, virt_gate

EXACT_CUT_MAX_QUBITS = 14
EXACT_DR_MAX_GATES = 16
KL_RESTARTS = 10


class PassError(RuntimeError):
    """Base class for optimization-pass failures."""


class InstanceTooLargeError(PassError):
    """The instance exceeds an exact solver's exhaustive-search bound."""


class WidthUnreachableError(PassError):
    """Qubit reuse cannot bring a fragment down to the target width."""


@dataclass(frozen=True)
class PassConfig:
    """Shared pass parameters: target width, virtualization budget, RNG seed."""

    max_fragment_size: int
    budget: int
    seed: int = 0
    exact: bool = False

    def __post_init__(self):
        if self.max_fragment_size < 1:
            raise ValueError("max_fragment_size must be >= 1")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")


@dataclass(frozen=True)
class CutSolution:
    """A qubit-graph partition: fragment assignment plus its cut cost."""

    assignment: dict[int, int]
    cut_edges: tuple[tuple[int, int], ...]
    cost: int
    balance: int


def _partition_stats(graph: nx.Graph, assignment: dict[int, int]) -> CutSolution:
    cut_edges = tuple(sorted(
        (min(u, v), max(u, v)) for u, v in graph.edges
        if assignment[u] != assignment[v]))
    cost = sum(graph[u][v]["weight"] for u, v in cut_edges)
    sizes: dict[int, int] = {}
    for part in assignment.values():
        sizes[part] = sizes.get(part, 0) + 1
    balance = sum(n * n for n in sizes.values())
    return CutSolution(dict(assignment), cut_edges, cost, balance)


def _bb_partition(graph: nx.Graph, vertices: list[int], s: int,
                  cost_bound: int) -> dict[int, int]:
    """Minimum-weight partition of one connected component into parts of at
    most ``s`` vertices; ties minimize the sum of squared part sizes, then
    the first (lexicographic) assignment in restricted-growth order wins.
    """
    n = len(vertices)
    index = {v: i for i, v in enumerate(vertices)}
    # Weighted edges to lower-indexed vertices, precomputed once.
    neighbors = []
    for i, v in enumerate(vertices):
        neighbors.append([(index[u], data["weight"])
                          for u, data in graph[v].items() if index[u] < i])

    best_cost = cost_bound
    best_balance = float("inf")
    best_assign: list[int] | None = None
    part_of = [0] * n
    part_sizes: list[int] = []

    def recurse(i: int, cost: int, balance: int) -> None:
        nonlocal best_cost, best_balance, best_assign
        if cost > best_cost:
            return
        if i == n:
            if cost < best_cost or (cost == best_cost and balance < best_balance):
                best_cost, best_balance = cost, balance
                best_assign = part_of[:]
            return
        remaining = n - i
        if cost == best_cost and balance + remaining >= best_balance:
            return
        max_part = len(part_sizes)
        for j in range(max_part + 1):
            if j < max_part:
                if part_sizes[j] >= s:
                    continue
                delta = sum(w for u, w in neighbors[i] if part_of[u] != j)
                part_of[i] = j
                part_sizes[j] += 1
                recurse(i + 1, cost + delta,
                        balance + 2 * (part_sizes[j] - 1) + 1)
                part_sizes[j] -= 1
            else:
                delta = sum(w for _, w in neighbors[i])
                part_of[i] = j
                part_sizes.append(1)
                recurse(i + 1, cost + delta, balance + 1)
                part_sizes.pop()

    recurse(0, 0, 0)
    if best_assign is None:  # bound from the heuristic was already optimal
        raise AssertionError("branch-and-bound found no assignment")
    return {v: best_assign[i] for i, v in enumerate(vertices)}


def solve_cut_exact(graph: nx.Graph, s: int, seed: int = 0) -> CutSolution:
    """Exhaustively optimal cut of a weighted qubit graph.

    Independent components never gain from merging or splitting, so each
    oversized connected component is solved on its own and small components
    stay whole; this is equivalent to the global search.
    """
    if graph.number_of_nodes() > EXACT_CUT_MAX_QUBITS:
        raise InstanceTooLargeError(
            f"{graph.number_of_nodes()} qubits exceeds the exhaustive bound "
            f"of {EXACT_CUT_MAX_QUBITS}")
    assignment: dict[int, int] = {}
    next_part = 0
    for comp in sorted(nx.connected_components(graph), key=min):
        comp_sorted = sorted(comp)
        if len(comp_sorted) <= s:
            for q in comp_sorted:
                assignment[q] = next_part
            next_part += 1
            continue
        sub = graph.subgraph(comp_sorted)
        incumbent, _ = _kl_cut_plan(sub, s, random.Random(seed))
        bound = sum(sub[u][v]["weight"] for u, v in incumbent)
        local = _bb_partition(sub, comp_sorted, s, bound)
        for q, part in local.items():
            assignment[q] = next_part + part
        next_part += max(local.values()) + 1
    return _partition_stats(graph, assignment)


def _kl_cut_plan(graph: nx.Graph, s: int,
                 rng: random.Random) -> tuple[list[tuple[int, int]], list[set]]:
    """Iterated Kernighan-Lin bisection plan: cut edges and final parts."""
    work = graph.copy()
    removed: list[tuple[int, int]] = []
    while True:
        comps = sorted(nx.connected_components(work), key=lambda c: (-len(c), min(c)))
        if not comps or len(comps[0]) <= s:
            break
        target = comps[0]
        sub = work.subgraph(target)
        best = None
        for _ in range(KL_RESTARTS):
            part = kernighan_lin_bisection(
                sub, weight="weight", seed=rng.randrange(2**32))
            cost = sum(w for u, v, w in sub.edges(data="weight")
                       if (u in part[0]) != (v in part[0]))
            if best is None or cost < best[0]:
                best = (cost, part)
        _, (v1, v2) = best
        crossing = sorted((min(u, v), max(u, v)) for u, v in sub.edges
                          if (u in v1) != (v in v1))
        removed.extend(crossing)
        work.remove_edges_from(crossing)
    parts = sorted(nx.connected_components(work), key=min)
    return removed, parts


def _apply_cut(vc: VirtualCircuit,
               cut_edges: list[tuple[int, int]],
               budget: int) -> VirtualCircuit:
    total = sum(vc.qubit_graph[u][v]["weight"] for u, v in cut_edges)
    out = vc.copy()
    if total > budget:
        return out  # over budget: no gate is virtualized
    for u, v in cut_edges:
        virt_between(out, u, v)
    return out


def cut_exact(vc: VirtualCircuit, cfg: PassConfig) -> VirtualCircuit:
    """Split the circuit into fragments of at most ``s`` qubits with the
    provably minimal number of virtualized gates (ties: most even sizes)."""
    if vc.num_qubits > EXACT_CUT_MAX_QUBITS:
        raise InstanceTooLargeError(
            f"{vc.num_qubits} qubits exceeds the exact-cut bound of "
            f"{EXACT_CUT_MAX_QUBITS}")
    solution = solve_cut_exact(vc.qubit_graph, cfg.max_fragment_size, cfg.seed)
    return _apply_cut(vc, list(solution.cut_edges), cfg.budget)


def cut_greedy_kl(vc: VirtualCircuit, cfg: PassConfig) -> VirtualCircuit:
    """Heuristic cutter: bisect the largest connected component of the qubit
    graph with Kernighan-Lin until every fragment fits."""
    rng = random.Random(cfg.seed)
    cut_edges, _ = _kl_cut_plan(vc.qubit_graph, cfg.max_fragment_size, rng)
    return _apply_cut(vc, cut_edges, cfg.budget)


# ---------------------------------------------------------------------------
# dependency reducer

def _dependency_pairs(op_graph: nx.MultiDiGraph,
                      gate_qubits: dict[int, tuple[int, int]]) -> set[tuple[int, int]]:
    reach: dict[int, int] = {}
    pairs: set[tuple[int, int]] = set()
    for gid in reversed(list(nx.topological_sort(op_graph))):
        qa, qb = gate_qubits[gid]
        mask = (1 << qa) | (1 << qb)
        for succ in op_graph.successors(gid):
            mask |= reach[succ]
        reach[gid] = mask
        for q_src in (qa, qb):
            m = mask
            q = 0
            while m:
                if m & 1 and q != q_src:
                    pairs.add((q, q_src))
                m >>= 1
                q += 1
    return pairs


def _relinked_removal(op_graph: nx.MultiDiGraph, gids: tuple[int, ...]) -> nx.MultiDiGraph:
    """Copy of the operation graph with gates removed wire-consistently."""
    g = op_graph.copy()
    for gid in gids:
        by_qubit: dict[int, dict[str, int]] = {}
        for u, _, key in g.in_edges(gid, keys=True):
            by_qubit.setdefault(key, {})["pred"] = u
        for _, v, key in g.out_edges(gid, keys=True):
            by_qubit.setdefault(key, {})["succ"] = v
        g.remove_node(gid)
        for q, link in by_qubit.items():
            if "pred" in link and "succ" in link:
                g.add_edge(link["pred"], link["succ"], key=q, qubit=q)
    return g


def reduce_dependencies_exact(vc: VirtualCircuit, cfg: PassConfig) -> VirtualCircuit:
    """Virtualize the gate set of size <= budget that provably minimizes the
    number of qubit dependencies (ties: fewer gates, then lowest ids)."""
    from itertools import combinations

    gate_ids = sorted(gid for gid in vc.op_graph.nodes)
    if len(gate_ids) > EXACT_DR_MAX_GATES:
        raise InstanceTooLargeError(
            f"{len(gate_ids)} gates exceeds the exact-reducer bound of "
            f"{EXACT_DR_MAX_GATES}")
    best_subset: tuple[int, ...] = ()
    best_dq = len(_dependency_pairs(vc.op_graph, vc.gate_qubits))
    for size in range(1, min(cfg.budget, len(gate_ids)) + 1):
        for subset in combinations(gate_ids, size):
            g = _relinked_removal(vc.op_graph, subset)
            dq = len(_dependency_pairs(g, vc.gate_qubits))
            if dq < best_dq:
                best_dq = dq
                best_subset = subset
    out = vc.copy()
    for gid in best_subset:
        virt_gate(out, gid)
    return out


def gate_costs(vc: VirtualCircuit) -> dict[int, int]:
    """anc(g) * desc(g) for every real two-qubit gate.

    One forward and one reverse sweep in topological (= instruction) order.
    The operation graph is a union of per-wire chains, so a gate's ancestor
    set is the union of per-wire chain prefixes up to a frontier, and every
    ancestor, being a two-qubit gate, lies on exactly two of those wires:
    anc(g) = sum_q (frontier[q] + 1) / 2. Runs in O(gates * width).
    """
    order = [x.id for x in vc.instructions if isinstance(x, Gate2)]
    n = vc.num_qubits
    chain_len: dict[int, int] = {}
    pos: dict[int, tuple[tuple[int, int], ...]] = {}
    for gid in order:
        entries = []
        for q in vc.gate_qubits[gid]:
            entries.append((q, chain_len.get(q, 0)))
            chain_len[q] = chain_len.get(q, 0) + 1
        pos[gid] = tuple(entries)

    def sweep(sequence, neighbors, positions):
        counts: dict[int, int] = {}
        frontier: dict[int, np.ndarray] = {}
        consumers = {gid: 0 for gid in sequence}
        for gid in sequence:
            for p in set(neighbors(gid)):
                consumers[p] += 1
        for gid in sequence:
            fv = np.full(n, -1, dtype=np.int64)
            for p in set(neighbors(gid)):
                np.maximum(fv, frontier[p], out=fv)
                for q, idx in positions[p]:
                    if idx > fv[q]:
                        fv[q] = idx
                consumers[p] -= 1
                if consumers[p] == 0:
                    del frontier[p]
            counts[gid] = (int(fv.sum()) + n) // 2
            frontier[gid] = fv
        return counts

    anc = sweep(order, lambda g: list(vc.op_graph.predecessors(g)), pos)
    rpos = {gid: tuple((q, chain_len[q] - 1 - idx) for q, idx in entries)
            for gid, entries in pos.items()}
    desc = sweep(list(reversed(order)),
                 lambda g: list(vc.op_graph.successors(g)), rpos)
    return {gid: anc[gid] * desc[gid] for gid in order}


def reduce_dependencies_greedy(vc: VirtualCircuit, cfg: PassConfig) -> VirtualCircuit:
    """Repeatedly virtualize a gate of maximal ancestor*descendant cost.

    Stops early once every remaining gate has cost zero. Ties are broken by
    a seeded random choice.
    """
    rng = random.Random(cfg.seed)
    out = vc.copy()
    for _ in range(cfg.budget):
        costs = gate_costs(out)
        if not costs:
            break
        top = max(costs.values())
        if top == 0:
            break
        candidates = sorted(gid for gid, c in costs.items() if c == top)
        virt_gate(out, rng.choice(candidates))
    return out


# ---------------------------------------------------------------------------
# qubit reuser

def _instruction_wires(x) -> tuple[int, ...]:
    if isinstance(x, VirtualSide):
        return (x.qubit,)
    return x.qubits


def _closure_of_wire(instructions: list, wire: int) -> set[int]:
    """Indices of all instructions the given wire's content depends on,
    including the wire's own instructions (per-wire chains plus two-qubit
    joins define the dependency DAG)."""
    preds: list[tuple[int, ...]] = []
    last: dict[int, int] = {}
    seeds: list[int] = []
    for i, x in enumerate(instructions):
        wires = _instruction_wires(x)
        preds.append(tuple(last[w] for w in wires if w in last))
        for w in wires:
            last[w] = i
        if wire in wires:
            seeds.append(i)
    closure: set[int] = set()
    stack = list(seeds)
    while stack:
        i = stack.pop()
        if i in closure:
            continue
        closure.add(i)
        stack.extend(p for p in preds[i] if p not in closure)
    return closure


def _relabel_wire(x, src: int, dst: int):
    if isinstance(x, VirtualSide):
        return replace(x, qubit=dst) if x.qubit == src else x
    if isinstance(x, Gate2):
        if src in x.qubits:
            return replace(x, qubits=tuple(dst if q == src else q for q in x.qubits))
        return x
    if src in x.qubits:
        return x.remap({q: (dst if q == src else q) for q in x.qubits})
    return x


def _merge_wires(vc: VirtualCircuit, target: int, source: int) -> None:
    """Measure and reset the target wire, then run the source wire on it.

    The stream is reordered into [everything the target wire depends on]
    [reset target] [the rest, with the source wire relabeled]; per-wire
    instruction order is preserved, so every instantiation stays
    semantically identical.
    """
    closure = _closure_of_wire(vc.instructions, target)
    head = [x for i, x in enumerate(vc.instructions) if i in closure]
    tail = [_relabel_wire(x, source, target)
            for i, x in enumerate(vc.instructions) if i not in closure]
    vc.instructions = head + [instr("reset", target)] + tail
    vc.wire_hosts[target].extend(vc.wire_hosts.pop(source))
    for q, w in vc.wire_of.items():
        if w == source:
            vc.wire_of[q] = target


def reuse_qubits(vc: VirtualCircuit, cfg: PassConfig) -> VirtualCircuit:
    """Shrink over-wide fragments by reusing finished wires.

    A wire pair (w_t, w_s) inside one fragment is reusable when nothing on
    w_t depends on w_s, so that w_t can finish, be measured and reset, and
    then carry w_s's operations. Before any merge this is exactly the
    qubit-dependency test; afterwards it is evaluated on the instruction
    stream, because an earlier merge serializes its wire's history and that
    ordering must constrain later merges. Raises
    :class:`WidthUnreachableError` when a fragment stays wider than the
    target and no pair is reusable.
    """
    rng = random.Random(cfg.seed)
    out = vc.copy()
    for frag_index in range(len(out.fragments)):
        while True:
            frag = out.fragments[frag_index]
            if frag.width <= cfg.max_fragment_size:
                break
            candidates = []
            for w_t in frag.wires:
                closure = _closure_of_wire(out.instructions, w_t)
                blocked = {w for i in closure
                           for w in _instruction_wires(out.instructions[i])}
                for w_s in frag.wires:
                    if w_s != w_t and w_s not in blocked:
                        candidates.append((w_t, w_s))
            if not candidates:
                raise WidthUnreachableError(
                    f"fragment {frag.index} stuck at width {frag.width} > "
                    f"{cfg.max_fragment_size}: no reusable wire pair")
            _merge_wires(out, *rng.choice(candidates))
    return out


# ---------------------------------------------------------------------------
# pipeline

_PASS_NAMES = ("cc", "dr", "qr")


def run_pipeline(vc: VirtualCircuit, cfg: PassConfig,
                 passes: tuple = _PASS_NAMES) -> VirtualCircuit:
    """Cut, reduce dependencies, then reuse qubits, threading one budget.

    The cutter consumes part of the budget; the reducer spends what is left;
    the reuser needs none. A reuse failure propagates as the pipeline
    failure signal. Entries of ``passes`` may also be custom callables with
    the pass signature ``(vc, cfg) -> vc``; any gates they virtualize count
    against the shared budget too.
    """
    budget = cfg.budget
    out = vc
    for name in passes:
        if callable(name):
            fn = name
        elif name == "cc":
            fn = cut_exact if cfg.exact else cut_greedy_kl
        elif name == "dr":
            fn = reduce_dependencies_exact if cfg.exact else reduce_dependencies_greedy
        elif name == "qr":
            fn = reuse_qubits
        else:
            raise PassError(f"unknown pass {name!r}")
        stage_cfg = replace(cfg, budget=budget)
        before = len(out.virtual_gates)
        out = fn(out, stage_cfg)
        budget -= len(out.virtual_gates) - before
    return out
