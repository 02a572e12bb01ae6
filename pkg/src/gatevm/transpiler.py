"""Qubit mapping, SWAP routing and evaluation metrics.

Routing is deliberately simple: a greedy initial layout that matches the
circuit's interaction graph onto the coupling graph, then shortest-path
SWAP insertion (each SWAP materialized as three CX). Comparisons between
cut and uncut circuits both go through this same transpiler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx

from .circuit import Circuit, GATES_2Q, Instruction, instr
from .qpu import QpuModel


class TranspileError(ValueError):
    pass


@dataclass
class PhysicalCircuit:
    """A routed circuit whose two-qubit gates all sit on coupling edges."""

    circuit: Circuit
    layout: dict[int, int]        # initial logical -> physical
    final_layout: dict[int, int]  # logical -> physical after routing
    inserted_swaps: int


def _interaction_graph(c: Circuit) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(c.num_qubits))
    for ins in c.instructions:
        if ins.kind in GATES_2Q:
            a, b = ins.qubits
            if g.has_edge(a, b):
                g[a][b]["weight"] += 1
            else:
                g.add_edge(a, b, weight=1)
    return g


def _greedy_layout(c: Circuit, coupling: nx.Graph,
                   distances: dict) -> dict[int, int]:
    """Greedy subgraph matching of the interaction graph onto the coupling
    graph: highest-degree logical qubits first, each placed to maximize
    adjacency to its already-placed neighbors, preferring close spots with
    the most remaining room. Fully deterministic."""
    inter = _interaction_graph(c)
    order = sorted(inter.nodes,
                   key=lambda q: (-sum(d["weight"] for d in inter[q].values()), q))
    layout: dict[int, int] = {}
    free = set(coupling.nodes)
    for logical in order:
        placed_nb = [layout[nb] for nb in inter[logical] if nb in layout]
        best_score = None
        best = None
        for p in sorted(free):
            adjacency = sum(1 for pn in placed_nb if coupling.has_edge(p, pn))
            dist = sum(distances[p].get(pn, len(coupling)) for pn in placed_nb)
            room = sum(1 for nb in coupling[p] if nb in free)
            score = (adjacency, -dist, room, -p)
            if best_score is None or score > best_score:
                best_score, best = score, p
        layout[logical] = best
        free.discard(best)
    return layout


def map_and_route(c: Circuit, qpu: QpuModel, seed: int = 0) -> PhysicalCircuit:
    """Map a circuit onto a QPU and insert SWAPs (3 CX each) for two-qubit
    gates on non-adjacent qubits. Deterministic for a given seed.

    The routed circuit always ends with explicit measurements for the
    logical outputs (the input's measurements remapped, or every logical
    qubit when the input has none), so its output distribution is directly
    comparable with the unrouted circuit's.
    """
    c.validate()
    if c.num_qubits > qpu.num_qubits:
        raise TranspileError(
            f"circuit needs {c.num_qubits} qubits, QPU {qpu.name} has "
            f"{qpu.num_qubits}")
    coupling = qpu.graph()
    distances = dict(nx.all_pairs_shortest_path_length(coupling))
    layout = _greedy_layout(c, coupling, distances)

    l2p = dict(layout)
    p2l = {p: l for l, p in l2p.items()}
    out: list[Instruction] = []
    swaps = 0
    has_measure = any(ins.kind == "measure" for ins in c.instructions)

    def emit_swap(pa: int, pb: int) -> None:
        nonlocal swaps
        out.extend([instr("cx", pa, pb), instr("cx", pb, pa), instr("cx", pa, pb)])
        swaps += 1
        la, lb = p2l.get(pa), p2l.get(pb)
        if la is not None:
            l2p[la] = pb
        if lb is not None:
            l2p[lb] = pa
        p2l[pa], p2l[pb] = lb, la

    for ins in c.instructions:
        if ins.kind in GATES_2Q:
            a, b = (l2p[q] for q in ins.qubits)
            if not coupling.has_edge(a, b):
                if b not in distances[a]:
                    raise TranspileError(
                        f"qubits {ins.qubits} are not connected on {qpu.name}")
                path = nx.shortest_path(coupling, a, b)
                for nxt in path[1:-1]:
                    emit_swap(l2p[ins.qubits[0]], nxt)
                a, b = (l2p[q] for q in ins.qubits)
            out.append(Instruction(ins.kind, (a, b), ins.angle))
        elif ins.kind == "barrier":
            out.append(ins.remap({q: l2p[q] for q in ins.qubits}))
        else:
            out.append(ins.remap({q: l2p[q] for q in ins.qubits}))

    if not has_measure:
        for q in range(c.num_qubits):
            out.append(instr("measure", l2p[q], clbit=q))
        num_clbits = c.num_qubits
    else:
        num_clbits = c.num_clbits
    routed = Circuit(qpu.num_qubits, out, name=f"{c.name}@{qpu.name}",
                     num_clbits=num_clbits).validate()
    return PhysicalCircuit(routed, layout, dict(l2p), swaps)


# ---------------------------------------------------------------------------
# metrics

def depth(c: Circuit) -> int:
    """Longest chain in per-qubit precedence; barriers are transparent."""
    level: dict[int, int] = {}
    best = 0
    for ins in c.instructions:
        if ins.kind == "barrier":
            continue
        d = max((level.get(q, 0) for q in ins.qubits), default=0) + 1
        for q in ins.qubits:
            level[q] = d
        best = max(best, d)
    return best


def cnot_count(c: Circuit) -> int:
    """Number of CX gates (inserted SWAPs already count as three each)."""
    return sum(1 for ins in c.instructions if ins.kind == "cx")


def esp(pc: PhysicalCircuit | Circuit, qpu: QpuModel) -> float:
    """Estimated success probability: product of (1 - e_op) over every gate,
    measurement and reset; barriers are free."""
    c = pc.circuit if isinstance(pc, PhysicalCircuit) else pc
    value = 1.0
    for ins in c.instructions:
        if ins.kind == "barrier":
            continue
        value *= 1.0 - qpu.rate_for(ins.kind, len(ins.qubits))
    return value


def _as_prob_dict(dist) -> dict[int, float]:
    if hasattr(dist, "entries"):
        return dict(dist.entries)
    return dict(dist)


def hellinger_fidelity(p, q, clip: bool = True) -> float:
    """(1 - H^2)^2 with H the Hellinger distance between two distributions.

    Inputs are sparse maps (or signed distributions). With ``clip`` enabled,
    negative quasi-probability mass is clipped to zero and the distribution
    renormalized; otherwise inputs must be non-negative and sum to one
    within 1e-6.
    """
    dists = []
    for d in (p, q):
        entries = _as_prob_dict(d)
        if clip:
            pos = {k: v for k, v in entries.items() if v > 0.0}
            norm = sum(pos.values())
            if norm <= 0.0:
                raise TranspileError("distribution has no positive mass")
            dists.append({k: v / norm for k, v in pos.items()})
        else:
            if any(v < 0.0 for v in entries.values()):
                raise TranspileError("negative probability with clipping disabled")
            if abs(sum(entries.values()) - 1.0) > 1e-6:
                raise TranspileError("distribution does not sum to 1")
            dists.append(entries)
    a, b = dists
    keys = set(a) | set(b)
    h_sq = 0.5 * sum((math.sqrt(a.get(k, 0.0)) - math.sqrt(b.get(k, 0.0))) ** 2
                     for k in keys)
    return (1.0 - h_sq) ** 2
