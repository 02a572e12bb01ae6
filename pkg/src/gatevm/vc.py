"""Virtual-circuit IR: virtual gates, fragments, and the analysis graphs.

A :class:`VirtualCircuit` extends the instruction stream with virtual
gates, each realized as two independently schedulable per-qubit sides. Two
graphs are maintained incrementally: the operation graph (a DAG of real
two-qubit gates linked by direct wire dependencies) and the qubit graph
(qubits weighted by the number of real two-qubit gates between them).
Fragments are the connected components of the qubit graph.

Instructions reference *wires*. Initially wire i hosts qubit i; the qubit
reuse pass may later merge several qubits onto one wire. The graphs always
speak about original qubits.

A VirtualCircuit is mutated by one caller at a time; concurrent reads are
fine, and instances move between processes via pickling.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import networkx as nx

from .circuit import Circuit, GATES_2Q, Instruction, instr
from .decomp import GateDecomposition, decomposition_for


class VcError(ValueError):
    """Raised for invalid virtualization requests or unsupported inputs."""


@dataclass(frozen=True)
class Gate2:
    """A real two-qubit gate in the stream; ``qubits`` are current wires."""

    id: int
    kind: str
    qubits: tuple[int, int]
    angle: float | None = None

    def to_instruction(self) -> Instruction:
        return instr(self.kind, *self.qubits, angle=self.angle)


@dataclass(frozen=True)
class VirtualSide:
    """One side of a virtual gate, acting on a single wire."""

    gate_id: int
    side: str  # "a" or "b"
    qubit: int  # current wire


@dataclass(frozen=True)
class VirtualGate:
    id: int
    kind: str
    qubits: tuple[int, int]  # original qubits (side a, side b)
    angle: float | None
    decomposition: GateDecomposition


@dataclass(frozen=True)
class Fragment:
    """A maximal set of qubits connected only by real two-qubit gates."""

    index: int
    qubits: tuple[int, ...]
    wires: tuple[int, ...]

    @property
    def width(self) -> int:
        return len(self.wires)


VInstruction = Instruction | Gate2 | VirtualSide


@dataclass
class VirtualCircuit:
    num_qubits: int
    num_clbits: int
    instructions: list[VInstruction]
    op_graph: nx.MultiDiGraph
    qubit_graph: nx.Graph
    gate_qubits: dict[int, tuple[int, int]]  # gate id -> original qubits
    virtual_gates: dict[int, VirtualGate] = field(default_factory=dict)
    gate_order: list[int] = field(default_factory=list)  # creation order
    wire_of: dict[int, int] = field(default_factory=dict)
    wire_hosts: dict[int, list[int]] = field(default_factory=dict)
    name: str = "circuit"

    @property
    def fragments(self) -> list[Fragment]:
        comps = sorted(nx.connected_components(self.qubit_graph), key=min)
        out = []
        for i, comp in enumerate(comps):
            qubits = tuple(sorted(comp))
            wires = tuple(sorted({self.wire_of[q] for q in qubits}))
            out.append(Fragment(i, qubits, wires))
        return out

    def fragment_of(self, qubit: int) -> int:
        for frag in self.fragments:
            if qubit in frag.qubits:
                return frag.index
        raise VcError(f"unknown qubit {qubit}")

    def real_gates(self) -> list[Gate2]:
        return [x for x in self.instructions if isinstance(x, Gate2)]

    def num_real_gates(self) -> int:
        return sum(1 for x in self.instructions if isinstance(x, Gate2))

    def max_fragment_width(self) -> int:
        return max((f.width for f in self.fragments), default=0)

    def copy(self) -> "VirtualCircuit":
        return copy.deepcopy(self)


def from_circuit(c: Circuit, name: str | None = None) -> VirtualCircuit:
    """Convert a circuit into the IR, building both graphs in one traversal.

    Measurements must be terminal per qubit and are re-appended at the end
    of the stream; a circuit without measurements is read as measuring every
    qubit. Resets are rejected: the source model measures at the end only.
    """
    c.validate()
    last_op: dict[int, int] = {}
    for i, ins in enumerate(c.instructions):
        if ins.kind == "barrier":
            continue
        for q in ins.qubits:
            last_op[q] = i

    measured: dict[int, int] = {}
    gates: list[Instruction] = []
    for i, ins in enumerate(c.instructions):
        if ins.kind == "reset":
            raise VcError("reset instructions are not part of the input model")
        if ins.kind == "measure":
            q = ins.qubits[0]
            if ins.sign:
                raise VcError("sign-marked measurements are runtime artifacts")
            if last_op[q] != i:
                raise VcError(f"mid-circuit measurement on qubit {q}")
            if q in measured:
                raise VcError(f"qubit {q} measured twice")
            measured[q] = ins.clbit if ins.clbit is not None else q
            continue
        gates.append(ins)

    if measured:
        num_clbits = max(c.num_clbits, max(measured.values()) + 1)
    else:
        measured = {q: q for q in range(c.num_qubits)}
        num_clbits = c.num_qubits

    op_graph = nx.MultiDiGraph()
    qubit_graph = nx.Graph()
    qubit_graph.add_nodes_from(range(c.num_qubits))
    gate_qubits: dict[int, tuple[int, int]] = {}
    instructions: list[VInstruction] = []
    last_gate: dict[int, int] = {}
    next_id = 0
    for ins in gates:
        if ins.kind in GATES_2Q:
            gid = next_id
            next_id += 1
            qa, qb = ins.qubits
            instructions.append(Gate2(gid, ins.kind, (qa, qb), ins.angle))
            gate_qubits[gid] = (qa, qb)
            op_graph.add_node(gid)
            for q in (qa, qb):
                if q in last_gate:
                    op_graph.add_edge(last_gate[q], gid, key=q, qubit=q)
                last_gate[q] = gid
            u, v = min(qa, qb), max(qa, qb)
            if qubit_graph.has_edge(u, v):
                qubit_graph[u][v]["weight"] += 1
            else:
                qubit_graph.add_edge(u, v, weight=1)
        else:
            instructions.append(ins)

    for q in sorted(measured, key=lambda q: measured[q]):
        instructions.append(instr("measure", q, clbit=measured[q]))

    return VirtualCircuit(
        num_qubits=c.num_qubits,
        num_clbits=num_clbits,
        instructions=instructions,
        op_graph=op_graph,
        qubit_graph=qubit_graph,
        gate_qubits=gate_qubits,
        wire_of={q: q for q in range(c.num_qubits)},
        wire_hosts={q: [q] for q in range(c.num_qubits)},
        name=name or c.name,
    )


def _relink(op_graph: nx.MultiDiGraph, gid: int) -> None:
    """Remove a gate from the operation graph, re-linking each of its wires."""
    by_qubit: dict[int, dict[str, int]] = {}
    for u, _, key in op_graph.in_edges(gid, keys=True):
        by_qubit.setdefault(key, {})["pred"] = u
    for _, v, key in op_graph.out_edges(gid, keys=True):
        by_qubit.setdefault(key, {})["succ"] = v
    op_graph.remove_node(gid)
    for q, link in by_qubit.items():
        if "pred" in link and "succ" in link:
            op_graph.add_edge(link["pred"], link["succ"], key=q, qubit=q)


def virt_gate(vc: VirtualCircuit, gate_id: int) -> VirtualCircuit:
    """Virtualize one real two-qubit gate in place.

    The gate leaves the operation graph (its wire dependencies are
    re-linked), the qubit-graph edge weight drops by one (edge removed at
    zero), and the instruction is replaced by the gate's two sides.
    Fragments follow from the updated qubit graph.
    """
    if gate_id in vc.virtual_gates:
        raise VcError(f"gate {gate_id} is already virtual")
    if gate_id not in vc.gate_qubits:
        raise VcError(f"unknown gate id {gate_id}")
    pos = next((i for i, x in enumerate(vc.instructions)
                if isinstance(x, Gate2) and x.id == gate_id), None)
    if pos is None:  # pragma: no cover - ids are only removed by this path
        raise VcError(f"gate {gate_id} not present in the stream")
    gate = vc.instructions[pos]

    _relink(vc.op_graph, gate_id)

    qa, qb = vc.gate_qubits[gate_id]
    u, v = min(qa, qb), max(qa, qb)
    weight = vc.qubit_graph[u][v]["weight"]
    if weight == 1:
        vc.qubit_graph.remove_edge(u, v)
    else:
        vc.qubit_graph[u][v]["weight"] = weight - 1

    vgate = VirtualGate(gate_id, gate.kind, (qa, qb), gate.angle,
                        decomposition_for(gate.kind, gate.angle))
    vc.virtual_gates[gate_id] = vgate
    vc.gate_order.append(gate_id)
    vc.instructions[pos:pos + 1] = [
        VirtualSide(gate_id, "a", gate.qubits[0]),
        VirtualSide(gate_id, "b", gate.qubits[1]),
    ]
    return vc


def virt_between(vc: VirtualCircuit, q_i: int, q_j: int) -> VirtualCircuit:
    """Virtualize every real two-qubit gate acting on the pair (q_i, q_j)."""
    u, v = min(q_i, q_j), max(q_i, q_j)
    if not vc.qubit_graph.has_edge(u, v):
        raise VcError(f"no qubit-graph edge between {q_i} and {q_j}")
    gate_ids = [x.id for x in vc.instructions if isinstance(x, Gate2)
                and set(vc.gate_qubits[x.id]) == {u, v}]
    for gid in gate_ids:
        virt_gate(vc, gid)
    return vc


def qubit_dependencies(vc: VirtualCircuit) -> set[tuple[int, int]]:
    """Ordered pairs (q_i, q_j) where q_i depends on q_j.

    q_i depends on q_j when some real two-qubit gate acting on q_i is
    reachable in the operation graph from some gate acting on q_j (a gate
    acting on both qubits counts). Virtual gates contribute nothing.
    """
    reach_qubits: dict[int, int] = {}
    pairs: set[tuple[int, int]] = set()
    for gid in reversed(list(nx.topological_sort(vc.op_graph))):
        qa, qb = vc.gate_qubits[gid]
        mask = (1 << qa) | (1 << qb)
        for succ in vc.op_graph.successors(gid):
            mask |= reach_qubits[succ]
        reach_qubits[gid] = mask
        for q_src in (qa, qb):
            m = mask
            q = 0
            while m:
                if m & 1 and q != q_src:
                    pairs.add((q, q_src))
                m >>= 1
                q += 1
    return pairs


def to_circuit(vc: VirtualCircuit) -> Circuit:
    """Flatten a virtual-gate-free IR back into a plain circuit.

    Wire ids become qubit ids; wires freed by qubit reuse stay idle.
    """
    out: list[Instruction] = []
    for x in vc.instructions:
        if isinstance(x, VirtualSide):
            raise VcError("circuit still contains virtual gates")
        if isinstance(x, Gate2):
            out.append(x.to_instruction())
        else:
            out.append(x)
    return Circuit(vc.num_qubits, out, name=vc.name,
                   num_clbits=vc.num_clbits).validate()


def op_graph_dot(vc: VirtualCircuit) -> str:
    """Graphviz DOT rendering of the operation graph."""
    lines = ["digraph op_graph {"]
    for gid in sorted(vc.op_graph.nodes):
        qa, qb = vc.gate_qubits[gid]
        kind = next(x.kind for x in vc.instructions
                    if isinstance(x, Gate2) and x.id == gid)
        lines.append(f'  g{gid} [label="g{gid}: {kind}({qa},{qb})"];')
    for u, v, key in sorted(vc.op_graph.edges(keys=True)):
        lines.append(f'  g{u} -> g{v} [label="q{key}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def qubit_graph_dot(vc: VirtualCircuit) -> str:
    """Graphviz DOT rendering of the qubit graph."""
    lines = ["graph qubit_graph {"]
    for q in sorted(vc.qubit_graph.nodes):
        lines.append(f'  q{q};')
    for u, v, data in sorted(vc.qubit_graph.edges(data=True)):
        lines.append(f'  q{u} -- q{v} [label="{data["weight"]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
