"""Compiler backend: extract fragments as parameterized circuits.

Each fragment becomes a circuit over its own wires with placeholder slots
where virtual-gate sides act; a placeholder carries the six candidate local
actions it can be instantiated with. A light peephole pass (self-inverse
cancellation and rotation merging, with placeholders acting as barriers)
runs once per fragment.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import Circuit, Instruction, instr
from .decomp import LocalAction
from .qasm import emit_qasm, parse_qasm
from .vc import Gate2, VirtualCircuit, VirtualSide

_SELF_INVERSE = frozenset({"h", "x", "y", "z", "cx", "cz"})
_MERGEABLE = frozenset({"rx", "ry", "rz", "rzz"})
_ANGLE_EPS = 1e-12


class CodegenError(RuntimeError):
    pass


@dataclass(frozen=True)
class Placeholder:
    """A parameterized slot for one side of a virtual gate."""

    gate_id: int
    side: str
    qubit: int  # fragment-local qubit


@dataclass
class ParamCircuit:
    """A fragment circuit with placeholder gates and their parameter vectors.

    ``elements`` interleaves concrete instructions and placeholders;
    ``param_vectors`` holds, per placeholder (in element order), the six
    candidate local actions. ``clbit_map`` and ``qubit_map`` translate local
    output bits and wires back to the original circuit.
    """

    num_qubits: int
    elements: list[Instruction | Placeholder]
    param_vectors: list[tuple[LocalAction, ...]]
    clbit_map: list[int]
    qubit_map: list[int]
    fragment_index: int
    name: str = "fragment"

    @property
    def placeholders(self) -> list[tuple[int, int, str]]:
        """Ordered (position, virtual-gate id, side) triples."""
        return [(i, el.gate_id, el.side) for i, el in enumerate(self.elements)
                if isinstance(el, Placeholder)]

    def touching_gates(self, gate_order: list[int]) -> list[int]:
        """Virtual gates with at least one side in this fragment, in global
        gate order."""
        mine = {el.gate_id for el in self.elements if isinstance(el, Placeholder)}
        return [g for g in gate_order if g in mine]

    @property
    def num_clbits(self) -> int:
        return len(self.clbit_map)

    def instantiate(self, assignment: dict[int, int]) -> Circuit:
        """Concrete circuit for one choice of decomposition index per gate."""
        out: list[Instruction] = []
        ph_idx = 0
        for el in self.elements:
            if isinstance(el, Placeholder):
                action = self.param_vectors[ph_idx][assignment[el.gate_id]]
                out.extend(action.to_instructions(el.qubit))
                ph_idx += 1
            else:
                out.append(el)
        return Circuit(self.num_qubits, out, name=self.name,
                       num_clbits=self.num_clbits).validate()

    def reinlined(self, vgate_info: dict[int, tuple[str, float | None]]) -> Circuit:
        """Replace placeholder pairs by their original two-qubit gates.

        Only valid when every touching gate has both sides in this fragment.
        """
        out: list[Instruction] = []
        pending: dict[int, tuple[str, int]] = {}
        for el in self.elements:
            if not isinstance(el, Placeholder):
                out.append(el)
                continue
            if el.gate_id not in pending:
                pending[el.gate_id] = (el.side, el.qubit)
                continue
            other_side, other_qubit = pending.pop(el.gate_id)
            if other_side == el.side:
                raise CodegenError(f"duplicate side for gate {el.gate_id}")
            kind, angle = vgate_info[el.gate_id]
            qa, qb = ((other_qubit, el.qubit) if other_side == "a"
                      else (el.qubit, other_qubit))
            out.append(instr(kind, qa, qb, angle=angle))
        if pending:
            raise CodegenError(
                f"gates {sorted(pending)} span another fragment; cannot re-inline")
        return Circuit(self.num_qubits, out, name=self.name,
                       num_clbits=self.num_clbits).validate()


@dataclass
class CompiledProgram:
    """Parameterized fragments plus the data the runtime needs to knit."""

    fragments: list[ParamCircuit]
    coeff_vectors: dict[int, np.ndarray]
    gate_order: list[int]
    num_clbits: int
    vgate_info: dict[int, tuple[str, float | None]] = field(default_factory=dict)
    name: str = "program"

    @property
    def num_virtual_gates(self) -> int:
        return len(self.gate_order)


def _element_wires(el) -> tuple[int, ...]:
    if isinstance(el, Placeholder):
        return (el.qubit,)
    return el.qubits


def generate(vc: VirtualCircuit, optimize: bool = True) -> CompiledProgram:
    """Extract one parameterized circuit per fragment.

    For a virtual gate spanning two fragments, side A lands in the first
    qubit's fragment and side B in the second's; a gate internal to one
    fragment contributes both placeholders there but is still driven by a
    single decomposition index.
    """
    fragments = vc.fragments
    wire_to_frag: dict[int, int] = {}
    local_wire: dict[int, int] = {}
    for frag in fragments:
        for i, w in enumerate(frag.wires):
            wire_to_frag[w] = frag.index
            local_wire[w] = i

    elements: list[list[Instruction | Placeholder]] = [[] for _ in fragments]
    clbits: list[list[int]] = [[] for _ in fragments]
    for x in vc.instructions:
        if isinstance(x, VirtualSide):
            f = wire_to_frag[x.qubit]
            elements[f].append(Placeholder(x.gate_id, x.side, local_wire[x.qubit]))
        elif isinstance(x, Gate2):
            f = wire_to_frag[x.qubits[0]]
            if wire_to_frag[x.qubits[1]] != f:
                raise CodegenError("real two-qubit gate spans two fragments")
            elements[f].append(x.to_instruction().remap(local_wire))
        elif x.kind == "measure":
            f = wire_to_frag[x.qubits[0]]
            clbits[f].append(x.clbit)
            elements[f].append(replace(
                x, qubits=(local_wire[x.qubits[0]],), clbit=None))
        else:
            f = wire_to_frag[x.qubits[0]]
            elements[f].append(x.remap(local_wire))

    param_circuits = []
    for frag in fragments:
        clbit_map = sorted(clbits[frag.index])
        local_clbit = {c: i for i, c in enumerate(clbit_map)}
        els = []
        seen = 0
        for el in elements[frag.index]:
            if isinstance(el, Instruction) and el.kind == "measure":
                els.append(replace(el, clbit=local_clbit[clbits[frag.index][seen]]))
                seen += 1
            else:
                els.append(el)
        vectors = []
        for el in els:
            if isinstance(el, Placeholder):
                entries = vc.virtual_gates[el.gate_id].decomposition.entries
                vectors.append(tuple(
                    (e.a if el.side == "a" else e.b) for e in entries))
        pc = ParamCircuit(
            num_qubits=len(frag.wires),
            elements=els,
            param_vectors=vectors,
            clbit_map=clbit_map,
            qubit_map=list(frag.wires),
            fragment_index=frag.index,
            name=f"{vc.name}_f{frag.index}",
        )
        if optimize:
            pc = peephole_optimize(pc)
        param_circuits.append(pc)

    coeffs = {gid: vg.decomposition.coefficients()
              for gid, vg in vc.virtual_gates.items()}
    info = {gid: (vg.kind, vg.angle) for gid, vg in vc.virtual_gates.items()}
    return CompiledProgram(param_circuits, coeffs, list(vc.gate_order),
                           vc.num_clbits, info, name=vc.name)


def peephole_optimize(pc: ParamCircuit) -> ParamCircuit:
    """Cancel adjacent self-inverse pairs and merge same-axis rotations.

    Two operations are adjacent when no other element touches any of their
    wires in between; placeholders, measurements, resets and barriers block
    optimization on their wires.
    """
    els = list(pc.elements)
    changed = True
    while changed:
        changed = False
        nxt: dict[int, int] = {}
        follower = [dict() for _ in els]  # wire -> next element index
        last: dict[int, int] = {}
        for i, el in enumerate(els):
            for w in _element_wires(el):
                if w in last:
                    follower[last[w]][w] = i
                last[w] = i
        remove: set[int] = set()
        retune: dict[int, float] = {}
        for i, el in enumerate(els):
            if i in remove or isinstance(el, Placeholder):
                continue
            if el.kind not in _SELF_INVERSE and el.kind not in _MERGEABLE:
                continue
            nexts = {follower[i].get(w) for w in el.qubits}
            if len(nexts) != 1 or None in nexts:
                continue
            j = nexts.pop()
            if j in remove or isinstance(els[j], Placeholder):
                continue
            other = els[j]
            if isinstance(other, Placeholder) or other.kind != el.kind:
                continue
            same_pair = (other.qubits == el.qubits or
                         (el.kind in ("rzz", "cz") and
                          set(other.qubits) == set(el.qubits)))
            if not same_pair:
                continue
            if el.kind in _SELF_INVERSE:
                remove.update((i, j))
                changed = True
            else:
                total = el.angle + other.angle
                remove.add(j)
                if abs(total) < _ANGLE_EPS:
                    remove.add(i)
                else:
                    retune[i] = total
                changed = True
        if changed:
            new_els = []
            for i, el in enumerate(els):
                if i in remove:
                    continue
                if i in retune:
                    el = replace(el, angle=retune[i])
                new_els.append(el)
            els = new_els

    vectors = []
    it = iter(pc.param_vectors)
    ph_in_old = [el for el in pc.elements if isinstance(el, Placeholder)]
    vec_of = dict(zip(
        [(p.gate_id, p.side) for p in ph_in_old], pc.param_vectors))
    for el in els:
        if isinstance(el, Placeholder):
            vectors.append(vec_of[(el.gate_id, el.side)])
    return ParamCircuit(pc.num_qubits, els, vectors, pc.clbit_map,
                        pc.qubit_map, pc.fragment_index, pc.name)


# ---------------------------------------------------------------------------
# serialization

def _action_to_json(action: LocalAction) -> list[dict]:
    return [{"kind": op.kind, **({"angle": op.angle} if op.angle is not None else {})}
            for op in action.ops]


def _action_from_json(data: list[dict]) -> LocalAction:
    from .decomp import LocalOp
    return LocalAction(tuple(LocalOp(d["kind"], d.get("angle")) for d in data))


def program_to_json(program: CompiledProgram) -> str:
    frags = []
    for pc in program.fragments:
        skeleton = Circuit(
            pc.num_qubits,
            [el for el in pc.elements if not isinstance(el, Placeholder)],
            name=pc.name, num_clbits=pc.num_clbits)
        frags.append({
            "qasm": emit_qasm(skeleton),
            "placeholders": [
                {"position": i, "gate": el.gate_id, "side": el.side,
                 "qubit": el.qubit}
                for i, el in enumerate(pc.elements)
                if isinstance(el, Placeholder)],
            "param_vectors": [
                [_action_to_json(a) for a in vec] for vec in pc.param_vectors],
            "clbit_map": pc.clbit_map,
            "qubit_map": pc.qubit_map,
            "fragment_index": pc.fragment_index,
            "name": pc.name,
        })
    doc = {
        "name": program.name,
        "num_clbits": program.num_clbits,
        "gate_order": program.gate_order,
        "coeff_vectors": {str(g): list(map(float, v))
                          for g, v in program.coeff_vectors.items()},
        "virtual_gates": {str(g): {"kind": k, **({"angle": a} if a is not None else {})}
                          for g, (k, a) in program.vgate_info.items()},
        "fragments": frags,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def program_from_json(text: str) -> CompiledProgram:
    doc = json.loads(text)
    fragments = []
    for fd in doc["fragments"]:
        base = parse_qasm(fd["qasm"], name=fd["name"])
        elements: list[Instruction | Placeholder] = list(base.instructions)
        for ph in sorted(fd["placeholders"], key=lambda p: p["position"]):
            elements.insert(ph["position"],
                            Placeholder(ph["gate"], ph["side"], ph["qubit"]))
        fragments.append(ParamCircuit(
            num_qubits=base.num_qubits,
            elements=elements,
            param_vectors=[tuple(_action_from_json(a) for a in vec)
                           for vec in fd["param_vectors"]],
            clbit_map=list(fd["clbit_map"]),
            qubit_map=list(fd["qubit_map"]),
            fragment_index=fd["fragment_index"],
            name=fd["name"],
        ))
    coeffs = {int(g): np.array(v, dtype=float)
              for g, v in doc["coeff_vectors"].items()}
    info = {int(g): (d["kind"], d.get("angle"))
            for g, d in doc["virtual_gates"].items()}
    return CompiledProgram(fragments, coeffs, list(doc["gate_order"]),
                           doc["num_clbits"], info, name=doc["name"])
