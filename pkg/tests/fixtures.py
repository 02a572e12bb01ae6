"""Hand-checked showcase circuits used across the suite."""
from __future__ import annotations

from gatevm.circuit import Circuit


def two_cluster_circuit() -> Circuit:
    """Six qubits in two densely connected triangles bridged by two single
    gates: the balanced 3+3 split has the provably minimal cut weight 2."""
    c = Circuit(6, name="two-cluster")
    for q in range(6):
        c.add("h", q)
    for a, b in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]:
        c.add("cx", a, b)
    c.add("cx", 2, 3)
    c.add("cx", 0, 5)
    return c


TWO_CLUSTER_CUT_EDGES = ((0, 5), (2, 3))


def dep_showcase_circuit() -> Circuit:
    """Four qubits, six CX gates, all 12 ordered qubit-dependency pairs.

    The unique maximum-cost gate is gate 3 (CX on (0, 3)) with 3 ancestors
    and 2 descendants; virtualizing any single gate leaves at best 11
    dependency pairs, and the greedy pick achieves that: it frees qubit 0
    from depending on qubit 3, so the reuser can run qubit 3 on qubit 0's
    wire (width 4 -> 3 with a budget of one).
    """
    c = Circuit(4, name="dep-showcase")
    c.add("h", 0)
    c.add("h", 2)
    for a, b in [(0, 1), (0, 2), (1, 3), (0, 3), (2, 3), (1, 2)]:
        c.add("cx", a, b)
    return c


DEP_SHOWCASE_PICK = 3          # gate id the greedy reducer must choose
DEP_SHOWCASE_FREED = (0, 3)    # dependency pair removed by that pick


def fully_dependent_circuit(n: int = 4) -> Circuit:
    """Entangle-then-unwind chain: every qubit depends on every other, so
    no wire is ever reusable."""
    c = Circuit(n, name="fully-dependent")
    c.add("h", 0)
    for i in range(n - 1):
        c.add("cx", i, i + 1)
    for i in reversed(range(n - 2)):
        c.add("cx", i, i + 1)
    return c
