"""Benchmark circuit generators.

Families are scalable in qubits and, where applicable, in layers or graph
degree. Variational angles are drawn from a seeded uniform [0, 2*pi), so
every generator is deterministic for a given spec.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

import networkx as nx

from .circuit import Circuit

FAMILIES = ("ghz", "wstate", "bv", "hs", "tl", "vqe", "qaoa", "qaoa-b")


class BenchmarkError(ValueError):
    pass


@dataclass(frozen=True)
class BenchmarkSpec:
    """One benchmark instance: family, size, layers-or-degree, seed."""

    family: str
    num_qubits: int
    param: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise BenchmarkError(f"unknown benchmark family {self.family!r}")
        if self.num_qubits < 1:
            raise BenchmarkError("num_qubits must be >= 1")

    @property
    def name(self) -> str:
        return f"{self.family}-{self.num_qubits}-p{self.param}-s{self.seed}"


def ghz_circuit(n: int) -> Circuit:
    c = Circuit(n, name=f"ghz-{n}")
    c.add("h", 0)
    for i in range(n - 1):
        c.add("cx", i, i + 1)
    return c


def _cry(c: Circuit, theta: float, control: int, target: int) -> None:
    # Controlled RY from the native gate set.
    c.add("ry", target, angle=theta / 2)
    c.add("cx", control, target)
    c.add("ry", target, angle=-theta / 2)
    c.add("cx", control, target)


def w_state_circuit(n: int) -> Circuit:
    """Uniform superposition of one-hot strings via a rotate-and-shift chain."""
    c = Circuit(n, name=f"wstate-{n}")
    c.add("x", 0)
    for i in range(n - 1):
        theta = 2.0 * math.acos(math.sqrt(1.0 / (n - i)))
        _cry(c, theta, i, i + 1)
        c.add("cx", i + 1, i)
    return c


def bv_circuit(secret: str) -> Circuit:
    """Bernstein-Vazirani oracle for a hidden bitstring.

    Data qubit i corresponds to secret bit i (string index 0 = qubit 0); the
    last qubit is the phase ancilla. Only data qubits are measured, so the
    noiseless output is exactly the secret.
    """
    if not secret or any(b not in "01" for b in secret):
        raise BenchmarkError(f"bad hidden string {secret!r}")
    n = len(secret) + 1
    anc = n - 1
    c = Circuit(n, name=f"bv-{secret}", num_clbits=len(secret))
    c.add("x", anc)
    for q in range(n):
        c.add("h", q)
    for i, bit in enumerate(secret):
        if bit == "1":
            c.add("cx", i, anc)
    for q in range(len(secret)):
        c.add("h", q)
    for q in range(len(secret)):
        c.add("measure", q, clbit=q)
    return c


def hamiltonian_simulation_circuit(n: int, layers: int, seed: int) -> Circuit:
    """Trotterized chain evolution: rzz on neighbors plus an rx layer."""
    rng = random.Random(seed)
    c = Circuit(n, name=f"hs-{n}")
    for _ in range(layers):
        for i in range(n - 1):
            c.add("rzz", i, i + 1, angle=rng.uniform(0, 2 * math.pi))
        for q in range(n):
            c.add("rx", q, angle=rng.uniform(0, 2 * math.pi))
    return c


def two_local_circuit(n: int, layers: int, seed: int) -> Circuit:
    """Two-local ansatz with circular entanglement."""
    rng = random.Random(seed)
    c = Circuit(n, name=f"tl-{n}")
    for _ in range(layers):
        for q in range(n):
            c.add("ry", q, angle=rng.uniform(0, 2 * math.pi))
        if n == 2:
            c.add("cx", 0, 1)
        else:
            for i in range(n):
                c.add("cx", i, (i + 1) % n)
    for q in range(n):
        c.add("ry", q, angle=rng.uniform(0, 2 * math.pi))
    return c


def vqe_circuit(n: int, layers: int, seed: int) -> Circuit:
    """Real-amplitudes ansatz with linear entanglement: n-1 CX per layer."""
    rng = random.Random(seed)
    c = Circuit(n, name=f"vqe-{n}")
    for _ in range(layers):
        for q in range(n):
            c.add("ry", q, angle=rng.uniform(0, 2 * math.pi))
        for i in range(n - 1):
            c.add("cx", i, i + 1)
    for q in range(n):
        c.add("ry", q, angle=rng.uniform(0, 2 * math.pi))
    return c


def _qaoa_from_graph(graph: nx.Graph, name: str, seed: int) -> Circuit:
    rng = random.Random(seed)
    n = graph.number_of_nodes()
    c = Circuit(n, name=name)
    for q in range(n):
        c.add("h", q)
    gamma = rng.uniform(0, 2 * math.pi)
    for u, v in sorted(graph.edges):
        c.add("rzz", u, v, angle=gamma)
    beta = rng.uniform(0, 2 * math.pi)
    for q in range(n):
        c.add("rx", q, angle=beta)
    return c


def qaoa_regular_circuit(n: int, degree: int, seed: int) -> Circuit:
    """One QAOA layer on a random d-regular graph (n*d must be even)."""
    if n * degree % 2 != 0 or degree >= n:
        raise BenchmarkError(f"no {degree}-regular graph on {n} vertices")
    graph = nx.random_regular_graph(degree, n, seed=seed)
    return _qaoa_from_graph(graph, f"qaoa{degree}-{n}", seed)


def qaoa_barbell_circuit(n: int, seed: int) -> Circuit:
    """One QAOA layer on a barbell graph: two cliques joined by an edge."""
    if n < 6 or n % 2 != 0:
        raise BenchmarkError("barbell graphs need an even qubit count >= 6")
    graph = nx.barbell_graph(n // 2, 0)
    return _qaoa_from_graph(graph, f"qaoab-{n}", seed)


def generate_benchmark(spec: BenchmarkSpec) -> Circuit:
    n, p, seed = spec.num_qubits, spec.param, spec.seed
    if spec.family == "ghz":
        return ghz_circuit(n)
    if spec.family == "wstate":
        return w_state_circuit(n)
    if spec.family == "bv":
        rng = random.Random(seed)
        secret = "".join(rng.choice("01") for _ in range(n - 1))
        if "1" not in secret:
            secret = "1" + secret[1:]
        return bv_circuit(secret)
    if spec.family == "hs":
        return hamiltonian_simulation_circuit(n, p, seed)
    if spec.family == "tl":
        return two_local_circuit(n, p, seed)
    if spec.family == "vqe":
        return vqe_circuit(n, p, seed)
    if spec.family == "qaoa":
        return qaoa_regular_circuit(n, p, seed)
    if spec.family == "qaoa-b":
        return qaoa_barbell_circuit(n, seed)
    raise BenchmarkError(f"unknown benchmark family {spec.family!r}")
