"""Gate-virtualization compiler and runtime for quantum circuits.

The toolchain parses OpenQASM 2, lifts circuits into a virtual-circuit IR,
optimizes them with cutting / dependency-reduction / qubit-reuse passes,
generates parameterized fragment programs, executes fragment instances on a
statevector backend, and knits the results back into the original
circuit's output distribution.
"""

from .circuit import Circuit, Instruction, instr
from .codegen import CompiledProgram, ParamCircuit, generate, peephole_optimize
from .decomp import GateDecomposition, decomposition_for
from .passes import (
    PassConfig,
    cut_exact,
    cut_greedy_kl,
    reduce_dependencies_exact,
    reduce_dependencies_greedy,
    reuse_qubits,
    run_pipeline,
)
from .qasm import emit_qasm, parse_qasm
from .qpu import QpuModel, heavy_hex_qpu, line_qpu
from .runtime import (
    FragmentResults,
    GlobalCoefficients,
    execute,
    global_coefficients,
    instantiate,
    knit,
    run_program,
    schedule,
)
from .sim import ShotCounts, SignedDistribution, choi_check, run_exact, run_sampled
from .transpiler import (
    PhysicalCircuit,
    cnot_count,
    depth,
    esp,
    hellinger_fidelity,
    map_and_route,
)
from .vc import VirtualCircuit, from_circuit, qubit_dependencies, virt_between, virt_gate

__version__ = "0.1.0"
