from __future__ import annotations

import pytest

from dantziglab.circuit import decide_bitswitch, decide_circuitvalue, iterate, outputs
from dantziglab.library import shuttle_machine, unary_counter_machine, writer_machine
from dantziglab.turing import (
    MalformedMachineError,
    Machine,
    compile_machine,
    machine_from_json,
    machine_to_json,
    simulate,
)


def reference_simulator(machine, input_bits, space, max_steps):
    """Independent step-by-step simulator (kept separate from the package's)."""
    tape = list(input_bits) + [0] * (space - len(input_bits)) + [1]
    head, state = machine.head_start, machine.initial
    moves = {"L": -1, "R": 1, "S": 0}
    for _ in range(max_steps):
        key = (state, tape[head - 1])
        if key not in machine.transitions:
            return True
        state, write, move = machine.transitions[key]
        tape[head - 1] = write
        head = min(max(head + moves[move], 1), space + 1)
    return False


def test_malformed_machines_rejected():
    with pytest.raises(MalformedMachineError):
        Machine(states=("a",), initial="b", head_start=1)
    with pytest.raises(MalformedMachineError):
        Machine(states=("a",), initial="a", head_start=1, transitions={("a", 0): ("a", 0, "X")})
    with pytest.raises(MalformedMachineError):
        Machine(states=("a", "a"), initial="a", head_start=1)


def test_json_round_trip():
    m = unary_counter_machine()
    assert machine_from_json(machine_to_json(m)) == m


def test_immediate_writer_accepts():
    # A machine that halts on its first step makes the marker bit reachable.
    m = writer_machine()
    circuit, start, z = compile_machine(m, (1, 1), 3)
    assert z == 4
    assert start[z - 1] == 1
    assert decide_circuitvalue(circuit, start, z) is True
    assert decide_bitswitch(circuit, start, z) is True


def test_shuttle_never_halts():
    m = shuttle_machine()
    circuit, start, z = compile_machine(m, (1, 0), 2)
    assert simulate(m, (1, 0), 2, 2**circuit.n) is False
    assert decide_circuitvalue(circuit, start, z) is False
    assert decide_bitswitch(circuit, start, z) is False


def test_step_circuit_tracks_reference_simulation():
    # The compiled circuit's orbit must follow the machine configuration by
    # configuration, not just agree on the final verdict.
    m = unary_counter_machine()
    space = 3
    circuit, start, z = compile_machine(m, (1, 1, 1), space)
    tape = [1, 1, 1, 1]
    head, state = m.head_start, m.initial
    moves = {"L": -1, "R": 1, "S": 0}
    cur = start
    state_index = {q: i for i, q in enumerate(m.states)}
    for _ in range(6):
        cur = outputs(circuit, cur)
        key = (state, tape[head - 1])
        if key in m.transitions:
            state, write, move = m.transitions[key]
            tape[head - 1] = write
            head = min(max(head + moves[move], 1), space + 1)
        else:
            tape[space] = 0
        assert list(cur[: space + 1]) == tape
        head_bits = cur[space + 1 : space + 3]
        assert head_bits == tuple((head - 1) >> t & 1 for t in range(2))
        sbits = cur[space + 3 :]
        assert sbits == tuple(state_index[state] >> t & 1 for t in range(len(sbits)))


@pytest.mark.parametrize(
    "machine,input_bits",
    [
        (writer_machine(), (0, 1)),
        (shuttle_machine(), (0, 0)),
        (unary_counter_machine(), (1, 1, 1)),
        (unary_counter_machine(), (1, 0, 1)),
    ],
)
def test_verdict_matches_reference_simulator(machine, input_bits):
    space = 3
    circuit, start, z = compile_machine(machine, input_bits, space)
    budget = 2**circuit.n
    assert decide_circuitvalue(circuit, start, z) == reference_simulator(
        machine, input_bits, space, budget
    )


def test_halted_configuration_is_a_fixed_point():
    m = writer_machine()
    circuit, start, z = compile_machine(m, (1,), 2)
    settled = iterate(circuit, start, 4)
    assert outputs(circuit, settled) == settled
    assert settled[z - 1] == 0
