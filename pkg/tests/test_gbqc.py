import itertools
import json
import math

import numpy as np
import pytest

import qsim
from noisyoptics.circuits import OpticalCircuit, transfer
from noisyoptics.engine import NOISELESS, RunConfig, nominal_herald_probability, run_trajectories
from noisyoptics.fock import FockVector, dual_rail_decode, evolve, post_select
from noisyoptics.gbqc import (
    BELL,
    KNILL_SUCCESS,
    Gate,
    QubitCircuit,
    bell_circuit,
    bell_experiment,
    h_gate_block,
    heralded_cz_block,
    transpile,
    x_gate_circuit,
)
from noisyoptics.metrics import hellinger


def block_action(elements, mode_count, qubit_pairs, anc_input=None, herald=None):
    """Decoded 2^k x 2^k action of an element list on basis inputs, plus herald weights."""
    anc_input = anc_input or {}
    herald = herald or {}
    k = len(qubit_pairs)
    u = transfer(OpticalCircuit(mode_count, tuple(elements)))
    cols, weights = [], []
    for bits in itertools.product((0, 1), repeat=k):
        occ = [anc_input.get(i, 0) for i in range(mode_count)]
        for (r0, r1), b in zip(qubit_pairs, bits):
            occ[r0 + b] = 1
        out = evolve(FockVector.basis(occ), u)
        pattern = [herald.get(i) for i in range(mode_count)]
        kept, w = post_select(out, pattern)
        free = [i for i in range(mode_count) if i not in herald]
        local = [(free.index(a), free.index(b)) for a, b in qubit_pairs]
        vec, _ = dual_rail_decode(kept, local)
        cols.append(vec)
        weights.append(w)
    return np.array(cols).T, np.array(weights)


def test_x_gate_circuit():
    c = x_gate_circuit()
    assert c.mode_count == 2 and len(c.elements) == 1 and c.input == (1, 0)
    assert all(h is None for h in c.herald)


def test_h_block_is_hadamard():
    u, _ = block_action(h_gate_block(0, 1), 2, [(0, 1)])
    assert np.allclose(u, qsim.H, atol=1e-12)
    uu, _ = block_action(h_gate_block(0, 1) + h_gate_block(0, 1), 2, [(0, 1)])
    assert np.allclose(uu, np.eye(2), atol=1e-12)


def test_cz_block():
    blk = heralded_cz_block((0, 1), (2, 3), (4, 5, 6, 7))
    u, w = block_action(blk.elements, 8, [(0, 1), (2, 3)], blk.ancilla_input, blk.herald)
    assert np.allclose(w, KNILL_SUCCESS, atol=1e-9)
    assert np.allclose(u / math.sqrt(KNILL_SUCCESS), np.diag([1, 1, 1, -1]), atol=1e-9) or np.allclose(
        -u / math.sqrt(KNILL_SUCCESS), np.diag([1, 1, 1, -1]), atol=1e-9
    )


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("t", (0,))
    with pytest.raises(ValueError):
        Gate("cz", (1, 1))
    with pytest.raises(ValueError):
        QubitCircuit(2, (Gate("x", (2,)),))


def test_qubit_circuit_json():
    text = json.dumps(BELL.to_dict())
    assert QubitCircuit.from_json(text) == BELL
    assert json.loads(text)["gates"][1] == {"kind": "cx", "targets": [0, 1]}


def test_single_x_matches_x_gate_circuit():
    c = transpile(QubitCircuit(1, (Gate("x", (0,)),)), reck=False)
    assert np.allclose(transfer(c), transfer(x_gate_circuit()))


def test_hh_is_identity():
    c = transpile(QubitCircuit(1, (Gate("h", (0,)), Gate("h", (0,)))))
    dm = run_trajectories(c, NOISELESS, RunConfig(1))
    assert np.allclose(dm.rho, np.diag([1, 0]), atol=1e-12)


CIRCUITS = [
    QubitCircuit(2, (Gate("h", (0,)), Gate("cx", (0, 1)))),
    QubitCircuit(2, (Gate("h", (0,)), Gate("h", (1,)), Gate("cz", (0, 1)), Gate("h", (1,)))),
    QubitCircuit(2, (Gate("x", (1,)), Gate("h", (0,)), Gate("cx", (1, 0)))),
    QubitCircuit(3, (Gate("h", (1,)), Gate("h", (2,)), Gate("cz", (0, 1)), Gate("cz", (1, 2)))),
]


@pytest.mark.parametrize("qc", CIRCUITS)
@pytest.mark.parametrize("reck", [False, True])
def test_transpile_matches_state_vector(qc, reck):
    dm = run_trajectories(transpile(qc, reck=reck), NOISELESS, RunConfig(1))
    psi = qsim.run(qc)
    assert np.abs(dm.rho - np.outer(psi, psi.conj())).max() < 1e-9


@pytest.mark.parametrize("bits", list(itertools.product((0, 1), repeat=2)))
def test_herald_probability_is_product_of_blocks(bits):
    qc = QubitCircuit(2, (Gate("cz", (0, 1)), Gate("cz", (0, 1))))
    c = transpile(qc, inputs=bits)
    assert nominal_herald_probability(c) == pytest.approx(KNILL_SUCCESS**2, abs=1e-9)


def test_bell_noiseless():
    c = bell_circuit()
    assert c.mode_count == 8
    dm = run_trajectories(c, NOISELESS, RunConfig(1))
    assert dm.rho[0, 0].real == pytest.approx(0.5, abs=1e-9)
    assert dm.rho[3, 3].real == pytest.approx(0.5, abs=1e-9)
    assert dm.rho[0, 3].real == pytest.approx(0.5, abs=1e-9)
    assert abs(dm.rho[1, 1]) < 1e-9 and abs(dm.rho[2, 2]) < 1e-9
    assert dm.herald_probability == pytest.approx(KNILL_SUCCESS, abs=1e-9)


def test_bell_experiment_noiseless_distance():
    out = bell_experiment(0.0, RunConfig(1), scenarios=("dep", "loss", "both"))
    assert all(h < 1e-9 for _, h in out.values())


def test_bell_dep_limit_is_not_maximally_mixed():
    dm, _ = bell_experiment(0.45, RunConfig(3000, 1), scenarios=("dep",))["dep"]
    d = dm.diagonal() / dm.trace()
    assert hellinger(d, np.full(4, 0.25)) > 0.01
