import json

import numpy as np
import pytest

from graphqec.channel import QChannel, channel_distance, decoder, encoder, identity_channel
from graphqec.ffield import FMat, FVec
from graphqec.oneway import (
    ClassicalDevice,
    Dynamics,
    FeedForward,
    Measure,
    OneWayProgram,
    Prepare,
    ProgramError,
    ablation_gaps,
    assemble_decoder,
    assemble_decoder_five_step,
    assemble_encoder,
    assemble_syndrome,
    device_A,
    device_Aprime,
    device_B,
    dynamics_channel,
    emit_program,
    measure_channel,
    parse_program,
    prep_channel,
    verify_cor_decode,
    verify_cor_encode,
    verify_syndrome_unitary,
    verify_thm_measure,
    verify_thm_syndrome,
)
from graphqec.phase import PhaseVec
from graphqec.qspace import graph_unitary, omega, shift_op
from graphqec.scheme import forced_syndrome

TOL = 1e-9


def rand_state(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


# ------------------------------------------------------------ elementary steps


def test_prepare_appends_omega():
    ch = prep_channel(("a",), ("b",), 2)
    out = ch.apply(np.diag([1.0, 0.0]))
    plus = np.full(2, 2**-0.5)
    assert np.allclose(out, np.kron(np.diag([1.0, 0.0]), np.outer(plus, plus)))
    x = np.kron(np.eye(2), shift_op(FVec(("b",), [1], 2)).mat)
    assert np.allclose(x @ out @ x.conj().T, out)


def test_prepare_two_sites_is_tensor_product(rng):
    rho = rand_state(rng, 3)
    two = prep_channel(("a",), ("b", "c"), 3).apply(rho)
    one = prep_channel(("a", "b"), ("c",), 3).apply(prep_channel(("a",), ("b",), 3).apply(rho))
    assert np.allclose(two, one)


def test_prepare_rejects_collision():
    with pytest.raises(ProgramError):
        prep_channel(("a",), ("a",), 2)


def test_measure_omega():
    w = omega(("a",), 3).amps
    rho = np.outer(w, w.conj())
    px = measure_channel(("a",), ("a",), "x", 3).probabilities(rho)
    assert px[(0,)] == pytest.approx(1.0)
    pz = measure_channel(("a",), ("a",), "z", 3).probabilities(rho)
    assert all(v == pytest.approx(1 / 3) for v in pz.values())
    assert len(pz) == 3


def test_measure_probabilities_sum_to_one(rng):
    rho = rand_state(rng, 9)
    for basis in ("x", "z"):
        inst = measure_channel(("a", "b"), ("b",), basis, 3)
        assert sum(inst.probabilities(rho).values()) == pytest.approx(1.0, abs=1e-12)
        assert inst.total().is_trace_preserving()


def test_measure_rejects_unknown_basis():
    with pytest.raises(ProgramError):
        Measure(("a",), "y", "m")


def test_dynamics_channel():
    labels = ("a", "b")
    zero = FMat.zeros(labels, labels, 3)
    assert channel_distance(dynamics_channel(labels, zero), identity_channel(labels, 3)).basis_max < TOL
    edge = FMat(labels, labels, [[0, 1], [1, 0]], 2)
    cz = dynamics_channel(labels, edge)
    assert np.allclose(cz.kraus[0], np.diag([1, 1, 1, -1]))
    gam = FMat(labels, labels, [[0, 2], [2, 0]], 3)
    back = dynamics_channel(labels, gam, -1).compose(dynamics_channel(labels, gam, 1))
    assert channel_distance(back, identity_channel(labels, 3)).basis_max < TOL
    assert np.allclose(dynamics_channel(labels, gam).kraus[0], graph_unitary(gam).mat)


def test_dynamics_rejects_diagonal():
    labels = ("a", "b")
    with pytest.raises(ProgramError):
        dynamics_channel(labels, FMat(labels, labels, [[1, 0], [0, 0]], 3))


# ---------------------------------------------------------------- devices


def test_device_zero_inputs(graph2, scheme2):
    a = device_A(graph2)
    assert a(FVec(graph2.I, [0], 2)).is_zero()
    b = device_B(scheme2)
    assert b(FVec(graph2.J + graph2.L, [0] * 9, 2)).is_zero()
    ap = device_Aprime(graph2)
    assert ap(FVec(graph2.J, [0] * 5, 2)).is_zero()


def test_device_A_relation(graph3):
    g = graph3
    a = device_A(g)
    for p in range(3):
        xi = a(FVec(g.I, [p], 3))
        assert (g.block(g.I, g.J) @ xi.qvec).tolist() == [p]
        assert xi.pvec == g.block(g.J, g.J) @ xi.qvec


def test_device_requires_table():
    m = FMat.identity(("a",), 2)
    dev = ClassicalDevice(("m",), ("a",), m, m, m)
    with pytest.raises(ProgramError):
        dev(FVec(("a",), [1], 2))


# -------------------------------------------------------- program checks


def test_program_static_validation():
    dev = ClassicalDevice(("mI",), ("j",), FMat.zeros(("j",), ("i",), 2), FMat.zeros(("j",), ("i",), 2))
    with pytest.raises(ProgramError):
        OneWayProgram(2, ("i",), ("j",), [Prepare(("j",)), FeedForward("A", ("j",)), Measure(("i",), "x", "mI")], {"A": dev})
    with pytest.raises(ProgramError):
        OneWayProgram(2, ("i",), ("j",), [Prepare(("j",)), Measure(("i",), "x", "mI"), FeedForward("B", ("j",))], {"A": dev})
    with pytest.raises(ProgramError):
        OneWayProgram(2, ("i",), ("i",), [Prepare(("j",)), Measure(("i",), "x", "mI")])
    with pytest.raises(ProgramError):
        OneWayProgram(2, ("i",), (), [Measure(("k",), "x", "m")])
    with pytest.raises(ProgramError):
        OneWayProgram(2, ("i", "j"), (), [Measure(("i",), "x", "m"), Measure(("j",), "x", "m")])
    ok = OneWayProgram(2, ("i",), ("j",), [Prepare(("j",)), Measure(("i",), "x", "mI"), FeedForward("A", ("j",))], {"A": dev})
    assert ok.registers == {"mI": ("i",)}


def test_encoder_program_shape(graph2):
    prog = assemble_encoder(graph2)
    assert len(prog.steps) == 4
    assert [type(s).__name__ for s in prog.steps] == ["Prepare", "Dynamics", "Measure", "FeedForward"]


# ------------------------------------------------------ identity checks


def test_encode_identity(graph2, graph3, scheme2, scheme3):
    assert verify_cor_encode(graph2, scheme2) < TOL
    assert verify_cor_encode(graph3, scheme3) < TOL


def test_syndrome_identity_d2(scheme2):
    rep = verify_thm_syndrome(scheme2)
    assert rep["channel_max"] < TOL and rep["branch_max"] < TOL
    assert verify_syndrome_unitary(scheme2) < TOL


def test_syndrome_identity_small_d3(small3):
    rep = verify_thm_syndrome(small3)
    assert rep["channel_max"] < TOL and rep["branch_max"] < TOL
    assert verify_syndrome_unitary(small3) < TOL


def test_syndrome_program_reads_error(scheme2, rng):
    inst = assemble_syndrome(scheme2.graph).compile().instrument("mL")
    v = encoder(scheme2).kraus[0]
    rho = rand_state(rng, 2)
    for xi in scheme2.errors[:6]:
        w = scheme2.error_op(xi).mat
        probs = inst.probabilities(w @ v @ rho @ v.conj().T @ w.conj().T)
        key = tuple(forced_syndrome(scheme2.graph, xi)[0].tolist())
        assert probs[key] == pytest.approx(1.0, abs=TOL)


def test_decode_identities_d2(scheme2):
    rep = verify_cor_decode(scheme2)
    assert max(rep.values()) < TOL


def test_decode_identities_small_d3(small3):
    rep = verify_cor_decode(small3)
    assert max(rep.values()) < TOL
    assert verify_thm_measure(small3) < TOL


def test_ablations_break_identities(scheme2):
    gaps = ablation_gaps(scheme2)
    assert min(gaps.values()) > 0.1


def test_end_to_end_roundtrip(scheme2):
    enc = assemble_encoder(scheme2.graph).compile().channel()
    dec = assemble_decoder(scheme2).compile().channel()
    ident = identity_channel(scheme2.graph.I, 2)
    for xi in scheme2.errors:
        err = QChannel(scheme2.graph.J, scheme2.graph.J, 2, (scheme2.error_op(xi).mat,))
        total = dec.compose(err.compose(enc))
        assert channel_distance(total, ident).basis_max < TOL


def test_compiled_matches_direct_channels(scheme2):
    five = assemble_decoder_five_step(scheme2).compile().channel()
    assert channel_distance(five, decoder(scheme2)).basis_max < TOL


# --------------------------------------------------------- serialization


@pytest.mark.parametrize("role", ["encoder", "syndrome", "decoder", "five"])
def test_emit_parse_roundtrip(scheme2, role):
    g = scheme2.graph
    prog = {
        "encoder": lambda: assemble_encoder(g),
        "syndrome": lambda: assemble_syndrome(g),
        "decoder": lambda: assemble_decoder(scheme2),
        "five": lambda: assemble_decoder_five_step(scheme2),
    }[role]()
    doc = emit_program(prog)
    text = json.dumps(doc, sort_keys=True)
    again = parse_program(text, scheme2)
    assert again == prog
    assert json.dumps(emit_program(again), sort_keys=True) == text


def test_emitted_matrices_reload(scheme2):
    g = scheme2.graph
    doc = json.loads(json.dumps(emit_program(assemble_decoder(scheme2))))
    m = doc["matrices"]["LbarILJ"]
    inv = FMat(tuple(m["rows"]), tuple(m["cols"]), m["values"], 2)
    assert g.block(g.J, g.I + g.L) @ inv == FMat.identity(g.J, 2)
    assert doc["syndrome_table_ref"] is not None


def test_parse_requires_matching_table(scheme2, graph3, scheme3):
    doc = emit_program(assemble_decoder(scheme2))
    with pytest.raises(ProgramError):
        parse_program(doc)
    with pytest.raises(ProgramError):
        parse_program(doc, scheme3)
    with pytest.raises(ProgramError):
        parse_program({**doc, "format": "other"}, scheme2)
    bad = json.loads(json.dumps(doc))
    bad["steps"][0]["kind"] = "teleport"
    with pytest.raises(ProgramError):
        parse_program(bad, scheme2)
