import json

import numpy as np
import pytest

from graphqec.channel import (
    ChannelError,
    Instrument,
    QChannel,
    channel_distance,
    correction_channel,
    decoder,
    encoder,
    identity_channel,
    noise_from_matrix,
    noise_to_json,
    parse_noise,
    random_psd_noise,
    syndrome_channel,
    unitary_channel,
    verify_theorem1,
    weyl_basis,
    weyl_diagonal_noise,
)
from graphqec.phase import PhaseVec
from graphqec.qspace import weyl
from graphqec.scheme import forced_syndrome

TOL = 1e-9


def rand_mat(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def rand_state(rng, n):
    a = rand_mat(rng, n)
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def rand_channel(rng, labels, d, r=3):
    n = d ** len(labels)
    ks = [rand_mat(rng, n) for _ in range(r)]
    s = sum(k.conj().T @ k for k in ks)
    w, u = np.linalg.eigh(s)
    inv_sqrt = u @ np.diag(w**-0.5) @ u.conj().T
    return QChannel(tuple(labels), tuple(labels), d, tuple(k @ inv_sqrt for k in ks))


def test_encoder_decoder_completeness(scheme2, scheme3):
    for s in (scheme2, scheme3):
        assert encoder(s).completeness_defect() < TOL
        assert decoder(s).completeness_defect() < TOL
        assert syndrome_channel(s).total().completeness_defect() < TOL
        assert verify_theorem1(s, identity_channel(s.graph.J, s.d)) < TOL


def test_decoder_is_heisenberg_homomorphism(scheme2, rng):
    D = decoder(scheme2)
    for _ in range(5):
        a, b = rand_mat(rng, 2), rand_mat(rng, 2)
        assert np.allclose(D.adjoint(a @ b), D.adjoint(a) @ D.adjoint(b), atol=TOL)
    assert np.allclose(D.adjoint(np.eye(2)), np.eye(32))


def test_syndrome_outcome_is_deterministic(scheme2, rng):
    inst = syndrome_channel(scheme2)
    rho = rand_state(rng, 2)
    v = encoder(scheme2).kraus[0]
    for xi in scheme2.errors:
        w = scheme2.error_op(xi).mat
        probs = inst.probabilities(w @ v @ rho @ v.conj().T @ w.conj().T)
        key = tuple(forced_syndrome(scheme2.graph, xi)[0].tolist())
        assert probs[key] == pytest.approx(1.0, abs=TOL)


def test_correction_undoes_residual(scheme2, rng):
    corr = correction_channel(scheme2)
    rho = rand_state(rng, 2)
    v = encoder(scheme2).kraus[0]
    for xi in scheme2.errors:
        key = tuple(forced_syndrome(scheme2.graph, xi)[0].tolist())
        assert not corr.is_leftover(key)
        w = scheme2.error_op(xi).mat
        branch = scheme2.isometry(key).mat.conj().T @ w @ v
        out = corr.apply(key, branch @ rho @ branch.conj().T)
        assert np.allclose(out, rho, atol=TOL)


def test_point_mass_on_zero_is_identity(scheme2):
    J = scheme2.graph.J
    noise = weyl_diagonal_noise({PhaseVec.zero(J, 2): 1.0})
    assert channel_distance(noise, identity_channel(J, 2)).proxy < TOL


def test_single_error_channels_corrected(scheme2):
    errs = scheme2.errors
    assert len(errs) == 16
    for xi in errs:
        noise = weyl_diagonal_noise({xi: 1.0}, scheme2)
        assert verify_theorem1(scheme2, noise) < TOL


def test_random_psd_noise_corrected(scheme2, rng):
    for _ in range(10):
        noise = random_psd_noise(scheme2, rng, rank=int(rng.integers(1, 5)))
        assert verify_theorem1(scheme2, noise) < TOL


@pytest.mark.slow
def test_random_psd_noise_corrected_d3(scheme3, rng):
    for _ in range(3):
        assert verify_theorem1(scheme3, random_psd_noise(scheme3, rng, rank=2)) < TOL


def test_heavy_noise_rejected(scheme2):
    heavy = PhaseVec(scheme2.graph.J, (1, 1, 0, 0, 0), (0,) * 5, 2)
    with pytest.raises(ChannelError):
        verify_theorem1(scheme2, weyl_diagonal_noise({heavy: 1.0}))
    k = weyl(heavy).mat
    with pytest.raises(ChannelError):
        verify_theorem1(scheme2, QChannel(scheme2.graph.J, scheme2.graph.J, 2, (k,)))


def test_noise_validation():
    a = PhaseVec(("j",), (0,), (0,), 3)
    b = PhaseVec(("j",), (1,), (0,), 3)
    with pytest.raises(ChannelError):
        weyl_diagonal_noise({a: 0.5, b: 0.4})
    with pytest.raises(ChannelError):
        weyl_diagonal_noise({a: 1.2, b: -0.2})
    with pytest.raises(ChannelError):
        noise_from_matrix(np.array([[1, 0], [0, -1]]), [a, b])
    with pytest.raises(ChannelError):
        noise_from_matrix(np.array([[1, 1], [0, 1]]), [a, b])
    with pytest.raises(ChannelError):
        noise_from_matrix(np.eye(2), [a, a])


def test_weyl_diagonal_is_trace_preserving():
    labels = ("j0", "j1")
    probs = {xi: 1 / 16 for xi in weyl_basis(labels, 2)}
    noise = weyl_diagonal_noise(probs)
    assert noise.is_trace_preserving()
    assert np.allclose(noise.apply(np.eye(4)), np.eye(4))
    assert np.allclose(noise.apply(np.diag([1, 0, 0, 0])), np.eye(4) / 4)


def test_adjoint_pairing(rng):
    ch = rand_channel(rng, ("a", "b"), 2)
    for _ in range(10):
        a, rho = rand_mat(rng, 4), rand_state(rng, 4)
        assert np.trace(a @ ch.apply(rho)) == pytest.approx(np.trace(ch.adjoint(a) @ rho), abs=TOL)


def test_composition_associative(rng):
    A, B, C = (rand_channel(rng, ("a",), 3, r=2) for _ in range(3))
    left, right = A.compose(B).compose(C), A.compose(B.compose(C))
    assert channel_distance(left, right).basis_max < TOL
    assert left.completeness_defect() < TOL
    with pytest.raises(ChannelError):
        A.compose(identity_channel(("b",), 3))


def test_superoperator_roundtrip(rng):
    ch = rand_channel(rng, ("a",), 3)
    back = QChannel.from_superoperator(ch.superoperator(), ("a",), ("a",), 3)
    assert np.allclose(back.superoperator(), ch.superoperator())
    with pytest.raises(ChannelError):
        QChannel.from_superoperator(-ch.superoperator(), ("a",), ("a",), 3)


def test_distance_examples(rng):
    ident = identity_channel(("a",), 2)
    z = weyl(PhaseVec(("a",), (1,), (0,), 2))
    dephase = weyl_diagonal_noise({PhaseVec.zero(("a",), 2): 0.5, PhaseVec(("a",), (1,), (0,), 2): 0.5})
    dist = channel_distance(ident, dephase)
    assert dist.weyl_l1 == pytest.approx(1.0)
    assert dist.proxy == pytest.approx(1.0)
    assert channel_distance(dephase, dephase).basis_max == 0
    assert channel_distance(ident, unitary_channel(z)).weyl_l1 == pytest.approx(2.0)
    with pytest.raises(ChannelError):
        channel_distance(ident, identity_channel(("b",), 2))


def test_distance_symmetric_and_triangle(rng):
    for _ in range(10):
        A, B, C = (rand_channel(rng, ("a",), 2) for _ in range(3))
        ab, bc, ac = (channel_distance(x, y).basis_max for x, y in ((A, B), (B, C), (A, C)))
        assert ab == pytest.approx(channel_distance(B, A).basis_max)
        assert ac <= ab + bc + 1e-12
        assert channel_distance(A, B).weyl_l1 is None


def test_instrument_probabilities():
    k0 = np.diag([1.0, 0.0])
    k1 = np.diag([0.0, 1.0])
    inst = Instrument(("a",), ("a",), 2, {(0,): (k0,), (1,): (k1,)})
    probs = inst.probabilities(np.eye(2) / 2)
    assert probs == {(0,): pytest.approx(0.5), (1,): pytest.approx(0.5)}
    assert inst.total().is_trace_preserving()


def test_parse_noise_roundtrip(scheme2, rng):
    noise = random_psd_noise(scheme2, rng, rank=2)
    text = json.dumps(noise_to_json(noise))
    again = parse_noise(text, scheme2)
    assert np.allclose(again.tmat, noise.tmat)
    diag = weyl_diagonal_noise({xi: 1 / 16 for xi in scheme2.errors}, scheme2)
    obj = noise_to_json(diag)
    assert obj["kind"] == "weyl_diagonal"
    assert verify_theorem1(scheme2, parse_noise(obj, scheme2)) < TOL


def test_parse_noise_errors(scheme2):
    heavy = {"p": [1, 1, 0, 0, 0], "q": [0, 0, 0, 0, 0]}
    with pytest.raises(ChannelError):
        parse_noise({"kind": "weyl_diagonal", "probs": [{"xi": heavy, "p": 1.0}]}, scheme2)
    with pytest.raises(ChannelError):
        parse_noise({"kind": "weyl_diagonal", "probs": [{"xi": {"p": [0]}, "p": 1.0}]}, scheme2)
    with pytest.raises(ChannelError):
        parse_noise({"kind": "bogus"}, scheme2)
    with pytest.raises(ChannelError):
        parse_noise("{oops", scheme2)
    zero = {"p": [0] * 5, "q": [0] * 5}
    with pytest.raises(ChannelError):
        parse_noise({"kind": "psd", "labels": [zero], "matrix": [[1.0]]}, scheme2)
