import itertools
import json

import numpy as np
import pytest

from graphqec.ffield import FVec
from graphqec.graph import CodingGraph, check_t_error_correcting
from graphqec.phase import PhaseVec, phase_ball
from graphqec.qspace import configs, isometry_defect, weyl
from graphqec.scheme import (
    NotErrorCorrectingError,
    SchemeError,
    build_scheme,
    build_syndrome_table,
    check_input_transfer,
    check_error_transfer,
    check_syndrome_shift,
    check_error_to_syndrome,
    code_isometry,
    correction_op,
    error_basis_op,
    forced_syndrome,
    gamma,
    stabilizer_eigen_check,
    verify_kl,
)

TOL = 1e-9
STAR = [["i0", "j0", 1], ["i0", "j1", 1], ["i0", "j2", 1], ["j1", "l0", 1], ["j2", "l1", 1]]


def star():
    return CodingGraph.from_edges(2, ["i0"], ["j0", "j1", "j2"], ["l0", "l1"], STAR)


def all_fvecs(labels, d):
    for c in configs(len(labels), d):
        yield FVec(labels, c, d)


def all_phase(labels, d):
    n = len(labels)
    for vals in itertools.product(range(d), repeat=2 * n):
        yield PhaseVec(labels, vals[:n], vals[n:], d)


@pytest.mark.parametrize("which", ["graph2", "graph3"])
def test_isometries_and_syndrome_shift(which, request):
    g = request.getfixturevalue(which)
    for qL in list(all_fvecs(g.L, g.d))[:: max(1, g.d ** len(g.L) // 9)]:
        assert isometry_defect(code_isometry(g, qL).op) < TOL
        assert check_syndrome_shift(g, qL) < TOL


def test_isometry_label_checks(graph2):
    with pytest.raises(Exception):
        code_isometry(graph2, FVec(("x",), [0], 2))
    with pytest.raises(SchemeError):
        code_isometry(CodingGraph.from_edges(2, ["i0"], ["j0"], [], []))


def test_stabilizer_eigenvalues(graph2):
    g = graph2
    kernel_vecs = [q for q in all_fvecs(g.J, 2) if (g.block(g.I, g.J) @ q).is_zero()]
    assert len(kernel_vecs) == 16
    for q in kernel_vecs:
        for qL in list(all_fvecs(g.L, 2))[:4]:
            assert stabilizer_eigen_check(g, q, qL) < TOL


def test_stabilizer_precondition(graph2):
    g = graph2
    bad = next(q for q in all_fvecs(g.J, 2) if not (g.block(g.I, g.J) @ q).is_zero())
    with pytest.raises(SchemeError):
        stabilizer_eigen_check(g, bad)


@pytest.mark.parametrize("which", ["graph2", "graph3"])
def test_intertwining_identities(which, request, rng):
    g = request.getfixturevalue(which)
    d = g.d
    for _ in range(15):
        qL = FVec(g.L, rng.integers(0, d, len(g.L)), d)
        xiI = PhaseVec(g.I, rng.integers(0, d, len(g.I)), rng.integers(0, d, len(g.I)), d)
        xiJ = PhaseVec(g.J, rng.integers(0, d, len(g.J)), rng.integers(0, d, len(g.J)), d)
        assert check_input_transfer(g, xiI, qL) < TOL
        assert check_error_transfer(g, xiJ, qL) < TOL
        assert check_error_to_syndrome(g, xiJ) < TOL


def test_error_basis_weight_limit(graph2):
    heavy = PhaseVec(graph2.J, (1, 1, 0, 0, 0), (0, 0, 0, 0, 0), 2)
    error_basis_op(graph2, heavy)
    with pytest.raises(SchemeError):
        error_basis_op(graph2, heavy, t=1)
    assert np.allclose(error_basis_op(graph2, PhaseVec.zero(graph2.J, 2)).mat, np.eye(32))


def test_correction_is_x_then_z():
    for p, q in itertools.product(range(3), repeat=2):
        xi = PhaseVec(("i0",), (p,), (q,), 3)
        phase = np.exp(-2j * np.pi * p * q / 3)
        assert np.allclose(correction_op(xi).mat, phase * weyl(xi).mat)


def test_gamma_brute_force(graph2):
    g = graph2
    for xiJ in phase_ball(g.J, 1, 2):
        sols = [
            (qL, xiI)
            for qL in all_fvecs(g.L, 2)
            for xiI in all_phase(g.I, 2)
            if gamma(g, xiJ, qL, xiI) == 0
        ]
        assert len(sols) == 1
        qL, xiI = forced_syndrome(g, xiJ)
        assert sols[0][0] == qL and sols[0][1] == xiI


def test_syndrome_table_d2(scheme2):
    table = scheme2.syndrome_table
    assert len(table) == 16
    hit = [xi for xi in table.values() if xi is not None]
    assert len(hit) + len(scheme2.leftover) == 16
    assert all(scheme2.syndrome_table[tuple(forced_syndrome(scheme2.graph, xi)[0].tolist())] is not None
               for xi in scheme2.errors)
    for key in scheme2.leftover:
        assert scheme2.correction_for(key).is_zero()


def test_scheme_conditions(scheme2, scheme3):
    for s in (scheme2, scheme3):
        rep = s.verify()
        assert rep["error_to_syndrome_max"] < TOL
        assert rep["table_total"] and rep["collision_free"]
        assert rep["completeness"] < TOL


def test_kl_passes_for_certified(graph2, graph3):
    assert verify_kl(graph2, 1) < TOL
    assert verify_kl(graph3, 1) < TOL


def test_kl_fails_for_uncertified():
    g = star()
    assert not check_t_error_correcting(g, 1).ok
    assert verify_kl(g, 1) > 0.1
    assert verify_kl(g, 0) < TOL


def test_collision_raises_for_uncertified():
    with pytest.raises(NotErrorCorrectingError):
        build_scheme(star(), 1)
    with pytest.raises(NotErrorCorrectingError):
        build_syndrome_table(star(), 1)


def test_export_roundtrip(scheme2, graph2):
    text = json.dumps(scheme2.to_json(), sort_keys=True)
    again = type(scheme2).from_json(json.loads(text), graph2)
    assert again.syndrome_table == scheme2.syndrome_table
    assert json.dumps(again.to_json(), sort_keys=True) == text


def test_import_rejects_mismatch(scheme2, graph3):
    with pytest.raises(SchemeError):
        type(scheme2).from_json(scheme2.to_json(), graph3)
    obj = scheme2.to_json()
    obj["table"] = obj["table"][1:]
    with pytest.raises(SchemeError):
        type(scheme2).from_json(obj, scheme2.graph)
