"""One-way programs: preparation, graph dynamics, measurement, feed-forward.

A program runs on a labeled quantum register.  Every measurement splits the
computation into outcome branches; each branch carries a single Kraus
operator from the input register to the current register, so a compiled
program is an instrument indexed by all measurement outcomes.

Measurement conventions:

* x-basis on sites ``K``: outcome ``p`` projects onto ``z(p) Omega_K``.
* z-basis on sites ``K``: outcome ``a`` projects onto the point mass at ``a``
  (the position value; ``F z(p) Omega = delta_{-p}``).

A conditional translation by ``xi = (p, q)`` applies ``u(xi)^* = (x(q) z(p))^*``
on its target sites.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .channel import Instrument, QChannel, encoder, syndrome_channel, decoder
from .ffield import FMat, FVec
from .graph import CodingGraph, check_admissible
from .phase import PhaseVec, tau_values
from .qspace import configs, fourier, shift_op
from .scheme import ErrorScheme, build_scheme

__all__ = [
    "ProgramError",
    "Prepare",
    "Dynamics",
    "Measure",
    "FeedForward",
    "ClassicalDevice",
    "OneWayProgram",
    "CompiledProgram",
    "prep_channel",
    "measure_channel",
    "dynamics_channel",
    "device_A",
    "device_Aprime",
    "device_Adblprime",
    "device_B",
    "assemble_encoder",
    "assemble_syndrome",
    "assemble_decoder",
    "assemble_decoder_five_step",
    "verify_cor_encode",
    "verify_thm_syndrome",
    "verify_cor_decode",
    "verify_thm_measure",
    "verify_syndrome_unitary",
    "ablate",
    "ablation_gaps",
    "emit_program",
    "parse_program",
    "scheme_ref",
]

FORMAT = "graphqec-pattern/1"


class ProgramError(ValueError):
    pass


# ---------------------------------------------------------------- steps


@dataclass(frozen=True)
class Prepare:
    sites: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class Dynamics:
    graph: FMat
    sign: int = 1

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dynamics) and self.sign == other.sign and self.graph == other.graph

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Measure:
    sites: tuple[str, ...]
    basis: str
    register: str

    def __post_init__(self) -> None:
        if self.basis not in ("x", "z"):
            raise ProgramError(f"unknown measurement basis {self.basis!r}")


@dataclass(frozen=True)
class FeedForward:
    device: str
    targets: tuple[str, ...]


Step = Union[Prepare, Dynamics, Measure, FeedForward]


# ------------------------------------------------------- classical devices


@dataclass(frozen=True, eq=False)
class ClassicalDevice:
    """Affine feed-forward map over F_d, optionally through a syndrome table.

    The input ``m`` concatenates the named outcome registers.  The output
    translation on ``targets`` is ``(P m, Q m)`` plus, when ``key`` is set,
    the table entry for ``key @ m`` (left-over syndromes give zero).
    """

    inputs: tuple[str, ...]
    targets: tuple[str, ...]
    p: FMat
    q: FMat
    key: FMat | None = None
    table: Mapping[tuple[int, ...], PhaseVec | None] | None = None
    table_ref: str | None = None

    @property
    def d(self) -> int:
        return self.p.modulus

    def __call__(self, m: FVec) -> PhaseVec:
        m = m.restrict(self.p.cols)
        pv, qv = self.p @ m, self.q @ m
        xi = PhaseVec.from_fvecs(pv, qv)
        if self.key is not None:
            if self.table is None:
                raise ProgramError("device needs a syndrome table that was not attached")
            entry = self.table[tuple((self.key @ m).tolist())]
            if entry is not None:
                xi = xi + entry.restrict(self.targets)
        return xi

    def matrices(self) -> dict[str, FMat]:
        out = {"p": self.p, "q": self.q}
        if self.key is not None:
            out["key"] = self.key
        return out


def _inverse(g: CodingGraph) -> FMat:
    rep = check_admissible(g)
    if not rep.ok:
        raise ProgramError(f"graph is not admissible: {rep.reason}")
    return rep.inverse


def _lbar_JI(g: CodingGraph) -> FMat:
    """Right inverse of ``Lam^I_J`` (transpose of the I-rows of the inverse block)."""
    return _inverse(g).block(g.I, g.J).T


def device_A(g: CodingGraph) -> ClassicalDevice:
    lbar = _lbar_JI(g)
    p = g.block(g.J, g.J) @ lbar
    return ClassicalDevice(("mI",), g.J, p, lbar)


def device_Aprime(g: CodingGraph) -> ClassicalDevice:
    IL = g.I + g.L
    q = -_inverse(g).block(IL, g.J)
    return ClassicalDevice(("mJ",), IL, FMat.zeros(IL, g.J, g.d), q)


def device_Adblprime(scheme: ErrorScheme, ref: str | None = None) -> ClassicalDevice:
    g = scheme.graph
    zero = FMat.zeros(g.I, g.L, g.d)
    return ClassicalDevice(
        ("mL",), g.I, zero, zero, FMat.identity(g.L, g.d), scheme.syndrome_table, ref or scheme_ref(scheme)
    )


def device_B(scheme: ErrorScheme, ref: str | None = None) -> ClassicalDevice:
    g = scheme.graph
    inv = _inverse(g)
    cols = g.J + g.L
    lbar_IJ = inv.block(g.I, g.J).values
    lbar_LJ = inv.block(g.L, g.J).values
    d = g.d
    p = FMat.zeros(g.I, cols, d)
    q = FMat(g.I, cols, np.hstack([-lbar_IJ, np.zeros((len(g.I), len(g.L)), dtype=np.int64)]), d)
    key = FMat(g.L, cols, np.hstack([lbar_LJ, np.eye(len(g.L), dtype=np.int64)]), d)
    return ClassicalDevice(("mJ", "mL"), g.I, p, q, key, scheme.syndrome_table, ref or scheme_ref(scheme))


def scheme_ref(scheme: ErrorScheme) -> str:
    text = json.dumps(scheme.to_json(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# ------------------------------------------------------------- programs


@dataclass(eq=False)
class OneWayProgram:
    d: int
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    steps: list[Step]
    devices: dict[str, ClassicalDevice] = field(default_factory=dict)
    ambient: tuple[str, ...] = ()
    graph: CodingGraph | None = None

    def __post_init__(self) -> None:
        self.inputs, self.outputs = tuple(self.inputs), tuple(self.outputs)
        if not self.ambient:
            seen = list(self.inputs)
            for s in self.steps:
                if isinstance(s, Prepare):
                    seen += [x for x in s.sites if x not in seen]
            self.ambient = tuple(seen)
        self.validate()

    @property
    def registers(self) -> dict[str, tuple[str, ...]]:
        return {s.register: s.sites for s in self.steps if isinstance(s, Measure)}

    def validate(self) -> None:
        """Static well-formedness: sites present, registers measured before use."""
        current = list(self.inputs)
        measured: dict[str, tuple[str, ...]] = {}
        for k, s in enumerate(self.steps):
            if isinstance(s, Prepare):
                clash = [x for x in s.sites if x in current]
                if clash:
                    raise ProgramError(f"step {k}: preparing sites {clash} that are already present")
                current += list(s.sites)
            elif isinstance(s, Dynamics):
                missing = [x for x in s.graph.rows if x not in current]
                if missing:
                    raise ProgramError(f"step {k}: dynamics on absent sites {missing}")
                if np.any(np.diag(s.graph.values)) or not np.array_equal(s.graph.values, s.graph.values.T):
                    raise ProgramError(f"step {k}: dynamics graph must be symmetric with zero diagonal")
                if s.sign not in (1, -1):
                    raise ProgramError(f"step {k}: sign must be +1 or -1")
            elif isinstance(s, Measure):
                missing = [x for x in s.sites if x not in current]
                if missing:
                    raise ProgramError(f"step {k}: measuring absent sites {missing}")
                if s.register in measured:
                    raise ProgramError(f"step {k}: register {s.register!r} written twice")
                measured[s.register] = s.sites
                current = [x for x in current if x not in s.sites]
            elif isinstance(s, FeedForward):
                dev = self.devices.get(s.device)
                if dev is None:
                    raise ProgramError(f"step {k}: unknown device {s.device!r}")
                unread = [r for r in dev.inputs if r not in measured]
                if unread:
                    raise ProgramError(f"step {k}: device {s.device!r} reads unmeasured registers {unread}")
                cols = tuple(x for r in dev.inputs for x in measured[r])
                if dev.p.cols != cols:
                    raise ProgramError(f"step {k}: device {s.device!r} input layout mismatch")
                if tuple(s.targets) != dev.targets or any(x not in current for x in s.targets):
                    raise ProgramError(f"step {k}: bad feed-forward targets {s.targets}")
            else:
                raise ProgramError(f"step {k}: unknown step {s!r}")
        if tuple(current) != self.outputs:
            raise ProgramError(f"program ends on {tuple(current)}, declared {self.outputs}")

    def compile(self) -> CompiledProgram:
        return _compile(self)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, OneWayProgram) and emit_program(self) == emit_program(other)

    __hash__ = None  # type: ignore[assignment]


# ------------------------------------------------------------ compilation


def _apply_local(mat: np.ndarray, labels: Sequence[str], sites: Sequence[str], op: np.ndarray, d: int) -> np.ndarray:
    """Apply ``op`` (acting on ``sites`` in their listed order) to the row register of ``mat``."""
    n, k = len(labels), len(sites)
    axes = [labels.index(x) for x in sites]
    t = mat.reshape((d,) * n + (-1,))
    opt = op.reshape((d,) * (2 * k))
    t = np.tensordot(opt, t, axes=(list(range(k, 2 * k)), axes))
    t = np.moveaxis(t, list(range(k)), axes)
    return t.reshape(d**n, -1)


def _contract_bra(mat: np.ndarray, labels: Sequence[str], sites: Sequence[str], vec: np.ndarray, d: int):
    """Contract ``<vec|`` on ``sites``; returns the matrix on the remaining sites."""
    n, k = len(labels), len(sites)
    axes = [labels.index(x) for x in sites]
    t = mat.reshape((d,) * n + (-1,))
    t = np.tensordot(vec.conj().reshape((d,) * k), t, axes=(list(range(k)), axes))
    rest = [x for x in labels if x not in sites]
    return t.reshape(d ** len(rest), -1), rest


def _basis_vectors(k: int, basis: str, d: int) -> list[tuple[tuple[int, ...], np.ndarray]]:
    cfg = configs(k, d)
    out = []
    if basis == "z":
        for idx, c in enumerate(cfg):
            e = np.zeros(d**k, dtype=complex)
            e[idx] = 1.0
            out.append((tuple(int(x) for x in c), e))
    else:
        for c in cfg:
            phase = np.exp(2j * np.pi * ((cfg @ c) % d) / d) * d ** (-k / 2)
            out.append((tuple(int(x) for x in c), phase))
    return out


def _translation_dagger(xi: PhaseVec) -> np.ndarray:
    # (x(q) z(p))^* = z(-p) x(-q)
    d = xi.d
    cfg = configs(len(xi.labels), d)
    src = shift_op(-xi.qvec).mat
    phase = np.exp(-2j * np.pi * ((cfg @ np.asarray(xi.p)) % d) / d)
    return phase[:, None] * src


@dataclass(eq=False)
class CompiledProgram:
    dom: tuple[str, ...]
    cod: tuple[str, ...]
    d: int
    registers: dict[str, tuple[str, ...]]
    branches: list[tuple[dict[str, tuple[int, ...]], np.ndarray]]

    def channel(self) -> QChannel:
        return QChannel(self.dom, self.cod, self.d, tuple(k for _, k in self.branches))

    def instrument(self, register: str) -> Instrument:
        grouped: dict[tuple[int, ...], list[np.ndarray]] = {}
        for outcome, k in self.branches:
            grouped.setdefault(outcome[register], []).append(k)
        return Instrument(self.dom, self.cod, self.d, {o: tuple(v) for o, v in sorted(grouped.items())})


def _compile(prog: OneWayProgram, skip_feedforward: bool = False) -> CompiledProgram:
    d = prog.d
    labels = list(prog.inputs)
    branches: list[tuple[dict, np.ndarray]] = [({}, np.eye(d ** len(labels), dtype=complex))]
    for step in prog.steps:
        if isinstance(step, Prepare):
            om = np.full(d ** len(step.sites), d ** (-len(step.sites) / 2), dtype=complex)
            branches = [(o, (m[:, None, :] * om[None, :, None]).reshape(-1, m.shape[1])) for o, m in branches]
            labels += list(step.sites)
        elif isinstance(step, Dynamics):
            pos = [labels.index(x) for x in step.graph.rows]
            adj = np.zeros((len(labels), len(labels)), dtype=np.int64)
            adj[np.ix_(pos, pos)] = step.graph.values
            phases = tau_values(adj, configs(len(labels), d), d)
            if step.sign == -1:
                phases = phases.conj()
            branches = [(o, phases[:, None] * m) for o, m in branches]
        elif isinstance(step, Measure):
            vecs = _basis_vectors(len(step.sites), step.basis, d)
            new = []
            for o, m in branches:
                for outcome, vec in vecs:
                    km, rest = _contract_bra(m, labels, step.sites, vec, d)
                    new.append(({**o, step.register: outcome}, km))
            branches = new
            labels = [x for x in labels if x not in step.sites]
        elif isinstance(step, FeedForward):
            if skip_feedforward:
                continue
            dev = prog.devices[step.device]
            new = []
            for o, m in branches:
                vals = [x for r in dev.inputs for x in o[r]]
                xi = dev(FVec(dev.p.cols, vals, d))
                new.append((o, _apply_local(m, labels, step.targets, _translation_dagger(xi), d)))
            branches = new
    branches.sort(key=lambda b: sorted(b[0].items()))
    return CompiledProgram(prog.inputs, tuple(labels), d, prog.registers, branches)


def ablate(prog: OneWayProgram) -> CompiledProgram:
    """Compile with every feed-forward step dropped."""
    return _compile(prog, skip_feedforward=True)


def ablation_gaps(scheme: ErrorScheme) -> dict[str, float]:
    """Deviation of each program from its target once feed-forward is removed."""
    g = scheme.graph
    syn_target = syndrome_channel(scheme)
    syn = ablate(assemble_syndrome(g)).instrument("mL")
    return {
        "encoder": _superop_gap(ablate(assemble_encoder(g)).channel(), encoder(scheme)),
        "syndrome": _instrument_gap(syn, syn_target),
        "decoder": _superop_gap(ablate(assemble_decoder(scheme)).channel(), decoder(scheme)),
    }


# ----------------------------------------------------- single-step channels


def prep_channel(existing: Sequence[str], sites: Sequence[str], d: int) -> QChannel:
    prog = OneWayProgram(d, tuple(existing), tuple(existing) + tuple(sites), [Prepare(tuple(sites))])
    return prog.compile().channel()


def measure_channel(labels: Sequence[str], sites: Sequence[str], basis: str, d: int) -> Instrument:
    rest = tuple(x for x in labels if x not in sites)
    prog = OneWayProgram(d, tuple(labels), rest, [Measure(tuple(sites), basis, "m")])
    return prog.compile().instrument("m")


def dynamics_channel(labels: Sequence[str], gamma: FMat, sign: int = 1) -> QChannel:
    prog = OneWayProgram(gamma.modulus, tuple(labels), tuple(labels), [Dynamics(gamma, sign)])
    return prog.compile().channel()


# ------------------------------------------------------------- assembly


def assemble_encoder(g: CodingGraph) -> OneWayProgram:
    IJ = g.I + g.J
    steps: list[Step] = [
        Prepare(g.J),
        Dynamics(g.block(IJ, IJ), 1),
        Measure(g.I, "x", "mI"),
        FeedForward("A", g.J),
    ]
    return OneWayProgram(g.d, g.I, g.J, steps, {"A": device_A(g)}, g.vertices, g)


def _decoder_prefix(g: CodingGraph) -> list[Step]:
    return [Prepare(g.I + g.L), Dynamics(g.lam, -1), Measure(g.J, "x", "mJ")]


def assemble_syndrome(g: CodingGraph) -> OneWayProgram:
    steps = _decoder_prefix(g) + [FeedForward("Aprime", g.I + g.L), Measure(g.L, "z", "mL")]
    return OneWayProgram(g.d, g.J, g.I, steps, {"Aprime": device_Aprime(g)}, g.vertices, g)


def assemble_decoder(scheme: ErrorScheme) -> OneWayProgram:
    g = scheme.graph
    steps = _decoder_prefix(g) + [Measure(g.L, "z", "mL"), FeedForward("B", g.I)]
    return OneWayProgram(g.d, g.J, g.I, steps, {"B": device_B(scheme)}, g.vertices, g)


def assemble_decoder_five_step(scheme: ErrorScheme) -> OneWayProgram:
    g = scheme.graph
    steps = _decoder_prefix(g) + [
        FeedForward("Aprime", g.I + g.L),
        Measure(g.L, "z", "mL"),
        FeedForward("Adblprime", g.I),
    ]
    devices = {"Aprime": device_Aprime(g), "Adblprime": device_Adblprime(scheme)}
    return OneWayProgram(g.d, g.J, g.I, steps, devices, g.vertices, g)


# ---------------------------------------------------------- verification


def _superop_gap(a: QChannel, b: QChannel) -> float:
    """Largest Frobenius deviation over matrix units of the input register."""
    diff = a.superoperator() - b.superoperator()
    return float(np.max(np.linalg.norm(diff, axis=0)))


def _instrument_gap(a: Instrument, b: Instrument) -> float:
    """Distance of the outcome-tagged channels ``rho -> sum_o |o><o| (x) T_o(rho)``."""
    outcomes = sorted(set(a.outcomes()) | set(b.outcomes()))
    cols = 0.0
    for o in outcomes:
        sa = a.branch(o).superoperator() if o in a.branches else 0.0
        sb = b.branch(o).superoperator() if o in b.branches else 0.0
        cols = cols + np.linalg.norm(sa - sb, axis=0) ** 2
    return float(np.max(np.sqrt(cols)))


def _up_to_phase(x: np.ndarray, y: np.ndarray) -> float:
    ip = np.vdot(y, x)
    phase = ip / abs(ip) if abs(ip) > 1e-12 else 1.0
    return float(np.linalg.norm(x - phase * y))


def verify_cor_encode(g: CodingGraph, scheme: ErrorScheme | None = None) -> float:
    scheme = scheme or build_scheme(g, 0, certify=False)
    return _superop_gap(assemble_encoder(g).compile().channel(), encoder(scheme))


def verify_thm_syndrome(scheme: ErrorScheme) -> dict[str, float]:
    """Outcome-wise match of the compiled syndrome instrument with ``v_{q^L}^*``.

    ``branch_max`` compares each branch Kraus operator (rescaled by the
    number of branches per outcome) with ``v^*`` up to a global phase.
    """
    compiled = assemble_syndrome(scheme.graph).compile()
    inst = compiled.instrument("mL")
    target = syndrome_channel(scheme)
    chan = _instrument_gap(inst, target)
    per = len(compiled.branches) // len(target.outcomes())
    br = max(
        _up_to_phase(np.sqrt(per) * k, scheme.isometry(outcome["mL"]).mat.conj().T)
        for outcome, k in compiled.branches
    )
    return {"channel_max": chan, "branch_max": br}


def verify_cor_decode(scheme: ErrorScheme) -> dict[str, float]:
    direct = decoder(scheme)
    four = assemble_decoder(scheme).compile().channel()
    five = assemble_decoder_five_step(scheme).compile().channel()
    return {
        "four_step": _superop_gap(four, direct),
        "five_step": _superop_gap(five, direct),
        "measure_fusion": verify_thm_measure(scheme),
    }


def verify_thm_measure(scheme: ErrorScheme) -> float:
    """Kraus identity ``C[A'] M[F_L] C[A''] = M[F_L] C[B]`` over all outcomes."""
    g = scheme.graph
    d = g.d
    IL = g.I + g.L
    a1, a2, b = device_Aprime(g), device_Adblprime(scheme), device_B(scheme)
    lbar_LJ = _inverse(g).block(g.L, g.J)
    dim = d ** len(IL)
    worst = 0.0
    for mJ in configs(len(g.J), d):
        mJv = FVec(g.J, mJ, d)
        shifted = _apply_local(np.eye(dim, dtype=complex), list(IL), IL, _translation_dagger(a1(mJv)), d)
        for mL in configs(len(g.L), d):
            qL = FVec(g.L, mL, d) + lbar_LJ @ mJv
            e = np.zeros(d ** len(g.L), dtype=complex)
            e[int(np.ravel_multi_index(tuple(qL.values), (d,) * len(g.L)))] = 1.0
            lhs, _ = _contract_bra(shifted, list(IL), g.L, e, d)
            lhs = _translation_dagger(a2(qL)) @ lhs
            e2 = np.zeros_like(e)
            e2[int(np.ravel_multi_index(tuple(mL), (d,) * len(g.L)))] = 1.0
            rhs, _ = _contract_bra(np.eye(dim, dtype=complex), list(IL), g.L, e2, d)
            m_all = FVec(g.J + g.L, np.concatenate([mJ, mL]), d)
            rhs = _translation_dagger(b(m_all)) @ rhs
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


def verify_syndrome_unitary(scheme: ErrorScheme) -> float:
    """Check ``Phi_L^* F_L^* x(q^L)^* u = v_{q^L}^*`` for the single syndrome unitary ``u``.

    ``u: H_J -> H_{IL}`` has entries ``d^{-|J|/2} conj(tau(Lam, q^{IJL}))``.
    """
    g = scheme.graph
    d = g.d
    nI, nJ, nL = len(g.I), len(g.J), len(g.L)
    order = g.I + g.L + g.J
    adj = g.lam.block(order, order).values
    u = tau_values(adj, configs(nI + nL + nJ, d), d).conj().reshape(d ** (nI + nL), d**nJ) * d ** (-nJ / 2)
    F = fourier(g.L, d).mat
    omega = np.full(d**nL, d ** (-nL / 2))
    worst = 0.0
    for key in scheme.syndrome_table:
        xq = shift_op(FVec(g.L, key, d)).mat
        bra_L = omega @ F.conj().T @ xq.conj().T  # row vector on L
        lhs = np.kron(np.eye(d**nI), bra_L[None, :]) @ u
        worst = max(worst, float(np.linalg.norm(lhs - scheme.isometry(key).mat.conj().T)))
    return worst


# -------------------------------------------------------- serialization


def _mat_json(m: FMat) -> dict:
    return {"rows": list(m.rows), "cols": list(m.cols), "values": m.tolist()}


def _mat_from_json(obj: dict, d: int) -> FMat:
    return FMat(tuple(obj["rows"]), tuple(obj["cols"]), np.asarray(obj["values"], dtype=np.int64).reshape(
        len(obj["rows"]), len(obj["cols"])), d)


def _step_json(step: Step, matrices: dict[str, dict], k: int) -> dict:
    if isinstance(step, Prepare):
        return {"kind": "prepare", "sites": list(step.sites), "state": "x-standard"}
    if isinstance(step, Dynamics):
        name = f"dynamics_{k}"
        matrices[name] = _mat_json(step.graph)
        return {"kind": "dynamics", "graph": name, "sign": step.sign}
    if isinstance(step, Measure):
        return {"kind": "measure", "sites": list(step.sites), "basis": step.basis, "register": step.register}
    return {"kind": "feedforward", "device": step.device, "targets": list(step.targets)}


def emit_program(prog: OneWayProgram) -> dict:
    """Measurement-pattern document; integers are F_d residues."""
    matrices: dict[str, dict] = {}
    steps = [_step_json(s, matrices, k) for k, s in enumerate(prog.steps)]
    devices = {}
    refs = set()
    for name, dev in sorted(prog.devices.items()):
        entry = {"inputs": list(dev.inputs), "targets": list(dev.targets)}
        for part, m in dev.matrices().items():
            matrices[f"{name}.{part}"] = _mat_json(m)
            entry[part] = f"{name}.{part}"
        entry["lookup"] = dev.key is not None
        devices[name] = entry
        if dev.table_ref:
            refs.add(dev.table_ref)
    g = prog.graph
    if g is not None:
        inv = check_admissible(g).inverse
        if inv is not None:
            lbar_JI = inv.block(g.I, g.J).T
            matrices["LamJJ_LbarJI"] = _mat_json(g.block(g.J, g.J) @ lbar_JI)
            matrices["LbarJI"] = _mat_json(lbar_JI)
            matrices["LbarILJ"] = _mat_json(inv.block(g.I + g.L, g.J))
            matrices["LbarIJ"] = _mat_json(inv.block(g.I, g.J))
            matrices["LbarLJ"] = _mat_json(inv.block(g.L, g.J))
    return {
        "format": FORMAT,
        "d": prog.d,
        "ambient": list(prog.ambient),
        "inputs": list(prog.inputs),
        "outputs": list(prog.outputs),
        "graph": None if g is None else g.to_json(),
        "steps": steps,
        "devices": devices,
        "matrices": matrices,
        "syndrome_table_ref": sorted(refs)[0] if refs else None,
    }


def parse_program(obj: dict | str, scheme: ErrorScheme | None = None) -> OneWayProgram:
    """Inverse of :func:`emit_program`; table-driven devices need the matching scheme."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if obj.get("format") != FORMAT:
        raise ProgramError(f"unsupported pattern format {obj.get('format')!r}")
    d = int(obj["d"])
    matrices = obj["matrices"]
    ref = obj.get("syndrome_table_ref")
    table = None
    if ref is not None:
        if scheme is None or scheme_ref(scheme) != ref:
            raise ProgramError("pattern references a syndrome table that was not supplied")
        table = scheme.syndrome_table
    devices = {}
    for name, e in obj["devices"].items():
        key = _mat_from_json(matrices[e["key"]], d) if e.get("lookup") else None
        devices[name] = ClassicalDevice(
            tuple(e["inputs"]),
            tuple(e["targets"]),
            _mat_from_json(matrices[e["p"]], d),
            _mat_from_json(matrices[e["q"]], d),
            key,
            table if key is not None else None,
            ref if key is not None else None,
        )
    steps: list[Step] = []
    for s in obj["steps"]:
        kind = s.get("kind")
        if kind == "prepare":
            steps.append(Prepare(tuple(s["sites"])))
        elif kind == "dynamics":
            steps.append(Dynamics(_mat_from_json(matrices[s["graph"]], d), int(s["sign"])))
        elif kind == "measure":
            steps.append(Measure(tuple(s["sites"]), s["basis"], s["register"]))
        elif kind == "feedforward":
            steps.append(FeedForward(s["device"], tuple(s["targets"])))
        else:
            raise ProgramError(f"unknown step kind {kind!r}")
    g = CodingGraph.from_json(obj["graph"]) if obj.get("graph") else None
    return OneWayProgram(d, tuple(obj["inputs"]), tuple(obj["outputs"]), steps, devices, tuple(obj["ambient"]), g)
