"""Command-line interface.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage,
parse or input errors.  ``--json`` prints a deterministic report (sorted
keys, shortest round-trip floats, no timing data).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .channel import ChannelError, parse_noise, random_psd_noise, verify_theorem1, weyl_diagonal_noise
from .ffield import FieldError
from .graph import CodingGraph, GraphFormatError, check_admissible, check_t_error_correcting, search_graph
from .memory import DecoherenceModel, MemoryModelError, simulate_memory, storing_time
from .oneway import (
    ablation_gaps,
    assemble_decoder,
    assemble_decoder_five_step,
    assemble_encoder,
    assemble_syndrome,
    emit_program,
    verify_cor_decode,
    verify_cor_encode,
    verify_thm_measure,
    verify_thm_syndrome,
)
from .scheme import SchemeError, build_scheme, verify_kl

log = logging.getLogger("graphqec")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SUITES = ("kl", "thm1", "encode", "syndrome", "measure", "decode", "all")


class UsageError(Exception):
    pass


@dataclass
class Check:
    name: str
    deviation: float
    tolerance: float | None = None
    passed: bool | None = None

    def __post_init__(self) -> None:
        if self.passed is None and self.tolerance is not None:
            self.passed = bool(self.deviation <= self.tolerance)

    def to_json(self) -> dict:
        return {"name": self.name, "deviation": _num(self.deviation), "tolerance": self.tolerance, "pass": self.passed}


@dataclass
class RunReport:
    command: str
    inputs_hash: str
    checks: list[Check] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "inputs_hash": self.inputs_hash,
            "pass": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "data": self.data,
        }


def _num(x: float) -> float | None:
    x = float(x)
    return None if math.isinf(x) or math.isnan(x) else x


def _inputs_hash(args: argparse.Namespace, files: list[Path]) -> str:
    h = hashlib.sha256()
    # paths and presentation flags do not change the result; file contents are hashed below
    skip = {"func", "json", "out", "threads", "verbose", "graph", "noise"}
    for k, v in sorted(vars(args).items()):
        if k not in skip:
            h.update(f"{k}={v};".encode())
    for f in files:
        h.update(f.read_bytes())
    return h.hexdigest()


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _load_graph(path: str) -> CodingGraph:
    return CodingGraph.from_json(_load_json(path))


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _certified_scheme(g: CodingGraph, t: int):
    rep = check_t_error_correcting(g, t)
    if not check_admissible(g).ok or not rep.ok:
        raise SchemeError(f"graph is not certified for t={t}; run `graphqec check-graph` for the witness")
    return build_scheme(g, t)


# ----------------------------------------------------------- commands


def cmd_check_graph(args: argparse.Namespace) -> RunReport:
    g = _load_graph(args.graph)
    report = RunReport("check-graph", _inputs_hash(args, [Path(args.graph)]))
    adm = check_admissible(g)
    report.checks.append(Check("admissible", 0.0 if adm.ok else 1.0, passed=adm.ok))
    report.data["admissible_reason"] = adm.reason
    if adm.ok:
        report.data["inverse_block"] = {"rows": list(adm.inverse.rows), "cols": list(adm.inverse.cols),
                                        "values": adm.inverse.tolist()}
    tec = check_t_error_correcting(g, args.t, threads=args.threads)
    report.checks.append(Check(f"t{args.t}_error_correcting", 0.0 if tec.ok else 1.0, passed=tec.ok))
    report.data["subsets_checked"] = tec.subsets_checked
    if not tec.ok:
        report.data["witness"] = {
            "E": list(tec.witness_E),
            "kernel_vector": dict(zip(tec.witness_q.labels, tec.witness_q.tolist())),
            "reason": tec.reason,
        }
    report.data["graph_hash"] = g.graph_hash()
    return report


def cmd_find_graph(args: argparse.Namespace) -> RunReport:
    report = RunReport("find-graph", _inputs_hash(args, []))
    g = search_graph(args.d, args.inputs, args.outputs, args.t, budget=args.budget, seed=args.seed)
    report.checks.append(Check("found", 0.0 if g else 1.0, passed=g is not None))
    if g is not None:
        report.data["graph"] = g.to_json()
        report.data["graph_hash"] = g.graph_hash()
        if args.out:
            Path(args.out).write_text(_dump(g.to_json()) + "\n")
    return report


def cmd_build_scheme(args: argparse.Namespace) -> RunReport:
    g = _load_graph(args.graph)
    report = RunReport("build-scheme", _inputs_hash(args, [Path(args.graph)]))
    scheme = _certified_scheme(g, args.t)
    exported = scheme.to_json()
    report.data["scheme"] = exported
    report.data["leftover_syndromes"] = len(scheme.leftover)
    if args.out:
        Path(args.out).write_text(_dump(exported) + "\n")
    return report


def _thm1_checks(scheme, args, tol) -> list[Check]:
    if args.noise:
        noise = parse_noise(_load_json(args.noise), scheme)
        return [Check("thm1_noise_file", verify_theorem1(scheme, noise), tol)]
    single = max(verify_theorem1(scheme, weyl_diagonal_noise({xi: 1.0}, scheme)) for xi in scheme.errors)
    rng = np.random.default_rng(args.seed)
    mixed = max(verify_theorem1(scheme, random_psd_noise(scheme, rng)) for _ in range(args.samples))
    return [Check("thm1_single_weyl", single, tol), Check(f"thm1_random_psd_x{args.samples}", mixed, tol)]


def _ablation_check(role: str, gaps: dict[str, float]) -> Check:
    # without feed-forward the identity must visibly break
    return Check(f"{role}_ablation_gap", gaps[role], passed=gaps[role] > 0.1)


def cmd_verify(args: argparse.Namespace) -> RunReport:
    g = _load_graph(args.graph)
    files = [Path(args.graph)] + ([Path(args.noise)] if args.noise else [])
    report = RunReport("verify", _inputs_hash(args, files))
    scheme = _certified_scheme(g, args.t)
    tol = args.tolerance
    suites = SUITES[:-1] if args.suite == "all" else (args.suite,)
    gaps = ablation_gaps(scheme) if {"encode", "syndrome", "decode"} & set(suites) else {}
    for suite in suites:
        if suite == "kl":
            report.checks.append(Check("kl", verify_kl(g, args.t), tol))
        elif suite == "thm1":
            report.checks.extend(_thm1_checks(scheme, args, tol))
        elif suite == "encode":
            report.checks.append(Check("encoder_program", verify_cor_encode(g, scheme), tol))
            report.checks.append(_ablation_check("encoder", gaps))
        elif suite == "syndrome":
            res = verify_thm_syndrome(scheme)
            report.checks.append(Check("syndrome_program", res["channel_max"], tol))
            report.checks.append(Check("syndrome_program_branches", res["branch_max"], tol))
            report.checks.append(_ablation_check("syndrome", gaps))
        elif suite == "measure":
            report.checks.append(Check("measure_fusion", verify_thm_measure(scheme), tol))
        elif suite == "decode":
            res = verify_cor_decode(scheme)
            report.checks.append(Check("decoder_program", res["four_step"], tol))
            report.checks.append(Check("decoder_program_five_step", res["five_step"], tol))
            report.checks.append(_ablation_check("decoder", gaps))
    return report


_ROLES: dict[str, Callable] = {
    "encoder": lambda g, s: assemble_encoder(g),
    "syndrome": lambda g, s: assemble_syndrome(g),
    "decoder": lambda g, s: assemble_decoder(s),
    "decoder-five-step": lambda g, s: assemble_decoder_five_step(s),
}


def cmd_emit_program(args: argparse.Namespace) -> RunReport:
    g = _load_graph(args.graph)
    report = RunReport("emit-program", _inputs_hash(args, [Path(args.graph)]))
    scheme = _certified_scheme(g, args.t)
    pattern = emit_program(_ROLES[args.role](g, scheme))
    report.data["pattern"] = pattern
    if args.out:
        Path(args.out).write_text(_dump(pattern) + "\n")
    return report


def cmd_simulate_memory(args: argparse.Namespace) -> RunReport:
    g = _load_graph(args.graph)
    report = RunReport("simulate-memory", _inputs_hash(args, [Path(args.graph)]))
    scheme = _certified_scheme(g, args.t)
    model = DecoherenceModel(args.rate, g.d, truncated=args.truncated)
    run = simulate_memory(scheme, model, args.tc, args.cycles, args.epsilon)
    report.data["run"] = run.to_json()
    report.checks.append(Check("residual_within_epsilon", max(run.residuals), args.epsilon))
    if args.storing:
        st = storing_time(scheme, model, args.epsilon, k_max=args.kmax)
        report.data["storing"] = st.to_json()
    return report


# -------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a machine-readable report")
    common.add_argument("--threads", type=int, default=1, help="worker cap for parallel checks")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tolerance", type=float, default=1e-9)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="graphqec", description="Qudit graph-code toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_cmd(name: str, func, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help)
        p.add_argument("graph", help="graph spec JSON file")
        p.add_argument("--t", type=int, default=1)
        p.set_defaults(func=func)
        return p

    graph_cmd("check-graph", cmd_check_graph, "certify admissibility and t-error correction")

    p = sub.add_parser("find-graph", parents=[common], help="search for a certified graph")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--inputs", type=int, default=1)
    p.add_argument("--outputs", type=int, default=5)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--out", help="write the graph spec here")
    p.set_defaults(func=cmd_find_graph)

    p = graph_cmd("build-scheme", cmd_build_scheme, "export the syndrome table")
    p.add_argument("--out", help="write the scheme export here")

    p = graph_cmd("verify", cmd_verify, "run identity verification suites")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--noise", help="noise spec JSON for the thm1 suite")
    p.add_argument("--samples", type=int, default=100, help="random noise channels for thm1")

    p = graph_cmd("emit-program", cmd_emit_program, "emit a measurement pattern")
    p.add_argument("--role", choices=sorted(_ROLES), default="decoder")
    p.add_argument("--out", help="write the pattern here")

    p = graph_cmd("simulate-memory", cmd_simulate_memory, "run the decode/re-encode memory")
    p.add_argument("--lambda", dest="rate", type=float, default=1.0)
    p.add_argument("--tc", type=float, default=0.01, help="cycle time")
    p.add_argument("--cycles", type=int, default=5)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--truncated", action="store_true", help="keep only weight <= 1 noise")
    p.add_argument("--storing", action="store_true", help="also scan for the storing time")
    p.add_argument("--kmax", type=int, default=64)
    return parser


def _print_human(report: RunReport, out: str | None) -> None:
    doc = next((report.data[k] for k in ("pattern", "scheme", "graph") if k in report.data), None)
    if doc is not None and out is None:
        print(_dump(doc))
        return
    print(f"{report.command}: {'PASS' if report.passed else 'FAIL'} ({report.wall_time:.2f}s)")
    for c in report.checks:
        status = "pass" if c.passed else "FAIL"
        tol = "" if c.tolerance is None else f" (tol {c.tolerance:g})"
        print(f"  [{status}] {c.name}: {c.deviation:.3e}{tol}")
    for key in ("witness", "admissible_reason", "graph_hash"):
        if report.data.get(key):
            print(f"  {key}: {report.data[key]}")
    if "run" in report.data:
        run = report.data["run"]
        print("  residuals:  " + " ".join(f"{r:.3e}" for r in run["residuals"]))
        print("  free decay: " + " ".join(f"{r:.3e}" for r in run["free_decay"]))
    if "storing" in report.data:
        print(f"  storing: {report.data['storing']}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    log.debug("running %s", args.command)
    start = time.perf_counter()
    try:
        report = args.func(args)
    except (UsageError, GraphFormatError, ChannelError, FieldError, MemoryModelError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    report.wall_time = time.perf_counter() - start
    if args.json:
        sys.stdout.write(_dump(report.to_json()) + "\n")
    else:
        _print_human(report, getattr(args, "out", None))
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
