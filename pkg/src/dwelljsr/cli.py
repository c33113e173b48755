"""Command-line driver: ``dwelljsr {jsr,mixed,graph,dwell,simulate,plot} INPUT [options]``.

Exit codes: 0 success, 2 invalid input, 3 budget exhausted (partial report
still written), 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from io import StringIO
from pathlib import Path

import jsonschema
import numpy as np

from . import io
from .dwell import DwellViolation, as_fraction, default_schedule, dwell_bounds
from .graph import graph_bounds
from .ipa import (
    IpaStatus, NilpotentError, ReducibleError, canonical_word, extremality_excess, find_candidate,
    run_ipa,
)
from .lp import LpNumericalError
from .mixed import lyapunov_bounds, simulate
from .polytope import SeminormError, ShiftInfeasibleError, SymPolytope
from .svg import polytope_svg, signal_svg, trajectory_svg
from .weighted import BisectionError, WeightedSystem, gripenberg, wjsr_bisection_bracket

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_NUMERIC = 4

NUMERIC_ERRORS = (
    NilpotentError, ReducibleError, BisectionError, SeminormError, ShiftInfeasibleError,
    DwellViolation, LpNumericalError, np.linalg.LinAlgError, ArithmeticError,
)


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str
    eps: float = 1e-6
    tol: float | None = None
    eta: float = 1e-10
    delta: float = 1e-4
    max_len: int = 8
    k_max: int = 200
    node_budget: int = 200_000
    tau: str | None = None
    tau_schedule: str | None = None
    out: str = "."
    threads: int | None = None
    seed: int | None = None
    csv: bool = False

    def __post_init__(self):
        for name in ("eps", "eta", "delta"):
            if not getattr(self, name) > 0:
                raise InputError(f"--{name} must be positive")
        if self.tol is not None and not self.tol > 0:
            raise InputError("--tol must be positive")
        for name in ("max_len", "k_max", "node_budget"):
            if getattr(self, name) < 1:
                raise InputError(f"--{name.replace('_', '-')} must be positive")
        if self.threads is not None and self.threads < 1:
            raise InputError("--threads must be positive")

    def record(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("threads")  # results do not depend on the worker count
        d["input"] = Path(self.input).name
        return d


def parse_taus(text: str) -> list[Fraction]:
    try:
        taus = [as_fraction(s) for s in text.split(",") if s.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad tau list {text!r}: {exc}") from exc
    if not taus or any(t <= 0 for t in taus):
        raise InputError("tau values must be positive")
    return taus


def _load(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _write(cfg: RunConfig, name: str, text: str) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text)
    return p


def _stem(cfg: RunConfig) -> str:
    return Path(cfg.input).stem


def _fmt(x) -> str:
    return "n/a" if x is None or x != x else f"{x:.10g}"


def _status_code(status: str) -> int:
    if status == IpaStatus.CONVERGED.value:
        return EXIT_OK
    if status == IpaStatus.BUDGET_EXCEEDED.value:
        return EXIT_BUDGET
    return EXIT_NUMERIC


# --- commands ---------------------------------------------------------------------

def _tie_audit(ws: WeightedSystem, cfg: RunConfig, witness: tuple[int, ...], rho: float) -> dict:
    """Re-run the candidate search on a randomly relabelled family and map the result back."""
    rng = np.random.default_rng(cfg.seed)
    perm = [int(k) for k in rng.permutation(ws.size)]
    shuffled = WeightedSystem(tuple(ws.matrices[k] for k in perm), tuple(ws.weights[k] for k in perm))
    c = find_candidate(shuffled, cfg.max_len)
    back = tuple(perm[k] for k in c.modes)
    same = canonical_word(back) == canonical_word(witness) or math.isclose(c.rho_c, rho, rel_tol=1e-10)
    return {"seed": cfg.seed, "permutation": perm, "rho": c.rho_c,
            "witness_word": [int(k) for k in canonical_word(back)], "consistent": bool(same)}


def cmd_jsr(cfg: RunConfig) -> int:
    doc = _load(cfg.input)
    ws = io.parse_weighted(doc)
    cand = find_candidate(ws, cfg.max_len)
    out = run_ipa(ws, cand, cfg.k_max, cfg.eta, cfg.threads)
    P = out.polytope
    report = {
        "kind": "jsr",
        "version": io.SCHEMA_VERSION,
        "config": cfg.record(),
        "system": doc,
        "rho": float(cand.rho_c),
        "witness": cand.product.label(ws),
        "witness_word": [int(k) for k in cand.modes],
        "ties": [[int(k) for k in w] for w in cand.ties],
        "status": out.status.value,
        "iterations": int(out.iterations),
        "trace": [int(n) for n in out.trace],
        "polytope": io.polytope_doc(P),
        "eps_extremal": io.num(extremality_excess(ws, P, cand.rho_c)) if P is not None and P.spans else None,
        "bracket": None,
        "bisection": None,
    }
    if not out.converged:
        b = gripenberg(ws, cfg.eps, cfg.node_budget)
        report["bracket"] = {"lower": b.lower, "upper": b.upper, "converged": b.converged,
                             "nodes": b.nodes, "witness_word": [int(k) for k in b.witness]}
    if cfg.tol is not None:
        r = wjsr_bisection_bracket(ws, cfg.tol, budget=cfg.node_budget)
        report["bisection"] = {"value": r.value, "lower": r.lower, "upper": r.upper, "steps": r.steps}
    if cfg.seed is not None:
        report["audit"] = _tie_audit(ws, cfg, cand.modes, cand.rho_c)
    io.validate(report, "plot")
    path = _write(cfg, f"{_stem(cfg)}.jsr.json", io.dumps(report))
    pairs = 0 if P is None else P.size
    print(f"jsr: rho = {cand.rho_c!r}  witness = {report['witness']}  status = {out.status.value}"
          f"  rounds = {out.iterations}  vertices = {pairs} pairs")
    if report["bracket"]:
        print(f"  branch and bound bracket: [{report['bracket']['lower']!r}, {report['bracket']['upper']!r}]")
    if report["bisection"]:
        print(f"  bisection: [{report['bisection']['lower']!r}, {report['bisection']['upper']!r}]")
    print(f"  report: {path}")
    code = _status_code(out.status.value)
    if code and (report["bisection"] or (report["bracket"] and report["bracket"]["converged"])):
        return EXIT_OK  # the branch-and-bound bracket certifies the value instead
    return code


def _bounds_summary(kind: str, rep) -> str:
    return (f"{kind}: tau = {_fmt(rep.tau)}  beta = {_fmt(rep.beta)}  mu = {_fmt(rep.mu)}"
            f"  witness = {rep.witness_label}  status = {rep.status}  rounds = {rep.iterations}")


def _one_tau(cfg: RunConfig) -> float | None:
    if cfg.tau is None:
        return None
    taus = parse_taus(cfg.tau)
    if len(taus) != 1:
        raise InputError("--tau takes one value")
    return float(taus[0])


def cmd_mixed(cfg: RunConfig) -> int:
    doc = _load(cfg.input)
    ms = io.parse_mixed(doc)
    tau = _one_tau(cfg)
    if tau is None:
        if ms.continuous:
            raise InputError("--tau is required for systems with continuous modes")
        tau = 1.0
    rep = lyapunov_bounds(ms, tau, max_len=cfg.max_len, k_max=cfg.k_max, eta=cfg.eta,
                          delta=cfg.delta, workers=cfg.threads)
    report = {"kind": "mixed", "version": io.SCHEMA_VERSION, "config": cfg.record(), "system": doc,
              **io.bounds_doc(rep), "polytope": io.polytope_doc(rep.certificate)}
    io.validate(report, "plot")
    path = _write(cfg, f"{_stem(cfg)}.mixed.json", io.dumps(report))
    print(_bounds_summary("mixed", rep))
    print(f"  report: {path}")
    if rep.mu is None and rep.status == IpaStatus.CONVERGED.value:
        return EXIT_NUMERIC
    return _status_code(rep.status)


def cmd_graph(cfg: RunConfig) -> int:
    doc = _load(cfg.input)
    gs = io.parse_graph(doc)
    rep = graph_bounds(gs, _one_tau(cfg), max_len=cfg.max_len, k_max=cfg.k_max, eta=cfg.eta,
                       delta=cfg.delta, workers=cfg.threads)
    report = {"kind": "graph", "version": io.SCHEMA_VERSION, "config": cfg.record(), "system": doc,
              **io.bounds_doc(rep), "multinorm": io.multinorm_doc(rep.certificate)}
    io.validate(report, "plot")
    path = _write(cfg, f"{_stem(cfg)}.graph.json", io.dumps(report))
    print(_bounds_summary("graph", rep))
    print(f"  report: {path}")
    return _status_code(rep.status)


def cmd_dwell(cfg: RunConfig) -> int:
    doc = _load(cfg.input)
    ds = io.parse_dwell(doc)
    if cfg.tau_schedule is not None:
        taus = parse_taus(cfg.tau_schedule)
    elif cfg.tau is not None:
        taus = parse_taus(cfg.tau)
    else:
        taus = None
    reps = dwell_bounds(ds, taus, max_len=None, k_max=cfg.k_max, eta=cfg.eta,
                        delta=cfg.delta, workers=cfg.threads)
    taus = taus or default_schedule(ds)
    entries = []
    code = EXIT_OK
    for tau, rep in zip(taus, reps):
        if isinstance(rep, Exception):
            entries.append({"tau": float(tau), "tau_exact": str(tau), "error": f"{type(rep).__name__}: {rep}"})
            code = max(code, EXIT_NUMERIC if isinstance(rep, NUMERIC_ERRORS) else EXIT_INPUT)
            print(f"dwell: tau = {tau}  failed: {type(rep).__name__}: {rep}")
            continue
        spec = rep.extra["signal"]
        entries.append({**io.bounds_doc(rep), "tau_exact": str(tau), "encoding": rep.extra["encoding"],
                        "signal": io.signal_doc(spec), "multinorm": io.multinorm_doc(rep.certificate)})
        code = max(code, _status_code(rep.status))
        print(_bounds_summary("dwell", rep) + f"  signal = {spec.word}")
        if cfg.csv:
            rows = ["start,end,mode"]
            t = Fraction(0)
            for k, d in spec.segments:
                rows.append(f"{t},{t + d},{ds.labels[k]}")
                t += d
            _write(cfg, f"{_stem(cfg)}.dwell.tau{len(entries) - 1}.csv", "\n".join(rows) + "\n")
    report = {"kind": "dwell", "version": io.SCHEMA_VERSION, "config": cfg.record(), "system": doc,
              "reports": entries}
    io.validate(report, "plot")
    path = _write(cfg, f"{_stem(cfg)}.dwell.json", io.dumps(report))
    print(f"  report: {path}")
    return code


def cmd_simulate(cfg: RunConfig) -> int:
    doc = _load(cfg.input)
    ms, law, x0, dt = io.parse_simulation(doc)
    tr = simulate(ms, law, x0, dt)
    buf = StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "active"] + [f"x{k + 1}" for k in range(ms.dim)])
    for t, a, x in zip(tr.t, tr.active, tr.x):
        w.writerow([repr(float(t)), int(a)] + [repr(float(c)) for c in x])
    path = _write(cfg, f"{_stem(cfg)}.trajectory.csv", buf.getvalue())
    _write(cfg, f"{_stem(cfg)}.trajectory.svg", trajectory_svg(tr.t, tr.x, tr.active, "log |x(t)|"))
    print(f"simulate: samples = {len(tr.t)}  horizon = {_fmt(float(tr.t[-1]))}"
          f"  growth rate = {_fmt(tr.growth_rate())}")
    print(f"  trajectory: {path}")
    return EXIT_OK


def _poly(d) -> SymPolytope:
    return SymPolytope(np.array(d["vertices"], dtype=float))


def cmd_plot(cfg: RunConfig) -> int:
    doc = _load(cfg.input)
    io.validate(doc, "plot")
    stem = _stem(cfg)
    written = []
    marked = 0

    def draw(d, name, title):
        nonlocal marked
        if d is None:
            return
        P = _poly(d)
        if P.dim != 2:
            print(f"  skipped {name}: dimension {P.dim}")
            return
        written.append(_write(cfg, name, polytope_svg(P, title)))
        marked += 2 * P.size

    kind = doc["kind"]
    if kind in ("jsr", "mixed"):
        draw(doc["polytope"], f"{stem}.polytope.svg", f"{kind}: witness {doc['witness']}")
    elif kind == "graph":
        for i, d in enumerate(doc["multinorm"] or []):
            draw(d, f"{stem}.vertex{i}.svg", f"vertex {i}")
    else:
        for t, rep in enumerate(doc["reports"]):
            for i, d in enumerate(rep.get("multinorm") or []):
                draw(d, f"{stem}.tau{t}.vertex{i}.svg", f"tau = {rep.get('tau_exact')}, vertex {i}")
            if "signal" in rep:
                segs = [(s["mode"], Fraction(s["duration"])) for s in rep["signal"]["segments"]]
                written.append(_write(cfg, f"{stem}.tau{t}.signal.svg",
                                      signal_svg(segs, 3, f"tau = {rep['tau_exact']}: {rep['signal']['word']}")))
    print(f"plot: {len(written)} figures, {marked} marked vertices")
    for p in written:
        print(f"  {p}")
    return EXIT_OK


COMMANDS = {
    "jsr": cmd_jsr, "mixed": cmd_mixed, "graph": cmd_graph,
    "dwell": cmd_dwell, "simulate": cmd_simulate, "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dwelljsr", description="Certified Lyapunov exponent bounds for switching systems.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("input", help="JSON system file (or a report, for plot)")
    p.add_argument("--eps", type=float, default=1e-6, help="branch-and-bound accuracy")
    p.add_argument("--tol", type=float, default=None, help="also run weighted bisection to this accuracy (jsr)")
    p.add_argument("--eta", type=float, default=1e-10, help="strict-interiority tolerance")
    p.add_argument("--delta", type=float, default=1e-4, help="step of the shift LP")
    p.add_argument("--max-len", type=int, default=8, help="longest product in the candidate search")
    p.add_argument("--k-max", type=int, default=200, help="polytope algorithm round budget")
    p.add_argument("--node-budget", type=int, default=200_000, help="branch-and-bound node budget")
    p.add_argument("--tau", default=None, help="discretisation step, e.g. 0.5 or 2/5")
    p.add_argument("--tau-schedule", default=None, help="comma-separated steps, e.g. 1,2/5,1/10")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $DWELLJSR_THREADS or 1)")
    p.add_argument("--seed", type=int, default=None, help="seed for the randomised tie-break audit (jsr)")
    p.add_argument("--csv", action="store_true", help="also write signal timelines as CSV (dwell)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command, input=args.input, eps=args.eps, tol=args.tol, eta=args.eta,
            delta=args.delta, max_len=args.max_len, k_max=args.k_max, node_budget=args.node_budget,
            tau=args.tau, tau_schedule=args.tau_schedule, out=args.out, threads=args.threads,
            seed=args.seed, csv=args.csv,
        )
        return COMMANDS[cfg.command](cfg)
    except NUMERIC_ERRORS as exc:
        print(f"error: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, jsonschema.ValidationError, ValueError, KeyError, TypeError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(f"error: invalid input: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
