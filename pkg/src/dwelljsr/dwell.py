"""Continuous-time switching with guaranteed dwell times, reduced to a mixed system on a graph.

A mode ``k`` that stays active for ``alpha_k + s`` time units is the jump
``A_k = e^{alpha_k B_k}`` (weight ``alpha_k``) followed by a flow of ``B_k``
for ``s``. Vertex ``g_k`` of the graph means "currently in mode ``k``": every
edge into ``g_k`` from another vertex carries ``A_k``, and the discretised
flow is a self-loop ``e^{tau B_k}`` of weight ``tau``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .graph import Edge, GraphPath, GraphSystem, graph_bounds
from .linalg import as_square, expm
from .mixed import BoundsReport, Flow, MixedSystem, SwitchingLaw

DEFAULT_SCHEDULE = (Fraction(1), Fraction(1, 2), Fraction(1, 5), Fraction(1, 10))


class DwellViolation(AssertionError):
    pass


def as_fraction(x) -> Fraction:
    """Exact rational for ``x``; floats are read through their shortest repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(repr(float(x))).limit_denominator(10**9)


@dataclass(frozen=True, eq=False)
class DwellSystem:
    """Generators ``B_k`` with guaranteed dwell times ``alpha_k``."""

    generators: tuple[np.ndarray, ...]
    dwell_times: tuple[Fraction, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        gens = tuple(as_square(B, f"generator {k}") for k, B in enumerate(self.generators))
        if not gens:
            raise ValueError("need at least one generator")
        d = gens[0].shape[0]
        if any(B.shape != (d, d) for B in gens):
            raise ValueError("generators must share one dimension")
        alphas = tuple(as_fraction(a) for a in self.dwell_times)
        if len(alphas) != len(gens):
            raise ValueError("one dwell time per generator")
        if any(a <= 0 for a in alphas):
            raise ValueError("dwell times must be positive")
        labels = tuple(self.labels) or tuple(str(k + 1) for k in range(len(gens)))
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "dwell_times", alphas)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return len(self.generators)

    @property
    def dim(self) -> int:
        return int(self.generators[0].shape[0])

    def jump(self, k: int) -> np.ndarray:
        return expm(self.generators[k], float(self.dwell_times[k]))


def build_dwell_graph(ds: DwellSystem, tau) -> GraphSystem:
    """Graph with a flow loop ``e^{tau B_k}`` at each ``g_k`` and ``A_j`` on every edge ``i -> j``, ``i != j``.

    Loops are listed first, then cross edges ordered by target and source.
    """
    tau = as_fraction(tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    t = float(tau)
    edges = [Edge(k, k, expm(B, t), t, f"~B{ds.labels[k]}", ("flow", k))
             for k, B in enumerate(ds.generators)]
    for j in range(ds.m):
        Aj = ds.jump(j)
        for i in range(ds.m):
            if i != j:
                edges.append(Edge(i, j, Aj, float(ds.dwell_times[j]), f"A{ds.labels[j]}", ("jump", j)))
    return GraphSystem(tuple(ds.dim for _ in range(ds.m)), tuple(edges))


def build_grid_graph(ds: DwellSystem, tau) -> GraphSystem:
    """Unconstrained alternative when ``tau >= max alpha_k``: one vertex with loops ``e^{tau B_k}``.

    Every word over these loops is a dwell-admissible signal, since each run
    of mode ``k`` lasts a multiple of ``tau``.
    """
    tau = as_fraction(tau)
    t = float(tau)
    edges = tuple(Edge(0, 0, expm(B, t), t, f"~B{ds.labels[k]}", ("flow", k))
                  for k, B in enumerate(ds.generators))
    return GraphSystem((ds.dim,), edges)


def is_compatible(ds: DwellSystem, tau) -> bool:
    return as_fraction(tau) >= max(ds.dwell_times)


@dataclass(frozen=True)
class SignalSpec:
    """Periodic switching signal: ``segments`` of ``(mode, duration)`` repeated forever."""

    segments: tuple[tuple[int, Fraction], ...]
    cell: Fraction
    labels: tuple[str, ...]

    @property
    def period(self) -> Fraction:
        return sum((d for _, d in self.segments), Fraction(0))

    @property
    def word(self) -> str:
        """One label per ``cell`` of time, e.g. ``"1111122"``."""
        out = []
        for k, d in self.segments:
            out.append(self.labels[k] * int(d / self.cell))
        return "".join(out)

    def check_dwell(self, ds: DwellSystem) -> bool:
        if len(self.segments) == 1:
            return True
        return all(d >= ds.dwell_times[k] for k, d in self.segments)


def _gcd(values: Sequence[Fraction]) -> Fraction:
    num = 0
    den = 1
    for v in values:
        den = den * v.denominator // math.gcd(den, v.denominator)
    for v in values:
        num = math.gcd(num, int(v * den))
    return Fraction(num, den)


def extract_signal(path: GraphPath | Sequence[int], ds: DwellSystem, tau, gs: GraphSystem | None = None) -> SignalSpec:
    """Mode timeline of a closed path in a dwell graph.

    A jump edge into ``g_j`` contributes ``alpha_j`` of mode ``j``; a flow loop
    at ``g_k`` contributes ``tau`` of mode ``k``. Runs of one mode are merged,
    cyclically, and the period is rotated to its least ``(mode, duration)``
    sequence.
    """
    tau = as_fraction(tau)
    gs = gs or build_dwell_graph(ds, tau)
    edges = path.edges if isinstance(path, GraphPath) else tuple(path)
    raw = []
    for k in edges:
        tag = gs.edges[k].tag
        if tag is None:
            raise ValueError(f"edge {k} has no dwell provenance")
        kind, mode = tag[0], tag[1]
        raw.append((mode, ds.dwell_times[mode] if kind == "jump" else tau))
    merged: list[list] = []
    for mode, d in raw:
        if merged and merged[-1][0] == mode:
            merged[-1][1] += d
        else:
            merged.append([mode, d])
    if len(merged) > 1 and merged[0][0] == merged[-1][0]:
        merged[0][1] += merged[-1][1]
        merged.pop()
    segs = [(m, Fraction(d)) for m, d in merged]
    rots = [segs[i:] + segs[:i] for i in range(len(segs))]
    segs = min(rots)
    spec = SignalSpec(tuple(segs), _gcd([d for _, d in segs]), ds.labels)
    if not spec.check_dwell(ds):
        raise DwellViolation(f"extracted signal {spec.segments} violates the dwell times")
    return spec


def signal_law(spec: SignalSpec, ds: DwellSystem, repeats: int = 1) -> tuple[MixedSystem, SwitchingLaw]:
    """The periodic signal as a pure-flow mixed system and switching law."""
    ms = MixedSystem((), ds.generators, (), tuple(f"B{s}" for s in ds.labels))
    events = tuple(Flow(k, float(d)) for k, d in spec.segments)
    return ms, SwitchingLaw(events * repeats)


def dwell_bounds_one(ds: DwellSystem, tau, *, max_len: int | None = None,
                     max_weight: float | None = None, k_max: int = 200, eta: float = 1e-10,
                     delta: float = 1e-4, workers: int | None = None,
                     encoding: str = "auto") -> BoundsReport:
    """Bracket for one step ``tau``.

    ``encoding="auto"`` uses the one-vertex loop graph when ``tau`` is at
    least every dwell time and the dwell graph otherwise.
    """
    tau = as_fraction(tau)
    grid = encoding == "grid" or (encoding == "auto" and is_compatible(ds, tau))
    if grid:
        gs = build_grid_graph(ds, tau)
        flows = [list(ds.generators)]
    else:
        gs = build_dwell_graph(ds, tau)
        flows = [[B] for B in ds.generators]
    if max_weight is None:
        max_weight = 4.0 * float(max(max(ds.dwell_times), tau))
    if max_len is None:
        max_len = int(math.ceil(max_weight / float(min(tau, min(ds.dwell_times))))) + 1
    rep = graph_bounds(gs, None, max_len=max_len, max_weight=max_weight, k_max=k_max,
                       eta=eta, delta=delta, workers=workers, flows=flows)
    cand = rep.extra["candidate"]
    spec = extract_signal(cand.path, ds, tau, gs)
    extra = dict(rep.extra)
    extra.update({"signal": spec, "encoding": "grid" if grid else "graph", "tau_exact": tau})
    return replace(rep, tau=float(tau), extra=extra)


def default_schedule(ds: DwellSystem) -> list[Fraction]:
    a = min(ds.dwell_times)
    return [a * s for s in DEFAULT_SCHEDULE]


def dwell_bounds(ds: DwellSystem, tau_schedule: Sequence | None = None, **opts) -> list[BoundsReport | Exception]:
    """One report per step; a failing step yields its exception and the schedule continues."""
    out: list[BoundsReport | Exception] = []
    for tau in (tau_schedule if tau_schedule is not None else default_schedule(ds)):
        try:
            out.append(dwell_bounds_one(ds, tau, **opts))
        except Exception as exc:  # noqa: BLE001 - isolate per-step failures
            out.append(exc)
    return out
