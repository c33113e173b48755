"""Mixed discrete-continuous systems: discretisation, Lyapunov exponent bounds, simulation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .ipa import (
    Candidate, IpaOutcome, IpaStatus, extremality_excess, find_candidate, run_ipa, ETA,
)
from .linalg import as_square, expm, spectral_radius
from .polytope import ShiftResult, SymPolytope, induced_norm, mu_shift
from .weighted import WeightedProduct, WeightedSystem


@dataclass(frozen=True, eq=False)
class MixedSystem:
    """Discrete weighted modes ``(A_i, alpha_i)`` plus continuous generators ``B_j``."""

    discrete: tuple[tuple[np.ndarray, float], ...] = ()
    continuous: tuple[np.ndarray, ...] = ()
    discrete_labels: tuple[str, ...] = ()
    continuous_labels: tuple[str, ...] = ()

    def __post_init__(self):
        disc = []
        for i, (A, a) in enumerate(self.discrete):
            A = as_square(A, f"discrete mode {i}")
            a = float(a)
            if not (a > 0 and math.isfinite(a)):
                raise ValueError(f"discrete mode {i} needs a positive weight")
            disc.append((A, a))
        cont = tuple(as_square(B, f"continuous mode {j}") for j, B in enumerate(self.continuous))
        dims = {A.shape[0] for A, _ in disc} | {B.shape[0] for B in cont}
        if len(dims) != 1:
            raise ValueError("all modes must share one dimension and at least one mode is needed")
        dl = tuple(self.discrete_labels) or tuple(f"A{i + 1}" for i in range(len(disc)))
        cl = tuple(self.continuous_labels) or tuple(f"B{j + 1}" for j in range(len(cont)))
        if len(dl) != len(disc) or len(cl) != len(cont):
            raise ValueError("one label per mode")
        object.__setattr__(self, "discrete", tuple(disc))
        object.__setattr__(self, "continuous", cont)
        object.__setattr__(self, "discrete_labels", dl)
        object.__setattr__(self, "continuous_labels", cl)

    @property
    def dim(self) -> int:
        return int((self.discrete[0][0] if self.discrete else self.continuous[0]).shape[0])

    @classmethod
    def from_weighted(cls, sys: WeightedSystem) -> "MixedSystem":
        return cls(tuple(zip(sys.matrices, sys.weights)), (), sys.labels)


def flow_label(label: str) -> str:
    return "~" + label


def discretize(ms: MixedSystem, tau: float) -> WeightedSystem:
    """Weighted system ``A_i`` (weight ``alpha_i``) together with ``e^{tau B_j}`` (weight ``tau``).

    Discrete modes come first, so mode ``k >= len(ms.discrete)`` is the flow
    of generator ``k - len(ms.discrete)``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    mats = [A for A, _ in ms.discrete] + [expm(B, tau) for B in ms.continuous]
    weights = [a for _, a in ms.discrete] + [tau] * len(ms.continuous)
    labels = list(ms.discrete_labels) + [flow_label(s) for s in ms.continuous_labels]
    return WeightedSystem(tuple(mats), tuple(weights), tuple(labels))


def mode_provenance(ms: MixedSystem, k: int) -> tuple[str, int]:
    """``("jump", i)`` or ``("flow", j)`` for mode ``k`` of the discretised system."""
    n = len(ms.discrete)
    return ("jump", k) if k < n else ("flow", k - n)


def beta_of(product: WeightedProduct) -> float:
    """``log rho(Pi) / |Pi|``; ``-inf`` for a nilpotent product."""
    r = spectral_radius(product.matrix)
    return math.log(r) / product.weight if r > 0 else -math.inf


def shift(ms: MixedSystem, t: float) -> MixedSystem:
    """``(e^{t alpha_i} A_i, alpha_i, B_j + t I)``: every exponent moves by ``t``."""
    I = np.eye(ms.dim)
    return MixedSystem(
        tuple((math.exp(t * a) * A, a) for A, a in ms.discrete),
        tuple(B + t * I for B in ms.continuous),
        ms.discrete_labels,
        ms.continuous_labels,
    )


@dataclass(frozen=True, eq=False)
class BoundsReport:
    """Certified bracket ``beta <= sigma <= mu`` for one discretisation step.

    ``mu = max(mu_flow, mu_jump)``: ``mu_flow`` bounds the flows through the
    shift LP, ``mu_jump = max_i log ||A_i||_P / alpha_i`` bounds the jumps.
    ``eps_extremal`` is the extremality slack of the certificate for the
    discretised family (0 up to round-off when the polytope algorithm
    converged). ``mu`` is ``None`` when no spanning certificate exists.
    """

    tau: float
    beta: float
    mu: float | None
    rho: float
    witness: tuple[int, ...]
    witness_label: str
    status: str
    iterations: int
    eps_extremal: float | None
    mu_flow: float | None = None
    mu_jump: float | None = None
    delta: float | None = None
    certificate: object = field(default=None, repr=False)
    trace: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def gap(self) -> float | None:
        return None if self.mu is None else self.mu - self.beta


def flow_and_jump_mu(P: SymPolytope, ms: MixedSystem, delta: float) -> tuple[float | None, float | None, ShiftResult | None]:
    mu_flow = shift_res = None
    if ms.continuous:
        shift_res = mu_shift(P, ms.continuous, delta)
        mu_flow = shift_res.mu
    mu_jump = None
    for A, a in ms.discrete:
        n = induced_norm(P, A)
        val = math.log(n) / a if n > 0 else -math.inf
        mu_jump = val if mu_jump is None else max(mu_jump, val)
    return mu_flow, mu_jump, shift_res


def _combine(*vals):
    vals = [v for v in vals if v is not None]
    return max(vals) if vals else None


def lyapunov_bounds(ms: MixedSystem, tau: float, *, max_len: int = 8,
                    max_weight: float | None = None, k_max: int = 100, eta: float = ETA,
                    delta: float = 1e-4, workers: int | None = None,
                    candidate: Candidate | None = None) -> BoundsReport:
    """Bracket the Lyapunov exponent of ``ms`` using the step ``tau``.

    The discretised family gives a candidate product (lower bound ``beta``)
    and an invariant polytope ``P``; ``mu`` is then a growth bound for
    every flow and jump in the norm of ``P``, valid for any spanning ``P``.
    """
    ws = discretize(ms, tau)
    cand = candidate or find_candidate(ws, max_len, max_weight)
    beta = beta_of(cand.product)
    out: IpaOutcome = run_ipa(ws, cand, k_max, eta, workers)
    mu = mu_flow = mu_jump = eps = None
    P = out.polytope
    extra: dict = {}
    if P is not None and P.spans:
        eps = extremality_excess(ws, P, cand.rho_c)
        mu_flow, mu_jump, res = flow_and_jump_mu(P, ms, delta)
        mu = _combine(mu_flow, mu_jump)
        if res is not None:
            extra["mode_mu"] = [float(x) for x in res.mode_mu]
    return BoundsReport(
        tau=float(tau),
        beta=beta,
        mu=mu,
        rho=cand.rho_c,
        witness=cand.modes,
        witness_label=cand.product.label(ws),
        status=out.status.value,
        iterations=out.iterations,
        eps_extremal=eps,
        mu_flow=mu_flow,
        mu_jump=mu_jump,
        delta=delta,
        certificate=P,
        trace=out.trace,
        extra=extra,
    )


# --- switching laws and simulation ---------------------------------------------

class MalformedLawError(ValueError):
    pass


@dataclass(frozen=True)
class Jump:
    """Discrete mode ``mode`` acting over a dark interval of length ``alpha_mode``.

    ``start`` is optional; when given it must equal the current time.
    """

    mode: int
    start: float | None = None


@dataclass(frozen=True)
class Flow:
    mode: int
    duration: float


Event = Union[Jump, Flow]


@dataclass(frozen=True)
class SwitchingLaw:
    events: tuple[Event, ...]

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def intervals(self, ms: MixedSystem) -> list[tuple[str, int, float, float]]:
        """``(kind, mode, a, b)`` for every event, validating the timeline."""
        t = 0.0
        out = []
        for k, ev in enumerate(self.events):
            if isinstance(ev, Jump):
                if not 0 <= ev.mode < len(ms.discrete):
                    raise MalformedLawError(f"event {k}: no discrete mode {ev.mode}")
                if ev.start is not None:
                    if ev.start < t - 1e-12:
                        raise MalformedLawError(f"event {k}: interval starts at {ev.start}, overlapping the previous one ending at {t}")
                    if ev.start > t + 1e-12:
                        raise MalformedLawError(f"event {k}: gap [{t}, {ev.start}] has no flow assigned")
                a = ms.discrete[ev.mode][1]
                out.append(("jump", ev.mode, t, t + a))
                t += a
            elif isinstance(ev, Flow):
                if not 0 <= ev.mode < len(ms.continuous):
                    raise MalformedLawError(f"event {k}: no continuous mode {ev.mode}")
                if not (ev.duration >= 0 and math.isfinite(ev.duration)):
                    raise MalformedLawError(f"event {k}: flow duration must be finite and >= 0")
                out.append(("flow", ev.mode, t, t + ev.duration))
                t += ev.duration
            else:
                raise MalformedLawError(f"event {k}: unknown event {ev!r}")
        return out

    def horizon(self, ms: MixedSystem) -> float:
        iv = self.intervals(ms)
        return iv[-1][3] if iv else 0.0

    def repeat(self, n: int) -> "SwitchingLaw":
        return SwitchingLaw(self.events * n)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples ``x(t)``; ``active`` is false on interpolated dark-interval samples."""

    t: np.ndarray
    x: np.ndarray
    active: np.ndarray

    def growth_rate(self) -> float:
        n0 = np.linalg.norm(self.x[0])
        n1 = np.linalg.norm(self.x[-1])
        T = self.t[-1] - self.t[0]
        if n0 == 0 or n1 == 0 or T <= 0:
            return -math.inf
        return math.log(n1 / n0) / T


def simulate(ms: MixedSystem, law: SwitchingLaw, x0, sample_dt: float) -> Trajectory:
    """Exact piecewise solution: ``expm`` on flows, matrix jumps at the ends of dark intervals."""
    if not sample_dt > 0:
        raise ValueError("sample_dt must be positive")
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape[0] != ms.dim:
        raise ValueError("initial state has the wrong dimension")
    ts = [0.0]
    xs = [x.copy()]
    act = [True]
    for kind, mode, a, b in law.intervals(ms):
        n = int(math.floor((b - a) / sample_dt + 1e-9))
        grid = [a + k * sample_dt for k in range(1, n + 1) if a + k * sample_dt < b - 1e-12]
        if kind == "flow":
            B = ms.continuous[mode]
            for s in grid:
                ts.append(s)
                xs.append(expm(B, s - a) @ x)
                act.append(True)
            x = expm(B, b - a) @ x
            ts.append(b)
            xs.append(x.copy())
            act.append(True)
        else:
            A = ms.discrete[mode][0]
            y = A @ x
            for s in grid:
                f = (s - a) / (b - a)
                ts.append(s)
                xs.append((1 - f) * x + f * y)
                act.append(False)
            x = y
            ts.append(b)
            xs.append(x.copy())
            act.append(True)
    return Trajectory(np.array(ts), np.array(xs), np.array(act, dtype=bool))


def law_from_word(ms: MixedSystem, ws_modes: Sequence[int], tau: float) -> SwitchingLaw:
    """Switching law realising a discretised word (application order)."""
    events: list[Event] = []
    for k in ws_modes:
        kind, i = mode_provenance(ms, k)
        events.append(Jump(i) if kind == "jump" else Flow(i, tau))
    return SwitchingLaw(tuple(events))
