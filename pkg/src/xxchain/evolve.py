"""Time-dependent propagation, logical frames, and gate fidelity metrics.

The propagator is a second-order midpoint exponential: each step applies
exp(-i*2*pi*H(t_mid)*dt) to the tracked columns, with the exponential
evaluated by a Taylor expansion truncated below 1e-13 so steps are unitary
to machine precision.  Only the four logical basis columns are evolved,
never the full many-body unitary.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .noise import NoiseTrace, make_noise, seed_stream
from .operators import SpectrumResult, TermGroup, eigs_low
from .pauli import PauliString, from_sites, multiply
from .schedule import Schedule

__all__ = [
    "NoiseSettings",
    "LogicalFrame",
    "GateRunResult",
    "MonteCarloResult",
    "StepSizeError",
    "FrameError",
    "propagate",
    "logical_frame",
    "cnot_frames",
    "cnot_target",
    "basic_frame",
    "gate_metrics",
    "monte_carlo_gate",
    "xy_error_weight",
]

STEP_PHASE_LIMIT = 0.15  # max 2*pi*coeff*dt per Hamiltonian term
TAYLOR_TOL = 1e-13
DEFAULT_DT_NOISE = 0.05  # ns; >= 8 samples per 1/B at B = 0.25 GHz


class StepSizeError(ValueError):
    """dt does not resolve the largest Hamiltonian coefficient."""


class FrameError(RuntimeError):
    """Ground space does not have the degeneracy the frame needs."""


@dataclass(frozen=True)
class NoiseSettings:
    """Monte Carlo noise process parameters (GHz / ns units).

    ``channels`` is "all" or "z_only"; the latter silences every channel
    whose terms are not pure Z type (used for bias-preservation checks).
    """

    rms: float = 0.004
    bandwidth: float = 0.25
    dt_noise: float = DEFAULT_DT_NOISE
    channels: str = "all"

    @property
    def silent(self) -> bool:
        return self.rms == 0.0


# ---------------------------------------------------------------------------
# Packed Hamiltonian and the stepping kernel


@dataclass
class _PackedSchedule:
    srcs: np.ndarray       # (nk, dim) gather indices
    sgns: np.ndarray       # (nk, dim) real prefactors, sign convention folded in
    group_index: np.ndarray  # (nk,) group providing each string's coefficient
    groups: tuple[TermGroup, ...]
    dim: int


def _pack(schedule: Schedule, keep_silent_channels: bool) -> _PackedSchedule:
    dim = 1 << schedule.n_qubits
    idx = np.arange(dim, dtype=np.int64)
    srcs, sgns, gidx, kept = [], [], [], []
    for g_i, g in enumerate(schedule.groups):
        if g.base_strength == 0.0 and not keep_silent_channels:
            continue
        for p in g.terms:
            k = (p.phase_pow + (p.x & p.z).bit_count()) % 4
            if k not in (0, 2):
                raise ValueError(f"non-real Hamiltonian string {p}")
            factor = -1.0 if k == 0 else 1.0  # global minus sign convention
            src = idx ^ p.x
            par = np.bitwise_count(src & p.z) & 1
            srcs.append(src)
            sgns.append(factor * (1.0 - 2.0 * par.astype(np.float64)))
            gidx.append(g_i)
        kept.append(g_i)
    return _PackedSchedule(
        srcs=np.array(srcs, dtype=np.int64),
        sgns=np.array(sgns, dtype=np.float64),
        group_index=np.array(gidx, dtype=np.int64),
        groups=schedule.groups,
        dim=dim,
    )


@njit(cache=True, nogil=True)
def _step_kernel(C, srcs, sgns, v, minus_i_two_pi_dt, order):
    nsteps, nk = C.shape
    dim, m = v.shape
    w = np.empty((dim, m), np.complex128)
    h = np.empty((dim, m), np.complex128)
    for s in range(nsteps):
        for i in range(dim):
            for q in range(m):
                w[i, q] = v[i, q]
        for p in range(1, order + 1):
            for i in range(dim):
                for q in range(m):
                    h[i, q] = 0.0
            for k in range(nk):
                c = C[s, k]
                if c == 0.0:
                    continue
                src = srcs[k]
                sg = sgns[k]
                for i in range(dim):
                    f = c * sg[i]
                    j = src[i]
                    for q in range(m):
                        h[i, q] += f * w[j, q]
            fac = minus_i_two_pi_dt / p
            for i in range(dim):
                for q in range(m):
                    w[i, q] = fac * h[i, q]
                    v[i, q] += w[i, q]
    return v


NOISE_COEFF_FACTOR = 0.5  # quoted fluctuation is a frequency shift; a shift
# of f GHz on a transition enters the Pauli coefficient as f/2


def _coefficient_matrix(
    schedule: Schedule,
    packed: _PackedSchedule,
    t_mid: np.ndarray,
    traces: dict[str, NoiseTrace] | None,
) -> np.ndarray:
    """Per-string coefficients at the step midpoints, noise wired in."""
    cols = {}
    for g_i in np.unique(packed.group_index):
        g = schedule.groups[g_i]
        env = g.envelope.value(t_mid)
        tr = 0.0
        if traces is not None and g.noise_channel in traces:
            tr = NOISE_COEFF_FACTOR * traces[g.noise_channel].at(t_mid)
        if g.noise_mode == "multiplicative":
            coeff = env * (g.base_strength + tr)
        else:
            coeff = g.base_strength * env + tr
        cols[g_i] = coeff
    C = np.empty((len(t_mid), len(packed.group_index)))
    for k, g_i in enumerate(packed.group_index):
        C[:, k] = cols[g_i]
    return C


def _taylor_order(theta: float) -> int:
    order = 1
    term = theta
    while term > TAYLOR_TOL and order < 60:
        order += 1
        term *= theta / order
    return order


def default_dt(schedule: Schedule, noise: NoiseSettings | None = None) -> float:
    """Largest dt satisfying the per-term step-phase bound with margin.

    Weak Hamiltonians are additionally capped at T/1024 so the midpoint
    sampling still resolves the pulse envelopes, and noisy runs at a
    quarter of the noise grid.
    """
    t = np.linspace(0.0, schedule.T, 512)
    scale = float(np.abs(schedule.coefficients(t)).max())
    if noise is not None:
        scale += 8.0 * noise.rms
    dt = 0.95 * STEP_PHASE_LIMIT / (2 * np.pi * scale)
    dt = min(dt, schedule.T / 1024.0)
    if noise is not None and not noise.silent:
        dt = min(dt, noise.dt_noise / 4.0)
    return dt


def propagate(
    schedule: Schedule,
    noise_set: dict[str, NoiseTrace] | None,
    columns: np.ndarray,
    dt: float,
):
    """Evolve columns through the schedule; returns (columns, diagnostics).

    Generator is -i*2*pi*H(t) with H in h*GHz and t in ns.  Raises
    StepSizeError when any instantaneous term coefficient violates
    2*pi*|c|*dt <= 0.15, and RuntimeError on non-unitary drift.
    """
    packed = _pack(schedule, keep_silent_channels=noise_set is not None)
    if columns.shape[0] != packed.dim:
        raise ValueError(f"columns have dimension {columns.shape[0]}, need {packed.dim}")
    n_steps = max(1, int(math.ceil(schedule.T / dt)))
    dt_step = schedule.T / n_steps
    t_mid = (np.arange(n_steps) + 0.5) * dt_step
    C = _coefficient_matrix(schedule, packed, t_mid, noise_set)
    max_coeff = float(np.abs(C).max()) if C.size else 0.0
    if 2 * np.pi * max_coeff * dt_step > STEP_PHASE_LIMIT * (1 + 1e-9):
        raise StepSizeError(
            f"2*pi*|c|*dt = {2 * np.pi * max_coeff * dt_step:.3f} exceeds "
            f"{STEP_PHASE_LIMIT}; reduce dt below "
            f"{STEP_PHASE_LIMIT / (2 * np.pi * max_coeff):.3e} ns"
        )
    theta = 2 * np.pi * dt_step * float(np.abs(C).sum(axis=1).max()) if C.size else 0.0
    order = _taylor_order(theta)
    v = np.ascontiguousarray(columns, dtype=np.complex128).copy()
    if C.size:
        v = _step_kernel(C, packed.srcs, packed.sgns, v, -1j * 2 * np.pi * dt_step, order)
    norms = np.linalg.norm(v, axis=0)
    drift = float(np.abs(norms - np.linalg.norm(columns, axis=0)).max())
    if drift > 1e-8 * n_steps:
        raise RuntimeError(f"non-unitary drift {drift:.2e} over {n_steps} steps")
    diagnostics = {"steps": n_steps, "taylor_order": order, "theta": theta}
    return v, diagnostics


# ---------------------------------------------------------------------------
# Logical frames


@dataclass
class LogicalFrame:
    """Orthonormal |00>,|01>,|10>,|11> inside a 4-fold ground space,
    labeled by the logical Z eigenvalues (+1 = logical 0)."""

    basis: np.ndarray  # (dim, 4), columns ordered 00, 01, 10, 11
    z_control: PauliString
    z_target: PauliString
    x_control: PauliString
    x_target: PauliString


def _string_matvec(p: PauliString, arr: np.ndarray) -> np.ndarray:
    dim = arr.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    src = idx ^ p.x
    par = np.bitwise_count(src & p.z) & 1
    coef = (1.0 - 2.0 * par.astype(np.float64)) * (1j**p.phase_pow) * (
        1j ** ((p.x & p.z).bit_count())
    )
    return coef[:, None] * arr[src] if arr.ndim > 1 else coef * arr[src]


def logical_frame(
    groups,
    coefficients=None,
    *,
    z_control: PauliString,
    z_target: PauliString,
    x_control: PauliString,
    x_target: PauliString,
) -> LogicalFrame:
    """Build the computational frame of a snapshot Hamiltonian."""
    spec: SpectrumResult = eigs_low(groups, coefficients, k=6, want_states=True)
    if len(spec.degeneracy_groups[0]) != 4:
        raise FrameError(
            f"ground degeneracy is {len(spec.degeneracy_groups[0])}, expected 4 "
            f"(levels {np.array2string(spec.eigenvalues, precision=8)})"
        )
    V = spec.eigenstates[:, :4].astype(np.complex128)
    A = V.conj().T @ _string_matvec(z_control, V)
    vals, vecs = np.linalg.eigh(A)
    if not np.all(np.abs(np.abs(vals) - 1.0) < 1e-8):
        raise FrameError(f"logical Z_c eigenvalues {vals} are not +-1")
    plus_c = vecs[:, vals > 0]
    W = V @ plus_c  # (dim, 2) with Zc = +1
    B = W.conj().T @ _string_matvec(z_target, W)
    tvals, tvecs = np.linalg.eigh(B)
    if not np.all(np.abs(np.abs(tvals) - 1.0) < 1e-8):
        raise FrameError(f"logical Z_t eigenvalues {tvals} are not +-1")
    ket00 = W @ tvecs[:, np.argmax(tvals)]
    anchor = np.argmax(np.abs(ket00))
    ket00 = ket00 * (np.abs(ket00[anchor]) / ket00[anchor])
    ket01 = _string_matvec(x_target, ket00)
    ket10 = _string_matvec(x_control, ket00)
    ket11 = _string_matvec(x_control, ket01)
    basis = np.stack([ket00, ket01, ket10, ket11], axis=1)
    gram = basis.conj().T @ basis
    if np.abs(gram - np.eye(4)).max() > 1e-9:
        raise FrameError("frame basis failed the orthonormality check")
    return LogicalFrame(basis, z_control, z_target, x_control, x_target)


def cnot_frames(schedule: Schedule) -> tuple[LogicalFrame, LogicalFrame]:
    """Initial (H1) and final (H4) frames of a CNOT schedule."""
    L = schedule.chain_length
    n = schedule.n_qubits
    zc = from_sites(n, {i: "Z" for i in range(L)})
    zt = from_sites(n, {2 * L + i: "Z" for i in range(L)})
    xc = from_sites(n, {0: "X"})
    xt = from_sites(n, {2 * L: "X"})
    frames = []
    for k in (1, 4):
        groups = schedule.snapshot_groups(k)
        t = schedule.snapshot_times[k - 1]
        coeffs = [g.base_strength * float(g.envelope.value(t)) for g in groups]
        frames.append(
            logical_frame(
                groups, coeffs, z_control=zc, z_target=zt, x_control=xc, x_target=xt
            )
        )
    return frames[0], frames[1]


def cnot_target(pauli_frame: np.ndarray | None = None) -> np.ndarray:
    """CNOT in the |00>,|01>,|10>,|11> basis, composed with a fixed
    diagonal Pauli-frame sign correction."""
    cnot = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
    )
    if pauli_frame is None:
        return cnot
    return cnot @ np.diag(np.asarray(pauli_frame, dtype=np.complex128))


def basic_frame() -> LogicalFrame:
    """Trivial two-qubit computational frame."""
    zc = from_sites(2, {0: "Z"})
    zt = from_sites(2, {1: "Z"})
    return LogicalFrame(
        np.eye(4, dtype=np.complex128),
        zc,
        zt,
        from_sites(2, {0: "X"}),
        from_sites(2, {1: "X"}),
    )


# ---------------------------------------------------------------------------
# Metrics and Monte Carlo


@dataclass
class GateRunResult:
    u_tilde: np.ndarray
    avg_infidelity: float
    ent_infidelity: float
    leakage: float
    diagnostics: dict = field(default_factory=dict)


@dataclass
class MonteCarloResult:
    runs: int
    avg_infidelity: float
    avg_stderr: float
    ent_infidelity: float
    ent_stderr: float
    leakage: float
    results: list[GateRunResult] = field(default_factory=list)


def gate_metrics(
    evolved_columns: np.ndarray,
    frame_in: LogicalFrame,
    frame_out: LogicalFrame,
    target: np.ndarray,
    diagnostics: dict | None = None,
) -> GateRunResult:
    """Project the evolved logical columns and evaluate both infidelities.

    avg = 1 - (Tr(Ut+ Ut) + |Tr(Ut+ U)|^2) / (d(d+1)),
    ent = 1 - |Tr(Ut+ U)|^2 / d^2,  d = 4, leakage = 1 - Tr(Ut+ Ut)/d.
    """
    d = 4
    u_tilde = frame_out.basis.conj().T @ evolved_columns
    tr_tt = float(np.real(np.trace(u_tilde.conj().T @ u_tilde)))
    tr_tu = abs(np.trace(u_tilde.conj().T @ target)) ** 2
    avg = 1.0 - (tr_tt + tr_tu) / (d * (d + 1))
    ent = 1.0 - tr_tu / d**2
    leakage = 1.0 - tr_tt / d
    return GateRunResult(u_tilde, avg, ent, leakage, diagnostics or {})


def traces_for_run(
    schedule: Schedule,
    noise: NoiseSettings,
    master_seed: int,
    run_index: int,
) -> dict[str, NoiseTrace]:
    """Independent per-channel traces, sub-seeded by (run, channel) index."""
    z_channels = None
    if noise.channels == "z_only":
        z_channels = set()
        for g in schedule.groups:
            if g.noise_channel and all(t.is_z_type() for t in g.terms):
                z_channels.add(g.noise_channel)
    traces = {}
    for ch_index, channel in enumerate(schedule.channels()):
        ss = seed_stream(master_seed, run_index, ch_index)
        rms = noise.rms
        if z_channels is not None and channel not in z_channels:
            rms = 0.0
        traces[channel] = make_noise(
            ss, channel, schedule.T, noise.dt_noise, rms, noise.bandwidth
        )
    return traces


def run_gate(
    schedule: Schedule,
    frame_in: LogicalFrame,
    frame_out: LogicalFrame,
    target: np.ndarray,
    noise: NoiseSettings | None = None,
    master_seed: int = 0,
    run_index: int = 0,
    dt: float | None = None,
) -> GateRunResult:
    """One deterministic gate run; noiseless when ``noise`` is None."""
    if dt is None:
        dt = default_dt(schedule, noise)
    traces = None
    if noise is not None and not noise.silent:
        traces = traces_for_run(schedule, noise, master_seed, run_index)
    cols, diagnostics = propagate(schedule, traces, frame_in.basis, dt)
    return gate_metrics(cols, frame_in, frame_out, target, diagnostics)


def monte_carlo_gate(
    schedule: Schedule,
    runs: int,
    seed: int,
    frame_in: LogicalFrame,
    frame_out: LogicalFrame,
    target: np.ndarray,
    noise: NoiseSettings | None = None,
    dt: float | None = None,
    threads: int = 1,
    keep_runs: bool = False,
) -> MonteCarloResult:
    """Noise-averaged gate metrics with run-indexed sub-seeding.

    The reduction is ordered by run index, so results are independent of
    the thread budget.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    if dt is None:
        dt = default_dt(schedule, noise)

    def one(run_index: int) -> GateRunResult:
        return run_gate(
            schedule, frame_in, frame_out, target, noise, seed, run_index, dt
        )

    if threads > 1 and runs > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(runs)))
    else:
        results = [one(r) for r in range(runs)]
    avg = np.array([r.avg_infidelity for r in results])
    ent = np.array([r.ent_infidelity for r in results])
    leak = np.array([r.leakage for r in results])

    def stderr(x: np.ndarray) -> float:
        if len(x) < 2:
            return 0.0
        return float(np.std(x, ddof=1) / np.sqrt(len(x)))

    return MonteCarloResult(
        runs=runs,
        avg_infidelity=float(avg.mean()),
        avg_stderr=stderr(avg),
        ent_infidelity=float(ent.mean()),
        ent_stderr=stderr(ent),
        leakage=float(leak.mean()),
        results=results if keep_runs else [],
    )


_PAULI_1Q = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def xy_error_weight(u_tildes: list[np.ndarray], target: np.ndarray) -> float:
    """Summed X/Y-type Pauli error weight of the averaged logical channel.

    Diagonal chi-matrix estimate p_P = mean_r |Tr(P U+ U_r)/4|^2, summed over
    the 12 logical Paulis with an X or Y factor on either logical qubit.
    """
    weight = 0.0
    for a in "IXYZ":
        for b in "IXYZ":
            if a in "IZ" and b in "IZ":
                continue
            P = np.kron(_PAULI_1Q[a], _PAULI_1Q[b])
            vals = [
                abs(np.trace(P @ target.conj().T @ u) / 4.0) ** 2 for u in u_tildes
            ]
            weight += float(np.mean(vals))
    return weight
