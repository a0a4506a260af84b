"""Time-dependent gate schedules built from term groups and pulse envelopes.

The protected CNOT acts on three L-qubit chains laid out as control
(qubits 0..L-1), ancilla (L..2L-1), target (2L..3L-1).  It interpolates
between four snapshot Hamiltonians:

    H1 = chains + ancilla Z fields     (start pulse, off by ~0.13 T)
    H2 = chains + ZZ rungs + XX bridge (rungs: two middle pulses, on ~0.20 T;
                                        bridge: one wide middle, 0.13-0.51 T)
    H3 = chains + ZZ rungs             (bridge gone)
    H4 = chains + X field on the last  (end pulse, rising with the rungs'
         ancilla qubit                  turn-off)

Pulse timing follows one rule: term sets that commute sitewise (ancilla Z
fields vs ZZ rungs; XX bridge vs X field) must never be on simultaneously,
because their cross terms split the fourfold ground manifold and imprint
gate-time-proportional logical phases.  Anticommuting pairs, by contrast,
must overlap so the ancilla stays pinned throughout: Z fields hand off to
the bridge, the bridge to the rungs, and the rungs to the X field.  With
this geometry the manifold stays degenerate to ~1e-5 GHz along the whole
interpolation and the minimum protecting gap is ~0.8 g_XX.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .envelopes import Envelope, constant, end, middle, pulse_sum, start
from .operators import OperatorError, TermGroup, chain_groups
from .pauli import PauliString, from_sites

__all__ = [
    "Schedule",
    "cnot_schedule",
    "basic_gate_schedule",
    "calibrate_basic_amplitude",
    "tunable_xx_terms",
    "rotation_schedule",
]

BASIC_GATE_WIDTH_FACTOR = 0.85
SNAPSHOT_ENVELOPE_TOL = 1e-6

# CNOT pulse half-points as fractions of T.  Edges need >= 4.6/35 = 0.131
# from each snapshot time for 1e-10 plateau accuracy; the 0.07 T dead zone
# between the Z fields' turn-off and the rungs' turn-on suppresses their
# commuting cross term as (tail product)^L.
FIELDS_OFF = 0.133
RUNGS_ON = 1.0 / 3.0 - 0.131
BRIDGE_ON = 0.133
BRIDGE_OFF = 1.0 / 3.0 + 0.355 / 2.0


@dataclass(frozen=True)
class Schedule:
    """Complete time-dependent Hamiltonian specification for one gate."""

    n_qubits: int
    groups: tuple[TermGroup, ...]
    T: float
    kind: str = ""
    chain_length: int = 0

    @property
    def snapshot_times(self) -> tuple[float, ...]:
        return (0.0, self.T / 3, 2 * self.T / 3, self.T)

    @property
    def display_groups(self) -> tuple[int, ...] | None:
        if self.kind == "cnot":
            return (self.chain_length, 2 * self.chain_length)
        return None

    def channels(self) -> list[str]:
        """Noise channel ids in first-appearance order."""
        seen: list[str] = []
        for g in self.groups:
            if g.noise_channel is not None and g.noise_channel not in seen:
                seen.append(g.noise_channel)
        return seen

    def coefficients(self, t) -> np.ndarray:
        """Noiseless group coefficients base*envelope at time(s) t."""
        t = np.asarray(t, dtype=float)
        return np.stack([g.base_strength * g.envelope.value(t) for g in self.groups])

    def snapshot_groups(self, k: int) -> list[TermGroup]:
        """Groups forming the exact snapshot Hamiltonian k (1-based)."""
        if not 1 <= k <= 4:
            raise OperatorError(f"snapshot index {k} outside 1..4")
        t = self.snapshot_times[k - 1]
        out = []
        for g in self.groups:
            if g.base_strength == 0.0:
                continue
            if float(g.envelope.value(t)) > SNAPSHOT_ENVELOPE_TOL:
                out.append(g)
        return out

    def snapshot_terms(self, k: int) -> list[PauliString]:
        return [p for g in self.snapshot_groups(k) for p in g.terms]


def _ambient_groups(n: int, T: float) -> list[TermGroup]:
    """Zero-strength additive Z channels, one per qubit."""
    return [
        TermGroup(
            (from_sites(n, {q: "Z"}),),
            0.0,
            envelope=constant(T),
            noise_channel=f"ambient_z:{q}",
            noise_mode="additive",
            label=f"ambient{q}",
        )
        for q in range(n)
    ]


def cnot_schedule(
    L: int,
    g_xx: float = 5.0,
    g_zz: float = 5.0,
    g_z: float = 5.0,
    g_x: float = 5.0,
    T: float = 50.0,
) -> Schedule:
    """Protected CNOT on three L-chains (3L qubits)."""
    if L < 2:
        raise OperatorError("protected CNOT needs chain length >= 2")
    if min(g_xx, g_zz, g_z, g_x) <= 0:
        raise OperatorError("all strengths must be positive")
    n = 3 * L
    groups: list[TermGroup] = []
    for name, offset in (("c", 0), ("a", L), ("t", 2 * L)):
        for i, bond in enumerate(chain_groups(L, g_xx, offset=offset, n=n, label=name)):
            groups.append(
                TermGroup(
                    bond.terms,
                    g_xx,
                    envelope=constant(T),
                    noise_channel=f"bond:{name}{i}",
                    noise_mode="multiplicative",
                    label=bond.label,
                )
            )
    anc_fields = tuple(from_sites(n, {L + i: "Z"}) for i in range(L))
    groups.append(
        TermGroup(
            anc_fields,
            g_z,
            envelope=Envelope("start", T, width=2 * FIELDS_OFF * T),
            noise_channel="anc_z",
            noise_mode="additive",
            label="anc_z",
        )
    )
    rungs = tuple(from_sites(n, {i: "Z", L + i: "Z"}) for i in range(L))
    rung_width = 2 * (T / 3 - RUNGS_ON * T)
    groups.append(
        TermGroup(
            rungs,
            g_zz,
            envelope=pulse_sum(middle(T, T / 3, width=rung_width), middle(T, 2 * T / 3)),
            noise_channel="rungs",
            noise_mode="additive",
            label="rungs",
        )
    )
    bridge = from_sites(n, {2 * L - 1: "X", 2 * L: "X"})
    groups.append(
        TermGroup(
            (bridge,),
            g_xx,
            envelope=middle(
                T,
                (BRIDGE_ON + BRIDGE_OFF) / 2 * T,
                width=(BRIDGE_OFF - BRIDGE_ON) * T,
            ),
            noise_channel="bridge",
            noise_mode="multiplicative",
            label="bridge",
        )
    )
    x_field = from_sites(n, {2 * L - 1: "X"})
    groups.append(
        TermGroup(
            (x_field,),
            g_x,
            envelope=end(T),
            noise_channel="x_field",
            noise_mode="multiplicative",
            label="x_field",
        )
    )
    groups += _ambient_groups(n, T)
    return Schedule(n, tuple(groups), T, kind="cnot", chain_length=L)


def basic_gate_schedule(T: float, amplitude: float) -> Schedule:
    """Unprotected two-qubit ZZ gate with a single wide middle pulse."""
    if T <= 0:
        raise OperatorError("gate duration must be positive")
    zz = from_sites(2, {0: "Z", 1: "Z"})
    groups = [
        TermGroup(
            (zz,),
            amplitude,
            envelope=middle(T, T / 2, width=BASIC_GATE_WIDTH_FACTOR * T),
            noise_channel="zz_pulse",
            noise_mode="additive",
            label="zz",
        )
    ]
    groups += _ambient_groups(2, T)
    return Schedule(2, tuple(groups), T, kind="basic")


def basic_gate_target(T: float, amplitude: float) -> np.ndarray:
    """Ideal diagonal gate exp(i*theta*ZZ) produced by a noiseless pulse."""
    theta = 2 * np.pi * amplitude * middle(T, T / 2, width=BASIC_GATE_WIDTH_FACTOR * T).integral()
    zz = np.array([1.0, -1.0, -1.0, 1.0])
    return np.diag(np.exp(1j * theta * zz))


def ideal_basic_target() -> np.ndarray:
    """The CZ-frame target exp(i*(pi/4)*ZZ)."""
    zz = np.array([1.0, -1.0, -1.0, 1.0])
    return np.diag(np.exp(1j * (np.pi / 4) * zz))


def calibrate_basic_amplitude(T: float) -> float:
    """Pulse amplitude minimizing the noiseless basic-gate infidelity.

    The noiseless evolution is diagonal, so the entanglement infidelity is
    sin^2(theta - pi/4) with theta = 2*pi*amplitude*integral(envelope); the
    area condition gives the bracket and golden-section refines it.
    """
    area = middle(T, T / 2, width=BASIC_GATE_WIDTH_FACTOR * T).integral()
    guess = (np.pi / 4) / (2 * np.pi * area)

    def infidelity(amp: float) -> float:
        theta = 2 * np.pi * amp * area
        return float(np.sin(theta - np.pi / 4) ** 2)

    res = minimize_scalar(
        infidelity,
        bracket=(0.5 * guess, guess, 1.5 * guess),
        method="golden",
        options={"xtol": 1e-10},
    )
    if not res.success and not np.isfinite(res.x):
        raise OperatorError(f"amplitude bracket failed at T={T}")
    return float(res.x)


def tunable_xx_terms(
    n_anc: int,
    g_xx: float,
    g_z: float,
    L_logical: int = 2,
) -> list[TermGroup]:
    """One XX path of 2*L_logical + n_anc qubits; Z fields on the middle
    ancillae only."""
    if n_anc < 0:
        raise OperatorError("ancilla count must be >= 0")
    n = 2 * L_logical + n_anc
    groups = chain_groups(n, g_xx)
    if n_anc > 0 and g_z != 0.0:
        fields = tuple(
            from_sites(n, {L_logical + i: "Z"}) for i in range(n_anc)
        )
        groups.append(TermGroup(fields, g_z, label="anc_z"))
    return groups


def rotation_schedule(
    L: int,
    g_xx: float,
    g_x_amp: float,
    T_pulse: float,
) -> Schedule:
    """Unprotected logical X rotation: a middle-pulse X field on qubit 0.

    The target angle is 2*pi*g_x_amp*integral(envelope); it inherits pulse
    amplitude and duration errors linearly.
    """
    groups = []
    for i, bond in enumerate(chain_groups(L, g_xx, label="chain")):
        groups.append(
            TermGroup(
                bond.terms,
                g_xx,
                envelope=constant(T_pulse),
                noise_channel=f"bond:{i}",
                noise_mode="multiplicative",
                label=bond.label,
            )
        )
    x_term = from_sites(L, {0: "X"})
    groups.append(
        TermGroup(
            (x_term,),
            abs(g_x_amp),
            envelope=middle(T_pulse, T_pulse / 2),
            noise_channel="x_pulse",
            noise_mode="multiplicative",
            label="x_pulse",
        )
    )
    groups += _ambient_groups(L, T_pulse)
    return Schedule(L, tuple(groups), T_pulse, kind="rotation", chain_length=L)


def rotation_angle(schedule: Schedule) -> float:
    """Nominal logical rotation angle (R_X convention: pi flips the qubit)."""
    for g in schedule.groups:
        if g.label == "x_pulse":
            return 4 * np.pi * g.base_strength * g.envelope.integral()
    raise OperatorError("not a rotation schedule")
