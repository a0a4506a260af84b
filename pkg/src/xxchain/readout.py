"""Logical X measurement with majority-vote decoding, the squeeze Z check,
and the detailed-balance thermal suppression factor."""

from __future__ import annotations

import numpy as np
from scipy.constants import h as PLANCK_H
from scipy.constants import k as BOLTZMANN_K

from .operators import TermGroup, chain_groups, eigs_low, uniform_z_groups
from .pauli import from_sites

__all__ = [
    "prepared_x_state",
    "sample_logical_x",
    "exact_readout_error",
    "majority_decode",
    "squeeze_z_check",
    "thermal_factor",
]


def _x_basis_probabilities(state: np.ndarray, L: int) -> np.ndarray:
    """|amplitude|^2 in the all-qubit X basis; bit 1 means outcome -1."""
    psi = state.reshape((2,) * L)
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    for axis in range(L):
        psi = np.tensordot(h, psi, axes=([1], [axis]))
        psi = np.moveaxis(psi, 0, axis)
    amps = psi.reshape(-1)
    return np.abs(amps) ** 2


def prepared_x_state(L: int, g_xx: float, g_z: float) -> np.ndarray:
    """Ground-doublet state with maximal logical X expectation."""
    groups = chain_groups(L, g_xx)
    if g_z != 0.0:
        groups += uniform_z_groups(L, g_z)
    spec = eigs_low(groups, k=2, want_states=True)
    V = spec.eigenstates[:, :2].astype(np.complex128)
    x_bar = from_sites(L, {i: "X" for i in range(L)})
    dim = 1 << L
    idx = np.arange(dim)
    Xv = V[idx ^ x_bar.x]
    M = V.conj().T @ Xv
    vals, vecs = np.linalg.eigh((M + M.conj().T) / 2)
    return V @ vecs[:, np.argmax(vals)]


def majority_decode(outcomes: np.ndarray, L: int, rng: np.random.Generator) -> np.ndarray:
    """Majority vote over L X-outcome bits; even-chain ties -> fair coin.

    ``outcomes`` holds basis indices whose set bits are -1 results; returns
    +-1 decoded logical values.
    """
    ones = np.bitwise_count(outcomes.astype(np.uint64)).astype(np.int64)
    decoded = np.where(2 * ones > L, -1, 1)
    ties = 2 * ones == L
    if np.any(ties):
        coin = rng.integers(0, 2, size=int(ties.sum())) * 2 - 1
        decoded = decoded.copy()
        decoded[ties] = coin
    return decoded


def sample_logical_x(
    state: np.ndarray,
    L: int,
    shots: int,
    p_meas: float = 0.0,
    seed: int = 0,
) -> float:
    """Sampled logical X readout error rate (fraction decoding to -1)."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    probs = _x_basis_probabilities(state, L)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x5a17,)))
    outcomes = rng.choice(len(probs), size=shots, p=probs / probs.sum())
    if p_meas > 0.0:
        flips = rng.random((shots, L)) < p_meas
        masks = np.zeros(shots, dtype=np.int64)
        for b in range(L):
            masks |= flips[:, b].astype(np.int64) << b
        outcomes = outcomes ^ masks
    decoded = majority_decode(outcomes, L, rng)
    return float(np.mean(decoded < 0))


def exact_readout_error(state: np.ndarray, L: int, p_meas: float = 0.0) -> float:
    """Exact decoding error by enumeration over all outcome pairs (L <= ~12)."""
    probs = _x_basis_probabilities(state, L)
    dim = 1 << L
    true_idx = np.arange(dim)
    err = 0.0
    for observed in range(dim):
        flips = np.bitwise_count((true_idx ^ observed).astype(np.uint64)).astype(int)
        p_obs = (p_meas**flips) * ((1 - p_meas) ** (L - flips))
        ones = int(observed).bit_count()
        if 2 * ones > L:
            wrong = 1.0
        elif 2 * ones == L:
            wrong = 0.5
        else:
            wrong = 0.0
        err += wrong * float(np.dot(probs, p_obs))
    return err


def squeeze_z_check(L: int, g_xx: float, g_big: float, k: int) -> dict:
    """Static squeeze-measurement diagnostic.

    Strong Z fields on all qubits except k compress the logical Z value onto
    qubit k; reports min |<Z_k>| over the two ground states and whether each
    sign matches the logical Z label.
    """
    if not 1 <= k <= L:
        raise ValueError(f"qubit index {k} outside 1..{L}")
    groups = chain_groups(L, g_xx)
    strengths = [0.0 if i == k - 1 else g_big for i in range(L)]
    groups += uniform_z_groups(L, 0.0, strengths=strengths)
    spec = eigs_low(groups, k=2, want_states=True)
    V = spec.eigenstates[:, :2].astype(np.complex128)
    dim = 1 << L
    idx = np.arange(dim)
    z_bar = from_sites(L, {i: "Z" for i in range(L)})
    par_bar = 1.0 - 2.0 * (np.bitwise_count(idx & z_bar.z) & 1)
    M = V.conj().T @ (par_bar[:, None] * V)
    vals, vecs = np.linalg.eigh((M + M.conj().T) / 2)
    par_k = 1.0 - 2.0 * ((idx >> (k - 1)) & 1)
    report = {"z_k": [], "label": [], "match": []}
    for col in range(2):
        state = V @ vecs[:, col]
        zk = float(np.real(np.vdot(state, par_k * state)))
        label = float(vals[col])
        report["z_k"].append(zk)
        report["label"].append(label)
        report["match"].append(bool(np.sign(zk) == np.sign(label)))
    report["min_abs_zk"] = min(abs(z) for z in report["z_k"])
    return report


def thermal_factor(energy_ghz: float, temperature_mk: float) -> float:
    """Detailed-balance suppression exp(h*E / k_B*T)."""
    if temperature_mk <= 0:
        raise ValueError("temperature must be positive")
    e_joule = PLANCK_H * energy_ghz * 1e9
    kt = BOLTZMANN_K * temperature_mk * 1e-3
    return float(np.exp(e_joule / kt))
