"""Many-body operator assembly, low-lying eigensolutions, spectral statistics.

Sign convention: every term enters the Hamiltonian as

    H = sum_g  coeff_g * sum_{p in group g} (-1) * p

so with positive strengths the couplings are ferromagnetic and the aligned-X
product states span the chain ground space.  Coefficients are in h*GHz.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as sparse_linalg

from .envelopes import Envelope, constant
from .pauli import PauliString, from_sites

__all__ = [
    "TermGroup",
    "SpectrumResult",
    "OperatorError",
    "SolverError",
    "apply",
    "sparse_matrix",
    "eigs_low",
    "ground_splitting",
    "doublet_coupling",
    "chain_groups",
    "uniform_z_groups",
    "coupled_chain_groups",
    "imperfect_chain",
]

DENSE_DIM_LIMIT = 4096  # dense solver below, Krylov at and above
_EIGSH_SEED = 20240917


class OperatorError(ValueError):
    """Mismatched dimensions or non-Hermitian string content."""


class SolverError(RuntimeError):
    """Eigensolver failed to converge; carries the residual if known."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class TermGroup:
    """Pauli terms sharing one strength, envelope, and noise channel.

    ``noise_mode`` is "additive" (coefficient = base*envelope + trace) or
    "multiplicative" (coefficient = envelope*(base + trace)).
    """

    terms: tuple[PauliString, ...]
    base_strength: float
    envelope: Envelope = field(default_factory=lambda: constant())
    noise_channel: str | None = None
    noise_mode: str = "additive"
    label: str = ""

    def __post_init__(self):
        if not self.terms:
            raise OperatorError("term group needs at least one term")
        n = self.terms[0].n
        if any(t.n != n for t in self.terms):
            raise OperatorError("terms in a group must share the qubit count")
        if self.base_strength < 0:
            raise OperatorError("base_strength must be >= 0; put signs in phases")
        if self.noise_mode not in ("additive", "multiplicative"):
            raise OperatorError(f"unknown noise mode {self.noise_mode!r}")

    @property
    def n_qubits(self) -> int:
        return self.terms[0].n


@dataclass
class SpectrumResult:
    """Ascending eigenvalues with tolerance-based degeneracy grouping."""

    eigenvalues: np.ndarray
    degeneracy_groups: list[list[int]]
    tolerance: float
    eigenstates: np.ndarray | None = None

    def degeneracies(self) -> list[int]:
        return [len(g) for g in self.degeneracy_groups]


def _string_sign_factor(p: PauliString) -> float:
    """Real scalar of i^phase_pow * i^{#Y}; raises if the string is not real."""
    k = (p.phase_pow + (p.x & p.z).bit_count()) % 4
    if k == 0:
        return 1.0
    if k == 2:
        return -1.0
    raise OperatorError(
        f"string {p} has an imaginary overall factor; Hamiltonians must be real"
    )


def _group_sizes(groups: Sequence[TermGroup]) -> int:
    n = groups[0].n_qubits
    if any(g.n_qubits != n for g in groups):
        raise OperatorError("all groups must act on the same qubit count")
    return n


def _z_signs(idx: np.ndarray, z_mask: int) -> np.ndarray:
    par = np.bitwise_count(idx & z_mask) & 1
    return 1.0 - 2.0 * par.astype(np.float64)


def apply(
    groups: Sequence[TermGroup],
    coefficients: Sequence[float] | None,
    state: np.ndarray,
) -> np.ndarray:
    """Matrix-free H @ state for H = sum_g coeff_g * sum_p (-1)*p.

    ``coefficients`` default to the group base strengths.  The state's
    leading axis must be 2**n.
    """
    if not groups:
        return np.zeros_like(state)
    n = _group_sizes(groups)
    dim = 1 << n
    if state.shape[0] != dim:
        raise OperatorError(f"state dimension {state.shape[0]} != 2**{n}")
    if coefficients is None:
        coefficients = [g.base_strength for g in groups]
    if len(coefficients) != len(groups):
        raise OperatorError("need one coefficient per group")
    idx = np.arange(dim, dtype=np.int64)
    out = np.zeros(state.shape, dtype=np.result_type(state.dtype, np.float64))
    for g, c in zip(groups, coefficients):
        if c == 0.0:
            continue
        for p in g.terms:
            src = idx ^ p.x
            coef = (-c) * _string_sign_factor(p) * _z_signs(src, p.z)
            if state.ndim == 1:
                out += coef * state[src]
            else:
                out += coef[:, None] * state[src]
    return out


def sparse_matrix(
    groups: Sequence[TermGroup],
    coefficients: Sequence[float] | None = None,
) -> sparse.csr_matrix:
    """Assemble H as a real CSR matrix (all strings here are real)."""
    n = _group_sizes(groups)
    dim = 1 << n
    if coefficients is None:
        coefficients = [g.base_strength for g in groups]
    idx = np.arange(dim, dtype=np.int64)
    rows, cols, vals = [], [], []
    for g, c in zip(groups, coefficients):
        if c == 0.0:
            continue
        for p in g.terms:
            src = idx ^ p.x
            rows.append(idx)
            cols.append(src)
            vals.append((-c) * _string_sign_factor(p) * _z_signs(src, p.z))
    if not rows:
        return sparse.csr_matrix((dim, dim))
    return sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()


def _degeneracy_tolerance(groups: Sequence[TermGroup], coefficients) -> float:
    if coefficients is None:
        scale = max((g.base_strength for g in groups), default=0.0)
    else:
        scale = max((abs(c) for c in coefficients), default=0.0)
    return 1e-6 * scale if scale > 0 else 1e-12


def group_by_tolerance(values: np.ndarray, tol: float) -> list[list[int]]:
    """Partition ascending values into clusters separated by >= tol."""
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        if groups and v - values[groups[-1][-1]] < tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def eigs_low(
    groups: Sequence[TermGroup],
    coefficients: Sequence[float] | None = None,
    k: int = 6,
    tolerance: float | None = None,
    want_states: bool = False,
) -> SpectrumResult:
    """k lowest eigenvalues (ascending) with degeneracy grouping.

    Dense below DENSE_DIM_LIMIT; Lanczos (k+6 Ritz pairs, deterministic
    start vector, residual-checked) at and above it.
    """
    n = _group_sizes(groups)
    dim = 1 << n
    if k > dim:
        raise OperatorError(f"k={k} exceeds dimension {dim}")
    if tolerance is None:
        tolerance = _degeneracy_tolerance(groups, coefficients)
    H = sparse_matrix(groups, coefficients)
    if dim < DENSE_DIM_LIMIT:
        dense = H.toarray()
        if want_states:
            vals, vecs = scipy.linalg.eigh(dense)
            vals, vecs = vals[:k], vecs[:, :k]
        else:
            vals = scipy.linalg.eigh(dense, eigvals_only=True)[:k]
            vecs = None
    else:
        n_pairs = min(k + 6, dim - 1)
        v0 = np.random.default_rng(_EIGSH_SEED).standard_normal(dim)
        try:
            vals_all, vecs_all = sparse_linalg.eigsh(
                H, k=n_pairs, which="SA", v0=v0, tol=1e-11, maxiter=20000
            )
        except sparse_linalg.ArpackNoConvergence as exc:
            raise SolverError(f"Lanczos did not converge: {exc}") from exc
        order = np.argsort(vals_all)
        vals_all, vecs_all = vals_all[order], vecs_all[:, order]
        scale = max(1.0, float(np.abs(vals_all).max()))
        resid = np.linalg.norm(H @ vecs_all - vecs_all * vals_all, axis=0)
        worst = float(resid.max())
        if worst > 1e-9 * scale:
            raise SolverError(
                f"Lanczos residual {worst:.2e} above 1e-9 * {scale:.2e}", worst
            )
        vals = vals_all[:k]
        vecs = vecs_all[:, :k] if want_states else None
    return SpectrumResult(
        eigenvalues=np.asarray(vals, dtype=float),
        degeneracy_groups=group_by_tolerance(np.asarray(vals), tolerance),
        tolerance=tolerance,
        eigenstates=vecs,
    )


def ground_splitting(
    groups: Sequence[TermGroup],
    coefficients: Sequence[float] | None = None,
) -> float:
    """E1 - E0 of the assembled Hamiltonian (>= 0)."""
    spec = eigs_low(groups, coefficients, k=2)
    return max(0.0, float(spec.eigenvalues[1] - spec.eigenvalues[0]))


def doublet_coupling(
    groups: Sequence[TermGroup],
    coefficients: Sequence[float] | None = None,
) -> float:
    """Splitting between the two doublets of a 4-state low manifold.

    Returns (E2+E3)/2 - (E0+E1)/2.  Raises SolverError when the six lowest
    levels do not resolve into a 2+2 manifold separated from the rest.
    """
    spec = eigs_low(groups, coefficients, k=6)
    e = spec.eigenvalues
    gap_within = max(e[1] - e[0], e[3] - e[2])
    gap_doublets = (e[2] + e[3]) / 2 - (e[0] + e[1]) / 2
    gap_above = e[4] - e[3]
    pair_tol = max(spec.tolerance, 0.25 * gap_doublets)
    if gap_within > pair_tol or gap_above < gap_doublets - spec.tolerance:
        raise SolverError(
            "degeneracy pattern is not two doublets: "
            f"levels {np.array2string(e, precision=6)}"
        )
    return float(gap_doublets)


# ---------------------------------------------------------------------------
# Chain builders


def chain_groups(L: int, g_xx: float, offset: int = 0, n: int | None = None,
                 label: str = "chain") -> list[TermGroup]:
    """Nearest-neighbour XX bonds of one chain, one group per bond."""
    if L < 2:
        raise OperatorError("a chain needs at least two qubits")
    n = n if n is not None else offset + L
    out = []
    for i in range(L - 1):
        term = from_sites(n, {offset + i: "X", offset + i + 1: "X"})
        out.append(TermGroup((term,), g_xx, label=f"{label}:bond{i}"))
    return out


def uniform_z_groups(L: int, g_z: float, offset: int = 0, n: int | None = None,
                     strengths: Sequence[float] | None = None) -> list[TermGroup]:
    """Z fields on every chain qubit; one group (all sites) unless per-site
    strengths are given."""
    n = n if n is not None else offset + L
    if strengths is None:
        terms = tuple(from_sites(n, {offset + i: "Z"}) for i in range(L))
        return [TermGroup(terms, g_z, label="zfields")]
    out = []
    for i, s in enumerate(strengths):
        phase = 0 if s >= 0 else 2
        term = from_sites(n, {offset + i: "Z"}, phase_pow=phase)
        out.append(TermGroup((term,), abs(s), label=f"zfield{i}"))
    return out


def coupled_chain_groups(L: int, g_xx: float, g_zz: float) -> list[TermGroup]:
    """Two parallel L-chains joined by L ZZ rungs (2L qubits)."""
    n = 2 * L
    out = chain_groups(L, g_xx, offset=0, n=n, label="top")
    out += chain_groups(L, g_xx, offset=L, n=n, label="bottom")
    rungs = tuple(from_sites(n, {i: "Z", L + i: "Z"}) for i in range(L))
    out.append(TermGroup(rungs, g_zz, label="rungs"))
    return out


def imperfect_chain(
    L: int,
    g_xx: float,
    g_yy_draws: Sequence[float],
    g_z: float,
) -> list[TermGroup]:
    """Chain with per-bond contamination -g_xx XX + |g_yy| YY - 0.2|g_yy| ZZ
    plus uniform Z fields."""
    if len(g_yy_draws) != L - 1:
        raise OperatorError(f"need {L - 1} YY draws, got {len(g_yy_draws)}")
    out = []
    for i, g_yy in enumerate(g_yy_draws):
        xx = from_sites(L, {i: "X", i + 1: "X"})
        out.append(TermGroup((xx,), g_xx, label=f"bond{i}"))
        a = abs(g_yy)
        if a > 0.0:
            # +|g_yy| YY enters as -(|g_yy|) * (-YY): fold the sign into the phase
            yy = from_sites(L, {i: "Y", i + 1: "Y"}, phase_pow=2)
            zz = from_sites(L, {i: "Z", i + 1: "Z"})
            out.append(TermGroup((yy,), a, label=f"yy{i}"))
            out.append(TermGroup((zz,), 0.2 * a, label=f"zz{i}"))
    if g_z != 0.0:
        out += uniform_z_groups(L, g_z)
    return out
