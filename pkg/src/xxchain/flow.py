"""Logical-operator flow verification for adiabatic code deformation.

A logical operator is tracked through the four snapshot Hamiltonians as a
chain of Pauli representatives.  A representative is carried unchanged while
it commutes with every term of the next snapshot; otherwise it is switched by
multiplying with Hamiltonian terms.  Switches come in two kinds:

* scalar moves: products of current-snapshot terms that commute with the
  whole current snapshot.  With the ferromagnetic sign convention such
  products act as +1 on the instantaneous ground space, so they never change
  the logical action.
* arriving moves: products of next-snapshot terms, used when a newly turned
  on term anticommutes with the carried representative.

Candidates are searched breadth-first and ranked by (arriving count, scalar
count), so the verifier leans on the exact scalar moves as much as possible.
At the final snapshot the surviving representative is reduced the same way to
a product of canonical logical operators, which yields the induced tableau.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .pauli import PauliString, commutes, format_string, identity, multiply

__all__ = [
    "FlowStep",
    "LogicalFlow",
    "FlowReport",
    "verify_flow",
    "bias_check",
    "cnot_logicals",
    "CNOT_TABLEAU",
]

CNOT_TABLEAU = {"Xc": ("Xc", "Xt"), "Zc": ("Zc",), "Xt": ("Xt",), "Zt": ("Zc", "Zt")}


@dataclass
class FlowStep:
    rep: PauliString
    valid_snapshots: frozenset[int]
    multipliers: tuple[PauliString, ...] = ()
    multiplier_snapshot: int | None = None


@dataclass
class LogicalFlow:
    name: str
    found: bool
    steps: list[FlowStep]
    final_exponents: dict[str, int] | None = None
    final_sign: int | None = None

    @property
    def representatives(self) -> list[PauliString]:
        return [s.rep for s in self.steps]

    def chain_strings(self, groups=None) -> list[str]:
        return [format_string(s.rep, groups) for s in self.steps]


@dataclass
class FlowReport:
    flows: dict[str, LogicalFlow]
    tableau: dict[str, tuple[tuple[str, ...], int]] = field(default_factory=dict)
    expected: dict[str, tuple[str, ...]] | None = None

    @property
    def all_found(self) -> bool:
        return all(f.found for f in self.flows.values())

    @property
    def tableau_matches(self) -> bool:
        if self.expected is None or not self.all_found:
            return False
        return all(
            self.tableau.get(name, ((), 0))[0] == tuple(want)
            for name, want in self.expected.items()
        )

    @property
    def signs(self) -> dict[str, int]:
        return {name: sign for name, (_, sign) in self.tableau.items()}


def cnot_logicals(L: int) -> dict[str, PauliString]:
    """Initial/final logical operators for the three-chain CNOT layout.

    The X representatives sit on the last control qubit (matching the
    chain display convention) and the first target qubit.
    """
    from .pauli import from_sites

    n = 3 * L
    return {
        "Xc": from_sites(n, {L - 1: "X"}),
        "Zc": from_sites(n, {i: "Z" for i in range(L)}),
        "Xt": from_sites(n, {2 * L: "X"}),
        "Zt": from_sites(n, {2 * L + i: "Z" for i in range(L)}),
    }


def _commutes_all(p: PauliString, terms: Sequence[PauliString]) -> bool:
    return all(commutes(p, t) for t in terms)


def _valid_set(p: PauliString, snapshots: Sequence[Sequence[PauliString]]) -> frozenset[int]:
    return frozenset(
        k + 1 for k, terms in enumerate(snapshots) if _commutes_all(p, terms)
    )


def _product_levels(terms: Sequence[PauliString], n: int, cap: int):
    """Breadth-first product levels [(product, used terms)] up to cap factors.

    Level 0 is the identity; products are deduplicated on (x, z) masks in
    discovery order, so the expansion is deterministic.
    """
    levels = [[(identity(n), ())]]
    seen = {(0, 0)}
    for _ in range(cap):
        frontier = []
        for prod, used in levels[-1]:
            for t in terms:
                cand = multiply(prod, t)
                key = (cand.x, cand.z)
                if key in seen:
                    continue
                seen.add(key)
                frontier.append((cand, used + (t,)))
        if not frontier:
            break
        levels.append(frontier)
    return levels


def _scalar_moves(terms: Sequence[PauliString], n: int, cap: int):
    """Products of snapshot terms commuting with the whole snapshot,
    ordered by factor count then discovery."""
    moves = []
    for level in _product_levels(terms, n, cap):
        for prod, used in level:
            if _commutes_all(prod, terms):
                moves.append((prod, used))
    return moves


def _advance(
    rep: PauliString,
    terms_now: Sequence[PauliString],
    terms_next: Sequence[PauliString],
    cap: int,
):
    """Minimal switch taking ``rep`` into the commutant of the next snapshot.

    Returns (new_rep, scalar_terms, arriving_terms) or None.  Candidates are
    ranked by (#arriving, #scalar); a pure carry is (rep, (), ()).
    """
    if _commutes_all(rep, terms_next):
        return rep, (), ()
    n = rep.n
    scalars = _scalar_moves(terms_now, n, cap)
    arriving_levels = _product_levels(terms_next, n, cap)
    for level in arriving_levels:
        for m_b, used_b in level:
            for m_a, used_a in scalars:
                cand = multiply(multiply(rep, m_a), m_b)
                if _commutes_all(cand, terms_next):
                    return cand, used_a, used_b
    return None


def _reduce_final(
    rep: PauliString,
    final_terms: Sequence[PauliString],
    final_logicals: dict[str, PauliString],
    cap: int,
):
    """Express ``rep`` as +-(product of canonical finals) modulo final-snapshot
    terms.  Returns (exponents, sign, multiplier terms, reduced rep) or None."""
    names = list(final_logicals)
    canonical = {}
    for r in range(len(names) + 1):
        for combo in combinations(names, r):
            prod = identity(rep.n)
            for name in combo:
                prod = multiply(prod, final_logicals[name])
            canonical.setdefault((prod.x, prod.z), (combo, prod))
    for level in _product_levels(final_terms, rep.n, cap):
        for m, used in level:
            cand = multiply(rep, m)
            hit = canonical.get((cand.x, cand.z))
            if hit is None:
                continue
            combo, prod = hit
            rel = multiply(cand, prod)  # canonical factors square to identity
            if rel.phase_pow == 0:
                sign = 1
            elif rel.phase_pow == 2:
                sign = -1
            else:
                continue
            return {name: (1 if name in combo else 0) for name in names}, sign, used, cand
    return None


def verify_flow(
    snapshots: Sequence[Sequence[PauliString]],
    initial_logicals: dict[str, PauliString],
    final_logicals: dict[str, PauliString] | None = None,
    expected: dict[str, tuple[str, ...]] | None = None,
    depth_cap: int | None = None,
) -> FlowReport:
    """Track each logical operator through the snapshot sequence.

    ``final_logicals`` are the canonical operators used to read off the
    induced tableau (default: the initial ones).  ``expected`` maps each
    logical name to the wanted tuple of canonical factor names; when given,
    the report's ``tableau_matches`` checks it.
    """
    if final_logicals is None:
        final_logicals = dict(initial_logicals)
    if not snapshots:
        raise ValueError("need at least one snapshot")
    n = next(iter(initial_logicals.values())).n
    if depth_cap is None:
        # Fig. 2 style chains use O(L) multipliers; 2L+2 keeps search bounded.
        depth_cap = max(4, 2 * max(len(t) for t in snapshots))
    flows: dict[str, LogicalFlow] = {}
    tableau: dict[str, tuple[tuple[str, ...], int]] = {}
    for name, rep0 in initial_logicals.items():
        if not _commutes_all(rep0, snapshots[0]):
            raise ValueError(f"initial logical {name} does not commute with snapshot 1")
        steps = [FlowStep(rep0, _valid_set(rep0, snapshots))]
        found = True
        for s in range(len(snapshots) - 1):
            cur = steps[-1].rep
            move = _advance(cur, snapshots[s], snapshots[s + 1], depth_cap)
            if move is None:
                found = False
                break
            new_rep, used_a, used_b = move
            if used_a:
                mid = cur
                for t in used_a:
                    mid = multiply(mid, t)
                steps.append(FlowStep(mid, _valid_set(mid, snapshots), tuple(used_a), s + 1))
                cur = mid
            if used_b:
                steps.append(
                    FlowStep(new_rep, _valid_set(new_rep, snapshots), tuple(used_b), s + 2)
                )
        flow = LogicalFlow(name, found, steps)
        if found:
            reduction = _reduce_final(
                steps[-1].rep, snapshots[-1], final_logicals, depth_cap
            )
            if reduction is None:
                flow.found = False
            else:
                exponents, sign, used, reduced = reduction
                if used:
                    flow.steps.append(
                        FlowStep(
                            reduced,
                            _valid_set(reduced, snapshots),
                            tuple(used),
                            len(snapshots),
                        )
                    )
                flow.final_exponents = exponents
                flow.final_sign = sign
                factors = tuple(k for k, e in exponents.items() if e)
                tableau[name] = (factors, sign)
        flows[name] = flow
    return FlowReport(flows=flows, tableau=tableau, expected=expected)


def bias_check(
    snapshots: Sequence[Sequence[PauliString]],
    report: FlowReport,
    z_names: Iterable[str] = ("Zc", "Zt"),
) -> bool:
    """True iff every weight-1 Z string commutes with every tracked
    representative of the logical Z operators."""
    reps = []
    for name in z_names:
        flow = report.flows.get(name)
        if flow is None or not flow.found:
            return False
        reps.extend(flow.representatives)
    if not reps:
        return False
    n = reps[0].n
    for q in range(n):
        z_q = PauliString(n, 0, 1 << q)
        if not all(commutes(z_q, rep) for rep in reps):
            return False
    return True
