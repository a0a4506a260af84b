"""Figure-level experiment drivers with reproducible seeding and emission.

Every driver is a pure function of (config, seed): sweep points and Monte
Carlo runs are sub-seeded by index, reductions are ordered, and outputs are
byte-identical across thread budgets.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ConfigError, echo_config
from .envelopes import middle
from .evolve import (
    NoiseSettings,
    basic_frame,
    cnot_frames,
    cnot_target,
    default_dt,
    monte_carlo_gate,
    propagate,
    run_gate,
    xy_error_weight,
)
from .flow import CNOT_TABLEAU, bias_check, cnot_logicals, verify_flow
from .noise import seed_stream
from .operators import (
    chain_groups,
    coupled_chain_groups,
    doublet_coupling,
    eigs_low,
    ground_splitting,
    imperfect_chain,
    uniform_z_groups,
)
from .readout import (
    exact_readout_error,
    prepared_x_state,
    sample_logical_x,
    squeeze_z_check,
    thermal_factor,
)
from .schedule import (
    BASIC_GATE_WIDTH_FACTOR,
    basic_gate_schedule,
    calibrate_basic_amplitude,
    cnot_schedule,
    ideal_basic_target,
    rotation_schedule,
    tunable_xx_terms,
)

__all__ = ["ResultTable", "run", "emit", "read_table", "seed_stream", "SUBCOMMANDS"]


@dataclass
class ResultTable:
    subcommand: str
    meta: dict[str, str]
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([row[idx] for row in self.rows])

    def select(self, **conditions) -> "ResultTable":
        """Rows matching exact values in the named columns."""
        idxs = {name: self.columns.index(name) for name in conditions}
        rows = [
            row
            for row in self.rows
            if all(row[idxs[k]] == v for k, v in conditions.items())
        ]
        return ResultTable(self.subcommand, dict(self.meta), list(self.columns), rows)


def _as_list(value) -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _grid(config: dict, key: str) -> list:
    values = _as_list(config[key])
    if not values:
        raise ConfigError(f"grid for {key!r} is empty")
    return values


DEFAULT_GATE_TIMES = [round(t, 1) for t in np.geomspace(10.0, 200.0, 9)]

DEFAULTS: dict[str, dict] = {
    "chain-spectrum": {"chain_length": [2, 3, 4, 5, 6], "g_xx_ghz": 5.0},
    "chain-splitting": {
        "chain_length": [2, 3, 4, 5, 6],
        "g_xx_ghz": 5.0,
        "gz_over_gxx": [round(r, 4) for r in np.geomspace(0.05, 0.2, 7)],
        "field_pattern": "uniform",
        "instances": 20,
        "seed": 1,
    },
    "readout-error": {
        "chain_length": [2, 3, 4, 5, 6],
        "g_xx_ghz": 5.0,
        "gz_over_gxx": [round(r, 4) for r in np.geomspace(0.03, 0.3, 9)],
        "shots": 1_000_000,
        "p_meas": 0.0,
        "method": "sample",
        "seed": 1,
    },
    "transistor-zz": {
        "chain_length": [2, 3, 4, 5, 6],
        "g_xx_ghz": 5.0,
        "gzz_over_gxx": [round(r, 5) for r in np.geomspace(0.003, 3.0, 25)],
    },
    "transistor-xx": {
        "n_anc": [1, 2, 3, 4],
        "g_xx_ghz": 5.0,
        "gz_over_gxx": [round(r, 4) for r in np.geomspace(0.1, 10.0, 13)],
    },
    "cnot": {
        "chain_length": [2],
        "gate_time_ns": DEFAULT_GATE_TIMES,
        "g_xx_ghz": 5.0,
        "g_zz_ghz": 5.0,
        "g_z_ghz": 5.0,
        "g_x_ghz": 5.0,
        "noise_rms_mhz": 4.0,
        "noise_bw_ghz": 0.25,
        "dt_noise_ns": 0.05,
        "runs": 0,  # 0 = auto: 100, or 200 for L = 3
        "seed": 1,
        "threads": 1,
    },
    "basic-gate": {
        "gate_time_ns": DEFAULT_GATE_TIMES,
        "noise_rms_mhz": 4.0,
        "noise_bw_ghz": 0.25,
        "dt_noise_ns": 0.05,
        "runs": 200,
        "seed": 1,
        "threads": 1,
    },
    "yyzz": {
        "chain_length": [2, 3, 4, 5, 6],
        "g_xx_ghz": 5.0,
        "gz_over_gxx": [0.0] + [round(r, 4) for r in np.geomspace(0.02, 0.3, 7)],
        "yy_sigma": 0.01,
        "instances": 100,
        "seed": 1,
    },
    "bias-check": {
        "chain_length": [2, 3],
        "gate_time_ns": 40.0,
        "g_xx_ghz": 5.0,
        "g_zz_ghz": 5.0,
        "g_z_ghz": 5.0,
        "g_x_ghz": 5.0,
        "noise_rms_mhz": 4.0,
        "noise_bw_ghz": 0.25,
        "dt_noise_ns": 0.05,
        "runs": 8,
        "seed": 1,
        "threads": 1,
    },
    "verify-flow": {
        "chain_length": [2, 3, 4],
        "g_xx_ghz": 5.0,
        "g_zz_ghz": 5.0,
        "g_z_ghz": 5.0,
        "g_x_ghz": 5.0,
        "gate_time_ns": 60.0,
    },
    "squeeze": {
        "chain_length": [3],
        "g_xx_ghz": 5.0,
        "gbig_over_gxx": [10.0],
        "qubit_index": 0,  # 0 = auto: last qubit of the chain
    },
    "rotate-x": {
        "chain_length": [3],
        "g_xx_ghz": 5.0,
        "angle_rad": [round(a, 6) for a in np.linspace(np.pi / 4, np.pi, 4)],
        "gate_time_ns": 30.0,
        "amplitude_error": 0.0,
    },
    "thermal-factor": {
        "energy_ghz": [5.0, 10.0],
        "temperature_mk": [40.0],
    },
}

SUBCOMMANDS = sorted(DEFAULTS)


def _merge_config(subcommand: str, config: dict | None) -> dict:
    if subcommand not in DEFAULTS:
        raise ConfigError(
            f"unknown subcommand {subcommand!r}; expected one of {SUBCOMMANDS}"
        )
    merged = dict(DEFAULTS[subcommand])
    for key, value in (config or {}).items():
        if key not in merged:
            raise ConfigError(f"unknown config key {key!r} for {subcommand}")
        merged[key] = value
    return merged


def _noise_from(config: dict) -> NoiseSettings:
    return NoiseSettings(
        rms=config["noise_rms_mhz"] * 1e-3,
        bandwidth=config["noise_bw_ghz"],
        dt_noise=config["dt_noise_ns"],
    )


# ---------------------------------------------------------------------------
# Drivers


def _run_chain_spectrum(config):
    g = config["g_xx_ghz"]
    rows = []
    for L in _grid(config, "chain_length"):
        spec = eigs_low(chain_groups(L, g), k=min(2 * L + 2, 1 << L))
        e = spec.eigenvalues
        degs = spec.degeneracy_groups
        gap = e[degs[1][0]] - e[0]
        rows.append([L, e[0], e[1] - e[0], gap, len(degs[0]), len(degs[1])])
    return ["L", "e0_ghz", "splitting_ghz", "gap_ghz", "deg_ground", "deg_gap"], rows


def _run_chain_splitting(config):
    g = config["g_xx_ghz"]
    pattern = config["field_pattern"]
    rows = []
    for L in _grid(config, "chain_length"):
        for r in _grid(config, "gz_over_gxx"):
            if pattern == "uniform":
                groups = chain_groups(L, g) + uniform_z_groups(L, r * g)
                split = ground_splitting(groups)
            elif pattern == "random":
                rng = np.random.default_rng(
                    seed_stream(config["seed"], L, int(round(r * 1e6)))
                )
                vals = []
                for _ in range(config["instances"]):
                    draws = rng.standard_normal(L) * r * g
                    groups = chain_groups(L, g) + uniform_z_groups(
                        L, 0.0, strengths=draws
                    )
                    vals.append(ground_splitting(groups))
                split = float(np.mean(vals))
            else:
                raise ConfigError(f"unknown field_pattern {pattern!r}")
            rows.append([L, r, split / g, r**L])
    return ["L", "gz_over_gxx", "splitting_over_gxx", "ideal_power_law"], rows


def _run_readout_error(config):
    g = config["g_xx_ghz"]
    shots = config["shots"]
    p = config["p_meas"]
    method = config["method"]
    rows = []
    for L in _grid(config, "chain_length"):
        for r in _grid(config, "gz_over_gxx"):
            state = prepared_x_state(L, g, r * g)
            if method == "exact":
                err = exact_readout_error(state, L, p)
                used = 0
            elif method == "sample":
                sub = seed_stream(config["seed"], L, int(round(r * 1e6)))
                err = sample_logical_x(
                    state, L, shots, p, seed=int(sub.generate_state(1)[0])
                )
                used = shots
            else:
                raise ConfigError(f"unknown method {method!r}")
            rows.append([L, r, err, used])
    return ["L", "gz_over_gxx", "error_rate", "shots"], rows


def _run_transistor_zz(config, threads=1):
    g = config["g_xx_ghz"]
    points = [
        (L, r) for L in _grid(config, "chain_length") for r in _grid(config, "gzz_over_gxx")
    ]

    def one(point):
        L, r = point
        return doublet_coupling(coupled_chain_groups(L, g, r * g)) / g

    couplings = _ordered_map(one, points, threads)
    rows = [[L, r, c] for (L, r), c in zip(points, couplings)]
    return ["L", "gzz_over_gxx", "coupling_over_gxx"], rows


def _run_transistor_xx(config, threads=1):
    g = config["g_xx_ghz"]
    points = [
        (n_anc, r) for n_anc in _grid(config, "n_anc") for r in _grid(config, "gz_over_gxx")
    ]

    def one(point):
        n_anc, r = point
        return doublet_coupling(tunable_xx_terms(n_anc, g, r * g)) / g

    couplings = _ordered_map(one, points, threads)
    rows = [[n, r, c] for (n, r), c in zip(points, couplings)]
    return ["n_anc", "gz_over_gxx", "coupling_over_gxx"], rows


def _run_cnot(config, threads=1):
    noise = _noise_from(config)
    target = cnot_target()
    rows = []
    for L in _grid(config, "chain_length"):
        frames = None
        for T in _grid(config, "gate_time_ns"):
            sched = cnot_schedule(
                L,
                g_xx=config["g_xx_ghz"],
                g_zz=config["g_zz_ghz"],
                g_z=config["g_z_ghz"],
                g_x=config["g_x_ghz"],
                T=float(T),
            )
            if frames is None:
                frames = cnot_frames(sched)
            runs = config["runs"] or (200 if L == 3 else 100)
            if noise.silent:
                runs = 1
            mc = monte_carlo_gate(
                sched,
                runs,
                config["seed"],
                frames[0],
                frames[1],
                target,
                noise=None if noise.silent else noise,
                threads=threads,
            )
            rows.append(
                [
                    L,
                    float(T),
                    mc.avg_infidelity,
                    mc.avg_stderr,
                    mc.ent_infidelity,
                    mc.ent_stderr,
                    mc.leakage,
                    runs,
                ]
            )
    cols = ["L", "T_ns", "avg_infid", "avg_stderr", "ent_infid", "ent_stderr", "leakage", "runs"]
    return cols, rows


def _run_basic_gate(config, threads=1):
    noise = _noise_from(config)
    frame = basic_frame()
    target = ideal_basic_target()
    rows = []
    for T in _grid(config, "gate_time_ns"):
        T = float(T)
        amp = calibrate_basic_amplitude(T)
        sched = basic_gate_schedule(T, amp)
        runs = 1 if noise.silent else config["runs"]
        mc = monte_carlo_gate(
            sched,
            runs,
            config["seed"],
            frame,
            frame,
            target,
            noise=None if noise.silent else noise,
            threads=threads,
        )
        rows.append(
            [
                T,
                amp,
                mc.avg_infidelity,
                mc.avg_stderr,
                mc.ent_infidelity,
                mc.ent_stderr,
                mc.leakage,
                runs,
            ]
        )
    cols = [
        "T_ns",
        "amplitude_ghz",
        "avg_infid",
        "avg_stderr",
        "ent_infid",
        "ent_stderr",
        "leakage",
        "runs",
    ]
    return cols, rows


def _run_yyzz(config):
    g = config["g_xx_ghz"]
    sigma = config["yy_sigma"]
    instances = config["instances"]
    rows = []
    for L in _grid(config, "chain_length"):
        draws_rng = np.random.default_rng(seed_stream(config["seed"], L, 0))
        draw_sets = [draws_rng.standard_normal(L - 1) * sigma * g for _ in range(instances)]
        for r in _grid(config, "gz_over_gxx"):
            splits = [
                ground_splitting(imperfect_chain(L, g, draws, r * g))
                for draws in draw_sets
            ]
            rows.append([L, r, float(np.mean(splits)) / g, float(np.std(splits)) / g, instances])
    cols = ["L", "gz_over_gxx", "mean_splitting_over_gxx", "std_splitting_over_gxx", "instances"]
    return cols, rows


def _cnot_snapshots(config, L):
    sched = cnot_schedule(
        L,
        g_xx=config["g_xx_ghz"],
        g_zz=config["g_zz_ghz"],
        g_z=config["g_z_ghz"],
        g_x=config["g_x_ghz"],
        T=float(config["gate_time_ns"]),
    )
    return sched, [sched.snapshot_terms(k) for k in (1, 2, 3, 4)]


def _run_verify_flow(config):
    rows = []
    meta = {}
    for L in _grid(config, "chain_length"):
        sched, snaps = _cnot_snapshots(config, L)
        report = verify_flow(snaps, cnot_logicals(L), expected=CNOT_TABLEAU)
        ok_bias = bias_check(snaps, report)
        n_steps = sum(len(f.steps) for f in report.flows.values())
        rows.append(
            [L, int(report.all_found), int(report.tableau_matches), int(ok_bias), n_steps]
        )
        for name, fl in report.flows.items():
            meta[f"flow_L{L}_{name}"] = " -> ".join(
                fl.chain_strings(sched.display_groups)
            )
    cols = ["L", "found_all", "tableau_is_cnot", "bias_pass", "n_steps_total"]
    return cols, rows, meta


def _run_bias_check(config, threads=1):
    noise = _noise_from(config)
    z_noise = NoiseSettings(
        rms=noise.rms, bandwidth=noise.bandwidth, dt_noise=noise.dt_noise, channels="z_only"
    )
    target = cnot_target()
    rows = []
    for L in _grid(config, "chain_length"):
        sched, snaps = _cnot_snapshots(config, L)
        report = verify_flow(snaps, cnot_logicals(L), expected=CNOT_TABLEAU)
        ok_bias = bias_check(snaps, report)
        frames = cnot_frames(sched)
        base = run_gate(sched, frames[0], frames[1], target)
        mc = monte_carlo_gate(
            sched,
            config["runs"],
            config["seed"],
            frames[0],
            frames[1],
            target,
            noise=z_noise,
            threads=threads,
            keep_runs=True,
        )
        xy_noisy = xy_error_weight([r.u_tilde for r in mc.results], target)
        xy_base = xy_error_weight([base.u_tilde], target)
        ratio = xy_noisy / xy_base if xy_base > 0 else math.inf
        rows.append(
            [
                L,
                int(report.tableau_matches),
                int(ok_bias),
                xy_noisy,
                xy_base,
                ratio,
            ]
        )
    cols = ["L", "flow_pass", "bias_pass", "xy_weight_noisy", "xy_weight_noiseless", "xy_ratio"]
    return cols, rows


def _run_squeeze(config):
    g = config["g_xx_ghz"]
    rows = []
    for L in _grid(config, "chain_length"):
        k = config["qubit_index"] or L
        for r in _grid(config, "gbig_over_gxx"):
            rep = squeeze_z_check(L, g, r * g, k)
            rows.append([L, k, r, rep["min_abs_zk"], int(all(rep["match"]))])
    return ["L", "k", "gbig_over_gxx", "min_abs_zk", "labels_match"], rows


def _logical_z_doublet(L: int, g: float) -> tuple[np.ndarray, np.ndarray]:
    """Z-labeled combinations of the chain ground doublet (phase gauge is
    irrelevant for flip probabilities)."""
    spec = eigs_low(chain_groups(L, g), k=2, want_states=True)
    V = spec.eigenstates[:, :2].astype(np.complex128)
    x_bar = 0
    for i in range(L):
        x_bar |= 1 << i
    idx = np.arange(1 << L)
    Xv = V[idx ^ x_bar]
    M = V.conj().T @ Xv
    vals, vecs = np.linalg.eigh((M + M.conj().T) / 2)
    plus = V @ vecs[:, np.argmax(vals)]
    minus = V @ vecs[:, np.argmin(vals)]
    ket0 = (plus + minus) / np.sqrt(2.0)
    ket1 = (plus - minus) / np.sqrt(2.0)
    return ket0, ket1


def _run_rotate_x(config):
    g = config["g_xx_ghz"]
    T = float(config["gate_time_ns"])
    eps = config["amplitude_error"]
    rows = []
    for L in _grid(config, "chain_length"):
        area = middle(T, T / 2).integral()
        ket0, ket1 = _logical_z_doublet(L, g)
        for theta in _grid(config, "angle_rad"):
            # R_X(theta) convention: a pi rotation flips the logical state
            amp = theta / (4 * np.pi * area)
            sched = rotation_schedule(L, g, amp * (1 + eps), T)
            evolved, _ = propagate(sched, None, ket0[:, None], default_dt(sched))
            psi = evolved[:, 0]
            p_flip = abs(np.vdot(ket1, psi)) ** 2
            loss = 1.0 - p_flip - abs(np.vdot(ket0, psi)) ** 2
            angle = 2.0 * math.asin(min(1.0, math.sqrt(p_flip)))
            expected = theta * (1 + eps)
            rows.append([L, amp * (1 + eps), T, angle, p_flip, loss, abs(angle - expected)])
    cols = [
        "L",
        "amplitude_ghz",
        "duration_ns",
        "angle_rad",
        "flip_probability",
        "subspace_loss",
        "angle_error_rad",
    ]
    return cols, rows


def _run_thermal_factor(config):
    rows = []
    for e in _grid(config, "energy_ghz"):
        for t in _grid(config, "temperature_mk"):
            rows.append([e, t, thermal_factor(e, t)])
    return ["energy_ghz", "temperature_mk", "factor"], rows


def _ordered_map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def run(subcommand: str, config: dict | None = None, threads: int | None = None) -> ResultTable:
    """Execute one experiment driver; deterministic given (config, seed)."""
    cfg = _merge_config(subcommand, config)
    if threads is None:
        threads = int(cfg.get("threads", 1))
    meta_extra: dict[str, str] = {}
    if subcommand == "chain-spectrum":
        cols, rows = _run_chain_spectrum(cfg)
    elif subcommand == "chain-splitting":
        cols, rows = _run_chain_splitting(cfg)
    elif subcommand == "readout-error":
        cols, rows = _run_readout_error(cfg)
    elif subcommand == "transistor-zz":
        cols, rows = _run_transistor_zz(cfg, threads)
    elif subcommand == "transistor-xx":
        cols, rows = _run_transistor_xx(cfg, threads)
    elif subcommand == "cnot":
        cols, rows = _run_cnot(cfg, threads)
    elif subcommand == "basic-gate":
        cols, rows = _run_basic_gate(cfg, threads)
    elif subcommand == "yyzz":
        cols, rows = _run_yyzz(cfg)
    elif subcommand == "verify-flow":
        cols, rows, meta_extra = _run_verify_flow(cfg)
    elif subcommand == "bias-check":
        cols, rows = _run_bias_check(cfg, threads)
    elif subcommand == "squeeze":
        cols, rows = _run_squeeze(cfg)
    elif subcommand == "rotate-x":
        cols, rows = _run_rotate_x(cfg)
    elif subcommand == "thermal-factor":
        cols, rows = _run_thermal_factor(cfg)
    else:  # pragma: no cover - guarded by _merge_config
        raise ConfigError(f"unhandled subcommand {subcommand!r}")
    meta = {"version": __version__, "subcommand": subcommand}
    meta["seed"] = str(cfg.get("seed", ""))
    for line in echo_config(cfg):
        key, value = line.split(" = ", 1)
        meta[f"config.{key}"] = value
    meta.update(meta_extra)
    return ResultTable(subcommand, meta, cols, rows)


# ---------------------------------------------------------------------------
# Emission


def _format_float(value: float) -> str:
    if isinstance(value, (int, np.integer)) or float(value).is_integer():
        return repr(int(value)) if abs(value) < 1e15 else f"{value:.17g}"
    return f"{float(value):.17g}"


def emit(table: ResultTable, path_or_buf, fmt: str = "csv") -> None:
    """Write a table as CSV ('#' header lines) or JSON; errors before any
    write when the table has no rows."""
    if not table.rows:
        raise ValueError("refusing to emit an empty table")
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    own = not hasattr(path_or_buf, "write")
    fh = open(path_or_buf, "w", encoding="utf8") if own else path_or_buf
    try:
        if fmt == "csv":
            for key, value in table.meta.items():
                fh.write(f"# {key} = {value}\n")
            fh.write(",".join(table.columns) + "\n")
            for row in table.rows:
                fh.write(",".join(_format_float(v) for v in row) + "\n")
        else:
            payload = {
                "meta": table.meta,
                "columns": table.columns,
                "rows": [[float(v) for v in row] for row in table.rows],
            }
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    finally:
        if own:
            fh.close()


def emit_string(table: ResultTable, fmt: str = "csv") -> str:
    buf = io.StringIO()
    emit(table, buf, fmt)
    return buf.getvalue()


def read_table(path_or_buf) -> ResultTable:
    """Parse a table previously written by emit (either format)."""
    own = not hasattr(path_or_buf, "read")
    fh = open(path_or_buf, "r", encoding="utf8") if own else path_or_buf
    try:
        text = fh.read()
    finally:
        if own:
            fh.close()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        payload = json.loads(stripped)
        return ResultTable(
            payload["meta"].get("subcommand", ""),
            payload["meta"],
            payload["columns"],
            payload["rows"],
        )
    meta: dict[str, str] = {}
    columns: list[str] = []
    rows: list[list[float]] = []
    for line in text.splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if " = " in body:
                key, value = body.split(" = ", 1)
                meta[key] = value
            continue
        if not line.strip():
            continue
        if not columns:
            columns = line.split(",")
            continue
        rows.append([float(v) for v in line.split(",")])
    return ResultTable(meta.get("subcommand", ""), meta, columns, rows)
