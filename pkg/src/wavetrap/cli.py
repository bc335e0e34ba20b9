"""Command-line surface: JSON configs in, CSV/JSON/SVG artifacts out.

Subcommands: simulate, dispersion, scattering, scan, baseline, scaling,
oracle-check, tune, enumerate.  Every run echoes its config and seed
into the JSON summary and produces byte-identical artifacts when
repeated (wall-clock timing goes to stderr only, SVG carries no
timestamps).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, _svg
from ._backend import backend_name
from .dynamics import StabilityError, energy_drift, run
from .lattice import (ValidationError, assemble, attach_cavity,
                      build_chain, build_custom, build_ring, fmo_preset,
                      fmo_target_site)
from .modes import (band_edge, chain_dispersion, group_velocity, normal_modes,
                    side_branch_scattering)
from .optimize import enumerate_topologies, tune_cavity
from .transport import (PulseParams, ScalingPolicy, SiteExcitation,
                        StandingPacket, hopping_baseline,
                        hopping_system, images_reference, make_excitation,
                        measure_hopping_spreading, measure_wave_spreading,
                        mirror_node_displacement, reflection_fidelity,
                        resonance_scan, scaling_study, spreading_exponent)

COMMANDS = ("simulate", "dispersion", "scattering", "scan", "baseline",
            "scaling", "oracle-check", "tune", "enumerate")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    """Configuration document rejected (bad JSON, unknown key, bad value)."""


@dataclass
class RunConfig:
    command: str
    params: dict
    seed: int
    out_dir: str | None
    emit: dict
    raw: dict


# ---------------------------------------------------------------------------
# config validation

_REQUIRED = object()


def _validate(doc, table, path=""):
    """Check `doc` against {key: (checker, default)}; unknown keys are
    rejected with their full path."""
    if not isinstance(doc, dict):
        raise ConfigError(f"'{path or '$'}' must be a JSON object")
    for key in doc:
        if key not in table:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown config key '{where}'")
    out = {}
    for key, (checker, default) in table.items():
        if key in doc:
            out[key] = checker(doc[key], f"{path}.{key}" if path else key)
        elif default is _REQUIRED:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"missing required config key '{where}'")
        else:
            out[key] = default
    return out


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}' must be a number")
    return float(value)


def _integer(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{path}' must be an integer")
    return value


def _string(value, path):
    if not isinstance(value, str):
        raise ConfigError(f"'{path}' must be a string")
    return value


def _boolean(value, path):
    if not isinstance(value, bool):
        raise ConfigError(f"'{path}' must be a boolean")
    return value


def _number_list(value, path):
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{path}' must be a non-empty list of numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _int_list(value, path):
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{path}' must be a non-empty list of integers")
    return [_integer(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _pair(value, path):
    vals = _number_list(value, path)
    if len(vals) != 2:
        raise ConfigError(f"'{path}' must be a [low, high] pair")
    return tuple(vals)


def _passthrough(value, path):
    return value


_CAVITY_TABLE = {
    "site": (_integer, None),
    "mass": (_number, _REQUIRED),
    "spring": (_number, _REQUIRED),
    "onsite": (_number, 0.0),
}


def _network(value, path):
    if not isinstance(value, dict):
        raise ConfigError(f"'{path}' must be an object")
    kind = value.get("kind")
    tables = {
        "chain": {"kind": (_string, _REQUIRED), "n": (_integer, _REQUIRED),
                  "m": (_number, 1.0), "k": (_number, 1.0),
                  "k0": (_number, 0.0), "boundary": (_string, "free"),
                  "cavity": (_passthrough, None)},
        "ring": {"kind": (_string, _REQUIRED), "n": (_integer, _REQUIRED),
                 "m": (_number, 1.0), "k": (_number, 1.0),
                 "k0": (_number, 0.0), "cavity": (_passthrough, None)},
        "fmo": {"kind": (_string, _REQUIRED), "cavity": (_passthrough, None)},
        "custom": {"kind": (_string, _REQUIRED),
                   "masses": (_number_list, _REQUIRED),
                   "onsite_springs": (_number_list, _REQUIRED),
                   "edges": (_passthrough, _REQUIRED),
                   "boundary": (_string, "free"),
                   "cavity": (_passthrough, None)},
    }
    if kind not in tables:
        raise ConfigError(
            f"'{path}.kind' must be one of {sorted(tables)}, got {kind!r}")
    fields = _validate(value, tables[kind], path)
    try:
        if kind == "chain":
            spec = build_chain(fields["n"], fields["m"], fields["k"],
                               fields["k0"], fields["boundary"])
        elif kind == "ring":
            spec = build_ring(fields["n"], fields["m"], fields["k"],
                              fields["k0"])
        elif kind == "fmo":
            spec = fmo_preset()
        else:
            edges = [(int(a), int(b), float(kk))
                     for a, b, kk in fields["edges"]]
            spec = build_custom(fields["masses"], fields["onsite_springs"],
                                edges, fields["boundary"])
        if fields["cavity"] is not None:
            cav = _validate(fields["cavity"], _CAVITY_TABLE,
                            f"{path}.cavity")
            site = cav["site"]
            if site is None:
                if kind != "fmo":
                    raise ConfigError(
                        f"'{path}.cavity.site' is required for kind={kind}")
                site = fmo_target_site()
            spec = attach_cavity(spec, site, cav["mass"], cav["spring"],
                                 cav["onsite"])
    except ValidationError as exc:
        raise ConfigError(f"'{path}': {exc}") from exc
    return spec


def _excitation(value, path):
    if not isinstance(value, dict):
        raise ConfigError(f"'{path}' must be an object")
    kind = value.get("type")
    tables = {
        "site": {"type": (_string, _REQUIRED), "site": (_integer, _REQUIRED),
                 "energy": (_number, 1.0)},
        "pulse": {"type": (_string, _REQUIRED),
                  "center": (_number, _REQUIRED),
                  "width": (_number, _REQUIRED), "q0": (_number, _REQUIRED),
                  "amplitude": (_number, 1.0), "direction": (_integer, 1)},
        "standing": {"type": (_string, _REQUIRED),
                     "center": (_number, _REQUIRED),
                     "width": (_number, _REQUIRED),
                     "q0": (_number, _REQUIRED),
                     "amplitude": (_number, 1.0)},
    }
    if kind not in tables:
        raise ConfigError(
            f"'{path}.type' must be one of {sorted(tables)}, got {kind!r}")
    fields = _validate(value, tables[kind], path)
    if kind == "site":
        return SiteExcitation(fields["site"], fields["energy"])
    if kind == "pulse":
        return PulseParams(fields["center"], fields["width"], fields["q0"],
                           fields["amplitude"], fields["direction"])
    return StandingPacket(fields["center"], fields["width"], fields["q0"],
                          fields["amplitude"])


def _emit_flags(value, path):
    flags = _validate(value, {"csv": (_boolean, True),
                              "json": (_boolean, True),
                              "svg": (_boolean, True)}, path)
    return flags


_COMMAND_TABLES = {
    "simulate": {
        "network": (_network, _REQUIRED),
        "excitation": (_excitation, _REQUIRED),
        "t_final": (_number, _REQUIRED),
        "dt": (_number, None),
        "dt_factor": (_number, 0.05),
        "gamma": (_number, 0.0),
        "record_stride": (_integer, 1),
    },
    "dispersion": {
        "k": (_number, 1.0),
        "m": (_number, 1.0),
        "points": (_integer, 256),
    },
    "scattering": {
        "k": (_number, 1.0),
        "m": (_number, 1.0),
        "cavity_spring": (_number, _REQUIRED),
        "cavity_mass": (_number, _REQUIRED),
        "points": (_integer, 200),
        "omegas": (_number_list, None),
    },
    "scan": {
        "ring_n": (_integer, 16),
        "k": (_number, 1.0),
        "m": (_number, 1.0),
        "cavity_site": (_integer, 0),
        "cavity_mass": (_number, 0.03),
        "omega_min": (_number, _REQUIRED),
        "omega_max": (_number, _REQUIRED),
        "points": (_integer, 64),
        "excitation": (_excitation, _REQUIRED),
        "t_final": (_number, _REQUIRED),
        "dt_factor": (_number, 0.05),
        "record_stride": (_integer, 50),
        "prominence": (_number, 0.08),
    },
    "baseline": {
        "chain_n": (_integer, 256),
        "site": (_integer, None),
        "hop_rate": (_number, 1.0),
        "t_final_wave": (_number, _REQUIRED),
        "t_start_wave": (_number, 5.0),
        "t_final_hop": (_number, _REQUIRED),
        "t_start_hop": (_number, 2.0),
        "record_stride": (_integer, 20),
        "sink_site": (_integer, None),
        "sink_rate": (_number, 0.0),
    },
    "scaling": {
        "sizes": (_int_list, None),
        "carrier_q0": (_number, math.pi / 2),
        "width_fraction": (_number, 1.0 / 6.0),
        "t_final_factor": (_number, 60.0),
        "detune_factor": (_number, 0.7),
        "omega_bounds": (_pair, (0.6, 1.8)),
        "mass_bounds": (_pair, (0.02, 0.2)),
        "grid": (_integer, 12),
        "refine_evals": (_integer, 60),
        "gate_factor": (_number, 5.0),
        "ratio_floor": (_number, 0.5),
    },
    "oracle-check": {
        "chain_n": (_integer, 128),
        "width": (_number, 6.0),
        "q0": (_number, math.pi / 2),
        "center": (_number, None),
        "time_points": (_integer, 25),
    },
    "tune": {
        "network": (_network, _REQUIRED),
        "excitation": (_excitation, _REQUIRED),
        "t_final": (_number, _REQUIRED),
        "omega_bounds": (_pair, None),
        "mass_bounds": (_pair, (0.02, 0.15)),
        "grid": (_integer, 32),
        "max_evals": (_integer, 200),
        "metric": (_string, "peak_eta"),
    },
    "enumerate": {
        "n": (_integer, _REQUIRED),
        "edge_budget": (_int_list, None),
        "k": (_number, 1.0),
        "t_final": (_number, None),
        "grid": (_integer, 10),
        "max_evals": (_integer, 40),
        "top": (_integer, 20),
    },
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config is not valid JSON: {exc.msg} "
            f"(line {exc.lineno}, column {exc.colno})") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    command = doc.get("command")
    if command not in COMMANDS:
        raise ConfigError(
            f"'command' must be one of {list(COMMANDS)}, got {command!r}")
    table = dict(_COMMAND_TABLES[command])
    table["command"] = (_string, _REQUIRED)
    table["seed"] = (_integer, 0)
    table["out"] = (_string, None)
    table["emit"] = (_emit_flags,
                     {"csv": True, "json": True, "svg": True})
    fields = _validate(doc, table)
    seed = fields.pop("seed")
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError("'seed' must be an unsigned 64-bit integer")
    out_dir = fields.pop("out")
    emit = fields.pop("emit")
    fields.pop("command")
    return RunConfig(command=command, params=fields, seed=seed,
                     out_dir=out_dir, emit=emit, raw=doc)


# ---------------------------------------------------------------------------
# artifact emission


def _g17(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def _csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_g17(v) for v in row))
    return "\n".join(lines) + "\n"


def emit_svg(series, axes: dict) -> str:
    """Self-contained SVG line plot for a non-empty curve set.

    axes: title/xlabel/ylabel plus optional logx/logy booleans, vlines
    (x positions) and annotations ((x, y, text) triples).
    """
    plots = [s if isinstance(s, _svg.Series) else
             _svg.Series(x=list(s[0]), y=list(s[1]),
                         label=s[2] if len(s) > 2 else "")
             for s in series]
    if not plots or all(len(p.x) == 0 for p in plots):
        raise ValueError("emit_svg needs at least one non-empty series")
    return _svg.line_plot(
        plots, title=axes.get("title", ""), xlabel=axes.get("xlabel", ""),
        ylabel=axes.get("ylabel", ""), logx=axes.get("logx", False),
        logy=axes.get("logy", False), vlines=axes.get("vlines", ()),
        annotations=axes.get("annotations", ()))


def _summary(config: RunConfig, payload: dict) -> dict:
    return {
        "tool": "wavetrap",
        "version": __version__,
        "backend": backend_name(),
        "command": config.command,
        "seed": config.seed,
        "config": config.raw,
        "result": payload,
    }


# ---------------------------------------------------------------------------
# command handlers: each returns {"csv": {...}, "json": payload, "svg": {...}}


def _cmd_simulate(p, config):
    system = assemble(p["network"])
    basis = normal_modes(system)
    dt = p["dt"] if p["dt"] is not None else p["dt_factor"] / basis.max_frequency
    state0 = make_excitation(system, p["excitation"])
    traj = run(system, state0, dt, p["t_final"], gamma=p["gamma"],
               record_stride=p["record_stride"])
    d = system.dimension
    columns = ["time", "total", "cavity_energy"] + [f"site_{i}"
                                                    for i in range(d)]
    site = traj.site_energy
    rows = [[traj.times[r], traj.totals[r], traj.cavity_energy[r]]
            + list(site[r]) for r in range(len(traj.times))]
    payload = {
        "dimension": d,
        "dt": dt,
        "steps": int(round(p["t_final"] / dt)),
        "records": len(traj.times),
        "energy_drift": energy_drift(traj),
        "initial_energy": float(traj.totals[0]),
        "final_energy": float(traj.totals[-1]),
    }
    svg = emit_svg(
        [(list(traj.times), list(traj.totals), "total"),
         (list(traj.times), list(traj.cavity_energy), "cavity")],
        {"title": "energy vs time", "xlabel": "time", "ylabel": "energy"})
    return {"csv": {"simulate": (columns, rows)}, "json": payload,
            "svg": {"simulate": svg}}


def _cmd_dispersion(p, config):
    k, m = p["k"], p["m"]
    qs = np.linspace(0.0, math.pi, p["points"] + 1)[1:]
    rows = [[q, chain_dispersion(k, m, q), group_velocity(k, m, q)]
            for q in qs]
    payload = {"band_edge": band_edge(k, m), "points": len(qs)}
    svg = emit_svg(
        [(list(qs), [r[1] for r in rows], "omega(q)"),
         (list(qs), [r[2] for r in rows], "v_g(q)")],
        {"title": "chain dispersion", "xlabel": "q", "ylabel": "omega, v_g"})
    return {"csv": {"dispersion": (["q", "omega", "group_velocity"], rows)},
            "json": payload, "svg": {"dispersion": svg}}


def _cmd_scattering(p, config):
    k, m, K, M = p["k"], p["m"], p["cavity_spring"], p["cavity_mass"]
    edge = band_edge(k, m)
    if p["omegas"] is not None:
        omegas = p["omegas"]
    else:
        omegas = list(np.linspace(0.0, edge, p["points"] + 2)[1:-1])
    rows = []
    for w in omegas:
        c = side_branch_scattering(k, m, K, M, w)
        rows.append([w, c.r.real, c.r.imag, c.s.real, c.s.imag,
                     c.flux_error])
    payload = {"band_edge": edge, "blocking_frequency":
               math.sqrt(K / M) if M > 0 and K > 0 else 0.0}
    svg = emit_svg(
        [(omegas, [r[1] ** 2 + r[2] ** 2 for r in rows], "|r|^2"),
         (omegas, [r[3] ** 2 + r[4] ** 2 for r in rows], "|s|^2")],
        {"title": "side-branch scattering", "xlabel": "omega",
         "ylabel": "flux fraction"})
    return {"csv": {"scattering": (["omega", "re_r", "im_r", "re_s", "im_s",
                                    "flux_error"], rows)},
            "json": payload, "svg": {"scattering": svg}}


def _cmd_scan(p, config, jobs=1):
    base = attach_cavity(build_ring(p["ring_n"], m=p["m"], k=p["k"]),
                         p["cavity_site"], p["cavity_mass"],
                         p["cavity_mass"])  # spring swept per point
    omegas = np.linspace(p["omega_min"], p["omega_max"], p["points"])
    if jobs > 1:
        chunks = np.array_split(np.arange(len(omegas)), jobs)
        results = [None] * len(chunks)

        def work(ci):
            return resonance_scan(base, omegas[chunks[ci]], p["excitation"],
                                  p["t_final"], p["dt_factor"],
                                  p["record_stride"])

        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            for ci, res in zip(range(len(chunks)),
                               pool.map(work, range(len(chunks)))):
                results[ci] = res
        eta = np.concatenate([r.eta for r in results])
        t_peak = np.concatenate([r.t_peak for r in results])
        trap = np.concatenate([r.trap_duration for r in results])
        first = results[0]
        from .transport import ScanResult
        result = ScanResult(omegas=omegas, eta=eta, t_peak=t_peak,
                            trap_duration=trap,
                            in_band=(omegas > 0) & (omegas < first.band_top),
                            band_top=first.band_top, ring_n=first.ring_n,
                            k=first.k, m=first.m,
                            cavity_mass=first.cavity_mass)
    else:
        result = resonance_scan(base, omegas, p["excitation"], p["t_final"],
                                p["dt_factor"], p["record_stride"])
    peaks = result.peaks(p["prominence"])
    predicted = result.predicted_resonances()
    tol = 0.02 * result.band_top
    peak_dist = []
    for pos, _ in peaks:
        from .modes import resonance_frequencies
        roots = resonance_frequencies(result.ring_n, result.k, result.m,
                                      result.cavity_mass * pos * pos,
                                      result.cavity_mass)
        peak_dist.append(float(min(abs(roots - pos))) if len(roots)
                         else math.inf)
    pred_dist = [float(min(abs(np.array([q[0] for q in peaks]) - f)))
                 if peaks else math.inf for f in predicted]
    rows = [[result.omegas[i], bool(result.in_band[i]), result.eta[i],
             result.t_peak[i], result.trap_duration[i]]
            for i in range(len(result.omegas))]
    payload = {
        "peaks": [{"omega": pos, "eta": e} for pos, e in peaks],
        "predicted_resonances": [float(f) for f in predicted],
        "tolerance": tol,
        "max_peak_to_root": max(peak_dist) if peak_dist else None,
        "max_prediction_to_peak": max(pred_dist) if pred_dist else None,
        "matched": bool(peak_dist and pred_dist
                        and max(peak_dist) <= tol
                        and max(pred_dist) <= tol),
    }
    svg = emit_svg(
        [(list(result.omegas), list(result.eta), "eta")],
        {"title": "capture efficiency vs cavity frequency",
         "xlabel": "Omega", "ylabel": "eta",
         "vlines": [float(f) for f in predicted]})
    return {"csv": {"scan": (["omega", "in_band", "eta", "t_peak",
                              "trap_duration"], rows)},
            "json": payload, "svg": {"scan": svg}}


def _cmd_baseline(p, config):
    n = p["chain_n"]
    site = p["site"] if p["site"] is not None else n // 2
    chain = build_chain(n)
    wave = measure_wave_spreading(chain, site, p["t_final_wave"],
                                  t_start=p["t_start_wave"],
                                  record_stride=p["record_stride"])
    hop = measure_hopping_spreading(chain, site, p["hop_rate"],
                                    p["t_final_hop"],
                                    t_start=p["t_start_hop"],
                                    record_stride=p["record_stride"])
    exp_wave = spreading_exponent(wave)
    exp_hop = spreading_exponent(hop)
    payload = {"wave_exponent": exp_wave, "hopping_exponent": exp_hop,
               "site": site}
    csv = {
        "baseline_wave": (["time", "sigma"],
                          [[t, s] for t, s in zip(wave.times, wave.sigma)]),
        "baseline_hopping": (["time", "sigma"],
                             [[t, s] for t, s in zip(hop.times, hop.sigma)]),
    }
    if p["sink_site"] is not None and p["sink_rate"] > 0:
        occ0 = np.zeros(n)
        occ0[site] = 1.0
        hsys = hopping_system(chain, p["hop_rate"], p["sink_site"],
                              p["sink_rate"], occ0)
        dt = 0.05 / (p["hop_rate"] * hsys.max_degree + p["sink_rate"])
        curve = hopping_baseline(hsys, p["t_final_hop"], dt,
                                 p["record_stride"])
        csv["baseline_absorbed"] = (
            ["time", "absorbed"],
            [[t, a] for t, a in zip(curve.times, curve.absorbed)])
        payload["final_absorbed"] = float(curve.absorbed[-1])
    svg = emit_svg(
        [(list(wave.times), list(wave.sigma), "wave"),
         (list(hop.times), list(hop.sigma), "hopping")],
        {"title": "spreading width", "xlabel": "time", "ylabel": "sigma",
         "logx": True, "logy": True,
         "annotations": [
             (float(wave.times[len(wave.times) // 2]),
              float(wave.sigma[len(wave.sigma) // 2]),
              f"slope {exp_wave:.3f}"),
             (float(hop.times[len(hop.times) // 2]),
              float(hop.sigma[len(hop.sigma) // 2]),
              f"slope {exp_hop:.3f}")]})
    return {"csv": csv, "json": payload, "svg": {"baseline": svg}}


def _cmd_scaling(p, config):
    sizes = p["sizes"] if p["sizes"] is not None else [8, 16, 32]
    policy = ScalingPolicy(
        carrier_q0=p["carrier_q0"], width_fraction=p["width_fraction"],
        t_final_factor=p["t_final_factor"], detune_factor=p["detune_factor"],
        omega_bounds=tuple(p["omega_bounds"]),
        mass_bounds=tuple(p["mass_bounds"]), grid_resolution=p["grid"],
        refine_evals=p["refine_evals"], gate_factor=p["gate_factor"],
        ratio_floor=p["ratio_floor"])
    study = scaling_study(sizes, policy)
    rows = [[r.n, r.eta_tuned, r.eta_detuned, r.uniform_share, r.omega,
             r.cavity_mass, r.cavity_spring] for r in study.rows]
    payload = {"gate_passed": study.gate_passed, "report": study.report,
               "rows": [{"n": r.n, "eta_tuned": r.eta_tuned,
                         "eta_detuned": r.eta_detuned,
                         "uniform_share": r.uniform_share}
                        for r in study.rows]}
    ns = [r.n for r in study.rows]
    svg = emit_svg(
        [(ns, [r.eta_tuned for r in study.rows], "tuned"),
         (ns, [r.eta_detuned for r in study.rows], "detuned"),
         (ns, [r.uniform_share for r in study.rows], "1/N")],
        {"title": "capture vs ring size", "xlabel": "N", "ylabel": "eta"})
    return {"csv": {"scaling": (["n", "eta_tuned", "eta_detuned",
                                 "uniform_share", "omega", "cavity_mass",
                                 "cavity_spring"], rows)},
            "json": payload, "svg": {"scaling": svg}}


def _cmd_oracle_check(p, config):
    n = p["chain_n"]
    center = p["center"] if p["center"] is not None else 0.55 * n
    wall = build_chain(n, boundary="fixed_left")
    pulse = PulseParams(center=center, width=p["width"], q0=p["q0"],
                        direction=-1)
    system = assemble(wall)
    basis = normal_modes(system)
    state0 = make_excitation(system, pulse)
    v = group_velocity(1.0, 1.0, p["q0"])
    t_full = 2.0 * (center + 1.0) / v
    times = np.linspace(0.0, 1.05 * t_full, p["time_points"])
    from .dynamics import evolve_exact
    rows = []
    for t in times:
        direct = evolve_exact(system, basis, state0, float(t))
        ref = images_reference(wall, pulse, float(t))
        rms = float(np.sqrt(np.mean((direct.positions - ref.positions) ** 2)))
        wall_disp = mirror_node_displacement(wall, pulse, float(t))
        rows.append([t, rms, wall_disp])
    fid_narrow = reflection_fidelity(wall, pulse)
    broad = PulseParams(center=center, width=1.0, q0=p["q0"], direction=-1)
    fid_broad = reflection_fidelity(wall, broad)
    free = build_chain(n, boundary="free")
    fid_free = reflection_fidelity(free, pulse)
    payload = {
        "images_rms_max": max(r[1] for r in rows),
        "wall_displacement_max": max(r[2] for r in rows),
        "fidelity_narrowband": fid_narrow,
        "fidelity_broadband": fid_broad,
        "fidelity_free_end": fid_free,
    }
    final = images_reference(wall, pulse, float(times[-1]))
    svg = emit_svg(
        [(list(range(n)), list(state0.positions), "incident"),
         (list(range(n)), list(final.positions), "reflected")],
        {"title": "hard-wall reflection", "xlabel": "site",
         "ylabel": "displacement"})
    return {"csv": {"oracle": (["time", "images_rms", "wall_displacement"],
                               rows)},
            "json": payload, "svg": {"oracle": svg}}


def _cmd_tune(p, config):
    spec = p["network"]
    if spec.cavity is None:
        raise ConfigError("'network.cavity' is required for tune")
    result = tune_cavity(spec, p["excitation"], p["t_final"],
                         omega_bounds=p["omega_bounds"],
                         mass_bounds=tuple(p["mass_bounds"]),
                         grid=p["grid"], max_evals=p["max_evals"],
                         metric=p["metric"])
    rows = [[i, vals[0], vals[1], value]
            for i, (vals, value) in enumerate(result.trace)]
    payload = {"params": result.params, "value": result.value,
               "evaluations": result.evaluations,
               "converged": result.converged}
    return {"csv": {"tune": (["eval", "cavity_omega", "cavity_mass",
                              "value"], rows)},
            "json": payload, "svg": {}}


def _cmd_enumerate(p, config):
    budget = tuple(p["edge_budget"]) if p["edge_budget"] is not None else None
    rankings = enumerate_topologies(
        p["n"], edge_budget=budget, k=p["k"],
        t_final=p["t_final"] if p["t_final"] is not None else None,
        grid=p["grid"], max_evals=p["max_evals"], top=p["top"])
    rows = [[i + 1, r.edge_string, r.target, r.excite, r.eta,
             r.cavity_spring, r.cavity_mass]
            for i, r in enumerate(rankings)]
    payload = {"count": len(rankings),
               "best": rows[0][1:] if rows else None}
    return {"csv": {"enumerate": (["rank", "edges", "target", "excite",
                                   "eta", "cavity_spring", "cavity_mass"],
                                  rows)},
            "json": payload, "svg": {}}


_HANDLERS = {
    "simulate": _cmd_simulate,
    "dispersion": _cmd_dispersion,
    "scattering": _cmd_scattering,
    "scan": _cmd_scan,
    "baseline": _cmd_baseline,
    "scaling": _cmd_scaling,
    "oracle-check": _cmd_oracle_check,
    "tune": _cmd_tune,
    "enumerate": _cmd_enumerate,
}

CSV_SCHEMAS = {
    "simulate": "simulate.csv: time,total,cavity_energy,site_0..site_{D-1}",
    "dispersion": "dispersion.csv: q,omega,group_velocity",
    "scattering": "scattering.csv: omega,re_r,im_r,re_s,im_s,flux_error",
    "scan": "scan.csv: omega,in_band,eta,t_peak,trap_duration",
    "baseline": ("baseline_wave.csv: time,sigma | "
                 "baseline_hopping.csv: time,sigma | "
                 "baseline_absorbed.csv: time,absorbed"),
    "scaling": ("scaling.csv: n,eta_tuned,eta_detuned,uniform_share,"
                "omega,cavity_mass,cavity_spring"),
    "oracle-check": "oracle.csv: time,images_rms,wall_displacement",
    "tune": "tune.csv: eval,cavity_omega,cavity_mass,value",
    "enumerate": ("enumerate.csv: rank,edges,target,excite,eta,"
                  "cavity_spring,cavity_mass"),
}


def execute(config: RunConfig, jobs: int = 1):
    """Run the configured command and write its artifact bundle.

    Returns (exit_code, artifact_paths).
    """
    if config.out_dir is None:
        raise ConfigError("output directory required ('out' in the config "
                          "or --out on the command line)")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    handler = _HANDLERS[config.command]
    t0 = time.perf_counter()
    if config.command == "scan":
        bundle = handler(config.params, config, jobs=jobs)
    else:
        bundle = handler(config.params, config)
    wall = time.perf_counter() - t0

    written = []
    if config.emit["csv"]:
        for name, (columns, rows) in bundle["csv"].items():
            path = out / f"{name}.csv"
            path.write_text(_csv_text(columns, rows))
            written.append(str(path))
    if config.emit["json"]:
        path = out / "summary.json"
        path.write_text(json.dumps(_summary(config, bundle["json"]),
                                   indent=2) + "\n")
        written.append(str(path))
    if config.emit["svg"]:
        for name, svg_text in bundle["svg"].items():
            path = out / f"{name}.svg"
            path.write_text(svg_text)
            written.append(str(path))
    # wall-clock stays out of the artifacts so reruns are byte-identical
    print(f"wall_clock_seconds={wall:.3f}", file=sys.stderr)
    print(json.dumps({"out": str(out), "artifacts":
                      sorted(Path(w).name for w in written)}))
    return EXIT_OK, written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wavetrap",
        description="wave-dynamics energy transport experiments")
    parser.add_argument("--config", help="path to a JSON config document")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="seed override (u64)")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker threads for scan grids")
    parser.add_argument("--schema", action="store_true",
                        help="print CSV column schemas and exit")
    args = parser.parse_args(argv)

    if args.schema:
        for command in COMMANDS:
            print(CSV_SCHEMAS[command])
        return EXIT_OK

    if not args.config:
        _error_json("config", "--config is required (or --schema)")
        return EXIT_CONFIG
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        _error_json("config", f"cannot read config: {exc}")
        return EXIT_CONFIG
    try:
        config = parse_config(text)
        if args.out:
            config.out_dir = args.out
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            config.seed = args.seed
        code, _ = execute(config, jobs=max(1, args.jobs))
        return code
    except (ConfigError, ValidationError, StabilityError) as exc:
        _error_json("config", str(exc))
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        _error_json("runtime", f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


def _error_json(kind: str, message: str):
    print(json.dumps({"error": {"kind": kind, "message": message}}),
          file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
