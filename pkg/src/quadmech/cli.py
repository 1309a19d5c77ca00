"""Deterministic command-line front end.

One subcommand per produced quantity; every run writes its CSV/JSON
outputs plus a manifest.json with per-file checksums.  All numerics are
seed-free, so identical configs give byte-identical data files.

Exit codes: 0 success, 2 config error, 3 numerical precondition
failure, 4 degenerate request.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__, dynamics, hilbert, model, observables
from .config import default_text, load_config
from .errors import (ConfigError, DegenerateProjectionError, QuadmechError)

ENV_OUT = "QUADMECH_OUT"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_DEGENERATE = 4

SUBCOMMANDS = ("squeezeparam", "spectrum", "floquet", "evolve", "lindblad",
               "condition", "dressed", "mandel")


# ---------------------------------------------------------------------------
# formatting helpers

def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x) + 0.0:.17g}"
    return str(x)


def csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _sha256(text):
    return hashlib.sha256(text.encode()).hexdigest()


def _pmap(fn, items, workers):
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _floats_of(text):
    out = []
    for line in text.splitlines()[1:]:
        for tok in line.split(","):
            try:
                out.append(float(tok))
            except ValueError:
                pass
    return np.asarray(out)


def _drift(files_a, files_b):
    """Max absolute difference of the numeric content of two output sets."""
    worst = 0.0
    for name, text in files_a.items():
        if name not in files_b or not name.endswith(".csv"):
            continue
        xa, xb = _floats_of(text), _floats_of(files_b[name])
        if xa.shape != xb.shape:
            return float("inf")
        if xa.size:
            worst = max(worst, float(np.max(np.abs(xa - xb))))
    return worst


# ---------------------------------------------------------------------------
# per-time observable rows shared by evolve / lindblad

def _mech_observables(rho_m):
    nvec = np.arange(rho_m.shape[0], dtype=float)
    pop = np.real(np.diag(rho_m))
    mean = float(pop @ nvec)
    second = float(pop @ nvec ** 2)
    q = observables.mandel_q(max(mean, 0.0), second)
    rep = observables.squeezing_report(rho_m)
    return mean, q, rep


def _wigner_file(rho_m, cfg):
    axis = np.linspace(-cfg.q_max, cfg.q_max, cfg.n_grid)
    field = observables.wigner(rho_m, axis, axis)
    rows = []
    for i, pv in enumerate(field.p_axis):
        for j, qv in enumerate(field.q_axis):
            rows.append((qv, pv, field.values[i, j]))
    return csv_text(("q", "p", "w"), rows), field.mass()


def _evolve_sample(task):
    t, cfg = task
    psi = dynamics.analytic_state(t, cfg.alpha, cfg.params, cfg.spec)
    psi = psi / np.linalg.norm(psi)
    rho_m = observables.reduced_mech_state(psi, cfg.spec)
    mean, q, rep = _mech_observables(rho_m)
    entropy = observables.entanglement_entropy(psi, cfg.spec)
    return psi, (t, mean, q, entropy, rep.v_min, rep.db)


# ---------------------------------------------------------------------------
# subcommands; each returns (files: {name: text}, extras: dict)

def cmd_squeezeparam(cfg, args):
    rows = [(n, model.squeeze_param_r(n, cfg.params.g, cfg.params.omega_m))
            for n in range(cfg.n_min, cfg.n_max + 1)]
    return {"squeezeparam.csv": csv_text(("n", "r"), rows)}, {}


def _g_values(cfg):
    return np.linspace(cfg.g_min, cfg.g_max, cfg.g_points)


def cmd_spectrum(cfg, args):
    rows, crossings = dynamics.spectrum_sweep(
        cfg.params, _g_values(cfg), cfg.k_max, cfg.sector_n_max)
    cross_rows = [(c.k1, c.n1, c.k2, c.n2, c.g_star, c.dn, c.parity_allowed)
                  for c in crossings]
    files = {
        "spectrum.csv": csv_text(("g", "k", "n", "energy"), rows),
        "crossings.csv": csv_text(
            ("k1", "n1", "k2", "n2", "g_star", "dn", "parity_allowed"),
            cross_rows),
    }
    return files, {"n_crossings": len(crossings)}


def _gap_worker(task):
    params, spec, crossing = task
    recs = dynamics.driven_gap_report(params, spec, [crossing])
    return recs[0]


def cmd_floquet(cfg, args):
    p = cfg.params
    gv = _g_values(cfg)
    rows = []
    for g in gv:
        _, folded = dynamics.rotating_quasienergies(replace(p, g=float(g)), cfg.spec)
        for idx, e in enumerate(np.sort(folded)):
            rows.append((float(g), idx, float(e)))
    crossings = dynamics.undriven_rotating_crossings(p, gv, cfg.k_max,
                                                     cfg.sector_n_max)
    recs = _pmap(_gap_worker, [(p, cfg.spec, c) for c in crossings],
                 args.workers)
    gap_rows = [(r.crossing.k1, r.crossing.n1, r.crossing.k2, r.crossing.n2,
                 r.crossing.g_star, r.crossing.dn, r.crossing.parity_allowed,
                 r.min_gap, r.g_at_min) for r in recs]
    # method cross-check on a capped space: the (a)/(b) identity is
    # basis-size independent, and the stroboscopic propagator is costly
    vspec = hilbert.HilbertSpec(min(cfg.spec.n_cav, 6), min(cfg.spec.n_mech, 12))
    dev = 0.0
    for g in (gv[0], gv[len(gv) // 2], gv[-1]):
        d, _ = dynamics.floquet_method_agreement(
            replace(p, g=float(g)), vspec, n_steps=300)
        dev = max(dev, d)
    if dev > 1e-6:
        raise QuadmechError(
            f"quasi-energy methods disagree by {dev:.3e} (tolerance 1e-6)")
    files = {
        "floquet.csv": csv_text(("g", "index", "quasienergy"), rows),
        "gaps.csv": csv_text(
            ("k1", "n1", "k2", "n2", "g_star", "dn", "parity_allowed",
             "min_gap", "g_at_min"), gap_rows),
    }
    extras = {"method_agreement": dev,
              "verification_space": [vspec.n_cav, vspec.n_mech],
              "n_crossings": len(crossings)}
    return files, extras


def cmd_evolve(cfg, args):
    times = cfg.grid.times
    samples = _pmap(_evolve_sample, [(float(t), cfg) for t in times],
                    args.workers)
    rows = [row for _, row in samples]
    header = ["t", "phonon", "mandel_q", "entropy", "v_min", "db"]
    extras = {}
    if args.oracle:
        H = model.build_H_Q(cfg.params, cfg.spec)
        psi0 = dynamics.analytic_state(0.0, cfg.alpha, cfg.params, cfg.spec)
        psi0 = psi0 / np.linalg.norm(psi0)
        traj = dynamics.evolve_closed_numeric(psi0, cfg.grid, H, cfg.spec)
        header.append("fidelity")
        for i, (psi, row) in enumerate(samples):
            ov = np.vdot(traj.states[i], psi)
            fid = abs(ov) ** 2 / (np.linalg.norm(traj.states[i]) ** 2)
            rows[i] = row + (float(fid),)
        extras["oracle_min_fidelity"] = min(r[-1] for r in rows)
    files = {"evolve.csv": csv_text(header, rows)}
    if cfg.wigner and cfg.wigner_times:
        masses = {}
        for i, t in enumerate(cfg.wigner_times):
            psi = dynamics.analytic_state(float(t), cfg.alpha, cfg.params, cfg.spec)
            psi = psi / np.linalg.norm(psi)
            rho_m = observables.reduced_mech_state(psi, cfg.spec)
            name = f"wigner_evolve_{i}.csv"
            files[name], masses[name] = _wigner_file(rho_m, cfg)
        extras["wigner_times"] = list(cfg.wigner_times)
        extras["wigner_mass"] = masses
    return files, extras


def cmd_lindblad(cfg, args):
    p = cfg.params
    cav = np.exp(-0.5 * abs(cfg.alpha) ** 2) * np.array(
        [cfg.alpha ** n / math.sqrt(math.factorial(n))
         for n in range(cfg.spec.n_cav)], dtype=complex)
    cav /= np.linalg.norm(cav)
    psi0 = np.kron(np.eye(cfg.spec.n_mech, 1, dtype=complex)[:, 0], cav)
    traj = dynamics.integrate_master(psi0, cfg.grid, p, cfg.spec, h=cfg.h)
    rows = []
    for t, rho in zip(traj.times, traj.states):
        rho_m = hilbert.partial_trace_cavity(rho, cfg.spec)
        tr = float(np.trace(rho).real)
        mean, q, rep = _mech_observables(rho_m / max(np.trace(rho_m).real, 1e-300))
        rows.append((float(t), mean, q, tr, rep.v_min, rep.db))
    worst_trace = max(abs(r[3] - 1.0) for r in rows)
    if worst_trace > 1e-7:
        raise QuadmechError(
            f"trace drifted by {worst_trace:.3e} (tolerance 1e-7); "
            f"reduce the step or the truncation")
    files = {"lindblad.csv": csv_text(
        ("t", "phonon", "mandel_q", "trace", "v_min", "db"), rows)}
    extras = {"integrator": traj.metadata}
    if cfg.wigner and cfg.wigner_times:
        masses = {}
        for i, t in enumerate(cfg.wigner_times):
            j = int(np.argmin(np.abs(traj.times - t)))
            rho_m = hilbert.partial_trace_cavity(traj.states[j], cfg.spec)
            name = f"wigner_lindblad_{i}.csv"
            files[name], masses[name] = _wigner_file(rho_m, cfg)
        extras["wigner_times"] = [float(traj.times[int(np.argmin(np.abs(traj.times - t)))])
                                  for t in cfg.wigner_times]
        extras["wigner_mass"] = masses
    return files, extras


def cmd_condition(cfg, args):
    p = cfg.params
    n = cfg.condition_n
    if cfg.condition_times is not None:
        times = list(cfg.condition_times)
    else:
        chi = math.sqrt(p.omega_m * (p.omega_m + 4.0 * p.g * n)) if n else p.omega_m
        times = [0.5 * math.pi / chi]
    records = []
    for t in times:
        psi = dynamics.analytic_state(float(t), cfg.alpha, p, cfg.spec)
        psi = psi / np.linalg.norm(psi)
        mech, prob = observables.condition_on_photon_number(psi, n, cfg.spec)
        rep = observables.squeezing_report(hilbert.density_matrix(mech))
        xi = dynamics.sector_phase(n, float(t), p).xi
        records.append({
            "t": float(t), "probability": float(prob),
            "xi_re": xi.real, "xi_im": xi.imag,
            "v_min": rep.v_min, "db": rep.db,
            "db_formula": observables.DB_PER_SQUEEZE * abs(xi),
        })
    psi0 = dynamics.analytic_state(times[0], cfg.alpha, p, cfg.spec)
    psi0 = psi0 / np.linalg.norm(psi0)
    prob_sum = float(np.sum(observables.photon_distribution(psi0, cfg.spec)))
    doc = {"n": n, "alpha": cfg.alpha, "records": records}
    files = {"condition.json": json.dumps(doc, indent=2, sort_keys=True) + "\n"}
    return files, {"photon_probability_sum": prob_sum,
                   "max_db_formula": dynamics.max_sector_squeeze(n, p)
                   * observables.DB_PER_SQUEEZE}


def cmd_dressed(cfg, args):
    p = cfg.params
    H = model.build_H_Q(p, cfg.spec)
    rows = []
    for n in range(min(cfg.sector_n_max, cfg.spec.n_cav - 1) + 1):
        for k in range(min(cfg.k_max, cfg.spec.n_mech - 1) + 1):
            psi = model.dressed_state(k, n, p, cfg.spec)
            e = model.eigenvalue(k, n, p)
            resid = np.linalg.norm(H @ psi - e * psi) / max(abs(e), 1e-300)
            mean, second = observables.phonon_moments_eigenstate(k, n, p)
            q = observables.mandel_q(mean, second)
            rows.append((k, n, model.squeeze_param_r(n, p.g, p.omega_m),
                         e, float(resid), mean, q))
    files = {"dressed.csv": csv_text(
        ("k", "n", "r", "energy", "residual", "phonon_mean", "mandel_q"), rows)}
    return files, {"max_residual": max(r[4] for r in rows)}


def cmd_mandel(cfg, args):
    p = cfg.params
    rows = []
    for k in range(cfg.k_max + 1):
        for n in range(cfg.n_min, cfg.n_max + 1):
            mean, second = observables.phonon_moments_eigenstate(k, n, p)
            rows.append((k, n, mean, observables.mandel_q(mean, second)))
    files = {"mandel.csv": csv_text(("k", "n", "phonon_mean", "mandel_q"), rows)}
    extras = {"poissonian_r": {str(k): observables.poissonian_r(k)
                               for k in range(1, cfg.k_max + 1)}}
    return files, extras


COMMANDS = {
    "squeezeparam": cmd_squeezeparam,
    "spectrum": cmd_spectrum,
    "floquet": cmd_floquet,
    "evolve": cmd_evolve,
    "lindblad": cmd_lindblad,
    "condition": cmd_condition,
    "dressed": cmd_dressed,
    "mandel": cmd_mandel,
}


# ---------------------------------------------------------------------------
# driver

def build_parser():
    ap = argparse.ArgumentParser(
        prog="quadmech",
        description="Deterministic simulations of a quadratically coupled "
                    "optomechanical system.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=False,
                    help="INI config file; omit for all defaults")
    ap.add_argument("--out", default=None,
                    help=f"output directory (overrides ${ENV_OUT} and config)")
    ap.add_argument("--oracle", action="store_true",
                    help="evolve: re-run numerically, append fidelity column")
    ap.add_argument("--nmech-scale", type=float, default=None,
                    help="re-run with the mechanical truncation scaled and "
                         "record the convergence drift in the manifest")
    ap.add_argument("--workers", type=int, default=1,
                    help="worker-pool size for sweeps (outputs independent)")
    ap.add_argument("--print-default-config", action="store_true",
                    help="write the fully commented default config to stdout "
                         "and exit")
    return ap


def _resolve_out_dir(cfg, args):
    if args.out is not None:
        return args.out
    env = os.environ.get(ENV_OUT)
    if env:
        return env
    return cfg.out_dir


def run(argv=None):
    args = build_parser().parse_args(argv)
    if args.print_default_config:
        sys.stdout.write(default_text())
        return EXIT_OK
    if args.nmech_scale is not None and args.nmech_scale <= 0:
        print("error: --nmech-scale must be positive", file=sys.stderr)
        return EXIT_CONFIG
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    t_begin = time.monotonic()
    try:
        if args.config is not None:
            cfg = load_config(path=args.config)
        else:
            cfg = load_config(text=default_text())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    cmd = COMMANDS[args.subcommand]
    try:
        files, extras = cmd(cfg, args)
        convergence = None
        if args.nmech_scale is not None:
            scaled_cfg = replace(cfg, spec=cfg.spec.scaled(args.nmech_scale))
            files2, _ = cmd(scaled_cfg, args)
            convergence = {"nmech_scale": args.nmech_scale,
                           "n_mech_scaled": scaled_cfg.spec.n_mech,
                           "drift": _drift(files, files2)}
    except DegenerateProjectionError as exc:
        print(f"degenerate request: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (QuadmechError, ValueError) as exc:
        print(f"numerical precondition failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    out_dir = _resolve_out_dir(cfg, args)
    os.makedirs(out_dir, exist_ok=True)
    checksums = {}
    for name, text in sorted(files.items()):
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text)
        checksums[name] = {"sha256": _sha256(text), "bytes": len(text)}
    manifest = {
        "tool": "quadmech",
        "version": __version__,
        "subcommand": args.subcommand,
        "config": cfg.raw,
        "flags": {"oracle": bool(args.oracle), "workers": args.workers},
        "outputs": checksums,
        "convergence": convergence,
        "extras": extras,
        "wall_clock_s": time.monotonic() - t_begin,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
