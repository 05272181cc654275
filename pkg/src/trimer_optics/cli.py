"""Command-line interface: ``trimer-optics <command> ...``.

Exit codes: 0 ok, 2 usage or parse error, 3 kinematic error, 4 geometry
error (closed slit), 5 solver failure.  All CSV output carries a header row
and 17 significant digits, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import kinematics as kin
from .beam import SourceModel, beam_kinematics
from .csvio import csv_text, fmt, read_peaks, write_csv
from .diffraction import convolve_with_beam, elastic_pattern, excitation_pattern, require_open
from .errors import GeometryError, KinematicError, ParseError, TrimerOpticsError
from .grating import geometric_transmission
from .pipeline import separable_interaction, solve_dimer, solve_trimer, yamaguchi_interaction
from .potentials import SurfaceInteraction, Yamaguchi
from .runconfig import RunConfig, load_run_config
from .spectro import assign_channels, fit_transition_energy
from .threebody import (MomentumMesh, efimov_diagnostics, efimov_ratio, shallow_ratio,
                        spectator_density)
from .twobody import scattering_length
from .units import K_B, MK, NM

EXIT_USAGE, EXIT_KINEMATIC, EXIT_GEOMETRY, EXIT_SOLVER = 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _load_config(args) -> RunConfig:
    if args.config is None:
        cfg = RunConfig()
    else:
        with open(args.config) as fh:
            cfg = load_run_config(fh.read())
    if args.threads is not None:
        if args.threads < 1:
            raise _UsageError("--threads must be >= 1")
        cfg.numerics.threads = args.threads
    return cfg


def _out_dir(args, cfg):
    out = args.out_dir or cfg.output_dir or "."
    os.makedirs(out, exist_ok=True)
    return out


def _parse_range(text, name):
    try:
        parts = [float(v) for v in text.split(":")]
    except ValueError:
        raise _UsageError(f"{name} must look like start:stop:step") from None
    if len(parts) != 3 or parts[2] == 0:
        raise _UsageError(f"{name} must look like start:stop:step with step != 0")
    start, stop, step = parts
    n = int(math.floor((stop - start) / step * (1 + 1e-12))) + 1
    if n < 1:
        raise _UsageError(f"{name} is empty")
    return [start + k * step for k in range(n)]


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _channels(cfg):
    return kin.InternalChannel.elastic(), kin.InternalChannel.excitation(cfg.delta_E)


def _surface(cfg):
    return cfg.surface if cfg.include_vdw else SurfaceInteraction(0.0, cfg.surface.l_min)


def cmd_kinematics(args):
    src = SourceModel(args.temperature, cluster_size=args.cluster_size)
    beam = beam_kinematics(src)
    phi_p = math.radians(args.phi_prime)
    d = args.period
    rows = []
    channels = [("elastic", beam.wavelength)]
    if args.delta_e > 0:
        ch = kin.InternalChannel.excitation(args.delta_e * MK)
        channels.append(("excitation", kin.final_wavelength(beam, ch)))
    for label, lam in channels:
        if args.order:
            orders = args.order
        else:
            allowed = kin.allowed_orders(phi_p, beam.wavelength, lam, d)
            orders = [n for n in range(-2, 3) if n in allowed]
        for n in orders:
            phi = kin.diffraction_angle(n, phi_p, beam.wavelength, lam, d)
            rows.append((n, label, phi, math.degrees(phi)))
    rows.sort(key=lambda r: (r[0], r[1]))
    sys.stdout.write(csv_text(("n", "channel", "phi_rad", "phi_deg"), rows))
    return 0


def _pattern_rows(cfg, phi_p):
    beam = beam_kinematics(cfg.source)
    el, ex = _channels(cfg)
    num = cfg.numerics
    surf = _surface(cfg)
    p_el = require_open(elastic_pattern(beam, cfg.geometry, surf, phi_p,
                                        n_points=num.n_points, phi_max=num.phi_max))
    p_ex = excitation_pattern(beam, cfg.geometry, surf, phi_p, ex, cfg.excitation,
                              n_points=num.n_points, phi_max=num.phi_max)
    rows = []
    for pat in (p_el, p_ex):
        for n, phi, inten in pat.rows():
            rows.append((pat.channel, n, math.degrees(phi), inten))
    return rows, (el, ex)


def cmd_pattern(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    for deg in args.phi_prime:
        phi_p = math.radians(deg)
        rows, channels = _pattern_rows(cfg, phi_p)
        path = os.path.join(out, f"pattern_phi{fmt(deg)}deg.csv")
        write_csv(path, ("channel", "n", "phi_deg", "intensity"), rows)
        print(path)
        if args.smear:
            num = cfg.numerics
            orders = range(-args.smear_orders, args.smear_orders + 1)
            angles = [r[2] for r in rows if abs(r[1]) <= args.smear_orders]
            # room for the resolution and the speed spread of the outermost order
            spread = max(abs(math.radians(a) - phi_p) for a in angles) / cfg.source.speed_ratio
            pad = 10 * num.sigma_res + 6 * spread + 10 * num.bin_width
            lo = math.radians(min(angles)) - pad
            hi = math.radians(max(angles)) + pad
            grid = np.arange(lo, hi, num.bin_width)
            spec = convolve_with_beam(cfg.source, cfg.geometry, _surface(cfg), phi_p, channels,
                                      num.sigma_res, grid, cfg.excitation, orders=orders,
                                      n_speeds=num.n_speeds, n_points=num.n_points)
            spath = os.path.join(out, f"pattern_phi{fmt(deg)}deg_smeared.csv")
            write_csv(spath, ("phi_deg", "intensity"),
                      zip(np.degrees(spec.phi).tolist(), spec.intensity.tolist()))
            print(spath)
    return 0


def cmd_scan(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    phis = _parse_range(args.phi_range, "--phi-range")
    beam = beam_kinematics(cfg.source)
    _, ex = _channels(cfg)
    num = cfg.numerics
    surf = _surface(cfg)
    want_el = args.channel in ("elastic", "both")
    want_ex = args.channel in ("excitation", "both")

    def one(deg):
        phi = math.radians(deg)
        row = [deg, geometric_transmission(cfg.geometry, phi)]
        if want_el:
            row.append(elastic_pattern(beam, cfg.geometry, surf, phi, n_points=num.n_points,
                                       phi_max=num.phi_max).total)
        if want_ex:
            row.append(excitation_pattern(beam, cfg.geometry, surf, phi, ex, cfg.excitation,
                                          n_points=num.n_points, phi_max=num.phi_max).total)
        return row

    rows = _map(one, phis, num.threads)
    header = ["phi_prime_deg", "geometric"] + (["elastic"] if want_el else []) \
        + (["excitation"] if want_ex else [])
    path = os.path.join(out, f"scan_T{fmt(cfg.source.T0)}K_{args.channel}.csv")
    write_csv(path, header, rows)
    print(path)
    return 0


def cmd_solve2b(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    if not getattr(cfg.potential, "local", False):
        raise _UsageError("solve2b needs a local potential (square_well or repulsion_dispersion)")
    states, grid = solve_dimer(cfg.potential, cfg.atom_mass, cfg.numerics)
    a = scattering_length(cfg.potential, cfg.atom_mass / 2, grid,
                          check_refinement=cfg.numerics.check_refinement)
    rows = [(k, st.energy / MK, st.nodes) for k, st in enumerate(states)]
    write_csv(os.path.join(out, "dimer_states.csv"), ("state", "energy_mK", "nodes"), rows)
    st = states[-1]
    stride = max(1, len(st.r) // 20000)
    write_csv(os.path.join(out, "dimer_wavefunction.csv"), ("r_m", "u"),
              zip(st.r[::stride].tolist(), st.u[::stride].tolist()))
    for k, e, n in rows:
        print(f"dimer state {k}: E = {fmt(e)} mK, nodes = {n}")
    print(f"scattering length a = {fmt(a / NM)} nm")
    return 0


def cmd_solve3b(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    spec, inter, _ = solve_trimer(cfg.potential, cfg.atom_mass, cfg.numerics,
                                  curve_points=args.curve)
    e_b = spec.dimer_energy
    rows = []
    for k, st in enumerate(spec.states):
        rel = None if e_b is None else (st.energy - e_b) / MK
        rows.append((k, st.energy / MK, rel, st.nodes))
        write_csv(os.path.join(out, f"spectator_{k}.csv"), ("q_per_m", "psi", "density"),
                  zip(st.q.tolist(), st.psi.tolist(), spectator_density(st).tolist()))
    write_csv(os.path.join(out, "trimer_states.csv"),
              ("state", "energy_mK", "energy_minus_dimer_mK", "nodes"), rows)
    if spec.curve:
        write_csv(os.path.join(out, "lambda_curve.csv"), ("energy_mK", "lambda_max"),
                  [(e / MK, lam) for e, lam in spec.curve])
    print(f"dimer: {'unbound' if e_b is None else fmt(e_b / MK) + ' mK'}")
    for k, e, rel, n in rows:
        tail = "" if rel is None else f" (E - E_dimer = {fmt(rel)} mK)"
        print(f"trimer state {k}: E = {fmt(e)} mK{tail}, nodes = {n}")
    return 0


def cmd_fit(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    with open(args.peaks) as fh:
        peaks = read_peaks(fh.read())
    beam = beam_kinematics(cfg.source)
    guess = cfg.delta_E if args.delta_e_guess is None else args.delta_e_guess * MK
    labeled = assign_channels(peaks, beam, cfg.geometry.d, guess)
    res = fit_transition_energy(labeled, beam, cfg.geometry.d)
    summary = [("delta_E_J", res.delta_E), ("delta_E_mK", res.delta_E / MK),
               ("std_error_J", res.std_error), ("std_error_mK", res.std_error / MK),
               ("chi2", res.chi2), ("dof", res.dof), ("iterations", res.iterations)]
    write_csv(os.path.join(out, "fit_result.csv"), ("quantity", "value"), summary)
    write_csv(os.path.join(out, "fit_labels.csv"),
              ("phi_prime_deg", "phi_deg", "n", "channel", "residual_rad"),
              [(math.degrees(p.obs.phi_prime), math.degrees(p.obs.phi), p.n, p.channel, p.residual)
               for p in labeled])
    used = sum(1 for p in labeled if p.channel == "excitation")
    print(f"dE = {fmt(res.delta_E / MK)} +- {fmt(res.std_error / MK)} mK "
          f"(= {fmt(res.delta_E / K_B)} K), chi2 = {fmt(res.chi2)}, dof = {res.dof}, "
          f"{used} excitation peaks of {len(labeled)}")
    return 0


def cmd_efimov(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    num = cfg.numerics
    scales = _parse_range(args.strength_scan, "--strength-scan")
    if isinstance(cfg.potential, Yamaguchi):
        form_factor = yamaguchi_interaction(cfg.potential, cfg.atom_mass).form_factor
    else:
        form_factor = separable_interaction(cfg.potential, cfg.atom_mass, num)[0].form_factor
    mesh = MomentumMesh.rational(num.efimov_n_q, num.efimov_q_bar, num.efimov_q_max, num.n_theta)
    window = (num.efimov_window_lo_mK * MK, num.efimov_window_hi_mK * MK)
    points = _map(lambda s: efimov_diagnostics(form_factor, cfg.atom_mass, [s], mesh, window)[0],
                  scales, num.threads)
    width = max((len(p.energies) for p in points), default=0)
    target = efimov_ratio()
    rows = []
    for p in points:
        ratio = shallow_ratio(p.energies)
        dev = None if ratio is None else ratio / target - 1
        es = [e / MK for e in p.energies] + [None] * (width - len(p.energies))
        e_b = None if p.dimer_energy is None else p.dimer_energy / MK
        rows.append([p.scale, p.scattering_length, e_b, len(p.energies), ratio, dev] + es)
    header = ["scale", "scattering_length_m", "dimer_energy_mK", "n_states", "shallow_ratio",
              "ratio_deviation"] + [f"E{k}_mK" for k in range(width)]
    path = os.path.join(out, "efimov_scan.csv")
    write_csv(path, header, rows)
    print(path)
    print(f"universal ratio exp(2 pi/s0) = {fmt(target)}")
    return 0


def build_parser():
    ap = _Parser(prog="trimer-optics",
                 description="Inelastic grating diffraction of weakly bound molecules.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("kinematics", help="diffraction angles; CSV n,channel,phi_rad,phi_deg")
    p.add_argument("--phi-prime", type=float, required=True, help="incidence angle, deg")
    p.add_argument("--order", type=int, action="append", help="order to report (repeatable)")
    p.add_argument("--delta-e", type=float, default=0.0, help="transition energy, mK")
    p.add_argument("--temperature", type=float, default=6.0, help="nozzle temperature, K")
    p.add_argument("--period", type=float, default=100e-9, help="grating period, m")
    p.add_argument("--cluster-size", type=int, default=3)
    p.set_defaults(func=cmd_kinematics)

    def common(p):
        p.add_argument("config", nargs="?", help="run configuration file")
        p.add_argument("--out-dir", help="output directory (default: config output_dir or .)")
        p.add_argument("--threads", type=int, help="worker threads for independent evaluations")

    p = sub.add_parser("pattern", help="per-order intensities; CSV channel,n,phi_deg,intensity")
    common(p)
    p.add_argument("--phi-prime", type=float, nargs="+", required=True, help="incidence, deg")
    p.add_argument("--smear", action="store_true",
                   help="also write a beam-averaged spectrum; CSV phi_deg,intensity")
    p.add_argument("--smear-orders", type=int, default=3, help="|n| cutoff when smearing")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("scan", help="total transmission vs incidence; CSV "
                                    "phi_prime_deg,geometric,elastic,excitation")
    common(p)
    p.add_argument("--phi-range", required=True, help="start:stop:step in deg")
    p.add_argument("--channel", choices=("elastic", "excitation", "both"), default="both")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("solve2b", help="dimer states; CSVs dimer_states, dimer_wavefunction (r_m,u)")
    common(p)
    p.set_defaults(func=cmd_solve2b)

    p = sub.add_parser("solve3b", help="trimer states; CSVs trimer_states, spectator_<k> "
                                       "(q_per_m,psi,density)")
    common(p)
    p.add_argument("--curve", type=int, default=0, help="sample lambda_max(E) at N energies")
    p.set_defaults(func=cmd_solve3b)

    p = sub.add_parser("fit", help="fit dE to a peak table "
                                   "(phi_prime_deg,phi_deg,sigma_phi_rad[,order_hint])")
    p.add_argument("peaks", help="peak CSV")
    common(p)
    p.add_argument("--delta-e-guess", type=float, help="assignment guess, mK (default: config)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("efimov", help="trimer spectrum along a strength scan; CSV efimov_scan")
    common(p)
    p.add_argument("--strength-scan", required=True,
                   help="start:stop:step in units of the critical strength")
    p.set_defaults(func=cmd_efimov)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KinematicError as exc:
        print(f"kinematic error: {exc}", file=sys.stderr)
        return EXIT_KINEMATIC
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except TrimerOpticsError as exc:  # solver failures and empty windows
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
