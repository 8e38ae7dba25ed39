"""Command-line driver for reproducible experiments.

Subcommands: identities, energy, embed, variation, charges, evolve.  Outputs
are JSON records or CSV sweeps, each tagged with a schema string; runs are
reproducible from their flags and --seed (all reductions use a fixed order).
Exit codes: 0 success, 1 numerical failure, 2 usage/config error.

The environment variable ADSQL_THREADS caps the worker pool used for radius
sweeps (default 1: strictly serial).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .errors import AdsqlError, ConfigError
from .sphere import ScalarField, SphereGrid, integrate
from .reference import (
    graph_over_sphere,
    round_sphere_embedding,
    static_chart,
    surface_geometry,
    projection_residuals,
    conservation_residual,
)

SCHEMAS = {
    "identities": "adsql.identities/1",
    "energy": "adsql.energy-sweep/1",
    "embed": "adsql.embed/1",
    "variation": "adsql.variation/1",
    "charges": "adsql.charges/1",
    "charges-sweep": "adsql.charges-sweep/1",
    "evolve": "adsql.evolve/1",
}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ADSQL_THREADS", "1")))
    except ValueError:
        return 1


def _load_toml(path: str) -> dict:
    import tomli

    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML in {path}: {exc}") from exc


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(payload: dict, out: str | None):
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", out)


def _parse_radii(text: str) -> list:
    try:
        radii = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad radii list {text!r}") from exc
    if not radii:
        raise ConfigError("empty radii list")
    return radii


def identity_corpus(lmax: int):
    """The default embedding corpus for the identity suites.

    Quadrature is padded beyond the band limit (ntheta = lmax + 4,
    nphi = 2 lmax + 5) so composite-field truncation stays spectrally small.
    """
    grid = SphereGrid(lmax, lmax + 4, 2 * lmax + 5)
    ads = static_chart("ads")
    ds = static_chart("ds")
    x1, x2, x3 = grid.unit_cartesian()
    return grid, [
        ("ads_round_r2", round_sphere_embedding(grid, 2.0, ads), ads),
        ("ds_round_r0.5", round_sphere_embedding(grid, 0.5, ds), ds),
        ("ads_graph_eps0.05_l1", graph_over_sphere(grid, 2.0, 0.05 * x1, ads), ads),
        ("ads_graph_eps0.2_l1", graph_over_sphere(grid, 2.0, 0.2 * x2, ads), ads),
        ("ads_graph_eps0.2_l2", graph_over_sphere(grid, 2.0, 0.2 * x1 * x2, ads), ads),
        ("ds_graph_eps0.05_l2",
         graph_over_sphere(grid, 0.5, 0.05 * (x1 * x1 - x3 * x3), ds), ds),
    ]


def cmd_identities(args) -> int:
    lmax, tol = args.lmax, args.tol
    if args.config:
        cfg = _load_toml(args.config)
        lmax = int(cfg.get("lmax", lmax))
        tol = float(cfg.get("tol", tol))
    grid, corpus = identity_corpus(lmax)
    cases = []
    worst = 0.0
    for name, emb, chart in corpus:
        geom = surface_geometry(emb, chart)
        res = projection_residuals(geom)
        res["conservation"] = conservation_residual(geom)
        mx = max(res.values())
        worst = max(worst, mx)
        cases.append({"name": name, "residuals": res, "max_residual": mx})
    report = {
        "schema": SCHEMAS["identities"],
        "lmax": lmax,
        "ntheta": grid.ntheta,
        "nphi": grid.nphi,
        "threshold": tol,
        "cases": cases,
        "max_residual": worst,
        "pass": bool(worst < tol),
    }
    _emit_json(report, args.out)
    return 0 if worst < tol else 1


def cmd_energy(args) -> int:
    from .embedding import embed_round, optimize_observer
    from .energy import density_pair, quasilocal_energy
    from .surfaces import model_from_config

    grid = SphereGrid(args.lmax)
    chart = static_chart("ads")
    model = model_from_config(_load_toml(args.model), grid)
    if args.observer != "time":
        raise ConfigError("the energy sweep supports the time-axis observer only")
    radii = _parse_radii(args.radii)

    def row(r):
        try:
            data = model.surface_data(grid, r)
            sol = embed_round(grid, data.area_radius(), chart)
            e = quasilocal_energy(data, sol.embedding, chart)
            dens = density_pair(data, sol.embedding, chart)
            area = integrate(ScalarField.constant(grid, 1.0), data.sigma)
            rho_mean = integrate(dens.rho, data.sigma) / area
            _, e_opt = optimize_observer(data, sol, chart)
            return (r, e, rho_mean, e_opt, "ok")
        except AdsqlError as exc:
            return (r, np.nan, np.nan, np.nan, f"error:{type(exc).__name__}")

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(row, sorted(radii)))

    lines = [f"# schema: {SCHEMAS['energy']}", "r,E,rho_mean,E_optimized,status"]
    for r, e, rho, eo, status in rows:
        lines.append(f"{r:.17g},{e:.17g},{rho:.17g},{eo:.17g},{status}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if all(s == "ok" for *_, s in rows) else 1


def cmd_embed(args) -> int:
    from .embedding import embed_newton, embed_round, embedding_jacobian
    from .sphere import SurfaceMetric, SymTensorField

    grid = SphereGrid(args.lmax)
    chart = static_chart("ads")
    cfg = _load_toml(args.surface)
    kind = cfg.get("type")
    if kind == "round":
        radius = float(cfg.get("radius", 2.0))
        sol = embed_round(grid, radius, chart)
    elif kind == "perturbed_round":
        radius = float(cfg.get("radius", 2.0))
        amp = float(cfg.get("amplitude", 0.05))
        pattern = cfg.get("pattern", "x1x2")
        x1, x2, x3 = grid.unit_cartesian()
        shapes = {"x1": x1, "x2": x2, "x3": x3, "x1x2": x1 * x2, "x1x3": x1 * x3}
        if pattern not in shapes:
            raise ConfigError(f"unknown perturbation pattern {pattern!r}")
        rnd = SurfaceMetric.round_sphere(grid, radius)
        factor = 1.0 + (amp / radius**2) * shapes[pattern]
        sigma = SurfaceMetric(SymTensorField(grid, rnd.g.tt * factor, rnd.g.tp,
                                             rnd.g.pp * factor))
        guess = embed_round(grid, radius, chart).embedding
        sol = embed_newton(sigma, guess, chart, tol=args.tol)
    else:
        raise ConfigError(f"unknown surface type {kind!r}")

    jac = embedding_jacobian(sol.embedding, chart)
    sv = np.linalg.svd(jac, compute_uv=False)
    kernel_dim = int(np.sum(sv < 1e-6 * sv[0]))
    gap = float(sv[-7] / sv[-6]) if len(sv) >= 7 and sv[-6] > 0 else float("inf")
    report = {"schema": SCHEMAS["embed"], **sol.report(),
              "kernel": {"dimension": kernel_dim, "sv_gap": gap}}
    _emit_json(report, args.out)
    return 0 if sol.residual <= args.tol else 1


def cmd_variation(args) -> int:
    from .embedding import project_to_isometric
    from .energy import FirstVariationProbe, energy_report
    from .sphere import OneFormField
    from .surfaces import PhysicalSurfaceData, image_data

    grid = SphereGrid(args.lmax)
    chart = static_chart("ads")
    x1, x2, x3 = grid.unit_cartesian()
    X = graph_over_sphere(grid, args.radius, 0.2 * x1, chart)
    img = image_data(surface_geometry(X, chart))
    data = PhysicalSurfaceData(
        sigma=img.sigma,
        h_norm=ScalarField(grid, img.h_norm.values * (1.0 + 0.05 * x2)),
        alpha=img.alpha + OneFormField(grid, 0.03 * grid.dtheta(x3),
                                       0.03 * grid.dphi(x3)),
    )
    probe = FirstVariationProbe(data, X, chart)
    rng = np.random.default_rng(args.seed)
    cases = []
    worst = 0.0
    for _ in range(args.directions):
        dtau = grid.random_field(rng, lcap=5)
        dx = np.stack([grid.random_field(rng, lcap=5) for _ in range(3)], axis=-1)
        ptau, px = project_to_isometric(X, chart, dtau, dx)
        scale = max(np.max(np.abs(ptau)), np.max(np.abs(px)))
        ptau, px = ptau / scale, px / scale
        fd = probe.finite_difference(ptau, px)
        pair = probe.pairing(ptau, px)
        rel = abs(fd - pair) / max(abs(fd), abs(pair), 1e-12)
        worst = max(worst, rel)
        cases.append({"fd": fd, "pairing": pair, "rel_mismatch": rel})
    report = {
        "schema": SCHEMAS["variation"],
        "lmax": args.lmax,
        "seed": args.seed,
        "radius": args.radius,
        "base_state": energy_report(data, X, chart),
        "cases": cases,
        "worst_rel_mismatch": worst,
        "threshold": args.tol,
        "pass": bool(worst < args.tol),
    }
    _emit_json(report, args.out)
    return 0 if worst < args.tol else 1


def cmd_charges(args) -> int:
    from .charges import (
        evolve_charges,
        evolve_charges_rk4,
        hamiltonian_charges,
        hamiltonian_charge_sweep,
        quasilocal_limit,
        rest_mass,
        total_charges,
    )
    from .surfaces import extract_asymptotics, model_from_config

    grid = SphereGrid(args.lmax)
    model = model_from_config(_load_toml(args.model), grid)
    radii = _parse_radii(args.radii)

    asym = extract_asymptotics(model, radii, grid)
    totals = total_charges(asym)
    ham = hamiltonian_charges(model, radii, grid)
    delta = max(abs(totals.E - ham.E), float(np.max(np.abs(totals.P - ham.P))),
                float(np.max(np.abs(totals.C - ham.C))),
                float(np.max(np.abs(totals.J - ham.J))))
    rm = rest_mass(totals)
    report = {
        "schema": SCHEMAS["charges"],
        "model": model.describe(),
        "radii": radii,
        "charges": totals.to_json_dict(),
        "hamiltonian": ham.to_json_dict(),
        "hamiltonian_delta": delta,
        "rest_mass": rm.to_json_dict(),
        "evolved": None,
    }
    if args.quasilocal_limit:
        lim, spread = quasilocal_limit(model, (1.0, (0, 0, 0), (0, 0, 0), (0, 0, 0)),
                                       radii, grid)
        report["quasilocal_limit"] = {"observer": "time", "value": lim,
                                      "spread": spread}
    if args.evolve_t is not None:
        ct = evolve_charges(totals, args.evolve_t)
        crk = evolve_charges_rk4(totals, args.evolve_t)
        rk_delta = max(float(np.max(np.abs(ct.P - crk.P))),
                       float(np.max(np.abs(ct.C - crk.C))))
        report["evolved"] = {"t": args.evolve_t, "charges": ct.to_json_dict(),
                             "rk4_delta": rk_delta,
                             "rest_mass": rest_mass(ct).to_json_dict()}
    _emit_json(report, args.out)

    if args.sweep_out:
        sweep = hamiltonian_charge_sweep(model, radii, grid)
        lines = [f"# schema: {SCHEMAS['charges-sweep']}",
                 "r," + ",".join(sweep.keys())]
        for i, r in enumerate(radii):
            vals = ",".join(f"{sweep[k][i]:.17g}" for k in sweep)
            lines.append(f"{r:.17g},{vals}")
        _emit("\n".join(lines) + "\n", args.sweep_out)
    return 0


def _charge_set_from_args(args):
    from .charges import ChargeSet

    if args.charges:
        with open(args.charges) as fh:
            payload = json.load(fh)
        return ChargeSet.from_json_dict(payload.get("charges", payload))

    def vec(text):
        v = [float(t) for t in text.split(",")]
        if len(v) != 3:
            raise ConfigError("charge vectors need 3 components")
        return np.array(v)

    return ChargeSet(E=args.E, P=vec(args.P), C=vec(args.C), J=vec(args.J))


def cmd_evolve(args) -> int:
    from .charges import evolve_charges, evolve_charges_rk4, rest_mass

    c0 = _charge_set_from_args(args)
    ct = evolve_charges(c0, args.t)
    crk = evolve_charges_rk4(c0, args.t)
    rk_delta = max(float(np.max(np.abs(ct.P - crk.P))),
                   float(np.max(np.abs(ct.C - crk.C))))
    rm0, rmt = rest_mass(c0), rest_mass(ct)
    inv = {
        "E_delta": 0.0,
        "J_delta": 0.0,
        "p2c2_delta": float((ct.P @ ct.P + ct.C @ ct.C) - (c0.P @ c0.P + c0.C @ c0.C)),
        "pxc_delta": float(np.max(np.abs(np.cross(ct.P, ct.C) - np.cross(c0.P, c0.C)))),
        "rest_mass_delta": (abs(rmt.m - rm0.m)
                            if rm0.valid and rmt.valid else None),
    }
    report = {
        "schema": SCHEMAS["evolve"],
        "t": args.t,
        "input": c0.to_json_dict(),
        "closed_form": ct.to_json_dict(),
        "rk4_delta": rk_delta,
        "invariants": inv,
        "rest_mass": rmt.to_json_dict(),
    }
    _emit_json(report, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="adsql",
        description="Quasi-local energy and conserved charges with AdS/dS reference.")
    p.add_argument("--version", action="version", version=f"adsql {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lmax", type=int, default=16, help="band limit (default 16)")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized suites")

    q = sub.add_parser("identities", parents=[common],
                       help="run the reference-geometry identity suite")
    q.add_argument("--tol", type=float, default=1e-8)
    q.add_argument("--config", default=None, help="optional TOML overrides")
    q.set_defaults(func=cmd_identities)

    q = sub.add_parser("energy", parents=[common],
                       help="energy sweep over coordinate spheres (CSV)")
    q.add_argument("--model", required=True, help="model TOML file")
    q.add_argument("--radii", required=True, help="comma-separated radii")
    q.add_argument("--observer", default="time")
    q.set_defaults(func=cmd_energy)

    q = sub.add_parser("embed", parents=[common], help="isometric embedding solve")
    q.add_argument("--surface", required=True, help="surface TOML file")
    q.add_argument("--tol", type=float, default=1e-10)
    q.set_defaults(func=cmd_embed)

    q = sub.add_parser("variation", parents=[common],
                       help="first-variation residual vs finite differences")
    q.add_argument("--radius", type=float, default=2.0)
    q.add_argument("--directions", type=int, default=6)
    q.add_argument("--tol", type=float, default=1e-6)
    q.set_defaults(func=cmd_variation)

    q = sub.add_parser("charges", parents=[common],
                       help="total charges of an asymptotically AdS model")
    q.add_argument("--model", required=True, help="model TOML file")
    q.add_argument("--radii", default="20,40,80")
    q.add_argument("--evolve-t", type=float, default=None)
    q.add_argument("--quasilocal-limit", action="store_true")
    q.add_argument("--sweep-out", default=None, help="per-radius CSV output")
    q.set_defaults(func=cmd_charges)

    q = sub.add_parser("evolve", parents=[common], help="evolve a charge set")
    q.add_argument("--charges", default=None, help="ChargeSet JSON file")
    q.add_argument("--E", type=float, default=0.0)
    q.add_argument("--P", default="0,0,0")
    q.add_argument("--C", default="0,0,0")
    q.add_argument("--J", default="0,0,0")
    q.add_argument("--t", type=float, required=True)
    q.set_defaults(func=cmd_evolve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AdsqlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
