"""Command line driver: ``glvortex <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys


def _points(text):
    """Parse 'x,y;x,y' into a list of (x, y)."""
    if not text:
        return []
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            x, y = chunk.split(",")
            out.append((float(x), float(y)))
    return out


def _ints(text):
    return [int(v) for v in text.split(",")] if text else []


def _emit(obj, out_dir, name):
    text = json.dumps(obj, indent=2, sort_keys=True, default=float)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text + "\n")
    print(text)


def _domain(args):
    from .grid import Domain
    d = {"shape": "disk", "radius": 1.0, "grid_n": 64}
    if args.config:
        with open(args.config) as fh:
            d.update(json.load(fh).get("domain", {}))
    if args.grid:
        d["grid_n"] = args.grid
    return Domain.from_dict(d)


# subcommands ---------------------------------------------------------------------------

def cmd_solve(args):
    import numpy as np
    from .elliptic import (deposit, solve_xi0, solve_green, solve_phi, solve_ustar,
                           uniform_disk_masses)
    from .fieldio import save_fields
    dom = _domain(args)
    if args.what == "xi0":
        s = solve_xi0(dom)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            save_fields(os.path.join(args.out, "xi0.glf"), dom, {"xi0": s.field})
        _emit(s.summary(), args.out, "xi0.json")
    elif args.what == "green":
        pole = _points(args.pole)[0] if args.pole else tuple(solve_xi0(dom).p)
        g = solve_green(dom, pole)
        info = {"pole": list(pole), "S_pp": g.S_pp, "residual": g.residual}
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            save_fields(os.path.join(args.out, "green.glf"), dom, {"R": g.R})
        _emit(info, args.out, "green.json")
    elif args.what == "phi":
        pts = _points(args.points)
        if not pts:
            raise SystemExit("solve phi needs --points")
        s = solve_phi(dom, pts)
        phi = s.field()
        info = {"points": pts, "min": float(np.nanmin(phi)), "max": float(np.nanmax(phi))}
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            save_fields(os.path.join(args.out, "phi.glf"), dom, {"phi": phi})
        _emit(info, args.out, "phi.json")
    else:
        from .grid import Domain
        sub = Domain.disk(args.K, args.grid or 32)
        pts = _points(args.points)
        if pts:
            masses = deposit(sub, pts, [1.0 / len(pts)] * len(pts))
        else:
            masses = uniform_disk_masses(sub, 1.0)
        s = solve_ustar(args.K, masses, domain=sub)
        _emit({"K": args.K, "laplacian_integral": s.laplacian_integral,
               "U_min": float(s.field.min())}, args.out, "ustar.json")
    return 0


def cmd_plant(args):
    from .grid import GLParams, full_energy
    from .minimizer import plant_configuration
    from .elliptic import meissner_potential
    from .fieldio import save_configuration
    dom = _domain(args)
    pts = _points(args.points)
    degs = _ints(args.degrees) or [1] * len(pts)
    params = GLParams(args.epsilon, args.h_ex)
    A = meissner_potential(dom, args.h_ex)[0] if args.meissner else None
    u, A = plant_configuration(dom, pts, degs, params, A=A)
    info = {"points": pts, "degrees": degs, "G": full_energy(u, A, dom, params)}
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        save_configuration(os.path.join(args.out, "config.glf"), dom, u, A,
                           {"epsilon": args.epsilon, "h_ex": args.h_ex})
    _emit(info, args.out, "plant.json")
    return 0


def _load_or_plant(args):
    from .grid import GLParams
    from .fieldio import load_configuration
    from .minimizer import plant_configuration
    if args.input:
        dom, u, A, meta = load_configuration(args.input)
        eps = args.epsilon if args.epsilon is not None else meta.get("epsilon", 0.05)
        hex_ = args.h_ex if args.h_ex is not None else meta.get("h_ex", 0.0)
        return dom, u, A, GLParams(eps, hex_)
    dom = _domain(args)
    params = GLParams(args.epsilon if args.epsilon is not None else 0.05,
                      args.h_ex if args.h_ex is not None else 0.0)
    pts = _points(args.points)
    u, A = plant_configuration(dom, pts, _ints(args.degrees) or [1] * len(pts), params)
    return dom, u, A, params


def cmd_minimize(args):
    from .minimizer import minimize_G
    from .fieldio import save_configuration
    dom, u, A, params = _load_or_plant(args)
    res = minimize_G(u, A, dom, params, mode=args.mode, method=args.method, tol=args.tol,
                     max_iter=args.max_iter, seed=args.seed)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        save_configuration(os.path.join(args.out, "minimized.glf"), dom, res.u, res.A,
                           {"epsilon": params.epsilon, "h_ex": params.h_ex})
    _emit(res.summary(), args.out, "minimize.json")
    return 0


def cmd_balls(args):
    from .vortex import initial_balls, grow_and_merge, ledger_to_csv
    dom, u, A, params = _load_or_plant(args)
    balls = initial_balls(u, dom, params, A)
    out = {"initial": balls.to_dict()}
    if args.target and balls.balls and args.target > balls.total_radius:
        grown, ledger = grow_and_merge(balls, args.target, u, A, dom, params)
        out["grown"] = grown.to_dict()
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            ledger_to_csv(ledger, os.path.join(args.out, "ledger.csv"))
    _emit(out, args.out, "balls.json")
    return 0


def cmd_norms(args):
    import numpy as np
    from .grid import covariant_gradient_sq
    from .lorentz import NORM_NAMES, norm_by_name
    if args.field == "inv_r":
        dom = _domain(args)
        X, Y = dom.XY
        c = _points(args.center)[0] if args.center else (0.0, 0.0)
        r = np.hypot(X - c[0], Y - c[1])
        mag = np.where(r > 0, 1.0 / np.maximum(r, 1e-300), 0.0)
        region = dom.node_mask & (r > 0)
    else:
        dom, u, A, _ = _load_or_plant(args)
        mag = np.sqrt(covariant_gradient_sq(u, A, dom))
        region = dom.node_mask
    names = [args.norm] if args.norm else [n.replace(",g)", ",-1)") for n in NORM_NAMES]
    out = {n: norm_by_name(n, mag, region, dom.h ** 2) for n in names}
    _emit(out, args.out, "norms.json")
    return 0


def cmd_renorm(args):
    import numpy as np
    from .elliptic import solve_xi0
    from .renormalized import (I_energy, DiscreteMeasure, R_energy, disk_cloud, w_energy,
                               minimize_points)
    Q = np.eye(2) if args.Q is None else np.array(_points(args.Q), float)
    pts = _points(args.points)
    if args.energy == "I":
        mu = DiscreteMeasure.empirical(pts) if pts else disk_cloud(args.cloud)
        e = I_energy(mu, Q if args.Q else None)
        _emit({"I": e.value, "eta": e.eta, "sensitivity": e.sensitivity}, args.out, "renorm.json")
        return 0
    if args.energy == "w":
        if pts:
            _emit({"w": w_energy(pts, Q)}, args.out, "renorm.json")
        else:
            cfg = minimize_points("w", args.n, Q=Q, restarts=args.restarts, seed=args.seed)
            _emit(cfg.to_dict(), args.out, "renorm.json")
        return 0
    dom = _domain(args)
    xi0 = solve_xi0(dom)
    if pts:
        _emit({"R": R_energy(pts, args.h_ex, xi0, dom)}, args.out, "renorm.json")
    else:
        cfg = minimize_points("R", args.n, h_ex=args.h_ex, xi0=xi0, domain=dom,
                              restarts=args.restarts, seed=args.seed)
        _emit(cfg.to_dict(), args.out, "renorm.json")
    return 0


def cmd_verify(args):
    from .verify import ConfigError, load_config, run, validate_config
    try:
        if args.config:
            cfg = load_config(args.config)
        else:
            cfg = validate_config({})
        if args.suite:
            cfg = validate_config({**{k: v for k, v in cfg.items() if k != "checks"},
                                   "suite": args.suite,
                                   "checks": [c for c in cfg["checks"]]})
        if args.grid:
            cfg["domain"] = {**cfg.get("domain", {}), "grid_n": args.grid}
        if args.seed is not None:
            cfg["seed"] = args.seed
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    rep = run(cfg, out_dir=args.out)
    for r in rep.rows:
        kind = "hard" if r["hard"] else "info"
        print(f"{r['status'].upper():<14} {kind:<4} {r['id']:<24} lhs={r['lhs']!r} rhs={r['rhs']!r}")
    return rep.exit_code


def cmd_sweep(args):
    from .minimizer import epsilon_sweep
    from .verify import default_sweep_plan
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        plan = cfg.get("sweep", cfg)
    else:
        plan = default_sweep_plan(args.seed or 0)
    log = None
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        log = os.path.join(args.out, "sweep.jsonl")
        if os.path.exists(log):
            os.remove(log)
    _, recs = epsilon_sweep(plan, log_path=log)
    cols = ["epsilon", "n", "h_ex", "grid_n", "zeros", "ratio", "band_ratio", "curl_error",
            "F_eps", "f_eps", "runtime", "error"]
    if args.out:
        import csv
        with open(os.path.join(args.out, "sweep.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in recs:
                w.writerow([r.get(c, "") for c in cols])
    for r in recs:
        print(json.dumps({c: r.get(c) for c in cols if c in r}, default=float))
    return 1 if all("error" in r for r in recs) and recs else 0


# parser --------------------------------------------------------------------------------

def build_parser():
    glob = argparse.ArgumentParser(add_help=False)
    glob.add_argument("--config", help="JSON config file")
    glob.add_argument("--grid", type=int, help="cells per unit length (overrides config)")
    glob.add_argument("--out", help="output directory")
    glob.add_argument("--seed", type=int, default=None)
    glob.add_argument("--threads", type=int, default=None, help="BLAS/OpenMP thread count")

    p = argparse.ArgumentParser(prog="glvortex", parents=[glob],
                                description="Ginzburg-Landau vortex experiments and checks.")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("solve", parents=[glob], help="elliptic solves")
    s.add_argument("what", choices=["xi0", "green", "phi", "ustar"])
    s.add_argument("--pole")
    s.add_argument("--points")
    s.add_argument("--K", type=float, default=4.0)
    s.set_defaults(func=cmd_solve)

    def config_args(q, eps_default=None, hex_default=None):
        q.add_argument("--input", help="field container to start from")
        q.add_argument("--points", help="planted vortices 'x,y;x,y'")
        q.add_argument("--degrees", help="comma separated degrees")
        q.add_argument("--epsilon", type=float, default=eps_default)
        q.add_argument("--h-ex", type=float, default=hex_default)

    s = sub.add_parser("plant", parents=[glob], help="plant vortices into a configuration")
    config_args(s, 0.05, 0.0)
    s.add_argument("--meissner", action="store_true", help="start A from the Meissner potential")
    s.set_defaults(func=cmd_plant)

    s = sub.add_parser("minimize", parents=[glob], help="minimize G_eps")
    config_args(s)
    s.add_argument("--mode", choices=["local", "global_restart"], default="local")
    s.add_argument("--method", choices=["lbfgs", "flow"], default="lbfgs")
    s.add_argument("--tol", type=float, default=1e-5)
    s.add_argument("--max-iter", type=int, default=4000)
    s.set_defaults(func=cmd_minimize)

    s = sub.add_parser("balls", parents=[glob], help="vortex ball construction")
    config_args(s)
    s.add_argument("--target", type=float, default=None, help="total radius to grow to")
    s.set_defaults(func=cmd_balls)

    s = sub.add_parser("norms", parents=[glob], help="Lorentz-type norms of a field")
    config_args(s)
    s.add_argument("--field", choices=["grad", "inv_r"], default="grad")
    s.add_argument("--center")
    s.add_argument("--norm", default=None)
    s.set_defaults(func=cmd_norms)

    s = sub.add_parser("renorm", parents=[glob], help="renormalized and Coulomb-gas energies")
    s.add_argument("energy", choices=["w", "R", "I"])
    s.add_argument("--points")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--Q", help="quadratic form rows 'a,b;c,d' (default identity)")
    s.add_argument("--h-ex", type=float, default=10.0)
    s.add_argument("--restarts", type=int, default=16)
    s.add_argument("--cloud", type=int, default=2000,
                   help="size of the uniform unit-disk cloud used by I when --points is absent")
    s.set_defaults(func=cmd_renorm)

    s = sub.add_parser("verify", parents=[glob], help="run the check harness")
    s.add_argument("--suite", choices=["identities", "desk"])
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", parents=[glob], help="epsilon sweep of planted minimizers")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    if args.seed is None and args.cmd not in ("verify",):
        args.seed = 0
    try:
        return int(args.func(args) or 0)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
