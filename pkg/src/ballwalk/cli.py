"""Command-line front end.

Every subcommand reads an optional flat key=value config file (dotted
keys, '#' comments), applies command-line overrides, echoes the full
effective config into a versioned JSON run manifest, and writes CSV
artifacts with round-trippable 17-significant-digit floats.

Exit codes: 0 success, 1 verification failure, 2 usage error,
3 computation error.
"""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import brownian as br
from . import montecarlo as mc
from . import verify as vf
from .errors import BallWalkError
from .geometry import TWO_PI, FlatTorus, RevolutionTorus, make_manifold
from .kernels import WalkConfig
from .rng import substream
from .specfun import gamma_table
from .spectral import (
    assemble_operator,
    eigen_decompose,
    resolvent_gap_torus,
    weyl_count_torus,
    weyl_phase_volume,
)

MANIFEST_SCHEMA = 1


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# config handling

# key -> (parser, default); None default means required-if-used
_SCHEMA = {
    "manifold": (str, "flat_torus"),
    "d": (int, 1),
    "lengths": (lambda s: [float(v) for v in s.split(",")], None),
    "R": (float, 2.0),
    "r": (float, 1.0),
    "kernel": (str, "ball"),
    "h": (lambda s: [float(v) for v in s.split(",")], [0.1]),
    "seed": (int, 0),
    "resolution": (int, 512),
    "trials": (int, 100000),
    "partition_cells": (lambda s: [int(v) for v in s.split(",")], [8, 8]),
    "start_points": (lambda s: [float(v) for v in s.split(",")], [0.0]),
    "tau.min": (int, 1),
    "tau.max": (int, 64),
    "z.points": (lambda s: [complex(v) for v in s.split(",")],
                 [-1, -0.25, 0.5, 2.5, 0.5 + 2j]),
    "s.min": (float, 1e-6),
    "s.max": (float, 1e4),
    "s.points": (int, 41),
    "times": (lambda s: [float(v) for v in s.split(",")], [0.25, 0.5]),
    "eigen.count": (int, 32),
    "mixing.method": (str, "exact"),
    "mixing.nmax": (int, 40000),
    "mixing.stride": (int, 100),
    "mixing.checkpoints": (lambda s: [int(v) for v in s.split(",")], None),
    "excursion.delta": (float, 0.05),
    "excursion.eps": (lambda s: [float(v) for v in s.split(",")], None),
    "paths.steps": (int, 100),
    "paths.chains": (int, 4),
    "clt.t": (float, 1.0),
    "clt.j": (int, 1),
    "modulus.eps": (float, 0.5),
    "modulus.delta": (float, 0.02),
    "modulus.tmax": (float, 0.5),
    "sampler.mode": (str, "ode"),
    "sampler.steps": (int, 8),
}


def parse_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def build_config(raw: dict) -> dict:
    cfg = {}
    for key, val in raw.items():
        if key not in _SCHEMA:
            raise UsageError(f"unknown config key {key!r}")
        parser, _ = _SCHEMA[key]
        try:
            cfg[key] = parser(val) if isinstance(val, str) else val
        except (ValueError, TypeError) as exc:
            raise UsageError(f"bad value for {key!r}: {exc}") from exc
    for key, (_, default) in _SCHEMA.items():
        if default is not None:
            cfg.setdefault(key, default)
        else:
            cfg.setdefault(key, None)
    # drop unset optional keys so downstream code sees them as absent
    return {k: v for k, v in cfg.items() if v is not None}


def config_echo(cfg: dict) -> dict:
    def enc(v):
        if isinstance(v, complex):
            return repr(v)
        if isinstance(v, list):
            return [enc(u) for u in v]
        return v
    return {k: enc(v) for k, v in sorted(cfg.items()) if v is not None}


def config_hash(cfg: dict) -> str:
    blob = json.dumps(config_echo(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# artifact plumbing


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path: str, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if not isinstance(v, str) else v
                              for v in row) + "\n")


class Run:
    def __init__(self, name: str, cfg: dict, out_dir: str, workers: int):
        self.name = name
        self.cfg = cfg
        self.dir = out_dir
        self.t0 = time.time()
        self.artifacts = []
        self.extra = {"workers": workers}
        os.makedirs(out_dir, exist_ok=True)

    def csv(self, stem: str, header, rows):
        path = os.path.join(self.dir, f"{stem}.csv")
        write_csv(path, header, rows)
        self.artifacts.append(os.path.basename(path))
        return path

    def finish(self, checks=None) -> str:
        manifest = {
            "schema_version": MANIFEST_SCHEMA,
            "subcommand": self.name,
            "config": config_echo(self.cfg),
            "config_hash": config_hash(self.cfg),
            "seed": self.cfg.get("seed", 0),
            "wall_time_s": round(time.time() - self.t0, 3),
            "artifacts": self.artifacts,
        }
        manifest.update(self.extra)
        if checks is not None:
            manifest["checks"] = checks
        path = os.path.join(self.dir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _walk_config(cfg) -> WalkConfig:
    return WalkConfig(h=cfg["h"][0], seed=cfg["seed"], kind=cfg["kernel"],
                      sampler_mode=cfg["sampler.mode"],
                      sampler_steps=cfg["sampler.steps"])


def _start_point(m, cfg):
    x0 = np.asarray(cfg["start_points"], float)
    want = 3 if m.name == "sphere2" else m.dim
    if x0.shape[-1] != want:
        if m.name == "sphere2":
            return np.array([0.0, 0.0, 1.0])
        return np.zeros(want)
    return x0


# ---------------------------------------------------------------------------
# subcommands


def cmd_gamma(run):
    cfg = run.cfg
    s = np.logspace(np.log10(cfg["s.min"]), np.log10(cfg["s.max"]), cfg["s.points"])
    table = gamma_table(cfg["d"], s)
    run.csv("gamma", ["s", "value"], table)
    return 0


def cmd_geometry(run):
    cfg = run.cfg
    m = make_manifold(cfg)
    rows = []
    for h in cfg["h"]:
        x0 = _start_point(m, cfg)
        vol = float(np.atleast_1d(m.ball_volume(x0[None], h))[0])
        rows.append((h, vol, vol / (np.pi * h**2) - 1.0 if m.dim == 2 else 0.0))
    run.csv("ball_volume", ["h", "volume", "expansion_fit"], rows)
    spec = m.reference_spectrum(cfg["eigen.count"])
    run.csv("spectrum", ["k", "lambda", "multiplicity"],
            [(k, lam, mult) for k, (lam, mult) in enumerate(spec)])
    return 0


def cmd_spectrum(run):
    cfg = run.cfg
    m = make_manifold(cfg)
    rows = []
    for h in cfg["h"]:
        K = assemble_operator(m, h, cfg["kernel"], resolution=cfg["resolution"])
        rep = eigen_decompose(K)
        n = min(cfg["eigen.count"], len(rep.gap))
        for k in range(n):
            rows.append((k, rep.mu[k], rep.tau[k], rep.lam_ref[k], rep.gap[k]))
    run.csv("spectrum", ["k", "mu", "tau", "lambda_ref", "gap"], rows)
    run.extra["h_values"] = cfg["h"]
    return 0


def cmd_weyl(run):
    cfg = run.cfg
    m = make_manifold(cfg)
    if not isinstance(m, FlatTorus):
        raise UsageError("weyl counting is implemented on flat tori")
    h = cfg["h"][0]
    taus = np.arange(cfg["tau.min"], cfg["tau.max"] + 1)
    counts = np.array([weyl_count_torus(m, h, int(t)) for t in taus])
    pv = np.array([weyl_phase_volume(m, h, int(t)) for t in taus])
    C = float(np.max(np.abs(counts - pv) / (1.0 + taus) ** ((m.dim - 1) / 2.0)))
    bound = C * (1.0 + taus) ** ((m.dim - 1) / 2.0)
    run.csv("weyl", ["tau", "count", "phase_volume", "bound"],
            zip(taus, counts, pv, bound))
    run.extra["fitted_C"] = C
    return 0


def cmd_resolvent(run):
    cfg = run.cfg
    m = make_manifold(cfg)
    rows = [(z.real, z.imag, h, resolvent_gap_torus(m, h, z, eps=0.2))
            for z in cfg["z.points"] for h in cfg["h"]]
    run.csv("resolvent", ["z_re", "z_im", "h", "gap"], rows)
    return 0


def cmd_mixing(run):
    cfg = run.cfg
    m = make_manifold(cfg)
    wcfg = _walk_config(cfg)
    if cfg["mixing.method"] == "exact":
        curve = mc.tv_exact_curve(m, wcfg, _start_point(m, cfg),
                                  n_max=cfg["mixing.nmax"],
                                  stride=cfg["mixing.stride"])
        hw = np.zeros_like(curve.tv)
    elif cfg["mixing.method"] == "empirical":
        if not isinstance(m, RevolutionTorus):
            raise UsageError("empirical mixing cells implemented on the revolution torus")
        masses, classify = mc.revolution_cells(m, *cfg["partition_cells"])
        cps = cfg.get("mixing.checkpoints") or np.linspace(
            cfg["mixing.nmax"] // 10, cfg["mixing.nmax"], 10).astype(int)
        curve = mc.tv_empirical(m, wcfg, _start_point(m, cfg), cps,
                                cfg["trials"], masses, classify,
                                stream=substream(cfg["seed"], 801))
        hw = curve.half_width
    else:
        raise UsageError("mixing.method must be 'exact' or 'empirical'")
    run.csv("mixing", ["n", "tv", "halfwidth"], zip(curve.steps, curve.tv, hw))
    try:
        rep = mc.fit_mixing_rate(curve, 0.08 if curve.method == "empirical" else 1e-6, 0.6)
        run.extra["mixing_report"] = {
            "rate": rep.rate, "intercept": rep.intercept,
            "r_squared": rep.r_squared, "n_points": rep.n_points}
    except BallWalkError:
        run.extra["mixing_report"] = None
    return 0


def cmd_excursion(run):
    cfg = run.cfg
    m = make_manifold(cfg)
    wcfg = _walk_config(cfg)
    delta = cfg["excursion.delta"]
    eps = cfg.get("excursion.eps") or np.sqrt(
        0.5 * 10 ** np.linspace(0.0, 1.0, 8) * delta)
    rep = mc.excursion_probability(m, wcfg, _start_point(m, cfg),
                                   eps, delta, cfg["trials"],
                                   stream=substream(cfg["seed"], 1100))
    run.csv("excursion", ["eps", "prob", "upper95", "hits"],
            zip(rep.eps, rep.prob, rep.upper95, rep.hits))
    run.extra["n_steps"] = rep.n_steps
    return 0


def cmd_clt(run):
    cfg = run.cfg
    lam = float(cfg["clt.j"]) ** 2  # flat torus d=1 mode j
    rows = [(h, cfg["clt.t"], cfg["clt.j"], br.clt_error(h, cfg["clt.t"], lam, 1))
            for h in cfg["h"]]
    run.csv("clt", ["h", "t", "j", "error"], rows)
    return 0


def cmd_paths(run):
    cfg = run.cfg
    m = make_manifold(cfg)
    wcfg = _walk_config(cfg)
    n = cfg["paths.steps"]
    trace = mc.run_chain(m, wcfg, _start_point(m, cfg), n,
                         record_steps=range(n + 1), n_chains=cfg["paths.chains"])
    dim = trace.positions.shape[-1]
    rows = []
    for c in range(trace.positions.shape[1]):
        for i, k in enumerate(trace.steps):
            rows.append((c, int(k), *trace.positions[i, c]))
    run.csv("paths", ["chain", "step"] + [f"x{a}" for a in range(dim)], rows)
    run.extra["held_fraction"] = trace.held_fraction
    run.extra["dt"] = br.step_time(wcfg.h, m.dim)
    return 0


def cmd_fdd(run):
    cfg = run.cfg
    m = make_manifold(cfg)
    rep = br.fdd_compare(m, _walk_config(cfg), _start_point(m, cfg),
                         tuple(cfg["times"]), n_paths=cfg["trials"],
                         stream=substream(cfg["seed"], 1000))
    run.csv("fdd", ["cell", "count", "expected"],
            [(i, c, e) for i, (c, e) in enumerate(zip(rep.counts, rep.expected))])
    run.extra["chi_square"] = {"statistic": rep.statistic, "p_value": rep.p_value,
                               "dof": rep.dof, "times": list(rep.times)}
    return 0


def cmd_modulus(run):
    cfg = run.cfg
    m = make_manifold(cfg)
    rep = br.modulus_statistic(m, _walk_config(cfg), _start_point(m, cfg),
                               eps=cfg["modulus.eps"], delta=cfg["modulus.delta"],
                               t_max=cfg["modulus.tmax"],
                               n_paths=min(cfg["trials"], 20000),
                               stream=substream(cfg["seed"], 1200))
    run.csv("modulus", ["eps", "delta", "t_max", "prob", "n_paths"],
            [(rep.eps, rep.delta, rep.t_max, rep.prob, rep.n_paths)])
    return 0


def cmd_verify(run):
    results = vf.run_all(seed=run.cfg["seed"], report=print)
    checks = [{
        "number": r.number, "name": r.name,
        "verdict": "PASS" if r.passed else "FAIL",
        "measured": {k: (v if isinstance(v, (int, list, str)) else float(v))
                     for k, v in r.measured.items()},
        "tolerance": r.tolerance, "seconds": round(r.seconds, 2),
    } for r in results]
    run.csv("verify", ["number", "name", "verdict", "seconds"],
            [(r.number, r.name, "PASS" if r.passed else "FAIL", r.seconds)
             for r in results])
    run.extra["n_failed"] = sum(not r.passed for r in results)
    run.finish(checks=checks)
    return 0 if all(r.passed for r in results) else 1


_COMMANDS = {
    "gamma": cmd_gamma, "geometry": cmd_geometry, "spectrum": cmd_spectrum,
    "weyl": cmd_weyl, "resolvent": cmd_resolvent, "mixing": cmd_mixing,
    "excursion": cmd_excursion, "clt": cmd_clt, "paths": cmd_paths,
    "fdd": cmd_fdd, "modulus": cmd_modulus, "verify": cmd_verify,
}


def build_parser():
    p = argparse.ArgumentParser(prog="ballwalk",
                                description="Geodesic ball walk experiments")
    p.add_argument("subcommand", choices=sorted(_COMMANDS))
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--out", default=None,
                   help="output directory (default $BALLWALK_OUT or ./out)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1,
                   help="worker cap; results are identical for any N")
    p.add_argument("--manifold", default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--h", default=None, help="comma-separated radius list")
    p.add_argument("--kernel", default=None, choices=["ball", "metropolis"])
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = parse_config_file(args.config) if args.config else {}
        for item in args.set:
            if "=" not in item:
                raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
            key, _, val = item.partition("=")
            raw[key.strip()] = val.strip()
        for key in ("manifold", "d", "h", "kernel", "seed"):
            val = getattr(args, key)
            if val is not None:
                raw[key] = str(val)
        cfg = build_config(raw)
        out_dir = args.out or os.environ.get("BALLWALK_OUT", "out")
        run = Run(args.subcommand, cfg, out_dir, args.workers)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        status = _COMMANDS[args.subcommand](run)
        if args.subcommand != "verify":
            run.finish()
        return status
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except BallWalkError as exc:
        print(f"computation error [{args.subcommand}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
