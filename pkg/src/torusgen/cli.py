"""Command-line entry point: ``torusgen <command> [options]``.

Every command validates the configuration first, writes its artifacts under
``--out`` together with ``manifest.json``, and prints the main JSON result to
stdout.  Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bifurcation import assess_admissibility, refine_root, scan_roots
from .errors import ConfigError, TorusgenError
from .model import (ALL_CLASSES, OrbitClass, SystemConfig, class_interval,
                    extremal_constants, lemma1_bounds, orbit_interval)
from .orbit import orbit_for, orientation, period_quadrature
from .perturbation import Perturbation, example_s6
from .surface import build_surface, enclosed_equilibria, surface_mesh
from .verify import run_example_s6, surface_residual

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


# ---------------------------------------------------------------------------
# deterministic JSON

def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        return "null"
    s = format(v, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent=2, _level=0):
    """JSON text with floats printed at 17 significant digits.

    Non-finite floats become ``null``; dict keys keep insertion order, so the
    output is byte-identical for identical inputs.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (bool, int, float, np.bool_, np.integer, np.floating)):
        return _num(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _strip_runtime(obj, sink, path=""):
    """Move wall-clock entries out of ``obj`` so outputs stay deterministic."""
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            if k == "runtime_s":
                sink[path or "/"] = v
            else:
                out[k] = _strip_runtime(v, sink, f"{path}/{k}")
        return out
    if isinstance(obj, list):
        return [_strip_runtime(v, sink, f"{path}/{i}") for i, v in enumerate(obj)]
    return obj


# ---------------------------------------------------------------------------
# manifest

class Run:
    """Output directory plus the manifest that every artifact references."""

    def __init__(self, args, cfg):
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        params = {k: v for k, v in sorted(vars(args).items())
                  if k not in ("out", "jobs", "func")}
        self.manifest = {
            "tool": "torusgen", "version": __version__, "command": args.command,
            "config_path": args.config, "config": cfg.to_dict(), "parameters": params,
        }
        self.hash = hashlib.sha256(dumps(self.manifest).encode()).hexdigest()
        self.outputs = {}
        self.timings = {}
        self.t0 = time.perf_counter()

    def path(self, name):
        return self.out / name

    def write_json(self, name, obj):
        obj = _strip_runtime(obj, self.timings.setdefault(name, {}))
        obj = {"manifest_hash": self.hash, **obj}
        text = dumps(obj) + "\n"
        self.path(name).write_text(text)
        self._record(name)
        return text

    def _record(self, name):
        self.outputs[name] = hashlib.sha256(self.path(name).read_bytes()).hexdigest()

    def record(self, *names):
        for n in names:
            self._record(n)

    def close(self, status="ok"):
        m = dict(self.manifest)
        m.update(hash=self.hash, output_dir=str(self.out), status=status, outputs=self.outputs,
                 timings={k: v for k, v in self.timings.items() if v},
                 wall_time_s=time.perf_counter() - self.t0,
                 timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
        self.path("manifest.json").write_text(dumps(m) + "\n")


# ---------------------------------------------------------------------------
# input helpers

def load_config(args) -> SystemConfig:
    """Config file (if any) with ``--gamma``/``--nu`` overrides applied.

    Without a file the rectangle defaults to ``SystemConfig.default``.
    """
    d = {}
    if args.config:
        try:
            d = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("gamma", "nu"):
        if getattr(args, key, None) is not None:
            d[key] = getattr(args, key)
    if "gamma" not in d:
        raise ConfigError("gamma is required (config file or --gamma)")
    if not args.config:
        return SystemConfig.default(**d)
    return SystemConfig.from_dict(d)


def load_perturbation(args, cfg) -> Perturbation:
    src = getattr(args, "perturbation", None)
    if src in (None, "example"):
        return example_s6(cfg.period_T)
    return Perturbation.load(src, period_T=cfg.period_T)


def _cls(args) -> OrbitClass:
    if args.cls is None:
        raise ConfigError("--class is required")
    return OrbitClass.from_label(args.cls)


def _signed(cls, v):
    return -abs(v) if cls.k < 0 else abs(v)


def _root(args, p, cls, cfg):
    """``b*`` from ``--bracket`` (bisected) or ``--b`` (taken as is)."""
    if args.bracket is not None:
        lo, hi = (_signed(cls, v) for v in args.bracket)
        return refine_root(p, cls, (lo, hi), cfg)
    if args.b is None:
        raise ConfigError("give --b or --bracket")
    return args.b


def _admissible(args, p, cls, cfg):
    res = assess_admissibility(p, cls, cfg, b_star=_root(args, p, cls, cfg))
    if not res.admissible:
        raise ConfigError(f"candidate is not admissible: {res.flags} {res.notes}")
    return res


# ---------------------------------------------------------------------------
# commands

def cmd_constants(args, cfg, run):
    ec = extremal_constants(cfg)
    bm, bp, bsm, bsp = lemma1_bounds(cfg.gamma)
    intervals = {}
    for cls in ALL_CLASSES:
        entry = {"orbit": list(orbit_interval(cls, cfg))}
        try:
            entry["admissible"] = list(class_interval(cls, cfg))
        except TorusgenError as exc:
            entry["admissible"] = None
            entry["note"] = str(exc)
        intervals[cls.label] = entry
    out = {"config": cfg.to_dict(), "M": cfg.M, "constants": ec.as_dict(),
           "class1_bounds": {"b_minus": bm, "b_plus": bp, "b_star_minus": bsm,
                             "b_star_plus": bsp},
           "intervals": intervals}
    if args.a:
        out["levels"] = [extremal_constants(cfg, a).as_dict() for a in args.a]
    return run.write_json("constants.json", out)


def cmd_orbit(args, cfg, run):
    cls = _cls(args)
    if args.b is None:
        raise ConfigError("--b is required")
    if not args.topological:
        lo, hi = class_interval(cls, cfg)
        if not lo < args.b < hi:
            raise ConfigError(f"b = {args.b} outside the admissible interval ({lo:.6g}, {hi:.6g})")
    orbit = orbit_for(cls, args.b, cfg)
    tq = period_quadrature(orbit.spec, cfg)
    orbit.write_csv(run.path("orbit.csv"))
    run.record("orbit.csv")
    hdr = orbit.header()
    hdr.update(period_ode=orbit.omega, period_quadrature=tq,
               period_rel_diff=abs(tq - orbit.omega) / orbit.omega,
               orientation=orientation(orbit))
    return run.write_json("orbit.json", hdr)


def cmd_scan(args, cfg, run):
    p = load_perturbation(args, cfg)
    if not args.step > 0:
        raise ConfigError("--step must be positive")
    classes = [_cls(args)] if args.cls else list(ALL_CLASSES)
    res = []
    for cls in classes:
        try:
            sc = scan_roots(p, cls, cfg, step=args.step, jobs=args.jobs)
        except TorusgenError as exc:
            if len(classes) == 1:
                raise
            res.append({"class": cls.label, "error": str(exc)})
            continue
        name = f"scan_{cls.label.replace('+', 'p').replace('-', 'm')}.csv"
        sc.write_csv(run.path(name))
        run.record(name)
        d = sc.to_dict()
        d.update(csv=name, n_points=int(sc.b.size), all_negative=bool(np.all(sc.values < 0)),
                 all_positive=bool(np.all(sc.values > 0)))
        res.append(d)
    return run.write_json("brackets.json", {"step": args.step, "classes": res})


def cmd_admissible(args, cfg, run):
    p = load_perturbation(args, cfg)
    cls = _cls(args)
    res = assess_admissibility(p, cls, cfg, b_star=_root(args, p, cls, cfg))
    out = res.to_dict()
    if res.avg is not None:
        out["diagnostics"] = res.avg.diagnostics()
    return run.write_json("admissible.json", out)


def cmd_surface(args, cfg, run):
    p = load_perturbation(args, cfg)
    cls = _cls(args)
    eps = args.eps[0] if args.eps else 1e-2
    if not 0 <= eps <= cfg.eps_max:
        raise ConfigError(f"eps = {eps} outside [0, eps_max = {cfg.eps_max}]")
    res = _admissible(args, p, cls, cfg)
    se = build_surface(res.avg, cfg, second_order=args.second_order)
    mesh = surface_mesh(se, nt=args.nt, nphi=args.nphi, eps=eps)
    mesh.write_csv(run.path("surface.csv"))
    run.record("surface.csv")
    enc = enclosed_equilibria(mesh.x[0], mesh.y[0])
    hdr = dict(mesh.header)
    hdr.update(nt=args.nt, nphi=args.nphi, csv="surface.csv",
               enclosed_equilibria=[list(e) for e in enc], admissibility=res.to_dict())
    return run.write_json("surface.json", hdr)


def cmd_verify(args, cfg, run):
    p = load_perturbation(args, cfg)
    cls = _cls(args)
    res = _admissible(args, p, cls, cfg)
    se = build_surface(res.avg, cfg)
    eps_list = args.eps or [1e-2, 5e-3, 2.5e-3]
    for e in eps_list:
        if not 0 < e <= cfg.eps_max:
            raise ConfigError(f"eps = {e} outside (0, eps_max = {cfg.eps_max}]")
    rep = surface_residual(cfg, p, se, eps_list, n_periods=args.periods, jobs=args.jobs)
    run.path("verify.txt").write_text(rep.table() + "\n")
    run.record("verify.txt")
    return run.write_json("verify.json", rep.to_dict())


def cmd_example_s6(args, cfg, run):
    rep = run_example_s6(cfg, step=args.step, jobs=args.jobs, verify=args.verify,
                         eps_list=args.eps or (1e-2, 5e-3, 2.5e-3), n_periods=args.periods)
    return run.write_json("example_s6.json", rep)


COMMANDS = {
    "constants": (cmd_constants, "extremal constants and class intervals"),
    "orbit": (cmd_orbit, "parametrize one generating orbit"),
    "scan": (cmd_scan, "scan the generating equation for sign changes"),
    "admissible": (cmd_admissible, "check the admissibility conditions for a root"),
    "surface": (cmd_surface, "tabulate the first-order invariant surface"),
    "verify": (cmd_verify, "residual scaling of the surface under the full flow"),
    "example-s6": (cmd_example_s6, "run the built-in nine-equilibria example end to end"),
}


def build_parser():
    ap = argparse.ArgumentParser(prog="torusgen", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"torusgen {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    labels = [c.label for c in ALL_CLASSES]
    for name, (fn, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--config", metavar="PATH", help="system config JSON")
        sp.add_argument("--gamma", type=float, help="override gamma from the config")
        sp.add_argument("--nu", type=int, choices=(0, 1), help="override nu from the config")
        sp.add_argument("--out", metavar="DIR", default="out", help="output directory")
        sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1, metavar="N")
        if name in ("orbit", "scan", "admissible", "surface", "verify"):
            sp.add_argument("--class", dest="cls", choices=labels)
        if name in ("orbit", "admissible", "surface", "verify"):
            sp.add_argument("--b", type=float, metavar="REAL")
        if name in ("admissible", "surface", "verify"):
            sp.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"),
                            help="bisect for the root inside |b| in (LO, HI)")
        if name in ("scan", "admissible", "surface", "verify"):
            sp.add_argument("--perturbation", metavar="PATH",
                            help="perturbation JSON ('example' or omitted: built-in)")
        if name in ("scan", "example-s6"):
            sp.add_argument("--step", type=float, default=1e-2, metavar="REAL")
        if name in ("surface", "verify", "example-s6"):
            sp.add_argument("--eps", type=float, action="append", metavar="REAL",
                            help="perturbation size (repeat for a list)")
        if name in ("verify", "example-s6"):
            sp.add_argument("--periods", type=int, default=10)
        if name == "constants":
            sp.add_argument("--a", type=float, action="append", metavar="REAL",
                            help="energy level (repeat for several)")
        if name == "orbit":
            sp.add_argument("--topological", action="store_true",
                            help="accept any b of the orbit class, not only the admissible range")
        if name == "surface":
            sp.add_argument("--nt", type=int, default=64)
            sp.add_argument("--nphi", type=int, default=256)
            sp.add_argument("--second-order", action="store_true",
                            help="add the computable part of the eps^2 term (experimental)")
        if name == "example-s6":
            sp.add_argument("--verify", action="store_true", help="also run residual checks")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    run = None
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be positive")
        if args.command == "example-s6" and args.config is None:
            # the example fixes its own system: gamma = 0.5 on |x|, |y| < 2
            cfg = SystemConfig(0.5 if args.gamma is None else args.gamma,
                               nu=args.nu or 0, Mx=2.0, My=2.0)
        else:
            cfg = load_config(args)
        run = Run(args, cfg)
        text = args.func(args, cfg, run)
        run.close()
        sys.stdout.write(text)
        return EXIT_OK
    except (ValueError, TorusgenError) as exc:
        code = EXIT_VALIDATION if isinstance(exc, ValueError) else EXIT_NUMERICAL
        if run is not None:
            run.close(status=f"error: {exc}")
        print(f"torusgen: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
