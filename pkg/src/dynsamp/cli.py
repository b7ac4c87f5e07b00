"""Command-line front end.

    dynsamp {simulate,analyze,recover,scenario,norms} --config cfg.json [--set k=v ...]

Exit codes: 0 success, 2 configuration error, 3 recoverability condition
fails, 4 numerical failure.
"""

import argparse
import copy
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import jsonschema
import numpy as np

from . import dynamics, measurement, recovery, scenarios
from .exceptions import ConfigError, NotAFrameError, NotStrongError, NumericalError
from .frames import VectorSystem, bessel_bound, frame_bounds_on, recoverability_system
from .hilbert import Subspace, spectral_radius

EXIT_OK, EXIT_CONFIG, EXIT_RECOVERABILITY, EXIT_NUMERICAL = 0, 2, 3, 4
SEED_ENV = "FR_SEED"

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "seed": {"type": "integer"},
        "system": {
            "type": "object",
            "required": ["dim"],
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "A": {"type": "object", "required": ["kind"],
                      "properties": {"kind": {"enum": ["diagonal", "dense", "random_contraction",
                                                       "zero", "identity"]}}},
                "W": {"type": "object", "required": ["basis"]},
                "w": {"type": "array"},
                "x0": {"type": "array"},
                "seed": {"type": "integer"},
            },
        },
        "sampling": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["orthonormal", "random", "vectors", "scaled_basis"]},
                "J": {"type": "integer", "minimum": 1},
                "vectors": {"type": "array"},
            },
        },
        "scenario": {"enum": ["adversarial", "unstable", "random"]},
        "params": {"type": "object"},
        "horizon": {"type": "integer", "minimum": 1},
        "data": {"type": "string"},
        "recovery": {
            "type": "object",
            "properties": {
                "method": {"enum": list(recovery.METHODS)},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "n_max": {"type": "integer", "minimum": 2},
                "h": {"type": "number", "exclusiveMinimum": 0},
                "scheme": {"enum": ["auto", "central", "three_point", "forward"]},
            },
        },
        "output": {
            "type": "object",
            "properties": {k: {"type": "string"} for k in ("trajectory", "data", "report")},
        },
    },
}


# --- JSON with 17 significant digits -----------------------------------------

def _fmt_float(x):
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps17(obj, indent=2, _level=0):
    """JSON text with every float written to 17 significant digits."""
    pad, inner_pad = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps17([float(obj.real), float(obj.imag)], indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps17(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner_pad}{json.dumps(str(k))}: {dumps17(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps17(v) for v in obj) + "]"
        items = [inner_pad + dumps17(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# --- configuration ------------------------------------------------------------

def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg, overrides):
    cfg = copy.deepcopy(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {p!r} is not an object")
        node[parts[-1]] = _parse_value(value)
    return cfg


def load_config(path, overrides=(), env=None):
    env = os.environ if env is None else env
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    cfg = apply_overrides(cfg, overrides)
    if env.get(SEED_ENV):
        try:
            cfg["seed"] = int(env[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from exc
    if "scenario" not in cfg and "system" not in cfg and "data" not in cfg:
        raise ConfigError("config needs one of 'system', 'scenario' or 'data'")
    if "data" in cfg and not os.path.exists(cfg["data"]):
        raise ConfigError(f"data file not found: {cfg['data']}")


def _seed(cfg):
    if "seed" in cfg:
        return int(cfg["seed"])
    return int(cfg.get("system", {}).get("seed", 0))


def sampling_from_dict(spec, dim, rng):
    kind = spec["kind"]
    if kind == "orthonormal":
        return VectorSystem.orthonormal_basis(dim)
    if kind == "scaled_basis":
        return VectorSystem(np.diag(1.0 / np.arange(1, dim + 1)).astype(complex))
    if kind == "random":
        J = int(spec.get("J", 2 * dim))
        return VectorSystem(rng.standard_normal((J, dim)) + 1j * rng.standard_normal((J, dim)))
    vecs = dynamics.complex_array(spec.get("vectors", []), "sampling.vectors")
    if vecs.ndim != 2 or vecs.shape[1] != dim:
        raise ConfigError(f"sampling.vectors must be a list of length-{dim} vectors")
    return VectorSystem(vecs)


class Experiment:
    """System, sampling family and bookkeeping resolved from a config."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.seed = _seed(cfg)
        self.info = {}
        self.truncations = None
        name = cfg.get("scenario")
        params = cfg.get("params", {})
        try:
            if name == "adversarial":
                inst = scenarios.build_adversarial(
                    int(params.get("N", 3)), params.get("lambdas"), complex(params.get("c", 1.0)),
                    params.get("d"))
                self.system, self.G = inst.system(), inst.G
                self.info = {"scenario": "adversarial", "N": inst.N, "d": inst.d}
            elif name == "unstable":
                d = int(params.get("d", 8))
                A, self.G, self.explicit_map = scenarios.build_unstable(d)
                # truncation of an l^2 family: frame status is judged as d grows
                self.truncations = lambda k: scenarios.build_unstable(k)[1]
                rng = np.random.default_rng(self.seed)
                self.system = dynamics.DiscreteSystem(
                    A, Subspace.full(d), rng.standard_normal(d) + 0j, rng.standard_normal(d) + 0j)
                self.info = {"scenario": "unstable", "d": d}
            elif name == "random":
                inst = scenarios.random_instance(
                    self.seed, int(params.get("dim", 16)), int(params.get("J", 32)),
                    float(params.get("rho", 0.5)), params.get("subspace_dim"))
                self.system, self.G = inst.system, inst.G
                self.info = {"scenario": "random", "frame_condition": inst.frame_condition}
            elif "system" in cfg:
                self.system = dynamics.system_from_dict(cfg["system"], seed=self.seed)
                rng = np.random.default_rng([self.seed, 1])
                self.G = sampling_from_dict(cfg.get("sampling", {"kind": "orthonormal"}),
                                            self.system.dim, rng)
            else:
                self.system, self.G = None, None
        except (ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, NumericalError):
                raise
            raise ConfigError(str(exc)) from exc
        default_N = 2 * (self.info.get("N", 0) + 1) if name == "adversarial" else 16
        self.horizon = int(cfg.get("horizon", default_N))

    def data(self, N=None):
        if "data" in self.cfg:
            return measurement.read_csv(self.cfg["data"])
        if self.system is None:
            raise ConfigError("no system to simulate")
        return dynamics.sample(dynamics.iterate(self.system, N or self.horizon), self.G)


def analyze(exp):
    sys_, G = exp.system, exp.G
    if sys_ is None:
        raise ConfigError("analyze needs a system or scenario")
    full = frame_bounds_on(G)
    on_W = frame_bounds_on(G, sys_.W)
    rho = spectral_radius(sys_.A)
    try:
        derived = frame_bounds_on(recoverability_system(sys_.A, G, sys_.W), sys_.W)
    except NumericalError:
        derived = None
    finite = full.is_frame
    trend = None
    if exp.truncations is not None:
        dims = [sys_.dim * 2**k for k in range(3)]
        lowers = [frame_bounds_on(exp.truncations(k)).lower for k in dims]
        trend = {"dims": dims, "lower": lowers}
        # a lower bound that keeps shrinking with d gives no frame in the limit
        finite = finite and lowers[-1] > 0.5 * lowers[0]
    derived_ok = derived is not None and derived.is_frame
    infinite = derived_ok and rho < 1
    if finite:
        verdict = "recoverable-finite"
    elif infinite:
        verdict = "recoverable-infinite"
    elif not derived_ok:
        verdict = "necessary-condition-fails"
    else:
        verdict = "inconclusive"
    return {
        **exp.info,
        "dim": sys_.dim,
        "J": len(G),
        "subspace_rank": sys_.W.rank,
        "spectral_radius": rho,
        "bessel_bound": bessel_bound(G),
        "frame_bounds_H": full.as_dict(),
        "frame_bounds_W": on_W.as_dict(),
        "derived_bounds_W": None if derived is None else derived.as_dict(),
        **({"lower_bound_trend": trend} if trend else {}),
        "recoverable_finite": finite,
        "recoverable_infinite": infinite,
        "necessary_condition": derived_ok,
        "verdict": verdict,
    }


def cmd_simulate(exp, args):
    states = dynamics.iterate(exp.system, exp.horizon)
    D = dynamics.sample(states, exp.G)
    out = exp.cfg.get("output", {})
    traj_path = out.get("trajectory", "trajectory.csv")
    data_path = out.get("data", "data.csv")
    dynamics.write_trajectory_csv(states, traj_path)
    measurement.write_csv(D, data_path)
    return {**exp.info, "rows": D.row_count, "cols": D.col_count, "trajectory": traj_path,
            "data": data_path, "norms": measurement.norms_report(D)}


def cmd_analyze(exp, args):
    return analyze(exp)


def _guard(exp, needed, force):
    report = analyze(exp)
    ok = report["recoverable_finite"] if needed == "finite" else report["recoverable_infinite"]
    if not ok and not force:
        if needed == "finite":
            msg = "recoverability condition fails: G is not a frame for the whole space"
        else:
            msg = "recoverability condition fails: {P_W (I - A^*)^{-1} g_j} is not a frame for W"
        raise NotAFrameError(msg, report["frame_bounds_H"]["lower"], report["frame_bounds_H"]["upper"])
    return report["verdict"]


def cmd_recover(exp, args):
    rcfg = exp.cfg.get("recovery", {})
    method = rcfg.get("method", "two_sample")
    sys_, G = exp.system, exp.G
    if sys_ is None:
        raise ConfigError("recover needs the dynamics: give 'system' or 'scenario'")
    truth = None if "data" in exp.cfg else sys_.w
    eps = float(rcfg.get("eps", measurement.DEFAULT_EPS))
    if method == "infinite_horizon":
        verdict = _guard(exp, "infinite", args.force)
        dual = recovery.infinite_horizon_dual(sys_.A, G, sys_.W)
        if "data" in exp.cfg:
            D = exp.data()
        else:
            D = measurement.DataMatrix.collect(dynamics.stream_samples(sys_, G),
                                               n_max=int(rcfg.get("n_max", 10_000)), eps=eps)
        rep = recovery.recover_infinite(D, dual, eps, w_true=truth, W=sys_.W)
        return {**exp.info, "verdict": verdict, **rep.to_dict()}
    verdict = _guard(exp, "finite", args.force)
    if method == "continuous":
        h = float(rcfg.get("h", 1e-3))
        t = np.array([-h, 0.0, h]) if rcfg.get("scheme", "auto") in ("auto", "central") \
            else np.array([0.0, h, 2 * h])
        states = [dynamics.continuous_state(sys_.A, sys_.x0, sys_.w, ti) for ti in t]
        rep = recovery.recover_continuous(t, G.analysis(np.array(states)), sys_.A, G, h=h,
                                          scheme=rcfg.get("scheme", "auto"), w_true=sys_.w)
        return {**exp.info, "verdict": verdict, **rep.to_dict()}
    D = exp.data(max(exp.horizon, 2))
    if method == "two_sample":
        rep = recovery.recover_two_sample(D.rows[0], D.rows[1], sys_.A, G, w_true=truth)
    elif method == "general_form":
        rep = recovery.recover_general_form(D, sys_.A, G, w_true=truth)
    else:
        reps = recovery.recover_time_varying(
            D, sys_.A, G, w_true=None if truth is None else [truth] * (D.row_count - 1))
        return {**exp.info, "verdict": verdict, "method": "time_varying",
                "reports": [r.to_dict() for r in reps]}
    return {**exp.info, "verdict": verdict, **rep.to_dict()}


def cmd_scenario(exp, args):
    name = exp.cfg.get("scenario")
    params = exp.cfg.get("params", {})
    if name == "adversarial":
        inst = scenarios.build_adversarial(int(params.get("N", 3)), params.get("lambdas"),
                                           complex(params.get("c", 1.0)), params.get("d"))
        return {"scenario": name, **scenarios.verify_impossibility(inst)}
    if name == "unstable":
        dims = params.get("dims", [exp.info["d"]])
        rows = []
        for d in dims:
            A, G, R = scenarios.build_unstable(int(d))
            rng = np.random.default_rng([exp.seed, int(d)])
            x0, w = rng.standard_normal(d) + 0j, rng.standard_normal(d) + 0j
            D = G.analysis(np.array([x0, A @ x0 + w]))
            rows.append({"d": int(d),
                         "residual": float(np.linalg.norm(R(D) - w)),
                         "stability_estimate": recovery.estimate_stability(R, (2, int(d)),
                                                                           seed=exp.seed),
                         "frame_lower_bound": frame_bounds_on(G).lower,
                         "bessel_bound": bessel_bound(G)})
        return {"scenario": name, "results": rows}
    if name == "random":
        return analyze(exp)
    raise ConfigError("scenario subcommand needs 'scenario' in the config")


def cmd_norms(exp, args):
    eps = float(exp.cfg.get("recovery", {}).get("eps", measurement.DEFAULT_EPS))
    return measurement.norms_report(exp.data(), eps)


COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "recover": cmd_recover,
    "scenario": cmd_scenario,
    "norms": cmd_norms,
}


def run_one(command, config_path, args, env=None):
    """Run a subcommand on one config; returns ``(exit_code, payload)``."""
    try:
        cfg = load_config(config_path, args.set, env)
        exp = Experiment(cfg)
        payload = COMMANDS[command](exp, args)
        out = cfg.get("output", {}).get("report")
        if out and command != "simulate":
            with open(out, "w") as fh:
                fh.write(dumps17(payload) + "\n")
        return EXIT_OK, payload
    except ConfigError as exc:
        return EXIT_CONFIG, {"error": "config", "message": str(exc)}
    except NotAFrameError as exc:
        return EXIT_RECOVERABILITY, {"error": "recoverability", "message": str(exc)}
    except (NumericalError, NotStrongError) as exc:
        return EXIT_NUMERICAL, {"error": "numerical", "message": str(exc)}


def _print_human(payload, stream):
    def walk(obj, prefix=""):
        if isinstance(obj, dict):
            for k, v in obj.items():
                walk(v, f"{prefix}{k}.")
        elif isinstance(obj, list) and obj and isinstance(obj[0], dict):
            for i, v in enumerate(obj):
                walk(v, f"{prefix}{i}.")
        elif isinstance(obj, list) and len(obj) > 6:
            print(f"{prefix[:-1]:<40} [{len(obj)} values]", file=stream)
        else:
            val = _fmt_float(obj) if isinstance(obj, float) else obj
            print(f"{prefix[:-1]:<40} {val}", file=stream)
    walk(payload)


def build_parser():
    p = argparse.ArgumentParser(prog="dynsamp", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", action="append", required=True, help="experiment config (JSON)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry by dotted path")
    p.add_argument("--json", action="store_true", help="emit JSON on stdout")
    p.add_argument("--force", action="store_true",
                   help="run recovery even when the recoverability verdict is negative")
    p.add_argument("--sweep", action="store_true",
                   help="run several --config files concurrently")
    p.add_argument("--workers", type=int, default=4)
    return p


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    if len(args.config) > 1 and not args.sweep:
        print(dumps17({"error": "config", "message": "several --config files need --sweep"}),
              file=stderr)
        return EXIT_CONFIG
    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        results = list(pool.map(lambda c: run_one(args.command, c, args), args.config))
    code = max(c for c, _ in results)
    for c, payload in results:
        if c != EXIT_OK:
            print(dumps17(payload), file=stderr)
    good = [p for c, p in results if c == EXIT_OK]
    if good:
        body = good if args.sweep else good[0]
        if args.json:
            print(dumps17(body), file=stdout)
        else:
            for p in good:
                _print_human(p, stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
