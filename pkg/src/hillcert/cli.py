"""Command-line front end.

    hillcert analyze|sweep|validate|xi|duffing --config run.toml [overrides]

Settings come from an optional TOML file; flags override it. Exit codes:
0 success, 1 usage error, 2 certificate not applicable, 3 numeric failure.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import bounds, floquet, hbm, systems
from .errors import (ConvergenceError, DomainError, HillCertError, InvalidEnvelopeError,
                     StiffnessError)
from .fourier import DecayEnvelope, fit_decay_envelope, load_series
from .projection import Formulation, fundamental, reference_fundamental
from .series_oracle import xi_factor

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CERT = 2
EXIT_NUMERIC = 3

FLOAT_FMT = "%.12e"
REFERENCE_TOL = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x):
    return FLOAT_FMT % x


def _cplx(z):
    return [float(z.real), float(z.imag)]


def _matrix_json(M):
    return [[_cplx(complex(v)) for v in row] for row in np.asarray(M)]


def build_parser():
    parser = _Parser(prog="hillcert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("analyze", "sweep", "validate", "xi", "duffing"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--N", type=int, dest="N", help="truncation order")
        p.add_argument("--edes", type=float, help="desired accuracy E_des")
        p.add_argument("--formulation", choices=["direct", "subharmonic"])
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--circle-samples", type=int, dest="circle_samples")
        p.add_argument("--axis-samples", type=int, dest="axis_samples")
        p.add_argument("--t", type=float, dest="t", help="evaluation time (default: one period)")
    return parser


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def merge(config, args):
    """Flatten the ``[run]`` table and apply flag overrides."""
    run = dict(config.get("run", {}))
    if args.N is not None:
        run["N"] = args.N
        run.pop("edes", None)
    if args.edes is not None:
        run["edes"] = args.edes
        if args.N is None:
            run.pop("N", None)
    for key in ("formulation", "out", "circle_samples", "axis_samples", "t"):
        val = getattr(args, key)
        if val is not None:
            run[key] = val
    run.setdefault("formulation", "subharmonic")
    run.setdefault("circle_samples", floquet.DEFAULT_CIRCLE_SAMPLES)
    run.setdefault("axis_samples", floquet.DEFAULT_AXIS_SAMPLES)
    try:
        run["formulation"] = Formulation(run["formulation"])
    except ValueError as exc:
        raise UsageError(f"unknown formulation {run['formulation']!r}") from exc
    if run["formulation"] is Formulation.REFERENCE:
        raise UsageError("formulation must be direct or subharmonic")
    return run


class System:
    """Resolved system: series, envelope source and optional exact solution."""

    def __init__(self, series, envelope, mathieu=False, exact=None, name=""):
        self.series = series
        self.envelope = envelope
        self.mathieu = mathieu
        self.exact = exact
        self.name = name

    def envelope_at(self, N):
        env = self.envelope
        return env(N) if callable(env) else env


def resolve_system(config, formulation, t=None):
    spec = dict(config.get("system", {}))
    kind = spec.get("kind")
    sub = formulation is Formulation.SUBHARMONIC
    if kind == "scalar":
        beta, gamma = float(spec.get("beta", 0.01)), float(spec.get("gamma", 0.8))
        omega = float(spec.get("omega", 1.0))
        series = systems.scalar_series(beta, gamma, omega)
        T = series.period if t is None else t
        system = System(series, systems.optimal_envelope_factory(series, T, sub),
                        exact=lambda tt: np.array([[systems.scalar_exact(beta, gamma, tt, omega)]]),
                        name="scalar")
    elif kind == "mathieu":
        series = systems.mathieu_series(float(spec.get("delta", 1.0)),
                                        float(spec.get("epsilon", 0.1)),
                                        float(spec.get("omega", 2.0)))
        T = series.period if t is None else t
        system = System(series, systems.optimal_envelope_factory(series, T, sub),
                        mathieu=True, name="mathieu")
    elif kind == "duffing":
        if "path" in spec:
            sol, params = hbm.load_solution(spec["path"])
        else:
            cfg = int(spec.get("config", 1))
            if cfg not in systems.DUFFING_CONFIGS:
                raise UsageError(f"unknown Duffing configuration {cfg}")
            params = systems.DUFFING_CONFIGS[cfg]
            sol = hbm.solve_duffing_hbm(params, int(spec.get("harmonics", hbm.DEFAULT_HARMONICS)))
        series = hbm.linearized_series(sol, params)
        system = System(series, fit_decay_envelope(series), name="duffing")
    elif kind == "file":
        if "path" not in spec:
            raise UsageError("system.kind = 'file' needs system.path")
        try:
            series = load_series(spec["path"])
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot load series {spec['path']}: {exc}") from exc
        T = series.period if t is None else t
        system = System(series, systems.default_envelope(series, T, sub), name="file")
    else:
        raise UsageError("system.kind must be one of scalar, mathieu, duffing, file")
    env_spec = config.get("envelope")
    if env_spec:
        system.envelope = DecayEnvelope(a=float(env_spec["a"]), b=float(env_spec["b"]))
    if "mathieu" in spec:
        system.mathieu = bool(spec["mathieu"])
    return system


def _check_valid(env):
    if env is None or not env.bound_valid:
        b = None if env is None else env.b
        raise InvalidEnvelopeError(
            f"error bound inapplicable: envelope has b = {b} <= ln 2 = {math.log(2):.6f}")


def choose_order(system, run, t):
    """Truncation order from ``run['N']`` or from ``run['edes']``."""
    has_N, has_E = "N" in run, "edes" in run
    if has_N == has_E:
        raise UsageError("provide exactly one of N and edes")
    formulation = run["formulation"]
    if has_N:
        N = int(run["N"])
        if N < (1 if formulation is Formulation.SUBHARMONIC else 0):
            raise UsageError(f"N = {N} is too small for the {formulation.value} formulation")
        return N, "given"
    E_des = float(run["edes"])
    if not E_des > 0:
        raise UsageError("edes must be positive")
    if callable(system.envelope):
        beta, gamma = systems.support_one_norms(system.series)
        N, *_ = bounds.optimal_required_truncation(beta, gamma, t, E_des, formulation)
    else:
        _check_valid(system.envelope)
        N = bounds.required_truncation(system.envelope, t, E_des, formulation)
        if formulation is Formulation.SUBHARMONIC:
            N = max(N, 1)
    return N, "edes"


def analyze_report(system, run):
    series = system.series
    T = series.period
    t = float(run.get("t", T))
    formulation = run["formulation"]
    N, source = choose_order(system, run, t)
    env = system.envelope_at(N)
    _check_valid(env)
    cert = bounds.error_bound(env, N, t, formulation)
    approx = fundamental(series, N, t, formulation)
    phi_t = approx.value
    verdict = floquet.analyze_stability(series, system.envelope, N, formulation,
                                        mathieu=system.mathieu,
                                        n_circle=int(run["circle_samples"]),
                                        n_axis=int(run["axis_samples"]))
    report = {
        "system": system.name,
        "formulation": formulation.value,
        "N": N,
        "N_source": source,
        "t": t,
        "period": T,
        "envelope": {"a": env.a, "b": env.b},
        "bound": cert.bound,
        "rounding": approx.rounding,
        "fundamental": _matrix_json(phi_t),
        "monodromy": _matrix_json(verdict.monodromy),
        "monodromy_bound": verdict.bound,
        "multipliers": [_cplx(z) for z in verdict.multipliers],
        "exponents": [_cplx(z) for z in verdict.exponents],
        "verdict": verdict.status.value,
        "numeric_stable": verdict.numeric_stable,
    }
    if "edes" in run:
        report["edes"] = float(run["edes"])
    return report


def _write_text(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_csv(header, rows, out):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    _write_text("\n".join(lines) + "\n", out)


def cmd_analyze(config, run):
    system = resolve_system(config, run["formulation"], run.get("t"))
    report = analyze_report(system, run)
    _write_text(json.dumps(report, indent=2) + "\n", run.get("out"))
    return EXIT_OK


def _threads():
    raw = os.environ.get("HILLCERT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError as exc:
            raise UsageError("HILLCERT_THREADS must be an integer") from exc
    return os.cpu_count() or 1


def sweep_point(delta, epsilon, omega, N, formulation, n_circle, n_axis):
    """Verdict row for one Mathieu grid point."""
    series = systems.mathieu_series(delta, epsilon, omega)
    env = systems.optimal_envelope_factory(series, series.period,
                                           formulation is Formulation.SUBHARMONIC)
    v = floquet.analyze_stability(series, env, N, formulation, mathieu=True,
                                  n_circle=n_circle, n_axis=n_axis)
    status = v.status
    if not status.guaranteed:
        status = floquet.Status.NUMERIC_STABLE if v.numeric_stable else floquet.Status.NUMERIC_UNSTABLE
    return delta, epsilon, v.max_modulus, status.value, v.bound


def sweep_rows(config, run):
    grid = config.get("sweep", {})
    d0, d1 = grid.get("delta", [-1.0, 8.0])
    e0, e1 = grid.get("epsilon", [0.0, 5.0])
    nd, ne = grid.get("resolution", [200, 125])
    omega = float(grid.get("omega", 2.0))
    vals = [d0, d1, e0, e1, omega]
    if not all(math.isfinite(float(v)) for v in vals) or int(nd) < 1 or int(ne) < 1:
        raise UsageError("sweep grid bounds must be finite and resolution positive")
    if "edes" in run and "N" not in run:
        raise UsageError("sweep needs a fixed N")
    N = int(run.get("N", 45))
    deltas = np.linspace(float(d0), float(d1), int(nd)) if int(nd) > 1 else np.array([float(d0)])
    epss = np.linspace(float(e0), float(e1), int(ne)) if int(ne) > 1 else np.array([float(e0)])
    points = [(float(d), float(e)) for d in deltas for e in epss]
    n_circle, n_axis = int(run["circle_samples"]), int(run["axis_samples"])

    def work(pt):
        return sweep_point(pt[0], pt[1], omega, N, run["formulation"], n_circle, n_axis)

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(work, points))


def cmd_sweep(config, run):
    rows = sweep_rows(config, run)
    _write_csv(["delta", "epsilon", "max_abs_multiplier", "verdict", "bound"], rows,
               run.get("out"))
    return EXIT_OK


def validate_rows(system, run, times, N_max, E_des):
    """Error, bound and rounding estimate for ``N = 1..N_max`` at every ``t``.

    Also returns ``(t, N_num, N*)`` per time, where ``N_num`` is the first
    order whose actual error is below ``E_des`` (``-1`` if none).
    """
    formulation = run["formulation"]
    series = system.series
    rows, summary = [], []
    for t in times:
        if system.exact is not None:
            ref = system.exact(t)
        else:
            ref = reference_fundamental(series, t, REFERENCE_TOL, REFERENCE_TOL).value
        N_num = None
        for N in range(1, N_max + 1):
            approx = fundamental(series, N, t, formulation)
            err = float(np.linalg.norm(approx.value - ref, 2))
            env = system.envelope_at(N)
            bound = bounds.error_bound(env, N, t, formulation).bound if env.bound_valid else math.inf
            rows.append((float(t), N, err, bound, approx.rounding))
            if N_num is None and err < E_des:
                N_num = N
        if callable(system.envelope):
            beta, gamma = systems.support_one_norms(series)
            N_star = bounds.optimal_required_truncation(beta, gamma, t, E_des, formulation)[0]
        else:
            _check_valid(system.envelope)
            N_star = bounds.required_truncation(system.envelope, t, E_des, formulation)
        summary.append((float(t), -1 if N_num is None else N_num, N_star))
    return rows, summary


def cmd_validate(config, run):
    val = config.get("validate", {})
    formulation = run["formulation"]
    system = resolve_system(config, formulation, run.get("t"))
    T = system.series.period
    times = [float(x) for x in val.get("times", [run.get("t", T)])]
    if any(t == 0 for t in times):
        raise UsageError("validation times must be nonzero")
    N_max = int(run.get("N", val.get("N_max", 30)))
    E_des = float(run.get("edes", val.get("edes", 1e-6)))
    rows, summary = validate_rows(system, run, times, N_max, E_des)
    out = run.get("out")
    _write_csv(["t", "N", "error", "bound", "rounding"], rows, out)
    lines = ["t,N_num,N_star"] + [f"{_fmt(t)},{nn},{ns}" for t, nn, ns in summary]
    if out:
        root, ext = os.path.splitext(out)
        _write_text("\n".join(lines) + "\n", f"{root}_summary{ext or '.csv'}")
    else:
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def xi_rows(p, omega, t0, t1, samples):
    xi = xi_factor(p, omega)
    ts = np.linspace(t0, t1, samples)
    vals = xi(ts)
    m = len(p)
    return [(float(t), float(v.real), float(v.imag), bounds.xi_polynomial_bound(m, t))
            for t, v in zip(ts, vals)]


def cmd_xi(config, run):
    spec = config.get("xi", {})
    if "p" not in spec:
        raise UsageError("xi.p (index tuple) is required")
    p = [int(x) for x in spec["p"]]
    if not p:
        raise UsageError("xi.p must be non-empty")
    omega = float(spec.get("omega", 1.0))
    t0, t1 = spec.get("t_range", [0.0, 3 * 2 * math.pi / omega])
    samples = int(spec.get("samples", 200))
    if samples < 2:
        raise UsageError("xi.samples must be >= 2")
    rows = xi_rows(p, omega, float(t0), float(t1), samples)
    _write_csv(["t", "re", "im", "bound"], rows, run.get("out"))
    return EXIT_OK


def cmd_duffing(config, run):
    spec = dict(config.get("system", {}))
    if all(k in spec for k in ("alpha", "beta", "delta", "F", "omega")):
        params = hbm.DuffingParams(**{k: float(spec[k]) for k in ("alpha", "beta", "delta", "F", "omega")})
    else:
        cfg = int(spec.get("config", 1))
        if cfg not in systems.DUFFING_CONFIGS:
            raise UsageError(f"unknown Duffing configuration {cfg}")
        params = systems.DUFFING_CONFIGS[cfg]
    N_h = int(spec.get("harmonics", hbm.DEFAULT_HARMONICS))
    sol = hbm.solve_duffing_hbm(params, N_h)
    series = hbm.linearized_series(sol, params)
    env = fit_decay_envelope(series)
    data = hbm.solution_to_json(sol, params)
    data["envelope"] = {"a": env.a, "b": env.b, "bound_valid": env.bound_valid}
    _write_text(json.dumps(data, indent=2) + "\n", run.get("out"))
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "xi": cmd_xi,
    "duffing": cmd_duffing,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        run = merge(config, args)
        return COMMANDS[args.command](config, run)
    except UsageError as exc:
        print(f"hillcert: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidEnvelopeError as exc:
        print(f"hillcert: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (StiffnessError, ConvergenceError, DomainError, np.linalg.LinAlgError) as exc:
        print(f"hillcert: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HillCertError as exc:
        print(f"hillcert: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
