"""End-to-end acceptance checks, one PASS/FAIL line each.

Every test compares against an oracle that does not share the code path
under test: closed forms, scipy's DOP853, mpmath or brute-force enumeration.
"""

import csv
import itertools
import json
import math
import time

import mpmath
import numpy as np
import sympy

from conftest import random_series, report, rk_fundamental
from hillcert.bounds import error_bound, optimal_required_truncation, taylor_remainder
from hillcert.cli import main
from hillcert.floquet import Status, analyze_stability, floquet_multipliers, minimal_n_for_guarantee
from hillcert.fourier import fit_decay_envelope
from hillcert.hbm import linearized_series, solve_duffing_hbm
from hillcert.hill import assemble_full_subharmonic, assemble_subharmonic_pair, permutation_decouple
from hillcert.projection import (fundamental, q_blocks, subharmonic_fundamental,
                                 subharmonic_q_blocks)
from hillcert.series_oracle import (count_multiindices, iter_tuples, periodicity_check,
                                    series_fundamental, series_q_block, series_tail_bound,
                                    vandermonde_multisum, xi_factor)
from hillcert.systems import (DUFFING_CONFIGS, mathieu_series, optimal_envelope_factory,
                              scalar_exact, scalar_series)

STABLE = -0.35490
UNSTABLE = -0.35485
# errors below this are dominated by rounding in both the projection and the reference
STRICT_FLOOR = 1e-10


def _elapsed(start):
    return f"{time.perf_counter() - start:.1f} s"


def _match_distance(a, b):
    """Largest distance under the best pairing of two small multiplier lists."""
    return min(max(abs(x - y) for x, y in zip(a, perm)) for perm in itertools.permutations(b))


def _run_cli(tmp_path, command, toml, *flags, ext=".csv"):
    cfg = tmp_path / f"{command}.toml"
    cfg.write_text(toml)
    out = tmp_path / f"{command}{ext}"
    code = main([command, "--config", str(cfg), "--out", str(out), *flags])
    return code, out


def _read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_bound_soundness():
    start = time.perf_counter()
    duffing = linearized_series(solve_duffing_hbm(DUFFING_CONFIGS[1], 45), DUFFING_CONFIGS[1])
    mathieu = mathieu_series(1.0, 0.1, 2.0)
    scalar = scalar_series(0.01, 0.8)
    cases = [
        ("scalar", scalar, lambda t: np.array([[scalar_exact(0.01, 0.8, t)]]), 0.0, None),
        ("mathieu", mathieu, lambda t: rk_fundamental(mathieu, t, 1e-13), 1e-11, None),
        ("duffing1", duffing, lambda t: rk_fundamental(duffing, t, 1e-13), 1e-11,
         fit_decay_envelope(duffing)),
    ]
    rows = violations = strict_rows = strict_violations = 0
    worst = ""
    for name, s, ref_at, ref_tol, fixed_env in cases:
        T = s.period
        for t in (T / 4, T / 2, T):
            ref = ref_at(t)
            ref_err = ref_tol * max(1.0, np.linalg.norm(ref, 2))
            for form in ("direct", "subharmonic"):
                env_at = (optimal_envelope_factory(s, t, form == "subharmonic")
                          if fixed_env is None else (lambda N: fixed_env))
                for N in range(1, 61):
                    approx = fundamental(s, N, t, form)
                    err = np.linalg.norm(approx.value - ref, 2)
                    bound = error_bound(env_at(N), N, t, form).bound
                    rows += 1
                    if err > bound + approx.rounding + ref_err:
                        violations += 1
                        worst = f"{name} t={t:.3g} {form} N={N} err={err:.2e} bound={bound:.2e}"
                    if bound >= STRICT_FLOOR:
                        strict_rows += 1
                        strict_violations += err > bound
    ok = violations == 0 and strict_violations == 0
    detail = (f"{rows} rows, {violations} violations of bound + rounding + reference tol; "
              f"{strict_violations}/{strict_rows} violations of the bare bound where it is "
              f">= {STRICT_FLOOR:g}; {_elapsed(start)}")
    if worst:
        detail += f"; last: {worst}"
    assert report("1 bound soundness", ok, detail)


def test_scalar_quantitative():
    start = time.perf_counter()
    beta, gamma, t, E_des = 0.01, 0.8, 6.5, 1e-6
    N_star, *_ = optimal_required_truncation(beta, gamma, t, E_des, "direct")
    s = scalar_series(beta, gamma)
    exact = scalar_exact(beta, gamma, t)

    def n_num(form):
        for N in range(1, 80):
            if abs(fundamental(s, N, t, form).value[0, 0] - exact) < E_des:
                return N
        return None

    d, h = n_num("direct"), n_num("subharmonic")
    ratio = h / d if d and h else math.nan
    ok = 100 <= N_star <= 150 and d is not None and d <= 15 and 0.4 <= ratio <= 0.7
    assert report("2 scalar example", ok,
                  f"N*={N_star}, N_num direct={d}, subharmonic={h}, ratio={ratio:.2f}; "
                  f"{_elapsed(start)}")


def test_mathieu_certification():
    start = time.perf_counter()
    notes = []
    ok = True
    expected = {UNSTABLE: Status.GUARANTEED_UNSTABLE, STABLE: Status.GUARANTEED_STABLE}
    for delta, want in expected.items():
        s = mathieu_series(delta, 2.4, 2.0)
        env = optimal_envelope_factory(s, s.period)
        ref = floquet_multipliers(rk_fundamental(s, s.period, 1e-13))
        v = analyze_stability(s, env, 46, mathieu=True)
        dist = _match_distance(v.multipliers, ref)
        ref_stable = max(abs(z) for z in ref) <= 1 + 1e-6
        ok &= v.status is want and ref_stable == (want is Status.GUARANTEED_STABLE)
        ok &= dist <= 1e-10
        early = {analyze_stability(s, env, N, mathieu=True).status for N in range(1, 44)}
        ok &= early == {Status.UNDETERMINED}
        notes.append(f"delta={delta}: {v.status.value}, |mult - RK|={dist:.1e}, "
                     f"N<=43 {sorted(x.value for x in early)}")
        if delta == STABLE:
            N_min = minimal_n_for_guarantee(s, env, mathieu=True, N_min=44, N_max=48)
            ok &= N_min is not None and 44 <= N_min <= 48
            notes.append(f"minimal N={N_min}")
    assert report("3 Mathieu certification", ok, "; ".join(notes) + f"; {_elapsed(start)}")


def test_subharmonic_identities():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    t = 1.3
    exact_split = True
    alt_err = q0_err = 0.0
    for _ in range(10):
        s = random_series(rng, 2, 2, scale=0.4)
        for N in (1, 2, 3):
            H_tilde, _ = assemble_full_subharmonic(s, N)
            even, odd = permutation_decouple(H_tilde, 2, N)
            ops = assemble_subharmonic_pair(s, N)
            exact_split &= np.array_equal(even, ops.H) and np.array_equal(odd, ops.H_hat)
            blocks = subharmonic_q_blocks(s, N, t)
            alt = sum((-1) ** (jt % 2) * Q for jt, Q in zip(range(-2 * N, 2 * N + 1), blocks))
            alt_err = max(alt_err, np.abs(subharmonic_fundamental(s, N, t).value - alt).max())
            q0_err = max(q0_err, np.abs(blocks[2 * N] - q_blocks(s, N, t)[N]).max())
    ok = exact_split and alt_err <= 1e-11 and q0_err <= 1e-11
    assert report("4 subharmonic identities", ok,
                  f"exact block split={exact_split}, decoupled vs alternating sum {alt_err:.1e}, "
                  f"Q~0 vs Q0 {q0_err:.1e}; {_elapsed(start)}")


def test_series_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    m_max = 10
    ok = True
    worst_phi = worst_q = 0.0
    for _ in range(3):
        s = random_series(rng, 2, 1, scale=0.3)
        for t in (0.5, 1.0):
            tail = series_tail_bound(s, m_max, t)
            value, _ = series_fundamental(s, m_max, t)
            e = np.linalg.norm(value - rk_fundamental(s, t, 1e-13), 2)
            worst_phi = max(worst_phi, e / (tail + 1e-9))
            ok &= e <= tail + 1e-9
            for N in (1, 2, 3):
                Q = q_blocks(s, N, t)
                for i, j in enumerate(range(-N, N + 1)):
                    e = np.linalg.norm(series_q_block(s, N, j, m_max, t) - Q[i], 2)
                    worst_q = max(worst_q, e / (tail + 1e-9))
                    ok &= e <= tail + 1e-9
    assert report("5 series oracle equivalence", ok,
                  f"max error / (tail + 1e-9): Phi {worst_phi:.2e}, Q_j {worst_q:.2e}; "
                  f"{_elapsed(start)}")


def test_xi_properties():
    start = time.perf_counter()
    T = 2 * math.pi
    ts = np.linspace(0.0, 3 * T, 200)
    one = xi_factor([0], sympy.Integer(1), exact=True).derivative()
    recursion = bound_fail = period_fail = 0
    count = 0
    for m in (1, 2, 3):
        majorant = ts ** m / math.factorial(m)
        for p in iter_tuples(m, -2, 2):
            count += 1
            xi = xi_factor(p, sympy.Integer(1), exact=True)
            # d/dt xi_p = exp(i p_1 t) xi_{p_2..p_m}, with xi of the empty tuple equal to 1
            inner = xi_factor(p[1:], sympy.Integer(1), exact=True) if m > 1 else one
            if not xi.derivative() == inner.shift(p[0]):
                recursion += 1
            vals = np.abs(xi_factor(p, 1.0)(ts))
            bound_fail += int(np.any(vals > majorant * (1 + 1e-12) + 1e-13))
            period_fail += periodicity_check(p) != (xi.max_power == 0)
    ok = recursion == bound_fail == period_fail == 0
    assert report("6 xi properties", ok,
                  f"{count} tuples: recursion {recursion}, |t|^m/m! bound {bound_fail}, "
                  f"periodicity {period_fail} counterexamples; {_elapsed(start)}")


def _nested_multisum(M, n_vec):
    if not n_vec:
        return 1 if M == 0 else 0
    return sum(math.comb(a + n_vec[0], n_vec[0]) * _nested_multisum(M - a, n_vec[1:])
               for a in range(M + 1))


def _mp_tail(x, k, N):
    with mpmath.workdps(40):
        x = mpmath.mpf(x)
        total = mpmath.mpf(0)
        M = N + 1
        while True:
            term = mpmath.binomial(M + k, k) * x ** M
            total += term
            if term < total * mpmath.mpf(10) ** -35:
                return float(total)
            M += 1


def test_combinatorics_and_remainder():
    start = time.perf_counter()
    stars = sum(count_multiindices(m, M) != sum(1 for a in itertools.product(range(M + 1), repeat=m)
                                                if sum(a) == M)
                for m in range(1, 5) for M in range(9))
    # a trailing binomial(a + 0, 0) factor absorbs the remainder, so m entries need m+1 loops
    vander = sum(vandermonde_multisum(M, n) != _nested_multisum(M, list(n) + [0])
                 for m in range(1, 4) for n in itertools.product(range(3), repeat=m)
                 for M in range(6))
    worst = 0.0
    for x in (0.1, 0.3, 0.45):
        for k in range(5):
            for N in range(11):
                ref = _mp_tail(x, k, N)
                worst = max(worst, abs(taylor_remainder(x, k, N) - ref) / ref)
    ok = stars == 0 and vander == 0 and worst <= 1e-12
    assert report("7 combinatorics and Taylor remainder", ok,
                  f"stars-and-bars mismatches {stars}, Vandermonde mismatches {vander}, "
                  f"remainder max rel err {worst:.1e}; {_elapsed(start)}")


def test_duffing_workflow(tmp_path):
    start = time.perf_counter()
    table = {1: (5.00, 7.40), 2: (6.74, 1.12)}
    notes = []
    ok = True
    sol1 = solve_duffing_hbm(DUFFING_CONFIGS[1], 45)
    ok &= sol1.residual_norm < 1e-12
    notes.append(f"residual {sol1.residual_norm:.1e}")
    for cfg, (a_ref, b_ref) in table.items():
        p = DUFFING_CONFIGS[cfg]
        env = fit_decay_envelope(linearized_series(solve_duffing_hbm(p, 45), p))
        within = abs(env.a / a_ref - 1) <= 0.2 and abs(env.b / b_ref - 1) <= 0.2
        ok &= env.b > math.log(2) and within
        notes.append(f"config {cfg} a={env.a:.2f} b={env.b:.2f} "
                     f"(table {a_ref}, {b_ref}: {'within' if within else 'outside'} 20%)")

    code, out = _run_cli(tmp_path, "analyze", '[system]\nkind = "duffing"\nconfig = 1\n',
                         "--edes", "1e-8", ext=".json")
    rep = json.loads(out.read_text())
    mono = np.array([[complex(*z) for z in row] for row in rep["monodromy"]])
    s = linearized_series(sol1, DUFFING_CONFIGS[1])
    dev = np.abs(mono - rk_fundamental(s, s.period, 1e-13)).max()
    ok &= code == 0 and dev <= 1e-6
    notes.append(f"analyze N={rep['N']} monodromy vs RK {dev:.1e}")

    T = s.period
    times = [T * k / 8 for k in range(1, 9)]
    code, out = _run_cli(tmp_path, "validate",
                         '[system]\nkind = "duffing"\nconfig = 1\n'
                         f"[validate]\ntimes = {times}\nN_max = 10\nedes = 1e-8\n")
    summary = _read_csv(str(out).replace(".csv", "_summary.csv"))
    n_star = [int(r["N_star"]) for r in summary]
    n_num = [int(r["N_num"]) for r in summary]
    monotone = all(b >= a for a, b in zip(n_star, n_star[1:])) and n_star[-1] > n_star[0]
    plateau = min(n_num) > 0 and max(n_num) - min(n_num) <= 1
    ok &= code == 0 and monotone and plateau
    notes.append(f"N*={n_star} N_num={n_num}")
    assert report("8 Duffing workflow", ok, "; ".join(notes) + f"; {_elapsed(start)}")


def test_sweep_never_wrong(tmp_path):
    start = time.perf_counter()
    code, out = _run_cli(tmp_path, "sweep",
                         "[sweep]\ndelta = [-1.0, 8.0]\nepsilon = [0.0, 5.0]\n"
                         "resolution = [40, 25]\n", "--N", "45")
    rows = _read_csv(out)
    contradictions = guaranteed = 0
    for r in rows:
        if not r["verdict"].startswith("guaranteed"):
            continue
        guaranteed += 1
        s = mathieu_series(float(r["delta"]), float(r["epsilon"]), 2.0)
        ref_stable = max(abs(z) for z in floquet_multipliers(rk_fundamental(s, s.period, 1e-12))) \
            <= 1 + 1e-6
        contradictions += ref_stable != (r["verdict"] == "guaranteed-stable")
    ok = code == 0 and len(rows) == 1000 and contradictions == 0
    assert report("9 never-wrong certificates", ok,
                  f"{guaranteed}/{len(rows)} guaranteed verdicts, {contradictions} contradict RK; "
                  f"{_elapsed(start)}")
