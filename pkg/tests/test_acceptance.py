"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Physical constants are pinned at mu = lam = gamma = 1 throughout.
"""
import math
import time

import numpy as np
import pytest
from scipy.integrate import trapezoid

from nematicflow import MaxHalvingsExceeded, Physics, SlabConfig, advance_to, make_grid
from nematicflow import operators as ops
from nematicflow.cli import main
from nematicflow.diagnostics import (drift_envelope, drift_envelope_rate, energy_record, sup_grad,
                                     total_energy)
from nematicflow.mms import ManufacturedCase, MmsConfig, run_mms
from nematicflow.presets import random_smooth, taylor_green
from nematicflow.study import contraction_study
from nematicflow.weak_strong import ComparisonConfig, compare_runs

import oracles as orc
from conftest import SEEDS, random_director, random_scalar, random_velocity, record_acceptance

TWO_PI = 2 * math.pi
UNIT = Physics(mu=1.0, lam=1.0, gamma=1.0)


def box(n):
    return make_grid((n, n), (TWO_PI, TWO_PI))


def test_stress_identity_rate():
    start = time.perf_counter()
    diffs = []
    for n in (16, 32, 64):
        d = random_smooth(make_grid((n, n), (1.0, 1.0)), seed=0, max_mode=1).d
        a, b = ops.elastic_force_direct(d), ops.elastic_force_identity(d)
        diffs.append(max(float(np.max(np.abs(a.interior(k) - b.interior(k)))) for k in range(2)))
    factors = [diffs[0] / diffs[1], diffs[1] / diffs[2]]
    elapsed = time.perf_counter() - start
    ok = all(3.2 <= f <= 4.8 for f in factors) and elapsed < 10.0
    record_acceptance(1, "stress identity", ok,
                      f"sup differences {['%.3e' % v for v in diffs]}, factors "
                      f"{['%.3f' % f for f in factors]} (need 3.2..4.8), {elapsed:.1f} s")
    assert ok


@pytest.fixture(scope="module")
def energy_run():
    """taylor_green(0.1) with a tilted director, 64^2, skew advection on, renormalisation off."""
    physics = Physics(mu=1.0, lam=1.0, gamma=1.0, skew_advection=True)
    s0 = taylor_green(box(64), 0.1, tilt=0.1)
    records = [energy_record(s0, physics=physics)]
    grad_sq = [sup_grad(s0.d) ** 2]

    def on_step(prev, nxt, dt):
        records.append(energy_record(nxt, prev, dt, physics))
        grad_sq.append(sup_grad(nxt.d) ** 2)

    start = time.perf_counter()
    advance_to(s0, 0.5, SlabConfig(dt=1e-3, slab_T=1e-2), physics, renormalize=False, on_step=on_step)
    return records, grad_sq, time.perf_counter() - start


def test_energy_law(energy_run):
    records, _, elapsed = energy_run
    E0 = records[0].E
    E = np.array([r.E for r in records])
    res = np.array([r.residual for r in records[1:]])
    worst = float(res.max()) / E0
    monotone = bool(np.all(np.diff(E) <= res))
    ok = worst <= 1e-3 and monotone and len(records) == 501 and elapsed < 120.0
    record_acceptance(2, "energy law", ok,
                      f"max residual/E0 = {worst:.3e} (need <= 1e-3), monotone within residual = {monotone}, "
                      f"{len(records) - 1} steps, {elapsed:.1f} s")
    assert ok


def test_unit_norm_drift(energy_run):
    records, grad_sq, _ = energy_run
    t = np.array([r.t for r in records])
    drift = np.array([r.drift for r in records])
    rate = drift_envelope_rate(t, drift, grad_sq)
    env = drift_envelope(t, drift, grad_sq, rate)
    under = bool(np.all(drift <= env * (1.0 + 1e-12)))
    growth = math.exp(4.0 * float(trapezoid(grad_sq, t)))
    ok = drift[-1] <= 1e-4 and under and math.isfinite(rate)
    record_acceptance(3, "unit-norm drift", ok,
                      f"drift(T) = {drift[-1]:.3e} (need <= 1e-4), offset rate = {rate:.3e}, "
                      f"exp(4 int |grad d|^2) = {growth:.4g}, under envelope = {under}")
    assert ok


def test_picard_contraction():
    start = time.perf_counter()
    slabs = (0.1, 0.05, 0.025)
    rows = contraction_study(box(32), (0.01, 0.1), slabs, physics=UNIT)
    elapsed = time.perf_counter() - start
    ok = elapsed < 300.0
    parts = []
    for eps in (0.01, 0.1):
        ratios = [r.terminal_ratio for r in rows if r.eps == eps]
        ok &= ratios[-1] <= 0.5 and all(a >= b for a, b in zip(ratios, ratios[1:]))
        ok &= all(r.converged for r in rows if r.eps == eps)
        parts.append(f"eps={eps}: " + " -> ".join(f"{x:.2e}" for x in ratios))
    record_acceptance(4, "Picard contraction", ok,
                      "; ".join(parts) + f" (need last <= 0.5, non-increasing), {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_small_data_long_run():
    s0 = taylor_green(box(32), 0.01)
    E0 = total_energy(s0)
    start = time.perf_counter()
    failure = None
    try:
        s, reports = advance_to(s0, 10.0, SlabConfig(), UNIT)
    except MaxHalvingsExceeded as exc:
        failure = exc
    elapsed = time.perf_counter() - start
    if failure is None:
        ratio = total_energy(s) / E0
        halvings = sum(r.halvings for r in reports)
        ok = ratio <= 0.01 and s.t == pytest.approx(10.0) and elapsed < 600.0
        detail = f"E(10)/E(0) = {ratio:.3e} (need <= 1e-2), {halvings} halvings, no failures, {elapsed:.1f} s"
    else:
        ok, detail = False, f"MaxHalvingsExceeded: {failure}"
    record_acceptance(5, "small-data long run", ok, detail)
    assert ok


@pytest.mark.slow
def test_mms_order():
    start = time.perf_counter()
    table = run_mms(ManufacturedCase.named("time_dependent"), [16, 32, 64], MmsConfig(physics=UNIT))
    order_u, order_d = table.fitted_order()
    elapsed = time.perf_counter() - start
    ok = 1.8 <= order_u <= 2.2 and 1.8 <= order_d <= 2.2 and elapsed < 600.0
    errs = ", ".join(f"{r.err_u:.2e}/{r.err_d:.2e}" for r in table.rows)
    record_acceptance(6, "MMS convergence", ok,
                      f"fitted order u = {order_u:.3f}, d = {order_d:.3f} (need 1.8..2.2), "
                      f"errors u/d {errs}, {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_weak_strong_mechanism():
    start = time.perf_counter()
    cfg = ComparisonConfig(box(128), [box(32), box(64)], t_end=0.1, sample_dt=0.01,
                           preset="random_smooth", physics=UNIT)
    result = compare_runs(cfg)
    elapsed = time.perf_counter() - start
    factor = result.convergence_factors()[0]
    coarse, fine = result.levels
    ok = (factor <= 0.5 and all(math.isfinite(l.C_fit) and l.under_envelope for l in result.levels)
          and elapsed < 900.0)
    record_acceptance(7, "weak-strong mechanism", ok,
                      f"max R 32^2 = {coarse.max_R:.3e}, 64^2 = {fine.max_R:.3e}, factor = {factor:.3f} "
                      f"(need <= 0.5), C_fit = {coarse.C_fit:.3g}/{fine.C_fit:.3g}, "
                      f"under envelope = {coarse.under_envelope}/{fine.under_envelope}, {elapsed:.1f} s")
    assert ok


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b))) / max(float(np.max(np.abs(b))), 1e-300)


def test_operator_oracles():
    start = time.perf_counter()
    worst = 0.0
    checked = set()
    for mode in ("periodic", "wall"):
        g = make_grid((8, 8), (1.0, 1.3), mode)
        dims, h, per = tuple(g.dims), g.spacing, g.periodic
        for seed in SEEDS:
            rng = np.random.default_rng(seed)
            p, u, v = random_scalar(g, rng), random_velocity(g, rng), random_velocity(g, rng)
            d = random_director(g, rng)
            uu = [u.interior(a) for a in range(2)]
            vv = [v.interior(a) for a in range(2)]
            pairs = {
                "divergence": (ops.divergence(u).interior,
                               sum(orc.apply_dense(D, x, dims)
                                   for D, x in zip(orc.divergence_matrices(dims, h, per), uu))),
                "laplacian(scalar)": (ops.laplacian(p).interior,
                                      orc.apply_dense(orc.cell_laplacian_matrix(dims, h, per), p.interior, dims)),
                "laplacian(director)": (ops.laplacian(d).interior,
                                        np.stack([orc.cell_laplacian(d.interior[i], dims, h, per) for i in range(3)])),
                "advect(scalar)": (ops.advect(u, p).interior, orc.advect_cells(uu, p.interior, dims, h, per)),
                "advect(scalar, skew)": (ops.advect(u, p, True).interior,
                                         orc.advect_cells(uu, p.interior, dims, h, per, True)),
                "advect(director)": (ops.advect(u, d).interior,
                                     np.stack([orc.advect_cells(uu, d.interior[i], dims, h, per) for i in range(3)])),
                "advect(director, skew)": (ops.advect(u, d, True).interior,
                                           np.stack([orc.advect_cells(uu, d.interior[i], dims, h, per, True)
                                                     for i in range(3)])),
                "grad_tensor": (ops.grad_tensor(d).data, orc.grad_tensor(d.interior, dims, h, per)),
                "harmonic_residual": (ops.harmonic_residual(d), orc.harmonic_residual(d.interior, dims, h, per)),
                "director_rhs": (ops.director_rhs(u, d).interior, orc.director_rhs(uu, d.interior, dims, h, per)),
                "velocity_dirichlet": (ops.velocity_dirichlet(u), orc.velocity_dirichlet(uu, dims, h, per)),
                "director_dirichlet": (ops.director_dirichlet(d), orc.director_dirichlet(d.interior, dims, h, per)),
                "inner": (ops.inner(u, v), orc.inner(uu, vv, h)),
                "l2_norm": (ops.l2_norm(p), math.sqrt(orc.inner(p.interior, p.interior, h))),
            }
            Uc = ops.cell_velocity(u)
            adv, adv_skew = ops.advect(u, v), ops.advect(u, v, True)
            fd, fi = ops.elastic_force_direct(d), ops.elastic_force_identity(d)
            want_adv = orc.advect_faces(uu, vv, dims, h, per)
            want_skew = orc.advect_faces(uu, vv, dims, h, per, True)
            want_fd = orc.elastic_force_direct(d.interior, dims, h, per)
            want_fi = orc.elastic_force_identity(d.interior, dims, h, per)
            grad = ops.gradient(p)
            lap_u = ops.laplacian(u)
            for a in range(2):
                shape = u.interior(a).shape
                pairs[f"gradient[{a}]"] = (grad.interior(a), orc.apply_dense(
                    orc.gradient_matrix(dims, h, per, a), p.interior, shape))
                pairs[f"laplacian(velocity)[{a}]"] = (lap_u.interior(a), orc.apply_dense(
                    orc.face_laplacian_matrix(dims, h, per, a), u.interior(a), shape))
                pairs[f"cell_velocity[{a}]"] = (Uc[a], orc.apply_dense(
                    orc.cell_average_matrix(dims, per, a), u.interior(a), dims))
                for b in range(2):
                    pairs[f"face_velocity[{a},{b}]"] = (ops.face_velocity(u, a, b), orc.apply_dense(
                        orc.face_velocity_matrix(dims, per, a, b), u.interior(b), shape))
                pairs[f"advect(velocity)[{a}]"] = (adv.interior(a), want_adv[a])
                pairs[f"advect(velocity, skew)[{a}]"] = (adv_skew.interior(a), want_skew[a])
                pairs[f"elastic_force_direct[{a}]"] = (fd.interior(a), want_fd[a])
                pairs[f"elastic_force_identity[{a}]"] = (fi.interior(a), want_fi[a])
            for name, (got, want) in pairs.items():
                checked.add(name.split("[")[0])
                worst = max(worst, _rel(got, want))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-13 and elapsed < 5.0
    record_acceptance(8, "operator oracles", ok,
                      f"{len(checked)} operators x 10 seeds x 2 modes on 8^2, worst relative "
                      f"difference {worst:.2e} (need <= 1e-13), {elapsed:.2f} s")
    assert ok


def test_determinism(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('seed = 11\n[grid]\ndims = [16, 16]\n[initial]\npreset = "random_smooth"\neps = 0.2\n'
                   "[stepper]\nt_end = 0.05\n[output]\nvtk = true\n")
    codes = [main(["simulate", "--config", str(cfg), "--out", str(tmp_path / k), "--threads", "1"])
             for k in ("a", "b")]
    names = ("energy.csv", "picard.csv", "final_state.bin", "final_state.txt", "final_state.vtk")
    same = [(tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names]
    ok = codes == [0, 0] and all(same)
    record_acceptance(9, "determinism", ok,
                      f"exit codes {codes}, byte-identical: "
                      + ", ".join(f"{n}={s}" for n, s in zip(names, same)))
    assert ok
