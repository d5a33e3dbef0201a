"""Acceptance suite: the package's exit criteria, runnable as a library call
(`run_acceptance`), through the CLI (`gipsp selftest`), or via the pytest
module that wraps each criterion.

Every criterion states its tolerance explicitly and reports the measured
value; nothing is calibrated at run time.  Desk scale: 1-D grids use n=128,
2-D grids n=32 per axis (the 2-D quasi-distributions then carry at least 32
points per phase-space axis), total runtime a few minutes on a laptop.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .dynamics import (EvolutionSpec, husimi_gauge_rhs, liouville_propagate,
                       liouville_rhs, moyal_gauge_rhs, schrodinger_propagate)
from .em_fields import GaugeField, GaugeFn, Poly
from .husimi import (SmoothingSpec, husimi_from_wigner, husimi_gauge,
                     husimi_gauge_poincare, husimi_overlap,
                     quantizer_reconstruct_direct, wigner_from_husimi)
from .lattice import TWO_PI, Constants, PhaseGrid, QGrid
from .phase_space import (gaussian_phase_function, inverse_wigner,
                          inverse_wigner_gauge, wigner, wigner_gauge_poincare,
                          wigner_gauge_stratonovich)
from .states import DensityMatrix, coherent_state, density_from_pure, gauge_rotate, mix


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict = dataclass_field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = max(
            (v / t for v, t, kind in self.metrics.values() if kind == "max"),
            default=0.0,
        )
        return (f"[{status}] criterion {self.number}: {self.title} "
                f"({len(self.metrics)} checks, worst ratio {worst:.2e}, "
                f"{self.seconds:.1f}s)")


class _Criterion:
    def __init__(self, number, title):
        self.result = CriterionResult(number, title, True)

    def check_max(self, name, value, tol):
        """value must be <= tol."""
        ok = bool(value <= tol)
        self.result.metrics[name] = (float(value), float(tol), "max")
        self.result.passed &= ok

    def check_min(self, name, value, floor):
        """value must be >= floor."""
        ok = bool(value >= floor)
        self.result.metrics[name] = (float(value), float(floor), "min")
        self.result.passed &= ok


def _chi_bxy(b):
    return GaugeFn(Poly(2, {(1, 1, 0): b / 2.0}), tag="bxy_half")


def _pair_2d(b=0.5, n=32, dq=0.3, q0=(0.6, -0.4), p0=(0.0, 0.0), lam=1.0):
    """Landau-gauge state plus its symmetric-gauge twin via chi = (B/2)xy."""
    k = Constants(lam=lam)
    grid = QGrid.regular(2, n, dq)
    landau = GaugeField.uniform_b(b, "landau")
    chi = _chi_bxy(b)
    psi = coherent_state(q0, p0, grid, k, gauge_tag=landau.tag)
    rho = density_from_pure(psi)
    gauged = landau.gauged(chi, k)
    rho2 = gauge_rotate(rho, chi, +1)
    return k, grid, landau, gauged, rho, rho2


def criterion_1() -> CriterionResult:
    c = _Criterion(1, "gauge invariance of all four gauge-independent kinds")
    t0 = time.time()
    k, grid, landau, gauged, rho, rho2 = _pair_2d()
    tol = 1e-8
    wg_a = wigner_gauge_stratonovich(rho, landau)
    wg_b = wigner_gauge_stratonovich(rho2, gauged)
    c.check_max("wg_invariance_max_err", np.abs(wg_a.values - wg_b.values).max(), tol)
    qg_a = husimi_from_wigner(wg_a)
    qg_b = husimi_from_wigner(wg_b)
    c.check_max("qg_invariance_max_err", np.abs(qg_a.values - qg_b.values).max(), tol)
    wp_a = wigner_gauge_poincare(rho, landau)
    wp_b = wigner_gauge_poincare(rho2, gauged)
    c.check_max("wp_invariance_max_err", np.abs(wp_a.values - wp_b.values).max(), tol)
    qp_a = husimi_gauge_poincare(rho, landau)
    qp_b = husimi_gauge_poincare(rho2, gauged)
    c.check_max("qp_invariance_max_err", np.abs(qp_a.values - qp_b.values).max(), tol)
    c.result.seconds = time.time() - t0
    return c.result


def criterion_2() -> CriterionResult:
    c = _Criterion(2, "reduction identities at A=0 and in the radial gauge")
    t0 = time.time()
    tol = 1e-12
    k = Constants()
    g1 = QGrid.regular(1, 128, 0.15)
    free1 = GaugeField.free(1)
    rho = density_from_pure(coherent_state(0.7, -0.4, g1, k))
    w = wigner(rho)
    c.check_max("wg_equals_w", np.abs(
        wigner_gauge_stratonovich(rho, free1).values - w.values).max(), tol)
    c.check_max("wp_equals_w", np.abs(
        wigner_gauge_poincare(rho, free1).values - w.values).max(), tol)
    q = husimi_overlap(rho)
    c.check_max("qg_equals_q", np.abs(
        husimi_from_wigner(wigner_gauge_stratonovich(rho, free1)).values
        - husimi_from_wigner(w).values).max(), tol)
    c.check_max("qp_equals_q", np.abs(
        husimi_gauge_poincare(rho, free1).values - q.values).max(), tol)
    # radial gauge of a uniform field: the ray phase vanishes identically
    b = 0.5
    sym = GaugeField.uniform_b(b, "symmetric")
    g2 = QGrid.regular(2, 32, 0.3)
    rho2 = density_from_pure(coherent_state([0.6, -0.4], [0.0, 0.0], g2, Constants(),
                                            gauge_tag=sym.tag))
    c.check_max("wp_equals_w_symmetric_gauge", np.abs(
        wigner_gauge_poincare(rho2, sym).values - wigner(rho2).values).max(), tol)
    c.result.seconds = time.time() - t0
    return c.result


def criterion_3() -> CriterionResult:
    c = _Criterion(3, "Husimi consistency: overlap route vs smoothed Wigner")
    t0 = time.time()
    k = Constants()
    g = QGrid.regular(1, 128, 0.15)
    rho = mix([(0.5, coherent_state(1.0, 0.5, g, k)),
               (0.5, coherent_state(-1.2, -0.3, g, k))])
    q_overlap = husimi_overlap(rho)
    q_smooth = husimi_from_wigner(wigner(rho))
    c.check_max("overlap_vs_smoothed_max_err",
                np.abs(q_overlap.values - q_smooth.values).max(), 1e-8)
    c.check_max("q_reality_err", q_smooth.imag_max, 1e-10)
    c.check_min("q_min_value", q_overlap.values.min(), -1e-10)
    c.check_max("q_normalization_err", abs(q_overlap.integrate() - 1.0), 1e-6)
    bound = (TWO_PI * k.hbar) ** (-g.dim)
    c.check_max("q_upper_bound_excess", q_overlap.values.max() - bound, 1e-10)
    c.result.seconds = time.time() - t0
    return c.result


def criterion_4() -> CriterionResult:
    c = _Criterion(4, "round trips: Weyl, chord-phase, and quantizer routes")
    t0 = time.time()
    k = Constants()
    g = QGrid.regular(1, 128, 0.15)
    rng = np.random.default_rng(7)
    m = rng.standard_normal((128, 128)) + 1j * rng.standard_normal((128, 128))
    kern = m @ m.conj().T
    kern /= np.trace(kern).real * g.axes[0].spacing
    rho_rand = DensityMatrix(g, k, values=kern)
    back = inverse_wigner(wigner(rho_rand, threshold=None))
    c.check_max("w_round_trip_random_rho", np.abs(back.values - kern).max(), 1e-10)

    a_fld = GaugeField.from_polynomials([Poly(1, {(1, 0): 0.4})], tag="ax_linear")
    rho = density_from_pure(coherent_state(0.5, -0.4, g, k, gauge_tag=a_fld.tag))
    wg = wigner_gauge_stratonovich(rho, a_fld)
    back2 = inverse_wigner_gauge(wg, a_fld)
    c.check_max("wg_round_trip", np.abs(back2.values - rho.values).max(), 1e-10)

    qg = husimi_from_wigner(wg)
    spec = SmoothingSpec()
    rho3 = inverse_wigner_gauge(wigner_from_husimi(qg, spec), a_fld)
    c.check_max("qg_quantizer_round_trip", np.abs(rho3.values - rho.values).max(), 1e-5)

    g64 = QGrid.regular(1, 64, 0.24)
    a64 = GaugeField.from_polynomials([Poly(1, {(1, 0): 0.3})], tag="ax_linear")
    rho64 = density_from_pure(coherent_state(0.2, -0.1, g64, k, gauge_tag=a64.tag))
    qg64 = husimi_gauge(rho64, a64)
    direct, sel = quantizer_reconstruct_direct(qg64, a64, phase_mode="chord")
    pipeline = inverse_wigner_gauge(wigner_from_husimi(qg64, spec), a64)
    ref = pipeline.values[np.ix_(sel, sel)]
    c.check_max("direct_quantizer_chord_vs_pipeline", np.abs(direct - ref).max(), 1e-4)
    qp64 = husimi_gauge_poincare(rho64, a64)
    direct_r, sel_r = quantizer_reconstruct_direct(qp64, a64, phase_mode="radial")
    from .phase_space import inverse_wigner_poincare
    # the ray-phase chirp broadens the spectrum; admit it explicitly
    spec_r = SmoothingSpec(reg_floor=1e-8)
    pipeline_r = inverse_wigner_poincare(wigner_from_husimi(qp64, spec_r), a64)
    ref_r = pipeline_r.values[np.ix_(sel_r, sel_r)]
    c.check_max("direct_quantizer_radial_vs_pipeline", np.abs(direct_r - ref_r).max(), 1e-4)
    c.result.seconds = time.time() - t0
    return c.result


def criterion_5() -> CriterionResult:
    c = _Criterion(5, "reality of the gauge-independent Husimi function")
    t0 = time.time()
    k, grid, landau, gauged, rho, rho2 = _pair_2d()
    qg = husimi_from_wigner(wigner_gauge_stratonovich(rho, landau))
    c.check_max("qg_imag_max_2d", qg.imag_max, 1e-12)
    g1 = QGrid.regular(1, 128, 0.15)
    a_fld = GaugeField.from_polynomials([Poly(1, {(1, 0): 0.4})], tag="ax_linear")
    rho1 = density_from_pure(coherent_state(0.5, -0.4, g1, Constants(),
                                            gauge_tag=a_fld.tag))
    qg1 = husimi_from_wigner(wigner_gauge_stratonovich(rho1, a_fld))
    c.check_max("qg_imag_max_1d", qg1.imag_max, 1e-12)
    c.result.seconds = time.time() - t0
    return c.result


def _rigid_setup():
    """Cyclotron-width-matched coherent state in the symmetric gauge."""
    b = 1.0
    k = Constants(lam=0.5)
    grid = QGrid.regular(2, 32, 0.4)
    sym = GaugeField.uniform_b(b, "symmetric")
    q0 = np.array([0.3, -0.2])
    pi0 = np.array([0.0, 0.3])
    p0 = np.array([-b * q0[1] / 2.0, b * q0[0] / 2.0]) + pi0
    psi = coherent_state(q0, p0, grid, k, gauge_tag=sym.tag, check=1e-4)
    return k, grid, sym, psi, b


def criterion_6() -> CriterionResult:
    c = _Criterion(6, "dynamics cross-validation over one cyclotron period")
    t0 = time.time()
    k, grid, sym, psi, b = _rigid_setup()
    period = TWO_PI * k.mass * k.light_speed / (abs(k.charge) * b)
    rho0 = density_from_pure(psi)
    wg0 = wigner_gauge_stratonovich(rho0, sym)

    psi_t = schrodinger_propagate(
        psi, EvolutionSpec(sym, dt=0.05, t_final=period, propagator="schrodinger_dense"))
    wg_t = wigner_gauge_stratonovich(density_from_pure(psi_t), sym, threshold=None)
    wg_l = liouville_propagate(
        wg0, EvolutionSpec(sym, dt=period / 256, t_final=period, propagator="liouville"))
    c.check_max("schrodinger_vs_liouville_wg", np.abs(wg_t.values - wg_l.values).max(), 1e-4)

    delta = 2e-3
    psi_p = schrodinger_propagate(
        psi, EvolutionSpec(sym, dt=delta, t_final=delta, propagator="schrodinger_dense"))
    psi_m = schrodinger_propagate(
        psi, EvolutionSpec(sym, dt=delta, t_final=-delta, propagator="schrodinger_dense"))
    wg_p = wigner_gauge_stratonovich(density_from_pure(psi_p), sym, threshold=None)
    wg_m = wigner_gauge_stratonovich(density_from_pure(psi_m), sym, threshold=None)
    fd = (wg_p.values - wg_m.values) / (2 * delta)
    rhs = moyal_gauge_rhs(wg0, sym)
    c.check_max("moyal_rhs_vs_schrodinger_fd", np.abs(rhs.values - fd).max(), 1e-4)

    rhs_classical = liouville_rhs(wg0, sym)
    c.check_max("moyal_equals_liouville_uniform",
                np.abs(rhs.values - rhs_classical.values).max(), 1e-10)
    c.result.seconds = time.time() - t0
    return c.result


def criterion_7() -> CriterionResult:
    c = _Criterion(7, "classical limit: quadratic vanishing of the quantum terms")
    t0 = time.time()
    b0, bgrad = 1.0, 0.2
    fld = GaugeField.from_polynomials(
        [Poly.zero(2), Poly(2, {(1, 0, 0): b0, (2, 0, 0): bgrad / 2.0})], tag="b_linear")
    grid = QGrid.regular(2, 16, 0.5)
    pg = PhaseGrid.wigner(grid, 1.0)
    f = gaussian_phase_function(pg, Constants(), [0.2, -0.1], [0.0, 0.1], 0.9, 0.4,
                                kind="w_gauge")
    hbars = [0.1, 0.05, 0.025]
    errs = []
    for hb in hbars:
        kh = Constants(hbar=hb)
        r_m = moyal_gauge_rhs(f, fld, constants=kh)
        r_l = liouville_rhs(f, fld, constants=kh)
        errs.append(np.abs(r_m.values - r_l.values).max())
    order = float(np.polyfit(np.log(hbars), np.log(errs), 1)[0])
    c.check_min("moyal_hbar_order", order, 1.9)
    c.result.metrics["hbar_errors"] = (float(errs[-1]), float(errs[0]), "info")
    c.result.seconds = time.time() - t0
    return c.result


def criterion_8() -> CriterionResult:
    c = _Criterion(8, "smoothing intertwining relations and evolution intertwining")
    t0 = time.time()
    from .dynamics import _spectral_derivative
    k = Constants()
    g = QGrid.regular(1, 128, 0.15)
    pg = PhaseGrid.wigner(g, k.hbar)
    f = gaussian_phase_function(pg, k, 0.3, -0.4, 1.1, 0.9)
    spec = SmoothingSpec()
    lam = spec.resolve_lam(k)
    qm, = pg.q_mesh()
    pm, = pg.p_mesh()
    smooth = husimi_from_wigner(f, spec).values
    lhs_q = husimi_from_wigner(
        f.with_values(f.values * np.broadcast_to(qm, f.values.shape)), spec).values
    rhs_q = (np.broadcast_to(qm, smooth.shape) * smooth
             + (k.hbar / (2 * lam))
             * np.real(_spectral_derivative(smooth.astype(complex), 0,
                                            pg.qaxes[0].spacing)))
    c.check_max("intertwine_position_err", np.abs(lhs_q - rhs_q).max(), 1e-9)
    lhs_p = husimi_from_wigner(
        f.with_values(f.values * np.broadcast_to(pm, f.values.shape)), spec).values
    rhs_p = (np.broadcast_to(pm, smooth.shape) * smooth
             + (k.hbar * lam / 2)
             * np.real(_spectral_derivative(smooth.astype(complex), 1,
                                            pg.paxes[0].spacing)))
    c.check_max("intertwine_momentum_err", np.abs(lhs_p - rhs_p).max(), 1e-9)

    # evolution intertwining, uniform field (1-D, uniform E)
    fld = GaugeField.uniform_e([0.4])
    fw = f.with_values(f.values, kind="w_gauge")
    left = husimi_from_wigner(moyal_gauge_rhs(fw, fld), spec).values
    right = husimi_gauge_rhs(husimi_from_wigner(fw, spec), fld, spec).values
    c.check_max("evolution_intertwine_uniform_err", np.abs(left - right).max(), 1e-8)

    # classical limit of the Husimi equation (order >= 0.9)
    b0, bgrad = 1.0, 0.2
    fld2 = GaugeField.from_polynomials(
        [Poly.zero(2), Poly(2, {(1, 0, 0): b0, (2, 0, 0): bgrad / 2.0})], tag="b_linear")
    g2 = QGrid.regular(2, 16, 0.5)
    pg2 = PhaseGrid.wigner(g2, 1.0)
    f2 = gaussian_phase_function(pg2, Constants(), [0.2, -0.1], [0.0, 0.1], 0.9, 0.4,
                                 kind="q_gauge")
    hbars = [0.1, 0.05, 0.025]
    errs = []
    for hb in hbars:
        kh = Constants(hbar=hb)
        r_h = husimi_gauge_rhs(f2, fld2, constants=kh)
        r_l = liouville_rhs(f2, fld2, constants=kh)
        errs.append(np.abs(r_h.values - r_l.values).max())
    order = float(np.polyfit(np.log(hbars), np.log(errs), 1)[0])
    c.check_min("husimi_hbar_order", order, 0.9)
    c.result.seconds = time.time() - t0
    return c.result


def criterion_9() -> CriterionResult:
    c = _Criterion(9, "chord-phase and radial-phase kinds are distinct objects")
    t0 = time.time()
    k, grid, landau, gauged, rho, rho2 = _pair_2d()
    wg = wigner_gauge_stratonovich(rho, landau)
    wp = wigner_gauge_poincare(rho, landau)
    gap = np.abs(wg.values - wp.values).max()
    c.check_min("wg_vs_wp_distinctness_gap", gap, 10 * 1e-8)
    c.result.seconds = time.time() - t0
    return c.result


_CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
             criterion_6, criterion_7, criterion_8, criterion_9]


def run_acceptance(verbose: bool = True, numbers=None) -> list[CriterionResult]:
    results = []
    for i, fn in enumerate(_CRITERIA, start=1):
        if numbers is not None and i not in numbers:
            continue
        res = fn()
        results.append(res)
        if verbose:
            print(res.line())
            for name, (value, tol, kind) in res.metrics.items():
                if kind == "info":
                    print(f"    {name}: {value:.3e} .. {tol:.3e}")
                else:
                    rel = "<=" if kind == "max" else ">="
                    print(f"    {name} = {value:.3e} ({rel} {tol:.1e})")
    return results


if __name__ == "__main__":
    out = run_acceptance(verbose=True)
    raise SystemExit(0 if all(r.passed for r in out) else 1)
