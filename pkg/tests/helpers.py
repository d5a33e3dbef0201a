"""Shared builders and independent quadrature oracles for the test suite.

Oracles here never reuse the transform pipelines they check: Wigner and
Husimi values come from dense Riemann sums of the defining integrals on
refined auxiliary grids, with states given by their closed-form expressions.
"""
import numpy as np

from gipsp import Constants, GaugeField, GaugeFn, Poly, QGrid, coherent_state, \
    density_from_pure, mix


def ground_state_1d(n=128, dq=0.15, constants=None):
    k = constants or Constants()
    g = QGrid.regular(1, n, dq)
    return k, g, density_from_pure(coherent_state(0.0, 0.0, g, k))


def mixture_1d(n=128, dq=0.15, constants=None):
    k = constants or Constants()
    g = QGrid.regular(1, n, dq)
    rho = mix([(0.5, coherent_state(1.0, 0.5, g, k)),
               (0.5, coherent_state(-1.2, -0.3, g, k))])
    return k, g, rho


def random_density_1d(g, constants, seed=0):
    from gipsp import DensityMatrix
    rng = np.random.default_rng(seed)
    n = g.axes[0].n
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    kern = m @ m.conj().T
    kern /= np.trace(kern).real * g.axes[0].spacing
    return DensityMatrix(g, constants, values=kern)


def coherent_closed_form(x, q0, p0, k):
    """Position-space coherent state, the same convention the package fixes."""
    lam, hbar = k.lam, k.hbar
    return ((lam / (np.pi * hbar)) ** 0.25
            * np.exp(-lam * (x - q0) ** 2 / (2 * hbar) + 1j * p0 * (x - q0) / hbar))


def oracle_wigner_point(psi_fn, q, p, k, u_max=20.0, n_u=4001):
    """W(q, p) by direct quadrature of the chord integral, 1-D.

    Independent of the package pipeline: fine trapezoid in the chord variable
    with the state given in closed form.
    """
    u = np.linspace(-u_max, u_max, n_u)
    ch = psi_fn(q - u / 2) * np.conj(psi_fn(q + u / 2))
    integrand = ch * np.exp(1j * u * p / k.hbar)
    val = np.trapezoid(integrand, u) / (2 * np.pi * k.hbar)
    return val.real


def oracle_husimi_point(psi_fn, q, p, k, x_max=20.0, n_x=4001):
    """Q(q, p) = (2 pi hbar)^-1 |<alpha(q,p)|psi>|^2 by direct quadrature."""
    x = np.linspace(-x_max, x_max, n_x)
    alpha = coherent_closed_form(x, q, p, k)
    ovl = np.trapezoid(np.conj(alpha) * psi_fn(x), x)
    return abs(ovl) ** 2 / (2 * np.pi * k.hbar)


def random_poly(dim, degree, rng, time_dependent=False, scale=0.5):
    terms = {}
    for _ in range(4):
        exps = tuple(int(rng.integers(0, degree + 1)) for _ in range(dim))
        while sum(exps) > degree:
            exps = tuple(int(rng.integers(0, degree + 1)) for _ in range(dim))
        kt = int(rng.integers(0, 2)) if time_dependent else 0
        terms[exps + (kt,)] = float(rng.normal() * scale)
    return Poly(dim, terms)


def linear_a_field_1d(a=0.4, tag="ax_linear"):
    return GaugeField.from_polynomials([Poly(1, {(1, 0): a})], tag=tag)


def landau_pair(b=0.5, n=32, dq=0.3, lam=1.0, q0=(0.6, -0.4), p0=(0.0, 0.0)):
    """Landau-gauge state plus gauge-rotated twin with chi = (B/2)xy."""
    from gipsp import gauge_rotate
    k = Constants(lam=lam)
    g = QGrid.regular(2, n, dq)
    landau = GaugeField.uniform_b(b, "landau")
    chi = GaugeFn(Poly(2, {(1, 1, 0): b / 2.0}), tag="bxy_half")
    psi = coherent_state(q0, p0, g, k, gauge_tag=landau.tag)
    rho = density_from_pure(psi)
    return k, g, landau, chi, rho, gauge_rotate(rho, chi, +1), landau.gauged(chi, k)


def fitted_order(xs, errs):
    return float(np.polyfit(np.log(xs), np.log(errs), 1)[0])
