"""Wigner-type transforms: standard, chord-phase gauge-independent, and
radial-phase gauge-independent, with exact inverses.

Discretization.  The density matrix is resampled along chords,
C(q, u) = <q - u/2| rho |q + u/2>, using pure index arithmetic: with the
midpoint q on the half-spacing refinement of the position grid (2n columns)
and the chord u on the same lattice as the doubled coordinate (step dq), every
matrix entry lands on exactly one (q, u) pair and no interpolation ever
happens.  Odd columns carry odd chords and even columns even chords, so each
column holds n chords of effective step 2*dq, and the FFT over u per column
is an exact 2*pi*hbar-dual pair with the momentum axis of
:meth:`PhaseGrid.wigner` (n points, half the dual spacing).  Consequences,
all exact up to FFT round-off: the transform is a bijection (round trips on
arbitrary mixed states are identity), the momentum sum on even columns
reproduces the position density, and (2 pi hbar)^N * sum(W^2) dGamma equals
Tr rho^2.

The gauge-independent variant multiplies the chords by the unimodular phase
exp[(i e / hbar c) u . integral_{-1/2}^{1/2} A(q + tau u) dtau] before the
FFT; the radial-phase variant conjugates the state by exp(-i Lambda(q)) and
reuses the standard transform.  Both leave every pipeline above machine-exact
because the phases cancel algebraically against the gauge rotation of the
state.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field, replace
from functools import lru_cache

import numpy as np

from .em_fields import GaugeField, chord_integral, radial_phase
from .lattice import (
    TWO_PI,
    BoundaryMassError,
    Constants,
    PhaseGrid,
    QGrid,
    boundary_mass,
    phase_weighted_dft,
)
from .states import DensityMatrix, phase_rotate

__all__ = [
    "PhaseSpaceFunction",
    "GaugeTagError",
    "wigner",
    "inverse_wigner",
    "wigner_gauge_stratonovich",
    "inverse_wigner_gauge",
    "wigner_gauge_poincare",
    "inverse_wigner_poincare",
    "gaussian_phase_function",
    "WIGNER_KINDS",
    "HUSIMI_KINDS",
]

WIGNER_KINDS = ("w", "w_gauge", "w_poincare", "classical")
HUSIMI_KINDS = ("q", "q_gauge", "q_poincare")


class GaugeTagError(ValueError):
    """State and field disagree about the gauge; the result would be a hybrid."""


@dataclass
class PhaseSpaceFunction:
    """A scalar field on a phase grid, tagged with what it represents."""

    values: np.ndarray
    grid: PhaseGrid
    kind: str
    constants: Constants
    field_tag: str | None = None
    time: float = 0.0
    imag_max: float = 0.0
    diagnostics: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in WIGNER_KINDS + HUSIMI_KINDS:
            raise ValueError(f"unknown phase-space kind {self.kind!r}")
        if self.values.shape != self.grid.shape:
            raise ValueError("phase-space values do not match the grid")

    def integrate(self) -> float:
        return float(self.values.sum() * self.grid.cell)

    def marginal_position(self) -> np.ndarray:
        axes = tuple(range(self.grid.dim, 2 * self.grid.dim))
        return self.values.sum(axis=axes) * self.grid.p_cell

    def with_values(self, values: np.ndarray, **changes) -> "PhaseSpaceFunction":
        changes.setdefault("diagnostics", dict(self.diagnostics))
        return replace(self, values=values, **changes)


def gaussian_phase_function(grid: PhaseGrid, constants: Constants, q0, p0,
                            q_widths, p_widths, kind: str = "classical") -> PhaseSpaceFunction:
    """Normalized Gaussian on a phase grid (classical test distribution)."""
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    qw = np.broadcast_to(np.asarray(q_widths, dtype=float), (grid.dim,))
    pw = np.broadcast_to(np.asarray(p_widths, dtype=float), (grid.dim,))
    expo = 0.0
    for x, c, s in zip(grid.q_mesh(), q0, qw):
        expo = expo + (-((x - c) ** 2) / (2.0 * s**2))
    for y, c, s in zip(grid.p_mesh(), p0, pw):
        expo = expo + (-((y - c) ** 2) / (2.0 * s**2))
    vals = np.exp(expo)
    vals /= vals.sum() * grid.cell
    return PhaseSpaceFunction(vals, grid, kind, constants)


# ---------------------------------------------------------------------------
# chord index bookkeeping
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _chord_maps(n: int):
    """Index maps for columns l (0..2n-1) and chords r (0..n-1).

    j1, j2 are density-matrix indices of q - u/2 and q + u/2; ``valid`` marks
    chords staying inside the grid; u = (2r + sigma - n) dq with sigma = l%2.
    """
    l = np.arange(2 * n)[:, None]
    r = np.arange(n)[None, :]
    sigma = l % 2
    j1 = (l - 2 * r - sigma) // 2 + n // 2
    j2 = (l + 2 * r + sigma) // 2 - n // 2
    valid = (j1 >= 0) & (j1 < n) & (j2 >= 0) & (j2 < n)
    ufac = 2 * r + sigma - n
    return j1, j2, valid, np.broadcast_to(ufac, j1.shape)


def _chords_to_w_axis(arr, qax, pax, l_axis, r_axis, hbar):
    """Per-parity chord -> momentum FFT along one axis pair (sign +1)."""
    n, dq = qax.n, qax.spacing
    out = np.empty_like(arr)
    for sigma in (0, 1):
        sl = [slice(None)] * arr.ndim
        sl[l_axis] = slice(sigma, None, 2)
        sl = tuple(sl)
        out[sl] = phase_weighted_dft(
            arr[sl], r_axis, (sigma - n) * dq, 2 * dq, pax.origin, pax.spacing, hbar, +1
        )
    return out


def _w_to_chords_axis(arr, qax, pax, l_axis, p_axis, hbar):
    """Inverse of :func:`_chords_to_w_axis` (sign -1, roles swapped)."""
    n, dq = qax.n, qax.spacing
    out = np.empty_like(arr)
    for sigma in (0, 1):
        sl = [slice(None)] * arr.ndim
        sl[l_axis] = slice(sigma, None, 2)
        sl = tuple(sl)
        out[sl] = phase_weighted_dft(
            arr[sl], p_axis, pax.origin, pax.spacing, (sigma - n) * dq, 2 * dq, hbar, -1
        )
    return out


def _chord_phase_factory(field: GaugeField, t: float, constants: Constants):
    scale = constants.charge / (constants.light_speed * constants.hbar)

    def phase(qs, us):
        integ = chord_integral(field, qs, us, t)
        acc = 0.0
        for u, a in zip(us, integ):
            acc = acc + np.asarray(u) * a
        return np.exp(1j * scale * acc)

    return phase


# ---------------------------------------------------------------------------
# forward transforms
# ---------------------------------------------------------------------------

def _wigner_1d(kernel, qgrid, pgrid, constants, phase_fn):
    n, dq = qgrid.axes[0].n, qgrid.axes[0].spacing
    j1, j2, valid, ufac = _chord_maps(n)
    ch = np.where(valid, kernel[np.clip(j1, 0, n - 1), np.clip(j2, 0, n - 1)], 0.0 + 0.0j)
    if phase_fn is not None:
        qt = pgrid.qaxes[0].points[:, None]
        ch = ch * phase_fn([qt], [ufac * dq])
    w = _chords_to_w_axis(ch, qgrid.axes[0], pgrid.paxes[0], 0, 1, constants.hbar)
    w *= 2 * dq / (TWO_PI * constants.hbar)
    return w.real, float(np.abs(w.imag).max())


def _wigner_2d(rho: DensityMatrix, qgrid, pgrid, constants, phase_fn):
    (nx, ny), (dqx, dqy) = qgrid.shape, qgrid.spacings
    j1x, j2x, vx, ufx = _chord_maps(nx)
    j1y, j2y, vy, ufy = _chord_maps(ny)
    c1x, c2x = np.clip(j1x, 0, nx - 1), np.clip(j2x, 0, nx - 1)
    c1y, c2y = np.clip(j1y, 0, ny - 1), np.clip(j2y, 0, ny - 1)
    qty = pgrid.qaxes[1].points
    pref = (2 * dqx) * (2 * dqy) / (TWO_PI * constants.hbar) ** 2
    W = np.zeros(pgrid.shape)
    imag_max = 0.0
    uy = (ufy * dqy)[:, None, :]  # (2ny, 1, ny)
    qy = qty[:, None, None]
    dense = rho.values if rho.components is None else None
    for lx in range(2 * nx):
        okx = vx[lx][None, :, None]
        # slab axes: (ly, rx, ry)
        if dense is not None:
            ch = dense[
                c1x[lx][None, :, None], c1y[:, None, :],
                c2x[lx][None, :, None], c2y[:, None, :],
            ]
        else:
            ch = 0.0
            for wcomp, psi in rho.components:
                a = psi.values[c1x[lx][None, :, None], c1y[:, None, :]]
                b = psi.values[c2x[lx][None, :, None], c2y[:, None, :]]
                ch = ch + wcomp * (a * b.conj())
        ch = np.where(okx & vy[:, None, :], ch, 0.0 + 0.0j)
        if phase_fn is not None:
            ux = (ufx[lx] * dqx)[None, :, None]
            ch = ch * phase_fn([pgrid.qaxes[0].points[lx], qy], [ux, uy])
        # chord FFT along rx: the x-parity is fixed inside this slab
        ch = phase_weighted_dft(
            ch, 1, (lx % 2 - nx) * dqx, 2 * dqx,
            pgrid.paxes[0].origin, pgrid.paxes[0].spacing, constants.hbar, +1,
        )
        ch = _chords_to_w_axis(ch, qgrid.axes[1], pgrid.paxes[1], 0, 2, constants.hbar)
        ch *= pref
        imag_max = max(imag_max, float(np.abs(ch.imag).max()))
        W[lx] = ch.real
    return W, imag_max


def _wigner_core(rho: DensityMatrix, constants, phase_fn, kind, field_tag,
                 time, threshold):
    qgrid = rho.grid
    pgrid = PhaseGrid.wigner(qgrid, constants.hbar)
    if threshold is not None:
        mass = boundary_mass(rho.diagonal())
        if mass > threshold:
            raise BoundaryMassError(mass, threshold, "position support before transform")
    if qgrid.dim == 1:
        kernel = rho.values if rho.values is not None else rho.as_kernel()
        vals, imag_max = _wigner_1d(kernel, qgrid, pgrid, constants, phase_fn)
    else:
        vals, imag_max = _wigner_2d(rho, qgrid, pgrid, constants, phase_fn)
    out = PhaseSpaceFunction(vals, pgrid, kind, constants, field_tag=field_tag, time=time,
                             imag_max=imag_max)
    if threshold is not None:
        p_axes = tuple(range(pgrid.dim, 2 * pgrid.dim))
        pmass = boundary_mass(np.abs(vals), axes=p_axes)
        out.diagnostics["momentum_edge_mass"] = pmass
        if pmass > threshold:
            raise BoundaryMassError(pmass, threshold, "momentum window after transform")
    return out


def wigner(rho: DensityMatrix, threshold: float | None = 1e-4,
           time: float = 0.0) -> PhaseSpaceFunction:
    """Weyl transform of the density matrix onto the refined phase lattice.

    W(q, p) = (2 pi hbar)^(-N) integral <q-u/2|rho|q+u/2> e^(i u p / hbar) du.
    Real for Hermitian input; the boundary-mass gate (position shell before,
    momentum shell after) rejects states the grid cannot represent.
    """
    return _wigner_core(rho, rho.constants, None, "w", None, time, threshold)


def wigner_gauge_stratonovich(rho: DensityMatrix, field: GaugeField, t: float = 0.0,
                              threshold: float | None = 1e-4) -> PhaseSpaceFunction:
    """Gauge-independent Wigner function over kinetic momentum.

    Inserts the chord phase exp[(i e / hbar c) u . avg_A(q, u)] into the Weyl
    kernel, where avg_A is the straight-chord average of the vector
    potential.  The state's gauge tag must match the field's.
    """
    if rho.gauge_tag != field.tag:
        raise GaugeTagError(
            f"state gauge {rho.gauge_tag!r} does not match field {field.tag!r}"
        )
    phase_fn = None if field.is_zero_vector else _chord_phase_factory(field, t, rho.constants)
    return _wigner_core(rho, rho.constants, phase_fn, "w_gauge", field.tag, t, threshold)


def _radial_phase_on_grid(field: GaugeField, grid: QGrid, t, constants):
    lam = radial_phase(field, grid.mesh(), t, constants)
    return np.broadcast_to(np.asarray(lam), grid.shape)


def wigner_gauge_poincare(rho: DensityMatrix, field: GaugeField, t: float = 0.0,
                          threshold: float | None = 1e-4) -> PhaseSpaceFunction:
    """Gauge-independent Wigner function built from the radial (ray) phase.

    Equivalent to conjugating the state by exp(-i Lambda(q)) with
    Lambda(q) = (e/hbar c) q . integral_0^1 A(tau q) dtau and applying the
    standard Weyl transform; distinct from the chord-phase variant whenever
    the potential is not radial-gauge.
    """
    if rho.gauge_tag != field.tag:
        raise GaugeTagError(
            f"state gauge {rho.gauge_tag!r} does not match field {field.tag!r}"
        )
    if field.is_zero_vector:
        rot = rho
    else:
        lam = _radial_phase_on_grid(field, rho.grid, t, rho.constants)
        rot = phase_rotate(rho, -lam)
    out = _wigner_core(rot, rho.constants, None, "w_poincare", field.tag, t, threshold)
    return out


# ---------------------------------------------------------------------------
# inverse transforms
# ---------------------------------------------------------------------------

def _inverse_1d(Wc, qgrid, pgrid, constants, conj_phase_fn):
    n, dq = qgrid.axes[0].n, qgrid.axes[0].spacing
    ch = _w_to_chords_axis(Wc, qgrid.axes[0], pgrid.paxes[0], 0, 1, constants.hbar)
    ch *= pgrid.p_cell
    j1, j2, valid, ufac = _chord_maps(n)
    if conj_phase_fn is not None:
        qt = pgrid.qaxes[0].points[:, None]
        ch = ch * conj_phase_fn([qt], [ufac * dq]).conj()
    kernel = np.zeros((n, n), dtype=complex)
    kernel[j1[valid], j2[valid]] = ch[valid]
    return kernel


def _inverse_2d(Wc, qgrid, pgrid, constants, conj_phase_fn):
    (nx, ny), (dqx, dqy) = qgrid.shape, qgrid.spacings
    if nx * ny > 4096:
        raise ValueError("dense 2-D reconstruction limited to 4096 grid points")
    ch = _w_to_chords_axis(Wc, qgrid.axes[0], pgrid.paxes[0], 0, 2, constants.hbar)
    ch = _w_to_chords_axis(ch, qgrid.axes[1], pgrid.paxes[1], 1, 3, constants.hbar)
    ch *= pgrid.p_cell
    j1x, j2x, vx, ufx = _chord_maps(nx)
    j1y, j2y, vy, ufy = _chord_maps(ny)
    qty = pgrid.qaxes[1].points
    uy = (ufy * dqy)[:, None, :]
    qy = qty[:, None, None]
    kernel = np.zeros((nx, ny, nx, ny), dtype=complex)
    flat = kernel.reshape(-1)
    for lx in range(2 * nx):
        slab = ch[lx]
        if conj_phase_fn is not None:
            ux = (ufx[lx] * dqx)[None, :, None]
            slab = slab * conj_phase_fn([pgrid.qaxes[0].points[lx], qy], [ux, uy]).conj()
        ok = vx[lx][None, :, None] & vy[:, None, :]
        a1x = np.clip(j1x[lx], 0, nx - 1)[None, :, None]
        a2x = np.clip(j2x[lx], 0, nx - 1)[None, :, None]
        a1y = np.clip(j1y, 0, ny - 1)[:, None, :]
        a2y = np.clip(j2y, 0, ny - 1)[:, None, :]
        idx = ((a1x * ny + a1y) * nx + a2x) * ny + a2y
        flat[idx[ok]] = slab[ok]
    return kernel


def _inverse_core(psf: PhaseSpaceFunction, conj_phase_fn, gauge_tag) -> DensityMatrix:
    if psf.kind not in WIGNER_KINDS:
        raise ValueError(f"cannot invert kind {psf.kind!r} as a Wigner-type function")
    pgrid = psf.grid
    if pgrid.source is None:
        raise ValueError("phase grid does not remember its source position grid")
    qgrid = pgrid.source
    Wc = psf.values.astype(complex)
    if qgrid.dim == 1:
        kernel = _inverse_1d(Wc, qgrid, pgrid, psf.constants, conj_phase_fn)
    else:
        kernel = _inverse_2d(Wc, qgrid, pgrid, psf.constants, conj_phase_fn)
    return DensityMatrix(qgrid, psf.constants, values=kernel, gauge_tag=gauge_tag)


def inverse_wigner(psf: PhaseSpaceFunction, gauge_tag: str = "free") -> DensityMatrix:
    """Reconstruct <q|rho|q'> from a Wigner-type function; exact inverse."""
    return _inverse_core(psf, None, gauge_tag)


def inverse_wigner_gauge(psf: PhaseSpaceFunction, field: GaugeField,
                         t: float = 0.0) -> DensityMatrix:
    """Invert the chord-phase transform: FFT back to chords, strip the
    unimodular phase, scatter chords into the kernel."""
    if psf.field_tag is not None and psf.field_tag != field.tag:
        raise GaugeTagError(
            f"function tagged {psf.field_tag!r} does not match field {field.tag!r}"
        )
    phase_fn = None if field.is_zero_vector else _chord_phase_factory(field, t, psf.constants)
    return _inverse_core(psf, phase_fn, field.tag)


def inverse_wigner_poincare(psf: PhaseSpaceFunction, field: GaugeField,
                            t: float = 0.0) -> DensityMatrix:
    """Invert the radial-phase transform; undoes the ray-phase conjugation."""
    if psf.field_tag is not None and psf.field_tag != field.tag:
        raise GaugeTagError(
            f"function tagged {psf.field_tag!r} does not match field {field.tag!r}"
        )
    rho = _inverse_core(psf, None, field.tag)
    if field.is_zero_vector:
        return rho
    lam = _radial_phase_on_grid(field, rho.grid, t, psf.constants)
    return phase_rotate(rho, +lam, tag=field.tag)
