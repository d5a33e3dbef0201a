"""Grids, Fourier conventions, quadrature, and array serialization.

Position grids are uniform with a power-of-two point count per axis; the
momentum companion of an axis is its FFT dual with spacing
dp = 2*pi*hbar / (n*dq), so discrete transforms with the continuum kernel
exp(-i p q / hbar) are exactly unitary.  Quasi-probability distributions live
on a refined phase lattice (half spacing in position, half of the dual spacing
in momentum) built by :meth:`PhaseGrid.wigner`; that choice keeps chord
resampling of density matrices an exact index bijection, see ``phase_space``.

All integrals are Riemann sums with the uniform cell weight, which is
spectrally accurate for smooth integrands that decay inside the box.  A
boundary-mass diagnostic (:func:`boundary_mass`) measures how well a field
honours that decay assumption; transforms gate on it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi


class LatticeError(ValueError):
    """Grid construction or transform consistency failure."""


class BoundaryMassError(LatticeError):
    """A field carries more mass near the grid edge than the gate allows."""

    def __init__(self, mass: float, threshold: float, where: str):
        self.mass = float(mass)
        self.threshold = float(threshold)
        self.where = where
        super().__init__(
            f"boundary mass {mass:.3e} exceeds threshold {threshold:.3e} ({where}); "
            "enlarge the grid or loosen the gate"
        )


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Constants:
    """Physical constants in Gaussian-style units.

    ``lam`` is the coherent-state squeeze parameter (momentum/length units):
    the smoothing Gaussian has position variance hbar/(2*lam) and momentum
    variance hbar*lam/2.  Defaults put everything equal to one.
    """

    hbar: float = 1.0
    mass: float = 1.0
    charge: float = 1.0
    light_speed: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "light_speed", "lam"):
            if getattr(self, name) <= 0:
                raise LatticeError(f"constants.{name} must be positive")


@dataclass(frozen=True)
class Axis:
    """One uniform sampling axis: n points, spacing, center."""

    n: int
    spacing: float
    center: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise LatticeError("axis needs at least one point")
        if self.spacing <= 0:
            raise LatticeError("axis spacing must be positive")

    @property
    def points(self) -> np.ndarray:
        return self.center + (np.arange(self.n) - self.n // 2) * self.spacing

    @property
    def origin(self) -> float:
        """Coordinate of index 0."""
        return self.center - (self.n // 2) * self.spacing

    @property
    def extent(self) -> float:
        return self.n * self.spacing


@dataclass(frozen=True)
class QGrid:
    """Uniform position grid in 1 or 2 dimensions.

    Point counts are powers of two (>= 8) so every axis has an exact FFT
    dual; the dual momentum axis is centered at zero.
    """

    axes: tuple[Axis, ...]

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise LatticeError("QGrid supports 1 or 2 dimensions")
        for ax in self.axes:
            if not _is_power_of_two(ax.n) or ax.n < 8:
                raise LatticeError("grid sizes must be powers of two, at least 8")

    @classmethod
    def regular(cls, dim: int, n: int, spacing: float, center=0.0) -> "QGrid":
        centers = np.broadcast_to(np.asarray(center, dtype=float), (dim,))
        return cls(tuple(Axis(n, spacing, c) for c in centers))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n for ax in self.axes)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(ax.spacing for ax in self.axes)

    @property
    def cell(self) -> float:
        return float(np.prod(self.spacings))

    def mesh(self) -> list[np.ndarray]:
        """Broadcast-ready coordinate arrays, one per axis."""
        out = []
        for i, ax in enumerate(self.axes):
            shape = [1] * self.dim
            shape[i] = ax.n
            out.append(ax.points.reshape(shape))
        return out

    def dual_axis(self, i: int, hbar: float) -> Axis:
        ax = self.axes[i]
        return Axis(ax.n, TWO_PI * hbar / (ax.n * ax.spacing), 0.0)

    def refined(self) -> "QGrid":
        """Midpoint-refined grid: twice the points at half the spacing."""
        return QGrid(tuple(Axis(2 * ax.n, ax.spacing / 2.0, ax.center) for ax in self.axes))


@dataclass(frozen=True)
class PhaseGrid:
    """Product grid over position and momentum axes.

    Two layouts are used.  ``PhaseGrid.dual`` pairs a position grid with its
    FFT-dual momentum axes (dq*dp*n = 2*pi*hbar per axis, asserted); this is
    the layout of wavefunction momentum representations.  ``PhaseGrid.wigner``
    is the refined lattice carrying quasi-probability distributions: position
    at half spacing (2n points) and momentum at half the dual spacing
    (n points), so each chord column transform is a 2*pi*hbar-exact FFT pair.
    """

    qaxes: tuple[Axis, ...]
    paxes: tuple[Axis, ...]
    source: QGrid | None = None

    @classmethod
    def dual(cls, qgrid: QGrid, hbar: float) -> "PhaseGrid":
        paxes = tuple(qgrid.dual_axis(i, hbar) for i in range(qgrid.dim))
        for qa, pa in zip(qgrid.axes, paxes):
            rel = qa.spacing * pa.spacing * qa.n / (TWO_PI * hbar)
            if abs(rel - 1.0) > 1e-12:
                raise LatticeError("dual grid identity dq*dp*n = 2*pi*hbar violated")
        return cls(qgrid.axes, paxes, source=qgrid)

    @classmethod
    def wigner(cls, qgrid: QGrid, hbar: float) -> "PhaseGrid":
        qaxes = tuple(Axis(2 * ax.n, ax.spacing / 2.0, ax.center) for ax in qgrid.axes)
        paxes = tuple(
            Axis(ax.n, TWO_PI * hbar / (ax.n * ax.spacing) / 2.0, 0.0) for ax in qgrid.axes
        )
        return cls(qaxes, paxes, source=qgrid)

    @property
    def dim(self) -> int:
        return len(self.qaxes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n for ax in self.qaxes) + tuple(ax.n for ax in self.paxes)

    @property
    def ndim(self) -> int:
        return 2 * self.dim

    @property
    def cell(self) -> float:
        return float(np.prod([ax.spacing for ax in self.qaxes + self.paxes]))

    def _mesh(self, axes: tuple[Axis, ...], offset: int) -> list[np.ndarray]:
        out = []
        for i, ax in enumerate(axes):
            shape = [1] * self.ndim
            shape[offset + i] = ax.n
            out.append(ax.points.reshape(shape))
        return out

    def q_mesh(self) -> list[np.ndarray]:
        return self._mesh(self.qaxes, 0)

    def p_mesh(self) -> list[np.ndarray]:
        return self._mesh(self.paxes, self.dim)

    @property
    def p_cell(self) -> float:
        return float(np.prod([ax.spacing for ax in self.paxes]))

    @property
    def q_cell(self) -> float:
        return float(np.prod([ax.spacing for ax in self.qaxes]))


def integrate(values: np.ndarray, grid: QGrid | PhaseGrid) -> float | complex:
    """Riemann sum with the uniform cell weight."""
    if values.shape != grid.shape:
        raise LatticeError(f"field shape {values.shape} does not match grid {grid.shape}")
    total = values.sum() * grid.cell
    if np.iscomplexobj(values):
        return complex(total)
    return float(total)


def boundary_mass(density: np.ndarray, fraction: float = 0.1, axes=None) -> float:
    """Fraction of a non-negative density in the outer shell of the grid.

    The shell is the union, over the selected axes, of the outer
    ``fraction`` of points on each side.
    """
    dens = np.asarray(density)
    if axes is None:
        axes = range(dens.ndim)
    total = dens.sum()
    if total <= 0:
        return 0.0
    inner = np.ones(dens.shape, dtype=bool)
    for ax in axes:
        n = dens.shape[ax]
        k = max(1, int(round(fraction * n)))
        idx = np.arange(n)
        keep = (idx >= k) & (idx < n - k)
        shape = [1] * dens.ndim
        shape[ax] = n
        inner &= keep.reshape(shape)
    return float(dens[~inner].sum() / total)


def phase_weighted_dft(
    values: np.ndarray,
    axis: int,
    x0: float,
    dx: float,
    y0: float,
    dy: float,
    hbar: float,
    sign: int,
) -> np.ndarray:
    """Evaluate F_m = sum_r f_r exp(sign*i*x_r*y_m/hbar) along one axis.

    x_r = x0 + r*dx and y_m = y0 + m*dy must be FFT-dual samplings,
    dx*dy*n = 2*pi*hbar; the offsets x0, y0 are absorbed into pre/post
    phase factors around a plain length-n FFT.
    """
    n = values.shape[axis]
    if abs(dx * dy * n - TWO_PI * hbar) > 1e-9 * TWO_PI * hbar:
        raise LatticeError("axis pair is not FFT-dual: dx*dy*n != 2*pi*hbar")
    idx = np.arange(n)
    shape = [1] * values.ndim
    shape[axis] = n
    pre = np.exp(sign * 1j * (dx * y0 / hbar) * idx).reshape(shape)
    post = np.exp(sign * 1j * (x0 / hbar) * (y0 + idx * dy)).reshape(shape)
    work = values * pre
    if sign < 0:
        work = np.fft.fft(work, axis=axis)
    else:
        work = np.fft.ifft(work, axis=axis) * n
    work *= post
    return work


def dft_axis(
    values: np.ndarray,
    grid: QGrid,
    axis: int,
    constants: Constants,
    direction: str = "forward",
) -> np.ndarray:
    """Unitary position/momentum transform along one grid axis.

    Forward maps f(q) to F(p) = (2*pi*hbar)^(-1/2) sum_q f(q) e^(-ipq/hbar) dq
    on the centered dual momentum axis; ``direction="inverse"`` is its exact
    inverse.  Round trips are identity to machine precision and Parseval holds
    exactly.
    """
    if values.shape != grid.shape:
        raise LatticeError(f"field shape {values.shape} does not match grid {grid.shape}")
    hbar = constants.hbar
    qax = grid.axes[axis]
    pax = grid.dual_axis(axis, hbar)
    if direction == "forward":
        w = qax.spacing / np.sqrt(TWO_PI * hbar)
        return w * phase_weighted_dft(
            values, axis, qax.origin, qax.spacing, pax.origin, pax.spacing, hbar, -1
        )
    if direction == "inverse":
        w = pax.spacing / np.sqrt(TWO_PI * hbar)
        return w * phase_weighted_dft(
            values, axis, pax.origin, pax.spacing, qax.origin, qax.spacing, hbar, +1
        )
    raise LatticeError(f"unknown direction {direction!r}")


def dft_all(values, grid, constants, direction="forward"):
    out = values
    for axis in range(grid.dim):
        out = dft_axis(out, grid, axis, constants, direction)
    return out


# ---------------------------------------------------------------------------
# serialization: raw little-endian buffers with a JSON sidecar
# ---------------------------------------------------------------------------

_DTYPES = {"float64": "<f8", "complex128": "<c16"}


def grid_metadata(grid: QGrid | PhaseGrid) -> dict:
    if isinstance(grid, QGrid):
        return {
            "grid_type": "position",
            "axes": [[ax.n, ax.spacing, ax.center] for ax in grid.axes],
        }
    return {
        "grid_type": "phase",
        "qaxes": [[ax.n, ax.spacing, ax.center] for ax in grid.qaxes],
        "paxes": [[ax.n, ax.spacing, ax.center] for ax in grid.paxes],
    }


def save_field(basepath: str | Path, values: np.ndarray, sidecar: dict | None = None) -> None:
    """Write `<base>.bin` (raw little-endian buffer) plus `<base>.json`."""
    base = Path(basepath)
    arr = np.ascontiguousarray(values)
    if arr.dtype == np.float64:
        dtype = "float64"
    elif arr.dtype == np.complex128:
        dtype = "complex128"
    else:
        arr = arr.astype(np.complex128 if np.iscomplexobj(arr) else np.float64)
        dtype = "complex128" if np.iscomplexobj(arr) else "float64"
    arr.astype(_DTYPES[dtype]).tofile(base.with_suffix(".bin"))
    meta = {"shape": list(arr.shape), "dtype": dtype}
    meta.update(sidecar or {})
    base.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def load_field(basepath: str | Path) -> tuple[np.ndarray, dict]:
    base = Path(basepath)
    meta = json.loads(base.with_suffix(".json").read_text())
    raw = np.fromfile(base.with_suffix(".bin"), dtype=_DTYPES[meta["dtype"]])
    return raw.reshape(meta["shape"]).astype(meta["dtype"]), meta


def export_csv(path: str | Path, values: np.ndarray, coords: list[np.ndarray] | None = None,
               header: str = "") -> None:
    """Write a 1-D or 2-D real slice as CSV with leading coordinate columns."""
    arr = np.asarray(values)
    if arr.ndim == 1:
        xs = coords[0] if coords else np.arange(arr.size)
        data = np.column_stack([xs, arr.real])
        np.savetxt(path, data, delimiter=",", header=header or "x,value", comments="")
    elif arr.ndim == 2:
        xs = coords[0] if coords else np.arange(arr.shape[0])
        ys = coords[1] if coords else np.arange(arr.shape[1])
        rows = [[x, y, arr[i, j].real] for i, x in enumerate(np.ravel(xs))
                for j, y in enumerate(np.ravel(ys))]
        np.savetxt(path, rows, delimiter=",", header=header or "x,y,value", comments="")
    else:
        raise LatticeError("CSV export supports 1-D and 2-D slices only")
