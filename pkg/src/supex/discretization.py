"""Uniform grids and the banded Hamiltonian H = -(1/2) d^2/dq^2 + V(q).

The Laplacian uses the 9-point eighth-order central stencil with Dirichlet
closure: stencil taps falling outside the grid are dropped, which keeps the
matrix symmetric and is exact for wavefunctions that vanish at the walls.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from .potentials import E_INV, Family, PotentialSpec, eval_potential

__all__ = [
    "LAPLACIAN_STENCIL",
    "Grid",
    "BandMatrix",
    "make_grid",
    "laplacian_row_coefficients",
    "auto_domain",
    "estimate_energy_for_count",
    "plan_grid",
    "assemble_hamiltonian",
    "save_band_matrix",
    "load_band_matrix",
]

HALF_BANDWIDTH = 4

# Central second-derivative stencil of order 8, c_{-4..4}; exact on
# polynomials of degree <= 9 (validated against monomials in the test suite).
LAPLACIAN_STENCIL = np.array(
    [-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560]
)


@dataclass(frozen=True)
class Grid:
    """Uniform 1D grid with inclusive endpoints."""

    q_min: float
    q_max: float
    n_points: int

    def __post_init__(self):
        if not self.q_max > self.q_min:
            raise ValueError("grid requires q_max > q_min")
        if self.n_points < 2 * HALF_BANDWIDTH + 1:
            raise ValueError(f"grid requires at least {2*HALF_BANDWIDTH + 1} points")

    @property
    def h(self) -> float:
        return (self.q_max - self.q_min) / (self.n_points - 1)

    @property
    def points(self) -> NDArray[np.float64]:
        return np.linspace(self.q_min, self.q_max, self.n_points)

    @property
    def is_symmetric(self) -> bool:
        """True when q = 0 is an exact node and the endpoints mirror."""
        span = self.q_max - self.q_min
        return (
            self.n_points % 2 == 1
            and abs(self.q_min + self.q_max) <= 1e-12 * span
        )


def make_grid(q_min: float, q_max: float, n_points: int) -> Grid:
    """Uniform grid with exact endpoint inclusion."""
    return Grid(float(q_min), float(q_max), int(n_points))


def laplacian_row_coefficients(h: float) -> NDArray[np.float64]:
    """The 9 stencil coefficients c_{-4..4}/h^2 of the second derivative."""
    if not h > 0:
        raise ValueError("h must be positive")
    return LAPLACIAN_STENCIL / h**2


@dataclass(frozen=True)
class BandMatrix:
    """Real symmetric band matrix, half-bandwidth 4, upper-diagonal storage.

    ``bands[d, :order-d]`` holds the d-th superdiagonal; the tail of each row
    is zero padding.  Only one triangle is stored, so the matrix is symmetric
    by construction.
    """

    order: int
    bands: NDArray[np.float64]  # shape (HALF_BANDWIDTH+1, order)

    def __post_init__(self):
        if self.bands.shape != (HALF_BANDWIDTH + 1, self.order):
            raise ValueError("bands must have shape (5, order)")
        if not np.all(np.isfinite(self.bands)):
            raise ValueError("band matrix entries must be finite")

    @property
    def half_bandwidth(self) -> int:
        return HALF_BANDWIDTH

    def diagonal(self, d: int) -> NDArray[np.float64]:
        """The d-th superdiagonal at its natural length order-d."""
        return self.bands[d, : self.order - d]

    def to_banded_upper(self) -> NDArray[np.float64]:
        """LAPACK upper-band layout: ab[u + i - j, j] = H[i, j]."""
        u = HALF_BANDWIDTH
        ab = np.zeros((u + 1, self.order))
        ab[u] = self.bands[0]
        for d in range(1, u + 1):
            ab[u - d, d:] = self.bands[d, : self.order - d]
        return ab

    def to_dense(self) -> NDArray[np.float64]:
        a = np.diag(self.bands[0])
        for d in range(1, HALF_BANDWIDTH + 1):
            v = self.bands[d, : self.order - d]
            a += np.diag(v, k=d) + np.diag(v, k=-d)
        return a

    def matvec(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        """H @ x for a vector or a (order, m) block of vectors."""
        y = self.bands[0][:, None] * x if x.ndim == 2 else self.bands[0] * x
        for d in range(1, HALF_BANDWIDTH + 1):
            v = self.bands[d, : self.order - d]
            c = v[:, None] if x.ndim == 2 else v
            y[:-d] += c * x[d:]
            y[d:] += c * x[:-d]
        return y

    def norm_inf(self) -> float:
        """Exact infinity norm (max absolute row sum)."""
        s = np.abs(self.bands[0]).copy()
        for d in range(1, HALF_BANDWIDTH + 1):
            v = np.abs(self.bands[d, : self.order - d])
            s[:-d] += v
            s[d:] += v
        return float(s.max())


def assemble_hamiltonian(grid: Grid, potential) -> BandMatrix:
    """H_ij = -(1/2)*stencil(i,j) + V(q_i)*delta_ij with Dirichlet closure.

    ``potential`` may be a PotentialSpec or a callable V(q) on arrays.
    Raises if the potential overflows at any node, naming the node; that
    signals a domain wider than double precision supports.
    """
    fn = potential if callable(potential) and not isinstance(potential, PotentialSpec) else (
        lambda x: eval_potential(potential, x)
    )
    v = np.asarray(fn(grid.points), dtype=float)
    if v.shape != (grid.n_points,):
        raise ValueError("potential evaluation must return one value per node")
    bad = np.nonzero(~np.isfinite(v))[0]
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            f"potential overflows at node {i} (q = {grid.points[i]:g}); domain too wide"
        )
    c = laplacian_row_coefficients(grid.h)
    n = grid.n_points
    bands = np.zeros((HALF_BANDWIDTH + 1, n))
    bands[0] = -0.5 * c[HALF_BANDWIDTH] + v
    for d in range(1, HALF_BANDWIDTH + 1):
        bands[d, : n - d] = -0.5 * c[HALF_BANDWIDTH + d]
    return BandMatrix(order=n, bands=bands)


# ---------------------------------------------------------------------------
# domain planning


def _confinement_info(potential):
    """(fn, center, left_limit, right_limit, period) for the outward scan.

    The sso-type families are confining on one side only: past the barrier
    crest the potential decays again, so the scan (and any Dirichlet wall)
    must stay inside the crest.
    """
    if isinstance(potential, PotentialSpec):
        fam = potential.family
        fn = lambda x: eval_potential(potential, x)  # noqa: E731
        period = potential.oscillation_period
        if fam is Family.SSO:
            return fn, E_INV, -E_INV, math.inf, None
        if fam is Family.SHIFTED_SSO:
            return fn, 0.0, -2.0 * E_INV, math.inf, None
        if fam is Family.SKEWED_SSO:
            crest = 1.0 / (abs(potential.beta) * math.e * potential.k) * potential.k
            # extrema of exp(k*q*ln|beta*q|) sit at |q| = 1/(|beta|*e)
            crest = 1.0 / (abs(potential.beta) * math.e)
            return fn, crest, -crest, math.inf, None
        return fn, 0.0, -math.inf, math.inf, period
    return potential, 0.0, -math.inf, math.inf, None


def auto_domain(potential, target_energy: float, pad: float = 1.3) -> Tuple[float, float]:
    """Dirichlet wall positions enclosing all classical motion below target_energy.

    Scans outward from the confining envelope's minimum, takes the outermost
    classical turning point V(q) = target_energy on each side (bisected to
    ~1e-12 relative), and extends it by ``pad`` in distance from the center.
    For sso-type families the barrier-side wall is placed at the barrier
    crest, where the bound states are maximally suppressed.
    """
    if not pad >= 1.0:
        raise ValueError("pad must be >= 1")
    fn, center, left_lim, right_lim, period = _confinement_info(potential)
    e0 = float(fn(np.array([center]))[0] if not np.isscalar(fn(center)) else fn(center))
    if not target_energy > e0:
        raise ValueError("target_energy must exceed the potential minimum")

    def outermost_crossing(direction: int, limit: float) -> float:
        step0 = period / 64.0 if period is not None else 1e-3
        q_prev = center
        v_prev = e0
        last_bracket = None
        step = step0
        run = 0.0  # contiguous distance with V >= E since the last crossing
        q = center
        while True:
            q = q_prev + direction * step
            if direction * q > direction * limit:
                q = limit
            v = float(fn(q))
            if (v_prev - target_energy) * (v - target_energy) < 0 or (
                v >= target_energy and v_prev < target_energy
            ):
                last_bracket = (q_prev, q)
                run = 0.0
            elif v >= target_energy:
                run += abs(q - q_prev)
            else:
                run = 0.0
            if last_bracket is not None and v >= target_energy:
                done_run = 2.0 * period if period is not None else 0.0
                if run >= done_run:
                    break
            if q == limit:
                if last_bracket is None:
                    raise ValueError(
                        "potential never reaches target_energy inside its confining range"
                    )
                break
            if abs(q - center) > 1e7:
                raise ValueError("potential never reaches target_energy on the scan range")
            q_prev, v_prev = q, v
            if period is None:
                step = min(step * 1.05, 0.05 * max(1.0, abs(q - center)))
        lo, hi = last_bracket
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if (float(fn(lo)) - target_energy) * (float(fn(mid)) - target_energy) <= 0:
                hi = mid
            else:
                lo = mid
            if abs(hi - lo) <= 1e-13 * max(1.0, abs(mid)):
                break
        return 0.5 * (lo + hi)

    tp_r = outermost_crossing(+1, right_lim)
    tp_l = outermost_crossing(-1, left_lim)
    q_hi = center + pad * (tp_r - center)
    q_lo = center + pad * (tp_l - center)
    if math.isfinite(left_lim):
        q_lo = left_lim  # wall at the barrier crest
    if math.isfinite(right_lim):
        q_hi = min(q_hi, right_lim)
    return q_lo, q_hi


def estimate_energy_for_count(potential, count: int, margin: float = 1.0) -> float:
    """Energy below which the semiclassical phase integral counts ``count`` states.

    Uses N(E) = (1/pi) * integral sqrt(2*(E - V)) dq + 1/2 over the confining
    range; accurate to about one state for smooth confining wells.
    """
    fn, center, left_lim, right_lim, period = _confinement_info(potential)
    target = float(count) * margin

    def n_of(E: float) -> float:
        try:
            lo, hi = auto_domain(potential, E, pad=1.0)
        except ValueError:
            return math.inf if E > 0 else 0.0
        ns = 20001
        if period is not None:
            ns = max(ns, int(np.ceil(64 * (hi - lo) / period)) + 1)
        qs = np.linspace(lo, hi, ns)
        p = np.sqrt(np.maximum(2.0 * (E - np.asarray(fn(qs), dtype=float)), 0.0))
        return float(np.trapezoid(p, qs) / math.pi + 0.5)

    e0 = float(fn(center))
    span = 1.0 + abs(e0)
    lo_e, hi_e = e0, e0 + span
    it = 0
    while n_of(hi_e) < target:
        span *= 2.0
        hi_e = e0 + span
        it += 1
        if it > 200:
            raise ValueError("state-count target unreachable inside the confining range")
    for _ in range(60):
        mid = 0.5 * (lo_e + hi_e)
        if n_of(mid) < target:
            lo_e = mid
        else:
            hi_e = mid
    return hi_e


def plan_grid(
    potential,
    target_energy: float,
    pad: float = 1.3,
    points_per_wavelength: float = 20.0,
) -> Grid:
    """Production grid: auto domain plus the de Broglie resolution rule.

    The spacing satisfies h <= 2*pi/(ppw*sqrt(2*E)) at the highest target
    energy.  For reflection-symmetric potentials the domain is symmetrized
    and the point count made odd, so q = 0 is an exact node and eigenstate
    mirroring needs no interpolation.
    """
    q_lo, q_hi = auto_domain(potential, target_energy, pad=pad)
    symmetric = (
        isinstance(potential, PotentialSpec)
        and potential.family in (Family.OPP_COS, Family.OPP_SIN, Family.OPP_PHASE,
                                 Family.RIGHT_SYM_SSO, Family.POWER_LAW_SSO)
    )
    h_max = 2.0 * math.pi / (points_per_wavelength * math.sqrt(2.0 * target_energy))
    if symmetric:
        half = max(abs(q_lo), abs(q_hi))
        n = int(np.ceil(2.0 * half / h_max)) + 1
        n += 1 - n % 2  # odd point count puts a node exactly at q = 0
        n = max(n, 9 + (1 - 9 % 2))
        return Grid(-half, half, max(n, 9))
    n = max(int(np.ceil((q_hi - q_lo) / h_max)) + 1, 9)
    return Grid(q_lo, q_hi, n)


# ---------------------------------------------------------------------------
# band matrix binary dump (debugging aid)
#
# layout: int64 LE order, int64 LE half_bandwidth, then diagonals 0..4 as
# contiguous float64 LE at their natural lengths (order, order-1, ...).


def save_band_matrix(H: BandMatrix, path) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack("<qq", H.order, H.half_bandwidth))
        for d in range(H.half_bandwidth + 1):
            f.write(H.diagonal(d).astype("<f8").tobytes())


def load_band_matrix(path) -> BandMatrix:
    with open(path, "rb") as f:
        order, hb = struct.unpack("<qq", f.read(16))
        if hb != HALF_BANDWIDTH:
            raise ValueError(f"unsupported half-bandwidth {hb}")
        bands = np.zeros((hb + 1, order))
        for d in range(hb + 1):
            raw = f.read(8 * (order - d))
            bands[d, : order - d] = np.frombuffer(raw, dtype="<f8")
    return BandMatrix(order=order, bands=bands)
