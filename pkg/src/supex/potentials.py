"""Confining superexponential potential families.

All families are built from powers |x|^e evaluated as exp(e*ln|x|), with the
two-sided limit used at the singular base point: |0|^0 := 1 and |0|^e := 0 for
e > 0.  This makes the self-interacting oscillator V = alpha*|q|^q continuous
through its transition point at q = 0.

Families
--------
sso            V = alpha * |q|^q
shifted_sso    V = alpha * (|q + 1/e|^(q + 1/e) - e^(-1/e))          (min at 0, V(0) = 0)
skewed_sso     V = alpha * |beta*q|^(s*q)      (skew exponent s stored in the k slot)
right_sym_sso  V = alpha * ((qm + |q|)^(qm + |q|) - qm^qm),          qm = 1/e
power_law_sso  V = alpha * ((qm + |q|)^((qm + |q|)^beta) - qm^(qm^beta)), qm = e^(-1/beta)
opp_cos        V = |q|^(alpha + beta*cos(k*q))
opp_sin        V = |q|^(alpha + beta*sin(k*q))
opp_phase      V = |q|^(alpha + beta*sin(k*q + phi))

Every family is multiplied by the global prefactor gamma (default 1).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import NDArray

E_INV = math.exp(-1.0)

__all__ = [
    "E_INV",
    "Family",
    "PotentialSpec",
    "WellGeometry",
    "eval_potential",
    "pow_abs",
    "transition_energy",
    "locate_wells",
]


class Family(str, enum.Enum):
    """Potential family selector."""

    SSO = "sso"
    SHIFTED_SSO = "shifted_sso"
    SKEWED_SSO = "skewed_sso"
    RIGHT_SYM_SSO = "right_sym_sso"
    POWER_LAW_SSO = "power_law_sso"
    OPP_COS = "opp_cos"
    OPP_SIN = "opp_sin"
    OPP_PHASE = "opp_phase"


_OPP_FAMILIES = frozenset({Family.OPP_COS, Family.OPP_SIN, Family.OPP_PHASE})

# Parameters each family actually reads (gamma is global and always read).
_USED_PARAMS = {
    Family.SSO: frozenset({"alpha"}),
    Family.SHIFTED_SSO: frozenset({"alpha"}),
    Family.SKEWED_SSO: frozenset({"alpha", "beta", "k"}),
    Family.RIGHT_SYM_SSO: frozenset({"alpha"}),
    Family.POWER_LAW_SSO: frozenset({"alpha", "beta"}),
    Family.OPP_COS: frozenset({"alpha", "beta", "k"}),
    Family.OPP_SIN: frozenset({"alpha", "beta", "k"}),
    Family.OPP_PHASE: frozenset({"alpha", "beta", "k", "phi"}),
}

# Families whose potential is reflection symmetric for every parameter choice.
_ALWAYS_SYMMETRIC = frozenset(
    {Family.RIGHT_SYM_SSO, Family.POWER_LAW_SSO, Family.OPP_COS}
)


def pow_abs(base, exponent):
    """|base|^exponent via exp(exponent*ln|base|), with limits at base = 0.

    At base == 0 the two-sided limit convention is used: result 1 for
    exponent == 0 and 0 for exponent > 0.  A zero base with a negative
    exponent is divergent and raises ValueError.

    Overflowing values are returned as +inf (the Hamiltonian assembly
    rejects non-finite potential nodes, which signals an oversized domain).
    """
    b = np.asarray(base, dtype=float)
    e = np.asarray(np.broadcast_to(exponent, b.shape), dtype=float)
    out = np.empty_like(b)
    zero = b == 0.0
    if np.any(zero):
        ez = e[zero]
        if np.any(ez < 0.0):
            raise ValueError("pow_abs: |0|^e with e < 0 is divergent")
        out[zero] = np.where(ez == 0.0, 1.0, 0.0)
    nz = ~zero
    with np.errstate(over="ignore"):
        out[nz] = np.exp(e[nz] * np.log(np.abs(b[nz])))
    return out


@dataclass(frozen=True)
class PotentialSpec:
    """Immutable description of one potential: family plus parameters.

    Each family reads only its declared parameter subset; nonzero values for
    unused parameters trigger a warning, and invalid values for used
    parameters raise ValueError.  The global prefactor gamma multiplies the
    final potential value for every family.

    For skewed_sso the skew exponent is stored in the ``k`` slot so it does
    not collide with the global prefactor gamma.
    """

    family: Family
    alpha: float
    beta: float = 0.0
    k: float = 0.0
    phi: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        for name in ("alpha", "beta", "k", "phi", "gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not math.isfinite(self.alpha) or self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not math.isfinite(self.gamma) or self.gamma <= 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        used = _USED_PARAMS[self.family]
        if self.family in _OPP_FAMILIES or self.family is Family.SKEWED_SSO:
            if not math.isfinite(self.k) or self.k <= 0.0:
                what = "skew exponent" if self.family is Family.SKEWED_SSO else "wavevector k"
                raise ValueError(f"{self.family.value}: {what} must be positive, got {self.k}")
        if self.family is Family.POWER_LAW_SSO and self.beta <= 0.0:
            raise ValueError(f"power_law_sso: beta must be positive, got {self.beta}")
        if self.family is Family.SKEWED_SSO and self.beta == 0.0:
            raise ValueError("skewed_sso: beta (base scale) must be nonzero")
        unused = [
            name
            for name in ("beta", "k", "phi")
            if name not in used and getattr(self, name) != 0.0
        ]
        if unused:
            warnings.warn(
                f"{self.family.value} ignores parameter(s) {', '.join(unused)}",
                stacklevel=3,
            )

    def __call__(self, q):
        return eval_potential(self, q)

    @property
    def is_symmetric(self) -> bool:
        """True when V(q) = V(-q) for all q."""
        if self.family in _ALWAYS_SYMMETRIC:
            return True
        if self.family is Family.OPP_PHASE:
            # sin(k*q + phi) is even in q exactly when cos(phi) = 0.
            return abs(math.cos(self.phi)) < 1e-15
        return False

    @property
    def oscillation_period(self) -> Union[float, None]:
        """Spatial period 2*pi/k of the exponent oscillation (OPP only)."""
        if self.family in _OPP_FAMILIES:
            return 2.0 * math.pi / self.k
        return None


def eval_potential(spec: PotentialSpec, q) -> Union[float, NDArray[np.float64]]:
    """Evaluate V(q) for the given spec; scalar in, scalar out.

    Returns gamma * V_family(q).  Values are finite for every q that keeps
    the exponent*ln|base| product inside double range; past that the value
    overflows to +inf (never NaN).
    """
    scalar = np.isscalar(q) or (isinstance(q, np.ndarray) and q.ndim == 0)
    x = np.atleast_1d(np.asarray(q, dtype=float))
    fam = spec.family
    a, b, k, phi = spec.alpha, spec.beta, spec.k, spec.phi

    if fam is Family.SSO:
        v = a * pow_abs(x, x)
    elif fam is Family.SHIFTED_SSO:
        s = x + E_INV
        v = a * (pow_abs(s, s) - math.exp(-E_INV))
    elif fam is Family.SKEWED_SSO:
        v = a * pow_abs(b * x, k * x)
    elif fam is Family.RIGHT_SYM_SSO:
        s = E_INV + np.abs(x)
        v = a * (pow_abs(s, s) - E_INV**E_INV)
    elif fam is Family.POWER_LAW_SSO:
        qm = math.exp(-1.0 / b)
        s = qm + np.abs(x)
        v = a * (pow_abs(s, s**b) - qm ** (qm**b))
    elif fam is Family.OPP_COS:
        v = pow_abs(x, a + b * np.cos(k * x))
    elif fam is Family.OPP_SIN:
        v = pow_abs(x, a + b * np.sin(k * x))
    elif fam is Family.OPP_PHASE:
        v = pow_abs(x, a + b * np.sin(k * x + phi))
    else:  # pragma: no cover
        raise ValueError(f"unknown family {fam}")

    v = spec.gamma * v
    return float(v[0]) if scalar else v


def transition_energy(spec: PotentialSpec) -> float:
    """Potential value at the transition point q = 0 (unshifted coordinates).

    The transition point of V = alpha*|q|^q is the singular point where
    |q|^q -> 1; for the shifted variant the same point sits at energy
    alpha*(1 - e^(-1/e)) above the well minimum.
    """
    if spec.family is Family.SSO:
        return spec.gamma * spec.alpha
    if spec.family is Family.SHIFTED_SSO:
        return spec.gamma * spec.alpha * (1.0 - math.exp(-E_INV))
    raise ValueError(f"transition_energy is defined for sso/shifted_sso, not {spec.family.value}")


@dataclass(frozen=True)
class WellGeometry:
    """Interleaved extrema of a potential on a finite domain.

    ``well_intervals`` are bounded by consecutive maxima; the outermost
    intervals are bounded by the domain edges and kept only when they
    actually contain a minimum.  Minima and maxima strictly interleave and
    every well interval contains exactly one minimum.
    """

    minima_q: NDArray[np.float64]
    minima_v: NDArray[np.float64]
    maxima_q: NDArray[np.float64]
    maxima_v: NDArray[np.float64]
    well_intervals: NDArray[np.float64]  # shape (n_wells, 2)

    def __post_init__(self):
        allq = np.sort(np.concatenate([self.minima_q, self.maxima_q]))
        if allq.size and np.any(np.diff(allq) <= 0):
            raise ValueError("extrema positions must be strictly increasing")
        merged = np.concatenate([self.minima_q, self.maxima_q])
        kinds = np.concatenate([np.zeros(self.minima_q.size), np.ones(self.maxima_q.size)])
        order = np.argsort(merged)
        if kinds[order].size > 1 and np.any(np.diff(kinds[order]) == 0):
            raise ValueError("minima and maxima must interleave")
        for lo, hi in self.well_intervals:
            inside = (self.minima_q > lo) & (self.minima_q < hi)
            if inside.sum() != 1:
                raise ValueError("each well interval must contain exactly one minimum")

    @property
    def n_wells(self) -> int:
        return self.well_intervals.shape[0]

    def well_index(self, q: float) -> int:
        """Index of the well interval containing position q (-1 if none)."""
        for i, (lo, hi) in enumerate(self.well_intervals):
            if lo <= q <= hi:
                return i
        return -1

    def well_center(self, i: int) -> float:
        """Position of the minimum inside well i."""
        lo, hi = self.well_intervals[i]
        inside = (self.minima_q > lo) & (self.minima_q < hi)
        return float(self.minima_q[inside][0])

    def mirror_index(self, i: int, rtol: float = 0.05) -> int:
        """Index of the well whose minimum mirrors well i through q = 0.

        Falls back to i itself when no reflected partner exists (e.g. the
        central well, or an asymmetric geometry).
        """
        target = -self.well_center(i)
        centers = np.array([self.well_center(j) for j in range(self.n_wells)])
        j = int(np.argmin(np.abs(centers - target)))
        span = max(1.0, float(np.abs(centers).max()))
        if abs(centers[j] - target) <= rtol * span:
            return j
        return i


def _refine_extrema(fn, lo, hi, minimum: NDArray[np.bool_], tol: float = 1e-10):
    """Vectorized ternary search for one extremum per bracket [lo, hi]."""
    lo = lo.copy()
    hi = hi.copy()
    it = 0
    while np.max(hi - lo) > tol and it < 200:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        f1 = fn(m1)
        f2 = fn(m2)
        # for a minimum keep the lower side, for a maximum the higher one
        take_left = np.where(minimum, f1 < f2, f1 > f2)
        hi = np.where(take_left, m2, hi)
        lo = np.where(take_left, lo, m1)
        it += 1
    return 0.5 * (lo + hi)


def locate_wells(potential, domain, resolution: Union[int, None] = None) -> WellGeometry:
    """Find all interior extrema of the potential and the well intervals.

    Extrema are detected from sign changes of the sampled slope and refined
    by ternary search to 1e-10 in q.  ``potential`` may be a PotentialSpec
    or any callable V(q) on arrays.  For oscillating families the sampling
    resolution must provide at least 3 samples per period 2*pi/k.

    A domain with no interior extremum yields empty lists, which is valid
    for monotone walls.
    """
    q_lo, q_hi = float(domain[0]), float(domain[1])
    if not q_hi > q_lo:
        raise ValueError("domain must satisfy q_max > q_min")
    period = potential.oscillation_period if isinstance(potential, PotentialSpec) else None
    fn = potential if callable(potential) else (lambda x: eval_potential(potential, x))

    if resolution is None:
        resolution = 4001
        if period is not None:
            resolution = max(resolution, int(np.ceil(64.0 * (q_hi - q_lo) / period)) + 1)
    resolution = int(resolution)
    if resolution < 3:
        raise ValueError("resolution must be at least 3")
    if period is not None and resolution < 3.0 * (q_hi - q_lo) / period:
        raise ValueError("resolution below 3 samples per oscillation period")

    qs = np.linspace(q_lo, q_hi, resolution)
    vs = fn(qs)
    slope = np.diff(vs)
    ssign = np.sign(slope)
    flip = np.nonzero(ssign[:-1] * ssign[1:] < 0)[0]
    is_min = ssign[flip] < 0

    if flip.size:
        pos = _refine_extrema(fn, qs[flip], qs[flip + 2], is_min)
        vals = fn(pos)
    else:
        pos = np.empty(0)
        vals = np.empty(0)

    minima_q, minima_v = pos[is_min], vals[is_min]
    maxima_q, maxima_v = pos[~is_min], vals[~is_min]

    edges = np.concatenate([[q_lo], maxima_q, [q_hi]])
    intervals = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if np.sum((minima_q > lo) & (minima_q < hi)) == 1:
            intervals.append((lo, hi))
    return WellGeometry(
        minima_q=minima_q,
        minima_v=minima_v,
        maxima_q=maxima_q,
        maxima_v=maxima_v,
        well_intervals=np.array(intervals, dtype=float).reshape(-1, 2),
    )
