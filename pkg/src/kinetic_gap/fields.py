"""Distribution fields over (torus mode, velocity lattice) and the equilibrium."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import VelocityGrid

Mode = tuple[int, int, int]


def _neg(ell: Mode) -> Mode:
    return (-ell[0], -ell[1], -ell[2])


@dataclass
class DistributionField:
    """Complex field per torus mode over the velocity lattice.

    Physical reality of f(x, v) corresponds to modes[-l] == conj(modes[l]);
    only one representative per +-l pair needs to be stored, the other is
    materialized on demand.
    """

    grid: VelocityGrid
    modes: dict[Mode, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.grid.n,) * 3
        for ell, arr in list(self.modes.items()):
            if arr.shape != shape:
                raise ValueError(f"mode {ell} has shape {arr.shape}, expected {shape}")
            self.modes[ell] = np.asarray(arr, dtype=np.complex128)

    # -- access ------------------------------------------------------------
    def mode(self, ell: Mode) -> np.ndarray:
        """Mode array, synthesizing conj(modes[-l]) when only -l is stored."""
        if ell in self.modes:
            return self.modes[ell]
        n = _neg(ell)
        if n in self.modes:
            return np.conj(self.modes[n])
        return np.zeros((self.grid.n,) * 3, dtype=np.complex128)

    def mode_set(self) -> list[Mode]:
        """All modes with stored or implied (conjugate) content."""
        out = set(self.modes)
        out.update(_neg(m) for m in self.modes)
        return sorted(out)

    @property
    def ell0(self) -> np.ndarray:
        return self.mode((0, 0, 0))

    # -- algebra -----------------------------------------------------------
    def copy(self) -> "DistributionField":
        return DistributionField(self.grid, {m: a.copy() for m, a in self.modes.items()})

    def __add__(self, other: "DistributionField") -> "DistributionField":
        if other.grid is not self.grid and other.grid != self.grid:
            raise ValueError("grid mismatch")
        out = {}
        for m in set(self.mode_set()) | set(other.mode_set()):
            out[m] = self.mode(m) + other.mode(m)
        return DistributionField(self.grid, out)

    def __sub__(self, other: "DistributionField") -> "DistributionField":
        return self + (other * (-1.0))

    def __mul__(self, a) -> "DistributionField":
        return DistributionField(self.grid, {m: arr * a for m, arr in self.modes.items()})

    __rmul__ = __mul__

    def l2(self) -> float:
        """L2(dx dv) norm using Parseval over the torus modes."""
        tot = 0.0
        for m in self.mode_set():
            tot += np.sum(np.abs(self.mode(m)) ** 2)
        return float(np.sqrt(tot * self.grid.h ** 3))

    def reality_defect(self) -> float:
        """max |modes[-l] - conj(modes[l])| over stored pairs (0 when consistent)."""
        worst = 0.0
        for m, arr in self.modes.items():
            n = _neg(m)
            if n in self.modes:
                worst = max(worst, float(np.max(np.abs(self.modes[n] - np.conj(arr)))))
        return worst

    def physical_on(self, x_points: np.ndarray) -> np.ndarray:
        """Evaluate f(x, v) at given x sample points, shape (len(x), n, n, n); real part."""
        out = np.zeros((len(x_points), self.grid.n, self.grid.n, self.grid.n))
        for m in self.mode_set():
            arr = self.mode(m)
            ph = np.exp(2j * np.pi * (x_points @ np.asarray(m, dtype=float)))
            out += np.real(ph[:, None, None, None] * arr[None])
        return out


def maxwellian(grid: VelocityGrid) -> DistributionField:
    """Normalized equilibrium (2 pi)^(-3/2) exp(-|v|^2 / 2) at mode l = 0."""
    mu = maxwellian_array(grid)
    return DistributionField(grid, {(0, 0, 0): mu.astype(np.complex128)})


def maxwellian_array(grid: VelocityGrid) -> np.ndarray:
    return (2.0 * np.pi) ** (-1.5) * np.exp(-grid.vsq / 2.0)


# ---------------------------------------------------------------------------
# Kinetic-factor splitting
# ---------------------------------------------------------------------------

def chi_profile(r: np.ndarray, R: float) -> np.ndarray:
    """Smooth cutoff: 1 on [0, R], 0 beyond 2R, C^inf glue in between.

    Derivatives satisfy |d^k chi| <= C <r>^-k with C independent of R for
    R >= 1 (the regime used by the splitting experiments).
    """
    r = np.asarray(r, dtype=float)
    t = (r - R) / R
    out = np.empty_like(t)

    def psi(x):
        with np.errstate(over="ignore", under="ignore", divide="ignore"):
            return np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)

    a, b = psi(1.0 - t), psi(t)
    mid = (t > 0.0) & (t < 1.0)
    out[t <= 0.0] = 1.0
    out[t >= 1.0] = 0.0
    with np.errstate(invalid="ignore"):
        out[mid] = (a / (a + b))[mid]
    return out


@dataclass(frozen=True)
class SplitParams:
    """Cutoff radius R and the smooth profile chi_R splitting |u|^gamma in two."""

    R: float

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError(f"R must be positive, got {self.R}")

    def chi(self, r) -> np.ndarray:
        return chi_profile(np.asarray(r, dtype=float), self.R)


def kinetic_factor(dist: np.ndarray, gamma: float, variant: str = "full",
                   sp: SplitParams | None = None,
                   delta: float | None = None, chi_delta=None) -> np.ndarray:
    """Kinetic factor per displacement distance |d|.

    variant:
      full  -> |u|^gamma
      R     -> |u|^gamma chi_R(|u|)             (needs sp)
      Rbar  -> |u|^gamma (1 - chi_R(|u|))       (needs sp)
      phi1  -> |u|^gamma chi_{delta<=|u|<=1/delta}   (needs delta)
      phi2  -> |u|^gamma (1 - chi_{delta<=|u|<=1/delta})

    The pairs (R, Rbar) and (phi1, phi2) partition `full` exactly in floating
    point: the complement is computed as full - primary.
    """
    dist = np.asarray(dist, dtype=float)
    base = np.where(dist > 0.0, dist, 1.0) ** gamma
    base = np.where(dist > 0.0, base, 0.0)
    if variant == "full":
        return base
    if variant in ("R", "Rbar"):
        if sp is None:
            raise ValueError("variant R/Rbar requires SplitParams")
        main = base * sp.chi(dist)
        return main if variant == "R" else base - main
    if variant in ("phi1", "phi2"):
        if delta is None:
            raise ValueError("variant phi1/phi2 requires delta")
        main = base * smooth_band(dist, delta)
        return main if variant == "phi1" else base - main
    raise ValueError(f"unknown kinetic-factor variant {variant!r}")


def smooth_band(r: np.ndarray, delta: float) -> np.ndarray:
    """Smooth version of the indicator of {delta <= r <= 1/delta}."""
    r = np.asarray(r, dtype=float)
    # rise over [delta/2, delta], fall over [1/delta, 2/delta]
    lo = 1.0 - chi_profile(r, delta / 2.0)       # 0 below delta/2, 1 above delta
    hi = chi_profile(r, 1.0 / delta)             # 1 below 1/delta, 0 above 2/delta
    return lo * hi
