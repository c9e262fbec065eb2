"""Transfer-matrix cocycle: Lyapunov exponents and quantized acceleration.

The one-step transfer matrix of the eigenvalue equation at energy E is

    A(theta) = [[E - f(theta), -1], [1, 0]],

iterated along the rotation orbit theta, theta+alpha, ....  The phase is
complexified, theta + i*eps, and the central quantity is the strip Lyapunov
exponent L(E, eps) = lim (1/n) int log ||A_n(theta + i eps)|| dtheta.  Its
right derivative in eps, divided by 2 pi, is an integer (the acceleration);
detecting that integer from finite-n data is what this module is for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import TWO_PI, Potential


@dataclass(frozen=True)
class CocycleParams:
    """Frozen description of one cocycle evaluation."""

    potential: Potential
    alpha: float          # rotation frequency, in (0, 1)
    E: float              # spectral parameter
    eps: float = 0.0      # imaginary shift of the phase, |eps| < eta

    def __post_init__(self):
        if abs(self.eps) >= self.potential.eta:
            raise ValueError(
                f"|eps| = {abs(self.eps)} must stay below eta = {self.potential.eta}")


def one_step(potential: Potential, theta: float, E: float,
             eps: float = 0.0) -> np.ndarray:
    """The single transfer matrix A(theta + i eps) as a 2x2 complex array."""
    f = potential.eval_theta(theta, eps)
    return np.array([[E - f, -1.0], [1.0, 0.0]], dtype=np.complex128)


def transfer_log_norms(
    potential: Potential,
    alpha: float,
    thetas: np.ndarray,
    E: float,
    eps: float,
    n: int,
    return_matrices: bool = False,
):
    """log ||A_n(theta + i eps)|| for a batch of phases, sup-norm renormalized.

    The running product is divided by its largest entry modulus after every
    step; the discarded factors accumulate in a log so products of length
    thousands never overflow.  Returns the array of log-norms, and optionally
    the unit-normalized residual matrices stacked as (K, 2, 2).
    """
    if n < 1:
        raise ValueError("product length n must be >= 1")
    if abs(eps) >= potential.eta:
        raise ValueError("|eps| must stay below the declared strip width")
    thetas = np.asarray(thetas, dtype=np.float64)
    K = len(thetas)
    a = np.ones(K, dtype=np.complex128)
    b = np.zeros(K, dtype=np.complex128)
    c = np.zeros(K, dtype=np.complex128)
    d = np.ones(K, dtype=np.complex128)
    acc = np.zeros(K, dtype=np.float64)
    for j in range(n):
        ph = np.mod(thetas + j * alpha, 1.0)
        f = potential.eval_theta(ph, eps) if eps != 0.0 else potential.eval_theta(ph)
        t = E - f
        a, b, c, d = t * a - c, t * b - d, a, b
        m = np.maximum(np.maximum(np.abs(a), np.abs(b)),
                       np.maximum(np.abs(c), np.abs(d)))
        a /= m
        b /= m
        c /= m
        d /= m
        acc += np.log(m)
    if return_matrices:
        mats = np.stack([np.stack([a, b], axis=-1),
                         np.stack([c, d], axis=-1)], axis=-2)
        return acc, mats
    return acc


def transfer_product(params: CocycleParams, theta: float, n: int):
    """(log ||A_n||, residual unit matrix) at a single phase."""
    logs, mats = transfer_log_norms(
        params.potential, params.alpha, np.array([theta]),
        params.E, params.eps, n, return_matrices=True)
    return float(logs[0]), mats[0]


# ----------------------------------------------------------------------
# Lyapunov averages
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LyapunovEstimate:
    """Phase-averaged finite-n Lyapunov exponent."""

    value: float             # L_n(E, eps)
    E: float
    eps: float
    n: int
    quadrature_points: int   # K, equispaced phases
    std_error: float         # sample std of the integrand / sqrt(K)


def lyapunov_n(
    potential: Potential,
    alpha: float,
    E: float,
    n: int,
    eps: float = 0.0,
    K: int = 256,
) -> LyapunovEstimate:
    """L_n(E, eps): trapezoid average of (1/n) log||A_n|| over K phases.

    For a periodic integrand the equispaced trapezoid rule is just the grid
    mean; K should be a power of two so refinement nests.
    """
    thetas = np.arange(K, dtype=np.float64) / K
    vals = transfer_log_norms(potential, alpha, thetas, E, eps, n) / n
    return LyapunovEstimate(
        value=float(np.mean(vals)), E=float(E), eps=float(eps), n=n,
        quadrature_points=K,
        std_error=float(np.std(vals) / math.sqrt(K)))


def lyapunov_n_auto(
    potential: Potential,
    alpha: float,
    E: float,
    n: int,
    eps: float = 0.0,
    K0: int = 128,
    tol: float = 1e-4,
    K_cap: int = 16384,
) -> LyapunovEstimate:
    """Double the phase grid until successive averages agree.

    Stops when |L(K) - L(2K)| < max(tol, std_error) or the grid cap is hit;
    returns the finest estimate.
    """
    est = lyapunov_n(potential, alpha, E, n, eps, K0)
    K = K0
    while 2 * K <= K_cap:
        K *= 2
        finer = lyapunov_n(potential, alpha, E, n, eps, K)
        if abs(finer.value - est.value) < max(tol, finer.std_error):
            return finer
        est = finer
    return est


def lyapunov_extrapolate(
    est_n: LyapunovEstimate, est_2n: LyapunovEstimate
) -> float:
    """Richardson step assuming an O(1/n) tail: 2 L_{2n} - L_n."""
    if est_2n.n != 2 * est_n.n:
        raise ValueError("extrapolation expects the n and 2n estimates")
    return 2.0 * est_2n.value - est_n.value


# ----------------------------------------------------------------------
# acceleration and strata
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AccelerationEstimate:
    """Slope of eps -> L(E, eps) over a window, in units of 2 pi.

    The limiting slope is an integer; `residual` is the distance of the
    fitted slope to the nearest integer and doubles as the detector for a
    slope break inside the window (quantization plateaus are affine)."""

    E: float
    n: int
    quadrature_points: int
    eps_grid: Tuple[float, ...]
    L_values: Tuple[float, ...]
    raw_slope: float           # d L / d eps / (2 pi), least squares
    kappa: int                 # nearest integer
    residual: float            # |raw_slope - kappa|

    @property
    def non_affine(self) -> bool:
        """True when the window straddles a slope break and needs refining."""
        return self.residual > 0.25


def acceleration(
    potential: Potential,
    alpha: float,
    E: float,
    eps_grid: Sequence[float],
    n: int = 512,
    K: int = 256,
) -> AccelerationEstimate:
    """Fit the quantized slope of the strip Lyapunov exponent.

    All grid points must be nonnegative; evenness of L in eps means the
    right derivative is the only free one."""
    eps_grid = sorted(float(e) for e in eps_grid)
    if len(eps_grid) < 2:
        raise ValueError("need at least two eps values to fit a slope")
    if eps_grid[0] < 0:
        raise ValueError("eps grid must be nonnegative")
    L_vals = [lyapunov_n(potential, alpha, E, n, e, K).value for e in eps_grid]
    slope = float(np.polyfit(eps_grid, L_vals, 1)[0]) / TWO_PI
    kappa = int(round(slope))
    return AccelerationEstimate(
        E=float(E), n=n, quadrature_points=K,
        eps_grid=tuple(eps_grid), L_values=tuple(L_vals),
        raw_slope=slope, kappa=kappa, residual=abs(slope - kappa))


@dataclass(frozen=True)
class StratumRecord:
    """Classification of one energy by (L, acceleration)."""

    E: float
    L0: float        # Lyapunov exponent at eps = 0
    kappa: int       # acceleration at eps = 0+
    label: str       # "S<l>+", "S<l>0", "subcritical", "off-spectrum", "unclassified"


def classify_stratum(
    E: float,
    L0: float,
    kappa: int,
    tau_pos: float = 0.05,
    non_affine: bool = False,
    in_spectrum: Optional[bool] = None,
) -> StratumRecord:
    """Assign the stratum label from the pair (L(E,0), kappa(E,0)).

    Acceleration l-1 puts E in the l-th stratum; the + / 0 superscript
    records whether L clears the positivity threshold tau_pos.  Spectrum
    membership is decided elsewhere (finite-volume eigenvalue clusters) and
    passed in, since uniform hyperbolicity is not tested here."""
    if in_spectrum is False:
        label = "off-spectrum"
    elif non_affine:
        label = "unclassified"
    elif kappa == 0:
        label = "subcritical"
    else:
        level = kappa + 1
        label = f"S{level}+" if L0 > tau_pos else f"S{level}0"
    return StratumRecord(E=float(E), L0=float(L0), kappa=int(kappa), label=label)


def strata_measure(
    records: Sequence[StratumRecord], cell_width: float
) -> Dict[str, float]:
    """Lebesgue measure of each label: cell width times cell count.

    Records are assumed to sit on a uniform energy grid of the given width."""
    out: Dict[str, float] = {}
    for rec in records:
        out[rec.label] = out.get(rec.label, 0.0) + cell_width
    return out
