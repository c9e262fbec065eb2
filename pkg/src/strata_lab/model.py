"""Quasi-periodic model data: trigonometric potentials and irrational frequencies.

The operators studied here are discrete Schrodinger operators on the line
whose potential is a real trigonometric polynomial sampled along an
irrational rotation,

    (H phi)_j = phi_{j+1} + phi_{j-1} + f(theta + j*alpha) * phi_j.

This module holds the two static ingredients, the potential f and the
frequency alpha, together with the small-divisor checks (Diophantine and
phase-resonance conditions) that the localization diagnostics rely on.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi

# Golden rotation number, the default frequency for every experiment.
GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0


def torus_dist(x):
    """Distance from x to the nearest integer (sup metric on R/Z).

    Accepts scalars or arrays.
    """
    frac = np.mod(x, 1.0)
    return np.minimum(frac, 1.0 - frac)


# ----------------------------------------------------------------------
# potential
# ----------------------------------------------------------------------

class Potential:
    """Real trigonometric polynomial f(theta) = sum_k c_k e^{2 pi i k theta}.

    Coefficients are a finite family {c_k : |k| <= k0}.  Real-valuedness on
    the circle forces c_{-k} = conj(c_k); the constructor rejects data that
    violates this beyond roundoff.  `eta` is the half-width (in the variable
    theta) of the horizontal strip the analytic extension will be evaluated
    on; the Laurent form converges everywhere, so `eta` is a declared working
    band rather than a convergence radius, and evaluation outside it is
    refused to keep downstream error budgets honest.

    Instances are immutable; all mutators return new objects.
    """

    _REALITY_TOL = 1e-12

    def __init__(self, coeffs: Mapping[int, complex], eta: float = 0.5):
        if not eta > 0.0:
            raise ValueError(f"strip half-width eta must be positive, got {eta}")
        items = sorted((int(k), complex(v)) for k, v in coeffs.items())
        ks = np.array([k for k, _ in items], dtype=np.int64)
        cs = np.array([v for _, v in items], dtype=np.complex128)
        keep = np.abs(cs) > 0.0
        ks, cs = ks[keep], cs[keep]
        scale = float(np.max(np.abs(cs))) if len(cs) else 1.0
        # reality: c_{-k} must equal conj(c_k) for every index present
        lookup = dict(zip(ks.tolist(), cs.tolist()))
        for k, c in lookup.items():
            partner = lookup.get(-k, 0.0 + 0.0j)
            if abs(partner - c.conjugate()) > self._REALITY_TOL * scale:
                raise ValueError(
                    f"coefficients are not a real function: c_{-k} != conj(c_{k})"
                )
        self._ks = ks
        self._cs = cs
        self._eta = float(eta)
        self._k0 = int(np.max(np.abs(ks))) if len(ks) else 0

    # -- basic accessors ------------------------------------------------

    @property
    def eta(self) -> float:
        return self._eta

    @property
    def k0(self) -> int:
        """Largest frequency present (degree of the trigonometric polynomial)."""
        return self._k0

    def coeff(self, k: int) -> complex:
        idx = np.nonzero(self._ks == k)[0]
        return complex(self._cs[idx[0]]) if len(idx) else 0.0 + 0.0j

    def coeffs_dict(self) -> Dict[int, complex]:
        return dict(zip(self._ks.tolist(), self._cs.tolist()))

    def laurent_coeffs(self) -> np.ndarray:
        """Dense coefficient vector for exponents -k0 .. k0 (ascending)."""
        out = np.zeros(2 * self._k0 + 1, dtype=np.complex128)
        out[self._ks + self._k0] = self._cs
        return out

    @property
    def is_even(self) -> bool:
        """True when f(-theta) = f(theta), i.e. c_k = c_{-k} for all k."""
        lookup = dict(zip(self._ks.tolist(), self._cs.tolist()))
        scale = max((abs(c) for c in lookup.values()), default=1.0)
        return all(
            abs(c - lookup.get(-k, 0.0 + 0.0j)) <= self._REALITY_TOL * scale
            for k, c in lookup.items()
        )

    def __repr__(self) -> str:
        terms = ", ".join(f"{k}: {c:.6g}" for k, c in self.coeffs_dict().items())
        return f"Potential({{{terms}}}, eta={self._eta})"

    # -- evaluation -------------------------------------------------------

    def eval_z(self, z):
        """Evaluate the Laurent form sum_k c_k z^k at complex z (scalar or array).

        z must lie in the closed annulus e^{-2 pi eta} <= |z| <= e^{2 pi eta}.
        """
        z = np.asarray(z, dtype=np.complex128)
        r = np.abs(z)
        lim = math.exp(TWO_PI * self._eta)
        if np.any(r > lim * (1 + 1e-9)) or np.any(r < (1 - 1e-9) / lim):
            raise ValueError("evaluation point outside the declared annulus")
        out = np.zeros_like(z)
        for k, c in zip(self._ks.tolist(), self._cs.tolist()):
            out = out + c * z ** k
        return out if out.ndim else complex(out)

    def eval_theta(self, theta, eps: float = 0.0):
        """Evaluate f at the (possibly complexified) phase theta + i*eps.

        For eps == 0 the result is real (imaginary part discarded, it is
        roundoff by the reality constraint).  For eps != 0 the result is the
        value of the analytic extension, a complex number.
        """
        theta = np.asarray(theta, dtype=np.float64)
        if eps == 0.0:
            out = np.zeros(theta.shape, dtype=np.float64)
            for k, c in zip(self._ks.tolist(), self._cs.tolist()):
                if k < 0:
                    continue
                ang = TWO_PI * k * theta
                if k == 0:
                    out = out + c.real
                else:
                    # c_k e^{ik.} + conj pair collapse to a real cosine form
                    out = out + 2.0 * (c.real * np.cos(ang) - c.imag * np.sin(ang))
            return out if out.ndim else float(out)
        if abs(eps) > self._eta * (1 + 1e-12):
            raise ValueError("phase imaginary part exceeds the declared strip")
        z = np.exp(2j * math.pi * (theta + 1j * eps))
        return self.eval_z(z)

    # -- constructors / serialization --------------------------------------

    @classmethod
    def amo(cls, coupling: float, eta: float = 0.5) -> "Potential":
        """Almost Mathieu potential f(theta) = 2*coupling*cos(2 pi theta)."""
        lam = float(coupling)
        return cls({1: lam, -1: lam}, eta=eta)

    @classmethod
    def zero(cls, eta: float = 0.5) -> "Potential":
        """Free potential f = 0 (the discrete Laplacian)."""
        return cls({}, eta=eta)

    @classmethod
    def truncate(
        cls, coeffs: Mapping[int, complex], k0: int, eta: float = 0.5
    ) -> Tuple["Potential", float]:
        """Keep only |k| <= k0 and return (potential, tail bound).

        The discarded tail satisfies |f - f_trunc| <= sum_{|k|>k0} |c_k| on
        the real phase; the bound is returned so callers can budget for it.
        """
        kept = {k: v for k, v in coeffs.items() if abs(int(k)) <= k0}
        tail = sum(abs(v) for k, v in coeffs.items() if abs(int(k)) > k0)
        return cls(kept, eta=eta), float(tail)

    def to_dict(self) -> dict:
        return {
            "coeffs": [[int(k), c.real, c.imag] for k, c in self.coeffs_dict().items()],
            "eta": self._eta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Potential":
        coeffs = {int(k): complex(re, im) for k, re, im in data["coeffs"]}
        return cls(coeffs, eta=float(data.get("eta", 0.5)))

    @classmethod
    def from_preset(cls, text: str, eta: float = 0.5) -> "Potential":
        """Parse preset strings:  "zero"  or  "amo(<coupling>)"."""
        s = text.strip().lower()
        if s == "zero":
            return cls.zero(eta=eta)
        if s.startswith("amo(") and s.endswith(")"):
            return cls.amo(float(s[4:-1]), eta=eta)
        raise ValueError(f"unknown potential preset {text!r}")


# ----------------------------------------------------------------------
# frequency
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Frequency:
    """An irrational rotation number with its continued-fraction data.

    The expansion alpha = [0; a1, a2, ...] is computed by the Gauss map up
    to `depth` terms, stopping early if the remainder vanishes to machine
    precision (the float was a small rational) or a partial quotient
    overflows the reliable range of a double.
    """

    alpha: float                      # the rotation number, in (0, 1)
    quotients: Tuple[int, ...]        # partial quotients a1, a2, ...
    convergents: Tuple[Tuple[int, int], ...]  # (p_k, q_k), q ascending
    terminated: bool                  # expansion ended exactly: rational input

    _MAX_QUOTIENT = 1e14

    def __init__(self, alpha: float, depth: int = 40):
        alpha = float(alpha)
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"frequency must lie in (0, 1), got {alpha}")
        quots: List[int] = []
        convs: List[Tuple[int, int]] = []
        # p, q recurrences seeded with the standard virtual terms
        p_prev, q_prev, p_cur, q_cur = 1, 0, 0, 1
        x = alpha
        terminated = False
        for _ in range(depth):
            inv = 1.0 / x
            a = int(math.floor(inv))
            if a < 1 or a > self._MAX_QUOTIENT:
                break
            quots.append(a)
            p_prev, p_cur = p_cur, a * p_cur + p_prev
            q_prev, q_cur = q_cur, a * q_cur + q_prev
            convs.append((p_cur, q_cur))
            x = inv - a
            if x < 1e-15:
                terminated = True
                break
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "quotients", tuple(quots))
        object.__setattr__(self, "convergents", tuple(convs))
        object.__setattr__(self, "terminated", terminated)

    @classmethod
    def golden(cls) -> "Frequency":
        return cls(GOLDEN_MEAN)

    @classmethod
    def from_quotients(cls, quots: Sequence[int]) -> "Frequency":
        """Build the value of [0; a1, a2, ...] and re-expand it."""
        x = 0.0
        for a in reversed(list(quots)):
            x = 1.0 / (a + x)
        return cls(x)

    def denominators(self, n_max: int) -> List[int]:
        return [q for _, q in self.convergents if q <= n_max]


# ----------------------------------------------------------------------
# small-divisor checks
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SmallDivisorReport:
    """Outcome of a Diophantine or phase-resonance scan."""

    ok: bool            # condition held for every index scanned
    worst_n: int        # index minimizing dist/threshold
    worst_dist: float   # torus distance at the worst index
    threshold: float    # required lower bound at the worst index
    n_max: int          # scan range

    @property
    def margin(self) -> float:
        """dist/threshold at the worst index; >= 1 means the condition holds."""
        return self.worst_dist / self.threshold if self.threshold > 0 else math.inf


def diophantine_check(
    freq: Frequency, c: float = 0.1, a: float = 2.0, n_max: int = 100000
) -> SmallDivisorReport:
    """Test ||n*alpha|| >= c / (n (log n)^a) for 2 <= n <= n_max.

    Indices 2..1000 are scanned exhaustively.  Beyond that only convergent
    denominators and their small multiples are tested: best rational
    approximations occur exactly at the denominators, and both ||n alpha||
    and the threshold are monotone between them, so any violator yields a
    violating denominator below it.
    """
    if freq.terminated:
        raise ValueError("frequency resolved to a rational; condition is vacuous")
    if n_max < 2:
        raise ValueError("n_max must be at least 2")

    cand = set(range(2, min(1000, n_max) + 1))
    for q in freq.denominators(n_max):
        for m in range(1, 9):
            if 2 <= m * q <= n_max:
                cand.add(m * q)
    ns = np.array(sorted(cand), dtype=np.float64)
    dists = np.asarray(torus_dist(ns * freq.alpha))
    thresholds = c / (ns * np.log(ns) ** a)
    ratios = dists / thresholds
    i = int(np.argmin(ratios))
    return SmallDivisorReport(
        ok=bool(np.all(dists >= thresholds)),
        worst_n=int(ns[i]),
        worst_dist=float(dists[i]),
        threshold=float(thresholds[i]),
        n_max=n_max,
    )


def phase_resonance_check(
    theta: float,
    freq: Frequency,
    c: float = 0.1,
    b: float = 2.0,
    n_max: int = 100000,
) -> SmallDivisorReport:
    """Test ||2*theta + n*alpha|| >= c / |n|^b for 1 <= |n| <= n_max.

    Phases passing this are "non-resonant": the orbit of the doubled phase
    avoids small divisors at a polynomial rate.  The scan is exhaustive and
    chunked so large n_max stays within memory.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    best = (math.inf, 0, 0.0, 0.0)  # (ratio, n, dist, threshold)
    ok = True
    chunk = 1 << 20
    for lo in range(1, n_max + 1, chunk):
        hi = min(lo + chunk - 1, n_max)
        ns = np.arange(lo, hi + 1, dtype=np.float64)
        thresholds = c / ns ** b
        for sign in (1.0, -1.0):
            dists = np.asarray(torus_dist(2.0 * theta + sign * ns * freq.alpha))
            ratios = dists / thresholds
            i = int(np.argmin(ratios))
            if ratios[i] < best[0]:
                best = (float(ratios[i]), int(sign * ns[i]), float(dists[i]),
                        float(thresholds[i]))
            if np.any(dists < thresholds):
                ok = False
    return SmallDivisorReport(
        ok=ok, worst_n=best[1], worst_dist=best[2], threshold=best[3], n_max=n_max
    )
