"""The bias cubic ``a nu^3 + b nu^2 + c nu + d = 0`` and its closed-form roots.

Coefficients, for a summary and a point (delta, rmax)::

    a = (delta - 1) (tau_x sigma2_x - tau_x^2)
    b = tau_x (beta_short - beta_int) sigma2_x (delta - 2)
    c = delta (rmax - r2_int) sigma2_y (sigma2_x - tau_x)
        - (r2_int - r2_short) sigma2_y tau_x
        - sigma2_x tau_x (beta_short - beta_int)^2
    d = delta (rmax - r2_int) sigma2_y (beta_short - beta_int) sigma2_x

At delta = 1 the leading coefficient vanishes and the equation becomes the
quadratic ``b1 nu^2 + c1 nu + d1 = 0`` handled by :func:`solve_quadratic`.

Root extraction works on the depressed cubic ``x^3 + p x + q = 0``.  A
positive ``27 q^2 + 4 p^3`` means one real root (Cardano); otherwise there are
three real roots (trigonometric form).  Both paths are vectorized so the grid
engine can classify a whole lattice in one call.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCubicError, DomainError, InternalConsistencyError
from .model_inputs import RegressionSummary

A_REL_TOL = 1e-12           # |a| <= A_REL_TOL * |tau_x sigma2_x - tau_x^2| is degenerate
DISC_REL_TOL = 1e-10
MULTIPLICITY_TOL = 1e-6
RESIDUAL_TOL = 1e-9
_RMAX_SLACK = 1e-12


class RootKind(str, enum.Enum):
    UNIQUE_REAL = "UniqueReal"
    THREE_REAL = "ThreeReal"
    QUADRATIC_TWO = "QuadraticTwo"
    QUADRATIC_ONE = "QuadraticOne"
    DEGENERATE = "Degenerate"


# integer codes used by the vectorized solver
UNIQUE, THREE = 0, 1


@dataclass(frozen=True)
class CubicCoefficients:
    a: float
    b: float
    c: float
    d: float
    p: float | None = None
    q: float | None = None
    disc: float | None = None
    delta: float | None = None
    rmax: float | None = None
    eps_a: float = 0.0

    @property
    def degenerate(self) -> bool:
        return abs(self.a) <= self.eps_a

    @classmethod
    def from_raw(cls, a, b, c, d, delta=None, rmax=None, eps_a=None) -> "CubicCoefficients":
        """Build from explicit coefficients, filling the depressed form."""
        a, b, c, d = float(a), float(b), float(c), float(d)
        if eps_a is None:
            eps_a = A_REL_TOL * max(abs(b), abs(c), abs(d))
        if abs(a) <= eps_a:
            return cls(a, b, c, d, delta=delta, rmax=rmax, eps_a=eps_a)
        p, q = depressed(a, b, c, d)
        return cls(a, b, c, d, p, q, 27 * q * q + 4 * p**3, delta, rmax, eps_a)

    def __call__(self, nu):
        return ((self.a * nu + self.b) * nu + self.c) * nu + self.d

    def residual(self, nu: float) -> float:
        """|f(nu)| scaled by max|coef| * max(1, |nu|)^3."""
        scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        if scale == 0:
            return 0.0
        return abs(self(nu)) / (scale * max(1.0, abs(nu)) ** 3)


@dataclass(frozen=True)
class RootSet:
    kind: RootKind
    roots: tuple[float, ...]
    disc: float

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(sorted(float(r) for r in self.roots)))

    def __len__(self):
        return len(self.roots)


def depressed(a, b, c, d):
    """(p, q) of the depressed cubic; works elementwise on arrays."""
    B, C, D = b / a, c / a, d / a
    p = C - B * B / 3.0
    q = (2.0 * B * B * B - 9.0 * B * C) / 27.0 + D
    return p, q


def coefficient_arrays(s: RegressionSummary, delta, rmax):
    """Vectorized coefficients; ``delta`` and ``rmax`` broadcast."""
    delta = np.asarray(delta, dtype=float)
    rmax = np.asarray(rmax, dtype=float)
    gap = s.beta_short - s.beta_int
    tx, sx, sy = s.tau_x, s.sigma2_x, s.sigma2_y
    dr = rmax - s.r2_int
    a = (delta - 1.0) * (tx * sx - tx * tx)
    b = tx * gap * sx * (delta - 2.0)
    c = delta * dr * sy * (sx - tx) - (s.r2_int - s.r2_short) * sy * tx - sx * tx * gap * gap
    d = delta * dr * sy * gap * sx
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    return a, b, c, d


def degeneracy_tolerance(s: RegressionSummary) -> float:
    return A_REL_TOL * abs(s.tau_x * s.sigma2_x - s.tau_x**2)


def coefficients(s: RegressionSummary, delta: float, rmax: float) -> CubicCoefficients:
    if rmax < s.r2_int - _RMAX_SLACK:
        raise DomainError(f"R_max below intermediate R-squared ({rmax} < {s.r2_int})")
    a, b, c, d = (float(v) for v in coefficient_arrays(s, delta, max(rmax, s.r2_int)))
    if rmax < s.r2_int:
        rmax = s.r2_int
    return CubicCoefficients.from_raw(a, b, c, d, delta=float(delta), rmax=float(rmax),
                                      eps_a=degeneracy_tolerance(s))


# -- vectorized root extraction ----------------------------------------------


def _horner(a, b, c, d, x):
    return ((a * x + b) * x + c) * x + d


def _polish(a, b, c, d, x, steps=3):
    """Newton steps on the full cubic, kept only where they reduce |f|."""
    x = x.copy()
    fx = np.abs(_horner(a, b, c, d, x))
    for _ in range(steps):
        with np.errstate(divide="ignore", invalid="ignore"):
            dfx = (3.0 * a * x + 2.0 * b) * x + c
            cand = x - _horner(a, b, c, d, x) / dfx
        fc = np.abs(_horner(a, b, c, d, cand))
        better = np.isfinite(cand) & (fc < fx)
        if not better.any():
            break
        x = np.where(better, cand, x)
        fx = np.where(better, fc, fx)
    return x


def classify_disc(p, q):
    """Return (disc, is_three_real) for depressed coefficients.

    The zero band is ``|disc| <= DISC_REL_TOL * max(q^2, |p|^3)``, i.e. the
    tolerance is applied to the depressed cubic rescaled so its largest
    coefficient scale is one.  The zero case joins the three-real branch.
    """
    disc = 27.0 * q * q + 4.0 * p * p * p
    scale = np.maximum(q * q, np.abs(p) ** 3)
    three = (disc <= DISC_REL_TOL * scale) | (scale == 0)
    return disc, three


def solve_cubic_arrays(a, b, c, d):
    """Real roots of many cubics at once (all ``a`` must be nonzero).

    Returns ``(kind, roots, disc)`` where ``kind`` holds UNIQUE/THREE codes and
    ``roots`` has shape ``(..., 3)``: ascending, NaN-padded for the unique case.
    """
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    shape = np.broadcast(a, b, c, d).shape
    a, b, c, d = (np.broadcast_to(v, shape).reshape(-1) for v in (a, b, c, d))

    # substitute nu = s x with s a power of two near the root size, so the
    # monic cubic in x has O(1) coefficients and nothing under- or overflows
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        size = np.maximum.reduce([np.abs(b / a), np.sqrt(np.abs(c / a)), np.cbrt(np.abs(d / a))])
        s = np.where((size > 0) & np.isfinite(size), np.exp2(np.round(np.log2(np.where(size > 0, size, 1.0)))), 1.0)
        b, c, d = b / a / s, c / a / s / s, d / a / s / s / s
    a = np.ones_like(b)

    p, q = depressed(a, b, c, d)
    disc, three = classify_disc(p, q)
    shift = -b / (3.0 * a)
    roots = np.full((a.size, 3), np.nan)

    one = ~three
    if one.any():
        pp, qq = p[one], q[one]
        sq = np.sqrt(np.maximum(qq * qq / 4.0 + pp**3 / 27.0, 0.0))
        # x = cbrt(U1) - cbrt(U2) with cbrt(U1) cbrt(U2) = p / 3; take the
        # cube root of whichever of U1, U2 has no cancellation, derive the other
        big = np.cbrt(np.abs(qq) / 2.0 + sq)
        with np.errstate(divide="ignore", invalid="ignore"):
            other = np.where(big != 0, pp / (3.0 * big), 0.0)
        x = np.where(qq >= 0, other - big, big - other)
        roots[one, 0] = x + shift[one]

    if three.any():
        pp, qq = p[three], q[three]
        neg = np.minimum(pp, 0.0)
        m = 2.0 * np.sqrt(-neg / 3.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            arg = np.where(neg < 0, 3.0 * qq / (2.0 * neg) * np.sqrt(-3.0 / neg), 0.0)
        theta = np.arccos(np.clip(arg, -1.0, 1.0)) / 3.0
        k = np.arange(3)
        xs = m[:, None] * np.cos(theta[:, None] - 2.0 * np.pi * k / 3.0)
        roots[three] = xs + shift[three][:, None]

    for j in range(3):
        col = roots[:, j]
        ok = np.isfinite(col)
        if ok.any():
            col[ok] = _polish(a[ok], b[ok], c[ok], d[ok], col[ok])

    kind, roots, disc = _refine_by_deflation(a, b, c, d, roots)
    roots = roots * s[:, None]
    with np.errstate(over="ignore", under="ignore"):
        disc = disc * s**6
    return kind.reshape(shape), roots.reshape(shape + (3,)), disc.reshape(shape)


def _scaled_residual(a, b, c, d, x):
    # backward error: |f(x)| against the sum of the term magnitudes at x
    ax = np.abs(x)
    terms = ((np.abs(a) * ax + np.abs(b)) * ax + np.abs(c)) * ax + np.abs(d)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(terms > 0, np.abs(_horner(a, b, c, d, x)) / terms, 0.0)


def _refine_by_deflation(a, b, c, d, cand):
    """Settle the root count from a quadratic deflated by one trusted root.

    When the roots are spread over many orders of magnitude the depressed
    discriminant is swamped by rounding, so the closed-form candidates can
    report a spurious double root where a complex pair sits.  The candidate
    with the smallest residual is divided out (backward synthetic division
    when it is at least the geometric-mean root size, forward otherwise) and
    the leftover quadratic decides between one and three real roots.  The
    returned discriminant is rebuilt from the roots of the monic cubic, which
    keeps its sign reliable.
    """
    n = a.size
    res = np.where(np.isfinite(cand), _scaled_residual(a[:, None], b[:, None], c[:, None], d[:, None], cand), np.inf)
    # best residual first, larger magnitude breaks ties
    order = np.lexsort((-np.abs(np.nan_to_num(cand)), res), axis=1)
    r = cand[np.arange(n), order[:, 0]]

    backward = np.abs(a) * np.abs(r) ** 3 >= np.abs(d)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        Cb = -d / r
        Bb = (Cb - c) / r
        Ab = (Bb - b) / r
    Af = a
    Bf = b + r * a
    Cf = c + r * Bf
    use_b = backward & (r != 0)
    A = np.where(use_b, Ab, Af)
    B = np.where(use_b, Bb, Bf)
    C = np.where(use_b, Cb, Cf)

    qd = B * B - 4.0 * A * C
    qscale = np.maximum(B * B, np.abs(4.0 * A * C))
    real_pair = (qd >= -DISC_REL_TOL * qscale) | (qscale == 0)
    sq = np.sqrt(np.maximum(qd, 0.0))
    t = -0.5 * (B + np.where(B >= 0, sq, -sq))
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = np.where(A != 0, t / A, np.nan)
        s2 = np.where(t != 0, C / t, np.where(A != 0, -B / (2.0 * A), np.nan))
    s1 = np.where(real_pair, s1, np.nan)
    s2 = np.where(real_pair, s2, np.nan)
    for s in (s1, s2):
        ok = np.isfinite(s)
        if ok.any():
            s[ok] = _polish(a[ok], b[ok], c[ok], d[ok], s[ok])

    roots = np.full((n, 3), np.nan)
    roots[:, 0] = r
    roots[:, 1] = s1
    roots[:, 2] = s2
    roots.sort(axis=1)

    # monic-cubic discriminant in the 27 q^2 + 4 p^3 convention
    disc = np.empty(n)
    r1, r2, r3 = roots[:, 0], roots[:, 1], roots[:, 2]
    disc[real_pair] = -(((r2 - r1) * (r3 - r1) * (r3 - r2)) ** 2)[real_pair]
    cp = ~real_pair
    if cp.any():
        x = -B[cp] / (2.0 * A[cp])
        y2 = -qd[cp] / (4.0 * A[cp] ** 2)
        disc[cp] = 4.0 * y2 * ((r[cp] - x) ** 2 + y2) ** 2
    kind = np.where(real_pair, THREE, UNIQUE)
    return kind, roots, disc


def solve_cubic(co: CubicCoefficients) -> RootSet:
    if co.degenerate or co.a == 0:
        raise DegenerateCubicError(
            f"leading coefficient {co.a!r} is within tolerance {co.eps_a!r} of zero; "
            "use solve_quadratic"
        )
    kind, roots, disc = solve_cubic_arrays(co.a, co.b, co.c, co.d)
    r = roots.reshape(3)
    if int(kind) == UNIQUE:
        return RootSet(RootKind.UNIQUE_REAL, (r[0],), float(disc))
    return RootSet(RootKind.THREE_REAL, tuple(r), float(disc))


def multiplicity_guard(co: CubicCoefficients) -> bool:
    """True when ``b^2 != 3ac`` by a clear margin (simple real roots).

    The comparison is made on coefficients divided by their largest absolute
    value so the floor of one in the tolerance has a fixed meaning.
    """
    return bool(multiplicity_ok_arrays(co.a, co.b, co.c, co.d))


def multiplicity_ok_arrays(a, b, c, d):
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    m = np.maximum.reduce([np.abs(a), np.abs(b), np.abs(c), np.abs(d)])
    m = np.where(m == 0, 1.0, m)
    a, b, c = a / m, b / m, c / m
    lhs = np.abs(b * b - 3.0 * a * c)
    return lhs > MULTIPLICITY_TOL * np.maximum.reduce([b * b, np.abs(3.0 * a * c), np.ones_like(a)])


# -- delta = 1 ---------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticCoefficients:
    b1: float
    c1: float
    d1: float

    @property
    def discriminant(self) -> float:
        return self.c1 * self.c1 - 4.0 * self.d1 * self.b1


def quadratic_coefficients(s: RegressionSummary, rmax: float) -> QuadraticCoefficients:
    if rmax < s.r2_int - _RMAX_SLACK:
        raise DomainError(f"R_max below intermediate R-squared ({rmax} < {s.r2_int})")
    rmax = max(rmax, s.r2_int)
    gap = s.beta_short - s.beta_int
    tx, sx, sy = s.tau_x, s.sigma2_x, s.sigma2_y
    b1 = -tx * gap * sx
    c1 = (rmax - s.r2_int) * sy * (sx - tx) - (s.r2_int - s.r2_short) * sy * tx - sx * tx * gap * gap
    d1 = (rmax - s.r2_int) * sy * gap * sx
    return QuadraticCoefficients(b1, c1, d1)


def _linear_case(s: RegressionSummary) -> bool:
    gap = s.beta_short - s.beta_int
    return abs(gap) <= 1e-12 * max(abs(s.beta_short), abs(s.beta_int))


def quadratic_branches(s: RegressionSummary, rmax: float):
    """Branch-labelled roots ``(nu_plus, nu_minus, D)`` of the delta = 1 quadratic.

    ``nu_plus = (-c1 + sqrt(D)) / (2 b1)``, ``nu_minus`` takes the minus sign.
    Evaluated in the cancellation-free form.
    """
    qc = quadratic_coefficients(s, rmax)
    if _linear_case(s) or qc.b1 == 0:
        raise DegenerateCubicError("beta_short equals beta_int: the delta = 1 equation is linear")
    D = qc.discriminant
    scale = max(qc.c1 * qc.c1, abs(4.0 * qc.d1 * qc.b1))
    if D < 0:
        if D < -1e-12 * scale:
            raise InternalConsistencyError(f"negative quadratic discriminant {D!r}")
        D = 0.0
    sd = math.sqrt(D)
    if qc.c1 >= 0:
        t = -(qc.c1 + sd) / 2.0
        nu_minus = t / qc.b1
        nu_plus = qc.d1 / t if t != 0 else 0.0
    else:
        t = (-qc.c1 + sd) / 2.0
        nu_plus = t / qc.b1
        nu_minus = qc.d1 / t
    return nu_plus, nu_minus, D


def solve_quadratic(s: RegressionSummary, rmax: float) -> RootSet:
    qc = quadratic_coefficients(s, rmax)
    if _linear_case(s) or qc.b1 == 0:
        if qc.c1 == 0:
            raise InternalConsistencyError("delta = 1 equation vanishes identically")
        return RootSet(RootKind.DEGENERATE, (-qc.d1 / qc.c1,), qc.c1 * qc.c1)
    nu_plus, nu_minus, D = quadratic_branches(s, rmax)
    scale = max(qc.c1 * qc.c1, abs(4.0 * qc.d1 * qc.b1))
    if D <= 1e-12 * scale:
        return RootSet(RootKind.QUADRATIC_ONE, (-qc.c1 / (2.0 * qc.b1),), D)
    return RootSet(RootKind.QUADRATIC_TWO, (nu_plus, nu_minus), D)
