"""Independent reference computations used by the tests.

None of these share code paths with the package: regressions come from
covariance algebra, real-root counts from sign changes at critical points,
and root continuation from batched companion-matrix eigenvalues.
"""

from __future__ import annotations

import numpy as np

from ovbound.model_inputs import RegressionSummary


# -- population regressions ---------------------------------------------------


def summary_from_cov(S: np.ndarray) -> RegressionSummary:
    """Regression summary implied by the covariance of ``(y, x, w1..wJ)``."""
    S = np.asarray(S, dtype=float)
    syy, sxx, sxy = S[0, 0], S[1, 1], S[0, 1]
    beta_short = sxy / sxx
    r2_short = sxy * sxy / (sxx * syy)
    Z = np.arange(1, S.shape[0])
    coef = np.linalg.solve(S[np.ix_(Z, Z)], S[Z, 0])
    r2_int = float(S[0, Z] @ coef / syy)
    W = np.arange(2, S.shape[0])
    tau = sxx - S[1, W] @ np.linalg.solve(S[np.ix_(W, W)], S[W, 1])
    return RegressionSummary(
        beta_short=float(beta_short), r2_short=float(r2_short),
        beta_int=float(coef[0]), r2_int=r2_int,
        sigma2_y=float(syy), sigma2_x=float(sxx), tau_x=float(tau),
    )


def random_summary(rng: np.random.Generator, n_controls: int | None = None) -> RegressionSummary:
    """A summary that some joint distribution actually produces."""
    J = int(rng.integers(1, 4)) if n_controls is None else n_controls
    k = J + 2
    A = rng.normal(size=(k, k + 2)) * rng.uniform(0.3, 2.0, size=(k, 1))
    return summary_from_cov(A @ A.T)


def dgp_covariance(spec) -> np.ndarray:
    """Covariance of (y, x, w) for a DgpSpec, by linear algebra on the
    structural equations rather than the closed forms."""
    J = len(spec.psi)
    # latent vector: w (J), W2, u, eps
    m = J + 3
    V = np.diag([*spec.control_variances, spec.confounder_variance,
                 spec.treatment_noise_variance, spec.noise_variance])
    psi = np.asarray(spec.psi)
    x = np.zeros(m)
    x[:J] = spec.alpha1 * psi
    x[J] = spec.delta1
    x[J + 1] = 1.0
    y = spec.beta_true * x
    y[:J] += psi
    y[J] += 1.0
    y[J + 2] += 1.0
    L = np.vstack([y, x, np.eye(m)[:J]])
    return L @ V @ L.T


# -- real-root counting -------------------------------------------------------


def count_real_roots(a, b, c, d) -> np.ndarray:
    """Distinct real roots of a x^3 + b x^2 + c x + d (a != 0) by sign changes.

    The sequence f(-inf), f(m1), f(m2), f(+inf) over the critical points
    changes sign once per real root when the roots are simple.
    """
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    disc = b * b - 3 * a * c                  # of the derivative / 4
    out = np.ones(a.shape, dtype=int)
    has = disc > 0
    sq = np.sqrt(np.where(has, disc, 0.0))
    m1 = (-b - sq) / (3 * a)
    m2 = (-b + sq) / (3 * a)
    lo, hi = np.minimum(m1, m2), np.maximum(m1, m2)

    def f(x):
        return ((a * x + b) * x + c) * x + d

    s_neg = -np.sign(a)
    s_pos = np.sign(a)
    seq = np.stack([s_neg, np.sign(f(lo)), np.sign(f(hi)), s_pos], axis=-1)
    changes = (seq[..., 1:] * seq[..., :-1] < 0).sum(axis=-1)
    out[has] = changes[has]
    return out


# -- continuation -------------------------------------------------------------


def _companion_roots(a, b, c, d) -> np.ndarray:
    n = a.shape[0]
    M = np.zeros((n, 3, 3))
    M[:, 0, 0] = -b / a
    M[:, 0, 1] = -c / a
    M[:, 0, 2] = -d / a
    M[:, 1, 0] = 1.0
    M[:, 2, 1] = 1.0
    return np.linalg.eigvals(M)


def _coeffs(s: RegressionSummary, delta, rmax):
    gap = s.beta_short - s.beta_int
    sx, sy, t = s.sigma2_x, s.sigma2_y, s.tau_x
    a = (delta - 1) * (t * sx - t * t)
    b = t * gap * sx * (delta - 2)
    c = delta * (rmax - s.r2_int) * sy * (sx - t) - (s.r2_int - s.r2_short) * sy * t - sx * t * gap * gap
    d = delta * (rmax - s.r2_int) * sy * gap * sx
    return a, b, c, d


def track(s: RegressionSummary, start, start_root, end, steps: int = 1000) -> np.ndarray:
    """Follow roots along straight segments in (delta, R_max).

    ``start`` and ``end`` are (n, 2) arrays of (delta, rmax); ``start_root``
    the root value at each start.  At every step the eigenvalue of the
    companion matrix closest (in the complex plane) to the current value is
    taken.  Returns the real part at the ends.
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    cur = np.asarray(start_root, dtype=complex)
    for t in np.linspace(0.0, 1.0, steps + 1)[1:]:
        p = start + (end - start) * t
        dl = np.where(np.abs(p[:, 0] - 1.0) < 1e-9, 1.0 + 1e-9, p[:, 0])
        a, b, c, d = _coeffs(s, dl, p[:, 1])
        r = _companion_roots(a, b, c, d)
        k = np.argmin(np.abs(r - cur[:, None]), axis=1)
        cur = r[np.arange(len(cur)), k]
    return cur.real


def nearest_urr_anchor(urr: np.ndarray, deltas, rmaxes, i: int, j: int):
    """Index of the URR cell closest in (delta, R_max), ties to smaller (i, j)."""
    ii, jj = np.nonzero(urr)
    dist = (deltas[ii] - deltas[i]) ** 2 + (rmaxes[jj] - rmaxes[j]) ** 2
    k = np.lexsort((jj, ii, dist))[0]
    return int(ii[k]), int(jj[k])
