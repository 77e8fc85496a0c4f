"""Regression summaries that parameterize the bias cubic.

Three regressions are estimated from raw data:

* short:        Y on X                      -> beta_short, r2_short
* intermediate: Y on X and every control    -> beta_int, r2_int
* auxiliary:    X on every control          -> tau_x (residual variance)

All variances use divisor N so that sample quantities line up with their
probability limits.  Every regression carries an intercept.

The module also ships a synthetic data generator whose controls are
mutually independent and independent of the unobserved confounder, the two
orthogonality conditions under which the cubic holds exactly in population.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    InputError,
    InsufficientDataError,
    InternalConsistencyError,
    InvalidSpecError,
    SingularDesignError,
)

_NEST_TOL = 1e-10


@dataclass(frozen=True)
class Dataset:
    outcome: np.ndarray
    treatment: np.ndarray
    controls: np.ndarray
    outcome_name: str = "y"
    treatment_name: str = "x"
    control_names: tuple[str, ...] = ()

    def __post_init__(self):
        y = np.asarray(self.outcome, dtype=float).reshape(-1)
        x = np.asarray(self.treatment, dtype=float).reshape(-1)
        w = np.asarray(self.controls, dtype=float)
        if w.ndim == 1:
            w = w.reshape(-1, 1)
        n = y.shape[0]
        if x.shape[0] != n or w.shape[0] != n:
            raise InputError(
                f"column lengths differ: outcome {n}, treatment {x.shape[0]}, "
                f"controls {w.shape[0]}"
            )
        names = tuple(self.control_names) or tuple(f"w{j + 1}" for j in range(w.shape[1]))
        if len(names) != w.shape[1]:
            raise InputError("control_names does not match the number of control columns")
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "treatment", x)
        object.__setattr__(self, "controls", w)
        object.__setattr__(self, "control_names", names)

        if w.shape[1] == 0:
            raise InputError("at least one control column is required")
        if n < w.shape[1] + 3:
            raise InsufficientDataError(
                f"need at least J + 3 = {w.shape[1] + 3} observations, got {n}"
            )
        cols = [(self.outcome_name, y), (self.treatment_name, x)]
        cols += [(nm, w[:, j]) for j, nm in enumerate(names)]
        for nm, col in cols:
            if not np.all(np.isfinite(col)):
                raise InputError(f"column {nm!r} contains missing or non-finite values")
            if np.ptp(col) == 0.0:
                raise InputError(f"column {nm!r} is constant")

    @property
    def n(self) -> int:
        return self.outcome.shape[0]

    @property
    def n_controls(self) -> int:
        return self.controls.shape[1]


@dataclass(frozen=True)
class RegressionSummary:
    """The seven statistics that fully determine the bias cubic.

    ``se_short`` and ``se_int`` are classical (homoskedastic) standard errors
    kept for reporting only; nothing downstream reads them.
    """

    beta_short: float
    r2_short: float
    beta_int: float
    r2_int: float
    sigma2_y: float
    sigma2_x: float
    tau_x: float
    n: int | None = None
    se_short: float | None = None
    se_int: float | None = None

    def __post_init__(self):
        for name in ("beta_short", "r2_short", "beta_int", "r2_int", "sigma2_y", "sigma2_x", "tau_x"):
            v = getattr(self, name)
            if v is None or not math.isfinite(v):
                raise InputError(f"{name} must be a finite number, got {v!r}")
        if self.sigma2_y <= 0 or self.sigma2_x <= 0:
            raise InputError("sigma2_y and sigma2_x must be positive")
        if not 0.0 <= self.r2_short < 1.0 or not 0.0 <= self.r2_int < 1.0:
            raise InputError("R-squared values must lie in [0, 1)")
        if self.r2_int < self.r2_short - _NEST_TOL:
            raise InputError(
                f"r2_int ({self.r2_int}) is below r2_short ({self.r2_short}); "
                "the intermediate regression must nest the short one"
            )
        if not 0.0 < self.tau_x <= self.sigma2_x * (1 + 1e-12):
            raise InputError("tau_x must satisfy 0 < tau_x <= sigma2_x")
        if self.n is not None and self.n <= 0:
            raise InputError("n must be positive")

    @property
    def beta_gap(self) -> float:
        """beta_short - beta_int."""
        return self.beta_short - self.beta_int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionSummary":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown summary fields: {sorted(extra)}")
        missing = {"beta_short", "r2_short", "beta_int", "r2_int", "sigma2_y", "sigma2_x", "tau_x"} - set(d)
        if missing:
            raise InputError(f"summary is missing fields: {sorted(missing)}")
        return cls(**d)


class OlsFit(NamedTuple):
    coefficients: np.ndarray
    r_squared: float
    residual_variance: float


def _rank_deficient_columns(X: np.ndarray) -> list[int]:
    # greedy scan: a column is offending if it adds no rank to those before it
    bad, kept = [], []
    for j in range(X.shape[1]):
        trial = kept + [j]
        if np.linalg.matrix_rank(X[:, trial]) < len(trial):
            bad.append(j)
        else:
            kept.append(j)
    return bad


def fit_ols(y, X, names: Sequence[str] | None = None) -> OlsFit:
    """Least-squares fit of ``y`` on ``X`` (intercept already prepended).

    ``residual_variance`` is SSR / N and ``r_squared`` is 1 - SSR / SST with a
    centered SST.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    n, k = X.shape
    if y.shape[0] != n:
        raise InputError(f"y has {y.shape[0]} rows but X has {n}")
    if n <= k:
        raise InsufficientDataError(f"need more observations ({n}) than regressors ({k})")
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < k:
        bad = _rank_deficient_columns(X)
        labels = [names[j] if names is not None else f"column {j}" for j in bad]
        raise SingularDesignError(
            "design matrix is rank deficient; collinear columns: " + ", ".join(map(str, labels)),
            columns=labels,
        )
    resid = y - X @ coef
    ssr = float(resid @ resid)
    yc = y - y.mean()
    sst = float(yc @ yc)
    if sst == 0.0:
        raise InputError("outcome is constant; R-squared undefined")
    return OlsFit(coef, 1.0 - ssr / sst, ssr / n)


def _classical_se(X: np.ndarray, resid_var: float, idx: int) -> float:
    n, k = X.shape
    s2 = resid_var * n / (n - k)
    xtx_inv = np.linalg.inv(X.T @ X)
    return float(math.sqrt(s2 * xtx_inv[idx, idx]))


def summarize(data: Dataset) -> RegressionSummary:
    """Run the short, intermediate and auxiliary regressions on ``data``."""
    y, x, w = data.outcome, data.treatment, data.controls
    n = data.n
    ones = np.ones((n, 1))
    names = ["(intercept)", data.treatment_name, *data.control_names]

    X_short = np.hstack([ones, x[:, None]])
    X_int = np.hstack([ones, x[:, None], w])
    X_aux = np.hstack([ones, w])

    short = fit_ols(y, X_short, names[:2])
    inter = fit_ols(y, X_int, names)
    aux = fit_ols(x, X_aux, [names[0], *names[2:]])

    if inter.r_squared < short.r_squared - _NEST_TOL:
        raise InternalConsistencyError(
            f"intermediate R-squared {inter.r_squared} below short R-squared {short.r_squared}"
        )
    if inter.r_squared >= 1.0:
        raise InputError("intermediate regression fits perfectly (R-squared = 1)")

    return RegressionSummary(
        beta_short=float(short.coefficients[1]),
        r2_short=max(float(short.r_squared), 0.0),
        beta_int=float(inter.coefficients[1]),
        r2_int=max(float(inter.r_squared), float(short.r_squared), 0.0),
        sigma2_y=float(np.var(y)),
        sigma2_x=float(np.var(x)),
        tau_x=min(float(aux.residual_variance), float(np.var(x))),
        n=n,
        se_short=_classical_se(X_short, short.residual_variance, 1),
        se_int=_classical_se(X_int, inter.residual_variance, 1),
    )


def read_csv(path, outcome: str, treatment: str, controls: Sequence[str] | None = None) -> Dataset:
    """Load a comma-delimited UTF-8 file with a header row.

    When ``controls`` is omitted every column other than ``outcome`` and
    ``treatment`` is used as a control.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        if len(set(header)) != len(header):
            raise InputError(f"{path}: duplicate column names in header")
        wanted = [outcome, treatment]
        if controls is None:
            controls = [h for h in header if h not in (outcome, treatment)]
        wanted += list(controls)
        for col in wanted:
            if col not in header:
                raise InputError(f"{path}: column {col!r} not found in header")
        idx = [header.index(c) for c in wanted]
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}:{line_no}: expected {len(header)} fields, found {len(row)}"
                )
            vals = []
            for i, col in zip(idx, wanted):
                cell = row[i].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise InputError(
                        f"{path}:{line_no}: column {col!r} has non-numeric value {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise InputError(f"{path}:{line_no}: column {col!r} is missing or non-finite")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise InsufficientDataError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=float)
    return Dataset(
        outcome=arr[:, 0],
        treatment=arr[:, 1],
        controls=arr[:, 2:],
        outcome_name=outcome,
        treatment_name=treatment,
        control_names=tuple(controls),
    )


# -- synthetic data ---------------------------------------------------------


@dataclass(frozen=True)
class DgpSpec:
    """Parameters of the synthetic long model.

    Controls ``w_j ~ N(0, control_variances[j])`` are independent of each
    other and of the confounder ``W2 ~ N(0, confounder_variance)``.  With the
    observable index ``W1 = psi . w``::

        X = alpha1 * W1 + delta1 * W2 + u,     u ~ N(0, treatment_noise_variance)
        Y = beta_true * X + W1 + W2 + eps,     eps ~ N(0, noise_variance)

    so ``alpha1`` and ``delta1`` are the projection loadings of X on W1 and W2.
    """

    n: int
    beta_true: float
    psi: tuple[float, ...]
    control_variances: tuple[float, ...]
    confounder_variance: float
    alpha1: float
    delta1: float
    noise_variance: float
    seed: int = 0
    treatment_noise_variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "psi", tuple(float(v) for v in self.psi))
        object.__setattr__(self, "control_variances", tuple(float(v) for v in self.control_variances))
        if len(self.psi) == 0 or len(self.psi) != len(self.control_variances):
            raise InvalidSpecError("psi and control_variances must be non-empty and equally long")
        if any(v <= 0 for v in self.control_variances):
            raise InvalidSpecError("control variances must be positive")
        for name in ("confounder_variance", "noise_variance", "treatment_noise_variance"):
            if not getattr(self, name) > 0:
                raise InvalidSpecError(f"{name} must be positive")
        if self.alpha1 == 0:
            raise InvalidSpecError("alpha1 must be nonzero (delta = delta1 / alpha1)")
        if all(p == 0 for p in self.psi):
            raise InvalidSpecError("psi must have a nonzero entry so that W1 varies")
        if self.n < len(self.psi) + 3:
            raise InvalidSpecError("n must be at least J + 3")

    @classmethod
    def from_dict(cls, d: dict) -> "DgpSpec":
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidSpecError(str(exc)) from None


@dataclass(frozen=True)
class DgpTruth:
    beta: float
    nu: float
    delta: float
    rmax: float
    population: RegressionSummary = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "nu": self.nu,
            "delta": self.delta,
            "rmax": self.rmax,
            "population_summary": self.population.to_dict(),
        }


def population_truth(spec: DgpSpec) -> DgpTruth:
    """Probability limits implied by ``spec``, in closed form."""
    psi = np.asarray(spec.psi)
    omega = np.asarray(spec.control_variances)
    b, a1, d1 = spec.beta_true, spec.alpha1, spec.delta1
    s22 = spec.confounder_variance

    s11 = float(psi**2 @ omega)             # Var(W1)
    s1x = a1 * s11                          # Cov(W1, X)
    s2x = d1 * s22                          # Cov(W2, X)
    sx2 = a1**2 * s11 + d1**2 * s22 + spec.treatment_noise_variance
    tau = sx2 - a1**2 * s11                 # sx2 - sum_j omega_jx^2 / omega_jj
    nu = s2x / tau
    sy2 = b**2 * sx2 + s11 + s22 + 2 * b * (s1x + s2x) + spec.noise_variance

    beta_short = b + (s1x + s2x) / sx2
    r2_short = beta_short**2 * sx2 / sy2
    r2_int = (b**2 * sx2 + s11 + nu**2 * tau + 2 * b * nu * tau + 2 * b * s1x) / sy2
    rmax = (b**2 * sx2 + s11 + s22 + 2 * b * nu * tau + 2 * b * s1x) / sy2

    pop = RegressionSummary(
        beta_short=beta_short,
        r2_short=r2_short,
        beta_int=b + nu,
        r2_int=r2_int,
        sigma2_y=sy2,
        sigma2_x=sx2,
        tau_x=tau,
    )
    return DgpTruth(beta=b, nu=nu, delta=d1 / a1, rmax=rmax, population=pop)


def simulate_dgp(spec: DgpSpec) -> tuple[Dataset, DgpTruth]:
    rng = np.random.default_rng(spec.seed)
    n, J = spec.n, len(spec.psi)
    w = rng.standard_normal((n, J)) * np.sqrt(spec.control_variances)
    w2 = rng.standard_normal(n) * math.sqrt(spec.confounder_variance)
    u = rng.standard_normal(n) * math.sqrt(spec.treatment_noise_variance)
    eps = rng.standard_normal(n) * math.sqrt(spec.noise_variance)

    w1 = w @ np.asarray(spec.psi)
    x = spec.alpha1 * w1 + spec.delta1 * w2 + u
    y = spec.beta_true * x + w1 + w2 + eps

    data = Dataset(
        outcome=y,
        treatment=x,
        controls=w,
        outcome_name="y",
        treatment_name="x",
        control_names=tuple(f"w{j + 1}" for j in range(J)),
    )
    return data, population_truth(spec)
