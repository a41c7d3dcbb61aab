"""Discrete ARIMA fitting, diagnostics, order selection, and simulation.

Estimation maximizes the exact Gaussian likelihood through a state-space
innovations recursion (Harvey form, stationary initialization), so the
log-likelihoods are comparable across orders for AIC ranking. Stationarity
and invertibility are enforced through a partial-autocorrelation
reparametrization of the AR and MA coefficients.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.linalg import solve_discrete_lyapunov

from . import kernels

BOX_LJUNG_DEFAULT_LAGS = 20
BOX_LJUNG_LEVEL = 0.05


class ArimaError(ValueError):
    pass


class ArimaFitError(ArimaError):
    """Estimation failure; ``best`` carries the best iterate when available."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class ArimaModel:
    """Fitted ARIMA(p,d,q): x_t = mean + sum(ar_i x_{t-i}) + e_t + sum(ma_j e_{t-j})."""

    p: int
    d: int
    q: int
    ar: np.ndarray
    ma: np.ndarray
    sigma2: float
    loglik: float
    n_obs: int
    mean: float = 0.0
    include_mean: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ar", np.atleast_1d(np.asarray(self.ar, float)) if self.p else np.zeros(0))
        object.__setattr__(self, "ma", np.atleast_1d(np.asarray(self.ma, float)) if self.q else np.zeros(0))
        if self.ar.size != self.p or self.ma.size != self.q:
            raise ArimaError("coefficient lengths must match the declared order")
        if not self.sigma2 > 0:
            raise ArimaError("innovation variance must be positive")

    @property
    def n_params(self) -> int:
        # innovation variance counted; the mean adds one when estimated
        return self.p + self.q + 1 + (1 if self.include_mean else 0)

    def is_causal(self) -> bool:
        """True when the AR polynomial 1 - sum(a_i z^i) has roots outside the unit circle."""
        if self.p == 0:
            return True
        roots = np.roots(np.concatenate(([1.0], -self.ar)))
        return bool(np.all(np.abs(roots) < 1.0 - 1e-10))

    def label(self) -> str:
        return f"ARIMA({self.p},{self.d},{self.q})"


def difference(series, d: int) -> np.ndarray:
    """d-fold first differences; the result is shorter by d."""
    x = np.asarray(series, dtype=float)
    if d < 0:
        raise ArimaError("d must be non-negative")
    if d >= x.size:
        raise ArimaError(f"cannot difference {d} times a series of length {x.size}")
    for _ in range(d):
        x = np.diff(x)
    return x


def integrate(series, d: int, heads=None) -> np.ndarray:
    """Invert :func:`difference`; *heads* are the d dropped initial values."""
    x = np.asarray(series, dtype=float)
    heads = [] if heads is None else list(heads)
    for i in range(d):
        head = heads[-(i + 1)] if i < len(heads) else 0.0
        x = head + np.concatenate(([0.0], np.cumsum(x)))
    return x


def sample_acf(x, nlags: int) -> np.ndarray:
    """Sample autocorrelations rho_0..rho_nlags (biased covariance estimator)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if nlags >= n:
        raise ArimaError("nlags must be smaller than the series length")
    xc = x - x.mean()
    nfft = int(2 ** np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[: nlags + 1].real / n
    return acov / acov[0]


# ---------------------------------------------------------------------------
# PACF reparametrization (keeps AR causal / MA invertible during search)
# ---------------------------------------------------------------------------

def _pacf_to_coef(r: np.ndarray) -> np.ndarray:
    a = np.zeros(r.size)
    for j in range(r.size):
        prev = a[:j].copy()
        a[:j] = prev - r[j] * prev[::-1]
        a[j] = r[j]
    return a


def _coef_to_pacf(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float).copy()
    k = a.size
    r = np.zeros(k)
    for j in range(k - 1, -1, -1):
        r[j] = a[j]
        if abs(r[j]) >= 1:
            r[j] = np.sign(r[j]) * 0.98
        if j > 0:
            denom = 1.0 - r[j] ** 2
            prev = a[:j].copy()
            a[:j] = (prev + r[j] * prev[::-1]) / denom
    return r


def _unconstrained_to_pacf(z: np.ndarray) -> np.ndarray:
    return z / np.sqrt(1.0 + z * z)


def _pacf_to_unconstrained(r: np.ndarray) -> np.ndarray:
    r = np.clip(r, -0.999, 0.999)
    return r / np.sqrt(1.0 - r * r)


def _harvey_matrices(phi_full, theta_full):
    m = phi_full.size
    T = np.zeros((m, m))
    T[:, 0] = phi_full
    if m > 1:
        T[: m - 1, 1:] = np.eye(m - 1)
    r = np.zeros(m)
    r[0] = 1.0
    r[1 : 1 + theta_full.size] = theta_full
    return T, r


def _innovations(x, phi, theta):
    """Prediction errors and unit-variance innovation scales for an ARMA(p,q)."""
    p, q = phi.size, theta.size
    m = max(p, q + 1)
    phi_full = np.zeros(m)
    phi_full[:p] = phi
    theta_full = np.zeros(m - 1)
    theta_full[:q] = theta
    T, r = _harvey_matrices(phi_full, theta_full)
    P0 = solve_discrete_lyapunov(T, np.outer(r, r))
    return kernels.arma_innovations(x, phi_full, theta_full, P0)


def _loglik_from_innovations(e, v):
    n = e.size
    sigma2 = float(np.mean(e * e / v))
    ll = -0.5 * (n * (np.log(2.0 * np.pi) + 1.0 + np.log(sigma2)) + np.sum(np.log(v)))
    return float(ll), sigma2


def fit_arma(
    series,
    p: int,
    q: int,
    include_mean: bool = False,
    max_iter: int = 2000,
) -> ArimaModel:
    """Exact Gaussian MLE of a causal ARMA(p,q) on a (stationary) series."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 10 * (p + q + 1):
        raise ArimaError(f"need at least {10 * (p + q + 1)} observations for ARMA({p},{q})")
    mean = float(x.mean()) if include_mean else 0.0
    xc = x - mean

    if p == 0 and q == 0:
        sigma2 = float(np.mean(xc * xc))
        ll = -0.5 * n * (np.log(2.0 * np.pi) + 1.0 + np.log(sigma2))
        return ArimaModel(0, 0, 0, np.zeros(0), np.zeros(0), sigma2, ll, n,
                          mean=mean, include_mean=include_mean)

    def negloglik(z):
        phi = _pacf_to_coef(_unconstrained_to_pacf(z[:p])) if p else np.zeros(0)
        theta = _pacf_to_coef(_unconstrained_to_pacf(z[p:])) if q else np.zeros(0)
        try:
            e, v = _innovations(xc, phi, theta)
        except np.linalg.LinAlgError:
            return np.inf
        if not np.all(v > 0):
            return np.inf
        ll, _ = _loglik_from_innovations(e, v)
        return -ll if np.isfinite(ll) else np.inf

    # warm start: AR part from the sample PACF, MA part at zero
    z0 = np.zeros(p + q)
    if p:
        rho = sample_acf(xc, min(p, n - 1))
        pacf = np.zeros(p)
        a_prev = np.zeros(0)
        for j in range(1, p + 1):
            num = rho[j] - (a_prev * rho[1:j][::-1]).sum() if j > 1 else rho[1]
            den = 1.0 - (a_prev * rho[1:j]).sum() if j > 1 else 1.0
            rj = num / den if abs(den) > 1e-12 else 0.0
            pacf[j - 1] = np.clip(rj, -0.95, 0.95)
            a_new = np.zeros(j)
            a_new[: j - 1] = a_prev - pacf[j - 1] * a_prev[::-1]
            a_new[j - 1] = pacf[j - 1]
            a_prev = a_new
        z0[:p] = _pacf_to_unconstrained(pacf)

    res = optimize.minimize(
        negloglik, z0, method="Nelder-Mead",
        options={"maxfev": max_iter, "xatol": 1e-6, "fatol": 1e-9},
    )
    # restart the simplex at the incumbent to escape a collapsed simplex
    res2 = optimize.minimize(
        negloglik, res.x, method="Nelder-Mead",
        options={"maxfev": max_iter, "xatol": 1e-8, "fatol": 1e-10},
    )
    best = res2 if res2.fun <= res.fun else res
    if not np.isfinite(best.fun):
        raise ArimaFitError(f"ARMA({p},{q}) likelihood not finite at any iterate")

    phi = _pacf_to_coef(_unconstrained_to_pacf(best.x[:p])) if p else np.zeros(0)
    theta = _pacf_to_coef(_unconstrained_to_pacf(best.x[p:])) if q else np.zeros(0)
    e, v = _innovations(xc, phi, theta)
    ll, sigma2 = _loglik_from_innovations(e, v)
    model = ArimaModel(p, 0, q, phi, theta, sigma2, ll, n, mean=mean, include_mean=include_mean)
    if not (res.success or res2.success):
        raise ArimaFitError(
            f"ARMA({p},{q}) estimation did not converge within {max_iter} evaluations",
            best=model,
        )
    return model


def standardized_innovations(series, model: ArimaModel) -> np.ndarray:
    """One-step prediction errors scaled to unit variance under the model."""
    x = np.asarray(series, dtype=float) - model.mean
    e, v = _innovations(x, model.ar, model.ma)
    return e / np.sqrt(model.sigma2 * v)


def box_ljung(residuals, lags: int = BOX_LJUNG_DEFAULT_LAGS, fitted_params: int = 0):
    """Portmanteau test on residual autocorrelations.

    Returns ``(statistic, p_value)`` with chi-square degrees of freedom
    ``lags - fitted_params`` (floored at 1).
    """
    x = np.asarray(residuals, dtype=float)
    n = x.size
    if lags < 1:
        raise ArimaError("lags must be >= 1")
    if n <= lags:
        raise ArimaError("series must be longer than the lag count")
    if lags <= fitted_params:
        raise ArimaError(
            f"lags ({lags}) must exceed the fitted parameter count ({fitted_params})"
        )
    rho = sample_acf(x, lags)[1:]
    k = np.arange(1, lags + 1)
    q_stat = float(n * (n + 2) * np.sum(rho**2 / (n - k)))
    dof = max(lags - fitted_params, 1)
    p_value = float(stats.chi2.sf(q_stat, dof))
    return q_stat, p_value


def aic_value(loglik: float, n_params: int) -> float:
    return -2.0 * loglik + 2.0 * n_params


def aic(model: ArimaModel) -> float:
    """AIC with the innovation variance (and the mean, when fitted) counted."""
    return aic_value(model.loglik, model.n_params)


@dataclass(frozen=True)
class DiagnosticsRow:
    label: str
    loglik: float
    aic: float
    boxljung_p: float
    passed: bool


@dataclass(frozen=True)
class SelectionResult:
    model: ArimaModel
    table: tuple
    all_rejected: bool = False


def select_model(
    series,
    candidates,
    level: float = BOX_LJUNG_LEVEL,
    lags: int = BOX_LJUNG_DEFAULT_LAGS,
) -> SelectionResult:
    """Fit every candidate (p,d,q) and pick the best AIC among Box-Ljung survivors.

    If no candidate passes the test at *level*, the best-AIC model is returned
    with ``all_rejected=True``. The diagnostics table mirrors the columns
    model, loglik, aic, boxljung_p.
    """
    candidates = list(candidates)
    if not candidates:
        raise ArimaError("no candidate orders given")
    x = np.asarray(series, dtype=float)
    rows = []
    fits = []
    errors = []
    for (p, d, q) in candidates:
        try:
            xd = difference(x, d)
            m = fit_arma(xd, p, q, include_mean=(d == 0))
            m = ArimaModel(p, d, q, m.ar, m.ma, m.sigma2, m.loglik, m.n_obs,
                           mean=m.mean, include_mean=m.include_mean)
            resid = standardized_innovations(xd, m)
            _, p_val = box_ljung(resid, lags=lags, fitted_params=p + q)
            rows.append(DiagnosticsRow(m.label(), m.loglik, aic(m), p_val, p_val > level))
            fits.append(m)
        except ArimaError as exc:
            errors.append(f"ARIMA({p},{d},{q}): {exc}")
            rows.append(DiagnosticsRow(f"ARIMA({p},{d},{q})", np.nan, np.nan, np.nan, False))
            fits.append(None)
    ok = [(row.aic, i) for i, row in enumerate(rows) if fits[i] is not None and row.passed]
    warn = not ok
    if warn:
        ok = [(row.aic, i) for i, row in enumerate(rows) if fits[i] is not None]
    if not ok:
        raise ArimaFitError("all candidate fits failed: " + "; ".join(errors))
    _, best_i = min(ok)
    if warn:
        warnings.warn("no candidate passed the Box-Ljung test; returning best AIC")
    return SelectionResult(model=fits[best_i], table=tuple(rows), all_rejected=warn)


def simulate_arima(model: ArimaModel, n: int, seed: int, initial=None) -> np.ndarray:
    """Simulate a path; deterministic given the seed.

    A burn-in of ``10*(p+q+1)`` samples is discarded unless explicit *initial*
    values (the last p pre-sample levels) are supplied. The d-fold cumulative
    summation is applied last.
    """
    if n < 1:
        raise ArimaError("n must be >= 1")
    if not model.is_causal():
        raise ArimaError("cannot simulate a non-causal model")
    rng = np.random.default_rng(seed)
    sd = float(np.sqrt(model.sigma2))
    if initial is None:
        burn = 10 * (model.p + model.q + 1)
        eps = sd * rng.standard_normal(burn + n)
        x = kernels.arma_recursion(model.ar, model.ma, eps)[burn:]
    else:
        hist = np.asarray(initial, dtype=float)
        if hist.size < model.p:
            raise ArimaError(f"need {model.p} initial values")
        eps = sd * rng.standard_normal(n)
        x = np.empty(n)
        for t in range(n):
            s = eps[t]
            for i in range(1, model.p + 1):
                past = x[t - i] if t - i >= 0 else hist[hist.size + t - i]
                s += model.ar[i - 1] * past
            for j in range(1, model.q + 1):
                if t - j >= 0:
                    s += model.ma[j - 1] * eps[t - j]
            x[t] = s
    x = x + model.mean
    return integrate(x, model.d)[model.d:] if model.d else x
