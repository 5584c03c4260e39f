"""Hourly electricity-price model: ARMA terms at lags 1, 2 and 24 plus
weekly-periodic harmonic regressors, estimated by the Hannan-Rissanen
two-stage least-squares procedure. The harmonic count is chosen by AIC.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .exceptions import SingularRegression, TooShort
from .model import HourlySeries, PriceSeries

WEEK_HOURS = 168
AR_LAGS = (1, 2, 24)
MA_LAGS = (1, 2, 24)
LONG_AR = 48
MIN_HISTORY = 21 * 24
PSI_TRUNCATION = 200


def _fourier_columns(hours: np.ndarray, k: int) -> np.ndarray:
    cols = []
    for j in range(1, k + 1):
        w = 2.0 * np.pi * j * hours / WEEK_HOURS
        cols.append(np.sin(w))
        cols.append(np.cos(w))
    if not cols:
        return np.empty((len(hours), 0))
    return np.column_stack(cols)


@dataclass
class SarimaFourierModel:
    """Fitted price model with everything needed to continue the recursion."""

    mu: float
    ar: tuple[float, float, float]  # lags 1, 2, 24
    ma: tuple[float, float, float]  # lags 1, 2, 24
    fourier: list[tuple[float, float]]  # (sin, cos) pairs per harmonic
    sigma: float
    tail_values: np.ndarray  # last LONG_AR observations
    tail_residuals: np.ndarray  # residuals aligned with tail_values
    end_hour: int  # absolute hour index of the first future period
    aic: float = float("nan")
    ar_stationary: bool = True

    @property
    def k(self) -> int:
        return len(self.fourier)

    def _fourier_at(self, hour: float) -> float:
        total = 0.0
        for j, (a, b) in enumerate(self.fourier, start=1):
            w = 2.0 * np.pi * j * hour / WEEK_HOURS
            total += a * np.sin(w) + b * np.cos(w)
        return total

    # -- forecasting -----------------------------------------------------

    def predict(self, n_periods: int) -> PriceSeries:
        """Recursive point forecast with future shocks set to zero."""
        preds = np.empty(n_periods)
        hist = self.tail_values
        resid = self.tail_residuals
        for h in range(n_periods):
            value = self.mu + self._fourier_at(self.end_hour + h)
            for phi, lag in zip(self.ar, AR_LAGS):
                i = h - lag
                value += phi * (preds[i] if i >= 0 else hist[i])
            for theta, lag in zip(self.ma, MA_LAGS):
                i = h - lag
                if i < 0:  # future shocks are zero
                    value += theta * resid[i]
            preds[h] = value
        return PriceSeries(preds, self.end_hour)

    def psi_weights(self, n: int) -> np.ndarray:
        """Leading impulse-response weights of the ARMA part."""
        m = min(n, PSI_TRUNCATION)
        psi = np.zeros(m)
        psi[0] = 1.0
        for j in range(1, m):
            total = 0.0
            for theta, lag in zip(self.ma, MA_LAGS):
                if j == lag:
                    total += theta
            for phi, lag in zip(self.ar, AR_LAGS):
                if j - lag >= 0:
                    total += phi * psi[j - lag]
            psi[j] = total
        return psi

    def forecast_interval(self, n_periods: int, level: float = 0.9):
        """Symmetric Gaussian interval paths around the point forecast."""
        if not 0.0 < level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        point = self.predict(n_periods)
        z = norm.ppf(0.5 + level / 2.0)
        psi2 = np.cumsum(self.psi_weights(n_periods) ** 2)
        var = psi2[np.minimum(np.arange(n_periods), len(psi2) - 1)]
        width = z * self.sigma * np.sqrt(var)
        lower = PriceSeries(point.values - width, point.start_hour)
        upper = PriceSeries(point.values + width, point.start_hour)
        return lower, upper

    def quantile_path(self, n_periods: int, q: float) -> PriceSeries:
        point = self.predict(n_periods)
        z = norm.ppf(q)
        psi2 = np.cumsum(self.psi_weights(n_periods) ** 2)
        var = psi2[np.minimum(np.arange(n_periods), len(psi2) - 1)]
        return PriceSeries(point.values + z * self.sigma * np.sqrt(var),
                           point.start_hour)

    def sample_scenarios(self, n_periods: int, count: int, seed: int) -> list[PriceSeries]:
        """Simulate future paths by pushing Gaussian shocks through the recursion."""
        rng = np.random.default_rng(seed)
        shocks = rng.normal(0.0, self.sigma, size=(count, n_periods))
        hist = self.tail_values
        resid = self.tail_residuals
        out = []
        for s in range(count):
            path = np.empty(n_periods)
            for h in range(n_periods):
                value = self.mu + self._fourier_at(self.end_hour + h) + shocks[s, h]
                for phi, lag in zip(self.ar, AR_LAGS):
                    i = h - lag
                    value += phi * (path[i] if i >= 0 else hist[i])
                for theta, lag in zip(self.ma, MA_LAGS):
                    i = h - lag
                    value += theta * (shocks[s, i] if i >= 0 else resid[i])
                path[h] = value
            out.append(PriceSeries(path, self.end_hour))
        return out

    # -- serialization ---------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "mu": self.mu,
                "phi": list(self.ar),
                "theta": list(self.ma),
                "alpha": [a for a, _ in self.fourier],
                "beta": [b for _, b in self.fourier],
                "K": self.k,
                "sigma": self.sigma,
                "end_hour": self.end_hour,
                "tail_values": self.tail_values.tolist(),
                "tail_residuals": self.tail_residuals.tolist(),
                "aic": self.aic,
                "ar_stationary": self.ar_stationary,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "SarimaFourierModel":
        d = json.loads(text)
        return cls(
            mu=d["mu"],
            ar=tuple(d["phi"]),
            ma=tuple(d["theta"]),
            fourier=list(zip(d["alpha"], d["beta"])),
            sigma=d["sigma"],
            tail_values=np.array(d["tail_values"]),
            tail_residuals=np.array(d["tail_residuals"]),
            end_hour=d["end_hour"],
            aic=d.get("aic", float("nan")),
            ar_stationary=d.get("ar_stationary", True),
        )


def _ar_stationary(ar) -> bool:
    """Roots of 1 - phi1 z - phi2 z^2 - phi24 z^24 outside the unit circle."""
    coeffs = np.zeros(25)
    coeffs[0] = 1.0
    for phi, lag in zip(ar, AR_LAGS):
        coeffs[lag] = -phi
    roots = np.roots(coeffs[::-1])
    return bool(np.all(np.abs(roots) > 1.0 + 1e-9))


def _css_residuals(y, hours, params, k, t_start):
    """Recursive one-step residuals of the model at the given parameters."""
    n = len(y)
    mu, phi, theta, ab = params[0], params[1:4], params[4:7], params[7:]
    four = _fourier_columns(hours, k) @ ab if k else np.zeros(n)
    e = np.zeros(n)
    for t in range(t_start, n):
        v = mu + four[t]
        for j, lag in enumerate(AR_LAGS):
            v += phi[j] * y[t - lag]
        for j, lag in enumerate(MA_LAGS):
            v += theta[j] * e[t - lag]
        e[t] = y[t] - v
    return e


def _gauss_newton(y, hours, params, k, t_start, idx, max_iter):
    """Refine parameters on the conditional sum of squares.

    Each step regresses the recursive residuals on the model regressors
    filtered through the current MA polynomial, with step halving as a
    safeguard. Deterministic.
    """
    n = len(y)
    b = params.copy()
    e = _css_residuals(y, hours, b, k, t_start)
    sse = float(e[idx] @ e[idx])
    for _ in range(max_iter):
        theta = b[4:7]
        cols = [np.ones(n)]
        cols += [np.concatenate([np.zeros(lag), y[:-lag]]) for lag in AR_LAGS]
        cols += [np.concatenate([np.zeros(lag), e[:-lag]]) for lag in MA_LAGS]
        x = np.column_stack(cols)
        if k:
            x = np.hstack([x, _fourier_columns(hours, k)])
        w = np.zeros_like(x)
        for t in range(t_start, n):
            w[t] = x[t]
            for j, lag in enumerate(MA_LAGS):
                w[t] -= theta[j] * w[t - lag]
        direction, *_ = np.linalg.lstsq(w[idx], e[idx], rcond=None)
        step, improved = 1.0, False
        while step > 1e-6:
            cand = b + step * direction
            e_new = _css_residuals(y, hours, cand, k, t_start)
            sse_new = float(e_new[idx] @ e_new[idx])
            if sse_new < sse:
                improved = True
                break
            step /= 2.0
        if not improved:
            break
        converged = (sse - sse_new) < 1e-12 * max(sse, 1.0)
        b, e, sse = cand, e_new, sse_new
        if converged:
            break
    return b, e, sse


def fit_sarima(history: PriceSeries, k_max: int = 6,
               refine: int = 20) -> SarimaFourierModel:
    """Two-stage fit; the harmonic count K is selected by minimum AIC.

    ``refine`` caps the Gauss-Newton polish on the conditional sum of
    squares after the least-squares stages (0 disables it).
    """
    y = np.asarray(history.values, dtype=float)
    n = len(y)
    if n < MIN_HISTORY:
        raise TooShort(f"need at least {MIN_HISTORY} hours of history, got {n}")
    hours = history.start_hour + np.arange(n)

    # stage 1: long autoregression (+ harmonics) to proxy the shocks
    t0 = LONG_AR
    x1 = np.column_stack(
        [np.ones(n - t0)]
        + [y[t0 - lag : n - lag] for lag in range(1, LONG_AR + 1)]
    )
    x1 = np.hstack([x1, _fourier_columns(hours[t0:], k_max)])
    try:
        beta1, *_ = np.linalg.lstsq(x1, y[t0:], rcond=None)
    except np.linalg.LinAlgError as exc:
        raise SingularRegression("long-AR stage failed") from exc
    e = np.zeros(n)
    e[t0:] = y[t0:] - x1 @ beta1

    # stage 2: least squares on the actual model terms, per candidate K
    t1 = LONG_AR + max(MA_LAGS)
    idx = np.arange(t1, n)
    base_cols = [np.ones(len(idx))]
    base_cols += [y[idx - lag] for lag in AR_LAGS]
    base_cols += [e[idx - lag] for lag in MA_LAGS]
    base = np.column_stack(base_cols)
    target = y[idx]
    n_eff = len(idx)

    best = None
    for k in range(k_max + 1):
        x2 = np.hstack([base, _fourier_columns(hours[idx], k)])
        beta2, *_ = np.linalg.lstsq(x2, target, rcond=None)
        resid = target - x2 @ beta2
        sse = max(float(resid @ resid), 1e-12)
        n_params = 1 + len(AR_LAGS) + len(MA_LAGS) + 2 * k + 1  # incl. sigma
        aic = n_eff * np.log(sse / n_eff) + 2 * n_params
        if best is None or aic < best[0] - 1e-12:
            best = (aic, k, beta2, resid, sse)

    aic, k, beta2, resid, sse = best
    full_resid = np.zeros(n)
    full_resid[idx] = resid
    if refine > 0:
        beta2, full_resid, sse = _gauss_newton(y, hours, beta2, k, t1, idx, refine)
    ar = tuple(beta2[1:4])
    ma = tuple(beta2[4:7])
    fourier = [(beta2[7 + 2 * j], beta2[8 + 2 * j]) for j in range(k)]
    sigma = float(np.sqrt(sse / n_eff))
    return SarimaFourierModel(
        mu=float(beta2[0]),
        ar=ar,
        ma=ma,
        fourier=fourier,
        sigma=sigma,
        tail_values=y[-LONG_AR:].copy(),
        tail_residuals=full_resid[-LONG_AR:].copy(),
        end_hour=int(history.start_hour + n),
        aic=float(aic),
        ar_stationary=_ar_stationary(ar),
    )


# thin functional surface over the model class


def predict(model: SarimaFourierModel, n_periods: int) -> PriceSeries:
    return model.predict(n_periods)


def forecast_interval(model: SarimaFourierModel, n_periods: int, level: float = 0.9):
    return model.forecast_interval(n_periods, level)


def sample_scenarios(model: SarimaFourierModel, n_periods: int, count: int,
                     seed: int) -> list[PriceSeries]:
    return model.sample_scenarios(n_periods, count, seed)
