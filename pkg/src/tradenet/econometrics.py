"""Pooled Poisson and NB2 count regressions with country-clustered inference.

The NB2 model has ``E[y] = mu = exp(X beta)`` and ``Var[y] = mu + alpha mu^2``.
Estimation alternates IRLS for ``beta`` at fixed ``alpha`` with Newton
steps for ``alpha`` at fixed ``beta``, starting from the Poisson fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.special import betaln, digamma, gammaln, polygamma

__all__ = [
    "COVARIATE_COLUMNS",
    "ConvergenceError",
    "SeparationError",
    "DesignMatrix",
    "PoissonFitResult",
    "NbFitResult",
    "VifReport",
    "build_design",
    "make_design",
    "fit_poisson",
    "fit_negbin",
    "nb_loglik",
    "nb_score_hessian",
    "clustered_vcov",
    "sandwich",
    "overdispersion_test",
    "vif",
    "fit_report",
]

COVARIATE_COLUMNS = ("gdppc", "pop", "pop65", "hbeds", "temp")

IRLS_TOL = 1e-10
GRAD_TOL = 1e-8
MAX_OUTER = 500
# log-likelihood changes below this relative size are rounding noise
_LL_NOISE = 1e-13


class ConvergenceError(RuntimeError):
    pass


class SeparationError(ConvergenceError):
    """Coefficients diverge: some fitted means are driven to zero."""


@dataclass(frozen=True)
class DesignMatrix:
    """Response, regressors and cluster ids for one model.

    ``continuous`` lists the z-scored columns; the intercept ``const`` and
    week dummies are left as 0/1.
    """

    y: np.ndarray
    X: np.ndarray
    columns: tuple[str, ...]
    clusters: np.ndarray
    continuous: tuple[str, ...] = ()

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    def col(self, name: str) -> np.ndarray:
        return self.X[:, self.columns.index(name)]

    def subset(self, names: Sequence[str]) -> "DesignMatrix":
        idx = [self.columns.index(c) for c in names]
        return DesignMatrix(self.y, self.X[:, idx], tuple(names), self.clusters,
                            tuple(c for c in self.continuous if c in names))


def _zscore(x: np.ndarray, name: str) -> np.ndarray:
    sd = x.std(ddof=1)
    if not sd > 0 or not np.isfinite(sd):
        raise ValueError(f"column {name!r} has zero variance")
    # centre first so the scale of x cancels exactly up to rounding
    c = x - x.mean()
    return c / c.std(ddof=1)


def make_design(y, continuous: Mapping[str, Sequence[float]], week, clusters,
                standardize: bool = True) -> DesignMatrix:
    """Assemble ``[const, continuous..., week_2..week_T]``.

    The first week is the omitted baseline.
    """
    y = np.asarray(y, dtype=float)
    week = np.asarray(week)
    clusters = np.asarray(clusters)
    n = y.size
    if np.any(~np.isfinite(y)) or np.any(y < 0):
        raise ValueError("response must be finite non-negative counts")
    if len(np.unique(clusters)) < 2:
        raise ValueError("need at least two countries")
    weeks = np.unique(week)
    if weeks.size < 2:
        raise ValueError("need at least two weeks")
    cols = ["const"]
    mats = [np.ones(n)]
    for name, x in continuous.items():
        x = np.asarray(x, dtype=float)
        if x.shape != (n,) or np.any(~np.isfinite(x)):
            raise ValueError(f"column {name!r} is missing values")
        mats.append(_zscore(x, name) if standardize else x)
        cols.append(name)
    for w in weeks[1:]:
        mats.append((week == w).astype(float))
        cols.append(f"week_{w}")
    return DesignMatrix(y, np.column_stack(mats), tuple(cols), clusters, tuple(continuous))


def build_design(panel, tnc: Mapping[str, float], tnc_name: str, response: str = "infections",
                 covariates: Sequence[str] = COVARIATE_COLUMNS) -> DesignMatrix:
    """Design for one centrality measure from a list of panel observations.

    Parameters
    ----------
    panel : iterable of PanelObservation (or a Panel)
    tnc : country -> centrality value
    tnc_name : column label for the centrality regressor
    response : ``"infections"`` or ``"deaths"``
    """
    obs = getattr(panel, "observations", panel)
    obs = sorted(obs, key=lambda o: (o.country, o.week))
    missing = sorted({o.country for o in obs if o.country not in tnc})
    if missing:
        raise ValueError(f"no {tnc_name} value for: {', '.join(missing)}")
    cont = {tnc_name: [tnc[o.country] for o in obs]}
    for c in covariates:
        cont[c] = [getattr(o, c) for o in obs]
    return make_design(
        [getattr(o, response) for o in obs],
        cont,
        [o.week for o in obs],
        [o.country for o in obs],
    )


# --- likelihoods ----------------------------------------------------------------


def _poisson_ll(y, mu):
    return float(np.sum(y * np.log(np.where(y > 0, mu, 1.0)) - mu - gammaln(y + 1)))


def _lgamma_ratio(y, r):
    """``lgamma(y + r) - lgamma(r)``, accurate for large ``r``."""
    out = np.zeros_like(y, dtype=float)
    pos = y > 0
    yp = y[pos]
    out[pos] = gammaln(yp) - betaln(r, yp) if np.ndim(r) == 0 else gammaln(yp) - betaln(r[pos], yp)
    return out


def nb_loglik(y, mu, alpha) -> float:
    """NB2 log-likelihood; ``alpha = 0`` gives the Poisson log-likelihood."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if alpha == 0:
        return _poisson_ll(y, mu)
    r = 1.0 / alpha
    l1p = np.log1p(alpha * mu)
    ll = _lgamma_ratio(y, r) - gammaln(y + 1) - r * l1p
    ll += np.where(y > 0, y * (np.log(alpha * mu) - l1p), 0.0)
    return float(ll.sum())


def _alpha_derivs(y, mu, alpha):
    """Per-observation first and second derivative of the NB2 log-likelihood in alpha."""
    r = 1.0 / alpha
    am = 1.0 + alpha * mu
    l1p = np.log1p(alpha * mu)
    dpsi = digamma(y + r) - digamma(r)
    g = r * r * (l1p - dpsi) + r * (y - mu) / am
    dtri = polygamma(1, y + r) - polygamma(1, r)
    h = (-2.0 * r**3 * (l1p - dpsi)
         + r * r * (mu / am + r * r * dtri)
         - r * r * (y - mu) / am
         - r * (y - mu) * mu / am**2)
    return g, h


def nb_score_hessian(X, y, beta, alpha):
    """Per-observation scores (n, k+1) and the Hessian (k+1, k+1) for ``(beta, alpha)``."""
    mu = np.exp(X @ beta)
    am = 1.0 + alpha * mu
    sb = X * ((y - mu) / am)[:, None]
    g, h = _alpha_derivs(y, mu, alpha)
    scores = np.column_stack([sb, g])
    k = X.shape[1]
    H = np.empty((k + 1, k + 1))
    H[:k, :k] = -(X * (mu * (1.0 + alpha * y) / am**2)[:, None]).T @ X
    hba = -(X * (mu * (y - mu) / am**2)[:, None]).sum(axis=0)
    H[:k, k] = H[k, :k] = hba
    H[k, k] = h.sum()
    return scores, H


def _poisson_score_hessian(X, y, beta):
    mu = np.exp(X @ beta)
    return X * (y - mu)[:, None], -(X * mu[:, None]).T @ X


# --- fits -------------------------------------------------------------------------


@dataclass
class PoissonFitResult:
    columns: tuple[str, ...]
    coefficients: np.ndarray
    loglik: float
    deviance: float
    converged: bool
    iterations: int
    cov_model: np.ndarray = field(repr=False)
    cov: np.ndarray | None = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return self.coefficients.size

    @property
    def irr(self) -> np.ndarray:
        return np.exp(self.coefficients)


@dataclass
class NbFitResult:
    """NB2 fit. ``cov`` is the clustered covariance of ``(beta, alpha)``."""

    columns: tuple[str, ...]
    coefficients: np.ndarray
    alpha: float
    cov: np.ndarray = field(repr=False)
    cov_model: np.ndarray = field(repr=False)
    loglik: float
    loglik_null: float
    n_obs: int
    n_clusters: int
    converged: bool
    iterations: int
    boundary: bool = False

    @property
    def k(self) -> int:
        """Estimated parameters, ``alpha`` included."""
        return self.coefficients.size + 1

    @property
    def irr(self) -> np.ndarray:
        return np.exp(self.coefficients)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov)[:-1])

    @property
    def alpha_se(self) -> float:
        return float(math.sqrt(self.cov[-1, -1])) if np.isfinite(self.cov[-1, -1]) else float("nan")

    @property
    def aic(self) -> float:
        return -2.0 * self.loglik + 2.0 * self.k

    @property
    def bic(self) -> float:
        return -2.0 * self.loglik + self.k * math.log(self.n_obs)

    @property
    def pseudo_r2(self) -> float:
        """McFadden's ``1 - ll / ll0`` against the intercept-only NB2 model."""
        return 1.0 - self.loglik / self.loglik_null

    @property
    def z(self) -> np.ndarray:
        return self.coefficients / self.se

    @property
    def p_values(self) -> np.ndarray:
        return 2.0 * stats.norm.sf(np.abs(self.z))


def _wls(X, w, z):
    Xw = X * w[:, None]
    return np.linalg.solve(Xw.T @ X, Xw.T @ z)


def _irls(X, y, beta, alpha, tol=IRLS_TOL, max_iter=200):
    """IRLS for ``beta`` at fixed ``alpha`` with step halving on the log-likelihood."""
    eta = X @ beta
    mu = np.exp(eta)
    ll = nb_loglik(y, mu, alpha)
    for it in range(1, max_iter + 1):
        w = mu / (1.0 + alpha * mu)
        z = eta + (y - mu) / mu
        new = _wls(X, w, z)
        step = new - beta
        for _ in range(60):
            cand = beta + step
            eta_c = X @ cand
            if np.all(eta_c < 700):
                mu_c = np.exp(eta_c)
                ll_c = nb_loglik(y, mu_c, alpha)
                if ll_c >= ll - 1e-12 * abs(ll):
                    break
            step = step / 2.0
        else:
            raise ConvergenceError("IRLS step halving failed")
        beta, eta, mu = cand, eta_c, mu_c
        change = abs(ll_c - ll) / (abs(ll_c) + 0.1)
        ll = ll_c
        if change < tol:
            return beta, ll, it, True
    return beta, ll, max_iter, False


def _check_separation(X, y, beta):
    mu = np.exp(X @ beta)
    if np.any((y == 0) & (mu < 1e-10)) and np.max(np.abs(beta)) > 15:
        raise SeparationError("coefficients diverge (quasi-complete separation)")


def fit_poisson(design: DesignMatrix, tol: float = IRLS_TOL, max_iter: int = 200) -> PoissonFitResult:
    """Poisson MLE with log link by IRLS.

    Converged when the relative change in deviance falls below ``tol``.
    """
    X, y = design.X, design.y
    if not np.any(y > 0):
        raise ValueError("all-zero response: Poisson likelihood is degenerate")
    mu0 = (y + y.mean()) / 2.0
    beta = _wls(X, mu0, np.log(mu0) + (y - mu0) / mu0)
    beta, ll, it, ok = _irls(X, y, beta, 0.0, tol=tol, max_iter=max_iter)
    _check_separation(X, y, beta)
    if not ok:
        raise ConvergenceError(f"Poisson IRLS did not converge in {max_iter} iterations")
    mu = np.exp(X @ beta)
    dev = 2.0 * float(np.sum(np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0) / mu), 0.0) - (y - mu)))
    _, H = _poisson_score_hessian(X, y, beta)
    res = PoissonFitResult(design.columns, beta, ll, dev, ok, it, np.linalg.inv(-H))
    if len(np.unique(design.clusters)) >= 2:
        res.cov = clustered_vcov(res, design)
    return res


def _alpha_mom(y, mu, dof):
    return float(np.sum((y - mu) ** 2 - y) / np.sum(mu**2)) * y.size / max(dof, 1)


def _score_at_zero(y, mu):
    """Exact limit of the alpha score as alpha -> 0+ (the series form avoids cancellation)."""
    return 0.5 * float(np.sum((y - mu) ** 2 - y))


def _newton_alpha(y, mu, alpha, tol, max_iter=100):
    """Maximize the NB2 log-likelihood in alpha at fixed mu.

    Returns ``(alpha, boundary)``; ``boundary`` means the maximum sits at 0.
    """
    n = y.size
    ll = nb_loglik(y, mu, alpha)
    for _ in range(max_iter):
        g, h = _alpha_derivs(y, mu, alpha)
        G, Hs = g.sum(), h.sum()
        if abs(G) / n < tol:
            return alpha, False
        if Hs < 0:
            step = -G / Hs
            if 0.5 * G * step <= _LL_NOISE * abs(ll):
                return alpha, False
        else:
            step = G / n
        # keep alpha positive and never decrease the likelihood
        while alpha + step <= 0:
            step /= 2.0
        for _ in range(60):
            cand = alpha + step
            ll_c = nb_loglik(y, mu, cand)
            if ll_c >= ll - _LL_NOISE * abs(ll):
                break
            step /= 2.0
        else:
            return alpha, False
        alpha, ll = cand, ll_c
        # digamma differences lose all precision near 0; decide there from the limit
        if alpha < 1e-6 and _score_at_zero(y, mu) <= 0:
            return 0.0, True
    return alpha, False


def _joint_newton(X, y, beta, alpha, tol, max_iter):
    """Newton-Raphson on ``(beta, alpha)`` from a nearby start.

    Stops when the mean gradient max-norm is below ``tol`` or the Newton
    decrement drops to rounding level of the log-likelihood.
    """
    n, k = X.shape
    ll = nb_loglik(y, np.exp(X @ beta), alpha)
    for it in range(1, max_iter + 1):
        scores, H = nb_score_hessian(X, y, beta, alpha)
        g = scores.sum(axis=0)
        done = np.max(np.abs(g)) / n < tol
        try:
            step = np.linalg.solve(-H, g)
        except np.linalg.LinAlgError:
            return beta, alpha, it, False
        dec = float(g @ step)
        if dec <= 0:
            return beta, alpha, it, done
        if done or 0.5 * dec <= _LL_NOISE * abs(ll):
            # at this point the likelihood cannot tell steps apart, but the
            # gradient still can: one last full step lands on the optimum to
            # rounding level, which keeps refits of rescaled data identical
            if alpha + step[k] > 0:
                beta, alpha = beta + step[:k], alpha + step[k]
            return beta, alpha, it, True
        while alpha + step[k] <= 0:
            step /= 2.0
        for _ in range(60):
            b_c, a_c = beta + step[:k], alpha + step[k]
            eta = X @ b_c
            if np.all(eta < 700):
                ll_c = nb_loglik(y, np.exp(eta), a_c)
                if ll_c >= ll - _LL_NOISE * abs(ll):
                    break
            step /= 2.0
        else:
            return beta, alpha, it, False
        beta, alpha, ll = b_c, a_c, ll_c
    return beta, alpha, max_iter, False


def fit_negbin(design: DesignMatrix, tol: float = GRAD_TOL, max_outer: int = MAX_OUTER,
               _null: bool = True) -> NbFitResult:
    """NB2 maximum-likelihood fit with clustered covariance.

    Alternates IRLS for ``beta`` and Newton steps for ``alpha``, then
    polishes with joint Newton steps until the max-norm of the mean
    log-likelihood gradient is below ``tol`` (or the Newton decrement
    reaches rounding level).

    Raises
    ------
    ConvergenceError
        If no convergence within ``max_outer`` rounds.
    """
    X, y = design.X, design.y
    pois = fit_poisson(design)
    beta = pois.coefficients
    mu = np.exp(X @ beta)
    # the Poisson fit is a KKT point of the NB2 problem when the alpha score there is <= 0
    boundary = _score_at_zero(y, mu) <= 0
    alpha, it, converged = 0.0, 0, boundary
    if not boundary:
        alpha = max(_alpha_mom(y, mu, y.size - X.shape[1]), 1e-2)
        ll = nb_loglik(y, mu, alpha)
        for it in range(1, max_outer + 1):
            beta, _, _, _ = _irls(X, y, beta, alpha)
            mu = np.exp(X @ beta)
            alpha, boundary = _newton_alpha(y, mu, alpha, tol)
            if boundary:
                break
            ll_new = nb_loglik(y, mu, alpha)
            if abs(ll_new - ll) <= 1e-8 * abs(ll_new):
                break
            ll = ll_new
    if boundary:
        beta, mu, converged = pois.coefficients, np.exp(X @ pois.coefficients), True
    else:
        beta, alpha, extra, converged = _joint_newton(X, y, beta, alpha, tol, max_outer)
        it += extra
        mu = np.exp(X @ beta)
    if not converged:
        raise ConvergenceError(f"NB2 fit did not converge in {max_outer} rounds")
    ll = nb_loglik(y, mu, alpha)
    if boundary:
        _, Hb = _poisson_score_hessian(X, y, beta)
        k = X.shape[1]
        cov_model = np.full((k + 1, k + 1), np.nan)
        cov_model[:k, :k] = np.linalg.inv(-Hb)
    else:
        _, H = nb_score_hessian(X, y, beta, alpha)
        cov_model = np.linalg.inv(-H)
    ll0 = float("nan")
    if _null:
        ll0 = fit_negbin(design.subset(["const"]), tol=tol, max_outer=max_outer, _null=False).loglik
    res = NbFitResult(
        columns=design.columns,
        coefficients=beta,
        alpha=float(alpha),
        cov=cov_model,
        cov_model=cov_model,
        loglik=ll,
        loglik_null=ll0,
        n_obs=y.size,
        n_clusters=len(np.unique(design.clusters)),
        converged=converged,
        iterations=it,
        boundary=boundary,
    )
    if res.n_clusters >= 2:
        res.cov = clustered_vcov(res, design)
    return res


# --- inference ----------------------------------------------------------------------


def sandwich(scores, hessian, clusters, k: int | None = None) -> np.ndarray:
    """Cluster-robust sandwich ``c * B M B``.

    ``B = (-H)^-1``, ``M = sum_g s_g s_g^T`` over cluster score sums and
    ``c = G/(G-1) * (N-1)/(N-k)``.
    """
    scores = np.asarray(scores, dtype=float)
    clusters = np.asarray(clusters)
    n, p = scores.shape
    k = p if k is None else k
    _, inv = np.unique(clusters, return_inverse=True)
    g = inv.max() + 1
    if g < 2:
        raise ValueError("clustered covariance needs at least two clusters")
    sums = np.zeros((g, p))
    np.add.at(sums, inv, scores)
    meat = sums.T @ sums
    bread = np.linalg.inv(-np.asarray(hessian, dtype=float))
    c = g / (g - 1) * (n - 1) / (n - k)
    V = c * bread @ meat @ bread
    return (V + V.T) / 2.0


def clustered_vcov(fit, design: DesignMatrix) -> np.ndarray:
    """Country-clustered covariance for a Poisson or NB2 fit.

    For NB2 the matrix covers ``(beta, alpha)``; at the ``alpha = 0``
    boundary the alpha row and column are ``nan``.
    """
    X, y = design.X, design.y
    if isinstance(fit, PoissonFitResult):
        s, H = _poisson_score_hessian(X, y, fit.coefficients)
        return sandwich(s, H, design.clusters)
    if fit.boundary:
        s, H = _poisson_score_hessian(X, y, fit.coefficients)
        k = X.shape[1]
        V = np.full((k + 1, k + 1), np.nan)
        V[:k, :k] = sandwich(s, H, design.clusters, k=fit.k)
        return V
    s, H = nb_score_hessian(X, y, fit.coefficients, fit.alpha)
    return sandwich(s, H, design.clusters)


def overdispersion_test(design: DesignMatrix, poisson: PoissonFitResult | None = None,
                        negbin: NbFitResult | None = None) -> dict:
    """Likelihood-ratio test of ``alpha = 0`` against a half chi-square(1) null."""
    poisson = fit_poisson(design) if poisson is None else poisson
    negbin = fit_negbin(design) if negbin is None else negbin
    stat = max(2.0 * (negbin.loglik - poisson.loglik), 0.0)
    p = 0.5 * float(stats.chi2.sf(stat, 1)) if stat > 0 else 1.0
    return {"statistic": stat, "p_value": p, "loglik_poisson": poisson.loglik, "loglik_negbin": negbin.loglik}


@dataclass(frozen=True)
class VifReport:
    columns: tuple[str, ...]
    values: np.ndarray
    collinear: tuple[str, ...] = ()

    @property
    def max(self) -> float:
        return float(np.max(self.values))

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    def as_dict(self) -> dict:
        return {
            "vif": {c: _num(v) for c, v in zip(self.columns, self.values)},
            "max": _num(self.max),
            "mean": _num(self.mean),
            "collinear": list(self.collinear),
        }


def vif(design: DesignMatrix, columns: Sequence[str] | None = None, rtol: float = 1e-10) -> VifReport:
    """Variance inflation factors ``1 / (1 - R^2_j)`` of the non-intercept columns.

    Each auxiliary regression includes an intercept. Columns explained to
    within ``rtol`` of their variance get an infinite VIF and are listed in
    ``collinear``.
    """
    if columns is None:
        columns = [c for c in design.columns if c != "const"]
    Z = np.column_stack([design.col(c) for c in columns])
    n, p = Z.shape
    out = np.empty(p)
    for j in range(p):
        target = Z[:, j]
        others = np.column_stack([np.ones(n), np.delete(Z, j, axis=1)])
        coef, *_ = np.linalg.lstsq(others, target, rcond=None)
        ssr = float(np.sum((target - others @ coef) ** 2))
        sst = float(np.sum((target - target.mean()) ** 2))
        out[j] = np.inf if ssr <= rtol * sst else sst / ssr
    bad = tuple(c for c, v in zip(columns, out) if np.isinf(v))
    return VifReport(tuple(columns), out, bad)


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def fit_report(fit: NbFitResult, vif_report: VifReport | None = None, lr: dict | None = None) -> dict:
    """JSON-ready summary: per-column coefficient, clustered SE, IRR, p-value and fit statistics."""
    cols = {}
    for k, c in enumerate(fit.columns):
        b, se = float(fit.coefficients[k]), float(fit.se[k])
        cols[c] = {
            "coefficient": b,
            "se": _num(se),
            "irr": math.exp(b),
            "irr_se": _num(math.exp(b) * se),
            "z": _num(b / se),
            "p_value": _num(fit.p_values[k]),
        }
    a_se = fit.alpha_se
    alpha = {
        "value": fit.alpha,
        "se": _num(a_se),
        "p_wald": _num(2.0 * stats.norm.sf(fit.alpha / a_se)) if a_se > 0 else None,
        "p_lr": None if lr is None else lr["p_value"],
        "boundary": fit.boundary,
    }
    rep = {
        "columns": cols,
        "alpha": alpha,
        "loglik": fit.loglik,
        "loglik_null": fit.loglik_null,
        "aic": fit.aic,
        "bic": fit.bic,
        "pseudo_r2": fit.pseudo_r2,
        "n_obs": fit.n_obs,
        "n_clusters": fit.n_clusters,
        "converged": fit.converged,
        "iterations": fit.iterations,
    }
    if vif_report is not None:
        rep["max_vif"] = _num(vif_report.max)
        rep["mean_vif"] = _num(vif_report.mean)
    if lr is not None:
        rep["overdispersion_lr"] = {"statistic": lr["statistic"], "p_value": lr["p_value"]}
    return rep
