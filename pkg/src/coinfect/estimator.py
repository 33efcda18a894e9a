"""scikit-learn style front end.

:class:`CoinfectionSIR` holds the model rates as constructor parameters
(so ``get_params``/``set_params``/``clone`` work), validates them in
``fit`` and maps carrying capacities to the stable equilibrium in
``predict`` (labels) and ``transform`` (coordinates).

    >>> model = CoinfectionSIR().fit()
    >>> model.predict([0.3, 0.8, 2.0, 8.0]).tolist()
    ['G2', 'G3', 'G6', 'G5']
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .branch import NONE_STABLE, scenario_classify, stable_label, thresholds, transition_diagram
from .exceptions import NonPositiveK, NoneStable
from .params import ParamSet, ScaledParamSet, derive, materialize_scaled, validate, validate_scaled
from .stability import stable_equilibrium


def check_carrying_capacity(X):
    """Validate an array-like of carrying capacities; returns a 1-D float array.

    Accepts shape ``(n,)`` or ``(n, 1)``.
    """
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single column of K values, got shape {X.shape}")
        X = X[:, 0]
    if np.any(X <= 0):
        raise NonPositiveK(f"carrying capacities must be positive, got min {X.min()!r}")
    return X


class CoinfectionSIR(TransformerMixin, BaseEstimator):
    """Two-strain coinfection model with logistic growth.

    Parameters
    ----------
    r : float
        Intrinsic growth rate of the susceptible class.
    alpha : tuple of 3 floats
        Transmission rates; with ``scaled=True`` these are the scale-free
        coefficients ``a_i`` and ``alpha_i = a_i / K``.
    mu : tuple of 3 floats
        Removal rates ``rho_i + d_i``.
    eta, gamma : tuple of 2 floats
        Coinfection rates (scale-free when ``scaled=True``).
    rho, d : optional
        Recovery rates and the five death rates ``d0..d4``.
    scaled : bool
        Contact rates scale like ``1/K``.
    eps_margin : float
        Half-width of the marginal band on the largest real part.

    The defaults are the reference set with transition diagram
    G2 -> G3 -> G6 -> G5 at K = 0.5, 1, 4.
    """

    def __init__(self, r=1.0, alpha=(2.0, 1.0, 0.5), mu=(1.0, 1.0, 1.0), eta=(3.0, 1.2),
                 gamma=(0.2, 0.1), rho=None, d=None, scaled=False, eps_margin=1e-8):
        self.r = r
        self.alpha = alpha
        self.mu = mu
        self.eta = eta
        self.gamma = gamma
        self.rho = rho
        self.d = d
        self.scaled = scaled
        self.eps_margin = eps_margin

    def fit(self, X=None, y=None):
        """Validate the rates; ``X`` and ``y`` are ignored."""
        if self.scaled:
            sp = ScaledParamSet(r=self.r, a=tuple(self.alpha), mu=tuple(self.mu),
                                eta=tuple(self.eta), gamma=tuple(self.gamma),
                                rho=None if self.rho is None else tuple(self.rho),
                                d=None if self.d is None else tuple(self.d))
            self.params_ = validate_scaled(sp)
            self.derived_ = derive(materialize_scaled(sp, 1.0))
            self.swapped_ = False
            self.thresholds_ = []
        else:
            self.params_ = validate(ParamSet(
                r=self.r, alpha=tuple(self.alpha), mu=tuple(self.mu), eta=tuple(self.eta),
                gamma=tuple(self.gamma), rho=None if self.rho is None else tuple(self.rho),
                d=None if self.d is None else tuple(self.d)))
            self.derived_ = derive(self.params_)
            self.swapped_ = self.params_.swapped
            self.thresholds_ = thresholds(self.derived_)
        self.scenario_ = scenario_classify(self.derived_)
        return self

    def _at(self, K):
        if self.scaled:
            return materialize_scaled(self.params_, K)
        return self.params_

    def predict(self, X):
        """Label of the stable equilibrium for each carrying capacity (``'none'`` if absent)."""
        check_is_fitted(self, "params_")
        K = check_carrying_capacity(X)
        return np.array([stable_label(self._at(k), k) for k in K], dtype=object)

    def transform(self, X):
        """Stable equilibrium ``(S, I1, I2, I12)`` per K; NaN rows where none is stable."""
        check_is_fitted(self, "params_")
        K = check_carrying_capacity(X)
        out = np.full((len(K), 4), np.nan)
        for n, k in enumerate(K):
            try:
                out[n] = stable_equilibrium(self._at(k), k, self.eps_margin).coords
            except NoneStable:
                pass
        return out

    def diagram(self, K_max, grid=64):
        check_is_fitted(self, "params_")
        return transition_diagram(self.params_, K_max, grid)

    def get_feature_names_out(self, input_features=None):
        return np.array(["S", "I1", "I2", "I12"], dtype=object)


__all__ = ["CoinfectionSIR", "check_carrying_capacity", "NONE_STABLE"]
