"""Estimator-style wrapper: ``fit`` presolves, ``transform`` returns the
reduced problem and ``inverse_transform`` lifts solutions back."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .checker import check
from .presolve import PresolveConfig, run
from .presolve.postsolve import postsolve
from .presolve.techniques import DEFAULT_ORDER
from .validation import check_problem, check_solution


class CertifyingPresolver(TransformerMixin, BaseEstimator):
    """Presolve a 0-1 ILP and keep the proof certificate.

    Parameters mirror :class:`PresolveConfig`.  After ``fit``:
    ``problem_``, ``reduced_``, ``certificate_`` (None without proof),
    ``postsolve_`` and ``stats_``.
    """

    def __init__(self, techniques=DEFAULT_ORDER, rounds=20, prop_cert="rup", obju_mode="diff",
                 probe_budget=1000, dominance_budget=50, max_fill=50, time_limit=None, proof=True):
        self.techniques = techniques
        self.rounds = rounds
        self.prop_cert = prop_cert
        self.obju_mode = obju_mode
        self.probe_budget = probe_budget
        self.dominance_budget = dominance_budget
        self.max_fill = max_fill
        self.time_limit = time_limit
        self.proof = proof

    def _config(self):
        return PresolveConfig(**self.get_params())

    def fit(self, X, y=None):
        p = check_problem(X)
        res = run(p, self._config())
        self.problem_ = p
        self.reduced_ = res.reduced
        self.certificate_ = res.certificate
        self.postsolve_ = res.postsolve
        self.stats_ = res.stats
        self.infeasible_ = res.infeasible
        self.n_features_in_ = p.n_vars
        return self

    def transform(self, X):
        check_is_fitted(self, "reduced_")
        p = check_problem(X)
        if p != self.problem_:
            raise ValueError("transform expects the problem passed to fit")
        return self.reduced_

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X).reduced_

    def inverse_transform(self, x):
        """Map a reduced-space solution (vector or ``{var: value}``) to a full 0/1 vector."""
        check_is_fitted(self, "reduced_")
        n = self.problem_.n_vars
        sol = check_solution(x, n)
        full = postsolve(self.postsolve_, sol, n)
        return np.array([full[i] for i in range(n)], dtype=np.int8)

    def verify(self):
        """Run the independent checker on the stored certificate."""
        check_is_fitted(self, "reduced_")
        if self.certificate_ is None:
            raise ValueError("fitted with proof=False; no certificate to verify")
        return check(self.problem_, self.certificate_)
