"""Estimator-style wrapper around the EDG optimal-control solver.

``fit`` solves the discrete optimality system for a problem; ``predict``
evaluates the discrete state at points of the unit square, so the fitted
solver can be scored and cloned like any regressor::

    >>> est = EDGOptimalControl(k=2, n=16).fit(builtin_paper_case())
    >>> est.predict([[0.5, 0.5]])
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .edg import STAB_MODES
from .mesh import build_structured_mesh
from .metrics import cost_functional, error_exactness, evaluate
from .mms import ExactSolution, ProblemData, manufacture
from .solver import solve_condensed, solve_monolithic
from .study import field_errors

__all__ = ["EDGOptimalControl"]

_POINT_FIELDS = ("q", "p", "y", "z", "u")


class EDGOptimalControl(RegressorMixin, BaseEstimator):
    """Solve the EDG-discretized optimality system on a structured mesh.

    Parameters
    ----------
    k : int, default=1
        Polynomial degree of all fields and traces (1-4).
    n : int, default=8
        Subdivisions per side of the unit square.
    gamma : float or None, default=None
        Tikhonov weight; ``None`` takes it from the problem passed to ``fit``.
    stab : {"global", "local"}, default="global"
        Stabilization ``1/h`` with the global mesh size or element diameters.
    quad_bump : int, default=0
        Extra quadrature exactness for all integrals.
    route : {"condensed", "monolithic"}, default="condensed"
    """

    def __init__(self, k=1, n=8, gamma=None, stab="global", quad_bump=0, route="condensed"):
        self.k = k
        self.n = n
        self.gamma = gamma
        self.stab = stab
        self.quad_bump = quad_bump
        self.route = route

    def _validate_params(self):
        if self.k not in (1, 2, 3, 4):
            raise ValueError(f"k must be in 1..4, got {self.k!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        if self.stab not in STAB_MODES:
            raise ValueError(f"stab must be one of {STAB_MODES}")
        if self.route not in ("condensed", "monolithic"):
            raise ValueError("route must be 'condensed' or 'monolithic'")

    def fit(self, problem, y=None):
        """Solve for ``problem`` (an ExactSolution or ProblemData)."""
        self._validate_params()
        if isinstance(problem, ExactSolution):
            self.exact_ = problem
            data = manufacture(problem)
        elif isinstance(problem, ProblemData):
            self.exact_ = None
            data = problem
        else:
            raise TypeError("fit expects an ExactSolution or ProblemData")
        gamma = data.gamma if self.gamma is None else float(self.gamma)
        if self.exact_ is not None and gamma != self.exact_.gamma:
            raise ValueError("gamma differs from the exact solution's gamma")

        mesh = build_structured_mesh(self.n)
        solve = solve_condensed if self.route == "condensed" else solve_monolithic
        self.solution_ = solve(mesh, self.k, gamma, data, self.stab, self.quad_bump)
        self.mesh_ = mesh
        self.data_ = data
        self.gamma_ = gamma
        self.diagnostics_ = dict(self.solution_.diagnostics)
        self.n_features_in_ = 2
        return self

    def _points(self, X):
        check_is_fitted(self, "solution_")
        X = check_array(X, dtype=np.float64, ensure_min_features=2)
        if X.shape[1] != 2:
            raise ValueError(f"X must have 2 columns (x1, x2), got {X.shape[1]}")
        return X

    def predict(self, X):
        """Discrete state ``y_h`` at the points ``X``."""
        X = self._points(X)
        return evaluate(self.solution_.y, self.mesh_, self.k, X)

    def predict_fields(self, X) -> dict:
        """All discrete fields at ``X``; fluxes come back with shape (n, 2)."""
        X = self._points(X)
        return {name: evaluate(getattr(self.solution_, name), self.mesh_, self.k, X)
                for name in _POINT_FIELDS}

    def errors(self, exact: ExactSolution | None = None) -> dict:
        """L2 errors of every field against ``exact`` (default: the fitted one)."""
        check_is_fitted(self, "solution_")
        exact = exact if exact is not None else self.exact_
        if exact is None:
            raise ValueError("no exact solution available")
        return field_errors(self.solution_, exact, self.quad_bump)

    def cost(self) -> float:
        """Cost functional evaluated at the discrete state and control."""
        check_is_fitted(self, "solution_")
        sol = self.solution_
        return cost_functional(sol.y, sol.u, self.data_.y_d, self.gamma_, self.mesh_, self.k,
                               error_exactness(self.k, self.quad_bump))
