"""Convergence studies and single solves driven by a run configuration."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .edg import STAB_MODES
from .mesh import build_structured_mesh
from .metrics import (
    ConvergenceLevel,
    ConvergenceRecord,
    cost_functional,
    error_exactness,
    l2_error_scalar,
    l2_error_vector,
)
from .mms import ExactSolution, ProblemData, builtin_paper_case, manufacture, zero_data
from .solver import SolutionFields, solve_condensed

__all__ = [
    "DEFAULT_LEVELS",
    "RunConfig",
    "ConfigError",
    "read_config_file",
    "problem_from_config",
    "field_errors",
    "run_convergence_study",
    "run_single",
]

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = (8, 16, 32, 64, 128)
BUILTIN_CASE = "builtin-paper"
QUAD_BUMP = 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    k: int = 1
    levels: tuple = DEFAULT_LEVELS
    gamma: float = 1.0
    case: str = BUILTIN_CASE
    data: str = "manufactured"
    stab: str = "global"
    format: str = "csv"
    out: str | None = None
    quad_bump: bool = False

    def __post_init__(self):
        if self.k not in (1, 2, 3, 4):
            raise ConfigError(f"k must be one of 1, 2, 3, 4; got {self.k!r}")
        levels = tuple(int(n) for n in self.levels)
        if not levels or any(n < 1 for n in levels):
            raise ConfigError("levels must be positive integers")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ConfigError("levels must be strictly increasing")
        object.__setattr__(self, "levels", levels)
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma!r}")
        if self.stab not in STAB_MODES:
            raise ConfigError(f"stab must be one of {STAB_MODES}")
        if self.format not in ("csv", "table"):
            raise ConfigError("format must be 'csv' or 'table'")
        if self.data not in ("manufactured", "zero"):
            raise ConfigError("data must be 'manufactured' or 'zero'")

    @property
    def bump(self) -> int:
        return QUAD_BUMP if self.quad_bump else 0


def _parse_levels(text):
    return tuple(int(tok) for tok in str(text).replace(",", " ").split())


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "case":
            out["case"] = value
        elif key == "gamma":
            out["gamma"] = float(value)
        elif key == "data":
            out["data"] = value
        elif key == "k":
            out["k"] = int(value)
        elif key == "levels":
            out["levels"] = _parse_levels(value)
        elif key == "stab":
            out["stab"] = value
        elif key == "quad_bump":
            out["quad_bump"] = value.lower() in ("1", "true", "yes", "on")
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    if out.get("case", BUILTIN_CASE) != BUILTIN_CASE:
        raise ConfigError(f"{path}: only case = {BUILTIN_CASE} is available from config files")
    return out


def problem_from_config(config: RunConfig) -> tuple[ExactSolution, ProblemData]:
    """Exact fields (for error measurement) and the data actually solved with."""
    if config.case != BUILTIN_CASE:
        raise ConfigError(f"unknown case {config.case!r}")
    exact = builtin_paper_case(config.gamma)
    data = manufacture(exact) if config.data == "manufactured" else zero_data(config.gamma)
    return exact, data


def field_errors(sol: SolutionFields, exact: ExactSolution, quad_bump: int = 0) -> dict:
    mesh, k = sol.mesh, sol.k
    ex = error_exactness(k, quad_bump)
    return {
        "q": l2_error_vector(sol.q, exact.q, mesh, k, ex),
        "p": l2_error_vector(sol.p, exact.p, mesh, k, ex),
        "y": l2_error_scalar(sol.y, exact.y, mesh, k, ex),
        "z": l2_error_scalar(sol.z, exact.z, mesh, k, ex),
        "u": l2_error_scalar(sol.u, exact.u, mesh, k, ex),
    }


def _solve(config, n, data):
    mesh = build_structured_mesh(n)
    return solve_condensed(mesh, config.k, config.gamma, data, config.stab, config.bump)


def run_convergence_study(config: RunConfig) -> ConvergenceRecord:
    exact, data = problem_from_config(config)
    record = ConvergenceRecord(config.k)
    for n in config.levels:
        sol = _solve(config, n, data)
        errors = field_errors(sol, exact, config.bump)
        logger.info("n=%d k=%d e_y=%.4e e_z=%.4e", n, config.k, errors["y"], errors["z"])
        record.append(ConvergenceLevel(n, sol.mesh.h, errors, dict(sol.diagnostics)))
    return record


def run_single(config: RunConfig, n: int) -> dict:
    """Solve on one level and collect a flat summary (insertion-ordered)."""
    config = replace(config, levels=(n,))
    exact, data = problem_from_config(config)
    sol = _solve(config, n, data)
    errors = field_errors(sol, exact, config.bump)
    J = cost_functional(sol.y, sol.u, data.y_d, config.gamma, sol.mesh, config.k,
                        error_exactness(config.k, config.bump))
    summary = {"n": n, "k": config.k, "h": sol.mesh.h, "gamma": config.gamma}
    summary.update({f"e_{name}": v for name, v in errors.items()})
    summary["J"] = J
    summary["trace_dofs"] = sol.trace.size
    summary["linear_residual"] = sol.diagnostics.get("linear_residual", 0.0)
    summary["transmission_residual"] = sol.diagnostics["transmission_residual"]
    summary["u_equals_z_over_gamma"] = bool((sol.u == sol.z / config.gamma).all())
    return summary


def format_summary(summary: dict) -> str:
    lines = []
    for key, value in summary.items():
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = f"{value:.4e}"
        else:
            text = str(value)
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"
