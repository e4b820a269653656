"""Solver-agnostic linear model container."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class ModelError(ValueError):
    """Raised for malformed model edits (bad bounds, unknown ids, name clashes)."""


class VarKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"
    INTEGER = "integer"


class Sense(str, enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    kind: VarKind
    lb: float
    ub: float

    @property
    def is_integer(self) -> bool:
        return self.kind is not VarKind.CONTINUOUS


@dataclass(frozen=True)
class Constraint:
    id: int
    name: str
    coeffs: dict[int, float]
    sense: Sense
    rhs: float


@dataclass
class Objective:
    coeffs: dict[int, float] = field(default_factory=dict)
    constant: float = 0.0


class MilpModel:
    """Minimisation model with continuous, binary and general-integer variables.

    Variables and constraints get dense integer ids in creation order; the ids
    stay valid for the lifetime of the model.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective = Objective()
        self._var_names: dict[str, int] = {}
        self._con_names: dict[str, int] = {}

    # -- construction -----------------------------------------------------

    def add_variable(
        self,
        kind: VarKind | str = VarKind.CONTINUOUS,
        lb: float = 0.0,
        ub: float = math.inf,
        name: str | None = None,
    ) -> int:
        kind = VarKind(kind)
        if kind is VarKind.BINARY:
            lb, ub = max(0.0, float(lb)), min(1.0, float(ub))
        lb, ub = float(lb), float(ub)
        if math.isnan(lb) or math.isnan(ub):
            raise ModelError(f"NaN bound on variable {name!r}")
        if lb > ub:
            raise ModelError(f"variable {name!r}: lower bound {lb} exceeds upper bound {ub}")
        vid = len(self.variables)
        if name is None:
            name = f"x{vid}"
        if name in self._var_names:
            raise ModelError(f"duplicate variable name {name!r}")
        self._var_names[name] = vid
        self.variables.append(Variable(vid, name, kind, lb, ub))
        return vid

    def add_constraint(
        self,
        terms: Iterable[tuple[int, float]],
        sense: Sense | str,
        rhs: float,
        name: str | None = None,
    ) -> int:
        sense = Sense(sense)
        coeffs: dict[int, float] = {}
        nvar = len(self.variables)
        for vid, coef in terms:
            if not (0 <= vid < nvar):
                raise ModelError(f"constraint {name!r} references unknown variable id {vid}")
            coeffs[vid] = coeffs.get(vid, 0.0) + float(coef)
        cid = len(self.constraints)
        if name is None:
            name = f"c{cid}"
        if name in self._con_names:
            raise ModelError(f"duplicate constraint name {name!r}")
        self._con_names[name] = cid
        self.constraints.append(Constraint(cid, name, coeffs, sense, float(rhs)))
        return cid

    def set_objective(self, terms: Iterable[tuple[int, float]], constant: float = 0.0) -> None:
        coeffs: dict[int, float] = {}
        nvar = len(self.variables)
        for vid, coef in terms:
            if not (0 <= vid < nvar):
                raise ModelError(f"objective references unknown variable id {vid}")
            coeffs[vid] = coeffs.get(vid, 0.0) + float(coef)
        self.objective = Objective(coeffs, float(constant))

    def set_bounds(self, vid: int, lb: float, ub: float) -> None:
        var = self.variables[vid]
        if lb > ub:
            raise ModelError(f"variable {var.name!r}: lower bound {lb} exceeds upper bound {ub}")
        self.variables[vid] = Variable(vid, var.name, var.kind, float(lb), float(ub))

    # -- queries ------------------------------------------------------------

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def variable_id(self, name: str) -> int:
        return self._var_names[name]

    def integer_ids(self) -> list[int]:
        return [v.id for v in self.variables if v.is_integer]

    def counts(self) -> dict[str, int]:
        kinds = {k: 0 for k in VarKind}
        for v in self.variables:
            kinds[v.kind] += 1
        senses = {s: 0 for s in Sense}
        for c in self.constraints:
            senses[c.sense] += 1
        return {
            "continuous": kinds[VarKind.CONTINUOUS],
            "binary": kinds[VarKind.BINARY],
            "integer": kinds[VarKind.INTEGER],
            "le": senses[Sense.LE],
            "eq": senses[Sense.EQ],
            "ge": senses[Sense.GE],
        }

    def to_arrays(self) -> "LinearArrays":
        n, m = self.num_variables, self.num_constraints
        A = np.zeros((m, n))
        for c in self.constraints:
            for vid, coef in c.coeffs.items():
                A[c.id, vid] = coef
        cvec = np.zeros(n)
        for vid, coef in self.objective.coeffs.items():
            cvec[vid] = coef
        return LinearArrays(
            c=cvec,
            constant=self.objective.constant,
            A=A,
            senses=[c.sense for c in self.constraints],
            rhs=np.array([c.rhs for c in self.constraints], dtype=float),
            lb=np.array([v.lb for v in self.variables], dtype=float),
            ub=np.array([v.ub for v in self.variables], dtype=float),
            integer=np.array([v.is_integer for v in self.variables], dtype=bool),
        )

    def evaluate_objective(self, x: Sequence[float]) -> float:
        return self.objective.constant + sum(c * x[v] for v, c in self.objective.coeffs.items())

    def violations(self, x: Sequence[float], tol: float = 1e-6) -> list[str]:
        """Describe every bound, row or integrality violation of ``x`` beyond ``tol``."""
        out = []
        for v in self.variables:
            val = x[v.id]
            if val < v.lb - tol or val > v.ub + tol:
                out.append(f"bound {v.name}={val:.9g} outside [{v.lb}, {v.ub}]")
            if v.is_integer and abs(val - round(val)) > tol:
                out.append(f"integrality {v.name}={val:.9g}")
        for c in self.constraints:
            lhs = sum(coef * x[vid] for vid, coef in c.coeffs.items())
            if c.sense is Sense.LE and lhs > c.rhs + tol:
                out.append(f"row {c.name}: {lhs:.9g} > {c.rhs:.9g}")
            elif c.sense is Sense.GE and lhs < c.rhs - tol:
                out.append(f"row {c.name}: {lhs:.9g} < {c.rhs:.9g}")
            elif c.sense is Sense.EQ and abs(lhs - c.rhs) > tol:
                out.append(f"row {c.name}: {lhs:.9g} != {c.rhs:.9g}")
        return out


@dataclass
class LinearArrays:
    """Dense array view of a model: min c'x + constant, A x (senses) rhs, lb <= x <= ub."""

    c: np.ndarray
    constant: float
    A: np.ndarray
    senses: list[Sense]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
