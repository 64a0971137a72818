"""Oscillatory 1D family showing why the coefficient bound K is needed.

On the interval (-R, R) the family

    A_m = (pi/2 + 2 m pi)^2 / r^2
    q_m = A_m on |x| < r,   1 on r <= |x| <= R
    u_m = cos(sqrt(A_m) x) / sqrt(A_m) on |x| < r,   -sin(|x| - r) outside

consists of exact solutions of u'' + q_m u = 0 (C^1-matched at the
interface) whose internal measurements stay uniformly close,

    || q_2m u_2m^2 - q_m u_m^2 ||_inf <= 2   for every m,

while the coefficients separate without bound in every L^p norm.  No
estimate of ||q_1 - q_2|| by the data discrepancy can therefore hold
uniformly: as m grows, the required coefficient bound K = A_m blows up
like m^2 and is the *only* a-priori hypothesis that fails; the
nondegeneracy integral of q_m u_m^2 stays bounded below independently
of m.  Everything here is closed form; grids appear only for sampled
sup norms and finite-difference residual checks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractViolation

__all__ = [
    "OscillatoryFamily",
    "PathologyRow",
    "eval_q",
    "eval_u",
    "coefficient_gap",
    "h_integral",
    "pathology_table",
    "residual_check",
    "write_pathology_csv",
]


@dataclass(frozen=True)
class OscillatoryFamily:
    """One family member: inner radius r, outer radius rr (r < rr), index m."""

    r: float
    rr: float
    m: int

    def __post_init__(self):
        if not 0 < self.r < self.rr:
            raise ContractViolation(
                f"radii must satisfy 0 < r < rr, got r={self.r}, rr={self.rr}"
            )
        if self.m < 1:
            raise ContractViolation(f"family index must be >= 1, got {self.m}")

    @property
    def a_m(self) -> float:
        return (np.pi / 2 + 2 * self.m * np.pi) ** 2 / self.r**2


def _check_domain(fam: OscillatoryFamily, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > fam.rr * (1 + 1e-15)):
        raise ContractViolation(
            f"evaluation point outside [-{fam.rr}, {fam.rr}]"
        )
    return x


def eval_q(fam: OscillatoryFamily, x):
    """Coefficient of the family member at x (scalar or array)."""
    x = _check_domain(fam, x)
    return np.where(np.abs(x) < fam.r, fam.a_m, 1.0)


def eval_u(fam: OscillatoryFamily, x):
    """Solution of u'' + q_m u = 0 at x; C^1 across |x| = r by the
    quarter-period phase choice."""
    x = _check_domain(fam, x)
    root_a = np.sqrt(fam.a_m)
    return np.where(
        np.abs(x) < fam.r,
        np.cos(root_a * x) / root_a,
        -np.sin(np.abs(x) - fam.r),
    )


def coefficient_gap(r: float, m: int, p: float) -> float:
    """Closed-form || q_2m - q_m ||_p on (-rr, rr): the difference lives
    on |x| < r with constant height A_2m - A_m."""
    height = ((np.pi / 2 + 4 * m * np.pi) ** 2
              - (np.pi / 2 + 2 * m * np.pi) ** 2) / r**2
    if np.isinf(p):
        return height
    if p < 1:
        raise ContractViolation(f"need p >= 1, got {p}")
    return height * (2.0 * r) ** (1.0 / p)


def h_integral(r: float, rr: float) -> float:
    """Closed form of the nondegeneracy integral of q_m u_m^2 on (-rr, rr);
    the inner part contributes exactly r for every m, so the value is
    independent of the family index."""
    span = rr - r
    return r + span - np.sin(2.0 * span) / 2.0


@dataclass(frozen=True)
class PathologyRow:
    """One table line: data stays 2-close while coefficients separate."""

    m: int
    a_m: float
    data_gap: float
    coef_gaps: dict
    h_integral: float
    k_required: float


def _sample_grid(r: float, rr: float, m: int, per_period: int = 40) -> np.ndarray:
    """Uniform samples resolving the finer (index 2m) oscillation."""
    root_a = np.sqrt((np.pi / 2 + 4 * m * np.pi) ** 2 / r**2)
    periods = 2.0 * rr * root_a / (2.0 * np.pi)
    n = max(2001, int(np.ceil(per_period * periods)) + 1)
    return np.linspace(-rr, rr, n)


def pathology_table(r: float, rr: float, m_max: int,
                    p_list=(1.0,)) -> list[PathologyRow]:
    """Rows m = 1..m_max of the instability table.

    data_gap is the sampled sup of |q_2m u_2m^2 - q_m u_m^2| on a grid
    with at least 40 points per oscillation period; coefficient gaps are
    closed form; k_required = A_m names the hypothesis that fails.
    """
    if m_max < 1:
        raise ContractViolation(f"m_max must be >= 1, got {m_max}")
    ps = sorted(set(float(p) for p in p_list) | {1.0, np.inf})
    rows = []
    h_int = h_integral(r, rr)
    for m in range(1, m_max + 1):
        fam = OscillatoryFamily(r=r, rr=rr, m=m)
        fam2 = OscillatoryFamily(r=r, rr=rr, m=2 * m)
        x = _sample_grid(r, rr, m)
        data1 = eval_q(fam, x) * eval_u(fam, x) ** 2
        data2 = eval_q(fam2, x) * eval_u(fam2, x) ** 2
        gap = float(np.max(np.abs(data2 - data1)))
        rows.append(PathologyRow(
            m=m,
            a_m=fam.a_m,
            data_gap=gap,
            coef_gaps={p: coefficient_gap(r, m, p) for p in ps},
            h_integral=h_int,
            k_required=fam.a_m,
        ))
    return rows


def residual_check(fam: OscillatoryFamily, h: float) -> float:
    """Max centered-difference residual |u'' + q u| of the closed form on
    an h-grid of (-rr, rr), skipping nodes whose stencil straddles the
    interface |x| = r (u'' jumps there, so the scheme's order-2
    consistency only holds branchwise)."""
    if h <= 0:
        raise ContractViolation(f"spacing must be positive, got {h}")
    n = int(round(2.0 * fam.rr / h)) + 1
    x = np.linspace(-fam.rr, fam.rr, n)
    step = x[1] - x[0]
    u = eval_u(fam, x)
    q = eval_q(fam, x)
    inner = slice(1, -1)
    second = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / step**2
    residual = np.abs(second + q[inner] * u[inner])
    keep = np.abs(np.abs(x[inner]) - fam.r) > step
    if not keep.any():
        raise ContractViolation("grid too coarse: every stencil straddles")
    return float(np.max(residual[keep]))


def write_pathology_csv(rows: list[PathologyRow], path) -> Path:
    """Columns: m, A_m, data_gap, coef_gap_p1, coef_gap_pinf, H_integral,
    K_required."""
    path = Path(path)

    def fmt(v) -> str:
        return format(float(v), ".17g")

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["m", "A_m", "data_gap", "coef_gap_p1",
                         "coef_gap_pinf", "H_integral", "K_required"])
        for row in rows:
            writer.writerow([
                row.m, fmt(row.a_m), fmt(row.data_gap),
                fmt(row.coef_gaps[1.0]), fmt(row.coef_gaps[np.inf]),
                fmt(row.h_integral), fmt(row.k_required),
            ])
    return path
