"""Numerical certification of the kernel estimates.

Each region bound has the form ``|T_k(x, y)| <= C g(x, y)`` on a region of
the quadrant. The constant is fitted as ``max |T_k|/g`` on a coarse sample,
then checked against a denser sample that reaches closer to the region's
edges; a bound passes when the refined maximum stays within
``REFINE_SLACK`` of the fitted constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernels import Convention

REFINE_SLACK = 0.05
DETAILED_BALANCE_TOL = 1e-12
BRANCH_TOL = 1e-10
DIAGONAL_BAND = 1.0 / 8.0


def _bracket(x, y):
    return np.abs(kernels.inv_sinh(np.abs(x * x - y * y)) - kernels.inv_sinh(x * x + y * y))


def _grid2(a, b, n, log):
    space = np.geomspace if log else np.linspace
    u, v = np.meshgrid(space(a[0], a[1], n), space(b[0], b[1], n), indexing="ij")
    return u.ravel(), v.ravel()


# Samplers take a refinement level k (1 = fit, 2 = check) and return (x, y).
def _reach(k):
    # outer extent of unbounded regions: 20 for the fit, 200 for the check
    return 20.0 * 10.0 ** (k - 1)


def _square(R):
    def s(k):
        return _grid2((10.0 ** -k, R), (10.0 ** -k, R), 40 * k, True)
    return s


def _band(k):
    x, d = _grid2((0.4, _reach(k)), (-DIAGONAL_BAND, DIAGONAL_BAND), 40 * k, False)
    y = x + d
    keep = (x + y > 1) & (y > 0)
    return x[keep], y[keep]


def _far_from_small(k):
    x, y = _grid2((10.0 ** -k, 1.0), (1.0, _reach(k)), 40 * k, True)
    keep = (x < 1) & (y > np.minimum(2.0, 1.5 * x))
    return x[keep], y[keep]


def _intermediate(k):
    x, d = _grid2((0.5, _reach(k)), (DIAGONAL_BAND, _reach(k)), 40 * k, True)
    x = np.concatenate([x, x])
    y = np.concatenate([x[: d.size] + d, x[: d.size] - d])
    keep = (x + y > 1) & (np.abs(x - y) > DIAGONAL_BAND) & (np.abs(x - y) < x / 2) & (y > 0)
    return x[keep], y[keep]


def _below_half(k):
    x, r = _grid2((0.1, _reach(k)), (1e-3 ** k, 0.499), 40 * k, True)
    return x, x * r


def _below_half_far(k):
    x, y = _below_half(k)
    keep = x + y > 1
    return x[keep], y[keep]


def _right_of_small(delta):
    def s(k):
        x, d = _grid2((10.0 ** -k, 0.999), (delta, _reach(k)), 40 * k, True)
        return x, x + d
    return s


def _above_three_halves(k):
    x, r = _grid2((0.1, _reach(k)), (1.5, 10.0 * k), 40 * k, True)
    y = x * r
    keep = x + y > 1
    return x[keep], y[keep]


@dataclass(frozen=True)
class RegionBound:
    name: str
    kernel: str
    sampler: object = field(repr=False)
    bound: object = field(repr=False)


def _ones(x, y):
    return np.ones_like(x)


REGIONS = (
    RegionBound("T1: x, y in (0, 2)", "T1", _square(2.0), lambda x, y: x * y),
    RegionBound("T1: x, y in (0, 1/2)", "T1", _square(0.5),
                lambda x, y: y / x * (np.minimum(x, y) ** 2 + (x * x + y * y) ** 3)),
    RegionBound("T1: x + y > 1, |x - y| <= 1/8", "T1", _band, _ones),
    RegionBound("T1: x < 1, y > min(2, 3x/2)", "T1", _far_from_small, lambda x, y: x / y ** 3),
    RegionBound("T1: x + y > 1, 1/8 < |x - y| < x/2", "T1", _intermediate,
                lambda x, y: y / x * (2 * np.minimum(x, y) ** 2
                                      / np.abs((x * x - y * y) * (x * x + y * y)) + _bracket(x, y))),
    RegionBound("T1: y < x/2", "T1", _below_half,
                lambda x, y: y / x * (kernels.inv_sinh(0.75 * x * x)
                                      + np.minimum(x, y) ** 2 / np.maximum(x, y) ** 4)),
    RegionBound("T2: x, y in (0, 2)", "T2", _square(2.0), _ones),
    RegionBound("T2: x < 1, y > x + 1/10", "T2", _right_of_small(0.1),
                lambda x, y: x * y * kernels.inv_sinh(y * y)),
    RegionBound("T2: x + y > 1, |x - y| < 1/8", "T2", _band, _ones),
    RegionBound("T2: x + y > 1, 1/8 < |x - y| < x/2", "T2", _intermediate, _bracket),
    RegionBound("T2: x + y > 1, y < x/2", "T2", _below_half_far,
                lambda x, y: kernels.inv_sinh(0.75 * x * x)),
    RegionBound("T2: x + y > 1, y >= 3x/2", "T2", _above_three_halves,
                lambda x, y: np.exp(-(y * y - x * x)) * (np.exp(-(y * y - x * x)) + x * x / (y * y))
                * (y / x) ** 3),
)

_KERNELS = {"T1": kernels.kernel_T1, "T2": kernels.kernel_T2}


def _max_ratio(region: RegionBound, level: int):
    x, y = region.sampler(level)
    keep = x != y
    x, y = x[keep], y[keep]
    g = region.bound(x, y)
    t = np.abs(_KERNELS[region.kernel](x, y))
    ok = g > 1e-280
    r = t[ok] / g[ok]
    i = int(np.argmax(r))
    return float(r[i]), float(x[ok][i]), float(y[ok][i]), int(ok.sum())


def check_region(region: RegionBound) -> dict:
    fit, *_ = _max_ratio(region, 1)
    check, px, py, n = _max_ratio(region, 2)
    passed = bool(np.isfinite(fit) and np.isfinite(check) and check <= fit * (1 + REFINE_SLACK))
    return {"region": region.name, "C_fit": fit, "C_refined": check,
            "worst_point": [px, py], "samples": n, "pass": passed}


def detailed_balance_residual(convention=Convention.SINH_X2, n: int = 60) -> float:
    """``max |w6 M - W x^4 y^4 / 4| / (w6 M)`` over a log-spaced sample."""
    x, y = _grid2((1e-2, 6.0), (1e-2, 6.0), n, True)
    keep = x != y
    x, y = x[keep], y[keep]
    lhs = kernels.pair_weight(x, convention) * x ** 6 * kernels.kernel_M(x, y)
    rhs = 0.25 * kernels.kernel_W(x, y) * x ** 4 * y ** 4
    good = lhs > 1e-290
    return float(np.max(np.abs(lhs[good] - rhs[good]) / lhs[good]))


def branch_agreement(n: int = 200) -> float:
    """Gap between the series and direct forms of ``T`` at the switch threshold.

    Relative to ``max(|T|, |T1|, |T2|)``: ``T`` itself crosses zero close to
    the diagonal for small ``x``, where a plain relative gap is meaningless.
    """
    x = np.geomspace(0.3, 10.0, n)
    worst = 0.0
    for sign in (1.0, -1.0):
        d = kernels.NEAR_DIAGONAL_REL * np.maximum(1.0, x * x)
        y = np.sqrt(x * x + sign * d)
        a = kernels.kernel_T_series(x, y)
        b = kernels.kernel_T_direct(x, y)
        scale = np.maximum.reduce([np.abs(b), np.abs(kernels.kernel_T1(x, y)),
                                   np.abs(kernels.kernel_T2(x, y))])
        worst = max(worst, float(np.max(np.abs(a - b) / scale)))
    return worst


def mass_supremum(column: bool = False, x_top: float = 1e3, n: int = 25) -> tuple[float, float]:
    """``sup_x int_0^inf |T(x, y)| dy`` over a log grid on ``[1e-3, x_top]``, and where it sits.

    Rows are cut at ``max(20, 2x)``, past which ``T`` is below ``exp(-3 x^2)``.
    Columns decay only like ``y^-3`` and are cut at ``max(20, 1e3 x)``.
    """
    xs = np.geomspace(1e-3, x_top, n)
    reach = 1e3 if column else 2.0
    vals = np.array([kernels.kernel_row_mass(float(x), max(20.0, reach * x), column=column)
                     for x in xs])
    i = int(np.argmax(vals))
    return float(vals[i]), float(xs[i])


def kernel_report(convention=Convention.SINH_X2) -> dict:
    """Full certification record; ``report['pass']`` is the overall verdict."""
    convention = Convention.parse(convention)
    regions = [check_region(r) for r in REGIONS]
    m_fit, m_at = mass_supremum(False, x_top=1e2, n=21)
    m_fit2, m_at2 = mass_supremum(False, x_top=1e3, n=26)
    mt_fit, mt_at = mass_supremum(True, x_top=1e2, n=21)
    mt_fit2, mt_at2 = mass_supremum(True, x_top=1e3, n=26)
    db = detailed_balance_residual(convention)
    br = branch_agreement()
    mass_ok = (np.isfinite(m_fit) and np.isfinite(mt_fit)
               and m_fit2 <= (1 + REFINE_SLACK) * m_fit
               and mt_fit2 <= (1 + REFINE_SLACK) * mt_fit)
    failures = [f"{r['region']} at (x, y) = ({r['worst_point'][0]:.6g}, {r['worst_point'][1]:.6g}):"
                f" refined constant {r['C_refined']:.6g} exceeds fitted {r['C_fit']:.6g}"
                for r in regions if not r["pass"]]
    if db >= DETAILED_BALANCE_TOL:
        failures.append(f"detailed-balance residual {db:.3e} under {convention.value}")
    if br >= BRANCH_TOL:
        failures.append(f"near-diagonal branch gap {br:.3e}")
    if not mass_ok:
        failures.append(f"row mass sup grows from {m_fit:.6g} (x <= 1e2) to {m_fit2:.6g} (x <= 1e3)"
                        f" or column mass sup from {mt_fit:.6g} to {mt_fit2:.6g}")
    return {
        "convention": convention.value,
        "regions": regions,
        "M_fit": m_fit,
        "M_fit_at_x": m_at,
        "M_refined": m_fit2,
        "M_refined_at_x": m_at2,
        "Mtilde_fit": mt_fit,
        "Mtilde_fit_at_x": mt_at,
        "Mtilde_refined": mt_fit2,
        "Mtilde_refined_at_x": mt_at2,
        "detailed_balance_residual": db,
        "branch_agreement": br,
        "failures": failures,
        "pass": not failures,
    }
