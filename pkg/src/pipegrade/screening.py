"""Shapiro-Wilk normality screening of encoded factor columns.

W and the p-value follow Royston's approximation (AS R94 lineage), valid
for sample sizes 3..5000. Factors whose p-value clears the significance
threshold are kept for modeling; constant columns are degenerate and
always dropped.

Caveat for this domain: the factor columns are 1-5 ordinal ranks with
heavy ties. The test is applied to them as-is, which at survey scale
(n in the hundreds or more) rejects normality for every discrete column.
Small samples or a zero threshold behave more permissively; see README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

from .encoding import EncodedDataset

_NORMAL = NormalDist()

MIN_N = 3
MAX_N = 5000

# Royston correction polynomials, ascending powers.
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)

_PI6 = 1.90985931710274  # 6/pi, exact-p constant for n=3
_STQR = 1.04719755119660  # pi/3


def _poly(coeffs: Sequence[float], x: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def sw_coefficients(n: int) -> list[float]:
    """Length-n weight vector for the W statistic numerator.

    Antisymmetric (a[i] == -a[n-1-i]) with unit sum of squares. Uses Blom
    scores corrected by Royston's polynomials; n == 3 is the closed form.
    """
    if not MIN_N <= n <= MAX_N:
        raise ValueError(f"unsupported sample size {n}: need {MIN_N} <= n <= {MAX_N}")
    if n == 3:
        r = math.sqrt(0.5)
        return [-r, 0.0, r]

    nn2 = n // 2
    an25 = n + 0.25
    m = [_NORMAL.inv_cdf((i - 0.375) / an25) for i in range(1, nn2 + 1)]
    summ2 = 2.0 * math.fsum(mi * mi for mi in m)
    ssumm2 = math.sqrt(summ2)
    rsn = 1.0 / math.sqrt(n)

    a1 = _poly(_C1, rsn) - m[0] / ssumm2
    if n > 5:
        i1 = 3
        a2 = -m[1] / ssumm2 + _poly(_C2, rsn)
        fac = math.sqrt((summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2)
                        / (1.0 - 2.0 * a1 ** 2 - 2.0 * a2 ** 2))
        half = [a1, a2]
    else:
        i1 = 2
        fac = math.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1 ** 2))
        half = [a1]
    half.extend(-mi / fac for mi in m[i1 - 1:])

    full = [-h for h in half]
    if n % 2:
        full.append(0.0)
    full.extend(reversed(half))
    return full


@dataclass(frozen=True)
class ShapiroResult:
    statistic: float  # W, nan when degenerate
    p_value: float
    n: int
    degenerate: bool = False


def shapiro_wilk(sample: Sequence[float]) -> ShapiroResult:
    """W statistic and p-value for one sample; input order is irrelevant.

    A constant sample has zero variance, so W is undefined; it comes back
    as nan with degenerate=True and p_value 0.
    """
    n = len(sample)
    if not MIN_N <= n <= MAX_N:
        raise ValueError(f"unsupported sample size {n}: need {MIN_N} <= n <= {MAX_N}")
    x = sorted(float(v) for v in sample)
    if not all(math.isfinite(v) for v in x):
        raise ValueError("sample contains non-finite values")

    # matches the reference algorithm's small-range guard (ifault 6 there)
    vrange = x[-1] - x[0]
    if vrange < 1e-19:
        return ShapiroResult(math.nan, 0.0, n, degenerate=True)

    a = sw_coefficients(n)

    # Squared correlation between the scaled sample and the weights,
    # computed on centered values; 1 - W directly, to keep precision
    # when W is close to 1.
    xs = [v / vrange for v in x]
    sa = math.fsum(a) / n
    sx = math.fsum(xs) / n
    ssa = math.fsum((ai - sa) ** 2 for ai in a)
    ssx = math.fsum((xi - sx) ** 2 for xi in xs)
    sax = math.fsum((ai - sa) * (xi - sx) for ai, xi in zip(a, xs))
    ssassx = math.sqrt(ssa * ssx)
    w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx)
    w = 1.0 - w1
    w = min(max(w, 0.0), 1.0)

    if n == 3:
        p = _PI6 * (math.asin(math.sqrt(w)) - _STQR)
        return ShapiroResult(w, min(max(p, 0.0), 1.0), n)

    if w1 <= 0.0:
        return ShapiroResult(w, 1.0, n)
    y = math.log(w1)
    if n <= 11:
        gamma = _poly(_G, float(n))
        if y >= gamma:
            return ShapiroResult(w, 1e-19, n)
        y = -math.log(gamma - y)
        mu = _poly(_C3, float(n))
        sigma = math.exp(_poly(_C4, float(n)))
    else:
        ln_n = math.log(n)
        mu = _poly(_C5, ln_n)
        sigma = math.exp(_poly(_C6, ln_n))
    z = (y - mu) / sigma
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return ShapiroResult(w, min(max(p, 0.0), 1.0), n)


@dataclass(frozen=True)
class SWResult:
    factor: str
    n: int
    statistic: float
    p_value: float
    degenerate: bool
    verdict: str  # "keep" | "drop"


@dataclass(frozen=True)
class ScreeningReport:
    alpha: float
    results: tuple[SWResult, ...]

    @property
    def retained(self) -> tuple[str, ...]:
        return tuple(r.factor for r in self.results if r.verdict == "keep")

    @property
    def dropped(self) -> tuple[str, ...]:
        return tuple(r.factor for r in self.results if r.verdict == "drop")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "results": [
                {
                    "factor": r.factor,
                    "n": r.n,
                    "W": None if r.degenerate else r.statistic,
                    "p_value": r.p_value,
                    "degenerate": r.degenerate,
                    "verdict": r.verdict,
                }
                for r in self.results
            ],
            "retained": list(self.retained),
        }

    def render_text(self) -> str:
        lines = [
            f"Normality screening (Shapiro-Wilk, keep when p > {self.alpha:g})",
            f"{'factor':<18}{'n':>6}{'W':>10}{'p':>10}  verdict",
        ]
        for r in self.results:
            w = "   --" if r.degenerate else f"{r.statistic:.4f}"
            note = " (constant)" if r.degenerate else ""
            lines.append(f"{r.factor:<18}{r.n:>6}{w:>10}{r.p_value:>10.4f}  {r.verdict}{note}")
        lines.append(f"retained {len(self.retained)} of {len(self.results)} factors")
        return "\n".join(lines) + "\n"


def screen(dataset: EncodedDataset, alpha: float = 0.05) -> ScreeningReport:
    """Test each factor column; keep it when p > alpha and not degenerate."""
    if not dataset.vectors:
        raise ValueError("cannot screen an empty dataset")
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    results = []
    for j, factor in enumerate(dataset.factor_names):
        column = [v.ranks[j] for v in dataset.vectors]
        r = shapiro_wilk(column)
        keep = (not r.degenerate) and r.p_value > alpha
        results.append(SWResult(factor, r.n, r.statistic, r.p_value, r.degenerate,
                                "keep" if keep else "drop"))
    return ScreeningReport(alpha, tuple(results))
