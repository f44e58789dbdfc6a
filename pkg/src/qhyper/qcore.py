"""Core q-calculus primitives: q-shifted factorials, theta, elementary symmetrics.

All evaluation happens in complex double precision with a base |q| < 1.  The
QContext bundles q together with the truncation knobs every summation in the
package shares, so numerical policy lives in one place.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass

from .errors import DivisionByZero, DomainError, NoConvergence

# Infinite products are truncated once the running factor is within this
# distance of 1; 64 ulps keeps the truncation error far below every tolerance
# used by the identity checks.
_PRODUCT_EPS = 64.0 * sys.float_info.epsilon


@dataclass(frozen=True)
class QContext:
    """Base q plus shared truncation policy.

    infinite_product_cutoff: hard cap on factors of (a; q)_inf
    series_shell_cap:        hard cap on the shell degree |l| of a multiple sum
    rel_tol:                 relative threshold for "this term is negligible"
    stall_window:            consecutive negligible shells needed to stop
    """

    q: complex = 0.5 + 0.0j
    infinite_product_cutoff: int = 300
    series_shell_cap: int = 400
    rel_tol: float = 1e-13
    stall_window: int = 3

    def __post_init__(self):
        qm = abs(self.q)
        if not 0.0 < qm < 1.0:
            raise DomainError(f"need 0 < |q| < 1, got |q| = {qm}")
        if self.infinite_product_cutoff <= 0 or self.series_shell_cap <= 0:
            raise DomainError("cutoffs must be positive")
        if self.rel_tol <= 0.0:
            raise DomainError("rel_tol must be positive")
        if self.stall_window <= 0:
            raise DomainError("stall_window must be positive")


def qpoch_finite(a: complex, l: int, ctx: QContext) -> complex:
    """(a; q)_l for integer l of either sign.

    Negative index follows the standard inversion (a)_{-m} = 1/(a q^{-m}; q)_m,
    which raises DivisionByZero when the inverted product vanishes.
    """
    if l >= 0:
        prod = 1.0 + 0.0j
        aq = complex(a)
        for _ in range(l):
            prod *= 1.0 - aq
            aq *= ctx.q
        return prod
    denom = qpoch_finite(a * ctx.q ** l, -l, ctx)
    if denom == 0:
        raise DivisionByZero(f"(a; q)_{l} undefined: inverted factor vanishes (a={a})")
    return 1.0 / denom


def qpoch_infinite(a: complex, ctx: QContext) -> complex:
    """(a; q)_inf, truncated once |a q^n| drops below 64 ulps."""
    prod = 1.0 + 0.0j
    aq = complex(a)
    for _ in range(ctx.infinite_product_cutoff):
        if abs(aq) < _PRODUCT_EPS:
            break
        prod *= 1.0 - aq
        aq *= ctx.q
    else:
        if abs(aq) >= _PRODUCT_EPS:
            raise NoConvergence(
                f"(a; q)_inf tail still {abs(aq):.1e} after "
                f"{ctx.infinite_product_cutoff} factors (|q| too close to 1)"
            )
    return prod


def qpoch_multi(alist, l, ctx: QContext) -> complex:
    """(a_1, ..., a_r; q)_l — product of q-shifted factorials, l may be inf."""
    prod = 1.0 + 0.0j
    if l is None or (isinstance(l, float) and math.isinf(l)):
        for a in alist:
            prod *= qpoch_infinite(a, ctx)
        return prod
    for a in alist:
        prod *= qpoch_finite(a, l, ctx)
    return prod


def theta(x: complex, ctx: QContext) -> complex:
    """Modified theta function theta(x; q) = (x; q)_inf (q/x; q)_inf."""
    if x == 0:
        raise DomainError("theta(x) needs x != 0")
    return qpoch_infinite(x, ctx) * qpoch_infinite(ctx.q / x, ctx)


def elem_sym(k: int, xs) -> complex:
    """Elementary symmetric polynomial e_k(xs) via the stable one-pass recurrence."""
    xs = list(xs)
    if k < 0 or k > len(xs):
        return 0.0 + 0.0j
    if k == 0:
        return 1.0 + 0.0j
    e = [1.0 + 0.0j] + [0.0 + 0.0j] * k
    for n, x in enumerate(xs, start=1):
        for j in range(min(n, k), 0, -1):
            e[j] = e[j] + x * e[j - 1]
    return e[k]
