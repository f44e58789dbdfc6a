"""Unit tests for the q-calculus primitives.

Reference values were computed independently with mpmath at 30 digits
(mp.qp for q-shifted factorials); they are frozen here so the tests do not
depend on mpmath at runtime.
"""
import cmath
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from qhyper.errors import DivisionByZero, DomainError
from qhyper.qcore import QContext, elem_sym, qpoch_finite, qpoch_infinite, qpoch_multi, theta

CTX = QContext(q=0.5)


def test_qpoch_finite_empty_and_single():
    assert qpoch_finite(0.7, 0, CTX) == 1.0
    assert abs(qpoch_finite(0.7, 1, CTX) - 0.3) < 1e-15


def test_qpoch_finite_matches_mpmath():
    # mpmath: qp(0.3, 0.5, 4) = 0.5297359375 (exact in binary for these inputs)
    assert abs(qpoch_finite(0.3, 4, CTX) - 0.5297359375) < 1e-15
    # complex a and q: qp(0.4+0.25j, 0.55+0.2j, 6)
    ctx = QContext(q=0.55 + 0.2j)
    ref = 0.31502189263417577751 - 0.46880986040836835304j
    assert abs(qpoch_finite(0.4 + 0.25j, 6, ctx) - ref) < 1e-14


def test_qpoch_infinite_matches_mpmath():
    # truncation at 64 ulps leaves a tail of the same order, so 1e-13 here
    assert abs(qpoch_infinite(0.3, CTX) - 0.51011782663398757183) < 1e-13
    ctx = QContext(q=0.55 + 0.2j)
    ref = 0.32600941808664581893 - 0.48792596132805105238j
    assert abs(qpoch_infinite(0.4 + 0.25j, ctx) - ref) < 1e-13


def test_qpoch_finite_vs_infinite_ratio():
    # (a)_l == (a)_inf / (a q^l)_inf
    for l in range(9):
        fin = qpoch_finite(0.3, l, CTX)
        ratio = qpoch_infinite(0.3, CTX) / qpoch_infinite(0.3 * CTX.q ** l, CTX)
        assert abs(fin - ratio) <= 1e-12 * abs(fin)


@settings(max_examples=80, deadline=None, derandomize=True)
@given(
    re=st.floats(-0.9, 0.9),
    im=st.floats(-0.9, 0.9),
    l=st.integers(0, 12),
)
def test_qpoch_recurrence(re, im, l):
    a = complex(re, im)
    lhs = qpoch_finite(a, l + 1, CTX)
    rhs = qpoch_finite(a, l, CTX) * (1 - a * CTX.q ** l)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_qpoch_negative_index_inverts():
    a = 0.37 + 0.21j
    for l in range(1, 7):
        prod = qpoch_finite(a, l, CTX) * qpoch_finite(a * CTX.q ** l, -l, CTX)
        assert abs(prod - 1.0) < 1e-13


def test_qpoch_negative_index_pole():
    # (q)_{-1} = 1/(1; q)_1 = 1/0
    with pytest.raises(DivisionByZero):
        qpoch_finite(CTX.q, -1, CTX)


def test_qpoch_multi():
    alist = [0.2, 0.4 + 0.1j]
    val = qpoch_multi(alist, 5, CTX)
    assert abs(val - qpoch_finite(0.2, 5, CTX) * qpoch_finite(0.4 + 0.1j, 5, CTX)) < 1e-15
    vinf = qpoch_multi(alist, math.inf, CTX)
    assert abs(vinf - qpoch_infinite(0.2, CTX) * qpoch_infinite(0.4 + 0.1j, CTX)) < 1e-15


def test_theta_matches_mpmath():
    ctx = QContext(q=0.3)
    ref = 0.11468463637254275034 + 0.051063456061467354509j
    assert abs(theta(0.4 + 0.1j, ctx) - ref) < 1e-14


def test_theta_quasi_periodicity():
    ctx = QContext(q=0.3)
    rng = random.Random(7)
    for _ in range(50):
        z = cmath.rect(rng.uniform(0.3, 2.0), rng.uniform(0, 2 * math.pi))
        lhs = theta(ctx.q * z, ctx)
        rhs = (-1.0 / z) * theta(z, ctx)
        assert abs(lhs - rhs) <= 1e-11 * max(1.0, abs(rhs))
        # inversion symmetry theta(x) = theta(q/x)
        assert abs(theta(z, ctx) - theta(ctx.q / z, ctx)) <= 1e-11 * max(1.0, abs(theta(z, ctx)))


def test_theta_down_shift():
    # theta(x/q) = -(x/q) theta(x), a consequence of the quasi-periodicity
    ctx = QContext(q=0.4)
    x = 0.7 + 0.3j
    lhs = theta(x / ctx.q, ctx)
    rhs = -(x / ctx.q) * theta(x, ctx)
    assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_theta_zero_rejected():
    with pytest.raises(DomainError):
        theta(0.0, CTX)


def test_elem_sym_small_cases():
    assert elem_sym(2, [1, 2, 3]) == 11
    assert elem_sym(0, [5, 6]) == 1
    assert elem_sym(3, [5, 6]) == 0
    assert elem_sym(2, [5, 6]) == 30


def test_elem_sym_generating_function():
    rng = random.Random(3)
    xs = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(6)]
    for t in (0.3, -0.7, 0.5 + 0.2j, 1.1, -0.25j):
        direct = 1.0
        for x in xs:
            direct *= 1 + t * x
        series = sum(elem_sym(k, xs) * t ** k for k in range(len(xs) + 1))
        assert abs(direct - series) <= 1e-12 * max(1.0, abs(direct))


def test_qcontext_rejects_bad_q():
    with pytest.raises(DomainError):
        QContext(q=1.0)
    with pytest.raises(DomainError):
        QContext(q=0.0)
    with pytest.raises(DomainError):
        QContext(q=0.5, rel_tol=0.0)
