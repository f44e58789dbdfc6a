"""Series-layer tests.

Frozen reference values come from mpmath at 40 digits: mp.qhyper for the
r_phi_s cases, and direct high-precision sums for the very-well-poised and
bilateral cases (which were also checked there against their classical product
forms — 6W5 summation and Ramanujan's 1psi1).
"""
import cmath
import math
import random

import pytest

from qhyper.errors import DomainError, NonFinite, TermEvaluationError
from qhyper.qcore import QContext, qpoch_finite, qpoch_infinite
from qhyper.series import (
    KajiharaParams,
    QALParams,
    bilateral_psi,
    kajihara_W,
    phi_D,
    qal_solution,
    ratio_test,
    rphis,
    sum_shells,
    terminating_order,
    vwp_W,
)

CTX = QContext(q=0.5)


def rel(x, y):
    return abs(x - y) / max(abs(x), abs(y), 1e-30)


# ---------------------------------------------------------------- sum_shells


def test_sum_shells_geometric_2d():
    # sum x^l1 y^l2 = 1/((1-x)(1-y))
    x, y = 0.4, 0.3 + 0.2j

    def term(l):
        return x ** l[0] * y ** l[1]

    res = sum_shells(term, 2, CTX)
    exact = 1.0 / ((1 - x) * (1 - y))
    assert res.converged
    assert rel(res.value, exact) < 1e-12
    assert res.last_shell_magnitude <= CTX.rel_tol * max(1.0, abs(res.value))


def test_sum_shells_order_independence():
    # shell order must agree with plain lexicographic summation
    x, y = 0.35, -0.45 + 0.1j

    def term(l):
        return x ** l[0] * y ** l[1] / (1 + l[0] + l[1])

    res = sum_shells(term, 2, CTX)
    lex = sum(
        term((l1, l2)) for l1 in range(120) for l2 in range(120)
    )
    assert rel(res.value, lex) < 1e-12


def test_sum_shells_term_failure():
    def term(l):
        if l[0] == 3:
            raise ZeroDivisionError("boom")
        return 0.5 ** l[0]

    with pytest.raises(TermEvaluationError):
        sum_shells(term, 1, CTX)


def test_sum_shells_nonfinite():
    def term(l):
        return float("inf") if l[0] == 2 else 1.0

    with pytest.raises(NonFinite):
        sum_shells(term, 1, CTX)


def test_sum_shells_no_convergence_flag():
    res = sum_shells(lambda l: 1.0, 1, CTX, shell_cap=20)
    assert not res.converged
    assert res.shells_used == 21


def test_terminating_order():
    assert terminating_order(1.0, CTX) == 0
    assert terminating_order(4.0, CTX) == 2
    assert terminating_order(4.0 * (1 + 1e-15), CTX) == 2
    assert terminating_order(0.37, CTX) is None
    ctx = QContext(q=0.55 + 0.2j)
    assert terminating_order(ctx.q ** -3, ctx) == 3


# --------------------------------------------------------------------- rphis


def test_rphis_matches_mpmath():
    # mp.qhyper([0.3+0.1j, 0.45], [0.7], 0.5, 0.4+0.2j)
    res = rphis([0.3 + 0.1j, 0.45], [0.7], 0.4 + 0.2j, CTX)
    assert res.converged
    assert rel(res.value, 2.667455771083574961215 + 1.41469592675061968525j) < 1e-13
    # r < s+1 picks up the (-1)^l q^C(l,2) factor: mp.qhyper([0.3],[0.7,0.2+0.1j],0.5,0.9+0.3j)
    res = rphis([0.3], [0.7, 0.2 + 0.1j], 0.9 + 0.3j, CTX)
    assert rel(res.value, 7.744855476832628731241 + 4.405905904350936287444j) < 1e-13


def test_rphis_q_binomial_theorem():
    a, z = 0.6, 0.3 + 0.4j
    res = rphis([a], [], z, CTX)
    prod = qpoch_infinite(a * z, CTX) / qpoch_infinite(z, CTX)
    assert rel(res.value, prod) < 1e-12
    assert rel(res.value, 1.076923687342232736846 + 0.4821694858855006503386j) < 1e-13


def test_rphis_terminating_exact():
    # upper parameter q^{-3}: exact sum over l = 0..3
    a = CTX.q ** -3
    res = rphis([a, 0.4], [0.6], 2.5, CTX)  # |z| > 1 fine when terminating
    brute = sum(
        qpoch_finite(a, l, CTX)
        * qpoch_finite(0.4, l, CTX)
        / (qpoch_finite(CTX.q, l, CTX) * qpoch_finite(0.6, l, CTX))
        * 2.5 ** l
        for l in range(4)
    )
    assert res.converged
    assert res.shells_used == 4
    assert rel(res.value, brute) < 1e-14


def test_rphis_domain_errors():
    with pytest.raises(DomainError):
        rphis([0.3, 0.4], [0.5], 1.2, CTX)  # r = s+1 needs |z| < 1
    with pytest.raises(DomainError):
        rphis([0.3, 0.4, 0.5], [0.6], 0.5, CTX)  # r > s+1, not terminating


# --------------------------------------------------------------------- vwp_W


def test_vwp_terminating_6W5():
    # 6W5(a; b, c, q^-n; a q^(n+1)/(bc)), n = 5 — classical summation value
    a, b, c, n = 0.4, 0.3 + 0.2j, 0.25, 5
    z = a * CTX.q ** (n + 1) / (b * c)
    res = vwp_W(a, [b, c, CTX.q ** -n], z, CTX)
    assert res.converged and res.shells_used == n + 1
    ref = -7.416534687553795834051 - 3.288380099845067997934j
    assert rel(res.value, ref) < 1e-13
    prod = (
        qpoch_finite(a * CTX.q, n, CTX)
        * qpoch_finite(a * CTX.q / (b * c), n, CTX)
        / (qpoch_finite(a * CTX.q / b, n, CTX) * qpoch_finite(a * CTX.q / c, n, CTX))
    )
    assert rel(res.value, prod) < 1e-13


def test_vwp_nonterminating_6W5():
    a, b, c, d = 0.3, 0.8, 0.7 + 0.2j, 0.6
    z = a * CTX.q / (b * c * d)
    res = vwp_W(a, [b, c, d], z, CTX)
    ref = 1.027729261667075008115 - 0.05093351621151036134397j
    assert res.converged
    assert rel(res.value, ref) < 1e-12


def test_vwp_domain_error():
    with pytest.raises(DomainError):
        vwp_W(0.3, [0.4, 0.5, 0.6], 1.1, CTX)


# -------------------------------------------------------------- bilateral_psi


def test_bilateral_ramanujan_1psi1():
    a, b, z = 0.8, 0.3, 0.55 + 0.1j
    res = bilateral_psi([a], [b], z, CTX)
    ref = -0.23772526133357175283 + 0.5374904587636668481336j
    assert res.converged
    assert rel(res.value, ref) < 1e-12


def test_bilateral_annulus_enforced():
    with pytest.raises(DomainError):
        bilateral_psi([0.8], [0.3], 0.2, CTX)  # |b/a| = 0.375 > |z|
    with pytest.raises(DomainError):
        bilateral_psi([0.8], [0.3], 1.1, CTX)


def test_bilateral_one_sided_when_lower_is_q():
    # lower parameter q makes (q/d)_m = (1)_m = 0: negative side vanishes,
    # and the annulus requirement is waived
    a, z = 0.7, 0.4
    res = bilateral_psi([a], [CTX.q], z, CTX)
    one_sided = rphis([a], [], z, CTX)  # (q)_l denominator built in
    assert rel(res.value, one_sided.value) < 1e-13


# ----------------------------------------------------------------- kajihara_W


def test_kajihara_M1_is_vwp():
    # W^{1,N} is a (2N+4)W(2N+3) in disguise
    rng = random.Random(11)
    for N in (1, 2):
        x = 0.7 + 0.1j
        a = 0.5 + 0.2j
        u = tuple(cmath.rect(rng.uniform(0.3, 0.8), rng.uniform(0, 6.28)) for _ in range(1 + N))
        v = tuple(cmath.rect(rng.uniform(0.3, 0.8), rng.uniform(0, 6.28)) for _ in range(N))
        z = 0.4 - 0.1j
        res = kajihara_W(KajiharaParams(x=(x,), a=a, u=u, v=v, z=z), CTX)
        rest = [x * uj for uj in u] + list(v)
        ref = vwp_W(a * x, rest, z, CTX)
        assert rel(res.value, ref.value) < 1e-12


def test_kajihara_symmetric_in_x():
    p = KajiharaParams(
        x=(0.6, 0.35 + 0.15j),
        a=0.45,
        u=(0.3, 0.7, 0.52 - 0.2j),
        v=(0.65 + 0.1j,),
        z=0.38,
    )
    q = KajiharaParams(x=(p.x[1], p.x[0]), a=p.a, u=p.u, v=p.v, z=p.z)
    assert rel(kajihara_W(p, CTX).value, kajihara_W(q, CTX).value) < 1e-12


def test_kajihara_terminating_cap():
    n = 4
    p = KajiharaParams(
        x=(0.6, 0.35),
        a=0.45,
        u=(0.3, 0.7, 0.5),
        v=(CTX.q ** -n,),
        z=2.0,  # |z| >= 1 is fine when the series terminates
    )
    res = kajihara_W(p, CTX)
    assert res.converged
    assert res.shells_used == n + 1


def test_kajihara_divergence_guard():
    p = KajiharaParams(x=(0.6,), a=0.45, u=(0.3, 0.7), v=(0.4,), z=1.05)
    with pytest.raises(DomainError):
        kajihara_W(p, CTX)


# ------------------------------------------------- duality transformations


def _rand_unit(rng, lo=0.3, hi=0.85):
    return cmath.rect(rng.uniform(lo, hi), rng.uniform(0, 2 * math.pi))


def _kajitrans_sides(M, N, n, rng, ctx):
    q = ctx.q
    xs = tuple(_rand_unit(rng) for _ in range(M))
    ys = tuple(_rand_unit(rng) for _ in range(N))
    bs = tuple(_rand_unit(rng) for _ in range(M + N + 2))
    a = _rand_unit(rng)
    c = _rand_unit(rng)
    mu = (
        a ** (N + 2)
        * q ** (N + 1)
        * math.prod(ys)
        / (c ** (N + 1) * math.prod(bs) * math.prod(xs))
    )
    lhs = kajihara_W(
        KajiharaParams(
            x=xs,
            a=a,
            u=bs,
            v=tuple(c / yk for yk in ys) + (mu * c * q ** n, q ** float(-n)),
            z=q,
        ),
        ctx,
    )
    pref = 1.0 + 0.0j
    for xi in xs:
        pref *= qpoch_finite(a * q * xi, n, ctx) / qpoch_finite(mu * c / (a * xi), n, ctx)
    for bj in bs:
        pref *= qpoch_finite(mu * c * bj / a, n, ctx) / qpoch_finite(a * q / bj, n, ctx)
    for yk in ys:
        pref *= qpoch_finite(c / yk, n, ctx) / qpoch_finite(mu * q * yk, n, ctx)
    rhs = kajihara_W(
        KajiharaParams(
            x=ys,
            a=mu,
            u=tuple(a * q / (c * bj) for bj in bs),
            v=tuple(mu * c / (a * xi) for xi in xs) + (mu * c * q ** n, q ** float(-n)),
            z=q,
        ),
        ctx,
    )
    return lhs.value, pref * rhs.value


def test_kajihara_transformation():
    rng = random.Random(2024)
    combos = [(M, N, n) for M in (1, 2) for N in (1, 2) for n in range(4)]
    draws = 0
    for M, N, n in combos:
        lhs, rhs = _kajitrans_sides(M, N, n, rng, CTX)
        assert rel(lhs, rhs) < 1e-10, (M, N, n)
        draws += 1
    # a few extra draws at the largest shape to reach 20 total
    while draws < 20:
        lhs, rhs = _kajitrans_sides(2, 2, 3, rng, CTX)
        assert rel(lhs, rhs) < 1e-10
        draws += 1


def test_W_M3_to_vwp():
    # W^{M,3} with v = (c, mu c q^k, q^-k) collapses to a single 2M+8 W 2M+7
    rng = random.Random(77)
    q = CTX.q
    for M in (1, 2):
        for k in (1, 2):
            xs = tuple(_rand_unit(rng) for _ in range(M))
            bs = tuple(_rand_unit(rng) for _ in range(M + 3))
            a = _rand_unit(rng)
            c = _rand_unit(rng)
            mu = a ** 3 * q ** 2 / (c ** 2 * math.prod(bs) * math.prod(xs))
            lhs = kajihara_W(
                KajiharaParams(
                    x=xs,
                    a=a,
                    u=bs,
                    v=(c, mu * c * q ** k, q ** float(-k)),
                    z=q,
                ),
                CTX,
            )
            pref = qpoch_finite(c, k, CTX) / qpoch_finite(mu * q, k, CTX)
            for xi in xs:
                pref *= qpoch_finite(a * q * xi, k, CTX) / qpoch_finite(mu * c / (a * xi), k, CTX)
            for bj in bs:
                pref *= qpoch_finite(mu * c * bj / a, k, CTX) / qpoch_finite(a * q / bj, k, CTX)
            rest = (
                [mu * c / (a * xi) for xi in xs]
                + [a * q / (c * bj) for bj in bs]
                + [mu * c * q ** k, q ** float(-k)]
            )
            rhs = vwp_W(mu, rest, q, CTX)
            assert rel(lhs.value, pref * rhs.value) < 1e-10, (M, k)


# --------------------------------------------------------------------- phi_D


def test_phi_D_brute_force():
    p = QALParams(A=0.3 + 0.1j, B=(0.2, 0.5), C=0.6, x=(0.45, -0.3 + 0.2j))
    res = phi_D(p, CTX)
    brute = 0.0 + 0.0j
    for l1 in range(80):
        for l2 in range(80):
            s = l1 + l2
            brute += (
                qpoch_finite(p.A, s, CTX)
                / qpoch_finite(p.C, s, CTX)
                * qpoch_finite(p.B[0], l1, CTX)
                / qpoch_finite(CTX.q, l1, CTX)
                * qpoch_finite(p.B[1], l2, CTX)
                / qpoch_finite(CTX.q, l2, CTX)
                * p.x[0] ** l1
                * p.x[1] ** l2
            )
    assert res.converged
    assert rel(res.value, brute) < 1e-12


def test_phi_D_small_x_limit():
    p = QALParams(A=0.4, B=(0.3, 0.6), C=0.7, x=(1e-4, 1e-4))
    res = phi_D(p, CTX)
    assert abs(res.value - 1.0) < 1e-3


def test_phi_D_domain():
    with pytest.raises(DomainError):
        phi_D(QALParams(A=0.3, B=(0.2,), C=0.6, x=(1.0,)), CTX)


# ------------------------------------------------------- solution families


def test_qal_family2_domain():
    p = QALParams(A=0.3, B=(0.4, 0.5), C=0.6, x=(0.2, 0.3))
    # |C/(B1 B2)| = 3 >= 1
    with pytest.raises(DomainError):
        qal_solution(2, p, CTX)


def test_qal_families_converge():
    p = QALParams(A=0.35 + 0.1j, B=(0.6, 0.7), C=0.25, x=(0.3, 0.25 - 0.1j))
    for fam in (1, 2, 3):
        res = qal_solution(fam, p, CTX)
        assert res.converged, fam
        assert res.value != 0


def test_ratio_test_probe():
    z = 0.4
    assert ratio_test(lambda l: z ** sum(l) * 0.9 ** l[0], 2, 6)
    assert not ratio_test(lambda l: 1.02 ** sum(l), 2, 6)
