"""Jackson (q-)integrals on geometric lattices, and the balanced integrands.

The two parameter bundles:

  BalancedParams — a_1..a_{M+3}, b_1..b_{M+3} with a_1...a_{M+3} =
      q^2 b_1...b_{M+3}; integrand psi(t) = prod (a_k t)_inf/(b_k t)_inf.
  JPParams — Jordan-Pochhammer-type data with a fractional power t^(alpha-1),
      fixed through q^alpha = alpha_power.

Fractional powers never get evaluated pointwise on the lattice: the base value
tau^(alpha-1) is fixed once (principal branch unless the caller passes it in),
and lattice steps multiply by exact integer powers of q^alpha.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DomainError, NoConvergence, NonFinite, PoleHit
from .qcore import QContext

_ZERO_SNAP = 1e-12


@dataclass(frozen=True)
class BalancedParams:
    """Balanced parameter lists a, b of length M+3 each.

    The balance constraint and the genericity condition (no a_i/a_j on the
    q-lattice) are checked by .check(ctx), which samplers call; evaluation
    routines trust their input so that deliberately broken parameters (for
    negative controls) can still be evaluated.
    """

    a: tuple
    b: tuple

    @property
    def M(self) -> int:
        return len(self.a) - 3

    def check(self, ctx: QContext, tol: float = 1e-10):
        if len(self.a) != len(self.b):
            raise DomainError("BalancedParams needs len(a) == len(b)")
        if self.M < 1:
            raise DomainError("BalancedParams needs at least 4 entries (M >= 1)")
        if any(ak == 0 for ak in self.a):
            raise DomainError("BalancedParams needs all a_k != 0")
        pa = math.prod(self.a)
        pb = ctx.q * ctx.q * math.prod(self.b)
        if abs(pa - pb) > tol * max(abs(pa), abs(pb)):
            raise DomainError(
                f"balance violated: |prod(a) - q^2 prod(b)| / scale = "
                f"{abs(pa - pb) / max(abs(pa), abs(pb))}"
            )
        n = len(self.a)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                r = self.a[i] / self.a[j]
                qm = 1.0 + 0.0j
                for _ in range(64):
                    if abs(r - qm) <= 1e-6 * abs(qm):
                        raise DomainError(f"a_{i + 1}/a_{j + 1} lies on the q-lattice")
                    qm *= ctx.q
                    if abs(qm) < 1e-12 * abs(r):
                        break


@dataclass(frozen=True)
class JPParams:
    """Jordan-Pochhammer-type integrand data.

    alpha_power = q^alpha; A, B scale the x-dependent factor; a, b hold
    a_2..a_{M+3}, b_2..b_{M+3}; tau is the lattice base point.
    """

    alpha_power: complex
    A: complex
    B: complex
    a: tuple
    b: tuple
    tau: complex


def principal_power(base, exponent):
    """base**exponent on the principal branch (base != 0)."""
    return cmath.exp(exponent * cmath.log(base))


def q_exponent(value, ctx: QContext):
    """The principal solution s of q^s = value."""
    return cmath.log(value) / cmath.log(ctx.q)


def _poch_inf_num(arg, ctx: QContext):
    """(arg; q)_inf for a numerator: a factor within 1e-12 of zero is an exact
    zero of the integrand (lattice zeros of (a_k t)_inf), so return 0."""
    prod = 1.0 + 0.0j
    aq = complex(arg)
    for _ in range(ctx.infinite_product_cutoff):
        if abs(aq) < 1e-14:
            break
        f = 1.0 - aq
        if abs(f) < _ZERO_SNAP:
            return 0.0 + 0.0j
        prod *= f
        aq *= ctx.q
    else:
        _check_tail(aq, ctx)
    return prod


def _poch_inf_den(arg, ctx: QContext):
    """(arg; q)_inf for a denominator: a vanishing factor is a pole."""
    prod = 1.0 + 0.0j
    aq = complex(arg)
    for _ in range(ctx.infinite_product_cutoff):
        if abs(aq) < 1e-14:
            break
        f = 1.0 - aq
        if abs(f) < _ZERO_SNAP:
            raise PoleHit(f"denominator factor vanishes at argument {arg}")
        prod *= f
        aq *= ctx.q
    else:
        _check_tail(aq, ctx)
    return prod


def _check_tail(aq, ctx):
    if abs(aq) >= 1e-14:
        raise NoConvergence(
            f"(a; q)_inf tail still {abs(aq):.1e} after "
            f"{ctx.infinite_product_cutoff} factors (|q| too close to 1)"
        )


def _check_finite(v, where):
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise NonFinite(f"non-finite value in {where}")


def jackson_0_to(tau, f, ctx: QContext) -> complex:
    """(1-q) sum_{n>=0} f(tau q^n) tau q^n, with stall-based truncation."""
    if tau == 0:
        return 0.0 + 0.0j
    cap = 4 * ctx.infinite_product_cutoff
    total = 0.0 + 0.0j
    t = complex(tau)
    stall = 0
    for _ in range(cap):
        term = complex(f(t)) * t
        _check_finite(term, "jackson_0_to")
        total += term
        if abs(term) <= ctx.rel_tol * max(1.0, abs(total)):
            stall += 1
            if stall >= ctx.stall_window:
                return (1.0 - ctx.q) * total
        else:
            stall = 0
        t *= ctx.q
    raise NoConvergence(f"jackson_0_to did not stall within {cap} lattice points")


def jackson_bilateral(tau, f, ctx: QContext) -> complex:
    """(1-q) sum_{n in Z} f(tau q^n) tau q^n over the full bilateral lattice."""
    if tau == 0:
        raise DomainError("bilateral lattice needs tau != 0")
    cap = 4 * ctx.infinite_product_cutoff
    total = 0.0 + 0.0j
    t = complex(tau)
    stall = 0
    done = False
    for _ in range(cap):
        term = complex(f(t)) * t
        _check_finite(term, "jackson_bilateral")
        total += term
        if abs(term) <= ctx.rel_tol * max(1.0, abs(total)):
            stall += 1
            if stall >= ctx.stall_window:
                done = True
                break
        else:
            stall = 0
        t *= ctx.q
    if not done:
        raise NoConvergence(f"jackson_bilateral (n >= 0) did not stall within {cap} points")
    t = complex(tau) / ctx.q
    stall = 0
    for _ in range(cap):
        term = complex(f(t)) * t
        _check_finite(term, "jackson_bilateral")
        total += term
        if abs(term) <= ctx.rel_tol * max(1.0, abs(total)):
            stall += 1
            if stall >= ctx.stall_window:
                return (1.0 - ctx.q) * total
        else:
            stall = 0
        t /= ctx.q
    raise NoConvergence(f"jackson_bilateral (n < 0) did not stall within {cap} points")


def jackson_between(tau1, tau2, f, ctx: QContext) -> complex:
    """int_tau1^tau2 = int_0^tau2 - int_0^tau1 on the respective lattices."""
    return jackson_0_to(tau2, f, ctx) - jackson_0_to(tau1, f, ctx)


def rp_integrand(bp: BalancedParams, ctx: QContext):
    """psi(t) = prod_k (a_k t)_inf / (b_k t)_inf with exact lattice zeros and
    PoleHit on denominator zeros."""
    a = tuple(complex(v) for v in bp.a)
    b = tuple(complex(v) for v in bp.b)

    def psi(t):
        val = 1.0 + 0.0j
        for ak in a:
            num = _poch_inf_num(ak * t, ctx)
            if num == 0:
                return 0.0 + 0.0j
            val *= num
        for bk in b:
            val /= _poch_inf_den(bk * t, ctx)
        return val

    return psi


def rp_integral(bp: BalancedParams, i: int, j: int, ctx: QContext) -> complex:
    """phi_{i,j} = int_{q/a_i}^{q/a_j} psi(t) d_q t  (1-based endpoint indices)."""
    n = len(bp.a)
    if not (1 <= i <= n and 1 <= j <= n):
        raise DomainError(f"endpoint indices must lie in 1..{n}")
    if i == j:
        return 0.0 + 0.0j
    psi = rp_integrand(bp, ctx)
    return jackson_between(ctx.q / bp.a[i - 1], ctx.q / bp.a[j - 1], psi, ctx)


def jp_integral(p: JPParams, x, ctx: QContext, tau_power=None) -> complex:
    """Bilateral integral int_0^{tau inf} t^(alpha-1) (Axt)/(Bxt) prod (a_i t)/(b_i t) d_q t,
    each (..) an infinite q-factorial.

    The measure contributes one more power of t, so the lattice weight at
    t = tau q^n is tau^alpha q^(n alpha) = (tau * tau_power) * alpha_power^n —
    one fractional base value, then exact integer powers of q^alpha.
    """
    if abs(p.alpha_power) >= 1:
        raise DomainError("jp_integral needs |q^alpha| < 1")
    growth = (p.A * math.prod(p.a)) / (p.alpha_power * p.B * math.prod(p.b))
    if abs(growth) >= 1:
        raise DomainError(
            f"bilateral convergence violated: |q^-alpha A prod(a)/(B prod(b))| = {abs(growth)}"
        )
    tau = complex(p.tau)
    if tau == 0:
        raise DomainError("jp_integral needs tau != 0")
    if tau_power is None:
        alpha = q_exponent(p.alpha_power, ctx)
        tau_power = principal_power(tau, alpha - 1)

    a = tuple(complex(v) for v in p.a)
    b = tuple(complex(v) for v in p.b)
    Ax = p.A * x
    Bx = p.B * x

    def F(t):
        val = _poch_inf_num(Ax * t, ctx)
        if val == 0:
            return 0.0 + 0.0j
        for ak in a:
            num = _poch_inf_num(ak * t, ctx)
            if num == 0:
                return 0.0 + 0.0j
            val *= num
        val /= _poch_inf_den(Bx * t, ctx)
        for bk in b:
            val /= _poch_inf_den(bk * t, ctx)
        return val

    cap = 4 * ctx.infinite_product_cutoff
    total = 0.0 + 0.0j
    t = tau
    w = tau * tau_power
    stall = 0
    done = False
    for _ in range(cap):
        term = w * F(t)
        _check_finite(term, "jp_integral")
        total += term
        if abs(term) <= ctx.rel_tol * max(1.0, abs(total)):
            stall += 1
            if stall >= ctx.stall_window:
                done = True
                break
        else:
            stall = 0
        t *= ctx.q
        w *= p.alpha_power
    if not done:
        raise NoConvergence(f"jp_integral (n >= 0) did not stall within {cap} points")
    t = tau / ctx.q
    w = tau * tau_power / p.alpha_power
    stall = 0
    for _ in range(cap):
        term = w * F(t)
        _check_finite(term, "jp_integral")
        total += term
        if abs(term) <= ctx.rel_tol * max(1.0, abs(total)):
            stall += 1
            if stall >= ctx.stall_window:
                return (1.0 - ctx.q) * total
        else:
            stall = 0
        t /= ctx.q
        w /= p.alpha_power
    raise NoConvergence(f"jp_integral (n < 0) did not stall within {cap} points")


def degene_integral(j: int, a, b, qlambda, ctx: QContext, tau_power=None) -> complex:
    """int_0^{q/a_j} t^lambda prod_i (a_i t)_inf/(b_i t)_inf d_q t (1-based j).

    Needs |q^(lambda+1)| < 1.  tau_power overrides tau^lambda for lattice
    propagation; default is the principal branch.
    """
    a = tuple(complex(v) for v in a)
    b = tuple(complex(v) for v in b)
    if not 1 <= j <= len(a):
        raise DomainError(f"endpoint index must lie in 1..{len(a)}")
    qlp1 = qlambda * ctx.q
    if abs(qlp1) >= 1:
        raise DomainError(f"degene_integral needs |q^(lambda+1)| < 1, got {abs(qlp1)}")
    tau = ctx.q / a[j - 1]
    if tau_power is None:
        lam = q_exponent(qlambda, ctx)
        tau_power = principal_power(tau, lam)

    def F(t):
        val = 1.0 + 0.0j
        for ak in a:
            num = _poch_inf_num(ak * t, ctx)
            if num == 0:
                return 0.0 + 0.0j
            val *= num
        for bk in b:
            val /= _poch_inf_den(bk * t, ctx)
        return val

    cap = 4 * ctx.infinite_product_cutoff
    total = 0.0 + 0.0j
    t = tau
    w = tau * tau_power  # tau^(lambda+1), then times q^(n(lambda+1))
    stall = 0
    for _ in range(cap):
        term = w * F(t)
        _check_finite(term, "degene_integral")
        total += term
        if abs(term) <= ctx.rel_tol * max(1.0, abs(total)):
            stall += 1
            if stall >= ctx.stall_window:
                return (1.0 - ctx.q) * total
        else:
            stall = 0
        t *= ctx.q
        w *= qlp1
    raise NoConvergence(f"degene_integral did not stall within {cap} points")
