"""q-difference operators on parameter lattices.

An operator is a sum of terms c(p) * T^s where s is an integer shift vector on
named parameters and the coefficient c is evaluated at the *unshifted* point p
(the shift applies to the function only).  Points are dicts name -> value that
always carry the entry 'q'; a lattice offset n on parameter v means v q^n.

LatticeFunction pairs a base point with an evaluator over integer offsets, so
expensive function values (Jackson integrals, multiple series) can be memoized
per offset vector while operators probe them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .qcore import QContext, elem_sym
from .jackson import rp_integral, BalancedParams


@dataclass
class LatticeFunction:
    """base: parameter point (must include 'q'); eval: offsets dict -> complex."""

    base: dict
    eval: callable

    @classmethod
    def cached(cls, base, fn):
        memo = {}

        def ev(offsets):
            key = tuple(sorted((k, v) for k, v in offsets.items() if v))
            if key not in memo:
                memo[key] = fn(offsets)
            return memo[key]

        return cls(base=base, eval=ev)


@dataclass(frozen=True)
class ShiftTerm:
    coeff: callable  # point dict -> complex
    shifts: tuple  # sorted ((name, k), ...) with k != 0


@dataclass(frozen=True)
class ShiftOperator:
    terms: tuple
    name: str = ""


def _shifts_tuple(shifts: dict) -> tuple:
    return tuple(sorted((k, v) for k, v in shifts.items() if v))


def point_at(base: dict, offsets: dict) -> dict:
    q = base["q"]
    pt = dict(base)
    for k, n in offsets.items():
        if k == "q":
            raise DomainError("q itself is never shifted")
        if n:
            pt[k] = base[k] * q ** n
    return pt


def _shift_point(pt: dict, shifts: tuple) -> dict:
    out = dict(pt)
    q = pt["q"]
    for k, n in shifts:
        out[k] = pt[k] * q ** n
    return out


def _merge(offsets: dict, shifts: tuple) -> dict:
    out = dict(offsets)
    for k, n in shifts:
        out[k] = out.get(k, 0) + n
    return out


def const_op(c, name="") -> ShiftOperator:
    fn = c if callable(c) else (lambda pt, _c=complex(c): _c)
    return ShiftOperator(terms=(ShiftTerm(coeff=fn, shifts=()),), name=name)


def shift_op(shifts: dict, coeff=1.0, name="") -> ShiftOperator:
    fn = coeff if callable(coeff) else (lambda pt, _c=complex(coeff): _c)
    return ShiftOperator(terms=(ShiftTerm(coeff=fn, shifts=_shifts_tuple(shifts)),), name=name)


def op_add(*ops, name="") -> ShiftOperator:
    terms = []
    for op in ops:
        terms.extend(op.terms)
    return _normalize(ShiftOperator(terms=tuple(terms), name=name))


def op_scale(op: ShiftOperator, c, name="") -> ShiftOperator:
    if callable(c):
        terms = tuple(
            ShiftTerm(coeff=lambda pt, _f=t.coeff, _c=c: _c(pt) * _f(pt), shifts=t.shifts)
            for t in op.terms
        )
    else:
        c = complex(c)
        terms = tuple(
            ShiftTerm(coeff=lambda pt, _f=t.coeff, _c=c: _c * _f(pt), shifts=t.shifts)
            for t in op.terms
        )
    return ShiftOperator(terms=terms, name=name or op.name)


def op_sub(op1: ShiftOperator, op2: ShiftOperator, name="") -> ShiftOperator:
    return op_add(op1, op_scale(op2, -1.0), name=name)


def op_multiply(op1: ShiftOperator, op2: ShiftOperator, name="") -> ShiftOperator:
    """Composition op1 after op2... careful: (c1 S1)(c2 S2) = c1 (c2 o S1) S1 S2,
    i.e. op1 acts first on coefficients: this is the product op1 * op2 in the
    usual operator order (apply op2's shifts after op1's when reading left to
    right in formulas)."""
    terms = []
    for t1 in op1.terms:
        for t2 in op2.terms:
            def coeff(pt, _c1=t1.coeff, _c2=t2.coeff, _s1=t1.shifts):
                return _c1(pt) * _c2(_shift_point(pt, _s1))

            merged = _merge(dict(t1.shifts), t2.shifts)
            terms.append(ShiftTerm(coeff=coeff, shifts=_shifts_tuple(merged)))
    return _normalize(ShiftOperator(terms=tuple(terms), name=name))


def op_product(ops, name="") -> ShiftOperator:
    out = const_op(1.0)
    for op in ops:
        out = op_multiply(out, op)
    return ShiftOperator(terms=out.terms, name=name)


def _normalize(op: ShiftOperator) -> ShiftOperator:
    groups = {}
    order = []
    for t in op.terms:
        if t.shifts not in groups:
            groups[t.shifts] = []
            order.append(t.shifts)
        groups[t.shifts].append(t.coeff)
    terms = []
    for s in order:
        fns = groups[s]
        if len(fns) == 1:
            terms.append(ShiftTerm(coeff=fns[0], shifts=s))
        else:
            terms.append(
                ShiftTerm(coeff=lambda pt, _fns=tuple(fns): sum(f(pt) for f in _fns), shifts=s)
            )
    return ShiftOperator(terms=tuple(terms), name=op.name)


def op_apply(op: ShiftOperator, f: LatticeFunction, offset: dict) -> complex:
    pt = point_at(f.base, offset)
    total = 0.0 + 0.0j
    for t in op.terms:
        total += t.coeff(pt) * f.eval(_merge(offset, t.shifts))
    return total


def residual(op: ShiftOperator, f: LatticeFunction, offsets) -> tuple:
    """(raw, relative): worst |op f| over the offsets, against the natural scale
    max_offset sum_terms |coeff| |f(shifted)|."""
    raw = 0.0
    scale = 0.0
    for off in offsets:
        pt = point_at(f.base, off)
        val = 0.0 + 0.0j
        sc = 0.0
        for t in op.terms:
            fv = f.eval(_merge(off, t.shifts))
            val += t.coeff(pt) * fv
            sc += abs(t.coeff(pt)) * abs(fv)
        raw = max(raw, abs(val))
        scale = max(scale, sc)
    if scale == 0.0:
        return raw, 0.0 if raw == 0.0 else math.inf
    return raw, raw / scale


# --------------------------------------------------------------------------
# operator builders
# --------------------------------------------------------------------------


def build_EM(M: int, A, B, a, b) -> ShiftOperator:
    """The order-(M+2) factor E_M of the Jordan-Pochhammer-type equation in x.

    A, B and the lists a = (a_2..a_{M+3}), b = (b_2..b_{M+3}) are numeric
    constants; the lattice variable is named 'x'.
    """
    if len(a) != M + 2 or len(b) != M + 2:
        raise DomainError("build_EM needs M+2 entries in a and b")
    A, B = complex(A), complex(B)
    Tinv = shift_op({"x": -1})
    I = const_op(1.0)

    def BA_prod(count):
        # prod_{i=0}^{count-1} (B - A q^i T)
        return op_product(
            op_add(const_op(B), shift_op({"x": 1}, coeff=lambda pt, _i=i: -A * pt["q"] ** _i))
            for i in range(count)
        )

    def Q_prod(count):
        # prod_{i=0}^{count-1} (1 - q^{-i} T)
        return op_product(
            op_add(I, shift_op({"x": 1}, coeff=lambda pt, _i=i: -pt["q"] ** float(-_i)))
            for i in range(count)
        )

    def xpow(n):
        return const_op(lambda pt, _n=n: pt["x"] ** _n)

    pieces = [op_product([xpow(M + 2), Tinv, BA_prod(M + 1)])]
    for k in range(1, M + 2):
        eka = elem_sym(k, a)
        ekb = elem_sym(k, b)
        bracket = op_add(
            op_scale(Tinv, eka),
            const_op(lambda pt, _e=ekb: -pt["q"] * _e),
        )
        piece = op_product([xpow(M + 2 - k), bracket, BA_prod(M + 1 - k), Q_prod(k - 1)])
        pieces.append(op_scale(piece, (-1.0) ** k))
    last = op_product([const_op(math.prod(a) / B), Tinv, Q_prod(M + 1)])
    pieces.append(op_scale(last, (-1.0) ** M))
    return op_add(*pieces, name=f"E_{M}")


def build_JP_general(M: int, qalpha, A, B, a, b) -> ShiftOperator:
    """Full Jordan-Pochhammer q-difference operator (rank M+3 in T_x):
    sum_{k=0}^{M+2} (-1)^k x^{M+2-k} [e_k(a) T^{-1} - q^alpha e_k(b)]
    prod_{i=0}^{M+1-k} (B - A q^i T) prod_{i=0}^{k-1} (1 - q^{-i} T).

    With q^alpha = q and the balance A a_2..a_{M+3} = q^2 B b_2..b_{M+3} this
    factors as (B - A q^{-1} T)(1 - q^{-1-M} T) E_M.
    """
    if len(a) != M + 2 or len(b) != M + 2:
        raise DomainError("build_JP_general needs M+2 entries in a and b")
    A, B, qalpha = complex(A), complex(B), complex(qalpha)
    Tinv = shift_op({"x": -1})
    I = const_op(1.0)

    def BA_prod(count):
        return op_product(
            op_add(const_op(B), shift_op({"x": 1}, coeff=lambda pt, _i=i: -A * pt["q"] ** _i))
            for i in range(count)
        )

    def Q_prod(count):
        return op_product(
            op_add(I, shift_op({"x": 1}, coeff=lambda pt, _i=i: -pt["q"] ** float(-_i)))
            for i in range(count)
        )

    def xpow(n):
        return const_op(lambda pt, _n=n: pt["x"] ** _n)

    pieces = []
    for k in range(M + 3):
        eka = elem_sym(k, a)
        ekb = elem_sym(k, b)
        bracket = op_add(op_scale(Tinv, eka), const_op(-qalpha * ekb))
        piece = op_product([xpow(M + 2 - k), bracket, BA_prod(M + 2 - k), Q_prod(k)])
        pieces.append(op_scale(piece, (-1.0) ** k))
    return op_add(*pieces, name=f"JP_{M}")


def _names(prefix, n):
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def build_EM_hat(bp: BalancedParams) -> ShiftOperator:
    """E_M rewritten on the parameter lattice a_1..a_{M+3}, b_1..b_{M+3},
    where T = T_{a_1} T_{b_1} and every coefficient reads the (possibly
    shifted) parameter point."""
    M = bp.M
    an = _names("a", M + 3)
    bn = _names("b", M + 3)
    Tinv = shift_op({"a1": -1, "b1": -1})
    I = const_op(1.0)

    def AB_prod(count):
        # prod_{i=0}^{count-1} (1 - (a1 q^i / b1) T)
        return op_product(
            op_add(
                I,
                shift_op(
                    {"a1": 1, "b1": 1},
                    coeff=lambda pt, _i=i: -pt["a1"] * pt["q"] ** _i / pt["b1"],
                ),
            )
            for i in range(count)
        )

    def Q_prod(count):
        return op_product(
            op_add(
                I,
                shift_op(
                    {"a1": 1, "b1": 1},
                    coeff=lambda pt, _i=i: -pt["q"] ** float(-_i),
                ),
            )
            for i in range(count)
        )

    def b1pow(n):
        return const_op(lambda pt, _n=n: pt["b1"] ** _n)

    def ek_hat(k, names):
        return lambda pt, _k=k, _ns=tuple(names): elem_sym(_k, [pt[n] for n in _ns])

    pieces = [op_product([b1pow(M + 2), Tinv, AB_prod(M + 1)])]
    for k in range(1, M + 2):
        bracket = op_add(
            op_scale(Tinv, ek_hat(k, an[1:])),
            const_op(lambda pt, _e=ek_hat(k, bn[1:]): -pt["q"] * _e(pt)),
        )
        piece = op_product([b1pow(M + 2 - k), bracket, AB_prod(M + 1 - k), Q_prod(k - 1)])
        pieces.append(op_scale(piece, (-1.0) ** k))
    aprod = const_op(lambda pt: math.prod(pt[n] for n in an[1:]))
    last = op_product([aprod, Tinv, Q_prod(M + 1)])
    pieces.append(op_scale(last, (-1.0) ** M))
    return op_add(*pieces, name=f"Ehat_{M}")


def build_three_term(kind: int, k: int, l, bp: BalancedParams) -> ShiftOperator:
    """Three-term contiguity relations on the a/b lattice, kinds 1..6.

    k (and l where applicable) are 1-based parameter indices in 2..M+3; kinds
    2 and 4 involve only k, and l is ignored there.
    """
    M = bp.M
    hi = M + 3
    if not 2 <= k <= hi:
        raise IndexError(f"k must lie in 2..{hi}")
    if kind in (1, 3, 5, 6):
        if l is None or not 2 <= l <= hi or l == k:
            raise IndexError(f"l must lie in 2..{hi} and differ from k")
    ak, al = f"a{k}", f"a{l}" if l else None
    bk, bl = f"b{k}", f"b{l}" if l else None
    name = f"3term{kind}[{k},{l}]" if kind in (1, 3, 5, 6) else f"3term{kind}[{k}]"

    if kind == 1:
        return op_add(
            shift_op({ak: 1, al: -1}, coeff=lambda pt: pt["a1"] - pt[ak] * pt["q"]),
            shift_op({ak: 1, "a1": -1}, coeff=lambda pt: -(pt[al] - pt[ak] * pt["q"])),
            const_op(lambda pt: pt[al] - pt["a1"]),
            name=name,
        )
    if kind == 2:
        return op_add(
            shift_op({"a1": 1, ak: -1}, coeff=lambda pt: pt["b1"] - pt["a1"]),
            shift_op({"a1": 1, "b1": 1}, coeff=lambda pt: -(pt[ak] / pt["q"] - pt["a1"])),
            const_op(lambda pt: pt[ak] / pt["q"] - pt["b1"]),
            name=name,
        )
    if kind == 3:
        return op_add(
            shift_op({bk: 1, bl: -1}, coeff=lambda pt: pt["b1"] - pt[bl] / pt["q"]),
            shift_op({"b1": 1, bl: -1}, coeff=lambda pt: -(pt[bk] - pt[bl] / pt["q"])),
            const_op(lambda pt: pt[bk] - pt["b1"]),
            name=name,
        )
    if kind == 4:
        return op_add(
            shift_op({bk: 1, "b1": -1}, coeff=lambda pt: pt["a1"] - pt["b1"]),
            shift_op({"a1": -1, "b1": -1}, coeff=lambda pt: -(pt[bk] * pt["q"] - pt["b1"])),
            const_op(lambda pt: pt[bk] * pt["q"] - pt["a1"]),
            name=name,
        )
    if kind == 5:
        return op_add(
            shift_op({ak: 1, bl: 1}, coeff=lambda pt: pt["b1"] - pt[ak]),
            shift_op({ak: 1, "b1": 1}, coeff=lambda pt: -(pt[bl] - pt[ak])),
            const_op(lambda pt: pt[bl] - pt["b1"]),
            name=name,
        )
    if kind == 6:
        return op_add(
            shift_op({ak: -1, bl: -1}, coeff=lambda pt: pt[bl] - pt["a1"]),
            shift_op({"a1": -1, bl: -1}, coeff=lambda pt: -(pt[bl] - pt[ak])),
            const_op(lambda pt: pt["a1"] - pt[ak]),
            name=name,
        )
    raise IndexError(f"unknown three-term kind {kind}")


def build_scaling_relation(bp: BalancedParams) -> ShiftOperator:
    """q T_{a_1}...T_{a_{M+3}} T_{b_1}...T_{b_{M+3}} - 1."""
    M = bp.M
    shifts = {n: 1 for n in _names("a", M + 3) + _names("b", M + 3)}
    return op_add(
        shift_op(shifts, coeff=lambda pt: pt["q"]),
        const_op(-1.0),
        name="scaling",
    )


def build_EM_hat_prime(M: int, qlambda) -> ShiftOperator:
    """First degeneration of E_M-hat: the a_{M+3} -> infinity limit of
    (1/a_{M+3}) E_M-hat on the lattice a_1..a_{M+2}, b_1..b_{M+2}."""
    an = _names("a", M + 2)
    bn = _names("b", M + 2)
    Tinv = shift_op({"a1": -1, "b1": -1})
    I = const_op(1.0)
    qlp1 = complex(qlambda)

    def AB_prod(count):
        return op_product(
            op_add(
                I,
                shift_op(
                    {"a1": 1, "b1": 1},
                    coeff=lambda pt, _i=i: -pt["a1"] * pt["q"] ** _i / pt["b1"],
                ),
            )
            for i in range(count)
        )

    def Q_prod(count):
        return op_product(
            op_add(
                I,
                shift_op({"a1": 1, "b1": 1}, coeff=lambda pt, _i=i: -pt["q"] ** float(-_i)),
            )
            for i in range(count)
        )

    def b1pow(n):
        return const_op(lambda pt, _n=n: pt["b1"] ** _n)

    def ek(knum, names):
        return lambda pt, _k=knum, _ns=tuple(names): elem_sym(_k, [pt[n] for n in _ns])

    pieces = []
    for k in range(1, M + 2):
        bracket = op_add(
            op_scale(Tinv, ek(k - 1, an[1:])),
            const_op(lambda pt, _e=ek(k - 1, bn[1:]): -qlp1 * pt["q"] * _e(pt)),
        )
        piece = op_product([b1pow(M + 2 - k), bracket, AB_prod(M + 1 - k), Q_prod(k - 1)])
        pieces.append(op_scale(piece, (-1.0) ** k))
    aprod = const_op(lambda pt: math.prod(pt[n] for n in an[1:]))
    last = op_product([aprod, Tinv, Q_prod(M + 1)])
    pieces.append(op_scale(last, (-1.0) ** M))
    return op_add(*pieces, name=f"Ehat'_{M}")


def build_EM_hat_dprime(M: int, qlambda) -> ShiftOperator:
    """Second degeneration: the a_{M+2} -> 0 limit of E'_M-hat divided by b_1,
    on the lattice a_1..a_{M+1}, b_1..b_{M+1}.  No trailing group survives."""
    an = _names("a", M + 1)
    bn = _names("b", M + 1)
    Tinv = shift_op({"a1": -1, "b1": -1})
    I = const_op(1.0)
    qlp1 = complex(qlambda)

    def AB_prod(count):
        return op_product(
            op_add(
                I,
                shift_op(
                    {"a1": 1, "b1": 1},
                    coeff=lambda pt, _i=i: -pt["a1"] * pt["q"] ** _i / pt["b1"],
                ),
            )
            for i in range(count)
        )

    def Q_prod(count):
        return op_product(
            op_add(
                I,
                shift_op({"a1": 1, "b1": 1}, coeff=lambda pt, _i=i: -pt["q"] ** float(-_i)),
            )
            for i in range(count)
        )

    def b1pow(n):
        return const_op(lambda pt, _n=n: pt["b1"] ** _n)

    def ek(knum, names):
        return lambda pt, _k=knum, _ns=tuple(names): elem_sym(_k, [pt[n] for n in _ns])

    pieces = []
    for k in range(1, M + 2):
        bracket = op_add(
            op_scale(Tinv, ek(k - 1, an[1:])),
            const_op(lambda pt, _e=ek(k - 1, bn[1:]): -qlp1 * pt["q"] * _e(pt)),
        )
        piece = op_product([b1pow(M + 1 - k), bracket, AB_prod(M + 1 - k), Q_prod(k - 1)])
        pieces.append(op_scale(piece, (-1.0) ** k))
    return op_add(*pieces, name=f"Ehat''_{M}")


def build_degene_system(M: int, qlambda) -> list:
    """All members of the degenerate system on a_1..a_{M+1}, b_1..b_{M+1}.

    For M = 1 the two-index families are empty (no pair 2 <= k != l <= M+1),
    leaving the degenerate equation and the scaling relation.
    """
    ops = [build_EM_hat_dprime(M, qlambda)]
    rng = range(2, M + 2)
    for k in rng:
        for l in rng:
            if k == l:
                continue
            ak, al = f"a{k}", f"a{l}"
            bk, bl = f"b{k}", f"b{l}"
            ops.append(
                op_add(
                    shift_op({al: -1}, coeff=lambda pt, _ak=ak: pt["a1"] - pt[_ak]),
                    shift_op(
                        {"a1": -1},
                        coeff=lambda pt, _ak=ak, _al=al: -(pt[_al] - pt[_ak]),
                    ),
                    shift_op({ak: -1}, coeff=lambda pt, _al=al: pt[_al] - pt["a1"]),
                    name=f"degene1[{k},{l}]",
                )
            )
            ops.append(
                op_add(
                    shift_op({bk: 1}, coeff=lambda pt, _bl=bl: pt["b1"] - pt[_bl]),
                    shift_op(
                        {"b1": 1},
                        coeff=lambda pt, _bk=bk, _bl=bl: -(pt[_bk] - pt[_bl]),
                    ),
                    shift_op({bl: 1}, coeff=lambda pt, _bk=bk: pt[_bk] - pt["b1"]),
                    name=f"degene4[{k},{l}]",
                )
            )
            ops.append(
                op_add(
                    shift_op({bl: 1}, coeff=lambda pt, _ak=ak: pt["b1"] - pt[_ak] / pt["q"]),
                    shift_op(
                        {"b1": 1},
                        coeff=lambda pt, _ak=ak, _bl=bl: -(pt[_bl] - pt[_ak] / pt["q"]),
                    ),
                    shift_op({ak: -1}, coeff=lambda pt, _bl=bl: pt[_bl] - pt["b1"]),
                    name=f"degene5[{k},{l}]",
                )
            )
            ops.append(
                op_add(
                    shift_op(
                        {ak: -1},
                        coeff=lambda pt, _bl=bl: pt["q"] * pt[_bl] - pt["a1"],
                    ),
                    shift_op(
                        {"a1": -1},
                        coeff=lambda pt, _ak=ak, _bl=bl: -(pt["q"] * pt[_bl] - pt[_ak]),
                    ),
                    shift_op({bl: 1}, coeff=lambda pt, _ak=ak: pt["a1"] - pt[_ak]),
                    name=f"degene6[{k},{l}]",
                )
            )
    shifts = {n: 1 for n in _names("a", M + 1) + _names("b", M + 1)}
    qlp1 = complex(qlambda)
    ops.append(
        op_add(
            shift_op(shifts, coeff=lambda pt: qlp1 * pt["q"]),
            const_op(-1.0),
            name="degene-scaling",
        )
    )
    return ops


def build_qal_system(M: int, p) -> list:
    """The q-Appell-Lauricella system on x_1..x_M: M(M-1)/2 mixed relations
    plus M principal ones.  p carries the constants A, B (per-variable), C."""
    A, C = complex(p.A), complex(p.C)
    Bs = [complex(b) for b in p.B]
    if len(Bs) != M or len(p.x) != M:
        raise DomainError("build_qal_system needs M entries in B and x")
    I = const_op(1.0)
    ops = []
    T_all = shift_op({f"x{i}": 1 for i in range(1, M + 1)})

    def T(i):
        return shift_op({f"x{i}": 1})

    def xc(i):
        return const_op(lambda pt, _n=f"x{i}": pt[_n])

    for i in range(1, M + 1):
        for j in range(i + 1, M + 1):
            lhs = op_product([xc(i), op_sub(I, T(j)), op_sub(I, op_scale(T(i), Bs[i - 1]))])
            rhs = op_product([xc(j), op_sub(I, T(i)), op_sub(I, op_scale(T(j), Bs[j - 1]))])
            ops.append(op_sub(lhs, rhs, name=f"qal1[{i},{j}]"))
    for i in range(1, M + 1):
        first = op_multiply(
            op_sub(I, T(i)),
            op_add(I, op_scale(T_all, lambda pt: -C / pt["q"])),
        )
        second = op_product(
            [xc(i), op_sub(I, op_scale(T(i), Bs[i - 1])), op_sub(I, op_scale(T_all, A))]
        )
        ops.append(op_sub(first, second, name=f"qal2[{i}]"))
    return ops


def independence_check(bp: BalancedParams, ctx: QContext) -> bool:
    """Wronskian-style test that phi_{i,M+3}, i = 2..M+2, are independent over
    the field of T-constants, probing with T = T_{a_1} T_{b_1}."""
    M = bp.M
    size = M + 1
    mat = np.zeros((size, size), dtype=complex)
    for n in range(size):
        a = list(bp.a)
        b = list(bp.b)
        a[0] *= ctx.q ** n
        b[0] *= ctx.q ** n
        shifted = BalancedParams(a=tuple(a), b=tuple(b))
        for col, i in enumerate(range(2, M + 3)):
            mat[n, col] = rp_integral(shifted, i, M + 3, ctx)
    det = np.linalg.det(mat)
    scale = 1.0
    for n in range(size):
        scale *= np.linalg.norm(mat[n])
    return bool(abs(det) > 1e-8 * scale)
