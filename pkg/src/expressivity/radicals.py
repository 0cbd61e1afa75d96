"""Exact arithmetic for sums of rational multiples of radicals prod_p p^(f_p).

Normalized operators such as D^(-1/2) A D^(-1/2) produce entries like
d^(-1/2), which no float or fraction represents exactly. A value here is a
finite sum  sum_s c_s * r_s  with rational c_s and r_s = prod_p p^(f_p),
0 < f_p < 1 rational. Distinct reduced radicals r_s are linearly
independent over Q, so the reduced form is canonical: two values are equal
iff their term maps are equal.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

Signature = tuple[tuple[int, Fraction], ...]


@lru_cache(maxsize=None)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    if n < 1:
        raise ValueError("factorize needs a positive integer")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def _reduce(exps: dict[int, Fraction]) -> tuple[Fraction, Signature]:
    """Split prime exponents into a rational coefficient and a reduced signature."""
    coef = Fraction(1)
    sig = []
    for p in sorted(exps):
        e = exps[p]
        whole = math.floor(e)
        frac = e - whole
        if whole:
            coef *= Fraction(p) ** whole
        if frac:
            sig.append((p, frac))
    return coef, tuple(sig)


class Surd:
    __slots__ = ("terms",)

    def __init__(self, terms: dict[Signature, Fraction] | None = None):
        self.terms = {s: c for s, c in (terms or {}).items() if c != 0}

    @classmethod
    def coerce(cls, v) -> "Surd":
        if isinstance(v, Surd):
            return v
        return cls({(): Fraction(v)})

    @classmethod
    def power(cls, base, exponent) -> "Surd":
        """base ** exponent for positive rational base and rational exponent."""
        base, exponent = Fraction(base), Fraction(exponent)
        if base <= 0:
            raise ValueError("radical base must be positive")
        exps: dict[int, Fraction] = {}
        for p, e in factorize(base.numerator):
            exps[p] = exps.get(p, Fraction(0)) + e * exponent
        for p, e in factorize(base.denominator) if base.denominator > 1 else ():
            exps[p] = exps.get(p, Fraction(0)) - e * exponent
        coef, sig = _reduce(exps)
        return cls({sig: coef})

    def __add__(self, other):
        other = Surd.coerce(other)
        out = dict(self.terms)
        for s, c in other.terms.items():
            out[s] = out.get(s, Fraction(0)) + c
        return Surd(out)

    __radd__ = __add__

    def __neg__(self):
        return Surd({s: -c for s, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-Surd.coerce(other))

    def __mul__(self, other):
        other = Surd.coerce(other)
        out: dict[Signature, Fraction] = {}
        for s1, c1 in self.terms.items():
            for s2, c2 in other.terms.items():
                exps = dict(s1)
                for p, f in s2:
                    exps[p] = exps.get(p, Fraction(0)) + f
                coef, sig = _reduce(exps)
                out[sig] = out.get(sig, Fraction(0)) + c1 * c2 * coef
        return Surd(out)

    __rmul__ = __mul__

    def key(self):
        """Hashable canonical form; purely rational values key as their Fraction."""
        if not self.terms:
            return Fraction(0)
        if set(self.terms) == {()}:
            return self.terms[()]
        return tuple(sorted(self.terms.items()))

    def __eq__(self, other):
        try:
            other = Surd.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(self.key())

    def __float__(self):
        total = 0.0
        for sig, c in self.terms.items():
            r = 1.0
            for p, f in sig:
                r *= float(p) ** float(f)
            total += float(c) * r
        return total

    def __repr__(self):
        if not self.terms:
            return "Surd(0)"
        parts = []
        for sig, c in sorted(self.terms.items()):
            rad = "*".join(f"{p}^({f})" for p, f in sig)
            parts.append(f"{c}" + (f"*{rad}" if rad else ""))
        return "Surd(" + " + ".join(parts) + ")"
