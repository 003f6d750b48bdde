"""Closed-form rates and parameters for the relay construction.

Everything here is exact rational arithmetic on :class:`fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor


class InvalidParams(ValueError):
    pass


class DegenerateBound(ValueError):
    pass


def frac_json(x: Fraction | None) -> dict | None:
    if x is None:
        return None
    return {"num": x.numerator, "den": x.denominator}


def capacity_p2p(a: int, b: int, T: int) -> Fraction:
    """Point-to-point capacity (T-a+1)/(T-a+1+b) of an (a, b, T) DCSW channel."""
    if not 0 < a <= b <= T:
        raise InvalidParams(f"capacity needs 0 < a <= b <= T, got ({a}, {b}, {T})")
    return Fraction(T - a + 1, T - a + 1 + b)


def floor_diff(x: int, y: int, z: int) -> int:
    """floor(x/z - y/z) by comparing the remainders of x and y modulo z."""
    if z <= 0:
        raise ValueError("z must be positive")
    q1, r1 = divmod(x, z)
    q2, r2 = divmod(y, z)
    return q1 - q2 if r1 >= r2 else q1 - q2 - 1


@dataclass(frozen=True)
class RelayParams:
    a1: int
    b1: int
    a2: int
    b2: int
    T: int

    def __post_init__(self):
        for name in ("a1", "b1", "a2", "b2", "T"):
            if not isinstance(getattr(self, name), int):
                raise InvalidParams(f"{name} must be an integer")
        if not (0 < self.a1 <= self.b1 and 0 < self.a2 <= self.b2):
            raise InvalidParams(f"need 0 < a_u <= b_u on both hops, got {self.as_tuple()}")
        if self.b1 > self.T1 or self.b2 > self.T2:
            raise InvalidParams(
                f"hop delay budgets T1={self.T1}, T2={self.T2} cannot hold bursts b1={self.b1}, b2={self.b2}"
            )

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.b1, self.a2, self.b2, self.T)

    @property
    def a(self) -> int:
        return max(self.a1, self.a2)

    @property
    def b1p(self) -> int:
        return max(self.b1, self.a)

    @property
    def b2p(self) -> int:
        return max(self.b2, self.a)

    @property
    def alpha(self) -> int:
        return self.T + 1 - self.b1p - self.b2p - self.a

    @property
    def T1(self) -> int:
        return self.T - self.b2p

    @property
    def T2(self) -> int:
        return self.T - self.b1p

    @property
    def k(self) -> Fraction:
        return optimal_k(self)

    @property
    def k_int(self) -> int:
        return floor(self.k)

    @property
    def n1(self) -> int:
        return self.k_int + self.a

    @property
    def n2(self) -> int:
        return self.k_int + self.a

    def to_json(self) -> dict:
        return {"a1": self.a1, "b1": self.b1, "a2": self.a2, "b2": self.b2, "T": self.T}


def derived_params(p: RelayParams) -> dict:
    return {
        "a": p.a, "b1p": p.b1p, "b2p": p.b2p, "alpha": p.alpha, "T1": p.T1, "T2": p.T2,
        "k": frac_json(p.k), "k_int": p.k_int, "n1": p.n1, "n2": p.n2,
    }


def upper_bound(p: RelayParams) -> Fraction:
    """min(C(a1, b1, T-b2), C(a2, b2, T-b1))."""
    if p.T - p.b2 < p.a1 or p.T - p.b1 < p.a2:
        raise DegenerateBound(f"no positive-rate code for {p.as_tuple()}")
    return min(capacity_p2p(p.a1, p.b1, p.T - p.b2), capacity_p2p(p.a2, p.b2, p.T - p.b1))


def optimal_k(p: RelayParams) -> Fraction:
    return p.a * (Fraction(p.alpha, max(p.b1p, p.b2p)) + 1)


def optimal_k_raw(p: RelayParams) -> Fraction:
    """k from the rate-matching formula with unprimed burst lengths and a'_1 = a'_2 = a."""
    return p.a * min(
        Fraction(p.T - p.b2 - p.a1 + 1, p.b1),
        Fraction(p.T - p.b1 - p.a2 + 1, p.b2),
    )


@dataclass(frozen=True)
class RegimeFlags:
    divisibility: bool
    symmetry: bool

    @property
    def optimal(self) -> bool:
        return self.divisibility and self.symmetry

    def to_json(self) -> dict:
        return {"divisibility": self.divisibility, "symmetry": self.symmetry, "optimal": self.optimal}


def regime_check(p: RelayParams) -> RegimeFlags:
    return RegimeFlags(
        divisibility=p.alpha % max(p.b1p, p.b2p) == 0,
        symmetry=p.a1 == p.a2 or p.b1 == p.b2,
    )


def dispersion_span(n: int, a: int, b: int) -> int:
    return n + (b - a) * ((n - 1) // a)


def delay_profile(p: RelayParams, k: int | None = None) -> list[tuple[int, int]]:
    """Closed-form ((t_j, tau_j)) for the flipped-order relay construction."""
    a = p.a
    k = p.k_int if k is None else k
    n = k + a
    N1 = dispersion_span(n, a, p.b1p)
    N2 = dispersion_span(n, a, p.b2p)
    out = []
    for j in range(k):
        r = k - 1 - j
        out.append((N1 - 1 - j - (p.b1p - a) * (j // a), N2 - 1 - r - (p.b2p - a) * (r // a)))
    return out


def max_delay_sum_closed_form(p: RelayParams) -> int:
    """Largest t_j + tau_j predicted in the optimal regime (case split on b'1 vs b'2)."""
    n = p.k_int + p.a
    if p.b1p >= p.b2p:
        return dispersion_span(n, p.a, p.b1p) - 1 + p.b2p
    return dispersion_span(n, p.a, p.b2p) - 1 + p.b1p


@dataclass
class RateReport:
    params: RelayParams
    capacity_hop1: Fraction
    capacity_hop2: Fraction
    bound: Fraction
    k: Fraction
    k_int: int
    n1: int
    n2: int
    rate: Fraction | None
    regime: RegimeFlags
    delay_profile: list[tuple[int, int]]
    feasible: bool

    @property
    def optimal(self) -> bool:
        return self.regime.optimal and self.feasible and self.rate == self.bound

    def to_json(self) -> dict:
        p = self.params
        return {
            "params": p.to_json(),
            "derived": derived_params(p),
            "capacity_hop1": frac_json(self.capacity_hop1),
            "capacity_hop2": frac_json(self.capacity_hop2),
            "bound": frac_json(self.bound),
            "k": frac_json(self.k),
            "k_int": self.k_int,
            "n1": self.n1,
            "n2": self.n2,
            "rate": frac_json(self.rate),
            "regime_divisibility": self.regime.divisibility,
            "regime_symmetry": self.regime.symmetry,
            "regime_optimal": self.regime.optimal,
            "feasible": self.feasible,
            "optimal": self.optimal,
            "delay_profile": [list(d) for d in self.delay_profile],
        }


def plan(p: RelayParams) -> RateReport:
    k = optimal_k(p)
    k_int = floor(k)
    feasible = False
    profile: list[tuple[int, int]] = []
    rate = None
    if k_int >= 1:
        n = k_int + p.a
        profile = delay_profile(p, k_int)
        feasible = (
            dispersion_span(n, p.a, p.b1p) <= p.T1 + 1
            and dispersion_span(n, p.a, p.b2p) <= p.T2 + 1
            and all(t + tau <= p.T for t, tau in profile)
        )
        rate = Fraction(k_int, n)
    return RateReport(
        params=p,
        capacity_hop1=capacity_p2p(p.a1, p.b1, p.T - p.b2),
        capacity_hop2=capacity_p2p(p.a2, p.b2, p.T - p.b1),
        bound=upper_bound(p),
        k=k,
        k_int=k_int,
        n1=k_int + p.a,
        n2=k_int + p.a,
        rate=rate,
        regime=regime_check(p),
        delay_profile=profile,
        feasible=feasible,
    )


def sweep_params(T_max: int = 12, a_max: int = 2, b_max: int = 4, regime_only: bool = True):
    """All valid tuples with T <= T_max, a_u <= a_max, b_u <= b_max (optionally regime-satisfying)."""
    out = []
    for T in range(1, T_max + 1):
        for a1 in range(1, a_max + 1):
            for b1 in range(a1, b_max + 1):
                for a2 in range(1, a_max + 1):
                    for b2 in range(a2, b_max + 1):
                        try:
                            p = RelayParams(a1, b1, a2, b2, T)
                        except InvalidParams:
                            continue
                        if p.k_int < 1:
                            continue
                        if regime_only and not regime_check(p).optimal:
                            continue
                        out.append(p)
    return out
