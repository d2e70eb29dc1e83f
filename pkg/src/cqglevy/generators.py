"""Constructors of generating functionals and the symmetrisation/projection maps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .core import (
    POSITIVITY_BY_CONSTRUCTION,
    POSITIVITY_UNVERIFIED,
    Block,
    Functional,
    Rejection,
    kms_adjoint,
)
from .models import (
    DiscreteGroupModel,
    OnPlusModel,
    SUq2Model,
    TruncatedRep,
    UnsupportedError,
    chebyshev_divided_difference,
    chebyshev_u,
    chebyshev_u_prime,
    half,
    suq2_corep_block,
)

__all__ = [
    "IntervalMeasure",
    "CharTriple",
    "CharPair",
    "PoissonSpec",
    "hunt_onplus",
    "lk_interior",
    "lk_boundary",
    "taylor_coefficients",
    "poisson_functional",
    "poisson_closed_form",
    "suq2_gns_generic",
    "PhiInfinityValue",
    "phi_infinity_value",
    "discrete_length_functional",
    "kms_symmetrize",
    "ad_project",
    "twisted_ad_project",
    "restrict_to_characters",
]


def _exact(x: Any) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


# ---------------------------------------------------------------------------
# Measures on intervals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalMeasure:
    """Finite measure on ``[lo, hi]``: point masses plus an optional polynomial density.

    ``density`` holds ascending monomial coefficients of a density supported on
    ``density_support``; it is integrated with ``nodes``-point Gauss-Legendre
    quadrature.
    """

    atoms: tuple[tuple[Any, Any], ...] = ()
    density: tuple[float, ...] | None = None
    density_support: tuple[float, float] | None = None
    lo: float = 0.0
    hi: float = 1.0
    nodes: int = 256

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple((p, m) for p, m in self.atoms))
        if self.lo > self.hi:
            raise Rejection("interval is empty")
        for pos, mass in self.atoms:
            if mass < 0:
                raise Rejection(f"negative mass {mass} at {pos}")
            if not self.lo <= pos <= self.hi:
                raise Rejection(f"atom at {pos} outside [{self.lo}, {self.hi}]")
        if self.density is not None:
            object.__setattr__(self, "density", tuple(self.density))
            sup = self.density_support or (self.lo, self.hi)
            if not (self.lo <= sup[0] <= sup[1] <= self.hi):
                raise Rejection("density support must lie inside the interval")
            object.__setattr__(self, "density_support", tuple(sup))
            x, _ = self._nodes()
            if np.any(np.polynomial.polynomial.polyval(x, self.density) < -1e-12):
                raise Rejection("density takes negative values on its support")
        if self.nodes < 1:
            raise Rejection("quadrature needs at least one node")

    @property
    def is_exact(self) -> bool:
        return self.density is None and all(_exact(p) and _exact(m) for p, m in self.atoms)

    def _nodes(self) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.density_support
        x, w = np.polynomial.legendre.leggauss(self.nodes)
        return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w

    def total_mass(self) -> Any:
        return self.integrate(lambda y: 1 + 0 * y)

    def has_atom_at(self, x: Any) -> bool:
        return any(p == x and m > 0 for p, m in self.atoms)

    def integrate(self, g: Callable[[Any], Any]) -> Any:
        """``int g dmu``; exact when ``g`` and the atoms are exact and there is no density."""
        total = 0
        for pos, mass in self.atoms:
            if mass:
                total = total + mass * g(pos)
        if self.density is not None:
            x, w = self._nodes()
            dens = np.polynomial.polynomial.polyval(x, self.density)
            total = total + float(np.sum(w * dens * np.asarray(g(x), dtype=float)))
        return total


# ---------------------------------------------------------------------------
# O_N^+ : Hunt formula
# ---------------------------------------------------------------------------


def hunt_onplus(model: OnPlusModel, b: Any, nu: IntervalMeasure | None = None,
                exact: bool | None = None) -> Functional:
    """Ad-invariant generating functional on ``O_N^+`` from a drift ``b`` and a measure ``nu``.

    Block ``s`` is ``c_s I`` with
    ``c_s = (-b U_s'(N) + int (U_s(x) - U_s(N)) / (N - x) dnu(x)) / U_s(N)``.
    The integrand equals minus the Chebyshev divided difference, a polynomial,
    so atoms near ``N`` cost no precision.  With ``exact`` (default: whenever
    ``b`` and the atoms are ints/Fractions) the blocks carry exact rationals.
    """
    n = model.N
    nu = nu if nu is not None else IntervalMeasure(lo=-n, hi=n)
    if b < 0:
        raise Rejection(f"drift b must be non-negative, got {b}")
    if nu.lo < -n or nu.hi > n:
        raise Rejection(f"measure must live on [-{n}, {n}]")
    if nu.has_atom_at(n):
        raise Rejection(f"measure must not charge the point N = {n}")
    if exact is None:
        exact = _exact(b) and nu.is_exact
    if exact:
        if nu.density is not None:
            raise Rejection("exact evaluation does not support densities")
        b_val: Any = Fraction(b)
        nu = IntervalMeasure(atoms=tuple((Fraction(p), Fraction(m)) for p, m in nu.atoms),
                             lo=nu.lo, hi=nu.hi)
    else:
        b_val = float(b)

    def fn(s: int) -> Block:
        u_n = chebyshev_u(s, n)
        du = chebyshev_u_prime(s, n)
        integral = nu.integrate(lambda x: -chebyshev_divided_difference(s, x, n))
        if exact:
            return Block.scalar_block(Fraction(-b_val * du + integral) / u_n, u_n)
        numer = -b_val * float(du) + float(integral)
        return Block.scalar_block(numer / float(u_n), u_n)

    return Functional(model, fn, kind="hunt_onplus",
                      params={"b": b, "nu": nu, "exact": exact},
                      positivity=POSITIVITY_BY_CONSTRUCTION)


# ---------------------------------------------------------------------------
# Levy-Khinchin on [0, 1]
# ---------------------------------------------------------------------------


def taylor_coefficients(coeffs: Sequence[Any], x: Any) -> list[Any]:
    """Coefficients ``t_k`` with ``f(y) = sum t_k (y - x)^k`` (repeated synthetic division)."""
    work = list(coeffs)
    out = []
    while work:
        acc = 0 * x
        quotient = []
        for c in reversed(work):
            acc = acc * x + c
            quotient.append(acc)
        out.append(quotient[-1])
        work = list(reversed(quotient[:-1]))
    return out or [0]


def _shifted_eval(t: Sequence[Any], y: Any, x: Any, start: int) -> Any:
    """``sum_{k >= start} t_k (y - x)^(k - start)``."""
    acc = 0 * y
    for c in reversed(t[start:]):
        acc = acc * (y - x) + c
    return acc


@dataclass(frozen=True)
class CharTriple:
    """Diffusion ``a >= 0``, drift ``b`` and a finite jump measure ``nu`` on ``[0, 1]``."""

    a: Any
    b: Any
    nu: IntervalMeasure = field(default_factory=IntervalMeasure)

    def __post_init__(self) -> None:
        if self.a < 0:
            raise Rejection(f"diffusion coefficient must be non-negative, got {self.a}")
        if self.nu.lo < 0 or self.nu.hi > 1:
            raise Rejection("jump measure must live on [0, 1]")


@dataclass(frozen=True)
class CharPair:
    """Drift ``d`` and finite jump measure ``mu`` for a boundary point of ``[0, 1]``."""

    d: Any
    mu: IntervalMeasure = field(default_factory=IntervalMeasure)

    def __post_init__(self) -> None:
        if self.mu.lo < 0 or self.mu.hi > 1:
            raise Rejection("jump measure must live on [0, 1]")


def lk_interior(triple: CharTriple, x: Any, f: Sequence[Any]) -> Any:
    """``b f'(x) + a f''(x) + int (f(y) - f(x) - (y-x) f'(x)) / (y-x)^2 dnu(y)`` for ``0 < x < 1``.

    ``f`` is given by ascending monomial coefficients.  The integrand is the
    polynomial ``sum_{k>=2} t_k (y-x)^{k-2}`` in the Taylor coefficients at
    ``x``, so the evaluation is exact up to rounding.
    """
    if not 0 < x < 1:
        raise Rejection(f"x={x} is a boundary point; use lk_boundary")
    if triple.nu.has_atom_at(x):
        raise Rejection("jump measure must not charge the point x")
    t = taylor_coefficients(f, x)
    t = t + [0] * (3 - len(t)) if len(t) < 3 else t
    drift = triple.b * t[1]
    diffusion = triple.a * 2 * t[2]
    jumps = triple.nu.integrate(lambda y: _shifted_eval(t, y, x, 2))
    return drift + diffusion + jumps


def lk_boundary(pair: CharPair, x: int, f: Sequence[Any]) -> Any:
    """``d f'(x) + int (f(y) - f(x)) / |y - x| dmu(y)`` at ``x`` in ``{0, 1}``.

    Requires ``d >= 0`` at 0, ``d <= 0`` at 1 and ``mu({x}) = 0``.
    """
    if x not in (0, 1):
        raise Rejection(f"boundary point must be 0 or 1, got {x}")
    if x == 0 and pair.d < 0:
        raise Rejection("drift at the left end point must be non-negative")
    if x == 1 and pair.d > 0:
        raise Rejection("drift at the right end point must be non-positive")
    if pair.mu.has_atom_at(x):
        raise Rejection("jump measure must not charge the boundary point")
    t = taylor_coefficients(f, x)
    t = t + [0] * (2 - len(t)) if len(t) < 2 else t
    sign = 1 if x == 0 else -1
    jumps = pair.mu.integrate(lambda y: sign * _shifted_eval(t, y, x, 1))
    return pair.d * t[1] + jumps


# ---------------------------------------------------------------------------
# SU_q(2)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PoissonSpec:
    """Representation plus vector: ``phi(a) = <v, (pi(a) - eps(a)) v>``."""

    rep: TruncatedRep
    vector: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vector, dtype=complex)
        if v.shape != (self.rep.size,):
            raise Rejection(f"vector must have length {self.rep.size}")
        object.__setattr__(self, "vector", v)

    @classmethod
    def basis(cls, rep: TruncatedRep, k: int = 0, n: int = 0) -> "PoissonSpec":
        return cls(rep, rep.basis_vector(k, n))

    def support_depth(self) -> int:
        """Largest first index carrying weight."""
        nz = np.nonzero(self.vector)[0]
        return max((self.rep.first_index(int(i)) for i in nz), default=0)


def poisson_functional(model: SUq2Model, spec: PoissonSpec, s_max: Any = 1) -> Functional:
    """Poisson-type functional from truncated operators, for blocks ``s <= 1``."""
    if abs(spec.rep.q - model.q) > 0:
        raise Rejection(f"representation has q={spec.rep.q}, model has q={model.q}")
    s_max = half(s_max)
    if s_max > 1:
        raise UnsupportedError("operator route is limited to s <= 1")
    if spec.support_depth() + 2 >= spec.rep.M:
        raise Rejection(f"truncation too small: need M >= {spec.support_depth() + 3}")
    v = spec.vector
    norm2 = float(np.vdot(v, v).real)

    def fn(s):
        ops = suq2_corep_block(s, spec.rep)
        n = ops.shape[0]
        m = np.einsum("a,jkab,b->jk", v.conj(), ops, v)
        return m - norm2 * np.eye(n)

    return Functional(model, fn, kind="poisson", params={"spec": spec},
                      positivity=POSITIVITY_BY_CONSTRUCTION, max_label=s_max)


def poisson_closed_form(model: SUq2Model, s_max: Any = None) -> Functional:
    """Tabulated Poisson blocks for ``theta = pi/2`` and the vector ``e_0``.

    Entry ``(j, k)``: ``-1`` if ``j = k``; for ``k = -j`` and ``j >= 0``
    ``i^{2s} q^{(s-j)(s+j+1)} - delta_{j,0}``; for ``k = -j`` and ``j < 0``
    ``i^{-2s} q^{(s-j)(s+j+1)-2j}``; zero otherwise.  The ``j = k = 0``
    entry of an integer block follows the anti-diagonal rule.
    """
    q = model.q

    def fn(s):
        n = int(2 * s) + 1
        sf = float(s)
        m = -np.eye(n, dtype=complex)
        for a in range(n):
            j = a - sf
            b = n - 1 - a
            e = (sf - j) * (sf + j + 1)
            if j >= 0:
                m[a, b] = 1j ** (2 * sf) * q ** e - (1.0 if j == 0 else 0.0)
            else:
                m[a, b] = 1j ** (-2 * sf) * q ** (e - 2 * j)
        return m

    return Functional(model, fn, kind="poisson_closed_form",
                      params={"theta": math.pi / 2, "k": 0},
                      positivity=POSITIVITY_UNVERIFIED,
                      max_label=None if s_max is None else half(s_max))


def suq2_gns_generic(model: SUq2Model, c: Mapping | Callable, hermitian: bool = True,
                     atol: float = 0.0) -> Functional:
    """Diagonal blocks ``phi(u_jk) = c(s, j) delta_jk``.

    ``c`` is a callable ``(s, j) -> value`` or a mapping keyed by ``(s, j)``
    (missing keys read as zero).  With ``hermitian`` the values must be real
    and satisfy ``c(s, j) = c(s, -j)``; violations are rejected.
    """
    if callable(c):
        get = c
    else:
        table = {(half(s), Fraction(j)): v for (s, j), v in c.items()}
        for (s, j) in table:
            if abs(j) > s or (s - j).denominator != 1:
                raise Rejection(f"index j={j} is not valid for s={s}")
        get = lambda s, j: table.get((half(s), Fraction(j)), 0.0)  # noqa: E731
        if hermitian:
            for (s, j), val in table.items():
                _check_symmetric(s, j, val, get(s, -j), atol)

    def fn(s):
        js = [Fraction(a) - s for a in range(int(2 * s) + 1)]
        vals = [get(s, j) for j in js]
        if hermitian:
            for j, val in zip(js, vals):
                _check_symmetric(s, j, val, get(s, -j), atol)
        return np.diag(np.asarray(vals, dtype=complex))

    return Functional(model, fn, kind="suq2_gns_generic", params={"c": c, "hermitian": hermitian})


def _check_symmetric(s, j, val, mirror, atol):
    if abs(complex(val).imag) > atol:
        raise Rejection(f"c({s},{j}) = {val} is not real")
    if abs(complex(val) - complex(mirror)) > atol:
        raise Rejection(f"c({s},{j}) = {val} differs from c({s},{-j}) = {mirror}")


@dataclass(frozen=True)
class PhiInfinityValue:
    """Partial sum with a certified bound: the true value lies in ``[value - error_bound, value]``."""

    value: float
    error_bound: float
    terms: int


def phi_infinity_value(q: float, m: int, tol: float = 1e-14) -> PhiInfinityValue:
    """``phi_inf(alpha^{*m} alpha^m) = -m - sum_{k>=m} (1 - prod_{i<m} (1 - q^{2(k-i)}))``.

    Terms with ``k < m`` equal ``-1`` because the product meets ``1 - q^0``.
    The tail after ``K`` terms is at most ``m q^{2(K-m+1)} / (1 - q^2)``.
    """
    if not 0 < q < 1:
        raise Rejection("q must lie in (0, 1)")
    if m < 0:
        raise Rejection("m must be non-negative")
    if m == 0:
        return PhiInfinityValue(0.0, 0.0, 0)
    q2 = q * q
    i = np.arange(m)
    parts = [float(-m)]
    k = m
    while True:
        bound = m * q2 ** (k - m + 1) / (1 - q2)
        if bound <= tol:
            break
        one_minus_prod = -math.expm1(float(np.sum(np.log1p(-q2 ** (k - i)))))
        parts.append(-one_minus_prod)
        k += 1
    return PhiInfinityValue(math.fsum(parts), bound, k)


# ---------------------------------------------------------------------------
# Discrete groups
# ---------------------------------------------------------------------------


def discrete_length_functional(model: DiscreteGroupModel) -> Functional:
    """``phi(lambda_g) = -l(g)``."""
    known_negative_type = model.length == "word" or (
        model.length == "word_squared" and model.group == "Z" and model.rank == 1
    )
    return Functional(model, lambda g: np.array([[-model.length_of(g)]], dtype=complex),
                      kind="discrete_length", params={"length": model.length},
                      positivity=POSITIVITY_BY_CONSTRUCTION if known_negative_type else POSITIVITY_UNVERIFIED)


# ---------------------------------------------------------------------------
# Symmetrisation and projections
# ---------------------------------------------------------------------------


def kms_symmetrize(phi: Functional) -> Functional:
    """``phi + phi^# o R``; for hermitian ``phi`` this is ``phi + phi o R``."""
    out = phi + kms_adjoint(phi)
    out.kind = "kms_symmetrize"
    out.params = {"of": phi}
    out.positivity = phi.positivity
    return out


def ad_project(phi: Functional) -> Functional:
    """``phi o ad_h``: block ``s`` becomes ``c_s I`` with ``c_s = tr(F_1 phi^(s)) / D_s``.

    Here ``F_1 = [f_1(u_rp)]`` so ``tr(F_1 phi^(s)) = sum_{p,r} f_1(u_rp) phi(u_pr)``.
    """
    model = phi.model

    def fn(s):
        b = phi.block(s)
        f1 = model.character(1, s)
        d = model.quantum_dimension(s)
        if b.is_scalar:  # tr(F_1) = D_s
            return b
        return Block.scalar_block(complex(np.sum(f1.dense().T * b.dense())) / d, b.dim)

    return Functional(model, fn, kind="ad_project", params={"of": phi},
                      positivity=phi.positivity, max_label=phi.max_label)


def twisted_ad_project(model, psi: Mapping | Callable) -> Functional:
    """Ad-invariant functional with block ``s`` equal to ``(psi(chi_s) / D_s) I``."""
    get = psi if callable(psi) else (lambda s: psi.get(model.normalize_label(s), 0.0))
    return Functional(model, lambda s: Block.scalar_block(complex(get(s)) / model.quantum_dimension(s),
                                                          model.dim(s)),
                      kind="twisted_ad_project", params={"psi": psi})


def restrict_to_characters(phi: Functional, s: Any) -> complex:
    """``phi(chi_s) = sum_l phi(u^(s)_ll)``."""
    return phi.block(s).trace()
