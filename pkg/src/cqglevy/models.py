"""Concrete quantum groups: O_N^+, SU_q(2) and group algebras of discrete groups."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Sequence

import numpy as np

from .core import Block, QuantumGroupModel, Rejection

__all__ = [
    "chebyshev_u",
    "chebyshev_u_prime",
    "chebyshev_divided_difference",
    "chebyshev_u_closed_form",
    "onplus_fusion",
    "OnPlusModel",
    "SUq2Model",
    "half",
    "suq2_R_transform",
    "DiscreteGroupModel",
    "enumerate_group",
    "TruncatedRep",
    "truncated_rho",
    "truncated_pi",
    "suq2_corep_block",
    "UnsupportedError",
]


class UnsupportedError(Rejection):
    """Requested functionality lies outside the implemented scope."""


# ---------------------------------------------------------------------------
# Chebyshev polynomials of the second kind
# ---------------------------------------------------------------------------


def chebyshev_u(s: int, x: Any) -> Any:
    """``U_s(x)`` by the three-term recurrence.

    Works for ints, Fractions, floats and numpy arrays; exact inputs give
    exact outputs.
    """
    if s < 0:
        raise Rejection("Chebyshev index must be non-negative")
    prev, cur = 0 * x, 1 + 0 * x
    for _ in range(s):
        prev, cur = cur, x * cur - prev
    return cur


def chebyshev_u_prime(s: int, x: Any) -> Any:
    """``U_s'(x)`` from the differentiated recurrence ``U'_{s+1} = U_s + x U'_s - U'_{s-1}``."""
    if s < 0:
        raise Rejection("Chebyshev index must be non-negative")
    u_prev, u = 0 * x, 1 + 0 * x
    d_prev, d = 0 * x, 0 * x
    for _ in range(s):
        u_prev, u, d_prev, d = u, x * u - u_prev, d, u + x * d - d_prev
    return d


def chebyshev_divided_difference(s: int, x: Any, n: Any) -> Any:
    """``(U_s(x) - U_s(n)) / (x - n)`` as a polynomial in ``x``, without division.

    With ``D_s`` the divided difference, subtracting the recurrence at ``n``
    from the one at ``x`` gives ``D_{s+1} = x D_s + U_s(n) - D_{s-1}``,
    ``D_0 = 0``, ``D_1 = 1``.  At ``x = n`` this is ``U_s'(n)``.
    """
    if s < 0:
        raise Rejection("Chebyshev index must be non-negative")
    d_prev, d = 0 * x, 0 * x
    u_prev, u = 0 * n, 1 + 0 * n
    for _ in range(s):
        d_prev, d = d, x * d + u - d_prev
        u_prev, u = u, n * u - u_prev
    return d


def chebyshev_u_closed_form(s: int, n: float) -> float:
    """``(p^{s+1} - p^{-s-1}) / (p - 1/p)`` with ``p = (n + sqrt(n^2-4))/2``, ``n > 2``."""
    if n <= 2:
        raise Rejection("closed form needs N > 2")
    p = 0.5 * (n + math.sqrt(n * n - 4))
    return (p ** (s + 1) - p ** (-s - 1)) / (p - 1 / p)


def onplus_fusion(s: int, t: int) -> list[int]:
    """Labels in ``u^(s) (x) u^(t)``: ``|s-t|, |s-t|+2, ..., s+t``."""
    if s < 0 or t < 0:
        raise Rejection("labels must be non-negative")
    return list(range(abs(s - t), s + t + 1, 2))


# ---------------------------------------------------------------------------
# O_N^+
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OnPlusModel(QuantumGroupModel):
    """Free orthogonal quantum group ``O_N^+`` (Kac type).

    Blocks are never realised entrywise; the coefficient basis is taken with
    self-adjoint entries, so ``phi^#`` is entrywise conjugation and ``S = R``
    acts as transposition.
    """

    N: int
    kac: bool = field(default=True, init=False, repr=False)
    trivial_label: int = field(default=0, init=False, repr=False)

    def __post_init__(self) -> None:
        if isinstance(self.N, bool) or not isinstance(self.N, (int, np.integer)) or self.N < 2:
            raise Rejection(f"O_N^+ needs an integer N >= 2, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def identifier(self) -> str:
        return f"O_{self.N}^+"

    def normalize_label(self, s: Any) -> int:
        if isinstance(s, bool) or int(s) != s or s < 0:
            raise Rejection(f"O_N^+ labels are non-negative integers, got {s!r}")
        return int(s)

    def labels(self, s_max: Any) -> list[int]:
        if s_max < 0:
            raise Rejection("s_max must be non-negative")
        return list(range(int(math.floor(s_max)) + 1))

    def dim(self, s: Hashable) -> int:
        return _u_int(s, self.N)

    def quantum_dimension(self, s: Hashable) -> float:
        return float(_u_int(s, self.N))

    def character(self, z: complex, s: Hashable) -> Block:
        return Block.identity(self.dim(s))

    def hash_block(self, block_of, s):
        return block_of(s).conj()

    def antipode_block(self, block_of, s):
        return block_of(s).transpose()

    unitary_antipode_block = antipode_block

    def star_coefficients(self, s, c):
        return s, np.conj(np.asarray(c, dtype=complex))

    def label_to_text(self, s):
        return str(s)


@functools.lru_cache(maxsize=None)
def _u_int(s: int, n: int) -> int:
    return chebyshev_u(int(s), int(n))


# ---------------------------------------------------------------------------
# SU_q(2)
# ---------------------------------------------------------------------------


def half(s: Any) -> Fraction:
    """Normalise a half-integer label (int, float, str or Fraction)."""
    f = Fraction(s).limit_denominator(2) if isinstance(s, float) else Fraction(s)
    if f.denominator not in (1, 2) or f < 0 or (isinstance(s, float) and float(f) != s):
        raise Rejection(f"SU_q(2) labels are non-negative half-integers, got {s!r}")
    return f


def _index(s: Fraction) -> np.ndarray:
    """``j = -s, ..., s`` as floats."""
    n = int(2 * s) + 1
    return np.arange(n, dtype=float) - float(s)


def _shift_powers(base: float, n: int) -> np.ndarray:
    """``P[a, b] = base^(b - a)``; entries ``(j, k)`` have ``k - j = b - a``."""
    d = np.arange(n)[None, :] - np.arange(n)[:, None]
    return np.power(float(base), d.astype(float))


@dataclass(frozen=True)
class SUq2Model(QuantumGroupModel):
    """``SU_q(2)`` with ``0 < q < 1``; labels ``s`` in ``N/2``, indices ``j = -s..s``.

    Involutions on characteristic matrices follow from
    ``(u_jk)^* = (-q)^{k-j} u_{-j,-k}``, ``S(u_jk) = (u_kj)^*`` and
    ``R(u_jk) = q^{k-j} (u_kj)^*``.
    """

    q: float
    kac: bool = field(default=False, init=False, repr=False)
    trivial_label: Fraction = field(default=Fraction(0), init=False, repr=False)

    def __post_init__(self) -> None:
        q = float(self.q)
        if not (0 < q < 1):
            raise Rejection(f"SU_q(2) needs 0 < q < 1, got {self.q!r}")
        object.__setattr__(self, "q", q)

    @property
    def identifier(self) -> str:
        return f"SU_q(2)[q={self.q!r}]"

    def normalize_label(self, s: Any) -> Fraction:
        return half(s)

    def labels(self, s_max: Any) -> list[Fraction]:
        if s_max < 0:
            raise Rejection("s_max must be non-negative")
        top = int(math.floor(2 * float(s_max) + 1e-12))
        return [Fraction(k, 2) for k in range(top + 1)]

    def dim(self, s: Hashable) -> int:
        return int(2 * s) + 1

    def quantum_dimension(self, s: Hashable) -> float:
        return float(np.sum(self.q ** (2 * _index(s))))

    def character(self, z: complex, s: Hashable) -> Block:
        j = _index(s)
        if isinstance(z, complex) or np.iscomplexobj(z):
            d = np.exp(2 * j * complex(z) * math.log(self.q))
        else:
            d = np.power(self.q, 2 * j * float(z))
        return Block.from_matrix(np.diag(d))

    def hash_block(self, block_of, s):
        b = block_of(s)
        if b.is_scalar:
            return b.conj()
        m = b.dense()
        return Block.from_matrix(_shift_powers(-self.q, b.dim) * np.conj(m[::-1, ::-1]))

    def antipode_block(self, block_of, s):
        b = block_of(s)
        if b.is_scalar:
            return b
        m = b.dense()
        return Block.from_matrix(_shift_powers(-self.q, b.dim).T * m[::-1, ::-1].T)

    def unitary_antipode_block(self, block_of, s):
        b = block_of(s)
        if b.is_scalar:
            return b
        return Block.from_matrix(suq2_R_transform(b.dense(), s))

    def star_coefficients(self, s, c):
        c = np.asarray(c, dtype=complex)
        p = _shift_powers(-self.q, c.shape[0])
        return s, (np.conj(c) * p)[::-1, ::-1]

    def kms_weights(self, s):
        return np.power(self.q, _index(s))

    def label_to_text(self, s):
        return str(int(2 * s))

    def label_sort_key(self, s):
        return Fraction(s)


def suq2_R_transform(m: np.ndarray, s: Any) -> np.ndarray:
    """Matrix of ``phi o R`` from the matrix of ``phi``: ``(j,k) -> (-1)^{j-k} M(-k,-j)``."""
    s = half(s)
    m = np.asarray(m)
    n = int(2 * s) + 1
    if m.shape != (n, n):
        raise Rejection(f"expected a {n}x{n} matrix for s={s}, got shape {m.shape}")
    return _shift_powers(-1.0, n).T * m[::-1, ::-1].T


# ---------------------------------------------------------------------------
# Discrete groups
# ---------------------------------------------------------------------------

_LENGTHS = ("word", "word_squared")


@dataclass(frozen=True)
class DiscreteGroupModel(QuantumGroupModel):
    """Group algebra of ``Z^d`` (``group='Z'``) or the free group ``F_k`` (``group='F'``).

    Elements are tuples: integer vectors for ``Z^d`` and reduced words of
    signed generator indices for ``F_k`` (``-i`` is the inverse of ``i``).
    ``length`` is ``'word'``, ``'word_squared'`` or a callable on elements.
    """

    group: str = "Z"
    rank: int = 1
    length: Any = "word"
    radius: int = 10
    kac: bool = field(default=True, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.group not in ("Z", "F"):
            raise Rejection(f"group must be 'Z' or 'F', got {self.group!r}")
        if int(self.rank) < 1:
            raise Rejection("rank must be at least 1")
        if int(self.radius) < 0:
            raise Rejection("radius must be non-negative")
        if not callable(self.length) and self.length not in _LENGTHS:
            raise Rejection(f"length must be one of {_LENGTHS} or a callable")
        if self.length_of(self.trivial_label) != 0:
            raise Rejection("length function must vanish at the identity")

    @property
    def trivial_label(self) -> tuple:
        return (0,) * self.rank if self.group == "Z" else ()

    @property
    def identifier(self) -> str:
        name = f"Z^{self.rank}" if self.group == "Z" else f"F_{self.rank}"
        ln = self.length if isinstance(self.length, str) else getattr(self.length, "__name__", "custom")
        return f"C[{name}] ({ln})"

    # group structure ------------------------------------------------------
    def word_length(self, g: tuple) -> int:
        return sum(abs(x) for x in g) if self.group == "Z" else len(g)

    def length_of(self, g: tuple) -> float:
        if callable(self.length):
            return float(self.length(g))
        w = self.word_length(g)
        return float(w if self.length == "word" else w * w)

    def inverse(self, g: tuple) -> tuple:
        if self.group == "Z":
            return tuple(-x for x in g)
        return tuple(-x for x in reversed(g))

    def normalize_label(self, g: Any) -> tuple:
        if isinstance(g, (int, np.integer)) and self.group == "Z" and self.rank == 1:
            return (int(g),)
        g = tuple(int(x) for x in g)
        if self.group == "Z":
            if len(g) != self.rank:
                raise Rejection(f"Z^{self.rank} elements need {self.rank} coordinates, got {g}")
        else:
            for a, b in zip(g, g[1:]):
                if a == -b:
                    raise Rejection(f"free-group word {g} is not reduced")
            if any(x == 0 or abs(x) > self.rank for x in g):
                raise Rejection(f"free-group letters must be in +-1..{self.rank}")
        return g

    def labels(self, s_max: Any = None) -> list[tuple]:
        r = self.radius if s_max is None else s_max
        if r < 0:
            raise Rejection("s_max must be non-negative")
        return list(_ball(self.group, int(self.rank), int(math.floor(r))))

    def dim(self, s):
        return 1

    def quantum_dimension(self, s):
        return 1.0

    def character(self, z, s):
        return Block.identity(1)

    def conjugate_label(self, s):
        return self.inverse(s)

    def hash_block(self, block_of, s):
        return block_of(self.inverse(s)).conj()

    def antipode_block(self, block_of, s):
        return block_of(self.inverse(s))

    unitary_antipode_block = antipode_block

    def star_coefficients(self, s, c):
        return self.inverse(s), np.conj(np.asarray(c, dtype=complex))

    def label_to_text(self, g):
        return ",".join(str(x) for x in g) if g else "e"

    def label_sort_key(self, g):
        return (self.word_length(g), g)


@functools.lru_cache(maxsize=64)
def _ball(group: str, rank: int, radius: int) -> tuple:
    """Ball of the given word radius, shells in lexicographic order."""
    if group == "Z":
        shell = {(0,) * rank}
        out = [(0,) * rank]
        seen = set(shell)
        for _ in range(radius):
            nxt = set()
            for g in shell:
                for i in range(rank):
                    for d in (-1, 1):
                        h = g[:i] + (g[i] + d,) + g[i + 1:]
                        if h not in seen:
                            nxt.add(h)
            seen |= nxt
            shell = nxt
            out.extend(sorted(nxt))
        return tuple(out)
    letters = [x for x in range(-rank, rank + 1) if x != 0]
    out = [()]
    shell = [()]
    for _ in range(radius):
        nxt = sorted(w + (x,) for w in shell for x in letters if not w or x != -w[-1])
        out.extend(nxt)
        shell = nxt
    return tuple(out)


def enumerate_group(model: DiscreteGroupModel) -> list[tuple[tuple, float]]:
    """All elements of word length at most ``model.radius`` with their lengths."""
    return [(g, model.length_of(g)) for g in model.labels(model.radius)]


# ---------------------------------------------------------------------------
# Truncated representations of SU_q(2)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TruncatedRep:
    """Generator matrices of a representation of SU_q(2) on a finite window.

    ``kind='rho'``: basis ``e_0..e_{M-1}`` of l^2(N).
    ``kind='pi'``: basis ``e_{k,n}``, ``0 <= k < M``, ``|n| <= W`` of l^2(N x Z),
    flattened as ``k * (2W+1) + (n + W)``.
    """

    kind: str
    q: float
    M: int
    alpha: np.ndarray
    gamma: np.ndarray
    theta: float = 0.0
    W: int = 0
    tail_bound: float = 0.0

    @property
    def size(self) -> int:
        return self.alpha.shape[0]

    def generator(self, symbol: str) -> np.ndarray:
        """``'a'``, ``'a*'``, ``'g'`` or ``'g*'``."""
        table = {
            "a": self.alpha,
            "a*": self.alpha.conj().T,
            "g": self.gamma,
            "g*": self.gamma.conj().T,
        }
        try:
            return table[symbol]
        except KeyError:
            raise Rejection(f"unknown generator symbol {symbol!r}") from None

    def word(self, word: Sequence[str]) -> np.ndarray:
        out = np.eye(self.size, dtype=complex)
        for sym in word:
            out = out @ self.generator(sym)
        return out

    @staticmethod
    def counit(word: Sequence[str]) -> complex:
        """``epsilon`` of a word: ``alpha, alpha^* -> 1``, ``gamma, gamma^* -> 0``."""
        return 0.0 if any(sym.startswith("g") for sym in word) else 1.0

    def basis_vector(self, k: int, n: int = 0) -> np.ndarray:
        v = np.zeros(self.size, dtype=complex)
        v[self.flat_index(k, n)] = 1.0
        return v

    def flat_index(self, k: int, n: int = 0) -> int:
        if not 0 <= k < self.M:
            raise Rejection(f"index {k} outside truncation M={self.M}")
        if self.kind == "rho":
            return k
        if abs(n) > self.W:
            raise Rejection(f"second index {n} outside window W={self.W}")
        return k * (2 * self.W + 1) + n + self.W

    def first_index(self, flat: int) -> int:
        return flat if self.kind == "rho" else flat // (2 * self.W + 1)


def _shift_weights(q: float, m: int) -> np.ndarray:
    return np.sqrt(1.0 - q ** (2 * np.arange(1, m)))


def truncated_rho(q: float, theta: float, M: int) -> TruncatedRep:
    """``rho_theta``: ``alpha e_n = sqrt(1-q^{2n}) e_{n-1}``, ``gamma e_n = e^{i theta} q^n e_n``."""
    if M < 2:
        raise Rejection("truncation M must be at least 2")
    if not 0 < q < 1:
        raise Rejection("q must lie in (0, 1)")
    a = np.zeros((M, M), dtype=complex)
    a[np.arange(M - 1), np.arange(1, M)] = _shift_weights(q, M)
    g = np.diag(np.exp(1j * theta) * q ** np.arange(M)).astype(complex)
    a.flags.writeable = False
    g.flags.writeable = False
    return TruncatedRep("rho", float(q), int(M), a, g, theta=float(theta),
                        tail_bound=q ** (2 * M) / (1 - q * q))


def truncated_pi(q: float, M: int, W: int = 4) -> TruncatedRep:
    """``pi`` on ``l^2(N x Z)``: ``alpha e_{k,n} = sqrt(1-q^{2k}) e_{k-1,n}``, ``gamma e_{k,n} = q^k e_{k,n-1}``."""
    if M < 2:
        raise Rejection("truncation M must be at least 2")
    if W < 0:
        raise Rejection("window W must be non-negative")
    if not 0 < q < 1:
        raise Rejection("q must lie in (0, 1)")
    width = 2 * W + 1
    a_k = np.zeros((M, M))
    a_k[np.arange(M - 1), np.arange(1, M)] = _shift_weights(q, M)
    shift = np.zeros((width, width))
    shift[np.arange(width - 1), np.arange(1, width)] = 1.0  # e_n -> e_{n-1}
    a = np.kron(a_k, np.eye(width)).astype(complex)
    g = np.kron(np.diag(q ** np.arange(M)), shift).astype(complex)
    a.flags.writeable = False
    g.flags.writeable = False
    return TruncatedRep("pi", float(q), int(M), a, g, W=int(W),
                        tail_bound=q ** (2 * M) / (1 - q * q))


def _fundamental(rep: TruncatedRep) -> list[list[np.ndarray]]:
    q = rep.q
    a, ad = rep.generator("a"), rep.generator("a*")
    g, gd = rep.generator("g"), rep.generator("g*")
    return [[a, -q * gd], [g, ad]]


def _spin_one_isometry(q: float) -> np.ndarray:
    """Rows: weight vectors ``e_{-1}, e_0, e_1`` inside ``C^2 (x) C^2``.

    The q-singlet ``(|-,+> - q|+,->)/sqrt(1+q^2)`` spans the trivial
    sub-corepresentation; ``e_0`` is its orthogonal complement in weight 0.
    Index of ``|a,b>`` is ``2a + b`` with ``0 = -1/2``, ``1 = +1/2``.
    """
    v = np.zeros((3, 4))
    v[0, 0] = 1.0
    v[1, 1] = q / math.sqrt(1 + q * q)
    v[1, 2] = 1.0 / math.sqrt(1 + q * q)
    v[2, 3] = 1.0
    return v


def suq2_corep_block(s: Any, rep: TruncatedRep) -> np.ndarray:
    """Operator-valued ``u^(s)`` for ``s <= 1`` as an array ``(n, n, D, D)``."""
    s = half(s)
    D = rep.size
    if s == 0:
        return np.eye(D, dtype=complex)[None, None]
    u = _fundamental(rep)
    if s == Fraction(1, 2):
        return np.array([[u[0][0], u[0][1]], [u[1][0], u[1][1]]])
    if s == 1:
        # (u T u)_{(ab),(cd)} = u_ac u_bd
        uu = np.empty((4, 4, D, D), dtype=complex)
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    for d in range(2):
                        uu[2 * a + b, 2 * c + d] = u[a][c] @ u[b][d]
        v = _spin_one_isometry(rep.q)
        return np.einsum("jx,xyab,ky->jkab", v.conj(), uu, v)
    raise UnsupportedError(
        f"operator realisation of u^(s) is only provided for s <= 1, got s={s}"
    )

