"""Blockwise functional calculus on compact quantum groups.

A functional on the Hopf *-algebra of a compact quantum group is stored as
its family of characteristic matrices ``phi^(s) = [phi(u^(s)_jk)]``, one per
irreducible corepresentation label ``s``.  Because
``Delta(u_jk) = sum_p u_jp (x) u_pk``, convolution is the matrix product on
every block, the counit is the identity family and the Haar state is the
indicator of the trivial label.
"""

from __future__ import annotations

import cmath
import numbers
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Mapping

import numpy as np
from scipy.linalg import expm

__all__ = [
    "DENSE_LIMIT",
    "Rejection",
    "ModelMismatchError",
    "Block",
    "QuantumGroupModel",
    "Functional",
    "counit",
    "haar",
    "zero_functional",
    "character_functional",
    "from_blocks",
    "convolve",
    "woronowicz_character",
    "quantum_dimension",
    "haar_pairing",
    "adjoint_hash",
    "star_adjoint",
    "kms_adjoint",
    "apply_sigma",
    "apply_tau",
    "apply_rho",
    "markov_semigroup",
    "ConvolutionBlock",
    "convolution_operator_block",
    "POSITIVITY_BY_CONSTRUCTION",
    "POSITIVITY_UNVERIFIED",
]

#: Largest block dimension that will be materialised as a dense matrix.
DENSE_LIMIT = 4096

POSITIVITY_BY_CONSTRUCTION = "by-construction"
POSITIVITY_UNVERIFIED = "unverified"


class Rejection(ValueError):
    """Raised when an input is outside the contract of an operation."""


class ModelMismatchError(Rejection):
    """Two functionals living on different quantum groups were combined."""


# ---------------------------------------------------------------------------
# Blocks
# ---------------------------------------------------------------------------


def _is_exact(x: Any) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


class Block:
    """A characteristic matrix.

    Either a dense ``n x n`` complex array, or ``c * I_n`` kept symbolic so
    that huge blocks (O_N^+ has ``n_s = U_s(N)``) never get materialised.
    Scalar blocks may carry an exact rational value alongside the float.
    Instances are immutable.
    """

    __slots__ = ("dim", "_scalar", "_matrix", "exact")

    def __init__(self, dim: int, *, scalar: complex | None = None,
                 matrix: np.ndarray | None = None, exact: Fraction | None = None):
        if (scalar is None) == (matrix is None):
            raise ValueError("exactly one of scalar/matrix must be given")
        if matrix is not None:
            m = np.array(matrix, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise Rejection(f"block must be square, got shape {m.shape}")
            if m.shape[0] != dim:
                raise Rejection(f"block has size {m.shape[0]}, expected n_s = {dim}")
            m.flags.writeable = False
            self._matrix = m
            self._scalar = None
        else:
            self._matrix = None
            self._scalar = complex(scalar)
        if exact is not None and matrix is not None:
            raise ValueError("exact payload is only supported for scalar blocks")
        self.dim = int(dim)
        self.exact = Fraction(exact) if exact is not None else None

    # construction helpers -------------------------------------------------
    @classmethod
    def identity(cls, dim: int) -> "Block":
        return cls(dim, scalar=1.0, exact=Fraction(1))

    @classmethod
    def zeros(cls, dim: int) -> "Block":
        return cls(dim, scalar=0.0, exact=Fraction(0))

    @classmethod
    def scalar_block(cls, value: Any, dim: int) -> "Block":
        """``value * I_dim``; exact ints/Fractions are kept as a payload."""
        if _is_exact(value):
            return cls(dim, scalar=float(value), exact=Fraction(value))
        return cls(dim, scalar=complex(value))

    @classmethod
    def from_matrix(cls, m: Any) -> "Block":
        arr = np.asarray(m, dtype=complex)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        return cls(arr.shape[0], matrix=arr)

    @classmethod
    def coerce(cls, value: Any, dim: int | None = None) -> "Block":
        if isinstance(value, Block):
            return value
        if isinstance(value, numbers.Number) and dim is not None:
            return cls.scalar_block(value, dim)
        return cls.from_matrix(value)

    # inspection -----------------------------------------------------------
    @property
    def is_scalar(self) -> bool:
        return self._matrix is None

    @property
    def scalar(self) -> complex:
        if self._matrix is not None:
            raise AttributeError("dense block has no scalar value")
        return self._scalar

    def dense(self) -> np.ndarray:
        """Dense read-only array (raises for blocks above ``DENSE_LIMIT``)."""
        if self._matrix is not None:
            return self._matrix
        if self.dim > DENSE_LIMIT:
            raise Rejection(
                f"block of dimension {self.dim} is too large to materialise"
            )
        m = self._scalar * np.eye(self.dim, dtype=complex)
        m.flags.writeable = False
        return m

    def max_abs(self) -> float:
        if self._matrix is None:
            return abs(self._scalar)
        return float(np.max(np.abs(self._matrix))) if self.dim else 0.0

    def is_finite(self) -> bool:
        if self._matrix is None:
            return cmath.isfinite(self._scalar)
        return bool(np.all(np.isfinite(self._matrix)))

    def trace(self) -> complex:
        if self._matrix is None:
            return self._scalar * self.dim
        return complex(np.trace(self._matrix))

    def identical(self, other: "Block") -> bool:
        """Bit-level equality."""
        if self.dim != other.dim or self.is_scalar != other.is_scalar:
            return False
        if self.is_scalar:
            return self._scalar == other._scalar
        return bool(np.array_equal(self._matrix, other._matrix))

    # algebra --------------------------------------------------------------
    def _check(self, other: "Block") -> None:
        if self.dim != other.dim:
            raise Rejection(f"block dimensions differ: {self.dim} vs {other.dim}")

    def __matmul__(self, other: "Block") -> "Block":
        self._check(other)
        if self.is_scalar and other.is_scalar:
            ex = self.exact * other.exact if (self.exact is not None and other.exact is not None) else None
            if ex is not None:
                return Block(self.dim, scalar=float(ex), exact=ex)
            return Block(self.dim, scalar=self._scalar * other._scalar)
        if self.is_scalar:
            return Block(self.dim, matrix=self._scalar * other._matrix)
        if other.is_scalar:
            return Block(self.dim, matrix=self._matrix * other._scalar)
        return Block(self.dim, matrix=self._matrix @ other._matrix)

    def __add__(self, other: "Block") -> "Block":
        self._check(other)
        if self.is_scalar and other.is_scalar:
            ex = self.exact + other.exact if (self.exact is not None and other.exact is not None) else None
            if ex is not None:
                return Block(self.dim, scalar=float(ex), exact=ex)
            return Block(self.dim, scalar=self._scalar + other._scalar)
        return Block(self.dim, matrix=self.dense() + other.dense())

    def __mul__(self, c: Any) -> "Block":
        if self.is_scalar:
            if self.exact is not None and _is_exact(c):
                return Block(self.dim, scalar=float(self.exact * c), exact=self.exact * c)
            return Block(self.dim, scalar=self._scalar * complex(c))
        return Block(self.dim, matrix=self._matrix * complex(c))

    __rmul__ = __mul__

    def __neg__(self) -> "Block":
        return self * -1

    def __sub__(self, other: "Block") -> "Block":
        return self + (-other)

    def conj(self) -> "Block":
        if self.is_scalar:
            if self.exact is not None:
                return self
            return Block(self.dim, scalar=self._scalar.conjugate())
        return Block(self.dim, matrix=self._matrix.conj())

    def transpose(self) -> "Block":
        if self.is_scalar:
            return self
        return Block(self.dim, matrix=self._matrix.T)

    def expm(self, t: float) -> "Block":
        """``exp(t * self)``; ``t == 0`` gives the exact identity."""
        if t == 0:
            return Block.identity(self.dim)
        if self.is_scalar:
            return Block(self.dim, scalar=cmath.exp(t * self._scalar))
        return Block(self.dim, matrix=expm(t * self._matrix))

    def __repr__(self) -> str:
        if self.is_scalar:
            return f"Block(dim={self.dim}, scalar={self._scalar!r})"
        return f"Block(dim={self.dim}, matrix={self._matrix!r})"


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

BlockOf = Callable[[Hashable], Block]


class QuantumGroupModel:
    """Interface every concrete quantum group implements.

    Besides dimensions and characters, a model supplies the involutions as
    maps on characteristic matrices.  The maps receive a ``block_of`` callable
    rather than a single block because some involutions move between labels
    (on a group algebra ``lambda_g^* = lambda_{g^-1}``).
    """

    kac: bool = False
    trivial_label: Hashable = 0

    @property
    def identifier(self) -> str:  # pragma: no cover - abstract
        raise NotImplementedError

    def normalize_label(self, s: Any) -> Hashable:
        return s

    def labels(self, s_max: Any) -> list:  # pragma: no cover - abstract
        raise NotImplementedError

    def dim(self, s: Hashable) -> int:  # pragma: no cover - abstract
        raise NotImplementedError

    def quantum_dimension(self, s: Hashable) -> float:  # pragma: no cover
        raise NotImplementedError

    def character(self, z: complex, s: Hashable) -> Block:  # pragma: no cover
        raise NotImplementedError

    def conjugate_label(self, s: Hashable) -> Hashable:
        """Label of the block containing ``(u^(s)_jk)^*``."""
        return s

    def hash_block(self, block_of: BlockOf, s: Hashable) -> Block:  # pragma: no cover
        """Block ``s`` of ``phi^#``, ``phi^#(a) = conj(phi(a^*))``."""
        raise NotImplementedError

    def antipode_block(self, block_of: BlockOf, s: Hashable) -> Block:  # pragma: no cover
        """Block ``s`` of ``phi o S``."""
        raise NotImplementedError

    def unitary_antipode_block(self, block_of: BlockOf, s: Hashable) -> Block:  # pragma: no cover
        """Block ``s`` of ``phi o R``."""
        raise NotImplementedError

    def star_coefficients(self, s: Hashable, c: np.ndarray) -> tuple[Hashable, np.ndarray]:  # pragma: no cover
        """Coefficients of ``a^*`` for ``a = sum c_jk u^(s)_jk``."""
        raise NotImplementedError

    def kms_weights(self, s: Hashable) -> np.ndarray | None:
        """Diagonal weights turning KMS-symmetric blocks hermitian, if any."""
        return None

    def label_to_text(self, s: Hashable) -> str:
        return str(s)

    def label_sort_key(self, s: Hashable) -> Any:
        return s

    def rho_block(self, m: Block, s: Hashable, z: complex, z2: complex) -> Block:
        """Block of ``phi o rho_{z,z2}``, where ``rho_{z,z2}(a) = f_z * a * f_z2``.

        ``rho_{z,z2}(u_jk) = sum f_z2(u_jp) u_pr f_z(u_rk)`` so the block is
        ``F_{z2} M F_z``.
        """
        if self.kac:
            return m
        return self.character(z2, s) @ m @ self.character(z, s)


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------


class Functional:
    """Lazily evaluated, memoised family of characteristic matrices.

    ``block_fn(s)`` must be pure.  Concurrent calls may compute the same block
    twice, but only the first result is stored, so every caller observes the
    same bit-identical block.
    """

    def __init__(self, model: QuantumGroupModel, block_fn: Callable[[Hashable], Any],
                 kind: str = "user", params: Mapping[str, Any] | None = None,
                 positivity: str = POSITIVITY_UNVERIFIED, max_label: Any = None):
        self.model = model
        self._fn = block_fn
        self.kind = kind
        self.params = dict(params or {})
        self.positivity = positivity
        self.max_label = max_label
        self._cache: dict[Hashable, Block] = {}
        self._lock = threading.Lock()

    def block(self, s: Any) -> Block:
        s = self.model.normalize_label(s)
        hit = self._cache.get(s)
        if hit is not None:
            return hit
        if self.max_label is not None and self.model.label_sort_key(s) > self.model.label_sort_key(self.max_label):
            raise Rejection(
                f"{self.kind} functional is only available up to label "
                f"{self.model.label_to_text(self.max_label)}"
            )
        n = self.model.dim(s)
        b = Block.coerce(self._fn(s), n)
        if b.dim != n:
            raise Rejection(f"block at {self.model.label_to_text(s)} has size {b.dim}, expected n_s = {n}")
        with self._lock:
            return self._cache.setdefault(s, b)

    __call__ = block

    def matrix(self, s: Any) -> np.ndarray:
        return self.block(s).dense()

    def prefill(self, labels: Iterable[Hashable]) -> "Functional":
        for s in labels:
            self.block(s)
        return self

    def _same_model(self, other: "Functional") -> None:
        if self.model != other.model:
            raise ModelMismatchError(
                f"functionals live on different models: {self.model.identifier} "
                f"vs {other.model.identifier}"
            )

    def __add__(self, other: "Functional") -> "Functional":
        self._same_model(other)
        pos = _combine_positivity(self, other)
        return Functional(self.model, lambda s: self.block(s) + other.block(s),
                          kind="sum", params={"terms": (self, other)}, positivity=pos,
                          max_label=_min_label(self, other))

    def __sub__(self, other: "Functional") -> "Functional":
        self._same_model(other)
        return Functional(self.model, lambda s: self.block(s) - other.block(s),
                          kind="difference", params={"terms": (self, other)},
                          max_label=_min_label(self, other))

    def __mul__(self, c: Any) -> "Functional":
        pos = self.positivity if (isinstance(c, numbers.Real) and c >= 0) else POSITIVITY_UNVERIFIED
        return Functional(self.model, lambda s: self.block(s) * c, kind="scaled",
                          params={"factor": c, "of": self}, positivity=pos,
                          max_label=self.max_label)

    __rmul__ = __mul__

    def __neg__(self) -> "Functional":
        return self * -1

    def __repr__(self) -> str:
        return f"Functional(kind={self.kind!r}, model={self.model.identifier})"


def _combine_positivity(a: Functional, b: Functional) -> str:
    if a.positivity == b.positivity == POSITIVITY_BY_CONSTRUCTION:
        return POSITIVITY_BY_CONSTRUCTION
    return POSITIVITY_UNVERIFIED


def _min_label(a: Functional, b: Functional) -> Any:
    labels = [x.max_label for x in (a, b) if x.max_label is not None]
    if not labels:
        return None
    return min(labels, key=a.model.label_sort_key)


def counit(model: QuantumGroupModel) -> Functional:
    """The counit: identity matrix on every block."""
    return Functional(model, lambda s: Block.identity(model.dim(s)), kind="counit")


def haar(model: QuantumGroupModel) -> Functional:
    """The Haar state: ``h^(s) = delta_{s,0}``."""
    triv = model.trivial_label

    def fn(s: Hashable) -> Block:
        return Block.identity(1) if s == triv else Block.zeros(model.dim(s))

    return Functional(model, fn, kind="haar")


def zero_functional(model: QuantumGroupModel) -> Functional:
    return Functional(model, lambda s: Block.zeros(model.dim(s)), kind="zero",
                      positivity=POSITIVITY_BY_CONSTRUCTION)


def character_functional(model: QuantumGroupModel, z: complex) -> Functional:
    """The Woronowicz character ``f_z`` as a functional."""
    return Functional(model, lambda s: model.character(z, s), kind="character",
                      params={"z": z})


def from_blocks(model: QuantumGroupModel, blocks: Mapping[Any, Any], kind: str = "user") -> Functional:
    """User functional given by explicit blocks; absent labels are zero."""
    table = {model.normalize_label(k): Block.coerce(v, model.dim(model.normalize_label(k)))
             for k, v in blocks.items()}
    for s, b in table.items():
        if b.dim != model.dim(s):
            raise Rejection(
                f"block at {model.label_to_text(s)} has size {b.dim}, expected n_s = {model.dim(s)}"
            )

    def fn(s: Hashable) -> Block:
        return table.get(s, Block.zeros(model.dim(s)))

    return Functional(model, fn, kind=kind, params={"labels": sorted(table, key=model.label_sort_key)})


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def convolve(phi: Functional, psi: Functional) -> Functional:
    """``(phi * psi)^(s) = phi^(s) psi^(s)``."""
    phi._same_model(psi)
    return Functional(phi.model, lambda s: phi.block(s) @ psi.block(s), kind="convolution",
                      params={"left": phi, "right": psi}, max_label=_min_label(phi, psi))


def woronowicz_character(model: QuantumGroupModel, z: complex, s: Any) -> Block:
    return model.character(z, model.normalize_label(s))


def quantum_dimension(model: QuantumGroupModel, s: Any) -> float:
    return model.quantum_dimension(model.normalize_label(s))


def haar_pairing(model: QuantumGroupModel, s: Any, a: Any, t: Any, b: Any) -> complex:
    """``h(a^* b)`` for ``a`` in block ``s`` and ``b`` in block ``t``.

    Uses ``h((u^s_ij)^* u^t_kl) = delta_st delta_jl f_{-1}(u^s_ki) / D_s``.
    """
    s = model.normalize_label(s)
    t = model.normalize_label(t)
    if s != t:
        return 0j
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    f = model.character(-1, s)
    d = model.quantum_dimension(s)
    if f.is_scalar:
        return complex(f.scalar * np.vdot(a, b) / d)
    return complex(np.einsum("ij,ki,kj->", a.conj(), f.dense(), b) / d)


def adjoint_hash(phi: Functional) -> Functional:
    """``phi^#``."""
    m = phi.model
    return Functional(m, lambda s: m.hash_block(phi.block, s), kind="hash",
                      params={"of": phi}, positivity=phi.positivity, max_label=phi.max_label)


def star_adjoint(phi: Functional) -> Functional:
    """``phi^star = phi^# o S``, the functional of the Haar-adjoint of ``L_phi``."""
    m = phi.model
    h = adjoint_hash(phi)
    return Functional(m, lambda s: m.antipode_block(h.block, s), kind="star_adjoint",
                      params={"of": phi}, max_label=phi.max_label)


def kms_adjoint(phi: Functional) -> Functional:
    """``phi^# o R``, the functional of the KMS-adjoint of ``L_phi``."""
    m = phi.model
    h = adjoint_hash(phi)
    return Functional(m, lambda s: m.unitary_antipode_block(h.block, s), kind="kms_adjoint",
                      params={"of": phi}, positivity=phi.positivity, max_label=phi.max_label)


def apply_rho(phi: Functional, z: complex, z2: complex) -> Functional:
    m = phi.model
    return Functional(m, lambda s: m.rho_block(phi.block(s), s, z, z2), kind="rho",
                      params={"of": phi, "z": z, "z2": z2}, max_label=phi.max_label)


def apply_sigma(phi: Functional, t: complex) -> Functional:
    """``phi o sigma_t`` with ``sigma_t = rho_{it, it}``."""
    return apply_rho(phi, 1j * t, 1j * t)


def apply_tau(phi: Functional, t: complex) -> Functional:
    """``phi o tau_t`` with ``tau_t = rho_{it, -it}``."""
    return apply_rho(phi, 1j * t, -1j * t)


def markov_semigroup(phi: Functional, t: float) -> Functional:
    """The convolution semigroup ``exp_*(t phi)``, blockwise ``expm(t phi^(s))``."""
    if not (t >= 0):
        raise Rejection(f"semigroup time must be non-negative, got {t}")
    t = float(t)
    return Functional(phi.model, lambda s: phi.block(s).expm(t), kind="semigroup",
                      params={"generator": phi, "t": t}, max_label=phi.max_label)


@dataclass(frozen=True)
class ConvolutionBlock:
    """``L_phi`` restricted to ``V_s``.

    ``L_phi(u_jk) = sum_l u_jl phi(u_lk)``: the coefficient matrix ``C`` of an
    element of ``V_s`` is mapped to ``C phi^(s)^T``, i.e. the row index is a
    spectator and ``phi^(s)`` acts on the column index.
    """

    label: Hashable
    matrix: Block

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return np.asarray(coeffs, dtype=complex) @ self.matrix.dense().T

    def action(self) -> np.ndarray:
        """Matrix on row-major flattened coefficients: ``I (x) phi^(s)``."""
        m = self.matrix.dense()
        return np.kron(np.eye(m.shape[0]), m)


def convolution_operator_block(phi: Functional, s: Any) -> ConvolutionBlock:
    s = phi.model.normalize_label(s)
    return ConvolutionBlock(s, phi.block(s))

