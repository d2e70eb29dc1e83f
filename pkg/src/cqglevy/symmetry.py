"""Symmetry predicates for functionals, certified up to a label horizon."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, NamedTuple

import numpy as np

from .core import Block, Functional, adjoint_hash, kms_adjoint

__all__ = [
    "DEFAULT_TOL",
    "Check",
    "relative_violation",
    "is_hermitian",
    "is_gns_symmetric",
    "is_kms_symmetric",
    "kms_witness",
    "is_ad_invariant",
    "commutes_with_modular",
    "detailed_balance_check",
    "detailed_balance_residual",
    "ClassificationReport",
    "InconsistentClassification",
    "classify",
]

DEFAULT_TOL = 1e-10


class Check(NamedTuple):
    ok: bool
    violation: float


class InconsistentClassification(AssertionError):
    """A report would state GNS symmetry without its consequences."""


def relative_violation(x: Block, y: Block) -> float:
    """``max|x - y|`` divided by the larger max-entry magnitude of the two blocks."""
    if x.is_scalar and y.is_scalar:
        diff = abs(x.scalar - y.scalar)
        scale = max(abs(x.scalar), abs(y.scalar))
    else:
        xd, yd = x.dense(), y.dense()
        diff = float(np.max(np.abs(xd - yd))) if x.dim else 0.0
        scale = max(x.max_abs(), y.max_abs())
    return 0.0 if diff == 0 else diff / scale


def _labels(phi: Functional, s_max: Any) -> list:
    return phi.model.labels(s_max)


def _max_over(labels: list, fn: Callable[[Hashable], float], threads: int | None) -> float:
    if threads and threads > 1 and len(labels) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(fn, labels))
    else:
        vals = [fn(s) for s in labels]
    return max(vals, default=0.0)


def _compare(phi: Functional, other: Functional, s_max, tol, threads) -> Check:
    v = _max_over(_labels(phi, s_max), lambda s: relative_violation(phi.block(s), other.block(s)), threads)
    return Check(v <= tol, v)


def is_hermitian(phi: Functional, s_max: Any, tol: float = DEFAULT_TOL, threads: int | None = None) -> Check:
    """Deviation between ``phi`` and ``phi^#``."""
    return _compare(phi, adjoint_hash(phi), s_max, tol, threads)


def is_gns_symmetric(phi: Functional, s_max: Any, tol: float = DEFAULT_TOL,
                     threads: int | None = None) -> Check:
    """Hermitian and ``phi o S = phi``.

    Together these say ``phi^# o S = phi``; in Kac models they amount to
    every block being a real symmetric, i.e. hermitian, matrix.
    """
    model = phi.model
    herm = is_hermitian(phi, s_max, tol, threads)
    v = _max_over(_labels(phi, s_max),
                  lambda s: relative_violation(phi.block(s), model.antipode_block(phi.block, s)), threads)
    v = max(v, herm.violation)
    return Check(v <= tol, v)


def is_kms_symmetric(phi: Functional, s_max: Any, tol: float = DEFAULT_TOL,
                     threads: int | None = None) -> Check:
    """Deviation between ``phi`` and ``phi^# o R``."""
    return _compare(phi, kms_adjoint(phi), s_max, tol, threads)


def kms_witness(phi: Functional, s: Any) -> tuple[np.ndarray, float]:
    """``[w_j phi(u_jk)]`` and its relative distance from hermiticity.

    For SU_q(2), ``w_j = q^j`` and the matrix is hermitian exactly when the
    block is KMS-symmetric.  Kac models use ``w = 1``.
    """
    model = phi.model
    s = model.normalize_label(s)
    m = phi.block(s).dense()
    w = model.kms_weights(s)
    wm = m if w is None else w[:, None] * m
    scale = float(np.max(np.abs(wm))) if wm.size else 0.0
    diff = float(np.max(np.abs(wm - wm.conj().T))) if wm.size else 0.0
    return wm, (0.0 if diff == 0 else diff / scale)


def _ad_violation(b: Block) -> float:
    if b.is_scalar:
        return 0.0
    m = b.dense()
    scale = b.max_abs()
    if scale == 0:
        return 0.0
    off = m - np.diag(np.diag(m))
    d = np.diag(m)
    spread = float(np.max(np.abs(d - d[0])))
    return max(float(np.max(np.abs(off))), spread) / scale


def is_ad_invariant(phi: Functional, s_max: Any, tol: float = DEFAULT_TOL,
                    threads: int | None = None) -> Check:
    """Largest off-diagonal magnitude or diagonal spread, relative to block scale."""
    v = _max_over(_labels(phi, s_max), lambda s: _ad_violation(phi.block(s)), threads)
    return Check(v <= tol, v)


def _modular_violation(phi: Functional, s) -> float:
    model = phi.model
    b = phi.block(s)
    f = model.character(-1, s)
    if b.is_scalar or f.is_scalar:
        return 0.0
    m, fm = b.dense(), f.dense()
    scale = b.max_abs() * float(np.max(np.abs(fm)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(m @ fm - fm @ m))) / scale


def commutes_with_modular(phi: Functional, s_max: Any, tol: float = DEFAULT_TOL,
                          threads: int | None = None) -> Check:
    """``max |phi^(s) F^(s) - F^(s) phi^(s)|`` with ``F = [f_{-1}(u_jk)]``."""
    v = _max_over(_labels(phi, s_max), lambda s: _modular_violation(phi, s), threads)
    return Check(v <= tol, v)


# ---------------------------------------------------------------------------
# Detailed balance, computed from Haar pairings
# ---------------------------------------------------------------------------


def detailed_balance_residual(phi: Functional, s_max: Any) -> tuple[float, float]:
    """Residuals of ``h(a L(b)) = h(L(a) b)`` and of ``L(a^*) = L(a)^*``.

    ``a`` runs over the Peter-Weyl basis of each block ``V_s`` and ``b`` over
    the block holding ``a^*`` (the only one pairing non-trivially with ``a``).
    Since ``h(a L(b)) = sum G_a * (b M^T) = sum (G_a M) * b``, the first
    identity for all ``b`` at once reads ``G_a M = G_{L(a)}``, where
    ``G_a = F_{-1} conj(c(a^*)) / D`` follows from writing ``a = (a^*)^*`` in
    the Peter-Weyl relation.  Residuals are relative to the pairing and block
    scales.
    """
    model = phi.model
    qdb, herm = 0.0, 0.0
    for s in model.labels(s_max):
        n = model.dim(s)
        sc = model.conjugate_label(s)
        m, mc = phi.block(s), phi.block(sc)
        scale = max(m.max_abs(), mc.max_abs())
        if scale == 0:
            continue
        md, mcd = m.dense(), mc.dense()
        f = model.character(-1, sc).dense() / model.quantum_dimension(sc)

        def stars(stack):
            return np.array([model.star_coefficients(s, x)[1] for x in stack])

        for i in range(n):  # basis elements E_ij for one row at a time
            a = np.zeros((n, n, n), dtype=complex)
            a[np.arange(n), i, np.arange(n)] = 1.0
            la = a @ md.T
            a_star, la_star = stars(a), stars(la)
            g_a = f @ np.conj(a_star)
            res = g_a @ mcd - f @ np.conj(la_star)
            norm_g = np.max(np.abs(g_a), axis=(1, 2))
            qdb = max(qdb, float(np.max(np.max(np.abs(res), axis=(1, 2)) / (norm_g * scale))))
            diff = la_star - a_star @ mcd.T
            norm_a = np.max(np.abs(a_star), axis=(1, 2))
            herm = max(herm, float(np.max(np.max(np.abs(diff), axis=(1, 2)) / (norm_a * scale))))
    return qdb, herm


def detailed_balance_check(phi: Functional, s_max: Any, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``L_phi`` is hermitian and satisfies ``h(a L(b)) = h(L(a) b)``."""
    qdb, herm = detailed_balance_residual(phi, s_max)
    return qdb <= tol and herm <= tol


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassificationReport:
    flags: dict[str, Check]
    s_max: Any
    tol: float
    positivity: str
    witness: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, key: str) -> bool:
        return self.flags[key].ok

    def as_dict(self, label_text: Callable[[Any], str] = str) -> dict:
        return {
            "flags": {k: bool(v.ok) for k, v in self.flags.items()},
            "violations": {k: float(v.violation) for k, v in self.flags.items()},
            "s_max": label_text(self.s_max),
            "tolerance": self.tol,
            "positivity": self.positivity,
            "witness": dict(self.witness),
        }


def classify(phi: Functional, s_max: Any, tol: float = DEFAULT_TOL,
             threads: int | None = None) -> ClassificationReport:
    flags = {
        "hermitian": is_hermitian(phi, s_max, tol, threads),
        "gns": is_gns_symmetric(phi, s_max, tol, threads),
        "kms": is_kms_symmetric(phi, s_max, tol, threads),
        "ad_invariant": is_ad_invariant(phi, s_max, tol, threads),
        "modular_commuting": commutes_with_modular(phi, s_max, tol, threads),
    }
    if flags["gns"].ok and not (flags["kms"].ok and flags["modular_commuting"].ok):
        raise InconsistentClassification(
            f"GNS symmetry certified (violation {flags['gns'].violation:.3e}) but "
            f"KMS {flags['kms'].violation:.3e} / modular {flags['modular_commuting'].violation:.3e} fail"
        )
    witness = {}
    if phi.model.kms_weights(phi.model.trivial_label) is not None:
        witness["weighted_hermiticity"] = max(
            kms_witness(phi, s)[1] for s in phi.model.labels(s_max)
        )
    return ClassificationReport(flags, s_max, tol, phi.positivity, witness)
