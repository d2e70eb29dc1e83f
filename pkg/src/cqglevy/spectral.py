"""Spectra of ``H_phi``, Dirichlet forms, Dirac spectra and spectral dimension."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .core import Functional, Rejection, haar_pairing
from .generators import PoissonSpec, poisson_functional
from .models import SUq2Model, TruncatedRep, half, suq2_corep_block
from .symmetry import DEFAULT_TOL, is_gns_symmetric, is_kms_symmetric

__all__ = [
    "SpectrumEntry",
    "SpectrumReport",
    "generator_spectrum",
    "dirichlet_value",
    "dirichlet_sesquilinear",
    "DiracEntry",
    "DiracSpectrum",
    "dirac_spectrum",
    "zeta_partial",
    "ZetaReport",
    "spectral_dimension",
    "cocycle",
    "cocycle_gram",
    "derivation_norm_check",
]

KERNEL_RTOL = 1e-12
CLUSTER_RTOL = 1e-9


# ---------------------------------------------------------------------------
# Generator spectrum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumEntry:
    label: Hashable
    value: float | complex
    multiplicity: int
    exact: Fraction | None = None


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues of ``H_phi = -L_phi`` block by block, sorted ascending."""

    entries: tuple[SpectrumEntry, ...]
    s_max: Any
    notes: dict = field(default_factory=dict)

    @property
    def pairs(self) -> list[tuple[float | complex, int]]:
        return [(e.value, e.multiplicity) for e in self.entries]

    @property
    def total_multiplicity(self) -> int:
        return sum(e.multiplicity for e in self.entries)

    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries])

    def block_entries(self, s: Hashable) -> list[SpectrumEntry]:
        return [e for e in self.entries if e.label == s]


def _cluster(vals: np.ndarray, scale: float) -> list[tuple[complex, int]]:
    """Group sorted eigenvalues that agree to ``CLUSTER_RTOL * scale``."""
    out: list[list] = []
    for v in vals:
        if out and abs(v - out[-1][0][-1]) <= CLUSTER_RTOL * max(scale, 1e-300):
            out[-1][0].append(v)
        else:
            out.append([[v]])
    return [(sum(c[0]) / len(c[0]), len(c[0])) for c in out]


def _block_eigenvalues(phi: Functional, s, tol: float) -> tuple[list[SpectrumEntry], str]:
    model = phi.model
    b = phi.block(s)
    if not b.is_finite():
        raise Rejection(f"block {model.label_to_text(s)} has non-finite entries")
    n = b.dim
    if b.is_scalar:
        val = -b.scalar
        val = val.real if abs(val.imag) <= tol * max(abs(val), 1.0) else val
        ex = -b.exact if b.exact is not None else None
        return [SpectrumEntry(s, float(val) if isinstance(val, float) else val, n * n, ex)], "scalar"
    m = -b.dense()
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    w = model.kms_weights(s)
    herm_dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if herm_dev <= tol * max(scale, 1e-300):
        vals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        method = "hermitian"
    else:
        weighted = None
        if w is not None:
            r = np.sqrt(w)
            sim = r[:, None] * m / r[None, :]
            if float(np.max(np.abs(sim - sim.conj().T))) <= tol * max(float(np.max(np.abs(sim))), 1e-300):
                weighted = sim
        if weighted is not None:
            vals = np.linalg.eigvalsh(0.5 * (weighted + weighted.conj().T))
            method = "weighted-hermitian"
        else:
            vals = np.linalg.eigvals(m)
            if np.all(np.abs(vals.imag) <= tol * max(scale, 1e-300)):
                vals = np.sort(vals.real)
            else:
                vals = vals[np.lexsort((vals.imag, vals.real))]
            method = "general"
    entries = []
    for v, count in _cluster(np.asarray(vals), scale):
        v = complex(v)
        val: float | complex = v.real if abs(v.imag) <= tol * max(scale, 1e-300) else v
        entries.append(SpectrumEntry(s, val, count * n))
    return entries, method


def _sort_key(e: SpectrumEntry) -> tuple:
    v = complex(e.value)
    return (v.real, v.imag)


def generator_spectrum(phi: Functional, s_max: Any, tol: float = DEFAULT_TOL,
                       threads: int | None = None) -> SpectrumReport:
    """Eigenvalues of ``-phi^(s)`` for every ``s <= s_max``, multiplicities scaled by ``n_s``."""
    model = phi.model
    labels = model.labels(s_max)
    triv = phi.block(model.trivial_label)
    if triv.max_abs() > tol:
        warnings.warn("functional does not vanish on the unit; not a generating functional",
                      stacklevel=2)
    if threads and threads > 1 and len(labels) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda s: _block_eigenvalues(phi, s, tol), labels))
    else:
        results = [_block_eigenvalues(phi, s, tol) for s in labels]
    entries = [e for ents, _ in results for e in ents]
    entries.sort(key=_sort_key)  # stable: ties keep label order
    notes = {model.label_to_text(s): method for s, (_, method) in zip(labels, results)}
    return SpectrumReport(tuple(entries), s_max, notes)


# ---------------------------------------------------------------------------
# Dirichlet forms
# ---------------------------------------------------------------------------


def dirichlet_value(phi: Functional, a: Mapping[Any, Any], tol: float = DEFAULT_TOL) -> float:
    """``E[a] = -h(a^* L_phi(a))`` for ``a`` given as ``{label: coefficient matrix}``."""
    model = phi.model
    labels = [model.normalize_label(s) for s in a]
    horizon = max(labels, key=model.label_sort_key) if labels else model.trivial_label
    if not is_gns_symmetric(phi, _horizon_value(model, horizon), tol).ok:
        raise Rejection("functional is not GNS-symmetric; use dirichlet_sesquilinear")
    total = 0j
    for s, c in a.items():
        s = model.normalize_label(s)
        c = np.asarray(c, dtype=complex)
        lc = c @ phi.block(s).dense().T
        total += haar_pairing(model, s, c, s, lc)
    return float(-total.real)


def _horizon_value(model, label):
    if isinstance(label, tuple):
        return model.word_length(label)
    return label


def dirichlet_sesquilinear(phi: Functional, left: tuple, right: tuple,
                           tol: float = DEFAULT_TOL, check: bool = True) -> complex:
    """``E(u^s_jk, u^t_lm) = -delta_st f_{-1/2}(u_lj) (f_{1/2} * phi)(u_km) / D_s``.

    ``left = (s, j, k)`` and ``right = (t, l, m)`` use array positions
    ``0..n_s-1``.  The overall minus sign makes the form non-negative.
    """
    model = phi.model
    s, j, k = left
    t, l, m = right
    s, t = model.normalize_label(s), model.normalize_label(t)
    if s != t:
        return 0j
    if check and not is_kms_symmetric(phi, _horizon_value(model, s), tol).ok:
        raise Rejection("functional is not KMS-symmetric")
    fm = model.character(-0.5, s).dense()
    fp = model.character(0.5, s).dense()
    block = (fp @ phi.block(s).dense())
    return complex(-fm[l, j] * block[k, m] / model.quantum_dimension(s))


# ---------------------------------------------------------------------------
# Dirac spectrum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiracEntry:
    label: Hashable
    value: float
    multiplicity: int
    square: float  # eigenvalue of D^2, i.e. 2 * lambda


@dataclass(frozen=True)
class DiracSpectrum:
    entries: tuple[DiracEntry, ...]
    kernel: int
    s_max: Any

    def squared_halved(self) -> list[tuple[Hashable, float, int]]:
        """Positive half of the spectrum mapped back through ``mu -> mu^2 / 2``."""
        return [(e.label, e.square / 2, e.multiplicity) for e in self.entries if e.value > 0]

    @property
    def pairs(self) -> list[tuple[float, int]]:
        return [(e.value, e.multiplicity) for e in self.entries]


def _split_kernel(spec: SpectrumReport, tol: float) -> tuple[list[SpectrumEntry], int]:
    radius = max((abs(complex(e.value)) for e in spec.entries), default=0.0)
    nonzero, kernel = [], 0
    for e in spec.entries:
        v = complex(e.value)
        if abs(v) <= KERNEL_RTOL * radius or radius == 0:
            kernel += e.multiplicity
            continue
        if abs(v.imag) > 0:
            raise Rejection(f"complex eigenvalue {v} in block {e.label}: functional is not GNS-symmetric")
        if v.real < -tol * max(radius, 1.0):
            raise Rejection(f"negative eigenvalue {v.real} in block {e.label}: not a generating functional")
        if v.real <= 0:
            kernel += e.multiplicity
            continue
        nonzero.append(e)
    return nonzero, kernel


def dirac_spectrum(phi: Functional, s_max: Any, tol: float = DEFAULT_TOL,
                   threads: int | None = None, spectrum: SpectrumReport | None = None) -> DiracSpectrum:
    """``+-sqrt(2 lambda)`` with multiplicity ``m`` each, for ``lambda > 0`` in the spectrum of ``H_phi``."""
    spec = spectrum or generator_spectrum(phi, s_max, tol, threads)
    nonzero, kernel = _split_kernel(spec, tol)
    out = []
    for e in nonzero:
        sq = 2.0 * float(e.value)
        root = math.sqrt(sq)
        out.append(DiracEntry(e.label, -root, e.multiplicity, sq))
        out.append(DiracEntry(e.label, root, e.multiplicity, sq))
    out.sort(key=lambda d: d.value)
    return DiracSpectrum(tuple(out), kernel, s_max)


# ---------------------------------------------------------------------------
# Zeta function and spectral dimension
# ---------------------------------------------------------------------------


def zeta_partial(phi: Functional, z: float, s_max: Any, tol: float = DEFAULT_TOL,
                 threads: int | None = None) -> float:
    """``Tr |D|^{-z}`` over blocks up to ``s_max``: ``sum 2 m (2 lambda)^{-z/2}``."""
    spec = generator_spectrum(phi, s_max, tol, threads)
    nonzero, _ = _split_kernel(spec, tol)
    if not nonzero:
        raise Rejection("all-zero spectrum: zeta function is undefined")
    logs = [math.log(2) + math.log(e.multiplicity) - 0.5 * z * math.log(2.0 * float(e.value))
            for e in nonzero]
    val = float(logsumexp(logs))
    return math.exp(val) if val < 709 else math.inf


@dataclass(frozen=True)
class ZetaReport:
    counting: tuple[tuple[float, int], ...]
    fit_window: tuple[float, float]
    power_slope: float
    power_rss: float
    exp_slope: float
    exp_rss: float
    verdict: str  # "finite" or "divergent"
    estimate: float | None
    grid: np.ndarray
    log_partial_sums: np.ndarray
    growth: np.ndarray
    grid_abscissa: float | None
    s_max: Any
    kernel: int

    @property
    def total_count(self) -> int:
        return self.counting[-1][1] if self.counting else self.kernel


def _lstsq(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    rss = float(np.sum((a @ coef - y) ** 2))
    return float(coef[0]), float(coef[1]), rss


def spectral_dimension(phi: Functional, s_max: Any, tol: float = DEFAULT_TOL,
                       threads: int | None = None, grid_step: float = 0.01,
                       grid_max: float = 10.0) -> ZetaReport:
    """Estimate the abscissa of convergence of ``Tr |D|^{-z}`` from the counting function.

    ``N(Lambda) = #{eigenvalues of H_phi <= Lambda}`` is sampled at every
    distinct eigenvalue, taking the midpoint of each jump.  On the upper half of the ``log Lambda`` range,
    ``log N`` is regressed on ``log Lambda`` (power law) and on ``Lambda``
    (exponential growth).  The power law wins when its residual sum is at
    most half the other; then ``d = 2 * slope``.
    """
    spec = generator_spectrum(phi, s_max, tol, threads)
    nonzero, kernel = _split_kernel(spec, tol)
    if not nonzero:
        raise Rejection("all-zero spectrum: spectral dimension is undefined")
    merged: list[list] = []
    for e in nonzero:  # already sorted ascending
        v = float(e.value)
        if merged and abs(v - merged[-1][0]) <= 1e-12 * v:
            merged[-1][1] += e.multiplicity
        else:
            merged.append([v, e.multiplicity])
    counting, running = [], kernel
    for v, m in merged:
        running += m
        counting.append((v, running))
    lam = np.array([c[0] for c in counting])
    log_lam = np.log(lam)
    # fit at jump midpoints: N(L) = (N(L-) + N(L+)) / 2 removes the step bias
    log_n = np.array([math.log(c[1] - 0.5 * m) for c, (_, m) in zip(counting, merged)])
    lo, hi = log_lam[0], log_lam[-1]
    cut = lo + 0.5 * (hi - lo)
    mask = log_lam >= cut
    if mask.sum() < 3:
        mask = np.ones_like(mask)
    p_slope, _, p_rss = _lstsq(log_lam[mask], log_n[mask])
    e_slope, _, e_rss = _lstsq(lam[mask], log_n[mask])
    finite = p_rss <= 0.5 * e_rss
    estimate = 2.0 * p_slope if finite else None

    grid = np.round(np.arange(1, int(round(grid_max / grid_step)) + 1) * grid_step, 12)
    log_m = np.array([math.log(2) + math.log(m) for _, m in merged])
    log_2lam = np.log(2.0 * lam)
    terms = log_m[:, None] - 0.5 * grid[None, :] * log_2lam[:, None]
    log_full = logsumexp(terms, axis=0)
    half_idx = int(np.searchsorted(log_lam, cut, side="right"))
    half_idx = max(half_idx, 1)
    log_half = logsumexp(terms[:half_idx], axis=0)
    span = log_lam[-1] - log_lam[half_idx - 1]
    growth = (log_full - log_half) / span if span > 0 else np.zeros_like(grid)
    below = np.nonzero(growth <= 0.05)[0]
    grid_abscissa = float(grid[below[0]]) if below.size else None

    return ZetaReport(
        counting=tuple((float(a), int(b)) for a, b in counting),
        fit_window=(float(math.exp(cut)), float(lam[-1])),
        power_slope=p_slope, power_rss=p_rss, exp_slope=e_slope, exp_rss=e_rss,
        verdict="finite" if finite else "divergent", estimate=estimate,
        grid=grid, log_partial_sums=log_full, growth=growth, grid_abscissa=grid_abscissa,
        s_max=s_max, kernel=kernel,
    )


# ---------------------------------------------------------------------------
# Cocycles and the derivation norm
# ---------------------------------------------------------------------------


def _require_depth(spec: PoissonSpec, word_len: int) -> None:
    need = spec.support_depth() + word_len + 1
    if need > spec.rep.M:
        raise Rejection(f"truncation insufficient: need M >= {need}, have M = {spec.rep.M}")
    if spec.rep.kind == "pi" and word_len > spec.rep.W:
        raise Rejection(f"window insufficient: need W >= {word_len}, have W = {spec.rep.W}")


def cocycle(spec: PoissonSpec, word: Sequence[str]) -> np.ndarray:
    """``eta(a) = (pi(a) - eps(a)) v`` for a word in ``'a', 'a*', 'g', 'g*'``."""
    _require_depth(spec, len(word))
    rep = spec.rep
    return rep.word(word) @ spec.vector - rep.counit(word) * spec.vector


def cocycle_gram(spec: PoissonSpec, a: Sequence[str], b: Sequence[str]) -> complex:
    """``<eta(a^*), eta(b)>``; equals ``phi(a b)`` when ``eps(a) = eps(b) = 0``."""
    a_star = [_STAR[x] for x in reversed(a)]
    return complex(np.vdot(cocycle(spec, a_star), cocycle(spec, b)))


_STAR = {"a": "a*", "a*": "a", "g": "g*", "g*": "g"}


def derivation_norm_check(spec: PoissonSpec, a: Mapping[Any, Any]) -> tuple[float, float]:
    """Both sides of ``||d a||^2 = 2 E_phi[a]`` for ``a`` supported on blocks ``s <= 1``.

    Left side: ``d a = sum a_(1) (x) eta(a_(2))`` with the Haar inner product
    in the first leg and the cocycle inner product in the second; since
    ``Delta(u_jk) = sum_p u_jp (x) u_pk`` this is
    ``sum conj(c_jk) c_j'k' h(u_jp^* u_j'p) <eta(u_pk), eta(u_pk')>``.
    Right side: ``-2 h(a^* L_phi a)`` with ``phi`` read off the same spec.
    """
    rep: TruncatedRep = spec.rep
    model = SUq2Model(rep.q)
    _require_depth(spec, 2)
    phi = poisson_functional(model, spec, 1)
    v = spec.vector
    lhs, rhs = 0.0, 0.0
    for s, c in a.items():
        s = half(s)
        c = np.asarray(c, dtype=complex)
        ops = suq2_corep_block(s, rep)
        n = ops.shape[0]
        eta = np.einsum("pkab,b->pka", ops, v) - np.einsum("pk,b->pkb", np.eye(n), v)
        gram = np.einsum("pka,pla->pkl", eta.conj(), eta)  # <eta(u_pk), eta(u_pl)>
        fm1 = model.character(-1, s).dense()
        d = model.quantum_dimension(s)
        # h(u_jp^* u_j'p') = delta_pp' F_{-1}[j', j] / D
        val = np.einsum("jk,Jm,Jj,pkm->", c.conj(), c, fm1, gram) / d
        lhs += float(val.real)
        lc = c @ phi.block(s).dense().T
        rhs += -2.0 * haar_pairing(model, s, c, s, lc).real
    return lhs, rhs
