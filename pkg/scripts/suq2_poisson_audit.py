"""Audit of Poisson-type functionals on SU_q(2).

Compares the tabulated quarter-turn blocks with the truncated-operator route,
classifies both, and checks the anti-diagonal eigenvalue rule.  Prints JSON.

    python3 scripts/suq2_poisson_audit.py --q 0.5 --theta 1.5707963 0.4 --k 0 1
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from cqglevy import PoissonSpec, classify, poisson_closed_form, poisson_functional
from cqglevy.models import SUq2Model, truncated_rho


@dataclass(frozen=True)
class AuditConfig:
    q: float = 0.5
    thetas: tuple[float, ...] = (math.pi / 2,)
    ks: tuple[int, ...] = (0,)
    M: int = 64
    s2_max: int = 7  # closed-form blocks checked up to s = s2_max / 2


def _eigen_rule(q: float, s: Fraction) -> np.ndarray:
    out = []
    for a in range(int(2 * s) + 1):
        j = a - s
        if j > 0:
            e = float((s - j) * (s + j + 1) + 2 * j)
            out += [-(1 + q ** e), -(1 - q ** e)]
        elif j == 0:
            out.append(-1 + (-1) ** int(s) * q ** float(s * (s + 1)))
    return np.sort_complex(np.array(out, dtype=complex))


def _flags(rep) -> dict:
    return {k: rep[k] for k in ("hermitian", "gns", "kms", "ad_invariant", "modular_commuting")}


def run(cfg: AuditConfig) -> dict:
    m = SUq2Model(cfg.q)
    closed = poisson_closed_form(m)
    eig_err = max(
        float(np.max(np.abs(np.sort_complex(np.linalg.eigvals(closed.matrix(Fraction(s2, 2))))
                            - _eigen_rule(cfg.q, Fraction(s2, 2)))))
        for s2 in range(cfg.s2_max + 1))
    out = {"config": asdict(cfg),
           "closed_form": {"flags": _flags(classify(closed, Fraction(cfg.s2_max, 2))),
                           "eigen_rule_max_err": eig_err},
           "operator": []}
    half = Fraction(1, 2)
    for theta in cfg.thetas:
        for k in cfg.ks:
            phi = poisson_functional(m, PoissonSpec.basis(truncated_rho(cfg.q, theta, cfg.M), k), 1)
            blk = phi.matrix(half)
            out["operator"].append({
                "theta": theta, "k": k, "flags": _flags(classify(phi, 1)),
                "phi_gamma": [blk[1, 0].real, blk[1, 0].imag],
                "diff_vs_closed_form_s_half": float(np.max(np.abs(blk - closed.matrix(half)))),
            })
    return out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--q", type=float, default=AuditConfig.q)
    p.add_argument("--theta", type=float, nargs="+", default=list(AuditConfig.thetas))
    p.add_argument("--k", type=int, nargs="+", default=list(AuditConfig.ks))
    p.add_argument("--M", type=int, default=AuditConfig.M)
    a = p.parse_args(argv)
    print(json.dumps(run(AuditConfig(a.q, tuple(a.theta), tuple(a.k), a.M)), indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
