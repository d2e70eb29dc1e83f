"""Growth of phi_inf(alpha^{*m} alpha^m) with m, with certified tails.

    python3 scripts/phi_infinity_growth.py --q 0.3 0.5 0.9 --m-max 30
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass

from cqglevy import phi_infinity_value


@dataclass(frozen=True)
class GrowthConfig:
    qs: tuple[float, ...] = (0.3, 0.5, 0.9)
    m_max: int = 30
    tol: float = 1e-14


def run(cfg: GrowthConfig):
    for q in cfg.qs:
        for m in range(cfg.m_max + 1):
            v = phi_infinity_value(q, m, cfg.tol)
            yield {"q": q, "m": m, "value": repr(v.value), "error_bound": f"{v.error_bound:.3e}",
                   "terms": v.terms, "below_minus_m_plus_1": v.value <= -(m - 1)}


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--q", type=float, nargs="+", default=list(GrowthConfig.qs))
    p.add_argument("--m-max", type=int, default=GrowthConfig.m_max)
    p.add_argument("--tol", type=float, default=GrowthConfig.tol)
    a = p.parse_args(argv)
    rows = list(run(GrowthConfig(tuple(a.q), a.m_max, a.tol)))
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
