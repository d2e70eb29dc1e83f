"""Command-line front end: ``cqglevy <verb> --job job.json [--out DIR]``.

Job files are JSON objects::

    {"model": {"family": "onplus", "N": 2},
     "functional": {"hunt": {"b": 1.0, "nu": []}},
     "task": "zeta", "s_max": 200}

SU_q(2) block labels and horizons use the doubled index ``2s`` (an integer),
so ``"s_max": 7`` means ``s = 7/2`` and block key ``"1"`` means ``s = 1/2``.
Discrete-group labels are comma-separated coordinates or letters
(``"-2"``, ``"1,-1"``, ``"e"`` for the identity).  Complex entries are written
as ``[re, im]``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .core import Functional, Rejection, counit, from_blocks, markov_semigroup, zero_functional
from .generators import (
    IntervalMeasure,
    PoissonSpec,
    ad_project,
    discrete_length_functional,
    hunt_onplus,
    kms_symmetrize,
    poisson_closed_form,
    poisson_functional,
    suq2_gns_generic,
)
from .models import DiscreteGroupModel, OnPlusModel, SUq2Model, truncated_rho
from .spectral import dirac_spectrum, dirichlet_value, generator_spectrum, spectral_dimension
from .symmetry import DEFAULT_TOL, classify

__all__ = ["JobError", "JobSpec", "parse_jobspec", "build_model", "build_functional", "run_job", "main"]

TASKS = ("classify", "spectrum", "dirac", "zeta", "semigroup", "dirichlet")

EXIT_OK, EXIT_REJECTED, EXIT_INVALID = 0, 1, 2


class JobError(ValueError):
    """Invalid job file; ``errors`` lists ``path: message`` strings."""

    def __init__(self, errors: list[str]):
        self.errors = sorted(set(errors))
        super().__init__("; ".join(self.errors))


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------

_NUM = {"type": "number"}
_CPLX = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _CPLX}}


def _obj(props: dict, required: tuple = ()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_FUNCTIONAL: dict = {"$ref": "#/$defs/functional"}

FUNCTIONAL_SCHEMA = {
    "type": "object",
    "minProperties": 1,
    "maxProperties": 1,
    "additionalProperties": False,
    "properties": {
        "hunt": _obj({
            "b": {"type": "number", "minimum": 0},
            "nu": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
            "density": {"type": "array", "items": _NUM},
            "density_support": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
            "exact": {"type": "boolean"},
        }, ("b",)),
        "poisson": _obj({
            "route": {"enum": ["closed_form", "operator"]},
            "theta": _NUM,
            "k": {"type": "integer", "minimum": 0},
            "M": {"type": "integer", "minimum": 4},
        }),
        "gns_generic": _obj({
            "c": {"type": "object", "additionalProperties": {"type": "object", "additionalProperties": _NUM}},
        }, ("c",)),
        "length": _obj({}),
        "counit": _obj({}),
        "zero": _obj({}),
        "inline": _obj({"blocks": {"type": "object", "additionalProperties": _MATRIX}}, ("blocks",)),
        "kms_symmetrize": _FUNCTIONAL,
        "ad_project": _FUNCTIONAL,
    },
}

_MODEL_SCHEMA = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": ["onplus", "suq2", "discrete"]},
        "N": {"type": "integer", "minimum": 2},
        "q": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "group": {"enum": ["Z", "F"]},
        "rank": {"type": "integer", "minimum": 1},
        "length": {"enum": ["word", "word_squared"]},
        "radius": {"type": "integer", "minimum": 0},
    },
    "allOf": [
        {"if": {"properties": {"family": {"const": "onplus"}}},
         "then": {"required": ["N"], "propertyNames": {"enum": ["family", "N"]}}},
        {"if": {"properties": {"family": {"const": "suq2"}}},
         "then": {"required": ["q"], "propertyNames": {"enum": ["family", "q"]}}},
        {"if": {"properties": {"family": {"const": "discrete"}}},
         "then": {"required": ["group"],
                  "propertyNames": {"enum": ["family", "group", "rank", "length", "radius"]}}},
    ],
}

JOB_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"functional": FUNCTIONAL_SCHEMA},
    "type": "object",
    "required": ["model", "functional"],
    "additionalProperties": False,
    "properties": {
        "model": _MODEL_SCHEMA,
        "functional": _FUNCTIONAL,
        "task": {"enum": list(TASKS)},
        "s_max": {"type": "integer", "minimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "t": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "coefficients": {"type": "object", "additionalProperties": _MATRIX},
        "outputs": _obj({
            "report": {"type": "string"},
            "csv": {"type": "string"},
            "plot": {"type": "string"},
        }),
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(JOB_SCHEMA)


def _path(parts) -> str:
    return ".".join(str(p) for p in parts) or "<root>"


def _describe(err: jsonschema.ValidationError) -> list[str]:
    where = list(err.absolute_path)
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        return [f"{_path(where + [k])}: unknown key" for k in err.instance if k not in allowed]
    if err.validator == "propertyNames" or "propertyNames" in err.schema_path:
        return [f"{_path(where + [err.instance])}: unknown key"]
    if err.validator == "required":
        missing = err.message.split("'")[1]
        return [f"{_path(where + [missing])}: missing required key"]
    if err.validator in ("maxProperties", "minProperties"):
        return [f"{_path(where)}: exactly one functional constructor expected, got {sorted(err.instance)}"]
    return [f"{_path(where)}: {err.message}"]


def _leaf_errors(errors) -> list[str]:
    out = []
    for err in errors:
        if err.validator in ("allOf", "if") and err.context:
            out.extend(_leaf_errors(err.context))
        else:
            out.extend(_describe(err))
    return out


# ---------------------------------------------------------------------------
# JobSpec
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JobSpec:
    model: dict
    functional: dict
    task: str | None = None
    s_max: int = 10
    tol: float = DEFAULT_TOL
    threads: int | None = None
    t: tuple = (0.1, 1.0, 10.0)
    coefficients: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["t"] = list(self.t)
        return {k: v for k, v in d.items() if v is not None and v != {}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def parse_jobspec(text: str | bytes) -> JobSpec:
    """Validate JSON job text; every offending path is reported at once."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JobError([f"<root>: not valid JSON ({exc.msg} at line {exc.lineno})"]) from None
    if not isinstance(raw, dict):
        raise JobError(["<root>: job must be a JSON object"])
    errors = _leaf_errors(_VALIDATOR.iter_errors(raw))
    if errors:
        raise JobError(errors)
    job = JobSpec(
        model=raw["model"], functional=raw["functional"], task=raw.get("task"),
        s_max=raw.get("s_max", 10), tol=raw.get("tol", DEFAULT_TOL), threads=raw.get("threads"),
        t=tuple(raw.get("t", (0.1, 1.0, 10.0))), coefficients=raw.get("coefficients", {}),
        outputs=raw.get("outputs", {}),
    )
    model = build_model(job.model)
    _semantic_checks(job, model)
    return job


def _semantic_checks(job: JobSpec, model) -> None:
    errors: list[str] = []
    _check_functional(job.functional, model, ["functional"], errors)
    for key, mat in job.coefficients.items():
        _check_block(model, key, mat, ["coefficients", key], errors)
    if errors:
        raise JobError(errors)


_FAMILY_OF = {"hunt": OnPlusModel, "poisson": SUq2Model, "gns_generic": SUq2Model,
              "length": DiscreteGroupModel}


def _check_functional(desc: dict, model, where: list, errors: list[str]) -> None:
    (name, body), = desc.items()
    here = where + [name]
    need = _FAMILY_OF.get(name)
    if need is not None and not isinstance(model, need):
        errors.append(f"{_path(here)}: constructor needs model family "
                      f"{ {OnPlusModel: 'onplus', SUq2Model: 'suq2', DiscreteGroupModel: 'discrete'}[need] }")
    if name in ("kms_symmetrize", "ad_project"):
        _check_functional(body, model, here, errors)
    elif name == "inline":
        for key, mat in body["blocks"].items():
            _check_block(model, key, mat, here + ["blocks", key], errors)
    elif name == "poisson" and isinstance(model, SUq2Model):
        if body.get("route", "closed_form") == "closed_form":
            if not math.isclose(body.get("theta", math.pi / 2), math.pi / 2) or body.get("k", 0) != 0:
                errors.append(f"{_path(here)}: closed_form route exists only for theta = pi/2, k = 0")
    elif name == "gns_generic" and isinstance(model, SUq2Model):
        for s2, row in body["c"].items():
            try:
                n2 = int(s2)
                if n2 < 0:
                    raise ValueError
            except ValueError:
                errors.append(f"{_path(here + ['c', s2])}: label must be a non-negative integer 2s")
                continue
            for j2 in row:
                try:
                    jj = int(j2)
                except ValueError:
                    errors.append(f"{_path(here + ['c', s2, j2])}: index must be an integer 2j")
                    continue
                if abs(jj) > n2 or (n2 - jj) % 2:
                    errors.append(f"{_path(here + ['c', s2, j2])}: 2j must be in -2s..2s with 2s-2j even")


def _check_block(model, key: str, mat: list, where: list, errors: list[str]) -> None:
    try:
        label = parse_label(model, key)
    except (Rejection, ValueError) as exc:
        errors.append(f"{_path(where)}: bad block label ({exc})")
        return
    n = int(model.dim(label))
    if len(mat) != n or any(len(row) != n for row in mat):
        shape = f"{len(mat)}x{len(mat[0]) if mat else 0}"
        errors.append(f"{_path(where)}: block needs an n_s x n_s matrix with n_s = {n}, got {shape}")


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def parse_label(model, key: str):
    if isinstance(model, SUq2Model):
        k = int(key)
        if k < 0:
            raise ValueError("2s must be non-negative")
        return model.normalize_label(Fraction(k, 2))
    if isinstance(model, DiscreteGroupModel):
        if key.strip() in ("e", ""):
            return model.trivial_label
        return model.normalize_label(tuple(int(x) for x in key.split(",")))
    k = int(key)
    if k < 0:
        raise ValueError("label must be non-negative")
    return model.normalize_label(k)


def horizon(model, s_max: int):
    return Fraction(s_max, 2) if isinstance(model, SUq2Model) else s_max


def build_model(desc: dict):
    fam = desc["family"]
    try:
        if fam == "onplus":
            return OnPlusModel(desc["N"])
        if fam == "suq2":
            return SUq2Model(desc["q"])
        return DiscreteGroupModel(group=desc["group"], rank=desc.get("rank", 1),
                                  length=desc.get("length", "word"), radius=desc.get("radius", 10))
    except Rejection as exc:
        raise JobError([f"model: {exc}"]) from None


def _complex(x) -> complex:
    return complex(x[0], x[1]) if isinstance(x, list) else complex(x)


def _matrix(rows) -> np.ndarray:
    return np.array([[_complex(x) for x in row] for row in rows], dtype=complex).reshape(len(rows), -1)


def _exact_number(x):
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def build_functional(desc: dict, model, s_max: int = 1) -> Functional:
    (name, body), = desc.items()
    if name == "hunt":
        exact = body.get("exact", False)
        conv = _exact_number if exact else float
        nu = IntervalMeasure(
            atoms=tuple((conv(p), conv(m)) for p, m in body.get("nu", [])),
            density=tuple(body["density"]) if "density" in body else None,
            density_support=tuple(body["density_support"]) if "density_support" in body else None,
            lo=-model.N, hi=model.N,
        )
        return hunt_onplus(model, conv(body["b"]), nu, exact=exact)
    if name == "poisson":
        if body.get("route", "closed_form") == "closed_form":
            return poisson_closed_form(model)
        rep = truncated_rho(model.q, body.get("theta", math.pi / 2), body.get("M", 64))
        return poisson_functional(model, PoissonSpec.basis(rep, body.get("k", 0)), min(Fraction(s_max, 2), 1))
    if name == "gns_generic":
        table = {(Fraction(int(s2), 2), Fraction(int(j2), 2)): v
                 for s2, row in body["c"].items() for j2, v in row.items()}
        return suq2_gns_generic(model, table)
    if name == "length":
        return discrete_length_functional(model)
    if name == "counit":
        return counit(model)
    if name == "zero":
        return zero_functional(model)
    if name == "inline":
        return from_blocks(model, {parse_label(model, k): _matrix(v) for k, v in body["blocks"].items()},
                           kind="inline")
    if name == "kms_symmetrize":
        return kms_symmetrize(build_functional(body, model, s_max))
    if name == "ad_project":
        return ad_project(build_functional(body, model, s_max))
    raise JobError([f"functional.{name}: unknown constructor"])  # pragma: no cover - schema guards


# ---------------------------------------------------------------------------
# Running jobs
# ---------------------------------------------------------------------------


def _num(x) -> Any:
    """JSON-friendly number with deterministic text (``repr`` floats)."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        return [float(x.real), float(x.imag)] if x.imag else float(x.real)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    return x


def _csv_value(x) -> str:
    x = complex(x) if isinstance(x, (complex, np.complexfloating)) else x
    if isinstance(x, complex):
        return repr(x.real) if x.imag == 0 else f"{x.real!r}{x.imag:+}j"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_csv_value(v) for v in row])
    return buf.getvalue()


@dataclass
class Artifacts:
    report: dict
    csv: str | None = None
    plot: str | None = None


def run_job(job: JobSpec, task: str | None = None, threads: int | None = None) -> Artifacts:
    """Compute the job's task; rejections propagate as :class:`Rejection`."""
    task = task or job.task
    if task is None:
        raise JobError(["task: missing (give it in the job or as the CLI verb)"])
    if job.task is not None and job.task != task:
        raise JobError([f"task: job says {job.task!r} but verb is {task!r}"])
    model = build_model(job.model)
    phi = build_functional(job.functional, model, job.s_max)
    s_max = horizon(model, job.s_max)
    threads = threads or job.threads
    text = model.label_to_text
    report: dict = {"task": task, "model": model.identifier, "functional": phi.kind,
                    "horizon": text(s_max) if not isinstance(model, DiscreteGroupModel) else job.s_max,
                    "tolerance": job.tol}

    if task == "classify":
        rep = classify(phi, s_max, job.tol, threads)
        report.update(rep.as_dict(text))
        report["horizon"] = report.pop("s_max")
        return Artifacts(report)

    if task == "spectrum":
        spec = generator_spectrum(phi, s_max, job.tol, threads)
        rows = [[text(e.label), e.exact if e.exact is not None else e.value, e.multiplicity]
                for e in spec.entries]
        report["total_multiplicity"] = _num(spec.total_multiplicity)
        report["methods"] = spec.notes
        return Artifacts(report, _csv_text(["block_label", "eigenvalue", "multiplicity"], rows))

    if task == "dirac":
        d = dirac_spectrum(phi, s_max, job.tol, threads)
        rows = [[text(e.label), e.value, e.multiplicity] for e in d.entries]
        report["kernel"] = {"multiplicity": _num(d.kernel), "note": "kernel (possibly degenerate)"}
        report["nonzero_count"] = len(d.entries)
        return Artifacts(report, _csv_text(["block_label", "eigenvalue", "multiplicity"], rows))

    if task == "zeta":
        z = spectral_dimension(phi, s_max, job.tol, threads)
        report.update({
            "verdict": z.verdict,
            "estimate": f"d ≈ {z.estimate:.2f}" if z.estimate is not None else "d = +inf",
            "dimension": z.estimate,
            "power_fit": {"slope": z.power_slope, "rss": z.power_rss},
            "exponential_fit": {"slope": z.exp_slope, "rss": z.exp_rss},
            "fit_window": list(z.fit_window),
            "grid_abscissa": z.grid_abscissa,
            "kernel": _num(z.kernel),
            "total_count": _num(z.total_count),
        })
        rows = [[math.log(lam), math.log(n)] for lam, n in z.counting]
        return Artifacts(report, plot=_csv_text(["log_Lambda", "log_N"], rows))

    if task == "semigroup":
        spec = generator_spectrum(phi, s_max, job.tol, threads)
        rows, worst = [], 0.0
        for t in job.t:
            sg = markov_semigroup(phi, t)
            for s in model.labels(s_max):
                entries = spec.block_entries(s)
                b = sg.block(s)
                if not b.is_scalar:
                    n = model.dim(s)
                    want = np.sort_complex(np.concatenate(
                        [np.full(e.multiplicity // n, np.exp(-t * complex(e.value))) for e in entries]))
                    got = np.sort_complex(np.linalg.eigvals(b.dense()))
                    worst = max(worst, float(np.max(np.abs(got - want))))
                for e in entries:
                    rows.append([t, text(s), np.exp(-t * complex(e.value)), e.multiplicity])
        report["t"] = list(job.t)
        report["eigenvalue_consistency"] = worst
        return Artifacts(report, _csv_text(["t", "block_label", "eigenvalue", "multiplicity"], rows))

    if task == "dirichlet":
        if not job.coefficients:
            raise JobError(["coefficients: dirichlet task needs a coefficient map"])
        coeffs = {parse_label(model, k): _matrix(v) for k, v in job.coefficients.items()}
        report["value"] = dirichlet_value(phi, coeffs, job.tol)
        return Artifacts(report)

    raise JobError([f"task: unknown task {task!r}"])  # pragma: no cover


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _report_text(report: dict) -> str:
    def default(o):
        v = _num(o)
        if v is o:
            raise TypeError(f"cannot serialise {type(o).__name__}")
        return v
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False, default=default) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="cqglevy", description=__doc__.split("\n")[0])
    parser.add_argument("verb", choices=TASKS)
    parser.add_argument("--job", required=True, help="path to a JSON job file")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("--s-max", type=int, help="override the job horizon (2s for SU_q(2))")
    parser.add_argument("--tol", type=float, help="override the job tolerance")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for block computations (default: CPU count)")
    args = parser.parse_args(argv)

    try:
        job = parse_jobspec(Path(args.job).read_bytes())
        overrides = {}
        if args.s_max is not None:
            overrides["s_max"] = args.s_max
        if args.tol is not None:
            overrides["tol"] = args.tol
        if overrides:
            job = parse_jobspec(json.dumps({**job.to_dict(), **overrides}))
        threads = args.threads or job.threads or os.cpu_count() or 1
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            arts = run_job(job, args.verb, threads)
        if caught:
            arts.report["warnings"] = [str(w.message) for w in caught]
    except JobError as exc:
        for e in exc.errors:
            print(f"invalid job: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"invalid job: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Rejection as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_REJECTED

    out = Path(args.out)
    names = {"report": f"{args.verb}_report.json", "csv": f"{args.verb}.csv",
             "plot": f"{args.verb}_plot.csv", **job.outputs}
    written = [_write(out, names["report"], _report_text(arts.report))]
    if arts.csv is not None:
        written.append(_write(out, names["csv"], arts.csv))
    if arts.plot is not None:
        written.append(_write(out, names["plot"], arts.plot))
    for p in written:
        print(p)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
