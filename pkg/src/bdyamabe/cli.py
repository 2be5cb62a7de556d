"""Batch command line: constant verification, optimization, flux sweeps and linearized solves.

Every subcommand prints (or writes) a JSON document with ``"schema": 1``.
Relative output paths are resolved against ``$BDYAMABE_OUTPUT_DIR`` when set.
The exit status is 0 exactly when every check the subcommand performs passes.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .corrections import CorrectionParams
from .expansions import (
    cross_polynomial,
    delta_gain,
    fww_coefficient,
    maximize,
    second_order_log_coefficient,
    total_polynomial,
)
from .linsolve import solve_reduced, validate_solution
from .pohozaev import (
    bubble_field,
    correction_field,
    eval_P_prime,
    mass_flux,
    mass_flux_a_part,
    mass_flux_coefficient,
    p_prime_mass_relation,
    singular_field,
    unit_second_derivative_jet,
)
from .scalars import ExactScalar, sphere_area
from .tensors import MetricJet, TraceFreePi

SCHEMA = 1
OUTPUT_DIR_ENV = "BDYAMABE_OUTPUT_DIR"
FLOAT_DIGITS = 12

# name -> (expected "p/q + r/s*pi", anchor)
EXPECTED: dict[int, dict[str, tuple[str, str]]] = {
    4: {
        "fww_log_coefficient": ("0/1 + -1/24*pi", "N=4 F(W,W) log coefficient, units |S^2|"),
        "delta_gain": ("64/105 + 0/1*pi", "N=4 delta coefficient of the log lower bound"),
        "delta_gain_pi_part": ("0/1 + 0/1*pi", "N=4 pi-parts cancel"),
        "p_prime_flux_coefficient": ("-1/6 + 0/1*pi", "N=4 P' = -(1/6) I"),
        "mass_relation_slope": ("-6 + 0/1*pi", "N=4 m0 = -6 lim P'"),
    },
    5: {
        "fww_coefficient": ("-1/64 + 0/1*pi", "N=5 F(W,W), units |S^3|"),
        "cross_1": ("-1/128 + 0/1*pi", "N=5 cross polynomial constant"),
        "cross_a1": ("1/480 + 0/1*pi", "N=5 cross polynomial a1"),
        "cross_a1^2": ("-11/60480 + 0/1*pi", "N=5 cross polynomial a1^2"),
        "cross_a2": ("1/160 + 0/1*pi", "N=5 cross polynomial a2"),
        "cross_a1a2": ("-1/1680 + 0/1*pi", "N=5 cross polynomial a1 a2"),
        "cross_a2^2": ("-1/1680 + 0/1*pi", "N=5 cross polynomial a2^2"),
        "bulk_prefactor": ("30 + 0/1*pi", "N=5 bulk prefactor"),
        "bulk_leading_factor": ("15/4 + 0/1*pi", "N=5 bulk factor on the leading term"),
        "bulk_parameter_factor": ("5/2 + 0/1*pi", "N=5 bulk factor on the parameter terms"),
        "argmax_a1": ("-63/4 + 0/1*pi", "N=5 optimal a1"),
        "argmax_a2": ("105/8 + 0/1*pi", "N=5 optimal a2"),
        "max_value": ("3/2560 + 0/1*pi", "N=5 optimal lower bound, units |S^3|"),
        "second_order_log": ("-9/64 + 0/1*pi", "N=5 second-order log term, units |S^3|"),
        "mass_flux_coefficient": ("1/48 + 0/1*pi", "2(N-3)/((N-1)(N+1)(N+3)) at N=5"),
        "p_prime_flux_coefficient": ("-9/32 + 0/1*pi", "N=5 P' = -(9/32) I + ..."),
        "p_prime_pi_trace_coefficient": ("-3/512 + 0/1*pi", "N=5 second-derivative term of P'"),
        "mass_relation_slope": ("-32/9 + 0/1*pi", "N=5 m0 slope in lim P'"),
        "mass_relation_pi_slope": ("-1/48 + 0/1*pi", "N=5 m0 slope in pi_ij,ij |S^3|"),
    },
    6: {
        "fww_coefficient": ("0/1 + 0/1*pi", "N=6 F(W,W) vanishes"),
        "cross_1": ("0/1 + -1/320*pi", "N=6 polynomial constant, units |S^4|"),
        "cross_a1": ("0/1 + 1/3584*pi", "N=6 polynomial a1"),
        "cross_a1^2": ("0/1 + -3/163840*pi", "N=6 polynomial a1^2"),
        "cross_a2": ("0/1 + 1/1280*pi", "N=6 polynomial a2"),
        "cross_a1a2": ("0/1 + -1/16384*pi", "N=6 polynomial a1 a2"),
        "cross_a2^2": ("0/1 + -1/16384*pi", "N=6 polynomial a2^2"),
        "point_value": ("0/1 + 31/78400*pi", "N=6 value at (-128/7, 544/35), units |S^4|"),
        "argmax_a1": ("-128/7 + 0/1*pi", "N=6 chosen a1"),
        "argmax_a2": ("544/35 + 0/1*pi", "N=6 chosen a2"),
    },
}

N6_POINT = (Fraction(-128, 7), Fraction(544, 35))


# --------------------------------------------------------------------------
# output helpers

def _round_floats(obj: Any) -> Any:
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        if obj == 0:
            return 0.0
        return float(f"{obj:.{FLOAT_DIGITS}g}")
    if isinstance(obj, (np.floating, np.integer)):
        return _round_floats(obj.item())
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, ExactScalar):
        return str(obj)
    if isinstance(obj, Mapping):
        return {str(k): _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def dumps(payload: Mapping[str, Any]) -> str:
    return json.dumps(_round_floats({"schema": SCHEMA, **payload}), indent=2, sort_keys=True)


def resolve_output(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text: str, output: str | None) -> None:
    target = resolve_output(output)
    if target is None:
        print(text)
    else:
        target.write_text(text + "\n")


def _write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    target = resolve_output(path)
    with target.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.{FLOAT_DIGITS}g}" if isinstance(v, float) else v for v in row])


# --------------------------------------------------------------------------
# verify-constants

@dataclass(frozen=True)
class Row:
    name: str
    expected: str
    computed: str
    match: str
    anchor: str

    def to_json(self) -> dict[str, str]:
        return {"name": self.name, "expected": self.expected, "computed": self.computed,
                "match": self.match, "anchor": self.anchor}


def _exact(v: ExactScalar | Fraction | int) -> ExactScalar:
    return ExactScalar.coerce(v)


def computed_constants(N: int) -> dict[str, ExactScalar]:
    """Run the exact pipeline for one dimension."""
    out: dict[str, ExactScalar] = {}
    if N == 4:
        dg = delta_gain(4)
        out["fww_log_coefficient"] = fww_coefficient(4).value
        out["delta_gain"] = dg.total
        out["delta_gain_pi_part"] = dg.pi_part
        rel = p_prime_mass_relation(4, 0.0, 0.0)
        out["p_prime_flux_coefficient"] = _exact(rel.flux_coefficient)
        out["mass_relation_slope"] = _exact(rel.slope_P)
        return out
    if N not in (5, 6):
        raise ValueError("verify-constants supports N in {4, 5, 6}")
    cross = cross_polynomial(N)
    out["fww_coefficient"] = fww_coefficient(N).value
    for k, v in cross.total.coefficients.items():
        out[f"cross_{k}"] = v
    total = total_polynomial(N)
    if N == 5:
        names = {"bulk_prefactor": "bulk_prefactor", "bulk_leading_factor": "leading_term_factor",
                 "bulk_parameter_factor": "parameter_term_factor"}
        for row, key in names.items():
            out[row] = _exact(cross.intermediate[key])
        best = maximize(total)
        out["argmax_a1"] = _exact(best.a1)
        out["argmax_a2"] = _exact(best.a2)
        out["max_value"] = best.value
        out["second_order_log"] = second_order_log_coefficient(5)
        out["mass_flux_coefficient"] = mass_flux_a_part(unit_second_derivative_jet(5))[3]
        rel = p_prime_mass_relation(5, 0.0, 0.0)
        out["p_prime_flux_coefficient"] = _exact(rel.flux_coefficient)
        out["p_prime_pi_trace_coefficient"] = _exact(rel.pi_trace_coefficient)
        out["mass_relation_slope"] = _exact(rel.slope_P)
        out["mass_relation_pi_slope"] = _exact(rel.slope_pi)
    else:
        out["point_value"] = total.evaluate(*N6_POINT)
        out["argmax_a1"] = _exact(N6_POINT[0])
        out["argmax_a2"] = _exact(N6_POINT[1])
    return out


def compare(expected: Mapping[str, tuple[str, str]], computed: Mapping[str, ExactScalar],
            rel_tol: float = 1e-12) -> list[Row]:
    rows = []
    for name, (exp, anchor) in expected.items():
        got = computed.get(name)
        if got is None:
            rows.append(Row(name, exp, "missing", "FAIL", anchor))
            continue
        try:
            want = ExactScalar.parse(exp)
        except ValueError:
            rows.append(Row(name, exp, str(got), "FAIL", anchor))
            continue
        if str(want) == str(got):
            match = "exact"
        elif math.isclose(float(want), float(got), rel_tol=rel_tol, abs_tol=1e-300):
            match = "approx"
        else:
            match = "FAIL"
        rows.append(Row(name, exp, str(got), match, anchor))
    return rows


def cmd_verify_constants(dims: Sequence[int], expected: Mapping[int, Mapping[str, tuple[str, str]]] | None = None
                         ) -> tuple[dict, bool]:
    table = EXPECTED if expected is None else expected
    report: dict[str, Any] = {"command": "verify-constants", "dimensions": list(dims), "rows": {}}
    ok = True
    for N in dims:
        rows = compare(table.get(N, {}), computed_constants(N))
        ok &= all(r.match != "FAIL" for r in rows)
        report["rows"][str(N)] = [r.to_json() for r in rows]
        if N == 6:
            report["n6"] = _n6_summary()
        if N == 4:
            dg = delta_gain(4)
            report["n4_delta_pieces"] = {"computed": dict(dg.pieces), "with_positive_source": dict(dg.positive_source_pieces),
                                         "total_with_positive_source": dg.positive_source_total}
    report["all_pass"] = ok
    return report, ok


def _n6_summary() -> dict[str, Any]:
    poly = total_polynomial(6)
    best = maximize(poly)
    at_point = poly.evaluate(*N6_POINT)
    ratio = (sphere_area(4) / sphere_area(3)).exact().rat
    return {
        "chosen_point": [N6_POINT[0], N6_POINT[1]],
        "value_at_chosen_point_S4_units": at_point,
        "value_at_chosen_point_S3_units": at_point * ratio,
        "true_maximizer": [best.a1, best.a2],
        "true_maximum_S4_units": best.value,
        "chosen_point_is_maximizer": (best.a1, best.a2) == N6_POINT,
    }


# --------------------------------------------------------------------------
# optimize

def cmd_optimize(N: int) -> tuple[dict, bool]:
    poly = total_polynomial(N)
    best = maximize(poly)
    unit = float(sphere_area(N - 2))
    report = {"command": "optimize", "N": N, "polynomial": poly.to_json(),
              "argmax": [best.a1, best.a2], "value": best.value, "unit": f"|S^{N - 2}|",
              "value_numeric": float(best.value) * unit,
              "hessian": [[str(v) for v in row] for row in best.hessian]}
    if N == 6:
        report["n6"] = _n6_summary()
    return report, True


# --------------------------------------------------------------------------
# pohozaev

def _profile_field(name: str, N: int, eps: float, a1: float, a2: float, constant: float, seed: int):
    if name == "bubble":
        return bubble_field(N)
    if name == "singular":
        return singular_field(N, constant)
    if name == "correction":
        pi = TraceFreePi.random(N - 1, np.random.default_rng(seed))
        return correction_field(CorrectionParams(N, eps, pi, a1, a2))
    raise ValueError(f"unknown profile {name!r}")


def cmd_pohozaev(N: int, profile: str, radii: Sequence[float], *, eps: float = 0.1, a1: float = 0.0,
                 a2: float = 0.0, constant: float = 0.0, seed: int = 0, tol: float = 1e-8,
                 csv_path: str | None = None) -> tuple[dict, bool]:
    U = _profile_field(profile, N, eps, a1, a2, constant, seed)
    f, p = (None, None)
    if profile == "bubble":
        f, p = N - 2, N / (N - 2)
    reports = [eval_P_prime(U, r, N, f=f, p=p) for r in radii]
    ok = True
    checks = []
    if profile == "bubble":
        for rep in reports:
            passed = abs(rep.P) <= tol
            ok &= passed
            checks.append({"rho": rep.rho, "P": rep.P, "tolerance": tol, "pass": passed})
    if csv_path:
        _write_csv(csv_path, ["rho", "P_prime", "P", "error"],
                   ([r.rho, r.P_prime, r.P if r.P is not None else "", r.error] for r in reports))
    return {"command": "pohozaev", "N": N, "profile": profile, "seed": seed,
            "reports": [r.to_json() for r in reports], "checks": checks}, ok


# --------------------------------------------------------------------------
# mass flux

def cmd_mass_flux(N: int, radii: Sequence[float], *, jet_path: str | None = None, random_jet: bool = False,
                  green_constant: float | None = None, seed: int = 0, csv_path: str | None = None
                  ) -> tuple[dict, bool]:
    if jet_path:
        jet = MetricJet.from_json(jet_path)
    elif random_jet:
        jet = MetricJet.random(N - 1, np.random.default_rng(seed))
    else:
        jet = unit_second_derivative_jet(N)
    G = singular_field(N, green_constant) if green_constant is not None else None
    reports = [mass_flux(jet, G, r, N) for r in radii]
    ok = True
    checks = []
    if not jet_path and not random_jet:
        coeff = mass_flux_a_part(jet).get(3, ExactScalar())
        want = ExactScalar.coerce(mass_flux_coefficient(N))
        passed = str(coeff) == str(want)
        ok &= passed
        checks.append({"name": "second_derivative_coefficient", "expected": want, "computed": coeff, "pass": passed})
    if csv_path:
        _write_csv(csv_path, ["rho", "G_part", "A_part", "I"],
                   ([r.rho, r.G_part, r.A_part, r.I] for r in reports))
    return {"command": "mass-flux", "N": N, "seed": seed, "reports": [r.to_json() for r in reports],
            "checks": checks}, ok


# --------------------------------------------------------------------------
# solve-linearized

def cmd_solve(N: int, eps: float, R: float, T: float, nr: int, nt: int, a1: float, a2: float, *,
              seed: int = 0, csv_path: str | None = None) -> tuple[dict, bool]:
    fld = solve_reduced(N, eps, R, T, nr, nt)
    pi = TraceFreePi.random(N - 1, np.random.default_rng(seed))
    rep = validate_solution(fld, CorrectionParams(N, eps, pi, a1, a2))
    if csv_path:
        _write_csv(csv_path, ["r", "t", "u"],
                   ((float(r), float(t), float(fld.u[i, j]))
                    for i, r in enumerate(fld.r) for j, t in enumerate(fld.t)))
    report = {"command": "solve-linearized", "seed": seed, "report": rep.to_json()}
    if not rep.energy_ok:
        report["warning"] = "negative energy beyond tolerance"
    return report, rep.energy_ok


# --------------------------------------------------------------------------
# argument parsing

def _dims(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bdyamabe", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--output", "-o", help="write JSON here instead of stdout")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("verify-constants", help="recompute exact constants and compare")
    p.add_argument("--dim", type=_dims, default=[5], help="comma-separated dimensions (default 5)")
    p.add_argument("--expected", help="JSON file overriding the expected table")
    common(p)

    p = sub.add_parser("optimize", help="maximize the lower-bound polynomial")
    p.add_argument("--dim", type=int, default=5, choices=(5, 6))
    common(p)

    p = sub.add_parser("pohozaev", help="Pohozaev functionals on spherical caps")
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--profile", choices=("bubble", "singular", "correction"), default="bubble")
    p.add_argument("--rho", type=_floats, default=[1.0], help="comma-separated radii")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--a1", type=float, default=0.0)
    p.add_argument("--a2", type=float, default=0.0)
    p.add_argument("--constant", type=float, default=0.0, help="A in |x|^(2-N) + A")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--csv")
    common(p)

    p = sub.add_parser("mass-flux", help="mass flux integral on caps")
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--rho", type=_floats, default=[1.0])
    p.add_argument("--jet", help="MetricJet JSON file")
    p.add_argument("--random-jet", action="store_true")
    p.add_argument("--green-constant", type=float)
    p.add_argument("--csv")
    common(p)

    p = sub.add_parser("solve-linearized", help="solve the reduced linearized problem")
    p.add_argument("--dim", type=int, default=5, choices=(4, 5, 6))
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--R", type=float, default=40.0)
    p.add_argument("--T", type=float, default=40.0)
    p.add_argument("--nr", type=int, default=129)
    p.add_argument("--nt", type=int, default=129)
    p.add_argument("--a1", type=float, default=-63 / 4)
    p.add_argument("--a2", type=float, default=105 / 8)
    p.add_argument("--csv", help="dump the grid field as r,t,u")
    common(p)
    return ap


def _load_expected(path: str) -> dict[int, dict[str, tuple[str, str]]]:
    raw = json.loads(Path(path).read_text())
    return {int(N): {name: (v["expected"], v.get("anchor", "")) for name, v in rows.items()}
            for N, rows in raw.items()}


COMMANDS: dict[str, Callable[[argparse.Namespace], tuple[dict, bool]]] = {
    "verify-constants": lambda a: cmd_verify_constants(
        a.dim, _load_expected(a.expected) if a.expected else None),
    "optimize": lambda a: cmd_optimize(a.dim),
    "pohozaev": lambda a: cmd_pohozaev(a.dim, a.profile, a.rho, eps=a.eps, a1=a.a1, a2=a.a2,
                                       constant=a.constant, seed=a.seed, tol=a.tol, csv_path=a.csv),
    "mass-flux": lambda a: cmd_mass_flux(a.dim, a.rho, jet_path=a.jet, random_jet=a.random_jet,
                                         green_constant=a.green_constant, seed=a.seed, csv_path=a.csv),
    "solve-linearized": lambda a: cmd_solve(a.dim, a.eps, a.R, a.T, a.nr, a.nt, a.a1, a.a2,
                                            seed=a.seed, csv_path=a.csv),
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, ok = COMMANDS[args.command](args)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"bdyamabe {args.command}: {exc}", file=sys.stderr)
        return 2
    _emit(dumps(report), args.output)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
