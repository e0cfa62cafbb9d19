"""Experiment runner: config ingestion, seeded runs, ledger, replay.

Every subcommand reads one INI config, executes a module operation with
an explicit seed, writes its outputs (CSV for series, JSON for
structured reports) into the run directory, and appends a RunRecord to
the append-only JSONL ledger.  Outputs never contain timestamps and all
floats are emitted through repr, so re-running an identical config and
seed reproduces the files byte for byte; that is what `replay` checks.

Numeric literals in configs go through parse_real, so `3/7` and
`(1+2*sqrt(5))/4` survive ingestion exactly.

Exit codes: 0 pass, 1 verification failure, 2 config error, 3 budget or
precision exhaustion.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import random
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .core import AffineSubspaceSpec, ApproxFunction, Ball
from .counting import BudgetExceeded, verify_counting_sweep
from .exactreal import ExactReal, parse_real
from .intervalmath import DEFAULT_BITS, PrecisionExhausted
from .lattice import LinearFormsSystem, SearchExhausted, solve_linear_forms
from .madsum import ResonanceError, estimate_exponent, mad_sum
from .selberg import MAJORANT, MINORANT, construct, evaluate, evaluate_float_batch, indicator
from .ubiquity import JitteredSampler, covering_fraction, min_k, regularity_check
from .approx import box_dimension, condensation_check, divergence_classifier, empirical_measure

__all__ = ["main", "run", "replay", "RunRecord", "ConfigError"]

FLOAT_FORMAT = "repr(ieee754-double)"


class ConfigError(ValueError):
    """Config failed validation; message names the offending field."""


@dataclass(frozen=True)
class RunRecord:
    run_id: str
    subcommand: str
    config_text: str
    seed: int
    started: str
    finished: str
    outputs: dict
    passed: Optional[bool]

    def to_json(self) -> str:
        return json.dumps(
            {
                "run_id": self.run_id,
                "subcommand": self.subcommand,
                "config_text": self.config_text,
                "seed": self.seed,
                "started": self.started,
                "finished": self.finished,
                "outputs": self.outputs,
                "passed": self.passed,
            },
            sort_keys=True,
            separators=(",", ":"),
        )


# -- config helpers ----------------------------------------------------------------


def _load_config(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config does not parse: {exc}") from exc
    return cp


def _need(cp: configparser.ConfigParser, section: str, key: str) -> str:
    if not cp.has_section(section):
        raise ConfigError(f"missing [{section}] section (required key {section}.{key})")
    if not cp.has_option(section, key):
        raise ConfigError(f"missing required key {section}.{key}")
    return cp.get(section, key)


def _opt(cp, section, key, default=None):
    if cp.has_section(section) and cp.has_option(section, key):
        return cp.get(section, key)
    return default


def _as_int(raw: str, where: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{where} must be an integer, got {raw!r}") from exc


def _as_fraction(raw: str, where: str) -> Fraction:
    try:
        return Fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{where} must be a rational p/r, got {raw!r}") from exc


def _as_real(raw: str, where: str) -> ExactReal:
    try:
        return parse_real(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_matrix(raw: str, where: str) -> list:
    rows = []
    for r, chunk in enumerate(x for x in raw.split(";") if x.strip()):
        rows.append([_as_real(e, f"{where} row {r}") for e in chunk.split(",")])
    if not rows:
        raise ConfigError(f"{where} is empty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ConfigError(f"{where} rows have uneven lengths")
    return rows


def _parse_subspace(cp) -> AffineSubspaceSpec:
    d = _as_int(_need(cp, "subspace", "d"), "subspace.d")
    n = _as_int(_need(cp, "subspace", "n"), "subspace.n")
    tilt = _parse_matrix(_need(cp, "subspace", "tilt"), "subspace.tilt")
    shift = [_as_real(e, "subspace.shift") for e in _need(cp, "subspace", "shift").split(",")]
    try:
        return AffineSubspaceSpec(
            d=d, n=n,
            tilt=tuple(tuple(row) for row in tilt),
            shift=tuple(shift),
        )
    except ValueError as exc:
        raise ConfigError(f"subspace: {exc}") from exc


def _parse_psi(cp) -> ApproxFunction:
    raw = _need(cp, "psi", "form")
    try:
        return ApproxFunction.parse(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"psi.form: {exc}") from exc


def _parse_ball(cp, n: int) -> Ball:
    center_raw = _opt(cp, "ball", "center")
    radius_raw = _opt(cp, "ball", "radius")
    if center_raw is None and radius_raw is None:
        half = ExactReal.rational(Fraction(1, 2))
        return Ball(center=tuple(half for _ in range(n)), radius=Fraction(1, 2))
    if center_raw is None or radius_raw is None:
        raise ConfigError("ball needs both ball.center and ball.radius")
    center = tuple(_as_real(e, "ball.center") for e in center_raw.split(","))
    try:
        return Ball(center=center, radius=_as_fraction(radius_raw, "ball.radius"))
    except ValueError as exc:
        raise ConfigError(f"ball: {exc}") from exc


# -- output encoding ----------------------------------------------------------------


def _fr(x) -> str:
    """Exact text for Fractions/ExactReals; repr for floats."""
    if isinstance(x, ExactReal):
        return x.format()
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return repr(x)


def _json_bytes(obj: dict) -> bytes:
    payload = dict(obj)
    payload["float_format"] = FLOAT_FORMAT
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode()


def _csv_bytes(header: list, rows: list) -> bytes:
    buf = io.StringIO()
    buf.write(f"# float-format: {FLOAT_FORMAT}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fr(v) if isinstance(v, (Fraction, ExactReal)) else
                         (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue().encode()


# -- subcommand handlers ------------------------------------------------------------
# each returns (passed, {filename_suffix: bytes})


def _cmd_mad_estimate(cp, seed, threads, bits, budget):
    matrix = _parse_matrix(_need(cp, "matrix", "rows"), "matrix.rows")
    j_max = _as_int(_opt(cp, "params", "j_max", "10000"), "params.j_max")
    diag = estimate_exponent(matrix, j_max=j_max, bits=bits)
    rows = [(sup, iv.lo, iv.hi) for sup, iv in diag.records]
    report = {
        "j_max": diag.j_max,
        "omega_hat": diag.fitted_omega,
        "omega_band": diag.omega_band,
        "infimum_witness": diag.infimum_witness,
        "resonance": diag.resonance,
        "resonance_witness": list(diag.resonance_witness) if diag.resonance_witness else None,
        "records": len(rows),
    }
    return True, {
        "summary.json": _json_bytes(report),
        "records.csv": _csv_bytes(["j_sup", "product_lo", "product_hi"], rows),
    }


def _cmd_mad_sum(cp, seed, threads, bits, budget):
    matrix = _parse_matrix(_need(cp, "matrix", "rows"), "matrix.rows")
    j_cap = _as_int(_need(cp, "params", "j_cap"), "params.j_cap")
    omega = _as_fraction(_opt(cp, "params", "omega", "0"), "params.omega")
    try:
        total = mad_sum(matrix, j_cap, omega=omega, bits=bits)
    except ResonanceError as exc:
        report = {"j_cap": j_cap, "omega": _fr(omega), "resonance": str(exc)}
        return False, {"summary.json": _json_bytes(report)}
    report = {
        "j_cap": j_cap,
        "omega": _fr(omega),
        "sum_lo": _fr(total.lo),
        "sum_hi": _fr(total.hi),
        "sum_mid": float(total.mid),
    }
    return True, {"summary.json": _json_bytes(report)}


def _cmd_selberg_check(cp, seed, threads, bits, budget):
    delta = _as_fraction(_need(cp, "params", "delta"), "params.delta")
    degree = _as_int(_need(cp, "params", "degree"), "params.degree")
    samples = _as_int(_opt(cp, "params", "samples", "1000"), "params.samples")
    try:
        major = construct(delta, degree, MAJORANT, bits=bits)
        minor = construct(delta, degree, MINORANT, bits=bits)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc
    rng = random.Random(seed)
    ys = [Fraction(rng.getrandbits(192), 1 << 192) for _ in range(samples)]
    ys_f = np.array([float(y) for y in ys])
    vals_up, eps_up = evaluate_float_batch(major, ys_f)
    vals_dn, eps_dn = evaluate_float_batch(minor, ys_f)
    bad = 0
    for y, up, dn in zip(ys, vals_up, vals_dn):
        chi = indicator(y, delta)
        # float prefilter; anything inside the error band is settled exactly
        if up < chi + eps_up and evaluate(major, y, bits).hi < chi:
            bad += 1
        elif dn > chi - eps_dn and evaluate(minor, y, bits).lo > chi:
            bad += 1
    passed = bad == 0
    coeff_rows = [
        (j + 1, up.lo, up.hi, dn.lo, dn.hi)
        for j, (up, dn) in enumerate(zip(major.coeffs, minor.coeffs))
    ]
    report = {
        "delta": _fr(delta),
        "degree": degree,
        "samples": samples,
        "violations": bad,
        "b0_major": _fr(major.b0),
        "b0_minor": _fr(minor.b0),
        "passed": passed,
    }
    return passed, {
        "summary.json": _json_bytes(report),
        "coefficients.csv": _csv_bytes(
            ["j", "major_lo", "major_hi", "minor_lo", "minor_hi"], coeff_rows
        ),
    }


def _cmd_count_verify(cp, seed, threads, bits, budget):
    subspace = _parse_subspace(cp)
    psi = _parse_psi(cp)
    k = _as_int(_need(cp, "params", "k"), "params.k")
    t_min = _as_int(_opt(cp, "params", "t_min", "1"), "params.t_min")
    t_max = _as_int(_need(cp, "params", "t_max"), "params.t_max")
    ball = _parse_ball(cp, subspace.n)
    try:
        report = verify_counting_sweep(
            subspace, psi, k, range(t_min, t_max + 1), [ball], bits=bits, budget=budget
        )
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc
    rows = [
        (r.t, r.count, r.bound, r.margin, r.passed)
        for r in report.rows
    ]
    summary = {
        "k": k,
        "t_onset": report.t_onset,
        "all_pass": report.all_pass,
        "rows": len(rows),
    }
    return report.all_pass, {
        "summary.json": _json_bytes(summary),
        "margins.csv": _csv_bytes(["t", "count", "bound", "margin", "passed"], rows),
    }


def _cmd_minkowski_solve(cp, seed, threads, bits, budget):
    rows = _parse_matrix(_need(cp, "system", "rows"), "system.rows")
    bounds = [_as_real(e, "system.bounds") for e in _need(cp, "system", "bounds").split(",")]
    try:
        system = LinearFormsSystem(
            rows=tuple(tuple(r) for r in rows), bounds=tuple(bounds)
        )
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from exc
    x = solve_linear_forms(system, budget=budget, bits=bits)
    ok = system.check_candidate(x, bits)
    report = {
        "solution": list(x),
        "certified": bool(ok),
        "k": system.k,
    }
    return bool(ok), {"solution.json": _json_bytes(report)}


def _cmd_cover_check(cp, seed, threads, bits, budget):
    subspace = _parse_subspace(cp)
    psi = _parse_psi(cp)
    k = _as_int(_need(cp, "params", "k"), "params.k")
    t = _as_int(_need(cp, "params", "t"), "params.t")
    samples = _as_int(_opt(cp, "params", "samples", "10000"), "params.samples")
    kappa = float(_as_fraction(_opt(cp, "params", "kappa", "0"), "params.kappa"))
    ball = _parse_ball(cp, subspace.n)
    sampler = JitteredSampler(ball=ball, count=samples, seed=seed)
    rep = covering_fraction(
        ball, k, t, psi, subspace, sampler=sampler, bits=bits,
        kappa_target=kappa, threads=threads,
    )
    report = {
        "k": rep.k,
        "t": rep.t,
        "fraction": rep.fraction,
        "hits": rep.hits,
        "samples": rep.samples,
        "ci_low": rep.ci_low,
        "ci_high": rep.ci_high,
        "ci_half_width": rep.ci_half_width,
        "q_low": rep.q_low,
        "q_high": rep.q_high,
        "rho": rep.rho_value,
        "kappa_target": rep.kappa_target,
        "seed": rep.seed,
    }
    return rep.fraction > kappa, {"cover.json": _json_bytes(report)}


def _cmd_ubiquity_verify(cp, seed, threads, bits, budget):
    subspace = _parse_subspace(cp)
    psi = _parse_psi(cp)
    k = _as_int(_need(cp, "params", "k"), "params.k")
    t_min = _as_int(_opt(cp, "params", "t_min", "1"), "params.t_min")
    t_max = _as_int(_need(cp, "params", "t_max"), "params.t_max")
    try:
        ok, ratios = regularity_check(psi, subspace, k, range(t_min, t_max + 1))
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc
    threshold = min_k(subspace.n, subspace.d)
    k_ok = k > threshold
    rows = [(t, r) for t, r in zip(range(t_min, t_max + 1), ratios)]
    report = {
        "k": k,
        "min_k": threshold,
        "k_above_min": k_ok,
        "regular": ok,
        "passed": ok and k_ok,
    }
    return ok and k_ok, {
        "summary.json": _json_bytes(report),
        "ratios.csv": _csv_bytes(["t", "psi_capital_ratio"], rows),
    }


def _cmd_approx_measure(cp, seed, threads, bits, budget):
    subspace = _parse_subspace(cp)
    psi = _parse_psi(cp)
    q_list = [
        _as_int(tok, "params.heights")
        for tok in _need(cp, "params", "heights").split(",")
    ]
    samples = _as_int(_opt(cp, "params", "samples", "1000"), "params.samples")
    min_final = _opt(cp, "params", "min_final")
    rows = []
    for Q in q_list:
        rep = empirical_measure(subspace, psi, Q, samples, seed, bits)
        rows.append((rep.Q, rep.fraction, rep.ci_low, rep.ci_high))
    passed = all(b[1] >= a[1] for a, b in zip(rows, rows[1:]))
    if min_final is not None:
        passed = passed and rows[-1][1] >= float(_as_fraction(min_final, "params.min_final"))
    report = {
        "heights": q_list,
        "fractions": [r[1] for r in rows],
        "samples": samples,
        "passed": passed,
    }
    return passed, {
        "summary.json": _json_bytes(report),
        "measure.csv": _csv_bytes(["Q", "fraction", "ci_low", "ci_high"], rows),
    }


def _cmd_dimension(cp, seed, threads, bits, budget):
    subspace = _parse_subspace(cp) if cp.has_section("subspace") else None
    tau = _as_fraction(_need(cp, "params", "tau"), "params.tau")
    Q = _as_int(_opt(cp, "params", "q_cap", "100000"), "params.q_cap")
    scales_raw = _opt(cp, "params", "scales")
    scales = None
    if scales_raw is not None:
        scales = [_as_fraction(tok, "params.scales") for tok in scales_raw.split(",")]
    tolerance = float(_as_fraction(_opt(cp, "params", "tolerance", "1/10"), "params.tolerance"))
    try:
        est = box_dimension(subspace, tau, Q, scales=scales, seed=seed, bits=bits)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc
    passed = abs(est.slope - est.formula_value) <= tolerance
    report = {
        "tau": est.tau,
        "slope": est.slope,
        "formula_value": est.formula_value,
        "scales": [_fr(sc) for sc in est.scales],
        "counts": list(est.counts),
        "residuals": list(est.residuals),
        "tolerance": tolerance,
        "passed": passed,
    }
    rows = list(zip(est.scales, est.counts, est.residuals))
    return passed, {
        "dimension.json": _json_bytes(report),
        "scales.csv": _csv_bytes(["scale", "count", "residual"], rows),
    }


def _cmd_classify_series(cp, seed, threads, bits, budget):
    psi = _parse_psi(cp)
    d = _as_int(_need(cp, "params", "d"), "params.d")
    n = _as_int(_need(cp, "params", "n"), "params.n")
    s = _as_fraction(_opt(cp, "params", "s", "0"), "params.s")
    k = _as_int(_opt(cp, "params", "k", "2"), "params.k")
    T = _as_int(_opt(cp, "params", "T", "40"), "params.T")
    try:
        verdict = divergence_classifier(psi, d, n, s)
        rep = condensation_check(psi, d, n, s, k, T)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc
    passed = rep.agrees if rep.agrees is not None else True
    report = {
        "classifier": verdict,
        "condensation": rep.verdict,
        "agrees": rep.agrees,
        "growth_slope": rep.growth_slope,
        "boundary_slope": rep.boundary_slope,
        "T": T,
        "k": k,
        "s": _fr(s),
        "passed": passed,
    }
    rows = [(t + 1, lt, ps) for t, (lt, ps) in enumerate(zip(rep.log_terms, rep.partial_sums))]
    return passed, {
        "series.json": _json_bytes(report),
        "terms.csv": _csv_bytes(["t", "log_term", "partial_sum"], rows),
    }


_HANDLERS: dict = {
    "mad-estimate": _cmd_mad_estimate,
    "mad-sum": _cmd_mad_sum,
    "selberg-check": _cmd_selberg_check,
    "count-verify": _cmd_count_verify,
    "minkowski-solve": _cmd_minkowski_solve,
    "cover-check": _cmd_cover_check,
    "ubiquity-verify": _cmd_ubiquity_verify,
    "approx-measure": _cmd_approx_measure,
    "dimension": _cmd_dimension,
    "classify-series": _cmd_classify_series,
}


# -- run / replay ------------------------------------------------------------------


def _run_id(subcommand: str, config_text: str, seed: int) -> str:
    canon = json.dumps(
        {"subcommand": subcommand, "config": config_text.replace("\r\n", "\n"), "seed": seed},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _execute(subcommand: str, config_text: str, seed: int, threads: int,
             bits: int, budget: Optional[int]) -> tuple:
    """(passed, {filename: bytes}) for a subcommand on an in-memory config."""
    if subcommand not in _HANDLERS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    cp = _load_config(config_text)
    eff_budget = budget if budget is not None else 10_000_000
    passed, outputs = _HANDLERS[subcommand](cp, seed, threads, bits, eff_budget)
    named = {f"{subcommand}-{name}": data for name, data in outputs.items()}
    return passed, named


def run(
    subcommand: str,
    config_path: str,
    seed: int = 0,
    threads: int = 1,
    out_dir: str = "runs",
    bits: int = DEFAULT_BITS,
    budget: Optional[int] = None,
) -> RunRecord:
    """Execute one subcommand, persist outputs and the ledger entry."""
    config_text = Path(config_path).read_text()
    started = _now()
    passed, outputs = _execute(subcommand, config_text, seed, threads, bits, budget)
    rid = _run_id(subcommand, config_text, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name, data in outputs.items():
        path = out / f"{rid}-{name}"
        path.write_bytes(data)
        digests[f"{rid}-{name}"] = hashlib.sha256(data).hexdigest()
    record = RunRecord(
        run_id=rid,
        subcommand=subcommand,
        config_text=config_text,
        seed=seed,
        started=started,
        finished=_now(),
        outputs=digests,
        passed=passed,
    )
    with open(out / "ledger.jsonl", "a") as fh:
        fh.write(record.to_json() + "\n")
    return record


def replay(
    run_id: str,
    out_dir: str = "runs",
    threads: int = 1,
    bits: int = DEFAULT_BITS,
    budget: Optional[int] = None,
) -> tuple:
    """Re-execute a ledgered run and demand bit-identical output digests.

    Returns (matched, mismatches) where mismatches lists per-file deltas.
    """
    ledger = Path(out_dir) / "ledger.jsonl"
    if not ledger.exists():
        raise ConfigError(f"no ledger at {ledger}")
    record = None
    with open(ledger) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            if entry.get("run_id") == run_id:
                record = entry
    if record is None:
        raise ConfigError(f"run_id {run_id} not found in {ledger}")
    _, outputs = _execute(
        record["subcommand"], record["config_text"], record["seed"], threads, bits, budget
    )
    mismatches = []
    for name, want in record["outputs"].items():
        key = name[len(run_id) + 1 :]
        data = outputs.get(key)
        if data is None:
            mismatches.append((name, "missing output"))
            continue
        got = hashlib.sha256(data).hexdigest()
        if got != want:
            mismatches.append((name, f"digest {got} != ledgered {want}"))
    return (not mismatches), mismatches


# -- entry point --------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dioplab", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _HANDLERS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--bits", type=int, default=DEFAULT_BITS)
        p.add_argument("--budget", type=int, default=None)
        p.add_argument("--out", default="runs")
    rp = sub.add_parser("replay")
    rp.add_argument("--run-id", required=True)
    rp.add_argument("--threads", type=int, default=1)
    rp.add_argument("--bits", type=int, default=DEFAULT_BITS)
    rp.add_argument("--budget", type=int, default=None)
    rp.add_argument("--out", default="runs")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.subcommand == "replay":
            matched, mismatches = replay(
                args.run_id, out_dir=args.out, threads=args.threads,
                bits=args.bits, budget=args.budget,
            )
            if matched:
                print(f"replay {args.run_id}: outputs bit-identical")
                return 0
            for name, why in mismatches:
                print(f"replay {args.run_id}: {name}: {why}", file=sys.stderr)
            return 1
        if args.seed < 0 or args.seed >= 1 << 64:
            raise ConfigError("--seed must fit in 64 bits")
        record = run(
            args.subcommand, args.config, seed=args.seed, threads=args.threads,
            out_dir=args.out, bits=args.bits, budget=args.budget,
        )
        state = {True: "pass", False: "FAIL", None: "done"}[record.passed]
        print(f"run {record.run_id} {record.subcommand}: {state} "
              f"({len(record.outputs)} outputs in {args.out})")
        return 0 if record.passed in (True, None) else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BudgetExceeded, SearchExhausted, PrecisionExhausted) as exc:
        print(f"budget/precision exhausted: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
