"""Command-line experiment runner.

Every subcommand reads ``key = value`` parameters from ``--config`` and
``--set`` and writes one or more CSV tables.  Each table starts with a
``# key = value`` echo of the fully resolved parameters, which
``parse_header`` turns back into the originating configuration.

Exit codes: 0 success, 1 unreadable configuration, 2 precondition
violation, 3 failed certificate or diagnostic.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import (CertificationError, ConfigError, DegenerateSystemError, DiagnosticFailure,
                     InvalidArgument, MuntzkitError, PreconditionViolation)
from .indexsets import parse_family
from .realnum import parse_real

log = logging.getLogger("muntzkit")


# ---- configuration -------------------------------------------------------------

def _int(text: str) -> int:
    return int(text)


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _p_value(text: str):
    if text.lower() in ("sup", "inf"):
        return "Sup"
    return float(parse_real(text))


def _text(text: str) -> str:
    if not text:
        raise ValueError("empty value")
    return text


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], object]
    default: Optional[str] = None  # None marks a required key


SCHEMAS: dict[str, dict[str, Key]] = {
    "classify": {"family": Key(parse_family), "a": Key(parse_real, "0"), "b": Key(parse_real, "1")},
    "approx": {"function": Key(_text, "exp"), "a": Key(parse_real, "0"), "b": Key(parse_real, "1"),
               "family": Key(parse_family, "arith:0,1"), "stages": Key(_int, "3")},
    "psi": {"map": Key(_text, "square"), "a": Key(parse_real, "-1"), "b": Key(parse_real, "1"),
            "family": Key(parse_family, "arith:0,1"), "cap": Key(_int, "20"),
            "samples": Key(_int, "1024")},
    "modulate": {"map": Key(_text, "cos_pi"), "a": Key(parse_real, "-1/2"),
                 "b": Key(parse_real, "1/2"), "family": Key(parse_family, "explicit:[0,1,2]"),
                 "family_mod": Key(parse_family, "arith:0,1"), "alpha": Key(parse_real, "1/4"),
                 "p": Key(_p_value, "2"), "cap": Key(_int, "20"), "exponent": Key(_bool, "true")},
    "cosine decompose": {"theta1": Key(parse_real, "0"), "theta2": Key(parse_real, "sqrt(2)/2"),
                         "target": Key(_text, "trigpoly:sin1=1,cos2=1"), "K": Key(_int, "32"),
                         "mode": Key(_choice("irrational", "rational-capped"), "irrational")},
    "cosine counterexample": {"theta1": Key(parse_real, "0"), "theta2": Key(parse_real, "1/3"),
                              "cap": Key(_int, "30")},
    "cosine pipeline": {"theta1": Key(parse_real, "0"), "theta2": Key(parse_real, "sqrt(2)/2"),
                        "target": Key(_text, "exp_sin"), "K": Key(_int, "32"),
                        "zero_mean": Key(_bool, "true"),
                        "family1": Key(parse_family, "arith:0,1"),
                        "family2": Key(parse_family, "arith:0,1"),
                        "N": Key(_int, "32"), "stage": Key(_int, "12"),
                        "compensate_fejer": Key(_bool, "false")},
    "diophantine": {"theta": Key(parse_real, "sqrt(2)"), "depth": Key(_int, "12"),
                    "a": Key(parse_real, "2"), "C": Key(parse_real, "1"),
                    "n_max": Key(_int, "1000"), "K": Key(_int, "12")},
    "hup": {"theta1": Key(parse_real, "0"), "theta2": Key(parse_real, "1/3"),
            "density": Key(_text, "exp_sin"), "K": Key(_int, "32"), "lam_cap": Key(_int, "4")},
}


@dataclass(frozen=True)
class Config:
    command: str
    raw: dict  # key -> canonical text, in schema order
    values: dict  # key -> parsed value


def _split_line(line: str, lineno: int) -> Optional[tuple[str, str, int]]:
    body = line.split("#", 1)[0] if not line.lstrip().startswith("#") else ""
    if not body.strip():
        return None
    if "=" not in body:
        col = len(line) - len(line.lstrip()) + 1
        raise ConfigError("expected 'key = value'", lineno, col)
    key, _, value = body.partition("=")
    if not key.strip():
        raise ConfigError("missing key", lineno, 1)
    vcol = len(key) + 2 + (len(value) - len(value.lstrip()))
    return key.strip(), value.strip(), vcol


def read_config_text(text: str) -> list[tuple[str, str, int, int, int]]:
    """Entries (key, value, line, key_column, value_column) of a key = value document."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = _split_line(line, lineno)
        if parts is None:
            continue
        key, value, vcol = parts
        kcol = len(line) - len(line.lstrip()) + 1
        out.append((key, value, lineno, kcol, vcol))
    return out


def build_config(command: str, entries) -> Config:
    schema = SCHEMAS[command]
    raw: dict[str, str] = {}
    where: dict[str, tuple[int, int]] = {}
    for key, value, line, kcol, vcol in entries:
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for {command}", line, kcol)
        raw[key] = value
        where[key] = (line, vcol)
    values = {}
    ordered = {}
    for key, spec in schema.items():
        if key not in raw:
            if spec.default is None:
                raise ConfigError(f"missing required key {key!r}", 0, 0)
            text, pos = spec.default, (0, 0)
        else:
            text, pos = raw[key], where[key]
        try:
            values[key] = spec.parse(text)
        except (ValueError, ArithmeticError, MuntzkitError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", *pos) from None
        ordered[key] = text
    return Config(command, ordered, values)


def header(cfg: Config) -> str:
    lines = [f"# muntzkit {cfg.command}"]
    lines += [f"# {k} = {v}" for k, v in cfg.raw.items()]
    return "\n".join(lines) + "\n"


def parse_header(text: str) -> Config:
    """Recover the configuration from the echo header of an output table."""
    lines = [ln for ln in text.splitlines() if ln.startswith("#")]
    if not lines or not lines[0].startswith("# muntzkit "):
        raise ConfigError("no parameter header", 1, 1)
    command = lines[0][len("# muntzkit "):].strip()
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}", 1, 12)
    body = "\n".join(ln[1:] for ln in lines[1:])
    return build_config(command, read_config_text(body))


# ---- subcommands ----------------------------------------------------------------

@dataclass
class Output:
    summary: list
    tables: dict  # file stem -> csv body


def _kv_table(pairs) -> str:
    rows = ["key,value"] + [f"{k},{_csv_cell(v)}" for k, v in pairs]
    return "\n".join(rows) + "\n"


def _csv_cell(v) -> str:
    s = str(v)
    return f'"{s}"' if ("," in s or '"' in s) else s


def run_classify(v) -> Output:
    from .indexsets import classify_ms, family_interval_text, split_even_odd
    verdict = classify_ms(v["family"], v["a"], v["b"])
    parts = split_even_odd(v["family"])
    pairs = [("family", v["family"].text()), ("interval", family_interval_text(v["a"], v["b"])),
             ("is_ms", "yes" if verdict.is_ms else "no"), ("reason", verdict.reason.value),
             ("interval_case", verdict.interval_case.value),
             ("even_part", parts.even.text()), ("odd_part", parts.odd.text())]
    return Output([f"verdict = {verdict.text()}"], {"classify": _kv_table(pairs)})


def _interval_function(spec, a, b):
    from .funcrep import IntervalFunction, named_function
    return IntervalFunction(float(a), float(b), named_function(spec), name=spec)


def run_approx(v) -> Output:
    from .muntz import error_curve
    f = _interval_function(v["function"], v["a"], v["b"])
    curve = error_curve(f, v["family"], v["stages"])
    summary = [f"verdict = {curve.verdict.text()}",
               f"final_error_L2 = {float(curve.points[-1][1])!r}"]
    return Output(summary, {"approx": curve.to_csv()})


def run_psi(v) -> Output:
    from .psipower import density_verdict, named_map
    psi = named_map(v["map"], float(v["a"]), float(v["b"]))
    rep = density_verdict(psi, v["family"], cap=v["cap"])
    tables = {}
    if rep.witness is not None:
        w = rep.witness
        tables["psi_witness"] = w.samples_csv(v["samples"])
        rows = ["lambda,residual"] + [f"{k},{float(r)!r}" for k, r in sorted(w.residuals.items())]
        tables["psi_residuals"] = "\n".join(rows) + "\n"
    else:
        tables["psi"] = _kv_table([("dense", "yes" if rep.dense else "no"),
                                   ("ms_on_J", rep.ms_on_J.text())])
    return Output(rep.text().splitlines(), tables)


def run_modulate(v) -> Output:
    from .modulation import (ModulatedSystem, density_verdict_modulated, residuals_csv,
                             singularity_exponent)
    from .psipower import named_map
    psi = named_map(v["map"], float(v["a"]), float(v["b"]))
    sys_ = ModulatedSystem(psi, v["family"], v["family_mod"], alpha=v["alpha"], p=v["p"])
    rep = density_verdict_modulated(sys_, cap=v["cap"])
    summary = rep.text().splitlines()
    tables = {}
    if rep.witness is not None:
        tables["modulate_residuals"] = residuals_csv(rep.witness.residuals,
                                                     rep.witness.residuals_mod)
    if v["exponent"]:
        sys_.require_separation()
        p = v["p"]
        p_conj = 1.0 if p == "Sup" else p / (p - 1)
        fit = singularity_exponent(sys_, p_conj)
        summary.append(f"singularity_exponent = {float(fit.slope)!r}")
        rows = ["distance,phi"] + [f"{float(d)!r},{float(y)!r}" for d, y in zip(fit.distances, fit.values)]
        tables["modulate_exponent"] = "\n".join(rows) + "\n"
    if not tables:
        tables["modulate"] = _kv_table([("dense", "yes" if rep.dense else "no")])
    return Output(summary, tables)


def _periodic(spec, K, zero_mean=False):
    from .funcrep import PeriodicFunction, named_periodic
    f = named_periodic(spec, K)
    if zero_mean:
        f = f - PeriodicFunction.from_dict({0: f.c(0)}, K=f.K, real=f.real)
    return f


def run_cosine_decompose(v) -> Output:
    from .cosinesys import ShiftPair, parity_decompose_trig
    shifts = ShiftPair(v["theta1"], v["theta2"])
    dec = parity_decompose_trig(_periodic(v["target"], v["K"]), shifts, v["mode"])
    summary = [f"difference = {shifts.kind}",
               f"reconstruction_defect = {float(dec.reconstruction_defect)!r}",
               f"symmetry_defects = {float(dec.symmetry_defects[0])!r}, {float(dec.symmetry_defects[1])!r}",
               f"smallest_denominator = {float(dec.smallest_denominator)!r}"]
    if dec.caveat:
        summary.append(f"caveat = {dec.caveat}")
    return Output(summary, {"cosine_decompose": dec.to_csv()})


def run_cosine_counterexample(v) -> Output:
    from .cosinesys import ShiftPair, rational_counterexample
    ce = rational_counterexample(ShiftPair(v["theta1"], v["theta2"]), cap=v["cap"])
    rows = ["lambda,residual_theta1,residual_theta2"]
    for lam in sorted(ce.residuals1.moments):
        rows.append(f"{lam},{float(abs(ce.residuals1.moments[lam]))!r},"
                    f"{float(abs(ce.residuals2.moments[lam]))!r}")
    summary = [f"witness = {ce.f.name}", f"witness_l2 = {float(ce.f.l2_norm())!r}",
               f"max_residual = {float(max(ce.residuals1.max_residual, ce.residuals2.max_residual))!r}"]
    return Output(summary, {"cosine_counterexample": ce.f.to_csv(),
                            "cosine_counterexample_residuals": "\n".join(rows) + "\n"})


def run_cosine_pipeline(v) -> Output:
    from .cosinesys import ShiftPair, constructive_density_approx
    target = _periodic(v["target"], v["K"], v["zero_mean"])
    rep = constructive_density_approx(target, ShiftPair(v["theta1"], v["theta2"]),
                                      v["family1"], v["family2"], v["N"], v["stage"],
                                      compensate_fejer=v["compensate_fejer"])
    summary = [f"combined_L2 = {float(rep.combined.L2)!r}", f"bound_L2 = {float(rep.bound.L2)!r}",
               f"convergent_by_theory = {'yes' if rep.convergent_by_theory else 'no'}"]
    return Output(summary, {"cosine_pipeline": rep.to_csv()})


def run_diophantine(v) -> Output:
    from .realnum import approximability_witnesses, continued_fraction, min_half_integer_distance
    cf = continued_fraction(v["theta"], v["depth"])
    rows = ["index,partial_quotient,p,q"]
    for i, (a, (p, q)) in enumerate(zip(cf.partial_quotients, cf.convergents())):
        rows.append(f"{i},{a},{p},{q}")
    tables = {"diophantine_cf": "\n".join(rows) + "\n"}
    summary = [f"partial_quotients = {list(cf.partial_quotients)}"]
    if cf.period is not None:
        summary.append(f"period = {list(cf.period)}")
    if v["theta"].exact and not _is_rational(v["theta"]):
        wit = approximability_witnesses(v["theta"], v["a"], v["C"], v["n_max"])
        tables["diophantine_witnesses"] = "\n".join(["m,n"] + [f"{m},{n}" for m, n in wit]) + "\n"
        summary.append(f"witnesses = {wit}")
    k, d = min_half_integer_distance(v["theta"], v["K"])
    summary.append(f"min_half_integer_distance = {float(d)!r} at k = {k}")
    return Output(summary, tables)


def _is_rational(x) -> bool:
    from .realnum import Rational
    return isinstance(x, Rational)


def run_hup(v) -> Output:
    from .hup import CircleMeasure, hup_verdict, line_restriction, moment_derivative_check
    rep = hup_verdict(v["theta1"], v["theta2"])
    tables = {}
    mu = rep.witness or CircleMeasure(_periodic(v["density"], v["K"]))
    for j, theta in enumerate((rep.shifts.theta1, rep.shifts.theta2), start=1):
        tables[f"hup_line{j}"] = line_restriction(mu, theta).to_csv()
    rows = ["lambda,finite_difference_re,finite_difference_im,moment_re,moment_im,discrepancy"]
    for r in moment_derivative_check(mu, rep.shifts.theta1, v["lam_cap"]):
        rows.append(f"{r.lam},{r.finite_difference.real!r},{r.finite_difference.imag!r},"
                    f"{r.moment_side.real!r},{r.moment_side.imag!r},{r.discrepancy!r}")
    tables["hup_moments"] = "\n".join(rows) + "\n"
    return Output(rep.text().splitlines(), tables)


RUNNERS = {"classify": run_classify, "approx": run_approx, "psi": run_psi,
           "modulate": run_modulate, "cosine decompose": run_cosine_decompose,
           "cosine counterexample": run_cosine_counterexample,
           "cosine pipeline": run_cosine_pipeline, "diophantine": run_diophantine,
           "hup": run_hup}


def run(cfg: Config, out_dir: Optional[Path] = None, stream=None) -> Output:
    stream = stream or sys.stdout
    log.info("running %s", cfg.command)
    with np.errstate(all="ignore"):
        result = RUNNERS[cfg.command](cfg.values)
    head = header(cfg)
    for line in result.summary:
        stream.write(line + "\n")
    for stem, body in result.tables.items():
        doc = head + body
        if out_dir is None:
            stream.write(f"\n{doc}")
        else:
            out_dir.mkdir(parents=True, exist_ok=True)
            path = out_dir / f"{stem}.csv"
            path.write_text(doc)
            log.info("wrote %s", path)
    return result


# ---- entry point ---------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="muntzkit", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted({c.split()[0] for c in SCHEMAS}))
    ap.add_argument("action", nargs="?", help="cosine: decompose, counterexample or pipeline")
    ap.add_argument("--config", type=Path, help="key = value parameter file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override one parameter (repeatable)")
    ap.add_argument("--out", type=Path, help="directory for CSV outputs (default: stdout)")
    ap.add_argument("--verbose", action="store_true")
    return ap


EXIT_CODES = ((ConfigError, 1), (PreconditionViolation, 2), (InvalidArgument, 2),
              (CertificationError, 3), (DiagnosticFailure, 3), (DegenerateSystemError, 3))


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        command = args.command
        if command == "cosine":
            if args.action not in ("decompose", "counterexample", "pipeline"):
                raise ConfigError("cosine needs an action: decompose, counterexample or pipeline")
            command = f"cosine {args.action}"
        elif args.action is not None:
            raise ConfigError(f"{command} takes no action argument")
        entries = []
        if args.config is not None:
            try:
                text = args.config.read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
            entries += read_config_text(text)
        for item in args.set:
            parts = _split_line(item, 0)
            if parts is None:
                raise ConfigError(f"bad --set value {item!r}")
            entries.append((parts[0], parts[1], 0, 1, parts[2]))
        run(build_config(command, entries), args.out)
    except MuntzkitError as exc:
        for cls, code in EXIT_CODES:
            if isinstance(exc, cls):
                print(f"error: {exc}", file=sys.stderr)
                return code
        raise
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
