"""Command-line entry point.

Exit codes: 0 decided, 2 input error, 3 Unknown verdict, 4 resource guard.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__, geometry
from .digits import check_base, format_digits, parse_digits, to_restricted_digits, value
from .distribution import (
    DEFAULT_K,
    DigitLaw,
    Kind,
    char_fn,
    classify,
    gn_convolution_law,
    multigeometric_law,
)
from .errors import CantorvalError, ResourceLimitError
from .intervals import IntervalUnion, as_fraction, format_fraction
from .sampling import (
    cdf_bracket,
    empirical_check,
    hull_grid,
    make_rng,
    sample_eta_many,
    sample_xi_many,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNKNOWN = 3
EXIT_RESOURCE = 4

SCHEMA_VERSION = 1


class InputError(CantorvalError):
    """Bad command-line input (law source, grid token, file)."""


@dataclass(frozen=True)
class Output:
    """A result ready for either serialisation."""

    payload: dict
    header: Sequence[str] = ()
    rows: Sequence[Sequence[Any]] = ()
    exit_code: int = EXIT_OK


# --------------------------------------------------------------------------
# parsing helpers


def _parse_q0(text: str):
    # floats only when asked for with an exponent; decimals read exactly
    try:
        return float(text) if re.search(r"[eE]", text) else as_fraction(text)
    except (ValueError, CantorvalError):
        raise InputError(f"bad probability {text!r}") from None


def parse_law(text: str) -> DigitLaw:
    """Inline JSON, ``gn:q0``, ``multigeo:m:q0`` or a path to a JSON file."""
    text = text.strip()
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise InputError(f"law JSON: {e}") from None
        return DigitLaw.from_json(data)
    if text.startswith("gn:"):
        return gn_convolution_law(_parse_q0(text[3:]))
    if text.startswith("multigeo:"):
        parts = text.split(":")
        if len(parts) != 3 or not parts[1].isdigit():
            raise InputError(f"expected multigeo:m:q0, got {text!r}")
        return multigeometric_law(int(parts[1]), _parse_q0(parts[2]))
    return load_law_file(text)


def load_law_file(path: str) -> DigitLaw:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read law {path!r}: {e.strerror}") from None
    try:
        return DigitLaw.from_json(json.loads(text))
    except json.JSONDecodeError as e:
        raise InputError(f"law file {path}: {e}") from None


_T_TOKEN = re.compile(r"^([+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?\*?(pi)?$")


def parse_t(token: str) -> float:
    """``1.5``, ``pi``, ``2pi``, ``-0.5*pi``."""
    m = _T_TOKEN.match(token.strip())
    if not m or (m.group(1) is None and m.group(2) is None):
        raise InputError(f"bad t value {token!r}")
    coef = float(m.group(1)) if m.group(1) is not None else 1.0
    return coef * math.pi if m.group(2) else coef


def parse_depths(text: str) -> list[int]:
    """``7``, ``4-10`` or ``1,3,5``."""
    out: list[int] = []
    try:
        for part in text.split(","):
            if "-" in part:
                a, b = part.split("-")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise InputError(f"bad depth list {text!r}") from None
    if not out:
        raise InputError("empty depth list")
    return out


def _law_from(args) -> DigitLaw:
    if args.law is not None:
        return parse_law(args.law)
    return load_law_file(args.law_file)


def _rational(x: Fraction) -> str:
    return format_fraction(x)


def _prob_out(x, exact: bool):
    return format_fraction(x) if exact else float(x)


# --------------------------------------------------------------------------
# subcommands


def cmd_classify(args) -> Output:
    law = _law_from(args)
    v = classify(law, args.K)
    payload = {"law": law.to_json(), "verdict": v.to_json()}
    code = EXIT_UNKNOWN if v.kind is Kind.UNKNOWN else EXIT_OK
    w = payload["verdict"]["witness"]
    row = [v.kind.value, v.reason.value, json.dumps(w, sort_keys=True), v.lower_bound]
    return Output(payload, ("kind", "reason", "witness", "lower_bound"), [row], code)


def cmd_charfn(args) -> Output:
    law = _law_from(args)
    ts = [parse_t(tok) for tok in args.t.split(",")]
    rows = []
    for t in ts:
        f = char_fn(law, t, args.K)
        rows.append([t, f.value.real, f.value.imag, abs(f.value), f.radius, int(f.low_confidence)])
    header = ("t", "re", "im", "abs", "radius", "low_confidence")
    payload = {"law": law.to_json(), "K": args.K, "rows": [dict(zip(header, r)) for r in rows]}
    return Output(payload, header, rows)


def _union_output(s: int, depth: int, u: IntervalUnion, kind: str) -> Output:
    rows = [[_rational(p.lo), _rational(p.hi), float(p.lo), float(p.hi)] for p in u.parts]
    payload = {"s": s, "depth": depth, kind: u.to_json(), "count": len(u)}
    return Output(payload, ("lo", "hi", "lo_float", "hi_float"), rows)


def cmd_geometry(args) -> Output:
    s = check_base(args.s)
    action = args.action
    if action in ("gaps", "cover"):
        depth = parse_depths(args.depth)[-1]
        fn = geometry.gaps if action == "gaps" else geometry.cylinder_cover
        return _union_output(s, depth, fn(s, depth), action)
    if action == "measure":
        rows = [
            [k, n, _rational(m), float(m)]
            for k, n, m in geometry.cover_table(s, parse_depths(args.depth))
        ]
        header = ("depth", "components", "measure", "measure_float")
        return Output({"s": s, "rows": [dict(zip(header, r)) for r in rows]}, header, rows)
    if action == "interval":
        iv = geometry.maximal_interval(s)
        payload = {"s": s, "interval": iv.to_json()}
        return Output(payload, ("lo", "hi", "lo_float", "hi_float"),
                      [[_rational(iv.lo), _rational(iv.hi), float(iv.lo), float(iv.hi)]])
    # dims
    depths = parse_depths(args.depths) if args.depths else _default_box_depths(s)
    box = geometry.box_counting_estimate(s, depths)
    payload = {
        "s": s,
        "closed_form": geometry.boundary_dimension(s),
        "moran_root": geometry.similarity_dimension(geometry.boundary_family(s)),
        "box_count_slope": box.slope,
        "depths": list(box.depths),
        "counts": list(box.counts),
    }
    rows = [[payload["closed_form"], payload["moran_root"], box.slope]]
    return Output(payload, ("closed_form", "moran_root", "box_count_slope"), rows)


def _default_box_depths(s: int) -> list[int]:
    # keep the finest grid around 10^6 boxes
    top = max(3, int(math.log(2e6) / math.log(s)))
    return list(range(max(1, top - 6), top + 1))


def cmd_convert(args) -> Output:
    s = check_base(args.s)
    x = parse_digits(s, args.x)
    out = to_restricted_digits(x, args.depth)
    val = value(out) if out.is_finite or args.depth is None else None
    payload = {"s": s, "input": args.x, "output": format_digits(out)}
    if val is not None:
        payload["value"] = _rational(val)
    return Output(payload, ("input", "output"), [[args.x, format_digits(out)]])


def cmd_sample(args) -> Output:
    rng = make_rng(args.seed, args.stream)
    law = _law_from(args)
    if args.eta:
        if not (args.law or "").startswith("multigeo:"):
            raise InputError("--eta needs --law multigeo:m:q0")
        _, m, q0 = args.law.split(":")
        vals = sample_eta_many(int(m), _parse_q0(q0), args.N, args.n, rng)
    else:
        vals = sample_xi_many(law, args.N, args.n, rng)
    rows = [[i, repr(float(v))] for i, v in enumerate(vals)]
    payload = {"law": law.to_json(), "N": args.N, "seed": args.seed, "stream": args.stream,
               "values": [float(v) for v in vals]}
    return Output(payload, ("index", "value"), rows)


def cmd_cdf(args) -> Output:
    law = _law_from(args)
    exact = law.exact
    if args.samples:
        chk = empirical_check(law, args.N, args.samples, args.seed)
        xs = [r[0] for r in chk.rows]
        rows = [[float(x), lo, hi, emp] for x, lo, hi, emp in chk.rows]
        header = ("x", "lo", "hi", "empirical")
        payload = {
            "law": law.to_json(), "N": args.N, "samples": args.samples, "seed": args.seed,
            "epsilon": chk.epsilon, "statistic": chk.statistic,
            "rows": [{"x": _rational(x), "lo": r[1], "hi": r[2], "empirical": r[3]} for x, r in zip(xs, rows)],
        }
        return Output(payload, header, rows)
    xs = [as_fraction(tok) for tok in args.x.split(",")] if args.x else hull_grid(law.s)
    brackets = [cdf_bracket(law, args.N, x) for x in xs]
    rows = [[float(b.at), float(b.lo), float(b.hi)] for b in brackets]
    payload = {
        "law": law.to_json(), "N": args.N,
        "rows": [{"x": _rational(b.at), "lo": _prob_out(b.lo, exact), "hi": _prob_out(b.hi, exact)} for b in brackets],
    }
    return Output(payload, ("x", "lo", "hi"), rows)


# --------------------------------------------------------------------------
# argparse


def _add_law(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--law", help='JSON {"s":..,"p":[..]}, gn:q0, multigeo:m:q0, or a file path')
    g.add_argument("--law-file", help="path to a law JSON file")


def _add_common(p: argparse.ArgumentParser, default_format: str) -> None:
    p.add_argument("--format", choices=("json", "csv"), default=default_format)
    p.add_argument("--output", "-o", help="write here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cantorval", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="singular / absolutely continuous verdict")
    _add_law(p)
    p.add_argument("--K", type=int, default=DEFAULT_K)
    _add_common(p, "json")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("charfn", help="truncated characteristic function with error radius")
    _add_law(p)
    p.add_argument("--t", default="2pi", help="comma list, e.g. 0,2pi,8pi")
    p.add_argument("--K", type=int, default=40)
    _add_common(p, "csv")
    p.set_defaults(func=cmd_charfn)

    p = sub.add_parser("geometry", help="covers, gaps, measure, dimension, maximal interval")
    p.add_argument("action", choices=("gaps", "cover", "measure", "dims", "interval"))
    p.add_argument("--s", type=int, default=4)
    p.add_argument("--depth", default="3", help="depth, or a list like 1-10 for measure")
    p.add_argument("--depths", help="box-counting depths, e.g. 4-10")
    _add_common(p, "json")
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("convert", help="rewrite a digit string over the restricted alphabet")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--x", required=True, help='digit string such as "3.1.1.(0)"')
    p.add_argument("--depth", type=int, help="truncate output after this many digits")
    _add_common(p, "json")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("sample", help="Monte Carlo draws of the truncated sum")
    _add_law(p)
    p.add_argument("--N", type=int, default=20)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--eta", action="store_true", help="draw eta block-wise (multigeo laws)")
    _add_common(p, "csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("cdf", help="CDF brackets, optionally with an empirical column")
    _add_law(p)
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--x", help="comma list of points; default 257-point grid over the hull")
    p.add_argument("--samples", type=int, help="add the empirical CDF from this many draws")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p, "csv")
    p.set_defaults(func=cmd_cdf)
    return ap


def render(out: Output, fmt: str, command: str) -> str:
    if fmt == "json":
        body = {"schema": f"cantorval.{command}/{SCHEMA_VERSION}", **out.payload}
        return json.dumps(body, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(out.header)
    w.writerows(out.rows)
    return buf.getvalue()


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args)
    except ResourceLimitError as e:
        print(f"cantorval: resource limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (CantorvalError, ValueError) as e:
        print(f"cantorval: {e}", file=sys.stderr)
        return EXIT_INPUT
    text = render(out, args.format, args.command)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return out.exit_code


if __name__ == "__main__":
    sys.exit(main())
