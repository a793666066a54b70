"""Command-line front end.

Exit codes: 0 ok, 1 suite failure, 2 input error, 3 hypothesis violation,
4 numerical degeneracy.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import jsonio
from .betti import commutant_dimension, eigenvalue_map, flag_surgery
from .config import Config
from .errors import HypothesisViolation, InputError, SchemaError, ShadowError
from .hecke import ResidueShadow, Word, apply_word, deligne_normalize, normal_form, orbit
from .kms import HarmonicShadow, flow, validate_shadow
from .rh import betti_shadow, betti_to_json
from .section import (cocycle_check, glue_infinity, local_order, trace_path,
                      transitions_to_json, write_section_csv, write_transitions_json)
from .suites import SUITES, run_suites
from .twistor import WeightProfile, format_table, twistor_h0, weight_table
from .walls import (build_cover, delta_in_region, level_walls, wallset_to_json,
                    write_delta_csv, write_walls_csv)


# --------------------------------------------------------------------------
# argument parsing helpers


def parse_region(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise InputError(f"region must be r_min:r_max, got {text!r}") from None
    if not (0 < lo <= hi):
        raise InputError("region needs 0 < r_min <= r_max")
    return lo, hi


def parse_path(text: str) -> list[complex]:
    if not text.strip():
        return []
    pts = []
    for part in text.split(":"):
        try:
            x, y = (float(v) for v in part.split(","))
        except ValueError:
            raise InputError(f"path points are x,y pairs, got {part!r}") from None
        pts.append(complex(x, y))
    return pts


def parse_complex(text: str) -> complex:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"expected re,im, got {text!r}") from None
    return complex(x, y)


def parse_sigma(text: str) -> dict:
    """``t1=2,1,3;t2=1,3,2`` with 1-based images."""
    out = {}
    for part in text.split(";"):
        if not part.strip():
            continue
        try:
            t, images = part.split("=")
            out[t.strip()] = tuple(int(v) - 1 for v in images.split(","))
        except ValueError:
            raise InputError(f"cannot parse permutation {part!r}") from None
    return out


def densify(path: list[complex], samples: int) -> list[complex]:
    """Points along the polyline, ``samples`` per segment, endpoints included."""
    if len(path) < 2:
        return list(path)
    out = [path[0]]
    for a, b in zip(path, path[1:]):
        out += [a + (b - a) * k / samples for k in range(1, samples + 1)]
    return out


def _require(args, name):
    if getattr(args, name) is None:
        raise InputError(f"--{name.replace('_', '-')} is required")
    return getattr(args, name)


def _load_shadow(args) -> HarmonicShadow:
    shadow = jsonio.load_shadow(_require(args, "input"))
    return shadow


def _check_hypothesis(shadow: HarmonicShadow, config: Config) -> None:
    bad = validate_shadow(shadow, config)
    if bad:
        msgs = [f"{t}: {m}" for t, rep in bad.items() for m in rep.messages()]
        raise HypothesisViolation("; ".join(msgs))


class Output:
    """Routes named files to --output-dir, or to stdout when no directory is given."""

    def __init__(self, args):
        self.dir = args.output_dir
        self.json = args.json
        if self.dir:
            os.makedirs(self.dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.dir, name) if self.dir else None

    def text(self, name: str, content: str):
        if self.dir:
            with open(self.path(name), "w", newline="") as fh:
                fh.write(content)
        elif not self.json:
            sys.stdout.write(content)

    def emit_json(self, obj):
        if self.json:
            sys.stdout.write(jsonio.dumps(obj))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------
# subcommands


def cmd_flow(args, config: Config) -> int:
    shadow = _load_shadow(args)
    _check_hypothesis(shadow, config)
    pts = densify(parse_path(args.path or ""), args.samples)
    header = ["re_lambda", "im_lambda", "puncture", "kms_index", "p", "re_e", "im_e"]
    rows = []
    for lam in pts:
        for t, spectrum in shadow.punctures:
            for q, x in enumerate(spectrum.points):
                f = flow(x, lam)
                rows.append([repr(lam.real), repr(lam.imag), t, q, repr(f.p),
                             repr(f.e.real), repr(f.e.imag)])
    out = Output(args)
    out.text("flow.csv", _csv_text(header, rows))
    out.emit_json([dict(zip(header, r)) for r in rows])
    return 0


def cmd_walls(args, config: Config) -> int:
    shadow = _load_shadow(args)
    _check_hypothesis(shadow, config)
    r_min, r_max = parse_region(args.region)
    ws = delta_in_region(shadow, r_min, r_max, config)
    ws.level_walls = level_walls(shadow, r_min, r_max, args.samples or config.grid_resolution,
                                 config)
    out = Output(args)
    if out.dir:
        write_delta_csv(out.path("delta.csv"), ws)
        write_walls_csv(out.path("walls.csv"), ws.level_walls)
    elif not out.json:
        rows = [[repr(d.lam.real), repr(d.lam.imag), d.witness.puncture, d.witness.i,
                 d.witness.j, d.witness.n] for d in ws.delta_points]
        out.text("delta.csv", _csv_text(["re", "im", "puncture", "i", "j", "n"], rows))
    out.emit_json(wallset_to_json(ws))
    return 0


def cmd_section(args, config: Config) -> int:
    shadow = _load_shadow(args)
    _check_hypothesis(shadow, config)
    out = Output(args)
    report: dict = {}
    status = 0
    if args.path is not None:
        pts = densify(parse_path(args.path), args.samples)
        tr = trace_path(shadow, pts, config)
        if out.dir:
            write_section_csv(out.path("section.csv"), tr.samples)
            write_transitions_json(out.path("transitions.json"), tr.transitions)
        report["samples"] = len(tr.samples)
        report["transitions"] = transitions_to_json(tr.transitions)
        report["holonomy"] = tr.holonomy.to_json()
        report["closed"] = tr.closed
        if args.glue:
            report["glue"] = [glue_infinity(shadow, s.lam, config=config).to_json()
                              for s in tr.samples if s.lam != 0]
    if args.cover is not None:
        cover = build_cover(shadow, args.cover, config=config)
        rep = cocycle_check(shadow, cover, config)
        report["cocycle"] = rep.to_json() | {"discs": [
            {"center": [d.center.real, d.center.imag], "radius": d.radius, "kind": d.kind}
            for d in cover.discs]}
        if not rep.passed:
            status = 1
    if not report:
        raise InputError("section needs --path and/or --cover")
    if "glue" in report and not all(g["passed"] for g in report["glue"]):
        status = 1
    if out.dir:
        out.text("section_report.json", jsonio.dumps(report))
    elif not out.json:
        lines = []
        if "holonomy" in report:
            lines.append(f"samples: {report['samples']}")
            lines.append("holonomy: " + json.dumps(report["holonomy"], sort_keys=True))
        if "cocycle" in report:
            c = report["cocycle"]
            lines.append(f"cocycle: {'PASS' if c['passed'] else 'FAIL'} pairs={c['pairs']} "
                         f"triples={c['triples']}")
        if "glue" in report:
            ok = all(g["passed"] for g in report["glue"])
            lines.append(f"glue: {'PASS' if ok else 'FAIL'} samples={len(report['glue'])}")
        sys.stdout.write("\n".join(lines) + "\n")
    out.emit_json(report)
    return status


def _residue_shadow_from_json(data) -> ResidueShadow:
    lam = jsonio._complex(jsonio._field(data, "lambda", "list"), data)
    theta_node = data.get("theta")
    if not isinstance(theta_node, dict) or not theta_node:
        raise SchemaError(f"{jsonio._where(data)}: 'theta' must map punctures to value lists")
    theta = {}
    for t, vals in theta_node.items():
        if not isinstance(vals, list):
            raise SchemaError(f"{jsonio._where(theta_node)}: theta[{t!r}] must be a list")
        theta[t] = tuple(jsonio._complex(v, vals) for v in vals)
    degree = jsonio._field(data, "degree", "int", optional=True) or 0
    return ResidueShadow(lam, theta, degree)


def _load_residue_shadow(args, config) -> ResidueShadow:
    data = jsonio.load(_require(args, "input"))
    if isinstance(data, dict) and "theta" in data:
        return _residue_shadow_from_json(data)
    shadow = jsonio.shadow_from_json(data)
    _check_hypothesis(shadow, config)
    lam = parse_complex(args.lam) if args.lam else 1.0
    return local_order(shadow, lam, config).residue_shadow()


def _theta_json(s: ResidueShadow) -> dict:
    return {t: [[v.real, v.imag] for v in vals] for t, vals in s.theta.items()}


def cmd_orbit(args, config: Config) -> int:
    s = _load_residue_shadow(args, config)
    report: dict = {"lambda": [s.lam.real, s.lam.imag], "theta": _theta_json(s),
                    "degree": s.degree}
    if args.word:
        w = Word.parse(args.word)
        report["word"] = str(w)
        report["normal_form"] = normal_form(w, s.rank, s.punctures).to_json()
        image = apply_word(w, s, config)
        report["image"] = {"theta": _theta_json(image), "degree": image.degree}
    if args.deligne:
        w, image = deligne_normalize(s, config)
        report["deligne"] = {"word": str(w), "theta": _theta_json(image),
                             "degree": image.degree}
    entries = orbit(s, args.length, config=config)
    header = ["entry", "word", "degree", "puncture", "slot", "re_theta", "im_theta"]
    rows = []
    for k, e in enumerate(entries):
        for t, vals in e.shadow.theta.items():
            for slot, v in enumerate(vals, start=1):
                rows.append([k, str(e.word), e.shadow.degree, t, slot, repr(v.real),
                             repr(v.imag)])
    report["orbit"] = [{"word": str(e.word), "degree": e.shadow.degree,
                        "normal_form": e.normal_form.to_json(), "theta": _theta_json(e.shadow)}
                       for e in entries]
    out = Output(args)
    out.text("orbit.csv", _csv_text(header, rows))
    if out.dir:
        out.text("orbit.json", jsonio.dumps(report))
    out.emit_json(report)
    return 0


def cmd_betti(args, config: Config) -> int:
    data = jsonio.load(_require(args, "input"))
    out = Output(args)
    entries = data.get("punctures") if isinstance(data, dict) else None
    is_local_system = bool(entries) and isinstance(entries[0], dict) and "gamma" in entries[0]
    if not is_local_system:
        shadow = jsonio.shadow_from_json(data)
        _check_hypothesis(shadow, config)
        lam = parse_complex(args.lam) if args.lam else 1.0
        B = betti_shadow(local_order(shadow, lam, config).residue_shadow(), None, 1, config)
        report = {"lambda": [lam.real, lam.imag], "betti": betti_to_json(B)}
        rows = [[t, k, repr(e.mu.real), repr(e.mu.imag), repr(e.jump)]
                for t, es in B.items() for k, e in enumerate(es, start=1)]
        out.text("betti.csv", _csv_text(["puncture", "index", "re_mu", "im_mu", "jump"], rows))
        if out.dir:
            out.text("betti.json", jsonio.dumps(report))
        out.emit_json(report)
        return 0
    L = jsonio.local_system_from_json(data)
    issues = L.validate(config)
    if issues:
        raise InputError("; ".join(issues))
    if args.sigma:
        L = flag_surgery(parse_sigma(args.sigma), L, config=config)
    A = eigenvalue_map(L, config)
    dim = commutant_dimension(L)
    report = {"eigenvalues": {t: [[z.real, z.imag] for z in v] for t, v in A.items()},
              "commutant_dimension": dim, "irreducible_flagged": dim == 1}
    rows = [[t, k, repr(z.real), repr(z.imag)] for t, v in A.items()
            for k, z in enumerate(v, start=1)]
    out.text("eigenvalues.csv", _csv_text(["puncture", "line", "re", "im"], rows))
    if out.dir:
        out.text("betti.json", jsonio.dumps(report))
        if args.sigma:
            out.text("local_system.json", jsonio.dumps(jsonio.local_system_to_json(L)))
    out.emit_json(report)
    return 0


def cmd_twistor(args, config: Config) -> int:
    warning = None
    if args.profile:
        profile = WeightProfile.parse(args.profile)
    elif args.rank is not None and args.punctures is not None:
        profile, _ = WeightProfile.default(args.rank, args.punctures)
        warning = "n2 = rank * punctures is a default hint, not a computed dimension"
    else:
        raise InputError("twistor needs --profile or --rank with --punctures")
    degree = 2 if args.degree is None else args.degree
    if degree < 0:
        raise InputError("--degree must be >= 0")
    tables = [weight_table(profile, d) for d in range(degree + 1)]
    h0 = twistor_h0({0: profile.n0, 1: profile.n1, 2: profile.n2})
    report = {"profile": [profile.n0, profile.n1, profile.n2],
              "tables": [t.to_json() for t in tables], "h0": h0}
    if warning:
        report["warning"] = warning
    out = Output(args)
    text = format_table(tables) + f"h0 = {h0}\n"
    if warning:
        text += f"warning: {warning}\n"
    out.text("twistor.txt", text)
    if out.dir:
        out.text("twistor.json", jsonio.dumps(report))
    out.emit_json(report)
    return 0


def cmd_check(args, config: Config) -> int:
    name = args.suite or "all"
    if name != "all" and name not in SUITES:
        raise InputError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}")
    results = run_suites(name, config.seed, config)
    report = {"seed": config.seed, "passed": all(r.passed for r in results),
              "suites": [r.to_json() for r in results]}
    out = Output(args)
    lines = [f"{r.name:<12} {'PASS' if r.passed else 'FAIL'}  checks={r.checks}" for r in results]
    out.text("check.txt", "\n".join(lines) + "\n")
    if out.dir:
        out.text("check.json", jsonio.dumps(report))
    out.emit_json(report)
    return 0 if report["passed"] else 1


COMMANDS = {
    "flow": cmd_flow,
    "walls": cmd_walls,
    "section": cmd_section,
    "orbit": cmd_orbit,
    "betti": cmd_betti,
    "twistor": cmd_twistor,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON file")
    common.add_argument("--output-dir", help="directory for output files (default: stdout)")
    common.add_argument("--json", action="store_true", help="print machine-readable JSON")
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--seed", type=int, help="seed for randomized suites")

    parser = argparse.ArgumentParser(prog="dhshadow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flow", parents=[common], help="sample level/eigenvalue trajectories")
    p.add_argument("--path", help="polyline x0,y0:x1,y1:...")
    p.add_argument("--samples", type=int, default=50, help="points per path segment")

    p = sub.add_parser("walls", parents=[common], help="collision points and level walls")
    p.add_argument("--region", default="0.1:3", help="annulus r_min:r_max")
    p.add_argument("--samples", type=int, help="grid resolution for level walls")

    p = sub.add_parser("section", parents=[common], help="trace sections, check cocycles")
    p.add_argument("--path", help="polyline x0,y0:x1,y1:...")
    p.add_argument("--samples", type=int, default=1, help="points per path segment")
    p.add_argument("--cover", type=float, help="radius of a disc to cover and check")
    p.add_argument("--glue", action="store_true", help="compare with the conjugate chart")

    p = sub.add_parser("orbit", parents=[common], help="groupoid orbit of a residue shadow")
    p.add_argument("--lambda", dest="lam", help="re,im (for harmonic-shadow input)")
    p.add_argument("--length", type=int, default=2, help="maximum word length")
    p.add_argument("--word", help="word to apply, e.g. 'U(t) H(t)^2'")
    p.add_argument("--deligne", action="store_true", help="normalize into the window")

    p = sub.add_parser("betti", parents=[common], help="Betti side data")
    p.add_argument("--lambda", dest="lam", help="re,im (for harmonic-shadow input)")
    p.add_argument("--sigma", help="flag surgery, e.g. 't1=2,1,3;t2=1,3,2'")

    p = sub.add_parser("twistor", parents=[common], help="weight tables")
    p.add_argument("--profile", help="n0,n1,n2")
    p.add_argument("--degree", type=int, help="largest degree")
    p.add_argument("--rank", type=int, help="rank for the default profile")
    p.add_argument("--punctures", type=int, help="puncture count for the default profile")

    p = sub.add_parser("check", parents=[common], help="run invariant suites")
    p.add_argument("--suite", help="suite name or 'all'")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = Config.from_file(args.config) if args.config else Config()
        config = config.updated(seed=args.seed)
        return COMMANDS[args.command](args, config)
    except ShadowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
