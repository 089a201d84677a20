"""Command-line entry point: nlkg <subcommand>.

Subcommands: groundstate, evolve, classify, sweep, bisect, render. Every
run that writes files puts them in an output directory together with a
manifest recording the fully resolved configuration, the artifact version,
a timestamp and checksums of the inputs; the manifest body is itself valid
flat `key = value` config text, so `nlkg sweep --config <manifest>`
reproduces the run. Exit codes: 0 success, 1 configuration error,
2 runtime error.
"""

from __future__ import annotations

import argparse
import difflib
import hashlib
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bisection import bisect_boundary, ringing_trace
from .classify import ClassifierConfig, classify_evolution
from .datafn import DslError, FAMILY_NAMES, parse as parse_expr
from .groundstate import compute_ground_state, ps_classify
from .render import (CONTOUR, FILL_UNDER, Palette, read_csv, render_section,
                     write_csv, write_ppm)
from .scheme import (EXPLICIT, IMPLICIT_SV, BlowupDetected, RadialGrid,
                     SolverConfig, discrete_energy, init_levels, step)
from .sweep import (CheckpointError, PRESETS, SweepConfig, preset_config,
                    resolve_family, run_sweep, sample_data,
                    scan_third_parameter)


class _CliError(Exception):
    """Configuration error: bad flags, bad config values, unknown names."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        if "unrecognized arguments:" in message:
            bad = message.split("unrecognized arguments:")[1].split()
            known = [s for a in self._actions for s in a.option_strings]
            hints = []
            for flag in bad:
                if flag.startswith("-"):
                    close = difflib.get_close_matches(flag, known, n=1)
                    if close:
                        hints.append(f"{flag} (did you mean {close[0]}?)")
                    else:
                        hints.append(flag)
            if hints:
                message = "unrecognized arguments: " + ", ".join(hints)
        raise _CliError(message)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict,
                    inputs: dict | None = None) -> Path:
    lines = [
        "# nlkg run manifest",
        f"# version = {__version__}",
        f"# command = {command}",
        f"# timestamp = {time.strftime('%Y-%m-%dT%H:%M:%S%z')}",
    ]
    for name, digest in (inputs or {}).items():
        lines.append(f"# input sha256 {name} = {digest}")
    for key, value in config.items():
        if value is not None:
            lines.append(f"{key} = {value}")
    path = out_dir / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def parse_flat_config(text: str) -> dict:
    """Flat `key = value` lines; `#` starts a comment; blank lines ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _CliError(f"config line {lineno}: expected key = value, "
                            f"got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# shared flag groups

def _add_solver_flags(p):
    p.add_argument("--scheme", choices=[IMPLICIT_SV, EXPLICIT], default=None,
                   help="difference scheme (default sv)")
    p.add_argument("--dr", type=float, default=None, help="radial spacing")
    p.add_argument("--cfl", type=float, default=None,
                   help="time step ratio dt/dr (default 0.9)")
    p.add_argument("--tfinal", type=float, default=None,
                   help="maximum physical time")
    p.add_argument("--rinterest", type=float, default=None,
                   help="radius of the rectangle of interest; the grid "
                        "extends to rinterest + tfinal")
    p.add_argument("--newton-tol", type=float, default=None)
    p.add_argument("--newton-max-iter", type=int, default=None)


def _add_classifier_flags(p):
    p.add_argument("--r-monitor", type=float, default=None,
                   help="ball radius of the monitored norm (default 5)")
    p.add_argument("--blowup-factor", type=float, default=None)
    p.add_argument("--disperse-factor", type=float, default=None)
    p.add_argument("--sustain-window", type=int, default=None)
    p.add_argument("--monitor-stride", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=None)


def _add_family_flags(p):
    p.add_argument("--family", default=None,
                   help=f"builtin family: {', '.join(FAMILY_NAMES)}")
    p.add_argument("--u0", default=None, help="initial position expression")
    p.add_argument("--u1", default=None, help="initial velocity expression")
    p.add_argument("--add-q", action=argparse.BooleanOptionalAction,
                   default=None, help="add the ground state to u0")
    p.add_argument("--mul-q", action=argparse.BooleanOptionalAction,
                   default=None, help="multiply both components by Q")


def _solver_from(settings: dict) -> SolverConfig:
    base = SolverConfig()
    return SolverConfig(
        scheme=settings.get("scheme", base.scheme),
        dr=float(settings.get("dr", base.dr)),
        cfl_ratio=float(settings.get("cfl", base.cfl_ratio)),
        t_final=float(settings.get("t_final", base.t_final)),
        r_interest=float(settings.get("r_interest", base.r_interest)),
        newton_tol=float(settings.get("newton_tol", base.newton_tol)),
        newton_max_iter=int(settings.get("newton_max_iter",
                                         base.newton_max_iter)),
    )


def _classifier_from(settings: dict) -> ClassifierConfig:
    base = ClassifierConfig()
    raw_cap = settings.get("max_steps")
    return ClassifierConfig(
        r_monitor=float(settings.get("r_monitor", base.r_monitor)),
        blowup_factor=float(settings.get("blowup_factor", base.blowup_factor)),
        disperse_factor=float(settings.get("disperse_factor",
                                           base.disperse_factor)),
        sustain_window=int(settings.get("sustain_window", base.sustain_window)),
        monitor_stride=int(settings.get("monitor_stride", base.monitor_stride)),
        max_steps=None if raw_cap in (None, "", "none") else int(raw_cap),
    )


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise _CliError(f"expected a boolean, got {text!r}")


def _flag_settings(args) -> dict:
    """Solver/classifier settings present on the command line."""
    mapping = {"scheme": args.scheme, "dr": args.dr, "cfl": args.cfl,
               "t_final": args.tfinal, "r_interest": args.rinterest,
               "newton_tol": args.newton_tol,
               "newton_max_iter": args.newton_max_iter}
    if hasattr(args, "r_monitor"):
        mapping.update({"r_monitor": args.r_monitor,
                        "blowup_factor": args.blowup_factor,
                        "disperse_factor": args.disperse_factor,
                        "sustain_window": args.sustain_window,
                        "monitor_stride": args.monitor_stride,
                        "max_steps": args.max_steps})
    return {k: v for k, v in mapping.items() if v is not None}


def _family_from(settings: dict):
    """(family argument for sweep/bisect, add_q, mul_q) from settings."""
    fam = settings.get("family")
    u0 = settings.get("u0")
    u1 = settings.get("u1")
    add_q = settings.get("add_q")
    mul_q = settings.get("mul_q")
    if add_q is not None:
        add_q = _parse_bool(add_q)
    if mul_q is not None:
        mul_q = _parse_bool(mul_q)
    if fam and (u0 or u1):
        raise _CliError("give either --family or --u0/--u1, not both")
    if fam:
        if fam not in FAMILY_NAMES:
            close = difflib.get_close_matches(fam, FAMILY_NAMES, n=1)
            hint = f" (did you mean {close[0]}?)" if close else ""
            raise _CliError(f"unknown family {fam!r}{hint}")
        return fam, add_q, mul_q
    if not (u0 and u1):
        raise _CliError("need --family, or both --u0 and --u1")
    parse_expr(u0)
    parse_expr(u1)
    return (u0, u1), add_q, mul_q


def _data_settings(args, config: dict | None = None) -> dict:
    settings = dict(config or {})
    for key in ("family", "u0", "u1"):
        v = getattr(args, key, None)
        if v is not None:
            settings[key] = v
    if getattr(args, "add_q", None) is not None:
        settings["add_q"] = args.add_q
    if getattr(args, "mul_q", None) is not None:
        settings["mul_q"] = args.mul_q
    settings.update(_flag_settings(args))
    return settings


# ---------------------------------------------------------------------------
# subcommands

def _cmd_groundstate(args) -> int:
    dr = args.dr
    grid = RadialGrid.for_domain(dr, args.rmax)
    gs = compute_ground_state(args.tol, grid)
    out = _out_dir(args)
    profile_path = out / "q_profile.txt"
    lines = [f"{r!r} {q!r}" for r, q in zip(grid.r, gs.profile)]
    profile_path.write_text("\n".join(lines) + "\n")
    _write_manifest(out, "groundstate",
                    {"dr": dr, "tol": args.tol, "rmax": args.rmax})
    print(f"Q(0) = {gs.central_value!r}  J(Q) = {gs.energy_J!r}  "
          f"profile: {profile_path}")
    return 0


def _build_data(settings, grid, need_ground, ground_tol=1e-12):
    fam_arg, add_q, mul_q = _family_from(settings)
    fam = resolve_family(fam_arg, add_q, mul_q)
    ground = None
    if fam.add_q or fam.mul_q or need_ground:
        ground = compute_ground_state(ground_tol, grid)
    a = float(settings.get("a", 0.0))
    b = float(settings.get("b", 0.0))
    c = float(settings.get("c", 0.0))
    profile = ground.profile if ground is not None else np.zeros(grid.n_points)
    u0, u1 = sample_data(fam, grid, profile, a, b, c)
    return u0, u1, ground, fam


def _cmd_evolve(args) -> int:
    settings = _data_settings(args)
    solver = _solver_from(settings)
    grid = solver.make_grid()
    settings.setdefault("a", 1.0)
    settings.setdefault("b", 1.0)
    if args.a is not None:
        settings["a"] = args.a
    if args.b is not None:
        settings["b"] = args.b
    if args.c is not None:
        settings["c"] = args.c
    u0, u1, _, fam = _build_data(settings, grid, need_ground=False)

    out = _out_dir(args)
    state = init_levels(u0, u1, grid)
    energies = [(0, 0.0, discrete_energy(state))]
    dump_every = args.dump_every

    def dump(st):
        u = np.empty(grid.n_points)
        u[0] = st.v_curr[1] / grid.dr
        u[1:] = st.v_curr[1:] / grid.r[1:]
        path = out / f"snapshot_{st.step_index:06d}.txt"
        path.write_text("\n".join(f"{r!r} {val!r}"
                                  for r, val in zip(grid.r, u)) + "\n")

    dump(state)
    stopped = ""
    try:
        while state.step_index < solver.max_steps:
            state = step(state, solver)
            if state.step_index % dump_every == 0:
                dump(state)
                energies.append((state.step_index, state.time,
                                 discrete_energy(state)))
    except BlowupDetected as sig:
        stopped = f"blowup signal at step {sig.step_index} ({sig.detail})"
    (out / "energy.txt").write_text(
        "\n".join(f"{n} {t!r} {e!r}" for n, t, e in energies) + "\n")
    _write_manifest(out, "evolve", {k: settings.get(k) for k in sorted(settings)})
    print(f"evolved {state.step_index} steps"
          + (f"; {stopped}" if stopped else "") + f"; outputs in {out}")
    return 0


def _cmd_classify(args) -> int:
    settings = _data_settings(args)
    for key in ("a", "b", "c"):
        v = getattr(args, key)
        if v is not None:
            settings[key] = v
    solver = _solver_from(settings)
    classifier = _classifier_from(settings)
    grid = solver.make_grid()
    u0, u1, ground, fam = _build_data(settings, grid, need_ground=True)
    cls = classify_evolution(u0, u1, solver, classifier, grid=grid)
    ps = ps_classify(u0, u1, ground, grid)
    record = (f"verdict={cls.verdict.value} trigger={cls.trigger.value} "
              f"decision_time={cls.decision_time!r} steps={cls.steps_taken} "
              f"peak_norm={cls.peak_norm!r} final_norm={cls.final_norm!r} "
              f"ps_region={ps.region.value} energy={ps.energy!r} "
              f"j_of_q={ps.j_of_q!r} k_of_u0={ps.k_of_u0!r}")
    print(record)
    if args.out:
        out = _out_dir(args)
        (out / "classification.txt").write_text(record + "\n")
        _write_manifest(out, "classify",
                        {k: settings.get(k) for k in sorted(settings)})
    return 0


def _sweep_settings(args) -> dict:
    settings: dict = {}
    if args.preset:
        if args.preset not in PRESETS:
            close = difflib.get_close_matches(args.preset, PRESETS, n=1)
            hint = f" (did you mean {close[0]}?)" if close else ""
            raise _CliError(f"unknown preset {args.preset!r}{hint}")
        kw = preset_config(args.preset)
        settings.update({
            "family": kw.family if isinstance(kw.family, str) else None,
            "a_min": kw.a_range[0], "a_max": kw.a_range[1],
            "b_min": kw.b_range[0], "b_max": kw.b_range[1],
            "a_count": kw.a_count, "b_count": kw.b_count,
            "scheme": kw.solver.scheme, "dr": kw.solver.dr,
            "cfl": kw.solver.cfl_ratio, "t_final": kw.solver.t_final,
            "r_interest": kw.solver.r_interest,
        })
        if kw.c_values:
            settings["c_values"] = ",".join(f"{c:g}" for c in kw.c_values)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise _CliError(f"config file {path} not found")
        settings.update(parse_flat_config(path.read_text()))
    settings.update(_data_settings(args))
    for key in ("a_min", "a_max", "b_min", "b_max"):
        v = getattr(args, key)
        if v is not None:
            settings[key] = v
    for key in ("a_count", "b_count", "flush_every"):
        v = getattr(args, key)
        if v is not None:
            settings[key] = v
    if args.c is not None:
        settings["c_values"] = args.c
    if args.workers is not None:
        settings["workers"] = args.workers
    elif "workers" not in settings and os.environ.get("NLKG_WORKERS"):
        settings["workers"] = os.environ["NLKG_WORKERS"]
    if args.ground_tol is not None:
        settings["ground_tol"] = args.ground_tol
    return settings


def _sweep_config(settings: dict, checkpoint_path) -> SweepConfig:
    fam_arg, add_q, mul_q = _family_from(settings)
    missing = [k for k in ("a_min", "a_max", "b_min", "b_max")
               if k not in settings]
    if missing:
        raise _CliError(f"missing sweep range settings: {', '.join(missing)}")
    c_values = None
    if settings.get("c_values"):
        c_values = tuple(float(x) for x in
                         str(settings["c_values"]).split(",") if x.strip())
    return SweepConfig(
        family=fam_arg, add_q=add_q, mul_q=mul_q,
        a_range=(float(settings["a_min"]), float(settings["a_max"])),
        b_range=(float(settings["b_min"]), float(settings["b_max"])),
        a_count=int(settings.get("a_count", 121)),
        b_count=int(settings.get("b_count", 121)),
        c_values=c_values,
        solver=_solver_from(settings),
        classifier=_classifier_from(settings),
        workers=int(settings.get("workers", 1)),
        checkpoint_path=checkpoint_path,
        flush_every=int(settings.get("flush_every", 50)),
        ground_tol=float(settings.get("ground_tol", 1e-12)),
    )


def _manifest_config(cfg: SweepConfig) -> dict:
    fam = cfg.family
    conf = {}
    if isinstance(fam, str):
        conf["family"] = fam
    else:
        conf["u0"], conf["u1"] = fam
    resolved = resolve_family(cfg.family, cfg.add_q, cfg.mul_q)
    conf.update({
        "add_q": str(resolved.add_q).lower(),
        "mul_q": str(resolved.mul_q).lower(),
        "a_min": cfg.a_range[0], "a_max": cfg.a_range[1],
        "b_min": cfg.b_range[0], "b_max": cfg.b_range[1],
        "a_count": cfg.a_count, "b_count": cfg.b_count,
        "c_values": None if cfg.c_values is None
        else ",".join(repr(c) for c in cfg.c_values),
        "scheme": cfg.solver.scheme, "dr": cfg.solver.dr,
        "cfl": cfg.solver.cfl_ratio, "t_final": cfg.solver.t_final,
        "r_interest": cfg.solver.r_interest,
        "newton_tol": cfg.solver.newton_tol,
        "newton_max_iter": cfg.solver.newton_max_iter,
        "r_monitor": cfg.classifier.r_monitor,
        "blowup_factor": cfg.classifier.blowup_factor,
        "disperse_factor": cfg.classifier.disperse_factor,
        "sustain_window": cfg.classifier.sustain_window,
        "monitor_stride": cfg.classifier.monitor_stride,
        "max_steps": cfg.classifier.max_steps,
        "workers": cfg.workers, "ground_tol": cfg.ground_tol,
        "flush_every": cfg.flush_every,
    })
    return conf


def _cmd_sweep(args) -> int:
    settings = _sweep_settings(args)
    out = _out_dir(args)
    checkpoint = args.checkpoint or str(out / "checkpoint.log")
    cfg = _sweep_config(settings, checkpoint)

    inputs = {}
    if args.config:
        inputs[Path(args.config).name] = _sha256(Path(args.config))

    def progress(done, total):
        if args.progress and (done % 50 == 0 or done == total):
            print(f"\r{done}/{total} points", end="", file=sys.stderr)
            if done == total:
                print(file=sys.stderr)

    if args.scan:
        if not cfg.c_values:
            raise _CliError("--scan needs c_values (three-parameter family)")
        sections = scan_third_parameter(cfg, progress=progress)
        paths = []
        for c, records in sections:
            path = out / f"records_C{c:g}.csv"
            write_csv(records, path)
            paths.append(path)
        _write_manifest(out, "sweep", _manifest_config(cfg), inputs)
        print(f"wrote {', '.join(map(str, paths))}")
    else:
        records = run_sweep(cfg, progress=progress)
        path = out / "records.csv"
        write_csv(records, path)
        _write_manifest(out, "sweep", _manifest_config(cfg), inputs)
        print(f"wrote {path} ({len(records)} records)")
    return 0


def _parse_point(text: str):
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise _CliError(f"expected a point 'a,b', got {text!r}") from None
    return a, b


def _cmd_bisect(args) -> int:
    settings = _data_settings(args)
    fam_arg, add_q, mul_q = _family_from(settings)
    fam = resolve_family(fam_arg, add_q, mul_q)
    solver = _solver_from(settings)
    classifier = _classifier_from(settings)
    p_blow = _parse_point(args.p_from)
    p_disp = _parse_point(args.to)

    trace = bisect_boundary(p_blow, p_disp, fam, solver, classifier,
                            precision=args.precision, max_iter=args.max_iter,
                            c=args.c)
    out = _out_dir(args)
    rows = ["depth,a,b,verdict,decision_time,width_after"]
    brackets = trace.replay_brackets()
    for depth, step_rec in enumerate(trace.midpoints, start=1):
        width = (np.hypot(brackets[depth][0][0] - brackets[depth][1][0],
                          brackets[depth][0][1] - brackets[depth][1][1])
                 if depth < len(brackets) else trace.final_width)
        rows.append(f"{depth},{step_rec.point[0]!r},{step_rec.point[1]!r},"
                    f"{step_rec.verdict.value},{step_rec.decision_time!r},"
                    f"{width!r}")
    (out / "trace.csv").write_text("\n".join(rows) + "\n")

    if args.ringing and trace.midpoints:
        series = ringing_trace(trace.midpoints[-1].point, fam, solver,
                               classifier, r_probe=args.r_probe, c=args.c)
        lines = ["t,u_probe,dist_to_soliton_pair"]
        lines += [f"{t!r},{u!r},{d!r}" for t, u, d in series]
        (out / "ringing.csv").write_text("\n".join(lines) + "\n")

    config = {k: settings.get(k) for k in sorted(settings)}
    config.update({"from": args.p_from, "to": args.to,
                   "precision": args.precision, "max_iter": args.max_iter})
    _write_manifest(out, "bisect", config)
    print(f"bisection: {len(trace.midpoints)} midpoints, final width "
          f"{trace.final_width!r}; outputs in {out}")
    return 0


def _parse_palette(spec_text: str | None, mode: str) -> Palette:
    kwargs: dict = {"overlay_mode": mode}
    if spec_text:
        for item in spec_text.split(","):
            if "=" not in item:
                raise _CliError(f"palette entries look like name=RRGGBB; "
                                f"got {item!r}")
            name, hexval = item.split("=", 1)
            name = name.strip()
            hexval = hexval.strip().lstrip("#")
            if len(hexval) != 6:
                raise _CliError(f"palette color {item!r} is not a hex triple")
            kwargs[name] = tuple(int(hexval[i:i + 2], 16) for i in (0, 2, 4))
    try:
        return Palette(**kwargs)
    except TypeError as exc:
        raise _CliError(f"bad palette entry: {exc}") from None


def _cmd_render(args) -> int:
    records_path = Path(args.records)
    if not records_path.exists():
        raise _CliError(f"records file {records_path} not found")
    records = read_csv(records_path)
    palette = _parse_palette(args.palette, args.mode)
    image = render_section(records, palette)
    out = _out_dir(args)
    ppm_path = out / (records_path.stem + ".ppm")
    write_ppm(image, ppm_path)
    _write_manifest(out, "render",
                    {"records": str(records_path), "mode": args.mode,
                     "palette": args.palette},
                    inputs={records_path.name: _sha256(records_path)})
    print(f"wrote {ppm_path} ({image.shape[1]}x{image.shape[0]})")
    return 0


# ---------------------------------------------------------------------------

_GRAMMAR_EPILOG = """\
expression grammar (for --u0/--u1):
  variables   r (radius), A, B, C (sweep parameters)
  functions   exp sin cos sqrt cosh ang      ang(x) = sqrt(1+x^2)
  operators   + - * / ^    precedence: ^ (right-assoc, tightest),
              unary -, then * /, then + -
  implicit multiplication is a syntax error: write 2*r, not 2r
"""


def build_parser() -> _Parser:
    parser = _Parser(prog="nlkg", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     epilog=_GRAMMAR_EPILOG)
    parser.add_argument("--version", action="version",
                        version=f"nlkg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("groundstate", help="compute the ground state profile")
    p.add_argument("--dr", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--rmax", type=float, default=20.0)
    p.add_argument("--out", default="nlkg_out")
    p.set_defaults(fn=_cmd_groundstate)

    p = sub.add_parser("evolve", help="run one evolution, dumping snapshots",
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       epilog=_GRAMMAR_EPILOG)
    _add_family_flags(p)
    _add_solver_flags(p)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--dump-every", type=int, default=100)
    p.add_argument("--out", default="nlkg_out")
    p.set_defaults(fn=_cmd_evolve)

    p = sub.add_parser("classify", help="classify one datum",
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       epilog=_GRAMMAR_EPILOG)
    _add_family_flags(p)
    _add_solver_flags(p)
    _add_classifier_flags(p)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("sweep", help="classify a rectangular (A,B) grid",
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       epilog=_GRAMMAR_EPILOG)
    p.add_argument("--preset", default=None,
                   help=f"figure preset: {', '.join(PRESETS)}")
    p.add_argument("--config", default=None,
                   help="flat key = value config file")
    _add_family_flags(p)
    _add_solver_flags(p)
    _add_classifier_flags(p)
    p.add_argument("--a-min", type=float, default=None)
    p.add_argument("--a-max", type=float, default=None)
    p.add_argument("--b-min", type=float, default=None)
    p.add_argument("--b-max", type=float, default=None)
    p.add_argument("--a-count", type=int, default=None)
    p.add_argument("--b-count", type=int, default=None)
    p.add_argument("--c", default=None,
                   help="comma-separated C values for 3-parameter scans")
    p.add_argument("--scan", action="store_true",
                   help="emit one records file per C value")
    p.add_argument("--workers", type=int, default=None,
                   help="process pool size (default $NLKG_WORKERS or 1)")
    p.add_argument("--checkpoint", default=None,
                   help="checkpoint log path (default <out>/checkpoint.log)")
    p.add_argument("--flush-every", type=int, default=None)
    p.add_argument("--ground-tol", type=float, default=None)
    p.add_argument("--progress", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--out", default="nlkg_out")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("bisect", help="refine the boundary along a segment",
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       epilog=_GRAMMAR_EPILOG)
    p.add_argument("--from", dest="p_from", required=True,
                   help="blowup endpoint 'a,b'")
    p.add_argument("--to", required=True, help="dispersive endpoint 'a,b'")
    _add_family_flags(p)
    _add_solver_flags(p)
    _add_classifier_flags(p)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--precision", type=float, default=0.0,
                   help="stop when the bracket width drops below this")
    p.add_argument("--max-iter", type=int, default=52)
    p.add_argument("--ringing", action="store_true",
                   help="record the metastability trace at the last midpoint")
    p.add_argument("--r-probe", type=float, default=0.0)
    p.add_argument("--out", default="nlkg_out")
    p.set_defaults(fn=_cmd_bisect)

    p = sub.add_parser("render", help="render a records CSV to PPM")
    p.add_argument("--records", required=True)
    p.add_argument("--mode", choices=[FILL_UNDER, CONTOUR], default=FILL_UNDER)
    p.add_argument("--palette", default=None,
                   help="overrides, e.g. dispersive=d62828,ps_plus=009933")
    p.add_argument("--out", default="nlkg_out")
    p.set_defaults(fn=_cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _CliError as exc:
        print(f"nlkg: configuration error: {exc}", file=sys.stderr)
        return 1
    except (DslError, ValueError, KeyError) as exc:
        print(f"nlkg: configuration error: {exc}", file=sys.stderr)
        return 1
    except CheckpointError as exc:
        print(f"nlkg: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"nlkg: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
