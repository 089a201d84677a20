"""Parameter sweeps: classify every point of an (A,B) grid, in parallel.

Each grid point is an independent evolution, so the sweep distributes
points over a process pool with dynamic load balancing (decision times
near the scattering boundary vary by orders of magnitude). Results are
deterministic: record content does not depend on worker count or
scheduling, and the final ordering is row-major in (C, B, A).

Progress is checkpointed to an append-only log, flushed in batches that
each end with a checksum line. Resuming skips completed points and yields
identical records; a checkpoint whose complete batches fail their
checksums (or that belongs to a different configuration) is refused.
"""

from __future__ import annotations

import hashlib
import multiprocessing
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels
from .classify import Classification, ClassifierConfig, Trigger, Verdict, \
    classify_evolution
from .datafn import BuiltinFamily, DataExpr, builtin_family, parse
from .groundstate import GroundState, PsMembership, PsRegion, \
    compute_ground_state, ps_classify
from .scheme import RadialGrid, SolverConfig


class CheckpointError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    """One rectangular (A,B) sweep, optionally scanned over C values.

    family is a builtin name or a pair of expression strings (u0, u1);
    add_q / mul_q default to the builtin's flags and to False for custom
    expression pairs.
    """

    family: Union[str, tuple]
    a_range: tuple
    b_range: tuple
    a_count: int = 121
    b_count: int = 121
    c_values: Optional[tuple] = None
    add_q: Optional[bool] = None
    mul_q: Optional[bool] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    workers: int = 1
    checkpoint_path: Optional[str] = None
    flush_every: int = 50
    ground_tol: float = 1e-12

    def __post_init__(self):
        if self.a_count < 2 or self.b_count < 2:
            raise ValueError("a_count and b_count must be at least 2")
        if not (self.a_range[0] < self.a_range[1]
                and self.b_range[0] < self.b_range[1]):
            raise ValueError("parameter ranges must be nondegenerate")
        if self.c_values is not None and len(self.c_values) == 0:
            raise ValueError("c_values must be None or non-empty")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class SweepRecord:
    """Classification of one grid point, self-describing."""

    a: float
    b: float
    c: Optional[float]
    classification: Classification
    ps: PsMembership
    wall_time: float


@dataclass(frozen=True)
class _ResolvedFamily:
    u0: DataExpr
    u1: DataExpr
    add_q: bool
    mul_q: bool


def resolve_family(family, add_q=None, mul_q=None) -> _ResolvedFamily:
    if isinstance(family, str):
        fam: BuiltinFamily = builtin_family(family)
        return _ResolvedFamily(u0=fam.u0, u1=fam.u1,
                               add_q=fam.add_q if add_q is None else add_q,
                               mul_q=fam.mul_q if mul_q is None else mul_q)
    u0_text, u1_text = family
    return _ResolvedFamily(u0=parse(u0_text), u1=parse(u1_text),
                           add_q=bool(add_q), mul_q=bool(mul_q))


def sample_data(fam: _ResolvedFamily, grid: RadialGrid, ground_profile,
                a: float, b: float, c: float = 0.0):
    """Evaluate the family's (u0, u1) on the grid, applying the Q flags."""
    u0 = fam.u0.sample(grid.r, A=a, B=b, C=c)
    u1 = fam.u1.sample(grid.r, A=a, B=b, C=c)
    if fam.mul_q:
        u0 *= ground_profile
        u1 *= ground_profile
    if fam.add_q:
        u0 += ground_profile
    return u0, u1


# worker-process context, installed once per process by the pool initializer
_CTX = None


@dataclass
class _SweepContext:
    fam: _ResolvedFamily
    a_values: np.ndarray
    b_values: np.ndarray
    c_values: tuple
    has_c: bool
    solver: SolverConfig
    classifier: ClassifierConfig
    grid: RadialGrid
    ground: GroundState


def _init_worker(ctx: _SweepContext) -> None:
    global _CTX
    _CTX = ctx


def _point_params(ctx: _SweepContext, idx: int):
    per_c = ctx.b_values.size * ctx.a_values.size
    ci, rest = divmod(idx, per_c)
    bi, ai = divmod(rest, ctx.a_values.size)
    c = ctx.c_values[ci]
    return float(ctx.a_values[ai]), float(ctx.b_values[bi]), c


def _classify_point(idx: int):
    ctx = _CTX
    a, b, c = _point_params(ctx, idx)
    t0 = time.perf_counter()
    u0, u1 = sample_data(ctx.fam, ctx.grid, ctx.ground.profile, a, b,
                         c if c is not None else 0.0)
    cls = classify_evolution(u0, u1, ctx.solver, ctx.classifier, grid=ctx.grid)
    ps = ps_classify(u0, u1, ctx.ground, ctx.grid)
    wall = time.perf_counter() - t0
    return idx, _encode_record(a, b, c, cls, ps, wall)


# ---------------------------------------------------------------------------
# checkpoint log: record lines grouped into batches, each batch ends with a
# checksum line "#sha256 <hex>"; the header pins the config fingerprint.

_CKPT_MAGIC = "#nlkg-checkpoint 1"
_NFIELDS = 14


def _fmt(x: float) -> str:
    return repr(float(x))


def _encode_record(a, b, c, cls: Classification, ps: PsMembership,
                   wall: float) -> str:
    return ",".join([
        _fmt(a), _fmt(b), "" if c is None else _fmt(c),
        cls.verdict.value, cls.trigger.value, _fmt(cls.decision_time),
        str(cls.steps_taken), _fmt(cls.peak_norm), _fmt(cls.final_norm),
        ps.region.value, _fmt(ps.energy), _fmt(ps.j_of_q), _fmt(ps.k_of_u0),
        _fmt(wall),
    ])


def _decode_record(line: str) -> SweepRecord:
    parts = line.split(",")
    if len(parts) != _NFIELDS:
        raise ValueError(f"malformed record line ({len(parts)} fields)")
    cls = Classification(verdict=Verdict(parts[3]), trigger=Trigger(parts[4]),
                         decision_time=float(parts[5]),
                         steps_taken=int(parts[6]), peak_norm=float(parts[7]),
                         final_norm=float(parts[8]))
    ps = PsMembership(energy=float(parts[10]), j_of_q=float(parts[11]),
                      k_of_u0=float(parts[12]), region=PsRegion(parts[9]))
    return SweepRecord(a=float(parts[0]), b=float(parts[1]),
                       c=float(parts[2]) if parts[2] else None,
                       classification=cls, ps=ps, wall_time=float(parts[13]))


def _config_fingerprint(cfg: SweepConfig) -> str:
    fam = resolve_family(cfg.family, cfg.add_q, cfg.mul_q)
    parts = [
        str(fam.u0), str(fam.u1), str(fam.add_q), str(fam.mul_q),
        repr(tuple(map(float, cfg.a_range))), repr(tuple(map(float, cfg.b_range))),
        str(cfg.a_count), str(cfg.b_count),
        repr(None if cfg.c_values is None else tuple(map(float, cfg.c_values))),
        repr(cfg.solver), repr(cfg.classifier), _fmt(cfg.ground_tol),
    ]
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def _load_checkpoint(path: Path, fingerprint: str) -> tuple[dict, int]:
    """Return ({index: record line}, valid_byte_length).

    Only checksum-validated batches count; a trailing group without its
    checksum line (an interrupted flush) is dropped, and valid_byte_length
    marks where it starts so the writer can truncate it away before
    appending. Anything else inconsistent raises CheckpointError.
    """
    done: dict[int, str] = {}
    try:
        data = path.read_text()
    except (UnicodeDecodeError, OSError) as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint ({exc})") from exc
    lines = data.splitlines(keepends=True)
    if not lines:
        return done, 0
    head = lines[0].split()
    if " ".join(head[:2]) != _CKPT_MAGIC or len(head) != 3:
        raise CheckpointError(f"{path}: not a sweep checkpoint")
    if head[2] != fingerprint:
        raise CheckpointError(f"{path}: checkpoint belongs to a different "
                              f"sweep configuration ({head[2]} != {fingerprint})")
    valid_len = len(lines[0].encode())
    batch: list[tuple[int, str]] = []
    batch_len = 0
    digest = hashlib.sha256()
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\n")
        if line.startswith("#sha256 "):
            if digest.hexdigest() != line.split(" ", 1)[1].strip():
                raise CheckpointError(f"{path}:{lineno}: batch checksum mismatch")
            done.update(batch)
            valid_len += batch_len + len(raw.encode())
            batch = []
            batch_len = 0
            digest = hashlib.sha256()
            continue
        try:
            idx_text, rest = line.split(":", 1)
            idx = int(idx_text)
            _decode_record(rest)
        except (ValueError, KeyError) as exc:
            if lineno == len(lines):  # torn tail from a crash mid-write
                break
            raise CheckpointError(f"{path}:{lineno}: corrupt record "
                                  f"line ({exc})") from exc
        batch.append((idx, rest))
        batch_len += len(raw.encode())
        digest.update((line + "\n").encode())
    # records after the last checksum line are an incomplete flush: dropped
    return done, valid_len


class _CheckpointWriter:
    def __init__(self, path: Path, fingerprint: str,
                 truncate_to: int | None = None):
        self.path = path
        self.buffer: list[str] = []
        self.digest = hashlib.sha256()
        if truncate_to is None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(f"{_CKPT_MAGIC} {fingerprint}\n")
        elif path.stat().st_size != truncate_to:
            # drop an interrupted flush before appending fresh batches
            os.truncate(path, truncate_to)

    def add(self, idx: int, encoded: str) -> None:
        line = f"{idx}:{encoded}"
        self.buffer.append(line)
        self.digest.update((line + "\n").encode())

    def flush(self) -> None:
        if not self.buffer:
            return
        text = "\n".join(self.buffer) + f"\n#sha256 {self.digest.hexdigest()}\n"
        with open(self.path, "a") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        self.buffer = []
        self.digest = hashlib.sha256()


def _make_context(cfg: SweepConfig) -> _SweepContext:
    fam = resolve_family(cfg.family, cfg.add_q, cfg.mul_q)
    grid = cfg.solver.make_grid()
    ground = compute_ground_state(cfg.ground_tol, grid)
    return _SweepContext(
        fam=fam,
        a_values=np.linspace(cfg.a_range[0], cfg.a_range[1], cfg.a_count),
        b_values=np.linspace(cfg.b_range[0], cfg.b_range[1], cfg.b_count),
        c_values=cfg.c_values if cfg.c_values is not None else (None,),
        has_c=cfg.c_values is not None,
        solver=cfg.solver, classifier=cfg.classifier, grid=grid, ground=ground)


def run_sweep(cfg: SweepConfig, progress=None) -> list[SweepRecord]:
    """Classify every grid point; returns records in row-major (C,B,A) order.

    progress, when given, is called as progress(done_count, total) after
    every completed point.
    """
    ctx = _make_context(cfg)
    total = len(ctx.c_values) * cfg.b_count * cfg.a_count
    fingerprint = _config_fingerprint(cfg)

    done: dict[int, str] = {}
    writer = None
    if cfg.checkpoint_path is not None:
        path = Path(cfg.checkpoint_path)
        valid_len = None
        if path.exists():
            done, valid_len = _load_checkpoint(path, fingerprint)
        writer = _CheckpointWriter(path, fingerprint, truncate_to=valid_len)

    pending = [i for i in range(total) if i not in done]
    if progress is not None and done:
        progress(len(done), total)

    if pending:
        _kernels.warm_up()  # compile before forking so children inherit

        def consume(result):
            idx, encoded = result
            done[idx] = encoded
            if writer is not None:
                writer.add(idx, encoded)
                if len(writer.buffer) >= cfg.flush_every:
                    writer.flush()
            if progress is not None:
                progress(len(done), total)

        if cfg.workers > 1:
            mp = multiprocessing.get_context("fork")
            with mp.Pool(cfg.workers, initializer=_init_worker,
                         initargs=(ctx,)) as pool:
                for result in pool.imap_unordered(_classify_point, pending,
                                                  chunksize=1):
                    consume(result)
        else:
            _init_worker(ctx)
            for idx in pending:
                consume(_classify_point(idx))
        if writer is not None:
            writer.flush()

    return [_decode_record(done[i]) for i in range(total)]


def scan_third_parameter(cfg: SweepConfig, progress=None):
    """Run one section per C value; returns [(c, records), ...].

    Delegates to run_sweep with a single-element c_values per section;
    checkpoints (when enabled) get the C value embedded in the filename.
    """
    if not cfg.c_values:
        raise ValueError("scan_third_parameter needs c_values")
    sections = []
    for c in cfg.c_values:
        ckpt = cfg.checkpoint_path
        if ckpt is not None:
            p = Path(ckpt)
            ckpt = str(p.with_name(f"{p.stem}_C{c:g}{p.suffix}"))
        sub = replace(cfg, c_values=(c,), checkpoint_path=ckpt)
        sections.append((c, run_sweep(sub, progress=progress)))
    return sections


# Figure presets. The paper reports no ranges or resolutions (chosen there
# by trial and error, at supercomputer scale for the zooms); these frame
# the interesting features at desk scale and are recorded in run manifests.
_DESK_SOLVER = SolverConfig(dr=2e-2, t_final=60.0, r_interest=5.0)

PRESETS: dict[str, dict] = {
    "fig1_1_left": dict(family="fig1_1_left", a_range=(-3.0, 3.0),
                        b_range=(-3.0, 3.0)),
    "fig1_1_right": dict(family="fig1_1_right", a_range=(-2.0, 2.0),
                         b_range=(-2.0, 2.0)),
    "fig1_2_left": dict(family="fig1_2_left", a_range=(-6.0, 6.0),
                        b_range=(-6.0, 6.0)),
    "fig1_2_right": dict(family="fig1_2_right", a_range=(-4.0, 4.0),
                         b_range=(-4.0, 4.0)),
    "fig1_3_left": dict(family="fig1_3_left", a_range=(-12.0, 12.0),
                        b_range=(-12.0, 12.0)),
    "fig1_3_right": dict(family="fig1_3_right", a_range=(-8.0, 8.0),
                         b_range=(-16.0, 16.0)),
    "fig1_4": dict(family="fig1_4", a_range=(-6.0, 6.0), b_range=(-6.0, 6.0)),
    "fig1_6_left": dict(family="fig1_6_left", a_range=(-14.0, 14.0),
                        b_range=(-10.0, 10.0)),
    # the curved section's parameter box is the one reported for it
    "curve1": dict(family="curve1", a_range=(-6.0, 6.0), b_range=(-4.0, 4.0)),
    "3param": dict(family="3param", a_range=(-4.0, 4.0),
                   b_range=(-4.0, 4.0), c_values=(9.70, 9.72, 9.74)),
}


def preset_config(name: str, **overrides) -> SweepConfig:
    """SweepConfig for a named figure preset, with keyword overrides."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    kwargs = dict(PRESETS[name])
    kwargs.setdefault("solver", _DESK_SOLVER)
    kwargs.update(overrides)
    return SweepConfig(**kwargs)
