"""Section images and tabular output for sweep records.

One pixel per grid point, A horizontal (increasing rightward), B vertical
(increasing upward), no resampling. The Payne-Sattinger overlay either
replaces the verdict color inside the PS regions (fill-under: the verdict
layer is painted around the overlay, so the dispersive region visibly
contains PS+ and the blowup region PS-) or marks only their boundaries
(contour). Indecisive points get their own gray so the overlay greens and
blues stay unambiguous.

Rasters are written as binary PPM (P6), chosen for byte-determinism with
zero dependencies; records go to CSV with a fixed header. Both writers are
pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import Classification, Trigger, Verdict
from .groundstate import PsMembership, PsRegion
from .sweep import SweepRecord, _fmt

FILL_UNDER = "fill-under"
CONTOUR = "contour"

CSV_HEADER = "a,b,c,verdict,trigger,decision_time,peak_norm,ps_region,energy,K"


@dataclass(frozen=True)
class Palette:
    dispersive: tuple = (214, 40, 40)     # red
    blowup: tuple = (255, 255, 255)       # white
    indecisive: tuple = (128, 128, 128)   # gray
    ps_plus: tuple = (0, 153, 51)         # green
    ps_minus: tuple = (41, 81, 224)       # blue
    overlay_mode: str = FILL_UNDER

    def __post_init__(self):
        colors = [self.dispersive, self.blowup, self.indecisive,
                  self.ps_plus, self.ps_minus]
        if len({tuple(c) for c in colors}) != 5:
            raise ValueError("palette colors must be pairwise distinct")
        if self.overlay_mode not in (FILL_UNDER, CONTOUR):
            raise ValueError(f"unknown overlay mode {self.overlay_mode!r}")


_VERDICT_COLOR = {
    Verdict.DISPERSIVE: "dispersive",
    Verdict.BLOWUP: "blowup",
    Verdict.INDECISIVE: "indecisive",
}


def _section_axes(records: list[SweepRecord]):
    cs = {r.c for r in records}
    if len(cs) != 1:
        raise ValueError(f"records span {len(cs)} C values; render one section"
                         " at a time")
    a_values = np.array(sorted({r.a for r in records}))
    b_values = np.array(sorted({r.b for r in records}))
    index = {}
    for r in records:
        key = (r.a, r.b)
        if key in index:
            raise ValueError(f"duplicate record for (A,B) = {key}")
        index[key] = r
    missing = [(a, b) for b in b_values for a in a_values
               if (a, b) not in index]
    if missing:
        shown = ", ".join(f"({a:g},{b:g})" for a, b in missing[:12])
        more = "" if len(missing) <= 12 else f" and {len(missing) - 12} more"
        raise ValueError(f"incomplete rectangular grid; missing {shown}{more}")
    return a_values, b_values, index


def render_section(records: list[SweepRecord],
                   palette: Palette | None = None) -> np.ndarray:
    """Raster (height, width, 3) uint8 image of one section's records."""
    pal = palette or Palette()
    a_values, b_values, index = _section_axes(records)
    w, h = a_values.size, b_values.size
    img = np.zeros((h, w, 3), dtype=np.uint8)
    ps = np.zeros((h, w), dtype=np.int8)  # 0 none, +1 PS+, -1 PS-
    for bi, b in enumerate(b_values):
        row = h - 1 - bi  # B increases upward
        for ai, a in enumerate(a_values):
            rec = index[(a, b)]
            img[row, ai] = getattr(pal, _VERDICT_COLOR[rec.classification.verdict])
            if rec.ps.region is PsRegion.PS_PLUS:
                ps[row, ai] = 1
            elif rec.ps.region is PsRegion.PS_MINUS:
                ps[row, ai] = -1

    if pal.overlay_mode == FILL_UNDER:
        img[ps == 1] = pal.ps_plus
        img[ps == -1] = pal.ps_minus
    else:  # contour: only pixels with a differing in-image neighbor
        for sign, color in ((1, pal.ps_plus), (-1, pal.ps_minus)):
            member = ps == sign
            edge = np.zeros_like(member)
            edge[1:, :] |= member[1:, :] & ~member[:-1, :]
            edge[:-1, :] |= member[:-1, :] & ~member[1:, :]
            edge[:, 1:] |= member[:, 1:] & ~member[:, :-1]
            edge[:, :-1] |= member[:, :-1] & ~member[:, 1:]
            img[edge] = color
    return img


def write_ppm(image: np.ndarray, path) -> None:
    """Binary P6, one byte per channel, rows top to bottom."""
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("image must be (height, width, 3) uint8")
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P6":
            raise ValueError(f"{path}: not a binary PPM")
        w, h = map(int, fh.readline().split())
        maxval = int(fh.readline())
        if maxval != 255:
            raise ValueError(f"{path}: unsupported maxval {maxval}")
        data = fh.read(w * h * 3)
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3)


def _record_row(r: SweepRecord) -> str:
    return ",".join([
        _fmt(r.a), _fmt(r.b), "" if r.c is None else _fmt(r.c),
        r.classification.verdict.value, r.classification.trigger.value,
        _fmt(r.classification.decision_time),
        _fmt(r.classification.peak_norm), r.ps.region.value,
        _fmt(r.ps.energy), _fmt(r.ps.k_of_u0),
    ])


def write_csv(records: list[SweepRecord], path) -> None:
    """Records file: fixed header, one row per grid point, byte-deterministic."""
    lines = [CSV_HEADER] + [_record_row(r) for r in records]
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> list[SweepRecord]:
    """Inverse of write_csv; fields absent from the CSV come back as NaN/0."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: missing records header")
    records = []
    for line in lines[1:]:
        p = line.split(",")
        if len(p) != 10:
            raise ValueError(f"{path}: malformed row {line!r}")
        cls = Classification(verdict=Verdict(p[3]), trigger=Trigger(p[4]),
                             decision_time=float(p[5]), steps_taken=0,
                             peak_norm=float(p[6]), final_norm=float("nan"))
        ps = PsMembership(energy=float(p[8]), j_of_q=float("nan"),
                          k_of_u0=float(p[9]), region=PsRegion(p[7]))
        records.append(SweepRecord(a=float(p[0]), b=float(p[1]),
                                   c=float(p[2]) if p[2] else None,
                                   classification=cls, ps=ps, wall_time=0.0))
    return records
