"""Plain-text file formats and the bundled spherical designs.

Every format starts with one ``#`` header line carrying ``key=value`` fields.
Numbers are written with 17 significant digits, so round trips are lossless.
"""
from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

import numpy as np

from .framelet import FrameletPyramid
from .sht import HarmonicCoeffs, PointSet, lm_arrays

FMT = "%.17g"
SHIPPED_DEGREES = (16, 32, 64)


class FormatError(ValueError):
    """A file does not follow the expected text format."""


def _header(line: str, kind: str) -> dict[str, str]:
    m = re.match(r"#\s*(\w+)\s*(.*)$", line.strip())
    if not m or m.group(1) != kind:
        raise FormatError(f"expected a '# {kind} ...' header, got {line.strip()!r}")
    fields = {}
    for tok in m.group(2).split():
        if "=" not in tok:
            raise FormatError(f"malformed header field {tok!r}")
        k, v = tok.split("=", 1)
        fields[k] = v
    return fields


def _read_lines(path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(str(exc)) from exc
    return [ln for ln in text.splitlines() if ln.strip()]


def _int_field(fields, key, required=True):
    if key not in fields:
        if required:
            raise FormatError(f"header is missing {key}=")
        return None
    try:
        return int(fields[key])
    except ValueError as exc:
        raise FormatError(f"{key}= must be an integer") from exc


def _body(lines, ncols) -> np.ndarray:
    try:
        arr = np.array([[float(x) for x in ln.split()] for ln in lines], dtype=float)
    except ValueError as exc:
        raise FormatError(f"non-numeric value: {exc}") from exc
    if arr.size == 0:
        return arr.reshape(0, ncols)
    if arr.ndim != 2 or arr.shape[1] != ncols:
        raise FormatError(f"expected {ncols} columns per line")
    return arr


def _fmt_header(kind, **fields):
    return "# " + kind + "".join(f" {k}={v}" for k, v in fields.items() if v is not None)


def write_points(path, points: PointSet, t: int | None = None, **extra):
    body = np.column_stack((points.theta, points.phi))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_fmt_header("points", N=len(points), t=t, **extra) + "\n")
        np.savetxt(fh, body, fmt=FMT)


def read_points(path) -> tuple[PointSet, dict[str, str]]:
    lines = _read_lines(path)
    if not lines:
        raise FormatError("empty file")
    fields = _header(lines[0], "points")
    n = _int_field(fields, "N")
    arr = _body(lines[1:], 2)
    if arr.shape[0] != n:
        raise FormatError(f"header says N={n} but found {arr.shape[0]} points")
    if not np.all(np.isfinite(arr)):
        raise FormatError("non-finite angle")
    return PointSet(arr[:, 0], arr[:, 1]), fields


def write_coeffs(path, c: HarmonicCoeffs):
    l, m = lm_arrays(c.t)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_fmt_header("shc", t=c.t) + "\n")
        for li, mi, z in zip(l, m, c.data):
            fh.write(f"{li} {mi} {FMT % z.real} {FMT % z.imag}\n")


def read_coeffs(path) -> HarmonicCoeffs:
    lines = _read_lines(path)
    if not lines:
        raise FormatError("empty file")
    t = _int_field(_header(lines[0], "shc"), "t")
    arr = _body(lines[1:], 4)
    l, m = lm_arrays(t)
    if arr.shape[0] != l.size or np.any(arr[:, 0] != l) or np.any(arr[:, 1] != m):
        raise FormatError("coefficient lines must list (l, m) in index order")
    return HarmonicCoeffs(t, arr[:, 2] + 1j * arr[:, 3])


def write_field(path, values, **extra):
    values = np.asarray(values)
    with open(path, "w", encoding="utf-8") as fh:
        if np.iscomplexobj(values):
            fh.write(_fmt_header("field", N=values.size, complex=1, **extra) + "\n")
            np.savetxt(fh, np.column_stack((values.real, values.imag)), fmt=FMT)
        else:
            fh.write(_fmt_header("field", N=values.size, **extra) + "\n")
            np.savetxt(fh, values.reshape(-1, 1), fmt=FMT)


def read_field(path) -> np.ndarray:
    lines = _read_lines(path)
    if not lines:
        raise FormatError("empty file")
    fields = _header(lines[0], "field")
    n = _int_field(fields, "N")
    if fields.get("complex", "0") == "1":
        arr = _body(lines[1:], 2)
        vals = arr[:, 0] + 1j * arr[:, 1]
    else:
        vals = _body(lines[1:], 1)[:, 0]
    if vals.size != n:
        raise FormatError(f"header says N={n} but found {vals.size} values")
    return vals


def write_grid(path, grid):
    grid = np.asarray(grid, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_fmt_header("grid", m=grid.shape[0], n=grid.shape[1]) + "\n")
        np.savetxt(fh, grid, fmt=FMT)


def read_grid(path) -> np.ndarray:
    lines = _read_lines(path)
    if not lines:
        raise FormatError("empty file")
    fields = _header(lines[0], "grid")
    m, n = _int_field(fields, "m"), _int_field(fields, "n")
    if m < 1 or n < 1:
        raise FormatError("grid dimensions must be positive")
    try:
        vals = np.array(" ".join(lines[1:]).split(), dtype=float)
    except ValueError as exc:
        raise FormatError(f"non-numeric value: {exc}") from exc
    if vals.size != m * n:
        raise FormatError(f"expected {m * n} grid values, found {vals.size}")
    if not np.all(np.isfinite(vals)):
        raise FormatError("grid values must be finite")
    return vals.reshape(m, n)


def write_pyramid(path, pyr: FrameletPyramid, degrees, bank: str):
    """Manifest header, then ``# band j=<j> s=<s>`` sections; ``s=0`` is the coarse ``v``."""
    sizes = [pyr.v.size] + [pyr.w[(j, 1)].size for j in range(len(degrees) - 1)]
    nbands = max(s for _, s in pyr.w) if pyr.w else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_fmt_header("pyramid", levels=len(degrees), n=nbands, bank=bank,
                             t=",".join(map(str, degrees)), N=",".join(map(str, sizes))) + "\n")
        sections = [((0, 0), pyr.v)] + [(k, pyr.w[k]) for k in pyr.bands()]
        for (j, s), vec in sections:
            fh.write(f"# band j={j} s={s}\n")
            np.savetxt(fh, np.column_stack((vec.real, vec.imag)), fmt=FMT)


def read_pyramid(path) -> tuple[FrameletPyramid, dict[str, str]]:
    lines = _read_lines(path)
    if not lines:
        raise FormatError("empty file")
    fields = _header(lines[0], "pyramid")
    sections: dict[tuple[int, int], list[str]] = {}
    current = None
    for ln in lines[1:]:
        if ln.startswith("#"):
            h = _header(ln, "band")
            current = (_int_field(h, "j"), _int_field(h, "s"))
            if current in sections:
                raise FormatError(f"duplicate band {current}")
            sections[current] = []
        elif current is None:
            raise FormatError("data before the first band header")
        else:
            sections[current].append(ln)
    if (0, 0) not in sections:
        raise FormatError("missing coarse band j=0 s=0")

    def vec(key):
        arr = _body(sections[key], 2)
        return arr[:, 0] + 1j * arr[:, 1]

    pyr = FrameletPyramid(vec((0, 0)))
    for key in sections:
        if key != (0, 0):
            pyr.w[key] = vec(key)
    return pyr, fields


def shipped_design_path(t: int) -> Path:
    if t not in SHIPPED_DEGREES:
        raise ValueError(f"no bundled design for t={t}; available: {SHIPPED_DEGREES}")
    return Path(str(resources.files("sphdesign") / "data" / f"spd_t{t}.txt"))


def load_design(t: int) -> PointSet:
    """Bundled spiral-start design of degree ``t`` with ``N = (t + 1)^2``."""
    return read_points(shipped_design_path(t))[0]


def standard_chain(degrees=SHIPPED_DEGREES, check: bool = False):
    from .framelet import QuadratureChain

    return QuadratureChain([load_design(t) for t in degrees], list(degrees), check=check)
