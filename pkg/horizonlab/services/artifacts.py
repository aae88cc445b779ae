"""Reading inputs and writing reports: metric and mesh files, JSON and CSV artifacts"""

import math
import os
import re
import tempfile
from pathlib import Path
from typing import Sequence, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from horizonlab.core.errors import InputError
from horizonlab.models.requests import GridSamples, HarmonicCoeffs, MeshFile, MetricFile
from horizonlab.services.sphere_field import ScalarField, get_grid
from horizonlab.services.trimesh import TriMeshSurface
from horizonlab.utils.logger import setup_logger

logger = setup_logger(__name__)

Model = TypeVar("Model", bound=BaseModel)

_MASS = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(x?)\s*$")


def load_model(path: str, model: Type[Model]) -> Model:
    """Parse a JSON file into ``model``; schema errors become InputError with field diagnostics"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        logger.error(f"Cannot read {path}: {str(e)}")
        raise InputError(f"cannot read input file: {path}", {"reason": str(e)})
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        fields = [
            {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in e.errors()
        ]
        logger.error(f"Invalid {model.__name__} in {path}: {len(fields)} error(s)")
        raise InputError(f"invalid {model.__name__} file: {path}", {"errors": fields})


# ----------------------------------------------------------------------
# metrics
# ----------------------------------------------------------------------


def metric_from_record(record: MetricFile) -> ScalarField:
    """The log conformal factor w of a metric file"""
    L = record.bandlimit
    w = record.w
    if isinstance(w, GridSamples):
        grid = get_grid(L, zonal=w.nlon == 1)
        return ScalarField(grid, np.asarray(w.values, dtype=float).reshape(w.nlat, w.nlon))

    zonal = all(m == 0 for _, m, _ in w.coeffs)
    grid = get_grid(L, zonal=zonal)
    coeffs = np.zeros((L + 1, grid.mmax + 1), dtype=complex)
    for l, m, value in w.coeffs:
        if m == 0:
            coeffs[l, 0] += value
        elif m > 0:
            coeffs[l, m] += value / math.sqrt(2.0)
        else:
            coeffs[l, -m] -= 1j * value / math.sqrt(2.0)
    return ScalarField.from_coeffs(grid, coeffs)


def metric_to_record(w: ScalarField, tol: float = 0.0) -> MetricFile:
    """Real orthonormal harmonic coefficients of w: P, sqrt(2) P cos, sqrt(2) P sin"""
    c = w.coeffs
    triples = []
    for l in range(c.shape[0]):
        for m in range(min(l, c.shape[1] - 1) + 1):
            if m == 0:
                candidates = [(0, c[l, 0].real)]
            else:
                candidates = [(m, math.sqrt(2.0) * c[l, m].real), (-m, -math.sqrt(2.0) * c[l, m].imag)]
            triples += [(l, mm, float(v)) for mm, v in candidates if abs(v) > tol]
    return MetricFile(bandlimit=w.grid.bandlimit, w=HarmonicCoeffs(coeffs=triples))


def load_metric(path: str) -> ScalarField:
    return metric_from_record(load_model(path, MetricFile))


def load_mesh(path: str) -> TriMeshSurface:
    return TriMeshSurface.from_file(load_model(path, MeshFile))


# ----------------------------------------------------------------------
# outputs
# ----------------------------------------------------------------------


def _atomic_write(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, model: BaseModel) -> None:
    _atomic_write(path, model.model_dump_json(by_alias=True, indent=2))
    logger.info(f"Wrote {type(model).__name__} to {path}")


def write_csv(path: str, header: Sequence[str], rows: np.ndarray) -> None:
    """Comma-separated values with 17 significant digits"""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != len(header):
        raise InputError("CSV row width does not match the header", {"columns": len(header), "width": rows.shape[1]})
    lines = [",".join(header)]
    lines += [",".join("%.17g" % v for v in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")
    logger.info(f"Wrote {rows.shape[0]} CSV rows to {path}")


def parse_mass(text: str, hawking: float) -> float:
    """'0.55' is an absolute mass, '1.05x' a multiple of the Hawking mass"""
    match = _MASS.match(str(text))
    if not match:
        raise InputError("mass must be a number or a multiple like 1.05x", {"mass": text})
    value = float(match.group(1))
    return value * hawking if match.group(2) else value
