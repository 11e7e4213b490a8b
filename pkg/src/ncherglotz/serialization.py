"""JSON encodings of matrices, representations, points, measures, models and moment tables.

Complex numbers are ``[re, im]`` pairs; a matrix is
``{"rows": r, "cols": c, "data": [[[re, im], ...], ...]}`` in row-major order.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .algebra import FULL, AlgebraDescriptor, FreePolynomial, LeveledElement, UnitalEmbedding
from .classical import CircleMeasure
from .errors import StructureError
from .freefunc import HerglotzRepresentation
from .lurking import ModelData, ModelSample
from .moments import MomentTable


def complex_to_json(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def complex_from_json(obj) -> complex:
    if isinstance(obj, (int, float)):
        return complex(obj)
    if not (isinstance(obj, (list, tuple)) and len(obj) == 2):
        raise StructureError("JsonMatrix: complex entries are [re, im] pairs")
    return complex(float(obj[0]), float(obj[1]))


def matrix_to_json(M) -> dict:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "data": [[[float(z.real), float(z.imag)] for z in row] for row in M],
    }


def matrix_from_json(obj, name: str = "JsonMatrix") -> np.ndarray:
    if not isinstance(obj, dict) or not {"rows", "cols", "data"} <= obj.keys():
        raise StructureError(f"{name}: expected an object with rows, cols, data")
    rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    if len(data) != rows or any(len(r) != cols for r in data):
        raise StructureError(f"{name}: shape consistency (rows={rows}, cols={cols})")
    M = np.array([[complex_from_json(z) for z in r] for r in data], dtype=complex).reshape(rows, cols)
    if not np.all(np.isfinite(M)):
        raise StructureError(f"{name}: finite entries")
    return M


def algebra_to_json(algebra: AlgebraDescriptor) -> dict:
    return {"kind": algebra.kind, "k": algebra.k}


def algebra_from_json(obj) -> AlgebraDescriptor:
    try:
        return AlgebraDescriptor(str(obj["kind"]), int(obj["k"]))
    except (KeyError, TypeError) as exc:
        raise StructureError("AlgebraDescriptor: expected {\"kind\", \"k\"}") from exc


def embedding_to_json(alpha: UnitalEmbedding) -> dict:
    out = {"ambient_dim": alpha.ambient_dim}
    if alpha.algebra.kind == FULL:
        out["multiplicity"] = alpha.multiplicity
        out["W"] = matrix_to_json(alpha.W)
    else:
        out["projections"] = [matrix_to_json(P) for P in alpha.projections]
    return out


def embedding_from_json(algebra: AlgebraDescriptor, obj) -> UnitalEmbedding:
    """Accepts the full form or the shorthand ``{"natural": s}``."""
    if "natural" in obj:
        return UnitalEmbedding.natural(algebra, int(obj["natural"]))
    m = int(obj["ambient_dim"])
    if algebra.kind == FULL:
        return UnitalEmbedding(
            algebra, m, W=matrix_from_json(obj["W"], "embedding.W"), multiplicity=int(obj["multiplicity"])
        )
    Ps = tuple(matrix_from_json(P, "embedding.projection") for P in obj["projections"])
    return UnitalEmbedding(algebra, m, projections=Ps)


def rep_to_json(rep: HerglotzRepresentation) -> dict:
    out = {
        "algebra": algebra_to_json(rep.algebra),
        "embedding": embedding_to_json(rep.alpha),
        "U": matrix_to_json(rep.U),
        "V": matrix_to_json(rep.V),
    }
    if rep.offset_T is not None:
        out["T"] = matrix_to_json(rep.offset_T)
    return out


def rep_from_json(obj) -> HerglotzRepresentation:
    try:
        algebra = algebra_from_json(obj["algebra"])
        alpha = embedding_from_json(algebra, obj["embedding"])
        U = matrix_from_json(obj["U"], "HerglotzRepresentation.U")
        V = matrix_from_json(obj["V"], "HerglotzRepresentation.V")
    except KeyError as exc:
        raise StructureError(f"HerglotzRepresentation: missing field {exc}") from None
    T = matrix_from_json(obj["T"], "HerglotzRepresentation.T") if obj.get("T") is not None else None
    return HerglotzRepresentation(alpha, U, V, T)


def point_to_json(X: LeveledElement) -> dict:
    return {"algebra": algebra_to_json(X.algebra), "level": X.level, "X": matrix_to_json(X.matrix)}


def point_from_json(obj, algebra: AlgebraDescriptor | None = None) -> LeveledElement:
    """A point may omit its algebra when one is supplied (e.g. by the representation)."""
    if "algebra" in obj:
        algebra = algebra_from_json(obj["algebra"])
    if algebra is None:
        raise StructureError("LeveledElement: algebra required")
    M = matrix_from_json(obj["X"], "LeveledElement.X")
    level = int(obj.get("level", M.shape[0] // algebra.k))
    return LeveledElement(algebra, level, M)


def delta_to_json(delta: FreePolynomial) -> dict:
    terms = []
    for coeff, factors in delta.terms:
        terms.append({
            "coeff": complex_to_json(coeff),
            "factors": [f if isinstance(f, str) else matrix_to_json(f) for f in factors],
        })
    return {"terms": terms}


def delta_from_json(obj) -> FreePolynomial:
    if obj is None:
        return FreePolynomial.identity()
    terms = []
    for t in obj["terms"]:
        factors = [f if isinstance(f, str) else matrix_from_json(f, "FreePolynomial coefficient") for f in t["factors"]]
        terms.append((complex_from_json(t.get("coeff", 1.0)), factors))
    return FreePolynomial(tuple(terms))


def measure_to_json(mu: CircleMeasure) -> dict:
    return {"atoms": mu.atoms}


def measure_from_json(obj) -> CircleMeasure:
    try:
        return CircleMeasure.from_atoms(obj["atoms"])
    except (KeyError, TypeError) as exc:
        raise StructureError("CircleMeasure: expected {\"atoms\": [{\"theta\", \"weight\"}, ...]}") from exc


def model_to_json(model: ModelData) -> dict:
    return {
        "algebra": algebra_to_json(model.alpha.algebra),
        "embedding": embedding_to_json(model.alpha),
        "output_dim": model.output_dim,
        "delta": delta_to_json(model.delta),
        "samples": [
            {
                "level": s.X.level,
                "X": matrix_to_json(s.X.matrix),
                "h": matrix_to_json(s.h),
                "v": matrix_to_json(s.v),
                "u": matrix_to_json(s.u_model),
            }
            for s in model.samples
        ],
    }


def model_from_json(obj) -> ModelData:
    algebra = algebra_from_json(obj["algebra"])
    alpha = embedding_from_json(algebra, obj["embedding"])
    samples = []
    for s in obj["samples"]:
        X = LeveledElement(algebra, int(s["level"]), matrix_from_json(s["X"], "ModelData.X"))
        samples.append(ModelSample(
            X,
            matrix_from_json(s["h"], "ModelData.h"),
            matrix_from_json(s["v"], "ModelData.v"),
            matrix_from_json(s["u"], "ModelData.u"),
        ))
    return ModelData(delta_from_json(obj.get("delta")), alpha, int(obj["output_dim"]), tuple(samples))


def moment_table_to_json(table: MomentTable) -> dict:
    return {
        "algebra": algebra_to_json(table.algebra),
        "output_dim": table.output_dim,
        "max_length": table.max_length,
        "letters": {name: matrix_to_json(b) for name, b in table.letters.items()},
        "entries": [{"word": list(w), "value": matrix_to_json(v)} for w, v in table.entries.items()],
    }


def moment_table_from_json(obj) -> MomentTable:
    algebra = algebra_from_json(obj["algebra"])
    letters = {name: matrix_from_json(b, f"letter {name}") for name, b in obj.get("letters", {}).items()}
    entries = {tuple(e["word"]): matrix_from_json(e["value"], "MomentTable entry") for e in obj["entries"]}
    return MomentTable(algebra, int(obj["output_dim"]), letters, entries, int(obj["max_length"]))


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_plain) + "\n"


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise StructureError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from None


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
