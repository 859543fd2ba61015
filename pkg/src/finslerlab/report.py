"""Check records, the anchor registry and deterministic JSON/CSV output."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .conventions import digest

SCHEMA = "finslerlab/1"
STATUSES = ("pass", "fail", "not-applicable")

# every record names one of these; the strings identify the statement being checked
ANCHORS = {
    "fundamental.identities": "fundamental tensor identities: g(y,y)=F^2, h y=0, l.y=F",
    "torsion.identities": "Cartan torsion symmetric, C y = 0, I.y = 0",
    "randers.matsumoto": "Matsumoto torsion vanishes for every Randers metric",
    "randers.c_reducible": "Randers metrics are C-reducible (C rebuilt from I and h)",
    "randers.landsberg_form": "Landsberg curvature of a Randers metric rebuilt from J and h",
    "randers.norm_bound": "mean Cartan torsion norm bound (n+1)/2 sqrt(1 - sqrt(1 - |beta|^2))",
    "randers.norm_bound_strict": "mean Cartan torsion norm strictly below (n+1)/sqrt(2)",
    "randers.landsberg_iff_berwald": "a Randers metric is Landsberg iff it is Berwald",
    "spray.compatibility": "Cartan horizontal coefficients contracted twice with y give 2G",
    "spray.euler": "N y = 2G and B y = 0",
    "curvature.bridge": "lowered Riemann map equals the hh-curvature contracted twice with y",
    "curvature.rfrak_y_contractions": "y-contractions of the modified Ricci tensor",
    "curvature.flat_implies_rfrak_flat": "R-flat metrics are rfrak-flat",
    "scalar_flag.detection": "flag curvature independent of the transverse edge",
    "scalar_flag.constant_K": "known constant flag curvature of the catalog chart",
    "scalar_flag.h_curvature": "three-index h-curvature of a metric of scalar flag curvature",
    "scalar_flag.rfrak_closed_form": "closed form of rfrak for scalar flag curvature (as published)",
    "scalar_flag.rfrak_closed_form_contracted": "closed form of rfrak for scalar flag curvature (I.dK h term)",
    "scalar_flag.ricci_symmetric": "Ricci tensor is symmetric under scalar flag curvature",
    "scalar_flag.defect_identity": "rfrak_i0 - rfrak_0i = -K F^2 I_i under scalar flag curvature",
    "scalar_flag.asymmetry_witness": "rfrak symmetric iff K = 0 (asymmetry when K != 0, I != 0)",
    "scalar_flag.riemannian_symmetry": "rfrak symmetric when I = 0",
    "berwald.chain": "Berwald: B = 0; if also R-flat then rfrak = 0",
    "geodesic.first_integral": "F(c, c') constant along geodesics",
    "transport.g_invariance": "g_c'(V, V) constant for parallel V",
    "transport.berwald_isometry": "parallel translation on Berwald metrics preserves F",
    "trace.kinematic": "J(t) = dI/dt along a geodesic with parallel V",
    "trace.linear_law": "I(t) = t J(0) + I(0) when J is constant along the geodesic",
    "autodiff.oracle": "jet partials agree with the finite-difference oracle",
}


@dataclass
class Record:
    name: str
    anchor: str
    status: str
    residual: float | None
    tolerance: float | None
    witness: Any = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.anchor not in ANCHORS:
            raise KeyError(f"anchor {self.anchor!r} missing from the registry")
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")

    def to_dict(self) -> dict:
        d = {"name": self.name, "anchor": self.anchor, "status": self.status,
             "residual": self.residual, "tolerance": self.tolerance, "witness": self.witness}
        if self.detail:
            d["detail"] = self.detail
        return d


def check(name, anchor, residual, tolerance, witness=None, **detail) -> Record:
    """Pass iff residual <= tolerance (NaN fails)."""
    residual = float(residual)
    ok = residual <= tolerance
    return Record(name, anchor, "pass" if ok else "fail", residual, float(tolerance), witness, detail)


def not_applicable(name, anchor, reason: str, **detail) -> Record:
    return Record(name, anchor, "not-applicable", None, None, None, {"reason": reason, **detail})


@dataclass
class Report:
    command: str
    config: dict
    records: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def add(self, rec: Record) -> Record:
        self.records.append(rec)
        return rec

    @property
    def failed(self) -> bool:
        return any(r.status == "fail" for r in self.records)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "tool_version": __version__,
            "conventions": digest(),
            "command": self.command,
            "config": self.config,
            "summary": {s: sum(r.status == s for r in self.records) for s in STATUSES},
            "records": [r.to_dict() for r in self.records],
            "data": self.data,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def _fmt_float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return format(v, ".17g")


def _enc(obj, ind: int, out: list):
    pad = "  " * ind
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _enc(obj.tolist(), ind, out)
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for k, (key, v) in enumerate(items):
            out.append(f"{pad}  ")
            _enc(str(key), 0, out)
            out.append(": ")
            _enc(v, ind + 1, out)
            out.append(",\n" if k < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            out.append("[" + ", ".join(_fmt_float(float(v)) if isinstance(v, (float, np.floating))
                                       else str(int(v)) for v in obj) + "]")
            return
        out.append("[\n")
        for k, v in enumerate(obj):
            out.append(f"{pad}  ")
            _enc(v, ind + 1, out)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    out: list = []
    _enc(obj, 0, out)
    return "".join(out) + "\n"


def trace_csv(trace) -> str:
    """Trace sidecar: t, x..., ydot..., V..., I, J, gVV, FV."""
    n = trace.x.shape[1]
    head = (["t"] + [f"x{i + 1}" for i in range(n)] + [f"ydot{i + 1}" for i in range(n)]
            + [f"V{i + 1}" for i in range(n)] + ["I", "J", "gVV", "FV"])
    rows = [",".join(head)]
    for k in range(len(trace.t)):
        vals = [trace.t[k], *trace.x[k], *trace.xdot[k], *trace.V[k], trace.I[k], trace.J[k], trace.gVV[k], trace.FV[k]]
        rows.append(",".join(format(float(v), ".17g") for v in vals))
    return "\n".join(rows) + "\n"
