"""JSON file formats for apparatus and schemes.

Complex entries are stored as ``[re, im]`` pairs. Python floats survive a
JSON round trip bit for bit, so parse(serialize(x)) reproduces every entry
exactly.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .apparatus import InvalidMeasurement, ProjectiveMeasurement, validate
from .general_schemes import MUMScheme, OrthogonalProbeScheme
from .qubit_schemes import MMScheme, SimpleScheme

FORMAT_VERSION = 1


class FormatError(ValueError):
    """Malformed file: syntax, structure or version."""


# --- complex arrays -----------------------------------------------------------

def encode_array(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_array(data: Any, ndim: int, where: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError):
        raise FormatError(f"{where}: entries must be [re, im] number pairs") from None
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise FormatError(f"{where}: expected a {ndim}-d array of [re, im] pairs, got shape {arr.shape}")
    out = np.empty(arr.shape[:-1], dtype=np.complex128)
    out.real, out.imag = arr[..., 0], arr[..., 1]  # keeps signed zeros, unlike re + 1j * im
    return out


def _label(x):
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise FormatError(f"outcome labels must be strings or integers, got {x!r}")
    return x


def _loads(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise FormatError("top level must be a JSON object")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    return data


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise FormatError(f"{where}: missing field {key!r}")
    return data[key]


# --- apparatus ---------------------------------------------------------------

def apparatus_to_dict(m: ProjectiveMeasurement, name: str | None = None,
                      description: str | None = None) -> dict:
    out: dict = {"format_version": FORMAT_VERSION, "dim": m.dim}
    if name is not None:
        out["name"] = name
    if description is not None:
        out["description"] = description
    out["outcomes"] = [{"label": _label(lab), "projector": encode_array(p)}
                       for lab, p in zip(m.labels, m.projectors)]
    return out


def apparatus_from_dict(data: dict, check: bool = True, where: str = "apparatus") -> ProjectiveMeasurement:
    dim = _require(data, "dim", where)
    outcomes = _require(data, "outcomes", where)
    if not isinstance(dim, int) or dim < 1:
        raise FormatError(f"{where}: dim must be a positive integer")
    if not isinstance(outcomes, list) or not outcomes:
        raise FormatError(f"{where}: outcomes must be a non-empty list")
    labels, projs = [], []
    for k, item in enumerate(outcomes):
        spot = f"{where}.outcomes[{k}]"
        if not isinstance(item, dict):
            raise FormatError(f"{spot}: expected an object")
        labels.append(_label(_require(item, "label", spot)))
        p = decode_array(_require(item, "projector", spot), 2, spot + ".projector")
        if p.shape != (dim, dim):
            raise FormatError(f"{spot}.projector: shape {p.shape} does not match dim {dim}")
        projs.append(p)
    try:
        m = ProjectiveMeasurement(tuple(labels), tuple(projs))
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None
    if check:
        report = validate(m)
        if report:
            raise InvalidMeasurement(report)
    return m


def parse_apparatus(text: str) -> ProjectiveMeasurement:
    """Parse and validate an apparatus file.

    Raises :class:`FormatError` for syntax, structure or version problems
    and :class:`InvalidMeasurement` when the projectors break an invariant.
    """
    return apparatus_from_dict(_loads(text))


def serialize_apparatus(m: ProjectiveMeasurement, **meta) -> str:
    return json.dumps(apparatus_to_dict(m, **meta), indent=1)


# --- schemes -----------------------------------------------------------------

def _records(records) -> list:
    return [list(r) for r in sorted(records)]


def scheme_to_dict(scheme) -> dict:
    out: dict = {"format_version": FORMAT_VERSION, "kind": scheme.kind,
                 "dims": list(scheme.dims),
                 "m_apparatus": apparatus_to_dict(scheme.m_apparatus),
                 "n_apparatus": apparatus_to_dict(scheme.n_apparatus),
                 "probe": encode_array(scheme.probe)}
    if isinstance(scheme, SimpleScheme):
        out.update(n=scheme.n, rule=scheme.rule,
                   support_m=_records(scheme.support_m), support_n=_records(scheme.support_n))
    elif isinstance(scheme, MMScheme):
        table = []
        for rec in sorted(scheme.table):
            entry = scheme.table[rec]
            row: dict = {"record": list(rec)}
            if isinstance(entry, ProjectiveMeasurement):
                row["measurement"] = apparatus_to_dict(entry)
            else:
                row["decision"] = entry
            table.append(row)
        out.update(n=scheme.n, ancilla_dim=scheme.ancilla_dim, table=table)
        if scheme.rho is not None:
            out["rho"] = encode_array(scheme.rho)
    elif isinstance(scheme, MUMScheme):
        out["unitaries"] = [{"outcome": k, "matrix": encode_array(u)}
                            for k, u in sorted(scheme.unitaries.items())]
    elif isinstance(scheme, OrthogonalProbeScheme):
        out.update(outcome=scheme.outcome, indicates=scheme.indicates)
    else:
        raise TypeError(f"cannot serialize {type(scheme).__name__}")
    return out


def _record_set(data, where: str) -> frozenset:
    try:
        return frozenset(tuple(int(x) for x in r) for r in data)
    except (TypeError, ValueError):
        raise FormatError(f"{where}: expected a list of integer outcome records") from None


def scheme_from_dict(data: dict):
    kind = _require(data, "kind", "scheme")
    m = apparatus_from_dict(_require(data, "m_apparatus", "scheme"), where="m_apparatus")
    n = apparatus_from_dict(_require(data, "n_apparatus", "scheme"), where="n_apparatus")
    probe = decode_array(_require(data, "probe", "scheme"), 1, "probe")
    dims = tuple(_require(data, "dims", "scheme"))
    if int(np.prod(dims)) != probe.size:
        raise FormatError(f"probe has {probe.size} entries but dims {dims} need {int(np.prod(dims))}")
    if kind == "simple":
        scheme = SimpleScheme(int(_require(data, "n", "scheme")), probe,
                              _record_set(_require(data, "support_m", "scheme"), "support_m"),
                              _record_set(_require(data, "support_n", "scheme"), "support_n"),
                              m, n, _require(data, "rule", "scheme"))
    elif kind == "mm":
        table: dict = {}
        for k, row in enumerate(_require(data, "table", "scheme")):
            rec = tuple(int(x) for x in _require(row, "record", f"table[{k}]"))
            if "measurement" in row:
                table[rec] = apparatus_from_dict(row["measurement"], where=f"table[{k}].measurement")
            else:
                table[rec] = _require(row, "decision", f"table[{k}]")
        rho = decode_array(data["rho"], 2, "rho") if "rho" in data else None
        scheme = MMScheme(int(_require(data, "n", "scheme")), probe,
                          int(_require(data, "ancilla_dim", "scheme")), table, m, n, rho=rho)
    elif kind == "mum":
        unitaries = {int(_require(u, "outcome", "unitaries")):
                     decode_array(_require(u, "matrix", "unitaries"), 2, "unitaries.matrix")
                     for u in _require(data, "unitaries", "scheme")}
        scheme = MUMScheme(probe, unitaries, m, n)
    elif kind == "orthogonal":
        scheme = OrthogonalProbeScheme(probe, int(_require(data, "outcome", "scheme")),
                                       _require(data, "indicates", "scheme"), m, n)
    else:
        raise FormatError(f"unknown scheme kind {kind!r}")
    if tuple(scheme.dims) != dims:
        raise FormatError(f"dims {dims} disagree with the scheme structure {scheme.dims}")
    return scheme


def parse_scheme(text: str):
    return scheme_from_dict(_loads(text))


def serialize_scheme(scheme) -> str:
    return json.dumps(scheme_to_dict(scheme))
