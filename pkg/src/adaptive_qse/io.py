"""JSON ingestion of Hamiltonians and states; CSV helpers."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .pauli import LadderOperatorProduct, PauliString, PauliSum, jw_product
from .statevector import Statevector


class FormatError(ValueError):
    pass


def fmt(x: float) -> str:
    """Lossless float text: 17 significant digits."""
    return f"{float(x):.17g}"


def _coeff(raw, where) -> complex:
    if isinstance(raw, (int, float)):
        return complex(raw)
    if isinstance(raw, Sequence) and len(raw) == 2:
        return complex(float(raw[0]), float(raw[1]))
    raise FormatError(f"{where}: coefficient must be a number or [re, im]")


def _load_json(path: Path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise FormatError(f"{path}: line {err.lineno}, column {err.colno}: {err.msg}") from None


# Pauli-form files ------------------------------------------------------------

def pauli_sum_from_doc(doc: dict, where: str = "<doc>") -> PauliSum:
    try:
        n = int(doc["n_qubits"])
        terms = doc["terms"]
    except (KeyError, TypeError):
        raise FormatError(f"{where}: expected keys 'n_qubits' and 'terms'") from None
    strings, coeffs = [], []
    for k, t in enumerate(terms):
        label = t.get("pauli")
        if not isinstance(label, str) or len(label) != n:
            raise FormatError(f"{where}: term {k}: pauli must be a string of length {n}")
        try:
            strings.append(PauliString.from_label(label))
        except ValueError as err:
            raise FormatError(f"{where}: term {k}: {err}") from None
        coeffs.append(_coeff(t.get("coeff"), f"{where}: term {k}"))
    return PauliSum(n, [s.x for s in strings], [s.z for s in strings], coeffs)


def pauli_sum_to_doc(h: PauliSum) -> dict:
    items = sorted(((s.label, c) for s, c in h.terms.items()), key=lambda t: t[0])
    return {
        "format": "pauli",
        "n_qubits": h.n_qubits,
        "terms": [{"coeff": [c.real, c.imag], "pauli": label} for label, c in items],
    }


def dumps_hamiltonian(h: PauliSum) -> str:
    doc = pauli_sum_to_doc(h)
    lines = [f'    {{"coeff": [{fmt(t["coeff"][0])}, {fmt(t["coeff"][1])}], "pauli": "{t["pauli"]}"}}'
             for t in doc["terms"]]
    return ('{\n  "format": "pauli",\n  "n_qubits": %d,\n  "terms": [\n%s\n  ]\n}\n'
            % (h.n_qubits, ",\n".join(lines)))


def save_hamiltonian(h: PauliSum, path) -> None:
    Path(path).write_text(dumps_hamiltonian(h))


# integral files --------------------------------------------------------------

@dataclass(frozen=True)
class IntegralFile:
    n_spin_orbitals: int
    n_electrons: int
    constant: float
    one_body: np.ndarray
    two_body: tuple[tuple[tuple[int, int, int, int], complex], ...]
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_doc(cls, doc: dict, where: str = "<doc>") -> IntegralFile:
        try:
            n = int(doc["n_spin_orbitals"])
            ne = int(doc["n_electrons"])
            one = np.array(doc["one_body"])
            # complex entries may be written as [re, im]
            one = one[..., 0] + 1j * one[..., 1] if one.ndim == 3 and one.shape[-1] == 2 else one.astype(complex)
        except (KeyError, TypeError, ValueError) as err:
            raise FormatError(f"{where}: bad integral header: {err}") from None
        if one.shape != (n, n):
            raise FormatError(f"{where}: one_body must be {n}x{n}")
        if not 0 <= ne <= n:
            raise FormatError(f"{where}: n_electrons out of range")
        two = []
        for k, entry in enumerate(doc.get("two_body", [])):
            idx = tuple(int(i) for i in entry["pqrs"])
            if len(idx) != 4 or not all(0 <= i < n for i in idx):
                raise FormatError(f"{where}: two_body entry {k}: indices {idx} out of range")
            two.append((idx, _coeff(entry["value"], f"{where}: two_body entry {k}")))
        return cls(n, ne, float(doc.get("constant", 0.0)), one, tuple(two), dict(doc.get("metadata", {})))


def jw_hamiltonian(f: IntegralFile) -> PauliSum:
    """``constant + sum t_pq a_p^ a_q + sum v_pqrs a_p^ a_q^ a_r a_s`` under Jordan-Wigner."""
    n = f.n_spin_orbitals
    parts = [PauliSum.identity(n, f.constant)]
    for p in range(n):
        for q in range(n):
            if f.one_body[p, q] != 0:
                op = LadderOperatorProduct(((p, True), (q, False)))
                parts.append(f.one_body[p, q] * jw_product(op, n))
    for (p, q, r, s), v in f.two_body:
        op = LadderOperatorProduct(((p, True), (q, True), (r, False), (s, False)))
        parts.append(v * jw_product(op, n))
    xs = np.concatenate([t.xs for t in parts])
    zs = np.concatenate([t.zs for t in parts])
    cs = np.concatenate([t.coeffs for t in parts])
    return PauliSum(n, xs, zs, cs)


# dispatch --------------------------------------------------------------------

@dataclass(frozen=True)
class LoadedHamiltonian:
    hamiltonian: PauliSum
    n_electrons: int | None = None
    hf_occupation: str | None = None
    metadata: dict = field(default_factory=dict)


def _validated(h: PauliSum, where) -> PauliSum:
    if not h.is_hermitian(1e-10):
        raise FormatError(f"{where}: Hamiltonian is not Hermitian")
    return PauliSum(h.n_qubits, h.xs, h.zs, h.coeffs.real.astype(complex))


def load_hamiltonian_full(path, format: str = "auto") -> LoadedHamiltonian:
    doc = _load_json(path)
    if format == "auto":
        format = doc.get("format") or ("integrals" if "one_body" in doc else "pauli")
    if format == "pauli":
        h = _validated(pauli_sum_from_doc(doc, str(path)), path)
        meta = doc.get("metadata", {})
        return LoadedHamiltonian(h, meta.get("n_electrons"), meta.get("hf_occupation"), meta)
    if format == "integrals":
        f = IntegralFile.from_doc(doc, str(path))
        h = _validated(jw_hamiltonian(f), path)
        hf = f.metadata.get("hf_occupation") or "1" * f.n_electrons + "0" * (f.n_spin_orbitals - f.n_electrons)
        return LoadedHamiltonian(h, f.n_electrons, hf, f.metadata)
    raise FormatError(f"unknown Hamiltonian format {format!r}")


def load_hamiltonian(path, format: str = "auto") -> PauliSum:
    return load_hamiltonian_full(path, format).hamiltonian


def load_statevector(path) -> Statevector:
    doc = _load_json(path)
    amps = [_coeff(a, f"{path}: amplitude {k}") for k, a in enumerate(doc["amplitudes"])]
    sv = Statevector.from_amplitudes(amps, normalize=True)
    if "n_qubits" in doc and int(doc["n_qubits"]) != sv.n_qubits:
        raise FormatError(f"{path}: n_qubits disagrees with amplitude count")
    return sv


def save_statevector(s: Statevector, path) -> None:
    Path(path).write_text(json.dumps(
        {"n_qubits": s.n_qubits, "amplitudes": [[a.real, a.imag] for a in s.amplitudes.tolist()]}) + "\n")


# CSV -------------------------------------------------------------------------

def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def read_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))
