"""Generate the committed integral fixtures with PySCF.

Run once; the outputs under data/hamiltonians/ are versioned. PySCF is only
needed here, never at library runtime.

    python scripts/make_fixtures.py
"""
import json
from pathlib import Path

import numpy as np
from pyscf import ao2mo, fci, gto, scf

OUT = Path(__file__).resolve().parent.parent / "data" / "hamiltonians"
FLOOR = 1e-12


def spin_integrals(h1, eri):
    """Spatial MO integrals -> interleaved spin-orbital (t_pq, v_pqrs).

    Spin orbital p = 2 * spatial + spin.  The two-body part is returned in the
    normal-ordered form sum v_pqrs a_p^ a_q^ a_r a_s.
    """
    n = h1.shape[0]
    ns = 2 * n
    t = np.zeros((ns, ns))
    for p in range(ns):
        for q in range(ns):
            if p % 2 == q % 2:
                t[p, q] = h1[p // 2, q // 2]
    two_body = []
    for p in range(ns):
        for q in range(ns):
            if p == q:
                continue
            for r in range(ns):
                for s in range(ns):
                    if r == s:
                        continue
                    if p % 2 != s % 2 or q % 2 != r % 2:
                        continue
                    # 1/2 <pq|sr> = 1/2 (ps|qr)
                    val = 0.5 * eri[p // 2, s // 2, q // 2, r // 2]
                    if abs(val) > FLOOR:
                        two_body.append({"pqrs": [p, q, r, s], "value": float(val)})
    t[np.abs(t) < FLOOR] = 0.0
    return t, two_body


def build(label, atom, basis, description):
    mol = gto.M(atom=atom, basis=basis, unit="Angstrom", verbose=0)
    mf = scf.RHF(mol).run()
    c = mf.mo_coeff
    h1 = c.T @ mf.get_hcore() @ c
    n = h1.shape[0]
    eri = ao2mo.restore(1, ao2mo.kernel(mol, c), n)
    e_fci, _ = fci.FCI(mf).kernel()
    t, two_body = spin_integrals(h1, eri)
    nelec = mol.nelectron
    hf = "".join("1" if p < nelec else "0" for p in range(2 * n))
    doc = {
        "format": "integrals",
        "n_spin_orbitals": 2 * n,
        "n_electrons": nelec,
        "constant": float(mol.energy_nuc()),
        "one_body": t.tolist(),
        "two_body": two_body,
        "metadata": {
            "label": label,
            "description": description,
            "geometry_angstrom": atom,
            "basis": basis,
            "spin_orbital_order": "interleaved (2*spatial + spin), RHF canonical orbitals",
            "hf_occupation": hf,
            "e_hf": float(mf.e_tot),
            "e_fci": float(e_fci),
            "generator": "pyscf",
        },
    }
    path = OUT / f"{label}.json"
    path.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"{label}: n_qubits={2 * n} E_HF={mf.e_tot:.10f} E_FCI={e_fci:.10f}")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    build("h2_sto3g", "H 0 0 0; H 0 0 0.735", "sto-3g", "H2, minimal basis, 4 qubits")
    build("h2_631g", "H 0 0 0; H 0 0 0.735", "6-31g", "H2, split-valence basis, 8 qubits")
    for r in (0.75, 1.0, 1.5, 2.0, 2.5):
        atom = "; ".join(f"H 0 0 {k * r:.4f}" for k in range(4))
        build(f"h4_chain_{r:.2f}", atom, "sto-6g", f"linear H4 chain, spacing {r} A, 8 qubits")


if __name__ == "__main__":
    main()
