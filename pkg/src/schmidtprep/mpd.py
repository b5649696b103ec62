"""Matrix product disentangler baseline.

Each layer is the exact preparation staircase of the current state's bond-2
approximation, applied in reverse: ``U_k = prep(psi_tilde_k)^H`` so that
``U_k |psi_tilde_k> = |0...0>``. No optimisation is involved.
"""

from __future__ import annotations

import time

from .circuit import StaircaseLayer, apply_layer, prep_layer_from_chi2
from .mps import MPS, canonicalize, chi_k_fidelity, truncate
from .sso import SynthesisReport, assemble_circuit, prepared_fidelity


def mpd_layer(psi: MPS) -> StaircaseLayer:
    """Staircase ``P`` with ``P |0...0> = psi_tilde``; the disentangler is ``P`` applied as adjoint."""
    approx, _ = truncate(psi, 2, 0.0)
    return prep_layer_from_chi2(approx)


def _mpd_states(target: MPS, count: int, lambda_thresh: float):
    psi = canonicalize(target, 0).normalized()
    states, layers, records = [psi], [], []
    for _ in range(count):
        layer = mpd_layer(psi)
        out = apply_layer(psi, layer, adjoint=True)
        chi_before = out.chi
        psi, discarded = truncate(out, None, lambda_thresh)
        layers.append(layer)
        states.append(psi)
        records.append({"chi_untruncated": chi_before, "chi": psi.chi, "bond_dims": psi.bond_dims, "discarded": discarded})
    return states, layers, records


def mpd_disentangle_depths(target: MPS, depths, lambda_thresh: float = 1e-7, seed: int = 0):
    """``{L: (circuit, report)}`` sharing one analytic layer sequence."""
    depths = sorted(set(int(d) for d in depths))
    t0 = time.perf_counter()
    states, layers, records = _mpd_states(target, max(depths) - 1, lambda_thresh)
    t_dis = time.perf_counter() - t0
    f_chi2 = [chi_k_fidelity(s, 2) for s in states]
    out = {}
    for depth in depths:
        t1 = time.perf_counter()
        k = depth - 1
        circuit, f_l = assemble_circuit(
            target.n,
            [(layer, True) for layer in layers[:k]],
            states[k],
            {"method": "mpd", "layers": depth},
        )
        chis = [s.chi for s in states[: k + 1]]
        report = SynthesisReport(
            method="mpd",
            n=target.n,
            layers=depth,
            seed=seed,
            layer_records=records[:k],
            chi_trajectory=chis,
            chi_max=max(chis),
            f_chi2=f_chi2[: k + 1],
            F_L=f_l,
            F_S=prepared_fidelity(target, circuit),
            timing={"disentangle_s": t_dis, "assemble_s": time.perf_counter() - t1},
        )
        out[depth] = (circuit, report)
    return out


def mpd_disentangle(target: MPS, L: int, lambda_thresh: float = 1e-7):
    """MPD preparation circuit with ``L`` layers (``L - 1`` analytic ones plus the prep layer)."""
    return mpd_disentangle_depths(target, [L], lambda_thresh)[L]
