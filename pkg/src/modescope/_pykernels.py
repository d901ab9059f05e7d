"""Pure numpy implementation of the master-equation kernel.

Used when the compiled ``_ckernels`` extension is unavailable, and as the
reference the compiled kernel is tested against. Both expose the same
``evolve_block_lindblad`` signature.

The state is a ``(D, D)`` complex density matrix over qubit (x) Fock space,
indexed ``i = q * N + n``. The generator is

    H = sum_i energy[i] |i><i| + eps * sum_i coupling[i] (|i><i+1| + |i+1><i|)
    L = sqrt(kappa) * a,  a|i+1> = coupling[i] |i>

with ``coupling[i] = 0`` at Fock block boundaries, so the same vector
describes both the drive and the photon annihilation operator.
"""

from __future__ import annotations

import numpy as np


def _rhs(rho, energy, coupling, eps, kappa, n_diag, out):
    c = coupling[:-1]
    # -i [H, rho]
    h_rho = energy[:, None] * rho
    h_rho[:-1] += eps * c[:, None] * rho[1:]
    h_rho[1:] += eps * c[:, None] * rho[:-1]
    rho_h = rho * energy[None, :]
    rho_h[:, :-1] += eps * rho[:, 1:] * c[None, :]
    rho_h[:, 1:] += eps * rho[:, :-1] * c[None, :]
    np.subtract(h_rho, rho_h, out=out)
    out *= -1j
    # kappa D[a] rho
    out[:-1, :-1] += kappa * (c[:, None] * c[None, :]) * rho[1:, 1:]
    out -= 0.5 * kappa * (n_diag[:, None] + n_diag[None, :]) * rho
    return out


def evolve_block_lindblad(
    rho0,
    energy,
    coupling,
    n_diag,
    block_size,
    eps,
    kappa,
    dt,
    n_steps,
    stride,
    snapshots=False,
):
    """Fixed-step RK4 integration, sampling observables every ``stride`` steps.

    Returns
    -------
    dict
        ``rho``: final state; ``rho01``, ``n_photon``, ``trace``,
        ``top_population``, ``hermiticity``: one entry per sample (t = 0
        included); ``snapshots``: stacked sampled states or ``None``.
    """
    rho = np.array(rho0, dtype=np.complex128, order="C")
    energy = np.ascontiguousarray(energy, dtype=float)
    coupling = np.ascontiguousarray(coupling, dtype=float)
    n_diag = np.ascontiguousarray(n_diag, dtype=float)
    n_samples = n_steps // stride + 1
    dim = rho.shape[0]
    N = block_size
    out = {
        "rho01": np.empty(n_samples, dtype=np.complex128),
        "n_photon": np.empty(n_samples),
        "trace": np.empty(n_samples),
        "top_population": np.empty(n_samples),
        "hermiticity": np.empty(n_samples),
        "snapshots": np.empty((n_samples, dim, dim), dtype=np.complex128) if snapshots else None,
    }
    top = np.arange(N - 1, dim, N)
    ground = np.arange(N)

    def record(k):
        diag = np.diagonal(rho).real
        out["rho01"][k] = np.sum(rho[ground, ground + N])
        out["n_photon"][k] = np.dot(n_diag, diag)
        out["trace"][k] = diag.sum()
        out["top_population"][k] = diag[top].sum()
        out["hermiticity"][k] = np.max(np.abs(rho - rho.conj().T))
        if snapshots:
            out["snapshots"][k] = rho

    k1 = np.empty_like(rho)
    k2 = np.empty_like(rho)
    k3 = np.empty_like(rho)
    k4 = np.empty_like(rho)
    half = 0.5 * dt
    record(0)
    sample = 1
    for step in range(1, n_steps + 1):
        _rhs(rho, energy, coupling, eps, kappa, n_diag, k1)
        _rhs(rho + half * k1, energy, coupling, eps, kappa, n_diag, k2)
        _rhs(rho + half * k2, energy, coupling, eps, kappa, n_diag, k3)
        _rhs(rho + dt * k3, energy, coupling, eps, kappa, n_diag, k4)
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0:
            record(sample)
            sample += 1
    out["rho"] = rho
    return out
