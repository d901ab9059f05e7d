# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled master-equation kernel; same contract as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef void _rhs(double complex[:, ::1] rho,
               const double[::1] energy,
               const double[::1] coupling,
               const double[::1] n_diag,
               double eps, double kappa, Py_ssize_t dim,
               double complex[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double complex comm, acc
    cdef double ci, cj, ei
    for i in range(dim):
        ei = energy[i]
        ci = coupling[i]
        for j in range(dim):
            # [H, rho]_ij
            comm = (ei - energy[j]) * rho[i, j]
            if i + 1 < dim:
                comm = comm + eps * ci * rho[i + 1, j]
            if i > 0:
                comm = comm + eps * coupling[i - 1] * rho[i - 1, j]
            if j + 1 < dim:
                comm = comm - eps * coupling[j] * rho[i, j + 1]
            if j > 0:
                comm = comm - eps * coupling[j - 1] * rho[i, j - 1]
            # -i * comm without a complex-complex multiply
            acc.real = comm.imag
            acc.imag = -comm.real
            acc = acc - 0.5 * kappa * (n_diag[i] + n_diag[j]) * rho[i, j]
            if i + 1 < dim and j + 1 < dim:
                cj = coupling[j]
                acc = acc + kappa * ci * cj * rho[i + 1, j + 1]
            out[i, j] = acc


cdef void _axpy(double complex[:, ::1] dst, double complex[:, ::1] x,
                double a, double complex[:, ::1] y, Py_ssize_t dim) noexcept nogil:
    # dst = x + a * y
    cdef Py_ssize_t i, j
    for i in range(dim):
        for j in range(dim):
            dst[i, j] = x[i, j] + a * y[i, j]


def evolve_block_lindblad(rho0,
                          energy,
                          coupling,
                          n_diag,
                          Py_ssize_t block_size,
                          double eps,
                          double kappa,
                          double dt,
                          Py_ssize_t n_steps,
                          Py_ssize_t stride,
                          bint snapshots=False):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] rho_arr = np.array(rho0, dtype=np.complex128, order="C")
    cdef double complex[:, ::1] rho = rho_arr
    cdef const double[::1] e = np.ascontiguousarray(energy, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(coupling, dtype=np.float64)
    cdef const double[::1] nd = np.ascontiguousarray(n_diag, dtype=np.float64)
    cdef Py_ssize_t dim = rho.shape[0]
    cdef Py_ssize_t N = block_size
    cdef Py_ssize_t n_samples = n_steps // stride + 1

    rho01_arr = np.empty(n_samples, dtype=np.complex128)
    nph_arr = np.empty(n_samples)
    tr_arr = np.empty(n_samples)
    top_arr = np.empty(n_samples)
    herm_arr = np.empty(n_samples)
    snap_arr = np.empty((n_samples, dim, dim), dtype=np.complex128) if snapshots else None

    cdef double complex[::1] rho01 = rho01_arr
    cdef double[::1] nph = nph_arr
    cdef double[::1] tr = tr_arr
    cdef double[::1] top = top_arr
    cdef double[::1] herm = herm_arr
    cdef double complex[:, :, ::1] snap
    if snapshots:
        snap = snap_arr

    cdef double complex[:, ::1] k1 = np.empty((dim, dim), dtype=np.complex128)
    cdef double complex[:, ::1] k2 = np.empty((dim, dim), dtype=np.complex128)
    cdef double complex[:, ::1] k3 = np.empty((dim, dim), dtype=np.complex128)
    cdef double complex[:, ::1] k4 = np.empty((dim, dim), dtype=np.complex128)
    cdef double complex[:, ::1] tmp = np.empty((dim, dim), dtype=np.complex128)

    cdef Py_ssize_t step, sample = 0, i, j
    cdef double half = 0.5 * dt, sixth = dt / 6.0
    cdef double complex z, s01
    cdef double d, sn, st, stop, h, diff

    with nogil:
        step = 0
        while True:
            if step % stride == 0:
                s01 = 0
                sn = 0.0
                st = 0.0
                stop = 0.0
                h = 0.0
                for i in range(N):
                    s01 = s01 + rho[i, i + N]
                for i in range(dim):
                    d = rho[i, i].real
                    sn = sn + nd[i] * d
                    st = st + d
                    if (i % N) == N - 1:
                        stop = stop + d
                    for j in range(dim):
                        z = rho[i, j] - rho[j, i].conjugate()
                        diff = sqrt(z.real * z.real + z.imag * z.imag)
                        if diff > h:
                            h = diff
                rho01[sample] = s01
                nph[sample] = sn
                tr[sample] = st
                top[sample] = stop
                herm[sample] = h
                if snapshots:
                    for i in range(dim):
                        for j in range(dim):
                            snap[sample, i, j] = rho[i, j]
                sample += 1
            if step == n_steps:
                break
            _rhs(rho, e, c, nd, eps, kappa, dim, k1)
            _axpy(tmp, rho, half, k1, dim)
            _rhs(tmp, e, c, nd, eps, kappa, dim, k2)
            _axpy(tmp, rho, half, k2, dim)
            _rhs(tmp, e, c, nd, eps, kappa, dim, k3)
            _axpy(tmp, rho, dt, k3, dim)
            _rhs(tmp, e, c, nd, eps, kappa, dim, k4)
            for i in range(dim):
                for j in range(dim):
                    rho[i, j] = rho[i, j] + sixth * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
            step += 1

    return {
        "rho": rho_arr,
        "rho01": rho01_arr,
        "n_photon": nph_arr,
        "trace": tr_arr,
        "top_population": top_arr,
        "hermiticity": herm_arr,
        "snapshots": snap_arr,
    }
