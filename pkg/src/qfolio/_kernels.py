"""Compiled inner loops.

Qubit ``q`` of an ``n``-qubit register lives at bit ``n - 1 - q`` of the
amplitude index (qubit 0 is the most significant bit). ``fastmath`` stays off
so results are bit-reproducible.
"""

import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True)
def ising_energies(zz, z, k, n):
    """Diagonal of ``sum_{i<j} zz[i,j] s_i s_j + sum_i z[i] s_i + k``, s = +1 for bit 0."""
    dim = 1 << n
    out = np.empty(dim)
    spins = np.empty(n)
    for idx in range(dim):
        for q in range(n):
            spins[q] = 1.0 - 2.0 * ((idx >> (n - 1 - q)) & 1)
        e = k
        for i in range(n):
            acc = z[i]
            for j in range(i + 1, n):
                acc += zz[i, j] * spins[j]
            e += acc * spins[i]
        out[idx] = e
    return out


@nb.njit(cache=True, nogil=True)
def _mixer_layer(psi, n, beta):
    # RX(2*beta) = cos(beta) I - i sin(beta) X on every qubit
    c = np.cos(beta)
    s = -1j * np.sin(beta)
    dim = psi.shape[0]
    for q in range(n):
        bit = 1 << (n - 1 - q)
        for idx in range(dim):
            if idx & bit == 0:
                a0 = psi[idx]
                a1 = psi[idx | bit]
                psi[idx] = c * a0 + s * a1
                psi[idx | bit] = s * a0 + c * a1


@nb.njit(cache=True, nogil=True)
def qaoa_state(energies, gammas, betas, n):
    """Amplitudes of ``prod_k U_B(beta_k) U_C(gamma_k) |+>^n``."""
    dim = 1 << n
    psi = np.full(dim, 1.0 / np.sqrt(dim) + 0j)
    for layer in range(gammas.shape[0]):
        g = gammas[layer]
        for idx in range(dim):
            psi[idx] *= np.exp(-1j * g * energies[idx])
        _mixer_layer(psi, n, betas[layer])
    return psi


@nb.njit(cache=True, nogil=True)
def qaoa_energy(energies, gammas, betas, n):
    psi = qaoa_state(energies, gammas, betas, n)
    e = 0.0
    for idx in range(psi.shape[0]):
        a = psi[idx]
        e += (a.real * a.real + a.imag * a.imag) * energies[idx]
    return e
