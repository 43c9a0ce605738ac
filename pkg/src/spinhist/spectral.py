"""One-particle dynamics on a periodic spin chain.

A single down spin hops on a ring of ``M`` sites.  Position states
``|phi_k>`` (k = 1..M) and spin-wave states ``|psi_l>`` (l = 0..M-1) are
related by a discrete Fourier transform, so the propagator is a single
circulant column computed with one FFT.

Conventions: hbar = 1, site labels are 1-based, mode labels are 0-based,
and the time-evolved projector is the Heisenberg operator
``P(t) = exp(iHt) P exp(-iHt)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

DENSE_ORACLE_CAP = 256
TINY_HILBERT_CAP = 12


@dataclass(frozen=True)
class ChainConfig:
    """Physical and coarse-graining parameters of the chain.

    ``M1`` sites (1..M1) form region 1, the remaining ``M - M1`` form region 2.
    """

    M: int
    M1: int
    chi: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise ValueError(f"M must be an integer >= 2, got {self.M!r}")
        if int(self.M1) != self.M1 or not 1 <= self.M1 <= self.M:
            raise ValueError(f"M1 must satisfy 1 <= M1 <= M={self.M}, got {self.M1!r}")
        if not (math.isfinite(self.chi) and math.isfinite(self.t)):
            raise ValueError("chi and t must be finite")

    @property
    def M2(self) -> int:
        return self.M - self.M1


@dataclass(frozen=True)
class SpinWaveSpectrum:
    energies: np.ndarray

    @property
    def M(self) -> int:
        return len(self.energies)


@dataclass(frozen=True)
class PropagatorKernel:
    """``g[D] = <phi_{n+D}| exp(-iHt) |phi_n>`` for D = 0..M-1."""

    g: np.ndarray

    @property
    def M(self) -> int:
        return len(self.g)

    def __call__(self, delta):
        return self.g[np.mod(delta, self.M)]


def spin_wave_energies(cfg: ChainConfig) -> SpinWaveSpectrum:
    ell = np.arange(cfg.M)
    return SpinWaveSpectrum(-2.0 * cfg.chi * np.cos(2.0 * np.pi * ell / cfg.M))


def propagator_column(cfg: ChainConfig) -> PropagatorKernel:
    energies = spin_wave_energies(cfg).energies
    # ifft carries the 1/M and the +2*pi*i*l*D/M sign
    return PropagatorKernel(np.fft.ifft(np.exp(-1j * cfg.t * energies)))


def _check_site(cfg: ChainConfig, n) -> None:
    n_arr = np.asarray(n)
    if np.any(n_arr < 1) or np.any(n_arr > cfg.M):
        raise IndexError(f"site index out of range 1..{cfg.M}: {n!r}")


def projector_matrix_element(cfg: ChainConfig, n, n_prime, kernel: PropagatorKernel | None = None):
    """``<phi_n| P(t) |phi_n'>`` for the region-1 projector.

    Equals ``sum_{k=1}^{M1} conj(g(k - n)) g(k - n')``.  ``n`` and ``n_prime``
    may be integer arrays of equal shape; the result then has that shape.
    """
    _check_site(cfg, n)
    _check_site(cfg, n_prime)
    if kernel is None:
        kernel = propagator_column(cfg)
    k = np.arange(1, cfg.M1 + 1)
    n_arr = np.asarray(n)[..., None]
    np_arr = np.asarray(n_prime)[..., None]
    out = np.sum(np.conj(kernel(k - n_arr)) * kernel(k - np_arr), axis=-1)
    return out[()] if out.ndim == 0 else out


def projector_matrix(cfg: ChainConfig, kernel: PropagatorKernel | None = None) -> np.ndarray:
    """Full ``M x M`` matrix of ``P(t)`` from the propagator column."""
    if kernel is None:
        kernel = propagator_column(cfg)
    sites = np.arange(1, cfg.M + 1)
    # G[k, n] = <phi_k|U|phi_n> restricted to region-1 rows
    G = kernel(sites[: cfg.M1, None] - sites[None, :])
    return G.conj().T @ G


def d_kernel(cfg: ChainConfig, ell, ell_prime):
    """Geometric sum ``sum_{k=1}^{M1} exp(-2 pi i k (l - l') / M)``."""
    diff = np.asarray(ell) - np.asarray(ell_prime)
    x = 2.0 * np.pi * diff / cfg.M
    coincident = np.mod(diff, cfg.M) == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = (np.exp(-1j * cfg.M1 * x) - 1.0) / (1.0 - np.exp(1j * x))
    out = np.where(coincident, complex(cfg.M1), closed)
    return out[()] if out.ndim == 0 else out


def spectral_double_sum(cfg: ChainConfig, n: int, n_prime: int) -> complex:
    """``<phi_n|P(t)|phi_n'>`` as a double sum over spin-wave modes.

    O(M^2); used to cross-check the positional formula.  The prefactor is
    1/M^2: one 1/sqrt(M) per position-mode overlap, one 1/M inside the
    mode-space matrix element of P.
    """
    _check_site(cfg, n)
    _check_site(cfg, n_prime)
    M = cfg.M
    E = spin_wave_energies(cfg).energies
    ell = np.arange(M)
    phase_l = np.exp(1j * cfg.t * E + 2j * np.pi * n * ell / M)
    phase_lp = np.exp(-1j * cfg.t * E - 2j * np.pi * n_prime * ell / M)
    d = d_kernel(cfg, ell[:, None], ell[None, :])
    return complex(phase_l @ d @ phase_lp) / M**2


def mode_overlap_matrix(M: int) -> np.ndarray:
    """``<psi_l|psi_l'>`` built from explicit site sums; identity for a valid basis."""
    k = np.arange(1, M + 1)
    ell = np.arange(M)
    psi = np.exp(2j * np.pi * np.outer(k, ell) / M) / np.sqrt(M)
    return psi.conj().T @ psi


def hopping_hamiltonian(cfg: ChainConfig) -> np.ndarray:
    """Dense ``H1 = -chi sum_k (|phi_k><phi_{k-1}| + h.c.)`` with periodic closure."""
    M = cfg.M
    H = np.zeros((M, M), dtype=np.complex128)
    k = np.arange(M)
    # accumulate: for M = 2 both bonds connect the same pair of sites
    np.add.at(H, (k, (k - 1) % M), -cfg.chi)
    np.add.at(H, ((k - 1) % M, k), -cfg.chi)
    return H


def dense_oracle(cfg: ChainConfig, cap: int = DENSE_ORACLE_CAP) -> np.ndarray:
    """``P(t)`` by full eigendecomposition of the dense hopping matrix."""
    if cfg.M > cap:
        raise ValueError(f"dense oracle limited to M <= {cap}, got M={cfg.M}")
    evals, V = np.linalg.eigh(hopping_hamiltonian(cfg))
    U = (V * np.exp(-1j * evals * cfg.t)) @ V.conj().T
    P = np.zeros((cfg.M, cfg.M))
    P[: cfg.M1, : cfg.M1] = np.eye(cfg.M1)
    return U.conj().T @ P @ U


# ---------------------------------------------------------------------------
# Full 2^m Hilbert space (tiny chains only)
# ---------------------------------------------------------------------------

_PAULI = {
    "x": sparse.csr_matrix(np.array([[0, 1], [1, 0]], dtype=np.complex128)),
    "y": sparse.csr_matrix(np.array([[0, -1j], [1j, 0]], dtype=np.complex128)),
    "z": sparse.csr_matrix(np.array([[1, 0], [0, -1]], dtype=np.complex128)),
}


def site_operator(op: str, site: int, m: int) -> sparse.csr_matrix:
    """Pauli ``op`` acting on 1-based ``site`` of an ``m``-site chain.

    Site 1 is the most significant tensor factor.  Basis bit 0 is spin up,
    bit 1 is spin down.
    """
    left = sparse.identity(2 ** (site - 1), format="csr")
    right = sparse.identity(2 ** (m - site), format="csr")
    return sparse.kron(sparse.kron(left, _PAULI[op]), right, format="csr")


def pauli_hamiltonian(m: int, chi: float) -> sparse.csr_matrix:
    """``-chi/2 sum_n sigma_n . sigma_{n+1}`` on a periodic ring of ``m`` sites."""
    H = sparse.csr_matrix((2**m, 2**m), dtype=np.complex128)
    for n in range(1, m + 1):
        nxt = n % m + 1
        for op in "xyz":
            H = H + site_operator(op, n, m) @ site_operator(op, nxt, m)
    return (-0.5 * chi) * H


def exchange_operator(k: int, l: int, m: int) -> sparse.csr_matrix:
    """Swap of the spins on sites ``k`` and ``l``: ``(1 + sigma_k . sigma_l) / 2``."""
    S = sparse.identity(2**m, format="csr", dtype=np.complex128)
    for op in "xyz":
        S = S + site_operator(op, k, m) @ site_operator(op, l, m)
    return 0.5 * S


def down_count_operator(sites, m: int) -> sparse.csr_matrix:
    """Number of down spins on ``sites``: ``sum (1 - sigma_z) / 2``."""
    Q = sparse.csr_matrix((2**m, 2**m), dtype=np.complex128)
    eye = sparse.identity(2**m, format="csr")
    for s in sites:
        Q = Q + 0.5 * (eye - site_operator("z", s, m))
    return Q


def basis_state(down_sites, m: int) -> np.ndarray:
    """Computational basis vector with the given 1-based sites flipped down."""
    index = 0
    for s in down_sites:
        index |= 1 << (m - s)
    v = np.zeros(2**m, dtype=np.complex128)
    v[index] = 1.0
    return v


def one_down_offset(m: int, chi: float) -> float:
    """Energy shift between the Pauli Hamiltonian and ``H1`` in the one-down sector.

    With ``sigma.sigma = 2 p - 1``, the Pauli form is ``-chi sum p + chi m / 2``.
    On a one-down state the ``m - 2`` bonds away from the flipped spin each
    act as the identity, which leaves ``H1 - chi (m - 2) + chi m / 2``.
    """
    return chi * (2.0 - 0.5 * m)


@dataclass
class TinyOracleReport:
    m: int
    chi: float
    swap_residual: float
    hop_residual: float
    spectator_residual: float
    eigen_residuals: np.ndarray
    sector_block_residual: float
    sz_commutator_norm: float
    tolerance: float = 1e-10

    @property
    def worst(self) -> float:
        return max(
            self.swap_residual,
            self.hop_residual,
            self.spectator_residual,
            float(np.max(self.eigen_residuals)),
            self.sector_block_residual,
            self.sz_commutator_norm,
        )

    @property
    def passed(self) -> bool:
        return (
            max(self.swap_residual, self.hop_residual, self.spectator_residual) < self.tolerance
            and float(np.max(self.eigen_residuals)) < self.tolerance
            and self.sector_block_residual < self.tolerance
            and self.sz_commutator_norm < self.tolerance
        )


def tiny_hilbert_oracle(m: int, chi: float = 1.0, t: float = 0.0) -> TinyOracleReport:
    """Check the one-down-spin reduction against the full ``2^m`` space.

    ``t`` does not enter the eigen-checks; it is accepted so that the sector
    block of ``exp(-iHt)`` can be compared with the one-particle propagator.
    """
    if m > TINY_HILBERT_CAP:
        raise ValueError(f"tiny Hilbert oracle limited to m <= {TINY_HILBERT_CAP}, got {m}")
    if m < 3:
        raise ValueError("need m >= 3 so that neighbouring bonds are distinct")
    H = pauli_hamiltonian(m, chi)
    phi = [basis_state([k], m) for k in range(1, m + 1)]

    # p^{1,2} |up down ...> = |down up ...>
    p12 = exchange_operator(1, 2, m)
    swap_residual = float(np.linalg.norm(p12 @ basis_state([2], m) - basis_state([1], m)))

    hop_residual = 0.0
    spectator_residual = 0.0
    for k in range(1, m + 1):
        nxt = k % m + 1
        p = exchange_operator(k, nxt, m)
        hop_residual = max(
            hop_residual,
            float(np.linalg.norm(p @ phi[k - 1] - phi[nxt - 1])),
            float(np.linalg.norm(p @ phi[nxt - 1] - phi[k - 1])),
        )
        for n in range(1, m + 1):
            if n not in (k, nxt):
                # aligned spins on the bond: the exchange leaves the state alone
                spectator_residual = max(spectator_residual, float(np.linalg.norm(p @ phi[n - 1] - phi[n - 1])))

    cfg = ChainConfig(M=m, M1=1, chi=chi, t=t)
    E = spin_wave_energies(cfg).energies
    offset = one_down_offset(m, chi)
    Phi = np.stack(phi, axis=1)
    k = np.arange(1, m + 1)
    eigen_residuals = np.empty(m)
    for ell in range(m):
        psi = Phi @ (np.exp(2j * np.pi * ell * k / m) / np.sqrt(m))
        eigen_residuals[ell] = np.linalg.norm(H @ psi - (E[ell] + offset) * psi)

    block = Phi.conj().T @ (H @ Phi)
    sector_block_residual = float(np.abs(block - hopping_hamiltonian(cfg) - offset * np.eye(m)).max())

    Sz = sum(site_operator("z", s, m) for s in range(1, m + 1))
    comm = (H @ Sz - Sz @ H).toarray()
    return TinyOracleReport(
        m=m,
        chi=chi,
        swap_residual=swap_residual,
        hop_residual=hop_residual,
        spectator_residual=spectator_residual,
        eigen_residuals=eigen_residuals,
        sector_block_residual=sector_block_residual,
        sz_commutator_norm=float(np.abs(comm).max()),
    )
