"""Local conservation and two-time amplitudes on tiny dense spin chains.

``Q`` counts down spins in a contiguous region ``V``.  Its Heisenberg
current ``J = i[H, Q]`` lives on the two bonds that cross the region
boundary, and ``Q_t - Q`` is the time integral of ``J``.  For spectral
projectors ``P_a`` of ``Q`` the commutator identity

    (a2 - a1) <m|P_a2 U P_a1|n> = <m|P_a2 U (Q_t - Q) P_a1|n>,   U = exp(-iHt)

ties the size of off-diagonal amplitudes to the integrated boundary flux.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import down_count_operator, pauli_hamiltonian, site_operator

MAX_SITES = 10
DEFAULT_STEPS = 2000


@dataclass(frozen=True)
class RegionalCharge:
    m: int
    region: tuple[int, ...]
    Q: np.ndarray

    @property
    def boundary_bonds(self) -> list[tuple[int, int]]:
        """Bonds ``(n, n+1)`` (periodic) with exactly one end inside the region."""
        inside = set(self.region)
        bonds = []
        for n in range(1, self.m + 1):
            nxt = n % self.m + 1
            if (n in inside) != (nxt in inside):
                bonds.append((n, nxt))
        return bonds

    def spectral_projector(self, value: int) -> np.ndarray:
        diag = np.real(np.diag(self.Q))
        return np.diag((np.abs(diag - value) < 0.5).astype(np.complex128))


def regional_charge(region, m: int) -> RegionalCharge:
    if m > MAX_SITES:
        raise ValueError(f"dense conservation checks limited to m <= {MAX_SITES}, got {m}")
    region = tuple(sorted(set(region)))
    if not region or region[0] < 1 or region[-1] > m:
        raise ValueError(f"region {region} must be a non-empty subset of 1..{m}")
    return RegionalCharge(m=m, region=region, Q=down_count_operator(region, m).toarray())


def chain_hamiltonian(m: int, chi: float = 1.0) -> np.ndarray:
    if m > MAX_SITES:
        raise ValueError(f"dense conservation checks limited to m <= {MAX_SITES}, got {m}")
    return pauli_hamiltonian(m, chi).toarray()


def current_operator(H: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """``dQ/dt = i[H, Q]`` at time zero."""
    return 1j * (H @ Q - Q @ H)


class _Eigen:
    """Eigenbasis of ``H`` with operators rotated into it."""

    def __init__(self, H: np.ndarray):
        self.E, self.V = np.linalg.eigh(H)
        self.omega = self.E[:, None] - self.E[None, :]

    def rotate(self, X: np.ndarray) -> np.ndarray:
        return self.V.conj().T @ X @ self.V

    def heisenberg(self, X_eig: np.ndarray, t: float) -> np.ndarray:
        return X_eig * np.exp(1j * self.omega * t)

    def midpoint_integral(self, X_eig: np.ndarray, t: float, steps: int) -> np.ndarray:
        h = t / steps
        out = np.zeros_like(X_eig)
        for j in range(steps):
            out += self.heisenberg(X_eig, (j + 0.5) * h)
        return h * out


@dataclass(frozen=True)
class FluxBalanceResult:
    residual: float
    steps: int
    t: float
    current_norm: float


def flux_balance_check(H: np.ndarray, charge: RegionalCharge, t: float, steps: int = DEFAULT_STEPS) -> FluxBalanceResult:
    """Operator-norm residual of ``Q_t - Q - int_0^t J(t') dt'`` with the midpoint rule."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    eig = _Eigen(H)
    Q = eig.rotate(charge.Q)
    J = eig.rotate(current_operator(H, charge.Q))
    resid = eig.heisenberg(Q, t) - Q - eig.midpoint_integral(J, t, steps)
    return FluxBalanceResult(
        residual=float(np.linalg.norm(resid, 2)),
        steps=steps,
        t=t,
        current_norm=float(np.linalg.norm(J, 2)),
    )


def convergence_order(H: np.ndarray, charge: RegionalCharge, t: float, steps=(250, 500, 1000, 2000)) -> list[float]:
    """Observed orders ``log2(r(n) / r(2n))`` along a doubling sequence of step counts."""
    res = [flux_balance_check(H, charge, t, n).residual for n in steps]
    return [math.log(a / b, steps[i + 1] / steps[i]) for i, (a, b) in enumerate(zip(res, res[1:]))]


def current_locality(H: np.ndarray, charge: RegionalCharge, chi: float = 1.0) -> dict[str, float]:
    """How far ``J`` is from living on the boundary bonds alone.

    ``bond_residual`` compares ``J`` with the current of only the boundary
    bond terms; ``spectator_residual`` is the largest commutator of ``J``
    with a Pauli operator on a site outside those bonds.
    """
    m = charge.m
    J = current_operator(H, charge.Q)
    H_bonds = np.zeros_like(H)
    support = set()
    for a, b in charge.boundary_bonds:
        support.update((a, b))
        for op in "xyz":
            H_bonds += (site_operator(op, a, m) @ site_operator(op, b, m)).toarray()
    H_bonds *= -0.5 * chi
    bond_residual = float(np.abs(J - current_operator(H_bonds, charge.Q)).max())
    spectator = 0.0
    for s in range(1, m + 1):
        if s in support:
            continue
        for op in "xyz":
            S = site_operator(op, s, m).toarray()
            spectator = max(spectator, float(np.abs(J @ S - S @ J).max()))
    return {"bond_residual": bond_residual, "spectator_residual": spectator, "support": sorted(support)}


@dataclass(frozen=True)
class AmplitudePair:
    direct: complex
    flux: complex

    @property
    def gap(self) -> float:
        return abs(self.direct - self.flux)


def amplitude_suppression_check(
    H: np.ndarray,
    charge: RegionalCharge,
    t: float,
    bra: np.ndarray,
    ket: np.ndarray,
    alpha1: int,
    alpha2: int,
    steps: int = DEFAULT_STEPS,
) -> AmplitudePair:
    """Direct amplitude ``<bra|P_a2 U P_a1|ket>`` and its boundary-flux form.

    The flux form is ``<bra|P_a2 U [int_0^t J(t') dt'] P_a1|ket> / (a2 - a1)``
    with the integral done by the midpoint rule.
    """
    if alpha1 == alpha2:
        raise ValueError("alpha1 == alpha2: the flux form divides by alpha2 - alpha1")
    eig = _Eigen(H)
    P1 = charge.spectral_projector(alpha1)
    P2 = charge.spectral_projector(alpha2)
    U = (eig.V * np.exp(-1j * eig.E * t)) @ eig.V.conj().T
    direct = complex(bra.conj() @ P2 @ U @ P1 @ ket)
    integral = eig.V @ eig.midpoint_integral(eig.rotate(current_operator(H, charge.Q)), t, steps) @ eig.V.conj().T
    flux = complex(bra.conj() @ P2 @ U @ integral @ P1 @ ket) / (alpha2 - alpha1)
    return AmplitudePair(direct=direct, flux=flux)


def two_time_df(H: np.ndarray, charge: RegionalCharge, rho: np.ndarray, t: float) -> dict[tuple[int, int, int], complex]:
    """``D(a1, a2 | a1', a2)`` for all eigenvalues of ``Q``."""
    eig = _Eigen(H)
    U = (eig.V * np.exp(-1j * eig.E * t)) @ eig.V.conj().T
    q = np.rint(np.real(np.diag(charge.Q))).astype(int)
    values = sorted(set(q.tolist()))
    # Q is diagonal in the computational basis, so its projectors are index masks
    idx = {a: np.nonzero(q == a)[0] for a in values}
    out = {}
    for a1 in values:
        left = U[:, idx[a1]]
        for a1p in values:
            right = U[:, idx[a1p]].conj().T
            inner = left @ rho[np.ix_(idx[a1], idx[a1p])]
            for a2 in values:
                rows = idx[a2]
                out[(a1, a2, a1p)] = complex(np.sum(inner[rows] * right[:, rows].T))
    return out


def exact_diagonality(H: np.ndarray, charge: RegionalCharge, rho: np.ndarray, t: float) -> float:
    """Largest off-diagonal (``a1 != a1'``) entry of the two-time df."""
    df = two_time_df(H, charge, rho, t)
    return max((abs(v) for (a1, _, a1p), v in df.items() if a1 != a1p), default=0.0)


def suppression_trend(m: int, chi: float, t: float, sizes=(5, 4, 3, 2, 1)) -> list[tuple[int, float]]:
    """Largest one-down-spin transfer amplitude into ``V = {1..s}`` for each size ``s``.

    The down spin starts outside ``V`` (``Q = 0``) and is found inside
    (``Q = 1``).  Reported for inspection; no monotonicity is imposed.
    """
    from .spectral import basis_state

    H = chain_hamiltonian(m, chi)
    out = []
    for s in sizes:
        charge = regional_charge(range(1, s + 1), m)
        eig = _Eigen(H)
        U = (eig.V * np.exp(-1j * eig.E * t)) @ eig.V.conj().T
        P1 = charge.spectral_projector(0)
        P2 = charge.spectral_projector(1)
        best = 0.0
        for a in range(s + 1, m + 1):
            ket = basis_state([a], m)
            for b in range(1, s + 1):
                bra = basis_state([b], m)
                best = max(best, abs(bra.conj() @ P2 @ U @ P1 @ ket))
        out.append((s, float(best)))
    return out
