"""Two-time, two-alternative decoherence functional of a single component.

Alternatives are "yes" (projector ``P``) and "no" (``1 - P``) at times 0 and
t.  Entry ``D(a1, a2 | a1', a2)`` is ``Tr(P_a2 U P_a1 rho P_a1' U^dag)`` with
``U = exp(-iHt)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from .spectral import ChainConfig, PropagatorKernel, propagator_column, projector_matrix_element


@dataclass(frozen=True)
class ComponentDF:
    p_yy: float
    p_ny: float
    p_yn: float
    p_nn: float
    d_yy_ny: complex
    d_ny_yy: complex
    d_yn_nn: complex
    d_nn_yn: complex

    @property
    def p0(self) -> float:
        """Probability of "yes" at time 0."""
        return self.p_yy + self.p_yn

    @property
    def pt(self) -> float:
        """Probability of "yes" at time t."""
        return self.p_yy + self.p_ny

    @property
    def p0bar(self) -> float:
        return self.p_ny + self.p_nn

    @property
    def ptbar(self) -> float:
        return self.p_yn + self.p_nn

    @property
    def d(self) -> complex:
        """The single independent off-diagonal entry ``D(y,y|n,y)``."""
        return self.d_yy_ny

    def sum_rule_residuals(self) -> dict[str, float]:
        return {
            "probability_sum": abs(self.p_yy + self.p_ny + self.p_yn + self.p_nn - 1.0),
            "offdiag_first": abs(self.d_yy_ny + self.d_yn_nn),
            "offdiag_second": abs(self.d_ny_yy + self.d_nn_yn),
            "conjugacy": abs(self.d_ny_yy - np.conj(self.d_yy_ny)),
        }

    def as_row(self) -> list:
        return [getattr(self, f.name) for f in fields(self)]

    @classmethod
    def from_offdiagonal(cls, p_yy, p_ny, p_yn, p_nn, d) -> "ComponentDF":
        """Build a df that satisfies the two-time sum rules exactly."""
        d = complex(d)
        return cls(float(p_yy), float(p_ny), float(p_yn), float(p_nn), d, d.conjugate(), -d, -d.conjugate())


@dataclass(frozen=True)
class InitialPair:
    """Sites of the two branches of ``(|phi_k1> + |phi_k2>) / sqrt(2)``."""

    k1: int
    k2: int

    def validate(self, cfg: ChainConfig) -> None:
        if not 1 <= self.k1 <= cfg.M1:
            raise ValueError(f"k1={self.k1} not in region 1 (1..{cfg.M1})")
        if not cfg.M1 + 1 <= self.k2 <= cfg.M:
            raise ValueError(f"k2={self.k2} not in region 2 ({cfg.M1 + 1}..{cfg.M})")


def centered_pair(M: int, M1: int) -> InitialPair:
    """The centre of each region."""
    return InitialPair(k1=-(-M1 // 2), k2=M1 - (-(M - M1) // 2))


def odd_centered_pair(M: int, M1: int) -> InitialPair:
    """Region centres, nudged by one site so that ``k2 - k1`` is odd.

    On a ring with even ``M`` the spectrum is symmetric under ``E -> -E``,
    so ``g(D) i^(-D)`` is real and ``D(y,y|n,y)`` is real for even
    separations and purely imaginary for odd ones.  An even separation
    therefore forces ``Im D(y,y|n,y) = 0``.  ``k2`` moves right when region 2
    has room, otherwise ``k1`` moves.
    """
    pair = centered_pair(M, M1)
    k1, k2 = pair.k1, pair.k2
    if (k2 - k1) % 2 == 0:
        if k2 < M:
            k2 += 1
        elif k1 < M1:
            k1 += 1
        else:
            k1 -= 1
    return InitialPair(k1, k2)


def fixed_pair(k1: int, k2: int) -> Callable[[int, int], InitialPair]:
    def rule(M: int, M1: int) -> InitialPair:
        return InitialPair(k1, k2)

    return rule


def _evolution(H: np.ndarray, t: float) -> np.ndarray:
    evals, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * evals * t)) @ V.conj().T


def component_df_generic(rho, H, P, t: float) -> ComponentDF:
    """Evaluate the eight traces by dense evolution."""
    rho = np.asarray(rho, dtype=np.complex128)
    H = np.asarray(H, dtype=np.complex128)
    P = np.asarray(P, dtype=np.complex128)
    dim = rho.shape[0]
    if rho.shape != (dim, dim) or H.shape != (dim, dim) or P.shape != (dim, dim):
        raise ValueError(f"dimension mismatch: rho {rho.shape}, H {H.shape}, P {P.shape}")
    if np.abs(P @ P - P).max() > 1e-8 or np.abs(P - P.conj().T).max() > 1e-8:
        raise ValueError("P is not an orthogonal projector")
    if abs(np.trace(rho) - 1.0) > 1e-10:
        raise ValueError(f"trace(rho) = {np.trace(rho)} != 1")

    U = _evolution(H, t)
    Q = np.eye(dim) - P
    # Heisenberg-picture final projectors
    Pt = U.conj().T @ P @ U
    Qt = U.conj().T @ Q @ U

    def tr(final, left, right):
        return np.trace(final @ left @ rho @ right)

    return ComponentDF(
        p_yy=float(tr(Pt, P, P).real),
        p_ny=float(tr(Pt, Q, Q).real),
        p_yn=float(tr(Qt, P, P).real),
        p_nn=float(tr(Qt, Q, Q).real),
        d_yy_ny=complex(tr(Pt, P, Q)),
        d_ny_yy=complex(tr(Pt, Q, P)),
        d_yn_nn=complex(tr(Qt, P, Q)),
        d_nn_yn=complex(tr(Qt, Q, P)),
    )


def _df_from_elements(p11: float, p22: float, p21: complex) -> ComponentDF:
    """Assemble the df from ``<k1|P(t)|k1>``, ``<k2|P(t)|k2>``, ``<k2|P(t)|k1>``."""
    return ComponentDF.from_offdiagonal(
        p_yy=0.5 * p11,
        p_ny=0.5 * p22,
        p_yn=0.5 * (1.0 - p11),
        p_nn=0.5 * (1.0 - p22),
        d=0.5 * p21,
    )


def component_df_spin_chain(cfg: ChainConfig, pair: InitialPair, kernel: PropagatorKernel | None = None) -> ComponentDF:
    """Spin-chain df for the initial state ``(|phi_k1> + |phi_k2>) / sqrt(2)``.

    With ``P rho Pbar = |phi_k1><phi_k2| / 2`` the trace gives
    ``D(y,y|n,y) = <phi_k2|P(t)|phi_k1> / 2``; the "no" rows use
    ``Pbar(t) = 1 - P(t)``.
    """
    pair.validate(cfg)
    if kernel is None:
        kernel = propagator_column(cfg)
    rows = np.array([pair.k1, pair.k2, pair.k2])
    cols = np.array([pair.k1, pair.k2, pair.k1])
    p11, p22, p21 = projector_matrix_element(cfg, rows, cols, kernel=kernel)
    return _df_from_elements(p11.real, p22.real, p21)


def gamma_factor(df: ComponentDF) -> float:
    """``pt ptbar - (p_yy - p0 pt + Re d)^2 / (p0 p0bar)``."""
    p0, pt = df.p0, df.pt
    denom = p0 * (1.0 - p0)
    if denom <= 0.0:
        raise ZeroDivisionError(f"degenerate initial condition: p0 = {p0}")
    return pt * (1.0 - pt) - (df.p_yy - p0 * pt + df.d.real) ** 2 / denom


def offdiagonal_ratio(df: ComponentDF) -> float:
    """``|D(y,y|n,y)| / sqrt(p_yy p_ny)``."""
    return abs(df.d) / math.sqrt(df.p_yy * df.p_ny)


def imag_over_gamma(df: ComponentDF) -> float:
    """``|Im D(y,y|n,y)|^2 / Gamma``."""
    return df.d.imag**2 / gamma_factor(df)


# ---------------------------------------------------------------------------
# M1 sweep
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("M1", "p_yy", "p_ny", "p_yn", "p_nn", "re_d", "im_d", "ratio", "fig3_quantity")


@dataclass
class SweepTable:
    M: int
    chi: float
    t: float
    M1: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    dfs: list[ComponentDF]

    def __len__(self) -> int:
        return len(self.dfs)

    def column(self, name: str) -> np.ndarray:
        if name == "M1":
            return self.M1.copy()
        if name == "re_d":
            return np.array([df.d.real for df in self.dfs])
        if name == "im_d":
            return np.array([df.d.imag for df in self.dfs])
        if name == "ratio":
            return np.array([offdiagonal_ratio(df) for df in self.dfs])
        if name == "gamma":
            return np.array([gamma_factor(df) for df in self.dfs])
        if name == "fig3_quantity":
            return np.array([imag_over_gamma(df) for df in self.dfs])
        return np.array([getattr(df, name) for df in self.dfs])

    def rows(self, columns=SWEEP_COLUMNS):
        cols = [self.column(c) for c in columns]
        return list(zip(*cols))


def _window_sums(seq: np.ndarray, starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Sums of ``seq`` over periodic windows ``[start, start + length)``."""
    M = len(seq)
    prefix = np.concatenate(([0.0], np.cumsum(np.concatenate((seq, seq)))))
    s = np.mod(starts, M)
    return prefix[s + lengths] - prefix[s]


def m1_sweep(
    M: int,
    chi: float = 1.0,
    t: float = 0.0,
    pair_rule: Callable[[int, int], InitialPair] = odd_centered_pair,
    m1_values=None,
) -> SweepTable:
    """Component df for every region size ``M1 = 1..M-1``.

    The propagator column does not depend on ``M1``, and each ``P(t)``
    element is a sum of ``M1`` consecutive terms of a fixed periodic sequence
    once the pair separation is fixed.  One prefix sum per distinct
    separation therefore yields every row in O(1).
    """
    if m1_values is None:
        m1_values = np.arange(1, M)
    m1_values = np.asarray(m1_values, dtype=int)
    if np.any(m1_values < 1) or np.any(m1_values > M - 1):
        raise ValueError("M1 values must lie in 1..M-1 so region 2 can host k2")
    kernel = propagator_column(ChainConfig(M=M, M1=1, chi=chi, t=t))
    g = kernel.g

    pairs = [pair_rule(M, int(m1)) for m1 in m1_values]
    for m1, pair in zip(m1_values, pairs):
        pair.validate(ChainConfig(M=M, M1=int(m1), chi=chi, t=t))
    k1 = np.array([p.k1 for p in pairs])
    k2 = np.array([p.k2 for p in pairs])

    # sum_{k=1}^{M1} conj(g(k-a)) g(k-b) = window of conj(g(j)) g(j+a-b) over j = 1-a .. M1-a
    weight = np.abs(g) ** 2
    p11 = _window_sums(weight, 1 - k1, m1_values)
    p22 = _window_sums(weight, 1 - k2, m1_values)
    p21 = np.empty(len(m1_values), dtype=np.complex128)
    sep = np.mod(k2 - k1, M)
    for delta in np.unique(sep):
        rows = np.nonzero(sep == delta)[0]
        seq = np.conj(g) * np.roll(g, -delta)
        p21[rows] = _window_sums(seq, 1 - k2[rows], m1_values[rows])

    dfs = [_df_from_elements(a, b, c) for a, b, c in zip(p11, p22, p21)]
    return SweepTable(M=M, chi=chi, t=t, M1=m1_values, k1=k1, k2=k2, dfs=dfs)
