"""Decoherence functional for occupation numbers of N identical components.

Each component carries the two-alternative df of :mod:`spinhist.component`.
The collective entry ``D(n1, n2 | n1', n2)`` counts components answering
"yes" at time 0 on the bra side (``n1``), on the ket side (``n1'``), and at
time t (``n2``).  Three routes are provided:

* dense tensor products on ``N`` copies (small oracle),
* the six-fold binomial sum that extracts one coefficient of the N-th power
  of the component generating polynomial (:func:`appendix_a_exact`),
* a large-N Gaussian form with optional Gaussian coarse-graining of width
  ``sigma``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from functools import reduce

import numpy as np
from scipy.special import gammaln

from .component import ComponentDF, gamma_factor

TENSOR_CAP = 4096
EXACT_CAP = 500


@dataclass(frozen=True)
class OccupationHistory:
    N: int
    n1: int
    n1p: int
    n2: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        for name in ("n1", "n1p", "n2"):
            v = getattr(self, name)
            if not 0 <= v <= self.N:
                raise ValueError(f"{name}={v} outside 0..{self.N}")


# ---------------------------------------------------------------------------
# Dense tensor-product oracle
# ---------------------------------------------------------------------------


def _kron_all(ops):
    return reduce(np.kron, ops)


def _check_tensor_cap(dim: int, N: int, cap: int) -> None:
    if dim**N > cap:
        raise ValueError(f"tensor dimension {dim}^{N} = {dim**N} exceeds cap {cap}")


def f_operator(P: np.ndarray, lam: float) -> np.ndarray:
    """``exp(i lam) P + (1 - P)``; unitary for any real ``lam``."""
    return np.exp(1j * lam) * P + (np.eye(P.shape[0]) - P)


def occupation_projector_oracle(P: np.ndarray, N: int, n: int, cap: int = TENSOR_CAP) -> np.ndarray:
    """Projector onto exactly ``n`` of ``N`` components answering "yes".

    Sum over all placements of ``n`` factors ``P`` among ``N - n`` factors
    ``1 - P``.
    """
    P = np.asarray(P, dtype=np.complex128)
    dim = P.shape[0]
    _check_tensor_cap(dim, N, cap)
    if not 0 <= n <= N:
        raise ValueError(f"occupation n={n} outside 0..{N}")
    Q = np.eye(dim) - P
    out = np.zeros((dim**N, dim**N), dtype=np.complex128)
    for yes in itertools.combinations(range(N), n):
        out += _kron_all([P if i in yes else Q for i in range(N)])
    return out


def total_hamiltonian(H: np.ndarray, N: int) -> np.ndarray:
    """Non-interacting sum ``H x 1 x ... + 1 x H x ... + ...``."""
    dim = H.shape[0]
    eye = np.eye(dim)
    return sum(_kron_all([H if i == k else eye for i in range(N)]) for k in range(N))


def collective_df_tensor_oracle(rho, H, P, t: float, history: OccupationHistory, cap: int = TENSOR_CAP) -> complex:
    """``Tr(P_n2 exp(-iH_T t) P_n1 rho^{xN} P_n1' exp(iH_T t))`` on the full tensor space."""
    rho = np.asarray(rho, dtype=np.complex128)
    H = np.asarray(H, dtype=np.complex128)
    N = history.N
    _check_tensor_cap(rho.shape[0], N, cap)
    evals, V = np.linalg.eigh(total_hamiltonian(H, N))
    U = (V * np.exp(-1j * evals * t)) @ V.conj().T
    rho_T = _kron_all([rho] * N)
    P1 = occupation_projector_oracle(P, N, history.n1, cap)
    P1p = occupation_projector_oracle(P, N, history.n1p, cap)
    P2 = occupation_projector_oracle(P, N, history.n2, cap)
    return complex(np.trace(P2 @ U @ P1 @ rho_T @ P1p @ U.conj().T))


# ---------------------------------------------------------------------------
# Exact binomial evaluation
# ---------------------------------------------------------------------------


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _log_power_poly(const: complex, slope: complex, n: int):
    """Coefficients of ``(const + slope x)^n`` as (log-magnitude, phase) arrays.

    Zero bases raised to the zeroth power count as 1; other zero-base terms
    get log-magnitude ``-inf``.
    """
    i = np.arange(n + 1)

    def log_pow(base, e):
        if base == 0:
            return np.where(e == 0, 0.0, -np.inf), np.zeros(len(e))
        return e * math.log(abs(base)), e * np.angle(base)

    la, pa = log_pow(slope, i)
    lb, pb = log_pow(const, n - i)
    return _log_binom(n, i) + la + lb, pa + pb


def _scaled(logmag: np.ndarray, phase: np.ndarray):
    """Complex array divided by ``exp(shift)`` plus the shift."""
    finite = logmag[np.isfinite(logmag)]
    if finite.size == 0:
        return np.zeros(len(logmag), dtype=np.complex128), 0.0
    shift = float(finite.max())
    return np.exp(logmag - shift + 1j * phase), shift


def appendix_a_exact(df: ComponentDF, history: OccupationHistory, cap: int = EXACT_CAP) -> complex:
    """One collective entry from the six-fold binomial sum.

    Components are split by their time-t answer (``n2`` yes, ``N - n2`` no),
    then by their ket-side answer at time 0 (``k`` of the "no" group and
    ``j = n1' - k`` of the "yes" group), then by their bra-side answer
    (``l, m, r, s``).  The two Kronecker constraints fix ``j`` and the total
    ``l + m + r + s = n1``; the latter is done as a polynomial convolution.
    Binomials and powers are carried as log-magnitude and phase.
    """
    N, n1, n1p, n2 = history.N, history.n1, history.n1p, history.n2
    if N > cap:
        raise ValueError(f"N={N} exceeds exact-evaluation cap {cap}")
    log_terms = []
    vals = []
    for k in range(max(0, n1p - n2), min(N - n2, n1p) + 1):
        j = n1p - k
        weight = _log_binom(N, n2) + _log_binom(N - n2, k) + _log_binom(n2, j)
        # (D(n,n|y,n) + p(y,n) x)^k, (p(n,n) + D(y,n|n,n) x)^(N-n2-k),
        # (D(n,y|y,y) + p(y,y) x)^j, (p(n,y) + D(y,y|n,y) x)^(n2-j)
        factors = [
            _log_power_poly(df.d_nn_yn, df.p_yn, k),
            _log_power_poly(df.p_nn, df.d_yn_nn, N - n2 - k),
            _log_power_poly(df.d_ny_yy, df.p_yy, j),
            _log_power_poly(df.p_ny, df.d_yy_ny, n2 - j),
        ]
        scaled = [_scaled(lm, ph) for lm, ph in factors]
        left = np.convolve(scaled[0][0], scaled[1][0])
        right = np.convolve(scaled[2][0], scaled[3][0])
        # coefficient of x^n1 in left * right
        lo = max(0, n1 - (len(right) - 1))
        hi = min(n1, len(left) - 1)
        if lo > hi:
            continue
        idx = np.arange(lo, hi + 1)
        inner = complex(np.dot(left[idx], right[n1 - idx]))
        if inner == 0:
            continue
        log_terms.append(weight + sum(s for _, s in scaled) + math.log(abs(inner)))
        vals.append(inner / abs(inner))
    if not log_terms:
        return 0j
    top = max(log_terms)
    total = sum(v * math.exp(lt - top) for v, lt in zip(vals, log_terms))
    return complex(total * math.exp(top)) if top > -745 else 0j


def _bivariate_mul(poly: np.ndarray, c00, c10, c01, c11) -> np.ndarray:
    """Multiply ``poly[x_deg, y_deg]`` by ``c00 + c10 x + c01 y + c11 x y``."""
    a, b = poly.shape
    out = np.zeros((a + 1, b + 1), dtype=np.complex128)
    out[:a, :b] += c00 * poly
    out[1:, :b] += c10 * poly
    out[:a, 1:] += c01 * poly
    out[1:, 1:] += c11 * poly
    return out


def exact_df_slice(df: ComponentDF, N: int, n2: int) -> np.ndarray:
    """All entries with final occupation ``n2`` as an ``(N+1, N+1)`` array ``[n1, n1']``.

    ``C(N, n2) A^(N-n2) B^n2`` where ``A`` and ``B`` are the bilinear
    generating polynomials of the "no" and "yes" final alternatives in the
    bra (``x``) and ket (``y``) time-0 counts.  Built by repeated
    multiplication, O(N^3) per slice.
    """
    if not 0 <= n2 <= N:
        raise ValueError(f"n2={n2} outside 0..{N}")
    poly = np.ones((1, 1), dtype=np.complex128)
    for _ in range(N - n2):
        poly = _bivariate_mul(poly, df.p_nn, df.d_yn_nn, df.d_nn_yn, df.p_yn)
    for _ in range(n2):
        poly = _bivariate_mul(poly, df.p_ny, df.d_yy_ny, df.d_ny_yy, df.p_yy)
    return math.comb(N, n2) * poly


@dataclass
class ExactDFTable:
    """Exact collective entries, ``values[n1, n2, n1']``."""

    N: int
    values: np.ndarray

    def __getitem__(self, key):
        n1, n2, n1p = key
        return self.values[n1, n2, n1p]

    def diagonal(self) -> np.ndarray:
        """Probabilities ``p(n1, n2)`` as an ``(N+1, N+1)`` array."""
        idx = np.arange(self.N + 1)
        return self.values[idx, :, idx]

    def rows(self):
        N = self.N
        for n1 in range(N + 1):
            for n2 in range(N + 1):
                for n1p in range(N + 1):
                    v = self.values[n1, n2, n1p]
                    yield n1, n2, n1p, v.real, v.imag


def exact_df_table(df: ComponentDF, N: int, n2_values=None) -> ExactDFTable:
    """Exact table; slices not listed in ``n2_values`` are left at zero."""
    if n2_values is None:
        n2_values = range(N + 1)
    values = np.zeros((N + 1, N + 1, N + 1), dtype=np.complex128)
    for n2 in n2_values:
        values[:, n2, :] = exact_df_slice(df, N, n2)
    return ExactDFTable(N=N, values=values)


# ---------------------------------------------------------------------------
# Large-N Gaussian form
# ---------------------------------------------------------------------------


class DegenerateGaussianError(ValueError):
    """Raised when the Gaussian channel is undefined (Im d = 0 or p0, pt in {0, 1})."""


@dataclass(frozen=True)
class GaussianCoefficients:
    N: int
    A02: complex
    A11: float
    A12: float
    A22: float
    alpha: float
    beta: float
    gamma: float
    nu: float

    def to_json(self) -> dict:
        out = asdict(self)
        out["A02"] = {"re": self.A02.real, "im": self.A02.imag}
        return out


def gaussian_coefficients(df: ComponentDF, N: int) -> GaussianCoefficients:
    """Quadratic-exponent coefficients of the unsmeared large-N form.

    With ``d = D(y,y|n,y)`` the per-component second cumulants give
    ``A02 = 2 i N Im d``, ``A11 = 2 N p0 p0bar``,
    ``A12 = 2 N (p_yy - p0 pt + Re d)``, ``A22 = 2 N pt ptbar``, and the
    exponent is
    ``-alpha (n1-n1')^2 - beta S^2 - i gamma (n1-n1') q - i nu (n1-n1') S``
    with ``S = n1 + n1' - 2 N p0`` and ``q = n2 - N pt``.
    """
    p0, pt = df.p0, df.pt
    if not (0.0 < p0 < 1.0 and 0.0 < pt < 1.0):
        raise DegenerateGaussianError(f"degenerate marginals p0={p0}, pt={pt}")
    im_d = df.d.imag
    if im_d == 0.0:
        raise DegenerateGaussianError("Im D(y,y|n,y) = 0: Gaussian channel degenerate")
    A02 = 2j * N * im_d
    A11 = 2.0 * N * p0 * (1.0 - p0)
    A12 = 2.0 * N * (df.p_yy - p0 * pt + df.d.real)
    A22 = 2.0 * N * pt * (1.0 - pt)
    iA02 = (1j * A02).real
    return GaussianCoefficients(
        N=N,
        A02=A02,
        A11=A11,
        A12=A12,
        A22=A22,
        alpha=(A11 * A22 - A12**2) / (4.0 * A11 * iA02**2),
        beta=1.0 / (4.0 * A11),
        gamma=1.0 / iA02,
        nu=-A12 / (2.0 * A11 * iA02),
    )


@dataclass(frozen=True)
class SmearedCoefficients:
    ta: float
    tb: float
    te: float
    tph: float
    tg: float
    tn: float
    sigma: float
    b: float

    def to_json(self) -> dict:
        return asdict(self)


def smeared_coefficients(gc: GaussianCoefficients, sigma: float) -> SmearedCoefficients:
    """Coefficients after Gaussian coarse-graining of all three occupations by ``sigma``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    s2 = sigma * sigma
    one_b = 1.0 + 4.0 * s2 * gc.beta
    b = gc.alpha + gc.gamma**2 * s2 / 2.0 + gc.nu**2 * s2 / one_b
    one_bb = 1.0 + 4.0 * s2 * b
    return SmearedCoefficients(
        ta=b / one_bb,
        tb=gc.beta / one_b + s2 * gc.nu**2 / (one_bb * one_b**2),
        te=gc.gamma**2 * s2 / one_bb,
        tph=2.0 * s2 * gc.nu * gc.gamma / (one_bb * one_b),
        tg=gc.gamma / one_bb,
        tn=gc.nu / (one_bb * one_b),
        sigma=sigma,
        b=b,
    )


def collective_df_gaussian(sc: SmearedCoefficients, N: int, p0: float, pt: float, N1, N2, N1p):
    """Unnormalized coarse-grained entry; meaningful only as a ratio to its peak value 1."""
    diff = np.asarray(N1, dtype=float) - np.asarray(N1p, dtype=float)
    S = np.asarray(N1, dtype=float) + np.asarray(N1p, dtype=float) - 2.0 * N * p0
    q = np.asarray(N2, dtype=float) - N * pt
    exponent = (
        -sc.ta * diff**2
        - sc.tb * S**2
        - sc.te * q**2
        - sc.tph * q * S
        - 1j * sc.tg * diff * q
        - 1j * sc.tn * diff * S
    )
    out = np.exp(exponent)
    return out[()] if out.ndim == 0 else out


def collective_probabilities(sc: SmearedCoefficients, N: int, p0: float, pt: float, N1, N2):
    """Diagonal of :func:`collective_df_gaussian`, unnormalized."""
    a = np.asarray(N1, dtype=float) - N * p0
    q = np.asarray(N2, dtype=float) - N * pt
    out = np.exp(-4.0 * sc.tb * a**2 - sc.te * q**2 - 2.0 * sc.tph * q * a)
    return out[()] if out.ndim == 0 else out


def decoherence_ratio(sc: SmearedCoefficients, N1, N1p):
    """``|D(N1,N2|N1',N2)| / sqrt(p(N1,N2) p(N1',N2))``."""
    if sc.ta <= sc.tb:
        raise ValueError("smeared alpha <= beta: no off-diagonal suppression")
    diff = np.asarray(N1, dtype=float) - np.asarray(N1p, dtype=float)
    out = np.exp(-(sc.ta - sc.tb) * diff**2)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class DecoherenceDegree:
    epsilon: float
    log_epsilon: float
    exact_epsilon: float | None
    gamma: float
    sigma: float
    degenerate: bool = False


def degree_of_decoherence(df: ComponentDF, N: int, f: float) -> DecoherenceDegree:
    """Suppression of off-diagonal terms at occupation separation ``sigma = f N``.

    ``epsilon = exp(-N Gamma f^2 / (Im d)^2)`` is the small-sigma closed form;
    ``exact_epsilon = exp(-(ta - tb) sigma^2)`` uses the full smeared
    coefficients.  With ``Im d = 0`` the off-diagonal Gaussian channel is
    absent and epsilon is reported as 0 with ``degenerate=True``.
    """
    if f <= 0:
        raise ValueError(f"f must be positive, got {f}")
    sigma = f * N
    gamma = gamma_factor(df)
    im_d = df.d.imag
    if im_d == 0.0:
        return DecoherenceDegree(0.0, -math.inf, None, gamma, sigma, degenerate=True)
    log_eps = -N * gamma * f * f / im_d**2
    sc = smeared_coefficients(gaussian_coefficients(df, N), sigma)
    exact = math.exp(-(sc.ta - sc.tb) * sigma**2)
    return DecoherenceDegree(math.exp(log_eps), log_eps, exact, gamma, sigma)
