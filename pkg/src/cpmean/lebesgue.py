"""Lebesgue-type decomposition of CP maps with respect to a reference map.

Everything happens at the Choi level.  With ``C = C_F + C_G`` the
Radon-Nikodym pair ``A' = C^{+1/2} C_F C^{+1/2}`` and ``B' = C^{+1/2} C_G
C^{+1/2}`` satisfies ``A' + B' = supp(C)``, so the two derivatives commute.
The absolutely continuous part of G with respect to F is the compression of
B' onto the support of A', pushed back through ``C^{1/2}``; it coincides with
the parallel-sum limit ``lim_n (nF : G)``, which is retained here as the
independent oracle (geometric doubling schedule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cpmaps import CpMap, _check_same_dims
from .errors import DomainError, InvalidInput, NonConvergence, NumericalError
from .hermlinalg import (
    TOL_PSD,
    TOL_RECON,
    Projection,
    PsdMatrix,
    frac_power_psd,
    psd_sqrt,
    support_projection,
)
from .opmeans import parallel_sum

TOL_LIM = 1e-6  # parallel-sum-limit agreement, relative to max(1, ||C_G||)

# A' + B' = supp(C) puts the spectrum of A' in [0, 1], so the support cutoff
# of the RN derivatives is effectively absolute.
_RN_SUPPORT_RTOL = 1e-10


@dataclass(frozen=True)
class RnPair:
    """Radon-Nikodym derivatives of a pair of maps in their joint representation.

    c_half is the PSD square root of C_F + C_G; a_prime and b_prime are the
    commuting derivatives with a_prime + b_prime = support; sandwiching either
    derivative with c_half recovers the corresponding Choi matrix.
    """

    c_half: PsdMatrix
    a_prime: PsdMatrix
    b_prime: PsdMatrix
    support: Projection


@dataclass(frozen=True)
class LebesgueSplit:
    """Decomposition G = ac + sing with ac absolutely continuous and sing singular.

    alpha_min is the least alpha with C_ac <= alpha * C_F (+inf if the ranges
    fail to nest, which cannot happen for the canonical ac part).
    """

    ac: CpMap
    sing: CpMap
    phi_support: Projection
    alpha_min: float


def rn_pair(f: CpMap, g: CpMap) -> RnPair:
    """Construct the commuting Radon-Nikodym pair for (F, G)."""
    _check_same_dims(f, g)
    c = PsdMatrix.clamped(f.choi.entries + g.choi.entries)
    c_half = psd_sqrt(c)
    c_inv_half = frac_power_psd(c, -0.5)
    ci = c_inv_half.entries
    a_prime = PsdMatrix.clamped(ci @ f.choi.entries @ ci)
    b_prime = PsdMatrix.clamped(ci @ g.choi.entries @ ci)
    return RnPair(c_half, a_prime, b_prime, support_projection(c))


def _ac_choi(f: CpMap, g: CpMap) -> tuple[PsdMatrix, Projection]:
    pair = rn_pair(f, g)
    p_phi = support_projection(pair.a_prime, _RN_SUPPORT_RTOL)
    ch = pair.c_half.entries
    comp = p_phi.entries @ pair.b_prime.entries @ p_phi.entries
    ac = ch @ comp @ ch
    return PsdMatrix.clamped(0.5 * (ac + ac.conj().T)), p_phi


def ac_part(f: CpMap, g: CpMap) -> CpMap:
    """Absolutely continuous part of G with respect to F (the maximal one)."""
    ac, _ = _ac_choi(f, g)
    return CpMap(f.dim_in, f.dim_out, ac)


def ac_part_oracle(f: CpMap, g: CpMap, n_max: int = 2 ** 20) -> CpMap:
    """Parallel-sum-limit construction of the absolutely continuous part.

    Evaluates ``(2^k F : G)`` along the doubling schedule up to n_max and
    returns the final iterate; raises NonConvergence if the last two iterates
    still differ by more than the limit tolerance.
    """
    _check_same_dims(f, g)
    if n_max < 2:
        raise DomainError("oracle needs n_max >= 2")
    tol = TOL_LIM * max(1.0, g.choi.norm())
    steps = max(1, int(math.floor(math.log2(n_max))))
    prev = None
    cur = None
    for k in range(1, steps + 1):
        scaled = PsdMatrix((2.0 ** k) * f.choi.entries)
        prev, cur = cur, parallel_sum(scaled, g.choi)
    if prev is not None:
        drift = float(np.abs(cur.entries - prev.entries).max())
        if drift > tol:
            raise NonConvergence(
                f"parallel-sum limit moved {drift:.3e} at n={2 ** steps}, "
                f"tolerance {tol:.3e}"
            )
    return CpMap(f.dim_in, f.dim_out, cur)


def decompose(f: CpMap, g: CpMap) -> LebesgueSplit:
    """Lebesgue decomposition of G relative to F.

    The singular part is G - ac; exact arithmetic makes it PSD, so residual
    negative eigenvalues are clamped within TOL_PSD and anything beyond raises
    NumericalError.
    """
    ac, p_phi = _ac_choi(f, g)
    try:
        sing = PsdMatrix.clamped(g.choi.entries - ac.entries)
    except InvalidInput as exc:
        raise NumericalError(f"singular part failed positivity: {exc}") from exc
    return LebesgueSplit(
        ac=CpMap(f.dim_in, f.dim_out, ac),
        sing=CpMap(f.dim_in, f.dim_out, sing),
        phi_support=p_phi,
        alpha_min=_alpha_min(f.choi, ac),
    )


def _alpha_min(c_f: PsdMatrix, c_ac: PsdMatrix) -> float:
    """Least alpha with C_ac <= alpha C_F, via the generalized Rayleigh quotient.

    A numerically-zero ac part (the mutually singular case) reports exactly 0.
    """
    if c_ac.norm() <= _RN_SUPPORT_RTOL * max(1.0, c_f.norm()):
        return 0.0
    supp_f = support_projection(c_f)
    outside = (np.eye(c_f.dim) - supp_f.entries) @ c_ac.entries
    if np.abs(outside).max() > TOL_RECON * max(1.0, c_ac.norm()):
        return math.inf
    half_pinv = frac_power_psd(c_f, -0.5).entries
    m = half_pinv @ c_ac.entries @ half_pinv
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(max(w[-1], 0.0))


def is_singular(f: CpMap, g: CpMap, tol: float = 1e-8) -> bool:
    """True iff F and G are mutually singular, i.e. their parallel sum vanishes."""
    _check_same_dims(f, g)
    return parallel_sum(f.choi, g.choi).norm() <= tol


def is_abs_continuous(g: CpMap, f: CpMap, tol: float = 1e-8) -> bool:
    """True iff G is F-absolutely continuous, i.e. G equals its ac part.

    The equivalent range criterion supp(B') <= supp(A') in the RN picture is
    exercised by the test suite.
    """
    ac, _ = _ac_choi(f, g)
    return bool(np.abs(g.choi.entries - ac.entries).max() <= tol)
