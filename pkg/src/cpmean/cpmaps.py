"""CP maps between matrix algebras, stored as Choi matrices.

Indexing convention, fixed once for the whole package (0-based, row-major):
a CP map ``F: M_m -> M_n`` has Choi matrix ``C`` of size mn with

    C[i*n + k, j*n + l] = F(e_ij)[k, l],

i.e. block (i, j) of C is the image of the matrix unit e_ij.  Under this
convention the Choi matrix of ``x -> A x A*`` is ``vec(A) vec(A)*`` with
``vec(A)[i*n + k] = A[k, i]`` (column stacking).

The Choi correspondence is an order isomorphism: F <= G in the CP order iff
C_F <= C_G as PSD matrices, which is what makes every operator-mean statement
below a statement about Choi matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, InvalidInput, NotCompletelyPositive, ShapeError
from .hermlinalg import (
    RANK_RTOL,
    TOL_PSD,
    PsdMatrix,
    as_psd,
    is_psd,
    pinv_psd,
    psd_sqrt,
    support_projection,
)
from . import opmeans
from .opmeans import MeanKind

TOL_FLAGS = 1e-8  # absolute tolerance on ||F(1) - 1|| and ||Tr∘F - Tr||


@dataclass(frozen=True)
class CpMap:
    """Completely positive map M_m -> M_n with Choi matrix and optional Kraus list."""

    dim_in: int
    dim_out: int
    choi: PsdMatrix
    kraus: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        if self.dim_in < 1 or self.dim_out < 1:
            raise ShapeError("dimensions must be positive")
        if self.choi.dim != self.dim_in * self.dim_out:
            raise ShapeError(
                f"Choi matrix has size {self.choi.dim}, expected "
                f"{self.dim_in * self.dim_out}"
            )

    def choi_blocks(self) -> np.ndarray:
        """Choi entries reshaped to (i, k, j, l) with C4[i,k,j,l] = F(e_ij)[k,l]."""
        m, n = self.dim_in, self.dim_out
        return self.choi.entries.reshape(m, n, m, n)

    def apply(self, x) -> np.ndarray:
        """Evaluate the map on an m x m matrix."""
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (self.dim_in, self.dim_in):
            raise ShapeError(
                f"input must be {self.dim_in} x {self.dim_in}, got {x.shape}"
            )
        return np.einsum("ij,ikjl->kl", x, self.choi_blocks())

    def is_unital(self, tol: float = TOL_FLAGS) -> bool:
        one = self.apply(np.eye(self.dim_in))
        return bool(np.abs(one - np.eye(self.dim_out)).max() <= tol)

    def is_trace_preserving(self, tol: float = TOL_FLAGS) -> bool:
        # Tr(F(e_ij)) must equal delta_ij; partial trace over the output leg.
        tr_blocks = np.einsum("ikjk->ij", self.choi_blocks())
        return bool(np.abs(tr_blocks - np.eye(self.dim_in)).max() <= tol)

    def __add__(self, other: "CpMap") -> "CpMap":
        _check_same_dims(self, other)
        return CpMap(self.dim_in, self.dim_out,
                     PsdMatrix(self.choi.entries + other.choi.entries))

    def __rmul__(self, scalar: float) -> "CpMap":
        if scalar < 0:
            raise DomainError("CP maps admit only nonnegative scaling")
        return CpMap(self.dim_in, self.dim_out, PsdMatrix(scalar * self.choi.entries))

    def __repr__(self):
        return f"CpMap({self.dim_in} -> {self.dim_out})"


@dataclass(frozen=True)
class ChannelFlags:
    """Structural flags of a channel at a stated tolerance."""

    is_cp: bool
    is_unital: bool
    is_trace_preserving: bool
    tolerance: float


@dataclass(frozen=True)
class DensityFunctional:
    """Positive functional x -> Tr(rho x) on M_dim, carried by its density matrix."""

    rho: PsdMatrix
    dim: int

    @classmethod
    def of(cls, rho) -> "DensityFunctional":
        rho = as_psd(rho)
        return cls(rho, rho.dim)


def _check_same_dims(f: CpMap, g: CpMap):
    if (f.dim_in, f.dim_out) != (g.dim_in, g.dim_out):
        raise ShapeError(
            f"map dimensions differ: {f.dim_in}->{f.dim_out} vs {g.dim_in}->{g.dim_out}"
        )


def from_choi(dim_in: int, dim_out: int, choi, kraus=None) -> CpMap:
    """Build a CpMap from Choi data, verifying complete positivity."""
    try:
        mat = as_psd(choi)
    except InvalidInput as exc:
        raise NotCompletelyPositive(str(exc)) from exc
    return CpMap(dim_in, dim_out, mat, tuple(kraus) if kraus else None)


def choi_from_action(dim_in: int, dim_out: int,
                     action: Callable[[np.ndarray], np.ndarray]) -> CpMap:
    """Assemble the Choi matrix of a map given by its action on matrix units."""
    m, n = dim_in, dim_out
    c = np.zeros((m * n, m * n), dtype=np.complex128)
    for i in range(m):
        for j in range(m):
            unit = np.zeros((m, m), dtype=np.complex128)
            unit[i, j] = 1.0
            block = np.asarray(action(unit), dtype=np.complex128)
            if block.shape != (n, n):
                raise ShapeError(f"action must return {n} x {n} matrices")
            c[i * n:(i + 1) * n, j * n:(j + 1) * n] = block
    c = 0.5 * (c + c.conj().T)
    if not is_psd(c, TOL_PSD):
        raise NotCompletelyPositive("assembled Choi matrix is not PSD")
    return from_choi(m, n, c)


def _vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vec: vec(A)[i*n + k] = A[k, i] for A of shape (n, m)."""
    return a.T.reshape(-1)


def _unvec(v: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    return v.reshape(dim_in, dim_out).T


def from_kraus(ops: Sequence[np.ndarray], dim_in: int | None = None,
               dim_out: int | None = None) -> CpMap:
    """Build a CpMap from Kraus operators (each dim_out x dim_in)."""
    ops = [np.asarray(k, dtype=np.complex128) for k in ops]
    if not ops:
        if dim_in is None or dim_out is None:
            raise ShapeError("empty Kraus list requires explicit dimensions")
    else:
        n, m = ops[0].shape
        dim_in = dim_in or m
        dim_out = dim_out or n
        if (n, m) != (dim_out, dim_in):
            raise ShapeError("Kraus operators must be dim_out x dim_in")
    c = np.zeros((dim_in * dim_out, dim_in * dim_out), dtype=np.complex128)
    for k in ops:
        if k.shape != (dim_out, dim_in):
            raise ShapeError("inconsistent Kraus operator shapes")
        v = _vec(k)
        c += np.outer(v, v.conj())
    return from_choi(dim_in, dim_out, c, kraus=ops)


def kraus_decompose(f: CpMap, rank_rtol: float = RANK_RTOL) -> list[np.ndarray]:
    """Kraus operators from the spectral decomposition of the Choi matrix."""
    w, u = f.choi.eig()
    cutoff = rank_rtol * max(float(w[-1]), 0.0)
    ops = []
    for idx in range(f.choi.dim):
        if w[idx] > cutoff:
            ops.append(_unvec(np.sqrt(w[idx]) * u[:, idx], f.dim_in, f.dim_out))
    return ops


def apply(f: CpMap, x) -> np.ndarray:
    """Evaluate F(x); module-level alias of CpMap.apply."""
    return f.apply(x)


def leq_cp(f: CpMap, g: CpMap, tol: float = TOL_PSD) -> bool:
    """CP order: F <= G iff C_G - C_F is PSD."""
    _check_same_dims(f, g)
    return is_psd(g.choi.entries - f.choi.entries, tol)


def mean_cp(kind: MeanKind, f: CpMap, g: CpMap, nodes: int = 16) -> CpMap:
    """Mean of CP maps: the Choi matrix of the result is the mean of the Chois."""
    _check_same_dims(f, g)
    m = opmeans.mean(kind, f.choi, g.choi, nodes=nodes)
    return CpMap(f.dim_in, f.dim_out, m)


def geo_certificate(f: CpMap, g: CpMap, theta: CpMap, tol: float = TOL_PSD) -> bool:
    """Block-matrix certificate: True iff [[C_F, C_T], [C_T, C_G]] is PSD.

    Holds for theta = geometric mean (and anything below it), fails for any
    strictly larger candidate; this is the maximality characterization.
    """
    _check_same_dims(f, g)
    _check_same_dims(f, theta)
    cf, cg, ct = f.choi.entries, g.choi.entries, theta.choi.entries
    block = np.block([[cf, ct], [ct.conj().T, cg]])
    return is_psd(block, tol)


def tensor(f: CpMap, g: CpMap) -> CpMap:
    """Tensor product map, with Choi legs permuted to the fixed convention."""
    m1, n1, m2, n2 = f.dim_in, f.dim_out, g.dim_in, g.dim_out
    t = np.kron(f.choi.entries, g.choi.entries)
    t = t.reshape(m1, n1, m2, n2, m1, n1, m2, n2)
    t = t.transpose(0, 2, 1, 3, 4, 6, 5, 7)
    mn = m1 * m2 * n1 * n2
    return CpMap(m1 * m2, n1 * n2, PsdMatrix(t.reshape(mn, mn)))


def compose(after: CpMap, first: CpMap) -> CpMap:
    """Composition ``after ∘ first``, applying `after` to each Choi block of `first`."""
    if first.dim_out != after.dim_in:
        raise ShapeError(
            f"cannot compose {after.dim_in}->{after.dim_out} after "
            f"{first.dim_in}->{first.dim_out}"
        )
    c4 = first.choi_blocks()
    x4 = after.choi_blocks()
    out = np.einsum("ikjl,kplq->ipjq", c4, x4)
    mn = first.dim_in * after.dim_out
    return from_choi(first.dim_in, after.dim_out, out.reshape(mn, mn))


def _max_entangled_vec(n: int) -> np.ndarray:
    v = np.zeros(n * n, dtype=np.complex128)
    for i in range(n):
        v[i * n + i] = 1.0
    return v


def index_cp(f: CpMap, rank_rtol: float = RANK_RTOL) -> float:
    """Pimsner-Popa index: the least lam > 0 with lam*F - id completely positive.

    Equals <v, C^+ v> for v the unnormalized maximally entangled vector when v
    lies in ran(C); otherwise the infimum runs over an empty set and the index
    is +inf.
    """
    if f.dim_in != f.dim_out:
        raise ShapeError("index is defined for square maps only")
    v = _max_entangled_vec(f.dim_in)
    supp = support_projection(f.choi, rank_rtol)
    defect = np.linalg.norm(v - supp.entries @ v)
    if defect > rank_rtol * np.linalg.norm(v):
        return math.inf
    pinv = pinv_psd(f.choi, rank_rtol)
    return float(np.real(v.conj() @ pinv.entries @ v))


def channel_flags(f: CpMap, tol: float = TOL_FLAGS) -> ChannelFlags:
    """CP/unital/trace-preserving flags at the stated tolerance."""
    return ChannelFlags(
        is_cp=is_psd(f.choi, tol),
        is_unital=f.is_unital(tol),
        is_trace_preserving=f.is_trace_preserving(tol),
        tolerance=tol,
    )


# ---------------------------------------------------------------------------
# Channel zoo
# ---------------------------------------------------------------------------

def identity(d: int) -> CpMap:
    """Identity channel on M_d; Choi is the unnormalized maximally entangled vv*."""
    v = _max_entangled_vec(d)
    return from_choi(d, d, np.outer(v, v.conj()), kraus=[np.eye(d)])


def depolarizing(d: int) -> CpMap:
    """Completely depolarizing channel x -> Tr(x)/d; Choi is I/d."""
    return from_choi(d, d, np.eye(d * d) / d)


def unitary_conj(u) -> CpMap:
    """Unitary conjugation x -> U x U*."""
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DomainError("conjugation requires a square matrix")
    d = u.shape[0]
    if np.abs(u.conj().T @ u - np.eye(d)).max() > TOL_FLAGS:
        raise DomainError("matrix is not unitary within tolerance")
    return from_kraus([u])


def schur(a) -> CpMap:
    """Schur (entrywise) multiplier x -> A ∘ x; CP iff A is PSD."""
    a = np.asarray(a, dtype=np.complex128)
    if not is_psd(0.5 * (a + a.conj().T), TOL_PSD):
        raise DomainError("Schur multiplier is CP only for PSD symbols")
    n = a.shape[0]
    c = np.zeros((n * n, n * n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            c[i * n + i, j * n + j] = a[i, j]
    return from_choi(n, n, c)


def cond_exp_diag(d: int) -> CpMap:
    """Conditional expectation of M_d onto its diagonal subalgebra."""

    def action(unit):
        return np.diag(np.diag(unit)).astype(np.complex128)

    return choi_from_action(d, d, action)


def cond_exp_rotated(theta: float) -> CpMap:
    """Conditional expectation of M_2 onto the rotated diagonal subalgebra.

    The subalgebra is u diag(...) u* for the rotation u by angle theta.
    """
    u = np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]],
        dtype=np.complex128,
    )

    def action(unit):
        inner = u.conj().T @ unit @ u
        return u @ np.diag(np.diag(inner)) @ u.conj().T

    return choi_from_action(2, 2, action)


def cond_exp_tensor(factor: int, weights: Sequence[float]) -> CpMap:
    """Slice conditional expectation of M_n ⊗ M_n onto one tensor factor.

    ``factor=1`` keeps the first leg and averages the second against the state
    with the given diagonal weights: ``x1 ⊗ x2 -> x1 ⊗ Tr(diag(w) x2) 1``;
    ``factor=2`` is the mirror image.  Weights must be positive; a genuine
    state has them summing to 1.
    """
    if factor not in (1, 2):
        raise DomainError("factor must be 1 or 2")
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) < 1 or np.any(w <= 0.0):
        raise DomainError("weights must be a nonempty positive vector")
    n = len(w)
    state = np.diag(w).astype(np.complex128)
    eye = np.eye(n, dtype=np.complex128)

    def action(unit):
        x = unit.reshape(n, n, n, n)  # (i1, i2, j1, j2) of e_{(i1 i2),(j1 j2)}
        if factor == 1:
            kept = np.einsum("abcd,bd->ac", x, state.T)
            return np.kron(kept, eye)
        kept = np.einsum("abcd,ac->bd", x, state.T)
        return np.kron(eye, kept)

    return choi_from_action(n * n, n * n, action)


def functional(rho) -> CpMap:
    """CP functional x -> Tr(rho x) as a map M_n -> M_1; Choi is rho^T."""
    if isinstance(rho, DensityFunctional):
        rho = rho.rho
    rho = as_psd(rho)
    return from_choi(rho.dim, 1, rho.entries.T)


class StateMeanQuantities(NamedTuple):
    gm_trace: float
    sqrt_trace: float
    fidelity: float


def state_mean_quantities(rho, sigma) -> StateMeanQuantities:
    """Three trace quantities interpolating a pair of density matrices.

    Returns (Tr(rho # sigma), Tr(rho^{1/2} sigma^{1/2}), Tr sqrt(rho^{1/2}
    sigma rho^{1/2})); the chain gm <= sqrt <= fidelity always holds, with
    equality iff the states commute.
    """
    if isinstance(rho, DensityFunctional):
        rho = rho.rho
    if isinstance(sigma, DensityFunctional):
        sigma = sigma.rho
    rho = as_psd(rho)
    sigma = as_psd(sigma)
    if rho.dim != sigma.dim:
        raise ShapeError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    gm = float(np.trace(opmeans.geometric_mean(rho, sigma).entries).real)
    rh = psd_sqrt(rho).entries
    sh = psd_sqrt(sigma).entries
    sqrt_trace = float(np.trace(rh @ sh).real)
    inner = PsdMatrix.clamped(rh @ sigma.entries @ rh)
    fidelity = float(np.trace(psd_sqrt(inner).entries).real)
    return StateMeanQuantities(gm, sqrt_trace, fidelity)
