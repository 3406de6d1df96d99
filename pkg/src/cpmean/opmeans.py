"""Operator means and Kubo-Ando connections on the PSD cone.

Two computation routes coexist:

* ``parallel_sum`` (and hence the harmonic mean and ``connection_apply``) use
  the pseudo-inverse formula ``A (A+B)^+ B``, which is exact in finite
  dimensions.

* The geometric, power and logarithmic means go through a compatible
  two-operator representation on ran(A+B): with ``C = A + B``,
  ``A' = C^{+1/2} A C^{+1/2}`` and ``B' = Π - A'`` (Π the support of C) commute,
  so any mean reduces to a scalar function of the spectrum of A' applied under
  the sandwich ``C^{1/2} · C^{1/2}``.  This is exact for singular inputs and
  avoids the ill-conditioned epsilon-regularized limit entirely; the
  regularized limit ``(A+εI) σ (B+εI)`` agrees with it as ε ↓ 0 and is kept in
  the test suite as a cross-check oracle.

Scale convention for the power mean: ``power_mean(A, B, a)`` carries weight
``a`` on B, so commuting scalars give ``r**(1-a) * s**a``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import nnls
from scipy.special import roots_jacobi

from .errors import DomainError, NonConvergence, ShapeError
from .hermlinalg import RANK_RTOL, PsdMatrix, as_psd, pinv_psd

TOL_MEAN = 1e-7   # mean identities, relative to max(1, ||A||, ||B||)
TOL_QUAD = 1e-6   # scalar quadrature / connection-fit accuracy

# Spectrum of A' lies in [0, 1] exactly; eigenvalues closer than this to an
# endpoint are snapped onto it so that rank-deficient directions are killed
# instead of leaking eigensolver noise through fractional powers.
_RN_SNAP = 1e-12

_LOG_MEAN_NODES = 16


def _check_pair(a, b) -> tuple[PsdMatrix, PsdMatrix]:
    a = as_psd(a)
    b = as_psd(b)
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return a, b


def _herm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _kernel_mean(a: PsdMatrix, b: PsdMatrix, h: Callable[[np.ndarray], np.ndarray],
                 rank_rtol: float = RANK_RTOL) -> PsdMatrix:
    """Evaluate the connection with scalar kernel h on the commuting pair (A', B').

    h receives the spectrum t of A' (clipped to [0, 1]); B' has spectrum 1 - t
    in the same eigenbasis.  h(0) need not vanish: components outside ran(A+B)
    are annihilated by the C^{1/2} sandwich.
    """
    c = a.entries + b.entries
    w, u = np.linalg.eigh(_herm(c))
    lmax = max(float(w[-1]), 0.0)
    keep = w > rank_rtol * lmax if lmax > 0.0 else np.zeros_like(w, dtype=bool)
    if not keep.any():
        return PsdMatrix(np.zeros_like(c))
    ws, us = w[keep], u[:, keep]
    chalf = (us * np.sqrt(ws)) @ us.conj().T
    cinvh = (us / np.sqrt(ws)) @ us.conj().T
    t, v = np.linalg.eigh(_herm(cinvh @ a.entries @ cinvh))
    t = np.clip(t, 0.0, 1.0)
    t[t < _RN_SNAP] = 0.0
    t[t > 1.0 - _RN_SNAP] = 1.0
    m = (v * h(t)) @ v.conj().T
    return PsdMatrix.clamped(_herm(chalf @ m @ chalf), tol=TOL_MEAN)


def parallel_sum(a, b) -> PsdMatrix:
    """Parallel sum ``A : B = A (A+B)^+ B``, the operator analog of parallel resistors.

    Exact in finite dimensions; the range of the result is ran(A) ∩ ran(B) and
    ``A : B <= A, B`` in the PSD order.
    """
    a, b = _check_pair(a, b)
    s = pinv_psd(PsdMatrix.clamped(a.entries + b.entries))
    return PsdMatrix.clamped(_herm(a.entries @ s.entries @ b.entries), tol=TOL_MEAN)


def harmonic_mean(a, b) -> PsdMatrix:
    """Harmonic mean ``2 (A : B)``."""
    p = parallel_sum(a, b)
    return PsdMatrix(2.0 * p.entries)


def arithmetic_mean(a, b) -> PsdMatrix:
    """Arithmetic mean ``(A + B) / 2``."""
    a, b = _check_pair(a, b)
    return PsdMatrix.clamped(0.5 * (a.entries + b.entries))


def geometric_mean(a, b) -> PsdMatrix:
    """Operator geometric mean A # B.

    Equals ``A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}`` for invertible
    inputs; for singular inputs it is the maximal X with
    ``[[A, X], [X, B]] >= 0``, whose range is ran(A) ∩ ran(B).
    """
    a, b = _check_pair(a, b)
    return _kernel_mean(a, b, lambda t: np.sqrt(t * (1.0 - t)))


def power_mean(a, b, alpha: float) -> PsdMatrix:
    """Weighted geometric (power) mean with weight alpha on the second argument.

    alpha = 0 returns A, alpha = 1 returns B, alpha = 1/2 is the geometric
    mean.  Raises DomainError for alpha outside [0, 1].
    """
    a, b = _check_pair(a, b)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"power mean weight must lie in [0, 1], got {alpha}")
    if alpha == 0.0:
        return a
    if alpha == 1.0:
        return b
    return _kernel_mean(a, b, lambda t: t ** (1.0 - alpha) * (1.0 - t) ** alpha)


def _gauss_legendre_01(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def log_mean(a, b, nodes: int = _LOG_MEAN_NODES) -> PsdMatrix:
    """Logarithmic mean, the integral of the power mean weight over (0, 1).

    Realized by Gauss-Legendre quadrature in the weight; matches the scalar
    function (t - 1)/log(t) on commuting pairs.
    """
    a, b = _check_pair(a, b)
    if nodes < 2:
        raise DomainError("log mean quadrature needs at least 2 nodes")
    s, om = _gauss_legendre_01(nodes)

    def h(t):
        tt = t[:, None]
        vals = tt ** (1.0 - s[None, :]) * (1.0 - tt) ** s[None, :]
        return vals @ om

    return _kernel_mean(a, b, h)


@dataclass(frozen=True)
class ConnectionRep:
    """Integral representation of an operator monotone function on [0, inf).

    Encodes ``f(t) = a + b t + sum_k w_k t (1 + l_k) / (t + l_k)`` with
    nonnegative a, b and finitely many atoms (l_k > 0, w_k > 0) discretizing
    the representing measure.
    """

    a: float
    b: float
    atoms: tuple[tuple[float, float], ...]
    label: str = ""

    def __post_init__(self):
        if self.a < 0.0 or self.b < 0.0:
            raise DomainError("constant and linear coefficients must be nonnegative")
        for lam, wt in self.atoms:
            if not (lam > 0.0 and np.isfinite(lam)):
                raise DomainError(f"atom location must be positive, got {lam}")
            if not (wt > 0.0 and np.isfinite(wt)):
                raise DomainError(f"atom weight must be positive, got {wt}")

    def scalar(self, t):
        """Evaluate f(t) for scalar or array t >= 0."""
        t = np.asarray(t, dtype=float)
        out = self.a + self.b * t
        for lam, wt in self.atoms:
            out = out + wt * t * (1.0 + lam) / (t + lam)
        return out


@dataclass(frozen=True)
class MeanKind:
    """Tagged selector for a mean: arith, geo, harm, parallel, power, log, custom."""

    tag: str
    alpha: float | None = None
    rep: ConnectionRep | None = None

    _TAGS = ("arith", "geo", "harm", "parallel", "power", "log", "custom")

    def __post_init__(self):
        if self.tag not in self._TAGS:
            raise DomainError(f"unknown mean kind {self.tag!r}")
        if self.tag == "power":
            if self.alpha is None or not 0.0 <= self.alpha <= 1.0:
                raise DomainError("power mean requires alpha in [0, 1]")
        if self.tag == "custom" and self.rep is None:
            raise DomainError("custom mean requires a ConnectionRep")

    @classmethod
    def power(cls, alpha: float) -> "MeanKind":
        return cls("power", alpha=alpha)

    @classmethod
    def custom(cls, rep: ConnectionRep) -> "MeanKind":
        return cls("custom", rep=rep)

    @classmethod
    def parse(cls, text: str) -> "MeanKind":
        """Parse a CLI-style kind: geo|arith|harm|parallel|log|power:<alpha>."""
        if text.startswith("power:"):
            try:
                alpha = float(text.split(":", 1)[1])
            except ValueError as exc:
                raise DomainError(f"bad power mean weight in {text!r}") from exc
            return cls.power(alpha)
        if text in ("arith", "geo", "harm", "parallel", "log"):
            return cls(text)
        raise DomainError(f"unknown mean kind {text!r}")


ARITH = MeanKind("arith")
GEO = MeanKind("geo")
HARM = MeanKind("harm")
PARALLEL = MeanKind("parallel")
LOG = MeanKind("log")


def mean(kind: MeanKind, a, b, nodes: int = _LOG_MEAN_NODES) -> PsdMatrix:
    """Dispatch a mean/connection by kind."""
    if kind.tag == "arith":
        return arithmetic_mean(a, b)
    if kind.tag == "geo":
        return geometric_mean(a, b)
    if kind.tag == "harm":
        return harmonic_mean(a, b)
    if kind.tag == "parallel":
        return parallel_sum(a, b)
    if kind.tag == "power":
        return power_mean(a, b, kind.alpha)
    if kind.tag == "log":
        return log_mean(a, b, nodes=nodes)
    return connection_apply(kind.rep, a, b)


def connection_apply(rep: ConnectionRep, a, b) -> PsdMatrix:
    """Evaluate the connection ``aA + bB + sum_k w_k (1+l_k)/l_k [(l_k A) : B]``."""
    a, b = _check_pair(a, b)
    out = rep.a * a.entries + rep.b * b.entries
    for lam, wt in rep.atoms:
        term = parallel_sum(PsdMatrix(lam * a.entries), b)
        out = out + wt * (1.0 + lam) / lam * term.entries
    return PsdMatrix.clamped(_herm(out), tol=TOL_MEAN)


def power_rep(alpha: float, nodes: int = 64) -> ConnectionRep:
    """Discretize the representing measure of t^alpha into a ConnectionRep.

    The measure density is sin(a pi)/pi * l^(a-1) / (1 + l) dl on (0, inf).
    Under l = u/(1-u) this becomes sin(a pi)/pi * u^(a-1) (1-u)^(-a) du on
    (0, 1), whose endpoint singularities defeat plain Gauss-Legendre; the
    nodes are therefore taken from the Gauss-Jacobi rule with exactly that
    weight, which integrates the remaining analytic kernel to near machine
    precision.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"power_rep requires alpha in (0, 1), got {alpha}")
    if nodes < 4:
        raise DomainError("power_rep requires at least 4 quadrature nodes")
    with np.errstate(invalid="ignore"):
        x, wj = roots_jacobi(nodes, -alpha, alpha - 1.0)
    u = 0.5 * (x + 1.0)
    lam = u / (1.0 - u)
    wt = np.sin(alpha * np.pi) / np.pi * wj
    atoms = tuple((float(l), float(w)) for l, w in zip(lam, wt) if w > 0.0)
    return ConnectionRep(0.0, 0.0, atoms, label=f"power({alpha})")


def transpose_rep(rep: ConnectionRep) -> ConnectionRep:
    """Transpose transform, representing ``t f(1/t)``; realizes argument swap.

    Exact at the representation level: swap the endpoint coefficients and
    push each atom through l -> 1/l.
    """
    atoms = tuple((1.0 / lam, wt) for lam, wt in rep.atoms)
    return ConnectionRep(rep.b, rep.a, atoms, label=f"transpose({rep.label})")


# Fit/validation grids for the numeric transform re-fits.  The fit grid spans
# two octaves beyond the validation grid t in {2^-4, ..., 2^4} so endpoint
# behavior is pinned down.
_FIT_T = np.geomspace(2.0 ** -6, 2.0 ** 6, 481)
_FIT_ATOMS = np.unique(np.concatenate([np.geomspace(2.0 ** -9, 2.0 ** 9, 181), [1.0]]))
_VALIDATE_T = 2.0 ** np.arange(-4, 5, dtype=float)


def _refit(target_fn: Callable[[np.ndarray], np.ndarray], label: str) -> ConnectionRep:
    """Re-discretize a scalar operator monotone function by nonnegative least squares."""
    kern = _FIT_T[:, None] * (1.0 + _FIT_ATOMS[None, :]) / (_FIT_T[:, None] + _FIT_ATOMS[None, :])
    design = np.column_stack([np.ones_like(_FIT_T), _FIT_T, kern])
    coef, _ = nnls(design, target_fn(_FIT_T), maxiter=20 * design.shape[1])
    atoms = tuple(
        (float(lam), float(wt))
        for lam, wt in zip(_FIT_ATOMS, coef[2:])
        if wt > 0.0
    )
    fitted = ConnectionRep(float(coef[0]), float(coef[1]), atoms, label=label)
    err = np.abs(fitted.scalar(_VALIDATE_T) - target_fn(_VALIDATE_T))
    if err.max() > TOL_QUAD:
        raise NonConvergence(
            f"connection re-fit residual {err.max():.3e} exceeds {TOL_QUAD}"
        )
    return fitted


def adjoint_rep(rep: ConnectionRep) -> ConnectionRep:
    """Adjoint transform, representing ``f(1/t)^(-1)``; numeric re-fit."""
    if np.min(rep.scalar(1.0 / _FIT_T)) <= 0.0:
        raise DomainError("adjoint transform needs f strictly positive on the grid")
    return _refit(lambda t: 1.0 / rep.scalar(1.0 / t), label=f"adjoint({rep.label})")


def dual_rep(rep: ConnectionRep) -> ConnectionRep:
    """Dual transform, representing ``t / f(t)``; numeric re-fit."""
    if np.min(rep.scalar(_FIT_T)) <= 0.0:
        raise DomainError("dual transform needs f strictly positive on the grid")
    return _refit(lambda t: t / rep.scalar(t), label=f"dual({rep.label})")
