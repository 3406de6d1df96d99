import numpy as np
import pytest

from cpmean.errors import DomainError, ShapeError
from cpmean.hermlinalg import (
    Projection,
    PsdMatrix,
    is_psd,
    proj_intersection,
    support_projection,
)
from cpmean.opmeans import (
    ARITH,
    GEO,
    HARM,
    LOG,
    PARALLEL,
    TOL_MEAN,
    MeanKind,
    arithmetic_mean,
    geometric_mean,
    harmonic_mean,
    log_mean,
    mean,
    parallel_sum,
    power_mean,
)

from conftest import max_abs, min_eig, random_psd, random_unitary


def closed_form_geo(a, b):
    """Independent route: textbook formula for invertible inputs, raw numpy."""
    wa, ua = np.linalg.eigh(a)
    ah = (ua * np.sqrt(wa)) @ ua.conj().T
    aih = (ua / np.sqrt(wa)) @ ua.conj().T
    mid = aih @ b @ aih
    wm, um = np.linalg.eigh(0.5 * (mid + mid.conj().T))
    ms = (um * np.sqrt(np.clip(wm, 0.0, None))) @ um.conj().T
    g = ah @ ms @ ah
    return 0.5 * (g + g.conj().T)


def eps_limit_geo(a, b, k_lo=6, k_hi=12):
    """Regularized-limit oracle (A+eps)#(B+eps), compressed to the common range."""
    d = len(a)
    pi = proj_intersection(
        support_projection(PsdMatrix(a)), support_projection(PsdMatrix(b))
    ).entries
    scale = max(1.0, max_abs(a), max_abs(b))
    g = None
    for k in range(k_lo, k_hi + 1):
        eps = scale * 4.0 ** (-k)
        g = closed_form_geo(a + eps * np.eye(d), b + eps * np.eye(d))
    return pi @ g @ pi


class TestParallelSum:
    def test_self(self, rng):
        a = random_psd(rng, 4)
        assert max_abs(parallel_sum(a, a).entries - a / 2) < 1e-12

    def test_commuting_diagonals(self):
        got = parallel_sum(np.diag([1.0, 0.0]), np.diag([1.0, 1.0]))
        assert max_abs(got.entries - np.diag([0.5, 0.0])) < 1e-13
        got = parallel_sum(np.diag([2.0, 6.0]), np.diag([2.0, 3.0]))
        assert max_abs(got.entries - np.diag([1.0, 2.0])) < 1e-13

    def test_inverse_sum_oracle(self, rng):
        # independent formula (A^-1 + B^-1)^-1 valid for invertible inputs
        for _ in range(10):
            a = random_psd(rng, 5)
            b = random_psd(rng, 5)
            want = np.linalg.inv(np.linalg.inv(a) + np.linalg.inv(b))
            assert max_abs(parallel_sum(a, b).entries - want) < 1e-10

    def test_dominated_by_both(self, rng):
        a = random_psd(rng, 5, rank=3)
        b = random_psd(rng, 5, rank=4)
        p = parallel_sum(a, b).entries
        assert min_eig(a - p) > -1e-9
        assert min_eig(b - p) > -1e-9

    def test_range_is_intersection(self, rng):
        u = random_unitary(rng, 5)
        a = random_psd(rng, 3)
        b = random_psd(rng, 3)
        big_a = u[:, :3] @ a @ u[:, :3].conj().T
        big_b = u[:, 1:4] @ b @ u[:, 1:4].conj().T
        p = parallel_sum(big_a, big_b)
        meet = proj_intersection(
            support_projection(PsdMatrix(big_a)), support_projection(PsdMatrix(big_b))
        )
        assert max_abs(support_projection(p).entries - meet.entries) < 1e-8

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            parallel_sum(np.eye(2), np.eye(3))


class TestHarmonicArithmetic:
    def test_harmonic_self(self, rng):
        a = random_psd(rng, 3)
        assert max_abs(harmonic_mean(a, a).entries - a) < 1e-12

    def test_weighted_projections(self, rng):
        # r P ! s Q = (2rs/(r+s)) (P ^ Q)
        u = random_unitary(rng, 4)
        p = u[:, :2] @ u[:, :2].conj().T
        q_basis = np.column_stack([u[:, 0], (u[:, 1] + u[:, 3]) / np.sqrt(2)])
        q = q_basis @ q_basis.conj().T
        r, s = 3.0, 5.0
        got = harmonic_mean(r * p, s * q).entries
        meet = proj_intersection(Projection(p), Projection(q)).entries
        assert max_abs(got - 2 * r * s / (r + s) * meet) < 1e-10

    def test_scalar_harmonic(self):
        got = harmonic_mean(np.diag([1.0, 2.0]), np.diag([3.0, 2.0]))
        assert max_abs(got.entries - np.diag([1.5, 2.0])) < 1e-13

    def test_arithmetic(self, rng):
        a = random_psd(rng, 3)
        assert max_abs(arithmetic_mean(a, a).entries - a) < 1e-14
        got = arithmetic_mean(np.diag([1.0, 3.0]), np.diag([3.0, 1.0]))
        assert max_abs(got.entries - 2 * np.eye(2)) < 1e-14
        b = random_psd(rng, 3)
        assert max_abs(arithmetic_mean(np.zeros((3, 3)), b).entries - b / 2) < 1e-14


class TestGeometricMean:
    def test_self(self, rng):
        a = random_psd(rng, 4)
        assert max_abs(geometric_mean(a, a).entries - a) < 1e-12

    def test_commuting(self):
        got = geometric_mean(np.diag([2.0, 1.0]), np.diag([1.0, 2.0]))
        assert max_abs(got.entries - np.sqrt(2.0) * np.eye(2)) < 1e-14

    def test_weighted_projections(self, rng):
        u = random_unitary(rng, 4)
        p = u[:, :2] @ u[:, :2].conj().T
        q_basis = np.column_stack([u[:, 0], (u[:, 1] + u[:, 3]) / np.sqrt(2)])
        q = q_basis @ q_basis.conj().T
        r, s = 0.5, 8.0
        got = geometric_mean(r * p, s * q).entries
        meet = proj_intersection(Projection(p), Projection(q)).entries
        assert max_abs(got - np.sqrt(r * s) * meet) < 1e-10

    def test_orthogonal_rank_one(self):
        v = np.array([1.0, 0.0, 0.0, 1.0])
        w = np.array([1.0, 0.0, 0.0, -1.0])
        got = geometric_mean(np.outer(v, v), np.outer(w, w))
        assert max_abs(got.entries) < 1e-14

    def test_matches_closed_form_when_invertible(self, rng):
        for _ in range(10):
            a = random_psd(rng, 6)
            b = random_psd(rng, 6)
            assert max_abs(geometric_mean(a, b).entries - closed_form_geo(a, b)) < 1e-11

    def test_symmetric(self, rng):
        a = random_psd(rng, 5, rank=3)
        b = random_psd(rng, 5, rank=4)
        scale = max(1.0, max_abs(a), max_abs(b))
        assert max_abs(geometric_mean(a, b).entries
                       - geometric_mean(b, a).entries) < TOL_MEAN * scale

    def test_eps_limit_oracle_on_singular_pairs(self, rng):
        # the regularized limit converges like sqrt(eps); compare loosely
        for _ in range(5):
            a = random_psd(rng, 5, rank=int(rng.integers(1, 6)))
            b = random_psd(rng, 5, rank=int(rng.integers(1, 6)))
            got = geometric_mean(a, b).entries
            assert max_abs(got - eps_limit_geo(a, b)) < 5e-3

    def test_psd_result(self, rng):
        a = random_psd(rng, 5, rank=2)
        b = random_psd(rng, 5, rank=4)
        assert is_psd(geometric_mean(a, b))


class TestPowerMean:
    def test_endpoints(self, rng):
        a = random_psd(rng, 4, rank=2)
        b = random_psd(rng, 4, rank=3)
        assert max_abs(power_mean(a, b, 0.0).entries - a) < 1e-13
        assert max_abs(power_mean(a, b, 1.0).entries - b) < 1e-13

    def test_half_is_geometric(self, rng):
        a = random_psd(rng, 4)
        b = random_psd(rng, 4)
        assert max_abs(power_mean(a, b, 0.5).entries
                       - geometric_mean(a, b).entries) < 1e-12

    def test_scalar_oracle(self):
        got = power_mean(np.diag([1.0, 4.0]), np.diag([4.0, 1.0]), 0.5)
        assert max_abs(got.entries - 2 * np.eye(2)) < 1e-13
        # commuting scalars follow r^(1-a) s^a
        got = power_mean(np.diag([8.0, 1.0]), np.diag([1.0, 1.0]), 1.0 / 3.0)
        assert max_abs(got.entries - np.diag([4.0, 1.0])) < 1e-12

    def test_domain_error(self, rng):
        a = random_psd(rng, 2)
        with pytest.raises(DomainError):
            power_mean(a, a, 1.5)
        with pytest.raises(DomainError):
            power_mean(a, a, -0.1)


class TestLogMean:
    def test_self(self, rng):
        a = random_psd(rng, 3)
        assert max_abs(log_mean(a, a).entries - a) < 1e-10

    def test_scalar_oracle(self):
        t = np.exp(2.0)
        got = log_mean(np.eye(2), np.diag([t, 1.0]))
        want = np.diag([(t - 1.0) / 2.0, 1.0])
        assert max_abs(got.entries - want) < 1e-6

    def test_ordering_with_neighbors(self, rng):
        for _ in range(5):
            a = random_psd(rng, 4)
            b = random_psd(rng, 4)
            scale = max(1.0, max_abs(a), max_abs(b))
            h = harmonic_mean(a, b).entries
            g = geometric_mean(a, b).entries
            l = log_mean(a, b).entries
            m = arithmetic_mean(a, b).entries
            assert min_eig(g - h) > -1e-7 * scale
            assert min_eig(l - g) > -1e-7 * scale
            assert min_eig(m - l) > -1e-7 * scale


class TestMeanDispatch:
    def test_kinds(self, rng):
        a = random_psd(rng, 3)
        b = random_psd(rng, 3)
        assert max_abs(mean(ARITH, a, b).entries - arithmetic_mean(a, b).entries) == 0
        assert max_abs(mean(GEO, a, b).entries - geometric_mean(a, b).entries) == 0
        assert max_abs(mean(HARM, a, b).entries - harmonic_mean(a, b).entries) == 0
        assert max_abs(mean(PARALLEL, a, b).entries - parallel_sum(a, b).entries) == 0
        assert max_abs(mean(LOG, a, b).entries - log_mean(a, b).entries) == 0
        assert max_abs(mean(MeanKind.power(0.25), a, b).entries
                       - power_mean(a, b, 0.25).entries) == 0

    def test_parse(self):
        assert MeanKind.parse("geo").tag == "geo"
        assert MeanKind.parse("power:0.3").alpha == 0.3
        with pytest.raises(DomainError):
            MeanKind.parse("bogus")
        with pytest.raises(DomainError):
            MeanKind.parse("power:nan-ish")
        with pytest.raises(DomainError):
            MeanKind.power(1.2)


class TestStructuralProperties:
    def test_monotonicity(self, rng):
        from cpmean.opmeans import power_rep
        kinds = [ARITH, GEO, HARM, PARALLEL, LOG, MeanKind.power(0.3),
                 MeanKind.custom(power_rep(0.6, 16))]
        for _ in range(10):
            dim = int(rng.integers(2, 7))
            a1 = random_psd(rng, dim)
            b1 = random_psd(rng, dim)
            a2 = a1 + random_psd(rng, dim, lo=0.0, hi=1.0)
            b2 = b1 + random_psd(rng, dim, lo=0.0, hi=1.0)
            scale = max(1.0, max_abs(a2), max_abs(b2))
            for kind in kinds:
                diff = mean(kind, a2, b2).entries - mean(kind, a1, b1).entries
                assert min_eig(diff) > -1e-9 * scale, kind.tag

    def test_transformer_inequality(self, rng):
        kinds = [GEO, HARM, PARALLEL, LOG, MeanKind.power(0.7)]
        for _ in range(5):
            a = random_psd(rng, 4)
            b = random_psd(rng, 4)
            c = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            if rng.uniform() < 0.5:
                c[:, 0] = c[:, 1]  # exercise the singular case too
            for kind in kinds:
                lhs = c @ mean(kind, a, b).entries @ c.conj().T
                rhs = mean(kind, PsdMatrix.clamped(c @ a @ c.conj().T),
                           PsdMatrix.clamped(c @ b @ c.conj().T)).entries
                scale = max(1.0, max_abs(rhs))
                assert min_eig(rhs - lhs) > -1e-8 * scale, kind.tag

    def test_transformer_equality_invertible(self, rng):
        a = random_psd(rng, 4)
        b = random_psd(rng, 4)
        c = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))  # a.s. invertible
        lhs = c @ geometric_mean(a, b).entries @ c.conj().T
        rhs = geometric_mean(PsdMatrix.clamped(c @ a @ c.conj().T),
                             PsdMatrix.clamped(c @ b @ c.conj().T)).entries
        assert max_abs(lhs - rhs) < TOL_MEAN * max(1.0, max_abs(rhs))

    def test_concavity(self, rng):
        kinds = [GEO, HARM, PARALLEL, LOG, MeanKind.power(0.4)]
        for _ in range(5):
            a1, b1 = random_psd(rng, 4), random_psd(rng, 4)
            a2, b2 = random_psd(rng, 4), random_psd(rng, 4)
            for kind in kinds:
                joint = mean(kind, a1 + a2, b1 + b2).entries
                split = mean(kind, a1, b1).entries + mean(kind, a2, b2).entries
                scale = max(1.0, max_abs(joint))
                assert min_eig(joint - split) > -1e-8 * scale, kind.tag

    def test_equality_diagnostics(self, rng):
        a = random_psd(rng, 4)
        b = random_psd(rng, 4)
        scale = max(1.0, max_abs(a), max_abs(b))
        gap = max_abs(arithmetic_mean(a, b).entries - geometric_mean(a, b).entries)
        if gap <= TOL_MEAN * scale:
            assert max_abs(a - b) <= 10 * TOL_MEAN * scale
        # the forced case
        gap = max_abs(arithmetic_mean(a, a).entries - geometric_mean(a, a).entries)
        assert gap <= TOL_MEAN * scale

    def test_range_identity(self, rng):
        u = random_unitary(rng, 5)
        a = u[:, :3] @ random_psd(rng, 3) @ u[:, :3].conj().T
        b = u[:, 1:5] @ random_psd(rng, 4) @ u[:, 1:5].conj().T
        g = geometric_mean(a, b)
        want = proj_intersection(support_projection(PsdMatrix(a)),
                                 support_projection(PsdMatrix(b)))
        assert max_abs(support_projection(g).entries - want.entries) < 1e-8

    def test_downward_continuity(self, rng):
        a = random_psd(rng, 4, rank=2)
        b = random_psd(rng, 4, rank=3)
        limit = geometric_mean(a, b).entries
        prev = None
        errors = []
        for k in range(2, 15, 3):
            n = 2.0 ** k
            cur = geometric_mean(a + np.eye(4) / n, b + np.eye(4) / n).entries
            if prev is not None:
                assert min_eig(prev - cur) > -1e-9  # decreasing in the PSD order
            errors.append(max_abs(cur - limit))
            prev = cur
        assert errors[-1] < 3.0 / np.sqrt(2.0 ** 14)
        assert errors[-1] <= errors[0] + 1e-12

    def test_mean_pair_identities(self, rng):
        # (A s B) + (B s A) <= A + B and (A s B) # (A s-perp B) = A # B,
        # with s the alpha-power mean whose dual is the (1-alpha)-power mean
        a = random_psd(rng, 4)
        b = random_psd(rng, 4)
        scale = max(1.0, max_abs(a), max_abs(b))
        for alpha in (0.2, 0.5, 0.8):
            fwd = power_mean(a, b, alpha).entries
            rev = power_mean(b, a, alpha).entries
            assert min_eig((a + b) - (fwd + rev)) > -1e-9 * scale
            dual = power_mean(a, b, 1.0 - alpha).entries
            lhs = geometric_mean(PsdMatrix(fwd), PsdMatrix(dual)).entries
            assert max_abs(lhs - geometric_mean(a, b).entries) < TOL_MEAN * scale
