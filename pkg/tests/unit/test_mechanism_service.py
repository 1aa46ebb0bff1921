"""
Unit tests for attention allocation and the axiom diagnostics.
"""
import numpy as np
import pytest

from app.core.exceptions import MechanismError
from app.models.mechanism import PRA, WTA, Tullock
from app.services.mechanism_service import allocate, check_axioms


# ============================================================================
# allocate
# ============================================================================

class TestAllocate:
    """Tests for allocate across the three mechanisms."""

    def test_tullock_proportional(self):
        assert allocate(Tullock(), [0.2, 0.3]) == pytest.approx([0.4, 0.6])

    def test_tullock_uniform_at_zero(self):
        assert allocate(Tullock(), [0.0, 0.0]) == pytest.approx([0.5, 0.5])

    def test_wta_tie_split(self):
        assert allocate(WTA(), [0.7, 0.7, 0.2]) == pytest.approx([0.5, 0.5, 0.0])

    def test_wta_tie_band(self):
        """Qualities within 1e-12 count as tied."""
        assert allocate(WTA(), [0.7, 0.7 - 1e-13]) == pytest.approx([0.5, 0.5])

    def test_pra_componentwise(self):
        assert allocate(PRA(p=[0.3, 0.4]), [0.5, 1.0]) == pytest.approx([0.15, 0.40])

    def test_pra_length_mismatch(self):
        with pytest.raises(MechanismError, match="shares for 3 players"):
            allocate(PRA(p=[0.5, 0.5]), [0.1, 0.2, 0.3])

    def test_quality_out_of_range(self):
        with pytest.raises(MechanismError, match="\\[0, 1\\]"):
            allocate(Tullock(), [0.5, 1.2])
        with pytest.raises(MechanismError):
            allocate(WTA(), [-0.1, 0.5])

    def test_range_check_can_be_disabled(self):
        """Fixtures with Q above 1 evaluate when the cap is off."""
        assert allocate(WTA(), [1.0, 2.0], check_range=False) == pytest.approx([0.0, 1.0])

    def test_batch_shape(self):
        Q = np.array([[0.2, 0.3], [0.0, 0.0], [1.0, 0.0]])
        shares = allocate(Tullock(), Q)
        assert shares.shape == (3, 2)
        assert shares[1] == pytest.approx([0.5, 0.5])
        assert shares[2] == pytest.approx([1.0, 0.0])


class TestAllocationInvariants:
    """Property checks on random quality vectors."""

    @pytest.mark.parametrize("mech", [PRA(p=[0.2, 0.3, 0.5]), WTA(), Tullock()], ids=["pra", "wta", "tullock"])
    def test_shares_never_exceed_budget(self, mech):
        Q = np.random.default_rng(3).uniform(0.0, 1.0, size=(500, 3))
        shares = allocate(mech, Q)
        assert np.all(shares >= 0.0) and np.all(shares <= 1.0)
        assert np.all(shares.sum(axis=1) <= 1.0 + 1e-12)

    def test_wta_scale_invariant(self):
        Q = np.random.default_rng(4).uniform(0.1, 0.5, size=(100, 4))
        assert np.array_equal(allocate(WTA(), Q), allocate(WTA(), 2.0 * Q))

    def test_tullock_scale_invariant(self):
        Q = np.random.default_rng(5).uniform(0.1, 0.5, size=(100, 4))
        assert np.allclose(allocate(Tullock(), Q), allocate(Tullock(), 1.7 * Q), atol=1e-15)

    def test_pra_monotone(self):
        mech = PRA(p=[0.4, 0.6])
        low = allocate(mech, [0.2, 0.5])
        high = allocate(mech, [0.3, 0.5])
        assert np.all(high >= low)


# ============================================================================
# check_axioms
# ============================================================================

class TestCheckAxioms:
    """Tests for the monotonicity / separability diagnostics."""

    def test_pra_passes_both(self):
        report = check_axioms(PRA(p=[0.2, 0.3, 0.1]), samples=50, seed=1)
        assert report.applicable
        assert report.monotonicity_passed
        assert report.separability_passed
        assert report.passed

    def test_tullock_fails_monotonicity(self):
        """Raising a competitor's quality lowers one's own share."""
        report = check_axioms(Tullock(), n=2, samples=50, seed=1)
        assert not report.monotonicity_passed
        assert report.monotonicity_worst < 0.0
        assert not report.passed

    def test_wta_not_applicable(self):
        report = check_axioms(WTA())
        assert not report.applicable
        assert report.note == "not-applicable: non-differentiable"
        assert report.passed

    def test_deterministic_for_seed(self):
        first = check_axioms(Tullock(), n=3, samples=20, seed=9)
        second = check_axioms(Tullock(), n=3, samples=20, seed=9)
        assert first == second
