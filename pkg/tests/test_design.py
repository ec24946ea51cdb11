import math

import pytest
from hypothesis import given, settings, strategies as st

from pbwdac.circuit import DacCircuit, ModulatorSpec, NumericalGuardError
from pbwdac.design import (REFERENCE_LINEARITY, REFERENCE_SPEED_POWER, CriterionKind,
                           ResolutionCriterion, insertion_loss_budget, is_monotonic,
                           laser_power_requirement, power_budget, resolution_limit)

MONO = ResolutionCriterion(CriterionKind.WORST_CASE_PHASE_MONOTONICITY)


class TestLaser:
    def test_reference_value(self):
        # 100 nW * 10 * 10^2.6 / 0.1
        assert laser_power_requirement() == pytest.approx(1e-7 * 10 * 398.107170553497 / 0.1, rel=1e-12)
        assert laser_power_requirement() == pytest.approx(3.98e-3, rel=0.01)

    @pytest.mark.parametrize("kwargs", [dict(wall_plug_efficiency=0), dict(wall_plug_efficiency=1.5),
                                        dict(snr_margin=0.5), dict(circuit_loss_db=-1),
                                        dict(min_detectable_w=-1)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            laser_power_requirement(**kwargs)

    @given(st.floats(0, 60), st.floats(0, 60))
    def test_monotone_in_loss(self, a, b):
        lo, hi = sorted((a, b))
        assert laser_power_requirement(circuit_loss_db=lo) <= laser_power_requirement(circuit_loss_db=hi)

    @given(st.floats(0.01, 1), st.floats(0.01, 1))
    def test_antitone_in_efficiency(self, a, b):
        lo, hi = sorted((a, b))
        assert laser_power_requirement(wall_plug_efficiency=hi) <= laser_power_requirement(
            wall_plug_efficiency=lo)


class TestPowerBudget:
    def test_reference_inputs(self):
        b = power_budget()
        assert b.modulator_power_w == pytest.approx(0.192)
        assert b.phase_shifter_power_w == pytest.approx(0.174)
        assert b.driver_power_w == pytest.approx(0.060)
        assert b.total_w == pytest.approx(0.192 + 0.174 + 0.060 + 0.0039810717, rel=1e-9)
        assert 0.42 <= b.total_w <= 0.46
        assert 111 <= b.efficiency_gs_per_j <= 117
        assert b.energy_per_sample_j == pytest.approx(b.total_w / 50e9)

    def test_explicit_laser(self):
        assert power_budget(laser_electrical_w=0.0).total_w == pytest.approx(0.426)

    def test_to_dict(self):
        d = power_budget().to_dict()
        assert d["footprint_mm2"] == 1.2 and d["reported_energy_per_sample_j"] == 3e-12

    def test_invalid(self):
        with pytest.raises(ValueError):
            power_budget(per_modulator_w=-1)
        with pytest.raises(ValueError):
            power_budget(sample_rate_hz=0)

    @given(st.integers(1, 16), st.integers(1, 16))
    def test_monotone_in_bits(self, a, b):
        lo, hi = sorted((a, b))
        assert power_budget(n_bits=lo).total_w <= power_budget(n_bits=hi).total_w

    def test_reference_tables(self):
        assert REFERENCE_SPEED_POWER[-1]["power_w"] == 0.45
        assert REFERENCE_LINEARITY[-1]["enob"] == 10.4


class TestLossBudget:
    def test_lossless_tree_only(self):
        b = insertion_loss_budget(DacCircuit.ideal(4))
        assert b.total_db == pytest.approx(2 * 10 * math.log10(2))
        assert b.worst_branch == 1

    def test_itemized(self):
        c = DacCircuit.uniform(8, coupler_excess_loss_db=0.1, insertion_loss_db=3.0,
                               io_coupling_loss_db=2.0, combiner_excess_loss_db=0.2)
        b = insertion_loss_budget(c, {"waveguide": 1.5})
        assert b.items_db["io_coupling"] == pytest.approx(4.0)
        assert b.items_db["coupler_excess"] == pytest.approx(0.8)
        assert b.items_db["combiner_tree"] == pytest.approx(3 * (0.2 + 10 * math.log10(2)))
        assert b.total_db == pytest.approx(4.0 + 0.8 + 3.0 + 3 * (0.2 + 10 * math.log10(2)) + 1.5)
        assert b.worst_branch == 1
        assert len(b.per_code_loss_db) == 256

    def test_worst_branch_by_modulator(self):
        mods = [ModulatorSpec(insertion_loss_db=x) for x in (0.0, 0.0, 5.0, 0.0)]
        b = insertion_loss_budget(DacCircuit(4, coupler=DacCircuit.ideal(4).coupler, modulators=mods))
        assert b.worst_branch == 3

    def test_per_code_skipped_when_wide(self):
        assert insertion_loss_budget(DacCircuit.ideal(14)).per_code_loss_db == {}

    def test_negative_extra_rejected(self):
        with pytest.raises(ValueError):
            insertion_loss_budget(DacCircuit.ideal(2), {"x": -1.0})

    def test_to_dict(self):
        d = insertion_loss_budget(DacCircuit.uniform(2)).to_dict()
        assert set(d["per_code_loss_db"]) == {"0", "1", "2", "3"}


class TestResolution:
    def test_literal_field_46db(self):
        assert resolution_limit(4.6) == 1

    def test_literal_closed_form(self):
        # field leakage t 2^(N-1) < 1  <=>  N < 1 + ER / (20 log10 2)
        for er in (4.6, 10.0, 20.0, 33.0, 60.0):
            expected = min(16, math.ceil(1 + er / (20 * math.log10(2))) - 1)
            assert resolution_limit(er) == expected

    def test_literal_power_domain(self):
        crit = ResolutionCriterion(weight_domain="POWER")
        # power leakage t^2 4^(N-1) < 1 is the same inequality
        assert resolution_limit(4.6, crit) == resolution_limit(4.6)

    def test_monotonicity_zero_phase_guard(self):
        assert resolution_limit(4.6, MONO, max_n=12) == 12

    def test_monotonicity_with_phase_fails_early(self):
        crit = ResolutionCriterion(CriterionKind.WORST_CASE_PHASE_MONOTONICITY, residual_phase_rad=1.5)
        n = resolution_limit(4.6, crit, max_n=10)
        assert 1 <= n < 10

    def test_branch_phases(self):
        assert ResolutionCriterion(residual_phase_rad=0.2).branch_phases(3) == [0.2, -0.2, 0.2]
        assert ResolutionCriterion(residual_phase_rad=[1, 2, 3]).branch_phases(2) == [1.0, 2.0]
        with pytest.raises(ValueError):
            ResolutionCriterion(residual_phase_rad=[1.0]).branch_phases(2)

    def test_describe(self):
        assert "strictly increasing" in MONO.describe()
        assert "field" in ResolutionCriterion().describe()

    def test_guards(self):
        with pytest.raises(NumericalGuardError):
            resolution_limit(4.6, max_n=25)
        with pytest.raises(NumericalGuardError):
            resolution_limit(4.6, max_n=0)
        with pytest.raises(ValueError):
            resolution_limit(0.0)

    def test_is_monotonic(self):
        assert is_monotonic(DacCircuit.uniform(6))
        assert not is_monotonic(DacCircuit.uniform(4, residual_phase_rad=[0, 0, 0, math.pi]))

    @given(st.floats(0.1, 100), st.floats(0.1, 100))
    def test_literal_monotone_in_er(self, a, b):
        lo, hi = sorted((a, b))
        assert resolution_limit(lo) <= resolution_limit(hi)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.1, 60), st.floats(0.1, 60))
    def test_monotonicity_monotone_in_er(self, a, b):
        lo, hi = sorted((a, b))
        assert resolution_limit(lo, MONO, max_n=8) <= resolution_limit(hi, MONO, max_n=8)
