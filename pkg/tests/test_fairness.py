from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import instance_with_allocation
from fairdiv import (
    AdditiveValuation,
    Allocation,
    BudgetExceeded,
    Instance,
    PreconditionError,
    TableValuation,
    fairness_report,
    is_alpha_efx,
    is_alpha_mms,
    is_ef1,
    is_ef1_satisfied,
    is_efx,
    is_efx_satisfied,
    is_prop1,
    is_propm,
    is_propx,
    mms_to_eefx_certificate,
    mms_value,
)
from fairdiv.fairness import (
    ef1_violations,
    efx_violations,
    phi_potential,
    propm_threshold,
    top_item,
)

F = Fraction


def test_nine_x_is_efx(nine_goods, nine_x):
    assert is_efx(nine_goods, nine_x)
    assert is_ef1(nine_goods, nine_x)


def test_nine_y_fails_ef1_for_agent3(nine_goods, nine_y):
    assert not is_ef1_satisfied(nine_goods, nine_y, 2)
    bad = ef1_violations(nine_goods, nine_y, 2)
    assert [(b.rival, b.lhs, b.rhs) for b in bad] == [(0, 25, 30)]
    assert is_ef1_satisfied(nine_goods, nine_y, 0)


def test_single_agent_always_fair():
    inst = Instance.additive([[1, 2]])
    x = Allocation([[0, 1]])
    assert is_efx(inst, x) and is_ef1(inst, x) and is_prop1(inst, x)
    assert is_propm(inst, x) and is_propx(inst, x)


def test_chores_efx_and_ef1_forms():
    inst = Instance.additive([[-4, -1], [-4, -1]], "chores")
    x = Allocation([[0, 1], []])
    assert not is_efx(inst, x)
    assert not is_ef1(inst, x)
    assert is_efx(inst, Allocation([[0], [1]]))
    v = efx_violations(inst, x)
    assert (v[0].agent, v[0].rival, v[0].lhs, v[0].rhs) == (0, 1, 4, 0)


@settings(max_examples=200)
@given(instance_with_allocation("goods", 4, 6))
def test_efx_ef1_match_oracle(pair):
    inst, x = pair
    for i in range(inst.n):
        fn = oracles.additive_fn(inst.valuations[i].values)
        rivals = [x[j] for j in range(inst.n) if j != i]
        assert is_efx_satisfied(inst, x, i) == oracles.efx_ok_goods(fn, x[i], rivals)
        assert is_ef1_satisfied(inst, x, i) == oracles.ef1_ok_goods(fn, x[i], rivals)


@settings(max_examples=200)
@given(instance_with_allocation("chores", 4, 6))
def test_chores_efx_matches_oracle(pair):
    inst, x = pair
    for i in range(inst.n):
        d = oracles.additive_fn([-a for a in inst.valuations[i].values])
        rivals = [x[j] for j in range(inst.n) if j != i]
        assert is_efx_satisfied(inst, x, i) == oracles.efx_ok_chores(d, x[i], rivals)


@given(instance_with_allocation("goods", 4, 6))
def test_alpha_one_is_efx_and_zero_is_trivial(pair):
    inst, x = pair
    assert is_alpha_efx(inst, x, 1) == is_efx(inst, x)
    assert is_alpha_efx(inst, x, 0)


def test_propx_not_ef1():
    inst = Instance.additive([[1, 1, 1, 2, 2, 2]] * 2)
    x = Allocation([[0, 1, 2], [3, 4, 5]])
    assert is_propx(inst, x)
    assert not is_ef1(inst, x)


def test_mms_not_propm():
    inst = Instance.additive([[3, 1, 1, 1, 6, 1]] * 3)
    x = Allocation([[0], [1, 2, 3], [4, 5]])
    assert propm_threshold(inst, x, 0) == F(10, 3)
    assert not is_propm(inst, x)
    assert mms_value(inst, 0)[0] == 3
    assert is_alpha_mms(inst, x, 1)


def test_propm_empty_bundles_give_no_relief():
    inst = Instance.additive([[2, 1], [1, 1], [1, 1]])
    x = Allocation([[], [0, 1], []])
    assert propm_threshold(inst, x, 0) == 0


def test_mms_examples(nine_goods):
    assert mms_value(nine_goods, 0)[0] == 25
    assert mms_value(Instance.additive([[0, 1], [0, 1]]), 0)[0] == 0
    assert mms_value(Instance.additive([[5], [5]]), 0)[0] == 0


@settings(max_examples=100)
@given(st.data())
def test_mms_matches_labeled_scan(data):
    n = data.draw(st.integers(1, 3))
    m = data.draw(st.integers(0, 6))
    row = data.draw(st.lists(st.integers(0, 15), min_size=m, max_size=m))
    inst = Instance.additive([row] * n)
    value, witness = mms_value(inst, 0)
    assert value == oracles.mms(oracles.additive_fn(row), n, m)
    witness.validate(n, m)
    assert min(inst.valuations[0].value(b) for b in witness) == value


@settings(max_examples=40)
@given(st.data())
def test_mms_tables_match_labeled_scan(data):
    n = data.draw(st.integers(1, 3))
    m = data.draw(st.integers(0, 4))
    vals = [0] + data.draw(st.lists(st.integers(0, 9), min_size=(1 << m) - 1, max_size=(1 << m) - 1))
    inst = Instance([TableValuation(vals)] * n, "goods")
    assert mms_value(inst, 0)[0] == oracles.mms(oracles.table_fn(vals), n, m)


def test_mms_guard():
    with pytest.raises(BudgetExceeded):
        mms_value(Instance.additive([[1] * 13, [1] * 13]), 0)
    assert mms_value(Instance.additive([[1] * 13, [1] * 13]), 0, max_items=13)[0] == 6


def test_near_mms_is_not_near_eefx():
    inst = Instance.additive([[1, F(9, 100), F(1, 100)]] * 2)
    x = Allocation([[1], [0, 2]])
    assert mms_value(inst, 0)[0] == F(1, 10)
    assert is_alpha_mms(inst, x, F(9, 10))
    assert not is_alpha_efx(inst, x, F(1, 10))


def test_phi_procedure_one_move():
    inst = Instance.additive([[4, 3, 3, 3]] * 3)
    x = Allocation([[0], [1, 2, 3], []])
    steps = []
    cert = mms_to_eefx_certificate(inst, x, 0, on_step=lambda *a: steps.append(a))
    assert cert.witness.as_lists() == [[0], [2, 3], [1]]
    assert len(steps) == 1
    before, after, g, src, dst = steps[0]
    assert (g, src, dst) == (1, 1, 2)
    assert after < before and after.peak == 3


def test_phi_procedure_noop_when_already_efx(nine_goods, nine_x):
    cert = mms_to_eefx_certificate(nine_goods, nine_x, 0)
    assert cert.witness == nine_x


def test_phi_rejections():
    inst = Instance.additive([[0, 1], [0, 1]])
    with pytest.raises(PreconditionError, match="strongly monotone"):
        mms_to_eefx_certificate(inst, Allocation([[], [0, 1]]), 0)
    inst = Instance.additive([[2, 2], [1, 1]])
    with pytest.raises(PreconditionError, match="maximin"):
        mms_to_eefx_certificate(inst, Allocation([[], [0, 1]]), 0)
    with pytest.raises(PreconditionError):
        mms_to_eefx_certificate(Instance.additive([[-1]], "chores"), Allocation([[0]]), 0)


def test_top_item_and_potential():
    v = AdditiveValuation([4, 3, 3, 3])
    assert top_item(v, {1, 2, 3}) == 1
    phi = phi_potential(v, [{0}, {1, 2, 3}, set()], 0)
    assert (phi.poorer, phi.peak, phi.peak_count) == (1, 6, 1)


def test_fairness_report(nine_goods, nine_y):
    rep = fairness_report(nine_goods, nine_y)
    assert not rep.is_ef1
    assert rep.agents[2].mms_value == 22 and rep.agents[2].mms_ratio == F(25, 22)
    assert rep.alpha_correlation == F(1, 123)  # frozen from the all-pairs subset scan
    chores = fairness_report(Instance.additive([[-1, -2], [-2, -1]], "chores"), Allocation([[0], [1]]))
    assert chores.is_efx and chores.agents[0].prop1 is None
