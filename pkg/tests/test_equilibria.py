"""Solvers, verifiers, and ratio reports."""

import random

import pytest

from wardrop import (
    BoundValue,
    Commodity,
    ConvergenceError,
    DensityFn,
    DeviationFn,
    DeviationProfile,
    Flow,
    GameInstance,
    InputError,
    LatencyFn,
    RefusalError,
    Resource,
    SensitivityProfile,
    beckmann_potential,
    compute_nash_flow,
    deviations_from_approx,
    discretize_density,
    empirical_ratio,
    gen_braess_subcritical,
    gen_parallel_sr,
    gen_two_arc_dr,
    heterogeneous_parallel_equilibrium,
    relative_duality_gap,
    strategy_latencies,
    tau_rel,
    verify_approx_nash,
    verify_deviated_nash,
    verify_deviation_implies_approx,
    worst_approx_search,
)

from corpus import (
    generator_corpus,
    measured_eps,
    random_feasible_flow,
    random_parallel_instance,
    random_profile,
)


def pigou() -> GameInstance:
    return GameInstance(
        (Resource("e1", LatencyFn.affine(0.0, 1.0)), Resource("e2", LatencyFn.constant(1.0))),
        (Commodity(1.0, (("e1",), ("e2",))),),
    )


# -- approximate verification ----------------------------------------------------


def test_verify_approx_pigou_nash():
    inst = pigou()
    nash = Flow.single_class(inst, [[1.0, 0.0]])
    cert = verify_approx_nash(inst, nash, 0.0)
    assert cert.passed
    assert cert.kind == "approx-nash"
    assert cert.worst_slack == pytest.approx(0.0)


def test_verify_approx_threshold():
    inst = pigou()
    split = Flow.single_class(inst, [[0.5, 0.5]])
    # latencies (0.5, 1.0); the constant arc is used, so eps must reach 1
    assert not verify_approx_nash(inst, split, 0.0).passed
    assert not verify_approx_nash(inst, split, 0.9).passed
    assert verify_approx_nash(inst, split, 1.0).passed


def test_verify_approx_records_worst_pair():
    inst = pigou()
    split = Flow.single_class(inst, [[0.5, 0.5]])
    cert = verify_approx_nash(inst, split, 0.0)
    rec = cert.records[0]
    assert rec.path == ("e2",)  # costliest used strategy
    assert rec.witness == ("e1",)  # cheapest strategy
    assert rec.lhs == pytest.approx(1.0)
    assert rec.rhs == pytest.approx(0.5)
    assert rec.slack == pytest.approx(-0.5)
    obj = cert.to_obj()
    assert obj["pass"] is False
    assert obj["worst_violations"][0]["slack"] == pytest.approx(-0.5)


def test_verify_approx_per_class_eps():
    inst = pigou()
    profile = SensitivityProfile.single_commodity((0.5, 0.5), (0.1, 1.0))
    # both classes split across both arcs; only the high-eps class tolerates it
    flow = Flow.build(inst, [[[0.25, 0.25], [0.25, 0.25]]], profile)
    cert = verify_approx_nash(inst, flow, profile)
    assert not cert.passed
    by_class = {rec.cls: rec for rec in cert.records}
    assert by_class[0].slack < 0.0
    assert by_class[1].slack >= 0.0


def test_verify_approx_eps_validation():
    inst = pigou()
    nash = Flow.single_class(inst, [[1.0, 0.0]])
    with pytest.raises(InputError):
        verify_approx_nash(inst, nash, -0.5)


# -- deviated verification ---------------------------------------------------------


def test_verify_deviated_two_arc_construction():
    instance, profile, deviations, x, z, _ = gen_two_arc_dr(0.5, (0.3, 0.7), (0.4, 1.0))
    cert = verify_deviated_nash(instance, x, deviations, profile)
    assert cert.passed
    assert cert.kind == "deviated-nash"
    # the plain Nash flow is not a deviated equilibrium here: the whole
    # population sits on the deviating arc
    cert_z = verify_deviated_nash(instance, z, deviations, profile)
    assert not cert_z.passed


def test_verify_deviated_membership_guard():
    inst = pigou()
    nash = Flow.single_class(inst, [[1.0, 0.0]])
    too_big = DeviationProfile(0.5, edge_fns={"e1": DeviationFn.constant(2.0)})
    with pytest.raises(InputError):
        verify_deviated_nash(inst, nash, too_big)


def test_verify_deviated_homogeneous_default_topology():
    # constant deviation on the cheap arc pushes everyone to the constant arc
    inst = GameInstance(
        (Resource("e1", LatencyFn.affine(0.0, 1.0)), Resource("e2", LatencyFn.constant(1.0))),
        (Commodity(1.0, (("e1",), ("e2",))),),
    )
    dev = DeviationProfile(1.0, edge_fns={"e1": DeviationFn.scaled(1.0)})
    all_e2 = Flow.single_class(inst, [[0.0, 1.0]])
    # q(e1) = 0 + 1*0 = 0 at load 0, q(e2) = 1: not an equilibrium
    assert not verify_deviated_nash(inst, all_e2, dev).passed
    half = Flow.single_class(inst, [[0.5, 0.5]])
    # q(e1) = 0.5 + 0.5 = 1 = q(e2): exact equilibrium
    assert verify_deviated_nash(inst, half, dev).passed


# -- constructive deviations ---------------------------------------------------------


def test_deviations_from_approx_hand_case():
    inst = GameInstance(
        (
            Resource("a", LatencyFn.constant(1.0)),
            Resource("b", LatencyFn.constant(1.2)),
            Resource("c", LatencyFn.constant(2.0)),
        ),
        (Commodity(1.0, (("a",), ("b",), ("c",))),),
    )
    flow = Flow.single_class(inst, [[0.5, 0.5, 0.0]])
    dev = deviations_from_approx(inst, flow, eps=0.2)
    # used strategies get the gap to the costliest used one, unused get beta*l
    assert dev.beta == pytest.approx(0.2)
    assert dev.strategy_values[0][0] == pytest.approx(0.2)
    assert dev.strategy_values[0][1] == pytest.approx(0.0)
    assert dev.strategy_values[0][2] == pytest.approx(0.4)
    assert verify_deviated_nash(inst, flow, dev).passed


def test_deviations_from_approx_gamma_division():
    inst = GameInstance(
        (Resource("a", LatencyFn.constant(1.0)), Resource("b", LatencyFn.constant(1.2))),
        (Commodity(1.0, (("a",), ("b",))),),
    )
    flow = Flow.single_class(inst, [[0.5, 0.5]])
    dev = deviations_from_approx(inst, flow, eps=0.2, gamma=2.0)
    assert dev.beta == pytest.approx(0.1)
    assert dev.strategy_values[0][0] == pytest.approx(0.1)
    profile = SensitivityProfile.single_commodity((1.0,), (2.0,))
    assert verify_deviated_nash(inst, flow, dev, profile).passed


def test_deviations_from_approx_random_round_trip():
    rng = random.Random(99)
    for _ in range(100):
        inst = random_parallel_instance(rng)
        flow = random_feasible_flow(rng, inst)
        eps = measured_eps(inst, flow)
        dev = deviations_from_approx(inst, flow, eps)
        assert verify_deviated_nash(inst, flow, dev).passed


def test_deviations_from_approx_errors():
    inst = pigou()
    profile = SensitivityProfile.single_commodity((0.5, 0.5), (1.0, 2.0))
    two_class = Flow.build(inst, [[[0.5, 0.0], [0.0, 0.5]]], profile)
    with pytest.raises(InputError):
        deviations_from_approx(inst, two_class, 1.0)
    split = Flow.single_class(inst, [[0.5, 0.5]])
    with pytest.raises(InputError):
        deviations_from_approx(inst, split, -1.0)
    with pytest.raises(InputError):
        deviations_from_approx(inst, split, 1.0, gamma=0.0)
    with pytest.raises(InputError):
        deviations_from_approx(inst, split, 0.1)  # flow is only 1-approximate


def test_deviation_implies_approx():
    instance, profile, deviations, x, _z, _b = gen_two_arc_dr(
        0.5, (0.3, 0.7), (0.4, 1.0)
    )
    cert = verify_deviation_implies_approx(instance, x, deviations, profile)
    assert cert.passed
    assert cert.kind == "approx-nash"

    inst = pigou()
    nash = Flow.single_class(inst, [[1.0, 0.0]])
    bad = Flow.single_class(inst, [[0.0, 1.0]])
    dev = DeviationProfile(0.5, edge_fns={})
    assert verify_deviation_implies_approx(inst, nash, dev).passed
    with pytest.raises(InputError):
        verify_deviation_implies_approx(inst, bad, dev)


# -- plain Nash solver ----------------------------------------------------------------


def test_compute_nash_pigou():
    inst = pigou()
    flow = compute_nash_flow(inst)
    assert flow.loads[0] == pytest.approx(1.0, abs=1e-9)
    cert = verify_approx_nash(inst, flow, 0.0, rtol=tau_rel())
    assert cert.passed


def test_exact_and_potential_agree_on_parallel():
    rng = random.Random(314)
    from wardrop import social_cost

    for _ in range(50):
        inst = random_parallel_instance(rng)
        exact = compute_nash_flow(inst, method="exact-parallel")
        fw = compute_nash_flow(inst, method="potential")
        c1 = social_cost(inst, exact)
        c2 = social_cost(inst, fw)
        assert abs(c1 - c2) <= 1e-8 * max(1.0, c1)


def test_nash_used_latencies_level():
    for case in generator_corpus():
        if case["kind"] not in ("random-sp", "random-parallel"):
            continue
        inst = case["instance"]
        flow = compute_nash_flow(inst)
        for i in range(len(inst.commodities)):
            lats = strategy_latencies(inst, i, flow.loads)
            level = min(lats)
            for p in flow.used(i, 0):
                assert lats[p] <= level * (1.0 + tau_rel()) + 1e-12


def test_potential_optimality_spot_check():
    rng = random.Random(2718)
    for seed in (1, 2, 3):
        inst = random_parallel_instance(random.Random(seed))
        flow = compute_nash_flow(inst)
        base = beckmann_potential(inst, flow)
        scale = max(1.0, abs(base))
        for _ in range(100):
            other = random_feasible_flow(rng, inst)
            assert base <= beckmann_potential(inst, other) + tau_rel() * scale


def test_compute_nash_method_validation():
    inst, *_ = gen_braess_subcritical(2, 0.5)
    with pytest.raises(InputError):
        compute_nash_flow(inst, method="exact-parallel")
    with pytest.raises(InputError):
        compute_nash_flow(inst, method="simplex")


def test_compute_nash_profile_split():
    inst = pigou()
    profile = SensitivityProfile.single_commodity((0.25, 0.75), (1.0, 2.0))
    flow = compute_nash_flow(inst, profile)
    assert len(flow.values[0]) == 2
    assert sum(flow.values[0][0]) == pytest.approx(0.25)
    assert flow.loads[0] == pytest.approx(1.0, abs=1e-9)


def test_compute_nash_nonconvergence_raises():
    inst, *_ = gen_braess_subcritical(3, 0.25)
    with pytest.raises(ConvergenceError) as err:
        compute_nash_flow(inst, method="potential", max_iter=1)
    assert err.value.achieved is not None


def test_relative_duality_gap_behaviour():
    inst, _x, z, _b = gen_braess_subcritical(3, 0.25)
    assert relative_duality_gap(inst, z) <= 1e-12
    lopsided = Flow.single_class(
        inst, [[1.0] + [0.0] * (len(inst.commodities[0].strategies) - 1)]
    )
    assert relative_duality_gap(inst, lopsided) > 0.01


def test_coarse_rel_gap_is_honored():
    rng = random.Random(55)
    inst = random_parallel_instance(rng, n_links=4)
    flow = compute_nash_flow(inst, method="potential", rel_gap=1e-6)
    assert relative_duality_gap(inst, flow) <= 1e-6


# -- heterogeneous solver ----------------------------------------------------------------


def test_heterogeneous_reproduces_two_arc_split():
    for demands, gammas in (
        ((1.0,), (1.0,)),
        ((0.3, 0.7), (0.4, 1.0)),
        ((0.2, 0.3, 0.5), (0.2, 0.6, 0.9)),
    ):
        instance, profile, deviations, x, _z, _b = gen_two_arc_dr(0.5, demands, gammas)
        flow = heterogeneous_parallel_equilibrium(instance, deviations, profile)
        assert verify_deviated_nash(
            instance, flow, deviations, profile, rtol=tau_rel()
        ).passed
        for a, b in zip(flow.loads, x.loads):
            assert abs(a - b) <= 1e-6


def test_heterogeneous_zero_deviations_match_nash():
    # dominated second arc keeps the equilibrium at a vertex
    inst = GameInstance(
        (Resource("e0", LatencyFn.constant(1.0)), Resource("e1", LatencyFn.affine(1.5, 1.0))),
        (Commodity(1.0, (("e0",), ("e1",))),),
    )
    profile = SensitivityProfile.single_commodity((0.4, 0.6), (0.3, 0.9))
    dev = DeviationProfile(0.7, edge_fns={})
    flow = heterogeneous_parallel_equilibrium(inst, dev, profile)
    nash = compute_nash_flow(inst)
    for a, b in zip(flow.loads, nash.loads):
        assert abs(a - b) <= tau_rel() * max(1.0, abs(b))


def test_heterogeneous_matches_discretized_construction():
    profile0 = discretize_density(DensityFn.uniform(0.0, 1.0), 0.25)
    demands = tuple(d for d, _ in profile0.classes[0])
    gammas = tuple(g for _, g in profile0.classes[0])
    instance, profile, deviations, x, _z, _b = gen_two_arc_dr(1.0, demands, gammas)
    flow = heterogeneous_parallel_equilibrium(instance, deviations, profile)
    for a, b in zip(flow.loads, x.loads):
        assert abs(a - b) <= 1e-6


def test_heterogeneous_validation_and_nonconvergence():
    instance, profile, deviations, *_ = gen_two_arc_dr(0.5, (0.3, 0.7), (0.4, 1.0))
    with pytest.raises(InputError):
        heterogeneous_parallel_equilibrium(
            instance, deviations, profile, damping=0.0
        )
    table = DeviationProfile(0.5, strategy_values=((0.0, 0.0),))
    with pytest.raises(InputError):
        heterogeneous_parallel_equilibrium(instance, table, profile)
    series, *_ = gen_braess_subcritical(2, 0.5)
    dev0 = DeviationProfile(0.5, edge_fns={})
    with pytest.raises(InputError):
        heterogeneous_parallel_equilibrium(
            series, dev0, SensitivityProfile.homogeneous(series)
        )
    # interior-split equilibrium: fixed-damping best response oscillates
    inst = GameInstance(
        (Resource("e0", LatencyFn.affine(0.3, 1.0)), Resource("e1", LatencyFn.affine(0.7, 1.3))),
        (Commodity(1.0, (("e0",), ("e1",))),),
    )
    with pytest.raises(ConvergenceError) as err:
        heterogeneous_parallel_equilibrium(
            inst, dev0, SensitivityProfile.homogeneous(inst), max_rounds=60
        )
    assert err.value.achieved is not None and err.value.achieved > 0.0


# -- worst-case grid search ----------------------------------------------------------------


def test_worst_approx_search_parallel_sr():
    instance, _prof, _x, _z, _b = gen_parallel_sr(1.0, (1.0,), (1.0,))
    flow, report = worst_approx_search(instance, 1.0, 0.01)
    assert report.ratio == pytest.approx(2.0, abs=1e-9)
    assert flow.loads[0] == pytest.approx(0.0, abs=1e-9)


def test_worst_approx_search_eps_zero_is_nash():
    inst = pigou()
    _flow, report = worst_approx_search(inst, 0.0, 0.05)
    assert report.ratio == pytest.approx(1.0, abs=1e-9)


def test_worst_approx_search_pigou_half():
    inst = pigou()
    _flow, report = worst_approx_search(inst, 0.5, 0.001)
    assert report.ratio == pytest.approx(1.0, abs=1e-9)


def test_worst_approx_search_within_grid_of_closed_form():
    instance, profile, _x, _z, bound = gen_parallel_sr(0.5, (0.4, 0.6), (0.5, 1.0))
    eps_profile = profile.scaled(0.5)  # eps = beta * gamma per class
    _flow, report = worst_approx_search(instance, eps_profile, 0.05)
    assert abs(report.ratio - bound.as_float) <= 2 * 0.05


def test_worst_approx_search_refusal_and_validation():
    rng = random.Random(8)
    inst = random_parallel_instance(rng, n_links=3)
    profile = SensitivityProfile.single_commodity(
        (inst.commodities[0].demand / 3,) * 3, (0.5, 1.0, 1.5)
    )
    with pytest.raises(RefusalError):
        worst_approx_search(inst, profile, 0.25)  # 9 variables
    with pytest.raises(InputError):
        worst_approx_search(inst, 0.5, 0.0)
    with pytest.raises(InputError):
        worst_approx_search(inst, 0.5, 0.7)


# -- ratio reports ----------------------------------------------------------------------


def test_empirical_ratio_identity():
    inst, _x, z, _b = gen_braess_subcritical(2, 0.5)
    report = empirical_ratio(inst, z, z)
    assert report.ratio == pytest.approx(1.0)


def test_empirical_ratio_attaches_generator_bound():
    inst, x, z, bound = gen_braess_subcritical(3, 0.25)
    report = empirical_ratio(inst, x, z)
    assert report.ratio == pytest.approx(bound.as_float, rel=1e-9)
    assert report.bound is not None
    assert report.bound.value == pytest.approx(bound.as_float)
    assert report.slack == pytest.approx(0.0, abs=1e-9)


def test_empirical_ratio_two_arc_value():
    beta, demands, gammas = 1.0, (0.5, 0.5), (1.0, 2.0)
    instance, _p, _d, x, z, bound = gen_two_arc_dr(beta, demands, gammas)
    report = empirical_ratio(instance, x, z)
    # 1 + beta * gamma_j * tail_j with j picked to maximize it: 1 + 2*0.5
    assert report.ratio == pytest.approx(2.0, rel=1e-9)
    assert bound.as_float == pytest.approx(2.0)


def test_empirical_ratio_zero_reference():
    inst = GameInstance(
        (Resource("e1", LatencyFn.constant(0.0)),),
        (Commodity(1.0, (("e1",),)),),
    )
    flow = Flow.single_class(inst, [[1.0]])
    with pytest.raises(InputError):
        empirical_ratio(inst, flow, flow)


def test_ratio_report_to_obj():
    report = empirical_ratio(*_ratio_args())
    obj = report.to_obj()
    assert set(obj) == {"ratio", "bound", "slack"}


def _ratio_args():
    inst, _x, z, _b = gen_braess_subcritical(2, 0.5)
    return inst, z, z
