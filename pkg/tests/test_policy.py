import itertools

import pytest

from conftest import build_model_with
from ratbench.errors import (
    ConfigInvalid,
    NoFeasibleTechnology,
    TechnologyUnavailable,
    Unsupported,
)
from ratbench.policy import (
    Context,
    LadderRung,
    MessageSpec,
    Objective,
    Policy,
    confirmed_ladder_plan,
    expected_cost,
    fragmentation_plan,
    policy_from_json,
    policy_to_json,
    select_rat,
)
from ratbench.records import (
    MOBILE_OUTDOOR,
    STATIC_INDOOR,
    PayloadBucket,
    Technology,
)


def ctx_indoor() -> Context:
    return Context(scenario=STATIC_INDOOR)


class TestExpectedCost:
    def test_table_anchored_components(self, models):
        est = expected_cost(Technology.LORAWAN, MessageSpec(8), ctx_indoor(), models)
        assert est.energy_uwh / 8 == pytest.approx(8.03)
        assert est.pdr == pytest.approx(0.6158)

    def test_cost_is_table_arithmetic(self, models):
        est = expected_cost(Technology.NBIOT, MessageSpec(8), ctx_indoor(), models)
        assert est.uwh_per_delivered_byte == pytest.approx(60.52 / 0.9310, rel=1e-12)

    def test_perfect_delivery_identity(self, models, table_cells):
        # with pdr forced to 1, cost per delivered byte equals energy/payload
        perfect = build_model_with(
            table_cells,
            pdr_overrides={
                (Technology.LORAWAN, PayloadBucket.B1_12, "static-indoor"): 100.0
            },
        )
        est = expected_cost(Technology.LORAWAN, MessageSpec(8), ctx_indoor(), perfect)
        assert est.pdr == 1.0
        assert est.uwh_per_delivered_byte == pytest.approx(est.energy_uwh / 8)

    def test_oversized_payload_without_fragmentation(self, models):
        with pytest.raises(Unsupported):
            expected_cost(Technology.SIGFOX, MessageSpec(13), ctx_indoor(), models)

    def test_oversized_payload_with_fragmentation(self, models):
        est = expected_cost(
            Technology.SIGFOX, MessageSpec(100), ctx_indoor(), models, allow_fragmentation=True
        )
        assert est.fragments == 9
        assert est.energy_uwh == pytest.approx(9 * 12 * 45.58, rel=0.35)
        assert est.pdr == pytest.approx(0.8986**9)

    def test_sentinel_pdr_is_unavailable(self, models):
        # LoRaWAN 256 B is within the payload maximum but has no delivery data
        with pytest.raises(TechnologyUnavailable):
            expected_cost(Technology.LORAWAN, MessageSpec(256), ctx_indoor(), models)


class TestSelectRat:
    def test_small_payload_prefers_lorawan_indoor(self, models):
        policy = Policy(objective=Objective.MIN_ENERGY_PER_BYTE)
        for payload in range(1, 13):
            assert (
                select_rat(policy, MessageSpec(payload), ctx_indoor(), models)
                is Technology.LORAWAN
            )

    def test_large_payload_forces_cellular(self, models):
        policy = Policy()
        assert select_rat(policy, MessageSpec(1000), ctx_indoor(), models) is Technology.NBIOT

    def test_pdr_floor_excludes_sigfox_at_speed(self, models):
        policy = Policy(pdr_floor=0.40)
        ctx = Context(scenario=MOBILE_OUTDOOR, speed_kmh=50.0)
        choice = select_rat(policy, MessageSpec(8), ctx, models)
        costs = {
            tech: expected_cost(tech, MessageSpec(8), ctx, models)
            for tech in (Technology.LORAWAN, Technology.NBIOT)
        }
        assert choice in costs
        # Sigfox sits below the floor at >30 km/h
        sigfox = expected_cost(Technology.SIGFOX, MessageSpec(8), ctx, models)
        assert sigfox.pdr == pytest.approx(0.17)
        assert sigfox.pdr < 0.40

    def test_argmin_invariant_under_uniform_energy_scaling(self, models, table_cells):
        scaled = build_model_with(table_cells, eb_scale=7.3)
        policy = Policy(objective=Objective.MIN_ENERGY_PER_DELIVERED_BYTE)
        for payload in (4, 30, 200, 1200):
            assert select_rat(policy, MessageSpec(payload), ctx_indoor(), models) is select_rat(
                policy, MessageSpec(payload), ctx_indoor(), scaled
            )

    def test_allowed_list_restricts_candidates(self, models):
        nbiot_only = Policy(allowed=(Technology.NBIOT,))
        assert select_rat(nbiot_only, MessageSpec(8), ctx_indoor(), models) is Technology.NBIOT

    def test_no_feasible_technology(self, models):
        sigfox_only = Policy(allowed=(Technology.SIGFOX,))
        with pytest.raises(NoFeasibleTechnology):
            select_rat(sigfox_only, MessageSpec(1000), ctx_indoor(), models)


class TestFragmentationPlan:
    def test_sigfox_100b(self, models):
        plan = fragmentation_plan(100, Technology.SIGFOX)
        sizes = [s.payload_bytes for s in plan.steps]
        assert len(sizes) == 9 and sizes == [12] * 8 + [4]

    def test_identity_single_fragment(self):
        plan = fragmentation_plan(12, Technology.SIGFOX)
        assert [s.payload_bytes for s in plan.steps] == [12]

    def test_lorawan_max_message(self, models):
        plan = fragmentation_plan(1547, Technology.LORAWAN, ctx_indoor(), models)
        sizes = [s.payload_bytes for s in plan.steps]
        assert len(sizes) == 7 and sizes == [256] * 6 + [11]
        assert sum(sizes) == 1547
        assert all(s <= 256 for s in sizes)

    def test_timed_plan_respects_duty_cycle(self, models):
        plan = fragmentation_plan(36, Technology.SIGFOX, ctx_indoor(), models)
        starts = [s.planned_start_ms for s in plan.steps]
        assert starts == sorted(starts)
        # every later fragment waits for the previous burst's enforced silence
        for a, b in zip(starts, starts[1:]):
            assert b - a >= 7240 + 617_760
        assert plan.total_duration_ms >= starts[-1]


def outcome_tree_expectation(attempts: list[tuple[float, float]]) -> tuple[float, float]:
    """Brute-force enumeration over the ladder outcome tree.

    attempts: ordered (success probability, energy) per attempt. The walk
    stops at the first success; outcomes are first-success-at-k or all-fail.
    Returns (expected energy, delivery probability).
    """
    expected_energy = 0.0
    delivery = 0.0
    reach = 1.0
    spent = 0.0
    for p, energy in attempts:
        spent += energy
        expected_energy += reach * p * spent
        delivery += reach * p
        reach *= 1.0 - p
    expected_energy += reach * spent
    return expected_energy, delivery


def ladder_attempt_list(policy: Policy, msg, ctx, models) -> list[tuple[float, float]]:
    attempts = []
    for rung in policy.ladder:
        if msg.payload_bytes > {"LoRaWAN": 256, "Sigfox": 12, "NBIoT": 1547}[rung.technology.value]:
            continue
        p = models.pdr(rung.technology, msg.payload_bytes, ctx.scenario, ctx.speed_kmh).value
        energy = models.packet_energy_uwh(rung.technology, msg.payload_bytes, ctx.scenario)
        if rung.confirmed:
            energy += models.ack_rx_energy_uwh(rung.technology, ctx.scenario)
        retries = min(rung.retries, policy.max_ladder_retries_per_rung)
        attempts.extend([(p, energy)] * retries)
    return attempts


class TestConfirmedLadder:
    def test_single_rung_perfect_delivery(self, models, table_cells):
        perfect = build_model_with(
            table_cells,
            pdr_overrides={
                (Technology.LORAWAN, PayloadBucket.B1_12, "static-indoor"): 100.0
            },
        )
        policy = Policy(ladder=(LadderRung(Technology.LORAWAN, retries=3),))
        plan = confirmed_ladder_plan(policy, MessageSpec(8, critical=True), ctx_indoor(), perfect)
        one_attempt = perfect.packet_energy_uwh(
            Technology.LORAWAN, 8, STATIC_INDOOR
        ) + perfect.ack_rx_energy_uwh(Technology.LORAWAN, STATIC_INDOOR)
        assert plan.expected_energy_uwh == pytest.approx(one_attempt)
        assert plan.expected_delivery_probability == 1.0

    def test_matches_outcome_tree_for_all_small_ladders(self, models):
        msg = MessageSpec(8, critical=True)
        ctx = ctx_indoor()
        techs = list(Technology)
        checked = 0
        for n_rungs in (1, 2, 3):
            for combo in itertools.product(techs, repeat=n_rungs):
                for retries in itertools.product((1, 2, 3), repeat=n_rungs):
                    if sum(retries) > 4:
                        continue
                    policy = Policy(
                        ladder=tuple(
                            LadderRung(t, retries=r) for t, r in zip(combo, retries)
                        ),
                        max_ladder_retries_per_rung=4,
                    )
                    plan = confirmed_ladder_plan(policy, msg, ctx, models)
                    want_energy, want_p = outcome_tree_expectation(
                        ladder_attempt_list(policy, msg, ctx, models)
                    )
                    assert plan.expected_energy_uwh == pytest.approx(want_energy, abs=1e-9)
                    assert plan.expected_delivery_probability == pytest.approx(
                        want_p, abs=1e-12
                    )
                    checked += 1
        assert checked > 100

    def test_ladder_beats_direct_cellular_for_small_messages(self, models):
        policy = Policy(
            ladder=(
                LadderRung(Technology.LORAWAN, retries=2),
                LadderRung(Technology.NBIOT, retries=1),
            )
        )
        plan = confirmed_ladder_plan(policy, MessageSpec(8, critical=True), ctx_indoor(), models)
        direct = models.packet_energy_uwh(Technology.NBIOT, 8, STATIC_INDOOR)
        assert plan.expected_energy_uwh < direct
        assert plan.expected_delivery_probability > 0.98

    def test_oversized_rungs_skipped_and_error_when_none_fit(self, models):
        policy = Policy(
            ladder=(
                LadderRung(Technology.SIGFOX, retries=2),
                LadderRung(Technology.NBIOT, retries=1),
            )
        )
        plan = confirmed_ladder_plan(policy, MessageSpec(100, critical=True), ctx_indoor(), models)
        assert all(s.technology is Technology.NBIOT for s in plan.steps)
        assert any("skipped" in note for note in plan.notes)
        sigfox_only = Policy(ladder=(LadderRung(Technology.SIGFOX),))
        with pytest.raises(NoFeasibleTechnology):
            confirmed_ladder_plan(sigfox_only, MessageSpec(100, critical=True), ctx_indoor(), models)

    def test_non_critical_message_rejected(self, models):
        policy = Policy(ladder=(LadderRung(Technology.LORAWAN),))
        with pytest.raises(ConfigInvalid):
            confirmed_ladder_plan(policy, MessageSpec(8), ctx_indoor(), models)


class TestPolicySerde:
    def test_round_trip(self):
        policy = Policy(
            objective=Objective.MIN_ENERGY_PER_DELIVERED_BYTE,
            pdr_floor=0.25,
            allow_fragmentation=True,
            ladder=(LadderRung(Technology.LORAWAN, 2, True), LadderRung(Technology.NBIOT, 1, True)),
            allowed=(Technology.LORAWAN, Technology.NBIOT),
            name="ladder-first",
        )
        assert policy_from_json(policy_to_json(policy)) == policy

    def test_bad_policy(self):
        with pytest.raises(ConfigInvalid):
            policy_from_json({"objective": "maximize_vibes"})
