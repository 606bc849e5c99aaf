//! End-to-end acceptance suite: one test per criterion, each printing a
//! single pass/fail line (visible with `cargo test -- --nocapture`).

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use auction_ic::assignment::{perturb, solve_min_dual_mwpm, verify_structure, WeightedBipartite};
use auction_ic::harness::{
    build_dataset, gfp_sanity_experiment, ols_fit_eval, reserve_auction_scenario,
    swl_bound_experiment, FeatureSet, GeneratorConfig,
};
use auction_ic::metrics::{ic_envy, ic_regret, AdTypesMechanism, Mechanism, PositionMechanism};
use auction_ic::position::MechanismKind;
use auction_ic::pricing::{extended_gsp_outcome, solve_pricing, AdTypesRule};
use auction_ic::{AdTypesInstance, DiscountCurve, Money, PositionInstance};

fn m(s: &str) -> Money {
    s.parse().unwrap()
}

fn report(id: u8, ok: bool, detail: &str, elapsed: Duration) {
    let status = if ok { "pass" } else { "FAIL" };
    println!(
        "criterion {id:02}: {status} — {detail} [{} ms]",
        elapsed.as_millis()
    );
    assert!(ok, "criterion {id:02} failed: {detail}");
}

fn rng(seed: u64, idx: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(idx + 1);
    r
}

fn shuffle(values: &mut [Money], rng: &mut ChaCha20Rng) {
    for i in (1..values.len()).rev() {
        let j = rng.gen_range(0..=i);
        values.swap(i, j);
    }
}

fn ratio_class(rng: &mut ChaCha20Rng) -> Money {
    m(["0.9", "0.7", "0.5"][rng.gen_range(0..3)])
}

/// Truthful position instance with pairwise bid gaps of at least 0.03
/// (strictly above two grid steps).
fn position_distinct(rng: &mut ChaCha20Rng) -> PositionInstance {
    let n = rng.gen_range(2..=8);
    let slots = rng.gen_range(1..=n);
    let mut steps = BTreeSet::new();
    while steps.len() < n {
        steps.insert(rng.gen_range(1..=400u32));
    }
    let mut values: Vec<Money> = steps
        .iter()
        .map(|&k| Money::from_int(k as i64) * m("0.03"))
        .collect();
    shuffle(&mut values, rng);
    let curve = DiscountCurve::geometric(&ratio_class(rng), slots).unwrap();
    PositionInstance::truthful(values, curve).unwrap()
}

/// Truthful position instance drawn from a coarse grid so tied bids are
/// frequent.
fn position_with_ties(rng: &mut ChaCha20Rng) -> PositionInstance {
    let n = rng.gen_range(2..=8);
    let slots = rng.gen_range(1..=n);
    let values: Vec<Money> = (0..n)
        .map(|_| Money::from_int(rng.gen_range(1..=20)) * m("0.05"))
        .collect();
    let curve = DiscountCurve::geometric(&ratio_class(rng), slots).unwrap();
    PositionInstance::truthful(values, curve).unwrap()
}

/// Truthful square per-bidder-curve instance, n = m in [2, max_n].
fn adtypes_square(rng: &mut ChaCha20Rng, max_n: usize) -> AdTypesInstance {
    let n = rng.gen_range(2..=max_n);
    let values: Vec<Money> = (0..n)
        .map(|_| Money::from_int(rng.gen_range(1..=40)) * m("0.25"))
        .collect();
    let curves: Vec<DiscountCurve> = (0..n)
        .map(|_| DiscountCurve::geometric(&ratio_class(rng), n).unwrap())
        .collect();
    AdTypesInstance::new(values.clone(), values, curves, m("0.01")).unwrap()
}

/// Truthful square instance where all bidders share one geometric curve.
/// Coarse values make ties frequent, so the deterministic perturbation does
/// real work; the extended-GSP guarantees proved for a common curve apply.
fn adtypes_shared_curve(rng: &mut ChaCha20Rng, max_n: usize) -> AdTypesInstance {
    let n = rng.gen_range(2..=max_n);
    let values: Vec<Money> = (0..n)
        .map(|_| Money::from_int(rng.gen_range(1..=20)) * m("0.25"))
        .collect();
    let curve = DiscountCurve::geometric(&ratio_class(rng), n).unwrap();
    AdTypesInstance::new(values.clone(), values, vec![curve; n], m("0.01")).unwrap()
}

fn position_mech(instance: PositionInstance, kind: MechanismKind) -> PositionMechanism {
    PositionMechanism {
        instance,
        kind,
        quantum: m("0.01"),
    }
}

#[test]
fn criterion_01_single_item_first_price() {
    let start = Instant::now();
    let mech = position_mech(
        PositionInstance::truthful(
            vec![m("10"), m("8")],
            DiscountCurve::new(vec![m("1")]).unwrap(),
        )
        .unwrap(),
        MechanismKind::Gfp,
    );
    let truthful = mech.run(mech.bids()).unwrap();
    let mut ok = true;
    for i in 0..2 {
        let (envy, _) = ic_envy(&mech, i, &truthful).unwrap();
        ok &= envy.is_zero();
    }
    let (regret, best) = ic_regret(&mech, 0).unwrap();
    ok &= regret == m("1.99") && best == m("8.01");
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    report(
        1,
        ok,
        "single-slot first price (10, 8): envy 0 for all, winner regret 1.99",
        elapsed,
    );
}

#[test]
fn criterion_02_reserve_price_envy() {
    let start = Instant::now();
    let (_, rep) = reserve_auction_scenario(
        vec![m("3"), m("3")],
        vec![m("3"), m("3")],
        vec![m("1"), m("5")],
        m("0.01"),
    )
    .unwrap();
    let ok = rep.bidders[1].ic_envy == m("2") && rep.bidders[1].ic_regret.is_zero();
    report(
        2,
        ok,
        "reserves (1, 5), bids (3, 3): second bidder envy 2, regret 0",
        start.elapsed(),
    );
}

#[test]
fn criterion_03_golden_minimal_prices() {
    let start = Instant::now();
    // Valuation rows (10,9,8), (7,6,4), (4,0,0) encoded as unit bids times
    // per-bidder curves.
    let rows = [["10", "9", "8"], ["7", "6", "4"], ["4", "0", "0"]];
    let curves: Vec<DiscountCurve> = rows
        .iter()
        .map(|r| DiscountCurve::new(r.iter().map(|s| m(s)).collect()).unwrap())
        .collect();
    let ones = vec![Money::one(); 3];
    let inst = AdTypesInstance::new(ones.clone(), ones, curves, m("0.01")).unwrap();

    let pricing = solve_pricing(&inst).unwrap();
    let mut ok = pricing.cert.matching == vec![2, 1, 0];
    ok &= pricing.slot_prices == vec![m("2"), m("1"), m("0")];

    let (outcome, prices, _) = extended_gsp_outcome(&inst).unwrap();
    ok &= outcome.payments == vec![m("0"), m("1"), m("2")];
    ok &= prices.matched == vec![m("0"), m("1"), m("2")];
    report(
        3,
        ok,
        "golden 3x3 instance: matching (3,2,1), minimal prices (2,1,0), extended GSP = VCG",
        start.elapsed(),
    );
}

#[test]
fn criterion_04_envy_equals_regret_distinct_bids() {
    let start = Instant::now();
    let mut ok = true;
    for idx in 0..1000u64 {
        let inst = position_distinct(&mut rng(0x04, idx));
        for kind in [MechanismKind::Vcg, MechanismKind::Gsp] {
            let vcg = matches!(kind, MechanismKind::Vcg);
            let mech = position_mech(inst.clone(), kind.clone());
            let truthful = mech.run(mech.bids()).unwrap();
            for i in 0..mech.n_bidders() {
                let (envy, _) = ic_envy(&mech, i, &truthful).unwrap();
                let (regret, _) = ic_regret(&mech, i).unwrap();
                ok &= envy == regret;
                if vcg {
                    ok &= envy.is_zero() && regret.is_zero();
                }
                if !ok {
                    report(4, false, &format!("instance {idx} bidder {i} ({kind:?}): envy {envy} != regret {regret}"), start.elapsed());
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    report(
        4,
        ok,
        "1000 position auctions, distinct bids: envy == regret under VCG and GSP, VCG both 0",
        elapsed,
    );
}

#[test]
fn criterion_05_envy_dominates_regret() {
    let start = Instant::now();
    let mut ok = true;
    for idx in 0..1000u64 {
        let inst = position_with_ties(&mut rng(0x05, idx));
        for kind in [MechanismKind::Vcg, MechanismKind::Gsp] {
            let mech = position_mech(inst.clone(), kind.clone());
            let truthful = mech.run(mech.bids()).unwrap();
            for i in 0..mech.n_bidders() {
                let (envy, _) = ic_envy(&mech, i, &truthful).unwrap();
                let (regret, _) = ic_regret(&mech, i).unwrap();
                if envy < regret {
                    ok = false;
                    report(5, false, &format!("position instance {idx} bidder {i} ({kind:?}): envy {envy} < regret {regret}"), start.elapsed());
                }
            }
        }
    }
    for idx in 0..200u64 {
        let inst = adtypes_shared_curve(&mut rng(0x55, idx), 6);
        let mech = AdTypesMechanism {
            instance: inst,
            rule: AdTypesRule::ExtendedGsp,
        };
        let truthful = mech.run(mech.bids()).unwrap();
        for i in 0..mech.n_bidders() {
            let (envy, _) = ic_envy(&mech, i, &truthful).unwrap();
            let (regret, _) = ic_regret(&mech, i).unwrap();
            if envy < regret {
                ok = false;
                report(5, false, &format!("ad-types instance {idx} bidder {i}: envy {envy} < regret {regret}"), start.elapsed());
            }
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    report(
        5,
        ok,
        "1000 tied position auctions (VCG/GSP) + 200 extended-GSP auctions: envy >= regret",
        elapsed,
    );
}

fn brute_force_max(graph: &WeightedBipartite) -> Money {
    fn go(g: &WeightedBipartite, i: usize, used: &mut Vec<bool>) -> Money {
        if i == g.n_bidders() {
            return Money::zero();
        }
        let mut best: Option<Money> = None;
        for j in 0..g.n_slots() {
            if used[j] {
                continue;
            }
            used[j] = true;
            let total = g.weight(i, j) + &go(g, i + 1, used);
            used[j] = false;
            if best.as_ref().is_none_or(|b| total > *b) {
                best = Some(total);
            }
        }
        best.unwrap()
    }
    go(graph, 0, &mut vec![false; graph.n_slots()])
}

/// Everything that must hold on any instance: oracle-optimal matching, dual
/// feasibility, complementary slackness, exact tight-edge bookkeeping.
fn solver_core_checks(graph: &WeightedBipartite) -> (auction_ic::assignment::DualCertificate, WeightedBipartite, bool) {
    let (perturbed, _) = perturb(graph).unwrap();
    let cert = solve_min_dual_mwpm(&perturbed).unwrap();
    let n = cert.n();
    let mut ok = graph.matching_weight(&cert.matching) == brute_force_max(graph);
    for i in 0..n {
        for j in 0..n {
            let slack =
                &cert.bidder_utilities[i] + &cert.slot_prices[j] - perturbed.weight(i, j);
            ok &= !slack.is_negative();
            ok &= cert.tight_edges.contains(&(i, j)) == slack.is_zero();
        }
        ok &= cert.tight_edges.contains(&(i, cert.matching[i]));
    }
    (cert, perturbed, ok)
}

#[test]
fn criterion_06_solver_oracle_and_structure() {
    let start = Instant::now();
    let mut ok = true;
    // Shared-curve pool: every structural claim, including the lowest-tight
    // matching rule, which needs the common-curve ordering to be a theorem.
    for idx in 0..500u64 {
        let inst = adtypes_shared_curve(&mut rng(0x06, idx), 6);
        let graph = WeightedBipartite::from_bids(&inst.bids, &inst.curves).unwrap();
        let (cert, perturbed, core_ok) = solver_core_checks(&graph);
        ok &= core_ok;
        ok &= verify_structure(&cert, &perturbed).all();
        if !ok {
            report(6, false, &format!("shared-curve instance {idx} failed a solver check"), start.elapsed());
        }
    }
    // Heterogeneous-curve pool: a bidder may sit above a slot it is tight at
    // (it pins that slot's minimal price from above), so the lowest-tight
    // rule does not apply; everything else still must.
    for idx in 0..250u64 {
        let inst = adtypes_square(&mut rng(0x66, idx), 6);
        let graph = WeightedBipartite::from_bids(&inst.bids, &inst.curves).unwrap();
        let (cert, perturbed, core_ok) = solver_core_checks(&graph);
        ok &= core_ok;
        let s = verify_structure(&cert, &perturbed);
        ok &= s.free_path && s.monotone_prices && s.clearing;
        if !ok {
            report(6, false, &format!("heterogeneous instance {idx} failed a solver check"), start.elapsed());
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(60);
    report(
        6,
        ok,
        "500 shared-curve + 250 heterogeneous instances: matching equals brute force; duals feasible, tight, minimal, monotone",
        elapsed,
    );
}

#[test]
fn criterion_07_bid_monotonicity() {
    let start = Instant::now();
    let mut ok = true;
    for idx in 0..200u64 {
        let mut r = rng(0x07, idx);
        let inst = adtypes_shared_curve(&mut r, 6);
        let (_, grid_before, before) = extended_gsp_outcome(&inst).unwrap();
        for _ in 0..5 {
            let i = r.gen_range(0..inst.n_bidders());
            let raise = r.gen_bool(0.5);
            let delta = Money::from_int(r.gen_range(1..=50)) * m("0.01");
            let new_bid = if raise {
                &inst.bids[i] + &delta
            } else {
                (&inst.bids[i] - &delta).clamp_zero()
            };
            if new_bid == inst.bids[i] {
                continue;
            }
            let mut bids = inst.bids.clone();
            bids[i] = new_bid;
            let (_, grid_after, after) = extended_gsp_outcome(&inst.with_bids(bids)).unwrap();

            let j_old = before.cert.matching[i];
            let j_new = after.cert.matching[i];
            // The tight-edge set at the new slot is compared through the
            // value the pricing rule extracts from it: the GSP payment now
            // charged there never drops below what the truthful run charged
            // that slot's occupant. Raw edge sets legitimately change with
            // a rematch (every bidder is tight at the slot just above its
            // own, and that slot shifts with the bidder).
            let occupant = before
                .cert
                .matching
                .iter()
                .position(|&j| j == j_new)
                .unwrap();
            ok &= grid_after.matched[i] >= grid_before.matched[occupant];
            if raise {
                ok &= j_new <= j_old;
                ok &= after.slot_prices[j_new] >= before.slot_prices[j_new];
            } else {
                ok &= j_new >= j_old;
                ok &= after.slot_prices[j_new] == before.slot_prices[j_new];
            }
            if !ok {
                report(7, false, &format!("instance {idx} bidder {i} (raise={raise}): slot {j_old}->{j_new}"), start.elapsed());
            }
        }
    }
    report(
        7,
        ok,
        "200 instances x 5 bid changes: slots, dual prices and GSP prices move monotonically",
        start.elapsed(),
    );
}

#[test]
fn criterion_08_welfare_loss_bound() {
    let start = Instant::now();
    // Low values on a coarse grid with a steep curve and scarce slots: the
    // divided bids collapse onto the grid, so the bound's preconditions
    // (welfare at bids at most an eighth of optimum, bidding weakly better
    // than truth) bind on a sizable share of auctions.
    let cfg = GeneratorConfig {
        seed: 0x08,
        n_bidders: 6,
        n_slots: 2,
        mu: -5.0,
        sigma: 2.0,
        curve_classes: vec![m("0.5")],
        quantum: m("0.01"),
        misreport_divisor: Some(16),
    };
    let mut buf = Vec::new();
    let summary = swl_bound_experiment(&cfg, 400, &mut buf).unwrap();
    let ok = summary.applicable >= 50
        && summary.bound_violations == 0
        && summary.semi_smoothness_violations == 0
        && summary.regret_monotonicity_violations == 0;
    report(
        8,
        ok,
        &format!(
            "bids = values/16: {} of {} auctions non-vacuous, envy sum covers SWL/4 on all; semi-smoothness holds",
            summary.applicable, summary.auctions
        ),
        start.elapsed(),
    );
}

#[test]
fn criterion_09_first_price_scatter() {
    let start = Instant::now();
    let cfg = GeneratorConfig {
        seed: 0x09,
        n_bidders: 10,
        n_slots: 10,
        mu: 0.0,
        sigma: 1.0,
        curve_classes: vec![m("0.9"), m("0.7"), m("0.5")],
        quantum: m("0.01"),
        misreport_divisor: None,
    };
    let mut first = Vec::new();
    let summary = gfp_sanity_experiment(&cfg, 1000, &mut first).unwrap();
    let mut second = Vec::new();
    gfp_sanity_experiment(&cfg, 1000, &mut second).unwrap();

    let text = String::from_utf8(first.clone()).unwrap();
    let mut ok = first == second; // byte-identical re-run
    ok &= text.starts_with("# rng=chacha20 seed=9\n");
    ok &= text.contains("\n0,0,0.000000,1.990000\n"); // the fixed counterexample row
    ok &= summary.rows == 1000 * 10 + 2;
    report(
        9,
        ok,
        &format!(
            "10-slot first-price scatter: deterministic CSV, {} rows, envy >= regret on {:.4} of them",
            summary.rows, summary.fraction_envy_dominates
        ),
        start.elapsed(),
    );
}

#[test]
fn criterion_10_regret_regression() {
    let start = Instant::now();
    let cfg = GeneratorConfig {
        seed: 0x10,
        n_bidders: 5,
        n_slots: 4,
        mu: 0.0,
        sigma: 1.0,
        curve_classes: vec![m("0.9"), m("0.7"), m("0.5")],
        quantum: m("0.01"),
        misreport_divisor: None,
    };
    let rows = build_dataset(&cfg, 20_000, AdTypesRule::GreedyGsp).unwrap();
    let envy_fit = ols_fit_eval(&rows, FeatureSet::Envy, 0).unwrap();
    let pv_fit = ols_fit_eval(&rows, FeatureSet::PriceValue, 0).unwrap();

    // Pipeline sanity: a label that is exactly linear in the envy features
    // must be recovered almost perfectly.
    let coefs: Vec<Money> = (0..cfg.n_slots)
        .map(|k| Money::from_int(k as i64 + 1) * m("0.1"))
        .collect();
    let synth: Vec<_> = rows
        .iter()
        .take(5000)
        .cloned()
        .map(|mut r| {
            let mut label = m("0.3");
            for (e, c) in r.envy.iter().zip(&coefs) {
                label += &(e * c);
            }
            r.label_regret = label;
            r
        })
        .collect();
    let sanity = ols_fit_eval(&synth, FeatureSet::Envy, 0).unwrap();

    let mut ok = envy_fit.r2_test > pv_fit.r2_test && sanity.r2_test > 0.99;
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(300);
    report(
        10,
        ok,
        &format!(
            "20k-auction greedy-GSP dataset: envy R2 {:.4} > price+value R2 {:.4}; sanity R2 {:.6}",
            envy_fit.r2_test, pv_fit.r2_test, sanity.r2_test
        ),
        elapsed,
    );
}
