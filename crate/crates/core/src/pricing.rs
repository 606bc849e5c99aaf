//! Pricing rules for per-bidder-curve auctions: minimal-dual VCG, extended
//! GSP, and the greedy mechanisms with GSP or externality pricing.
//!
//! The pipeline solves the perturbed matching problem (which is unique and
//! well-structured) but reports prices computed exactly on the *original*
//! weights via the VCG difference formula, so no rounding error ever reaches
//! an outcome.

use std::collections::BTreeSet;

use crate::assignment::{
    balance, perturb, solve_min_dual_mwpm, tight_edge_sets, DualCertificate, WeightedBipartite,
};
use crate::error::{Error, Result};
use crate::instance::{AdTypesInstance, Outcome, SlotAssignment};
use crate::money::Money;

/// Pricing rule tags accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdTypesRule {
    ExtendedGsp,
    Vcg,
    GreedyGsp,
    GreedyExternality,
}

impl AdTypesRule {
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "extended-gsp" => Ok(AdTypesRule::ExtendedGsp),
            "vcg" => Ok(AdTypesRule::Vcg),
            "greedy-gsp" => Ok(AdTypesRule::GreedyGsp),
            "greedy-externality" => Ok(AdTypesRule::GreedyExternality),
            other => Err(Error::Config(format!(
                "unknown ad-types rule `{other}` (expected extended-gsp|vcg|greedy-gsp|greedy-externality)"
            ))),
        }
    }
}

/// Everything the minimal-dual rules need: the balanced instance, its
/// original and perturbed weight graphs, the perturbed certificate and the
/// de-noised (exact, original-weight) slot prices.
#[derive(Debug, Clone)]
pub struct MinimalPricing {
    pub balanced: AdTypesInstance,
    /// Slot count of the instance before balancing; balanced slots at or
    /// beyond this index are padding.
    pub original_slots: usize,
    pub graph: WeightedBipartite,
    pub perturbed: WeightedBipartite,
    pub delta: Money,
    pub cert: DualCertificate,
    /// Minimal competitive-equilibrium prices, exact on original weights.
    pub slot_prices: Vec<Money>,
}

/// Balance, perturb, solve, then recover exact prices: the price of the slot
/// matched to bidder i is W(-i) - W + w_{i,j}, with both matchings taken from
/// the perturbed (unique) solves but evaluated on original weights.
pub fn solve_pricing(instance: &AdTypesInstance) -> Result<MinimalPricing> {
    let balanced = balance(instance);
    let graph = WeightedBipartite::from_bids(&balanced.bids, &balanced.curves)?;
    let (perturbed, delta) = perturb(&graph)?;
    let cert = solve_min_dual_mwpm(&perturbed)?;

    let w_opt = graph.matching_weight(&cert.matching);
    let n = cert.n();
    let mut slot_prices = vec![Money::zero(); n];
    for i in 0..n {
        let j = cert.matching[i];
        let reduced_cert = solve_min_dual_mwpm(&perturbed.without_bidder(i))?;
        let w_without = graph
            .without_bidder(i)
            .matching_weight(&reduced_cert.matching);
        slot_prices[j] = w_without - &w_opt + graph.weight(i, j);
    }

    Ok(MinimalPricing {
        balanced,
        original_slots: instance.n_slots(),
        graph,
        perturbed,
        delta,
        cert,
        slot_prices,
    })
}

impl MinimalPricing {
    /// Outcome in the original instance's slot indexing: padding slots map to
    /// `Unassigned` (their price is always zero).
    fn outcome_with_payments(&self, payment_of: impl Fn(usize, usize) -> Money) -> Outcome {
        let n = self.cert.n();
        let mut assignment = Vec::with_capacity(n);
        let mut payments = Vec::with_capacity(n);
        for i in 0..n {
            let j = self.cert.matching[i];
            if j < self.original_slots {
                assignment.push(SlotAssignment::Slot(j));
                payments.push(payment_of(i, j));
            } else {
                assignment.push(SlotAssignment::Unassigned);
                payments.push(Money::zero());
            }
        }
        Outcome { assignment, payments }
    }
}

/// The non-anonymous extended-GSP price grid gsp_{i,j} = max{p_j, t_{i,j}}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedGspPrices {
    /// grid[i][j] over the balanced square instance.
    pub grid: Vec<Vec<Money>>,
    /// Price each bidder faces at its matched slot.
    pub matched: Vec<Money>,
}

/// Max weight strictly below w_{i,j} among the edges of `set`, 0 if none.
pub fn threshold_t(
    i: usize,
    j: usize,
    set: &BTreeSet<(usize, usize)>,
    weights: &WeightedBipartite,
) -> Money {
    threshold_edge(i, j, set, weights)
        .map(|(i2, j2)| weights.weight(i2, j2).clone())
        .unwrap_or_else(Money::zero)
}

fn threshold_edge(
    i: usize,
    j: usize,
    set: &BTreeSet<(usize, usize)>,
    weights: &WeightedBipartite,
) -> Option<(usize, usize)> {
    let own = weights.weight(i, j);
    set.iter()
        .filter(|&&(i2, j2)| weights.weight(i2, j2) < own)
        .max_by(|&&(a, b), &&(c, d)| weights.weight(a, b).cmp(weights.weight(c, d)))
        .copied()
}

/// Extended GSP: MWPM allocation, each bidder pays the larger of the minimal
/// dual price of its slot and the threshold t_{i,j}. Thresholds are selected
/// in the perturbed order (where no ties exist) but valued on original
/// weights, consistent with the de-noised slot prices.
pub fn extended_gsp_outcome(
    instance: &AdTypesInstance,
) -> Result<(Outcome, ExtendedGspPrices, MinimalPricing)> {
    let pricing = solve_pricing(instance)?;
    let sets = tight_edge_sets(&pricing.cert);
    let n = pricing.cert.n();

    let price_at = |i: usize, j: usize| -> Money {
        let t = threshold_edge(i, j, &sets[j], &pricing.perturbed)
            .map(|(i2, j2)| pricing.graph.weight(i2, j2).clone())
            .unwrap_or_else(Money::zero);
        pricing.slot_prices[j].clone().max(t)
    };

    let grid: Vec<Vec<Money>> = (0..n)
        .map(|i| (0..n).map(|j| price_at(i, j)).collect())
        .collect();
    let matched: Vec<Money> = (0..n)
        .map(|i| grid[i][pricing.cert.matching[i]].clone())
        .collect();
    let outcome = pricing.outcome_with_payments(|i, j| grid[i][j].clone());
    let prices = ExtendedGspPrices { grid, matched };
    Ok((outcome, prices, pricing))
}

/// Minimal-dual VCG: MWPM allocation, each bidder pays its slot's minimal
/// clearing price.
pub fn vcg_outcome(instance: &AdTypesInstance) -> Result<Outcome> {
    let pricing = solve_pricing(instance)?;
    Ok(pricing.outcome_with_payments(|_, j| pricing.slot_prices[j].clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyRule {
    Gsp,
    Externality,
}

/// Greedy trace: slot-by-slot winners (highest discounted bid, ties by
/// index) with the runner-up discounted bid at the moment of assignment.
/// `skip` removes one bidder from the market.
fn greedy_allocate(
    instance: &AdTypesInstance,
    skip: Option<usize>,
) -> Result<Vec<(usize, usize, Money)>> {
    let n = instance.n_bidders();
    let m = instance.n_slots();
    let mut taken = vec![false; n];
    if let Some(s) = skip {
        taken[s] = true;
    }
    let mut trace = Vec::new();
    for j in 0..m {
        let mut best: Option<(usize, Money)> = None;
        let mut runner_up = Money::zero();
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let dv = &instance.bids[i] * instance.curves[i].get(j)?;
            match &best {
                Some((_, bv)) if dv <= *bv => {
                    if dv > runner_up {
                        runner_up = dv;
                    }
                }
                _ => {
                    if let Some((_, bv)) = best.take() {
                        runner_up = bv;
                    }
                    best = Some((i, dv));
                }
            }
        }
        if let Some((winner, _)) = best {
            taken[winner] = true;
            trace.push((winner, j, runner_up));
        }
    }
    Ok(trace)
}

/// Greedy allocation with either GSP pricing (runner-up discounted bid at
/// assignment time) or externality pricing (welfare others lose, by bids,
/// from the bidder's presence). Unassigned bidders pay 0.
pub fn greedy_outcome(instance: &AdTypesInstance, rule: GreedyRule) -> Result<Outcome> {
    let n = instance.n_bidders();
    let trace = greedy_allocate(instance, None)?;
    let mut assignment = vec![SlotAssignment::Unassigned; n];
    let mut payments = vec![Money::zero(); n];
    for &(i, j, ref runner_up) in &trace {
        assignment[i] = SlotAssignment::Slot(j);
        if rule == GreedyRule::Gsp {
            payments[i] = runner_up.clone();
        }
    }
    if rule == GreedyRule::Externality {
        let sw_of = |trace: &[(usize, usize, Money)], excluding: usize| -> Result<Money> {
            let mut sw = Money::zero();
            for &(i, j, _) in trace {
                if i != excluding {
                    sw += &(&instance.bids[i] * instance.curves[i].get(j)?);
                }
            }
            Ok(sw)
        };
        for &(i, _, _) in &trace {
            let counterfactual = greedy_allocate(instance, Some(i))?;
            payments[i] = sw_of(&counterfactual, i)? - sw_of(&trace, i)?;
        }
    }
    Ok(Outcome { assignment, payments })
}

/// True iff every bidder's price row gsp_{i,1..m} is non-increasing.
pub fn check_price_monotonicity(prices: &ExtendedGspPrices) -> bool {
    prices
        .grid
        .iter()
        .all(|row| row.windows(2).all(|w| w[0] >= w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::DiscountCurve;

    fn m(s: &str) -> Money {
        s.parse().unwrap()
    }

    fn ms(vals: &[&str]) -> Vec<Money> {
        vals.iter().map(|v| m(v)).collect()
    }

    fn curve(ws: &[&str]) -> DiscountCurve {
        DiscountCurve::new(ms(ws)).unwrap()
    }

    /// The 3x3 golden instance expressed as unit bids with per-bidder curves
    /// equal to the valuation rows.
    fn golden() -> AdTypesInstance {
        AdTypesInstance::new(
            ms(&["1", "1", "1"]),
            ms(&["1", "1", "1"]),
            vec![
                curve(&["10", "9", "8"]),
                curve(&["7", "6", "4"]),
                curve(&["4", "0", "0"]),
            ],
            m("0.01"),
        )
        .unwrap()
    }

    fn position(bids: &[&str], ws: &[&str]) -> AdTypesInstance {
        let n = bids.len();
        AdTypesInstance::new(ms(bids), ms(bids), vec![curve(ws); n], m("0.01")).unwrap()
    }

    #[test]
    fn golden_vcg() {
        let out = vcg_outcome(&golden()).unwrap();
        assert_eq!(
            out.assignment,
            vec![
                SlotAssignment::Slot(2),
                SlotAssignment::Slot(1),
                SlotAssignment::Slot(0)
            ]
        );
        assert_eq!(out.payments, ms(&["0", "1", "2"]));
    }

    #[test]
    fn golden_extended_gsp_equals_vcg() {
        let (out, prices, pricing) = extended_gsp_outcome(&golden()).unwrap();
        assert_eq!(out.payments, ms(&["0", "1", "2"]));
        assert_eq!(pricing.slot_prices, ms(&["2", "1", "0"]));
        assert_eq!(prices.matched, ms(&["0", "1", "2"]));
    }

    #[test]
    fn golden_price_grid_monotone() {
        let (_, prices, _) = extended_gsp_outcome(&golden()).unwrap();
        assert!(check_price_monotonicity(&prices));
        // Eq. 9's max keeps every grid entry at or above the slot price.
        let pricing = solve_pricing(&golden()).unwrap();
        for row in &prices.grid {
            for (j, g) in row.iter().enumerate() {
                assert!(g >= &pricing.slot_prices[j]);
            }
        }
    }

    #[test]
    fn threshold_on_unperturbed_golden() {
        // Spec'd directly on the certificate of the exact (unperturbed)
        // golden graph.
        let g = WeightedBipartite::new(vec![
            ms(&["10", "9", "8"]),
            ms(&["7", "6", "4"]),
            ms(&["4", "0", "0"]),
        ])
        .unwrap();
        let cert = solve_min_dual_mwpm(&g).unwrap();
        let sets = tight_edge_sets(&cert);
        // Bidder with row (4,0,0) at the top slot: nothing tight is below 4.
        assert_eq!(threshold_t(2, 0, &sets[0], &g), m("0"));
    }

    #[test]
    fn position_thresholds() {
        let g = WeightedBipartite::new(vec![
            ms(&["10", "5", "2"]),
            ms(&["8", "4", "1.6"]),
            ms(&["5", "2.5", "1"]),
        ])
        .unwrap();
        let cert = solve_min_dual_mwpm(&g).unwrap();
        let sets = tight_edge_sets(&cert);
        assert_eq!(threshold_t(0, 0, &sets[0], &g), m("8"));
        assert_eq!(threshold_t(1, 1, &sets[1], &g), m("2.5"));
        assert_eq!(threshold_t(2, 2, &sets[2], &g), m("0"));
    }

    #[test]
    fn position_specialization() {
        let inst = position(&["10", "8", "5"], &["1", "0.5", "0.2"]);
        let vcg = vcg_outcome(&inst).unwrap();
        assert_eq!(vcg.payments, ms(&["5.5", "1.5", "0"]));
        let (gsp, _, _) = extended_gsp_outcome(&inst).unwrap();
        assert_eq!(gsp.payments, ms(&["8", "2.5", "0"]));
        assert_eq!(gsp.assignment, vcg.assignment);
    }

    #[test]
    fn single_bidder_pays_zero() {
        let inst = AdTypesInstance::new(
            ms(&["7"]),
            ms(&["7"]),
            vec![curve(&["1"])],
            m("0.01"),
        )
        .unwrap();
        let (out, _, _) = extended_gsp_outcome(&inst).unwrap();
        assert_eq!(out.payments, ms(&["0"]));
        assert_eq!(vcg_outcome(&inst).unwrap().payments, ms(&["0"]));
    }

    #[test]
    fn unbalanced_single_slot_vcg_is_second_price() {
        let inst = AdTypesInstance::new(
            ms(&["10", "8", "5"]),
            ms(&["10", "8", "5"]),
            vec![curve(&["1"]); 3],
            m("0.01"),
        )
        .unwrap();
        let out = vcg_outcome(&inst).unwrap();
        assert_eq!(out.assignment[0], SlotAssignment::Slot(0));
        assert_eq!(out.assignment[1], SlotAssignment::Unassigned);
        assert_eq!(out.assignment[2], SlotAssignment::Unassigned);
        assert_eq!(out.payments, ms(&["8", "0", "0"]));
    }

    fn greedy_fixture() -> AdTypesInstance {
        AdTypesInstance::new(
            ms(&["10", "12"]),
            ms(&["10", "12"]),
            vec![curve(&["0.9", "0.81"]), curve(&["0.7", "0.49"])],
            m("0.01"),
        )
        .unwrap()
    }

    #[test]
    fn greedy_gsp_prices() {
        let out = greedy_outcome(&greedy_fixture(), GreedyRule::Gsp).unwrap();
        assert_eq!(
            out.assignment,
            vec![SlotAssignment::Slot(0), SlotAssignment::Slot(1)]
        );
        assert_eq!(out.payments, ms(&["8.4", "0"]));
    }

    #[test]
    fn greedy_externality_prices() {
        let out = greedy_outcome(&greedy_fixture(), GreedyRule::Externality).unwrap();
        assert_eq!(out.payments, ms(&["2.52", "0"]));
    }

    #[test]
    fn greedy_single_bidder() {
        let inst = AdTypesInstance::new(
            ms(&["7"]),
            ms(&["7"]),
            vec![curve(&["1", "0.5"])],
            m("0.01"),
        )
        .unwrap();
        for rule in [GreedyRule::Gsp, GreedyRule::Externality] {
            let out = greedy_outcome(&inst, rule).unwrap();
            assert_eq!(out.payments, ms(&["0"]));
            assert_eq!(out.assignment[0], SlotAssignment::Slot(0));
        }
    }

    #[test]
    fn greedy_welfare_below_optimal() {
        let inst = greedy_fixture();
        let greedy = greedy_outcome(&inst, GreedyRule::Gsp).unwrap();
        let mut greedy_sw = Money::zero();
        for (i, a) in greedy.assignment.iter().enumerate() {
            if let Some(j) = a.slot() {
                greedy_sw += &(&inst.bids[i] * inst.curves[i].get(j).unwrap());
            }
        }
        assert_eq!(greedy_sw, m("14.88"));
        let pricing = solve_pricing(&inst).unwrap();
        let opt = pricing.graph.matching_weight(&pricing.cert.matching);
        assert_eq!(opt, m("16.5"));
        assert!(greedy_sw <= opt);
    }

    #[test]
    fn rule_tags() {
        assert_eq!(AdTypesRule::from_tag("vcg").unwrap(), AdTypesRule::Vcg);
        assert_eq!(
            AdTypesRule::from_tag("greedy-externality").unwrap(),
            AdTypesRule::GreedyExternality
        );
        assert!(AdTypesRule::from_tag("nope").is_err());
    }
}
