//! Envy / regret diagnostics and executable checks of the structural results
//! relating them: envy-dominates-regret, regret monotonicity in the baseline
//! bid, the semi-smoothness inequality, and the welfare-loss bound.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::assignment::{balance, WeightedBipartite};
use crate::error::Result;
use crate::instance::{
    AdTypesInstance, DiscountCurve, Outcome, PositionInstance, SlotAssignment,
};
use crate::money::Money;
use crate::position::{run_regular, MechanismKind};
use crate::pricing::{extended_gsp_outcome, greedy_outcome, vcg_outcome, AdTypesRule, GreedyRule};

/// A deterministic, re-runnable auction: everything the counterfactual
/// diagnostics need.
pub trait Mechanism: Sync {
    fn values(&self) -> &[Money];
    fn bids(&self) -> &[Money];
    fn quantum(&self) -> &Money;
    fn curve(&self, bidder: usize) -> &DiscountCurve;
    fn run(&self, bids: &[Money]) -> Result<Outcome>;
    /// Extra deviation candidates beyond the generic competitor-bid set
    /// (allocation-region breakpoints, reserves, ...).
    fn deviation_hints(&self, _bidder: usize) -> Vec<Money> {
        Vec::new()
    }

    fn n_bidders(&self) -> usize {
        self.bids().len()
    }

    /// Utility of `bidder` (true value) in `outcome`.
    fn utility_in(&self, bidder: usize, outcome: &Outcome) -> Result<Money> {
        crate::instance::utility(
            &self.values()[bidder],
            self.curve(bidder),
            outcome.assignment[bidder],
            &outcome.payments[bidder],
        )
    }

    /// Run with bidder `i`'s bid replaced.
    fn run_with(&self, i: usize, bid: &Money) -> Result<Outcome> {
        let mut bids = self.bids().to_vec();
        bids[i] = bid.clone();
        self.run(&bids)
    }
}

/// Regular position auction under a coefficient-matrix payment rule.
pub struct PositionMechanism {
    pub instance: PositionInstance,
    pub kind: MechanismKind,
    pub quantum: Money,
}

impl Mechanism for PositionMechanism {
    fn values(&self) -> &[Money] {
        &self.instance.values
    }
    fn bids(&self) -> &[Money] {
        &self.instance.bids
    }
    fn quantum(&self) -> &Money {
        &self.quantum
    }
    fn curve(&self, _bidder: usize) -> &DiscountCurve {
        &self.instance.curve
    }
    fn run(&self, bids: &[Money]) -> Result<Outcome> {
        let inst = PositionInstance::new(
            self.instance.values.clone(),
            bids.to_vec(),
            self.instance.curve.clone(),
        )?;
        run_regular(&inst, &self.kind)
    }
}

/// Per-bidder-curve auction under one of the ad-types pricing rules.
pub struct AdTypesMechanism {
    pub instance: AdTypesInstance,
    pub rule: AdTypesRule,
}

impl Mechanism for AdTypesMechanism {
    fn values(&self) -> &[Money] {
        &self.instance.values
    }
    fn bids(&self) -> &[Money] {
        &self.instance.bids
    }
    fn quantum(&self) -> &Money {
        &self.instance.quantum
    }
    fn curve(&self, bidder: usize) -> &DiscountCurve {
        &self.instance.curves[bidder]
    }
    fn run(&self, bids: &[Money]) -> Result<Outcome> {
        let inst = self.instance.with_bids(bids.to_vec());
        match self.rule {
            AdTypesRule::Vcg => vcg_outcome(&inst),
            AdTypesRule::ExtendedGsp => Ok(extended_gsp_outcome(&inst)?.0),
            AdTypesRule::GreedyGsp => greedy_outcome(&inst, GreedyRule::Gsp),
            AdTypesRule::GreedyExternality => greedy_outcome(&inst, GreedyRule::Externality),
        }
    }
    /// Bids at which bidder i's discounted value at some slot crosses a
    /// rival's discounted bid: the points where the matching can change.
    fn deviation_hints(&self, bidder: usize) -> Vec<Money> {
        let inst = &self.instance;
        let mut hints = Vec::new();
        for j in 0..inst.n_slots() {
            let alpha = &inst.curves[bidder].weights()[j];
            if !alpha.is_positive() {
                continue;
            }
            for i2 in 0..inst.n_bidders() {
                if i2 == bidder {
                    continue;
                }
                for j2 in 0..inst.n_slots() {
                    let rival = &inst.bids[i2] * &inst.curves[i2].weights()[j2];
                    hints.push(&rival / alpha);
                }
            }
        }
        hints
    }
}

/// Single-item auction with per-bidder reserve prices: the highest bid
/// meeting its own reserve wins (ties to the lowest index) and pays its own
/// reserve.
pub struct ReserveAuction {
    pub values: Vec<Money>,
    pub bids: Vec<Money>,
    pub reserves: Vec<Money>,
    pub quantum: Money,
    curve: DiscountCurve,
}

impl ReserveAuction {
    pub fn new(values: Vec<Money>, bids: Vec<Money>, reserves: Vec<Money>, quantum: Money) -> Self {
        ReserveAuction {
            values,
            bids,
            reserves,
            quantum,
            curve: DiscountCurve::new(vec![Money::one()]).expect("unit curve"),
        }
    }
}

impl Mechanism for ReserveAuction {
    fn values(&self) -> &[Money] {
        &self.values
    }
    fn bids(&self) -> &[Money] {
        &self.bids
    }
    fn quantum(&self) -> &Money {
        &self.quantum
    }
    fn curve(&self, _bidder: usize) -> &DiscountCurve {
        &self.curve
    }
    fn run(&self, bids: &[Money]) -> Result<Outcome> {
        let n = bids.len();
        let winner = (0..n)
            .filter(|&i| bids[i] >= self.reserves[i])
            .max_by(|&a, &b| bids[a].cmp(&bids[b]).then(b.cmp(&a)));
        let mut assignment = vec![SlotAssignment::Unassigned; n];
        let mut payments = vec![Money::zero(); n];
        if let Some(w) = winner {
            assignment[w] = SlotAssignment::Slot(0);
            payments[w] = self.reserves[w].clone();
        }
        Ok(Outcome { assignment, payments })
    }
    fn deviation_hints(&self, bidder: usize) -> Vec<Money> {
        vec![self.reserves[bidder].clone()]
    }
}

/// Build a boxed mechanism from an on-disk instance and a rule tag
/// (vcg | gsp | gfp | extended-gsp | greedy-gsp | greedy-externality).
/// "vcg" uses the coefficient form when all bidders share one curve and the
/// assignment form otherwise; "gsp"/"gfp" require a shared curve.
pub fn mechanism_from_tag(
    file: &crate::instance::InstanceFile,
    tag: &str,
) -> crate::error::Result<Box<dyn Mechanism>> {
    let position = |kind: MechanismKind| -> crate::error::Result<Box<dyn Mechanism>> {
        Ok(Box::new(PositionMechanism {
            quantum: file.quantum.clone(),
            instance: file.to_position()?,
            kind,
        }))
    };
    let adtypes = |rule: AdTypesRule| -> crate::error::Result<Box<dyn Mechanism>> {
        Ok(Box::new(AdTypesMechanism { instance: file.to_adtypes()?, rule }))
    };
    match tag {
        "gsp" => position(MechanismKind::Gsp),
        "gfp" => position(MechanismKind::Gfp),
        "vcg" => position(MechanismKind::Vcg).or_else(|_| adtypes(AdTypesRule::Vcg)),
        "extended-gsp" => adtypes(AdTypesRule::ExtendedGsp),
        "greedy-gsp" => adtypes(AdTypesRule::GreedyGsp),
        "greedy-externality" => adtypes(AdTypesRule::GreedyExternality),
        other => Err(crate::error::Error::Config(format!(
            "unknown mechanism `{other}`"
        ))),
    }
}

/// Envy of `i` toward `j`'s slot at `j`'s realized price, clamped at zero.
pub fn pairwise_envy<M: Mechanism + ?Sized>(
    mech: &M,
    i: usize,
    j: usize,
    outcome: &Outcome,
) -> Result<Money> {
    if i == j {
        return Ok(Money::zero());
    }
    let at_j = crate::instance::utility(
        &mech.values()[i],
        mech.curve(i),
        outcome.assignment[j],
        &outcome.payments[j],
    )?;
    let own = mech.utility_in(i, outcome)?;
    Ok((at_j - own).clamp_zero())
}

/// Max pairwise envy over all rivals, with the argmax rival. Needs exactly
/// one mechanism execution (the caller supplies it).
pub fn ic_envy<M: Mechanism + ?Sized>(
    mech: &M,
    i: usize,
    truthful_outcome: &Outcome,
) -> Result<(Money, Option<usize>)> {
    let mut best = Money::zero();
    let mut argmax = None;
    for j in 0..mech.n_bidders() {
        if j == i {
            continue;
        }
        let e = pairwise_envy(mech, i, j, truthful_outcome)?;
        if e > best {
            best = e;
            argmax = Some(j);
        }
    }
    Ok((best, argmax))
}

/// Clamped utility gain of deviating to `bid`, measured against the
/// truthful-baseline outcome (b_i = v_i, rivals fixed).
pub fn regret_against_bid<M: Mechanism + ?Sized>(mech: &M, i: usize, bid: &Money) -> Result<Money> {
    let baseline = mech.run_with(i, &mech.values()[i].clone())?;
    let base_u = mech.utility_in(i, &baseline)?;
    let deviated = mech.run_with(i, bid)?;
    Ok((mech.utility_in(i, &deviated)? - base_u).clamp_zero())
}

/// Finite search set standing in for the max over all non-negative bids:
/// zero, one grid step to either side of every distinct rival bid, one step
/// above the highest, and the mechanism's own hinted breakpoints snapped to
/// the grid with both neighbors. Exact rival bids are deliberately absent:
/// a tie is won or lost by index, and the adjacent grid points realize the
/// supremum a tie can only match or miss.
pub fn deviation_candidates<M: Mechanism + ?Sized>(mech: &M, i: usize) -> Vec<Money> {
    let q = mech.quantum();
    let mut set: BTreeSet<Money> = BTreeSet::new();
    let mut add = |x: Money| {
        if !x.is_negative() {
            set.insert(x);
        }
    };
    add(Money::zero());
    for (j, c) in mech.bids().iter().enumerate() {
        if j == i {
            continue;
        }
        add(c - q);
        add(c + q);
    }
    for hint in mech.deviation_hints(i) {
        let r = hint.round_to_multiple(q);
        add(&r - q);
        add(r.clone());
        add(&r + q);
    }
    set.into_iter().collect()
}

/// Max regret against the candidate set relative to an explicit baseline bid
/// (the definition's baseline is v_i; the monotonicity comparison needs b_i).
/// Returns the regret and the best deviation found (the baseline itself when
/// nothing improves).
pub fn ic_regret_from<M: Mechanism + ?Sized>(
    mech: &M,
    i: usize,
    baseline_bid: &Money,
) -> Result<(Money, Money)> {
    let baseline = mech.run_with(i, baseline_bid)?;
    let base_u = mech.utility_in(i, &baseline)?;
    let mut best = Money::zero();
    let mut best_bid = baseline_bid.clone();
    for cand in deviation_candidates(mech, i) {
        let outcome = mech.run_with(i, &cand)?;
        let gain = (mech.utility_in(i, &outcome)? - &base_u).clamp_zero();
        if gain > best {
            best = gain;
            best_bid = cand;
        }
    }
    Ok((best, best_bid))
}

/// IC-Regret of bidder i: max clamped gain over deviations from truthful.
pub fn ic_regret<M: Mechanism + ?Sized>(mech: &M, i: usize) -> Result<(Money, Money)> {
    let v = mech.values()[i].clone();
    ic_regret_from(mech, i, &v)
}

/// Welfare at the outcome (true values), the optimal assignment welfare, and
/// their difference.
pub fn social_welfare<M: Mechanism + ?Sized>(mech: &M, outcome: &Outcome) -> Result<(Money, Money, Money)> {
    let mut sw = Money::zero();
    for i in 0..mech.n_bidders() {
        sw += &crate::instance::discounted_value(
            &mech.values()[i],
            mech.curve(i),
            outcome.assignment[i],
        )?;
    }
    let sw_opt = optimal_welfare(mech)?;
    let swl = &sw_opt - &sw;
    Ok((sw, sw_opt, swl))
}

/// Max-weight assignment value of the true valuations.
fn optimal_welfare<M: Mechanism + ?Sized>(mech: &M) -> Result<Money> {
    let n = mech.n_bidders();
    let values = mech.values().to_vec();
    let curves: Vec<DiscountCurve> = (0..n).map(|i| mech.curve(i).clone()).collect();
    let inst = AdTypesInstance::new(values.clone(), values, curves, mech.quantum().clone())?;
    let balanced = balance(&inst);
    let graph = WeightedBipartite::from_bids(&balanced.bids, &balanced.curves)?;
    let cert = crate::assignment::solve_min_dual_mwpm(&graph)?;
    Ok(graph.matching_weight(&cert.matching))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundStatus {
    Holds,
    Fails,
    NotApplicable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BidderDiagnostics {
    pub bidder: usize,
    pub ic_envy: Money,
    pub envy_argmax: Option<usize>,
    pub ic_regret: Money,
    pub best_deviation: Money,
    /// Regret from the actual bid never exceeds regret from the truthful bid.
    pub regret_monotone_ok: bool,
    /// u_i(v_i/2, b_-i) + value of slot X(v,i)'s current holder covers half
    /// of i's optimal-slot value.
    pub semi_smooth_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub bidders: Vec<BidderDiagnostics>,
    pub sw: Money,
    pub sw_opt: Money,
    pub swl: Money,
    pub envy_dominates_regret: bool,
    /// The welfare-loss bound: sum of envies >= SWL/4, gated on its two
    /// preconditions (large welfare gap, bids at least as good as truthful).
    pub swl_bound: BoundStatus,
}

impl DiagnosticsReport {
    pub fn csv_header() -> &'static [&'static str] {
        &[
            "auction_id",
            "bidder",
            "ic_envy",
            "ic_regret",
            "best_deviation",
            "sw",
            "sw_opt",
            "swl",
        ]
    }

    /// One flat record per bidder, decimal floats with 6 digits.
    pub fn csv_rows(&self, auction_id: u64) -> Vec<Vec<String>> {
        self.bidders
            .iter()
            .map(|b| {
                vec![
                    auction_id.to_string(),
                    b.bidder.to_string(),
                    b.ic_envy.to_fixed(6),
                    b.ic_regret.to_fixed(6),
                    b.best_deviation.to_fixed(6),
                    self.sw.to_fixed(6),
                    self.sw_opt.to_fixed(6),
                    self.swl.to_fixed(6),
                ]
            })
            .collect()
    }
}

/// Run the full diagnostic battery for one auction: per-bidder envy/regret
/// at the truthful counterfactual, regret monotonicity, semi-smoothness at
/// the half-value deviation, welfare accounting and the SWL bound.
pub fn verify_theorems<M: Mechanism + ?Sized>(mech: &M) -> Result<DiagnosticsReport> {
    let n = mech.n_bidders();
    let actual = mech.run(mech.bids())?;
    let truthful_all = mech.run(mech.values())?;

    let mut bidders = Vec::with_capacity(n);
    let mut envy_dominates_regret = true;
    let mut precondition_utilities = true;
    let mut envy_sum = Money::zero();

    for i in 0..n {
        let v_i = mech.values()[i].clone();
        let truthful_i = if mech.bids()[i] == v_i {
            actual.clone()
        } else {
            mech.run_with(i, &v_i)?
        };
        let (envy, envy_argmax) = ic_envy(mech, i, &truthful_i)?;
        let (regret, best_deviation) = ic_regret_from(mech, i, &v_i)?;
        if envy < regret {
            envy_dominates_regret = false;
        }
        envy_sum += &envy;

        let regret_monotone_ok = if mech.bids()[i] == v_i {
            true
        } else {
            let (regret_at_bid, _) = ic_regret_from(mech, i, &mech.bids()[i].clone())?;
            regret_at_bid <= regret
        };

        let semi_smooth_ok = semi_smooth_holds(mech, i, &actual, &truthful_all)?;

        let u_at_bid = mech.utility_in(i, &actual)?;
        let u_truthful = mech.utility_in(i, &truthful_i)?;
        if u_at_bid < u_truthful {
            precondition_utilities = false;
        }

        bidders.push(BidderDiagnostics {
            bidder: i,
            ic_envy: envy,
            envy_argmax,
            ic_regret: regret,
            best_deviation,
            regret_monotone_ok,
            semi_smooth_ok,
        });
    }

    let (sw, sw_opt, swl) = social_welfare(mech, &actual)?;
    let eight_sw = Money::from_int(8) * &sw;
    let swl_bound = if sw_opt >= eight_sw && precondition_utilities {
        let quarter = &swl / &Money::from_int(4);
        if envy_sum >= quarter {
            BoundStatus::Holds
        } else {
            BoundStatus::Fails
        }
    } else {
        BoundStatus::NotApplicable
    };

    Ok(DiagnosticsReport {
        bidders,
        sw,
        sw_opt,
        swl,
        envy_dominates_regret,
        swl_bound,
    })
}

/// u_i(v_i/2, b_-i) + alpha_{pi(b,j),j} v_{pi(b,j)} >= 1/2 alpha_{i,j} v_i,
/// where j is i's slot under truthful bids and pi(b,j) holds j under the
/// actual bids.
fn semi_smooth_holds<M: Mechanism + ?Sized>(
    mech: &M,
    i: usize,
    actual: &Outcome,
    truthful_all: &Outcome,
) -> Result<bool> {
    let v_i = &mech.values()[i];
    let half = v_i / &Money::from_int(2);
    let half_outcome = mech.run_with(i, &half)?;
    let u_half = mech.utility_in(i, &half_outcome)?;

    let (holder_term, own_term) = match truthful_all.assignment[i] {
        SlotAssignment::Unassigned => (Money::zero(), Money::zero()),
        SlotAssignment::Slot(j) => {
            let holder_term = match actual.bidder_at(j) {
                Some(k) => crate::instance::discounted_value(
                    &mech.values()[k],
                    mech.curve(k),
                    SlotAssignment::Slot(j),
                )?,
                None => Money::zero(),
            };
            let own = crate::instance::discounted_value(v_i, mech.curve(i), SlotAssignment::Slot(j))?;
            (holder_term, own)
        }
    };
    Ok(u_half + holder_term >= own_term / Money::from_int(2))
}
