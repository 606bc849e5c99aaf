//! Regular mechanisms for position auctions: rank-based allocation with
//! lexicographic tie-breaking and payments linear in the ranked bid vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{DiscountCurve, Outcome, PositionInstance, SlotAssignment};
use crate::money::Money;

/// Rank-indexed payment coefficients: the bidder holding rank i pays
/// sum_k a[i][k] * b_(k) over the ranked bids b_(k).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentMatrix {
    coefficients: Vec<Vec<Money>>,
}

impl PaymentMatrix {
    pub fn new(coefficients: Vec<Vec<Money>>) -> Result<Self> {
        let n = coefficients.len();
        if coefficients.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension(format!(
                "payment matrix must be {n}x{n}"
            )));
        }
        if coefficients
            .iter()
            .flatten()
            .any(Money::is_negative)
        {
            return Err(Error::Dimension(
                "payment coefficients must be non-negative".into(),
            ));
        }
        Ok(PaymentMatrix { coefficients })
    }

    pub fn n(&self) -> usize {
        self.coefficients.len()
    }

    pub fn rows(&self) -> &[Vec<Money>] {
        &self.coefficients
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MechanismKind {
    Vcg,
    Gsp,
    Gfp,
    Custom(PaymentMatrix),
}

impl MechanismKind {
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "vcg" => Ok(MechanismKind::Vcg),
            "gsp" => Ok(MechanismKind::Gsp),
            "gfp" => Ok(MechanismKind::Gfp),
            other => Err(Error::Config(format!(
                "unknown position mechanism `{other}` (expected vcg|gsp|gfp)"
            ))),
        }
    }
}

/// Bidders sorted by non-increasing bid, equal bids by original index.
/// Returns the rank order: `order[r]` is the bidder holding rank r.
pub fn rank_order(bids: &[Money]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.sort_by(|&a, &b| bids[b].cmp(&bids[a]).then(a.cmp(&b)));
    order
}

/// Rank-based allocation: the bidder at rank r takes slot r; ranks beyond the
/// number of slots are unassigned.
pub fn rank_allocate(bids: &[Money], n_slots: usize) -> Vec<SlotAssignment> {
    let order = rank_order(bids);
    let mut assignment = vec![SlotAssignment::Unassigned; bids.len()];
    for (rank, &bidder) in order.iter().enumerate() {
        if rank < n_slots {
            assignment[bidder] = SlotAssignment::Slot(rank);
        }
    }
    assignment
}

/// Coefficient matrix for the built-in payment rules. The curve is padded
/// with zeros beyond its length.
pub fn build_payment_matrix(
    kind: &MechanismKind,
    curve: &DiscountCurve,
    n: usize,
) -> Result<PaymentMatrix> {
    let alpha = |k: usize| curve.padded(k);
    let mut rows = vec![vec![Money::zero(); n]; n];
    match kind {
        MechanismKind::Vcg => {
            for (i, row) in rows.iter_mut().enumerate() {
                for (k, cell) in row.iter_mut().enumerate().skip(i + 1) {
                    *cell = alpha(k - 1) - alpha(k);
                }
            }
        }
        MechanismKind::Gsp => {
            for (i, row) in rows.iter_mut().enumerate() {
                if i + 1 < n {
                    row[i + 1] = alpha(i);
                }
            }
        }
        MechanismKind::Gfp => {
            for (i, row) in rows.iter_mut().enumerate() {
                row[i] = alpha(i);
            }
        }
        MechanismKind::Custom(m) => {
            if m.n() != n {
                return Err(Error::Dimension(format!(
                    "custom matrix is {}x{}, instance has {n} bidders",
                    m.n(),
                    m.n()
                )));
            }
            return Ok(m.clone());
        }
    }
    PaymentMatrix::new(rows)
}

/// Run a regular mechanism: rank allocation plus coefficient-matrix payments.
pub fn run_regular(instance: &PositionInstance, kind: &MechanismKind) -> Result<Outcome> {
    let n = instance.n_bidders();
    let matrix = build_payment_matrix(kind, &instance.curve, n)?;
    let order = rank_order(&instance.bids);
    let ranked_bids: Vec<&Money> = order.iter().map(|&i| &instance.bids[i]).collect();
    let assignment = rank_allocate(&instance.bids, instance.n_slots());

    let mut payments = vec![Money::zero(); n];
    for (rank, &bidder) in order.iter().enumerate() {
        let mut p = Money::zero();
        for (k, b) in ranked_bids.iter().enumerate() {
            let a = &matrix.rows()[rank][k];
            if !a.is_zero() {
                p += &(a * *b);
            }
        }
        // Unassigned ranks pay nothing.
        if assignment[bidder].is_assigned() {
            payments[bidder] = p;
        }
    }
    Ok(Outcome { assignment, payments })
}

/// The two conditions under which a regular mechanism is individually
/// rational with envy dominating regret.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// a[i][k] = 0 for all k <= i.
    pub zero_prefix_ok: bool,
    /// p_i - p_{i+1} >= (alpha_i - alpha_{i+1}) * b_{i+1} on the realized
    /// payments, in rank order.
    pub price_gap_ok: bool,
}

pub fn check_regularity_conditions(
    kind: &MechanismKind,
    instance: &PositionInstance,
) -> Result<RegularityReport> {
    let n = instance.n_bidders();
    let matrix = build_payment_matrix(kind, &instance.curve, n)?;
    let zero_prefix_ok = matrix
        .rows()
        .iter()
        .enumerate()
        .all(|(i, row)| row.iter().take(i + 1).all(Money::is_zero));

    let outcome = run_regular(instance, kind)?;
    let order = rank_order(&instance.bids);
    let alpha = |k: usize| instance.curve.padded(k);
    let mut price_gap_ok = true;
    for rank in 0..n.saturating_sub(1) {
        let p_i = &outcome.payments[order[rank]];
        let p_next = &outcome.payments[order[rank + 1]];
        let b_next = &instance.bids[order[rank + 1]];
        let gap = (alpha(rank) - alpha(rank + 1)) * b_next;
        if &(p_i - p_next) < &gap {
            price_gap_ok = false;
            break;
        }
    }
    Ok(RegularityReport { zero_prefix_ok, price_gap_ok })
}
