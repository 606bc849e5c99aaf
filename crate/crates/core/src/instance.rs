//! Shared domain types: discount curves, auction instances, outcomes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;

/// Non-increasing per-slot quality weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Money>", into = "Vec<Money>")]
pub struct DiscountCurve {
    weights: Vec<Money>,
}

impl DiscountCurve {
    pub fn new(weights: Vec<Money>) -> Result<Self> {
        if weights.iter().any(Money::is_negative) {
            return Err(Error::InvalidInstance(
                "discount curve entries must be non-negative".into(),
            ));
        }
        if weights.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInstance(
                "discount curve must be non-increasing".into(),
            ));
        }
        Ok(DiscountCurve { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Money] {
        &self.weights
    }

    pub fn get(&self, slot: usize) -> Result<&Money> {
        self.weights.get(slot).ok_or(Error::SlotOutOfRange {
            slot,
            len: self.weights.len(),
        })
    }

    /// Quality at `slot`, treating indices beyond the curve as zero.
    pub fn padded(&self, slot: usize) -> Money {
        self.weights.get(slot).cloned().unwrap_or_else(Money::zero)
    }

    /// Geometric curve ratio, ratio^2, ..., ratio^m.
    pub fn geometric(ratio: &Money, slots: usize) -> Result<Self> {
        if ratio.is_negative() || *ratio > Money::one() {
            return Err(Error::InvalidInstance(
                "geometric ratio must lie in [0, 1]".into(),
            ));
        }
        let weights = (1..=slots as u32).map(|k| ratio.pow(k)).collect();
        DiscountCurve::new(weights)
    }
}

impl TryFrom<Vec<Money>> for DiscountCurve {
    type Error = Error;
    fn try_from(v: Vec<Money>) -> Result<Self> {
        DiscountCurve::new(v)
    }
}

impl From<DiscountCurve> for Vec<Money> {
    fn from(c: DiscountCurve) -> Vec<Money> {
        c.weights
    }
}

/// Slot held by a bidder in an outcome. `Unassigned` is an explicit sentinel
/// with value 0 and price 0, so envy toward unassigned bidders is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Option<usize>", into = "Option<usize>")]
pub enum SlotAssignment {
    Slot(usize),
    Unassigned,
}

impl From<Option<usize>> for SlotAssignment {
    fn from(v: Option<usize>) -> Self {
        match v {
            Some(j) => SlotAssignment::Slot(j),
            None => SlotAssignment::Unassigned,
        }
    }
}

impl From<SlotAssignment> for Option<usize> {
    fn from(v: SlotAssignment) -> Option<usize> {
        v.slot()
    }
}

impl SlotAssignment {
    pub fn slot(&self) -> Option<usize> {
        match self {
            SlotAssignment::Slot(j) => Some(*j),
            SlotAssignment::Unassigned => None,
        }
    }

    pub fn is_assigned(&self) -> bool {
        matches!(self, SlotAssignment::Slot(_))
    }
}

/// Allocation and payments, one entry per bidder. Slot indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub assignment: Vec<SlotAssignment>,
    pub payments: Vec<Money>,
}

impl Outcome {
    pub fn n_bidders(&self) -> usize {
        self.assignment.len()
    }

    /// Bidder holding `slot`, if any.
    pub fn bidder_at(&self, slot: usize) -> Option<usize> {
        self.assignment
            .iter()
            .position(|a| a.slot() == Some(slot))
    }

    /// Price actually charged for `slot` (0 when the slot is unallocated).
    pub fn slot_price(&self, slot: usize) -> Money {
        self.bidder_at(slot)
            .map(|i| self.payments[i].clone())
            .unwrap_or_else(Money::zero)
    }
}

/// Position auction: common slot-quality curve, scalar values and bids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionInstance {
    pub values: Vec<Money>,
    pub bids: Vec<Money>,
    pub curve: DiscountCurve,
}

impl PositionInstance {
    pub fn new(values: Vec<Money>, bids: Vec<Money>, curve: DiscountCurve) -> Result<Self> {
        if values.is_empty() || values.len() != bids.len() {
            return Err(Error::InvalidInstance(
                "values and bids must have equal positive length".into(),
            ));
        }
        if values.iter().chain(bids.iter()).any(Money::is_negative) {
            return Err(Error::InvalidInstance(
                "values and bids must be non-negative".into(),
            ));
        }
        Ok(PositionInstance { values, bids, curve })
    }

    pub fn truthful(values: Vec<Money>, curve: DiscountCurve) -> Result<Self> {
        PositionInstance::new(values.clone(), values, curve)
    }

    pub fn n_bidders(&self) -> usize {
        self.bids.len()
    }

    pub fn n_slots(&self) -> usize {
        self.curve.len()
    }
}

/// Ad Types auction: one discount curve per bidder, plus the money grid used
/// by deviation oracles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdTypesInstance {
    pub values: Vec<Money>,
    pub bids: Vec<Money>,
    pub curves: Vec<DiscountCurve>,
    pub quantum: Money,
}

impl AdTypesInstance {
    pub fn new(
        values: Vec<Money>,
        bids: Vec<Money>,
        curves: Vec<DiscountCurve>,
        quantum: Money,
    ) -> Result<Self> {
        if values.is_empty() || values.len() != bids.len() || values.len() != curves.len() {
            return Err(Error::InvalidInstance(
                "values, bids and curves must have equal positive length".into(),
            ));
        }
        if values.iter().chain(bids.iter()).any(Money::is_negative) {
            return Err(Error::InvalidInstance(
                "values and bids must be non-negative".into(),
            ));
        }
        if !quantum.is_positive() {
            return Err(Error::InvalidInstance("quantum must be positive".into()));
        }
        let m = curves[0].len();
        if curves.iter().any(|c| c.len() != m) {
            return Err(Error::InvalidInstance(
                "all curves must have the same number of slots".into(),
            ));
        }
        Ok(AdTypesInstance { values, bids, curves, quantum })
    }

    pub fn n_bidders(&self) -> usize {
        self.bids.len()
    }

    pub fn n_slots(&self) -> usize {
        self.curves[0].len()
    }

    pub fn with_bids(&self, bids: Vec<Money>) -> AdTypesInstance {
        AdTypesInstance { bids, ..self.clone() }
    }
}

/// v * alpha_slot; the empty allocation is worth 0.
pub fn discounted_value(
    v: &Money,
    curve: &DiscountCurve,
    slot: SlotAssignment,
) -> Result<Money> {
    match slot {
        SlotAssignment::Unassigned => Ok(Money::zero()),
        SlotAssignment::Slot(j) => Ok(v * curve.get(j)?),
    }
}

/// v * alpha_slot - price; may be negative.
pub fn utility(
    v: &Money,
    curve: &DiscountCurve,
    slot: SlotAssignment,
    price: &Money,
) -> Result<Money> {
    Ok(discounted_value(v, curve, slot)? - price)
}

/// On-disk JSON instance: numbers as decimal strings to preserve exactness.
/// `curves` may hold a single curve shared by every bidder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub values: Vec<Money>,
    pub bids: Vec<Money>,
    pub curves: Vec<Vec<Money>>,
    #[serde(default = "default_quantum")]
    pub quantum: Money,
}

fn default_quantum() -> Money {
    "0.01".parse().unwrap()
}

impl InstanceFile {
    pub fn to_adtypes(&self) -> Result<AdTypesInstance> {
        let n = self.values.len();
        let curves: Vec<DiscountCurve> = if self.curves.len() == 1 {
            let c = DiscountCurve::new(self.curves[0].clone())?;
            vec![c; n]
        } else {
            self.curves
                .iter()
                .map(|c| DiscountCurve::new(c.clone()))
                .collect::<Result<_>>()?
        };
        AdTypesInstance::new(self.values.clone(), self.bids.clone(), curves, self.quantum.clone())
    }

    /// Position view: requires all bidders to share one curve.
    pub fn to_position(&self) -> Result<PositionInstance> {
        if self.curves.is_empty() {
            return Err(Error::InvalidInstance("no curves given".into()));
        }
        if self.curves.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidInstance(
                "position auctions need a single common curve".into(),
            ));
        }
        let curve = DiscountCurve::new(self.curves[0].clone())?;
        PositionInstance::new(self.values.clone(), self.bids.clone(), curve)
    }

    pub fn from_adtypes(inst: &AdTypesInstance) -> Self {
        InstanceFile {
            values: inst.values.clone(),
            bids: inst.bids.clone(),
            curves: inst.curves.iter().map(|c| c.weights().to_vec()).collect(),
            quantum: inst.quantum.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Money {
        s.parse().unwrap()
    }

    fn curve(ws: &[&str]) -> DiscountCurve {
        DiscountCurve::new(ws.iter().map(|w| m(w)).collect()).unwrap()
    }

    #[test]
    fn discounted_value_examples() {
        let c = curve(&["1", "0.5"]);
        assert_eq!(
            discounted_value(&m("10"), &c, SlotAssignment::Slot(1)).unwrap(),
            m("5")
        );
        assert_eq!(
            discounted_value(&m("10"), &c, SlotAssignment::Unassigned).unwrap(),
            m("0")
        );
        let c = curve(&["0.9", "0.81"]);
        assert_eq!(
            discounted_value(&m("7"), &c, SlotAssignment::Slot(1)).unwrap(),
            m("5.67")
        );
    }

    #[test]
    fn discounted_value_out_of_range() {
        let c = curve(&["1"]);
        assert!(discounted_value(&m("10"), &c, SlotAssignment::Slot(1)).is_err());
    }

    #[test]
    fn utility_examples() {
        let c1 = curve(&["1"]);
        assert_eq!(
            utility(&m("10"), &c1, SlotAssignment::Slot(0), &m("8")).unwrap(),
            m("2")
        );
        assert_eq!(
            utility(&m("10"), &c1, SlotAssignment::Unassigned, &m("0")).unwrap(),
            m("0")
        );
        let c2 = curve(&["1", "0.5"]);
        assert_eq!(
            utility(&m("8"), &c2, SlotAssignment::Slot(1), &m("2.5")).unwrap(),
            m("1.5")
        );
    }

    #[test]
    fn utility_at_zero_price_equals_discounted_value() {
        let c = curve(&["0.9", "0.81", "0.729"]);
        for j in 0..3 {
            assert_eq!(
                utility(&m("4.2"), &c, SlotAssignment::Slot(j), &Money::zero()).unwrap(),
                discounted_value(&m("4.2"), &c, SlotAssignment::Slot(j)).unwrap()
            );
        }
    }

    #[test]
    fn curve_rejects_increasing() {
        assert!(DiscountCurve::new(vec![m("0.5"), m("0.9")]).is_err());
        assert!(DiscountCurve::new(vec![m("0.5"), m("-0.1")]).is_err());
    }

    #[test]
    fn geometric_curve() {
        let c = DiscountCurve::geometric(&m("0.9"), 5).unwrap();
        assert_eq!(
            c.weights(),
            &[m("0.9"), m("0.81"), m("0.729"), m("0.6561"), m("0.59049")]
        );
    }

    #[test]
    fn instance_json_roundtrip() {
        let json = r#"{"values":["10","8"],"bids":["10","8"],"curves":[["1","0.5"]],"quantum":"0.01"}"#;
        let f: InstanceFile = serde_json::from_str(json).unwrap();
        let inst = f.to_adtypes().unwrap();
        assert_eq!(inst.n_bidders(), 2);
        assert_eq!(inst.curves[0], inst.curves[1]);
        let back = serde_json::to_string(&InstanceFile::from_adtypes(&inst)).unwrap();
        let f2: InstanceFile = serde_json::from_str(&back).unwrap();
        assert_eq!(f2.values, f.values);
    }
}
