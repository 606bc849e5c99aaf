//! Max-weight perfect matching with a pointwise-minimal dual certificate,
//! plus the balancing / perturbation / payment-rounding machinery that makes
//! the matching unique and the payments exact.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AdTypesInstance, DiscountCurve};
use crate::money::Money;

/// Bidder-by-slot edge weights w[i][j] = b_i * alpha_{i,j}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedBipartite {
    weights: Vec<Vec<Money>>,
}

impl WeightedBipartite {
    pub fn new(weights: Vec<Vec<Money>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInstance("empty weight matrix".into()));
        }
        let cols = weights[0].len();
        if weights.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged weight matrix".into()));
        }
        Ok(WeightedBipartite { weights })
    }

    pub fn from_bids(bids: &[Money], curves: &[DiscountCurve]) -> Result<Self> {
        let weights = bids
            .iter()
            .zip(curves)
            .map(|(b, c)| c.weights().iter().map(|a| b * a).collect())
            .collect();
        WeightedBipartite::new(weights)
    }

    pub fn n_bidders(&self) -> usize {
        self.weights.len()
    }

    pub fn n_slots(&self) -> usize {
        self.weights[0].len()
    }

    pub fn is_square(&self) -> bool {
        self.n_bidders() == self.n_slots()
    }

    pub fn weight(&self, bidder: usize, slot: usize) -> &Money {
        &self.weights[bidder][slot]
    }

    pub fn rows(&self) -> &[Vec<Money>] {
        &self.weights
    }

    /// Copy with bidder `i`'s row zeroed (stand-in for removing the bidder
    /// while keeping the graph square).
    pub fn without_bidder(&self, bidder: usize) -> WeightedBipartite {
        let mut weights = self.weights.clone();
        weights[bidder] = vec![Money::zero(); self.n_slots()];
        WeightedBipartite { weights }
    }

    pub fn matching_weight(&self, matching: &[usize]) -> Money {
        matching
            .iter()
            .enumerate()
            .map(|(i, &j)| self.weight(i, j).clone())
            .sum()
    }
}

/// Optimal matching together with the pointwise-minimal dual prices that
/// certify it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualCertificate {
    /// matching[i] = slot matched to bidder i.
    pub matching: Vec<usize>,
    pub slot_prices: Vec<Money>,
    pub bidder_utilities: Vec<Money>,
    /// Pairs (bidder, slot) with q_i + p_j = w_{i,j}.
    pub tight_edges: BTreeSet<(usize, usize)>,
}

impl DualCertificate {
    pub fn n(&self) -> usize {
        self.matching.len()
    }

    pub fn matched_slot(&self, bidder: usize) -> usize {
        self.matching[bidder]
    }

    pub fn bidder_at_slot(&self, slot: usize) -> usize {
        self.matching.iter().position(|&j| j == slot).unwrap()
    }
}

/// Make the instance square: pad every curve with zero-quality slots when
/// bidders outnumber slots, drop the lowest surplus slots otherwise.
pub fn balance(instance: &AdTypesInstance) -> AdTypesInstance {
    let n = instance.n_bidders();
    let m = instance.n_slots();
    if n == m {
        return instance.clone();
    }
    let curves = instance
        .curves
        .iter()
        .map(|c| {
            let mut w = c.weights().to_vec();
            if n > m {
                w.extend(std::iter::repeat(Money::zero()).take(n - m));
            } else {
                w.truncate(n);
            }
            DiscountCurve::new(w).expect("padding/truncation preserves monotonicity")
        })
        .collect();
    AdTypesInstance {
        values: instance.values.clone(),
        bids: instance.bids.clone(),
        curves,
        quantum: instance.quantum.clone(),
    }
}

/// Minimum positive difference between any two entries of the weight matrix;
/// 1 when all entries coincide (degenerate all-equal fallback).
pub fn min_positive_gap(graph: &WeightedBipartite) -> Money {
    let mut values: Vec<&Money> = graph.rows().iter().flatten().collect();
    values.sort();
    let mut best: Option<Money> = None;
    for w in values.windows(2) {
        let gap = w[1] - w[0];
        if gap.is_positive() && best.as_ref().is_none_or(|b| &gap < b) {
            best = Some(gap);
        }
    }
    best.unwrap_or_else(Money::one)
}

/// Deterministic tie-breaking perturbation: entry (i, j) gains eps * 2^k with
/// eps = scale / 2^(m^2+3) and a fixed scan order. Within each bidder's row
/// higher-quality slots receive strictly larger boosts, so rows stay
/// non-increasing. The scale is min(delta, grid unit): matching *totals* can
/// differ by as little as the common grid unit of the weights, so capping the
/// noise below it guarantees the perturbed optimum is also an exact optimum
/// of the original weights. Returns the perturbed graph and delta.
pub fn perturb(graph: &WeightedBipartite) -> Result<(WeightedBipartite, Money)> {
    if !graph.is_square() {
        return Err(Error::NonSquareGraph {
            rows: graph.n_bidders(),
            cols: graph.n_slots(),
        });
    }
    let m = graph.n_slots();
    let delta = min_positive_gap(graph);
    let mut denom = BigInt::one();
    for row in graph.rows() {
        for w in row {
            denom = denom.lcm(w.as_rational().denom());
        }
    }
    let grid = Money::from_rational(BigRational::new(BigInt::one(), denom));
    let scale = delta.clone().min(grid);
    let eps = &scale / &Money::pow2((m * m + 3) as u32);
    let weights = graph
        .rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, w)| {
                    let k = (i * m + (m - j)) as u32;
                    w + &(&eps * &Money::pow2(k))
                })
                .collect()
        })
        .collect();
    Ok((WeightedBipartite { weights }, delta))
}

/// Replace each price by the nearest multiple of `delta`, exact halves
/// rounding down.
pub fn round_payments(prices: &[Money], delta: &Money) -> Vec<Money> {
    prices.iter().map(|p| p.round_to_multiple(delta)).collect()
}

/// Hungarian method on a square graph, returning the max-weight matching and
/// the pointwise-minimal feasible dual (q on bidders, p on slots).
pub fn solve_min_dual_mwpm(graph: &WeightedBipartite) -> Result<DualCertificate> {
    if !graph.is_square() {
        return Err(Error::NonSquareGraph {
            rows: graph.n_bidders(),
            cols: graph.n_slots(),
        });
    }
    let n = graph.n_bidders();

    // Scale to integers over a common denominator so the inner loop avoids
    // per-operation gcd reduction.
    let mut denom = BigInt::one();
    for row in graph.rows() {
        for w in row {
            denom = denom.lcm(w.as_rational().denom());
        }
    }
    let scaled: Vec<Vec<BigInt>> = graph
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .map(|w| {
                    let r = w.as_rational();
                    r.numer() * (&denom / r.denom())
                })
                .collect()
        })
        .collect();

    let (matching, mut q, mut p) = hungarian_max(&scaled);
    minimize_slot_prices(&scaled, &matching, &mut q, &mut p);

    let descale = |v: BigInt| Money::from_rational(BigRational::new(v, denom.clone()));
    let slot_prices: Vec<Money> = {
        let mut by_slot = vec![BigInt::zero(); n];
        for (j, v) in p.iter().enumerate() {
            by_slot[j] = v.clone();
        }
        by_slot.into_iter().map(descale).collect()
    };
    let bidder_utilities: Vec<Money> = q.drain(..).map(descale).collect();

    let mut tight_edges = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if &bidder_utilities[i] + &slot_prices[j] == *graph.weight(i, j) {
                tight_edges.insert((i, j));
            }
        }
    }

    Ok(DualCertificate {
        matching,
        slot_prices,
        bidder_utilities,
        tight_edges,
    })
}

/// Jonker-style Hungarian method (row-by-row Dijkstra with potentials) on the
/// minimization problem with costs -w. Returns (matching, q, p) satisfying
/// q_i + p_j >= w_ij with equality on matched edges.
fn hungarian_max(weights: &[Vec<BigInt>]) -> (Vec<usize>, Vec<BigInt>, Vec<BigInt>) {
    let n = weights.len();
    let cost = |i: usize, j: usize| -> BigInt { -&weights[i][j] };

    // 1-indexed columns with sentinel column 0, per the classic formulation.
    let mut u = vec![BigInt::zero(); n + 1];
    let mut v = vec![BigInt::zero(); n + 1];
    let mut row_of = vec![0usize; n + 1]; // row assigned to column (1-based rows)
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<BigInt>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta: Option<BigInt> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - &u[i0] - &v[j];
                if minv[j].as_ref().is_none_or(|m| cur < *m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                if let Some(mv) = &minv[j] {
                    if delta.as_ref().is_none_or(|d| mv < d) {
                        delta = Some(mv.clone());
                        j1 = j;
                    }
                }
            }
            let delta = delta.expect("square matrix always has an unused column");
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += &delta;
                    v[j] -= &delta;
                } else if let Some(mv) = minv[j].as_mut() {
                    *mv -= &delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut matching = vec![0usize; n];
    for j in 1..=n {
        matching[row_of[j] - 1] = j - 1;
    }
    // Potentials for min-cost on -w become duals for max-weight on w.
    let q: Vec<BigInt> = (1..=n).map(|i| -&u[i]).collect();
    let p: Vec<BigInt> = (1..=n).map(|j| -&v[j]).collect();
    (matching, q, p)
}

/// Lower slot prices to the pointwise-minimal feasible dual. Lowering p_j by
/// t_j forces q of the matched bidder up by t_j, which is feasible as long as
/// t_{j'} - t_j <= slack(matched(j), j') for every other slot and t_j <= p_j.
/// The maximal t is the shortest-path solution of that difference system.
fn minimize_slot_prices(
    weights: &[Vec<BigInt>],
    matching: &[usize],
    q: &mut [BigInt],
    p: &mut [BigInt],
) {
    let n = weights.len();
    let mut bidder_of_slot = vec![0usize; n];
    for (i, &j) in matching.iter().enumerate() {
        bidder_of_slot[j] = i;
    }
    let slack = |i: usize, j: usize, q: &[BigInt], p: &[BigInt]| -> BigInt {
        &q[i] + &p[j] - &weights[i][j]
    };

    let mut t: Vec<BigInt> = p.to_vec();
    loop {
        let mut changed = false;
        for j in 0..n {
            let i = bidder_of_slot[j];
            for j2 in 0..n {
                if j2 == j {
                    continue;
                }
                let cand = &t[j] + slack(i, j2, q, p);
                if cand < t[j2] {
                    t[j2] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for j in 0..n {
        debug_assert!(!t[j].is_negative(), "feasible dual cannot rise");
        p[j] -= &t[j];
    }
    for (i, &j) in matching.iter().enumerate() {
        q[i] += &t[j];
    }
}

/// Per-slot tight-edge sets E=_j: tight edges (i', j') with j' >= j whose
/// bidder is matched at a slot >= j.
pub fn tight_edge_sets(cert: &DualCertificate) -> Vec<BTreeSet<(usize, usize)>> {
    let n = cert.n();
    (0..n)
        .map(|j| {
            cert.tight_edges
                .iter()
                .filter(|&&(i2, j2)| j2 >= j && cert.matching[i2] >= j)
                .copied()
                .collect()
        })
        .collect()
}

/// Structural checks for a minimal-dual certificate on a unique-MWPM graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    /// Each bidder is matched to its lowest-quality tight slot.
    pub lowest_tight: bool,
    /// Each bidder reaches a zero-price slot through alternating tight edges.
    pub free_path: bool,
    /// Prices non-increasing with the final slot free.
    pub monotone_prices: bool,
    /// Each bidder's matched slot maximizes w_ij - p_j.
    pub clearing: bool,
}

impl StructureReport {
    pub fn all(&self) -> bool {
        self.lowest_tight && self.free_path && self.monotone_prices && self.clearing
    }
}

pub fn verify_structure(cert: &DualCertificate, graph: &WeightedBipartite) -> StructureReport {
    let n = cert.n();

    let lowest_tight = (0..n).all(|i| {
        let max_tight = cert
            .tight_edges
            .iter()
            .filter(|&&(i2, _)| i2 == i)
            .map(|&(_, j)| j)
            .max();
        max_tight == Some(cert.matching[i])
    });

    let free_path = (0..n).all(|i| reaches_free_slot(cert, i));

    let monotone_prices = cert
        .slot_prices
        .windows(2)
        .all(|w| w[0] >= w[1])
        && cert.slot_prices[n - 1].is_zero();

    let clearing = (0..n).all(|i| {
        let j = cert.matching[i];
        let own = graph.weight(i, j) - &cert.slot_prices[j];
        (0..n).all(|j2| graph.weight(i, j2) - &cert.slot_prices[j2] <= own)
    });

    StructureReport {
        lowest_tight,
        free_path,
        monotone_prices,
        clearing,
    }
}

/// BFS over the alternating tight-edge graph: bidder -> slot along its
/// matched edge, slot -> bidder along any tight edge. Reaching a zero-price
/// slot from every bidder is exactly what fails when prices are not
/// pointwise-minimal.
fn reaches_free_slot(cert: &DualCertificate, start: usize) -> bool {
    let n = cert.n();
    let mut seen_slot = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    let push = |j: usize, seen: &mut Vec<bool>, queue: &mut std::collections::VecDeque<usize>| {
        if !seen[j] {
            seen[j] = true;
            queue.push_back(j);
        }
    };
    push(cert.matching[start], &mut seen_slot, &mut queue);
    while let Some(j) = queue.pop_front() {
        if cert.slot_prices[j].is_zero() {
            return true;
        }
        for &(i, j2) in &cert.tight_edges {
            if j2 == j {
                push(cert.matching[i], &mut seen_slot, &mut queue);
            }
        }
    }
    false
}
