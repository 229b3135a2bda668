use std::collections::BTreeSet;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{DominanceContext, PartnerRule};
use crate::error::{Error, Result};
use crate::venue::{CategoryId, PointId};

/// Outcome of one selection run for an ordered door pair and category pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub category_a: CategoryId,
    pub category_b: CategoryId,
    /// First-category points kept, in selection order.
    pub selected_a: Vec<PointId>,
    /// Second-category points kept, in selection order.
    pub selected_b: Vec<PointId>,
    /// Second-category points removed by the dominance guards.
    pub pruned_b: Vec<PointId>,
    /// Set when the fallback had to keep a point to avoid an empty category.
    pub forced: Option<PointId>,
}

impl SelectionResult {
    pub fn empty(category_a: CategoryId, category_b: CategoryId) -> Self {
        SelectionResult {
            category_a,
            category_b,
            selected_a: Vec::new(),
            selected_b: Vec::new(),
            pruned_b: Vec::new(),
            forced: None,
        }
    }
}

impl DominanceContext<'_> {
    fn sorted_by<F: Fn(PointId) -> f64>(&self, pts: impl IntoIterator<Item = PointId>, key: F) -> Vec<PointId> {
        let mut v: Vec<(f64, PointId)> = pts.into_iter().map(|p| (key(p), p)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v.into_iter().map(|(_, p)| p).collect()
    }

    fn check_members(&self, pts: &[PointId], c: CategoryId) -> Result<()> {
        let distinct: BTreeSet<_> = pts.iter().collect();
        if distinct.len() != pts.len() {
            return Err(Error::Dominance("repeated point in selection input".into()));
        }
        for &p in pts {
            if self.instance().point(p)?.category != c {
                return Err(Error::Dominance(format!("point {p} is not of category {c}")));
            }
        }
        Ok(())
    }

    /// Keeps the points of `pa` (first category) and `pb` (second category)
    /// that may lie on a cheapest `⟨entry, a, b, exit⟩` route. Points not in
    /// the result are safe to drop for this door pair.
    pub fn select_points(&self, pa: &[PointId], pb: &[PointId]) -> Result<SelectionResult> {
        self.check_members(pa, self.cat_a)?;
        self.check_members(pb, self.cat_b)?;
        let mut out = SelectionResult::empty(self.cat_a, self.cat_b);
        if pa.is_empty() || pb.is_empty() {
            return Ok(out);
        }

        // Ascending entry rank: each point is undominated among those after it.
        let mut remaining_a = self.sorted_by(pa.iter().copied(), |p| self.entry_rank(p));
        let mut undecided_b: BTreeSet<PointId> = pb.iter().copied().collect();

        while !remaining_a.is_empty() && !undecided_b.is_empty() {
            let pi = remaining_a.remove(0);
            out.selected_a.push(pi);
            let visit = self.sorted_by(undecided_b.iter().copied(), |p| self.dist(pi, p));
            let mut closed = BTreeSet::new();
            for pj in visit {
                if !closed.insert(pj) || !undecided_b.contains(&pj) {
                    continue;
                }
                let base = self.dist(pi, pj);
                let nearer: Vec<PointId> = remaining_a
                    .iter()
                    .copied()
                    .filter(|&pk| self.dist(pk, pj) < base)
                    .collect();
                if !nearer.is_empty() && !self.threshold_scan(pi, pj, nearer) {
                    continue;
                }
                out.selected_b.push(pj);
                undecided_b.remove(&pj);
                let mut dominated = Vec::new();
                for &p in &undecided_b {
                    if self.dominates_at_exit(pj, p)? {
                        dominated.push(p);
                    }
                }
                let dominated = self.sorted_by(dominated, |p| self.exit_rank(p));
                closed.extend(dominated.iter().copied());
                for p in self.prune_points(pi, pj, &remaining_a, &dominated)? {
                    undecided_b.remove(&p);
                    out.pruned_b.push(p);
                }
            }
        }

        if out.selected_b.is_empty() {
            let anchor = out.selected_a[0];
            let keep = self.sorted_by(pb.iter().copied(), |p| self.dist(anchor, p))[0];
            warn!(
                "selection between {} and {} kept no {} point; keeping {keep}",
                self.entry, self.exit, self.cat_b
            );
            out.selected_b.push(keep);
            out.pruned_b.retain(|&p| p != keep);
            out.forced = Some(keep);
        }
        Ok(out)
    }

    /// Decides whether `pj` survives when some remaining first-category
    /// points (`nearer`, in ascending entry rank) are closer to it than `pi`.
    /// `true` means no such point yields a strictly cheaper route to `pj`.
    fn threshold_scan(&self, pi: PointId, pj: PointId, mut nearer: Vec<PointId>) -> bool {
        let base = self.dist(pi, pj);
        while let Some(&pk) = nearer.first() {
            let threshold = base - self.phi(pi, pk);
            let inside: Vec<PointId> = nearer
                .iter()
                .copied()
                .filter(|&m| self.dist(m, pj) < threshold)
                .collect();
            if inside.is_empty() {
                return true;
            }
            if inside.contains(&pk) {
                return false;
            }
            nearer = inside;
        }
        true
    }

    /// Among `dominated` (second-category points dominated at the exit by
    /// the just-selected `pj`), returns those provably beaten by
    /// `⟨entry, pi, pj, exit⟩` whatever first-category partner in
    /// `remaining_a` they are paired with.
    pub fn prune_points(
        &self,
        pi: PointId,
        pj: PointId,
        remaining_a: &[PointId],
        dominated: &[PointId],
    ) -> Result<Vec<PointId>> {
        let base = self.dist(pi, pj);
        let fi = self.entry_rank(pi);
        let gj = self.exit_rank(pj);
        let mut pruned = Vec::new();
        for &pk in dominated {
            if !self.dominates_at_exit(pj, pk)? {
                return Err(Error::Dominance(format!(
                    "{pk} is not dominated by {pj} at {}",
                    self.exit
                )));
            }
            if remaining_a.is_empty() {
                pruned.push(pk);
                continue;
            }
            let (nearest, gap) = remaining_a
                .iter()
                .map(|&m| (m, self.dist(pk, m)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .expect("non-empty");
            if base < gap {
                pruned.push(pk);
                continue;
            }
            let gk = self.exit_rank(pk);
            let beaten = |m: PointId| {
                let phi_hat = self.entry_rank(m) + gk - fi - gj;
                self.dist(pk, m) > base - phi_hat
            };
            let prune = match self.options.partner_rule {
                PartnerRule::AllPartners => remaining_a.iter().all(|&m| beaten(m)),
                PartnerRule::Nearest => beaten(nearest),
            };
            if prune {
                pruned.push(pk);
            }
        }
        Ok(pruned)
    }
}
