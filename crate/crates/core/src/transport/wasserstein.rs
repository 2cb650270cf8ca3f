//! Exact Wasserstein distances between finitely supported measures.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::model::Norm;
use crate::{Error, Result};

const WEIGHT_TOL: f64 = 1e-12;
/// Candidate arcs per atom of the larger side before any refinement.
const INITIAL_NEIGHBOURS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Structural("discrete measure with empty support".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Structural(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d || p.iter().any(|x| !x.is_finite())) {
            return Err(Error::Structural("support points must be finite and of one dimension".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Structural("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Structural(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n.max(1) as f64; n])
    }

    /// Rescales arbitrary nonnegative masses to a probability vector.
    pub fn normalized(points: Vec<Vec<f64>>, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Structural("zero total mass".into()));
        }
        Self::new(points, masses.into_iter().map(|m| m / total).collect())
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Optimal plan in sparse form `(i, j, mass)` together with its cost.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub cost: f64,
    pub flows: Vec<(usize, usize, f64)>,
}

fn ground_cost(a: &[f64], b: &[f64], p: u32, norm: Norm) -> f64 {
    norm.dist(a, b).powi(p as i32)
}

/// `W_p(mu, nu)` under `norm`, for `p` in `{1, 2}`.
pub fn wasserstein_discrete(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: u32, norm: Norm) -> Result<f64> {
    Ok(optimal_plan(mu, nu, p, norm)?.cost.max(0.0).powf(1.0 / p as f64))
}

pub fn optimal_plan(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: u32, norm: Norm) -> Result<TransportPlan> {
    if !(p == 1 || p == 2) {
        return Err(Error::invalid("p", format!("order must be 1 or 2, got {p}")));
    }
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::Structural("empty support".into()));
    }
    if mu.dim() != nu.dim() {
        return Err(Error::Structural(format!(
            "dimension mismatch: {} vs {}",
            mu.dim(),
            nu.dim()
        )));
    }
    if mu.dim() == 1 {
        return Ok(quantile_plan(mu, nu, p));
    }
    if mu.len() >= nu.len() {
        Ok(multiscale(mu, nu, p, norm)?.0)
    } else {
        let plan = multiscale(nu, mu, p, norm)?.0;
        Ok(TransportPlan {
            cost: plan.cost,
            flows: plan.flows.into_iter().map(|(j, i, m)| (i, j, m)).collect(),
        })
    }
}

/// Monotone rearrangement; optimal for convex costs on the line.
fn quantile_plan(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: u32) -> TransportPlan {
    let order = |m: &DiscreteMeasure| {
        let mut idx: Vec<usize> = (0..m.len()).collect();
        idx.sort_by(|&a, &b| m.points[a][0].total_cmp(&m.points[b][0]));
        idx
    };
    let (oa, ob) = (order(mu), order(nu));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (mu.weights[oa[0]], nu.weights[ob[0]]);
    let mut cost = 0.0;
    let mut flows = Vec::new();
    loop {
        let m = ra.min(rb);
        let (a, b) = (oa[i], ob[j]);
        if m > 0.0 {
            cost += m * (mu.points[a][0] - nu.points[b][0]).abs().powi(p as i32);
            flows.push((a, b, m));
        }
        ra -= m;
        rb -= m;
        let adv_a = ra <= rb && i + 1 < oa.len();
        let adv_b = rb <= ra && j + 1 < ob.len();
        if !adv_a && !adv_b {
            break;
        }
        if adv_a {
            i += 1;
            ra += mu.weights[oa[i]];
        }
        if adv_b {
            j += 1;
            rb += nu.weights[ob[j]];
        }
    }
    TransportPlan { cost, flows }
}

#[derive(Clone, Copy, PartialEq)]
struct Label(f64, usize);

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Atoms per hub below which the problem is solved directly.
const COARSEST_RATIO: usize = 4;

/// Solves a coarsened copy of `atoms` first and starts from its hub prices.
fn multiscale(atoms: &DiscreteMeasure, hubs: &DiscreteMeasure, p: u32, norm: Norm) -> Result<(TransportPlan, Vec<f64>)> {
    let coarse = (atoms.len() > COARSEST_RATIO * hubs.len())
        .then(|| coarsen(atoms))
        .flatten()
        .filter(|c| c.len() < atoms.len());
    let prices = match coarse {
        Some(c) => multiscale(&c, hubs, p, norm)?.1,
        None => vec![0.0; hubs.len()],
    };
    FlowSolver::new(atoms, hubs, p, norm, &prices).solve()
}

/// Merges atoms on a grid with half the resolution per axis of the point
/// count; each cell becomes one atom at its barycenter.
fn coarsen(m: &DiscreteMeasure) -> Option<DiscreteMeasure> {
    let d = m.dim();
    let target = (m.len() as f64 / 2f64.powi(d as i32)).max(1.0);
    let cells = target.powf(1.0 / d as f64).ceil().max(1.0) as usize;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for x in &m.points {
        for k in 0..d {
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    let mut bins: std::collections::BTreeMap<usize, (Vec<f64>, f64)> = Default::default();
    for (x, &w) in m.points.iter().zip(&m.weights) {
        if w == 0.0 {
            continue;
        }
        let idx = (0..d).fold(0, |acc, k| {
            let span = hi[k] - lo[k];
            let i = if span > 0.0 {
                (((x[k] - lo[k]) / span * cells as f64) as usize).min(cells - 1)
            } else {
                0
            };
            acc * cells + i
        });
        let e = bins.entry(idx).or_insert_with(|| (vec![0.0; d], 0.0));
        for k in 0..d {
            e.0[k] += w * x[k];
        }
        e.1 += w;
    }
    let (points, weights): (Vec<_>, Vec<_>) = bins
        .into_values()
        .map(|(s, w)| (s.into_iter().map(|v| v / w).collect::<Vec<f64>>(), w))
        .unzip();
    DiscreteMeasure::normalized(points, weights).ok()
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    hub: usize,
    cost: f64,
    flow: f64,
}

/// Successive shortest paths on a sparse candidate graph between the atoms of
/// the larger measure and the hubs of the smaller one.
///
/// Atoms are transit nodes: each ships its whole mass and is always assigned
/// to hubs of least reduced cost `c(a, b) - pi_b`, starting from the prices
/// of a coarser solve; the remaining hub imbalances are repaired along
/// shortest residual paths. Candidate lists grow where the sparse graph is
/// disconnected, and at the end every pair is checked for dual feasibility;
/// violating arcs are added and the repair continues from the current state.
struct FlowSolver<'a> {
    atoms: &'a DiscreteMeasure,
    hubs: &'a DiscreteMeasure,
    p: u32,
    norm: Norm,
    arcs: Vec<Vec<Arc>>,
    hub_in: Vec<Vec<(usize, usize)>>,
    excess: Vec<f64>,
    /// Potentials of atoms `0..na` then hubs; reduced cost of `a -> b` is
    /// `c + pot[a] - pot[na + b]`.
    pot: Vec<f64>,
    tol: f64,
    mass_tol: f64,
}

impl<'a> FlowSolver<'a> {
    /// Candidate lists hold the hubs of least `c(a, b) - prices[b]`.
    fn new(atoms: &'a DiscreteMeasure, hubs: &'a DiscreteMeasure, p: u32, norm: Norm, prices: &[f64]) -> Self {
        let (na, nb) = (atoms.len(), hubs.len());
        let k = INITIAL_NEIGHBOURS.min(nb);
        let mut pot = vec![0.0; na + nb];
        pot[na..].copy_from_slice(prices);
        let mut solver = Self {
            atoms,
            hubs,
            p,
            norm,
            arcs: Vec::with_capacity(na),
            hub_in: vec![Vec::new(); nb],
            excess: hubs.weights.iter().map(|w| -w).collect(),
            pot,
            tol: 0.0,
            mass_tol: 1e-14,
        };
        let mut scale: f64 = 0.0;
        for a in 0..na {
            let mut c: Vec<(f64, usize)> = (0..nb).map(|b| (solver.cost(a, b) - prices[b], b)).collect();
            if k < c.len() {
                c.select_nth_unstable_by(k - 1, |x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                c.truncate(k);
            }
            solver.arcs.push(Vec::new());
            for (_, b) in c {
                let cost = solver.cost(a, b);
                scale = scale.max(cost);
                solver.push_arc(a, b, cost);
            }
        }
        solver.tol = 1e-11 * scale.max(1.0);
        solver
    }

    fn cost(&self, a: usize, b: usize) -> f64 {
        ground_cost(&self.atoms.points[a], &self.hubs.points[b], self.p, self.norm)
    }

    fn push_arc(&mut self, a: usize, hub: usize, cost: f64) {
        self.hub_in[hub].push((a, self.arcs[a].len()));
        self.arcs[a].push(Arc { hub, cost, flow: 0.0 });
    }

    fn value(&self, arc: &Arc) -> f64 {
        arc.cost - self.pot[self.atoms.len() + arc.hub]
    }

    /// Moves the flow of `a` to its cheapest arc when that beats the arcs
    /// carrying flow, then resets the atom potential.
    fn reprice(&mut self, a: usize) {
        let mut best = (f64::INFINITY, 0);
        let mut worst_used = f64::NEG_INFINITY;
        for (k, arc) in self.arcs[a].iter().enumerate() {
            let v = self.value(arc);
            if v < best.0 {
                best = (v, k);
            }
            if arc.flow > 0.0 {
                worst_used = worst_used.max(v);
            }
        }
        let carried: f64 = self.arcs[a].iter().map(|x| x.flow).sum();
        if carried == 0.0 || worst_used > best.0 + self.tol {
            for arc in self.arcs[a].iter_mut() {
                self.excess[arc.hub] -= arc.flow;
                arc.flow = 0.0;
            }
            let m = self.atoms.weights[a];
            self.arcs[a][best.1].flow = m;
            self.excess[self.arcs[a][best.1].hub] += m;
        }
        self.pot[a] = -best.0;
    }

    /// Adds up to `extra` further hubs, nearest first, to the list of `a`.
    fn widen(&mut self, a: usize, extra: usize) -> bool {
        let nb = self.hubs.len();
        if self.arcs[a].len() >= nb {
            return false;
        }
        let have: std::collections::HashSet<usize> = self.arcs[a].iter().map(|x| x.hub).collect();
        let mut rest: Vec<(f64, usize)> = (0..nb)
            .filter(|b| !have.contains(b))
            .map(|b| (self.cost(a, b), b))
            .collect();
        rest.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for (c, b) in rest.into_iter().take(extra.max(1)) {
            self.push_arc(a, b, c);
        }
        true
    }

    /// Adds every arc with negative reduced cost; returns the atoms touched.
    fn violations(&mut self) -> Vec<usize> {
        let (na, nb) = (self.atoms.len(), self.hubs.len());
        let mut touched = Vec::new();
        for a in 0..na {
            if self.atoms.weights[a] == 0.0 {
                continue;
            }
            let have: Vec<usize> = self.arcs[a].iter().map(|x| x.hub).collect();
            let mut added = false;
            for b in 0..nb {
                let c = self.cost(a, b);
                if c + self.pot[a] - self.pot[na + b] < -self.tol && !have.contains(&b) {
                    self.push_arc(a, b, c);
                    added = true;
                }
            }
            if added {
                touched.push(a);
            }
        }
        touched
    }

    /// Optimal plan and the final hub prices.
    fn solve(mut self) -> Result<(TransportPlan, Vec<f64>)> {
        for a in 0..self.atoms.len() {
            if self.atoms.weights[a] > 0.0 {
                self.reprice(a);
            }
        }
        loop {
            self.repair()?;
            let touched = self.violations();
            if touched.is_empty() {
                break;
            }
            for a in touched {
                self.reprice(a);
            }
        }
        let mut cost = 0.0;
        let mut flows = Vec::new();
        for (a, arcs) in self.arcs.iter().enumerate() {
            for arc in arcs {
                if arc.flow > 0.0 {
                    cost += arc.flow * arc.cost;
                    flows.push((a, arc.hub, arc.flow));
                }
            }
        }
        let na = self.atoms.len();
        let prices = self.pot[na..].to_vec();
        Ok((TransportPlan { cost, flows }, prices))
    }

    /// Successive shortest paths until no hub is out of balance.
    fn repair(&mut self) -> Result<()> {
        let (na, nb) = (self.atoms.len(), self.hubs.len());
        let n = na + nb;
        let mass_tol = self.mass_tol;
        let mut dist = vec![f64::INFINITY; n];
        let mut stamp = vec![0u32; n];
        let mut done = vec![0u32; n];
        let mut pred = vec![(usize::MAX, usize::MAX); n];
        let mut round = 0u32;
        let mut heap = BinaryHeap::new();
        let mut settled = Vec::new();
        let mut cursor = 0usize;
        loop {
            if !self.excess.iter().any(|&e| e > mass_tol) || !self.excess.iter().any(|&e| e < -mass_tol) {
                return Ok(());
            }
            round = round.wrapping_add(1);
            if round == 0 {
                stamp.iter_mut().for_each(|x| *x = 0);
                done.iter_mut().for_each(|x| *x = 0);
                round = 1;
            }
            heap.clear();
            settled.clear();
            while self.excess[cursor] <= mass_tol {
                cursor = (cursor + 1) % nb;
            }
            let src = na + cursor;
            dist[src] = 0.0;
            stamp[src] = round;
            pred[src] = (usize::MAX, usize::MAX);
            heap.push(Label(0.0, src));
            // a deficit hub's tentative label is final once nothing in the
            // heap is smaller
            let mut target: Option<(usize, f64)> = None;
            while let Some(&Label(d, v)) = heap.peek() {
                if target.is_some_and(|(_, td)| td <= d) {
                    break;
                }
                heap.pop();
                if done[v] == round || d > dist[v] {
                    continue;
                }
                done[v] = round;
                settled.push(v);
                if v >= na && self.excess[v - na] < -mass_tol {
                    target = Some((v, d));
                    break;
                }
                let pv = self.pot[v];
                let mut relax = |u: usize, rc: f64, via: usize, heap: &mut BinaryHeap<Label>| {
                    let nd = d + rc.max(0.0);
                    if stamp[u] != round || nd < dist[u] {
                        stamp[u] = round;
                        dist[u] = nd;
                        pred[u] = (v, via);
                        if u >= na && self.excess[u - na] < -mass_tol && target.is_none_or(|(_, td)| nd < td) {
                            target = Some((u, nd));
                        }
                        heap.push(Label(nd, u));
                    }
                };
                if v < na {
                    for (k, arc) in self.arcs[v].iter().enumerate() {
                        let u = na + arc.hub;
                        if done[u] != round {
                            relax(u, arc.cost + pv - self.pot[u], k, &mut heap);
                        }
                    }
                } else {
                    for &(a, k) in &self.hub_in[v - na] {
                        let arc = &self.arcs[a][k];
                        if arc.flow > 0.0 && done[a] != round {
                            relax(a, -arc.cost + pv - self.pot[a], k, &mut heap);
                        }
                    }
                }
            }
            let Some((t, big_d)) = target else {
                let stuck: f64 = self.excess.iter().filter(|e| **e > 0.0).sum();
                if stuck <= mass_tol * nb as f64 {
                    return Ok(());
                }
                // the reachable region holds no deficit: widen it
                let region: Vec<usize> = settled.iter().copied().filter(|&v| v < na).collect();
                let mut grew = false;
                for a in region {
                    let extra = self.arcs[a].len();
                    grew |= self.widen(a, extra);
                    self.reprice(a);
                }
                if !grew {
                    return Err(Error::Verification("transport graph cannot be balanced".into()));
                }
                continue;
            };
            for &v in &settled {
                self.pot[v] += dist[v] - big_d;
            }
            let mut amount = -self.excess[t - na];
            let mut v = t;
            while pred[v].0 != usize::MAX {
                let (u, k) = pred[v];
                if u >= na {
                    amount = amount.min(self.arcs[v][k].flow);
                }
                v = u;
            }
            let source = v;
            amount = amount.min(self.excess[source - na]);
            let mut v = t;
            while pred[v].0 != usize::MAX {
                let (u, k) = pred[v];
                if u >= na {
                    let arc = &mut self.arcs[v][k];
                    arc.flow -= amount;
                    if arc.flow < mass_tol * 1e-3 {
                        arc.flow = 0.0;
                    }
                } else {
                    self.arcs[u][k].flow += amount;
                }
                v = u;
            }
            self.excess[source - na] -= amount;
            self.excess[t - na] += amount;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(xs: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::uniform(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn examples() {
        let a = line(&[0.0, 2.0]);
        let b = line(&[1.0, 3.0]);
        assert_abs_diff_eq!(wasserstein_discrete(&a, &b, 1, Norm::Linf).unwrap(), 1.0, epsilon = 1e-15);
        for p in [1, 2] {
            let w = wasserstein_discrete(&line(&[0.0]), &line(&[1.0]), p, Norm::Linf).unwrap();
            assert_abs_diff_eq!(w, 1.0, epsilon = 1e-15);
            assert_eq!(wasserstein_discrete(&a, &a, p, Norm::Linf).unwrap(), 0.0);
        }
    }

    #[test]
    fn flow_matches_quantile_on_embedded_line() {
        let xs = [0.1, 0.5, 0.9, 1.7, 2.2];
        let ys = [0.0, 1.0, 3.0];
        let lift = |v: &[f64]| DiscreteMeasure::uniform(v.iter().map(|&x| vec![x, 0.0]).collect()).unwrap();
        for p in [1, 2] {
            let direct = wasserstein_discrete(&line(&xs), &line(&ys), p, Norm::Linf).unwrap();
            let flow = wasserstein_discrete(&lift(&xs), &lift(&ys), p, Norm::L2).unwrap();
            assert_abs_diff_eq!(direct, flow, epsilon = 1e-12);
        }
    }

    #[test]
    fn errors() {
        assert!(DiscreteMeasure::new(vec![], vec![]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0]], vec![0.5]).is_err());
        let a = line(&[0.0]);
        let b = DiscreteMeasure::uniform(vec![vec![0.0, 0.0]]).unwrap();
        assert!(wasserstein_discrete(&a, &b, 1, Norm::Linf).is_err());
    }
}
