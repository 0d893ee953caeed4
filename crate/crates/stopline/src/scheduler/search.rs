//! Best-first branch and bound over slot lengths.
//!
//! Slots are fixed in chronological order; a frontier node is a prefix of
//! slot lengths. The frontier pops cheapest lower bound first, so competing
//! head-slot lengths are compared almost immediately rather than after the
//! tail has been enumerated. That matters because the caller acts only on
//! the first slot of whatever incumbent exists when the budget runs out.
//! Every popped node prices its all-minimum completion through the real
//! dispatcher, keeping a feasible incumbent from the first pop on.
//!
//! Expansion order never changes a completed search's answer: the incumbent
//! tie rule (smaller value, then lex-smaller lengths) picks the same plan a
//! full enumeration would, nodes are discarded only when they cannot beat
//! or tie the incumbent, and the heap drains before the search claims
//! optimality.
//!
//! Node pricing:
//! - a lower bound relaxing future service: each phase's pending clusters
//!   are served contiguously from the earliest instant the phase can next
//!   open (all intervening slots at minimum green), ignoring window caps;
//! - a completion probe pricing the all-minimum tail exactly.
//!
//! Instead of a wall clock the search spends a node budget derived from the
//! configured time limit, so a run's outcome depends only on its inputs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::{Cluster, InflowSample, PhaseModel, SignalTimingPlan};

use super::dispatch::{dispatch_value, MIN_FRAGMENT};

/// Slack added to the incumbent before pruning, so bound arithmetic noise
/// never cuts off an equal-value plan that the tie rule should see.
pub(super) const PRUNE_EPS: f64 = 1e-9;

/// Dispatch state of one (sample, phase) queue at the end of a fixed slot
/// prefix. `rem` is the unserved remainder of cluster `next`.
#[derive(Clone, Copy, Debug)]
struct QueueCell {
    next: usize,
    rem: f64,
    cursor: f64,
}

#[derive(Clone, Debug)]
struct NodeState {
    /// Indexed `sample * phase_count + phase`.
    cells: Vec<QueueCell>,
    delay: f64,
}

/// Serves queue `cell` within the window `[ws, we]`, returning added delay.
/// Exactly mirrors the window step of `dispatch_with`; the two must agree or
/// bounds and probes would price a different problem than the dispatcher.
#[inline]
fn serve_window(clusters: &[Cluster], cell: &mut QueueCell, ws: f64, we: f64) -> f64 {
    let mut delay = 0.0;
    while cell.next < clusters.len() {
        let c = &clusters[cell.next];
        if c.length <= 0.0 {
            cell.next += 1;
            if cell.next < clusters.len() {
                cell.rem = clusters[cell.next].length;
            }
            continue;
        }
        let start = cell.cursor.max(c.arrival).max(ws);
        let avail = we - start;
        let need = MIN_FRAGMENT.min(cell.rem);
        if avail < need {
            break;
        }
        let take = cell.rem.min(avail);
        delay += (start - c.arrival) * c.count * take / c.length;
        cell.cursor = start + take;
        cell.rem -= take;
        if cell.rem > 0.0 {
            break;
        }
        cell.next += 1;
        if cell.next < clusters.len() {
            cell.rem = clusters[cell.next].length;
        }
    }
    delay
}

/// Serves everything still queued in one unbounded window opening at the
/// plan horizon, mirroring the spill branch of `dispatch_with`.
#[inline]
fn serve_spill(clusters: &[Cluster], cell: &mut QueueCell, h_end: f64) -> f64 {
    let mut delay = 0.0;
    while cell.next < clusters.len() {
        let c = &clusters[cell.next];
        if c.length > 0.0 {
            let start = cell.cursor.max(c.arrival).max(h_end);
            delay += (start - c.arrival) * c.count * cell.rem / c.length;
            cell.cursor = start + cell.rem;
        }
        cell.next += 1;
        if cell.next < clusters.len() {
            cell.rem = clusters[cell.next].length;
        }
    }
    delay
}

/// Remaining delay of one queue with service contiguous from `open`,
/// window caps and cross-phase exclusivity relaxed.
#[inline]
fn queue_bound(clusters: &[Cluster], cell: &QueueCell, open: f64) -> f64 {
    if cell.next >= clusters.len() {
        return 0.0;
    }
    let mut lb = 0.0;
    let mut t = open.max(cell.cursor);
    for (q, c) in clusters.iter().enumerate().skip(cell.next) {
        if c.length <= 0.0 {
            continue;
        }
        let r = if q == cell.next { cell.rem } else { c.length };
        if r <= 0.0 {
            continue;
        }
        let start = t.max(c.arrival);
        lb += (start - c.arrival) * c.count * r / c.length;
        t = start + r;
    }
    lb
}

/// One stored prefix: the length that extends the parent's prefix. Walking
/// the parent chain reconstructs the whole vector.
#[derive(Clone, Copy, Debug)]
struct NodeRec {
    parent: u32,
    len: i64,
    depth: u16,
}

/// Heap entry ordered so the cheapest bound pops first and equal bounds pop
/// in insertion order, making the expansion sequence a total order.
struct Frontier {
    lb: f64,
    seq: u32,
    node: u32,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Frontier {}
impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Inverted on both keys: BinaryHeap is a max-heap.
        other.lb.total_cmp(&self.lb).then(other.seq.cmp(&self.seq))
    }
}

pub(super) struct Search<'a> {
    pm: &'a PhaseModel,
    first_phase: usize,
    horizon_cycles: usize,
    green_start: i64,
    k: usize,
    n_slots: usize,
    slot_phase: Vec<usize>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    y: Vec<i64>,
    samples: &'a [InflowSample],
    clusters: Vec<&'a [Cluster]>,
    n_samples: usize,

    pub best_total: f64,
    pub best_lengths: Vec<i64>,
    pub nodes: u64,
    pub dispatches: u64,
    pub aborted: bool,
    budget: u64,

    root: NodeState,
    /// Replayed state of the node being expanded.
    cur: NodeState,
    scratch: NodeState,
    /// Phase row of the child being priced, one cell per sample.
    row: Vec<QueueCell>,
    opens: Vec<f64>,
    prefix: Vec<i64>,
    /// Last probed completion; a child's probe repeats its parent's when the
    /// prefix extends by the minimum length, so one entry removes the chain.
    last_probe: Vec<i64>,
    arena: Vec<NodeRec>,
    heap: BinaryHeap<Frontier>,
    seq: u32,
}

impl<'a> Search<'a> {
    #[allow(clippy::too_many_arguments)]
    pub(super) fn new(
        pm: &'a PhaseModel,
        first_phase: usize,
        horizon_cycles: usize,
        green_start: i64,
        lo: Vec<i64>,
        hi: Vec<i64>,
        samples: &'a [InflowSample],
        budget: u64,
    ) -> Self {
        let k = pm.len();
        let n_slots = k * horizon_cycles;
        let slot_phase: Vec<usize> = (0..n_slots).map(|j| (first_phase + j) % k).collect();
        let y: Vec<i64> = slot_phase.iter().map(|&p| pm.phase(p).intergreen).collect();
        let n_samples = samples.len();
        let mut clusters = Vec::with_capacity(n_samples * k);
        let mut cells = Vec::with_capacity(n_samples * k);
        for s in samples {
            for phase_clusters in &s.per_phase {
                clusters.push(phase_clusters.as_slice());
                cells.push(QueueCell {
                    next: 0,
                    rem: phase_clusters.first().map_or(0.0, |c| c.length),
                    cursor: f64::NEG_INFINITY,
                });
            }
        }
        let root = NodeState { cells, delay: 0.0 };
        Search {
            pm,
            first_phase,
            horizon_cycles,
            green_start,
            k,
            n_slots,
            slot_phase,
            lo,
            hi,
            y,
            samples,
            clusters,
            n_samples,
            best_total: f64::INFINITY,
            best_lengths: Vec::new(),
            nodes: 0,
            dispatches: 0,
            aborted: false,
            budget,
            cur: root.clone(),
            scratch: root.clone(),
            root,
            row: vec![QueueCell { next: 0, rem: 0.0, cursor: 0.0 }; n_samples],
            opens: vec![-1.0; k],
            prefix: Vec::with_capacity(n_slots),
            last_probe: Vec::new(),
            arena: vec![NodeRec { parent: 0, len: 0, depth: 0 }],
            heap: BinaryHeap::new(),
            seq: 0,
        }
    }

    /// Prices a length vector through the real dispatcher, summed over all
    /// samples. Every accepted incumbent and every reported objective comes
    /// from this fold, in this order.
    pub(super) fn eval_lengths(&mut self, lengths: &[i64]) -> f64 {
        let plan = SignalTimingPlan::from_lengths(
            self.pm,
            self.first_phase,
            self.horizon_cycles,
            self.green_start,
            lengths,
        );
        self.dispatches += 1;
        let mut total = 0.0;
        for s in self.samples {
            total += dispatch_value(&plan, s);
        }
        total
    }

    /// Applies the incumbent rule to an already priced candidate: strictly
    /// smaller total wins, equal total goes to the lexicographically smaller
    /// length vector. Exact float comparison is deliberate; both sides come
    /// from `eval_lengths`.
    pub(super) fn offer(&mut self, lengths: &[i64], total: f64) {
        if total < self.best_total
            || (total == self.best_total && lengths < self.best_lengths.as_slice())
        {
            self.best_total = total;
            self.best_lengths = lengths.to_vec();
        }
    }

    pub(super) fn consider(&mut self, lengths: &[i64]) {
        if lengths == self.best_lengths.as_slice() {
            return;
        }
        let total = self.eval_lengths(lengths);
        self.offer(lengths, total);
    }

    pub(super) fn run(&mut self) {
        let (depth, t_cursor, last_end) = self.replay(0);
        self.compute_opens(depth, t_cursor, last_end);
        let lb = self.cur.delay + self.relaxation();
        self.heap.push(Frontier { lb, seq: 0, node: 0 });
        self.seq = 1;
        while let Some(top) = self.heap.pop() {
            // Cheapest first: once the best frontier bound cannot beat or
            // tie the incumbent, nothing left can.
            if top.lb >= self.best_total + PRUNE_EPS {
                break;
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                self.aborted = true;
                break;
            }
            self.expand(top.node);
            if self.aborted {
                break;
            }
        }
        self.heap.clear();
    }

    /// Rebuilds `prefix` and `cur` for an arena node. Returns its depth and
    /// the window cursor and previous slot end right after the prefix.
    fn replay(&mut self, node: u32) -> (usize, i64, i64) {
        self.prefix.clear();
        let mut at = node;
        while at != 0 {
            let rec = self.arena[at as usize];
            self.prefix.push(rec.len);
            at = rec.parent;
        }
        self.prefix.reverse();
        debug_assert_eq!(self.prefix.len(), self.arena[node as usize].depth as usize);
        self.cur.clone_from(&self.root);
        let mut t = self.green_start;
        let mut last = self.green_start;
        for j in 0..self.prefix.len() {
            let len = self.prefix[j];
            let p = self.slot_phase[j];
            let ws = t as f64;
            let we = (t + len) as f64;
            let mut delta = 0.0;
            for s in 0..self.n_samples {
                let idx = s * self.k + p;
                delta += serve_window(self.clusters[idx], &mut self.cur.cells[idx], ws, we);
            }
            self.cur.delay += delta;
            last = t + len;
            t = last + self.y[j];
        }
        (self.prefix.len(), t, last)
    }

    /// Earliest instant each phase could next receive green (or spill), with
    /// every remaining slot at its minimum length. `t_cursor` is the start
    /// of slot `depth`; `last_end` the end of slot `depth - 1`.
    fn compute_opens(&mut self, depth: usize, t_cursor: i64, last_end: i64) {
        // Infinity marks "no window seen yet"; real opening times can be
        // negative (slot 0 may have started in the past), so no finite
        // sentinel is safe.
        self.opens.iter_mut().for_each(|v| *v = f64::INFINITY);
        let mut t = t_cursor;
        let mut h_min = last_end;
        for j in depth..self.n_slots {
            let p = self.slot_phase[j];
            if self.opens[p].is_infinite() {
                self.opens[p] = t as f64;
            }
            h_min = t + self.lo[j];
            t = h_min + self.y[j];
        }
        for v in self.opens.iter_mut() {
            if v.is_infinite() {
                // No remaining window: first opportunity is the spill at the
                // earliest possible horizon end.
                *v = h_min as f64;
            }
        }
    }

    /// Admissible lower bound on the remaining delay of `cur`.
    fn relaxation(&self) -> f64 {
        let mut lb = 0.0;
        for s in 0..self.n_samples {
            for p in 0..self.k {
                let idx = s * self.k + p;
                lb += queue_bound(self.clusters[idx], &self.cur.cells[idx], self.opens[p]);
            }
        }
        lb
    }

    /// Bound for a child that fixes the slot at `depth` to some length: the
    /// served phase's cells live in `row`, everything else still in `cur`.
    /// `opens` must already describe the child's remaining slots.
    fn child_bound(&self, served: usize, delay: f64) -> f64 {
        let mut lb = delay;
        for s in 0..self.n_samples {
            for p in 0..self.k {
                let idx = s * self.k + p;
                let cell = if p == served { &self.row[s] } else { &self.cur.cells[idx] };
                lb += queue_bound(self.clusters[idx], cell, self.opens[p]);
            }
        }
        lb
    }

    /// Exact value of the lex-first completion of `cur`: all remaining slots
    /// at their minimum length, then the spill.
    fn completion_value(&mut self, depth: usize, t_cursor: i64, last_end: i64) -> f64 {
        self.scratch.clone_from(&self.cur);
        let mut acc = 0.0;
        let mut t = t_cursor;
        let mut last = last_end;
        for j in depth..self.n_slots {
            let p = self.slot_phase[j];
            let ws = t as f64;
            last = t + self.lo[j];
            let we = last as f64;
            for s in 0..self.n_samples {
                let idx = s * self.k + p;
                acc += serve_window(self.clusters[idx], &mut self.scratch.cells[idx], ws, we);
            }
            t = last + self.y[j];
        }
        let h = last as f64;
        for idx in 0..self.scratch.cells.len() {
            acc += serve_spill(self.clusters[idx], &mut self.scratch.cells[idx], h);
        }
        self.scratch.delay + acc
    }

    fn expand(&mut self, node: u32) {
        let (depth, t_cursor, last_end) = self.replay(node);

        let comp = self.completion_value(depth, t_cursor, last_end);
        if comp < self.best_total + PRUNE_EPS {
            let mut cand = self.prefix.clone();
            cand.extend_from_slice(&self.lo[depth..]);
            if cand != self.last_probe {
                self.consider(&cand);
                self.last_probe = cand;
            }
        }

        if depth == self.n_slots {
            return;
        }

        let p = self.slot_phase[depth];
        let ws = t_cursor as f64;
        for len in self.lo[depth]..=self.hi[depth] {
            self.nodes += 1;
            if self.nodes > self.budget {
                self.aborted = true;
                return;
            }
            for s in 0..self.n_samples {
                self.row[s] = self.cur.cells[s * self.k + p];
            }
            let we = (t_cursor + len) as f64;
            let mut delay = self.cur.delay;
            for s in 0..self.n_samples {
                delay += serve_window(self.clusters[s * self.k + p], &mut self.row[s], ws, we);
            }
            self.compute_opens(depth + 1, t_cursor + len + self.y[depth], t_cursor + len);
            let lb = self.child_bound(p, delay);
            if lb >= self.best_total + PRUNE_EPS {
                continue;
            }
            let rec = NodeRec { parent: node, len, depth: (depth + 1) as u16 };
            let idx = self.arena.len() as u32;
            self.arena.push(rec);
            self.heap.push(Frontier { lb, seq: self.seq, node: idx });
            self.seq += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Phase;
    use crate::model::TurnMovement;
    use crate::model::{PhaseModel, RoadId};
    use crate::scheduler::dispatch::dispatch_sample;

    fn pm(k: usize, g_min: i64, g_max: i64, y: i64) -> PhaseModel {
        PhaseModel::new(
            (0..k)
                .map(|i| Phase {
                    turns: vec![TurnMovement {
                        entry: RoadId(2 * i as u32),
                        exit: RoadId(2 * i as u32 + 1),
                    }],
                    g_min,
                    g_max,
                    intergreen: y,
                })
                .collect(),
        )
    }

    fn cl(arrival: f64, length: f64, count: f64) -> Cluster {
        Cluster { arrival, length, count, members: Vec::new() }
    }

    #[test]
    fn serve_window_agrees_with_dispatch_on_a_window_sequence() {
        let pm = pm(2, 5, 55, 5);
        let plan = SignalTimingPlan::from_lengths(&pm, 0, 2, 0, &[8, 5, 8, 5]);
        let sample = InflowSample {
            per_phase: vec![vec![cl(2.0, 10.0, 4.0), cl(20.0, 2.5, 1.0)], vec![cl(0.0, 5.0, 2.0)]],
        };
        let (_, want) = dispatch_sample(&plan, &sample);

        // Same plan replayed slot by slot through the incremental cells.
        let mut cells: Vec<QueueCell> = sample
            .per_phase
            .iter()
            .map(|c| QueueCell {
                next: 0,
                rem: c.first().map_or(0.0, |c| c.length),
                cursor: f64::NEG_INFINITY,
            })
            .collect();
        let mut got = 0.0;
        for (j, iv) in plan.slots.iter().enumerate() {
            let p = plan.slot_phase(j);
            got += serve_window(&sample.per_phase[p], &mut cells[p], iv.start as f64, iv.end as f64);
        }
        let h = plan.horizon_end() as f64;
        for (p, cell) in cells.iter_mut().enumerate() {
            got += serve_spill(&sample.per_phase[p], cell, h);
        }
        assert!((got - want).abs() < 1e-12, "incremental {got} vs dispatch {want}");
    }

    #[test]
    fn completion_probe_prices_the_all_minimum_tail() {
        let pm2 = pm(2, 5, 55, 5);
        let sample = InflowSample { per_phase: vec![vec![cl(0.0, 10.0, 4.0)], vec![]] };
        let samples = [sample.clone()];
        let mut search = Search::new(&pm2, 0, 1, 0, vec![5, 5], vec![55, 55], &samples, 1_000);
        let (depth, t_cursor, last_end) = search.replay(0);
        assert_eq!((depth, t_cursor, last_end), (0, 0, 0));
        let comp = search.completion_value(0, 0, 0);
        let plan = SignalTimingPlan::from_lengths(&pm2, 0, 1, 0, &[5, 5]);
        let (_, want) = dispatch_sample(&plan, &sample);
        assert!((comp - want).abs() < 1e-12);
        // The all-minimum completion strands half the cluster past the
        // horizon; a longer first slot clears it. The bound must not price
        // pending work at the all-minimum completion, or it would prune the
        // better subtree.
        search.compute_opens(0, 0, 0);
        let lb = search.relaxation();
        assert_eq!(lb, 0.0, "phase 0 can open immediately, bound must allow zero delay");
        assert!(comp > 0.0);
    }

    #[test]
    fn head_slot_alternatives_are_explored_under_a_small_budget() {
        // One long phase-0 cluster and one short phase-1 cluster arriving
        // now: the best plan cuts phase 0 short. A budget two orders below
        // the tree size must still find it, which requires the search to
        // compare first-slot lengths instead of enumerating tails.
        let pm2 = pm(2, 1, 50, 5);
        let sample = InflowSample {
            per_phase: vec![vec![cl(30.0, 10.0, 4.0)], vec![cl(0.0, 2.5, 6.0)]],
        };
        let samples = [sample];
        let mut search =
            Search::new(&pm2, 0, 1, 0, vec![1, 1], vec![50, 50], &samples, 300);
        search.consider(&[1, 1]);
        search.run();
        assert_eq!(search.best_lengths[0], 1, "phase 0 should close immediately");
    }
}
