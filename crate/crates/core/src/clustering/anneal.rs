use rand::seq::SliceRandom;
use rand::Rng;

use super::{canonical, edge_cost, AnnealingSchedule, Compact, InitialState};
use crate::seed;

fn initial_labels(g: &Compact, cap: usize, state: InitialState, rng: &mut seed::Rng) -> Vec<usize> {
    let n = g.ids.len();
    let raw: Vec<usize> = match state {
        InitialState::Random => return (0..n).map(|_| rng.random_range(0..cap)).collect(),
        InitialState::Singletons => (0..n).collect(),
        InitialState::PositiveComponents => g.positive_components(None),
    };
    // Keep the largest groups when the cap is exceeded; fold the rest into
    // the last admissible cluster.
    let canon = canonical(&raw);
    let groups = canon.iter().max().map_or(0, |m| m + 1);
    if groups <= cap {
        return canon;
    }
    let mut sizes = vec![0usize; groups];
    for &l in &canon {
        sizes[l] += 1;
    }
    let mut order: Vec<usize> = (0..groups).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut rank = vec![0usize; groups];
    for (r, &l) in order.iter().enumerate() {
        rank[l] = r.min(cap - 1);
    }
    canon.iter().map(|&l| rank[l]).collect()
}

/// Tracks which of the `cap` label slots are occupied so a uniformly random
/// occupied cluster can be drawn in O(1).
struct Occupancy {
    sizes: Vec<usize>,
    active: Vec<usize>,
    position: Vec<usize>,
}

impl Occupancy {
    fn new(labels: &[usize], cap: usize) -> Self {
        let mut sizes = vec![0; cap];
        for &l in labels {
            sizes[l] += 1;
        }
        let mut occ = Occupancy { sizes: vec![0; cap], active: Vec::new(), position: vec![usize::MAX; cap] };
        for (l, &s) in sizes.iter().enumerate() {
            for _ in 0..s {
                occ.add(l);
            }
        }
        occ
    }

    fn add(&mut self, l: usize) {
        if self.sizes[l] == 0 {
            self.position[l] = self.active.len();
            self.active.push(l);
        }
        self.sizes[l] += 1;
    }

    fn remove(&mut self, l: usize) {
        self.sizes[l] -= 1;
        if self.sizes[l] == 0 {
            let pos = self.position[l];
            let last = *self.active.last().expect("label was active");
            self.active.swap_remove(pos);
            if last != l {
                self.position[last] = pos;
            }
            self.position[l] = usize::MAX;
        }
    }

    fn free_slot(&self) -> Option<usize> {
        self.sizes.iter().position(|&s| s == 0)
    }
}

/// One annealing run with single-node reassignment moves and a geometric
/// cooling schedule. Returns the best labelling visited.
pub(super) fn run(g: &Compact, cap: usize, state: InitialState, schedule: &AnnealingSchedule, seed: u64) -> Vec<usize> {
    let n = g.ids.len();
    let mut rng = seed::rng(seed);
    let mut labels = initial_labels(g, cap, state, &mut rng);
    if n < 2 {
        return labels;
    }
    let mut occ = Occupancy::new(&labels, cap);
    let mut current = g.loss(&labels);
    let mut best = labels.clone();
    let mut best_loss = current;
    let mut temperature = schedule.initial_temperature;

    // Node visiting order is reshuffled each sweep; this reaches every node
    // equally often without changing the move distribution's support.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;

    for _ in 0..schedule.iterations {
        if cursor == n {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let v = order[cursor];
        cursor += 1;
        let from = labels[v];

        let existing = occ.active.len();
        let can_open = existing < cap;
        let pick = rng.random_range(0..existing + usize::from(can_open));
        let to = if pick == existing {
            if occ.sizes[from] == 1 {
                temperature *= schedule.decay;
                continue;
            }
            occ.free_slot().expect("below cap implies a free slot")
        } else {
            occ.active[pick]
        };
        if to == from {
            temperature *= schedule.decay;
            continue;
        }

        let mut delta = 0.0;
        for &(u, w) in &g.adjacency[v] {
            let lu = labels[u];
            delta += edge_cost(lu == to, w) - edge_cost(lu == from, w);
        }
        let accept = delta <= 0.0 || (temperature > 0.0 && rng.random::<f64>() < (-delta / temperature).exp());
        if accept {
            occ.remove(from);
            occ.add(to);
            labels[v] = to;
            current += delta;
            if current < best_loss - 1e-9 {
                best_loss = current;
                best.copy_from_slice(&labels);
            }
        }
        temperature *= schedule.decay;
    }
    best
}
