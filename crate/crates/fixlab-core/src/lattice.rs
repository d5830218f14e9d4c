//! Event-level simulation of the full site-configuration dynamics.
//!
//! Each step picks a directed edge uniformly at random; if the two endpoint
//! states differ, the target flips to the source's type with the target
//! site's success probability (`beta` toward mutant, `1 - beta` toward
//! normal). On the line and circle the mutant set started from a single site
//! stays an interval / circular arc, so the configuration is carried as
//! `(start, len)` and asserted against that invariant in debug builds.

use crate::environment::{sample_landscape, FitnessLandscape};
use crate::error::{Error, Result};
use crate::estimate::FixationEstimate;
use crate::math::mean_and_std_error;
use crate::rng::StreamKey;
use rand::Rng;
use rayon::prelude::*;

/// Default draw cap for one `run_dynamics` call.
pub const DEFAULT_DYNAMICS_STEP_CAP: u64 = 10_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Line,
    Circle,
}

/// Nearest-neighbor lattice: a path or a cycle on `n_sites` sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    pub kind: TopologyKind,
    pub n_sites: usize,
}

impl Topology {
    pub fn line(n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::domain(format!("line needs at least 2 sites, got {n_sites}")));
        }
        Ok(Topology { kind: TopologyKind::Line, n_sites })
    }

    pub fn circle(n_sites: usize) -> Result<Self> {
        if n_sites < 3 {
            return Err(Error::domain(format!("circle needs at least 3 sites, got {n_sites}")));
        }
        Ok(Topology { kind: TopologyKind::Circle, n_sites })
    }

    pub fn kind_label(&self) -> &'static str {
        match self.kind {
            TopologyKind::Line => "line",
            TopologyKind::Circle => "circle",
        }
    }

    fn directed_edge_count(&self) -> usize {
        match self.kind {
            TopologyKind::Line => 2 * (self.n_sites - 1),
            TopologyKind::Circle => 2 * self.n_sites,
        }
    }
}

/// How reproduction events are drawn.
///
/// `Uniform` is the literal model: every directed edge, effective or not.
/// `Effective` draws uniformly among the (at most four) directed edges whose
/// endpoints disagree; conditioning a uniform edge on being effective is
/// uniform on the effective set, so the absorbed outcome has the same law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSampler {
    Uniform,
    Effective,
}

/// Mutant set as an interval/arc `{start, start+1, ..., start+len-1}`
/// (indices mod n on the circle).
struct Arc {
    start: usize,
    len: usize,
    n: usize,
    wraps: bool,
}

impl Arc {
    fn contains(&self, site: usize) -> bool {
        if self.wraps {
            (site + self.n - self.start) % self.n < self.len
        } else {
            site >= self.start && site < self.start + self.len
        }
    }

    fn left_inside(&self) -> usize {
        self.start
    }

    fn right_inside(&self) -> usize {
        if self.wraps {
            (self.start + self.len - 1) % self.n
        } else {
            self.start + self.len - 1
        }
    }

    fn left_outside(&self) -> Option<usize> {
        if self.wraps {
            Some((self.start + self.n - 1) % self.n)
        } else if self.start > 0 {
            Some(self.start - 1)
        } else {
            None
        }
    }

    fn right_outside(&self) -> Option<usize> {
        if self.wraps {
            Some((self.start + self.len) % self.n)
        } else if self.start + self.len < self.n {
            Some(self.start + self.len)
        } else {
            None
        }
    }

    fn grow_to(&mut self, site: usize) {
        if self.left_outside() == Some(site) {
            self.start = if self.wraps { (self.start + self.n - 1) % self.n } else { self.start - 1 };
            self.len += 1;
        } else {
            debug_assert_eq!(self.right_outside(), Some(site), "grew to a non-adjacent site");
            self.len += 1;
        }
    }

    fn shrink_at(&mut self, site: usize) {
        if site == self.left_inside() {
            self.start = if self.wraps { (self.start + 1) % self.n } else { self.start + 1 };
        } else {
            debug_assert_eq!(site, self.right_inside(), "shrank at a non-endpoint site");
        }
        self.len -= 1;
    }
}

/// Directed edge `(src, tgt)` for a uniform draw index.
fn decode_edge(topology: Topology, e: usize) -> (usize, usize) {
    let i = e / 2;
    let j = match topology.kind {
        TopologyKind::Line => i + 1,
        TopologyKind::Circle => (i + 1) % topology.n_sites,
    };
    if e % 2 == 0 {
        (i, j)
    } else {
        (j, i)
    }
}

/// Run the full dynamics from a single mutant at `initial_site` until
/// extinction or fixation. Returns true iff the mutant type fixed.
pub fn run_dynamics<R: Rng + ?Sized>(
    landscape: &FitnessLandscape,
    topology: Topology,
    initial_site: usize,
    sampler: EdgeSampler,
    rng: &mut R,
    step_cap: u64,
) -> Result<bool> {
    let n = topology.n_sites;
    if landscape.n_sites() != n {
        return Err(Error::domain(format!(
            "landscape has {} sites but topology has {n}",
            landscape.n_sites()
        )));
    }
    if initial_site >= n {
        return Err(Error::domain(format!("initial site {initial_site} out of range")));
    }
    let mut arc = Arc {
        start: initial_site,
        len: 1,
        n,
        wraps: topology.kind == TopologyKind::Circle,
    };
    let beta: Vec<f64> = (0..n).map(|k| landscape.beta(k)).collect();
    let edge_count = topology.directed_edge_count();

    for _ in 0..step_cap {
        if arc.len == 0 {
            return Ok(false);
        }
        if arc.len == n {
            return Ok(true);
        }
        debug_assert!(check_arc(&arc, topology, initial_site));
        let (src, tgt) = match sampler {
            EdgeSampler::Uniform => {
                let (src, tgt) = decode_edge(topology, rng.random_range(0..edge_count));
                if arc.contains(src) == arc.contains(tgt) {
                    // Same-state edge: structurally a no-op.
                    continue;
                }
                (src, tgt)
            }
            EdgeSampler::Effective => {
                let mut edges = [(0usize, 0usize); 4];
                let mut k = 0;
                let mut push = |inside: usize, outside: usize| {
                    edges[k] = (inside, outside);
                    edges[k + 1] = (outside, inside);
                    k += 2;
                };
                if let Some(o) = arc.left_outside() {
                    push(arc.left_inside(), o);
                }
                if let Some(o) = arc.right_outside() {
                    push(arc.right_inside(), o);
                }
                debug_assert!(k > 0, "non-absorbed state must have a boundary");
                edges[rng.random_range(0..k)]
            }
        };
        if arc.contains(src) {
            // Mutant invades the normal target with probability beta[tgt].
            if rng.random::<f64>() < beta[tgt] {
                arc.grow_to(tgt);
            }
        } else if rng.random::<f64>() < 1.0 - beta[tgt] {
            arc.shrink_at(tgt);
        }
    }
    Err(Error::StepCapExceeded { cap: step_cap, replicate: None })
}

/// Interval/arc invariant, recomputed from scratch for debug assertions:
/// a nonempty proper arc never touches a missing line end past its bounds
/// and always has start/len inside range.
fn check_arc(arc: &Arc, topology: Topology, _initial: usize) -> bool {
    let ok_len = arc.len >= 1 && arc.len < arc.n && arc.start < arc.n;
    match topology.kind {
        TopologyKind::Circle => ok_len,
        TopologyKind::Line => ok_len && arc.start + arc.len <= arc.n,
    }
}

/// Annealed lattice estimate: each replicate draws a fresh landscape and
/// runs the dynamics once from a single mutant at site 1 (index 0).
/// Deterministic per seed, independent of worker count.
pub fn estimate_fixation(
    topology: Topology,
    delta: f64,
    replicates: u64,
    seed: u64,
    sampler: EdgeSampler,
) -> Result<FixationEstimate> {
    if replicates < 2 {
        return Err(Error::domain(format!(
            "need at least 2 replicates, got {replicates}"
        )));
    }
    let tag = format!("lattice-sim-{}", topology.kind_label());
    let values: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut rng = StreamKey::for_experiment(seed, &tag, r).rng();
            let landscape = sample_landscape(topology.n_sites, delta, &mut rng)?;
            match run_dynamics(&landscape, topology, 0, sampler, &mut rng, DEFAULT_DYNAMICS_STEP_CAP)
            {
                Ok(fixed) => Ok(if fixed { 1.0 } else { 0.0 }),
                Err(Error::StepCapExceeded { cap, .. }) => {
                    Err(Error::StepCapExceeded { cap, replicate: Some(r) })
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std_error) = mean_and_std_error(&values);
    Ok(FixationEstimate {
        mean,
        std_error,
        replicates,
        seed: Some(seed),
        n_sites: topology.n_sites,
        delta,
    })
}
