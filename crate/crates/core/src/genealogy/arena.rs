use std::io::Write;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::stable_motion::PathGrid;

/// Index of a node in a [`GenealogyArena`].
pub type NodeId = u32;

const NO_PARENT: u32 = u32::MAX;

#[inline]
pub(crate) fn trapezoid(t0: f64, f0: f64, t1: f64, f1: f64) -> f64 {
    0.5 * (t1 - t0) * (f0 + f1)
}

#[derive(Clone, Debug)]
struct Node {
    parent: u32,
    /// `(t, x_1..x_d)` records; the first one is the birth sample.
    samples: SmallVec<[f64; 4]>,
}

/// Tree of path segments. Each node holds the samples of one lineage between
/// its birth and its next fork; a lineage's history is the chain of segments
/// from a root. Parents always have smaller ids than their children.
#[derive(Clone, Debug)]
pub struct GenealogyArena {
    dim: usize,
    nodes: Vec<Node>,
}

impl GenealogyArena {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            nodes: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A root born at time 0 at `x`.
    pub fn add_root(&mut self, x: &[f64]) -> NodeId {
        debug_assert_eq!(x.len(), self.dim);
        self.push_node(NO_PARENT, 0.0, x)
    }

    /// A child of `parent` born at `time` at `x`.
    pub fn fork(&mut self, parent: NodeId, time: f64, x: &[f64]) -> Result<NodeId> {
        self.check_id(parent)?;
        let last = self.last_time(parent);
        if !(time > self.birth_time(parent)) || time < last {
            return Err(Error::param(
                "time",
                format!("fork at {time} of node {parent} born at {}", self.birth_time(parent)),
            ));
        }
        if x.len() != self.dim {
            return Err(Error::param("x", format!("expected {} coordinates", self.dim)));
        }
        Ok(self.fork_unchecked(parent, time, x))
    }

    #[inline]
    pub(crate) fn fork_unchecked(&mut self, parent: NodeId, time: f64, x: &[f64]) -> NodeId {
        self.push_node(parent, time, x)
    }

    fn push_node(&mut self, parent: u32, time: f64, x: &[f64]) -> NodeId {
        let id = self.nodes.len() as NodeId;
        let mut samples = SmallVec::new();
        samples.push(time);
        samples.extend_from_slice(x);
        self.nodes.push(Node { parent, samples });
        id
    }

    /// Appends a sample to a node's segment.
    pub fn push_sample(&mut self, node: NodeId, time: f64, x: &[f64]) -> Result<()> {
        self.check_id(node)?;
        let last = self.last_time(node);
        if !(time >= last) {
            return Err(Error::param(
                "time",
                format!("sample at {time} precedes the segment end {last}"),
            ));
        }
        if x.len() != self.dim {
            return Err(Error::param("x", format!("expected {} coordinates", self.dim)));
        }
        self.push_unchecked(node, time, x);
        Ok(())
    }

    #[inline]
    pub(crate) fn push_unchecked(&mut self, node: NodeId, time: f64, x: &[f64]) {
        let s = &mut self.nodes[node as usize].samples;
        s.push(time);
        s.extend_from_slice(x);
    }

    fn check_id(&self, id: NodeId) -> Result<()> {
        if (id as usize) < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::Corruption(format!(
                "node {id} does not exist ({} nodes)",
                self.nodes.len()
            )))
        }
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        match self.nodes[id as usize].parent {
            NO_PARENT => None,
            p => Some(p),
        }
    }

    pub fn birth_time(&self, id: NodeId) -> f64 {
        self.nodes[id as usize].samples[0]
    }

    /// Time of the last sample in the node's segment.
    pub fn last_time(&self, id: NodeId) -> f64 {
        let s = &self.nodes[id as usize].samples;
        s[s.len() - (self.dim + 1)]
    }

    /// Number of samples in the node's segment.
    pub fn segment_len(&self, id: NodeId) -> usize {
        self.nodes[id as usize].samples.len() / (self.dim + 1)
    }

    /// The `(time, position)` samples of one segment.
    pub fn segment(&self, id: NodeId) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.nodes[id as usize]
            .samples
            .chunks_exact(self.dim + 1)
            .map(|c| (c[0], &c[1..]))
    }

    /// Node ids from the root down to `id`.
    pub fn lineage(&self, id: NodeId) -> Result<Vec<NodeId>> {
        self.check_id(id)?;
        let mut chain = vec![id];
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            if p >= cur {
                return Err(Error::Corruption(format!(
                    "node {cur} has parent {p}, which does not precede it"
                )));
            }
            chain.push(p);
            cur = p;
        }
        if self.birth_time(cur) != 0.0 {
            return Err(Error::Corruption(format!(
                "root {cur} is born at {}, not 0",
                self.birth_time(cur)
            )));
        }
        chain.reverse();
        Ok(chain)
    }

    /// The ancestral path of `id` on `[0, t]`, held constant after its last
    /// sample.
    pub fn ancestral_path(&self, id: NodeId, t: f64) -> Result<AncestralPath> {
        if !(t >= 0.0) {
            return Err(Error::param("t", format!("{t} must be non-negative")));
        }
        let d = self.dim;
        let mut times: Vec<f64> = Vec::new();
        let mut positions: Vec<f64> = Vec::new();
        for node in self.lineage(id)? {
            for (s, x) in self.segment(node) {
                if s > t {
                    break;
                }
                if times.last() == Some(&s) {
                    // A zero-length step: keep the later record.
                    let n = positions.len();
                    positions[n - d..].copy_from_slice(x);
                } else {
                    times.push(s);
                    positions.extend_from_slice(x);
                }
            }
        }
        Ok(AncestralPath {
            grid: PathGrid::new(d, times, positions)?,
            end: t,
        })
    }

    /// `∫_0^t f(path(s)) ds` along each listed lineage by the trapezoid rule on
    /// the recorded samples.
    ///
    /// The sum runs sample by sample from the root, so it reproduces the
    /// running sums of the simulation bit for bit, and is unchanged by
    /// [`prune`](Self::prune).
    pub fn path_integrals(
        &self,
        leaves: &[NodeId],
        f: &dyn Fn(&[f64]) -> f64,
        t: f64,
    ) -> Result<Vec<f64>> {
        for &l in leaves {
            self.lineage(l)?;
        }
        let n = self.nodes.len();
        let mut needed = vec![false; n];
        for &l in leaves {
            let mut cur = Some(l);
            while let Some(c) = cur {
                if needed[c as usize] {
                    break;
                }
                needed[c as usize] = true;
                cur = self.parent(c);
            }
        }
        // (running sum, time, f value) at the end of each needed segment.
        let mut end: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 0.0); n];
        for id in 0..n {
            if !needed[id] {
                continue;
            }
            let mut state: Option<(f64, f64, f64)> =
                self.parent(id as NodeId).map(|p| end[p as usize]);
            for (s, x) in self.segment(id as NodeId) {
                if s > t {
                    break;
                }
                let v = f(x);
                state = Some(match state {
                    None => (0.0, s, v),
                    Some((acc, s0, v0)) => (acc + trapezoid(s0, v0, s, v), s, v),
                });
            }
            end[id] = state.unwrap_or((0.0, 0.0, 0.0));
        }
        Ok(leaves.iter().map(|&l| end[l as usize].0).collect())
    }

    /// Drops nodes without a living descendant and merges single-child
    /// chains. `living` is rewritten to the new ids; ancestral paths of
    /// living lineages are unchanged.
    pub fn prune(&mut self, living: &mut [NodeId]) -> Result<()> {
        for &l in living.iter() {
            self.check_id(l)?;
        }
        let n = self.nodes.len();
        let mut needed = vec![false; n];
        let mut is_living = vec![false; n];
        for &l in living.iter() {
            is_living[l as usize] = true;
            let mut cur = l;
            loop {
                if needed[cur as usize] {
                    break;
                }
                needed[cur as usize] = true;
                match self.parent(cur) {
                    Some(p) if p < cur => cur = p,
                    Some(p) => {
                        return Err(Error::Corruption(format!(
                            "node {cur} has parent {p}, which does not precede it"
                        )))
                    }
                    None => break,
                }
            }
        }
        let mut children = vec![0u32; n];
        for id in 0..n {
            if needed[id] {
                if let Some(p) = self.parent(id as NodeId) {
                    children[p as usize] += 1;
                }
            }
        }
        let old = std::mem::take(&mut self.nodes);
        let mut rep = vec![NO_PARENT; n];
        for (id, node) in old.into_iter().enumerate() {
            if !needed[id] {
                continue;
            }
            match node.parent {
                NO_PARENT => {
                    rep[id] = self.nodes.len() as u32;
                    self.nodes.push(node);
                }
                p if children[p as usize] == 1 && !is_living[p as usize] => {
                    let target = rep[p as usize];
                    self.nodes[target as usize]
                        .samples
                        .extend_from_slice(&node.samples);
                    rep[id] = target;
                }
                p => {
                    rep[id] = self.nodes.len() as u32;
                    self.nodes.push(Node {
                        parent: rep[p as usize],
                        samples: node.samples,
                    });
                }
            }
        }
        for l in living.iter_mut() {
            *l = rep[*l as usize];
        }
        Ok(())
    }

    /// Checks the structural invariants: parents precede and are born before
    /// their children, segments are ordered, roots start at 0 and every
    /// living id resolves.
    pub fn check_integrity(&self, living: &[NodeId]) -> Result<()> {
        for (id, node) in self.nodes.iter().enumerate() {
            if node.samples.is_empty() || node.samples.len() % (self.dim + 1) != 0 {
                return Err(Error::Corruption(format!("node {id} has a malformed segment")));
            }
            let times: Vec<f64> = node.samples.iter().step_by(self.dim + 1).copied().collect();
            if times.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Corruption(format!("node {id} has unordered samples")));
            }
            match node.parent {
                NO_PARENT => {
                    if times[0] != 0.0 {
                        return Err(Error::Corruption(format!("root {id} is not born at 0")));
                    }
                }
                p if p as usize >= id => {
                    return Err(Error::Corruption(format!("node {id} has parent {p}")))
                }
                p => {
                    let pb = self.birth_time(p);
                    if !(pb < times[0]) || self.last_time(p) > times[0] {
                        return Err(Error::Corruption(format!(
                            "node {id} born at {} under node {p} spanning [{pb}, {}]",
                            times[0],
                            self.last_time(p)
                        )));
                    }
                }
            }
        }
        for &l in living {
            self.check_id(l)?;
        }
        Ok(())
    }

    /// One line per node: `node_id, parent_id, birth_time, segment_len`.
    pub fn write_nodes_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_id", "parent_id", "birth_time", "segment_len"])?;
        for id in 0..self.nodes.len() as NodeId {
            let parent = self.parent(id).map(|p| p.to_string()).unwrap_or_default();
            w.write_record([
                id.to_string(),
                parent,
                self.birth_time(id).to_string(),
                self.segment_len(id).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Full ancestral paths of the given lineages on `[0, t]` as
    /// `lineage, time, x_1..x_d` rows.
    pub fn write_paths_csv<W: Write>(&self, ids: &[NodeId], t: f64, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["lineage".to_string(), "time".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for &id in ids {
            let path = self.ancestral_path(id, t)?;
            for (k, &s) in path.grid.times().iter().enumerate() {
                let mut row = vec![id.to_string(), s.to_string()];
                row.extend(path.grid.position(k).iter().map(|v| v.to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// A lineage's path on `[0, end]`, piecewise constant between samples and
/// constant after the last one.
#[derive(Clone, Debug, PartialEq)]
pub struct AncestralPath {
    grid: PathGrid,
    end: f64,
}

impl AncestralPath {
    pub fn grid(&self) -> &PathGrid {
        &self.grid
    }

    pub fn end_time(&self) -> f64 {
        self.end
    }

    /// Position at time `u`: the last sample at or before `min(u, end)`.
    pub fn at(&self, u: f64) -> &[f64] {
        let u = u.min(self.end);
        let k = self.grid.times().partition_point(|&s| s <= u);
        self.grid.position(k.saturating_sub(1))
    }

    /// The root position.
    pub fn start(&self) -> &[f64] {
        self.grid.position(0)
    }
}
