use crate::error::{Error, Result};
use crate::graph::VertexId;

pub type ClusterId = usize;

const NONE: ClusterId = usize::MAX;

/// Vertex-to-cluster labelling with per-cluster member lists.
///
/// Each vertex owns a primary label and an optional staged label. While the
/// global flag is raised, a staged label overrides the primary one; this turns
/// the switch to a new solution into a single flag write. Member lists always
/// follow the primary labels, so structural queries require `is_settled()`.
#[derive(Clone, Debug)]
pub struct Clustering {
    primary: Vec<ClusterId>,
    staged: Vec<ClusterId>,
    staged_live: bool,
    dirty: Vec<VertexId>,
    members: Vec<Vec<VertexId>>,
    pos: Vec<usize>,
    free: Vec<ClusterId>,
    count: usize,
}

impl Clustering {
    pub fn singletons(n: usize) -> Clustering {
        Clustering {
            primary: (0..n).collect(),
            staged: vec![NONE; n],
            staged_live: false,
            dirty: Vec::new(),
            members: (0..n).map(|v| vec![v]).collect(),
            pos: vec![0; n],
            free: Vec::new(),
            count: n,
        }
    }

    pub fn one_cluster(n: usize) -> Clustering {
        Clustering::from_labels(&vec![0; n])
    }

    /// Cluster ids are renumbered densely in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Clustering {
        let n = labels.len();
        let mut members: Vec<Vec<VertexId>> = Vec::new();
        let mut primary = vec![0; n];
        let mut pos = vec![0; n];
        // Labels are usually below n; only sparse label spaces need hashing.
        let dense = labels.iter().all(|&l| l < 4 * n.max(1));
        let mut table = vec![NONE; if dense { 4 * n.max(1) } else { 0 }];
        let mut remap = std::collections::HashMap::new();
        for (v, &l) in labels.iter().enumerate() {
            let slot = if dense { &mut table[l] } else { remap.entry(l).or_insert(NONE) };
            if *slot == NONE {
                members.push(Vec::new());
                *slot = members.len() - 1;
            }
            let id = *slot;
            primary[v] = id;
            pos[v] = members[id].len();
            members[id].push(v);
        }
        let count = members.len();
        let free = (count..n).rev().collect();
        members.resize(n.max(count), Vec::new());
        Clustering { primary, staged: vec![NONE; n], staged_live: false, dirty: Vec::new(), members, pos, free, count }
    }

    pub fn from_clusters(n: usize, clusters: &[Vec<VertexId>]) -> Result<Clustering> {
        let mut labels = vec![NONE; n];
        for (i, c) in clusters.iter().enumerate() {
            for &v in c {
                if v >= n || labels[v] != NONE {
                    return Err(Error::Structural(format!("vertex {v} out of range or repeated")));
                }
                labels[v] = i;
            }
        }
        if let Some(v) = labels.iter().position(|&l| l == NONE) {
            return Err(Error::Structural(format!("vertex {v} unassigned")));
        }
        Ok(Clustering::from_labels(&labels))
    }

    pub fn n(&self) -> usize {
        self.primary.len()
    }

    /// Live label of `v`.
    #[inline]
    pub fn label(&self, v: VertexId) -> ClusterId {
        let s = self.staged[v];
        if self.staged_live && s != NONE {
            s
        } else {
            self.primary[v]
        }
    }

    #[inline]
    pub fn same_cluster(&self, u: VertexId, v: VertexId) -> bool {
        self.label(u) == self.label(v)
    }

    #[inline]
    pub fn members(&self, c: ClusterId) -> &[VertexId] {
        debug_assert!(self.is_settled());
        self.members.get(c).map_or(&[], |m| m.as_slice())
    }

    #[inline]
    pub fn size(&self, c: ClusterId) -> usize {
        self.members(c).len()
    }

    #[inline]
    pub fn cluster_of(&self, v: VertexId) -> &[VertexId] {
        self.members(self.label(v))
    }

    /// Upper bound (exclusive) on cluster ids currently in use.
    pub fn capacity(&self) -> usize {
        self.members.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.count
    }

    pub fn cluster_ids(&self) -> impl Iterator<Item = ClusterId> + '_ {
        (0..self.members.len()).filter(move |&c| !self.members[c].is_empty())
    }

    /// Resolved labels.
    pub fn labels(&self) -> Vec<ClusterId> {
        (0..self.n()).map(|v| self.label(v)).collect()
    }

    /// Partition as sorted clusters ordered by smallest member; independent of ids.
    pub fn partition(&self) -> Vec<Vec<VertexId>> {
        let mut by_label: std::collections::BTreeMap<ClusterId, Vec<VertexId>> = Default::default();
        for v in 0..self.n() {
            by_label.entry(self.label(v)).or_default().push(v);
        }
        let mut out: Vec<Vec<VertexId>> = by_label.into_values().collect();
        out.sort_unstable_by_key(|c| c[0]);
        out
    }

    pub fn same_partition(&self, other: &Clustering) -> bool {
        self.n() == other.n() && self.partition() == other.partition()
    }

    /// Returns an empty cluster id, growing the id space when none is free.
    pub fn new_cluster(&mut self) -> ClusterId {
        while let Some(c) = self.free.pop() {
            if self.members[c].is_empty() {
                return c;
            }
        }
        self.members.push(Vec::new());
        self.members.len() - 1
    }

    /// Moves `v` (primary label) into cluster `c`, creating the id if needed.
    pub fn move_to(&mut self, v: VertexId, c: ClusterId) {
        let old = self.primary[v];
        if old == c {
            return;
        }
        if c >= self.members.len() {
            self.members.resize(c + 1, Vec::new());
        }
        let i = self.pos[v];
        let list = &mut self.members[old];
        list.swap_remove(i);
        if let Some(&w) = list.get(i) {
            self.pos[w] = i;
        }
        if list.is_empty() {
            self.count -= 1;
            self.free.push(old);
        }
        let target = &mut self.members[c];
        if target.is_empty() {
            self.count += 1;
        }
        self.pos[v] = target.len();
        target.push(v);
        self.primary[v] = c;
    }

    /// Moves `v` into a fresh cluster and returns its id.
    pub fn isolate(&mut self, v: VertexId) -> ClusterId {
        if self.size(self.primary[v]) == 1 {
            return self.primary[v];
        }
        let c = self.new_cluster();
        self.move_to(v, c);
        c
    }

    /// Writes `c` into the staged slot of `v`; invisible until `swap`.
    pub fn stage(&mut self, v: VertexId, c: ClusterId) {
        debug_assert!(!self.staged_live, "staging while a previous swap is unsettled");
        if self.staged[v] == NONE {
            self.dirty.push(v);
        }
        self.staged[v] = c;
    }

    /// Raises the global flag: all staged labels become live at once.
    pub fn swap(&mut self) {
        self.staged_live = true;
    }

    pub fn is_settled(&self) -> bool {
        self.dirty.is_empty()
    }

    pub fn dirty_count(&self) -> usize {
        self.dirty.len()
    }

    /// Folds up to `k` staged labels into the primary slot; returns how many.
    /// Lowers the flag once nothing is staged.
    pub fn settle(&mut self, k: usize) -> usize {
        debug_assert!(self.staged_live || self.dirty.is_empty());
        let mut done = 0;
        while done < k {
            let Some(v) = self.dirty.pop() else { break };
            let c = std::mem::replace(&mut self.staged[v], NONE);
            self.move_to(v, c);
            done += 1;
        }
        if self.dirty.is_empty() {
            self.staged_live = false;
        }
        done
    }

    pub fn check(&self) -> Result<()> {
        let mut seen = 0;
        for (c, list) in self.members.iter().enumerate() {
            for (i, &v) in list.iter().enumerate() {
                if self.primary[v] != c || self.pos[v] != i {
                    return Err(Error::Structural(format!("member list of {c} disagrees at {v}")));
                }
                seen += 1;
            }
        }
        if seen != self.n() {
            return Err(Error::Structural("member lists do not partition V".into()));
        }
        if self.count != self.members.iter().filter(|m| !m.is_empty()).count() {
            return Err(Error::Structural("cluster count out of date".into()));
        }
        Ok(())
    }
}

impl PartialEq for Clustering {
    fn eq(&self, other: &Self) -> bool {
        self.same_partition(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moves_keep_lists_consistent() {
        let mut c = Clustering::singletons(5);
        c.move_to(1, 0);
        c.move_to(2, 0);
        c.move_to(0, 3);
        c.check().unwrap();
        assert_eq!(c.cluster_count(), 3);
        assert_eq!(c.partition(), vec![vec![0, 3], vec![1, 2], vec![4]]);
        let fresh = c.new_cluster();
        assert!(c.members(fresh).is_empty());
    }

    #[test]
    fn staged_labels_switch_atomically() {
        let mut c = Clustering::from_labels(&[0, 0, 1, 1]);
        c.stage(1, 1);
        c.stage(2, 0);
        assert_eq!(c.labels(), vec![0, 0, 1, 1]);
        c.swap();
        assert_eq!(c.labels(), vec![0, 1, 0, 1]);
        assert_eq!(c.settle(1), 1);
        assert_eq!(c.labels(), vec![0, 1, 0, 1]);
        c.settle(10);
        assert!(c.is_settled());
        c.check().unwrap();
        assert_eq!(c.labels(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn from_clusters_rejects_overlap() {
        assert!(Clustering::from_clusters(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(Clustering::from_clusters(3, &[vec![0, 1]]).is_err());
    }
}
