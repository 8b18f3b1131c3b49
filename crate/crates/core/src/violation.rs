use crate::graph::{Pair, VertexId};
use crate::marks::Marks;

/// The violated pairs D with per-vertex incidence lists.
///
/// Pairs live in a dense vector; removal is a swap-remove that patches the
/// positions stored for the moved pair, so every mutation is O(1).
#[derive(Clone, Debug, Default)]
pub struct ViolationSet {
    pairs: Vec<Pair>,
    // (index in inc[p.u], index in inc[p.v]) for pair p
    slot: Vec<(usize, usize)>,
    inc: Vec<Vec<usize>>,
}

impl ViolationSet {
    pub fn new(n: usize) -> ViolationSet {
        ViolationSet { pairs: Vec::new(), slot: Vec::new(), inc: vec![Vec::new(); n] }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = Pair>) -> ViolationSet {
        let mut d = ViolationSet::new(n);
        for p in pairs {
            d.insert(p);
        }
        d
    }

    pub fn n(&self) -> usize {
        self.inc.len()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    #[inline]
    pub fn pair(&self, i: usize) -> Pair {
        self.pairs[i]
    }

    /// Indices of the pairs incident to `v`.
    #[inline]
    pub fn incident(&self, v: VertexId) -> &[usize] {
        &self.inc[v]
    }

    /// Violated partners of `v`.
    pub fn partners(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.inc[v].iter().map(move |&i| self.pairs[i].other(v))
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.inc[v].len()
    }

    /// Linear in the smaller incidence list.
    pub fn contains(&self, a: VertexId, b: VertexId) -> bool {
        let (x, y) = if self.inc[a].len() <= self.inc[b].len() { (a, b) } else { (b, a) };
        self.partners(x).any(|w| w == y)
    }

    /// Appends a pair; the caller guarantees it is absent.
    pub fn insert(&mut self, p: Pair) -> usize {
        let i = self.pairs.len();
        self.pairs.push(p);
        self.slot.push((self.inc[p.u].len(), self.inc[p.v].len()));
        self.inc[p.u].push(i);
        self.inc[p.v].push(i);
        i
    }

    /// Removes the pair at index `i`; the pair formerly last now sits at `i`.
    pub fn remove_at(&mut self, i: usize) {
        let p = self.pairs[i];
        let (su, sv) = self.slot[i];
        self.unlink(p.u, su);
        self.unlink(p.v, sv);
        let last = self.pairs.len() - 1;
        self.pairs.swap_remove(i);
        self.slot.swap_remove(i);
        if i != last {
            let q = self.pairs[i];
            let (qu, qv) = self.slot[i];
            self.inc[q.u][qu] = i;
            self.inc[q.v][qv] = i;
        }
    }

    fn unlink(&mut self, x: VertexId, s: usize) {
        let list = &mut self.inc[x];
        list.swap_remove(s);
        if let Some(&j) = list.get(s) {
            let q = self.pairs[j];
            if q.u == x {
                self.slot[j].0 = s;
            } else {
                self.slot[j].1 = s;
            }
        }
    }

    /// Inserts `p` if absent and removes it otherwise; returns whether it is
    /// now present. Linear in the smaller incidence list.
    pub fn toggle(&mut self, p: Pair) -> bool {
        let (x, y) = if self.inc[p.u].len() <= self.inc[p.v].len() { (p.u, p.v) } else { (p.v, p.u) };
        match self.inc[x].iter().copied().find(|&i| self.pairs[i].other(x) == y) {
            Some(i) => {
                self.remove_at(i);
                false
            }
            None => {
                self.insert(p);
                true
            }
        }
    }

    /// Toggles membership of every pair with odd multiplicity in `log`.
    ///
    /// `log[k]` holds the partners recorded for `owners[k]`. Work is
    /// O(Σ|log| + Σ d_D(owner)); returns that count.
    pub fn toggle_grouped(
        &mut self,
        owners: &[VertexId],
        log: &[Vec<VertexId>],
        parity: &mut Marks<bool>,
        index: &mut Marks<usize>,
    ) -> u64 {
        let mut steps = 0u64;
        let mut odd = Vec::new();
        for (k, &u) in owners.iter().enumerate() {
            let partners = &log[k];
            parity.clear();
            for &w in partners {
                let cur = parity.get(w).unwrap_or(false);
                parity.set(w, !cur);
            }
            odd.clear();
            for &w in partners {
                if parity.get(w) == Some(true) {
                    odd.push(w);
                    parity.set(w, false);
                }
            }
            index.clear();
            for &i in &self.inc[u] {
                index.set(self.pairs[i].other(u), i);
            }
            steps += (partners.len() + self.inc[u].len()) as u64;
            for &w in &odd {
                match index.get(w) {
                    Some(i) => {
                        index.unset(w);
                        let last = self.pairs.len() - 1;
                        self.remove_at(i);
                        if i != last {
                            let q = self.pairs[i];
                            if q.u == u || q.v == u {
                                index.set(q.other(u), i);
                            }
                        }
                    }
                    None => {
                        let i = self.insert(Pair::new(u, w));
                        index.set(w, i);
                    }
                }
            }
        }
        steps
    }

    /// Sorted copy of the pairs.
    pub fn sorted(&self) -> Vec<Pair> {
        let mut v = self.pairs.clone();
        v.sort_unstable();
        v
    }

    pub fn check(&self) -> bool {
        for (i, p) in self.pairs.iter().enumerate() {
            let (su, sv) = self.slot[i];
            if p.u >= p.v || self.inc[p.u].get(su) != Some(&i) || self.inc[p.v].get(sv) != Some(&i) {
                return false;
            }
        }
        let total: usize = self.inc.iter().map(Vec::len).sum();
        let mut s = self.sorted();
        s.dedup();
        total == 2 * self.pairs.len() && s.len() == self.pairs.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_remove_keeps_indices() {
        let mut d = ViolationSet::new(5);
        for (a, b) in [(0, 1), (1, 2), (0, 3), (3, 4), (1, 4)] {
            d.insert(Pair::new(a, b));
        }
        d.remove_at(1);
        assert!(d.check());
        d.remove_at(0);
        assert!(d.check());
        assert_eq!(d.sorted(), vec![Pair::new(0, 3), Pair::new(1, 4), Pair::new(3, 4)]);
        assert!(d.contains(4, 1));
        assert!(!d.contains(0, 1));
    }

    #[test]
    fn grouped_toggle_cancels_even_flips() {
        let mut d = ViolationSet::from_pairs(4, [Pair::new(0, 1), Pair::new(0, 2)]);
        let mut parity = Marks::new(4);
        let mut index = Marks::new(4);
        d.toggle_grouped(&[0], &[vec![1, 3, 2, 2]], &mut parity, &mut index);
        assert!(d.check());
        assert_eq!(d.sorted(), vec![Pair::new(0, 2), Pair::new(0, 3)]);
    }
}
