use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{parse_err, Error, Result};

pub type VertexId = usize;

/// Unordered vertex pair stored as (min, max).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    pub u: VertexId,
    pub v: VertexId,
}

impl Pair {
    #[inline]
    pub fn new(a: VertexId, b: VertexId) -> Pair {
        debug_assert_ne!(a, b, "self-pair");
        if a < b {
            Pair { u: a, v: b }
        } else {
            Pair { u: b, v: a }
        }
    }

    #[inline]
    pub fn other(self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            debug_assert_eq!(x, self.v);
            self.u
        }
    }
}

/// Undirected simple graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<Vec<VertexId>>,
    m: usize,
}

impl Graph {
    pub fn new(n: usize) -> Graph {
        Graph { adj: vec![Vec::new(); n], m: 0 }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (VertexId, VertexId)>,
    {
        let mut g = Graph::new(n);
        for (u, v) in edges {
            g.check_pair(u, v)?;
            if !g.add_edge(u, v) {
                return Err(Error::Structural(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(g)
    }

    /// G(n, p).
    pub fn gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    #[inline]
    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() { (u, v) } else { (v, u) };
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn check_pair(&self, u: VertexId, v: VertexId) -> Result<()> {
        let n = self.n();
        if u >= n || v >= n {
            return Err(Error::Argument(format!("vertex out of range in ({u}, {v}) for n = {n}")));
        }
        if u == v {
            return Err(Error::Argument(format!("self-loop at {u}")));
        }
        Ok(())
    }

    /// Returns false if the edge was already present.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> bool {
        match self.adj[u].binary_search(&v) {
            Ok(_) => false,
            Err(i) => {
                self.adj[u].insert(i, v);
                let j = self.adj[v].binary_search(&u).unwrap_err();
                self.adj[v].insert(j, u);
                self.m += 1;
                true
            }
        }
    }

    /// Returns false if the edge was absent.
    pub fn remove_edge(&mut self, u: VertexId, v: VertexId) -> bool {
        match self.adj[u].binary_search(&v) {
            Err(_) => false,
            Ok(i) => {
                self.adj[u].remove(i);
                let j = self.adj[v].binary_search(&u).unwrap();
                self.adj[v].remove(j);
                self.m -= 1;
                true
            }
        }
    }

    /// Toggles the pair; returns whether it is an edge afterwards.
    pub fn toggle(&mut self, u: VertexId, v: VertexId) -> bool {
        if self.remove_edge(u, v) {
            false
        } else {
            self.add_edge(u, v);
            true
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = Pair> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| Pair { u, v }))
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<VertexId>> {
        let mut out = Vec::new();
        self.try_for_each_component(|c| {
            out.push(c.to_vec());
            Ok::<(), ()>(())
        })
        .expect("infallible");
        out
    }

    /// Visits components in the order of `components` through one reused buffer.
    pub fn try_for_each_component<E>(&self, mut f: impl FnMut(&[VertexId]) -> std::result::Result<(), E>) -> std::result::Result<(), E> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut comp = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            comp.clear();
            comp.push(s);
            let mut i = 0;
            while i < comp.len() {
                let x = comp[i];
                i += 1;
                for &y in &self.adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        comp.push(y);
                    }
                }
            }
            comp.sort_unstable();
            f(&comp)?;
        }
        Ok(())
    }

    /// Induced subgraph on `vs`; vertex `vs[i]` becomes `i`.
    pub fn induced(&self, vs: &[VertexId]) -> Graph {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in vs.iter().enumerate() {
            index[v] = i;
        }
        let mut g = Graph::new(vs.len());
        for (i, &v) in vs.iter().enumerate() {
            for &w in &self.adj[v] {
                let j = index[w];
                if j != usize::MAX && j > i {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    /// Parses the edge-list format: header `n m`, then `u v` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Graph> {
        let mut lines = content_lines(text);
        let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "missing header"))?;
        let (n, m) = two_numbers(hl, header)?;
        let mut g = Graph::new(n);
        for (ln, line) in lines {
            let (u, v) = two_numbers(ln, line)?;
            g.check_pair(u, v).map_err(|e| parse_err(ln, e.to_string()))?;
            if !g.add_edge(u, v) {
                return Err(parse_err(ln, format!("duplicate edge ({u}, {v})")));
            }
        }
        if g.m != m {
            return Err(parse_err(hl, format!("header declares {m} edges, found {}", g.m)));
        }
        Ok(g)
    }

    pub fn read(path: &Path) -> Result<Graph> {
        Graph::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n(), self.m);
        for p in self.edges() {
            let _ = writeln!(s, "{} {}", p.u, p.v);
        }
        s
    }

    /// Canonical adjacency encoding (upper triangle, bit-packed), used as a cache key.
    pub fn canonical_key(&self) -> Vec<u64> {
        let n = self.n();
        let bits = n * n.saturating_sub(1) / 2;
        let mut key = vec![0u64; 1 + bits / 64 + 1];
        key[0] = n as u64;
        for u in 0..n {
            let row = u * n - u * (u + 1) / 2;
            for &v in self.adj[u].iter().filter(|&&v| v > u) {
                let b = row + v - u - 1;
                key[1 + b / 64] |= 1 << (b % 64);
            }
        }
        key
    }
}

/// Non-empty lines with comments stripped, paired with 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub(crate) fn two_numbers(ln: usize, line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let a = it.next().ok_or_else(|| parse_err(ln, "expected two integers"))?;
    let b = it.next().ok_or_else(|| parse_err(ln, "expected two integers"))?;
    if it.next().is_some() {
        return Err(parse_err(ln, "trailing tokens"));
    }
    let a = a.parse().map_err(|_| parse_err(ln, format!("bad integer {a:?}")))?;
    let b = b.parse().map_err(|_| parse_err(ln, format!("bad integer {b:?}")))?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let text = "# triangle plus pendant\n4 4\n0 1\n1 2\n0 2 # closing edge\n2 3\n";
        let g = Graph::parse(text).unwrap();
        assert_eq!(g.m(), 4);
        assert!(g.has_edge(2, 0));
        assert_eq!(Graph::parse(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(Graph::parse("3 1\n0 0\n").is_err());
        assert!(Graph::parse("3 2\n0 1\n").is_err());
        assert!(Graph::parse("3 1\n0 5\n").is_err());
        assert!(Graph::parse("3 2\n0 1\n1 0\n").is_err());
    }

    #[test]
    fn toggle_is_involution() {
        let mut g = Graph::new(4);
        assert!(g.toggle(1, 3));
        assert!(!g.toggle(3, 1));
        assert_eq!(g.m(), 0);
    }

    #[test]
    fn components_of_two_paths() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        assert_eq!(g.components(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }
}
