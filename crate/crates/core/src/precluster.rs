use std::collections::HashMap;

use rand::Rng;

use crate::clustering::ClusterId;
use crate::error::parse_err;
use crate::graph::{content_lines, Graph, Pair, VertexId};
use crate::marks::{Flags, Marks};
use crate::representation::{join, parse_rep_lines, symmetric_difference, ClusterRepresentation};
use crate::steps::StepCounter;

/// Marking threshold: v is marked when its violations reach `CLEAN_A·|C(v)|`.
pub const CLEAN_A: f64 = 0.05;
/// Shatter threshold: a cluster with at least `CLEAN_B·|C|` marks is dissolved.
pub const CLEAN_B: f64 = 0.05;
/// Clean never inflates the cost beyond this factor: 1 + 1/(a·b).
pub const CLEAN_INFLATION: usize = 401;
/// Agreement level of every non-singleton Clean output: (a + b)/(1 − b).
pub const CLEAN_AGREEMENT: f64 = (CLEAN_A + CLEAN_B) / (1.0 - CLEAN_B);
/// Agreement level that makes a cluster strong.
pub const STRONG: f64 = 1.0 / 6.0;

/// Whether `|N[v] △ C| < β|C|` for every member v (closed neighbourhoods).
pub fn is_agreeing(cluster: &[VertexId], g: &Graph, beta: f64) -> bool {
    let mut inside = vec![false; g.n()];
    cluster.iter().for_each(|&v| inside[v] = true);
    let size = cluster.len();
    cluster.iter().all(|&v| {
        let in_c = g.neighbors(v).iter().filter(|&&w| inside[w]).count();
        let out_c = g.degree(v) - in_c;
        let missing = size - 1 - in_c;
        ((out_c + missing) as f64) < beta * size as f64
    })
}

/// Alg. "Clean": split off vertices with many violations, dissolve clusters with
/// many such vertices. Touches only clusters incident to D.
pub fn clean(rep: &ClusterRepresentation, counter: &mut StepCounter) -> ClusterRepresentation {
    let c0 = rep.clustering();
    let d = rep.violations();
    let n = rep.n();
    let mut c = c0.clone();
    let mut seen = Flags::new(c0.capacity());
    let mut touched: Vec<ClusterId> = Vec::new();
    let mut marked_in: Marks<usize> = Marks::new(c0.capacity());
    let mut marked: Vec<VertexId> = Vec::new();
    let mut is_marked = Flags::new(n);
    let _ = counter.tick(d.len() as u64);
    for p in d.pairs() {
        for x in [p.u, p.v] {
            let cid = c0.label(x);
            if !seen.contains(cid) {
                seen.mark(cid);
                touched.push(cid);
            }
            if !is_marked.contains(x) && d.degree(x) as f64 >= CLEAN_A * c0.size(cid) as f64 {
                is_marked.mark(x);
                marked.push(x);
                marked_in.set(cid, marked_in.get(cid).unwrap_or(0) + 1);
            }
        }
    }
    let mut moves = Vec::new();
    for &cid in &touched {
        let size = c0.size(cid);
        let m = marked_in.get(cid).unwrap_or(0);
        if m == 0 {
            continue;
        }
        if (m as f64) < CLEAN_B * size as f64 {
            continue;
        }
        let members: Vec<VertexId> = c0.members(cid).to_vec();
        let _ = counter.tick(members.len() as u64);
        for &v in &members[1..] {
            c.isolate(v);
            moves.push(v);
        }
    }
    for &v in &marked {
        let cid = c0.label(v);
        let m = marked_in.get(cid).unwrap_or(0);
        if (m as f64) < CLEAN_B * c0.size(cid) as f64 && c.size(c.label(v)) > 1 {
            c.isolate(v);
            moves.push(v);
        }
    }
    symmetric_difference(rep, c, &moves, counter).expect("unbudgeted")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdmMode {
    /// Exact counts; deterministic ground truth.
    Exact,
    /// The randomized estimators.
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmParams {
    pub epsilon: f64,
    /// Confidence budget; `None` means max(8, ⌈2 ln d(v)⌉).
    pub t: Option<usize>,
    pub mode: AdmMode,
}

impl Default for AdmParams {
    fn default() -> Self {
        AdmParams { epsilon: 0.05, t: None, mode: AdmMode::Exact }
    }
}

impl AdmParams {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.1) {
            return Err(crate::Error::Argument(format!("admissibility epsilon {} not in (0, 0.1)", self.epsilon)));
        }
        if self.t == Some(0) {
            return Err(crate::Error::Argument("t must be at least 1".into()));
        }
        Ok(())
    }

    pub fn t_for(&self, degree: usize) -> usize {
        self.t.unwrap_or_else(|| 8.max((2.0 * (degree.max(1) as f64).ln()).ceil() as usize))
    }
}

/// Atoms (the non-singleton clusters of a cleaned representation) plus the
/// admissibility oracle.
#[derive(Clone, Debug)]
pub struct Preclustering {
    rep: ClusterRepresentation,
    params: AdmParams,
    degree: Vec<usize>,
    /// Admissible singletons of each atom, keyed by atom cluster id.
    atom_lists: HashMap<ClusterId, Vec<VertexId>>,
    /// Atoms each singleton is admissible to.
    singleton_atoms: HashMap<VertexId, Vec<ClusterId>>,
    memo: HashMap<Pair, bool>,
}

const UNKNOWN: usize = usize::MAX;

impl Preclustering {
    /// Cleans `rep` and wraps the result.
    pub fn build(rep: &ClusterRepresentation, params: AdmParams, counter: &mut StepCounter) -> Preclustering {
        Preclustering::from_cleaned(clean(rep, counter), params, counter)
    }

    /// Wraps a representation whose clusters are already strong or singletons.
    pub fn from_cleaned(rep: ClusterRepresentation, params: AdmParams, counter: &mut StepCounter) -> Preclustering {
        let n = rep.n();
        let mut pre = Preclustering {
            rep,
            params,
            degree: vec![UNKNOWN; n],
            atom_lists: HashMap::new(),
            singleton_atoms: HashMap::new(),
            memo: HashMap::new(),
        };
        pre.compute_atom_lists(counter);
        pre
    }

    pub fn rep(&self) -> &ClusterRepresentation {
        &self.rep
    }

    pub fn into_rep(self) -> ClusterRepresentation {
        self.rep
    }

    pub fn params(&self) -> &AdmParams {
        &self.params
    }

    /// Representation text with an extra line of per-vertex atom flags.
    pub fn serialize(&self) -> String {
        let flags: Vec<u8> = (0..self.n()).map(|v| !self.is_singleton(v) as u8).collect();
        self.rep.serialize_with(Some(&join(flags.iter())))
    }

    /// Inverse of [`Preclustering::serialize`]; the flag line must agree with
    /// the clusters.
    pub fn parse(text: &str, params: AdmParams) -> crate::Result<Preclustering> {
        let mut lines = content_lines(text);
        let (rep, extra) = parse_rep_lines(&mut lines, true)?;
        let (fl, flag_line) = extra.ok_or_else(|| parse_err(0, "missing atom flag line"))?;
        let flags: Vec<&str> = flag_line.split_whitespace().collect();
        if flags.len() != rep.n() {
            return Err(parse_err(fl, "atom flag line has the wrong length"));
        }
        for (v, f) in flags.iter().enumerate() {
            let want = if rep.cluster_of(v).len() > 1 { "1" } else { "0" };
            if *f != want {
                return Err(parse_err(fl, format!("atom flag of vertex {v} disagrees with its cluster")));
            }
        }
        Ok(Preclustering::from_cleaned(rep, params, &mut StepCounter::unlimited()))
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn n(&self) -> usize {
        self.rep.n()
    }

    #[inline]
    pub fn is_singleton(&self, v: VertexId) -> bool {
        self.rep.cluster_of(v).len() == 1
    }

    /// K(v): the atom containing v, or {v}.
    pub fn atom_of(&self, v: VertexId) -> &[VertexId] {
        self.rep.cluster_of(v)
    }

    /// Atom cluster ids (clusters with at least two vertices).
    pub fn atoms(&self) -> Vec<ClusterId> {
        let c = self.rep.clustering();
        c.cluster_ids().filter(|&id| c.size(id) > 1).collect()
    }

    pub fn degree(&mut self, v: VertexId) -> usize {
        if self.degree[v] == UNKNOWN {
            self.degree[v] = self.rep.degree(v);
        }
        self.degree[v]
    }

    /// ε·d(u) < d(v) < d(u)/ε.
    pub fn degree_similar(&mut self, u: VertexId, v: VertexId) -> bool {
        let (du, dv) = (self.degree(u) as f64, self.degree(v) as f64);
        let e = self.params.epsilon;
        e * du < dv && e * dv < du
    }

    /// Closed neighbourhood N[v].
    pub fn closed_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = self.rep.neighbors(v);
        out.push(v);
        out
    }

    /// Admissible singletons of atom `atom`.
    pub fn atom_list(&self, atom: ClusterId) -> &[VertexId] {
        self.atom_lists.get(&atom).map_or(&[], |l| l.as_slice())
    }

    /// Atoms admissible to singleton `v`.
    pub fn atoms_admissible_to(&self, v: VertexId) -> &[ClusterId] {
        self.singleton_atoms.get(&v).map_or(&[], |l| l.as_slice())
    }

    fn compute_atom_lists(&mut self, counter: &mut StepCounter) {
        let n = self.n();
        let e = self.params.epsilon;
        let mut hits = Marks::<usize>::new(n);
        let mut touched = Vec::new();
        let mut lists = HashMap::new();
        let atoms: Vec<ClusterId> = {
            // only atoms with violated pairs leaving them can have admissible neighbours
            let c = self.rep.clustering();
            let mut seen = Flags::new(c.capacity());
            let mut out = Vec::new();
            for p in self.rep.violations().pairs() {
                for x in [p.u, p.v] {
                    let id = c.label(x);
                    if c.size(id) > 1 && !seen.contains(id) {
                        seen.mark(id);
                        out.push(id);
                    }
                }
            }
            out
        };
        for atom in atoms {
            let members: Vec<VertexId> = self.rep.clustering().members(atom).to_vec();
            let size = members.len();
            hits.clear();
            touched.clear();
            let mut active = 0usize;
            let (mut lo, mut hi) = (usize::MAX, 0usize);
            for &x in &members {
                if !self.rep.is_active(x) {
                    continue;
                }
                active += 1;
                let dx = self.degree(x);
                lo = lo.min(dx);
                hi = hi.max(dx);
                for i in 0..self.rep.violations().degree(x) {
                    let w = self.rep.violations().pair(self.rep.violations().incident(x)[i]).other(x);
                    if self.rep.label(w) == atom {
                        continue;
                    }
                    match hits.get(w) {
                        Some(k) => hits.set(w, k + 1),
                        None => {
                            hits.set(w, 1);
                            touched.push(w);
                        }
                    }
                }
                let _ = counter.tick(1 + self.rep.violations().degree(x) as u64);
            }
            if active < size {
                lo = lo.min(size - 1);
                hi = hi.max(size - 1);
            }
            let mut list = Vec::new();
            for &u in &touched {
                let k = hits.get(u).unwrap();
                if !self.is_singleton(u) || (3 * k) < size {
                    continue;
                }
                let du = self.degree(u) as f64;
                if e * (hi as f64) < du && e * du < (lo as f64) {
                    list.push(u);
                }
            }
            list.sort_unstable();
            for &u in &list {
                self.singleton_atoms.entry(u).or_default().push(atom);
            }
            if !list.is_empty() {
                lists.insert(atom, list);
            }
        }
        self.atom_lists = lists;
    }

    /// Exact pair test between two singletons: degree-similar and at least
    /// ε(d(u)+d(v)) common closed neighbours similar to both.
    pub fn singleton_pair_admissible_exact(&mut self, u: VertexId, v: VertexId) -> bool {
        self.common_similar_count(u, v).is_some_and(|(k, need)| k as f64 >= need)
    }

    fn common_similar_count(&mut self, u: VertexId, v: VertexId) -> Option<(usize, f64)> {
        if u == v || !self.degree_similar(u, v) {
            return None;
        }
        let nu = self.closed_neighbors(u);
        let nv = self.closed_neighbors(v);
        let mut mark = Flags::new(self.n());
        nv.iter().for_each(|&w| mark.mark(w));
        let mut k = 0;
        for w in nu {
            if mark.contains(w) && self.degree_similar(w, u) && self.degree_similar(w, v) {
                k += 1;
            }
        }
        let need = self.params.epsilon * (self.degree(u) + self.degree(v)) as f64;
        Some((k, need))
    }

    /// Admissibility of an arbitrary pair by definition (exact).
    pub fn admissible_exact(&mut self, u: VertexId, v: VertexId) -> bool {
        if u == v {
            return false;
        }
        match (self.is_singleton(u), self.is_singleton(v)) {
            (true, true) => self.singleton_pair_admissible_exact(u, v),
            (true, false) => self.atom_list(self.rep.label(v)).binary_search(&u).is_ok(),
            (false, true) => self.atom_list(self.rep.label(u)).binary_search(&v).is_ok(),
            (false, false) => false,
        }
    }

    /// Randomized check between two singletons, memoized write-once.
    pub fn check_admissible<R: Rng + ?Sized>(&mut self, u: VertexId, v: VertexId, rng: &mut R) -> bool {
        if u == v {
            return false;
        }
        let key = Pair::new(u, v);
        if let Some(&verdict) = self.memo.get(&key) {
            return verdict;
        }
        let verdict = match self.params.mode {
            AdmMode::Exact => self.singleton_pair_admissible_exact(u, v),
            AdmMode::Sampled => self.check_sampled(u, v, rng),
        };
        self.memo.insert(key, verdict);
        verdict
    }

    fn check_sampled<R: Rng + ?Sized>(&mut self, u: VertexId, v: VertexId, rng: &mut R) -> bool {
        if !self.degree_similar(u, v) {
            return false;
        }
        let (u, v) = if self.degree(u) >= self.degree(v) { (u, v) } else { (v, u) };
        let e = self.params.epsilon;
        let du = self.degree(u);
        let t = self.params.t_for(du);
        let samples = ((t as f64) / (e * e)).ceil() as usize;
        let nu = self.closed_neighbors(u);
        let mut hits = 0usize;
        for _ in 0..samples {
            let x = nu[rng.gen_range(0..nu.len())];
            if (x == v || self.rep.is_edge(x, v)) && self.degree_similar(x, u) && self.degree_similar(x, v) {
                hits += 1;
            }
        }
        let estimate = nu.len() as f64 / samples as f64 * hits as f64;
        estimate > e / 2.0 * (self.degree(u) + self.degree(v)) as f64
    }

    /// The recorded verdict for a pair, if any.
    pub fn memo_verdict(&self, u: VertexId, v: VertexId) -> Option<bool> {
        self.memo.get(&Pair::new(u, v)).copied()
    }

    /// Admissible neighbours of singleton `v`, sorted.
    pub fn list_admissible<R: Rng + ?Sized>(&mut self, v: VertexId, rng: &mut R) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = Vec::new();
        for atom in self.atoms_admissible_to(v).to_vec() {
            out.extend_from_slice(self.rep.clustering().members(atom));
        }
        match self.params.mode {
            AdmMode::Exact => {
                let mut seen = Flags::new(self.n());
                seen.mark(v);
                for p in self.closed_neighbors(v) {
                    for u in self.closed_neighbors(p) {
                        if seen.contains(u) {
                            continue;
                        }
                        seen.mark(u);
                        if self.is_singleton(u) && self.check_admissible(v, u, rng) {
                            out.push(u);
                        }
                    }
                }
            }
            AdmMode::Sampled => {
                let similar: Vec<VertexId> =
                    self.closed_neighbors(v).into_iter().filter(|&w| self.degree_similar(v, w)).collect();
                if !similar.is_empty() {
                    let dv = self.degree(v);
                    let t = self.params.t_for(dv);
                    let rounds = (t as f64 / self.params.epsilon).ceil() as usize;
                    let mut seen = Flags::new(self.n());
                    seen.mark(v);
                    for _ in 0..rounds {
                        let p = similar[rng.gen_range(0..similar.len())];
                        for u in self.closed_neighbors(p) {
                            if seen.contains(u) || !self.is_singleton(u) {
                                continue;
                            }
                            if self.check_admissible(v, u, rng) {
                                seen.mark(u);
                                out.push(u);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Candidate pool around a pivot: K(p) plus admissible singletons.
    pub fn candidates<R: Rng + ?Sized>(&mut self, p: VertexId, rng: &mut R) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self.atom_of(p).to_vec();
        if self.is_singleton(p) {
            let adm = self.list_admissible(p, rng);
            out.extend(adm.into_iter().filter(|&u| self.is_singleton(u)));
        } else {
            out.extend_from_slice(self.atom_list(self.rep.label(p)));
        }
        out
    }

    /// All admissible pairs by definition; O(n²) scan for tests and reports.
    pub fn admissible_pairs_exact(&mut self) -> Vec<Pair> {
        let n = self.n();
        let mut out = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if self.admissible_exact(u, v) {
                    out.push(Pair::new(u, v));
                }
            }
        }
        out
    }

    /// Σ_{x∈K} d_D(x) for an atom.
    pub fn atom_violation_degree(&self, atom: ClusterId) -> usize {
        self.rep.clustering().members(atom).iter().map(|&x| self.rep.violations().degree(x)).sum()
    }
}
