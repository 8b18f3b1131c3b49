use std::collections::BTreeMap;

use rand::Rng;

use super::family::find_disjoint_family;
use super::{CoverWeights, FractionalSolution};
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::local_search::ImprovementMode;
use crate::precluster::Preclustering;

#[derive(Clone, Debug, PartialEq)]
pub struct LpParams {
    pub gamma: f64,
    /// T_MW, rounds per guess of R.
    pub rounds: usize,
    /// Weights move by e^{−γ^k·m}. The conservative k = 3 needs T_MW near
    /// γ^{−3} rounds to converge; k = 1.5 settles within 128.
    pub rate_exponent: f64,
    /// The family search samples for ⌈loop_factor·n⌉ iterations.
    pub loop_factor: f64,
    /// Slack in the lower weight band γ·ε·d_cross(v)/(16·d_cross(V)).
    pub eps: f64,
    pub mode: ImprovementMode,
    /// Confidence t for sampled cover estimates.
    pub samples_t: f64,
    /// Extra family searches in a round before the guess of R is abandoned.
    pub retries: usize,
    /// Scale the fixed solution by 1/(least coverage) rather than 1/(1−2γ).
    pub tight_scaling: bool,
}

impl Default for LpParams {
    fn default() -> Self {
        LpParams {
            gamma: 0.05,
            rounds: 128,
            rate_exponent: 1.5,
            loop_factor: 4.0,
            eps: 0.1,
            mode: ImprovementMode::Exact,
            samples_t: 4.0,
            retries: 8,
            tight_scaling: true,
        }
    }
}

impl LpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(Error::Argument("gamma must lie in (0, 1/2)".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Argument("rounds must be positive".into()));
        }
        if !(self.loop_factor > 0.0 && self.loop_factor.is_finite()) {
            return Err(Error::Argument("loop_factor must be positive".into()));
        }
        if !(self.eps > 0.0 && self.samples_t > 0.0) {
            return Err(Error::Argument("eps and samples_t must be positive".into()));
        }
        Ok(())
    }

    pub fn rate(&self) -> f64 {
        self.gamma.powf(self.rate_exponent)
    }
}

#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub z: FractionalSolution,
    /// The accepted guess of R; `None` when D is empty or every guess failed.
    pub r: Option<f64>,
    pub guesses: usize,
    /// Vertices whose atom entry was set by the feasibility fix.
    pub fixed: usize,
    /// Every guess failed and z is the indicator of the input clustering.
    pub degenerate: bool,
    /// Rounds where some p_v left the band [γε/16, 16]·d_cross(v)/d_cross(V).
    pub band_upper_violations: usize,
    pub band_lower_violations: usize,
}

/// Runs T_MW rounds at one R; returns the averaged ẑ or `None` if some round
/// found no family.
fn run_rounds<R: Rng + ?Sized>(
    pre: &mut Preclustering,
    cw: &CoverWeights,
    r: f64,
    params: &LpParams,
    band: &mut (usize, usize),
    rng: &mut R,
) -> Option<BTreeMap<Vec<VertexId>, f64>> {
    let n = pre.n();
    let total = cw.total() as f64;
    let eta = params.rate();
    let mut w: Vec<f64> = (0..n).map(|v| cw.d_cross(v) as f64).collect();
    let mut acc: BTreeMap<Vec<VertexId>, f64> = BTreeMap::new();
    let t_mw = params.rounds as f64;
    let mut covered = vec![false; n];
    for _ in 0..params.rounds {
        let sum: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / sum).collect();
        let (mut up, mut low) = (false, false);
        for v in (0..n).filter(|&v| cw.d_cross(v) > 0) {
            debug_assert!(w[v] > 0.0);
            let share = cw.d_cross(v) as f64 / total;
            up |= p[v] > 16.0 * share;
            low |= p[v] < params.gamma * params.eps / 16.0 * share;
        }
        band.0 += up as usize;
        band.1 += low as usize;
        let fam = (0..=params.retries).find_map(|_| find_disjoint_family(pre, cw, &p, r, params, rng))?;
        let z = fam.weight();
        covered.iter_mut().for_each(|c| *c = false);
        for s in &fam.sets {
            *acc.entry(s.clone()).or_insert(0.0) += z / t_mw;
            s.iter().for_each(|&v| covered[v] = true);
        }
        for v in 0..n {
            let m = if covered[v] { z - 1.0 } else { -1.0 };
            w[v] *= (-eta * m).exp();
        }
    }
    Some(acc)
}

/// Multiplicative weights over the covering LP. R is swept geometrically by
/// (1+γ) from d_cross(V), a lower bound on cover(OPT), up to the cover of the
/// preclustering itself; the first R whose T_MW rounds all succeed is kept.
/// Vertices covered at most 1−2γ get their atom entry set to 1 and the
/// result is scaled up until every vertex is covered.
pub fn mwu_solve<R: Rng + ?Sized>(pre: &mut Preclustering, params: &LpParams, rng: &mut R) -> LpOutcome {
    let n = pre.n();
    let cw = CoverWeights::from_pre(pre);
    let atoms = pre.rep().clustering().clone();
    let mut out = LpOutcome {
        z: FractionalSolution::indicator(&atoms),
        r: None,
        guesses: 0,
        fixed: 0,
        degenerate: false,
        band_upper_violations: 0,
        band_lower_violations: 0,
    };
    if cw.total() == 0 {
        return out;
    }
    let gamma = params.gamma;
    let lower = cw.total() as f64;
    let upper = lower + pre.rep().cost() as f64;
    let mut r = lower;
    let mut band = (0, 0);
    let acc = loop {
        if r > upper * (1.0 + gamma) {
            out.degenerate = true;
            return out;
        }
        out.guesses += 1;
        if let Some(acc) = run_rounds(pre, &cw, r, params, &mut band, rng) {
            break acc;
        }
        r *= 1.0 + gamma;
    };
    out.r = Some(r);
    (out.band_upper_violations, out.band_lower_violations) = band;

    let mut z_hat = acc;
    let mut cov = vec![0.0; n];
    for (s, z) in &z_hat {
        s.iter().for_each(|&v| cov[v] += z);
    }
    let mut fixed = vec![false; n];
    for v in 0..n {
        if cov[v] <= 1.0 - 2.0 * gamma && !fixed[v] {
            let k = atoms.cluster_of(v);
            let mut key = k.to_vec();
            key.sort_unstable();
            k.iter().for_each(|&x| fixed[x] = true);
            out.fixed += k.len();
            z_hat.insert(key, 1.0);
        }
    }
    // every vertex is now covered above 1−2γ; scale so the least covered
    // vertex gets exactly 1, never by more than 1/(1−2γ)
    let mut cov = vec![0.0; n];
    for (s, z) in &z_hat {
        s.iter().for_each(|&v| cov[v] += z);
    }
    let least = cov.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = if params.tight_scaling { 1.0 / least } else { 1.0 / (1.0 - 2.0 * gamma) };
    let support = z_hat.into_iter().map(|(s, z)| (s, z * scale)).collect();
    out.z = FractionalSolution::from_support(n, support).expect("averaged support is valid");
    out
}
