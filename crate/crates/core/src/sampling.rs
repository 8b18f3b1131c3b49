use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded, stream-addressable randomness. Identical (seed, stream) pairs give
/// identical draw sequences.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> RngStream {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Child stream determined by (seed, stream, id) only, not by draws so far.
    pub fn fork(&self, id: u64) -> RngStream {
        let s = splitmix64(self.seed ^ splitmix64(self.stream.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ id));
        RngStream::new(s, splitmix64(id.wrapping_add(self.stream)))
    }

    /// Child stream drawn from this one; advances `self`.
    pub fn split(&mut self) -> RngStream {
        let s = self.inner.next_u64();
        let t = self.inner.next_u64();
        RngStream::new(s, t)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Independent Bernoulli(q) selection over `0..len` by geometric skipping.
pub fn bernoulli_indices<R: Rng + ?Sized>(len: usize, q: f64, rng: &mut R, out: &mut Vec<usize>) {
    if q >= 1.0 {
        out.extend(0..len);
        return;
    }
    if q <= 0.0 {
        return;
    }
    let lq = (1.0 - q).ln();
    let mut i = 0usize;
    loop {
        let u: f64 = rng.gen();
        let skip = ((1.0 - u).ln() / lq).floor();
        if skip >= (len - i) as f64 {
            return;
        }
        i += skip as usize;
        out.push(i);
        i += 1;
        if i >= len {
            return;
        }
    }
}

const ABSENT: usize = usize::MAX;

/// Weighted sampling without replacement over items `0..n`.
///
/// Items are grouped into power-of-two weight levels; a level is chosen in
/// proportion to its total and an item inside it by rejection, which accepts
/// with probability at least ½.
#[derive(Clone, Debug)]
pub struct WeightedSampler {
    weights: Vec<f64>,
    level: Vec<usize>,
    pos: Vec<usize>,
    buckets: Vec<Vec<usize>>,
    totals: Vec<f64>,
    // upper bound 2^(e+1) of each level
    ceil: Vec<f64>,
    active: Vec<usize>,
    total: f64,
    remaining: usize,
}

impl WeightedSampler {
    /// Real weights, all finite and positive.
    pub fn new(weights: &[f64]) -> Result<WeightedSampler> {
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Argument(format!("weight {w} at index {i} is not positive")));
        }
        let exps: Vec<i32> = weights.iter().map(|w| w.log2().floor() as i32).collect();
        let lo = exps.iter().copied().min().unwrap_or(0);
        let hi = exps.iter().copied().max().unwrap_or(0);
        let nl = (hi - lo + 1) as usize;
        let mut s = WeightedSampler {
            weights: weights.to_vec(),
            level: vec![0; weights.len()],
            pos: vec![ABSENT; weights.len()],
            buckets: vec![Vec::new(); nl],
            totals: vec![0.0; nl],
            ceil: (0..nl).map(|l| 2f64.powi(lo + l as i32 + 1)).collect(),
            active: Vec::new(),
            total: 0.0,
            remaining: weights.len(),
        };
        for (a, &w) in weights.iter().enumerate() {
            let mut l = (exps[a] - lo) as usize;
            // log2 rounding at exact powers of two
            while w >= s.ceil[l] && l + 1 < nl {
                l += 1;
            }
            while l > 0 && w < s.ceil[l] / 2.0 {
                l -= 1;
            }
            s.level[a] = l;
            s.pos[a] = s.buckets[l].len();
            s.buckets[l].push(a);
            s.totals[l] += w;
            s.total += w;
        }
        s.active = (0..nl).filter(|&l| !s.buckets[l].is_empty()).collect();
        Ok(s)
    }

    /// Integer weights; totals are exact while below 2^53.
    pub fn from_integers(weights: &[u64]) -> Result<WeightedSampler> {
        if let Some(i) = weights.iter().position(|&w| w == 0) {
            return Err(Error::Argument(format!("zero weight at index {i}")));
        }
        WeightedSampler::new(&weights.iter().map(|&w| w as f64).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.remaining
    }

    pub fn is_empty(&self) -> bool {
        self.remaining == 0
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn weight(&self, a: usize) -> f64 {
        self.weights[a]
    }

    pub fn contains(&self, a: usize) -> bool {
        self.pos.get(a).is_some_and(|&p| p != ABSENT)
    }

    /// Remaining items in increasing id order.
    pub fn remaining_sorted(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&a| self.contains(a)).collect()
    }

    /// Draws an item with probability w_a / total without removing it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.remaining == 0 {
            return Err(Error::State("sampling from an empty sampler".into()));
        }
        let mut r = rng.gen::<f64>() * self.total;
        let mut chosen = *self.active.last().expect("nonempty sampler has an active level");
        for &l in &self.active {
            if r < self.totals[l] {
                chosen = l;
                break;
            }
            r -= self.totals[l];
        }
        let bucket = &self.buckets[chosen];
        let ceil = self.ceil[chosen];
        loop {
            let a = bucket[rng.gen_range(0..bucket.len())];
            if rng.gen::<f64>() * ceil < self.weights[a] {
                return Ok(a);
            }
        }
    }

    /// Draws an item with probability w_a / total and removes it.
    pub fn sample_remove<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        let a = self.sample(rng)?;
        self.remove(a);
        Ok(a)
    }

    /// Removes `a`; a no-op returning false if it is absent.
    pub fn remove(&mut self, a: usize) -> bool {
        if !self.contains(a) {
            log::debug!("sampler: remove of absent item {a}");
            return false;
        }
        let l = self.level[a];
        let i = self.pos[a];
        let bucket = &mut self.buckets[l];
        bucket.swap_remove(i);
        if let Some(&b) = bucket.get(i) {
            self.pos[b] = i;
        }
        self.pos[a] = ABSENT;
        self.remaining -= 1;
        if bucket.is_empty() {
            self.totals[l] = 0.0;
            let k = self.active.iter().position(|&x| x == l).expect("level is active");
            self.active.remove(k);
            self.total = self.active.iter().map(|&x| self.totals[x]).sum();
        } else {
            self.totals[l] -= self.weights[a];
            self.total -= self.weights[a];
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals() {
        assert_eq!(WeightedSampler::from_integers(&[1]).unwrap().total_weight(), 1.0);
        assert_eq!(WeightedSampler::from_integers(&[1, 3]).unwrap().total_weight(), 4.0);
        assert!(WeightedSampler::from_integers(&[1, 0]).is_err());
        assert!(WeightedSampler::new(&[1.0, -2.0]).is_err());
        assert!(WeightedSampler::new(&[f64::NAN]).is_err());
    }

    #[test]
    fn empty_sampler_is_a_state_error() {
        let mut s = WeightedSampler::from_integers(&[2]).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert_eq!(s.sample_remove(&mut rng).unwrap(), 0);
        assert!(matches!(s.sample_remove(&mut rng), Err(Error::State(_))));
    }

    #[test]
    fn power_of_two_weights_land_in_their_level() {
        let s = WeightedSampler::new(&[1.0, 2.0, 4.0, 3.0, 0.5]).unwrap();
        for a in 0..5 {
            let c = s.ceil[s.level[a]];
            assert!(s.weights[a] < c && s.weights[a] >= c / 2.0);
        }
    }

    #[test]
    fn remove_is_idempotent() {
        let mut s = WeightedSampler::from_integers(&[5, 1, 1]).unwrap();
        assert!(s.remove(0));
        assert!(!s.remove(0));
        assert_eq!(s.total_weight(), 2.0);
        s.remove(1);
        let mut rng = RngStream::new(7, 3);
        assert_eq!(s.sample_remove(&mut rng).unwrap(), 2);
    }

    #[test]
    fn forks_are_reproducible() {
        let a = RngStream::new(42, 1).fork(9);
        let b = RngStream::new(42, 1).fork(9);
        let c = RngStream::new(42, 1).fork(10);
        let draw = |mut r: RngStream| (0..4).map(|_| r.next_u64()).collect::<Vec<_>>();
        assert_eq!(draw(a), draw(b.clone()));
        assert_ne!(draw(b), draw(c));
    }
}
