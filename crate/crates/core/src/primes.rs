//! Prime generation, progression filtering and range factorization.
//!
//! Sieving is segmented: the resident working set is one segment of
//! `segment_size` integers plus the base primes up to the square root of the
//! upper bound. Segments are independent and may be processed in parallel;
//! their outputs are concatenated in ascending order so the result does not
//! depend on the number of worker threads.

pub mod cache;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default number of integers covered by one sieve segment.
pub const DEFAULT_SEGMENT: usize = 1 << 20;

/// Largest supported sieve bound.
pub const MAX_BOUND: u64 = 1_000_000_000;

/// Largest number of integers a single [`SpfTable`] may cover.
pub const MAX_TABLE_LEN: u64 = 1 << 26;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Euler's totient by trial division.
pub fn euler_phi(mut k: u64) -> u64 {
    let mut phi = k;
    let mut p = 2;
    while p * p <= k {
        if k.is_multiple_of(p) {
            while k.is_multiple_of(p) {
                k /= p;
            }
            phi -= phi / p;
        }
        p += 1;
    }
    if k > 1 {
        phi -= phi / k;
    }
    phi
}

/// Deterministic trial-division primality test, for small auxiliary queries.
pub fn is_prime(m: u64) -> bool {
    if m < 2 {
        return false;
    }
    if m < 4 {
        return true;
    }
    if m.is_multiple_of(2) || m.is_multiple_of(3) {
        return false;
    }
    let mut d = 5;
    while d * d <= m {
        if m.is_multiple_of(d) || m.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

/// Plain (non-segmented) sieve of Eratosthenes over `[0, limit]`.
pub fn simple_sieve(limit: u64) -> Vec<u32> {
    if limit < 2 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        out.push(i as u32);
        let mut j = i * i;
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    out
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Primes in `[lo, hi]`, sieved against `base` (which must contain every
/// prime up to `sqrt(hi)`).
fn sieve_segment(lo: u64, hi: u64, base: &[u32]) -> Vec<u32> {
    let len = (hi - lo + 1) as usize;
    let mut composite = vec![false; len];
    for &p in base {
        let p = p as u64;
        if p * p > hi {
            break;
        }
        let start = (p * p).max(lo.div_ceil(p) * p);
        let mut m = start;
        while m <= hi {
            composite[(m - lo) as usize] = true;
            m += p;
        }
    }
    composite
        .iter()
        .enumerate()
        .filter(|&(i, &c)| !c && lo + i as u64 >= 2)
        .map(|(i, _)| (lo + i as u64) as u32)
        .collect()
}

/// Ascending list of every prime up to `bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeSet {
    bound: u64,
    primes: Vec<u32>,
}

impl PrimeSet {
    pub(crate) fn from_parts(bound: u64, primes: Vec<u32>) -> Self {
        Self { bound, primes }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = u64> + '_ {
        self.primes.iter().map(|&p| p as u64)
    }

    /// The primes `<= x`.
    pub fn up_to(&self, x: u64) -> &[u32] {
        let end = self.primes.partition_point(|&p| (p as u64) <= x);
        &self.primes[..end]
    }

    pub fn contains(&self, m: u64) -> bool {
        m <= u32::MAX as u64 && self.primes.binary_search(&(m as u32)).is_ok()
    }
}

/// Every prime `<= n`, using the default segment size.
pub fn primes_up_to(n: u64) -> Result<PrimeSet> {
    primes_up_to_with(n, DEFAULT_SEGMENT)
}

pub fn primes_up_to_with(n: u64, segment_size: usize) -> Result<PrimeSet> {
    if n < 2 {
        return Err(Error::EmptyRange(n));
    }
    if n > MAX_BOUND {
        return Err(Error::InvalidRange {
            lo: 2,
            hi: n,
            reason: "bound exceeds 10^9",
        });
    }
    let seg = segment_size.max(1) as u64;
    let base = simple_sieve(isqrt(n));
    let starts: Vec<u64> = (0..)
        .map(|i| 2 + i * seg)
        .take_while(|&lo| lo <= n)
        .collect();
    let parts: Vec<Vec<u32>> = starts
        .par_iter()
        .map(|&lo| sieve_segment(lo, (lo + seg - 1).min(n), &base))
        .collect();
    let primes = parts.concat();
    Ok(PrimeSet { bound: n, primes })
}

/// The primes of `set` congruent to `l` modulo `k`.
pub fn primes_in_progression(set: &PrimeSet, k: u64, l: u64) -> Result<PrimeSet> {
    check_progression(k, l)?;
    if k == 1 {
        return Ok(set.clone());
    }
    let primes = set
        .primes
        .iter()
        .copied()
        .filter(|&p| p as u64 % k == l % k)
        .collect();
    Ok(PrimeSet {
        bound: set.bound,
        primes,
    })
}

pub(crate) fn check_progression(k: u64, l: u64) -> Result<()> {
    if k == 0 || l == 0 || l > k || gcd(k, l) != 1 {
        return Err(Error::InvalidProgression { k, l });
    }
    Ok(())
}

/// Prime factorization `m = p1^a1 ... pt^at`, primes ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub m: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn product(&self) -> u64 {
        self.factors.iter().map(|&(p, a)| p.pow(a)).product()
    }
}

/// Factorization data for every integer in `[lo, hi]`.
///
/// Besides the smallest prime factor of each entry the table keeps the full
/// list of prime-power factors, so [`SpfTable::factorize`] never has to leave
/// the range (the cofactor `m / spf(m)^a` generally lies below `lo` in a
/// segmented sweep). `m = 1` has no factors and its spf is `None`.
#[derive(Debug, Clone)]
pub struct SpfTable {
    lo: u64,
    hi: u64,
    offsets: Vec<u32>,
    primes: Vec<u32>,
    exps: Vec<u8>,
}

impl SpfTable {
    pub fn new(lo: u64, hi: u64) -> Result<Self> {
        if hi > MAX_BOUND {
            return Err(Error::InvalidRange {
                lo,
                hi,
                reason: "upper end exceeds 10^9",
            });
        }
        let base = simple_sieve(isqrt(hi));
        Self::with_base(lo, hi, &base)
    }

    /// Builds the table using caller-supplied base primes covering
    /// `sqrt(hi)`; lets a sweep over many segments sieve the base once.
    pub fn with_base(lo: u64, hi: u64, base: &[u32]) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::InvalidRange {
                lo,
                hi,
                reason: "need 1 <= lo <= hi",
            });
        }
        if hi - lo + 1 > MAX_TABLE_LEN {
            return Err(Error::InvalidRange {
                lo,
                hi,
                reason: "range longer than the table limit",
            });
        }
        let len = (hi - lo + 1) as usize;
        let root = isqrt(hi);
        let base: Vec<u64> = base
            .iter()
            .map(|&p| p as u64)
            .take_while(|&p| p <= root)
            .collect();

        // pass 1: count distinct prime factors per entry
        let mut rem: Vec<u64> = (lo..=hi).collect();
        let mut counts = vec![0u32; len + 1];
        for &p in &base {
            let mut m = lo.div_ceil(p) * p;
            while m <= hi {
                let i = (m - lo) as usize;
                counts[i] += 1;
                while rem[i].is_multiple_of(p) {
                    rem[i] /= p;
                }
                m += p;
            }
        }
        for (c, &r) in counts.iter_mut().zip(&rem) {
            if r > 1 {
                *c += 1;
            }
        }
        let mut offsets = Vec::with_capacity(len + 1);
        let mut acc = 0u32;
        for &c in &counts[..len] {
            offsets.push(acc);
            acc += c;
        }
        offsets.push(acc);

        // pass 2: fill (p, a) pairs in ascending prime order
        let total = acc as usize;
        let mut primes = vec![0u32; total];
        let mut exps = vec![0u8; total];
        let mut cursor: Vec<u32> = offsets[..len].to_vec();
        for (i, r) in rem.iter_mut().enumerate() {
            *r = lo + i as u64;
        }
        for &p in &base {
            let mut m = lo.div_ceil(p) * p;
            while m <= hi {
                let i = (m - lo) as usize;
                let mut a = 0u8;
                while rem[i].is_multiple_of(p) {
                    rem[i] /= p;
                    a += 1;
                }
                let slot = cursor[i] as usize;
                primes[slot] = p as u32;
                exps[slot] = a;
                cursor[i] += 1;
                m += p;
            }
        }
        for (i, &r) in rem.iter().enumerate() {
            if r > 1 {
                let slot = cursor[i] as usize;
                primes[slot] = r as u32;
                exps[slot] = 1;
            }
        }
        Ok(Self {
            lo,
            hi,
            offsets,
            primes,
            exps,
        })
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    fn index(&self, m: u64) -> Result<usize> {
        if m < self.lo || m > self.hi {
            return Err(Error::OutOfRange {
                value: m,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok((m - self.lo) as usize)
    }

    /// Smallest prime factor; `None` for `m = 1`.
    pub fn spf(&self, m: u64) -> Result<Option<u64>> {
        Ok(self.factors(m)?.next().map(|(p, _)| p))
    }

    /// Prime-power factors of `m` as `(p, a)`, ascending in `p`.
    pub fn factors(&self, m: u64) -> Result<impl Iterator<Item = (u64, u32)> + '_> {
        let i = self.index(m)?;
        Ok(self.factors_at(i))
    }

    pub(crate) fn factors_at(&self, i: usize) -> impl Iterator<Item = (u64, u32)> + '_ {
        let (a, b) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
        self.primes[a..b]
            .iter()
            .zip(&self.exps[a..b])
            .map(|(&p, &e)| (p as u64, e as u32))
    }

    pub fn factorize(&self, m: u64) -> Result<Factorization> {
        Ok(Factorization {
            m,
            factors: self.factors(m)?.collect(),
        })
    }
}

/// Base primes covering `sqrt(hi)`.
pub(crate) fn base_primes(hi: u64) -> Vec<u32> {
    simple_sieve(isqrt(hi))
}
