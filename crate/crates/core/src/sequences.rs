//! The summable sequence `d_n`, the doubling index sequence `c_n`, the
//! counting derivative `υ_k = #{n : c_n <= k}` and the basic piecewise-linear
//! Young function built from it.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::measures::MeasureFamily;

/// Floor for `d_1` when the family has no mass beyond radius one.
pub const D_MIN: f64 = 1.0;
/// Default minimum number of sequence terms.
pub const DEFAULT_HORIZON: usize = 12;
/// Indices at or above this value put `2^c` outside the double range.
pub const DOUBLE_GUARD: u64 = 1024;
/// Largest level count iterated term by term in the summation checks.
const MAX_DIRECT_TERMS: u64 = 10_000_000;

/// `d_1 = max(2 tail(1), D_MIN)`, `d_n = d_1 2^{1-n}`.
pub fn build_d(tail_at_1: f64, n_max: usize) -> Vec<f64> {
    let d1 = (2.0 * tail_at_1).max(D_MIN);
    (0..n_max).map(|i| d1 * 0.5f64.powi(i as i32)).collect()
}

/// Greedy doubling choice: `c_1 = 1`, and `c_{n+1}` is the smallest integer
/// `k >= max(2 c_n, c_n + 1)` with `tail(k) < d_{n+1}`.
pub fn choose_c<T: Fn(u64) -> f64>(tail: T, d: &[f64]) -> Result<Vec<u64>> {
    if d.is_empty() {
        return Ok(Vec::new());
    }
    if tail(1) >= d[0] {
        return Err(Error::Construction(format!("tail(1) = {} is not below d_1 = {}", tail(1), d[0])));
    }
    let mut c = vec![1u64];
    for &dn in &d[1..] {
        let last = *c.last().unwrap();
        let floor = last
            .checked_mul(2)
            .ok_or_else(|| Error::Construction("index sequence overflowed u64".into()))?;
        c.push(smallest_admissible(&tail, floor, dn)?);
    }
    Ok(c)
}

fn smallest_admissible<T: Fn(u64) -> f64>(tail: &T, from: u64, level: f64) -> Result<u64> {
    let admissible = |k: u64| tail(k) < level;
    if admissible(from) {
        return Ok(from);
    }
    // Gallop to a bracket, then bisect. `lo` is never admissible, `hi` is.
    let mut lo = from;
    let mut step = 1u64;
    let hi = loop {
        let probe = lo.checked_add(step).ok_or_else(|| {
            Error::Construction(format!("no admissible index below 2^64 for level {level}; tail does not decay"))
        })?;
        if admissible(probe) {
            break probe;
        }
        lo = probe;
        step = step.saturating_mul(2);
    };
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if admissible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `υ_k`: number of entries of `c` that are `<= k`. `υ_0 = 0`.
pub fn upsilon_count(c: &[u64], k: u64) -> u64 {
    c.partition_point(|&cn| cn <= k) as u64
}

/// The pair `(d_n, c_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSequence {
    d: Vec<f64>,
    c: Vec<u64>,
}

impl ScaleSequence {
    /// Builds at least `n_min` terms and keeps going until `2^{c_n}` leaves the
    /// double range, so every representable argument lies inside the horizon.
    pub fn from_family(family: &MeasureFamily, n_min: usize) -> Result<Self> {
        if n_min < 2 {
            return Err(Error::Invalid(format!("horizon must be at least 2, got {n_min}")));
        }
        let tail = |k: u64| family.p_tail(k as f64);
        let mut n = n_min;
        loop {
            let d = build_d(family.p_tail(1.0), n);
            let c = choose_c(tail, &d)?;
            if *c.last().unwrap() >= DOUBLE_GUARD {
                return Ok(Self { d, c });
            }
            n += 1;
        }
    }

    /// Wraps externally chosen sequences after checking the structural invariants.
    pub fn from_parts(d: Vec<f64>, c: Vec<u64>) -> Result<Self> {
        let s = Self { d, c };
        s.check_structure()?;
        Ok(s)
    }

    /// Re-runs the greedy choice with more terms until `c_N > k`.
    pub fn extend_beyond(&self, family: &MeasureFamily, k: u64) -> Result<Self> {
        let mut n = self.c.len();
        let tail = |k: u64| family.p_tail(k as f64);
        loop {
            let d = build_d(family.p_tail(1.0), n);
            let c = choose_c(tail, &d)?;
            if *c.last().unwrap() > k {
                return Ok(Self { d, c });
            }
            n += 1;
        }
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn c(&self) -> &[u64] {
        &self.c
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn upsilon(&self, k: u64) -> u64 {
        upsilon_count(&self.c, k)
    }

    pub fn basic_young(&self) -> BasicYoung<'_> {
        BasicYoung { c: &self.c }
    }

    fn check_structure(&self) -> Result<()> {
        if self.c.len() != self.d.len() || self.c.is_empty() {
            return Err(Error::Invalid("d and c must be non-empty and of equal length".into()));
        }
        if self.c[0] != 1 {
            return Err(Error::Invalid(format!("c_1 must be 1, got {}", self.c[0])));
        }
        for (n, w) in self.c.windows(2).enumerate() {
            if w[1] <= w[0] || w[1] < 2 * w[0] {
                return Err(Error::Invalid(format!("doubling fails at n = {}: {} -> {}", n + 1, w[0], w[1])));
            }
        }
        if self.d.windows(2).any(|w| w[1] >= w[0]) || self.d.iter().any(|&x| x <= 0.0) {
            return Err(Error::Invalid("d must be positive and strictly decreasing".into()));
        }
        Ok(())
    }

    /// Structural invariants plus `tail(c_n) < d_n` for every term.
    pub fn validate(&self, family: &MeasureFamily) -> Result<()> {
        self.check_structure()?;
        for (n, (&cn, &dn)) in self.c.iter().zip(&self.d).enumerate() {
            let t = family.p_tail(cn as f64);
            if t >= dn {
                return Err(Error::Invalid(format!("tail(c_{}) = {t} is not below d = {dn}", n + 1)));
            }
        }
        Ok(())
    }
}

/// Piecewise-constant `υ_basic = υ_n` on `[n, n+1)` and its integral.
#[derive(Debug, Clone, Copy)]
pub struct BasicYoung<'a> {
    c: &'a [u64],
}

impl BasicYoung<'_> {
    /// Arguments below `2 c_N` are covered: the unknown `c_{N+1}` is at least that.
    pub fn domain_end(&self) -> f64 {
        2.0 * *self.c.last().unwrap_or(&0) as f64
    }

    fn check(&self, x: f64) -> Result<()> {
        if !(x >= 0.0 && x < self.domain_end()) {
            return Err(Error::Range { x, lo: 0.0, hi: self.domain_end() });
        }
        Ok(())
    }

    pub fn rate(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(upsilon_count(self.c, x.floor() as u64) as f64)
    }

    /// `Σ_{k=1}^{m} υ_k = Σ_{c_j <= m} (m - c_j + 1)`.
    pub fn partial_sum(&self, m: u64) -> f64 {
        self.c.iter().take_while(|&&cj| cj <= m).map(|&cj| (m - cj + 1) as f64).sum()
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        if x < 1.0 {
            return Ok(0.0);
        }
        let n = x.floor() as u64;
        let frac = x - n as f64;
        Ok(self.partial_sum(n - 1) + upsilon_count(self.c, n) as f64 * frac)
    }
}

/// Both sides of the summation-by-parts identity for one measure, exactly:
/// `Σ_n (Σ_{q<=n} υ_q) m{n <= |z|^p < n+1}` and `Σ_n υ_n m{|z|^p >= n}`.
pub fn abel_sides(atoms: &[(f64, f64)], p: f64, c: &[u64]) -> Result<(BigRational, BigRational)> {
    let exact = |w: f64| BigRational::from_float(w).expect("finite weight");
    let levels: Vec<(f64, f64)> = atoms.iter().map(|&(r, w)| (r.powf(p), w)).collect();
    let top = levels.iter().map(|l| l.0).fold(0.0, f64::max);
    if top >= MAX_DIRECT_TERMS as f64 {
        return Err(Error::Invalid(format!("level {top} too large for term-by-term summation")));
    }
    let top = top.floor() as u64;
    if top as f64 >= 2.0 * *c.last().unwrap_or(&0) as f64 {
        return Err(Error::Range { x: top as f64, lo: 0.0, hi: 2.0 * *c.last().unwrap_or(&0) as f64 });
    }

    // Left: bucket atoms by floor(|z|^p), weight each bucket by the running sum.
    let mut buckets: BTreeMap<u64, BigRational> = BTreeMap::new();
    for &(lv, w) in &levels {
        if lv >= 1.0 {
            *buckets.entry(lv.floor() as u64).or_insert_with(BigRational::zero) += exact(w);
        }
    }
    let mut left = BigRational::zero();
    let mut running = 0u64;
    let mut next = 1u64;
    for (&n, mass) in &buckets {
        while next <= n {
            running += upsilon_count(c, next);
            next += 1;
        }
        left += BigRational::from_integer(BigInt::from(running)) * mass;
    }

    // Right: for each level n, the mass of the closed level set.
    let mut right = BigRational::zero();
    for n in 1..=top {
        let mass: BigRational = levels
            .iter()
            .filter(|&&(lv, _)| lv >= n as f64)
            .map(|&(_, w)| exact(w))
            .fold(BigRational::zero(), |a, b| a + b);
        right += BigRational::from_integer(BigInt::from(upsilon_count(c, n))) * mass;
    }
    Ok((left, right))
}

/// The three quantities of the de La Vallée Poussin bound:
/// `sup ∫_{|z|>=1} Υ_basic(|z|^p)`, `sup Σ υ_n m{|z|^p >= n}` and `Σ d_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundChain {
    pub young_integral: f64,
    pub level_sum: f64,
    pub d_sum: f64,
}

impl BoundChain {
    pub fn ordered(&self) -> bool {
        self.young_integral.is_finite()
            && self.level_sum.is_finite()
            && self.d_sum.is_finite()
            && self.young_integral <= self.level_sum
            && self.level_sum <= self.d_sum
    }
}

/// Evaluates the bound chain; the sequence is extended when the family
/// reaches beyond its last index.
pub fn bound_chain(family: &MeasureFamily, seq: &ScaleSequence) -> Result<BoundChain> {
    let p = family.p();
    let top = family.max_radius().powf(p);
    let seq = if top.floor() >= *seq.c().last().unwrap() as f64 {
        if top >= MAX_DIRECT_TERMS as f64 {
            return Err(Error::Invalid(format!("level {top} too large for term-by-term summation")));
        }
        seq.extend_beyond(family, top.floor() as u64)?
    } else {
        seq.clone()
    };
    let basic = seq.basic_young();
    let young_integral = family.integrate_sup(
        |r| basic.value(r.powf(p)).unwrap_or(f64::NAN),
        crate::measures::Region::PLevelAtLeast(1.0),
    )?;

    let top_n = top.floor() as u64;
    let mut level_sum = 0.0f64;
    for m in family.members() {
        let mut acc = 0.0;
        for n in 1..=top_n {
            let mass: f64 = m.atoms().iter().filter(|a| a.0.powf(p) >= n as f64).map(|a| a.1).sum();
            acc += seq.upsilon(n) as f64 * mass;
        }
        level_sum = level_sum.max(acc);
    }
    let d_sum = seq.d().iter().sum();
    Ok(BoundChain { young_integral, level_sum, d_sum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::AtomicMeasure;
    use proptest::prelude::*;

    fn two_atom() -> MeasureFamily {
        MeasureFamily::new(vec![AtomicMeasure::new(vec![(1.0, 1.0), (2.0, 1.0)]).unwrap()], 1.0).unwrap()
    }

    #[test]
    fn d_formula() {
        assert_eq!(build_d(3.0, 4), vec![6.0, 3.0, 1.5, 0.75]);
        assert_eq!(build_d(0.0, 3), vec![1.0, 0.5, 0.25]);
        let d = build_d(7.3, 30);
        assert!(d.iter().sum::<f64>() < 2.0 * d[0]);
    }

    #[test]
    fn c_for_two_atoms() {
        let f = two_atom();
        let c = choose_c(|k| f.p_tail(k as f64), &[6.0, 3.0, 1.5, 0.75]).unwrap();
        assert_eq!(c, vec![1, 2, 4, 8]);
    }

    #[test]
    fn c_for_zero_tail() {
        let c = choose_c(|_| 0.0, &build_d(0.0, 6)).unwrap();
        assert_eq!(c, vec![1, 2, 4, 8, 16, 32]);
        for (n, &cn) in c.iter().enumerate() {
            assert!(cn >= 1 << n);
        }
    }

    #[test]
    fn c_search_respects_the_tail() {
        // tail drops below 1 only from k = 37 on
        let tail = |k: u64| if k < 37 { 5.0 } else { 0.5 };
        let c = choose_c(tail, &[10.0, 1.0, 0.6]).unwrap();
        assert_eq!(c, vec![1, 37, 74]);
    }

    #[test]
    fn non_decaying_tail_aborts() {
        assert!(choose_c(|_| 1.0, &[2.0, 0.5]).is_err());
    }

    #[test]
    fn counting() {
        let c = [1, 2, 4, 8];
        assert_eq!(upsilon_count(&c, 0), 0);
        assert_eq!(upsilon_count(&c, 1), 1);
        assert_eq!(upsilon_count(&c, 3), 2);
        assert_eq!(upsilon_count(&c, 7), 3);
        for (n, &cn) in c.iter().enumerate() {
            assert_eq!(upsilon_count(&c, cn), n as u64 + 1);
        }
    }

    #[test]
    fn basic_young_values() {
        let c = [1u64, 2, 4, 8];
        let b = BasicYoung { c: &c };
        assert_eq!(b.value(1.0).unwrap(), 0.0);
        assert_eq!(b.value(3.0).unwrap(), 3.0);
        assert_eq!(b.value(3.5).unwrap(), 4.0);
        assert_eq!(b.rate(0.5).unwrap(), 0.0);
        assert!(b.value(16.0).is_err());
        // brute-force integral of the step function
        let mut acc = 0.0;
        for k in 1..12u64 {
            acc += upsilon_count(&c, k) as f64;
            assert_eq!(b.value((k + 1) as f64).unwrap(), acc);
        }
    }

    #[test]
    fn basic_young_is_superlinear_along_c() {
        let seq = ScaleSequence::from_family(&two_atom(), 12).unwrap();
        let b = seq.basic_young();
        let ratios: Vec<f64> = seq.c()[..seq.len() - 1]
            .iter()
            .map(|&cn| b.value(cn as f64).unwrap() / cn as f64)
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] > w[0]));
        assert!(*ratios.last().unwrap() > 4.0);
    }

    #[test]
    fn family_sequence_covers_the_double_range() {
        let seq = ScaleSequence::from_family(&two_atom(), 4).unwrap();
        assert!(*seq.c().last().unwrap() >= DOUBLE_GUARD);
        seq.validate(&two_atom()).unwrap();
    }

    #[test]
    fn abel_identity_two_atoms() {
        let f = two_atom();
        let (l, r) = abel_sides(f.members()[0].atoms(), 1.0, &[1, 2, 4, 8]).unwrap();
        assert_eq!(l, r);
        // υ_1 m{>=1} + υ_2 m{>=2} = 1*2 + 2*1
        assert_eq!(r, BigRational::from_integer(4.into()));
    }

    #[test]
    fn chain_on_two_atoms() {
        let f = two_atom();
        let seq = ScaleSequence::from_family(&f, 12).unwrap();
        let ch = bound_chain(&f, &seq).unwrap();
        assert!(ch.ordered(), "{ch:?}");
        assert_eq!(ch.young_integral, 1.0); // Υ_basic(1) + Υ_basic(2) = 0 + 1
        assert_eq!(ch.level_sum, 4.0);
    }

    #[test]
    fn choose_c_is_deterministic() {
        let f = two_atom();
        let a = ScaleSequence::from_family(&f, 12).unwrap();
        let b = ScaleSequence::from_family(&f, 12).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn abel_identity_is_exact(
            atoms in prop::collection::vec((0.05f64..6.0, 0.001f64..3.0), 1..10),
            p in 0.3f64..3.0,
        ) {
            let m = AtomicMeasure::new(atoms).unwrap();
            let f = MeasureFamily::new(vec![m.clone()], p).unwrap();
            let seq = ScaleSequence::from_family(&f, 12).unwrap();
            let (l, r) = abel_sides(m.atoms(), p, seq.c()).unwrap();
            prop_assert_eq!(l, r);
        }

        #[test]
        fn greedy_c_invariants(
            atoms in prop::collection::vec((0.05f64..20.0, 0.001f64..3.0), 1..10),
            p in 0.3f64..3.0,
        ) {
            let f = MeasureFamily::new(vec![AtomicMeasure::new(atoms).unwrap()], p).unwrap();
            let seq = ScaleSequence::from_family(&f, 6).unwrap();
            prop_assert!(seq.validate(&f).is_ok());
            let ch = bound_chain(&f, &seq).unwrap();
            prop_assert!(ch.ordered());
        }
    }
}
