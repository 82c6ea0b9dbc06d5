//! The pre-mollification right derivative `υ̂`: the counting derivative pushed
//! down by `θ`, stretched over the dyadic intervals `[2^{c_n}, 2^{c_{n+1}})` and
//! linearly interpolated, with a polynomial start `x^q` when `p < 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::decimal;

/// Largest exponent `k` with `2^k` representable.
pub const MAX_EXP: u64 = 1023;

/// Exact `2^k` for `k <= 1023`.
pub fn pow2(k: u64) -> f64 {
    assert!(k <= MAX_EXP, "2^{k} is not representable");
    f64::from_bits((k + 1023) << 52)
}

/// The push-down `θ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ThetaSpec {
    #[default]
    Sqrt,
    Power {
        #[serde(with = "decimal")]
        beta: f64,
    },
}

impl ThetaSpec {
    pub fn power(beta: f64) -> Result<Self> {
        let s = ThetaSpec::Power { beta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ThetaSpec::Sqrt => Ok(()),
            ThetaSpec::Power { beta } if beta > 0.0 && beta <= 0.5 => Ok(()),
            ThetaSpec::Power { beta } => Err(Error::Invalid(format!("theta exponent must lie in (0, 1/2], got {beta}"))),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ThetaSpec::Sqrt => x.sqrt(),
            ThetaSpec::Power { beta } => x.powf(beta),
        }
    }
}

pub fn theta_eval(spec: ThetaSpec, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Range { x, lo: 0.0, hi: f64::INFINITY });
    }
    Ok(spec.eval(x))
}

/// `ῡ_{c_n}` for `n >= 0`, with the convention `ῡ_0 = 1/2`.
pub fn bar_level(spec: ThetaSpec, n: usize) -> f64 {
    if n == 0 {
        0.5
    } else {
        spec.eval(n as f64)
    }
}

/// Stretched step function: `1/2` on `[0, 2)`, `θ(n)` on `[2^{c_n}, 2^{c_{n+1}})`.
pub fn bar_upsilon_eval(c: &[u64], spec: ThetaSpec, x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Range { x, lo: 0.0, hi: f64::MAX });
    }
    let n = c.iter().take_while(|&&cn| cn <= MAX_EXP && pow2(cn) <= x).count();
    if n == c.len() && c.last().is_some_and(|&cl| cl <= MAX_EXP) {
        // beyond the last stored step the next index is unknown
        let hi = pow2(*c.last().unwrap());
        if x >= 2.0 * hi && c.last().unwrap() * 2 <= MAX_EXP {
            return Err(Error::Range { x, lo: 0.0, hi: pow2(c.last().unwrap() * 2) });
        }
    }
    Ok(bar_level(spec, n))
}

/// `(x_0, q)` of the polynomial start for `0 < p < 2`.
pub fn x0_q(p: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::Domain(format!("polynomial start needs 0 < p < 2, got {p}")));
    }
    let q = 4.0 / p - 1.0;
    let x0 = (p / (6.0 * (4.0 - p))).powf(p / (4.0 - 2.0 * p));
    Ok((x0, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SegmentKind {
    /// `base + slope (x - left)`.
    Affine {
        #[serde(with = "decimal")]
        slope: f64,
        #[serde(with = "decimal")]
        base: f64,
    },
    /// `x^exponent`.
    Power {
        #[serde(with = "decimal")]
        exponent: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(with = "decimal")]
    pub left: f64,
    #[serde(with = "decimal")]
    pub right: f64,
    #[serde(flatten)]
    pub kind: SegmentKind,
}

impl Segment {
    pub fn value(&self, x: f64) -> f64 {
        match self.kind {
            SegmentKind::Affine { slope, base } => base + slope * (x - self.left),
            SegmentKind::Power { exponent } => x.powf(exponent),
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        match self.kind {
            SegmentKind::Affine { slope, .. } => slope,
            SegmentKind::Power { exponent } => exponent * x.powf(exponent - 1.0),
        }
    }

    /// `∫_a^b` of the segment's formula.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self.kind {
            SegmentKind::Affine { slope, base } => {
                let (u, v) = (a - self.left, b - self.left);
                base * (v - u) + 0.5 * slope * (v - u) * (v + u)
            }
            SegmentKind::Power { exponent } => {
                let e = exponent + 1.0;
                (b.powf(e) - a.powf(e)) / e
            }
        }
    }

    pub fn affine_slope(&self) -> Option<f64> {
        match self.kind {
            SegmentKind::Affine { slope, .. } => Some(slope),
            SegmentKind::Power { .. } => None,
        }
    }
}

/// `υ̂` as an ordered list of segments covering `[0, 2^{c_L}]`, where `c_L` is
/// the last index with a representable power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDerivative {
    p: f64,
    theta: ThetaSpec,
    c: Vec<u64>,
    segments: Vec<Segment>,
}

const CONTINUITY_TOL: f64 = 1e-12;

impl PiecewiseDerivative {
    pub fn build(c: &[u64], theta: ThetaSpec, p: f64) -> Result<Self> {
        theta.validate()?;
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Invalid(format!("exponent p must be positive, got {p}")));
        }
        if c.first() != Some(&1) {
            return Err(Error::Invalid("index sequence must start at c_1 = 1".into()));
        }
        let usable: Vec<u64> = c.iter().copied().take_while(|&cn| cn <= MAX_EXP).collect();
        if usable.len() < 3 {
            return Err(Error::Construction(format!(
                "only {} indices with representable 2^c; the tail decays too slowly for double precision",
                usable.len()
            )));
        }

        let mut segments = Vec::new();
        if p >= 2.0 {
            segments.push(Segment { left: 0.0, right: 2.0, kind: SegmentKind::Affine { slope: 0.25, base: 0.0 } });
        } else {
            let (x0, q) = x0_q(p)?;
            let at_x0 = x0.powf(q);
            let h = at_x0 + (1.25 - x0) / 6.0;
            segments.push(Segment { left: 0.0, right: x0, kind: SegmentKind::Power { exponent: q } });
            segments.push(Segment { left: x0, right: 1.25, kind: SegmentKind::Affine { slope: 1.0 / 6.0, base: at_x0 } });
            segments.push(Segment {
                left: 1.25,
                right: 2.0,
                kind: SegmentKind::Affine { slope: 4.0 / 3.0 * (0.5 - h), base: h },
            });
        }
        for n in 1..usable.len() {
            let (lo, hi) = (pow2(usable[n - 1]), pow2(usable[n]));
            let (from, to) = (bar_level(theta, n - 1), bar_level(theta, n));
            segments.push(Segment { left: lo, right: hi, kind: SegmentKind::Affine { slope: (to - from) / (hi - lo), base: from } });
        }

        let hat = Self { p, theta, c: c.to_vec(), segments };
        hat.check()?;
        Ok(hat)
    }

    /// Rebuilds from stored parts and re-checks every invariant.
    pub fn from_parts(p: f64, theta: ThetaSpec, c: Vec<u64>, segments: Vec<Segment>) -> Result<Self> {
        let hat = Self { p, theta, c, segments };
        hat.check()?;
        Ok(hat)
    }

    fn check(&self) -> Result<()> {
        let segs = &self.segments;
        if segs.is_empty() || segs[0].left != 0.0 {
            return Err(Error::Construction("segments must start at 0".into()));
        }
        for (i, s) in segs.iter().enumerate() {
            if !(s.right > s.left) {
                return Err(Error::Construction(format!("segment {i} is empty: [{}, {}]", s.left, s.right)));
            }
            if let Some(next) = segs.get(i + 1) {
                if next.left != s.right {
                    return Err(Error::Construction(format!("gap between segments {i} and {}", i + 1)));
                }
                let (a, b) = (s.value(s.right), next.value(next.left));
                if (a - b).abs() > CONTINUITY_TOL * a.abs().max(1.0) {
                    return Err(Error::Construction(format!("discontinuity at {}: {a} vs {b}", s.right)));
                }
            }
            let slope_ok = match s.kind {
                SegmentKind::Affine { slope, base } => slope >= 0.0 && base >= 0.0 && slope.is_finite(),
                SegmentKind::Power { exponent } => exponent > 0.0,
            };
            if !slope_ok {
                return Err(Error::Construction(format!("segment {i} is decreasing or negative")));
            }
        }
        let from = self.concave_from();
        for i in from + 1..segs.len() {
            let (a, b) = (segs[i - 1].affine_slope(), segs[i].affine_slope());
            if let (Some(a), Some(b)) = (a, b) {
                if b > a {
                    return Err(Error::Construction(format!("slope increases at knot {}: {a} -> {b}", segs[i].left)));
                }
            }
        }
        if (self.eval_unchecked(2.0) - 0.5).abs() > CONTINUITY_TOL {
            return Err(Error::Construction(format!("value at 2 is {}, expected 1/2", self.eval_unchecked(2.0))));
        }
        Ok(())
    }

    /// First segment index from which affine slopes are non-increasing.
    ///
    /// For `p >= 2` that is the whole line. For `p < 2` the segment ending at
    /// 5/4 has slope 1/6 while the next one is steeper, so the monotone run
    /// starts at the segment on `[5/4, 2]`.
    pub fn concave_from(&self) -> usize {
        if self.p >= 2.0 {
            0
        } else {
            2
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn theta(&self) -> ThetaSpec {
        self.theta
    }

    pub fn c(&self) -> &[u64] {
        &self.c
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Number of indices whose power of two is representable (`L`).
    pub fn usable_len(&self) -> usize {
        self.c.iter().take_while(|&&cn| cn <= MAX_EXP).count()
    }

    /// `2^{c_n}` for `1 <= n <= L`.
    pub fn dyadic_knot(&self, n: usize) -> Option<f64> {
        if n == 0 || n > self.usable_len() {
            None
        } else {
            Some(pow2(self.c[n - 1]))
        }
    }

    pub fn domain_end(&self) -> f64 {
        self.segments.last().unwrap().right
    }

    /// `(x_0, q)` for `p < 2`.
    pub fn polynomial_start(&self) -> Option<(f64, f64)> {
        match self.segments[0].kind {
            SegmentKind::Power { exponent } => Some((self.segments[0].right, exponent)),
            SegmentKind::Affine { .. } => None,
        }
    }

    /// Interior knots: every segment boundary except `0` and the domain end.
    pub fn knots(&self) -> Vec<f64> {
        self.segments[..self.segments.len() - 1].iter().map(|s| s.right).collect()
    }

    /// Index of the segment containing `x`, right-continuous at knots.
    pub fn segment_index(&self, x: f64) -> usize {
        let i = self.segments.partition_point(|s| s.left <= x);
        i.saturating_sub(1).min(self.segments.len() - 1)
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        self.segments[self.segment_index(x)].value(x)
    }

    fn check_range(&self, x: f64) -> Result<()> {
        if !(x >= 0.0 && x <= self.domain_end()) {
            return Err(Error::Range { x, lo: 0.0, hi: self.domain_end() });
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// Right derivative of `υ̂`.
    pub fn slope(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        let s = &self.segments[self.segment_index(x)];
        Ok(s.slope(x))
    }

    /// `∫_0^x υ̂`, the unmollified Young function.
    pub fn integral(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        let mut acc = 0.0;
        for s in &self.segments {
            if s.left >= x {
                break;
            }
            acc += s.integral(s.left, x.min(s.right));
        }
        Ok(acc)
    }
}
