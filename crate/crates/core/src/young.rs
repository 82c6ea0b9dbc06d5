//! Mollification of `υ̂` into the smooth derivative `υ̂_ε` and the Young
//! function `Υ(x) = ∫_0^x υ̂_ε`.
//!
//! Convolving a piecewise-affine function with a symmetric bump changes it only
//! within `ε` of a kink. Near a knot `k` with one-sided slopes `λ_l`, `λ_r`:
//!
//! ```text
//! υ̂_ε(x) = υ̂(x) - (λ_l - λ_r) G(|x - k|)       G(t) = ∫_t^ε (u - t) η_ε(u) du
//! Υ''(x) = λ_l - (λ_l - λ_r) M(k - x)           M(t) = ∫_t^ε η_ε(u) du
//! ```
//!
//! and integrating `G` once more gives `H(t) = ½ ∫_t^ε (u - t)^2 η_ε(u) du`,
//! so every value of `Υ` is a table lookup plus closed forms in these moments.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::derivative::{PiecewiseDerivative, Segment, ThetaSpec};
use crate::error::{Error, Result};
use crate::numfmt::{decimal, format_f64, parse_f64};
use crate::quadrature::adaptive_simpson;

pub const DEFAULT_EPSILON: f64 = 1.0 / 16.0;
pub const ARTIFACT_VERSION: u32 = 1;
/// Upper bound for the mollified gap.
pub const GAP_BOUND: f64 = 1.0 / 16.0;
const MAX_HALVINGS: u32 = 4;
const MOMENT_TOL: f64 = 1e-14;
const MOMENT_RTOL: f64 = 1e-13;
const MOMENT_DEPTH: u32 = 50;

fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (1.0 / (u * u - 1.0)).exp()
    } else {
        0.0
    }
}

/// `1 / ∫_{-1}^{1} exp(1/(u^2-1)) du`.
pub fn normalization() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let half = adaptive_simpson(bump, 0.0, 1.0, 1e-16, 60).expect("bump integral converges");
        1.0 / (2.0 * half)
    })
}

/// The standard bump `η_ε(y) = (C/ε) exp(1/((y/ε)^2 - 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    epsilon: f64,
    c: f64,
}

impl Mollifier {
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_constant(epsilon, normalization())
    }

    pub fn with_constant(epsilon: f64, c: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.125) {
            return Err(Error::Invalid(format!("epsilon must lie in (0, 1/8), got {epsilon}")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Invalid(format!("mollifier constant must be positive, got {c}")));
        }
        Ok(Self { epsilon, c })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.c / self.epsilon * bump(y / self.epsilon)
    }

    /// `C ∫_τ^1 (u - τ)^k bump(u) du`, accurate relative to its own size so
    /// that tiny moments near the window edge keep their significant digits.
    fn unit_moment(&self, tau: f64, power: i32) -> f64 {
        if tau >= 1.0 {
            return 0.0;
        }
        // in the distance v = 1 - u to the support edge both factors keep
        // their relative accuracy, also when tau is close to 1
        let w = 1.0 - tau;
        let f = |v: f64| if v > 0.0 { (w - v).powi(power) * (-1.0 / (v * (2.0 - v))).exp() } else { 0.0 };
        let panels = 64;
        let h = w / panels as f64;
        let coarse: f64 = (0..panels)
            .map(|i| {
                let a = i as f64 * h;
                h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h))
            })
            .sum();
        let tol = (coarse.abs() * MOMENT_RTOL).clamp(1e-290, MOMENT_TOL);
        self.c * adaptive_simpson(f, 0.0, w, tol, MOMENT_DEPTH).expect("moment quadrature converges")
    }

    /// `∫_t^ε η_ε` for any real `t`; equals `1 - M(-t)` for negative `t`.
    pub fn mass_above(&self, t: f64) -> f64 {
        let tau = t / self.epsilon;
        if tau <= -1.0 {
            1.0
        } else if tau < 0.0 {
            1.0 - self.unit_moment(-tau, 0)
        } else {
            self.unit_moment(tau, 0)
        }
    }

    /// `G(t) = ∫_t^ε (u - t) η_ε(u) du` for `t >= 0`.
    pub fn first_moment_above(&self, t: f64) -> f64 {
        self.epsilon * self.unit_moment(t.abs() / self.epsilon, 1)
    }

    /// `H(t) = ½ ∫_t^ε (u - t)^2 η_ε(u) du` for `t >= 0`.
    pub fn second_moment_above(&self, t: f64) -> f64 {
        self.epsilon * self.epsilon * 0.5 * self.unit_moment(t.abs() / self.epsilon, 2)
    }

    /// `∫_0^ε y η_ε(y) dy`.
    pub fn half_first_moment(&self) -> f64 {
        self.first_moment_above(0.0)
    }
}

pub fn mollifier_eval(epsilon: f64, y: f64) -> Result<f64> {
    Ok(Mollifier::new(epsilon)?.eval(y))
}

/// Where mollification starts: after 1 for `p >= 2`, after `5/4 - ε` below.
pub fn mollify_from(p: f64, epsilon: f64) -> f64 {
    if p >= 2.0 {
        1.0
    } else {
        1.25 - epsilon
    }
}

/// Slope jumps `λ_l - λ_r` at the knots that get mollified.
fn knot_jumps(hat: &PiecewiseDerivative, epsilon: f64) -> Vec<Option<f64>> {
    let segs = hat.segments();
    let start = mollify_from(hat.p(), epsilon);
    (0..segs.len())
        .map(|i| {
            if i == 0 {
                return None;
            }
            let k = segs[i].left;
            (k - epsilon >= start).then(|| segs[i - 1].slope(k) - segs[i].slope(k))
        })
        .collect()
}

/// Starts at `ε = 2^-4` and halves until the moment bound
/// `∫_0^ε y η_ε ≤ min(2^-2, ε/2)` and every knot gap `|λ_l - λ_r| ∫_0^ε y η_ε < 2^-4` hold.
pub fn select_epsilon(hat: &PiecewiseDerivative) -> Result<f64> {
    let mut eps = DEFAULT_EPSILON;
    for _ in 0..=MAX_HALVINGS {
        let m = Mollifier::new(eps)?;
        let m1 = m.half_first_moment();
        let worst = knot_jumps(hat, eps).into_iter().flatten().map(f64::abs).fold(0.0, f64::max);
        if m1 <= 0.25 && m1 <= eps / 2.0 && worst * m1 < GAP_BOUND {
            return Ok(eps);
        }
        eps /= 2.0;
    }
    Err(Error::Construction("no epsilon satisfies the mollification bounds".into()))
}

/// A mollification window around an interior knot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub knot: f64,
    pub lambda_l: f64,
    pub lambda_r: f64,
}

impl Window {
    pub fn jump(&self) -> f64 {
        self.lambda_l - self.lambda_r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YoungFunction {
    hat: PiecewiseDerivative,
    moll: Mollifier,
    /// `jumps[i]`: slope jump at `segments[i].left` when that knot is mollified.
    jumps: Vec<Option<f64>>,
    /// `table[i] = Υ(segments[i].left)`.
    table: Vec<f64>,
    h0: f64,
}

#[derive(Serialize, Deserialize)]
struct ArtifactDoc {
    version: u32,
    #[serde(with = "decimal")]
    p: f64,
    #[serde(with = "decimal")]
    epsilon: f64,
    theta: ThetaSpec,
    c: Vec<u64>,
    #[serde(with = "decimal")]
    mollifier_c: f64,
    segments: Vec<Segment>,
    knot_cumulative: Vec<[String; 2]>,
}

impl YoungFunction {
    pub fn build(hat: PiecewiseDerivative, epsilon: f64) -> Result<Self> {
        let moll = Mollifier::new(epsilon)?;
        let jumps = knot_jumps(&hat, epsilon);
        let h0 = moll.second_moment_above(0.0);
        let table = Self::compute_table(&hat, &jumps, h0);
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::Construction("cumulative table overflowed".into()));
        }
        Ok(Self { hat, moll, jumps, table, h0 })
    }

    /// Builds with the automatically selected `ε`.
    pub fn build_default(hat: PiecewiseDerivative) -> Result<Self> {
        let eps = select_epsilon(&hat)?;
        Self::build(hat, eps)
    }

    fn compute_table(hat: &PiecewiseDerivative, jumps: &[Option<f64>], h0: f64) -> Vec<f64> {
        let segs = hat.segments();
        let mut table = Vec::with_capacity(segs.len());
        table.push(0.0);
        for i in 0..segs.len() - 1 {
            let s = &segs[i];
            let mut v = table[i] + s.integral(s.left, s.right);
            v -= jumps[i].unwrap_or(0.0) * h0;
            v -= jumps[i + 1].unwrap_or(0.0) * h0;
            table.push(v);
        }
        table
    }

    pub fn p(&self) -> f64 {
        self.hat.p()
    }

    pub fn epsilon(&self) -> f64 {
        self.moll.epsilon()
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.moll
    }

    pub fn hat(&self) -> &PiecewiseDerivative {
        &self.hat
    }

    pub fn theta(&self) -> ThetaSpec {
        self.hat.theta()
    }

    pub fn c(&self) -> &[u64] {
        self.hat.c()
    }

    pub fn mollify_from(&self) -> f64 {
        mollify_from(self.p(), self.epsilon())
    }

    /// `(knot, Υ(knot))` for every segment start up to the horizon.
    pub fn knot_table(&self) -> Vec<(f64, f64)> {
        self.hat.segments().iter().map(|s| s.left).zip(self.table.iter().copied()).collect()
    }

    /// Largest admissible argument: the last tabulated knot.
    pub fn horizon(&self) -> f64 {
        self.hat.segments().last().unwrap().left
    }

    pub fn windows(&self) -> Vec<Window> {
        let segs = self.hat.segments();
        self.jumps
            .iter()
            .enumerate()
            .filter(|(_, j)| j.is_some())
            .map(|(i, _)| {
                let k = segs[i].left;
                Window { knot: k, lambda_l: segs[i - 1].slope(k), lambda_r: segs[i].slope(k) }
            })
            .collect()
    }

    /// Windows whose knot is at most the horizon.
    pub fn windows_in_horizon(&self) -> Vec<Window> {
        let h = self.horizon();
        self.windows().into_iter().filter(|w| w.knot <= h).collect()
    }

    fn check(&self, x: f64) -> Result<usize> {
        if !(x >= 0.0 && x <= self.horizon()) {
            return Err(Error::Range { x, lo: 0.0, hi: self.horizon() });
        }
        Ok(self.hat.segment_index(x))
    }

    /// The window containing `x` as `(knot, jump, λ_l, λ_r)`.
    fn window_at(&self, i: usize, x: f64) -> Option<(f64, f64, f64, f64)> {
        let segs = self.hat.segments();
        let eps = self.epsilon();
        let s = &segs[i];
        if let Some(j) = self.jumps[i] {
            if x - s.left < eps {
                return Some((s.left, j, segs[i - 1].slope(s.left), s.slope(s.left)));
            }
        }
        if let Some(Some(j)) = self.jumps.get(i + 1) {
            if s.right - x < eps {
                return Some((s.right, *j, s.slope(s.right), segs[i + 1].slope(s.right)));
            }
        }
        None
    }

    /// `Υ'(x) = υ̂_ε(x)`.
    pub fn d1(&self, x: f64) -> Result<f64> {
        let i = self.check(x)?;
        let v = self.hat.segments()[i].value(x);
        Ok(match self.window_at(i, x) {
            Some((k, jump, _, _)) => v - jump * self.moll.first_moment_above((x - k).abs()),
            None => v,
        })
    }

    /// `Υ''(x)`.
    pub fn d2(&self, x: f64) -> Result<f64> {
        let i = self.check(x)?;
        Ok(match self.window_at(i, x) {
            // evaluate on the side that avoids cancelling against λ_l
            Some((k, jump, lambda_l, _)) if x <= k => lambda_l - jump * self.moll.mass_above(k - x),
            Some((k, jump, _, lambda_r)) => lambda_r + jump * self.moll.mass_above(x - k),
            None => self.hat.segments()[i].slope(x),
        })
    }

    /// `Υ(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let i = self.check(x)?;
        let segs = self.hat.segments();
        let s = &segs[i];
        let eps = self.epsilon();
        let mut v = self.table[i] + s.integral(s.left, x);
        if let Some(j) = self.jumps[i] {
            let t = x - s.left;
            v -= j * (self.h0 - if t < eps { self.moll.second_moment_above(t) } else { 0.0 });
        }
        if let Some(Some(j)) = self.jumps.get(i + 1) {
            if s.right - x < eps {
                v -= j * self.moll.second_moment_above(s.right - x);
            }
        }
        Ok(v)
    }

    /// `υ̂(x) - υ̂_ε(x)`.
    pub fn gap(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.hat.eval(x)? - self.d1(x)?)
    }

    /// Largest relative deviation between the stored table and a fresh recomputation.
    pub fn table_deviation(&self) -> f64 {
        let fresh = Self::compute_table(&self.hat, &self.jumps, self.h0);
        fresh
            .iter()
            .zip(&self.table)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()).max(1.0) })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        let doc = ArtifactDoc {
            version: ARTIFACT_VERSION,
            p: self.p(),
            epsilon: self.epsilon(),
            theta: self.theta(),
            c: self.c().to_vec(),
            mollifier_c: self.moll.constant(),
            segments: self.hat.segments().to_vec(),
            knot_cumulative: self.knot_table().iter().map(|&(x, u)| [format_f64(x), format_f64(u)]).collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("artifact serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let version = raw
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Parse("artifact has no integer version".into()))?;
        if version != ARTIFACT_VERSION as u64 {
            return Err(Error::SchemaVersion { found: version as u32, expected: ARTIFACT_VERSION });
        }
        let doc: ArtifactDoc = serde_json::from_value(raw)?;
        doc.theta.validate()?;
        let corrupted = |e: Error| Error::CorruptedTable(e.to_string());
        let hat = PiecewiseDerivative::from_parts(doc.p, doc.theta, doc.c, doc.segments).map_err(corrupted)?;
        let moll = Mollifier::with_constant(doc.epsilon, doc.mollifier_c)?;
        if (moll.constant() - normalization()).abs() > 1e-12 {
            return Err(Error::CorruptedTable(format!("mollifier constant {} does not normalize", moll.constant())));
        }

        let mut table = Vec::with_capacity(doc.knot_cumulative.len());
        if doc.knot_cumulative.len() != hat.segments().len() {
            return Err(Error::CorruptedTable("knot table length does not match the segments".into()));
        }
        for ([xs, us], s) in doc.knot_cumulative.iter().zip(hat.segments()) {
            let (x, u) = match (parse_f64(xs), parse_f64(us)) {
                (Some(x), Some(u)) => (x, u),
                _ => return Err(Error::Parse(format!("bad table entry [{xs}, {us}]"))),
            };
            if x != s.left {
                return Err(Error::CorruptedTable(format!("table knot {x} does not match segment start {}", s.left)));
            }
            table.push(u);
        }
        if table[0] != 0.0 {
            return Err(Error::CorruptedTable(format!("table starts at {}, expected 0", table[0])));
        }
        if let Some(i) = (1..table.len()).find(|&i| !(table[i] > table[i - 1])) {
            return Err(Error::CorruptedTable(format!(
                "cumulative values not increasing at knot {}: {} -> {}",
                hat.segments()[i].left,
                table[i - 1],
                table[i]
            )));
        }
        let jumps = knot_jumps(&hat, moll.epsilon());
        let h0 = moll.second_moment_above(0.0);
        Ok(Self { hat, moll, jumps, table, h0 })
    }
}
