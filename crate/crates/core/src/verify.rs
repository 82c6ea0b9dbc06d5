//! Numerical certification of the construction on grids.
//!
//! Each check is a pure function over immutable inputs returning a [`Check`]
//! with the empirical constant, the threshold it was held to and a witness
//! point. [`run_suite`] fans the checks out over the rayon pool and assembles
//! them in a fixed order, so reports are deterministic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::derivative::{pow2, x0_q};
use crate::measures::{AtomicMeasure, MeasureFamily, Region};
use crate::numfmt::format_f64;
use crate::quadrature::adaptive_simpson;
use crate::sequences::{abel_sides, bound_chain, ScaleSequence, DEFAULT_HORIZON};
use crate::young::{YoungFunction, GAP_BOUND};

const MODERATE_SLACK: f64 = 1e-9;
const MONOTONE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

fn opt_decimal<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_str(&format_f64(*x)),
        None => s.serialize_none(),
    }
}

fn decimals<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| format_f64(*x)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub anchor: String,
    pub status: Status,
    #[serde(serialize_with = "opt_decimal")]
    pub constant: Option<f64>,
    #[serde(serialize_with = "opt_decimal")]
    pub threshold: Option<f64>,
    #[serde(serialize_with = "decimals")]
    pub witness: Vec<f64>,
    pub detail: String,
}

impl Check {
    fn new(name: &str, anchor: &str) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            status: Status::Pass,
            constant: None,
            threshold: None,
            witness: Vec::new(),
            detail: String::new(),
        }
    }

    fn skipped(name: &str, anchor: &str, why: &str) -> Self {
        Self { status: Status::Skipped, detail: why.into(), ..Self::new(name, anchor) }
    }

    fn fail(mut self, witness: Vec<f64>, detail: String) -> Self {
        self.status = Status::Fail;
        self.witness = witness;
        self.detail = detail;
        self
    }

    fn note(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), format_f64);
        let mut out = format!("{:<28} {:<8} {:>24} {:>24}  detail\n", "check", "status", "constant", "threshold");
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skipped => "skipped",
            };
            out.push_str(&format!(
                "{:<28} {:<8} {:>24} {:>24}  {}\n",
                c.name,
                status,
                opt(c.constant),
                opt(c.threshold),
                c.detail
            ));
        }
        out
    }
}

/// Grid and sampling parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub per_decade: usize,
    pub window_points: usize,
    pub random_pairs: usize,
    pub seed: u64,
    pub horizon_n: usize,
    /// Radii for the integrability check; derived from the family when `None`.
    pub radii: Option<Vec<f64>>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { per_decade: 512, window_points: 64, random_pairs: 4096, seed: 7, horizon_n: DEFAULT_HORIZON, radii: None }
    }
}

/// `lo · 10^{i/per_decade}` up to and including `hi`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && per_decade > 0);
    let n = ((hi / lo).log10() * per_decade as f64).ceil() as usize;
    let mut g: Vec<f64> = (0..n).map(|i| lo * 10f64.powf(i as f64 / per_decade as f64)).filter(|&x| x < hi).collect();
    g.push(hi);
    g
}

/// `count` interior points of every window in `[lo, hi]`, plus the knot itself.
pub fn window_points(y: &YoungFunction, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let eps = y.epsilon();
    let mut pts = Vec::new();
    for w in y.windows_in_horizon() {
        if w.knot < lo || w.knot > hi {
            continue;
        }
        pts.push(w.knot);
        for j in 0..count {
            let x = w.knot + eps * (-1.0 + (2 * j + 1) as f64 / count as f64);
            if x >= lo && x <= hi {
                pts.push(x);
            }
        }
    }
    pts
}

fn merged(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    a.extend(b);
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    a.dedup();
    a
}

fn dense_grid(y: &YoungFunction, lo: f64, hi: f64, opts: &SuiteOptions) -> Vec<f64> {
    merged(log_grid(lo, hi, opts.per_decade), window_points(y, lo, hi, opts.window_points))
}

/// `2^{c_n}` clipped to the horizon.
fn knot_or_horizon(y: &YoungFunction, n: usize) -> f64 {
    y.hat().dyadic_knot(n).unwrap_or(f64::INFINITY).min(y.horizon())
}

/// First index from which `v` is non-increasing up to the end.
fn monotone_from(v: &[f64], rtol: f64) -> usize {
    let mut i = v.len().saturating_sub(1);
    while i > 0 && v[i] <= v[i - 1] + rtol * v[i - 1].abs() {
        i -= 1;
    }
    i
}

/// `sup x Υ'(x) / Υ(x)` over the grid, with the arg-max.
fn moderate_constant(y: &YoungFunction, grid: &[f64]) -> (f64, f64) {
    grid.iter()
        .map(|&x| (x * y.d1(x).unwrap() / y.eval(x).unwrap(), x))
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
}

fn moderate_grid(y: &YoungFunction, opts: &SuiteOptions) -> Vec<f64> {
    dense_grid(y, 1e-6, knot_or_horizon(y, 6), opts)
}

/// Both sides of the de La Vallée Poussin bound and the Abel identity.
pub fn verify_basic(family: &MeasureFamily, scale: &ScaleSequence) -> Check {
    let check = Check::new("basic_chain", "de-la-vallee-poussin-bound");
    let chain = match bound_chain(family, scale) {
        Ok(c) => c,
        Err(e) => return check.fail(vec![], format!("bound chain not computable: {e}")),
    };
    let mut check = Check { constant: Some(chain.level_sum), threshold: Some(chain.d_sum), ..check };
    if !chain.ordered() {
        return check.fail(
            vec![chain.young_integral, chain.level_sum, chain.d_sum],
            format!("chain not ordered: {} <= {} <= {}", chain.young_integral, chain.level_sum, chain.d_sum),
        );
    }
    let top = family.max_radius().powf(family.p()).floor() as u64;
    let seq = if top >= *scale.c().last().unwrap() {
        match scale.extend_beyond(family, top) {
            Ok(s) => s,
            Err(e) => return check.fail(vec![], format!("cannot extend sequence: {e}")),
        }
    } else {
        scale.clone()
    };
    for (i, m) in family.members().iter().enumerate() {
        match abel_sides(m.atoms(), family.p(), seq.c()) {
            Ok((l, r)) if l == r => {}
            Ok((l, r)) => return check.fail(vec![i as f64], format!("summation orders differ for member {i}: {l} vs {r}")),
            Err(e) => return check.fail(vec![i as f64], format!("Abel identity not computable for member {i}: {e}")),
        }
    }
    check.detail = format!(
        "{} <= {} <= {}; Abel identity exact for {} members",
        format_f64(chain.young_integral),
        format_f64(chain.level_sum),
        format_f64(chain.d_sum),
        family.members().len()
    );
    check
}

/// `c̄ = sup x Υ'/Υ` and the scaling `Υ(λx) <= λ^{c̄} Υ(x)`.
pub fn verify_moderate(y: &YoungFunction, opts: &SuiteOptions) -> Check {
    let mut check = Check::new("moderate", "moderate-growth");
    let grid = moderate_grid(y, opts);
    let (cbar, at) = moderate_constant(y, &grid);
    let limit = match y.hat().polynomial_start() {
        Some((_, q)) => 3f64.max(q + 1.0),
        None => 3.0,
    } + MODERATE_SLACK;
    check.constant = Some(cbar);
    check.threshold = Some(limit);
    if !(cbar <= limit) {
        return check.fail(vec![at], format!("x U'(x)/U(x) = {cbar} exceeds {limit}"));
    }
    if cbar < 1.0 - MODERATE_SLACK {
        return check.fail(vec![at], format!("constant {cbar} below 1 contradicts convexity"));
    }
    let top = *grid.last().unwrap();
    for lambda in [2.0, 5.0, 10.0] {
        let factor = f64::powf(lambda, cbar);
        for &x in grid.iter().take_while(|&&x| lambda * x <= top) {
            let (a, b) = (y.eval(lambda * x).unwrap(), factor * y.eval(x).unwrap());
            if a > b * (1.0 + MODERATE_SLACK) {
                return check.fail(vec![x, lambda], format!("U({lambda} x) = {a} > {b}"));
            }
        }
    }
    check.note(format!("max over {} points in [1e-6, {}]; lambda-scaling holds for 2, 5, 10", grid.len(), format_f64(top)))
}

/// `x Υ'(x)/Υ(x) = q + 1` on the polynomial start `(0, x_0]`.
pub fn verify_moderate_polynomial(y: &YoungFunction, opts: &SuiteOptions) -> Check {
    let check = Check::new("moderate_polynomial_region", "moderate-growth-near-zero");
    let Some((x0, q)) = y.hat().polynomial_start() else {
        return Check::skipped(&check.name, &check.anchor, "no polynomial start for p >= 2");
    };
    let grid = log_grid(x0 * 1e-6, x0, opts.per_decade);
    let (worst, at) = grid
        .iter()
        .map(|&x| ((x * y.d1(x).unwrap() / y.eval(x).unwrap() - (q + 1.0)).abs(), x))
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    let check = Check { constant: Some(worst), threshold: Some(1e-10), ..check };
    if worst > 1e-10 {
        return check.fail(vec![at], format!("ratio deviates from q + 1 = {} by {worst}", q + 1.0));
    }
    check.note(format!("ratio equals q + 1 = {} on {} points of (0, x0]", format_f64(q + 1.0), grid.len()))
}

/// `Υ'' > 0`, `x Υ''(x)` bounded, and `Υ''` finally non-increasing.
pub fn verify_second_derivative(y: &YoungFunction, opts: &SuiteOptions) -> Check {
    let mut check = Check::new("second_derivative", "second-derivative-bounds");
    let grid = dense_grid(y, 1e-6, y.horizon(), opts);
    let d2: Vec<f64> = grid.par_iter().map(|&x| y.d2(x).unwrap()).collect();
    if let Some(i) = d2.iter().position(|&v| !(v > 0.0)) {
        return check.fail(vec![grid[i]], format!("U'' = {} is not positive", d2[i]));
    }
    let (xd2, at) = grid.iter().zip(&d2).map(|(&x, &v)| (x * v, x)).fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    check.constant = Some(xd2);
    if y.p() >= 2.0 {
        check.threshold = Some(2.0 + MODERATE_SLACK);
        if xd2 > 2.0 + MODERATE_SLACK {
            return check.fail(vec![at], format!("x U''(x) = {xd2} exceeds 2"));
        }
    } else if !xd2.is_finite() {
        return check.fail(vec![at], "x U''(x) is unbounded on the grid".into());
    }
    let start = monotone_from(&d2, MONOTONE_RTOL);
    let from = grid[start];
    // non-increasing has to hold at least from the first dyadic knot on
    if from > 2.0 {
        return check.fail(vec![from], format!("U'' only non-increasing from {from}"));
    }
    check.witness = vec![from];
    check.note(format!(
        "max x U''(x) = {} at {}; U'' non-increasing from {} to the horizon {}",
        format_f64(xd2),
        format_f64(at),
        format_f64(from),
        format_f64(y.horizon())
    ))
}

/// Dyadic bound `υ̂(2^{c_{m+1}+c_{k+1}}) <= 2 υ̂(2^{c_m}) υ̂(2^{c_k})` for `m, k >= 2`,
/// then the empirical `K = max Υ(xy)/(Υ(x)Υ(y))` for `x, y >= 2^{c_2}`.
pub fn verify_submultiplicative(y: &YoungFunction, opts: &SuiteOptions) -> Check {
    let mut check = Check::new("submultiplicative", "finally-submultiplicative");
    let hat = y.hat();
    let c = hat.c();
    let l = hat.usable_len();
    let mut pairs = 0usize;
    let mut worst = 0.0f64;
    for m in 2..l {
        for k in 2..l {
            let e = c[m] + c[k];
            if e > c[l - 1] {
                continue;
            }
            let lhs = hat.eval(pow2(e)).unwrap();
            let rhs = 2.0 * hat.eval(pow2(c[m - 1])).unwrap() * hat.eval(pow2(c[k - 1])).unwrap();
            pairs += 1;
            worst = worst.max(lhs / rhs * 2.0);
            if lhs > rhs {
                return check.fail(vec![m as f64, k as f64], format!("dyadic bound fails for (m, k) = ({m}, {k}): {lhs} > {rhs}"));
            }
        }
    }
    if pairs == 0 {
        return check.fail(vec![], "no in-horizon index pairs for the dyadic bound".into());
    }
    check.threshold = Some(2.0);

    let r = knot_or_horizon(y, 2);
    let step = 10f64.powf(1.0 / opts.per_decade as f64);
    let h = y.horizon();
    let n_prod = (((h / (r * r)).log10()) * opts.per_decade as f64).floor().max(0.0) as usize;
    let single: Vec<f64> = (0..=n_prod).map(|i| y.eval(r * step.powi(i as i32)).unwrap()).collect();
    let product: Vec<f64> = (0..=n_prod)
        .into_par_iter()
        .map(|s| {
            let x = (r * r * step.powi(s as i32)).min(h);
            y.eval(x).unwrap()
        })
        .collect();
    let (k_emp, wi, wj) = (0..=n_prod)
        .into_par_iter()
        .map(|i| {
            (0..=n_prod - i)
                .map(|j| (product[i + j] / (single[i] * single[j]), i, j))
                .fold((0.0, 0, 0), |a, b| if b.0 > a.0 { b } else { a })
        })
        .reduce(|| (0.0, 0, 0), |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a });
    check.constant = Some(k_emp);
    check.witness = vec![r * step.powi(wi as i32), r * step.powi(wj as i32)];
    if !k_emp.is_finite() {
        let w = check.witness.clone();
        return check.fail(w, "empirical constant is not finite".into());
    }
    check.note(format!(
        "dyadic bound with K = 2 holds on {pairs} index pairs (largest ratio {} against the bound 2); empirical K = {} for x, y >= {}",
        format_f64(worst),
        format_f64(k_emp),
        format_f64(r)
    ))
}

/// Polynomial-region identities `Υ'(x^p)x^{p-2} = x^2` and `Υ''(x^p)x^{2p-2} = q x^2`.
pub fn verify_small_x(y: &YoungFunction, opts: &SuiteOptions) -> Check {
    let check = Check::new("small_x", "polynomial-start-identities");
    let Some((x0, q)) = y.hat().polynomial_start() else {
        return Check::skipped(&check.name, &check.anchor, "only defined for p < 2");
    };
    let p = y.p();
    let top = x0.powf(1.0 / p) * (1.0 - 1e-9);
    let grid = log_grid(top * 1e-4, top, opts.per_decade);
    let mut worst = (0.0f64, 0.0f64);
    let mut control = 0.0f64;
    let q_bad = q * (1.0 + 1e-3);
    for &x in &grid {
        let first = y.d1(x.powf(p)).unwrap() * x.powf(p - 2.0);
        let second = y.d2(x.powf(p)).unwrap() * x.powf(2.0 * p - 2.0);
        let r = (first - x * x).abs().max((second - q * x * x).abs());
        if r > worst.0 {
            worst = (r, x);
        }
        control = control.max((second - q_bad * x * x).abs());
    }
    let check = Check { constant: Some(worst.0), threshold: Some(1e-12), ..check };
    if worst.0 > 1e-12 {
        return check.fail(vec![worst.1], format!("residual {} on the polynomial region", worst.0));
    }
    if control <= 1e-12 {
        return check.fail(vec![], "perturbed exponent is not detected".into());
    }
    check.note(format!(
        "identities hold on {} points of (0, {}); perturbed q gives residual {}",
        grid.len(),
        format_f64(top),
        format_f64(control)
    ))
}

/// `y ↦ Υ'(y) y^{1-2/p}` (`1 <= p < 2`) or `Υ'(y) y^{1-1/p}` (`p < 1`) is
/// non-increasing from some point on.
pub fn verify_finally_decreasing(y: &YoungFunction, opts: &SuiteOptions) -> Check {
    let check = Check::new("finally_decreasing", "finally-decreasing-products");
    let p = y.p();
    if p >= 2.0 {
        return Check::skipped(&check.name, &check.anchor, "only defined for p < 2");
    }
    let alpha = if p >= 1.0 { 2.0 / p - 1.0 } else { 1.0 / p - 1.0 };
    let h = |v: f64| y.d1(v).unwrap() * v.powf(-alpha);
    let lo = knot_or_horizon(y, 2);
    let hi = y.horizon();
    let grid = dense_grid(y, lo, hi, opts);
    let vals: Vec<f64> = grid.par_iter().map(|&v| h(v)).collect();
    let start = grid[monotone_from(&vals, 1e-12)];
    let l = y.hat().usable_len();
    let limit = y.hat().dyadic_knot(l - 2).unwrap();
    let check = Check { constant: Some(start), threshold: Some(limit), witness: vec![start], ..check };
    if start > limit {
        return check.fail(vec![start], format!("monotone only from {start}, beyond {limit}"));
    }
    let fine = dense_grid(y, start, hi, &SuiteOptions { per_decade: 2 * opts.per_decade, ..opts.clone() });
    let fine_vals: Vec<f64> = fine.par_iter().map(|&v| h(v)).collect();
    if monotone_from(&fine_vals, 1e-12) != 0 {
        let i = monotone_from(&fine_vals, 1e-12);
        return check.fail(vec![fine[i]], format!("double-resolution grid breaks monotonicity at {}", fine[i]));
    }
    check.note(format!(
        "monotone from {} to the horizon {} (exponent -{}); confirmed at double resolution",
        format_f64(start),
        format_f64(hi),
        format_f64(alpha)
    ))
}

/// Gap `υ̂ - υ̂_ε` in `[0, 2^-4)`, window maxima at the knots, and the closed
/// form against direct quadrature of the convolution.
pub fn verify_mollification_gap(y: &YoungFunction, opts: &SuiteOptions) -> Check {
    let mut check = Check::new("mollification_gap", "mollification-error");
    check.threshold = Some(GAP_BOUND);
    let eps = y.epsilon();
    let m = y.mollifier();
    let mut worst = 0.0f64;
    let mut notes = Vec::new();

    // Outside windows the mollification is exact.
    let grid = dense_grid(y, 1e-6, y.horizon(), opts);
    let windows = y.windows_in_horizon();
    for &x in &grid {
        let g = y.gap(x).unwrap();
        let inside = windows.iter().any(|w| (x - w.knot).abs() < eps);
        if !inside && g != 0.0 {
            return check.fail(vec![x], format!("gap {g} outside every window"));
        }
    }
    for w in &windows {
        let pts = std::iter::once(w.knot)
            .chain((0..opts.window_points).map(|j| w.knot + eps * (-1.0 + (2 * j + 1) as f64 / opts.window_points as f64)))
            .collect::<Vec<_>>();
        let gaps: Vec<(f64, f64)> = pts.iter().map(|&x| (y.gap(x).unwrap(), x)).collect();
        let at_knot = y.gap(w.knot).unwrap();
        let jump = w.jump();
        for &(g, x) in &gaps {
            worst = worst.max(g.abs());
            if g.abs() >= GAP_BOUND {
                return check.fail(vec![x], format!("|gap| = {} at {x}", g.abs()));
            }
            if jump >= 0.0 && g < 0.0 {
                return check.fail(vec![x], format!("negative gap {g} in a concave window"));
            }
            if g.abs() > at_knot.abs() * (1.0 + 1e-12) {
                return check.fail(vec![x, w.knot], format!("window extremum at {x}, not at the knot {}", w.knot));
            }
        }
        if jump < 0.0 {
            notes.push(format!(
                "convex kink at {}: gap = {} (|gap| < 2^-4, sign reversed)",
                format_f64(w.knot),
                format_f64(at_knot)
            ));
        }
        let closed = jump * m.half_first_moment();
        if (closed - at_knot).abs() > 1e-15 * closed.abs().max(1.0) {
            return check.fail(vec![w.knot], format!("knot gap {at_knot} differs from closed form {closed}"));
        }
        if w.knot <= pow2(30) {
            let hat = y.hat();
            let f = |s: f64| hat.eval(w.knot + s).unwrap() * m.eval(s);
            let direct = adaptive_simpson(f, -eps, 0.0, 1e-13, 50)
                .and_then(|a| adaptive_simpson(f, 0.0, eps, 1e-13, 50).map(|b| a + b));
            match direct {
                Ok(v) => {
                    let mollified = y.d1(w.knot).unwrap();
                    if (v - mollified).abs() > 1e-10 * v.abs().max(1.0) {
                        return check.fail(vec![w.knot], format!("direct convolution {v} vs closed form {mollified}"));
                    }
                }
                Err(e) => return check.fail(vec![w.knot], format!("direct convolution failed: {e}")),
            }
        }
    }
    check.constant = Some(worst);
    notes.insert(0, format!("max |gap| = {} over {} windows", format_f64(worst), windows.len()));
    check.note(notes.join("; "))
}

/// Subadditivity with `2^{c̄-1}` and the derivative product bounds.
pub fn verify_corollary_bounds(y: &YoungFunction, opts: &SuiteOptions) -> Check {
    let mut check = Check::new("corollary_bounds", "subadditivity-and-derivative-products");
    let (cbar, _) = moderate_constant(y, &moderate_grid(y, opts));
    let factor = 2f64.powf(cbar - 1.0);
    let h = y.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let span = (h / 2.0).log10() + 6.0;
    for _ in 0..opts.random_pairs {
        let s = 10f64.powf(-6.0 + span * rng.gen::<f64>());
        let t = if rng.gen_bool(0.125) { s } else { 10f64.powf(-6.0 + span * rng.gen::<f64>()) };
        let lhs = y.eval(s + t).unwrap();
        let rhs = factor * (y.eval(s).unwrap() + y.eval(t).unwrap());
        if lhs > rhs * (1.0 + 1e-12) {
            return check.fail(vec![s, t], format!("U(s+t) = {lhs} > {rhs}"));
        }
    }
    let p = y.p();
    let wgrid = log_grid(1e-6, h.powf(1.0 / p), opts.per_decade);
    let sup = |f: &dyn Fn(f64) -> f64| wgrid.iter().map(|&w| f(w)).fold(0.0, f64::max);
    let b = sup(&|w| {
        let v = w.powf(p);
        y.d1(v).unwrap() * (w.powf(p - 2.0) + w.powf(p - 1.0) + v) / (1.0 + y.eval(v).unwrap())
    });
    let c = sup(&|w| {
        let v = w.powf(p);
        let ind = if w >= 1.0 { w.powf(p - 2.0) } else { 0.0 };
        y.d2(v).unwrap() * w.powf(2.0 * p - 2.0) / (1.0 + ind)
    });
    let mut parts = vec![
        format!("subadditive with 2^(c-1) = {} on {} pairs", format_f64(factor), opts.random_pairs),
        format!("first-derivative constant {}", format_f64(b)),
        format!("second-derivative constant {}", format_f64(c)),
    ];
    let mut constants = vec![b, c];
    if p < 2.0 {
        let e = if p >= 1.0 { p - 2.0 } else { p - 1.0 };
        let d1 = sup(&|w| y.d1(w.powf(p)).unwrap() * w.powf(e));
        let d2 = sup(&|w| y.d2(w.powf(p)).unwrap() * w.powf(2.0 * p - 2.0));
        parts.push(format!("sup U'(w^p) w^{} = {}", format_f64(e), format_f64(d1)));
        parts.push(format!("sup U''(w^p) w^(2p-2) = {}", format_f64(d2)));
        constants.extend([d1, d2]);
    }
    let worst = constants.iter().copied().fold(0.0, f64::max);
    check.constant = Some(worst);
    if !worst.is_finite() {
        return check.fail(vec![], format!("unbounded product: {}", parts.join("; ")));
    }
    check.note(parts.join("; "))
}

fn default_radii(family: &MeasureFamily) -> Vec<f64> {
    let top = family.max_radius();
    let mut r: Vec<f64> = [1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0]
        .into_iter()
        .filter(|&r| r < top)
        .collect();
    r.extend([top.max(1.0), 2.0 * top.max(1.0)]);
    r.dedup();
    r
}

/// Tail integrals of `Υ(|z|^p)` vanish, and the construction can be repeated
/// on the pushforward family to produce `Ψ`.
pub fn verify_ui_improvement(family: &MeasureFamily, y: &YoungFunction, radii: &[f64], opts: &SuiteOptions) -> Check {
    let check = Check::new("ui_improvement", "stronger-integrability");
    let p = y.p();
    let big_y = |r: f64| y.eval(r.powf(p)).unwrap_or(f64::NAN);
    let mut tails = Vec::with_capacity(radii.len());
    for &r in radii {
        match family.integrate_sup(big_y, Region::RadiusAbove(r)) {
            Ok(v) => tails.push(v),
            Err(e) => return check.fail(vec![r], format!("tail integral failed: {e}")),
        }
    }
    if let Some(i) = (1..tails.len()).find(|&i| tails[i] > tails[i - 1]) {
        return check.fail(vec![radii[i]], format!("I(R) increases: {} -> {}", tails[i - 1], tails[i]));
    }
    for (&r, &t) in radii.iter().zip(&tails) {
        if r >= family.max_radius() && t != 0.0 {
            return check.fail(vec![r], format!("I({r}) = {t} beyond the largest atom"));
        }
    }

    let members: Result<Vec<AtomicMeasure>, _> = family
        .members()
        .iter()
        .map(|m| AtomicMeasure::new(m.atoms().iter().map(|&(r, w)| (big_y(r), w)).collect()))
        .collect();
    let pushed = match members.and_then(|m| MeasureFamily::new(m, 1.0)) {
        Ok(f) => f,
        Err(e) => return check.fail(vec![], format!("pushforward family invalid: {e}")),
    };
    let psi = match crate::construct(&pushed, y.theta(), opts.horizon_n, None) {
        Ok(psi) => psi,
        Err(e) => return check.fail(vec![], format!("second-level construction failed: {e}")),
    };
    let seq = match ScaleSequence::from_family(&pushed, opts.horizon_n) {
        Ok(s) => s,
        Err(e) => return check.fail(vec![], format!("second-level sequence failed: {e}")),
    };
    let inner = verify_basic(&pushed, &seq);
    if !inner.passed() {
        return check.fail(inner.witness, format!("second-level chain: {}", inner.detail));
    }
    let moment = match pushed.integrate_sup(|r| psi.eval(r).unwrap_or(f64::NAN), Region::PLevelAtLeast(1.0)) {
        Ok(v) => v,
        Err(e) => return check.fail(vec![], format!("second-level moment not finite: {e}")),
    };
    let check = Check { constant: Some(moment), ..check };
    check.note(format!(
        "I(R) = [{}]; second-level moment {}; {}",
        tails.iter().map(|&t| format_f64(t)).collect::<Vec<_>>().join(", "),
        format_f64(moment),
        inner.detail
    ))
}

/// `υ̂/υ̂_ε → 1` along knots and `Υ̂(x - δ) <= Υ(x) <= Υ̂(x)` at large knots.
pub fn verify_equivalence(y: &YoungFunction) -> Check {
    let mut check = Check::new("equivalence", "equivalence-with-unmollified");
    check.threshold = Some(1e-3);
    let hat = y.hat();
    let mut worst = 0.0f64;
    for n in [4, 5] {
        let Some(x) = hat.dyadic_knot(n).filter(|&x| x <= y.horizon()) else {
            return check.fail(vec![n as f64], format!("2^c_{n} beyond the horizon"));
        };
        let ratio = hat.eval(x).unwrap() / y.d1(x).unwrap();
        worst = worst.max(ratio - 1.0);
        if !(1.0..=1.0 + 1e-3).contains(&ratio) {
            return check.fail(vec![x], format!("ratio {ratio} at 2^c_{n}"));
        }
    }
    check.constant = Some(worst);
    let windows = y.windows_in_horizon().len() as f64;
    let mut tested = 0;
    for n in 3..=hat.usable_len() {
        let Some(x) = hat.dyadic_knot(n).filter(|&x| x <= y.horizon()) else { break };
        let upper = hat.integral(x).unwrap();
        let value = y.eval(x).unwrap();
        let delta = GAP_BOUND * 2.0 * y.epsilon() * windows / hat.eval(x / 2.0).unwrap();
        let lower = hat.integral(x - delta).unwrap();
        if !(lower <= value && value <= upper * (1.0 + 1e-15)) {
            return check.fail(vec![x], format!("sandwich fails: {lower} <= {value} <= {upper}"));
        }
        tested += 1;
    }
    check.note(format!("max ratio - 1 = {}; sandwich holds at {tested} knots", format_f64(worst)))
}

/// The stored cumulative table agrees with a fresh recomputation.
pub fn verify_table(y: &YoungFunction) -> Check {
    let dev = y.table_deviation();
    let check = Check { constant: Some(dev), threshold: Some(1e-12), ..Check::new("table_consistency", "artifact-integrity") };
    if dev > 1e-12 {
        return check.fail(vec![], format!("stored table deviates by {dev}"));
    }
    check.note("cumulative table matches recomputation".into())
}

/// `f'(x_0) = 1/6`, monotonicity of `x_0(p)` and its endpoint limits.
pub fn verify_polynomial_start() -> Check {
    let check = Check::new("polynomial_start", "smooth-polynomial-junction");
    let mut worst = 0.0f64;
    let ps: Vec<f64> = (0..50).map(|i| 2.0 * (i as f64 + 0.5) / 50.0).collect();
    let x0s: Vec<f64> = ps.iter().map(|&p| x0_q(p).unwrap().0).collect();
    for (&p, &x0) in ps.iter().zip(&x0s) {
        let q = x0_q(p).unwrap().1;
        worst = worst.max((q * x0.powf(q - 1.0) - 1.0 / 6.0).abs());
        if !(x0 > 0.0 && x0 < 1.0) {
            return check.fail(vec![p], format!("x0({p}) = {x0} outside (0, 1)"));
        }
    }
    let check = Check { constant: Some(worst), threshold: Some(1e-10), ..check };
    if worst > 1e-10 {
        return check.fail(vec![], format!("junction slope off by {worst}"));
    }
    if let Some(i) = (1..x0s.len()).find(|&i| !(x0s[i] < x0s[i - 1])) {
        return check.fail(vec![ps[i]], "x0 not strictly decreasing in p".into());
    }
    let to_zero: Vec<f64> = (1..=40).map(|k| x0_q(2f64.powi(-k)).unwrap().0).collect();
    let to_two: Vec<f64> = (1..=40).map(|k| x0_q(2.0 - 2f64.powi(-k)).unwrap().0).collect();
    if to_zero.windows(2).any(|w| !(w[1] > w[0])) || 1.0 - to_zero.last().unwrap() > 1e-9 {
        return check.fail(vec![], "x0 does not increase to 1 as p -> 0".into());
    }
    if to_two.windows(2).any(|w| w[1] > w[0]) || *to_two.last().unwrap() > 1e-10 {
        return check.fail(vec![], "x0 does not decrease to 0 as p -> 2".into());
    }
    check.note(format!(
        "x0 decreasing on 50 values of p; x0(2^-40) = {}, x0(2 - 2^-40) = {}",
        format_f64(*to_zero.last().unwrap()),
        format_f64(*to_two.last().unwrap())
    ))
}

type Job<'a> = Box<dyn Fn() -> Check + Send + Sync + 'a>;

/// Runs every applicable check. Without a family the measure-dependent checks are skipped.
pub fn run_suite(family: Option<&MeasureFamily>, y: &YoungFunction, opts: &SuiteOptions) -> VerificationReport {
    let family = family.map(|f| f.with_p(y.p()).expect("positive exponent"));
    let fam = family.as_ref();
    let jobs: Vec<Job> = vec![
        Box::new(move || match fam {
            Some(f) => match ScaleSequence::from_family(f, opts.horizon_n) {
                Ok(seq) => verify_basic(f, &seq),
                Err(e) => Check::new("basic_chain", "de-la-vallee-poussin-bound").fail(vec![], e.to_string()),
            },
            None => Check::skipped("basic_chain", "de-la-vallee-poussin-bound", "no measure family"),
        }),
        Box::new(|| verify_moderate(y, opts)),
        Box::new(|| verify_moderate_polynomial(y, opts)),
        Box::new(|| verify_second_derivative(y, opts)),
        Box::new(|| verify_submultiplicative(y, opts)),
        Box::new(|| verify_small_x(y, opts)),
        Box::new(|| {
            if y.p() < 2.0 {
                verify_polynomial_start()
            } else {
                Check::skipped("polynomial_start", "smooth-polynomial-junction", "only defined for p < 2")
            }
        }),
        Box::new(|| verify_finally_decreasing(y, opts)),
        Box::new(|| verify_mollification_gap(y, opts)),
        Box::new(|| verify_corollary_bounds(y, opts)),
        Box::new(move || match fam {
            Some(f) => {
                let radii = opts.radii.clone().unwrap_or_else(|| default_radii(f));
                verify_ui_improvement(f, y, &radii, opts)
            }
            None => Check::skipped("ui_improvement", "stronger-integrability", "no measure family"),
        }),
        Box::new(|| verify_equivalence(y)),
        Box::new(|| verify_table(y)),
    ];
    VerificationReport { checks: jobs.par_iter().map(|j| j()).collect() }
}
