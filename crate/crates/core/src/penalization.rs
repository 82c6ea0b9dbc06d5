//! The doubling-of-variables objects that consume `Υ`: the quasidistance
//! `φ_p(x) = |x|^2 ∨ |x|^{p∨2}`, the penalty
//! `δ/(T-t) + λ|x-y|^2 + γ e^{μt}(Υ(|x|^p) + Υ(|y|^p))` with its gradients,
//! the Hessian entries of `z ↦ Υ(|z|^p)`, `δ(x)`, and brute-force
//! supremal/infimal convolutions on 1-D and 2-D grids.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numfmt::{format_f64, parse_f64};
use crate::young::YoungFunction;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `|x|^2 ∨ |x|^{p∨2}`.
pub fn quasidistance(p: f64, x: &[f64]) -> f64 {
    radial_quasidistance(p, norm2(x))
}

fn radial_quasidistance(p: f64, r2: f64) -> f64 {
    if p <= 2.0 || r2 <= 1.0 {
        r2
    } else {
        r2.powf(p / 2.0)
    }
}

/// `φ_p(x - y)` without allocating the difference.
fn quasidistance_between(p: f64, x: &[f64], y: &[f64]) -> f64 {
    radial_quasidistance(p, x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Outcome of [`verify_quasidistance`]. `literal_growth_violations` counts the
/// samples where the lower growth bound fails when stated with `|x|^p` in
/// place of `|x|^{p∨2}` (only possible for `p < 2` and `|x| < 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct QuasidistanceReport {
    pub samples: usize,
    pub multiplier_violation: Option<(Vec<f64>, Vec<f64>)>,
    pub growth_violation: Option<Vec<f64>>,
    pub literal_growth_violations: usize,
}

impl QuasidistanceReport {
    pub fn passed(&self) -> bool {
        self.multiplier_violation.is_none() && self.growth_violation.is_none()
    }
}

/// Checks `φ(x+y) <= 2^{2(p∨2)-2}(φ(x)+φ(y))` and
/// `2^{2-(p∨2)}(|x|^2 ∨ |x|^{p∨2}) <= φ(x) <= |x|^2 ∨ |x|^{p∨2}` on sample pairs.
pub fn verify_quasidistance(p: f64, samples: &[(Vec<f64>, Vec<f64>)]) -> QuasidistanceReport {
    let big = p.max(2.0);
    let mult = 2f64.powf(2.0 * big - 2.0);
    let low = 2f64.powf(2.0 - big);
    let mut report = QuasidistanceReport {
        samples: samples.len(),
        multiplier_violation: None,
        growth_violation: None,
        literal_growth_violations: 0,
    };
    for (x, y) in samples {
        let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let lhs = quasidistance(p, &sum);
        let rhs = mult * (quasidistance(p, x) + quasidistance(p, y));
        if lhs > rhs * (1.0 + 1e-14) && report.multiplier_violation.is_none() {
            report.multiplier_violation = Some((x.clone(), y.clone()));
        }
        let r = norm(x);
        let phi = quasidistance(p, x);
        let envelope = (r * r).max(r.powf(big));
        if (low * envelope > phi * (1.0 + 1e-14) || phi > envelope * (1.0 + 1e-14)) && report.growth_violation.is_none() {
            report.growth_violation = Some(x.clone());
        }
        if low * (r * r).max(r.powf(p)) > phi * (1.0 + 1e-14) {
            report.literal_growth_violations += 1;
        }
    }
    report
}

/// `2^{3(p∨2)} C (1 + φ_p(x))`.
pub fn delta_growth(x: &[f64], p: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Invalid(format!("constant must be positive, got {c}")));
    }
    Ok(2f64.powf(3.0 * p.max(2.0)) * c * (1.0 + quasidistance(p, x)))
}

#[derive(Debug, Clone, Copy)]
pub struct PenalizationParams<'a> {
    pub delta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub mu: f64,
    pub t_horizon: f64,
    pub p: f64,
    pub young: &'a YoungFunction,
}

impl<'a> PenalizationParams<'a> {
    pub fn new(young: &'a YoungFunction) -> Self {
        Self { delta: 0.0, gamma: 1.0, lambda: 1.0, mu: 0.0, t_horizon: 1.0, p: young.p(), young }
    }

    fn validate(&self, t: f64, x: &[f64], y: &[f64]) -> Result<()> {
        for (name, v) in [("delta", self.delta), ("gamma", self.gamma), ("lambda", self.lambda), ("mu", self.mu)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.t_horizon > 0.0 && self.p > 0.0) {
            return Err(Error::Invalid("T and p must be positive".into()));
        }
        if !(t >= 0.0 && t < self.t_horizon) {
            return Err(Error::Domain(format!("time {t} outside [0, {})", self.t_horizon)));
        }
        if x.len() != y.len() {
            return Err(Error::Invalid(format!("dimension mismatch: {} vs {}", x.len(), y.len())));
        }
        Ok(())
    }
}

/// `Υ(|z|^p)`.
pub fn young_radial(young: &YoungFunction, p: f64, z: &[f64]) -> Result<f64> {
    young.eval(norm(z).powf(p))
}

/// `∇ Υ(|z|^p) = p Υ'(|z|^p) |z|^{p-2} z`, extended by 0 at the origin.
pub fn young_gradient(young: &YoungFunction, p: f64, z: &[f64]) -> Result<Vec<f64>> {
    let s = norm(z);
    if s == 0.0 {
        return Ok(vec![0.0; z.len()]);
    }
    let k = p * young.d1(s.powf(p))? * s.powf(p - 2.0);
    Ok(z.iter().map(|v| k * v).collect())
}

/// Analytic Hessian of `z ↦ Υ(|z|^p)` at `z != 0`:
/// `p[pΥ''(s^p)s^{2p-4} + (p-2)Υ'(s^p)s^{p-4}] z z^T + pΥ'(s^p)s^{p-2} I`.
pub fn young_hessian(young: &YoungFunction, p: f64, z: &[f64]) -> Result<Vec<Vec<f64>>> {
    let s = norm(z);
    if s == 0.0 {
        return Err(Error::Domain("Hessian at the origin".into()));
    }
    let sp = s.powf(p);
    let (u1, u2) = (young.d1(sp)?, young.d2(sp)?);
    let outer = p * (p * u2 * s.powf(2.0 * p - 4.0) + (p - 2.0) * u1 * s.powf(p - 4.0));
    let diag = p * u1 * s.powf(p - 2.0);
    Ok((0..z.len())
        .map(|i| (0..z.len()).map(|j| outer * z[i] * z[j] + if i == j { diag } else { 0.0 }).collect())
        .collect())
}

/// `Υ''(s^p) s^{2p-2} + Υ'(s^p) s^{p-2}` with `s = |xbar|`, continuously
/// extended at the origin.
pub fn hessian_bound_entries(young: &YoungFunction, p: f64, xbar: &[f64]) -> Result<f64> {
    let s = norm(xbar);
    if s == 0.0 {
        return Ok(if p == 2.0 { young.d1(0.0)? } else { 0.0 });
    }
    let sp = s.powf(p);
    Ok(young.d2(sp)? * s.powf(2.0 * p - 2.0) + young.d1(sp)? * s.powf(p - 2.0))
}

/// Constant with `|∂_i∂_j Υ(|z|^p)| <= C_p · entry` for every element,
/// diagonal included: `p · max(p, |p-2| + 1)`.
pub fn hessian_constant(p: f64) -> f64 {
    p * p.max((p - 2.0).abs() + 1.0)
}

pub fn penal_eval(params: &PenalizationParams, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    params.validate(t, x, y)?;
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let weight = params.gamma * (params.mu * t).exp();
    let yx = young_radial(params.young, params.p, x)?;
    let yy = young_radial(params.young, params.p, y)?;
    Ok(params.delta / (params.t_horizon - t) + params.lambda * norm2(&diff) + weight * (yx + yy))
}

/// `(∇_x, ∇_y)` of the penalty.
pub fn penal_grad(params: &PenalizationParams, t: f64, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate(t, x, y)?;
    let weight = params.gamma * (params.mu * t).exp();
    let gx = young_gradient(params.young, params.p, x)?;
    let gy = young_gradient(params.young, params.p, y)?;
    let dx = x.iter().zip(y).zip(&gx).map(|((a, b), g)| 2.0 * params.lambda * (a - b) + weight * g).collect();
    let dy = x.iter().zip(y).zip(&gy).map(|((a, b), g)| 2.0 * params.lambda * (b - a) + weight * g).collect();
    Ok((dx, dy))
}

/// Values on a tensor grid in one or two dimensions, stored with the last axis
/// varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::Invalid(format!("grids must have 1 or 2 axes, got {}", axes.len())));
        }
        for a in &axes {
            if a.is_empty() || a.windows(2).any(|w| !(w[1] > w[0])) || a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid("grid axes must be finite and strictly increasing".into()));
            }
        }
        let n: usize = axes.iter().map(Vec::len).product();
        if values.len() != n {
            return Err(Error::Invalid(format!("{} values for {n} grid points", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("grid values must be finite".into()));
        }
        Ok(Self { axes, values })
    }

    /// Samples `f` on the tensor grid.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(axes: Vec<Vec<f64>>, f: F) -> Result<Self> {
        let pts = points_of(&axes);
        let values = pts.iter().map(|x| f(x)).collect();
        Self::new(axes, values)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        points_of(&self.axes)
    }

    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self { axes: self.axes.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// CSV with header `x,f` or `x,y,f`, one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: &[&str] = if self.dim() == 1 { &["x", "f"] } else { &["x", "y", "f"] };
        w.write_record(header).expect("in-memory write");
        for (pt, v) in self.points().iter().zip(&self.values) {
            let mut row: Vec<String> = pt.iter().map(|&c| format_f64(c)).collect();
            row.push(format_f64(*v));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> = r.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(str::to_string).collect();
        let dim = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
            ["x", "f"] => 1,
            ["x", "y", "f"] => 2,
            _ => return Err(Error::Parse(format!("expected header x,f or x,y,f; got {}", header.join(",")))),
        };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let vals: Option<Vec<f64>> = rec.iter().map(parse_f64).collect();
            match vals {
                Some(v) if v.len() == dim + 1 => rows.push(v),
                _ => return Err(Error::Parse(format!("bad row: {}", rec.iter().collect::<Vec<_>>().join(",")))),
            }
        }
        let mut axes: Vec<Vec<f64>> = (0..dim)
            .map(|k| {
                let mut a: Vec<f64> = rows.iter().map(|r| r[k]).collect();
                a.sort_by(|x, y| x.partial_cmp(y).unwrap());
                a.dedup();
                a
            })
            .collect();
        let n: usize = axes.iter().map(Vec::len).product();
        if n != rows.len() {
            return Err(Error::Parse(format!("{} rows do not form a tensor grid of {n} points", rows.len())));
        }
        let mut values = vec![f64::NAN; n];
        for row in &rows {
            let mut idx = 0;
            for (k, axis) in axes.iter().enumerate() {
                let i = axis.binary_search_by(|v| v.partial_cmp(&row[k]).unwrap()).unwrap();
                idx = idx * axis.len() + i;
            }
            if !values[idx].is_nan() {
                return Err(Error::Parse("duplicate grid point".into()));
            }
            values[idx] = row[dim];
        }
        Self::new(std::mem::take(&mut axes), values)
    }
}

fn points_of(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    match axes {
        [a] => a.iter().map(|&x| vec![x]).collect(),
        [a, b] => a.iter().flat_map(|&x| b.iter().map(move |&y| vec![x, y])).collect(),
        _ => Vec::new(),
    }
}

/// `x ↦ max_y f(y) - φ_p(x - y)/eps` over the grid.
pub fn sup_conv(f: &GridFunction, p: f64, eps: f64) -> Result<GridFunction> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps must be positive, got {eps}")));
    }
    let pts = f.points();
    let values = pts
        .par_iter()
        .map(|x| {
            pts.iter()
                .zip(&f.values)
                .map(|(y, &fy)| fy - quasidistance_between(p, x, y) / eps)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    GridFunction::new(f.axes.clone(), values)
}

/// `-sup_conv(-f)`.
pub fn inf_conv(f: &GridFunction, p: f64, eps: f64) -> Result<GridFunction> {
    Ok(sup_conv(&f.map_values(|v| -v), p, eps)?.map_values(|v| -v))
}
