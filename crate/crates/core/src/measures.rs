//! Finite atomic radial measures and the supremum tail functionals.
//!
//! A family `{m_a}` is stored as a list of members, each a finite list of
//! `(radius, weight)` atoms. Every integral is then an exact finite sum, and
//! sums accumulate in descending-radius order so that results do not depend
//! on the order atoms were supplied in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the monotonicity assertions of sampled tail sequences.
pub const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    /// Sorted by descending radius.
    atoms: Vec<(f64, f64)>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(r, w) in &atoms {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Invalid(format!("atom radius must be positive and finite, got {r}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Invalid(format!("atom weight must be positive and finite, got {w}")));
            }
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
        Ok(Self { atoms })
    }

    /// Atoms in descending-radius order.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn max_radius(&self) -> f64 {
        self.atoms.first().map_or(0.0, |a| a.0)
    }
}

/// Region selector for [`MeasureFamily::integrate_sup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// Closed level set `{ |z|^p >= k }`.
    PLevelAtLeast(f64),
    /// Open set `{ |z| > R }`.
    RadiusAbove(f64),
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureFamily {
    members: Vec<AtomicMeasure>,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct FamilyDoc {
    p: f64,
    members: Vec<MemberDoc>,
}

#[derive(Serialize, Deserialize)]
struct MemberDoc {
    atoms: Vec<[f64; 2]>,
}

impl MeasureFamily {
    pub fn new(members: Vec<AtomicMeasure>, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Invalid(format!("exponent p must be positive, got {p}")));
        }
        if members.is_empty() {
            return Err(Error::Invalid("a measure family needs at least one member".into()));
        }
        Ok(Self { members, p })
    }

    /// Parses `{"p": .., "members": [{"atoms": [[radius, weight], ..]}, ..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FamilyDoc = serde_json::from_str(text)?;
        let members = doc
            .members
            .into_iter()
            .map(|m| AtomicMeasure::new(m.atoms.into_iter().map(|[r, w]| (r, w)).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(members, doc.p)
    }

    pub fn to_json(&self) -> String {
        let doc = FamilyDoc {
            p: self.p,
            members: self
                .members
                .iter()
                .map(|m| MemberDoc { atoms: m.atoms.iter().map(|&(r, w)| [r, w]).collect() })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("family document serializes")
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Same atoms, different exponent.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.members.clone(), p)
    }

    pub fn members(&self) -> &[AtomicMeasure] {
        &self.members
    }

    pub fn max_radius(&self) -> f64 {
        self.members.iter().map(AtomicMeasure::max_radius).fold(0.0, f64::max)
    }

    /// `sup_a ∫_{|z|^p >= k} |z|^p m_a(dz)`.
    pub fn p_tail(&self, k: f64) -> f64 {
        let p = self.p;
        self.members
            .iter()
            .map(|m| {
                m.atoms
                    .iter()
                    .map(|&(r, w)| (r.powf(p), w))
                    .filter(|&(rp, _)| rp >= k)
                    .fold(0.0, |acc, (rp, w)| acc + w * rp)
            })
            .fold(0.0, f64::max)
    }

    /// `sup_a ∫_{|z| <= kappa} |z|^2 m_a(dz)`.
    pub fn small_jump_mass(&self, kappa: f64) -> f64 {
        self.members
            .iter()
            .map(|m| {
                m.atoms
                    .iter()
                    .filter(|&&(r, _)| r <= kappa)
                    .fold(0.0, |acc, &(r, w)| acc + w * r * r)
            })
            .fold(0.0, f64::max)
    }

    /// `sup_a Σ_{atoms in region} w · g(r)`; `g` receives the atom radius.
    pub fn integrate_sup<G>(&self, g: G, region: Region) -> Result<f64>
    where
        G: Fn(f64) -> f64,
    {
        let p = self.p;
        let mut best = 0.0f64;
        for m in &self.members {
            let mut acc = 0.0;
            for &(r, w) in &m.atoms {
                let inside = match region {
                    Region::PLevelAtLeast(k) => r.powf(p) >= k,
                    Region::RadiusAbove(big_r) => r > big_r,
                    Region::All => true,
                };
                if !inside {
                    continue;
                }
                let v = g(r);
                if !v.is_finite() {
                    return Err(Error::Domain(format!("integrand is {v} at radius {r}")));
                }
                acc += w * v;
            }
            best = best.max(acc);
        }
        Ok(best)
    }

    /// Samples both limits of the uniform-integrability assumption.
    pub fn check_uniform_integrability(&self, radii: &[f64], kappas: &[f64]) -> Result<UiReport> {
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|&r| r < 1.0) {
            return Err(Error::Invalid("R list must be increasing and >= 1".into()));
        }
        if kappas.windows(2).any(|w| w[1] >= w[0]) || kappas.iter().any(|&k| !(k > 0.0 && k <= 1.0)) {
            return Err(Error::Invalid("kappa list must be decreasing inside (0, 1]".into()));
        }
        let tails: Vec<f64> = radii.iter().map(|r| self.p_tail(r.powf(self.p))).collect();
        let small: Vec<f64> = kappas.iter().map(|&k| self.small_jump_mass(k)).collect();
        for (name, seq) in [("tail", &tails), ("small-jump", &small)] {
            if let Some(i) = (1..seq.len()).find(|&i| seq[i] > seq[i - 1] + MONOTONE_TOL * seq[i - 1].max(1.0)) {
                return Err(Error::Construction(format!(
                    "{name} sequence increases at position {i}: {} -> {}",
                    seq[i - 1],
                    seq[i]
                )));
            }
        }
        let tail_reaches_zero = tails.last().is_some_and(|&t| t == 0.0);
        Ok(UiReport { tails, small_masses: small, tail_reaches_zero })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UiReport {
    pub tails: Vec<f64>,
    pub small_masses: Vec<f64>,
    pub tail_reaches_zero: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_atom(p: f64) -> MeasureFamily {
        MeasureFamily::new(vec![AtomicMeasure::new(vec![(1.0, 1.0), (2.0, 1.0)]).unwrap()], p).unwrap()
    }

    #[test]
    fn two_atom_tails() {
        let f = two_atom(1.0);
        assert_eq!(f.p_tail(1.0), 3.0);
        assert_eq!(f.p_tail(2.0), 2.0);
        assert_eq!(f.p_tail(2.5), 0.0);
    }

    #[test]
    fn supremum_over_members() {
        let a = AtomicMeasure::new(vec![(1.0, 1.0), (2.0, 1.0)]).unwrap();
        let b = AtomicMeasure::new(vec![(2.0, 1.0)]).unwrap();
        let f = MeasureFamily::new(vec![b, a], 1.0).unwrap();
        assert_eq!(f.p_tail(1.0), 3.0);
    }

    #[test]
    fn small_jumps() {
        let f = MeasureFamily::new(vec![AtomicMeasure::new(vec![(0.5, 2.0)]).unwrap()], 1.0).unwrap();
        assert_eq!(f.small_jump_mass(0.5), 0.5);
        assert_eq!(f.small_jump_mass(0.4), 0.0);
        let g = MeasureFamily::new(
            vec![AtomicMeasure::new(vec![(0.5, 2.0), (1.0, 3.0), (0.1, 1.0), (4.0, 9.0)]).unwrap()],
            1.0,
        )
        .unwrap();
        assert!((g.small_jump_mass(1.0) - (3.0 + 0.5 + 0.01)).abs() < 1e-15);
    }

    #[test]
    fn singleton_atom_at_one() {
        let f = MeasureFamily::new(vec![AtomicMeasure::new(vec![(1.0, 2.5)]).unwrap()], 2.0).unwrap();
        let rep = f.check_uniform_integrability(&[1.0, 2.0], &[1.0, 0.5, 0.25]).unwrap();
        assert_eq!(rep.small_masses, vec![2.5, 0.0, 0.0]);
        assert_eq!(rep.tails, vec![2.5, 0.0]);
    }

    #[test]
    fn ui_report_for_two_atoms() {
        let rep = two_atom(1.0).check_uniform_integrability(&[1.0, 2.0, 3.0], &[1.0, 0.5]).unwrap();
        assert_eq!(rep.tails, vec![3.0, 2.0, 0.0]);
        assert!(rep.tail_reaches_zero);
    }

    #[test]
    fn integrate_sup_agrees_with_tail() {
        let f = two_atom(1.5);
        for k in [0.0, 1.0, 2.0, 2.8, 3.0, 10.0] {
            let v = f.integrate_sup(|r| r.powf(1.5), Region::PLevelAtLeast(k)).unwrap();
            assert_eq!(v, f.p_tail(k));
        }
        assert_eq!(f.integrate_sup(|_| 0.0, Region::All).unwrap(), 0.0);
        assert!(f.integrate_sup(|_| f64::INFINITY, Region::All).is_err());
        assert_eq!(f.integrate_sup(|_| 1.0, Region::RadiusAbove(1.0)).unwrap(), 1.0);
    }

    #[test]
    fn loader_rejects_bad_atoms() {
        assert!(MeasureFamily::from_json(r#"{"p":1,"members":[{"atoms":[[0,1]]}]}"#).is_err());
        assert!(MeasureFamily::from_json(r#"{"p":1,"members":[{"atoms":[[1,-1]]}]}"#).is_err());
        assert!(MeasureFamily::from_json(r#"{"p":0,"members":[{"atoms":[[1,1]]}]}"#).is_err());
        assert!(MeasureFamily::from_json(r#"{"p":1,"members":[]}"#).is_err());
        let f = MeasureFamily::from_json(r#"{"p":2,"members":[{"atoms":[[1,1],[3,0.5]]}]}"#).unwrap();
        assert_eq!(MeasureFamily::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn bad_sample_lists() {
        let f = two_atom(1.0);
        assert!(f.check_uniform_integrability(&[2.0, 1.0], &[0.5]).is_err());
        assert!(f.check_uniform_integrability(&[1.0], &[0.5, 0.7]).is_err());
    }

    fn family_strategy() -> impl Strategy<Value = MeasureFamily> {
        let atom = (0.01f64..10.0, 0.01f64..5.0);
        let member = prop::collection::vec(atom, 1..8);
        (prop::collection::vec(member, 1..4), 0.2f64..4.0).prop_map(|(ms, p)| {
            let members = ms.into_iter().map(|a| AtomicMeasure::new(a).unwrap()).collect();
            MeasureFamily::new(members, p).unwrap()
        })
    }

    proptest! {
        #[test]
        fn tail_is_non_increasing(f in family_strategy(), a in 0.0f64..100.0, b in 0.0f64..100.0) {
            let (k1, k2) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(f.p_tail(k2) <= f.p_tail(k1));
            let top = f.max_radius().powf(f.p());
            prop_assert_eq!(f.p_tail(top * 1.000001 + 1e-9), 0.0);
        }

        #[test]
        fn small_mass_is_non_decreasing(f in family_strategy(), a in 0.001f64..1.0, b in 0.001f64..1.0) {
            let (k1, k2) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(f.small_jump_mass(k1) <= f.small_jump_mass(k2) * (1.0 + 1e-12));
        }
    }
}
