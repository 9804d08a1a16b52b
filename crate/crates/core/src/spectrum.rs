//! Eigenpairs of `-Δ` on intervals and rectangles, per-mode matrices
//! `M_λ = A - λ diag(Du, Dv)`, and exact integrals of eigenfunction products.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{KineticModel, Mat2};

/// Relative tolerance under which two eigenvalues count as one.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    Interval { s: f64 },
    Rectangle { lx: f64, ly: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub geometry: Geometry,
    pub bc: BoundaryCondition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeIndex {
    Interval(u32),
    Rectangle(u32, u32),
}

impl ModeIndex {
    pub fn m(&self) -> u32 {
        match *self {
            ModeIndex::Interval(m) | ModeIndex::Rectangle(m, _) => m,
        }
    }

    pub fn n(&self) -> Option<u32> {
        match *self {
            ModeIndex::Interval(_) => None,
            ModeIndex::Rectangle(_, n) => Some(n),
        }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeIndex::Interval(m) => write!(f, "({m})"),
            ModeIndex::Rectangle(m, n) => write!(f, "({m},{n})"),
        }
    }
}

/// One eigenpair of `-Δ`: eigenvalue, index tuple and the multiplicity of the
/// eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMode {
    pub lambda: f64,
    pub index: ModeIndex,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

impl DomainSpec {
    pub fn interval(s: f64, bc: BoundaryCondition) -> Self {
        Self {
            geometry: Geometry::Interval { s },
            bc,
        }
    }

    pub fn rectangle(lx: f64, ly: f64, bc: BoundaryCondition) -> Self {
        Self {
            geometry: Geometry::Rectangle { lx, ly },
            bc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.geometry {
            Geometry::Interval { s } => s.is_finite() && s > 0.0,
            Geometry::Rectangle { lx, ly } => {
                lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "domain extents must be positive: {self:?}"
            )))
        }
    }

    pub fn dim(&self) -> usize {
        match self.geometry {
            Geometry::Interval { .. } => 1,
            Geometry::Rectangle { .. } => 2,
        }
    }

    pub fn extents(&self) -> Vec<f64> {
        match self.geometry {
            Geometry::Interval { s } => vec![s],
            Geometry::Rectangle { lx, ly } => vec![lx, ly],
        }
    }

    /// Domain with every extent multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let geometry = match self.geometry {
            Geometry::Interval { s } => Geometry::Interval { s: s * c },
            Geometry::Rectangle { lx, ly } => Geometry::Rectangle {
                lx: lx * c,
                ly: ly * c,
            },
        };
        Self {
            geometry,
            bc: self.bc,
        }
    }

    pub fn trig(&self) -> Trig {
        match self.bc {
            BoundaryCondition::Neumann => Trig::Cos,
            BoundaryCondition::Dirichlet => Trig::Sin,
        }
    }

    fn min_index(&self) -> u32 {
        match self.bc {
            BoundaryCondition::Neumann => 0,
            BoundaryCondition::Dirichlet => 1,
        }
    }

    pub fn eigenvalue(&self, index: ModeIndex) -> f64 {
        match (self.geometry, index) {
            (Geometry::Interval { s }, ModeIndex::Interval(m)) => sq(m as f64 * PI / s),
            (Geometry::Rectangle { lx, ly }, ModeIndex::Rectangle(m, n)) => {
                sq(m as f64 * PI / lx) + sq(n as f64 * PI / ly)
            }
            _ => panic!("mode index {index:?} does not belong to domain {self:?}"),
        }
    }

    pub fn contains(&self, index: ModeIndex) -> bool {
        let lo = self.min_index();
        match (self.geometry, index) {
            (Geometry::Interval { .. }, ModeIndex::Interval(m)) => m >= lo,
            (Geometry::Rectangle { .. }, ModeIndex::Rectangle(m, n)) => m >= lo && n >= lo,
            _ => false,
        }
    }

    /// Per-axis `(wavenumber index, axis length)` factors of an eigenfunction.
    pub fn factors(&self, index: ModeIndex) -> Vec<(u32, f64)> {
        match (self.geometry, index) {
            (Geometry::Interval { s }, ModeIndex::Interval(m)) => vec![(m, s)],
            (Geometry::Rectangle { lx, ly }, ModeIndex::Rectangle(m, n)) => vec![(m, lx), (n, ly)],
            _ => panic!("mode index {index:?} does not belong to domain {self:?}"),
        }
    }

    /// Eigenfunction value at a point (`y` ignored on intervals).
    pub fn eigenfunction(&self, index: ModeIndex, x: f64, y: f64) -> f64 {
        let trig = self.trig();
        self.factors(index)
            .iter()
            .zip([x, y])
            .map(|(&(k, len), p)| {
                let arg = k as f64 * PI * p / len;
                match trig {
                    Trig::Cos => arg.cos(),
                    Trig::Sin => arg.sin(),
                }
            })
            .product()
    }

    pub fn mode(&self, index: ModeIndex) -> SpectralMode {
        let lambda = self.eigenvalue(index);
        SpectralMode {
            lambda,
            index,
            multiplicity: self.multiplicity(lambda),
        }
    }

    /// Number of index tuples sharing `lambda`.
    pub fn multiplicity(&self, lambda: f64) -> usize {
        let tol = DEGENERACY_TOL * lambda.max(1.0);
        self.indices_below(lambda + 2.0 * tol)
            .into_iter()
            .filter(|&i| (self.eigenvalue(i) - lambda).abs() <= tol)
            .count()
    }

    fn indices_below(&self, bound: f64) -> Vec<ModeIndex> {
        let lo = self.min_index();
        if bound < 0.0 {
            return Vec::new();
        }
        match self.geometry {
            Geometry::Interval { s } => {
                let mmax = (s * bound.sqrt() / PI).floor() as u32 + 1;
                (lo..=mmax)
                    .map(ModeIndex::Interval)
                    .filter(|&i| self.eigenvalue(i) <= bound)
                    .collect()
            }
            Geometry::Rectangle { lx, ly } => {
                let mmax = (lx * bound.sqrt() / PI).floor() as u32 + 1;
                let nmax = (ly * bound.sqrt() / PI).floor() as u32 + 1;
                let mut out = Vec::new();
                for m in lo..=mmax {
                    for n in lo..=nmax {
                        let i = ModeIndex::Rectangle(m, n);
                        if self.eigenvalue(i) <= bound {
                            out.push(i);
                        }
                    }
                }
                out
            }
        }
    }
}

fn sq(x: f64) -> f64 {
    x * x
}

/// The `count` smallest eigenpairs of `-Δ`, ascending, equal eigenvalues
/// ordered lexicographically by index.
pub fn eigenpairs(domain: &DomainSpec, count: usize) -> Result<Vec<SpectralMode>> {
    domain.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter(
            "mode count must be at least 1".into(),
        ));
    }
    let first = domain.eigenvalue(match domain.geometry {
        Geometry::Interval { .. } => ModeIndex::Interval(1),
        Geometry::Rectangle { .. } => ModeIndex::Rectangle(1, 1),
    });
    let mut bound = first * count as f64;
    let mut indices = domain.indices_below(bound);
    while indices.len() < count {
        bound *= 2.0;
        indices = domain.indices_below(bound);
    }
    // groups straddling `bound` must be complete
    let mut lambdas: Vec<(f64, ModeIndex)> = indices
        .into_iter()
        .map(|i| (domain.eigenvalue(i), i))
        .collect();
    lambdas.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let cutoff = lambdas[count - 1].0;
    let extra = domain.indices_below(cutoff * (1.0 + 4.0 * DEGENERACY_TOL) + 4.0 * DEGENERACY_TOL);
    let mut lambdas: Vec<(f64, ModeIndex)> = extra
        .into_iter()
        .map(|i| (domain.eigenvalue(i), i))
        .collect();
    lambdas.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut modes = Vec::with_capacity(lambdas.len());
    let mut start = 0;
    while start < lambdas.len() {
        let lead = lambdas[start].0;
        let tol = DEGENERACY_TOL * lead.max(1.0);
        let mut end = start + 1;
        while end < lambdas.len() && lambdas[end].0 - lead <= tol {
            end += 1;
        }
        let mut group: Vec<ModeIndex> = lambdas[start..end].iter().map(|p| p.1).collect();
        group.sort();
        let mult = group.len();
        for i in group {
            modes.push(SpectralMode {
                lambda: domain.eigenvalue(i),
                index: i,
                multiplicity: mult,
            });
        }
        start = end;
    }
    modes.truncate(count);
    Ok(modes)
}

/// Distinct eigenvalues among `modes`, in ascending order.
pub fn distinct_eigenvalues(modes: &[SpectralMode]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for m in modes {
        match out.last() {
            Some(&l) if (m.lambda - l).abs() <= DEGENERACY_TOL * l.max(1.0) => {}
            _ => out.push(m.lambda),
        }
    }
    out
}

pub fn same_eigenvalue(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEGENERACY_TOL * a.abs().max(b.abs()).max(1.0)
}

/// `M_λ` and its eigenvalues, ordered so that `Re(beta2) >= Re(beta1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMatrix {
    pub lambda: f64,
    pub m: Mat2,
    pub beta1: Complex64,
    pub beta2: Complex64,
}

impl ModeMatrix {
    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn is_real_pair(&self) -> bool {
        self.beta2.im == 0.0
    }

    /// Right eigenvector for `beta2` (requires a real pair).
    pub fn right_eigenvector(&self) -> [f64; 2] {
        null_vector(shift(self.m, self.beta2.re))
    }

    /// Left eigenvector for `beta2`, i.e. a right eigenvector of `M_λᵀ`.
    pub fn left_eigenvector(&self) -> [f64; 2] {
        null_vector(transpose(shift(self.m, self.beta2.re)))
    }
}

pub fn mode_matrix(model: &KineticModel, du: f64, dv: f64, lambda: f64) -> ModeMatrix {
    let a = model.jacobian();
    let m = [
        [a[0][0] - lambda * du, a[0][1]],
        [a[1][0], a[1][1] - lambda * dv],
    ];
    let (beta1, beta2) = eigenvalues_2x2(m);
    ModeMatrix {
        lambda,
        m,
        beta1,
        beta2,
    }
}

/// Roots of `μ² - Tr μ + det = 0`, ordered by real part.
pub fn eigenvalues_2x2(m: Mat2) -> (Complex64, Complex64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    // discriminant from the entries avoids cancellation in tr² - 4det
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let disc = half_diff * half_diff + m[0][1] * m[1][0];
    if disc >= 0.0 {
        let root = disc.sqrt();
        let big = 0.5 * tr + (0.5 * tr).signum() * root;
        let (r1, r2) = if big == 0.0 {
            (0.0, 0.0)
        } else {
            (big, det / big)
        };
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        (Complex64::new(lo, 0.0), Complex64::new(hi, 0.0))
    } else {
        let im = (-disc).sqrt();
        (Complex64::new(0.5 * tr, -im), Complex64::new(0.5 * tr, im))
    }
}

fn shift(m: Mat2, s: f64) -> Mat2 {
    [[m[0][0] - s, m[0][1]], [m[1][0], m[1][1] - s]]
}

fn transpose(m: Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// Null vector of a (numerically) rank-one 2×2 matrix, taken from its larger row.
pub fn null_vector(m: Mat2) -> [f64; 2] {
    let r0 = m[0][0].hypot(m[0][1]);
    let r1 = m[1][0].hypot(m[1][1]);
    let row = if r0 >= r1 { m[0] } else { m[1] };
    if row[0] == 0.0 && row[1] == 0.0 {
        return [1.0, 0.0];
    }
    [row[1], -row[0]]
}

/// `∫_Ω e²`.
pub fn square_norm(domain: &DomainSpec, mode: &SpectralMode) -> f64 {
    product_integral(domain, &[mode.index, mode.index])
}

/// `∫_Ω e_i e_j e_k`.
pub fn triple_product(
    domain: &DomainSpec,
    i: &SpectralMode,
    j: &SpectralMode,
    k: &SpectralMode,
) -> f64 {
    product_integral(domain, &[i.index, j.index, k.index])
}

/// Exact integral over the domain of a product of eigenfunctions.
pub fn product_integral(domain: &DomainSpec, modes: &[ModeIndex]) -> f64 {
    let trig = domain.trig();
    let mut total = 1.0;
    for axis in 0..domain.dim() {
        let mut ks: Vec<u32> = Vec::with_capacity(modes.len());
        let mut len = 0.0;
        for &m in modes {
            let (k, l) = domain.factors(m)[axis];
            ks.push(k);
            len = l;
        }
        ks.sort_unstable();
        total *= trig_product_integral(trig, &ks, len);
        if total == 0.0 {
            return 0.0;
        }
    }
    total
}

/// `∫_0^L Π_i trig(k_i π x / L) dx` via product-to-sum expansion.
pub fn trig_product_integral(trig: Trig, ks: &[u32], len: f64) -> f64 {
    // terms: (coefficient, frequency, is_sine)
    let mut terms: Vec<(f64, i64, bool)> = vec![(1.0, 0, false)];
    for &k in ks {
        let k = k as i64;
        let mut next = Vec::with_capacity(terms.len() * 2);
        for &(c, f, s) in &terms {
            match (s, trig) {
                // cos f cos k = ½[cos(f-k) + cos(f+k)]
                (false, Trig::Cos) => {
                    next.push((0.5 * c, f - k, false));
                    next.push((0.5 * c, f + k, false));
                }
                // sin f cos k = ½[sin(f+k) + sin(f-k)]
                (true, Trig::Cos) => {
                    next.push((0.5 * c, f + k, true));
                    next.push((0.5 * c, f - k, true));
                }
                // cos f sin k = ½[sin(f+k) - sin(f-k)]
                (false, Trig::Sin) => {
                    next.push((0.5 * c, f + k, true));
                    next.push((-0.5 * c, f - k, true));
                }
                // sin f sin k = ½[cos(f-k) - cos(f+k)]
                (true, Trig::Sin) => {
                    next.push((0.5 * c, f - k, false));
                    next.push((-0.5 * c, f + k, false));
                }
            }
        }
        terms = next;
    }
    let mut cos_part = 0.0;
    let mut sin_part = 0.0;
    for (c, f, s) in terms {
        if s {
            // ∫_0^π sin(fθ) dθ = (1 - cos fπ) / f
            if f % 2 != 0 {
                sin_part += c * 2.0 / f as f64;
            }
        } else if f == 0 {
            cos_part += c;
        }
    }
    len * cos_part + len / PI * sin_part
}

/// CSV table `m,n,lambda,multiplicity`.
pub fn eigen_table_csv(modes: &[SpectralMode]) -> String {
    let mut out = String::from("m,n,lambda,multiplicity\n");
    for md in modes {
        let n = md.index.n().map(|n| n.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            md.index.m(),
            n,
            crate::io::fmt_f64(md.lambda),
            md.multiplicity
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{schnakenberg_model, SchnakenbergParams};

    fn reference_rect() -> DomainSpec {
        DomainSpec::rectangle(10.0, 5.0, BoundaryCondition::Neumann)
    }

    #[test]
    fn rectangle_table_values() {
        let d = reference_rect();
        let l10 = d.eigenvalue(ModeIndex::Rectangle(1, 0));
        let l12 = d.eigenvalue(ModeIndex::Rectangle(1, 2));
        assert!((l10 - 0.0987).abs() < 5e-5);
        assert!((l12 - 1.6778).abs() < 5e-5);
        let modes = eigenpairs(&d, 6).unwrap();
        assert_eq!(modes[0].lambda, 0.0);
        assert_eq!(modes[0].index, ModeIndex::Rectangle(0, 0));
        // (0,1) and (2,0) share 0.3948; lexicographic order puts (0,1) first
        assert_eq!(modes[2].index, ModeIndex::Rectangle(0, 1));
        assert_eq!(modes[3].index, ModeIndex::Rectangle(2, 0));
        assert_eq!(modes[2].multiplicity, 2);
        assert_eq!(modes[3].multiplicity, 2);
        assert!((modes[2].lambda - 0.3948).abs() < 5e-5);
    }

    #[test]
    fn sorted_and_complete() {
        let d = DomainSpec::rectangle(3.0, 7.0, BoundaryCondition::Dirichlet);
        let modes = eigenpairs(&d, 50).unwrap();
        assert_eq!(modes.len(), 50);
        for w in modes.windows(2) {
            assert!(w[0].lambda <= w[1].lambda);
        }
        // brute force: the 50th eigenvalue bounds everything we skipped
        let last = modes[49].lambda;
        let mut all = Vec::new();
        for m in 1..60 {
            for n in 1..60 {
                all.push(d.eigenvalue(ModeIndex::Rectangle(m, n)));
            }
        }
        all.sort_by(f64::total_cmp);
        assert_eq!(all[49], last);
    }

    #[test]
    fn neumann_interval_starts_at_zero() {
        let d = DomainSpec::interval(4.0, BoundaryCondition::Neumann);
        let modes = eigenpairs(&d, 3).unwrap();
        assert_eq!(modes[0].lambda, 0.0);
        assert_eq!(d.eigenfunction(modes[0].index, 1.3, 0.0), 1.0);
        let d = DomainSpec::interval(4.0, BoundaryCondition::Dirichlet);
        assert_eq!(eigenpairs(&d, 1).unwrap()[0].index, ModeIndex::Interval(1));
    }

    #[test]
    fn bad_extents_rejected() {
        let d = DomainSpec::rectangle(0.0, 5.0, BoundaryCondition::Neumann);
        assert!(eigenpairs(&d, 3).is_err());
        let d = DomainSpec::interval(-1.0, BoundaryCondition::Neumann);
        assert!(eigenpairs(&d, 3).is_err());
        assert!(eigenpairs(&reference_rect(), 0).is_err());
    }

    #[test]
    fn mode_matrix_at_zero_is_jacobian() {
        let m = schnakenberg_model(SchnakenbergParams::new(1.0, 0.5, 1.0).unwrap()).unwrap();
        let mm = mode_matrix(&m, 1.0, 1.0, 0.0);
        assert_eq!(mm.m, m.jacobian());
        assert!((mm.trace() + 2.583_333_333_333_333).abs() < 1e-12);
        assert!((mm.det() - 2.25).abs() < 1e-12);
        assert!(!mm.is_real_pair());
        assert!((mm.beta2.re + 1.291_666_666_666_666_6).abs() < 1e-12);
        assert_eq!(mm.beta1, mm.beta2.conj());
    }

    #[test]
    fn mode_matrix_large_lambda() {
        let m = schnakenberg_model(SchnakenbergParams::new(1.0, 0.5, 1.0).unwrap()).unwrap();
        let mm = mode_matrix(&m, 1.0, 1.0, 1e6);
        assert!(mm.beta1.re < -1e5 && mm.beta2.re < -1e5);
    }

    #[test]
    fn mode_matrix_acceptance_instance() {
        let m = schnakenberg_model(SchnakenbergParams::new(0.2, 1.3, 1.0).unwrap()).unwrap();
        let lam = reference_rect().eigenvalue(ModeIndex::Rectangle(2, 0));
        let mm = mode_matrix(&m, 1.0, 30.0, lam);
        // independent: det from h(λ) and the textbook quadratic formula
        let det = 30.0 * lam * lam - (30.0 * 1.1 / 1.5 - 2.25) * lam + 2.25;
        let tr = 1.1 / 1.5 - 2.25 - 31.0 * lam;
        let b2 = (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0;
        assert!((mm.det() - det).abs() < 1e-12);
        assert!((mm.det() + 0.8713).abs() < 1e-3);
        assert!((mm.beta2.re - b2).abs() < 1e-12);
        assert!((mm.beta2.re - 0.0630).abs() < 1e-3);
    }

    #[test]
    fn eigenvectors_annihilate() {
        let m = schnakenberg_model(SchnakenbergParams::new(0.2, 1.3, 1.0).unwrap()).unwrap();
        let mm = mode_matrix(&m, 1.0, 30.0, 0.3948);
        let x = mm.right_eigenvector();
        let y = mm.left_eigenvector();
        let b = mm.beta2.re;
        let r = [
            mm.m[0][0] * x[0] + mm.m[0][1] * x[1] - b * x[0],
            mm.m[1][0] * x[0] + mm.m[1][1] * x[1] - b * x[1],
        ];
        let l = [
            mm.m[0][0] * y[0] + mm.m[1][0] * y[1] - b * y[0],
            mm.m[0][1] * y[0] + mm.m[1][1] * y[1] - b * y[1],
        ];
        assert!(r[0].abs().max(r[1].abs()) < 1e-12);
        assert!(l[0].abs().max(l[1].abs()) < 1e-12);
    }

    #[test]
    fn norms() {
        let d = DomainSpec::interval(10.0, BoundaryCondition::Neumann);
        assert_eq!(square_norm(&d, &d.mode(ModeIndex::Interval(1))), 5.0);
        assert_eq!(square_norm(&d, &d.mode(ModeIndex::Interval(0))), 10.0);
        let r = reference_rect();
        assert_eq!(square_norm(&r, &r.mode(ModeIndex::Rectangle(1, 1))), 12.5);
    }

    #[test]
    fn triple_products_on_interval() {
        let s = 7.5;
        let d = DomainSpec::interval(s, BoundaryCondition::Neumann);
        let m = |k| d.mode(ModeIndex::Interval(k));
        assert_eq!(triple_product(&d, &m(1), &m(1), &m(1)), 0.0);
        assert_eq!(triple_product(&d, &m(1), &m(1), &m(2)), s / 4.0);
        assert_eq!(triple_product(&d, &m(1), &m(1), &m(0)), s / 2.0);
        assert_eq!(triple_product(&d, &m(1), &m(2), &m(4)), 0.0);
        assert_eq!(triple_product(&d, &m(1), &m(2), &m(3)), s / 4.0);
    }

    #[test]
    fn sine_triple_product() {
        // ∫_0^π sin³ = 4/3
        let d = DomainSpec::interval(PI, BoundaryCondition::Dirichlet);
        let m1 = d.mode(ModeIndex::Interval(1));
        assert!((triple_product(&d, &m1, &m1, &m1) - 4.0 / 3.0).abs() < 1e-14);
        assert!((square_norm(&d, &m1) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_table_has_header() {
        let csv = eigen_table_csv(&eigenpairs(&reference_rect(), 3).unwrap());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("m,n,lambda,multiplicity"));
        assert!(lines.next().unwrap().starts_with("0,0,"));
    }
}
