//! Center-manifold reduction at a Turing threshold.
//!
//! Near criticality the field is written as `w = x ξ e + Φ(x)` where `e` is the
//! critical eigenfunction, `ξ` spans `ker M_λ` and `Φ` is the center-manifold
//! correction. Projecting onto the adjoint direction `ξ* e` gives the scalar
//! normal form
//!
//! ```text
//! dx/dt = β x + P x² + Q x³ + O(x⁴)
//! ```
//!
//! or, when two modes cross together, the quadratic planar system
//!
//! ```text
//! dx/dt = β₁ x + a20 x² + a11 x y + a02 y²
//! dy/dt = β₂ y + b20 x² + b11 x y + b02 y²
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::opt_f64;
use crate::kinetics::{KineticModel, Mat2, Vec2};
use crate::spectrum::{
    eigenpairs, mode_matrix, product_integral, square_norm, DomainSpec, ModeIndex, SpectralMode,
};
use crate::stability::{critical_dv, CriticalParams};

/// Relative offset above `Dv*` used to probe the post-critical side.
pub const ONSET_PROBE: f64 = 1e-3;

/// Eigen-data of one mode at a given `Dv`: right and left eigenvectors of `M_λ`
/// for `beta2` and the pairing `h = (ξ·ξ*) ∫e²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalModeData {
    pub mode: SpectralMode,
    pub du: f64,
    pub dv: f64,
    pub xi: Vec2,
    pub xi_star: Vec2,
    pub norm_h: f64,
}

impl CriticalModeData {
    /// Crossing eigenvalue `Re beta2` of this mode at another `Dv`.
    pub fn beta_at(&self, model: &KineticModel, dv: f64) -> f64 {
        mode_matrix(model, self.du, dv, self.mode.lambda).beta2.re
    }

    /// `|M_λ ξ|` and `|M_λᵀ ξ*|` relative to `|M_λ|` (shifted by `beta2`).
    pub fn residuals(&self, model: &KineticModel) -> (f64, f64) {
        let mm = mode_matrix(model, self.du, self.dv, self.mode.lambda);
        let b = mm.beta2.re;
        let m = mm.m;
        let scale = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        let r = [
            (m[0][0] - b) * self.xi[0] + m[0][1] * self.xi[1],
            m[1][0] * self.xi[0] + (m[1][1] - b) * self.xi[1],
        ];
        let l = [
            (m[0][0] - b) * self.xi_star[0] + m[1][0] * self.xi_star[1],
            m[0][1] * self.xi_star[0] + (m[1][1] - b) * self.xi_star[1],
        ];
        (
            norm(r) / (scale * norm(self.xi)),
            norm(l) / (scale * norm(self.xi_star)),
        )
    }
}

fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Scale `v` so that component `k` equals `target`; unit length if that
/// component vanishes.
fn normalize(v: Vec2, k: usize, target: f64) -> Vec2 {
    if v[k].abs() > 1e-14 * norm(v) {
        let c = target / v[k];
        [v[0] * c, v[1] * c]
    } else {
        let n = norm(v);
        let s = if v[0] + v[1] < 0.0 { -1.0 } else { 1.0 };
        [s * v[0] / n, s * v[1] / n]
    }
}

/// Eigen-data for `beta2` of mode `mode` at `(Du, Dv)`.
///
/// `ξ` is scaled so `ξ₁ = u₀` and `ξ*` so `ξ*₂ = u₀` (falling back to 1 when the
/// steady state has `u₀ = 0`); for Schnakenberg this gives `ξ₁ = a + b`.
pub fn mode_eigendata(
    model: &KineticModel,
    domain: &DomainSpec,
    du: f64,
    dv: f64,
    mode: SpectralMode,
) -> Result<CriticalModeData> {
    let mm = mode_matrix(model, du, dv, mode.lambda);
    if !mm.is_real_pair() {
        return Err(Error::InvalidParameter(format!(
            "mode {} has a complex eigenvalue pair at Dv = {dv}",
            mode.index
        )));
    }
    let u0 = model.steady_state()[0];
    let target = if u0 != 0.0 { u0 } else { 1.0 };
    let xi = normalize(mm.right_eigenvector(), 0, target);
    let xi_star = normalize(mm.left_eigenvector(), 1, target);
    let pairing = dot(xi, xi_star);
    let e2 = square_norm(domain, &mode);
    let norm_h = pairing * e2;
    if pairing.abs() <= 1e-12 * norm(xi) * norm(xi_star) {
        return Err(Error::DegeneratePairing(norm_h));
    }
    Ok(CriticalModeData {
        mode,
        du,
        dv,
        xi,
        xi_star,
        norm_h,
    })
}

/// Eigen-data of every critical mode at `Dv*`.
pub fn critical_eigendata(
    model: &KineticModel,
    domain: &DomainSpec,
    du: f64,
    critical: &CriticalParams,
) -> Result<Vec<CriticalModeData>> {
    critical
        .critical_modes
        .iter()
        .map(|m| mode_eigendata(model, domain, du, critical.dv_star, *m))
        .collect()
}

/// `P = (ξ* · Q(ξ, ξ)) ∫e³ / h`.
pub fn quadratic_coefficient_p(
    data: &CriticalModeData,
    model: &KineticModel,
    domain: &DomainSpec,
) -> f64 {
    let i = data.mode.index;
    let e3 = product_integral(domain, &[i, i, i]);
    if e3 == 0.0 {
        return 0.0;
    }
    dot(data.xi_star, model.quadratic(data.xi)) * e3 / data.norm_h
}

/// Galerkin coefficient `ψ_j` of the center-manifold correction on mode `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiEntry {
    pub index: ModeIndex,
    pub lambda: f64,
    pub psi: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicCoefficient {
    /// `Q` including the direct cubic projection, at `n_modes`.
    pub q: f64,
    /// Same with `2 n_modes` Galerkin modes.
    pub q_refined: f64,
    /// Quadratic-interaction part only (the direct cubic term omitted).
    pub q_without_cubic: f64,
    pub n_modes: usize,
    pub psi: Vec<PsiEntry>,
}

struct QParts {
    cross: f64,
    cubic: f64,
    psi: Vec<PsiEntry>,
}

fn q_parts(
    data: &CriticalModeData,
    model: &KineticModel,
    domain: &DomainSpec,
    n_modes: usize,
) -> Result<QParts> {
    let c = data.mode.index;
    let source = model.quadratic(data.xi);
    let mut cross = 0.0;
    let mut psi = Vec::new();
    for mode in eigenpairs(domain, n_modes)? {
        if mode.index == c {
            continue;
        }
        let overlap = product_integral(domain, &[c, c, mode.index]);
        if overlap == 0.0 {
            continue;
        }
        let coef = overlap / square_norm(domain, &mode);
        let m = mode_matrix(model, data.du, data.dv, mode.lambda).m;
        let p = solve2(m, [-coef * source[0], -coef * source[1]]).ok_or_else(|| {
            Error::SingularModeMatrix {
                mode: mode.index.to_string(),
            }
        })?;
        cross += 2.0 * dot(data.xi_star, model.bilinear(data.xi, p)) * overlap;
        psi.push(PsiEntry {
            index: mode.index,
            lambda: mode.lambda,
            psi: p,
        });
    }
    let e4 = product_integral(domain, &[c, c, c, c]);
    let cubic = dot(data.xi_star, model.cubic(data.xi)) * e4;
    Ok(QParts {
        cross: cross / data.norm_h,
        cubic: cubic / data.norm_h,
        psi,
    })
}

/// Solve `M p = rhs`; `None` if `M` is numerically singular.
fn solve2(m: Mat2, rhs: Vec2) -> Option<Vec2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    if det.abs() <= 1e-12 * scale * scale {
        return None;
    }
    Some([
        (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
    ])
}

/// Cubic normal-form coefficient
///
/// ```text
/// Q = [2 Σ_j ξ*·B(ξ, ψ_j) ∫e² e_j + ξ*·C(ξ) ∫e⁴] / h,   M_λj ψ_j = -Q(ξ, ξ) ∫e² e_j / ∫e_j²
/// ```
///
/// computed with `n_modes` and `2 n_modes` Galerkin modes.
pub fn cubic_coefficient_q(
    data: &CriticalModeData,
    model: &KineticModel,
    domain: &DomainSpec,
    n_modes: usize,
) -> Result<CubicCoefficient> {
    if n_modes < 8 {
        return Err(Error::InvalidParameter(format!(
            "n_modes must be at least 8 (got {n_modes})"
        )));
    }
    let coarse = q_parts(data, model, domain, n_modes)?;
    let fine = q_parts(data, model, domain, 2 * n_modes)?;
    let q = coarse.cross + coarse.cubic;
    let q_refined = fine.cross + fine.cubic;
    if (q - q_refined).abs() > 1e-6 * q_refined.abs() {
        return Err(Error::NotConverged {
            coarse: q,
            fine: q_refined,
        });
    }
    Ok(CubicCoefficient {
        q,
        q_refined,
        q_without_cubic: coarse.cross,
        n_modes,
        psi: coarse.psi,
    })
}

/// Planar normal-form coefficients. `s1 = Q(ξ, ξ)`, `s2 = 2B(ξ, η)`,
/// `s3 = Q(η, η)` are the quadratic interactions before projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarCoefficients {
    pub s1: Vec2,
    pub s2: Vec2,
    pub s3: Vec2,
    pub a20: f64,
    pub a11: f64,
    pub a02: f64,
    pub b20: f64,
    pub b11: f64,
    pub b02: f64,
}

impl PlanarCoefficients {
    fn all(&self) -> [f64; 6] {
        [self.a20, self.a11, self.a02, self.b20, self.b11, self.b02]
    }

    /// `(dx/dt, dy/dt)` without the linear part.
    pub fn quadratic_field(&self, x: f64, y: f64) -> Vec2 {
        [
            self.a20 * x * x + self.a11 * x * y + self.a02 * y * y,
            self.b20 * x * x + self.b11 * x * y + self.b02 * y * y,
        ]
    }

    /// Jacobian of the planar field at `(x, y)`.
    pub fn jacobian(&self, beta: [f64; 2], x: f64, y: f64) -> Mat2 {
        [
            [
                beta[0] + 2.0 * self.a20 * x + self.a11 * y,
                self.a11 * x + 2.0 * self.a02 * y,
            ],
            [
                2.0 * self.b20 * x + self.b11 * y,
                beta[1] + self.b11 * x + 2.0 * self.b02 * y,
            ],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPair {
    /// Projection of the quadratic nonlinearity onto `ξ* e₁` and `η* e₂`.
    pub projected: PlanarCoefficients,
    /// Variant with `∫e₂³` in `b20` and `∫e₁² e₂` in `b02`. Reported for
    /// comparison only.
    pub literal: PlanarCoefficients,
}

/// Planar coefficients for the mode pair `(d1, d2)` with `ξ = d1.xi`, `η = d2.xi`.
pub fn planar_coefficients(
    d1: &CriticalModeData,
    d2: &CriticalModeData,
    model: &KineticModel,
    domain: &DomainSpec,
) -> PlanarPair {
    let (i, j) = (d1.mode.index, d2.mode.index);
    let i111 = product_integral(domain, &[i, i, i]);
    let i112 = product_integral(domain, &[i, i, j]);
    let i122 = product_integral(domain, &[i, j, j]);
    let i222 = product_integral(domain, &[j, j, j]);
    let (xi, eta) = (d1.xi, d2.xi);
    let s1 = model.quadratic(xi);
    let b = model.bilinear(xi, eta);
    let s2 = [2.0 * b[0], 2.0 * b[1]];
    let s3 = model.quadratic(eta);
    let (h1, h2) = (d1.norm_h, d2.norm_h);
    let px = |s: Vec2, int: f64| {
        if int == 0.0 {
            0.0
        } else {
            dot(d1.xi_star, s) * int / h1
        }
    };
    let py = |s: Vec2, int: f64| {
        if int == 0.0 {
            0.0
        } else {
            dot(d2.xi_star, s) * int / h2
        }
    };
    let projected = PlanarCoefficients {
        s1,
        s2,
        s3,
        a20: px(s1, i111),
        a11: px(s2, i112),
        a02: px(s3, i122),
        b20: py(s1, i112),
        b11: py(s2, i122),
        b02: py(s3, i222),
    };
    let literal = PlanarCoefficients {
        b20: py(s1, i222),
        b02: py(s3, i112),
        ..projected
    };
    PlanarPair { projected, literal }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReducedKind {
    ScalarQuadratic,
    ScalarCubic,
    Planar,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionType {
    Continuous,
    Jump,
    Mixed,
    None,
    /// The truncated normal form does not decide the type.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSystem {
    pub kind: ReducedKind,
    pub du: f64,
    #[serde(with = "opt_f64")]
    pub dv_star: Option<f64>,
    /// `Dv` at which `beta` is evaluated.
    pub dv: f64,
    pub modes: Vec<CriticalModeData>,
    pub beta: Vec<f64>,
    /// `beta` just past the threshold, `Dv* (1 + ONSET_PROBE)`; used to decide
    /// planar phase portraits when evaluated exactly at criticality.
    pub beta_onset: Vec<f64>,
    #[serde(with = "opt_f64")]
    pub p: Option<f64>,
    #[serde(with = "opt_f64")]
    pub q: Option<f64>,
    #[serde(with = "opt_f64")]
    pub q_refined: Option<f64>,
    #[serde(with = "opt_f64")]
    pub q_without_cubic: Option<f64>,
    pub planar: Option<PlanarPair>,
    pub psi: Vec<PsiEntry>,
    pub n_modes: usize,
}

/// Reduce at the critical value `Dv*`, evaluating `beta` at `dv` (default `Dv*`).
pub fn reduce_at_critical(
    model: &KineticModel,
    domain: &DomainSpec,
    du: f64,
    dv: Option<f64>,
    n_modes: usize,
) -> Result<ReducedSystem> {
    let crit = critical_dv(model, domain, du)?;
    let data = critical_eigendata(model, domain, du, &crit)?;
    build(
        model,
        domain,
        du,
        Some(crit.dv_star),
        dv.unwrap_or(crit.dv_star),
        data,
        n_modes,
    )
}

/// Reduce onto explicitly chosen modes, with eigenvectors taken at `dv`.
pub fn reduce_modes(
    model: &KineticModel,
    domain: &DomainSpec,
    du: f64,
    dv: f64,
    modes: &[ModeIndex],
    n_modes: usize,
) -> Result<ReducedSystem> {
    let data = modes
        .iter()
        .map(|&i| {
            if !domain.contains(i) {
                return Err(Error::InvalidParameter(format!("mode {i} not in domain")));
            }
            mode_eigendata(model, domain, du, dv, domain.mode(i))
        })
        .collect::<Result<Vec<_>>>()?;
    build(model, domain, du, None, dv, data, n_modes)
}

fn build(
    model: &KineticModel,
    domain: &DomainSpec,
    du: f64,
    dv_star: Option<f64>,
    dv: f64,
    data: Vec<CriticalModeData>,
    n_modes: usize,
) -> Result<ReducedSystem> {
    let beta: Vec<f64> = data.iter().map(|d| d.beta_at(model, dv)).collect();
    let onset = dv_star.unwrap_or(dv) * (1.0 + ONSET_PROBE);
    let beta_onset: Vec<f64> = data.iter().map(|d| d.beta_at(model, onset)).collect();
    let mut r = ReducedSystem {
        kind: ReducedKind::Degenerate,
        du,
        dv_star,
        dv,
        modes: data.clone(),
        beta,
        beta_onset,
        p: None,
        q: None,
        q_refined: None,
        q_without_cubic: None,
        planar: None,
        psi: Vec::new(),
        n_modes,
    };
    match data.as_slice() {
        [d] => {
            let p = quadratic_coefficient_p(d, model, domain);
            r.p = Some(p);
            if model.annihilated_by(d.xi_star) {
                r.kind = ReducedKind::Degenerate;
                r.q = Some(0.0);
                r.q_without_cubic = Some(0.0);
            } else if p != 0.0 {
                r.kind = ReducedKind::ScalarQuadratic;
            } else {
                let c = cubic_coefficient_q(d, model, domain, n_modes)?;
                r.kind = ReducedKind::ScalarCubic;
                r.q = Some(c.q);
                r.q_refined = Some(c.q_refined);
                r.q_without_cubic = Some(c.q_without_cubic);
                r.psi = c.psi;
            }
        }
        [d1, d2] => {
            r.kind = ReducedKind::Planar;
            r.planar = Some(planar_coefficients(d1, d2, model, domain));
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "reduction supports one or two critical modes (got {})",
                data.len()
            )))
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub x: f64,
    pub y: f64,
    pub jacobian: Mat2,
    pub trace: f64,
    pub det: f64,
    /// `trace < 0` and `det > 0`.
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub transition_type: TransitionType,
    /// Planar fixed points (including the origin).
    pub fixed_points: Vec<FixedPoint>,
    pub summary: String,
}

/// Transition type of a reduced system.
pub fn classify_transition(reduced: &ReducedSystem) -> Result<Classification> {
    let plain = |t: TransitionType, s: String| {
        Ok(Classification {
            transition_type: t,
            fixed_points: vec![],
            summary: s,
        })
    };
    match reduced.kind {
        ReducedKind::Degenerate => plain(
            TransitionType::None,
            "adjoint direction annihilates the nonlinearity; no bifurcated branch at this order"
                .into(),
        ),
        ReducedKind::ScalarQuadratic => plain(
            TransitionType::Mixed,
            format!(
                "P = {:.6e} != 0: a single branch x0 = -beta/P crosses the origin",
                reduced.p.unwrap()
            ),
        ),
        ReducedKind::ScalarCubic => {
            let q = reduced.q.unwrap();
            if q < 0.0 {
                plain(
                    TransitionType::Continuous,
                    format!("Q = {q:.6e} < 0: attractor branches x0 = ±sqrt(-beta/Q)"),
                )
            } else if q > 0.0 {
                plain(
                    TransitionType::Jump,
                    format!("Q = {q:.6e} > 0: no local attractor past the threshold"),
                )
            } else {
                plain(
                    TransitionType::Indeterminate,
                    "Q = 0: higher-order terms decide".into(),
                )
            }
        }
        ReducedKind::Planar => {
            let pair = reduced.planar.unwrap().projected;
            let beta = if reduced.beta.iter().any(|&b| b > 0.0) {
                &reduced.beta
            } else {
                &reduced.beta_onset
            };
            let beta = [beta[0], beta[1]];
            if beta.iter().all(|&b| b < 0.0) {
                return plain(TransitionType::None, "both modes stable".into());
            }
            let points = planar_fixed_points(&pair, beta)?;
            let nontrivial: Vec<&FixedPoint> =
                points.iter().filter(|p| p.x != 0.0 || p.y != 0.0).collect();
            let (t, s) = if nontrivial.iter().any(|p| p.stable) {
                (
                    TransitionType::Continuous,
                    "a bifurcated fixed point is an attractor",
                )
            } else if nontrivial.is_empty() {
                (
                    TransitionType::Indeterminate,
                    "quadratic planar field has only the trivial fixed point",
                )
            } else {
                (
                    TransitionType::Jump,
                    "no bifurcated fixed point is an attractor",
                )
            };
            Ok(Classification {
                transition_type: t,
                fixed_points: points,
                summary: s.into(),
            })
        }
    }
}

/// Fixed points of the planar field by damped Newton from a 21×21 grid of
/// starts on `|x|, |y| <= 10 max|β| / min|c|`, `c` the nonzero coefficients.
pub fn planar_fixed_points(c: &PlanarCoefficients, beta: [f64; 2]) -> Result<Vec<FixedPoint>> {
    let field = |x: f64, y: f64| {
        let q = c.quadratic_field(x, y);
        [beta[0] * x + q[0], beta[1] * y + q[1]]
    };
    let point = |x: f64, y: f64| {
        let j = c.jacobian(beta, x, y);
        let trace = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        FixedPoint {
            x,
            y,
            jacobian: j,
            trace,
            det,
            stable: trace < 0.0 && det > 0.0,
        }
    };
    let cmin = c
        .all()
        .iter()
        .filter(|x| **x != 0.0)
        .fold(f64::INFINITY, |m, x| m.min(x.abs()));
    let bmax = beta[0].abs().max(beta[1].abs());
    if !cmin.is_finite() || bmax == 0.0 {
        return Ok(vec![point(0.0, 0.0)]);
    }
    let cmax = c.all().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let r = 10.0 * bmax / cmin;
    let tol = 1e-12 * (bmax * r + cmax * r * r);
    let merge = 1e-8_f64.max(1e-8 * r);
    let mut found: Vec<FixedPoint> = vec![point(0.0, 0.0)];
    let mut best = f64::INFINITY;
    for a in 0..21 {
        for b in 0..21 {
            let mut x = -r + 2.0 * r * a as f64 / 20.0;
            let mut y = -r + 2.0 * r * b as f64 / 20.0;
            let mut f = field(x, y);
            let mut res = norm(f);
            for _ in 0..200 {
                if res <= tol {
                    break;
                }
                let Some(step) = solve2(c.jacobian(beta, x, y), f) else {
                    break;
                };
                let mut t = 1.0;
                loop {
                    let (nx, ny) = (x - t * step[0], y - t * step[1]);
                    let nf = field(nx, ny);
                    if norm(nf) < res || t < 1e-10 {
                        x = nx;
                        y = ny;
                        f = nf;
                        res = norm(nf);
                        break;
                    }
                    t *= 0.5;
                }
            }
            best = best.min(res);
            if res <= tol && x.abs() <= 2.0 * r && y.abs() <= 2.0 * r {
                if !found
                    .iter()
                    .any(|p| (p.x - x).abs() <= merge && (p.y - y).abs() <= merge)
                {
                    found.push(point(x, y));
                }
            }
        }
    }
    if found.is_empty() {
        return Err(Error::NoFixedPointFound { residual: best });
    }
    found.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    Ok(found)
}

/// One bifurcated solution: amplitudes on the critical modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub amplitudes: Vec<f64>,
    pub stable: bool,
    /// Reduced Jacobian at the branch (1×1 entries padded for scalar systems).
    pub jacobian: Mat2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcatedState {
    pub transition_type: TransitionType,
    pub dv: f64,
    pub beta: Vec<f64>,
    /// `(mode, ξ)` pairs; the field of a branch is `Σ amplitude_k ξ_k e_k`.
    pub components: Vec<(ModeIndex, Vec2)>,
    pub branches: Vec<Branch>,
}

impl BifurcatedState {
    pub fn field(&self, branch: usize, domain: &DomainSpec, x: f64, y: f64) -> Vec2 {
        let b = &self.branches[branch];
        let mut w = [0.0; 2];
        for ((index, xi), amp) in self.components.iter().zip(&b.amplitudes) {
            let e = domain.eigenfunction(*index, x, y);
            w[0] += amp * xi[0] * e;
            w[1] += amp * xi[1] * e;
        }
        w
    }

    /// `L²(Ω)` norm of a branch's field (modes are orthogonal).
    pub fn l2_norm(&self, branch: usize, domain: &DomainSpec) -> f64 {
        let b = &self.branches[branch];
        self.components
            .iter()
            .zip(&b.amplitudes)
            .map(|((index, xi), amp)| {
                amp * amp * dot(*xi, *xi) * square_norm(domain, &domain.mode(*index))
            })
            .sum::<f64>()
            .sqrt()
    }

    /// First stable branch, if any.
    pub fn attractor(&self) -> Option<usize> {
        self.branches.iter().position(|b| b.stable)
    }
}

/// Bifurcated branches at `Dv_ref + delta`, where `Dv_ref` is `Dv*` when known
/// and the evaluation `Dv` otherwise.
pub fn bifurcated_state(
    model: &KineticModel,
    reduced: &ReducedSystem,
    delta: f64,
) -> Result<BifurcatedState> {
    let dv = reduced.dv_star.unwrap_or(reduced.dv) + delta;
    let beta: Vec<f64> = if delta == 0.0 && reduced.dv_star.is_some() {
        vec![0.0; reduced.modes.len()]
    } else {
        reduced.modes.iter().map(|d| d.beta_at(model, dv)).collect()
    };
    let transition_type = classify_transition(reduced)?.transition_type;
    let components = reduced.modes.iter().map(|d| (d.mode.index, d.xi)).collect();
    let scalar = |x: f64, slope: f64| Branch {
        amplitudes: vec![x],
        stable: slope < 0.0,
        jacobian: [[slope, 0.0], [0.0, 0.0]],
    };
    let mut branches = Vec::new();
    match reduced.kind {
        ReducedKind::Degenerate => {}
        ReducedKind::ScalarQuadratic | ReducedKind::ScalarCubic => {
            let b = beta[0];
            let p = reduced.p.unwrap_or(0.0);
            let q = reduced.q.unwrap_or(0.0);
            if b == 0.0 {
                branches.push(scalar(0.0, 0.0));
            } else if reduced.kind == ReducedKind::ScalarQuadratic {
                let x = -b / p;
                branches.push(scalar(x, b + 2.0 * p * x));
            } else if b * q < 0.0 {
                let x = (-b / q).sqrt();
                for s in [x, -x] {
                    branches.push(scalar(s, b + 3.0 * q * s * s));
                }
            }
        }
        ReducedKind::Planar => {
            let c = reduced.planar.unwrap().projected;
            if beta.iter().all(|&b| b == 0.0) {
                branches.push(Branch {
                    amplitudes: vec![0.0, 0.0],
                    stable: false,
                    jacobian: [[0.0; 2]; 2],
                });
            } else {
                for p in planar_fixed_points(&c, [beta[0], beta[1]])? {
                    if p.x != 0.0 || p.y != 0.0 {
                        branches.push(Branch {
                            amplitudes: vec![p.x, p.y],
                            stable: p.stable,
                            jacobian: p.jacobian,
                        });
                    }
                }
            }
        }
    }
    Ok(BifurcatedState {
        transition_type,
        dv,
        beta,
        components,
        branches,
    })
}

/// ψ table as CSV `mode_indices,psi1,psi2`.
pub fn psi_table_csv(psi: &[PsiEntry]) -> String {
    let mut out = String::from("mode_indices,psi1,psi2\n");
    for e in psi {
        out.push_str(&format!(
            "\"{}\",{},{}\n",
            e.index,
            crate::io::fmt_f64(e.psi[0]),
            crate::io::fmt_f64(e.psi[1])
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{custom_model, schnakenberg_model, SchnakenbergParams};
    use crate::spectrum::BoundaryCondition;
    use crate::stability::tangency;

    fn accept() -> KineticModel {
        schnakenberg_model(SchnakenbergParams::new(0.2, 1.3, 1.0).unwrap()).unwrap()
    }

    /// Interval whose first Neumann mode sits exactly at the tangency point.
    fn tuned_interval(m: &KineticModel) -> DomainSpec {
        let (_, kc0) = tangency(m, 1.0).unwrap();
        DomainSpec::interval(
            std::f64::consts::PI / kc0.sqrt(),
            BoundaryCondition::Neumann,
        )
    }

    #[test]
    fn eigendata_matches_closed_form() {
        let m = accept();
        let d = tuned_interval(&m);
        let r = reduce_at_critical(&m, &d, 1.0, None, 32).unwrap();
        let cd = r.modes[0];
        let (a, b, rr, s) = (0.2, 1.3, 1.0, 1.5);
        let lam = cd.mode.lambda;
        assert!((cd.xi[0] - s).abs() < 1e-14);
        let xi2 = (s * lam - (b - a) * rr) / (rr * s * s);
        assert!((cd.xi[1] - xi2).abs() < 1e-12);
        let (res_r, res_l) = cd.residuals(&m);
        assert!(res_r < 1e-10 && res_l < 1e-10);
    }

    #[test]
    fn scalar_cubic_instance() {
        let m = accept();
        let d = tuned_interval(&m);
        let r = reduce_at_critical(&m, &d, 1.0, None, 32).unwrap();
        assert_eq!(r.kind, ReducedKind::ScalarCubic);
        assert_eq!(r.p, Some(0.0));
        let q = r.q.unwrap();
        assert!((q + 0.26982).abs() < 1e-4, "{q}");
        assert!((r.q_without_cubic.unwrap() + 0.02133).abs() < 1e-4);
        assert!((q - r.q_refined.unwrap()).abs() <= 1e-6 * q.abs());
        let t = classify_transition(&r).unwrap();
        assert_eq!(t.transition_type, TransitionType::Continuous);
        // ψ lives on modes 0 and 2 only
        let idx: Vec<_> = r.psi.iter().map(|p| p.index).collect();
        assert_eq!(idx, vec![ModeIndex::Interval(0), ModeIndex::Interval(2)]);
        assert!((r.psi[0].psi[1] + 0.01104).abs() < 1e-5);
    }

    #[test]
    fn zero_tensors_give_zero_coefficients() {
        let z = [[[0.0; 2]; 2]; 2];
        let m = custom_model(
            [1.0, 1.0],
            accept().jacobian(),
            [[[0.0; 2]; 2]; 2],
            [z, z],
            "lin",
        )
        .unwrap();
        let d = tuned_interval(&m);
        let crit = critical_dv(&m, &d, 1.0).unwrap();
        let cd = critical_eigendata(&m, &d, 1.0, &crit).unwrap();
        assert_eq!(quadratic_coefficient_p(&cd[0], &m, &d), 0.0);
        let q = cubic_coefficient_q(&cd[0], &m, &d, 16).unwrap();
        assert_eq!(q.q, 0.0);
        let e = DomainSpec::interval(8.627_35, BoundaryCondition::Neumann);
        let d1 = mode_eigendata(&m, &e, 1.0, 32.0, e.mode(ModeIndex::Interval(1))).unwrap();
        let d2 = mode_eigendata(&m, &e, 1.0, 32.0, e.mode(ModeIndex::Interval(2))).unwrap();
        let pc = planar_coefficients(&d1, &d2, &m, &e).projected;
        assert!(pc.all().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn degenerate_when_adjoint_weights_coincide() {
        // Schnakenberg's nonlinearity is (g, -g): any ξ* ∝ (1, 1) annihilates it
        let m = accept();
        let j = m.jacobian();
        // choose Du so that ξ* ∝ (1,1) at λ: needs a11 - λDu + a21 = 0 with Dv fixed by h = 0
        let du = 0.5;
        let lam = (j[0][0] + j[1][0]) / du;
        let dv = (j[1][1] + j[0][1]) / lam;
        let mm = mode_matrix(&m, du, dv, lam);
        assert!(mm.det().abs() < 1e-12);
        let s = std::f64::consts::PI / lam.sqrt();
        let dom = DomainSpec::interval(s, BoundaryCondition::Neumann);
        let cd = mode_eigendata(&m, &dom, du, dv, dom.mode(ModeIndex::Interval(1)));
        if let Ok(cd) = cd {
            assert!(m.annihilated_by(cd.xi_star));
        }
    }

    #[test]
    fn quadratic_coefficient_dirichlet() {
        // ∫ sin³ ≠ 0 for odd Dirichlet modes; here the critical mode is m = 1
        let m = accept();
        let d = DomainSpec::interval(5.6, BoundaryCondition::Dirichlet);
        let r = reduce_at_critical(&m, &d, 1.0, None, 16).unwrap();
        assert_eq!(r.kind, ReducedKind::ScalarQuadratic);
        let cd = r.modes[0];
        let i = cd.mode.index;
        assert_eq!(i, ModeIndex::Interval(1));
        let expect =
            dot(cd.xi_star, m.quadratic(cd.xi)) * product_integral(&d, &[i, i, i]) / cd.norm_h;
        assert_eq!(r.p.unwrap(), expect);
        assert_eq!(
            classify_transition(&r).unwrap().transition_type,
            TransitionType::Mixed
        );
    }

    #[test]
    fn planar_pair_zero_pattern() {
        let m = accept();
        let dom = DomainSpec::interval(8.627_35, BoundaryCondition::Neumann);
        let r = reduce_modes(
            &m,
            &dom,
            1.0,
            32.0,
            &[ModeIndex::Interval(1), ModeIndex::Interval(2)],
            16,
        )
        .unwrap();
        let pair = r.planar.unwrap();
        let p = pair.projected;
        assert_eq!((p.a20, p.a02, p.b11, p.b02), (0.0, 0.0, 0.0, 0.0));
        assert!(p.a11 != 0.0 && p.b20 != 0.0);
        let l = pair.literal;
        assert_eq!((l.a20, l.a02, l.b20, l.b11), (0.0, 0.0, 0.0, 0.0));
        assert!(l.a11 != 0.0 && l.b02 != 0.0);
    }

    #[test]
    fn planar_swap_symmetry() {
        let m = accept();
        let dom = DomainSpec::rectangle(7.0, 4.0, BoundaryCondition::Neumann);
        let i = ModeIndex::Rectangle(1, 0);
        let j = ModeIndex::Rectangle(2, 0);
        let d1 = mode_eigendata(&m, &dom, 1.0, 30.0, dom.mode(i)).unwrap();
        let d2 = mode_eigendata(&m, &dom, 1.0, 30.0, dom.mode(j)).unwrap();
        let a = planar_coefficients(&d1, &d2, &m, &dom).projected;
        let b = planar_coefficients(&d2, &d1, &m, &dom).projected;
        assert_eq!(a.s2, b.s2);
        for (x, y) in [
            (a.a20, b.b02),
            (a.a11, b.b11),
            (a.a02, b.b20),
            (a.b20, b.a02),
            (a.b11, b.a11),
            (a.b02, b.a20),
        ] {
            assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0));
        }
    }

    #[test]
    fn bifurcated_branches() {
        let m = accept();
        let d = tuned_interval(&m);
        let r = reduce_at_critical(&m, &d, 1.0, None, 32).unwrap();
        let zero = bifurcated_state(&m, &r, 0.0).unwrap();
        assert_eq!(zero.branches.len(), 1);
        assert_eq!(zero.l2_norm(0, &d), 0.0);
        let s = bifurcated_state(&m, &r, 0.5).unwrap();
        assert_eq!(s.branches.len(), 2);
        let x0 = (-s.beta[0] / r.q.unwrap()).sqrt();
        assert!((s.branches[0].amplitudes[0] - x0).abs() < 1e-15);
        assert!(s.branches.iter().all(|b| b.stable));
        let xi = r.modes[0].xi;
        let expect = x0 * norm(xi) * (d.extents()[0] / 2.0).sqrt();
        assert!((s.l2_norm(0, &d) - expect).abs() < 1e-12 * expect);
        let below = bifurcated_state(&m, &r, -0.5).unwrap();
        assert!(below.branches.is_empty());
    }

    #[test]
    fn planar_fixed_points_of_decoupled_field() {
        // dx = x - x², dy = -y: fixed points (0,0), (1,0); (1,0) is stable
        let c = PlanarCoefficients {
            s1: [0.0; 2],
            s2: [0.0; 2],
            s3: [0.0; 2],
            a20: -1.0,
            a11: 0.0,
            a02: 0.0,
            b20: 0.0,
            b11: 0.0,
            b02: 0.0,
        };
        let pts = planar_fixed_points(&c, [1.0, -1.0]).unwrap();
        assert_eq!(pts.len(), 2);
        let p = pts.iter().find(|p| p.x != 0.0).unwrap();
        assert!((p.x - 1.0).abs() < 1e-12 && p.y.abs() < 1e-12 && p.stable);
    }
}
