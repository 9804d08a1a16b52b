//! Turing stability verdicts, instability windows and critical diffusivities.
//!
//! Everything here is driven by the dispersion polynomial
//!
//! ```text
//! h(λ) = det M_λ = Du Dv λ² - D λ + det(A),   D = Dv a11 + Du a22
//! ```
//!
//! whose roots `k± = k_c ± √L`, `k_c = D / (2 Du Dv)`,
//! `L = -det(A) / (Du Dv) + D² / (4 Du² Dv²)` bound the band of unstable
//! eigenvalues of `-Δ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::opt_f64;
use crate::kinetics::{schnakenberg_model, KineticModel, SchnakenbergParams};
use crate::spectrum::{
    distinct_eigenvalues, eigenpairs, mode_matrix, same_eigenvalue, DomainSpec, SpectralMode,
};

/// Relative tolerance under which two per-mode thresholds coincide.
pub const DOUBLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    KineticsUnstable,
    TuringStable,
    TuringUnstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowingMode {
    pub mode: SpectralMode,
    pub beta2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: Verdict,
    pub du: f64,
    pub dv: f64,
    pub trace: f64,
    pub det: f64,
    pub d: f64,
    pub l: f64,
    pub kc: f64,
    pub window: Option<(f64, f64)>,
    pub modes_examined: usize,
    pub unstable_modes: Vec<GrowingMode>,
}

/// `D = Dv a11 + Du a22`
pub fn dispersion_d(model: &KineticModel, du: f64, dv: f64) -> f64 {
    let a = model.jacobian();
    dv * a[0][0] + du * a[1][1]
}

/// `L = -det(A)/(Du Dv) + D²/(4 Du² Dv²)`
pub fn dispersion_l(model: &KineticModel, du: f64, dv: f64) -> f64 {
    let d = dispersion_d(model, du, dv);
    let p = du * dv;
    -model.det() / p + d * d / (4.0 * p * p)
}

/// `h(λ) = Du Dv λ² - D λ + det(A)`
pub fn dispersion_h(model: &KineticModel, du: f64, dv: f64, lambda: f64) -> f64 {
    du * dv * lambda * lambda - dispersion_d(model, du, dv) * lambda + model.det()
}

fn check_diffusivities(du: f64, dv: f64) -> Result<()> {
    if du.is_finite() && dv.is_finite() && du > 0.0 && dv > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "diffusivities must be positive (Du={du}, Dv={dv})"
        )))
    }
}

/// Band `(k-, k+)` of eigenvalues with `h < 0`; present iff `D > 0` and `L >= 0`.
pub fn instability_window(model: &KineticModel, du: f64, dv: f64) -> Option<(f64, f64)> {
    let d = dispersion_d(model, du, dv);
    let l = dispersion_l(model, du, dv);
    if d > 0.0 && l >= 0.0 {
        let kc = d / (2.0 * du * dv);
        let r = l.sqrt();
        Some((kc - r, kc + r))
    } else {
        None
    }
}

/// Verdict on the homogeneous steady state, enumerating at least `mode_count`
/// modes and as many more as needed to pass the upper window edge.
pub fn turing_verdict(
    model: &KineticModel,
    domain: &DomainSpec,
    du: f64,
    dv: f64,
    mode_count: usize,
) -> Result<StabilityReport> {
    check_diffusivities(du, dv)?;
    let window = instability_window(model, du, dv);
    let modes = enumerate_past(domain, mode_count, window.map(|w| w.1).unwrap_or(0.0))?;
    let d = dispersion_d(model, du, dv);
    let l = dispersion_l(model, du, dv);

    let kinetics_stable = model.kinetics_stable();
    let mut unstable_modes = Vec::new();
    for mode in &modes {
        let mm = mode_matrix(model, du, dv, mode.lambda);
        let grows = if kinetics_stable {
            matches!(window, Some((lo, hi)) if lo < mode.lambda && mode.lambda < hi)
        } else {
            mm.beta2.re > 0.0
        };
        if grows {
            unstable_modes.push(GrowingMode {
                mode: *mode,
                beta2: mm.beta2.re,
            });
        }
    }
    let verdict = if !kinetics_stable {
        Verdict::KineticsUnstable
    } else if unstable_modes.is_empty() {
        Verdict::TuringStable
    } else {
        Verdict::TuringUnstable
    };
    Ok(StabilityReport {
        verdict,
        du,
        dv,
        trace: model.trace(),
        det: model.det(),
        d,
        l,
        kc: d / (2.0 * du * dv),
        window,
        modes_examined: modes.len(),
        unstable_modes,
    })
}

/// At least `count` modes, extended until two distinct eigenvalues exceed
/// `past` (so the first group above `past` is complete).
pub(crate) fn enumerate_past(
    domain: &DomainSpec,
    count: usize,
    past: f64,
) -> Result<Vec<SpectralMode>> {
    let mut n = count.max(2);
    loop {
        let modes = eigenpairs(domain, n)?;
        if distinct_eigenvalues(&modes)
            .iter()
            .filter(|&&l| l > past)
            .count()
            >= 2
        {
            return Ok(modes);
        }
        n *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionClass {
    Single,
    Double,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalParams {
    pub du: f64,
    /// Diffusivity at which `min_λ h(λ) = 0`.
    pub dv0: f64,
    /// Location of that minimum.
    pub kc0: f64,
    pub bracket: (f64, f64),
    #[serde(with = "opt_f64")]
    pub dv_at_lambda_i: Option<f64>,
    #[serde(with = "opt_f64")]
    pub dv_at_lambda_ip1: Option<f64>,
    pub dv_star: f64,
    pub transition_class: TransitionClass,
    pub critical_modes: Vec<SpectralMode>,
}

/// Tangency diffusivity: larger root of `a11² Dv² - q Dv + a22² Du² = 0`,
/// `q = 4 Du det(A) - 2 a11 a22 Du`. Returns `(Dv0, kc0)`.
pub fn tangency(model: &KineticModel, du: f64) -> Result<(f64, f64)> {
    let a = model.jacobian();
    let (a11, a22) = (a[0][0], a[1][1]);
    if a11 <= 0.0 {
        return Err(Error::NoCriticalValue(format!(
            "a11 = {a11} <= 0: no activator"
        )));
    }
    let q = 4.0 * du * model.det() - 2.0 * a11 * a22 * du;
    let disc = q * q - 4.0 * a11 * a11 * a22 * a22 * du * du;
    if disc < 0.0 || q <= 0.0 {
        return Err(Error::NoCriticalValue(format!(
            "tangency quadratic has no positive root (q={q})"
        )));
    }
    let dv0 = (q + disc.sqrt()) / (2.0 * a11 * a11);
    let kc0 = (a11 * dv0 + a22 * du) / (2.0 * du * dv0);
    Ok((dv0, kc0))
}

/// Diffusivity at which `h(λ) = 0` for a fixed eigenvalue, i.e.
/// `(a22 Du λ - det A) / (Du λ² - a11 λ)`. `None` if mode λ can never turn unstable.
pub fn per_mode_threshold(model: &KineticModel, du: f64, lambda: f64) -> Option<f64> {
    let a = model.jacobian();
    let denom = du * lambda * lambda - a[0][0] * lambda;
    if lambda <= 0.0 || denom >= 0.0 {
        return None;
    }
    let dv = (a[1][1] * du * lambda - model.det()) / denom;
    (dv > 0.0 && dv.is_finite()).then_some(dv)
}

/// Critical `Dv` for fixed `Du`: the smaller per-mode threshold of the two
/// eigenvalues bracketing the tangency point `kc0`.
pub fn critical_dv(model: &KineticModel, domain: &DomainSpec, du: f64) -> Result<CriticalParams> {
    check_diffusivities(du, 1.0)?;
    domain.validate()?;
    if !model.kinetics_stable() {
        return Err(Error::KineticsUnstable {
            trace: model.trace(),
            det: model.det(),
        });
    }
    let (dv0, kc0) = tangency(model, du)?;

    let modes = enumerate_past(domain, 32, kc0)?;
    let lambdas = distinct_eigenvalues(&modes);
    let Some(i) = lambdas.iter().rposition(|&l| l <= kc0) else {
        return Err(Error::BracketFailure {
            kc0,
            nearest: lambdas[0],
        });
    };
    let (lo, hi) = (lambdas[i], lambdas[i + 1]);
    let t_lo = per_mode_threshold(model, du, lo);
    let t_hi = per_mode_threshold(model, du, hi);
    let dv_star = match (t_lo, t_hi) {
        (Some(x), Some(y)) => x.min(y),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => {
            return Err(Error::NoCriticalValue(format!(
                "neither bracketing eigenvalue ({lo}, {hi}) can become unstable"
            )))
        }
    };
    let hits = |t: Option<f64>| t.map_or(false, |t| (t - dv_star).abs() <= DOUBLE_TOL * dv_star);
    let mut critical_lambdas = Vec::new();
    if hits(t_lo) {
        critical_lambdas.push(lo);
    }
    if hits(t_hi) {
        critical_lambdas.push(hi);
    }
    let critical_modes: Vec<SpectralMode> = modes
        .iter()
        .filter(|m| {
            critical_lambdas
                .iter()
                .any(|&l| same_eigenvalue(m.lambda, l))
        })
        .copied()
        .collect();
    let double = critical_lambdas.len() > 1 || critical_modes.iter().any(|m| m.multiplicity >= 2);
    Ok(CriticalParams {
        du,
        dv0,
        kc0,
        bracket: (lo, hi),
        dv_at_lambda_i: t_lo,
        dv_at_lambda_ip1: t_hi,
        dv_star,
        transition_class: if double {
            TransitionClass::Double
        } else {
            TransitionClass::Single
        },
        critical_modes,
    })
}

/// Critical `d` of the Schnakenberg system (`Du = 1`).
pub fn schnakenberg_critical_d(
    p: SchnakenbergParams,
    domain: &DomainSpec,
) -> Result<CriticalParams> {
    let model = schnakenberg_model(p)?;
    let s = p.a + p.b;
    if (p.b - p.a) / s - s * s >= 0.0 {
        return Err(Error::KineticsUnstable {
            trace: model.trace(),
            det: model.det(),
        });
    }
    if p.b <= p.a {
        return Err(Error::NoCriticalValue(format!(
            "b = {} <= a = {}",
            p.b, p.a
        )));
    }
    critical_dv(&model, domain, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum PesCertificate {
    Crossing {
        dv_star: f64,
        /// Grid cell containing the crossing.
        bracket: (f64, f64),
        critical_modes: Vec<SpectralMode>,
        /// Largest real part among all other eigenvalues at `dv_star`.
        second_largest_re_beta: f64,
    },
    NoCrossing {
        max_re_beta: f64,
    },
}

/// Certify exchange of stability along a sorted grid of `Dv` values.
pub fn check_pes(
    model: &KineticModel,
    domain: &DomainSpec,
    du: f64,
    grid: &[f64],
) -> Result<PesCertificate> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[0] < w[1])) || grid[0] <= 0.0 {
        return Err(Error::InvalidParameter(
            "Dv grid must be positive and strictly increasing".into(),
        ));
    }
    let gmax = *grid.last().unwrap();
    let far = instability_window(model, du, gmax).map_or(0.0, |w| w.1);
    let crit = match critical_dv(model, domain, du) {
        Ok(c) => c,
        Err(Error::NoCriticalValue(reason)) => {
            let modes = enumerate_past(domain, 64, far)?;
            let mut max_re = f64::NEG_INFINITY;
            for &dv in grid {
                for m in &modes {
                    let b = mode_matrix(model, du, dv, m.lambda).beta2.re;
                    if b >= 0.0 {
                        return Err(Error::PesViolation {
                            mode: m.index.to_string(),
                            detail: format!("Re beta = {b} >= 0 at Dv = {dv} without a critical value ({reason})"),
                        });
                    }
                    max_re = max_re.max(b);
                }
            }
            return Ok(PesCertificate::NoCrossing {
                max_re_beta: max_re,
            });
        }
        Err(e) => return Err(e),
    };
    let dv_star = crit.dv_star;
    if dv_star < grid[0] || dv_star > gmax {
        return Err(Error::CrossingNotBracketed {
            dv_star,
            min: grid[0],
            max: gmax,
        });
    }
    let k = grid
        .windows(2)
        .position(|w| w[0] <= dv_star && dv_star <= w[1])
        .unwrap();
    let bracket = (grid[k], grid[k + 1]);

    let is_critical = |m: &SpectralMode| crit.critical_modes.iter().any(|c| c.index == m.index);
    let modes = enumerate_past(domain, 64, far.max(crit.bracket.1))?;
    for m in modes.iter().filter(|m| is_critical(m)) {
        let mut sign_changes = 0;
        let mut prev: Option<bool> = None;
        for &dv in grid {
            if dv == dv_star {
                continue;
            }
            let positive = mode_matrix(model, du, dv, m.lambda).beta2.re > 0.0;
            if positive != (dv > dv_star) {
                return Err(Error::PesViolation {
                    mode: m.index.to_string(),
                    detail: format!("Re beta2 has the wrong sign at Dv = {dv}"),
                });
            }
            if let Some(p) = prev {
                if p != positive {
                    sign_changes += 1;
                }
            }
            prev = Some(positive);
        }
        if sign_changes != 1 {
            return Err(Error::PesViolation {
                mode: m.index.to_string(),
                detail: format!("{sign_changes} sign changes of Re beta2 along the grid"),
            });
        }
    }
    let mut second = f64::NEG_INFINITY;
    for m in &modes {
        let mm = mode_matrix(model, du, dv_star, m.lambda);
        let other = if is_critical(m) {
            mm.beta1.re
        } else {
            mm.beta2.re
        };
        if other >= 0.0 {
            return Err(Error::PesViolation {
                mode: m.index.to_string(),
                detail: format!("Re beta = {other} >= 0 at the critical value {dv_star}"),
            });
        }
        second = second.max(other);
    }
    Ok(PesCertificate::Crossing {
        dv_star,
        bracket,
        critical_modes: crit.critical_modes,
        second_largest_re_beta: second,
    })
}

/// Uniform samples `(λ, h(λ))` on `[0, lambda_max]`.
pub fn h_profile(
    model: &KineticModel,
    du: f64,
    dv: f64,
    lambda_max: f64,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    check_diffusivities(du, dv)?;
    if samples < 2 || !(lambda_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "h profile needs samples >= 2 and lambda_max > 0 (got {samples}, {lambda_max})"
        )));
    }
    Ok((0..samples)
        .map(|k| {
            let l = lambda_max * k as f64 / (samples - 1) as f64;
            (l, dispersion_h(model, du, dv, l))
        })
        .collect())
}

pub fn h_profile_csv(profile: &[(f64, f64)]) -> String {
    let mut out = String::from("lambda,h\n");
    for (l, h) in profile {
        out.push_str(&format!(
            "{},{}\n",
            crate::io::fmt_f64(*l),
            crate::io::fmt_f64(*h)
        ));
    }
    out
}

/// Tangency located numerically: minimise `h` over a dense λ grid (polished by
/// golden-section search) and bisect on `Dv` until the minimum crosses zero.
/// Independent of the closed-form root in [`tangency`]; needs `a11 > 0`.
pub fn tangency_by_bisection(model: &KineticModel, du: f64) -> Result<(f64, f64)> {
    let a11 = model.jacobian()[0][0];
    if a11 <= 0.0 || model.det() <= 0.0 {
        return Err(Error::NoCriticalValue(
            "dispersion minimum never reaches zero".into(),
        ));
    }
    // h < 0 only for λ < a11 / Du
    let lmax = a11 / du;
    let min_h = |dv: f64| dense_min(|l| dispersion_h(model, du, dv, l), 0.0, lmax, 4000);
    let mut lo = 1e-6;
    let mut hi = 1.0;
    while min_h(hi).1 >= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoCriticalValue(
                "no Dv below 1e12 makes h negative".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if min_h(mid).1 >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    let dv0 = 0.5 * (lo + hi);
    Ok((dv0, min_h(dv0).0))
}

/// `(argmin, min)` of `f` on `[a, b]`: grid scan then golden-section polish.
fn dense_min(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> (f64, f64) {
    let step = (b - a) / n as f64;
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for k in 0..=n {
        let v = f(a + step * k as f64);
        if v < best_val {
            best_val = v;
            best = k;
        }
    }
    let mut lo = a + step * best.saturating_sub(1) as f64;
    let mut hi = (a + step * (best + 1) as f64).min(b);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) < f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let v = f(x);
    if v <= best_val {
        (x, v)
    } else {
        (a + step * best as f64, best_val)
    }
}

/// Literature values quoted for the two Schnakenberg parameter sets
/// `(a, b, r) = (0.1, 0.5, 1)` and `(1, 0.5, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedValues {
    #[serde(with = "opt_f64")]
    pub dv0: Option<f64>,
    #[serde(with = "opt_f64")]
    pub kc0: Option<f64>,
    #[serde(with = "opt_f64")]
    pub d0: Option<f64>,
    #[serde(with = "opt_f64")]
    pub d_at_unit_d: Option<f64>,
    #[serde(with = "opt_f64")]
    pub l_at_unit_d: Option<f64>,
}

pub fn published_values(p: SchnakenbergParams) -> Option<PublishedValues> {
    let is = |a: f64, b: f64, r: f64| p.a == a && p.b == b && p.r == r;
    if is(0.1, 0.5, 1.0) {
        Some(PublishedValues {
            dv0: Some(5.1648),
            kc0: Some(0.2985),
            d0: Some(0.6157),
            d_at_unit_d: None,
            l_at_unit_d: None,
        })
    } else if is(1.0, 0.5, 1.0) {
        Some(PublishedValues {
            dv0: Some(55.1025),
            kc0: Some(-0.1871),
            d0: None,
            d_at_unit_d: Some(-2.5833),
            l_at_unit_d: Some(-0.5816),
        })
    } else {
        None
    }
}

/// Schnakenberg-specific closed form for the tangency diffusivity as it is
/// usually quoted:
/// `[(4b²+4ab)S² + S²√((4b²+4ab)² + a² - b²)] / (b-a)²`, `S = a + b`.
/// It does not satisfy `min_λ h = 0` in general; kept for auditing only.
pub fn quoted_schnakenberg_dv0(p: SchnakenbergParams) -> f64 {
    let SchnakenbergParams { a, b, .. } = p;
    let s2 = (a + b) * (a + b);
    let c = 4.0 * b * b + 4.0 * a * b;
    (c * s2 + s2 * (c * c + a * a - b * b).sqrt()) / ((b - a) * (b - a))
}

/// Quoted companion: `kc0 = r((b-a) Dv0 - S³) / (2 Dv0 S)`.
pub fn quoted_schnakenberg_kc0(p: SchnakenbergParams, dv0: f64) -> f64 {
    let s = p.a + p.b;
    p.r * ((p.b - p.a) * dv0 - s * s * s) / (2.0 * dv0 * s)
}

/// Side-by-side comparison of quoted and recomputed tangency values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangencyAudit {
    pub params: SchnakenbergParams,
    pub trace: f64,
    pub det: f64,
    /// `Tr(A) < 0` and `det(A) > 0`.
    pub hypothesis_holds: bool,
    pub published: Option<PublishedValues>,
    pub quoted_formula_dv0: f64,
    pub quoted_formula_kc0: f64,
    #[serde(with = "opt_f64")]
    pub closed_form_dv0: Option<f64>,
    #[serde(with = "opt_f64")]
    pub closed_form_kc0: Option<f64>,
    #[serde(with = "opt_f64")]
    pub bisection_dv0: Option<f64>,
    #[serde(with = "opt_f64")]
    pub bisection_kc0: Option<f64>,
    /// `min_λ h(λ)` at the quoted `Dv0`; zero if the quoted value were a tangency.
    pub min_h_at_quoted_dv0: f64,
    pub notes: Vec<String>,
}

pub fn audit_tangency(p: SchnakenbergParams) -> Result<TangencyAudit> {
    let model = schnakenberg_model(p)?;
    let closed = tangency(&model, 1.0).ok();
    let bisect = tangency_by_bisection(&model, 1.0).ok();
    let quoted_dv0 = quoted_schnakenberg_dv0(p);
    let quoted_kc0 = quoted_schnakenberg_kc0(p, quoted_dv0);
    let a11 = model.jacobian()[0][0];
    let lmax = if a11 > 0.0 { a11 } else { 1.0 };
    let min_h_quoted = dense_min(
        |l| dispersion_h(&model, 1.0, quoted_dv0, l),
        0.0,
        lmax,
        4000,
    )
    .1;
    let mut notes = Vec::new();
    let hypothesis_holds = model.kinetics_stable();
    if !hypothesis_holds {
        notes.push(format!(
            "Tr(A) = {:.4} >= 0: the steady state is unstable without diffusion, so any pattern is not diffusion-driven",
            model.trace()
        ));
    }
    if let Some((dv0, _)) = closed {
        if (dv0 - quoted_dv0).abs() > 1e-3 * dv0 {
            notes.push(format!(
                "quoted Schnakenberg formula gives Dv0 = {quoted_dv0:.4} but min h = 0 requires Dv0 = {dv0:.4}"
            ));
        }
    }
    Ok(TangencyAudit {
        params: p,
        trace: model.trace(),
        det: model.det(),
        hypothesis_holds,
        published: published_values(p),
        quoted_formula_dv0: quoted_dv0,
        quoted_formula_kc0: quoted_kc0,
        closed_form_dv0: closed.map(|c| c.0),
        closed_form_kc0: closed.map(|c| c.1),
        bisection_dv0: bisect.map(|c| c.0),
        bisection_kc0: bisect.map(|c| c.1),
        min_h_at_quoted_dv0: min_h_quoted,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{BoundaryCondition, ModeIndex};

    fn schnak(a: f64, b: f64) -> KineticModel {
        schnakenberg_model(SchnakenbergParams::new(a, b, 1.0).unwrap()).unwrap()
    }

    fn rect() -> DomainSpec {
        DomainSpec::rectangle(10.0, 5.0, BoundaryCondition::Neumann)
    }

    #[test]
    fn case_b_is_turing_stable() {
        let r = turing_verdict(&schnak(1.0, 0.5), &rect(), 1.0, 1.0, 50).unwrap();
        assert_eq!(r.verdict, Verdict::TuringStable);
        assert!((r.d + 2.5833).abs() < 5e-5);
        assert!((r.l + 0.5816).abs() < 5e-5);
        assert!(r.window.is_none());
    }

    #[test]
    fn case_a_is_kinetics_unstable() {
        let m = schnak(0.1, 0.5);
        assert!((m.trace() - 0.306_666_666_666_666_7).abs() < 1e-12);
        for dv in [0.5, 1.0, 30.0] {
            let r = turing_verdict(&m, &rect(), 1.0, dv, 20).unwrap();
            assert_eq!(r.verdict, Verdict::KineticsUnstable);
        }
    }

    #[test]
    fn acceptance_model_unstable_at_30() {
        let r = turing_verdict(&schnak(0.2, 1.3), &rect(), 1.0, 30.0, 50).unwrap();
        assert_eq!(r.verdict, Verdict::TuringUnstable);
        let hit = r
            .unstable_modes
            .iter()
            .find(|g| g.mode.index == ModeIndex::Rectangle(2, 0))
            .expect("(2,0) grows");
        assert!((hit.beta2 - 0.0630).abs() < 1e-3);
        assert!((r.d - 19.75).abs() < 1e-12);
    }

    #[test]
    fn window_roots() {
        let (lo, hi) = instability_window(&schnak(0.2, 1.3), 1.0, 30.0).unwrap();
        // roots of 30λ² - 19.75λ + 2.25 by the quadratic formula
        let disc = (19.75f64 * 19.75 - 4.0 * 30.0 * 2.25).sqrt();
        assert!((lo - (19.75 - disc) / 60.0).abs() < 1e-12);
        assert!((hi - (19.75 + disc) / 60.0).abs() < 1e-12);
        assert!((lo - 0.146_545).abs() < 1e-6 && (hi - 0.511_788).abs() < 1e-6);
        assert!(instability_window(&schnak(1.0, 0.5), 1.0, 1.0).is_none());
    }

    #[test]
    fn degenerate_window_at_tangency() {
        // D = 2, Du Dv = 4, det = 1/4: L = -1/16 + 4/64 = 0 exactly
        let z = [[[0.0; 2]; 2]; 2];
        let m = crate::kinetics::custom_model(
            [0.0, 0.0],
            [[1.0, 1.5], [-1.5, -2.0]],
            [[[0.0; 2]; 2]; 2],
            [z, z],
            "tangent",
        )
        .unwrap();
        assert_eq!(dispersion_l(&m, 1.0, 4.0), 0.0);
        assert_eq!(instability_window(&m, 1.0, 4.0), Some((0.25, 0.25)));

        let m = schnak(0.2, 1.3);
        let (dv0, _) = tangency(&m, 1.0).unwrap();
        assert!(dispersion_l(&m, 1.0, dv0).abs() < 1e-12);
    }

    #[test]
    fn critical_acceptance_instance() {
        let c = critical_dv(&schnak(0.2, 1.3), &rect(), 1.0).unwrap();
        assert!((c.dv0 - 22.45).abs() < 5e-3);
        assert!((c.kc0 - 0.3166).abs() < 1e-4);
        assert!((c.bracket.0 - 0.0987).abs() < 1e-4);
        assert!((c.bracket.1 - 0.3948).abs() < 1e-4);
        assert!((c.dv_star - 23.48).abs() < 5e-3);
        assert_eq!(c.transition_class, TransitionClass::Double);
        assert_eq!(c.critical_modes.len(), 2);
        let idx: Vec<_> = c.critical_modes.iter().map(|m| m.index).collect();
        assert_eq!(
            idx,
            vec![ModeIndex::Rectangle(0, 1), ModeIndex::Rectangle(2, 0)]
        );
    }

    #[test]
    fn critical_value_brackets_verdict() {
        let m = schnak(0.2, 1.3);
        let c = critical_dv(&m, &rect(), 1.0).unwrap();
        let above = turing_verdict(&m, &rect(), 1.0, c.dv_star * (1.0 + 1e-3), 50).unwrap();
        let below = turing_verdict(&m, &rect(), 1.0, c.dv_star * (1.0 - 1e-3), 50).unwrap();
        assert_eq!(above.verdict, Verdict::TuringUnstable);
        assert_eq!(below.verdict, Verdict::TuringStable);
    }

    #[test]
    fn no_critical_value_without_activator() {
        let err = critical_dv(&schnak(1.0, 0.5), &rect(), 1.0).unwrap_err();
        assert!(matches!(err, Error::NoCriticalValue(_)));
        let err = schnakenberg_critical_d(SchnakenbergParams::new(1.0, 0.5, 1.0).unwrap(), &rect())
            .unwrap_err();
        assert!(matches!(err, Error::NoCriticalValue(_)));
    }

    #[test]
    fn schnakenberg_case_a_rejected() {
        let err = schnakenberg_critical_d(SchnakenbergParams::new(0.1, 0.5, 1.0).unwrap(), &rect())
            .unwrap_err();
        assert!(matches!(err, Error::KineticsUnstable { .. }));
    }

    #[test]
    fn dirichlet_bracket_failure() {
        // tiny Dirichlet box: the first eigenvalue sits far above kc0
        let d = DomainSpec::interval(1.0, BoundaryCondition::Dirichlet);
        let err = critical_dv(&schnak(0.2, 1.3), &d, 1.0).unwrap_err();
        assert!(matches!(err, Error::BracketFailure { .. }));
    }

    #[test]
    fn pes_certificate() {
        let m = schnak(0.2, 1.3);
        let grid: Vec<f64> = (0..400).map(|k| 20.0 * (1.001f64).powi(k)).collect();
        match check_pes(&m, &rect(), 1.0, &grid).unwrap() {
            PesCertificate::Crossing {
                bracket,
                critical_modes,
                second_largest_re_beta,
                ..
            } => {
                assert!(bracket.0 <= 23.48 + 5e-3 && bracket.1 >= 23.48 - 5e-3);
                assert_eq!(critical_modes.len(), 2);
                assert!(second_largest_re_beta < -1e-3);
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = check_pes(&m, &rect(), 1.0, &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::CrossingNotBracketed { .. }));
    }

    #[test]
    fn pes_no_crossing_for_hurwitz_linear() {
        let z = [[[0.0; 2]; 2]; 2];
        let m = crate::kinetics::custom_model(
            [0.0, 0.0],
            [[-1.0, 0.5], [-0.5, -1.0]],
            [[[0.0; 2]; 2]; 2],
            [z, z],
            "hurwitz",
        )
        .unwrap();
        let grid: Vec<f64> = (1..50).map(|k| k as f64).collect();
        assert!(matches!(
            check_pes(&m, &rect(), 1.0, &grid).unwrap(),
            PesCertificate::NoCrossing { .. }
        ));
    }

    #[test]
    fn h_profile_intercept_and_vertex() {
        let m = schnak(0.2, 1.3);
        let prof = h_profile(&m, 1.0, 30.0, 1.0, 10_001).unwrap();
        assert_eq!(prof[0], (0.0, 2.25));
        let min = prof.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let d = dispersion_d(&m, 1.0, 30.0);
        let vertex = m.det() - d * d / (4.0 * 30.0);
        assert!((min - vertex).abs() < 30.0 * 1e-8);
        assert!(h_profile(&m, 1.0, 30.0, 1.0, 1).is_err());
    }

    #[test]
    fn h_profile_touches_zero_at_critical() {
        let m = schnak(0.2, 1.3);
        let c = critical_dv(&m, &rect(), 1.0).unwrap();
        let prof = h_profile(&m, 1.0, c.dv_star, 0.8, 8001).unwrap();
        let lam = c.critical_modes[0].lambda;
        let h_at = dispersion_h(&m, 1.0, c.dv_star, lam);
        assert!(h_at.abs() < 1e-10);
        let near = prof
            .iter()
            .min_by(|a, b| (a.0 - lam).abs().total_cmp(&(b.0 - lam).abs()))
            .unwrap();
        assert!(near.1.abs() < 1e-4);
    }

    #[test]
    fn bisection_agrees_with_closed_form() {
        for (a, b) in [(0.2, 1.3), (0.1, 0.9), (0.05, 2.0)] {
            let m = schnak(a, b);
            let (c0, k0) = tangency(&m, 1.0).unwrap();
            let (c1, k1) = tangency_by_bisection(&m, 1.0).unwrap();
            assert!((c0 - c1).abs() < 1e-8 * c0, "{a} {b}: {c0} vs {c1}");
            assert!((k0 - k1).abs() < 1e-5);
        }
    }

    #[test]
    fn audit_case_a() {
        let a = audit_tangency(SchnakenbergParams::new(0.1, 0.5, 1.0).unwrap()).unwrap();
        assert!(!a.hypothesis_holds);
        assert!((a.quoted_formula_dv0 - 5.1648).abs() < 1e-3);
        assert!((a.closed_form_dv0.unwrap() - 4.2514).abs() < 1e-3);
        assert!((a.closed_form_kc0.unwrap() - 0.2910).abs() < 1e-3);
        assert!(!a.notes.is_empty());
    }
}
