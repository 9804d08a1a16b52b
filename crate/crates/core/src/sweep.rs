//! Parameter sweeps over up to two of `a`, `b`, `r`, `Dv`.
//!
//! Each cell reports the Turing verdict at its `Dv`, the critical `Dv*` and the
//! transition class. Rows come out in row-major cell order (first axis outer)
//! whatever the worker count; a failing cell fills the `error` column and the
//! sweep carries on.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ModelSpec;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, fmt_opt, NONE};
use crate::spectrum::DomainSpec;
use crate::stability::{critical_dv, turing_verdict, TransitionClass, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    A,
    B,
    R,
    Dv,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::A => "a",
            SweepParam::B => "b",
            SweepParam::R => "r",
            SweepParam::Dv => "dv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..self.steps)
            .map(|k| {
                if k == n {
                    self.max
                } else {
                    self.min + (self.max - self.min) * k as f64 / n as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Base model; swept `a`, `b`, `r` need a Schnakenberg model.
    pub model: ModelSpec,
    pub domain: DomainSpec,
    pub du: f64,
    /// `Dv` used for the verdict when `Dv` is not an axis.
    pub dv: f64,
    pub axes: Vec<Axis>,
    #[serde(default = "default_mode_count")]
    pub mode_count: usize,
}

fn default_mode_count() -> usize {
    200
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.axes.is_empty() || self.axes.len() > 2 {
            return bad(format!(
                "a sweep needs one or two axes (got {})",
                self.axes.len()
            ));
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return bad(format!("axis '{}' listed twice", self.axes[0].param.name()));
        }
        for ax in &self.axes {
            if ax.steps < 2 {
                return bad(format!("axis '{}' needs at least 2 steps", ax.param.name()));
            }
            if !(ax.min < ax.max) || !ax.min.is_finite() || !ax.max.is_finite() {
                return bad(format!("axis '{}' needs min < max", ax.param.name()));
            }
            if ax.param != SweepParam::Dv && self.model.schnakenberg_params().is_none() {
                return bad(format!(
                    "axis '{}' needs a schnakenberg model",
                    ax.param.name()
                ));
            }
        }
        if !(self.du > 0.0 && self.dv > 0.0) {
            return bad("du and dv must be positive".into());
        }
        if self.mode_count == 0 {
            return bad("mode_count must be positive".into());
        }
        self.domain
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Axis values of every cell in row-major order.
    pub fn cells(&self) -> Vec<Vec<f64>> {
        let first = self.axes[0].values();
        match self.axes.get(1) {
            None => first.into_iter().map(|x| vec![x]).collect(),
            Some(second) => {
                let second = second.values();
                first
                    .iter()
                    .flat_map(|&x| second.iter().map(move |&y| vec![x, y]))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub values: Vec<f64>,
    pub verdict: Option<Verdict>,
    pub dv_star: Option<f64>,
    pub transition_class: Option<TransitionClass>,
    pub error: Option<String>,
}

fn evaluate_cell(spec: &SweepSpec, values: &[f64]) -> SweepCell {
    let mut model = spec.model.clone();
    let mut dv = spec.dv;
    for (ax, &x) in spec.axes.iter().zip(values) {
        match (&mut model, ax.param) {
            (_, SweepParam::Dv) => dv = x,
            (ModelSpec::Schnakenberg { a, .. }, SweepParam::A) => *a = x,
            (ModelSpec::Schnakenberg { b, .. }, SweepParam::B) => *b = x,
            (ModelSpec::Schnakenberg { r, .. }, SweepParam::R) => *r = x,
            _ => unreachable!("validated"),
        }
    }
    let mut cell = SweepCell {
        values: values.to_vec(),
        verdict: None,
        dv_star: None,
        transition_class: None,
        error: None,
    };
    let model = match model.build() {
        Ok(m) => m,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    match turing_verdict(&model, &spec.domain, spec.du, dv, spec.mode_count) {
        Ok(r) => cell.verdict = Some(r.verdict),
        Err(e) => cell.error = Some(e.to_string()),
    }
    match critical_dv(&model, &spec.domain, spec.du) {
        Ok(c) => {
            cell.dv_star = Some(c.dv_star);
            cell.transition_class = Some(c.transition_class);
        }
        Err(e) => {
            cell.error.get_or_insert_with(|| e.to_string());
        }
    }
    cell
}

/// Evaluate every cell on a pool of `threads` workers.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<Vec<SweepCell>> {
    spec.validate()?;
    let cells = spec.cells();
    if threads <= 1 {
        return Ok(cells.iter().map(|v| evaluate_cell(spec, v)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(pool.install(|| cells.par_iter().map(|v| evaluate_cell(spec, v)).collect()))
}

fn label<T: Serialize>(x: &Option<T>) -> String {
    match x {
        Some(v) => serde_json::to_value(v)
            .ok()
            .and_then(|j| j.as_str().map(str::to_string))
            .unwrap_or_default(),
        None => NONE.to_string(),
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// CSV with axis columns, `verdict`, `dv_star`, `transition_class`, `error`.
pub fn sweep_csv(spec: &SweepSpec, cells: &[SweepCell]) -> String {
    let mut out = String::new();
    for ax in &spec.axes {
        out.push_str(ax.param.name());
        out.push(',');
    }
    out.push_str("verdict,dv_star,transition_class,error\n");
    for c in cells {
        for v in &c.values {
            out.push_str(&fmt_f64(*v));
            out.push(',');
        }
        let _ = writeln!(
            out,
            "{},{},{},{}",
            label(&c.verdict),
            fmt_opt(c.dv_star),
            label(&c.transition_class),
            c.error.as_deref().map_or_else(String::new, quote)
        );
    }
    out
}
