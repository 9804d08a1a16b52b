//! Method-of-lines integrator for `w_t = D Δw + F(w)` in deviation form.
//!
//! Nodes sit on a vertex-centred grid `x_i = i hx`, `hx = Lx / (nx - 1)`,
//! including both boundaries. `Δ` is the 3-point (interval) or 5-point
//! (rectangle) central difference; Neumann boundaries use mirrored ghost nodes
//! and Dirichlet boundaries hold the steady state. Time stepping is classical
//! RK4. Fields are stored row-major with `x` fastest: node `(i, j)` lives at
//! `j * nx + i`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ModelSpec;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_json};
use crate::kinetics::{KineticModel, Vec2};
use crate::reduction::{reduce_at_critical, ReducedKind};
use crate::spectrum::{mode_matrix, BoundaryCondition, DomainSpec, Geometry, ModeIndex};

/// Any field value above this aborts the run.
pub const BLOW_UP: f64 = 1e6;
/// Default safety factor on the diffusive step bound.
pub const DT_SAFETY: f64 = 0.2;
/// Real-axis extent of the RK4 stability region.
const RK4_REAL_LIMIT: f64 = 2.785;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialCondition {
    SteadyState,
    /// i.i.d. uniform noise in `[-epsilon, epsilon]` on both fields.
    Noise {
        epsilon: f64,
    },
    /// `(u, v) += amplitude * e_index`.
    Mode {
        index: ModeIndex,
        amplitude: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub model: ModelSpec,
    pub domain: DomainSpec,
    pub du: f64,
    pub dv: f64,
    pub nx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    /// Fixed step; default `DT_SAFETY h² / (2 dim max(Du, Dv))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    pub initial: InitialCondition,
    #[serde(default)]
    pub seed: u64,
    /// Time between snapshots; default: initial and final state only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    /// Number of diagnostic records over the run.
    #[serde(default = "default_diagnostics")]
    pub diagnostics: usize,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

fn default_diagnostics() -> usize {
    1000
}

fn default_threads() -> usize {
    1
}

impl SimulationConfig {
    pub fn new(
        model: ModelSpec,
        domain: DomainSpec,
        du: f64,
        dv: f64,
        nx: usize,
        t_end: f64,
    ) -> Self {
        let ny = (domain.dim() == 2).then_some(nx);
        SimulationConfig {
            model,
            domain,
            du,
            dv,
            nx,
            ny,
            dt: None,
            t_end,
            initial: InitialCondition::SteadyState,
            seed: 0,
            snapshot_every: None,
            diagnostics: default_diagnostics(),
            threads: default_threads(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.domain
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if !(self.du > 0.0 && self.dv > 0.0 && self.du.is_finite() && self.dv.is_finite()) {
            return bad(format!(
                "diffusivities must be positive (Du={}, Dv={})",
                self.du, self.dv
            ));
        }
        if self.nx < 8 {
            return bad(format!("nx must be at least 8 (got {})", self.nx));
        }
        match (self.domain.dim(), self.ny) {
            (1, Some(_)) => return bad("ny given for an interval".into()),
            (2, None) => return bad("ny required for a rectangle".into()),
            (2, Some(ny)) if ny < 8 => return bad(format!("ny must be at least 8 (got {ny})")),
            _ => {}
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive (got {})", self.t_end));
        }
        if let Some(dt) = self.dt {
            let limit = self.stability_limit();
            if !(dt > 0.0) || dt > limit {
                return bad(format!(
                    "dt = {dt} outside (0, {limit}] (RK4 diffusive bound)"
                ));
            }
        }
        if let InitialCondition::Noise { epsilon } = self.initial {
            if !(epsilon >= 0.0 && epsilon.is_finite()) {
                return bad(format!("noise amplitude must be >= 0 (got {epsilon})"));
            }
        }
        if let InitialCondition::Mode { index, amplitude } = self.initial {
            if !self.domain.contains(index) || !amplitude.iter().all(|a| a.is_finite()) {
                return bad(format!("invalid initial mode {index}"));
            }
        }
        if let Some(s) = self.snapshot_every {
            if !(s > 0.0) {
                return bad(format!("snapshot_every must be positive (got {s})"));
            }
        }
        if self.diagnostics == 0 || self.threads == 0 {
            return bad("diagnostics and threads must be at least 1".into());
        }
        self.model
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    fn spacings(&self) -> (f64, Option<f64>) {
        let ext = self.domain.extents();
        let hx = ext[0] / (self.nx - 1) as f64;
        let hy = self.ny.map(|ny| ext[1] / (ny - 1) as f64);
        (hx, hy)
    }

    /// Largest stable RK4 step for the diffusion operator.
    pub fn stability_limit(&self) -> f64 {
        let (hx, hy) = self.spacings();
        let spec = 4.0 / (hx * hx) + hy.map_or(0.0, |h| 4.0 / (h * h));
        RK4_REAL_LIMIT / (self.du.max(self.dv) * spec)
    }

    pub fn default_dt(&self) -> f64 {
        let (hx, hy) = self.spacings();
        let h = hy.map_or(hx, |hy| hx.min(hy));
        DT_SAFETY * h * h / (2.0 * self.domain.dim() as f64 * self.du.max(self.dv))
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Eigenvalue of the discrete `-Δ` on an `nx` (× `ny`) vertex grid for the
/// mode `index`; converges to the continuum eigenvalue as `O(h²)`.
pub fn discrete_eigenvalue(
    domain: &DomainSpec,
    nx: usize,
    ny: Option<usize>,
    index: ModeIndex,
) -> f64 {
    let ext = domain.extents();
    let one = |m: u32, len: f64, n: usize| {
        let h = len / (n - 1) as f64;
        let s = (m as f64 * std::f64::consts::PI * h / (2.0 * len)).sin();
        4.0 * s * s / (h * h)
    };
    match index {
        ModeIndex::Interval(m) => one(m, ext[0], nx),
        ModeIndex::Rectangle(m, n) => one(m, ext[0], nx) + one(n, ext[1], ny.unwrap_or(nx)),
    }
}

/// Finite-difference grid with trapezoid quadrature weights.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub bc: BoundaryCondition,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(domain: &DomainSpec, nx: usize, ny: Option<usize>) -> Self {
        let ext = domain.extents();
        let hx = ext[0] / (nx - 1) as f64;
        let (ny, hy) = match (domain.geometry, ny) {
            (Geometry::Rectangle { ly, .. }, Some(ny)) => (ny, ly / (ny - 1) as f64),
            _ => (1, 1.0),
        };
        let trap = |k: usize, n: usize, h: f64| {
            if n == 1 {
                1.0
            } else if k == 0 || k == n - 1 {
                0.5 * h
            } else {
                h
            }
        };
        let mut weights = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                weights.push(trap(i, nx, hx) * trap(j, ny, hy));
            }
        }
        Grid {
            nx,
            ny,
            hx,
            hy,
            bc: domain.bc,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn position(&self, k: usize) -> (f64, f64) {
        let (i, j) = (k % self.nx, k / self.nx);
        (
            i as f64 * self.hx,
            if self.ny == 1 {
                0.0
            } else {
                j as f64 * self.hy
            },
        )
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (x, y) = self.position(k);
                f(x, y)
            })
            .collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Trapezoid-rule `∫ a b`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a)
            .zip(b)
            .map(|((w, x), y)| w * x * y)
            .sum()
    }

    pub fn integral(&self, a: &[f64]) -> f64 {
        self.weights.iter().zip(a).map(|(w, x)| w * x).sum()
    }

    fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || i == self.nx - 1 || (self.ny > 1 && (j == 0 || j == self.ny - 1))
    }

    /// Discrete Laplacian of `w` at node `(i, j)`.
    #[inline]
    fn lap_at(&self, w: &[f64], i: usize, j: usize) -> f64 {
        let nx = self.nx;
        let k = j * nx + i;
        let c = w[k];
        let (l, r) = match (i, i + 1 == nx) {
            (0, _) => (w[k + 1], w[k + 1]),
            (_, true) => (w[k - 1], w[k - 1]),
            _ => (w[k - 1], w[k + 1]),
        };
        let mut s = (l - 2.0 * c + r) / (self.hx * self.hx);
        if self.ny > 1 {
            let ny = self.ny;
            let (d, u) = match (j, j + 1 == ny) {
                (0, _) => (w[k + nx], w[k + nx]),
                (_, true) => (w[k - nx], w[k - nx]),
                _ => (w[k - nx], w[k + nx]),
            };
            s += (d - 2.0 * c + u) / (self.hy * self.hy);
        }
        s
    }

    /// Discrete Laplacian of a whole field (boundary rows zero under Dirichlet).
    pub fn laplacian(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.bc == BoundaryCondition::Dirichlet && self.is_boundary(i, j) {
                    continue;
                }
                out[j * self.nx + i] = self.lap_at(w, i, j);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub l2dev: f64,
    pub mass_u: f64,
    pub mass_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub t: f64,
    pub l2dev: f64,
    pub mass_u: f64,
    pub mass_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    BlowUp { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub config: SimulationConfig,
    pub dt: f64,
    pub steps: u64,
    pub termination: Termination,
    pub snapshots: Vec<FieldSnapshot>,
    pub diagnostics: Vec<Diagnostic>,
    /// `(max - min) / max` of the L² deviation over the last 10% of the run.
    pub trailing_rel_change: f64,
    pub saturated: bool,
}

impl SimulationResult {
    pub fn final_state(&self) -> &FieldSnapshot {
        self.snapshots.last().expect("at least one snapshot")
    }
}

/// Integrator state for one run.
pub struct Simulation {
    config: SimulationConfig,
    model: KineticModel,
    grid: Grid,
    ss: Vec2,
    dt: f64,
    wu: Vec<f64>,
    wv: Vec<f64>,
    pool: Option<rayon::ThreadPool>,
}

impl Simulation {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let model = config.model.build()?;
        let grid = Grid::new(&config.domain, config.nx, config.ny);
        let ss = model.steady_state();
        let dt_req = config.dt.unwrap_or_else(|| config.default_dt());
        let steps = (config.t_end / dt_req).ceil().max(1.0);
        let dt = config.t_end / steps;
        let n = grid.len();
        let pool = if config.threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.threads)
                    .build()
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?,
            )
        } else {
            None
        };
        let mut sim = Simulation {
            config,
            model,
            grid,
            ss,
            dt,
            wu: vec![0.0; n],
            wv: vec![0.0; n],
            pool,
        };
        sim.initialize();
        Ok(sim)
    }

    fn initialize(&mut self) {
        let n = self.grid.len();
        match self.config.initial.clone() {
            InitialCondition::SteadyState => {}
            InitialCondition::Noise { epsilon } => {
                let mut rng = ChaCha20Rng::seed_from_u64(self.config.seed);
                for field in [&mut self.wu, &mut self.wv] {
                    for (k, w) in field.iter_mut().enumerate().take(n) {
                        let r: f64 = rng.gen_range(-1.0..=1.0);
                        let (i, j) = (k % self.grid.nx, k / self.grid.nx);
                        if !(self.grid.bc == BoundaryCondition::Dirichlet
                            && self.grid.is_boundary(i, j))
                        {
                            *w = epsilon * r;
                        }
                    }
                }
            }
            InitialCondition::Mode { index, amplitude } => {
                let e = self
                    .grid
                    .sample(|x, y| self.config.domain.eigenfunction(index, x, y));
                for k in 0..n {
                    self.wu[k] = amplitude[0] * e[k];
                    self.wv[k] = amplitude[1] * e[k];
                }
            }
        }
        self.pin_boundary();
    }

    fn pin_boundary(&mut self) {
        if self.grid.bc == BoundaryCondition::Dirichlet {
            for k in 0..self.grid.len() {
                let (i, j) = (k % self.grid.nx, k / self.grid.nx);
                if self.grid.is_boundary(i, j) {
                    self.wu[k] = 0.0;
                    self.wv[k] = 0.0;
                }
            }
        }
    }

    /// Replace the deviation fields.
    pub fn set_deviation(&mut self, wu: Vec<f64>, wv: Vec<f64>) -> Result<()> {
        if wu.len() != self.grid.len() || wv.len() != self.grid.len() {
            return Err(Error::InvalidConfig(
                "field length does not match the grid".into(),
            ));
        }
        self.wu = wu;
        self.wv = wv;
        self.pin_boundary();
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn deviation(&self) -> (&[f64], &[f64]) {
        (&self.wu, &self.wv)
    }

    fn rhs(&self, wu: &[f64], wv: &[f64], ku: &mut [f64], kv: &mut [f64]) {
        let nx = self.grid.nx;
        let row = |j: usize, ru: &mut [f64], rv: &mut [f64]| {
            for i in 0..nx {
                if self.grid.bc == BoundaryCondition::Dirichlet && self.grid.is_boundary(i, j) {
                    ru[i] = 0.0;
                    rv[i] = 0.0;
                    continue;
                }
                let k = j * nx + i;
                let f = self.model.evaluate([wu[k], wv[k]]);
                ru[i] = self.config.du * self.grid.lap_at(wu, i, j) + f[0];
                rv[i] = self.config.dv * self.grid.lap_at(wv, i, j) + f[1];
            }
        };
        match &self.pool {
            Some(pool) => pool.install(|| {
                ku.par_chunks_mut(nx)
                    .zip(kv.par_chunks_mut(nx))
                    .enumerate()
                    .for_each(|(j, (ru, rv))| row(j, ru, rv));
            }),
            None => {
                for (j, (ru, rv)) in ku.chunks_mut(nx).zip(kv.chunks_mut(nx)).enumerate() {
                    row(j, ru, rv);
                }
            }
        }
    }

    /// One RK4 step; returns false (state unchanged) if the result blows up.
    pub fn step(&mut self, scratch: &mut Scratch) -> bool {
        let dt = self.dt;
        let n = self.grid.len();
        let Scratch {
            ku,
            kv,
            su,
            sv,
            au,
            av,
        } = scratch;
        self.rhs(&self.wu, &self.wv, ku, kv);
        for k in 0..n {
            au[k] = ku[k];
            av[k] = kv[k];
            su[k] = self.wu[k] + 0.5 * dt * ku[k];
            sv[k] = self.wv[k] + 0.5 * dt * kv[k];
        }
        self.rhs(su, sv, ku, kv);
        for k in 0..n {
            au[k] += 2.0 * ku[k];
            av[k] += 2.0 * kv[k];
            su[k] = self.wu[k] + 0.5 * dt * ku[k];
            sv[k] = self.wv[k] + 0.5 * dt * kv[k];
        }
        self.rhs(su, sv, ku, kv);
        for k in 0..n {
            au[k] += 2.0 * ku[k];
            av[k] += 2.0 * kv[k];
            su[k] = self.wu[k] + dt * ku[k];
            sv[k] = self.wv[k] + dt * kv[k];
        }
        self.rhs(su, sv, ku, kv);
        let (u0, v0) = (self.ss[0], self.ss[1]);
        let mut ok = true;
        for k in 0..n {
            su[k] = self.wu[k] + dt / 6.0 * (au[k] + ku[k]);
            sv[k] = self.wv[k] + dt / 6.0 * (av[k] + kv[k]);
            let (u, v) = (u0 + su[k], v0 + sv[k]);
            if !(u.abs() <= BLOW_UP && v.abs() <= BLOW_UP) {
                ok = false;
            }
        }
        if ok {
            std::mem::swap(&mut self.wu, su);
            std::mem::swap(&mut self.wv, sv);
        }
        ok
    }

    pub fn scratch(&self) -> Scratch {
        let n = self.grid.len();
        Scratch {
            ku: vec![0.0; n],
            kv: vec![0.0; n],
            su: vec![0.0; n],
            sv: vec![0.0; n],
            au: vec![0.0; n],
            av: vec![0.0; n],
        }
    }

    pub fn diagnostic(&self, t: f64) -> Diagnostic {
        let g = &self.grid;
        let l2 = (g.inner(&self.wu, &self.wu) + g.inner(&self.wv, &self.wv)).sqrt();
        let area: f64 = g.weights().iter().sum();
        Diagnostic {
            t,
            l2dev: l2,
            mass_u: g.integral(&self.wu) + self.ss[0] * area,
            mass_v: g.integral(&self.wv) + self.ss[1] * area,
        }
    }

    pub fn snapshot(&self, t: f64) -> FieldSnapshot {
        let d = self.diagnostic(t);
        FieldSnapshot {
            t,
            u: self.wu.iter().map(|w| self.ss[0] + w).collect(),
            v: self.wv.iter().map(|w| self.ss[1] + w).collect(),
            l2dev: d.l2dev,
            mass_u: d.mass_u,
            mass_v: d.mass_v,
        }
    }

    /// Integrate to `t_end`, calling `observe(step, t, self)` after every step.
    pub fn run_with(mut self, mut observe: impl FnMut(u64, f64, &Simulation)) -> SimulationResult {
        let steps = (self.config.t_end / self.dt).round() as u64;
        let snap_every = self
            .config
            .snapshot_every
            .map(|s| ((s / self.dt).round() as u64).max(1));
        let diag_every = (steps / self.config.diagnostics as u64).max(1);
        let mut scratch = self.scratch();
        let mut snapshots = vec![self.snapshot(0.0)];
        let mut diagnostics = vec![self.diagnostic(0.0)];
        let mut termination = Termination::Completed;
        let mut done = 0;
        for n in 1..=steps {
            if !self.step(&mut scratch) {
                termination = Termination::BlowUp {
                    t: n as f64 * self.dt,
                };
                break;
            }
            done = n;
            let t = n as f64 * self.dt;
            observe(n, t, &self);
            if n % diag_every == 0 || n == steps {
                diagnostics.push(self.diagnostic(t));
            }
            if snap_every.map_or(false, |s| n % s == 0) && n != steps {
                snapshots.push(self.snapshot(t));
            }
        }
        let t_final = done as f64 * self.dt;
        if snapshots.last().map_or(true, |s| s.t != t_final) {
            snapshots.push(self.snapshot(t_final));
        }
        let t_window = 0.9 * self.config.t_end;
        let tail: Vec<f64> = diagnostics
            .iter()
            .filter(|d| d.t >= t_window)
            .map(|d| d.l2dev)
            .collect();
        let (lo, hi) = tail.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
        let trailing_rel_change = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
        let ss_scale = (self.ss[0].hypot(self.ss[1])).max(1.0)
            * self.grid.weights().iter().sum::<f64>().sqrt();
        let saturated = termination == Termination::Completed
            && (trailing_rel_change < 1e-4 || tail.last().map_or(false, |&l| l <= 1e-8 * ss_scale));
        let mut config = self.config.clone();
        config.dt = Some(self.dt);
        SimulationResult {
            config,
            dt: self.dt,
            steps: done,
            termination,
            snapshots,
            diagnostics,
            trailing_rel_change,
            saturated,
        }
    }

    pub fn run(self) -> SimulationResult {
        self.run_with(|_, _, _| {})
    }
}

/// Reusable RK4 stage buffers.
pub struct Scratch {
    ku: Vec<f64>,
    kv: Vec<f64>,
    su: Vec<f64>,
    sv: Vec<f64>,
    au: Vec<f64>,
    av: Vec<f64>,
}

/// Run a configured simulation to completion.
pub fn run(config: SimulationConfig) -> Result<SimulationResult> {
    Ok(Simulation::new(config)?.run())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub library_version: String,
    pub config_hash: String,
    pub config: SimulationConfig,
    pub seed: u64,
    pub dt: f64,
    pub steps: u64,
    pub termination: Termination,
    /// True when the run stopped early; snapshots stop at the last good state.
    pub partial: bool,
    pub saturated: bool,
    pub trailing_rel_change: f64,
    pub snapshots: Vec<String>,
    pub diagnostics: String,
}

/// Write `snap_<k>.csv`, `diagnostics.csv` and `run.json` into `dir`.
pub fn write_outputs(result: &SimulationResult, dir: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    let nx = result.config.nx;
    let ny = result.config.ny.unwrap_or(1);
    let mut names = Vec::new();
    for (k, s) in result.snapshots.iter().enumerate() {
        let name = format!("snap_{k}.csv");
        std::fs::write(dir.join(&name), snapshot_csv(s, nx, ny))?;
        names.push(name);
    }
    let mut diag = String::from("t,l2dev,mass_u,mass_v\n");
    for d in &result.diagnostics {
        let _ = writeln!(
            diag,
            "{},{},{},{}",
            fmt_f64(d.t),
            fmt_f64(d.l2dev),
            fmt_f64(d.mass_u),
            fmt_f64(d.mass_v)
        );
    }
    std::fs::write(dir.join("diagnostics.csv"), diag)?;
    let manifest = RunManifest {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: result.config.hash(),
        config: result.config.clone(),
        seed: result.config.seed,
        dt: result.dt,
        steps: result.steps,
        termination: result.termination,
        partial: result.termination != Termination::Completed,
        saturated: result.saturated,
        trailing_rel_change: result.trailing_rel_change,
        snapshots: names,
        diagnostics: "diagnostics.csv".into(),
    };
    write_json(&dir.join("run.json"), &manifest)?;
    Ok(manifest)
}

pub fn snapshot_csv(s: &FieldSnapshot, nx: usize, ny: usize) -> String {
    let mut out = format!("# t={} nx={nx} ny={ny}\n", fmt_f64(s.t));
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let _ = writeln!(out, "{i},{j},{},{}", fmt_f64(s.u[k]), fmt_f64(s.v[k]));
        }
    }
    out
}

/// Parse a snapshot file back into `(t, nx, ny, u, v)`.
pub fn read_snapshot(path: &Path) -> Result<(f64, usize, usize, Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty snapshot".into()))?;
    let field = |key: &str| -> Result<&str> {
        header
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix(key))
            .ok_or_else(|| Error::Parse(format!("snapshot header lacks {key}")))
    };
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Parse(format!("{s}: {e}")))
    };
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::Parse(format!("{s}: {e}")))
    };
    let t = num(field("t=")?)?;
    let nx = int(field("nx=")?)?;
    let ny = int(field("ny=")?)?;
    let (mut u, mut v) = (Vec::with_capacity(nx * ny), Vec::with_capacity(nx * ny));
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Parse(format!("bad snapshot row '{line}'")));
        }
        u.push(num(cols[2])?);
        v.push(num(cols[3])?);
    }
    if u.len() != nx * ny {
        return Err(Error::Parse(format!(
            "expected {} rows, found {}",
            nx * ny,
            u.len()
        )));
    }
    Ok((t, nx, ny, u, v))
}

/// Discrete spectral coefficient `⟨w, e⟩_h / ⟨e, e⟩_h` on the grid.
pub fn mode_coefficient(grid: &Grid, domain: &DomainSpec, index: ModeIndex, w: &[f64]) -> f64 {
    let e = grid.sample(|x, y| domain.eigenfunction(index, x, y));
    grid.inner(w, &e) / grid.inner(&e, &e)
}

/// Grid and step settings shared by the probes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    pub nx: usize,
    pub ny: Option<usize>,
    /// Fixed step; default is the configured default step.
    pub dt: Option<f64>,
    pub threads: usize,
}

impl ProbeOptions {
    pub fn for_domain(domain: &DomainSpec, nx: usize) -> Self {
        ProbeOptions {
            nx,
            ny: (domain.dim() == 2).then(|| ((nx - 1) / 2 + 1).max(8)),
            dt: None,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub rate: f64,
    /// `Re beta2` of the probed mode from the mode matrix.
    pub beta2: f64,
    /// Largest deviation of `log|a(t)|` from the fitted line.
    pub residual: f64,
    /// Spread of `log|a(t)|` over the window.
    pub range: f64,
}

/// Exponential rate of mode `index` seeded along its `beta2` eigenvector, fitted
/// by least squares to `log|a(t)|` over `t_window`, where `a` is the coefficient
/// along the adjoint eigenvector.
#[allow(clippy::too_many_arguments)]
pub fn growth_rate_probe(
    model_spec: &ModelSpec,
    domain: &DomainSpec,
    du: f64,
    dv: f64,
    index: ModeIndex,
    amplitude: f64,
    t_window: (f64, f64),
    opts: ProbeOptions,
) -> Result<GrowthFit> {
    let model = model_spec.build()?;
    let (t0, t1) = t_window;
    if !(0.0 <= t0 && t0 < t1) {
        return Err(Error::InvalidParameter(format!(
            "bad time window ({t0}, {t1})"
        )));
    }
    let ss = model.steady_state();
    let scale = ss[0].abs().max(ss[1].abs()).max(1.0);
    if !(amplitude > 0.0 && amplitude <= 1e-3 * scale) {
        return Err(Error::InvalidParameter(format!(
            "probe amplitude {amplitude} not small"
        )));
    }
    let mm = mode_matrix(&model, du, dv, domain.eigenvalue(index));
    if !mm.is_real_pair() {
        return Err(Error::InvalidParameter(format!(
            "mode {index} has a complex eigenvalue pair"
        )));
    }
    let xi = unit(mm.right_eigenvector());
    let xs = mm.left_eigenvector();
    let mut config = SimulationConfig::new(model_spec.clone(), *domain, du, dv, opts.nx, t1);
    config.ny = opts.ny;
    config.dt = opts.dt;
    config.threads = opts.threads;
    config.diagnostics = 1;
    config.initial = InitialCondition::Mode {
        index,
        amplitude: [amplitude * xi[0], amplitude * xi[1]],
    };
    let sim = Simulation::new(config)?;
    let e = sim.grid().sample(|x, y| domain.eigenfunction(index, x, y));
    let ee = sim.grid().inner(&e, &e);
    let pair = xs[0] * xi[0] + xs[1] * xi[1];
    let steps = (t1 / sim.dt()).round() as u64;
    let first = (t0 / sim.dt()).round() as u64;
    let every = ((steps - first) / 200).max(1);
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let grid = sim.grid().clone();
    let coef = |s: &Simulation| {
        let (wu, wv) = s.deviation();
        (xs[0] * grid.inner(wu, &e) + xs[1] * grid.inner(wv, &e)) / (ee * pair)
    };
    if first == 0 {
        samples.push((0.0, coef(&sim).abs().ln()));
    }
    let result = sim.run_with(|n, t, s| {
        if n >= first && (n - first) % every == 0 {
            samples.push((t, coef(s).abs().ln()));
        }
    });
    if let Termination::BlowUp { t } = result.termination {
        return Err(Error::BlowUp { t });
    }
    let (rate, intercept) = linear_fit(&samples);
    let residual = samples
        .iter()
        .map(|(t, y)| (y - (intercept + rate * t)).abs())
        .fold(0.0, f64::max);
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    let range = hi - lo;
    if residual > 0.05 * range {
        return Err(Error::NonlinearContamination { residual, range });
    }
    Ok(GrowthFit {
        rate,
        beta2: mm.beta2.re,
        residual,
        range,
    })
}

fn unit(v: Vec2) -> Vec2 {
    let n = v[0].hypot(v[1]);
    let s = if v[0] + v[1] < 0.0 { -1.0 } else { 1.0 };
    [s * v[0] / n, s * v[1] / n]
}

/// Least-squares `(slope, intercept)`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudePoint {
    pub dv: f64,
    pub beta: f64,
    /// Saturated amplitude along `ξ e` measured by the adjoint projection.
    pub amplitude: f64,
    #[serde(with = "crate::io::opt_f64")]
    pub predicted: Option<f64>,
    pub trailing_rel_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeFit {
    pub dv_star: f64,
    pub q: f64,
    pub points: Vec<AmplitudePoint>,
    /// Slope of `log amplitude` against `log(Dv - Dv*)` over supercritical points.
    #[serde(with = "crate::io::opt_f64")]
    pub exponent: Option<f64>,
}

/// Saturated critical-mode amplitudes for each `Dv`, with the pitchfork
/// scaling exponent. Each run starts from `seed_amplitude * ξ e` and lasts
/// `horizon / |beta(Dv)|`.
pub fn amplitude_fit(
    model_spec: &ModelSpec,
    domain: &DomainSpec,
    du: f64,
    dvs: &[f64],
    seed_amplitude: f64,
    horizon: f64,
    opts: ProbeOptions,
) -> Result<AmplitudeFit> {
    let model = model_spec.build()?;
    let reduced = reduce_at_critical(&model, domain, du, None, 32)?;
    if reduced.kind != ReducedKind::ScalarCubic {
        return Err(Error::InvalidParameter(format!(
            "amplitude fit needs a scalar-cubic reduction, got {:?}",
            reduced.kind
        )));
    }
    let q = reduced.q.unwrap();
    let dv_star = reduced.dv_star.unwrap();
    let data = reduced.modes[0];
    let (xi, xs) = (data.xi, data.xi_star);
    let index = data.mode.index;
    let mut points = Vec::new();
    for &dv in dvs {
        let beta = data.beta_at(&model, dv);
        let mut config = SimulationConfig::new(
            model_spec.clone(),
            *domain,
            du,
            dv,
            opts.nx,
            horizon / beta.abs(),
        );
        config.ny = opts.ny;
        config.dt = opts.dt;
        config.threads = opts.threads;
        config.initial = InitialCondition::Mode {
            index,
            amplitude: [seed_amplitude * xi[0], seed_amplitude * xi[1]],
        };
        let result = run(config)?;
        if let Termination::BlowUp { t } = result.termination {
            return Err(Error::BlowUp { t });
        }
        if !result.saturated {
            return Err(Error::NotSaturated {
                rel_change: result.trailing_rel_change,
            });
        }
        let grid = Grid::new(domain, opts.nx, opts.ny);
        let last = result.final_state();
        let ss = model.steady_state();
        let wu: Vec<f64> = last.u.iter().map(|u| u - ss[0]).collect();
        let wv: Vec<f64> = last.v.iter().map(|v| v - ss[1]).collect();
        let cu = mode_coefficient(&grid, domain, index, &wu);
        let cv = mode_coefficient(&grid, domain, index, &wv);
        let amplitude = ((xs[0] * cu + xs[1] * cv) / (xs[0] * xi[0] + xs[1] * xi[1])).abs();
        let predicted = (beta * q < 0.0).then(|| (-beta / q).sqrt());
        points.push(AmplitudePoint {
            dv,
            beta,
            amplitude,
            predicted,
            trailing_rel_change: result.trailing_rel_change,
        });
    }
    let sup: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.dv > dv_star && p.amplitude > 0.0)
        .map(|p| ((p.dv - dv_star).ln(), p.amplitude.ln()))
        .collect();
    let exponent = (sup.len() >= 2).then(|| linear_fit(&sup).0);
    Ok(AmplitudeFit {
        dv_star,
        q,
        points,
        exponent,
    })
}

/// Default output directory: `$TURINGLAB_OUT` or the current directory.
pub fn default_output_dir() -> PathBuf {
    std::env::var_os("TURINGLAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}
