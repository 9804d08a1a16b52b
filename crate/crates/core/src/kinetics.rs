//! Two-component reaction kinetics in deviation form.
//!
//! A [`KineticModel`] stores the Taylor expansion of the kinetics `(f, g)`
//! at a homogeneous steady state `(u0, v0)`:
//!
//! ```text
//! F(w) = A w + Q(w, w) + C(w, w, w),   w = (u - u0, v - v0)
//! ```
//!
//! The quadratic and cubic parts are stored as symmetric tensors with the
//! Taylor factorials already absorbed, so `Q^(c)_ij w_i w_j` is the complete
//! quadratic part of component `c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];
pub type Tensor3 = [[[f64; 2]; 2]; 2];

const SYMMETRY_TOL: f64 = 1e-12;

/// Taylor data of two-component kinetics at a steady state. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticModel {
    label: String,
    steady_state: Vec2,
    jacobian: Mat2,
    quad: [Mat2; 2],
    cubic: [Tensor3; 2],
    // monomial coefficients, used by the hot evaluation path
    quad_mono: [[f64; 3]; 2],
    cubic_mono: [[f64; 4]; 2],
}

/// Schnakenberg parameters for `u_t = Δu + r(a - u + u²v)`, `v_t = dΔv + r(b - u²v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchnakenbergParams {
    pub a: f64,
    pub b: f64,
    pub r: f64,
}

impl SchnakenbergParams {
    pub fn new(a: f64, b: f64, r: f64) -> Result<Self> {
        let p = Self { a, b, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { a, b, r } = *self;
        if !(a.is_finite() && b.is_finite() && r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite Schnakenberg parameters a={a}, b={b}, r={r}"
            )));
        }
        if a < 0.0 || b <= 0.0 || r <= 0.0 || a + b <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Schnakenberg parameters need a >= 0, b > 0, r > 0 (got a={a}, b={b}, r={r})"
            )));
        }
        Ok(())
    }

    /// `(a + b, b / (a + b)^2)`
    pub fn steady_state(&self) -> Vec2 {
        let s = self.a + self.b;
        [s, self.b / (s * s)]
    }

    /// Raw (un-shifted) kinetics at absolute concentrations `(u, v)`.
    pub fn raw_kinetics(&self, u: f64, v: f64) -> Vec2 {
        let u2v = u * u * v;
        [self.r * (self.a - u + u2v), self.r * (self.b - u2v)]
    }
}

/// Builds the deviation-form Schnakenberg model.
///
/// With `S = a + b`, `H = b / S²` and `M = 2S` the quadratic part of the first
/// component is `r(H u² + M u v)` and the cubic part is `r u² v`; the second
/// component carries the negation of both.
pub fn schnakenberg_model(p: SchnakenbergParams) -> Result<KineticModel> {
    p.validate()?;
    let SchnakenbergParams { a, b, r } = p;
    let s = a + b;
    let h = b / (s * s);
    let m = 2.0 * s;
    let jacobian = [[r * (b - a) / s, r * s * s], [-2.0 * b * r / s, -r * s * s]];
    let q1 = [r * h, r * m, 0.0];
    let c1 = [0.0, r, 0.0, 0.0];
    KineticModel::from_monomials(
        format!("schnakenberg(a={a}, b={b}, r={r})"),
        p.steady_state(),
        jacobian,
        [q1, q1.map(|x| -x)],
        [c1, c1.map(|x| -x)],
    )
}

/// User-supplied Taylor data. Tensors must be symmetric and finite.
pub fn custom_model(
    steady_state: Vec2,
    jacobian: Mat2,
    quad: [Mat2; 2],
    cubic: [Tensor3; 2],
    label: impl Into<String>,
) -> Result<KineticModel> {
    KineticModel::new(label.into(), steady_state, jacobian, quad, cubic)
}

/// `A w + quadratic(w) + cubic(w)`.
pub fn evaluate_kinetics(m: &KineticModel, w: Vec2) -> Vec2 {
    m.evaluate(w)
}

impl KineticModel {
    pub fn new(
        label: String,
        steady_state: Vec2,
        jacobian: Mat2,
        quad: [Mat2; 2],
        cubic: [Tensor3; 2],
    ) -> Result<Self> {
        let finite = steady_state.iter().all(|x| x.is_finite())
            && jacobian.iter().flatten().all(|x| x.is_finite())
            && quad.iter().flatten().flatten().all(|x| x.is_finite())
            && cubic
                .iter()
                .flatten()
                .flatten()
                .flatten()
                .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(format!(
                "model '{label}' has non-finite Taylor data"
            )));
        }
        for (c, q) in quad.iter().enumerate() {
            if !close(q[0][1], q[1][0]) {
                return Err(Error::InvalidParameter(format!(
                    "quadratic tensor of component {} is not symmetric",
                    c + 1
                )));
            }
        }
        for (c, t) in cubic.iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let x = t[i][j][k];
                        if !(close(x, t[j][i][k]) && close(x, t[i][k][j]) && close(x, t[k][j][i])) {
                            return Err(Error::InvalidParameter(format!(
                                "cubic tensor of component {} is not symmetric",
                                c + 1
                            )));
                        }
                    }
                }
            }
        }
        let quad_mono = quad.map(|q| [q[0][0], 2.0 * q[0][1], q[1][1]]);
        let cubic_mono =
            cubic.map(|t| [t[0][0][0], 3.0 * t[0][0][1], 3.0 * t[0][1][1], t[1][1][1]]);
        Ok(Self {
            label,
            steady_state,
            jacobian,
            quad,
            cubic,
            quad_mono,
            cubic_mono,
        })
    }

    /// Build from monomial coefficients: quadratic `(u², uv, v²)` and cubic
    /// `(u³, u²v, uv², v³)` per component.
    pub fn from_monomials(
        label: impl Into<String>,
        steady_state: Vec2,
        jacobian: Mat2,
        quad: [[f64; 3]; 2],
        cubic: [[f64; 4]; 2],
    ) -> Result<Self> {
        let q = quad.map(|[uu, uv, vv]| [[uu, 0.5 * uv], [0.5 * uv, vv]]);
        let c = cubic.map(|[uuu, uuv, uvv, vvv]| {
            let p = uuv / 3.0;
            let s = uvv / 3.0;
            [[[uuu, p], [p, s]], [[p, s], [s, vvv]]]
        });
        Self::new(label.into(), steady_state, jacobian, q, c)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn steady_state(&self) -> Vec2 {
        self.steady_state
    }

    pub fn jacobian(&self) -> Mat2 {
        self.jacobian
    }

    pub fn quad_tensors(&self) -> &[Mat2; 2] {
        &self.quad
    }

    pub fn cubic_tensors(&self) -> &[Tensor3; 2] {
        &self.cubic
    }

    /// Quadratic monomial coefficients `(u², uv, v²)` per component.
    pub fn quad_monomials(&self) -> [[f64; 3]; 2] {
        self.quad_mono
    }

    /// Cubic monomial coefficients `(u³, u²v, uv², v³)` per component.
    pub fn cubic_monomials(&self) -> [[f64; 4]; 2] {
        self.cubic_mono
    }

    pub fn trace(&self) -> f64 {
        self.jacobian[0][0] + self.jacobian[1][1]
    }

    pub fn det(&self) -> f64 {
        let a = self.jacobian;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    /// Stable without diffusion: `Tr(A) < 0` and `det(A) > 0`.
    pub fn kinetics_stable(&self) -> bool {
        self.trace() < 0.0 && self.det() > 0.0
    }

    pub fn linear(&self, w: Vec2) -> Vec2 {
        let a = self.jacobian;
        [
            a[0][0] * w[0] + a[0][1] * w[1],
            a[1][0] * w[0] + a[1][1] * w[1],
        ]
    }

    /// Symmetric bilinear form `B(w, z)` with `B(w, w)` the quadratic part.
    pub fn bilinear(&self, w: Vec2, z: Vec2) -> Vec2 {
        self.quad.map(|q| {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += q[i][j] * w[i] * z[j];
                }
            }
            s
        })
    }

    pub fn quadratic(&self, w: Vec2) -> Vec2 {
        let [u, v] = w;
        self.quad_mono
            .map(|[uu, uv, vv]| uu * u * u + uv * u * v + vv * v * v)
    }

    pub fn cubic(&self, w: Vec2) -> Vec2 {
        let [u, v] = w;
        self.cubic_mono
            .map(|[uuu, uuv, uvv, vvv]| u * u * (uuu * u + uuv * v) + v * v * (uvv * u + vvv * v))
    }

    pub fn evaluate(&self, w: Vec2) -> Vec2 {
        let l = self.linear(w);
        let q = self.quadratic(w);
        let c = self.cubic(w);
        [l[0] + q[0] + c[0], l[1] + q[1] + c[1]]
    }

    /// True when `y · Q^(c)` and `y · C^(c)` vanish, i.e. the nonlinearity has no
    /// component along the covector `y`.
    pub fn annihilated_by(&self, y: Vec2) -> bool {
        let scale = y[0].abs().max(y[1].abs()).max(f64::MIN_POSITIVE);
        let mag = self
            .quad
            .iter()
            .flatten()
            .flatten()
            .chain(self.cubic.iter().flatten().flatten().flatten())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let tol = 1e-12 * scale * mag.max(f64::MIN_POSITIVE);
        let q_ok = (0..2).all(|i| {
            (0..2).all(|j| (y[0] * self.quad[0][i][j] + y[1] * self.quad[1][i][j]).abs() <= tol)
        });
        let c_ok = (0..2).all(|i| {
            (0..2).all(|j| {
                (0..2).all(|k| {
                    (y[0] * self.cubic[0][i][j][k] + y[1] * self.cubic[1][i][j][k]).abs() <= tol
                })
            })
        });
        q_ok && c_ok
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0)
}
