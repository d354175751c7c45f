//! Closed-form drift–diffusion description of the belief dynamics.
//!
//! The diffusion matrix is diagonal and depends on the beliefs only through
//! the allocation `a(δ)`, `δ = R̂^A − R̂^B`, so every derivative below reduces
//! to derivatives of `a`:
//!
//! ```text
//! a   = (1 + tanh Γδ) / 2
//! a'  = Γ (1 − tanh² Γδ) / 2
//! a'' = −Γ² tanh Γδ (1 − tanh² Γδ)
//! ∂a/∂R̂^A = a',  ∂a/∂R̂^B = −a'
//! ```

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bandit::{AgentParams, BanditConfig, BeliefState};
use crate::error::{Error, Result};

/// `a`, `a'`, `a''` at a belief difference.
#[derive(Debug, Clone, Copy)]
struct AllocationJet {
    a: f64,
    d1: f64,
    d2: f64,
}

impl AllocationJet {
    fn at(delta: f64, gamma: f64) -> Self {
        let t = (gamma * delta).tanh();
        let sech2 = 1.0 - t * t;
        AllocationJet {
            a: 0.5 * (1.0 + t),
            d1: 0.5 * gamma * sech2,
            d2: -gamma * gamma * t * sech2,
        }
    }

    /// `1 − a`, computed so that it mirrors `a` exactly under `δ → −δ`.
    fn complement(delta: f64, gamma: f64) -> f64 {
        0.5 * (1.0 - (gamma * delta).tanh())
    }
}

fn diffusion_prefactor(params: &AgentParams) -> f64 {
    let half = 0.5 * params.beta;
    half * half
}

/// Drift `F = β (−R̂^A + a ⟨R^A⟩, −R̂^B + (1−a) ⟨R^B⟩)`.
pub fn drift(state: &BeliefState, config: &BanditConfig, params: &AgentParams) -> [f64; 2] {
    let delta = state.delta();
    let a = 0.5 * (1.0 + (params.gamma * delta).tanh());
    let b = AllocationJet::complement(delta, params.gamma);
    [
        params.beta * (-state.r_hat_a + a * config.mean_a),
        params.beta * (-state.r_hat_b + b * config.mean_b),
    ]
}

/// Diffusion matrix and its row divergence `(∇·D)_i = Σ_j ∂_j D_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusion {
    pub matrix: [[f64; 2]; 2],
    pub divergence: [f64; 2],
}

/// `D = (β/2)² diag(σ_A² a² + σ_η², σ_B² (1−a)² + σ_η²)`.
pub fn diffusion(state: &BeliefState, config: &BanditConfig, params: &AgentParams) -> Diffusion {
    let delta = state.delta();
    let jet = AllocationJet::at(delta, params.gamma);
    let b = AllocationJet::complement(delta, params.gamma);
    let k = diffusion_prefactor(params);
    let eta2 = params.sigma_eta * params.sigma_eta;
    Diffusion {
        matrix: [
            [k * (config.var_a * jet.a * jet.a + eta2), 0.0],
            [0.0, k * (config.var_b * b * b + eta2)],
        ],
        divergence: [
            2.0 * k * config.var_a * jet.a * jet.d1,
            2.0 * k * config.var_b * b * jet.d1,
        ],
    }
}

/// Everything the irreversibility estimators need at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFields {
    pub drift: [f64; 2],
    pub diffusion: [[f64; 2]; 2],
    /// Row divergence of the diffusion matrix.
    pub div_diffusion: [f64; 2],
    /// `∇·F`.
    pub div_drift: f64,
    /// `∇·(∇·D) = Σ_ij ∂_i ∂_j D_ij`.
    pub div_div_diffusion: f64,
}

impl LocalFields {
    /// `g = F − ∇·D`.
    pub fn corrected_drift(&self) -> [f64; 2] {
        [
            self.drift[0] - self.div_diffusion[0],
            self.drift[1] - self.div_diffusion[1],
        ]
    }

    fn inverse_diffusion(&self, at: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        let [[a, b], [c, d]] = self.diffusion;
        let det = a * d - b * c;
        if !(det > 0.0 && a > 0.0) || !det.is_finite() {
            return Err(Error::SingularDiffusion { x: at[0], y: at[1] });
        }
        Ok([[d / det, -b / det], [-c / det, a / det]])
    }

    /// Thermodynamic force `D⁻¹ (F − ∇·D)`.
    pub fn thermodynamic_force(&self, at: [f64; 2]) -> Result<[f64; 2]> {
        let inv = self.inverse_diffusion(at)?;
        let g = self.corrected_drift();
        Ok([
            inv[0][0] * g[0] + inv[0][1] * g[1],
            inv[1][0] * g[0] + inv[1][1] * g[1],
        ])
    }

    /// Local entropy-flux density `gᵀ D⁻¹ g + ∇·g`, whose stationary average
    /// is the irreversibility rate.
    pub fn flux_density(&self, at: [f64; 2]) -> Result<f64> {
        let force = self.thermodynamic_force(at)?;
        let g = self.corrected_drift();
        let quadratic = g[0] * force[0] + g[1] * force[1];
        Ok(quadratic + self.div_drift - self.div_div_diffusion)
    }
}

/// A two-dimensional drift–diffusion model with closed-form fields.
pub trait DriftDiffusionModel: Sync {
    fn fields(&self, x: [f64; 2]) -> LocalFields;
}

/// The belief dynamics of a bandit configuration and agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditModel {
    pub config: BanditConfig,
    pub params: AgentParams,
}

impl BanditModel {
    pub fn new(config: BanditConfig, params: AgentParams) -> Self {
        BanditModel { config, params }
    }

    /// `∂_x 𝓕_y − ∂_y 𝓕_x` from closed-form derivatives.
    pub fn curl(&self, x: [f64; 2]) -> Result<f64> {
        let (config, params) = (&self.config, &self.params);
        let state = BeliefState::from(x);
        let delta = state.delta();
        let jet = AllocationJet::at(delta, params.gamma);
        let b = AllocationJet::complement(delta, params.gamma);
        let k = diffusion_prefactor(params);
        let beta = params.beta;

        let f = self.fields(x);
        let dxx = f.diffusion[0][0];
        let dyy = f.diffusion[1][1];
        if !(dxx > 0.0 && dyy > 0.0) {
            return Err(Error::SingularDiffusion { x: x[0], y: x[1] });
        }
        let g = f.corrected_drift();
        // q = ∂_x D_xx and h = ∂_y D_yy as functions of δ, with their δ-derivatives.
        let q = f.div_diffusion[0];
        let h = f.div_diffusion[1];
        let dq = 2.0 * k * config.var_a * (jet.d1 * jet.d1 + jet.a * jet.d2);
        let dh = 2.0 * k * config.var_b * (-jet.d1 * jet.d1 + b * jet.d2);

        // ∂_y D_xx = −q, ∂_x D_yy = −h.
        let dgx_dy = -beta * config.mean_a * jet.d1 + dq;
        let dgy_dx = -beta * config.mean_b * jet.d1 - dh;
        let dfy_dx = (dgy_dx * dyy + g[1] * h) / (dyy * dyy);
        let dfx_dy = (dgx_dy * dxx + g[0] * q) / (dxx * dxx);
        Ok(dfy_dx - dfx_dy)
    }
}

impl DriftDiffusionModel for BanditModel {
    fn fields(&self, x: [f64; 2]) -> LocalFields {
        let (config, params) = (&self.config, &self.params);
        let state = BeliefState::from(x);
        let delta = state.delta();
        let jet = AllocationJet::at(delta, params.gamma);
        let b = AllocationJet::complement(delta, params.gamma);
        let k = diffusion_prefactor(params);
        let beta = params.beta;
        let diff = diffusion(&state, config, params);

        let div_drift = beta * (-2.0 + (config.mean_a + config.mean_b) * jet.d1);
        let dxx_xx = 2.0 * k * config.var_a * (jet.d1 * jet.d1 + jet.a * jet.d2);
        let dyy_yy = 2.0 * k * config.var_b * (jet.d1 * jet.d1 - b * jet.d2);
        LocalFields {
            drift: drift(&state, config, params),
            diffusion: diff.matrix,
            div_diffusion: diff.divergence,
            div_drift,
            div_div_diffusion: dxx_xx + dyy_yy,
        }
    }
}

/// A model viewed in coordinates dilated by `scale` about the origin.
#[derive(Debug, Clone, Copy)]
pub struct Dilated<M> {
    pub inner: M,
    pub scale: f64,
}

impl<M: DriftDiffusionModel> DriftDiffusionModel for Dilated<M> {
    fn fields(&self, x: [f64; 2]) -> LocalFields {
        let s = self.scale;
        let f = self.inner.fields([x[0] / s, x[1] / s]);
        let mut diffusion = f.diffusion;
        for row in diffusion.iter_mut() {
            for v in row.iter_mut() {
                *v *= s * s;
            }
        }
        LocalFields {
            drift: [f.drift[0] * s, f.drift[1] * s],
            diffusion,
            div_diffusion: [f.div_diffusion[0] * s, f.div_diffusion[1] * s],
            div_drift: f.div_drift,
            div_div_diffusion: f.div_div_diffusion,
        }
    }
}

pub fn thermodynamic_force(state: &BeliefState, config: &BanditConfig, params: &AgentParams) -> Result<[f64; 2]> {
    let x = state.as_array();
    BanditModel::new(*config, *params).fields(x).thermodynamic_force(x)
}

pub fn curl_force(state: &BeliefState, config: &BanditConfig, params: &AgentParams) -> Result<f64> {
    BanditModel::new(*config, *params).curl(state.as_array())
}

/// Curl of the thermodynamic force by central differences with step `h`.
pub fn curl_force_numeric(state: &BeliefState, config: &BanditConfig, params: &AgentParams, h: f64) -> Result<f64> {
    let force = |dx: f64, dy: f64| {
        thermodynamic_force(
            &BeliefState::new(state.r_hat_a + dx, state.r_hat_b + dy),
            config,
            params,
        )
    };
    let dfy_dx = (force(h, 0.0)?[1] - force(-h, 0.0)?[1]) / (2.0 * h);
    let dfx_dy = (force(0.0, h)?[0] - force(0.0, -h)?[0]) / (2.0 * h);
    Ok(dfy_dx - dfx_dy)
}

/// One row of a field scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub drift: [f64; 2],
    pub diffusion: [f64; 2],
    /// `None` where the diffusion matrix is singular.
    pub force: Option<[f64; 2]>,
    pub curl: Option<f64>,
}

/// Evaluates the fields on an `n × n` lattice spanning the given bounds.
pub fn field_scan(config: &BanditConfig, params: &AgentParams, bounds: [f64; 4], n: usize) -> Vec<FieldSample> {
    let model = BanditModel::new(*config, *params);
    let [x_min, x_max, y_min, y_max] = bounds;
    let coord = |lo: f64, hi: f64, i: usize| {
        if n <= 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let p = [coord(x_min, x_max, i), coord(y_min, y_max, j)];
            let f = model.fields(p);
            out.push(FieldSample {
                x: p[0],
                y: p[1],
                drift: f.drift,
                diffusion: [f.diffusion[0][0], f.diffusion[1][1]],
                force: f.thermodynamic_force(p).ok(),
                curl: model.curl(p).ok(),
            });
        }
    }
    out
}

/// CSV `x,y,F_x,F_y,D_xx,D_yy,force_x,force_y,curl`; singular points leave the
/// force and curl cells empty.
pub fn write_field_scan_csv<W: Write>(samples: &[FieldSample], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "F_x", "F_y", "D_xx", "D_yy", "force_x", "force_y", "curl"])?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for s in samples {
        w.write_record([
            s.x.to_string(),
            s.y.to_string(),
            s.drift[0].to_string(),
            s.drift[1].to_string(),
            s.diffusion[0].to_string(),
            s.diffusion[1].to_string(),
            opt(s.force.map(|f| f[0])),
            opt(s.force.map(|f| f[1])),
            opt(s.curl),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The autonomous one-dimensional dynamics of the belief difference.
///
/// Drift `β (−δ + a⟨R^A⟩ − (1−a)⟨R^B⟩)`, diffusion
/// `(β/2)² (σ_A² a² + σ_B² (1−a)² + 2σ_η²)`. With `σ_η = 0` and without the
/// `d'/d` correction the force equals
/// `(2/β) (−2δ + Δ⟨R⟩ + Σ⟨R⟩ tanh Γδ) / (σ_A² a² + σ_B² (1−a)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaProcess {
    pub config: BanditConfig,
    pub params: AgentParams,
}

impl DeltaProcess {
    pub fn new(config: BanditConfig, params: AgentParams) -> Self {
        DeltaProcess { config, params }
    }

    pub fn drift(&self, delta: f64) -> f64 {
        let c = &self.config;
        let t = (self.params.gamma * delta).tanh();
        self.params.beta * (-delta + 0.5 * (c.mean_a - c.mean_b) + 0.5 * (c.mean_a + c.mean_b) * t)
    }

    pub fn diffusion(&self, delta: f64) -> f64 {
        let c = &self.config;
        let a = 0.5 * (1.0 + (self.params.gamma * delta).tanh());
        let b = AllocationJet::complement(delta, self.params.gamma);
        let eta2 = self.params.sigma_eta * self.params.sigma_eta;
        diffusion_prefactor(&self.params) * (c.var_a * a * a + c.var_b * b * b + 2.0 * eta2)
    }

    pub fn diffusion_derivative(&self, delta: f64) -> f64 {
        let c = &self.config;
        let jet = AllocationJet::at(delta, self.params.gamma);
        let b = AllocationJet::complement(delta, self.params.gamma);
        2.0 * diffusion_prefactor(&self.params) * jet.d1 * (c.var_a * jet.a - c.var_b * b)
    }

    pub fn force(&self, delta: f64, include_subleading: bool) -> f64 {
        let d = self.diffusion(delta);
        let correction = if include_subleading {
            self.diffusion_derivative(delta)
        } else {
            0.0
        };
        (self.drift(delta) - correction) / d
    }
}

pub fn delta_force(delta: f64, config: &BanditConfig, params: &AgentParams, include_subleading: bool) -> f64 {
    DeltaProcess::new(*config, *params).force(delta, include_subleading)
}

/// Uniform grid for the belief difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for DeltaGrid {
    fn default() -> Self {
        DeltaGrid {
            lo: -0.8,
            hi: 0.8,
            n: 3201,
        }
    }
}

impl DeltaGrid {
    /// Grid points; a grid centred on zero is exactly antisymmetric.
    pub fn points(&self) -> Vec<f64> {
        let center = 0.5 * (self.lo + self.hi);
        let half = 0.5 * (self.hi - self.lo);
        let m = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                let k = (2 * i) as f64 - m;
                center + half * k / m
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 || !(self.lo < self.hi) {
            return Err(Error::InvalidConfig("delta grid needs lo < hi and n >= 3".into()));
        }
        Ok(())
    }
}

/// Stationary law of the belief difference on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaBeliefModel {
    pub delta: Vec<f64>,
    pub force: Vec<f64>,
    /// `−∫₀^δ 𝓕̃`.
    pub potential: Vec<f64>,
    pub pdf: Vec<f64>,
}

impl DeltaBeliefModel {
    /// Trapezoidal `∫ f(δ) P(δ) dδ`.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        trapezoid(&self.delta, |i| f(self.delta[i]) * self.pdf[i])
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|d| d)
    }

    /// Probability mass of the interval `[lo, hi)` by linear interpolation of
    /// the density and trapezoidal quadrature.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let xs = &self.delta;
        let mut total = 0.0;
        for i in 0..xs.len() - 1 {
            let (x0, x1) = (xs[i], xs[i + 1]);
            let (a, b) = (x0.max(lo), x1.min(hi));
            if b <= a {
                continue;
            }
            let interp = |x: f64| self.pdf[i] + (self.pdf[i + 1] - self.pdf[i]) * (x - x0) / (x1 - x0);
            total += 0.5 * (interp(a) + interp(b)) * (b - a);
        }
        total
    }

    /// CSV `delta,force,potential,pdf`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["delta", "force", "potential", "pdf"])?;
        for i in 0..self.delta.len() {
            w.write_record([
                self.delta[i].to_string(),
                self.force[i].to_string(),
                self.potential[i].to_string(),
                self.pdf[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn trapezoid(xs: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    let mut total = 0.0;
    let mut prev = f(0);
    for i in 1..xs.len() {
        let cur = f(i);
        total += 0.5 * (prev + cur) * (xs[i] - xs[i - 1]);
        prev = cur;
    }
    total
}

/// Gibbs-form stationary density `P(δ) ∝ exp ∫₀^δ 𝓕̃`.
pub fn stationary_delta_pdf(config: &BanditConfig, params: &AgentParams, grid: &DeltaGrid) -> Result<DeltaBeliefModel> {
    stationary_delta_pdf_with(config, params, grid, true)
}

pub fn stationary_delta_pdf_with(
    config: &BanditConfig,
    params: &AgentParams,
    grid: &DeltaGrid,
    include_subleading: bool,
) -> Result<DeltaBeliefModel> {
    grid.validate()?;
    let process = DeltaProcess::new(*config, *params);
    let delta = grid.points();
    let n = delta.len();
    let force: Vec<f64> = delta.iter().map(|&d| process.force(d, include_subleading)).collect();
    if force.iter().any(|f| !f.is_finite()) {
        return Err(Error::SingularDiffusion { x: f64::NAN, y: f64::NAN });
    }

    // Integrate outward from the point closest to δ = 0.
    let origin = delta
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut potential = vec![0.0; n];
    for i in origin + 1..n {
        potential[i] = potential[i - 1] - 0.5 * (force[i - 1] + force[i]) * (delta[i] - delta[i - 1]);
    }
    for i in (0..origin).rev() {
        potential[i] = potential[i + 1] + 0.5 * (force[i] + force[i + 1]) * (delta[i + 1] - delta[i]);
    }

    let floor = potential.iter().copied().fold(f64::INFINITY, f64::min);
    let mut pdf: Vec<f64> = potential.iter().map(|u| (floor - u).exp()).collect();
    let z = trapezoid(&delta, |i| pdf[i]);
    for p in pdf.iter_mut() {
        *p /= z;
    }

    let edge = ((n - 1) / 100).max(1);
    let boundary_mass = trapezoid(&delta[..=edge], |i| pdf[i]) + trapezoid(&delta[n - 1 - edge..], |i| pdf[n - 1 - edge + i]);
    if boundary_mass > 1e-3 {
        return Err(Error::NonNormalizable { boundary_mass });
    }

    Ok(DeltaBeliefModel {
        delta,
        force,
        potential,
        pdf,
    })
}

/// Stationary mean earned reward `∫ P(δ) [⟨R^A⟩ a(δ) + ⟨R^B⟩ (1 − a(δ))] dδ`.
pub fn analytic_mean_reward(config: &BanditConfig, params: &AgentParams) -> Result<f64> {
    analytic_mean_reward_on(config, params, &DeltaGrid::default())
}

pub fn analytic_mean_reward_on(config: &BanditConfig, params: &AgentParams, grid: &DeltaGrid) -> Result<f64> {
    let model = stationary_delta_pdf(config, params, grid)?;
    let gamma = params.gamma;
    Ok(model.expectation(|d| {
        let a = 0.5 * (1.0 + (gamma * d).tanh());
        config.mean_a * a + config.mean_b * AllocationJet::complement(d, gamma)
    }))
}
