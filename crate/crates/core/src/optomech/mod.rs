//! Linearized cavity optomechanics as an LGQ system.
//!
//! Units: frequencies in `ω_m = 1`, times in `1/ω_m`. Quadrature order is
//! `(q_a, p_a, q_b, p_b)` with `a` the cavity and `b` the mechanics.

mod classical;
mod coupled;
mod drive;

pub use classical::{
    build_generator, classical_sensitivity_propagator, integrate_classical, ClassicalTrajectory,
    OptomechGenerator,
};
pub use coupled::{ControlVariation, CoupledState, CoupledSystem};
pub use drive::{DriveWaveforms, Segment};

use nalgebra::{Complex, DMatrix, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::dynamics::DissipatorSet;
use crate::error::{invalid, Result};

pub type C64 = Complex<f64>;

/// Mechanical frequency; fixes the unit system.
pub const OMEGA_M: f64 = 1.0;

/// Physical parameters in units of `ω_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptomechParams {
    /// Single-photon coupling `g₀`.
    pub g0: f64,
    /// Cavity decay rate `κ`.
    pub kappa: f64,
    /// Mechanical decay rate `γ_m`.
    pub gamma_m: f64,
    /// Bare detuning `Δ_c = ω_c - ω_L`.
    pub delta_c: f64,
    /// Thermal occupation of the mechanical bath.
    pub n_bar_m: f64,
}

impl OptomechParams {
    pub fn new(g0: f64, kappa: f64, gamma_m: f64, delta_c: f64, n_bar_m: f64) -> Result<Self> {
        let p = Self {
            g0,
            kappa,
            gamma_m,
            delta_c,
            n_bar_m,
        };
        p.validate()?;
        Ok(p)
    }

    /// Cooling parameter set: `g₀ = 4e-5, κ = 0.02, γ_m = 3e-6, Δ_c = 1, n̄_m = 1000`.
    pub fn cooling_reference() -> Self {
        Self {
            g0: 4e-5,
            kappa: 0.02,
            gamma_m: 3e-6,
            delta_c: 1.0,
            n_bar_m: 1e3,
        }
    }

    /// Entanglement parameter set: as for cooling but `κ = 0.2, n̄_m = 100`.
    pub fn entanglement_reference() -> Self {
        Self {
            kappa: 0.2,
            n_bar_m: 100.0,
            ..Self::cooling_reference()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("g0", self.g0),
            ("kappa", self.kappa),
            ("gamma_m", self.gamma_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.delta_c.is_finite() {
            return Err(invalid("delta_c must be finite"));
        }
        if !(self.n_bar_m.is_finite() && self.n_bar_m >= 0.0) {
            return Err(invalid(format!(
                "n_bar_m must be >= 0, got {}",
                self.n_bar_m
            )));
        }
        Ok(())
    }

    pub fn omega_m(&self) -> f64 {
        OMEGA_M
    }

    /// `Δ(t) = Δ_c + g₀ (β + β*)`.
    pub fn detuning(&self, beta: C64) -> f64 {
        self.delta_c + 2.0 * self.g0 * beta.re
    }

    /// `G(t) = g₀ α`.
    pub fn coupling(&self, alpha: C64) -> C64 {
        alpha * self.g0
    }
}

/// Jump-operator rows for cavity loss and mechanical damping/heating, and the
/// diagonal diffusion `E = ½ diag(κ, κ, γ_m(2n̄_m+1), γ_m(2n̄_m+1))`.
pub fn dissipation_matrices(params: &OptomechParams) -> (DissipatorSet, Matrix4<f64>) {
    let k = (params.kappa / 2.0).sqrt();
    let down = (params.gamma_m * (params.n_bar_m + 1.0) / 2.0).sqrt();
    let up = (params.gamma_m * params.n_bar_m / 2.0).sqrt();
    let z = C64::new(0.0, 0.0);
    let rows = DMatrix::from_row_slice(
        3,
        4,
        &[
            C64::new(k, 0.0),
            C64::new(0.0, k),
            z,
            z, //
            z,
            z,
            C64::new(down, 0.0),
            C64::new(0.0, down), //
            z,
            z,
            C64::new(up, 0.0),
            C64::new(0.0, -up),
        ],
    );
    let set = DissipatorSet::new(2, rows).expect("three rows of four finite coefficients");
    let mech = params.gamma_m * (2.0 * params.n_bar_m + 1.0);
    let e = Matrix4::from_diagonal(&Vector4::new(params.kappa, params.kappa, mech, mech)) * 0.5;
    (set, e)
}

/// Real drift of the linearized quadrature dynamics for detuning `Δ` and coupling `G`.
pub fn drift(delta: f64, g: C64, params: &OptomechParams) -> Matrix4<f64> {
    let (hk, hg, w) = (params.kappa / 2.0, params.gamma_m / 2.0, OMEGA_M);
    let (gr, gi) = (2.0 * g.re, 2.0 * g.im);
    Matrix4::new(
        -hk, delta, gi, 0.0, //
        -delta, -hk, -gr, 0.0, //
        0.0, 0.0, -hg, w, //
        -gr, -gi, -w, -hg,
    )
}

/// Quadratic Hamiltonian matrix of the linearized model, `H = ½ xᵀ M x`.
///
/// Uses the real part of the coupling block, which carries `G` through
/// `2 Re G q_a q_b + 2 Im G p_a q_b`.
pub fn hamiltonian_matrix(delta: f64, g: C64) -> Matrix4<f64> {
    let (gr, gi) = (2.0 * g.re, 2.0 * g.im);
    Matrix4::new(
        delta, 0.0, gr, 0.0, //
        0.0, delta, gi, 0.0, //
        gr, gi, OMEGA_M, 0.0, //
        0.0, 0.0, 0.0, OMEGA_M,
    )
}

/// Responses of `(α, β, α*, β*)` to an amplitude and a phase variation at `s`.
pub fn control_jump_vectors(omega_s: f64, phi_s: f64) -> ([C64; 4], [C64; 4]) {
    let z = C64::new(0.0, 0.0);
    let e_minus = C64::from_polar(1.0, -phi_s);
    let e_plus = C64::from_polar(1.0, phi_s);
    let i_half = C64::new(0.0, 0.5);
    let p_omega = [i_half * e_minus, z, -i_half * e_plus, z];
    let p_phi = [e_minus * (0.5 * omega_s), z, e_plus * (0.5 * omega_s), z];
    (p_omega, p_phi)
}

/// Continuous-wave sideband-cooling limit `n_f = n̄_m γ_m / κ`.
pub fn sideband_limit(params: &OptomechParams) -> Result<f64> {
    if !(params.kappa > 0.0) {
        return Err(invalid("sideband limit needs kappa > 0"));
    }
    Ok(params.n_bar_m * params.gamma_m / params.kappa)
}
