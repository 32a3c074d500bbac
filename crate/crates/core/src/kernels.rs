//! Position-space short-time kernels for the filtered step, the midpoint
//! parametrix that exposes the local damping e^{-(1/2) s^2 dt^2 V(x_m)^2},
//! and the suppression estimates near singular potentials.
//!
//! Grid measure convention: kernels carry a 1/h_cell weight, so the matrix
//! acting on grid samples approximates the continuum integral
//! ∫ dx K(x', x) psi(x). With that convention the spectral kernel IS the
//! filtered_step matrix in the position basis, divided by h_cell.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::filter::{filtered_step, FilterParams};
use crate::hamiltonian::{evaluate_potential, Hamiltonian, PotentialSpec};
use crate::numerics::{adaptive_simpson, ComplexMatrix};

// ═══════════════════════════════════════════════════════════════════════════
// Kernel containers
// ═══════════════════════════════════════════════════════════════════════════

/// K(x', x) over all grid pairs, rows indexed by x'. Symmetric (plain
/// transpose) whenever H is real symmetric, since symmetric functions of H
/// have symmetric kernels.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    values: ComplexMatrix,
    positions: Vec<f64>,
    dt: f64,
    sigma: f64,
}

impl KernelMatrix {
    pub fn values(&self) -> &ComplexMatrix {
        &self.values
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.positions.len()
    }
}

/// Everything the parametrix needs: K_0 parameters plus the potential whose
/// midpoint value supplies phase and damping.
#[derive(Clone, Debug, Serialize)]
pub struct ParametrixParams {
    pub mass: f64,
    pub dt: f64,
    pub sigma: f64,
    pub potential: PotentialSpec,
}

impl ParametrixParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::InvalidParam(format!(
                "parametrix mass must be > 0, got {}",
                self.mass
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParam(format!(
                "parametrix dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParam(format!(
                "parametrix sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        self.potential.validate()
    }
}

// ═══════════════════════════════════════════════════════════════════════════
// Kernels
// ═══════════════════════════════════════════════════════════════════════════

/// K(x', x) = sum_n e^{-iE_n dt} e^{-(1/2) s^2 dt^2 E_n^2} phi_n(x')
/// phi_n(x)* / h_cell: the filtered step as a position-space kernel.
pub fn spectral_kernel(h: &Hamiltonian, p: &FilterParams) -> Result<KernelMatrix> {
    p.validate()?;
    let v = filtered_step(h.decomposition(), p);
    let values = v.scale(Complex64::new(1.0 / h.h_cell(), 0.0));
    if !values.is_finite() {
        return Err(Error::NonFinite {
            context: "spectral kernel entries",
        });
    }
    Ok(KernelMatrix {
        values,
        positions: h.positions().to_vec(),
        dt: p.dt,
        sigma: p.sigma,
    })
}

/// Free-particle short-time kernel
///   K_0(x', x) = (m / 2 pi i dt)^{1/2} e^{i m (x'-x)^2 / 2 dt},
/// principal branch: (1/i)^{1/2} = e^{-i pi/4}. |K_0| = (m/2 pi dt)^{1/2}
/// everywhere; all position dependence sits in the quadratic phase.
pub fn free_kernel(mass: f64, dt: f64, x_prime: f64, x: f64) -> Result<Complex64> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidParam(format!(
            "free kernel mass must be > 0, got {mass}"
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParam(format!(
            "free kernel dt must be > 0, got {dt}"
        )));
    }
    let amp = (mass / (2.0 * PI * dt)).sqrt();
    let d = x_prime - x;
    let phase = mass * d * d / (2.0 * dt);
    Ok(Complex64::new(amp, 0.0) * Complex64::new(0.0, phase - FRAC_PI_4).exp())
}

/// Midpoint parametrix
///   K_0(x', x) e^{-i V(x_m) dt} e^{-(1/2) s^2 dt^2 V(x_m)^2},
/// x_m = (x + x')/2. The last factor is the local damping: the filter
/// suppresses paths through regions of large |V| pointwise. Errors when the
/// midpoint hits a singularity of V.
pub fn midpoint_parametrix(
    pp: &ParametrixParams,
    x_prime: f64,
    x: f64,
) -> Result<Complex64> {
    pp.validate()?;
    let x_m = 0.5 * (x_prime + x);
    let v = evaluate_potential(&pp.potential, x_m)?;
    let k0 = free_kernel(pp.mass, pp.dt, x_prime, x)?;
    let damp = (-0.5 * pp.sigma * pp.sigma * pp.dt * pp.dt * v * v).exp();
    Ok(k0 * Complex64::new(0.0, -v * pp.dt).exp() * Complex64::new(damp, 0.0))
}

/// Max over region pairs of |spectral_kernel - midpoint_parametrix|. The
/// aggregate of the T^2 and TV + VT corrections the parametrix drops; it
/// shrinks under dt-halving on smooth regions inside the grid's resolution
/// window. The region must exclude singular points; pairs are grid nodes
/// inside it, and rows parallelize over x'.
pub fn parametrix_deviation(
    h: &Hamiltonian,
    p: &FilterParams,
    region: (f64, f64),
) -> Result<f64> {
    p.validate()?;
    let (lo, hi) = region;
    if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
        return Err(Error::InvalidParam(format!(
            "deviation region needs finite lo < hi, got ({lo}, {hi})"
        )));
    }
    if h.spec().potential.is_singular() && lo <= 0.0 && hi >= 0.0 {
        return Err(Error::InvalidParam(
            "deviation region must exclude the potential's singular point".into(),
        ));
    }
    let idx: Vec<usize> = h
        .positions()
        .iter()
        .enumerate()
        .filter(|(_, &x)| x >= lo && x <= hi)
        .map(|(i, _)| i)
        .collect();
    if idx.len() < 2 {
        return Err(Error::TooFewSamples {
            got: idx.len(),
            need: 2,
        });
    }
    let spec_k = spectral_kernel(h, p)?;
    let pp = ParametrixParams {
        mass: h.spec().mass,
        dt: p.dt,
        sigma: p.sigma,
        potential: h.spec().potential,
    };
    let xs = h.positions();
    let max = idx
        .par_iter()
        .map(|&i| {
            let mut row_max = 0.0f64;
            for &j in &idx {
                // midpoints stay inside the (convex) region, so no domain
                // error can occur here once the region check passed
                let para = midpoint_parametrix(&pp, xs[i], xs[j])?;
                let dev = (spec_k.values().get(i, j) - para).norm();
                row_max = row_max.max(dev);
            }
            Ok(row_max)
        })
        .try_reduce(|| 0.0f64, |a, b| Ok(a.max(b)))?;
    Ok(max)
}

// ═══════════════════════════════════════════════════════════════════════════
// Singular potentials: danger zone and near-origin suppression
// ═══════════════════════════════════════════════════════════════════════════

/// Radius below which the local damping of a |x|^{-nu} spike of strength eta
/// is strong, r* = (s dt |eta| / sqrt(2))^{1/nu}. At |x_m| = r* the damping
/// factor is exactly e^{-1}: (1/2) s^2 dt^2 eta^2 r*^{-2 nu} = 1. Shrinks to
/// zero as dt -> 0 at fixed s, so the continuum limit squeezes the suppressed
/// zone away.
pub fn danger_radius(sigma: f64, dt: f64, eta: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu <= 2.0) {
        return Err(Error::InvalidParam(format!(
            "spike exponent must lie in (0, 2], got {nu}"
        )));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParam(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParam(format!("dt must be > 0, got {dt}")));
    }
    if !eta.is_finite() {
        return Err(Error::InvalidParam("eta must be finite".into()));
    }
    if eta == 0.0 {
        return Ok(0.0);
    }
    Ok((sigma * dt * eta.abs() / std::f64::consts::SQRT_2).powf(1.0 / nu))
}

/// Smallest sigma * dt that makes the danger radius reach down to a feature
/// at r_sing: sqrt(2) r_sing^nu / |eta|. Algebraic inverse of
/// `danger_radius`, so the round trip reproduces r_sing.
pub fn resolution_rule_of_thumb(r_sing: f64, eta: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu <= 2.0) {
        return Err(Error::InvalidParam(format!(
            "spike exponent must lie in (0, 2], got {nu}"
        )));
    }
    if !(r_sing > 0.0) || !r_sing.is_finite() {
        return Err(Error::InvalidParam(format!(
            "r_sing must be > 0, got {r_sing}"
        )));
    }
    if !eta.is_finite() || eta == 0.0 {
        return Err(Error::InvalidParam(
            "eta must be finite and nonzero (no spike to resolve)".into(),
        ));
    }
    Ok(std::f64::consts::SQRT_2 * r_sing.powf(nu) / eta.abs())
}

/// Near-origin content of the coulomb parametrix.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NearOriginReport {
    /// sup over sampled midpoints |x_m| < delta of |midpoint_parametrix|.
    pub sup_abs: f64,
    /// (m / 2 pi dt)^{1/2} e^{-s^2 dt^2 g^2 / (2 delta^2)}.
    pub bound: f64,
    /// integral_0^delta e^{-c/x^2} dx with c = s^2 dt^2 g^2 / 2.
    pub tail_integral: f64,
}

/// Suppression of the coulomb kernel inside |x_m| < delta. The sup scans 512
/// log-spaced midpoints in [delta/1000, delta(1 - 1e-6)] (|K| depends on the
/// pair only through x_m, so coincident points suffice); the analytic bound
/// sits at the rim x_m = delta. The tail integral shows the near-origin
/// contribution is finite, indeed tiny, for any c > 0.
pub fn coulomb_near_origin_bound(
    g: f64,
    p: &FilterParams,
    mass: f64,
    delta: f64,
) -> Result<NearOriginReport> {
    p.validate()?;
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidParam(format!("mass must be > 0, got {mass}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParam(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    if !g.is_finite() {
        return Err(Error::InvalidParam("coulomb strength must be finite".into()));
    }
    let pp = ParametrixParams {
        mass,
        dt: p.dt,
        sigma: p.sigma,
        potential: PotentialSpec::Coulomb { strength: g },
    };
    let n = 512usize;
    let lo = delta * 1e-3;
    let hi = delta * (1.0 - 1e-6);
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    let mut sup_abs = 0.0f64;
    let mut x_m = lo;
    for _ in 0..n {
        let k = midpoint_parametrix(&pp, x_m, x_m)?;
        sup_abs = sup_abs.max(k.norm());
        x_m *= ratio;
    }
    let c = 0.5 * p.sigma * p.sigma * p.dt * p.dt * g * g;
    let bound = (mass / (2.0 * PI * p.dt)).sqrt() * (-c / (delta * delta)).exp();
    let tail_integral = near_origin_tail_integral(c, delta, 1e-10)?;
    Ok(NearOriginReport {
        sup_abs,
        bound,
        tail_integral,
    })
}

/// integral_0^delta e^{-c/x^2} dx. The integrand is super-exponentially flat
/// at 0, so substitute y = 1/x and integrate e^{-c y^2} / y^2 on
/// [1/delta, sqrt(745/c)]; past that cutoff the weight is below the smallest
/// positive double. c = 0 is the unweighted interval. Exposed with its own
/// tolerance so resolution studies can rerun it tighter.
pub fn near_origin_tail_integral(c: f64, delta: f64, rel_tol: f64) -> Result<f64> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidParam(format!("c must be >= 0, got {c}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParam(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    if !(rel_tol > 0.0) || !rel_tol.is_finite() {
        return Err(Error::InvalidParam(format!(
            "rel_tol must be > 0, got {rel_tol}"
        )));
    }
    if c == 0.0 {
        return Ok(delta);
    }
    let y0 = 1.0 / delta;
    let y_max = (745.0 / c).sqrt();
    if y_max <= y0 {
        return Ok(0.0);
    }
    Ok(adaptive_simpson(
        &|y| (-c * y * y).exp() / (y * y),
        y0,
        y_max,
        rel_tol,
        1e-300,
    ))
}

// ═══════════════════════════════════════════════════════════════════════════
// Hilbert-Schmidt norm
// ═══════════════════════════════════════════════════════════════════════════

/// Squared Hilbert-Schmidt norm of the filtered step; `unitary` flags the
/// sigma = 0 case where the sum degenerates to the dimension.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HsNormReport {
    /// sum_n e^{-s^2 dt^2 E_n^2}.
    pub value: f64,
    pub unitary: bool,
}

/// sum_n e^{-s^2 dt^2 E_n^2} over the grid spectrum: finite for any s > 0,
/// and for large s dt it counts the eigenvalues with |E| below ~1/(s dt).
/// Cross-checked against the squared Frobenius norm of the literal
/// filtered_step matrix (the same number computed without the spectrum).
pub fn hs_norm(h: &Hamiltonian, p: &FilterParams) -> Result<HsNormReport> {
    p.validate()?;
    let g = p.sigma * p.sigma * p.dt * p.dt;
    let value: f64 = h
        .decomposition()
        .eigenvalues()
        .iter()
        .map(|&e| (-g * e * e).exp())
        .sum();
    let frob = filtered_step(h.decomposition(), p).frobenius_norm();
    let frob_sq = frob * frob;
    let deviation = (value - frob_sq).abs();
    let tol = 1e-8 * value.max(1.0);
    if deviation > tol {
        return Err(Error::CrossCheck {
            context: "HS norm (spectral sum vs Frobenius)",
            deviation,
            tol,
        });
    }
    Ok(HsNormReport {
        value,
        unitary: p.sigma == 0.0,
    })
}
