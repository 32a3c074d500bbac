//! Euclidean lattice side of the story. Averaging the quartic coupling over
//! lambda ~ N(lambda0, sigma_c^2) at fixed field multiplies the Boltzmann
//! weight by the Gaussian characteristic function at t = phi^4:
//!
//!   E[e^{-i lambda phi^4}] = e^{-i lambda0 phi^4} e^{-(sigma_c^2/2) phi^8},
//!
//! so the smeared theory IS the original one plus a positive phi^8 term. In
//! Euclidean signature that term enters the action directly and stabilizes
//! it for any sigma_c > 0, even at lambda0 < 0. This module checks the
//! identity pointwise, samples the stabilized action, and measures how the
//! sigma_c -> 0 limit walks back to plain phi^4.
//!
//! Everything is in lattice units (spacing 1); dims = [] means a single
//! site, the zero-dimensional model where quadrature gives exact moments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, fit_power_law, gauss_quadrature_complex};
use num_complex::Complex64;

// ═══════════════════════════════════════════════════════════════════════════
// Parameters and configurations
// ═══════════════════════════════════════════════════════════════════════════

fn default_spacing() -> f64 {
    1.0
}

/// d = dims.len() in {0, 1, 2}, extents <= 64 (desk scale). sigma_c is the
/// coupling-smearing width in lattice units; sigma_c = 0 is plain phi^4 and
/// then lambda0 >= 0 is required for sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub dims: Vec<usize>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    pub mass2: f64,
    pub lambda0: f64,
    pub sigma_c: f64,
}

impl LatticeParams {
    pub fn validate(&self) -> Result<()> {
        if self.dims.len() > 2 {
            return Err(Error::InvalidParam(format!(
                "lattice supports d <= 2, got d = {}",
                self.dims.len()
            )));
        }
        for &l in &self.dims {
            if !(1..=64).contains(&l) {
                return Err(Error::InvalidParam(format!(
                    "lattice extents must lie in [1, 64], got {l}"
                )));
            }
        }
        if self.spacing != 1.0 {
            return Err(Error::InvalidParam(format!(
                "lattice spacing is fixed to 1 (lattice units), got {}",
                self.spacing
            )));
        }
        if !self.mass2.is_finite() || !self.lambda0.is_finite() {
            return Err(Error::InvalidParam(
                "mass2 and lambda0 must be finite".into(),
            ));
        }
        if !(self.sigma_c >= 0.0) || !self.sigma_c.is_finite() {
            return Err(Error::InvalidParam(format!(
                "sigma_c must be >= 0 and finite, got {}",
                self.sigma_c
            )));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn n_sites(&self) -> usize {
        self.dims.iter().product::<usize>().max(1)
    }
}

/// Field values over sites with the action kept alongside; the cache is
/// updated incrementally during sweeps and re-anchored against a full
/// recompute on a fixed cadence.
#[derive(Clone, Debug)]
pub struct FieldConfiguration {
    values: Vec<f64>,
    cached_action: f64,
}

impl FieldConfiguration {
    pub fn new(values: Vec<f64>, p: &LatticeParams) -> Result<Self> {
        p.validate()?;
        if values.len() != p.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: p.n_sites(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "field configuration values",
            });
        }
        let cached_action = action_of(&values, p);
        Ok(FieldConfiguration {
            values,
            cached_action,
        })
    }

    pub fn zeros(p: &LatticeParams) -> Result<Self> {
        FieldConfiguration::new(vec![0.0; p.n_sites()], p)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn action(&self) -> f64 {
        self.cached_action
    }
}

// ═══════════════════════════════════════════════════════════════════════════
// The pointwise identity
// ═══════════════════════════════════════════════════════════════════════════

/// |quadrature of E[e^{-i lambda phi^4}] - e^{-i lambda0 phi^4 - (sigma_c^2/2)
/// phi^8}|. Gauss-Hermite handles the Gaussian average; the residual is pure
/// quadrature error and sits at rounding level once sigma_c phi^4 is a few
/// units or less. sigma_c = 0 is the delta prior, identity exact.
pub fn pointwise_characteristic_check(
    phi: f64,
    lambda0: f64,
    sigma_c: f64,
    nodes: usize,
) -> Result<f64> {
    if !phi.is_finite() || !lambda0.is_finite() {
        return Err(Error::InvalidParam(
            "phi and lambda0 must be finite".into(),
        ));
    }
    if !(sigma_c >= 0.0) || !sigma_c.is_finite() {
        return Err(Error::InvalidParam(format!(
            "sigma_c must be >= 0, got {sigma_c}"
        )));
    }
    if nodes < 32 {
        return Err(Error::InvalidParam(format!(
            "characteristic check needs >= 32 quadrature nodes, got {nodes}"
        )));
    }
    let phi4 = phi.powi(4);
    if sigma_c == 0.0 {
        return Ok(0.0);
    }
    let lhs = gauss_quadrature_complex(
        &|lambda: f64| Complex64::new(0.0, -lambda * phi4).exp(),
        lambda0,
        sigma_c,
        nodes,
    )?;
    let rhs = Complex64::new(
        -0.5 * sigma_c * sigma_c * phi4 * phi4,
        -lambda0 * phi4,
    )
    .exp();
    let residual = (lhs - rhs).norm();
    if residual > 1e-3 {
        return Err(Error::QuadratureUnderresolved { residual });
    }
    Ok(residual)
}

// ═══════════════════════════════════════════════════════════════════════════
// Action
// ═══════════════════════════════════════════════════════════════════════════

/// U(phi) = (1/2) m^2 phi^2 + lambda0 phi^4 + (sigma_c^2/2) phi^8.
pub fn site_potential(p: &LatticeParams, phi: f64) -> f64 {
    let phi2 = phi * phi;
    let phi4 = phi2 * phi2;
    0.5 * p.mass2 * phi2 + p.lambda0 * phi4 + 0.5 * p.sigma_c * p.sigma_c * phi4 * phi4
}

/// Forward and backward neighbors of a site, one pair per direction.
/// Periodic; a direction of extent 1 wraps to the site itself and is skipped
/// (its bond is identically zero). Extent 2 lists the same neighbor twice,
/// matching the two bonds that exist in the action.
fn neighbors(p: &LatticeParams, site: usize) -> Vec<usize> {
    match p.dims.len() {
        0 => Vec::new(),
        1 => {
            let l = p.dims[0];
            if l == 1 {
                return Vec::new();
            }
            vec![(site + 1) % l, (site + l - 1) % l]
        }
        _ => {
            let (lx, ly) = (p.dims[0], p.dims[1]);
            let (x, y) = (site / ly, site % ly);
            let mut out = Vec::with_capacity(4);
            if lx > 1 {
                out.push(((x + 1) % lx) * ly + y);
                out.push(((x + lx - 1) % lx) * ly + y);
            }
            if ly > 1 {
                out.push(x * ly + (y + 1) % ly);
                out.push(x * ly + (y + ly - 1) % ly);
            }
            out
        }
    }
}

/// Forward neighbor in each direction (each undirected bond counted once).
fn forward_neighbors(p: &LatticeParams, site: usize) -> Vec<usize> {
    match p.dims.len() {
        0 => Vec::new(),
        1 => {
            let l = p.dims[0];
            if l == 1 {
                return Vec::new();
            }
            vec![(site + 1) % l]
        }
        _ => {
            let (lx, ly) = (p.dims[0], p.dims[1]);
            let (x, y) = (site / ly, site % ly);
            let mut out = Vec::with_capacity(2);
            if lx > 1 {
                out.push(((x + 1) % lx) * ly + y);
            }
            if ly > 1 {
                out.push(x * ly + (y + 1) % ly);
            }
            out
        }
    }
}

fn action_of(values: &[f64], p: &LatticeParams) -> f64 {
    let mut s = 0.0;
    for (site, &v) in values.iter().enumerate() {
        s += site_potential(p, v);
        for nb in forward_neighbors(p, site) {
            let d = values[nb] - v;
            s += 0.5 * d * d;
        }
    }
    s
}

/// S = sum_x [ (1/2) sum_mu (phi(x+mu) - phi(x))^2 ... ] recomputed from
/// scratch; the reference evaluator the incremental cache is checked against.
pub fn euclidean_action(config: &FieldConfiguration, p: &LatticeParams) -> Result<f64> {
    p.validate()?;
    if config.values.len() != p.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: p.n_sites(),
            got: config.values.len(),
        });
    }
    Ok(action_of(&config.values, p))
}

/// Action change from setting one site to new_value, via the local terms
/// only: the site potential plus every bond touching the site.
fn delta_action(values: &[f64], p: &LatticeParams, site: usize, new_value: f64) -> f64 {
    let old = values[site];
    let mut d = site_potential(p, new_value) - site_potential(p, old);
    for nb in neighbors(p, site) {
        let v = values[nb];
        d += 0.5 * ((v - new_value) * (v - new_value) - (v - old) * (v - old));
    }
    d
}

// ═══════════════════════════════════════════════════════════════════════════
// Stability
// ═══════════════════════════════════════════════════════════════════════════

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MinimumReport {
    pub min_value: f64,
    pub argmin: f64,
    pub bounded_below: bool,
}

/// Is U bounded below? The phi^8 term wins whenever sigma_c > 0; at
/// sigma_c = 0 the quartic decides, and with both gone the mass term does.
fn is_bounded_below(p: &LatticeParams) -> bool {
    if p.sigma_c > 0.0 {
        true
    } else if p.lambda0 != 0.0 {
        p.lambda0 > 0.0
    } else {
        p.mass2 >= 0.0
    }
}

/// Minimize U(phi) over the line. Unbounded cases report
/// bounded_below = false with min_value = -inf (argmin is meaningless there
/// and returned as NaN). Bounded cases: U(phi) > 0 = U(0) outside an
/// explicit radius, dense scan inside it, then golden-section refinement.
pub fn potential_minimum(p: &LatticeParams) -> Result<MinimumReport> {
    p.validate()?;
    if !is_bounded_below(p) {
        return Ok(MinimumReport {
            min_value: f64::NEG_INFINITY,
            argmin: f64::NAN,
            bounded_below: false,
        });
    }
    // U is even; search phi >= 0. Radius beyond which U > 0 for sure:
    // for phi >= 1, phi^8 >= phi^4 >= phi^2, so the positive leading term
    // dominates once phi^4 (resp. phi^2) exceeds the listed ratio.
    let hi = if p.sigma_c > 0.0 {
        let s2 = p.sigma_c * p.sigma_c;
        ((p.mass2.abs() + 2.0 * p.lambda0.abs()) / s2)
            .powf(0.25)
            .max(1.0)
    } else if p.lambda0 > 0.0 {
        (p.mass2.abs() / (2.0 * p.lambda0)).sqrt().max(1.0)
    } else {
        // lambda0 = 0, mass2 >= 0: every term nonnegative
        return Ok(MinimumReport {
            min_value: 0.0,
            argmin: 0.0,
            bounded_below: true,
        });
    };
    let hi = hi * 1.5;

    let u = |phi: f64| site_potential(p, phi);
    let n_scan = 4096;
    let mut best_k = 0usize;
    let mut best = u(0.0);
    for k in 1..=n_scan {
        let phi = hi * k as f64 / n_scan as f64;
        let val = u(phi);
        if val < best {
            best = val;
            best_k = k;
        }
    }
    let lo_b = hi * best_k.saturating_sub(1) as f64 / n_scan as f64;
    let hi_b = hi * (best_k + 1).min(n_scan) as f64 / n_scan as f64;

    // golden-section on the bracket
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo_b, hi_b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (u(c), u(d));
    for _ in 0..200 {
        if b - a < 1e-14 * (1.0 + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = u(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = u(d);
        }
    }
    let argmin = 0.5 * (a + b);
    Ok(MinimumReport {
        min_value: u(argmin),
        argmin,
        bounded_below: true,
    })
}

// ═══════════════════════════════════════════════════════════════════════════
// Metropolis
// ═══════════════════════════════════════════════════════════════════════════

/// min(1, e^{-delta_s}): the Metropolis rule, exposed so detailed-balance
/// checks can interrogate exactly what the sweep uses.
pub fn acceptance_probability(delta_s: f64) -> f64 {
    (-delta_s).exp().min(1.0)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SweepStats {
    pub proposed: u64,
    pub accepted: u64,
}

/// One logged proposal, enough to replay the accept decision offline.
#[derive(Clone, Copy, Debug)]
pub struct ProposalRecord {
    pub site: usize,
    pub old_value: f64,
    pub new_value: f64,
    pub delta_action: f64,
    pub accept_probability: f64,
    pub accepted: bool,
}

/// One site-by-site Metropolis pass over the configuration.
///
/// Randomness is counter-based for bit reproducibility: site s draws from
/// stream s of a ChaCha8 generator keyed by `seed`, at word position
/// 4 * sweep_index (each site update consumes exactly two f64 draws, both
/// made unconditionally). Identical (seed, sweep_index, config) means an
/// identical sweep, independent of history.
pub fn metropolis_sweep(
    config: &mut FieldConfiguration,
    p: &LatticeParams,
    proposal_width: f64,
    seed: u64,
    sweep_index: u64,
    mut log: Option<&mut Vec<ProposalRecord>>,
) -> Result<SweepStats> {
    p.validate()?;
    if !is_bounded_below(p) {
        return Err(Error::UnstableAction {
            mass2: p.mass2,
            lambda0: p.lambda0,
            sigma: p.sigma_c,
        });
    }
    if !(proposal_width > 0.0) || !proposal_width.is_finite() {
        return Err(Error::InvalidParam(format!(
            "proposal width must be > 0, got {proposal_width}"
        )));
    }
    if config.values.len() != p.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: p.n_sites(),
            got: config.values.len(),
        });
    }
    let mut stats = SweepStats::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for site in 0..config.values.len() {
        rng.set_stream(site as u64);
        rng.set_word_pos(4u128 * sweep_index as u128);
        let u_prop: f64 = rng.random();
        let u_accept: f64 = rng.random();

        let old = config.values[site];
        let new = old + proposal_width * (2.0 * u_prop - 1.0);
        let ds = delta_action(&config.values, p, site, new);
        let a = acceptance_probability(ds);
        let accepted = u_accept < a;
        if accepted {
            config.values[site] = new;
            config.cached_action += ds;
            stats.accepted += 1;
        }
        stats.proposed += 1;
        if let Some(records) = log.as_deref_mut() {
            records.push(ProposalRecord {
                site,
                old_value: old,
                new_value: new,
                delta_action: ds,
                accept_probability: a,
                accepted,
            });
        }
    }
    Ok(stats)
}

/// Scalar observables of one configuration, averaged over sites.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepObservables {
    pub sweep_index: u64,
    pub action: f64,
    pub phi_mean: f64,
    pub phi2_mean: f64,
    pub phi4_mean: f64,
    pub phi8_mean: f64,
}

pub fn observe(config: &FieldConfiguration, sweep_index: u64) -> SweepObservables {
    let n = config.values.len() as f64;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    let mut m8 = 0.0;
    for &v in &config.values {
        let v2 = v * v;
        let v4 = v2 * v2;
        m1 += v;
        m2 += v2;
        m4 += v4;
        m8 += v4 * v4;
    }
    SweepObservables {
        sweep_index,
        action: config.cached_action,
        phi_mean: m1 / n,
        phi2_mean: m2 / n,
        phi4_mean: m4 / n,
        phi8_mean: m8 / n,
    }
}

/// A single Markov chain: owns its configuration, proposal width, and sweep
/// counter. Burn-in adapts the width toward 40-60% acceptance and freezes it;
/// measurement sweeps leave the kernel untouched so detailed balance holds
/// throughout the recorded samples. The cached action is re-anchored against
/// a full recompute every 1000 sweeps (relative drift above 1e-8 is an
/// error, not a warning).
pub struct MetropolisChain {
    params: LatticeParams,
    config: FieldConfiguration,
    width: f64,
    seed: u64,
    sweeps_done: u64,
    adapting: bool,
    window: SweepStats,
    total: SweepStats,
}

const RECOMPUTE_CADENCE: u64 = 1000;
const ADAPT_CADENCE: u64 = 50;

impl MetropolisChain {
    pub fn new(params: &LatticeParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let report = potential_minimum(params)?;
        if !report.bounded_below {
            return Err(Error::UnstableAction {
                mass2: params.mass2,
                lambda0: params.lambda0,
                sigma: params.sigma_c,
            });
        }
        Ok(MetropolisChain {
            config: FieldConfiguration::zeros(params)?,
            params: params.clone(),
            width: 1.0,
            seed,
            sweeps_done: 0,
            adapting: true,
            window: SweepStats::default(),
            total: SweepStats::default(),
        })
    }

    fn sweep_once(&mut self, log: Option<&mut Vec<ProposalRecord>>) -> Result<SweepStats> {
        let stats = metropolis_sweep(
            &mut self.config,
            &self.params,
            self.width,
            self.seed,
            self.sweeps_done,
            log,
        )?;
        self.sweeps_done += 1;
        self.window.proposed += stats.proposed;
        self.window.accepted += stats.accepted;
        self.total.proposed += stats.proposed;
        self.total.accepted += stats.accepted;

        if self.sweeps_done.is_multiple_of(RECOMPUTE_CADENCE) {
            let full = action_of(&self.config.values, &self.params);
            let drift = (self.config.cached_action - full).abs() / full.abs().max(1.0);
            if drift > 1e-8 {
                return Err(Error::ActionDrift { drift, tol: 1e-8 });
            }
            self.config.cached_action = full;
        }

        if self.adapting && self.sweeps_done.is_multiple_of(ADAPT_CADENCE) && self.window.proposed > 0
        {
            let rate = self.window.accepted as f64 / self.window.proposed as f64;
            if rate < 0.40 {
                self.width = (self.width * 0.8).max(1e-6);
            } else if rate > 0.60 {
                self.width = (self.width * 1.25).min(1e6);
            }
            self.window = SweepStats::default();
        }
        Ok(stats)
    }

    /// Adapt the proposal width, then freeze it for good.
    pub fn burn_in(&mut self, n_sweeps: u64) -> Result<()> {
        for _ in 0..n_sweeps {
            self.sweep_once(None)?;
        }
        self.adapting = false;
        // measurement acceptance statistics start clean
        self.total = SweepStats::default();
        self.window = SweepStats::default();
        Ok(())
    }

    pub fn sweep(&mut self) -> Result<SweepStats> {
        self.sweep_once(None)
    }

    pub fn sweep_logged(&mut self, records: &mut Vec<ProposalRecord>) -> Result<SweepStats> {
        self.sweep_once(Some(records))
    }

    /// Run n_sweeps more sweeps, observing every measure_every-th one.
    pub fn sample(&mut self, n_sweeps: u64, measure_every: u64) -> Result<Vec<SweepObservables>> {
        if measure_every == 0 {
            return Err(Error::InvalidParam("measure_every must be >= 1".into()));
        }
        let mut out = Vec::with_capacity((n_sweeps / measure_every) as usize);
        for _ in 0..n_sweeps {
            self.sweep_once(None)?;
            if self.sweeps_done.is_multiple_of(measure_every) {
                out.push(observe(&self.config, self.sweeps_done));
            }
        }
        Ok(out)
    }

    pub fn config(&self) -> &FieldConfiguration {
        &self.config
    }

    pub fn params(&self) -> &LatticeParams {
        &self.params
    }

    pub fn proposal_width(&self) -> f64 {
        self.width
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.total.proposed == 0 {
            return 0.0;
        }
        self.total.accepted as f64 / self.total.proposed as f64
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }
}

// ═══════════════════════════════════════════════════════════════════════════
// Chain statistics
// ═══════════════════════════════════════════════════════════════════════════

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Jackknife error over bins of ~4 autocorrelation times.
    pub error: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ObservableSet {
    pub phi2: Estimate,
    pub phi4: Estimate,
    pub phi8: Estimate,
    /// chi = V (<phi_bar^2> - <phi_bar>^2), phi_bar the volume average.
    pub susceptibility: Estimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainStats {
    pub samples: usize,
    pub acceptance: f64,
    pub observables: ObservableSet,
    /// Integrated autocorrelation time of the phi^2 series, in units of the
    /// sample spacing; 0.5 means consecutive samples are uncorrelated.
    pub autocorrelation_time: f64,
    /// Set when the series has zero variance (constant chain); the time
    /// estimate is meaningless there and reported as 0.
    pub autocorrelation_degenerate: bool,
}

/// Windowed integrated autocorrelation time: tau(W) = 1/2 + sum_{t<=W} rho(t)
/// with the smallest W satisfying W >= 6 tau(W). Returns (tau, degenerate).
fn integrated_autocorrelation(series: &[f64]) -> (f64, bool) {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let c0: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if !(c0 > 0.0) || !c0.is_finite() {
        return (0.0, true);
    }
    let w_max = n / 4;
    let mut tau = 0.5;
    for t in 1..=w_max {
        let mut c = 0.0;
        for i in 0..n - t {
            c += (series[i] - mean) * (series[i + t] - mean);
        }
        c /= (n - t) as f64;
        tau += c / c0;
        if (t as f64) >= 6.0 * tau {
            return (tau.max(0.5), false);
        }
    }
    (tau.max(0.5), false)
}

/// Mean and jackknife error of f(leave-one-bin-out sample set), where the
/// estimator is described by per-bin sufficient statistics. Handles the
/// nonlinear susceptibility as well as plain means.
fn jackknife<F: Fn(&[usize]) -> f64>(n_bins: usize, estimate: F) -> (f64, f64) {
    let all: Vec<usize> = (0..n_bins).collect();
    let full = estimate(&all);
    let mut sq = 0.0;
    for k in 0..n_bins {
        let subset: Vec<usize> = (0..n_bins).filter(|&i| i != k).collect();
        let e = estimate(&subset);
        sq += (e - full) * (e - full);
    }
    let err = ((n_bins - 1) as f64 / n_bins as f64 * sq).sqrt();
    (full, err)
}

/// Binned means with jackknife errors and the windowed autocorrelation time.
/// The bin length follows the measured tau (about 4 tau per bin, clamped so
/// at least 10 bins survive); needs at least 100 post-burn-in samples.
pub fn measure_observables(
    samples: &[SweepObservables],
    volume: usize,
    acceptance: f64,
) -> Result<ChainStats> {
    if samples.len() < 100 {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            need: 100,
        });
    }
    if !(0.0..=1.0).contains(&acceptance) {
        return Err(Error::InvalidParam(format!(
            "acceptance must lie in [0, 1], got {acceptance}"
        )));
    }
    if volume == 0 {
        return Err(Error::InvalidParam("volume must be >= 1".into()));
    }
    let phi2_series: Vec<f64> = samples.iter().map(|s| s.phi2_mean).collect();
    let (tau, degenerate) = integrated_autocorrelation(&phi2_series);

    let n = samples.len();
    let bin_len = ((4.0 * tau).ceil() as usize).clamp(1, (n / 10).max(1));
    let n_bins = n / bin_len;

    // per-bin means of each series
    let bin_of = |f: &dyn Fn(&SweepObservables) -> f64| -> Vec<f64> {
        (0..n_bins)
            .map(|b| {
                samples[b * bin_len..(b + 1) * bin_len]
                    .iter()
                    .map(f)
                    .sum::<f64>()
                    / bin_len as f64
            })
            .collect()
    };
    let b_phi = bin_of(&|s| s.phi_mean);
    let b_phi_sq = bin_of(&|s| s.phi_mean * s.phi_mean);
    let b2 = bin_of(&|s| s.phi2_mean);
    let b4 = bin_of(&|s| s.phi4_mean);
    let b8 = bin_of(&|s| s.phi8_mean);

    let mean_est = |bins: &Vec<f64>| {
        let bins = bins.clone();
        jackknife(n_bins, move |idx| {
            idx.iter().map(|&i| bins[i]).sum::<f64>() / idx.len() as f64
        })
    };
    let (m2, e2) = mean_est(&b2);
    let (m4, e4) = mean_est(&b4);
    let (m8, e8) = mean_est(&b8);

    let v = volume as f64;
    let (chi, chi_err) = {
        let b_phi = b_phi.clone();
        let b_phi_sq = b_phi_sq.clone();
        jackknife(n_bins, move |idx| {
            let m = idx.iter().map(|&i| b_phi[i]).sum::<f64>() / idx.len() as f64;
            let msq = idx.iter().map(|&i| b_phi_sq[i]).sum::<f64>() / idx.len() as f64;
            v * (msq - m * m)
        })
    };

    Ok(ChainStats {
        samples: n,
        acceptance,
        observables: ObservableSet {
            phi2: Estimate { mean: m2, error: e2 },
            phi4: Estimate { mean: m4, error: e4 },
            phi8: Estimate { mean: m8, error: e8 },
            susceptibility: Estimate {
                mean: chi,
                error: chi_err,
            },
        },
        autocorrelation_time: tau,
        autocorrelation_degenerate: degenerate,
    })
}

// ═══════════════════════════════════════════════════════════════════════════
// Single-site quadrature oracle (d = 0)
// ═══════════════════════════════════════════════════════════════════════════

/// <phi^power> of the single-site measure e^{-U(phi)} d phi by adaptive
/// quadrature: the exact answer the d = 0 sampler must reproduce. Odd powers
/// vanish by parity. Requires a stable potential.
pub fn site_moment_quadrature(p: &LatticeParams, power: u32) -> Result<f64> {
    p.validate()?;
    if p.dimension() != 0 {
        return Err(Error::InvalidParam(
            "site quadrature is the d = 0 oracle; use sampling for d > 0".into(),
        ));
    }
    if !is_bounded_below(p) {
        return Err(Error::UnstableAction {
            mass2: p.mass2,
            lambda0: p.lambda0,
            sigma: p.sigma_c,
        });
    }
    if power % 2 == 1 {
        return Ok(0.0);
    }
    let min = potential_minimum(p)?;
    let u_min = min.min_value;
    // integrate e^{-(U - U_min)} so the weight peaks at 1; cut where the
    // exponent passes 745 (weight below the smallest positive double)
    let mut r = 1.0f64;
    while site_potential(p, r) - u_min < 745.0 && r < 1e6 {
        r *= 2.0;
    }
    let weight = |phi: f64| (-(site_potential(p, phi) - u_min)).exp();
    let den = adaptive_simpson(&weight, 0.0, r, 1e-12, 1e-280);
    let num = adaptive_simpson(
        &|phi: f64| phi.powi(power as i32) * weight(phi),
        0.0,
        r,
        1e-12,
        1e-280,
    );
    if !(den > 0.0) || !den.is_finite() || !num.is_finite() {
        return Err(Error::NonFinite {
            context: "site moment quadrature",
        });
    }
    Ok(num / den)
}

// ═══════════════════════════════════════════════════════════════════════════
// The sigma_c -> 0 limit
// ═══════════════════════════════════════════════════════════════════════════

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "kebab-case")]
pub enum SweepProtocol {
    /// d = 0 exact route; deviations resolvable far below Monte Carlo noise.
    Quadrature,
    /// Metropolis chains, one per sigma value.
    Sampling {
        sweeps: u64,
        burn_in: u64,
        measure_every: u64,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SigmaSweepRow {
    pub sigma: f64,
    pub phi2: f64,
    pub phi2_error: f64,
    pub phi4: f64,
    pub phi8: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaSweepTable {
    pub rows: Vec<SigmaSweepRow>,
    /// <phi^2> of the plain phi^4 theory (sigma_c = 0), same protocol.
    pub baseline_phi2: f64,
    /// Log-log slope of |<phi^2>(sigma) - baseline| vs sigma, over the rows
    /// with sigma > 0 and a nonzero deviation. The smeared action differs
    /// from the plain one at order sigma^2, so the slope sits near 2.
    pub fit_exponent: Option<f64>,
}

/// Observables against sigma_c with everything else frozen. Requires
/// lambda0 > 0 so the sigma = 0 endpoint is itself a stable theory.
pub fn sigma_zero_sweep(
    p_base: &LatticeParams,
    sigma_list: &[f64],
    protocol: SweepProtocol,
) -> Result<SigmaSweepTable> {
    p_base.validate()?;
    if !(p_base.lambda0 > 0.0) {
        return Err(Error::InvalidParam(format!(
            "sigma sweep needs lambda0 > 0 so the sigma = 0 endpoint is stable, got {}",
            p_base.lambda0
        )));
    }
    if sigma_list.is_empty() {
        return Err(Error::TooFewSamples { got: 0, need: 1 });
    }
    if sigma_list.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(Error::InvalidParam(
            "sigma values must be >= 0 and finite".into(),
        ));
    }
    if matches!(protocol, SweepProtocol::Quadrature) && p_base.dimension() != 0 {
        return Err(Error::InvalidParam(
            "quadrature protocol needs the single-site (d = 0) model".into(),
        ));
    }

    let run_at = |sigma: f64| -> Result<SigmaSweepRow> {
        let p = LatticeParams {
            sigma_c: sigma,
            ..p_base.clone()
        };
        match protocol {
            SweepProtocol::Quadrature => Ok(SigmaSweepRow {
                sigma,
                phi2: site_moment_quadrature(&p, 2)?,
                phi2_error: 0.0,
                phi4: site_moment_quadrature(&p, 4)?,
                phi8: site_moment_quadrature(&p, 8)?,
            }),
            SweepProtocol::Sampling {
                sweeps,
                burn_in,
                measure_every,
                seed,
            } => {
                let mut chain = MetropolisChain::new(&p, seed)?;
                chain.burn_in(burn_in)?;
                let samples = chain.sample(sweeps, measure_every)?;
                let stats =
                    measure_observables(&samples, p.n_sites(), chain.acceptance_rate())?;
                Ok(SigmaSweepRow {
                    sigma,
                    phi2: stats.observables.phi2.mean,
                    phi2_error: stats.observables.phi2.error,
                    phi4: stats.observables.phi4.mean,
                    phi8: stats.observables.phi8.mean,
                })
            }
        }
    };

    let baseline = run_at(0.0)?;
    let mut rows = Vec::with_capacity(sigma_list.len());
    for &s in sigma_list {
        rows.push(run_at(s)?);
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in &rows {
        let dev = (row.phi2 - baseline.phi2).abs();
        if row.sigma > 0.0 && dev > 0.0 {
            xs.push(row.sigma);
            ys.push(dev);
        }
    }
    let fit_exponent = if xs.len() >= 2 {
        fit_power_law(&xs, &ys).ok().map(|f| f.exponent)
    } else {
        None
    };

    Ok(SigmaSweepTable {
        rows,
        baseline_phi2: baseline.phi2,
        fit_exponent,
    })
}

// ═══════════════════════════════════════════════════════════════════════════
// Power counting
// ═══════════════════════════════════════════════════════════════════════════

/// Dimensionless strength of the induced phi^8 term at scale mu in d = 4
/// power counting: g8(mu) = sigma_c^2 mu^4. Diagnostic arithmetic only; the
/// operator is irrelevant, its effects die off as mu^4 toward the IR.
pub fn irrelevance_coupling(sigma_c: f64, mu: f64) -> Result<f64> {
    if !(sigma_c >= 0.0) || !sigma_c.is_finite() {
        return Err(Error::InvalidParam(format!(
            "sigma_c must be >= 0, got {sigma_c}"
        )));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParam(format!("mu must be > 0, got {mu}")));
    }
    Ok(sigma_c * sigma_c * mu.powi(4))
}
