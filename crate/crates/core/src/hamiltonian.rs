//! Discretized 1-D Schrödinger operators H = T + V (hbar = 1, central
//! differences, Dirichlet box) for the potentials under study, including the
//! singular ones. Singular potentials want the half-cell-offset grid so no
//! node lands on x = 0.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, ComplexMatrix, SpectralDecomposition};

// ═══════════════════════════════════════════════════════════════════════════
// Grid
// ═══════════════════════════════════════════════════════════════════════════

/// Uniform grid on [x_min, x_max]. Plain grids include both endpoints
/// (spacing (x_max-x_min)/(n-1)); offset grids place nodes at
/// x_min + (k+1/2) h with h = (x_max-x_min)/n, so a symmetric box never
/// puts a node on the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub offset_half_cell: bool,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::InvalidParam("grid endpoints must be finite".into()));
        }
        if !(self.x_min < self.x_max) {
            return Err(Error::InvalidParam(format!(
                "grid needs x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.n_points < 16 {
            return Err(Error::InvalidParam(format!(
                "grid needs n_points >= 16, got {}",
                self.n_points
            )));
        }
        if self.offset_half_cell {
            let h = self.spacing();
            for x in self.positions() {
                if x.abs() <= 1e-9 * h {
                    return Err(Error::InvalidParam(
                        "offset grid placed a node at x = 0; adjust box or point count".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        if self.offset_half_cell {
            (self.x_max - self.x_min) / self.n_points as f64
        } else {
            (self.x_max - self.x_min) / (self.n_points - 1) as f64
        }
    }

    pub fn positions(&self) -> Vec<f64> {
        let h = self.spacing();
        if self.offset_half_cell {
            (0..self.n_points)
                .map(|k| self.x_min + (k as f64 + 0.5) * h)
                .collect()
        } else {
            (0..self.n_points)
                .map(|k| self.x_min + k as f64 * h)
                .collect()
        }
    }
}

/// Validated node positions.
pub fn build_grid(grid: &GridSpec) -> Result<Vec<f64>> {
    grid.validate()?;
    Ok(grid.positions())
}

// ═══════════════════════════════════════════════════════════════════════════
// Potentials
// ═══════════════════════════════════════════════════════════════════════════

/// Harmonic well (1/2) m w^2 x^2, used standalone and as spike confinement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicWell {
    pub mass: f64,
    pub omega: f64,
}

impl HarmonicWell {
    fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.omega.is_finite() {
            return Err(Error::InvalidParam(format!(
                "harmonic well needs mass > 0 and finite omega, got (m={}, w={})",
                self.mass, self.omega
            )));
        }
        Ok(())
    }

    fn eval(&self, x: f64) -> f64 {
        0.5 * self.mass * self.omega * self.omega * x * x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PotentialSpec {
    Free,
    /// Uniform shift; handy for spectrum-shift checks.
    Constant { value: f64 },
    Harmonic { mass: f64, omega: f64 },
    /// 0 on [0, width], -depth outside; the outside region is the well.
    StepWell { width: f64, depth: f64 },
    /// strength / |x|.
    Coulomb { strength: f64 },
    /// strength * |x|^(-exponent), optionally confined by a harmonic well.
    Spike {
        strength: f64,
        exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        confinement: Option<HarmonicWell>,
    },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialSpec::Free => Ok(()),
            PotentialSpec::Constant { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParam("constant potential must be finite".into()))
                }
            }
            PotentialSpec::Harmonic { mass, omega } => HarmonicWell { mass, omega }.validate(),
            PotentialSpec::StepWell { width, depth } => {
                if !(width > 0.0) || !(depth > 0.0) {
                    return Err(Error::InvalidParam(format!(
                        "step well needs width > 0 and depth > 0, got (a={width}, V0={depth})"
                    )));
                }
                Ok(())
            }
            PotentialSpec::Coulomb { strength } => {
                if strength.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParam("coulomb strength must be finite".into()))
                }
            }
            PotentialSpec::Spike {
                strength,
                exponent,
                confinement,
            } => {
                if !strength.is_finite() {
                    return Err(Error::InvalidParam("spike strength must be finite".into()));
                }
                if !(exponent > 0.0 && exponent <= 2.0) {
                    return Err(Error::InvalidParam(format!(
                        "spike exponent must lie in (0, 2], got {exponent}"
                    )));
                }
                if let Some(c) = confinement {
                    c.validate()?;
                }
                Ok(())
            }
        }
    }

    /// True when V diverges at x = 0 (wants the offset grid).
    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            PotentialSpec::Coulomb { .. } | PotentialSpec::Spike { .. }
        )
    }
}

/// V(x). Errors at the singular point of coulomb/spike potentials.
pub fn evaluate_potential(p: &PotentialSpec, x: f64) -> Result<f64> {
    match *p {
        PotentialSpec::Free => Ok(0.0),
        PotentialSpec::Constant { value } => Ok(value),
        PotentialSpec::Harmonic { mass, omega } => Ok(HarmonicWell { mass, omega }.eval(x)),
        PotentialSpec::StepWell { width, depth } => {
            if (0.0..=width).contains(&x) {
                Ok(0.0)
            } else {
                Ok(-depth)
            }
        }
        PotentialSpec::Coulomb { strength } => {
            if x == 0.0 {
                return Err(Error::Domain(
                    "coulomb potential evaluated at its singularity x = 0".into(),
                ));
            }
            Ok(strength / x.abs())
        }
        PotentialSpec::Spike {
            strength,
            exponent,
            confinement,
        } => {
            if x == 0.0 {
                return Err(Error::Domain(
                    "spike potential evaluated at its singularity x = 0".into(),
                ));
            }
            let well = confinement.map_or(0.0, |c| c.eval(x));
            Ok(strength * x.abs().powf(-exponent) + well)
        }
    }
}

// ═══════════════════════════════════════════════════════════════════════════
// Hamiltonian
// ═══════════════════════════════════════════════════════════════════════════

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub mass: f64,
}

impl HamiltonianSpec {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.potential.validate()?;
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::InvalidParam(format!(
                "particle mass must be positive and finite, got {}",
                self.mass
            )));
        }
        Ok(())
    }
}

/// H = -(1/2m) d^2/dx^2 + V on the grid: central differences, Dirichlet walls.
/// Real symmetric by construction, stored as complex for the spectral layer.
pub fn build_hamiltonian(spec: &HamiltonianSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let xs = spec.grid.positions();
    let h = spec.grid.spacing();
    let n = xs.len();
    let kin_diag = 1.0 / (spec.mass * h * h);
    let kin_off = -0.5 / (spec.mass * h * h);
    let mut v = Vec::with_capacity(n);
    for &x in &xs {
        v.push(evaluate_potential(&spec.potential, x)?);
    }
    let mut m = ComplexMatrix::zeros(n, n);
    for (i, &vi) in v.iter().enumerate() {
        m.set(i, i, Complex64::new(kin_diag + vi, 0.0));
        if i + 1 < n {
            m.set(i, i + 1, Complex64::new(kin_off, 0.0));
            m.set(i + 1, i, Complex64::new(kin_off, 0.0));
        }
    }
    Ok(m)
}

/// A Hamiltonian with its grid data and spectral decomposition.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    spec: HamiltonianSpec,
    positions: Vec<f64>,
    h_cell: f64,
    matrix: ComplexMatrix,
    decomposition: SpectralDecomposition,
}

impl Hamiltonian {
    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn h_cell(&self) -> f64 {
        self.h_cell
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    pub fn dim(&self) -> usize {
        self.positions.len()
    }

    /// Grid eigenfunction values phi_n(x_i) = V_in / sqrt(h_cell), normalized
    /// so that h_cell * sum_i |phi_n(x_i)|^2 = 1 (continuum convention).
    pub fn eigenfunction(&self, n: usize) -> Vec<Complex64> {
        let v = self.decomposition.eigenvectors();
        let scale = 1.0 / self.h_cell.sqrt();
        (0..self.dim()).map(|i| v.get(i, n) * scale).collect()
    }
}

/// Build and decompose in one step.
pub fn decompose(spec: &HamiltonianSpec) -> Result<Hamiltonian> {
    let matrix = build_hamiltonian(spec)?;
    let decomposition = eig_hermitian(&matrix)?;
    Ok(Hamiltonian {
        positions: spec.grid.positions(),
        h_cell: spec.grid.spacing(),
        spec: spec.clone(),
        matrix,
        decomposition,
    })
}
