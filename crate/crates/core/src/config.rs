//! Pipeline configuration, read from TOML. Every field has a default, so an
//! empty document is a valid configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Highest derivative order carried through the construction.
    pub i_max: usize,
    pub seed: u64,
    /// Keep only this many terms of each kernel series.
    pub cap_terms: Option<usize>,
    /// Minimum number of null indices that must qualify as `x`.
    pub min_x: usize,
    /// Pad the operator with annihilated complement vectors up to this
    /// dimension.
    pub ambient_dim: Option<usize>,
    pub membership_tolerance: f64,
    pub quadrature: QuadratureConfig,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub samples: SampleCounts,
    pub fault: FaultConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            i_max: 3,
            seed: 20_240_917,
            cap_terms: None,
            min_x: 0,
            ambient_dim: None,
            membership_tolerance: 1e-12,
            quadrature: QuadratureConfig::default(),
            grid: GridConfig::default(),
            tolerances: Tolerances::default(),
            samples: SampleCounts::default(),
            fault: FaultConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss-Legendre panels (16 nodes each) over the bell support.
    pub mother_panels: usize,
    /// Nodes per panel of the verification rules.
    pub order: usize,
    pub start_panels: usize,
    pub max_panels: usize,
    /// Refinement stops once successive estimates differ by less.
    pub tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            mother_panels: 32,
            order: 16,
            start_panels: 64,
            max_panels: 4096,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Points per axis of exported grids.
    pub resolution: usize,
    /// Half-width of the central region `|s|, |t| ≤ extent`.
    pub extent: f64,
    /// Half-width of the truncated line used by quadratures and sup scans.
    pub window: f64,
    /// Inner radius of the vanishing frame `frame ≤ |s| ≤ window`.
    pub frame: f64,
    /// Spacing of sup scans.
    pub sup_spacing: f64,
    /// Spacing of the continuity scan of the Carleman functions.
    pub continuity_step: f64,
    /// Derivative orders `(i, j)` written by `eval`.
    pub derivatives: Vec<[usize; 2]>,
    /// Interpolate the mother wavelet from a dense table for grid work.
    pub tabulated: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            resolution: 64,
            extent: 10.0,
            window: 60.0,
            frame: 40.0,
            sup_spacing: 0.05,
            continuity_step: 1e-2,
            derivatives: vec![[0, 0]],
            tabulated: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub gram: f64,
    pub svd: f64,
    pub schwarz: f64,
    pub splitting: f64,
    pub isometry: f64,
    pub stored_norm: f64,
    pub action: f64,
    pub symmetry: f64,
    pub smoothness: f64,
    pub basis_derivative: f64,
    pub parseval: f64,
    pub vanishing: f64,
    pub interpolation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gram: 5e-6,
            svd: 1e-10,
            schwarz: 1e-9,
            splitting: 1e-10,
            isometry: 1e-14,
            stored_norm: 1e-10,
            action: 1e-4,
            symmetry: 1e-9,
            smoothness: 1e-4,
            basis_derivative: 1e-5,
            parseval: 1e-5,
            vanishing: 1e-5,
            interpolation: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleCounts {
    pub gram_functions: usize,
    pub schwarz_vectors: usize,
    pub isometry_pairs: usize,
    pub action_tests: usize,
    pub action_points: usize,
    pub action_span: usize,
    pub symmetry_points: usize,
    pub smoothness_points: usize,
    pub basis_derivative_points: usize,
    pub parseval_points: usize,
    pub certificate_points: usize,
    pub interpolation_points: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            gram_functions: 12,
            schwarz_vectors: 100,
            isometry_pairs: 50,
            action_tests: 5,
            action_points: 20,
            action_span: 8,
            symmetry_points: 100,
            smoothness_points: 20,
            basis_derivative_points: 10,
            parseval_points: 10,
            certificate_points: 4096,
            interpolation_points: 200,
        }
    }
}

/// Deliberate corruptions, one per pipeline stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultConfig {
    /// Swap two rows of the unitary after assignment.
    pub swap_u_rows: Option<[usize; 2]>,
    /// Perturb one entry of `J` after splitting.
    pub corrupt_split: bool,
    /// Perturb one coefficient of the `P` series.
    pub corrupt_kernel: bool,
}

impl FaultConfig {
    pub fn any(&self) -> bool {
        self.swap_u_rows.is_some() || self.corrupt_split || self.corrupt_kernel
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |span| line_column(text, span.start));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &'static str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Field {
                    field,
                    message: format!("must be positive and finite, got {v}"),
                })
            }
        };
        if self.i_max > 8 {
            return Err(Error::Field {
                field: "i_max",
                message: format!("at most 8 derivative orders are supported, got {}", self.i_max),
            });
        }
        positive("membership_tolerance", self.membership_tolerance)?;
        positive("grid.extent", self.grid.extent)?;
        positive("grid.window", self.grid.window)?;
        positive("grid.frame", self.grid.frame)?;
        positive("grid.sup_spacing", self.grid.sup_spacing)?;
        positive("grid.continuity_step", self.grid.continuity_step)?;
        positive("quadrature.tolerance", self.quadrature.tolerance)?;
        if self.grid.frame >= self.grid.window {
            return Err(Error::Field {
                field: "grid.frame",
                message: "the vanishing frame must lie inside the window".into(),
            });
        }
        if self.grid.resolution == 0 {
            return Err(Error::Field {
                field: "grid.resolution",
                message: "must be at least 1".into(),
            });
        }
        if self.quadrature.mother_panels == 0 || self.quadrature.order == 0 || self.quadrature.start_panels == 0 {
            return Err(Error::Field {
                field: "quadrature",
                message: "panel and node counts must be positive".into(),
            });
        }
        if let Some(&[i, j]) = self
            .grid
            .derivatives
            .iter()
            .find(|[i, j]| *i > self.i_max || *j > self.i_max)
        {
            return Err(Error::Field {
                field: "grid.derivatives",
                message: format!("order ({i}, {j}) exceeds i_max {}", self.i_max),
            });
        }
        let t = &self.tolerances;
        for (field, v) in [
            ("tolerances.gram", t.gram),
            ("tolerances.svd", t.svd),
            ("tolerances.schwarz", t.schwarz),
            ("tolerances.splitting", t.splitting),
            ("tolerances.isometry", t.isometry),
            ("tolerances.stored_norm", t.stored_norm),
            ("tolerances.action", t.action),
            ("tolerances.symmetry", t.symmetry),
            ("tolerances.smoothness", t.smoothness),
            ("tolerances.basis_derivative", t.basis_derivative),
            ("tolerances.parseval", t.parseval),
            ("tolerances.vanishing", t.vanishing),
            ("tolerances.interpolation", t.interpolation),
        ] {
            positive(field, v)?;
        }
        Ok(())
    }
}

/// 1-based line and column of a byte offset.
pub(crate) fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
