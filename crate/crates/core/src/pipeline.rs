//! Runs the construction stage by stage: membership and normalization,
//! splitting, assignment, kernel assembly. Fault injection from the
//! configuration is applied between stages.

use crate::assignment::{assign, split_x_v, summability_report, Assignment, SummabilityReport, XvSplit};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::kernel::{BilinearTerm, KernelModel, Series};
use crate::linalg::{ComplexVector, C64};
use crate::splitting::{
    build_split, check_c00, normalize_null_sequence, MembershipReport, Normalization, OperatorEnvironment, SplitSystem,
};
use crate::wavelet::{EvalMode, MotherWavelet, WaveletSystem};

/// Size of the perturbation used by the split and kernel faults.
pub const FAULT_MAGNITUDE: f64 = 1e-3;

/// Membership report and normalized null sequence.
#[derive(Clone, Debug)]
pub struct Inspection {
    /// The operator after optional padding.
    pub environment: OperatorEnvironment,
    pub membership: MembershipReport,
    pub normalization: Normalization,
}

/// Pads to the configured ambient dimension, checks membership and
/// normalizes the null sequence.
pub fn inspect(env: &OperatorEnvironment, config: &PipelineConfig) -> Result<Inspection> {
    let environment = match config.ambient_dim {
        Some(dim) => env.padded(dim)?,
        None => env.clone(),
    };
    let membership = check_c00(&environment, config.membership_tolerance);
    if !membership.member {
        return Err(Error::Infeasible(format!(
            "the null sequence is not annihilated by S and S* at its final index \
             (‖Se‖ = {:e}, ‖S*e‖ = {:e}, tolerance {:e})",
            membership.forward_norms.last().copied().unwrap_or(f64::NAN),
            membership.adjoint_norms.last().copied().unwrap_or(f64::NAN),
            config.membership_tolerance
        )));
    }
    let normalization = normalize_null_sequence(&environment)?;
    Ok(Inspection {
        environment,
        membership,
        normalization,
    })
}

/// Enumeration radius: one dyadic shell per basis vector, at least four.
pub fn enumeration_radius(dim: usize) -> usize {
    dim.max(4)
}

/// Wavelet system sized for an operator of dimension `dim`.
pub fn wavelet_system(dim: usize, config: &PipelineConfig) -> Result<WaveletSystem> {
    let mother = MotherWavelet::with_panels(config.i_max, config.quadrature.mother_panels);
    WaveletSystem::from_mother(mother, enumeration_radius(dim))
}

/// Every artifact of a full run.
#[derive(Debug)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub inspection: Inspection,
    pub split: SplitSystem,
    pub wavelets: WaveletSystem,
    pub xv: XvSplit,
    pub assignment: Assignment,
    pub summability: SummabilityReport,
    pub model: KernelModel,
}

impl Pipeline {
    pub fn build(env: &OperatorEnvironment, config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        let wavelets = wavelet_system(config.ambient_dim.unwrap_or(env.dim()).max(env.dim()), config)?;
        Self::build_with(env, config, wavelets)
    }

    /// Same as [`Pipeline::build`] but reuses an existing wavelet system,
    /// which must carry at least `config.i_max` derivative orders.
    pub fn build_with(env: &OperatorEnvironment, config: &PipelineConfig, wavelets: WaveletSystem) -> Result<Self> {
        let inspection = inspect(env, config)?;
        let normalized = &inspection.normalization.environment;
        let mut split = build_split(normalized)?;
        if config.fault.corrupt_split {
            let col = normalized.null_indices()[0];
            let z = split.forward.get(0, col);
            split.forward.set(0, col, z + C64::new(FAULT_MAGNITUDE, 0.0));
        }
        let xv = split_x_v(normalized, &split, &wavelets, config.i_max, config.min_x)?;
        let mut assignment = assign(normalized, &xv, &wavelets)?;
        let summability = summability_report(&assignment, normalized, &xv, &wavelets, config.i_max)?;
        let mut model = KernelModel::build(normalized, &split, &assignment, &wavelets)?.with_cap(config.cap_terms);
        if let Some([a, b]) = config.fault.swap_u_rows {
            let dim = assignment.dim();
            if a >= dim || b >= dim {
                return Err(Error::Config(format!(
                    "fault.swap_u_rows [{a}, {b}] out of range for dimension {dim}"
                )));
            }
            assignment.unitary.swap_rows(a, b);
        }
        if config.fault.corrupt_kernel {
            corrupt_kernel(&mut model);
        }
        Ok(Pipeline {
            config: config.clone(),
            inspection,
            split,
            wavelets,
            xv,
            assignment,
            summability,
            model,
        })
    }

    /// The operator the construction was carried out for (padded, with
    /// the normalized null sequence).
    pub fn environment(&self) -> &OperatorEnvironment {
        &self.inspection.normalization.environment
    }

    /// Grid evaluation mode selected by the configuration.
    pub fn eval_mode(&self) -> EvalMode {
        if self.config.grid.tabulated {
            EvalMode::Tabulated
        } else {
            EvalMode::Direct
        }
    }
}

fn corrupt_kernel(model: &mut KernelModel) {
    let dim = model.dim();
    let terms = model.terms_mut(Series::P);
    match terms.first_mut() {
        Some(term) => {
            let mut right = term.right.clone().into_inner();
            right[0] += C64::new(FAULT_MAGNITUDE, 0.0);
            term.right = ComplexVector::new(right).expect("finite");
        }
        None => {
            let unit = ComplexVector::unit(dim, 0).expect("non-empty");
            terms.push(BilinearTerm {
                weight: FAULT_MAGNITUDE,
                left: unit.clone(),
                right: unit,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::kernel::Orientation;

    #[test]
    fn zero_fixture_builds() {
        let p = Pipeline::build(&fixtures::zero_operator(), &PipelineConfig::default()).unwrap();
        assert_eq!(p.assignment.dim(), 4);
        assert!(!p.summability.violation);
        assert_eq!(
            p.model.eval(&p.wavelets, Orientation::Kernel, 0.1, 0.2, 0, 0).unwrap(),
            C64::new(0.0, 0.0)
        );
    }

    #[test]
    fn padding_extends_the_complement() {
        let config = PipelineConfig {
            ambient_dim: Some(6),
            ..PipelineConfig::default()
        };
        let p = Pipeline::build(&fixtures::zero_operator(), &config).unwrap();
        assert_eq!(p.environment().dim(), 6);
        assert_eq!(p.environment().complement_indices(), &[2, 3, 4, 5]);
    }

    #[test]
    fn non_member_is_infeasible() {
        // the last null index is not annihilated
        let env = fixtures::geometric(3);
        assert!(matches!(
            Pipeline::build(&env, &PipelineConfig::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn swap_fault_out_of_range() {
        let mut config = PipelineConfig::default();
        config.fault.swap_u_rows = Some([0, 9]);
        assert!(matches!(
            Pipeline::build(&fixtures::zero_operator(), &config),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn kernel_fault_breaks_zero_kernel() {
        let mut config = PipelineConfig::default();
        config.fault.corrupt_kernel = true;
        let p = Pipeline::build(&fixtures::zero_operator(), &config).unwrap();
        let s = 0.3;
        let k = p.model.eval(&p.wavelets, Orientation::Kernel, s, s, 0, 0).unwrap();
        let ks = p.model.eval(&p.wavelets, Orientation::Adjoint, s, s, 0, 0).unwrap();
        assert!((k - ks.conj()).norm() > 0.0);
    }
}
