//! Cable kinematics: inverse kinematics, analytic cable Jacobian and a
//! damped Gauss-Newton forward kinematics.

use nalgebra::{Matrix2, Vector2, Vector3};

use crate::geometry::{
    cable_runs, forearm_axis, DeviceConfig, JointState, RangeOfMotion, MIN_CABLE_LENGTH,
};
use crate::{Error, Result};

/// Per-cable lengths and the cable unit direction at the forearm anchor
/// (pointing from the forearm anchor toward the arm anchor, or toward the
/// guide for guided cables).
#[derive(Debug, Clone, PartialEq)]
pub struct CableLengths {
    pub lengths: Vec<f64>,
    pub directions: Vec<Vector3<f64>>,
}

/// Lengths, directions and the analytic Jacobian in one pass; the public
/// entry points below expose slices of this.
pub(crate) struct CableState {
    pub lengths: Vec<f64>,
    pub directions: Vec<Vector3<f64>>,
    /// rows of d(length)/d(alpha, beta), m/rad
    pub jacobian: Vec<[f64; 2]>,
}

pub(crate) fn cable_state(config: &DeviceConfig, joint: &JointState) -> Result<CableState> {
    let runs = cable_runs(config, joint);
    let axis = forearm_axis(joint.alpha);

    let mut lengths = Vec::with_capacity(runs.len());
    let mut directions = Vec::with_capacity(runs.len());
    let mut jacobian = Vec::with_capacity(runs.len());

    for (i, run) in runs.iter().enumerate() {
        // Last moving segment: forearm anchor -> guide (if any) or arm anchor.
        let target = run.guide.unwrap_or(run.arm);
        let segment = target - run.forearm;
        let seg_len = segment.norm();
        if seg_len < MIN_CABLE_LENGTH {
            return Err(Error::DegenerateGeometry {
                cable: i,
                length: seg_len,
            });
        }
        let unit = segment / seg_len;

        let mut length = seg_len;
        if let Some(guide) = run.guide {
            let feed = run.arm - guide;
            let feed_len = feed.norm();
            if feed_len < MIN_CABLE_LENGTH {
                return Err(Error::DegenerateGeometry {
                    cable: i,
                    length: feed_len,
                });
            }
            length += feed_len;
        }

        // Only the forearm anchor moves with the joint:
        //   dP/dalpha = (-y) x P      (flexion generator)
        //   dP/dbeta  = f(alpha) x P  (pronosupination, following cables only)
        // and d(length)/dq = -unit . dP/dq.
        let p = run.forearm.coords;
        let dp_dalpha = Vector3::new(-p.z, 0.0, p.x);
        let dl_dalpha = -unit.dot(&dp_dalpha);
        let dl_dbeta = if run.follows_beta {
            -unit.dot(&axis.cross(&p))
        } else {
            0.0
        };

        lengths.push(length);
        directions.push(unit);
        jacobian.push([dl_dalpha, dl_dbeta]);
    }

    Ok(CableState {
        lengths,
        directions,
        jacobian,
    })
}

/// Cable lengths and forearm-side unit directions at a joint state.
///
/// Direct cables are the anchor-to-anchor distance; guided cables are the sum
/// of the two straight segments via the guide point.
pub fn inverse_kinematics(config: &DeviceConfig, joint: &JointState) -> Result<CableLengths> {
    let state = cable_state(config, joint)?;
    Ok(CableLengths {
        lengths: state.lengths,
        directions: state.directions,
    })
}

/// Analytic cable Jacobian, rows `[d l_i/d alpha, d l_i/d beta]` in m/rad.
pub fn cable_jacobian(config: &DeviceConfig, joint: &JointState) -> Result<Vec<[f64; 2]>> {
    Ok(cable_state(config, joint)?.jacobian)
}

const FK_TOLERANCE: f64 = 1e-9;
const FK_MAX_ITERATIONS: usize = 100;
// damp the normal matrix when beta is weakly observable
const FK_CONDITION_LIMIT: f64 = 1e12;
const FK_DAMPING: f64 = 1e-9;

/// Recovers the joint state producing `lengths`, starting from `guess`.
///
/// Gauss-Newton on the length residual (least squares when there are more
/// than two cables), with a small diagonal damping when the 2x2 normal
/// matrix becomes ill-conditioned. Converges to the solution nearest the
/// guess; joint rates are carried over from the guess.
pub fn forward_kinematics(
    config: &DeviceConfig,
    lengths: &[f64],
    guess: &JointState,
) -> Result<JointState> {
    assert_eq!(
        lengths.len(),
        config.cable_count,
        "one target length per cable required"
    );
    let mut state = *guess;
    let mut residual_norm = f64::INFINITY;

    for _ in 0..FK_MAX_ITERATIONS {
        let cables = cable_state(config, &state)?;
        let residuals: Vec<f64> = cables
            .lengths
            .iter()
            .zip(lengths)
            .map(|(l, target)| l - target)
            .collect();
        residual_norm = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if residual_norm < FK_TOLERANCE {
            return Ok(state);
        }

        // normal equations of the Gauss-Newton step
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for (row, r) in cables.jacobian.iter().zip(&residuals) {
            jtj[(0, 0)] += row[0] * row[0];
            jtj[(0, 1)] += row[0] * row[1];
            jtj[(1, 1)] += row[1] * row[1];
            jtr[0] += row[0] * r;
            jtr[1] += row[1] * r;
        }
        jtj[(1, 0)] = jtj[(0, 1)];

        if condition_2x2(&jtj) > FK_CONDITION_LIMIT {
            jtj[(0, 0)] += FK_DAMPING;
            jtj[(1, 1)] += FK_DAMPING;
        }
        let step = jtj.lu().solve(&(-jtr)).ok_or(Error::NoConvergence {
            iterations: FK_MAX_ITERATIONS,
            residual: residual_norm,
        })?;

        state.alpha += step[0];
        state.beta += step[1];
    }

    Err(Error::NoConvergence {
        iterations: FK_MAX_ITERATIONS,
        residual: residual_norm,
    })
}

/// Condition number estimate of a symmetric positive semi-definite 2x2.
fn condition_2x2(m: &Matrix2<f64>) -> f64 {
    let a = m[(0, 0)];
    let b = m[(0, 1)];
    let c = m[(1, 1)];
    let mean = 0.5 * (a + c);
    let gap = (0.25 * (a - c).powi(2) + b * b).sqrt();
    let lo = mean - gap;
    let hi = mean + gap;
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// One axis outside its admissible interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RomViolation {
    /// `"alpha"` or `"beta"`.
    pub axis: &'static str,
    pub value: f64,
    pub min: f64,
    pub max: f64,
}

impl std::fmt::Display for RomViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} = {:.2} deg outside [{:.2}, {:.2}] deg",
            self.axis,
            self.value.to_degrees(),
            self.min.to_degrees(),
            self.max.to_degrees()
        )
    }
}

/// Reports every axis outside the (closed) range of motion; empty means the
/// state is inside.
pub fn check_rom(joint: &JointState, rom: &RangeOfMotion) -> Vec<RomViolation> {
    let mut violations = Vec::new();
    if joint.alpha < rom.alpha_min || joint.alpha > rom.alpha_max {
        violations.push(RomViolation {
            axis: "alpha",
            value: joint.alpha,
            min: rom.alpha_min,
            max: rom.alpha_max,
        });
    }
    if joint.beta < rom.beta_min || joint.beta > rom.beta_max {
        violations.push(RomViolation {
            axis: "beta",
            value: joint.beta,
            min: rom.beta_min,
            max: rom.beta_max,
        });
    }
    violations
}
