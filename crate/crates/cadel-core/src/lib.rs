//! Simulation and analysis toolkit for cable-driven elbow assisting devices.
//!
//! The crate models a family of two-ring cable-driven devices worn on the
//! upper arm and forearm: servomotors on the arm ring reel cables attached to
//! the forearm ring, assisting elbow flexion/extension (angle `alpha`) while
//! the forearm may pronate/supinate (angle `beta`).
//!
//! Modules:
//! - [`geometry`] — device description, presets, anchor positions;
//! - [`kinematics`] — cable lengths, cable Jacobian, iterative forward kinematics;
//! - [`statics`] — gravity demand, structure matrix, bounded tension distribution;
//! - [`simulation`] — minimum-jerk trajectories, PD position control, single-DoF plant;
//! - [`workspace`] — wrench-feasibility maps and quasi-static torque curves;
//! - [`config_file`] — flat key-value device configuration files.
//!
//! All internal angles are radians and all quantities SI; file and CLI
//! boundaries use degrees.

pub mod config_file;
pub mod geometry;
pub mod kinematics;
pub mod simulation;
pub mod statics;
pub mod workspace;

pub use geometry::{
    anchor_positions, build_preset, DeviceConfig, DeviceVersion, JointState, RangeOfMotion,
};
pub use kinematics::{
    cable_jacobian, check_rom, forward_kinematics, inverse_kinematics, CableLengths,
};
pub use simulation::{
    generate_trajectory, plant_step, simulate_exercise, ControllerConfig, ExerciseRecord,
    PlantParams, TrajectorySpec,
};
pub use statics::{
    gravity_torque, structure_rows, tension_distribution, wrench_feasible, CableSolution,
    LoadCase, StructureMatrix,
};
pub use workspace::{torque_vs_angle, workspace_map, TorqueCurve, WorkspaceGrid};

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A device configuration violates one or more invariants.
    /// Every violation found is listed, not just the first.
    #[error("invalid geometry: {}", violations.join("; "))]
    InvalidGeometry { violations: Vec<String> },

    /// A cable (segment) collapsed below the minimum usable length.
    #[error("degenerate geometry: cable {cable} length {length:.3e} m below 1e-6 m")]
    DegenerateGeometry { cable: usize, length: f64 },

    /// Forward kinematics failed to reach the residual tolerance.
    #[error(
        "forward kinematics did not converge after {iterations} iterations \
         (residual {residual:.3e} m)"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    /// No tension vector within the limits realises the demanded wrench.
    #[error("demand infeasible within tension limits (least-squares residual {residual:.3e} N m)")]
    Infeasible { residual: f64 },

    /// A simulation step hit an infeasible tension demand and aborted.
    #[error(
        "demand infeasible at step {step} (t = {time:.3} s), \
         least-squares residual {residual:.3e} N m"
    )]
    InfeasibleAtStep { step: usize, time: f64, residual: f64 },

    /// A trajectory endpoint lies outside the configured range of motion.
    #[error("range of motion violation: {}", violations.join("; "))]
    RomViolation { violations: Vec<String> },

    /// A configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// True for errors arising from the problem domain (infeasible demand,
    /// non-convergence, RoM violations, degenerate states) rather than from
    /// bad configuration or usage.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::DegenerateGeometry { .. }
                | Error::NoConvergence { .. }
                | Error::Infeasible { .. }
                | Error::InfeasibleAtStep { .. }
                | Error::RomViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
