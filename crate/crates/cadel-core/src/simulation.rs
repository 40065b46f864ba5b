//! Discrete-time simulation of a position-controlled flexion/extension
//! exercise: minimum-jerk reference, gravity-feedforward PD control at a
//! fixed sampling time, and a rigid single-DoF forearm plant integrated with
//! semi-implicit Euler. One control update per integration step.

use crate::geometry::{DeviceConfig, JointState, RangeOfMotion};
use crate::kinematics::{cable_state, check_rom};
use crate::statics::{gravity_torque, tension_distribution, LoadCase};
use crate::{Error, Result};

/// Position controller gains and timing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Proportional gain, N m/rad.
    pub kp: f64,
    /// Derivative gain, N m s/rad.
    pub kd: f64,
    /// Sampling time, s.
    pub dt: f64,
    /// Torque command saturation, N m.
    pub torque_saturation: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            kp: 40.0,
            kd: 4.0,
            dt: 0.006,
            torque_saturation: 30.0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if !(self.kp.is_finite() && self.kp > 0.0) {
            violations.push("kp: must be > 0".to_owned());
        }
        if !(self.kd.is_finite() && self.kd >= 0.0) {
            violations.push("kd: must be >= 0".to_owned());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            violations.push("dt: must be > 0".to_owned());
        }
        if !(self.torque_saturation.is_finite() && self.torque_saturation > 0.0) {
            violations.push("torque_saturation: must be > 0".to_owned());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidGeometry { violations })
        }
    }
}

/// Reference profile family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrajectoryProfile {
    #[default]
    MinimumJerk,
}

/// A cyclic rise-hold-return exercise between two flexion levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub alpha_start: f64,
    pub alpha_end: f64,
    /// Duration of the rise (and of the return), s.
    pub rise_time: f64,
    /// Dwell at `alpha_end` between rise and return, s.
    pub hold_time: f64,
    /// Number of rise-hold-return cycles.
    pub cycles: usize,
    pub profile: TrajectoryProfile,
}

impl TrajectorySpec {
    /// The standard exercise: one 0 -> 60 deg cycle lasting 4 s.
    pub fn default_exercise() -> Self {
        TrajectorySpec {
            alpha_start: 0.0,
            alpha_end: 60.0f64.to_radians(),
            rise_time: 1.75,
            hold_time: 0.5,
            cycles: 1,
            profile: TrajectoryProfile::MinimumJerk,
        }
    }

    pub fn cycle_duration(&self) -> f64 {
        2.0 * self.rise_time + self.hold_time
    }

    pub fn duration(&self) -> f64 {
        self.cycle_duration() * self.cycles as f64
    }

    fn validate(&self, rom: &RangeOfMotion) -> Result<()> {
        if !(self.rise_time.is_finite() && self.rise_time > 0.0) {
            return Err(Error::Config("trajectory rise_time must be > 0".to_owned()));
        }
        if !(self.hold_time.is_finite() && self.hold_time >= 0.0) {
            return Err(Error::Config("trajectory hold_time must be >= 0".to_owned()));
        }
        if self.cycles < 1 {
            return Err(Error::Config("trajectory cycles must be >= 1".to_owned()));
        }
        let mut violations = Vec::new();
        for (label, value) in [("start", self.alpha_start), ("end", self.alpha_end)] {
            for v in check_rom(&JointState::at_angles(value, 0.0), rom) {
                violations.push(format!("trajectory {label}: {v}"));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::RomViolation { violations })
        }
    }
}

/// Minimum-jerk unit blend `s(u)` and its derivative, `u` in [0, 1].
fn minimum_jerk(u: f64) -> (f64, f64) {
    let u = u.clamp(0.0, 1.0);
    let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u);
    (s, ds)
}

/// Desired flexion and flexion rate of `spec` at time `t`.
pub fn trajectory_at(spec: &TrajectorySpec, t: f64) -> (f64, f64) {
    let cycle = spec.cycle_duration();
    let k = ((t / cycle).floor().max(0.0) as usize).min(spec.cycles.saturating_sub(1));
    let tc = t - cycle * k as f64;
    let delta = spec.alpha_end - spec.alpha_start;

    if tc < spec.rise_time {
        let (s, ds) = minimum_jerk(tc / spec.rise_time);
        (
            spec.alpha_start + delta * s,
            delta * ds / spec.rise_time,
        )
    } else if tc < spec.rise_time + spec.hold_time {
        (spec.alpha_end, 0.0)
    } else {
        let (s, ds) = minimum_jerk((tc - spec.rise_time - spec.hold_time) / spec.rise_time);
        (
            spec.alpha_end - delta * s,
            -delta * ds / spec.rise_time,
        )
    }
}

/// A trajectory sampled at `dt`: `floor(duration/dt) + 1` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub dt: f64,
    pub alpha: Vec<f64>,
    pub alpha_dot: Vec<f64>,
}

/// Samples the desired flexion profile, validating the endpoints against the
/// range of motion.
pub fn generate_trajectory(
    spec: &TrajectorySpec,
    dt: f64,
    rom: &RangeOfMotion,
) -> Result<SampledTrajectory> {
    spec.validate(rom)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config("dt must be > 0".to_owned()));
    }
    let steps = (spec.duration() / dt).floor() as usize;
    let mut alpha = Vec::with_capacity(steps + 1);
    let mut alpha_dot = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let (a, v) = trajectory_at(spec, k as f64 * dt);
        alpha.push(a);
        alpha_dot.push(v);
    }
    Ok(SampledTrajectory {
        dt,
        alpha,
        alpha_dot,
    })
}

/// Rigid-plant constants not carried by the load case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Forearm segment length (rod inertia `m L^2 / 3`), m.
    pub forearm_length: f64,
    /// Viscous joint damping, N m s/rad.
    pub damping: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            forearm_length: 0.25,
            damping: 0.05,
        }
    }
}

/// Inertia about the elbow: uniform forearm rod plus point payload.
pub fn plant_inertia(load: &LoadCase, params: &PlantParams) -> f64 {
    load.forearm_mass * params.forearm_length.powi(2) / 3.0
        + load.payload_mass * load.payload_distance.powi(2)
}

/// One semi-implicit Euler step of the forearm about the flexion axis;
/// `beta` is held constant.
pub fn plant_step(
    state: &JointState,
    applied_torque: f64,
    load: &LoadCase,
    params: &PlantParams,
    dt: f64,
) -> JointState {
    let inertia = plant_inertia(load, params);
    let accel = (applied_torque - gravity_torque(load, state.alpha) - params.damping * state.alpha_dot)
        / inertia;
    let alpha_dot = state.alpha_dot + dt * accel;
    JointState {
        alpha: state.alpha + dt * alpha_dot,
        beta: state.beta,
        alpha_dot,
        beta_dot: 0.0,
    }
}

/// One logged sample of a simulated exercise.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub t: f64,
    pub alpha_desired: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lengths: Vec<f64>,
    pub tensions: Vec<f64>,
    pub motor_torques: Vec<f64>,
    /// Instantaneous mechanical power drawn by the motors, W (>= 0).
    pub power: f64,
}

/// Run summary over all samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExerciseSummary {
    /// Time-averaged power over the run, W.
    pub average_power: f64,
    /// Peak motor torque over all cables and samples, N m.
    pub peak_motor_torque: f64,
    /// RMS of `alpha_desired - alpha`, rad.
    pub rms_tracking_error: f64,
}

/// Full time series of a simulated exercise plus its summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ExerciseRecord {
    pub dt: f64,
    pub cable_count: usize,
    pub rows: Vec<SampleRow>,
    pub summary: ExerciseSummary,
}

impl ExerciseRecord {
    pub fn duration(&self) -> f64 {
        (self.rows.len() - 1) as f64 * self.dt
    }

    /// Peak motor torque of one cable over the run.
    pub fn peak_motor_torque_of(&self, cable: usize) -> f64 {
        self.rows
            .iter()
            .map(|r| r.motor_torques[cable])
            .fold(0.0, f64::max)
    }

    /// CSV header for a record with `cable_count` cables.
    pub fn csv_header(cable_count: usize) -> String {
        let mut header = String::from("t_s,alpha_des_deg,alpha_deg,beta_deg");
        for i in 0..cable_count {
            header.push_str(&format!(",l{i}_m"));
        }
        for i in 0..cable_count {
            header.push_str(&format!(",T{i}_N"));
        }
        for i in 0..cable_count {
            header.push_str(&format!(",tau{i}_Nm"));
        }
        header.push_str(",P_W");
        header
    }

    /// The record as CSV with the documented schema (angles in degrees).
    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.cable_count);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{:.6},{:.6},{:.6},{:.6}",
                row.t,
                row.alpha_desired.to_degrees(),
                row.alpha.to_degrees(),
                row.beta.to_degrees()
            ));
            for l in &row.lengths {
                out.push_str(&format!(",{l:.9}"));
            }
            for t in &row.tensions {
                out.push_str(&format!(",{t:.9}"));
            }
            for tau in &row.motor_torques {
                out.push_str(&format!(",{tau:.9}"));
            }
            out.push_str(&format!(",{:.9}\n", row.power));
        }
        out
    }
}

/// Simulates a position-controlled exercise with the default range of motion
/// and plant constants.
pub fn simulate_exercise(
    config: &DeviceConfig,
    load: &LoadCase,
    trajectory: &TrajectorySpec,
    controller: &ControllerConfig,
) -> Result<ExerciseRecord> {
    simulate_exercise_with(
        config,
        load,
        trajectory,
        controller,
        &RangeOfMotion::adult_arm(),
        &PlantParams::default(),
    )
}

/// [`simulate_exercise`] with explicit range of motion and plant constants.
///
/// Control law per sample: `tau_c = gravity_torque(load, alpha_d)
/// + kp (alpha_d - alpha) + kd (alpha_d_dot - alpha_dot)`, saturated, mapped
/// to cable tensions by [`tension_distribution`]; the realised flexion torque
/// drives the plant. An infeasible demand aborts with the step index.
pub fn simulate_exercise_with(
    config: &DeviceConfig,
    load: &LoadCase,
    trajectory: &TrajectorySpec,
    controller: &ControllerConfig,
    rom: &RangeOfMotion,
    plant: &PlantParams,
) -> Result<ExerciseRecord> {
    config.validate()?;
    load.validate()?;
    controller.validate()?;
    let reference = generate_trajectory(trajectory, controller.dt, rom)?;
    let samples = reference.alpha.len();
    let dt = controller.dt;

    let mut state = JointState::at_angles(reference.alpha[0], 0.0);
    let mut rows: Vec<SampleRow> = Vec::with_capacity(samples);

    for k in 0..samples {
        let alpha_d = reference.alpha[k];
        let alpha_dot_d = reference.alpha_dot[k];

        let feedforward = gravity_torque(load, alpha_d);
        let command = feedforward
            + controller.kp * (alpha_d - state.alpha)
            + controller.kd * (alpha_dot_d - state.alpha_dot);
        let command = command.clamp(-controller.torque_saturation, controller.torque_saturation);

        let solution = tension_distribution(config, &state, [command, 0.0]).map_err(|e| {
            match e {
                Error::Infeasible { residual } => Error::InfeasibleAtStep {
                    step: k,
                    time: k as f64 * dt,
                    residual,
                },
                other => other,
            }
        })?;

        let cables = cable_state(config, &state)?;
        let mut power = 0.0;
        for i in 0..config.cable_count {
            let length_rate =
                cables.jacobian[i][0] * state.alpha_dot + cables.jacobian[i][1] * state.beta_dot;
            power += (solution.tensions[i] * -length_rate).max(0.0);
        }
        power /= config.motor.efficiency;

        rows.push(SampleRow {
            t: k as f64 * dt,
            alpha_desired: alpha_d,
            alpha: state.alpha,
            beta: state.beta,
            lengths: cables.lengths,
            tensions: solution.tensions,
            motor_torques: solution.motor_torques,
            power,
        });

        if k + 1 < samples {
            // torque actually realised by the excess tensions
            let applied = command - solution.residual_wrench[0];
            state = plant_step(&state, applied, load, plant, dt);
        }
    }

    let duration = (samples - 1) as f64 * dt;
    let energy: f64 = rows[..samples - 1].iter().map(|r| r.power * dt).sum();
    let average_power = if duration > 0.0 { energy / duration } else { 0.0 };
    let peak_motor_torque = rows
        .iter()
        .flat_map(|r| r.motor_torques.iter().copied())
        .fold(0.0, f64::max);
    let rms_tracking_error = (rows
        .iter()
        .map(|r| (r.alpha_desired - r.alpha).powi(2))
        .sum::<f64>()
        / samples as f64)
        .sqrt();

    Ok(ExerciseRecord {
        dt,
        cable_count: config.cable_count,
        rows,
        summary: ExerciseSummary {
            average_power,
            peak_motor_torque,
            rms_tracking_error,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_preset, DeviceVersion};
    use approx::assert_relative_eq;

    #[test]
    fn constant_trajectory_is_flat() {
        let spec = TrajectorySpec {
            alpha_start: 0.3,
            alpha_end: 0.3,
            rise_time: 1.0,
            hold_time: 0.5,
            cycles: 2,
            profile: TrajectoryProfile::MinimumJerk,
        };
        let traj = generate_trajectory(&spec, 0.006, &RangeOfMotion::adult_arm()).unwrap();
        assert!(traj.alpha.iter().all(|a| (a - 0.3).abs() < 1e-15));
        assert!(traj.alpha_dot.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn minimum_jerk_midpoint_symmetry() {
        let spec = TrajectorySpec {
            alpha_start: 0.0,
            alpha_end: 60.0f64.to_radians(),
            rise_time: 2.0,
            hold_time: 0.0,
            cycles: 1,
            profile: TrajectoryProfile::MinimumJerk,
        };
        let (mid, _) = trajectory_at(&spec, 1.0);
        assert_relative_eq!(mid, 30.0f64.to_radians(), epsilon = 1e-12);
    }

    #[test]
    fn minimum_jerk_peak_velocity() {
        // peak rate of the blend is 15/8 * delta / T, at mid-rise
        let delta = 60.0f64.to_radians();
        let spec = TrajectorySpec {
            alpha_start: 0.0,
            alpha_end: delta,
            rise_time: 2.0,
            hold_time: 0.0,
            cycles: 1,
            profile: TrajectoryProfile::MinimumJerk,
        };
        let peak = (0..=2000)
            .map(|k| trajectory_at(&spec, 2.0 * f64::from(k) / 2000.0).1)
            .fold(0.0, f64::max);
        assert_relative_eq!(peak, 1.875 * delta / 2.0, epsilon = 1e-9);
        assert_relative_eq!(peak, 0.982, epsilon = 1e-3);
    }

    #[test]
    fn trajectory_velocity_zero_at_segment_boundaries() {
        let spec = TrajectorySpec::default_exercise();
        for t in [0.0, spec.rise_time, spec.rise_time + spec.hold_time, spec.duration()] {
            assert!(trajectory_at(&spec, t).1.abs() < 1e-12);
        }
    }

    #[test]
    fn row_count_matches_duration() {
        let spec = TrajectorySpec::default_exercise();
        let traj = generate_trajectory(&spec, 0.006, &RangeOfMotion::adult_arm()).unwrap();
        assert_eq!(traj.alpha.len(), (4.0f64 / 0.006).floor() as usize + 1);
    }

    #[test]
    fn out_of_rom_endpoint_rejected() {
        let spec = TrajectorySpec {
            alpha_end: 80.0f64.to_radians(),
            ..TrajectorySpec::default_exercise()
        };
        match generate_trajectory(&spec, 0.006, &RangeOfMotion::adult_arm()) {
            Err(Error::RomViolation { .. }) => {}
            other => panic!("expected RomViolation, got {other:?}"),
        }
    }

    #[test]
    fn plant_equilibrium_at_gravity_torque() {
        let load = LoadCase::with_payload(1.0);
        let params = PlantParams::default();
        let state = JointState::at_angles(0.2, 0.0);
        let next = plant_step(
            &state,
            gravity_torque(&load, 0.2),
            &load,
            &params,
            0.006,
        );
        assert_relative_eq!(next.alpha, state.alpha, epsilon = 1e-15);
        assert_relative_eq!(next.alpha_dot, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn unpowered_forearm_falls() {
        let load = LoadCase::with_payload(0.5);
        let params = PlantParams::default();
        let mut state = JointState::default();
        for _ in 0..100 {
            state = plant_step(&state, 0.0, &load, &params, 0.001);
        }
        assert!(state.alpha < -1e-4);
    }

    #[test]
    fn free_pendulum_period_matches_analytic() {
        // small oscillation about the hanging equilibrium, undamped
        let load = LoadCase::with_payload(0.5);
        let params = PlantParams {
            damping: 0.0,
            ..PlantParams::default()
        };
        let inertia = plant_inertia(&load, &params);
        let expected = std::f64::consts::TAU
            * (inertia / (load.static_moment() * load.gravity)).sqrt();

        let dt = 1e-4;
        let hang = -std::f64::consts::FRAC_PI_2;
        let mut state = JointState::at_angles(hang + 0.01, 0.0);
        let mut crossings = Vec::new();
        let mut prev = state;
        for k in 1..200_000 {
            state = plant_step(&prev, 0.0, &load, &params, dt);
            let (e0, e1) = (prev.alpha - hang, state.alpha - hang);
            if e0 <= 0.0 && e1 > 0.0 {
                crossings.push(k as f64 * dt - dt * e1 / (e1 - e0));
                if crossings.len() == 6 {
                    break;
                }
            }
            prev = state;
        }
        assert!(crossings.len() >= 2, "pendulum did not oscillate");
        let measured =
            (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
        assert!(
            (measured - expected).abs() / expected < 0.02,
            "period {measured} vs analytic {expected}"
        );
    }

    #[test]
    fn regulation_about_feedforward_equilibrium() {
        // zero payload, constant reference: error must die out quickly
        let cfg = build_preset(DeviceVersion::LCadel);
        let load = LoadCase::with_payload(0.0);
        let spec = TrajectorySpec {
            alpha_start: 0.0,
            alpha_end: 0.0,
            rise_time: 1.0,
            hold_time: 0.0,
            cycles: 2,
            profile: TrajectoryProfile::MinimumJerk,
        };
        let record =
            simulate_exercise(&cfg, &load, &spec, &ControllerConfig::default()).unwrap();
        let settle = (1.0 / 0.006) as usize;
        let tail = &record.rows[settle..];
        let rms = (tail
            .iter()
            .map(|r| (r.alpha_desired - r.alpha).powi(2))
            .sum::<f64>()
            / tail.len() as f64)
            .sqrt();
        assert!(rms < 1e-3, "tail RMS {rms}");
    }

    #[test]
    fn heavier_payload_needs_more_torque() {
        let cfg = build_preset(DeviceVersion::LCadel);
        let spec = TrajectorySpec::default_exercise();
        let ctl = ControllerConfig::default();
        let light = simulate_exercise(&cfg, &LoadCase::with_payload(0.5), &spec, &ctl).unwrap();
        let heavy = simulate_exercise(&cfg, &LoadCase::with_payload(2.5), &spec, &ctl).unwrap();
        assert!(
            heavy.summary.peak_motor_torque > light.summary.peak_motor_torque,
            "{} vs {}",
            heavy.summary.peak_motor_torque,
            light.summary.peak_motor_torque
        );
    }

    #[test]
    fn default_exercise_average_power_band() {
        let cfg = build_preset(DeviceVersion::LCadel);
        let record = simulate_exercise(
            &cfg,
            &LoadCase::with_payload(0.5),
            &TrajectorySpec::default_exercise(),
            &ControllerConfig::default(),
        )
        .unwrap();
        let p = record.summary.average_power;
        assert!((0.6..=6.0).contains(&p), "average power {p} W");
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = build_preset(DeviceVersion::LCadel);
        let run = || {
            simulate_exercise(
                &cfg,
                &LoadCase::with_payload(1.5),
                &TrajectorySpec::default_exercise(),
                &ControllerConfig::default(),
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn power_entries_nonnegative_and_sum_to_average() {
        let cfg = build_preset(DeviceVersion::LCadel);
        let record = simulate_exercise(
            &cfg,
            &LoadCase::with_payload(1.0),
            &TrajectorySpec::default_exercise(),
            &ControllerConfig::default(),
        )
        .unwrap();
        assert!(record.rows.iter().all(|r| r.power >= 0.0));
        let energy: f64 = record.rows[..record.rows.len() - 1]
            .iter()
            .map(|r| r.power * record.dt)
            .sum();
        let relative =
            (energy - record.summary.average_power * record.duration()).abs() / energy.max(1e-12);
        assert!(relative < 1e-6);
    }

    #[test]
    fn infeasible_load_aborts_with_step_index() {
        let cfg = build_preset(DeviceVersion::LCadel);
        match simulate_exercise(
            &cfg,
            &LoadCase::with_payload(99.0),
            &TrajectorySpec::default_exercise(),
            &ControllerConfig::default(),
        ) {
            Err(Error::InfeasibleAtStep { step, .. }) => assert_eq!(step, 0),
            other => panic!("expected InfeasibleAtStep, got {other:?}"),
        }
    }

    #[test]
    fn csv_schema() {
        let cfg = build_preset(DeviceVersion::LCadel);
        let record = simulate_exercise(
            &cfg,
            &LoadCase::with_payload(0.5),
            &TrajectorySpec::default_exercise(),
            &ControllerConfig::default(),
        )
        .unwrap();
        let csv = record.to_csv();
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "t_s,alpha_des_deg,alpha_deg,beta_deg,l0_m,l1_m,T0_N,T1_N,tau0_Nm,tau1_Nm,P_W"
        );
        assert_eq!(header.split(',').count(), 5 + 3 * 2);
        assert_eq!(csv.lines().count(), record.rows.len() + 1);
    }
}
