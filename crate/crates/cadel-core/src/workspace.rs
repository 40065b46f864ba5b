//! Wrench-feasible workspace maps and quasi-static load-sweep torque curves.

use crate::geometry::{DeviceConfig, JointState, RangeOfMotion};
use crate::statics::{gravity_torque, tension_distribution, wrench_feasible, LoadCase};

/// Feasibility over a uniform `(alpha, beta)` grid, with the total tension of
/// the distribution at each feasible cell.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceGrid {
    /// Alpha samples, rad (uniform, inclusive of both bounds).
    pub alpha: Vec<f64>,
    /// Beta samples, rad.
    pub beta: Vec<f64>,
    /// Row-major `[alpha-index][beta-index]` feasibility flags.
    pub feasible: Vec<bool>,
    /// Total cable tension per cell, N; `None` at infeasible cells.
    pub total_tension: Vec<Option<f64>>,
}

impl WorkspaceGrid {
    pub fn cell(&self, alpha_index: usize, beta_index: usize) -> usize {
        alpha_index * self.beta.len() + beta_index
    }

    /// Fraction of grid cells that are wrench-feasible.
    pub fn feasible_fraction(&self) -> f64 {
        if self.feasible.is_empty() {
            return 0.0;
        }
        self.feasible.iter().filter(|f| **f).count() as f64 / self.feasible.len() as f64
    }

    /// CSV export: one row per cell, `alpha_deg,beta_deg,feasible,total_tension_N`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha_deg,beta_deg,feasible,total_tension_N\n");
        for (i, &alpha) in self.alpha.iter().enumerate() {
            for (j, &beta) in self.beta.iter().enumerate() {
                let cell = self.cell(i, j);
                let tension = self.total_tension[cell]
                    .map(|t| format!("{t:.9}"))
                    .unwrap_or_default();
                out.push_str(&format!(
                    "{:.6},{:.6},{},{}\n",
                    alpha.to_degrees(),
                    beta.to_degrees(),
                    u8::from(self.feasible[cell]),
                    tension
                ));
            }
        }
        out
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "at least two samples per axis required");
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluates [`wrench_feasible`] on a `resolution_alpha x resolution_beta`
/// grid over the range of motion, recording total tension where feasible.
pub fn workspace_map(
    config: &DeviceConfig,
    load: &LoadCase,
    resolution_alpha: usize,
    resolution_beta: usize,
    rom: &RangeOfMotion,
) -> WorkspaceGrid {
    let alpha = linspace(rom.alpha_min, rom.alpha_max, resolution_alpha);
    let beta = linspace(rom.beta_min, rom.beta_max, resolution_beta);
    let mut feasible = Vec::with_capacity(alpha.len() * beta.len());
    let mut total_tension = Vec::with_capacity(alpha.len() * beta.len());

    for &a in &alpha {
        for &b in &beta {
            let joint = JointState::at_angles(a, b);
            let demand = [gravity_torque(load, a), 0.0];
            match tension_distribution(config, &joint, demand) {
                Ok(solution) => {
                    feasible.push(true);
                    total_tension.push(Some(solution.total_tension()));
                }
                Err(_) => {
                    feasible.push(false);
                    total_tension.push(None);
                }
            }
        }
    }

    WorkspaceGrid {
        alpha,
        beta,
        feasible,
        total_tension,
    }
}

/// Quasi-static motor torque of one cable along an alpha sweep for one load.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueCurve {
    /// Payload mass the curve was computed for, kg.
    pub payload_kg: f64,
    /// Alpha samples, rad.
    pub alpha: Vec<f64>,
    /// Motor torque at each sample, N m; `None` where the gravity demand is
    /// infeasible.
    pub motor_torque: Vec<Option<f64>>,
}

impl TorqueCurve {
    /// CSV export, `alpha_deg,tau_Nm` (blank torque at infeasible samples).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha_deg,tau_Nm\n");
        for (a, tau) in self.alpha.iter().zip(&self.motor_torque) {
            match tau {
                Some(t) => out.push_str(&format!("{:.6},{t:.9}\n", a.to_degrees())),
                None => out.push_str(&format!("{:.6},\n", a.to_degrees())),
            }
        }
        out
    }
}

/// Index of the reported cable: the right-side cable is index 0 in every
/// preset.
pub const REPORTED_CABLE: usize = 0;

/// Quasi-static torque-angle curves: at each alpha the gravity demand of the
/// load (bench anthropometrics) is distributed and the right-side motor
/// torque reported. Infeasible samples become gaps.
pub fn torque_vs_angle(
    config: &DeviceConfig,
    payloads_kg: &[f64],
    alpha_samples: &[f64],
) -> Vec<TorqueCurve> {
    assert!(!payloads_kg.is_empty(), "at least one load required");
    payloads_kg
        .iter()
        .map(|&payload| {
            let load = LoadCase::with_payload(payload);
            let motor_torque = alpha_samples
                .iter()
                .map(|&a| {
                    let joint = JointState::at_angles(a, 0.0);
                    let demand = [gravity_torque(&load, a), 0.0];
                    tension_distribution(config, &joint, demand)
                        .ok()
                        .map(|sol| sol.motor_torques[REPORTED_CABLE])
                })
                .collect();
            TorqueCurve {
                payload_kg: payload,
                alpha: alpha_samples.to_vec(),
                motor_torque,
            }
        })
        .collect()
}

/// Uniform alpha samples over the flexion range of motion.
pub fn alpha_grid(rom: &RangeOfMotion, n: usize) -> Vec<f64> {
    linspace(rom.alpha_min, rom.alpha_max, n)
}
