//! Gravity statics and nonnegative tension distribution.
//!
//! The structure matrix maps cable tensions to the two generalized joint
//! moments (flexion and pronosupination) by virtual work: `A = -J^T`. The
//! distribution solver works with the tension excess above pretension,
//! `s = t - t_min`, treating the pretension wrench as internally balanced:
//! it solves `A s = demand` with `0 <= s <= t_max - t_min`, minimizing
//! `sum(s_i^2)` — equivalently minimizing `sum((t_i - t_min)^2)` — so zero
//! demand rests at `t = t_min` in every cable.

use crate::geometry::{DeviceConfig, JointState};
use crate::kinematics::cable_state;
use crate::{Error, Result};

/// Demanded wrench residual tolerance for a distribution to count as exact.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-9;

/// Masses and lever arms defining the gravity wrench of the loaded forearm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadCase {
    /// Forearm segment mass, kg.
    pub forearm_mass: f64,
    /// Payload mass held at the hand, kg.
    pub payload_mass: f64,
    /// Forearm centre-of-mass distance from the elbow, m.
    pub forearm_com_distance: f64,
    /// Payload distance from the elbow, m.
    pub payload_distance: f64,
    /// Gravitational acceleration, m/s^2.
    pub gravity: f64,
}

impl LoadCase {
    /// Bench anthropometrics with the given payload: 1 kg forearm with its
    /// centre of mass 0.11 m from the elbow, payload carried at 0.25 m.
    pub fn with_payload(payload_kg: f64) -> Self {
        LoadCase {
            forearm_mass: 1.0,
            payload_mass: payload_kg,
            forearm_com_distance: 0.11,
            payload_distance: 0.25,
            gravity: 9.81,
        }
    }

    /// No mass at all (zero gravity wrench everywhere).
    pub fn zero() -> Self {
        LoadCase {
            forearm_mass: 0.0,
            payload_mass: 0.0,
            ..LoadCase::with_payload(0.0)
        }
    }

    /// First moment of mass about the elbow, kg m.
    pub fn static_moment(&self) -> f64 {
        self.forearm_mass * self.forearm_com_distance + self.payload_mass * self.payload_distance
    }

    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if !(self.forearm_mass.is_finite() && self.forearm_mass >= 0.0) {
            violations.push("forearm_mass: must be >= 0".to_owned());
        }
        if !(self.payload_mass.is_finite() && self.payload_mass >= 0.0) {
            violations.push("payload_mass: must be >= 0".to_owned());
        }
        if !(self.forearm_com_distance.is_finite() && self.forearm_com_distance > 0.0) {
            violations.push("forearm_com_distance: must be > 0".to_owned());
        }
        if !(self.payload_distance.is_finite() && self.payload_distance > 0.0) {
            violations.push("payload_distance: must be > 0".to_owned());
        }
        if !(self.gravity.is_finite() && self.gravity > 0.0) {
            violations.push("gravity: must be > 0".to_owned());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidGeometry { violations })
        }
    }
}

/// Torque about the elbow flexion axis the cables must supply to hold the
/// loaded forearm statically, N m; maximal at the horizontal forearm.
pub fn gravity_torque(load: &LoadCase, alpha: f64) -> f64 {
    load.static_moment() * load.gravity * alpha.cos()
}

/// Structure matrix rows: joint moment per unit cable tension.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    /// Flexion-axis moment per unit tension of each cable, m (= `-dl/dalpha`).
    pub flexion: Vec<f64>,
    /// Off-sagittal (pronosupination-axis) moment per unit tension, m
    /// (= `-dl/dbeta`; zero for cables whose length ignores `beta`).
    pub lateral: Vec<f64>,
}

impl StructureMatrix {
    pub fn cable_count(&self) -> usize {
        self.flexion.len()
    }

    /// Wrench produced by the tension (excess) vector `s`.
    pub fn apply(&self, s: &[f64]) -> [f64; 2] {
        let mut w = [0.0; 2];
        for (i, &si) in s.iter().enumerate() {
            w[0] += self.flexion[i] * si;
            w[1] += self.lateral[i] * si;
        }
        w
    }
}

/// Structure matrix at a joint state, from the analytic cable Jacobian by
/// virtual work (a unit tension does work `-dl` on the joint).
pub fn structure_rows(config: &DeviceConfig, joint: &JointState) -> Result<StructureMatrix> {
    let state = cable_state(config, joint)?;
    Ok(StructureMatrix {
        flexion: state.jacobian.iter().map(|row| -row[0]).collect(),
        lateral: state.jacobian.iter().map(|row| -row[1]).collect(),
    })
}

/// A tension distribution: absolute cable tensions, the motor torques that
/// realise them, and the demand wrench left unmet (zero on success).
#[derive(Debug, Clone, PartialEq)]
pub struct CableSolution {
    /// Absolute cable tensions, N (within `[t_min, t_max]`).
    pub tensions: Vec<f64>,
    /// Motor torques `t_i * pulley_radius / efficiency`, N m.
    pub motor_torques: Vec<f64>,
    /// `(flexion, lateral)` demand residual, N m.
    pub residual_wrench: [f64; 2],
}

impl CableSolution {
    pub fn total_tension(&self) -> f64 {
        self.tensions.iter().sum()
    }
}

/// Distributes a demanded `(flexion, lateral)` wrench onto cable tensions.
///
/// Minimizes `sum((t_i - t_min)^2)` subject to the wrench equality and the
/// tension box; errors with [`Error::Infeasible`] (carrying the best
/// least-squares residual) when no admissible tension vector realises the
/// demand.
pub fn tension_distribution(
    config: &DeviceConfig,
    joint: &JointState,
    demand: [f64; 2],
) -> Result<CableSolution> {
    let a = structure_rows(config, joint)?;
    let span = config.tension_limits.t_max - config.tension_limits.t_min;
    let excess = solve_box_qp(&a, demand, span)?;

    let applied = a.apply(&excess);
    let residual = [demand[0] - applied[0], demand[1] - applied[1]];
    let tensions: Vec<f64> = excess
        .iter()
        .map(|s| config.tension_limits.t_min + s)
        .collect();
    let torque_per_newton = config.motor.pulley_radius / config.motor.efficiency;
    let motor_torques = tensions.iter().map(|t| t * torque_per_newton).collect();

    Ok(CableSolution {
        tensions,
        motor_torques,
        residual_wrench: residual,
    })
}

/// True iff the gravity wrench of `load` at this state is realisable within
/// the tension limits. Any failure (including degenerate geometry) is false.
pub fn wrench_feasible(config: &DeviceConfig, joint: &JointState, load: &LoadCase) -> bool {
    let demand = [gravity_torque(load, joint.alpha), 0.0];
    tension_distribution(config, joint, demand).is_ok()
}

// --- box-constrained minimum-norm QP ---------------------------------------
//
// minimize ||s||^2  s.t.  A s = d,  0 <= s <= span.
//
// With at most four cables every active-set pattern (each variable free, at
// its lower or at its upper bound) can be enumerated: 3^n <= 81 candidates.
// For each pattern the free block takes its minimum-norm value from the
// normal equations of A restricted to the free columns; the candidate is kept
// when it reproduces the demand and respects the box. The minimum-objective
// candidate is the global optimum of this strictly convex QP.

fn solve_box_qp(a: &StructureMatrix, demand: [f64; 2], span: f64) -> Result<Vec<f64>> {
    let n = a.cable_count();
    debug_assert!(n <= 8, "pattern enumeration is sized for small cable counts");
    let box_tol = 1e-12 * span.max(1.0);

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut pattern = vec![0u8; n]; // 0 = free, 1 = lower, 2 = upper

    'patterns: loop {
        // bound contribution and free column set
        let mut rhs = demand;
        let mut free: Vec<usize> = Vec::with_capacity(n);
        let mut s = vec![0.0; n];
        for i in 0..n {
            match pattern[i] {
                0 => free.push(i),
                1 => s[i] = 0.0,
                _ => {
                    s[i] = span;
                    rhs[0] -= a.flexion[i] * span;
                    rhs[1] -= a.lateral[i] * span;
                }
            }
        }

        if let Some(sol) = min_norm_free_block(a, &free, rhs) {
            let mut ok = true;
            for (&i, &v) in free.iter().zip(&sol) {
                if v < -box_tol || v > span + box_tol {
                    ok = false;
                    break;
                }
                s[i] = v.clamp(0.0, span);
            }
            if ok {
                let w = a.apply(&s);
                let r = ((demand[0] - w[0]).powi(2) + (demand[1] - w[1]).powi(2)).sqrt();
                if r <= EQUILIBRIUM_TOLERANCE {
                    let objective: f64 = s.iter().map(|v| v * v).sum();
                    let better = match &best {
                        None => true,
                        Some((obj, _)) => objective < obj - 1e-15 * (1.0 + obj),
                    };
                    if better {
                        best = Some((objective, s));
                    }
                }
            }
        }

        // next base-3 pattern
        for i in 0..n {
            pattern[i] += 1;
            if pattern[i] < 3 {
                continue 'patterns;
            }
            pattern[i] = 0;
        }
        break;
    }

    match best {
        Some((_, s)) => Ok(s),
        None => Err(Error::Infeasible {
            residual: boxed_least_squares_residual(a, demand, span),
        }),
    }
}

/// Minimum-norm solution of `A_F x = rhs` over the free columns, or `None`
/// when the free block cannot reproduce `rhs`.
fn min_norm_free_block(a: &StructureMatrix, free: &[usize], rhs: [f64; 2]) -> Option<Vec<f64>> {
    if free.is_empty() {
        let r = (rhs[0].powi(2) + rhs[1].powi(2)).sqrt();
        return (r <= EQUILIBRIUM_TOLERANCE).then(Vec::new);
    }

    // normal matrix M = A_F A_F^T (2x2 PSD)
    let mut m00 = 0.0;
    let mut m01 = 0.0;
    let mut m11 = 0.0;
    for &i in free {
        m00 += a.flexion[i] * a.flexion[i];
        m01 += a.flexion[i] * a.lateral[i];
        m11 += a.lateral[i] * a.lateral[i];
    }

    // rank-revealing eigen decomposition of M; x = A_F^T M^+ rhs
    let mean = 0.5 * (m00 + m11);
    let gap = (0.25 * (m00 - m11).powi(2) + m01 * m01).sqrt();
    let eig = [mean + gap, mean - gap];
    let cutoff = 1e-13 * eig[0].max(f64::MIN_POSITIVE);

    // eigenvectors: exact axes when M is diagonal
    let vecs: [[f64; 2]; 2] = if m01 == 0.0 {
        if m00 >= m11 {
            [[1.0, 0.0], [0.0, 1.0]]
        } else {
            [[0.0, 1.0], [1.0, 0.0]]
        }
    } else {
        let v0 = [m01, eig[0] - m00];
        let n0 = (v0[0] * v0[0] + v0[1] * v0[1]).sqrt();
        let v0 = [v0[0] / n0, v0[1] / n0];
        [v0, [-v0[1], v0[0]]]
    };

    let mut lambda = [0.0f64; 2];
    for k in 0..2 {
        if eig[k] > cutoff {
            let proj = vecs[k][0] * rhs[0] + vecs[k][1] * rhs[1];
            let scale = proj / eig[k];
            lambda[0] += scale * vecs[k][0];
            lambda[1] += scale * vecs[k][1];
        }
    }

    let x: Vec<f64> = free
        .iter()
        .map(|&i| a.flexion[i] * lambda[0] + a.lateral[i] * lambda[1])
        .collect();

    // reject inconsistent rank-deficient systems
    let mut w = [0.0f64; 2];
    for (&i, &v) in free.iter().zip(&x) {
        w[0] += a.flexion[i] * v;
        w[1] += a.lateral[i] * v;
    }
    let r = ((rhs[0] - w[0]).powi(2) + (rhs[1] - w[1]).powi(2)).sqrt();
    (r <= EQUILIBRIUM_TOLERANCE).then_some(x)
}

/// Best-effort `min ||A s - d||` over the box, for the infeasibility report.
fn boxed_least_squares_residual(a: &StructureMatrix, demand: [f64; 2], span: f64) -> f64 {
    let n = a.cable_count();
    let mut s = vec![0.0; n];
    // Lipschitz bound of the gradient of ||As - d||^2
    let trace: f64 = (0..n)
        .map(|i| a.flexion[i].powi(2) + a.lateral[i].powi(2))
        .sum();
    if trace <= 0.0 {
        return (demand[0].powi(2) + demand[1].powi(2)).sqrt();
    }
    let step = 0.5 / trace;
    for _ in 0..2000 {
        let w = a.apply(&s);
        let e = [w[0] - demand[0], w[1] - demand[1]];
        for i in 0..n {
            let g = 2.0 * (a.flexion[i] * e[0] + a.lateral[i] * e[1]);
            s[i] = (s[i] - step * g).clamp(0.0, span);
        }
    }
    let w = a.apply(&s);
    ((w[0] - demand[0]).powi(2) + (w[1] - demand[1]).powi(2)).sqrt()
}
