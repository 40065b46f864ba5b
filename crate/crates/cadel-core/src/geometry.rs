//! Device geometry: ring platforms, cable anchors, routing and presets.
//!
//! World frame, fixed to the arm ring (the motors ride the arm ring, so the
//! arm side never moves): `x` anterior, `y` lateral, `z` along the upper-arm
//! axis pointing proximally. The elbow centre is the origin. With the upper
//! arm held vertical the forearm is horizontal along `+x` at `alpha = 0`;
//! positive `alpha` flexes the forearm up toward the upper arm and gravity
//! acts along `-z`.
//!
//! The forearm frame is obtained by rotating the arm frame by `alpha` about
//! the lateral axis, then by `beta` about the (rotated) forearm axis. The
//! `beta` rotation is applied only to anchors of `ForearmFollowing` cables;
//! `Direct` and `ElbowGuide` forearm anchors sit on a ring the forearm may
//! pronate inside.

use nalgebra::{Point3, Rotation3, Vector3};

use crate::{Error, Result};

/// Minimum usable cable (segment) length in metres.
pub const MIN_CABLE_LENGTH: f64 = 1e-6;

/// The three device versions covered by the presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceVersion {
    /// Original four-cable design, direct cable runs.
    Cadel,
    /// Four cables with the anterior cable redirected over an elbow guide.
    Cadel3,
    /// Light two-cable design whose anchors follow forearm rotation.
    LCadel,
}

impl DeviceVersion {
    pub const ALL: [DeviceVersion; 3] = [
        DeviceVersion::Cadel,
        DeviceVersion::Cadel3,
        DeviceVersion::LCadel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DeviceVersion::Cadel => "cadel",
            DeviceVersion::Cadel3 => "cadel3",
            DeviceVersion::LCadel => "lcadel",
        }
    }
}

impl std::str::FromStr for DeviceVersion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cadel" => Ok(DeviceVersion::Cadel),
            "cadel3" | "cadel.3" => Ok(DeviceVersion::Cadel3),
            "lcadel" | "l-cadel" => Ok(DeviceVersion::LCadel),
            other => Err(Error::Config(format!(
                "unknown device version '{other}' (expected cadel, cadel3 or lcadel)"
            ))),
        }
    }
}

/// How a cable runs from its arm-ring anchor to its forearm-ring anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Routing {
    /// Straight segment between the two anchors.
    Direct,
    /// Redirected over an idealised point pulley at `guide_offset` metres
    /// anterior of the elbow centre; wrap radius is ignored.
    ElbowGuide { guide_offset: f64 },
    /// Straight segment, but the forearm anchor rotates with `beta`
    /// (the movable-servomotor arrangement of the two-cable design).
    ForearmFollowing,
}

/// One ring platform: radius, offset of the ring plane from the elbow centre
/// along its segment axis, and the anchor angles around the circumference.
///
/// Ring angles are measured from the sagittal plane toward `+y` (left):
/// on the arm ring 0 is the anterior point; on the forearm ring 0 is the
/// radial facing the inside of the elbow (anterior when the arm hangs
/// extended). Mirror pairs therefore have opposite angles.
#[derive(Debug, Clone, PartialEq)]
pub struct RingSpec {
    /// Ring radius, m.
    pub radius: f64,
    /// Offset from the elbow centre along the segment axis, m
    /// (proximal for the arm ring, distal for the forearm ring).
    pub offset: f64,
    /// Anchor angles around the circumference, rad, one per cable.
    pub anchor_angles: Vec<f64>,
}

/// Winch motor constants shared by all cables of a device.
#[derive(Debug, Clone, PartialEq)]
pub struct MotorSpec {
    /// Winch pulley radius, m.
    pub pulley_radius: f64,
    /// Torque limit, N m.
    pub max_torque: f64,
    /// Speed limit, rad/s.
    pub max_speed: f64,
    /// Mechanical efficiency between cable and motor shaft, in (0, 1].
    pub efficiency: f64,
}

/// Per-cable tension box: pretension floor and upper limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensionLimits {
    /// Pretension kept in every cable so it stays taut, N.
    pub t_min: f64,
    /// Maximum admissible tension, N.
    pub t_max: f64,
}

/// Full geometric and actuation description of one device version.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceConfig {
    pub name: String,
    pub cable_count: usize,
    pub arm_ring: RingSpec,
    pub forearm_ring: RingSpec,
    /// Routing mode per cable.
    pub routing: Vec<Routing>,
    pub motor: MotorSpec,
    pub tension_limits: TensionLimits,
}

/// Elbow flexion/extension `alpha` (zero at horizontal forearm, flexion
/// positive) and forearm pronation/supination `beta` (zero neutral), with
/// their rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
}

impl JointState {
    /// A state at rest at the given angles.
    pub fn at_angles(alpha: f64, beta: f64) -> Self {
        JointState {
            alpha,
            beta,
            alpha_dot: 0.0,
            beta_dot: 0.0,
        }
    }
}

/// Admissible joint intervals (closed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeOfMotion {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl RangeOfMotion {
    /// Average adult elbow/forearm range: flexion/extension within ±60°,
    /// supination/pronation within ±50°.
    pub fn adult_arm() -> Self {
        RangeOfMotion {
            alpha_min: (-60.0f64).to_radians(),
            alpha_max: 60.0f64.to_radians(),
            beta_min: (-50.0f64).to_radians(),
            beta_max: 50.0f64.to_radians(),
        }
    }
}

impl Default for RangeOfMotion {
    fn default() -> Self {
        Self::adult_arm()
    }
}

/// World-frame anchor pair of one cable at a given joint state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorPair {
    pub arm: Point3<f64>,
    pub forearm: Point3<f64>,
}

// Shared preset hardware. The ring dimensions were chosen at adult-arm scale
// such that no cable approaches degeneracy inside the range of motion and the
// flexion moment arm of the working cables stays nearly constant over the
// exercise range (which keeps quasi-static motor torque close to the
// cos(alpha) gravity shape).
const ARM_RING_RADIUS: f64 = 0.060;
const ARM_RING_OFFSET: f64 = 0.200;
const FOREARM_RING_RADIUS: f64 = 0.040;
const FOREARM_RING_OFFSET: f64 = 0.240;
const GUIDE_OFFSET: f64 = 0.030;

fn preset_motor() -> MotorSpec {
    MotorSpec {
        pulley_radius: 0.015,
        max_torque: 1.5,
        max_speed: 12.0,
        efficiency: 0.7,
    }
}

const PRESET_TENSIONS: TensionLimits = TensionLimits {
    t_min: 1.0,
    t_max: 60.0,
};

/// Builds one of the three version presets. Total over the enum; the result
/// always validates.
///
/// Cable ordering convention: index 0 is the right-side cable in every
/// preset. For `lcadel` that is the anchor pair at −35°/−65°; for the
/// four-cable presets the order is right lateral (−90°), anterior (0°),
/// left lateral (+90°), posterior (180°), so the guided cable of `cadel3`
/// is index 1.
pub fn build_preset(version: DeviceVersion) -> DeviceConfig {
    let config = match version {
        DeviceVersion::LCadel => DeviceConfig {
            name: "lcadel".to_owned(),
            cable_count: 2,
            arm_ring: RingSpec {
                radius: ARM_RING_RADIUS,
                offset: ARM_RING_OFFSET,
                anchor_angles: vec![(-35.0f64).to_radians(), 35.0f64.to_radians()],
            },
            forearm_ring: RingSpec {
                radius: FOREARM_RING_RADIUS,
                offset: FOREARM_RING_OFFSET,
                anchor_angles: vec![(-65.0f64).to_radians(), 65.0f64.to_radians()],
            },
            routing: vec![Routing::ForearmFollowing; 2],
            motor: preset_motor(),
            tension_limits: PRESET_TENSIONS,
        },
        DeviceVersion::Cadel | DeviceVersion::Cadel3 => {
            let angles = vec![
                (-90.0f64).to_radians(),
                0.0,
                90.0f64.to_radians(),
                180.0f64.to_radians(),
            ];
            let mut routing = vec![Routing::Direct; 4];
            let name = match version {
                DeviceVersion::Cadel => "cadel",
                _ => {
                    routing[1] = Routing::ElbowGuide {
                        guide_offset: GUIDE_OFFSET,
                    };
                    "cadel3"
                }
            };
            DeviceConfig {
                name: name.to_owned(),
                cable_count: 4,
                arm_ring: RingSpec {
                    radius: ARM_RING_RADIUS,
                    offset: ARM_RING_OFFSET,
                    anchor_angles: angles.clone(),
                },
                forearm_ring: RingSpec {
                    radius: FOREARM_RING_RADIUS,
                    offset: FOREARM_RING_OFFSET,
                    anchor_angles: angles,
                },
                routing,
                motor: preset_motor(),
                tension_limits: PRESET_TENSIONS,
            }
        }
    };
    debug_assert!(config.validate().is_ok());
    config
}

impl DeviceConfig {
    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                violations.push(msg.to_owned());
            }
        };

        check(
            self.cable_count == 2 || self.cable_count == 4,
            "cable_count: must be 2 or 4",
        );
        check(
            self.arm_ring.radius.is_finite() && self.arm_ring.radius > 0.0,
            "arm_ring.radius: must be > 0",
        );
        check(
            self.forearm_ring.radius.is_finite() && self.forearm_ring.radius > 0.0,
            "forearm_ring.radius: must be > 0",
        );
        check(
            self.arm_ring.offset.is_finite() && self.arm_ring.offset > 0.0,
            "arm_ring.offset: must be > 0",
        );
        check(
            self.forearm_ring.offset.is_finite() && self.forearm_ring.offset > 0.0,
            "forearm_ring.offset: must be > 0",
        );
        check(
            self.arm_ring.anchor_angles.len() == self.cable_count,
            "anchor count: arm ring anchors must match cable_count",
        );
        check(
            self.forearm_ring.anchor_angles.len() == self.cable_count,
            "anchor count: forearm ring anchors must match cable_count",
        );
        check(
            self.routing.len() == self.cable_count,
            "routing: one routing mode per cable required",
        );
        check(
            self.arm_ring.anchor_angles.iter().all(|a| a.is_finite())
                && self.forearm_ring.anchor_angles.iter().all(|a| a.is_finite()),
            "anchor_angles: must be finite",
        );
        for (i, r) in self.routing.iter().enumerate() {
            if let Routing::ElbowGuide { guide_offset } = r {
                if !(guide_offset.is_finite() && *guide_offset > 0.0) {
                    violations.push(format!("routing[{i}]: guide offset must be > 0"));
                }
            }
        }
        check(
            self.motor.pulley_radius.is_finite() && self.motor.pulley_radius > 0.0,
            "motor.pulley_radius: must be > 0",
        );
        check(
            self.motor.max_torque.is_finite() && self.motor.max_torque > 0.0,
            "motor.max_torque: must be > 0",
        );
        check(
            self.motor.max_speed.is_finite() && self.motor.max_speed > 0.0,
            "motor.max_speed: must be > 0",
        );
        check(
            self.motor.efficiency.is_finite()
                && self.motor.efficiency > 0.0
                && self.motor.efficiency <= 1.0,
            "motor.efficiency: must be in (0, 1]",
        );
        check(
            self.tension_limits.t_min.is_finite() && self.tension_limits.t_min >= 0.0,
            "tension_limits.t_min: must be >= 0",
        );
        check(
            self.tension_limits.t_max.is_finite()
                && self.tension_limits.t_max > self.tension_limits.t_min,
            "tension_limits.t_max: must exceed t_min",
        );

        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidGeometry { violations })
        }
    }
}

/// Rotation taking the arm frame to the alpha-rotated forearm frame
/// (`x` axis maps to the forearm distal axis).
pub(crate) fn flexion_rotation(alpha: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::y_axis(), -alpha)
}

/// Unit vector along the forearm distal axis at flexion `alpha`.
pub fn forearm_axis(alpha: f64) -> Vector3<f64> {
    Vector3::new(alpha.cos(), 0.0, alpha.sin())
}

/// One cable's fixed and moving points at a given joint state, plus whether
/// its forearm anchor follows `beta`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CableRun {
    pub arm: Point3<f64>,
    pub guide: Option<Point3<f64>>,
    pub forearm: Point3<f64>,
    pub follows_beta: bool,
}

pub(crate) fn cable_runs(config: &DeviceConfig, joint: &JointState) -> Vec<CableRun> {
    let r_alpha = flexion_rotation(joint.alpha);
    let r_beta = Rotation3::from_axis_angle(&Vector3::x_axis(), joint.beta);

    (0..config.cable_count)
        .map(|i| {
            let theta_a = config.arm_ring.anchor_angles[i];
            let arm = Point3::new(
                config.arm_ring.radius * theta_a.cos(),
                config.arm_ring.radius * theta_a.sin(),
                config.arm_ring.offset,
            );

            let theta_f = config.forearm_ring.anchor_angles[i];
            // Local forearm anchor: ring plane normal along the local distal
            // axis, ring angle measured from the in-sagittal radial.
            let local = Vector3::new(
                config.forearm_ring.offset,
                config.forearm_ring.radius * theta_f.sin(),
                config.forearm_ring.radius * theta_f.cos(),
            );
            let follows_beta = matches!(config.routing[i], Routing::ForearmFollowing);
            let rotated = if follows_beta {
                r_alpha * (r_beta * local)
            } else {
                r_alpha * local
            };
            let forearm = Point3::from(rotated);

            let guide = match config.routing[i] {
                Routing::ElbowGuide { guide_offset } => {
                    Some(Point3::new(guide_offset, 0.0, 0.0))
                }
                _ => None,
            };

            CableRun {
                arm,
                guide,
                forearm,
                follows_beta,
            }
        })
        .collect()
}

/// World-frame (arm anchor, forearm anchor) pairs for every cable.
///
/// Arm anchors lie on the fixed arm-ring circle; forearm anchors lie on the
/// forearm-ring circle carried by the rotated forearm frame.
pub fn anchor_positions(config: &DeviceConfig, joint: &JointState) -> Vec<AnchorPair> {
    cable_runs(config, joint)
        .into_iter()
        .map(|run| AnchorPair {
            arm: run.arm,
            forearm: run.forearm,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn presets_validate() {
        for v in DeviceVersion::ALL {
            let cfg = build_preset(v);
            assert!(cfg.validate().is_ok(), "{} preset must validate", cfg.name);
        }
    }

    #[test]
    fn preset_cable_counts() {
        assert_eq!(build_preset(DeviceVersion::LCadel).cable_count, 2);
        assert_eq!(build_preset(DeviceVersion::Cadel).cable_count, 4);
        assert_eq!(build_preset(DeviceVersion::Cadel3).cable_count, 4);
    }

    #[test]
    fn cadel3_has_exactly_one_guided_cable() {
        let cfg = build_preset(DeviceVersion::Cadel3);
        let guided = cfg
            .routing
            .iter()
            .filter(|r| matches!(r, Routing::ElbowGuide { .. }))
            .count();
        assert_eq!(guided, 1);
    }

    #[test]
    fn presets_are_idempotent() {
        for v in DeviceVersion::ALL {
            assert_eq!(build_preset(v), build_preset(v));
        }
    }

    #[test]
    fn zero_radius_reported() {
        let mut cfg = build_preset(DeviceVersion::LCadel);
        cfg.arm_ring.radius = 0.0;
        let err = cfg.validate().unwrap_err();
        match err {
            Error::InvalidGeometry { violations } => {
                assert!(violations.iter().any(|v| v.contains("radius")));
            }
            other => panic!("expected InvalidGeometry, got {other:?}"),
        }
    }

    #[test]
    fn anchor_count_mismatch_reported() {
        let mut cfg = build_preset(DeviceVersion::Cadel);
        cfg.forearm_ring.anchor_angles.pop();
        let err = cfg.validate().unwrap_err();
        match err {
            Error::InvalidGeometry { violations } => {
                assert!(violations.iter().any(|v| v.contains("anchor count")));
            }
            other => panic!("expected InvalidGeometry, got {other:?}"),
        }
    }

    #[test]
    fn multiple_violations_all_listed() {
        let mut cfg = build_preset(DeviceVersion::LCadel);
        cfg.arm_ring.radius = -1.0;
        cfg.motor.efficiency = 1.5;
        cfg.tension_limits.t_max = cfg.tension_limits.t_min;
        match cfg.validate().unwrap_err() {
            Error::InvalidGeometry { violations } => assert_eq!(violations.len(), 3),
            other => panic!("expected InvalidGeometry, got {other:?}"),
        }
    }

    #[test]
    fn anchors_mirror_across_sagittal_plane() {
        // Symmetric anchor pairs at alpha = beta = 0 mirror in y.
        let cfg = build_preset(DeviceVersion::LCadel);
        let pairs = anchor_positions(&cfg, &JointState::default());
        assert_relative_eq!(pairs[0].arm.x, pairs[1].arm.x, epsilon = 1e-15);
        assert_relative_eq!(pairs[0].arm.y, -pairs[1].arm.y, epsilon = 1e-15);
        assert_relative_eq!(pairs[0].arm.z, pairs[1].arm.z, epsilon = 1e-15);
        assert_relative_eq!(pairs[0].forearm.x, pairs[1].forearm.x, epsilon = 1e-15);
        assert_relative_eq!(pairs[0].forearm.y, -pairs[1].forearm.y, epsilon = 1e-15);
        assert_relative_eq!(pairs[0].forearm.z, pairs[1].forearm.z, epsilon = 1e-15);
    }

    #[test]
    fn forearm_anchor_distance_from_elbow() {
        // Rigid-body rotation preserves the local anchor norm.
        let cfg = build_preset(DeviceVersion::LCadel);
        let expected = (cfg.forearm_ring.offset.powi(2) + cfg.forearm_ring.radius.powi(2)).sqrt();
        let pairs = anchor_positions(&cfg, &JointState::default());
        for p in &pairs {
            assert_relative_eq!(p.forearm.coords.norm(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn forearm_following_rotates_anchors_with_beta() {
        let cfg = build_preset(DeviceVersion::LCadel);
        let beta = 30.0f64.to_radians();
        let at_zero = anchor_positions(&cfg, &JointState::default());
        let at_beta = anchor_positions(&cfg, &JointState::at_angles(0.0, beta));
        // At alpha = 0 the forearm axis is x, so the beta rotation is about x.
        let rot = Rotation3::from_axis_angle(&Vector3::x_axis(), beta);
        for (a, b) in at_zero.iter().zip(&at_beta) {
            let rotated = rot * a.forearm;
            assert_relative_eq!(rotated.x, b.forearm.x, epsilon = 1e-12);
            assert_relative_eq!(rotated.y, b.forearm.y, epsilon = 1e-12);
            assert_relative_eq!(rotated.z, b.forearm.z, epsilon = 1e-12);
            // arm anchors stay put
            assert_eq!(a.arm, b.arm);
        }
    }

    #[test]
    fn direct_routing_ignores_beta() {
        let cfg = build_preset(DeviceVersion::Cadel);
        let a = anchor_positions(&cfg, &JointState::at_angles(0.3, 0.0));
        let b = anchor_positions(&cfg, &JointState::at_angles(0.3, 0.7));
        assert_eq!(a, b);
    }

    #[test]
    fn anchor_displacement_bounded_by_lever() {
        // |dP| <= max lever * |d alpha| (chord never exceeds arc).
        let cfg = build_preset(DeviceVersion::LCadel);
        let lever = (cfg.forearm_ring.offset.powi(2) + cfg.forearm_ring.radius.powi(2)).sqrt();
        let d_alpha = 1e-6;
        for i in 0..=12 {
            for j in 0..=10 {
                let alpha = -1.0 + 2.0 * f64::from(i) / 12.0;
                let beta = -0.85 + 1.7 * f64::from(j) / 10.0;
                let p0 = anchor_positions(&cfg, &JointState::at_angles(alpha, beta));
                let p1 = anchor_positions(&cfg, &JointState::at_angles(alpha + d_alpha, beta));
                for (a, b) in p0.iter().zip(&p1) {
                    let moved = (b.forearm - a.forearm).norm();
                    assert!(moved <= lever * d_alpha * (1.0 + 1e-9));
                }
            }
        }
    }

    #[test]
    fn mirror_symmetry_in_beta_and_angles() {
        // Negating all anchor ring angles and beta mirrors anchors in y.
        let mut cfg = build_preset(DeviceVersion::LCadel);
        let joint = JointState::at_angles(0.4, 0.35);
        let original = anchor_positions(&cfg, &joint);
        for a in cfg
            .arm_ring
            .anchor_angles
            .iter_mut()
            .chain(cfg.forearm_ring.anchor_angles.iter_mut())
        {
            *a = -*a;
        }
        let mirrored = anchor_positions(&cfg, &JointState::at_angles(0.4, -0.35));
        for (o, m) in original.iter().zip(&mirrored) {
            assert_relative_eq!(o.arm.x, m.arm.x, epsilon = 1e-14);
            assert_relative_eq!(o.arm.y, -m.arm.y, epsilon = 1e-14);
            assert_relative_eq!(o.arm.z, m.arm.z, epsilon = 1e-14);
            assert_relative_eq!(o.forearm.x, m.forearm.x, epsilon = 1e-14);
            assert_relative_eq!(o.forearm.y, -m.forearm.y, epsilon = 1e-14);
            assert_relative_eq!(o.forearm.z, m.forearm.z, epsilon = 1e-14);
        }
    }
}
