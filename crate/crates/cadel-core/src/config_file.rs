//! Flat key-value device configuration files.
//!
//! One `key = value` pair per line, `#` starts a comment, blank lines are
//! ignored. All keys are required, unknown keys are an error (fail-closed).
//! Units are SI except angles, which are degrees at this boundary.
//!
//! ```text
//! name = lcadel
//! cable_count = 2
//! arm_ring.radius_m = 0.06
//! arm_ring.offset_m = 0.2
//! arm_ring.anchor_angles_deg = -35, 35
//! forearm_ring.radius_m = 0.04
//! forearm_ring.offset_m = 0.24
//! forearm_ring.anchor_angles_deg = -65, 65
//! routing = forearm_following, forearm_following
//! motor.pulley_radius_m = 0.015
//! motor.max_torque_nm = 1.5
//! motor.max_speed_rad_s = 12
//! motor.efficiency = 0.7
//! tension.t_min_n = 1
//! tension.t_max_n = 60
//! ```
//!
//! `routing` entries are `direct`, `elbow_guide:<offset_m>` or
//! `forearm_following`; a single entry is broadcast to every cable.

use std::collections::BTreeMap;

use crate::geometry::{DeviceConfig, MotorSpec, RingSpec, Routing, TensionLimits};
use crate::{Error, Result};

const KEYS: [&str; 15] = [
    "name",
    "cable_count",
    "arm_ring.radius_m",
    "arm_ring.offset_m",
    "arm_ring.anchor_angles_deg",
    "forearm_ring.radius_m",
    "forearm_ring.offset_m",
    "forearm_ring.anchor_angles_deg",
    "routing",
    "motor.pulley_radius_m",
    "motor.max_torque_nm",
    "motor.max_speed_rad_s",
    "motor.efficiency",
    "tension.t_min_n",
    "tension.t_max_n",
];

/// Parses and validates a device configuration document.
pub fn parse_device_config(text: &str) -> Result<DeviceConfig> {
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    for (number, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected 'key = value'", number + 1))
        })?;
        let key = key.trim().to_owned();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "line {}: unknown key '{key}'",
                number + 1
            )));
        }
        if entries.insert(key.clone(), value.trim().to_owned()).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key '{key}'",
                number + 1
            )));
        }
    }

    let take = |key: &str| -> Result<&String> {
        entries
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    };
    let number = |key: &str| -> Result<f64> {
        take(key)?
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("key '{key}': not a number")))
    };
    let angle_list = |key: &str| -> Result<Vec<f64>> {
        take(key)?
            .split(',')
            .map(|item| {
                item.trim()
                    .parse::<f64>()
                    .map(f64::to_radians)
                    .map_err(|_| Error::Config(format!("key '{key}': bad angle '{item}'")))
            })
            .collect()
    };

    let cable_count_raw = number("cable_count")?;
    if cable_count_raw.fract() != 0.0 || cable_count_raw < 0.0 {
        return Err(Error::Config(
            "key 'cable_count': must be a nonnegative integer".to_owned(),
        ));
    }
    let cable_count = cable_count_raw as usize;

    let mut routing = Vec::new();
    for item in take("routing")?.split(',') {
        let item = item.trim();
        let mode = if item == "direct" {
            Routing::Direct
        } else if item == "forearm_following" {
            Routing::ForearmFollowing
        } else if let Some(offset) = item.strip_prefix("elbow_guide:") {
            Routing::ElbowGuide {
                guide_offset: offset.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!("key 'routing': bad guide offset '{offset}'"))
                })?,
            }
        } else {
            return Err(Error::Config(format!(
                "key 'routing': unknown mode '{item}'"
            )));
        };
        routing.push(mode);
    }
    if routing.len() == 1 && cable_count > 1 {
        routing = vec![routing[0]; cable_count];
    }

    let config = DeviceConfig {
        name: take("name")?.clone(),
        cable_count,
        arm_ring: RingSpec {
            radius: number("arm_ring.radius_m")?,
            offset: number("arm_ring.offset_m")?,
            anchor_angles: angle_list("arm_ring.anchor_angles_deg")?,
        },
        forearm_ring: RingSpec {
            radius: number("forearm_ring.radius_m")?,
            offset: number("forearm_ring.offset_m")?,
            anchor_angles: angle_list("forearm_ring.anchor_angles_deg")?,
        },
        routing,
        motor: MotorSpec {
            pulley_radius: number("motor.pulley_radius_m")?,
            max_torque: number("motor.max_torque_nm")?,
            max_speed: number("motor.max_speed_rad_s")?,
            efficiency: number("motor.efficiency")?,
        },
        tension_limits: TensionLimits {
            t_min: number("tension.t_min_n")?,
            t_max: number("tension.t_max_n")?,
        },
    };
    config.validate()?;
    Ok(config)
}

fn format_angles(angles: &[f64]) -> String {
    angles
        .iter()
        .map(|a| format!("{}", a.to_degrees()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn format_routing(routing: &[Routing]) -> String {
    routing
        .iter()
        .map(|r| match r {
            Routing::Direct => "direct".to_owned(),
            Routing::ForearmFollowing => "forearm_following".to_owned(),
            Routing::ElbowGuide { guide_offset } => format!("elbow_guide:{guide_offset}"),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Renders a configuration in the file format accepted by
/// [`parse_device_config`].
pub fn write_device_config(config: &DeviceConfig) -> String {
    format!(
        "# cable-driven elbow device configuration\n\
         name = {}\n\
         cable_count = {}\n\
         arm_ring.radius_m = {}\n\
         arm_ring.offset_m = {}\n\
         arm_ring.anchor_angles_deg = {}\n\
         forearm_ring.radius_m = {}\n\
         forearm_ring.offset_m = {}\n\
         forearm_ring.anchor_angles_deg = {}\n\
         routing = {}\n\
         motor.pulley_radius_m = {}\n\
         motor.max_torque_nm = {}\n\
         motor.max_speed_rad_s = {}\n\
         motor.efficiency = {}\n\
         tension.t_min_n = {}\n\
         tension.t_max_n = {}\n",
        config.name,
        config.cable_count,
        config.arm_ring.radius,
        config.arm_ring.offset,
        format_angles(&config.arm_ring.anchor_angles),
        config.forearm_ring.radius,
        config.forearm_ring.offset,
        format_angles(&config.forearm_ring.anchor_angles),
        format_routing(&config.routing),
        config.motor.pulley_radius,
        config.motor.max_torque,
        config.motor.max_speed,
        config.motor.efficiency,
        config.tension_limits.t_min,
        config.tension_limits.t_max,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_preset, DeviceVersion};

    #[test]
    fn presets_round_trip() {
        for version in DeviceVersion::ALL {
            let preset = build_preset(version);
            let text = write_device_config(&preset);
            let parsed = parse_device_config(&text).unwrap();
            // a second render is byte-stable
            assert_eq!(write_device_config(&parsed), text);
            assert_eq!(parsed.name, preset.name);
            assert_eq!(parsed.cable_count, preset.cable_count);
            assert_eq!(parsed.routing, preset.routing);
            for (a, b) in parsed
                .arm_ring
                .anchor_angles
                .iter()
                .zip(&preset.arm_ring.anchor_angles)
            {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unknown_key_fails_closed() {
        let preset = build_preset(DeviceVersion::LCadel);
        let mut text = write_device_config(&preset);
        text.push_str("extra.key = 2\n");
        match parse_device_config(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("unknown key 'extra.key'")),
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn missing_key_reported() {
        let preset = build_preset(DeviceVersion::LCadel);
        let text: String = write_device_config(&preset)
            .lines()
            .filter(|l| !l.starts_with("motor.efficiency"))
            .map(|l| format!("{l}\n"))
            .collect();
        match parse_device_config(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("motor.efficiency")),
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_geometry_caught_on_parse() {
        let preset = build_preset(DeviceVersion::LCadel);
        let text = write_device_config(&preset).replace(
            "arm_ring.radius_m = 0.06",
            "arm_ring.radius_m = 0",
        );
        match parse_device_config(&text) {
            Err(Error::InvalidGeometry { violations }) => {
                assert!(violations.iter().any(|v| v.contains("radius")));
            }
            other => panic!("expected InvalidGeometry, got {other:?}"),
        }
    }

    #[test]
    fn single_routing_broadcasts() {
        let preset = build_preset(DeviceVersion::LCadel);
        let text = write_device_config(&preset).replace(
            "routing = forearm_following, forearm_following",
            "routing = forearm_following",
        );
        let parsed = parse_device_config(&text).unwrap();
        assert_eq!(parsed.routing, vec![Routing::ForearmFollowing; 2]);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let preset = build_preset(DeviceVersion::LCadel);
        let text = format!("# header\n\n{}\n# trailer\n", write_device_config(&preset));
        assert!(parse_device_config(&text).is_ok());
    }

    #[test]
    fn duplicate_key_rejected() {
        let preset = build_preset(DeviceVersion::LCadel);
        let mut text = write_device_config(&preset);
        text.push_str("name = other\n");
        match parse_device_config(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("duplicate")),
            other => panic!("expected Config error, got {other:?}"),
        }
    }
}
