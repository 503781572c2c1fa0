//! Text formats for characters and environments.
//!
//! Character file, one joint per line, `#` comments:
//!
//! ```text
//! base free            # or: base fixed
//! hip_height 0.9
//! joint Hips - 0 0 0
//! joint Spine Hips 0 0.3 0 axes xz mass 4 radius 0.07
//! joint LeftFoot Hips 0.1 -0.45 0 axes x contact kp 120 kd 8 limit 60
//! ```
//!
//! Environment file:
//!
//! ```text
//! gravity 9.81
//! friction 0.8
//! ground 0
//! box 2 0.25 0  0.5 0.25 0.5    # center, half extents
//! ```

use nalgebra::Vector3;
use std::sync::Arc;

use motion_core::{Joint, Skeleton};
use retarget::AxisAlignedBox;

use crate::character::{ArticulatedCharacter, BaseKind, BuildOptions, JointDofs};
use crate::contact::Environment;
use crate::error::SimError;

fn axis_of(ch: char) -> Result<Vector3<f64>, SimError> {
    match ch {
        'x' => Ok(Vector3::x()),
        'y' => Ok(Vector3::y()),
        'z' => Ok(Vector3::z()),
        other => Err(SimError::BadCharacter(format!("unknown axis {other:?}"))),
    }
}

struct JointLine {
    name: String,
    parent: Option<String>,
    offset: Vector3<f64>,
    axes: Vec<Vector3<f64>>,
    mass: Option<f64>,
    radius: Option<f64>,
    kp: Option<f64>,
    kd: Option<f64>,
    limit: Option<f64>,
    contact: bool,
}

/// Parse a character description into an articulated character.
pub fn parse_character(text: &str) -> Result<ArticulatedCharacter, SimError> {
    let mut base = BaseKind::Free;
    let mut hip_height = 1.0;
    let mut lines: Vec<JointLine> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: &str| SimError::BadCharacter(format!("line {}: {msg}", ln + 1));
        match toks[0] {
            "base" => {
                base = match toks.get(1) {
                    Some(&"free") => BaseKind::Free,
                    Some(&"fixed") => BaseKind::Fixed,
                    _ => return Err(err("base must be 'free' or 'fixed'")),
                };
            }
            "hip_height" => {
                hip_height = toks
                    .get(1)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err("hip_height needs a number"))?;
            }
            "joint" => {
                if toks.len() < 6 {
                    return Err(err("joint needs: name parent ox oy oz [options]"));
                }
                let name = toks[1].to_string();
                let parent = (toks[2] != "-").then(|| toks[2].to_string());
                let nums: Result<Vec<f64>, _> = toks[3..6].iter().map(|v| v.parse()).collect();
                let nums = nums.map_err(|_| err("offset must be three numbers"))?;
                let mut jl = JointLine {
                    name,
                    parent,
                    offset: Vector3::new(nums[0], nums[1], nums[2]),
                    axes: Vec::new(),
                    mass: None,
                    radius: None,
                    kp: None,
                    kd: None,
                    limit: None,
                    contact: false,
                };
                let mut i = 6;
                while i < toks.len() {
                    match toks[i] {
                        "axes" => {
                            let spec = toks.get(i + 1).ok_or_else(|| err("axes needs a value"))?;
                            if *spec != "none" {
                                for ch in spec.chars() {
                                    jl.axes.push(axis_of(ch)?);
                                }
                            }
                            i += 2;
                        }
                        "contact" => {
                            jl.contact = true;
                            i += 1;
                        }
                        key @ ("mass" | "radius" | "kp" | "kd" | "limit") => {
                            let v: f64 = toks
                                .get(i + 1)
                                .and_then(|v| v.parse().ok())
                                .ok_or_else(|| err(&format!("{key} needs a number")))?;
                            match key {
                                "mass" => jl.mass = Some(v),
                                "radius" => jl.radius = Some(v),
                                "kp" => jl.kp = Some(v),
                                "kd" => jl.kd = Some(v),
                                _ => jl.limit = Some(v),
                            }
                            i += 2;
                        }
                        other => return Err(err(&format!("unknown option {other:?}"))),
                    }
                }
                lines.push(jl);
            }
            other => {
                return Err(SimError::BadCharacter(format!(
                    "line {}: unknown directive {other:?}",
                    ln + 1
                )))
            }
        }
    }
    if lines.is_empty() {
        return Err(SimError::BadCharacter("no joints".into()));
    }

    // Assemble the skeleton in file order (parents must precede children).
    let mut joints = Vec::with_capacity(lines.len());
    for jl in &lines {
        let parent = match &jl.parent {
            None => None,
            Some(pname) => Some(
                joints
                    .iter()
                    .position(|j: &Joint| &j.name == pname)
                    .ok_or_else(|| {
                        SimError::BadCharacter(format!(
                            "joint {:?} references unknown parent {pname:?}",
                            jl.name
                        ))
                    })?,
            ),
        };
        joints.push(Joint::new(jl.name.clone(), parent, jl.offset));
    }
    let skeleton = Arc::new(Skeleton::new(joints, hip_height)?);

    let dofs: Vec<JointDofs> = lines
        .iter()
        .enumerate()
        .filter(|(_, jl)| !jl.axes.is_empty())
        .map(|(j, jl)| JointDofs {
            joint: j,
            axes: jl.axes.clone(),
        })
        .collect();
    let contact_joints: Vec<usize> = lines
        .iter()
        .enumerate()
        .filter(|(_, jl)| jl.contact)
        .map(|(j, _)| j)
        .collect();

    let options = BuildOptions {
        base,
        contact_joints,
        ..BuildOptions::default()
    };
    let mut character = ArticulatedCharacter::from_skeleton(skeleton, &dofs, &options)?;

    // Per-joint overrides.
    for (j, jl) in lines.iter().enumerate() {
        let dof_ids = character.joint_dofs(j);
        for d in dof_ids {
            let mut gains = character.pd_gains()[d];
            if let Some(kp) = jl.kp {
                gains.kp = kp;
            }
            if let Some(kd) = jl.kd {
                gains.kd = kd;
            }
            character.set_pd_gains(d, gains);
            if let Some(limit) = jl.limit {
                character.set_torque_limit(d, limit);
            }
        }
    }
    // Mass/radius overrides require rebuilding body properties; scale the
    // auto-derived ones instead.
    for (j, jl) in lines.iter().enumerate() {
        if jl.mass.is_none() && jl.radius.is_none() {
            continue;
        }
        let body = character.body_of_joint(j);
        let b = &mut character_bodies_mut(&mut character)[body];
        if let Some(m) = jl.mass {
            if b.mass > 0.0 {
                let scale = m / b.mass;
                b.mass = m;
                b.inertia *= scale;
            } else {
                b.mass = m;
            }
        }
        if let (Some(r), Some(c)) = (jl.radius, b.capsule.as_mut()) {
            c.radius = r;
        }
    }
    Ok(character)
}

// Narrow mutable access for file overrides without widening the public API.
fn character_bodies_mut(c: &mut ArticulatedCharacter) -> &mut [crate::character::Body] {
    c.bodies_mut()
}

/// Parse an environment description.
pub fn parse_environment(text: &str) -> Result<Environment, SimError> {
    let mut env = Environment::flat();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: &str| SimError::BadEnvironment(format!("line {}: {msg}", ln + 1));
        let num = |i: usize| -> Result<f64, SimError> {
            toks.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err("expected a number"))
        };
        match toks[0] {
            "gravity" => env.gravity = num(1)?,
            "friction" => {
                env.friction = num(1)?;
                if env.friction < 0.0 {
                    return Err(err("friction must be >= 0"));
                }
            }
            "ground" => env.ground_height = num(1)?,
            "box" => {
                if toks.len() != 7 {
                    return Err(err("box needs 6 numbers: center xyz, half extents"));
                }
                env.boxes.push(AxisAlignedBox::new(
                    Vector3::new(num(1)?, num(2)?, num(3)?),
                    Vector3::new(num(4)?, num(5)?, num(6)?),
                ));
            }
            other => return Err(err(&format!("unknown directive {other:?}"))),
        }
    }
    Ok(env)
}
