//! Generalized coordinates and velocities of a simulated character.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use crate::character::{ArticulatedCharacter, BaseKind};

/// q: root position (3) + root quaternion (w,x,y,z) + joint angles for a
/// free base, joint angles only for a fixed base.
/// qdot: root spatial velocity in world coordinates about the world origin
/// ([angular; linear-at-origin]) followed by joint rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub time: f64,
    /// Ground/box contact flags, one per body.
    pub contacts: Vec<bool>,
}

impl SimState {
    pub fn rest(character: &ArticulatedCharacter) -> Self {
        let mut q = vec![0.0; character.nq()];
        if character.base() == BaseKind::Free {
            q[3] = 1.0; // identity quaternion
            q[1] = character.skeleton().hip_height();
        }
        SimState {
            q,
            qdot: vec![0.0; character.nv()],
            time: 0.0,
            contacts: vec![false; character.bodies().len()],
        }
    }

    pub fn root_position(&self, character: &ArticulatedCharacter) -> Vector3<f64> {
        match character.base() {
            BaseKind::Free => Vector3::new(self.q[0], self.q[1], self.q[2]),
            BaseKind::Fixed => Vector3::zeros(),
        }
    }

    pub fn root_rotation(&self, character: &ArticulatedCharacter) -> Matrix3<f64> {
        match character.base() {
            BaseKind::Free => self
                .root_quaternion(character)
                .to_rotation_matrix()
                .into_inner(),
            BaseKind::Fixed => Matrix3::identity(),
        }
    }

    pub fn root_quaternion(&self, character: &ArticulatedCharacter) -> UnitQuaternion<f64> {
        match character.base() {
            BaseKind::Free => UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
                self.q[3], self.q[4], self.q[5], self.q[6],
            )),
            BaseKind::Fixed => UnitQuaternion::identity(),
        }
    }

    pub fn set_root_pose(
        &mut self,
        character: &ArticulatedCharacter,
        position: Vector3<f64>,
        rotation: &Matrix3<f64>,
    ) {
        if character.base() == BaseKind::Free {
            self.q[0] = position.x;
            self.q[1] = position.y;
            self.q[2] = position.z;
            let quat = UnitQuaternion::from_matrix(rotation);
            self.q[3] = quat.w;
            self.q[4] = quat.i;
            self.q[5] = quat.j;
            self.q[6] = quat.k;
        }
    }

    /// Set the root's world angular velocity and the linear velocity of the
    /// root anchor point (converted to the internal at-origin convention).
    pub fn set_root_velocity(
        &mut self,
        character: &ArticulatedCharacter,
        linear_at_root: Vector3<f64>,
        angular: Vector3<f64>,
    ) {
        if character.base() == BaseKind::Free {
            let p = self.root_position(character);
            let vo = linear_at_root - angular.cross(&p);
            self.qdot[0] = angular.x;
            self.qdot[1] = angular.y;
            self.qdot[2] = angular.z;
            self.qdot[3] = vo.x;
            self.qdot[4] = vo.y;
            self.qdot[5] = vo.z;
        }
    }

    /// Linear velocity of the root anchor point in world coordinates.
    pub fn root_linear_velocity(&self, character: &ArticulatedCharacter) -> Vector3<f64> {
        match character.base() {
            BaseKind::Free => {
                let w = Vector3::new(self.qdot[0], self.qdot[1], self.qdot[2]);
                let vo = Vector3::new(self.qdot[3], self.qdot[4], self.qdot[5]);
                vo + w.cross(&self.root_position(character))
            }
            BaseKind::Fixed => Vector3::zeros(),
        }
    }

    pub fn joint_angles<'a>(&'a self, character: &ArticulatedCharacter) -> &'a [f64] {
        match character.base() {
            BaseKind::Free => &self.q[7..],
            BaseKind::Fixed => &self.q[..],
        }
    }

    pub fn joint_rates<'a>(&'a self, character: &ArticulatedCharacter) -> &'a [f64] {
        &self.qdot[character.base_dofs()..]
    }

    pub fn joint_angles_mut<'a>(&'a mut self, character: &ArticulatedCharacter) -> &'a mut [f64] {
        match character.base() {
            BaseKind::Free => &mut self.q[7..],
            BaseKind::Fixed => &mut self.q[..],
        }
    }

    pub fn joint_rates_mut<'a>(&'a mut self, character: &ArticulatedCharacter) -> &'a mut [f64] {
        let b = character.base_dofs();
        &mut self.qdot[b..]
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.qdot).all(|v| v.is_finite())
    }
}
