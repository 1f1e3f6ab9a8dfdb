//! Kinematic bicycle model.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Result, SpadError};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub x_m: f64,
    pub y_m: f64,
    pub velocity_mps: f64,
    pub heading_rad: f64,
}

impl VehicleState {
    pub fn at(x_m: f64, y_m: f64) -> Self {
        Self { x_m, y_m, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub accel_mps2: f64,
    pub front_steer_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyGeometry {
    pub front_axle_to_cg_m: f64,
    pub rear_axle_to_cg_m: f64,
}

impl Default for BodyGeometry {
    fn default() -> Self {
        Self { front_axle_to_cg_m: 1.105, rear_axle_to_cg_m: 1.738 }
    }
}

/// Wrap an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

pub fn slip_angle(input: &ControlInput, geom: &BodyGeometry) -> Result<f64> {
    let steer = input.front_steer_rad;
    if !(steer.abs() < FRAC_PI_2) {
        return Err(SpadError::Domain(format!("front steering {steer} rad is not inside (-pi/2, pi/2)")));
    }
    if !(geom.front_axle_to_cg_m > 0.0 && geom.rear_axle_to_cg_m > 0.0) {
        return Err(SpadError::Domain("axle distances must be positive".into()));
    }
    let lr = geom.rear_axle_to_cg_m;
    Ok((lr * steer.tan() / (lr + geom.front_axle_to_cg_m)).atan())
}

pub fn step_bicycle(
    state: &VehicleState,
    input: &ControlInput,
    geom: &BodyGeometry,
    dt: f64,
) -> Result<VehicleState> {
    if !(dt > 0.0) {
        return Err(SpadError::Domain(format!("time step {dt} must be positive")));
    }
    let psi = slip_angle(input, geom)?;
    let v = state.velocity_mps;
    let course = state.heading_rad + psi;
    Ok(VehicleState {
        x_m: state.x_m + v * course.cos() * dt,
        y_m: state.y_m + v * course.sin() * dt,
        velocity_mps: (v + input.accel_mps2 * dt).max(0.0),
        heading_rad: normalize_angle(state.heading_rad + v * psi.sin() / geom.rear_axle_to_cg_m * dt),
    })
}

pub fn pairwise_distance(a: &VehicleState, b: &VehicleState) -> f64 {
    (a.x_m - b.x_m).hypot(a.y_m - b.y_m)
}
