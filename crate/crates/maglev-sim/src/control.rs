//! Mover control: PID regulation of the levitation gap, rest-to-rest
//! trapezoidal motion profiles, and linear-synchronous-motor traction
//! with its inverse.
//!
//! The PID is positional form with rectangle-rule integration,
//! derivative-on-error, and anti-windup by integral clamping. Profiles
//! are piecewise-constant-acceleration plans that start and end at
//! rest. Traction follows the dq-frame force law with the d-axis
//! current regulated to exactly zero.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ControlError {
    #[error("{what} must be finite and in range, got {value}")]
    InvalidParameter { what: &'static str, value: f64 },
    #[error("d-axis flux linkage is zero; force demand cannot be met by any current")]
    SingularFluxLinkage,
}

fn check(what: &'static str, value: f64, ok: bool) -> Result<(), ControlError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ControlError::InvalidParameter { what, value })
    }
}

/// PID gains and output/anti-windup bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PIDGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Lower output clamp.
    pub output_min: f64,
    /// Upper output clamp.
    pub output_max: f64,
    /// Anti-windup bound: the integral accumulator stays in ±this.
    pub integral_limit: f64,
}

impl PIDGains {
    pub fn new(
        kp: f64,
        ki: f64,
        kd: f64,
        output_min: f64,
        output_max: f64,
        integral_limit: f64,
    ) -> Result<Self, ControlError> {
        let gains = PIDGains {
            kp,
            ki,
            kd,
            output_min,
            output_max,
            integral_limit,
        };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        check("kp", self.kp, self.kp >= 0.0)?;
        check("ki", self.ki, self.ki >= 0.0)?;
        check("kd", self.kd, self.kd >= 0.0)?;
        check("output_min", self.output_min, true)?;
        check(
            "output_max",
            self.output_max,
            self.output_min < self.output_max,
        )?;
        check(
            "integral_limit",
            self.integral_limit,
            self.integral_limit >= 0.0,
        )
    }
}

/// Controller memory between steps. `Default` is a fresh controller.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PIDState {
    /// Accumulated ∫e·dt, clamped to ±integral_limit.
    pub integral: f64,
    /// Error from the previous step.
    pub prev_error: f64,
    /// False until the first step; the derivative term needs history.
    pub initialized: bool,
}

/// One PID update. `error` is setpoint − measured; returns the clamped
/// output and the successor state.
///
/// The integral accumulates by rectangle rule and is clamped to
/// ±integral_limit before use; the derivative acts on the error and
/// contributes nothing on the first call.
pub fn pid_step(gains: &PIDGains, state: &PIDState, error: f64, dt: f64) -> (f64, PIDState) {
    debug_assert!(dt > 0.0, "pid_step needs dt > 0, got {dt}");
    let integral = (state.integral + error * dt).clamp(-gains.integral_limit, gains.integral_limit);
    let derivative = if state.initialized {
        (error - state.prev_error) / dt
    } else {
        0.0
    };
    let raw = gains.kp * error + gains.ki * integral + gains.kd * derivative;
    let output = raw.clamp(gains.output_min, gains.output_max);
    (
        output,
        PIDState {
            integral,
            prev_error: error,
            initialized: true,
        },
    )
}

/// One constant-acceleration stretch of a motion profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePhase {
    /// Phase length [s].
    pub duration: f64,
    /// Acceleration held through the phase [m/s²].
    pub acceleration: f64,
}

/// Rest-to-rest piecewise-constant-acceleration plan.
///
/// Velocity is continuous across phases, bounded by `v_limit`, with
/// |acceleration| bounded by `a_limit`; the phases cover exactly
/// `total_distance`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionProfile {
    pub phases: Vec<ProfilePhase>,
    pub total_time: f64,
    pub total_distance: f64,
    pub v_limit: f64,
    pub a_limit: f64,
}

/// Plans a rest-to-rest move of `distance` under the given limits:
/// trapezoidal (accelerate, cruise, decelerate) when the distance
/// reaches cruise speed, `distance ≥ v_limit²/a_limit`; otherwise
/// triangular with peak velocity `√(distance·a_limit)`.
pub fn plan_trapezoid(
    distance: f64,
    v_limit: f64,
    a_limit: f64,
) -> Result<MotionProfile, ControlError> {
    check("distance", distance, distance >= 0.0)?;
    check("v_limit", v_limit, v_limit > 0.0)?;
    check("a_limit", a_limit, a_limit > 0.0)?;

    let mut phases = Vec::new();
    let total_time;
    if distance == 0.0 {
        total_time = 0.0;
    } else if distance >= v_limit * v_limit / a_limit {
        // reaches cruise speed: accel to v_limit, cruise, mirror decel
        let t_ramp = v_limit / a_limit;
        let d_cruise = distance - v_limit * v_limit / a_limit;
        let t_cruise = d_cruise / v_limit;
        phases.push(ProfilePhase {
            duration: t_ramp,
            acceleration: a_limit,
        });
        if t_cruise > 0.0 {
            phases.push(ProfilePhase {
                duration: t_cruise,
                acceleration: 0.0,
            });
        }
        phases.push(ProfilePhase {
            duration: t_ramp,
            acceleration: -a_limit,
        });
        total_time = 2.0 * t_ramp + t_cruise;
    } else {
        // short move: accelerate to the triangular peak, then mirror
        let v_peak = (distance * a_limit).sqrt();
        let t_ramp = v_peak / a_limit;
        phases.push(ProfilePhase {
            duration: t_ramp,
            acceleration: a_limit,
        });
        phases.push(ProfilePhase {
            duration: t_ramp,
            acceleration: -a_limit,
        });
        total_time = 2.0 * t_ramp;
    }
    Ok(MotionProfile {
        phases,
        total_time,
        total_distance: distance,
        v_limit,
        a_limit,
    })
}

/// Samples a profile at time `t`: (distance covered, velocity,
/// acceleration). Past the end it returns `(total_distance, 0, 0)`;
/// the move is rest-to-rest by contract.
pub fn profile_sample(profile: &MotionProfile, t: f64) -> (f64, f64, f64) {
    debug_assert!(t >= 0.0, "profile_sample needs t >= 0, got {t}");
    let t = t.max(0.0);
    if t >= profile.total_time {
        return (profile.total_distance, 0.0, 0.0);
    }
    let mut x = 0.0;
    let mut v = 0.0;
    let mut elapsed = 0.0;
    for phase in &profile.phases {
        if t < elapsed + phase.duration {
            let local = t - elapsed;
            let a = phase.acceleration;
            return (x + v * local + 0.5 * a * local * local, v + a * local, a);
        }
        let d = phase.duration;
        x += v * d + 0.5 * phase.acceleration * d * d;
        v += phase.acceleration * d;
        elapsed += d;
    }
    (profile.total_distance, 0.0, 0.0)
}

/// Linear synchronous motor operating point in the dq frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LSMState {
    /// d-axis flux linkage ψ_d [Wb].
    pub psi_d: f64,
    /// q-axis flux linkage ψ_q [Wb].
    pub psi_q: f64,
    /// d-axis current [A]; regulated to 0 in this toolkit.
    pub i_d: f64,
    /// q-axis (thrust) current [A].
    pub i_q: f64,
    /// Stator pole pitch τ [m].
    pub tau: f64,
}

impl LSMState {
    pub fn new(psi_d: f64, psi_q: f64, i_d: f64, i_q: f64, tau: f64) -> Result<Self, ControlError> {
        let s = LSMState {
            psi_d,
            psi_q,
            i_d,
            i_q,
            tau,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        check("psi_d", self.psi_d, true)?;
        check("psi_q", self.psi_q, true)?;
        check("i_d", self.i_d, true)?;
        check("i_q", self.i_q, true)?;
        check("pole pitch tau", self.tau, self.tau > 0.0)
    }
}

/// LSM thrust [N]: `F = (3π/2τ)(ψ_d·i_q − ψ_q·i_d)`.
pub fn lsm_traction(s: &LSMState) -> f64 {
    3.0 * PI / (2.0 * s.tau) * (s.psi_d * s.i_q - s.psi_q * s.i_d)
}

/// Thrust current for a force demand with the d-axis current at zero
/// [A]: `i_q = F·2τ/(3π·ψ_d)`. Errors when ψ_d = 0 (no current can
/// produce the demand).
pub fn iq_for_force(psi_d: f64, tau: f64, f_demand: f64) -> Result<f64, ControlError> {
    check("psi_d", psi_d, true)?;
    check("pole pitch tau", tau, tau > 0.0)?;
    check("force demand", f_demand, true)?;
    if psi_d == 0.0 {
        return Err(ControlError::SingularFluxLinkage);
    }
    Ok(f_demand * 2.0 * tau / (3.0 * PI * psi_d))
}
