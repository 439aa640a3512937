//! Electromagnetic force and field laws for the conveyor line.
//!
//! Covers the circular-coil center field, the two-conductor guideway
//! trace field and the thrust it exerts on a mover magnet, the maximum
//! transition velocity over a trace interval, Lorentz force, magnetic
//! energy density, and the attraction across a levitation air gap.
//!
//! Conventions: SI units throughout. `x` is the travel direction along
//! the guideway, `z` points from the trace plane up toward the magnet.
//! All functions are pure; identical inputs give bit-identical results.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Vacuum permeability μ₀ [H/m].
pub const MU_0: f64 = 4.0e-7 * PI;

/// Standard gravity [m/s²].
pub const G_GRAV: f64 = 9.81;

/// Bundle of the physical constants the force laws depend on.
///
/// These are fixed at compile time and never scenario-dependent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Vacuum permeability [H/m].
    pub mu0: f64,
    /// Gravitational acceleration [m/s²].
    pub g_grav: f64,
}

impl PhysicalConstants {
    /// The SI values used by every operation in this crate.
    pub const SI: PhysicalConstants = PhysicalConstants {
        mu0: MU_0,
        g_grav: G_GRAV,
    };
}

/// Cartesian 3-vector; units depend on context (A·m² for moments,
/// T for fields, N for forces).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EmFieldError {
    #[error("{what} must be finite and in range, got {value}")]
    InvalidParameter { what: &'static str, value: f64 },
    #[error("non-finite field sample while differentiating along {axis}")]
    NonFiniteField { axis: char },
    #[error("observation point lies on the trace conductor at x = {conductor_x}")]
    OnConductor { conductor_x: f64 },
    #[error("net work over [{x_start}, {x_end}] is negative ({work} J); no real velocity")]
    NegativeWork { x_start: f64, x_end: f64, work: f64 },
    #[error("invalid interval: x_start = {x_start} must be less than x_end = {x_end}")]
    BadInterval { x_start: f64, x_end: f64 },
}

fn check(what: &'static str, value: f64, ok: bool) -> Result<(), EmFieldError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(EmFieldError::InvalidParameter { what, value })
    }
}

/// Permanent-magnet plate mounted on a mover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetSpec {
    /// Remanent flux density B_r [T].
    pub remanence: f64,
    /// Magnet volume V_m [m³].
    pub volume: f64,
    /// Material density ρ_m [kg/m³].
    pub density: f64,
}

impl MagnetSpec {
    pub fn new(remanence: f64, volume: f64, density: f64) -> Result<Self, EmFieldError> {
        let spec = MagnetSpec {
            remanence,
            volume,
            density,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EmFieldError> {
        check("remanence", self.remanence, self.remanence >= 0.0)?;
        check("magnet volume", self.volume, self.volume >= 0.0)?;
        check("magnet density", self.density, self.density > 0.0)
    }

    /// Magnet mass [kg]; exactly ρ_m · V_m.
    pub fn mass(&self) -> f64 {
        self.density * self.volume
    }
}

/// Single energized circular coil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoilSpec {
    /// Coil current I [A].
    pub current: f64,
    /// Number of turns N.
    pub turns: u32,
    /// Coil radius R [m].
    pub radius: f64,
}

impl CoilSpec {
    pub fn new(current: f64, turns: u32, radius: f64) -> Result<Self, EmFieldError> {
        let spec = CoilSpec {
            current,
            turns,
            radius,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EmFieldError> {
        check("coil current", self.current, true)?;
        check("coil turns", self.turns as f64, self.turns >= 1)?;
        check("coil radius", self.radius, self.radius > 0.0)
    }
}

/// Pair of parallel guideway conductors driving one mover magnet.
///
/// The conductors run along y at x = ±`half_offset` in the z = 0 plane,
/// both energized with `current` in the same sense, so their
/// superposition reproduces the closed-form thrust of [`trace_force_x`].
/// The magnet rides at height `height` above the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceGeometry {
    /// Trace pair half-spacing Δx₀ [m].
    pub half_offset: f64,
    /// Magnet levitation height d above the trace plane [m].
    pub height: f64,
    /// Trace current I [A].
    pub current: f64,
}

impl TraceGeometry {
    pub fn new(half_offset: f64, height: f64, current: f64) -> Result<Self, EmFieldError> {
        let geom = TraceGeometry {
            half_offset,
            height,
            current,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<(), EmFieldError> {
        check("trace half offset", self.half_offset, self.half_offset > 0.0)?;
        check("trace height", self.height, self.height > 0.0)?;
        check("trace current", self.current, true)
    }
}

/// Levitation electromagnet working across an air gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapActuatorSpec {
    /// Winding turns N.
    pub turns: u32,
    /// Pole face area A [m²].
    pub pole_area: f64,
    /// Air gap g [m].
    pub gap: f64,
    /// Coil current I [A].
    #[serde(default)]
    pub current: f64,
}

impl GapActuatorSpec {
    pub fn new(turns: u32, pole_area: f64, gap: f64, current: f64) -> Result<Self, EmFieldError> {
        let spec = GapActuatorSpec {
            turns,
            pole_area,
            gap,
            current,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EmFieldError> {
        check("actuator turns", self.turns as f64, self.turns >= 1)?;
        check("pole area", self.pole_area, self.pole_area > 0.0)?;
        check("air gap", self.gap, self.gap > 0.0)?;
        check("actuator current", self.current, true)
    }

    /// Same actuator with a different drive current.
    pub fn with_current(self, current: f64) -> GapActuatorSpec {
        GapActuatorSpec { current, ..self }
    }
}

/// Flux density at the center of a circular coil [T]: `B = μ₀ I N / (2R)`.
///
/// Sign follows the sign of the current. The printed source formula has
/// no axial falloff, so neither does this one.
pub fn coil_field(spec: &CoilSpec) -> f64 {
    MU_0 * spec.current * spec.turns as f64 / (2.0 * spec.radius)
}

/// Dipole moment of a magnet plate [A·m²]: `m = (0, 0, B_r V_m / μ₀)`.
///
/// The moment is z-only: the plate is magnetized normal to the trace
/// plane, which is what levitation requires.
pub fn magnet_moment(spec: &MagnetSpec) -> Vec3 {
    Vec3::new(0.0, 0.0, spec.remanence * spec.volume / MU_0)
}

/// Recommended central-difference step for [`dipole_force`]:
/// 10⁻⁶ × the characteristic length of the field variation.
pub fn gradient_step(characteristic_length: f64) -> f64 {
    1.0e-6 * characteristic_length
}

/// Force on a dipole in a spatially varying field [N]: `F = ∇(m⃗·B⃗)`.
///
/// The gradient is evaluated by central differences with step `h` per
/// axis, sampling `field` at six points around `at`.
pub fn dipole_force<F>(moment: Vec3, field: F, at: Vec3, h: f64) -> Result<Vec3, EmFieldError>
where
    F: Fn(Vec3) -> Vec3,
{
    check("difference step h", h, h > 0.0)?;
    if !moment.is_finite() {
        return Err(EmFieldError::InvalidParameter {
            what: "moment component",
            value: f64::NAN,
        });
    }
    if !at.is_finite() {
        return Err(EmFieldError::InvalidParameter {
            what: "observation point component",
            value: f64::NAN,
        });
    }
    let mut components = [0.0; 3];
    for (i, axis) in ['x', 'y', 'z'].into_iter().enumerate() {
        let mut plus = at;
        let mut minus = at;
        match i {
            0 => {
                plus.x += h;
                minus.x -= h;
            }
            1 => {
                plus.y += h;
                minus.y -= h;
            }
            _ => {
                plus.z += h;
                minus.z -= h;
            }
        }
        let b_plus = field(plus);
        let b_minus = field(minus);
        if !b_plus.is_finite() || !b_minus.is_finite() {
            return Err(EmFieldError::NonFiniteField { axis });
        }
        components[i] = (moment.dot(b_plus) - moment.dot(b_minus)) / (2.0 * h);
    }
    Ok(Vec3::new(components[0], components[1], components[2]))
}

/// Flux density of the trace pair at `at` [T]: the superposition of the
/// two nearest infinite-conductor fields, `μ₀I/(2πr)` each.
///
/// Errors if `at` lies on either conductor.
pub fn trace_field(geom: &TraceGeometry, at: Vec3) -> Result<Vec3, EmFieldError> {
    let mut b = Vec3::ZERO;
    for conductor_x in [geom.half_offset, -geom.half_offset] {
        let dx = at.x - conductor_x;
        let r2 = dx * dx + at.z * at.z;
        if r2 == 0.0 {
            return Err(EmFieldError::OnConductor { conductor_x });
        }
        let k = MU_0 * geom.current / (TAU * r2);
        b = b + Vec3::new(-at.z * k, 0.0, dx * k);
    }
    Ok(b)
}

/// Slope of one thrust-bracket term `u/(u²+d²)`: `(d²−u²)/(u²+d²)²`.
fn bracket_term_slope(u: f64, d: f64) -> f64 {
    let r2 = u * u + d * d;
    (d * d - u * u) / (r2 * r2)
}

/// Thrust on the mover magnet from the trace pair at track position x [N]:
///
/// `F_x = (B_r V_m I / 2π) · d/dx [ (x−Δx₀)/((x−Δx₀)²+d²) + (x+Δx₀)/((x+Δx₀)²+d²) ]`
///
/// with the derivative taken in closed form. Finite for any x since d > 0.
pub fn trace_force_x(geom: &TraceGeometry, magnet: &MagnetSpec, x: f64) -> f64 {
    let prefactor = magnet.remanence * magnet.volume * geom.current / TAU;
    prefactor
        * (bracket_term_slope(x - geom.half_offset, geom.height)
            + bracket_term_slope(x + geom.half_offset, geom.height))
}

/// Composite Simpson's rule over `panels` (even) equal intervals.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    debug_assert!(panels >= 2 && panels % 2 == 0);
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let weight = if i % 2 == 0 { 2.0 } else { 4.0 };
        acc += weight * f(a + h * i as f64);
    }
    acc * h / 3.0
}

const TRANSITION_QUADRATURE_PANELS: usize = 4096;

/// Top speed a mover starting from rest reaches across `[x_start, x_end]`
/// [m/s]: integrates `F_x = m v dv/dx` to `v = √((2/m) ∫ F_x dx)`.
///
/// The work integral uses composite Simpson quadrature on the analytic
/// thrust; deterministic for fixed inputs. The magnet volume enters both
/// the thrust and the mass, so the result does not change when magnets
/// are added (volume and mass scaled together).
pub fn max_transition_velocity(
    geom: &TraceGeometry,
    magnet: &MagnetSpec,
    x_start: f64,
    x_end: f64,
) -> Result<f64, EmFieldError> {
    check("x_start", x_start, true)?;
    check("x_end", x_end, true)?;
    if x_start >= x_end {
        return Err(EmFieldError::BadInterval { x_start, x_end });
    }
    let mass = magnet.mass();
    check("magnet mass", mass, mass > 0.0)?;
    let work = simpson(
        |x| trace_force_x(geom, magnet, x),
        x_start,
        x_end,
        TRANSITION_QUADRATURE_PANELS,
    );
    if work < 0.0 {
        return Err(EmFieldError::NegativeWork {
            x_start,
            x_end,
            work,
        });
    }
    Ok((2.0 * work / mass).sqrt())
}

/// Magnitude of the Lorentz force on a moving charge [N]:
/// `F = q v B sin(θ)`.
pub fn lorentz_force(charge: f64, speed: f64, flux_density: f64, angle: f64) -> f64 {
    charge * speed * flux_density * angle.sin()
}

/// Magnetic field energy density [J/m³]: `u = B² / (2μ₀)`.
pub fn magnetic_energy_density(flux_density: f64) -> f64 {
    flux_density * flux_density / (2.0 * MU_0)
}

/// Attraction across the working air gap [N], as a positive magnitude:
/// `F = μ₀ N² A I² / (2g²)`.
///
/// Constant-current co-energy of the gap inductance `L(g) = μ₀N²A/g`
/// with `W_m = ½LI²`; the force acts to close the gap.
pub fn gap_force(spec: &GapActuatorSpec) -> f64 {
    let n = spec.turns as f64;
    MU_0 * n * n * spec.pole_area * spec.current * spec.current / (2.0 * spec.gap * spec.gap)
}

/// Coil current that makes [`gap_force`] carry `load_mass` against
/// gravity at the spec's gap [A]: `I = g·√(2 m g_grav / (μ₀ N² A))`.
///
/// Only the actuator's turns, pole area, and gap are read; its `current`
/// field is ignored.
pub fn levitation_current_for_load(
    spec: &GapActuatorSpec,
    load_mass: f64,
) -> Result<f64, EmFieldError> {
    check("load mass", load_mass, load_mass >= 0.0)?;
    let n = spec.turns as f64;
    Ok(spec.gap * (2.0 * load_mass * G_GRAV / (MU_0 * n * n * spec.pole_area)).sqrt())
}
