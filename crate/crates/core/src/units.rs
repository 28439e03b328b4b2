//! Conversions between user-facing units (ns, MHz) and the internal
//! cavity-dynamics units (µs, rad/µs).

use std::f64::consts::TAU;

pub const NS_PER_US: f64 = 1e3;

/// Ordinary frequency in MHz to angular frequency in rad/µs.
#[inline]
pub fn angular(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

/// Ordinary frequency in MHz to angular frequency in rad/ns.
#[inline]
pub fn angular_per_ns(f_mhz: f64) -> f64 {
    TAU * f_mhz / NS_PER_US
}

#[inline]
pub fn ns_to_us(t_ns: f64) -> f64 {
    t_ns / NS_PER_US
}

#[inline]
pub fn us_to_ns(t_us: f64) -> f64 {
    t_us * NS_PER_US
}

/// Phase in radians accumulated by a tone of `f_mhz` over `t_ns`.
#[inline]
pub fn phase(f_mhz: f64, t_ns: f64) -> f64 {
    TAU * f_mhz * t_ns / NS_PER_US
}
