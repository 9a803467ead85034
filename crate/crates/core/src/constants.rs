//! Physical constants (CODATA 2018, exact SI values where defined).
//!
//! All photon-energy arithmetic in the crate goes through [`photon_energy`].

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Planck constant [J s].
pub const PLANCK: f64 = 6.626_070_15e-34;

/// h·c [J m].
pub const PLANCK_TIMES_C: f64 = PLANCK * SPEED_OF_LIGHT;

/// Vacuum impedance sqrt(mu0/eps0) [Ohm].
pub const VACUUM_IMPEDANCE: f64 = 376.730_313_668;

/// Energy of one photon at `wavelength` [m], in joules.
pub fn photon_energy(wavelength: f64) -> f64 {
    PLANCK_TIMES_C / wavelength
}

/// Photon flux [1/s] carried by `power` [W] at `wavelength` [m].
pub fn photon_flux(power: f64, wavelength: f64) -> f64 {
    power / photon_energy(wavelength)
}

/// Free-space wavenumber 2π/λ [1/m].
pub fn wavenumber(wavelength: f64) -> f64 {
    2.0 * std::f64::consts::PI / wavelength
}
