//! Optical materials: complex refractive index tables and the shipped library.
//!
//! Indices use the `n - i·k` convention with `k >= 0` for absorbing media,
//! paired with `exp(+iωt)` time dependence. A positive `k` therefore yields
//! a positive modal absorption coefficient downstream.
//!
//! Shipped semiconductor and oxide entries are tabulated from published
//! dispersion models rather than measured data:
//!
//! * GaAs and Al(x)Ga(1-x)As: modified single-oscillator model of
//!   M. A. Afromowitz, Solid State Commun. 15, 59 (1974). The model was fitted
//!   for direct-gap compositions; for x = 0.70..0.75 it is used as an
//!   extrapolation below the band edge, where it stays within a few 1e-2 of
//!   later ellipsometric data.
//! * SiOx (mask residue): fused-silica Sellmeier fit of I. H. Malitson,
//!   J. Opt. Soc. Am. 55, 1205 (1965).
//! * NbN: constant 5.23 - 5.82i across the band (thin-film value reported
//!   for ~4 nm films at 1300 nm).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wavelength band covered by the shipped tables [m].
pub const LIBRARY_BAND: (f64, f64) = (1260e-9, 1360e-9);
const LIBRARY_STEP: f64 = 10e-9;

/// One tabulated point: wavelength [m] and `n - i·k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSample {
    pub wavelength: f64,
    pub n: f64,
    pub k: f64,
}

/// A named material with a tabulated complex refractive index.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    name: String,
    table: Vec<IndexSample>,
}

impl Material {
    /// Builds a material, validating the table invariants.
    pub fn new(name: impl Into<String>, table: Vec<IndexSample>) -> Result<Self> {
        let name = name.into();
        if table.is_empty() {
            return Err(Error::config(format!("material '{name}' has an empty index table")));
        }
        for w in table.windows(2) {
            if !(w[1].wavelength > w[0].wavelength) {
                return Err(Error::config(format!("material '{name}': table wavelengths must be strictly increasing")));
            }
        }
        for s in &table {
            if !(s.wavelength > 0.0 && s.wavelength.is_finite()) {
                return Err(Error::config(format!("material '{name}': non-positive wavelength")));
            }
            if !(s.n > 0.0 && s.n.is_finite()) {
                return Err(Error::config(format!("material '{name}': real index must be > 0")));
            }
            if !(s.k >= 0.0 && s.k.is_finite()) {
                return Err(Error::config(format!("material '{name}': extinction coefficient must be >= 0")));
            }
        }
        Ok(Self { name, table })
    }

    /// A wavelength-independent material covering the library band.
    pub fn constant(name: impl Into<String>, n: f64, k: f64) -> Result<Self> {
        let table = library_wavelengths().map(|wavelength| IndexSample { wavelength, n, k }).collect();
        Self::new(name, table)
    }

    /// Tabulates a lossless dispersion model over the library band.
    pub fn from_model(name: impl Into<String>, model: impl Fn(f64) -> f64) -> Result<Self> {
        let table =
            library_wavelengths().map(|wavelength| IndexSample { wavelength, n: model(wavelength), k: 0.0 }).collect();
        Self::new(name, table)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn table(&self) -> &[IndexSample] {
        &self.table
    }

    /// Complex index `n - i·k` at `wavelength` [m], linearly interpolated in
    /// both parts. Wavelengths outside the table are rejected, never clamped.
    pub fn lookup_index(&self, wavelength: f64) -> Result<Complex64> {
        let first = self.table[0];
        let last = self.table[self.table.len() - 1];
        let out_of_range = || Error::WavelengthOutOfRange {
            material: self.name.clone(),
            wavelength_nm: wavelength * 1e9,
            min_nm: first.wavelength * 1e9,
            max_nm: last.wavelength * 1e9,
        };
        if !wavelength.is_finite() || wavelength < first.wavelength || wavelength > last.wavelength {
            return Err(out_of_range());
        }
        // partition_point gives the first node strictly above the wavelength.
        let hi = self.table.partition_point(|s| s.wavelength <= wavelength);
        if hi == 0 {
            return Err(out_of_range());
        }
        let lo = &self.table[hi - 1];
        if lo.wavelength == wavelength || hi == self.table.len() {
            return Ok(Complex64::new(lo.n, -lo.k));
        }
        let up = &self.table[hi];
        let t = (wavelength - lo.wavelength) / (up.wavelength - lo.wavelength);
        let n = lo.n + t * (up.n - lo.n);
        let k = lo.k + t * (up.k - lo.k);
        Ok(Complex64::new(n, -k))
    }

    /// Relative permittivity `(n - i·k)²` at `wavelength`.
    pub fn permittivity(&self, wavelength: f64) -> Result<Complex64> {
        let n = self.lookup_index(wavelength)?;
        Ok(n * n)
    }
}

fn library_wavelengths() -> impl Iterator<Item = f64> {
    let steps = ((LIBRARY_BAND.1 - LIBRARY_BAND.0) / LIBRARY_STEP).round() as usize;
    (0..=steps).map(|i| LIBRARY_BAND.0 + i as f64 * LIBRARY_STEP)
}

/// Closed-form dispersion models used to build the shipped tables.
pub mod dispersion {
    use std::f64::consts::PI;

    /// Photon energy [eV] for a vacuum wavelength [m].
    fn photon_ev(wavelength: f64) -> f64 {
        1.239_841_984e-6 / wavelength
    }

    /// Refractive index of Al(x)Ga(1-x)As below the band edge (Afromowitz 1974).
    pub fn afromowitz_algaas(al_fraction: f64, wavelength: f64) -> f64 {
        let x = al_fraction;
        let e = photon_ev(wavelength);
        let e0 = 3.65 + 0.871 * x + 0.179 * x * x;
        let ed = 36.1 - 2.45 * x;
        let eg = 1.424 + 1.266 * x + 0.26 * x * x;
        let eta = PI * ed / (2.0 * e0.powi(3) * (e0 * e0 - eg * eg));
        let ef2 = 2.0 * e0 * e0 - eg * eg;
        let log_term = ((ef2 - e * e) / (eg * eg - e * e)).ln();
        let eps = 1.0 + ed / e0 + ed * e * e / e0.powi(3) + eta * e.powi(4) / PI * log_term;
        eps.sqrt()
    }

    /// Refractive index of fused silica (Malitson 1965).
    pub fn malitson_silica(wavelength: f64) -> f64 {
        let l2 = (wavelength * 1e6).powi(2);
        let terms = [(0.696_166_3, 0.068_404_3), (0.407_942_6, 0.116_241_4), (0.897_479_4, 9.896_161)];
        let sum: f64 = terms.iter().map(|(b, c)| b * l2 / (l2 - c * c)).sum();
        (1.0 + sum).sqrt()
    }
}

/// Name of the Al(x)Ga(1-x)As library entry for a given aluminium fraction,
/// e.g. `Al0.75Ga0.25As`.
pub fn algaas_name(al_fraction: f64) -> String {
    format!("Al{:.2}Ga{:.2}As", al_fraction, 1.0 - al_fraction)
}

/// Collection of materials addressed by name.
#[derive(Debug, Clone, Default)]
pub struct MaterialLibrary {
    materials: Vec<Material>,
}

impl MaterialLibrary {
    pub fn empty() -> Self {
        Self::default()
    }

    /// GaAs, Al0.75Ga0.25As, Al0.70Ga0.30As, NbN, SiOx and air over 1260-1360 nm.
    pub fn standard() -> Self {
        let mut lib = Self::empty();
        lib.insert(
            Material::from_model("GaAs", |l| dispersion::afromowitz_algaas(0.0, l)).expect("GaAs model table is valid"),
        );
        for x in [0.75, 0.70] {
            lib.insert(
                Material::from_model(algaas_name(x), move |l| dispersion::afromowitz_algaas(x, l))
                    .expect("AlGaAs model table is valid"),
            );
        }
        lib.insert(Material::constant("NbN", 5.23, 5.82).expect("valid"));
        lib.insert(Material::from_model("SiOx", dispersion::malitson_silica).expect("valid"));
        lib.insert(Material::constant("air", 1.0, 0.0).expect("valid"));
        lib
    }

    /// Adds a material, replacing any existing entry of the same name.
    pub fn insert(&mut self, material: Material) {
        match self.materials.iter_mut().find(|m| m.name == material.name) {
            Some(slot) => *slot = material,
            None => self.materials.push(material),
        }
    }

    pub fn get(&self, name: &str) -> Result<&Material> {
        self.materials
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::config(format!("unknown material '{name}'")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.iter()
    }
}
