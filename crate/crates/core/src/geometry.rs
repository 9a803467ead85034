//! Ridge-waveguide cross-section with an optional nanowire array on top.
//!
//! Coordinates: `y = 0` is the top surface of the substrate, `y` grows
//! upward through the layer stack; `x = 0` is the centre of the simulation
//! window. All lengths are in metres.

use crate::error::{Error, Result};
use crate::materials::{algaas_name, MaterialLibrary};

/// Minimum cladding/air clearance between the guiding structure and the window walls.
pub const MIN_WINDOW_MARGIN: f64 = 1.5e-6;
const LENGTH_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub material: String,
    pub thickness: f64,
}

/// Layers above a semi-infinite substrate, plus the ambient cover material.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    pub substrate: String,
    /// Bottom-to-top, all of finite thickness.
    pub layers: Vec<Layer>,
    pub ambient: String,
}

impl LayerStack {
    pub fn new(substrate: impl Into<String>, layers: Vec<Layer>, ambient: impl Into<String>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("layer stack needs at least one finite layer above the substrate"));
        }
        if let Some(l) = layers.iter().find(|l| !(l.thickness > 0.0 && l.thickness.is_finite())) {
            return Err(Error::config(format!("layer '{}' has non-positive thickness {}", l.material, l.thickness)));
        }
        Ok(Self { substrate: substrate.into(), layers, ambient: ambient.into() })
    }

    /// Height of the top surface above the substrate.
    pub fn total_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    pub fn top_layer(&self) -> &Layer {
        self.layers.last().expect("non-empty by construction")
    }

    /// `y` coordinates of every layer boundary, bottom to top, starting at 0.
    pub fn interfaces(&self) -> Vec<f64> {
        let mut y = 0.0;
        let mut out = vec![0.0];
        for l in &self.layers {
            y += l.thickness;
            out.push(y);
        }
        out
    }

    /// Material filling the bottom row of a window whose lower edge is at `bottom`.
    pub fn material_at_window_bottom(&self, bottom: f64) -> &str {
        if bottom < 0.0 {
            return &self.substrate;
        }
        let mut top = 0.0;
        for l in &self.layers {
            top += l.thickness;
            if bottom < top - 1e-15 {
                return &l.material;
            }
        }
        &self.ambient
    }

    /// Material of the unetched stack at height `y`.
    fn material_at(&self, y: f64) -> &str {
        if y < 0.0 {
            return &self.substrate;
        }
        let mut top = 0.0;
        for l in &self.layers {
            top += l.thickness;
            if y < top {
                return &l.material;
            }
        }
        &self.ambient
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeSpec {
    pub width: f64,
    pub etch_depth: f64,
    /// Lateral position of the ridge centre relative to the window centre.
    pub center: f64,
}

/// SiOx (or other) residue left on top of each wire by the patterning mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CapLayer {
    pub material: String,
    pub thickness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NanowireArray {
    pub count: usize,
    pub width: f64,
    pub pitch: f64,
    pub thickness: f64,
    pub material: String,
    pub cap: Option<CapLayer>,
    /// Lateral offset of the array centre from the ridge centre.
    pub offset: f64,
}

impl NanowireArray {
    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::config("nanowire array needs at least one wire"));
        }
        for (what, v) in [("width", self.width), ("pitch", self.pitch), ("thickness", self.thickness)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("nanowire {what} must be > 0")));
            }
        }
        if self.pitch < self.width {
            return Err(Error::config("nanowire pitch must be >= wire width"));
        }
        if let Some(cap) = &self.cap {
            if !(cap.thickness > 0.0 && cap.thickness.is_finite()) {
                return Err(Error::config("cap thickness must be > 0"));
            }
        }
        Ok(())
    }

    /// Lateral span of the array: (count - 1)·pitch + width.
    pub fn extent(&self) -> f64 {
        (self.count as f64 - 1.0) * self.pitch + self.width
    }

    pub fn cap_thickness(&self) -> f64 {
        self.cap.as_ref().map_or(0.0, |c| c.thickness)
    }
}

/// Clearance between the outermost wire edge and the nearer ridge edge.
///
/// Negative values are allowed and mean the array overhangs the ridge.
pub fn alignment_margin(ridge: &RidgeSpec, array: &NanowireArray) -> f64 {
    (ridge.width - array.extent()) / 2.0 - array.offset.abs()
}

/// Rectangular simulation window: `x` in `[-width/2, width/2]`, `y` in `[bottom, top]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub width: f64,
    pub bottom: f64,
    pub top: f64,
}

impl Window {
    pub fn height(&self) -> f64 {
        self.top - self.bottom
    }

    /// Grows the window by `factor` laterally and upward. The bottom edge stays
    /// put so the substrate is not pulled into the domain.
    pub fn enlarged(&self, factor: f64) -> Window {
        Window { width: self.width * factor, bottom: self.bottom, top: self.bottom + self.height() * factor }
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Complete description of the structure at one wavelength.
#[derive(Debug, Clone)]
pub struct CrossSection {
    pub materials: MaterialLibrary,
    pub stack: LayerStack,
    pub ridge: RidgeSpec,
    pub wires: Option<NanowireArray>,
    pub window: Window,
    pub wavelength: f64,
}

impl CrossSection {
    /// Validates every geometric invariant, including the window clearance.
    pub fn new(
        materials: MaterialLibrary,
        stack: LayerStack,
        ridge: RidgeSpec,
        wires: Option<NanowireArray>,
        window: Window,
        wavelength: f64,
    ) -> Result<Self> {
        let xs = Self { materials, stack, ridge, wires, window, wavelength };
        xs.validate()?;
        Ok(xs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::config("wavelength must be > 0"));
        }
        // Resolve every material reference (and its index at this wavelength) up front.
        for name in self.material_names() {
            self.materials.get(name)?.lookup_index(self.wavelength)?;
        }
        let r = &self.ridge;
        if !(r.width > 0.0 && r.width.is_finite()) {
            return Err(Error::config("ridge width must be > 0"));
        }
        if !(r.etch_depth > 0.0 && r.etch_depth <= self.stack.total_thickness() + LENGTH_EPS) {
            return Err(Error::config(format!(
                "etch depth {:.1} nm must be in (0, {:.1}] nm",
                r.etch_depth * 1e9,
                self.stack.total_thickness() * 1e9
            )));
        }
        if let Some(w) = &self.wires {
            w.validate()?;
        }
        let win = &self.window;
        if !(win.width > 0.0 && win.height() > 0.0) {
            return Err(Error::config("simulation window must have positive width and height"));
        }
        let bounds = self.structure_bounds();
        let margins = [
            ("left", bounds.x0 + win.width / 2.0),
            ("right", win.width / 2.0 - bounds.x1),
            ("bottom", bounds.y0 - win.bottom),
            ("top", win.top - bounds.y1),
        ];
        for (side, m) in margins {
            if m < MIN_WINDOW_MARGIN - 1e-12 {
                return Err(Error::config(format!(
                    "simulation window leaves only {:.3} um of clearance on the {side} side (need {:.1} um)",
                    m * 1e6,
                    MIN_WINDOW_MARGIN * 1e6
                )));
            }
        }
        Ok(())
    }

    fn material_names(&self) -> Vec<&str> {
        let mut names = vec![self.stack.substrate.as_str(), self.stack.ambient.as_str()];
        names.extend(self.stack.layers.iter().map(|l| l.material.as_str()));
        if let Some(w) = &self.wires {
            names.push(&w.material);
            if let Some(c) = &w.cap {
                names.push(&c.material);
            }
        }
        names
    }

    pub fn stack_top(&self) -> f64 {
        self.stack.total_thickness()
    }

    pub fn etch_floor(&self) -> f64 {
        self.stack_top() - self.ridge.etch_depth
    }

    pub fn ridge_edges(&self) -> (f64, f64) {
        (self.ridge.center - self.ridge.width / 2.0, self.ridge.center + self.ridge.width / 2.0)
    }

    /// Each wire's rectangle, left to right.
    pub fn wire_rects(&self) -> Vec<Rect> {
        let Some(w) = &self.wires else { return Vec::new() };
        let center = self.ridge.center + w.offset;
        let y0 = self.stack_top();
        (0..w.count)
            .map(|k| {
                let c = center + (k as f64 - (w.count as f64 - 1.0) / 2.0) * w.pitch;
                Rect { x0: c - w.width / 2.0, x1: c + w.width / 2.0, y0, y1: y0 + w.thickness }
            })
            .collect()
    }

    /// Cap rectangles sitting on each wire.
    pub fn cap_rects(&self) -> Vec<Rect> {
        let Some(w) = &self.wires else { return Vec::new() };
        let Some(cap) = &w.cap else { return Vec::new() };
        self.wire_rects().into_iter().map(|r| Rect { y0: r.y1, y1: r.y1 + cap.thickness, ..r }).collect()
    }

    /// Bounding box of ridge, wires and caps.
    pub fn structure_bounds(&self) -> Rect {
        let (l, r) = self.ridge_edges();
        let mut b = Rect { x0: l, x1: r, y0: self.etch_floor(), y1: self.stack_top() };
        for w in self.wire_rects().into_iter().chain(self.cap_rects()) {
            b.x0 = b.x0.min(w.x0);
            b.x1 = b.x1.max(w.x1);
            b.y1 = b.y1.max(w.y1);
        }
        b
    }

    /// Material name at a point (points on an interface resolve arbitrarily).
    pub fn material_at(&self, x: f64, y: f64) -> &str {
        if let Some(w) = &self.wires {
            if self.wire_rects().iter().any(|r| r.contains(x, y)) {
                return &w.material;
            }
            if let Some(c) = &w.cap {
                if self.cap_rects().iter().any(|r| r.contains(x, y)) {
                    return &c.material;
                }
            }
        }
        let (l, r) = self.ridge_edges();
        if y > self.etch_floor() && y < self.stack_top() && !(x > l && x < r) {
            return &self.stack.ambient;
        }
        self.stack.material_at(y)
    }

    /// Smallest window, on a 50 nm raster, that leaves the minimum clearance
    /// around the structure. The bottom stays at the substrate top unless the
    /// lower cladding is too thin for that.
    pub fn fitted_window(&self) -> Window {
        let b = self.structure_bounds();
        let step = 50e-9;
        let up = |v: f64| (v / step - 1e-9).ceil() * step;
        let down = |v: f64| (v / step + 1e-9).floor() * step;
        let half = b.x0.abs().max(b.x1.abs()) + MIN_WINDOW_MARGIN;
        Window {
            width: 2.0 * up(half),
            bottom: down(b.y0 - MIN_WINDOW_MARGIN).min(0.0),
            top: up(b.y1 + MIN_WINDOW_MARGIN),
        }
    }

    /// Alignment margin of the wire array, if any.
    pub fn alignment_margin(&self) -> Option<f64> {
        self.wires.as_ref().map(|w| alignment_margin(&self.ridge, w))
    }

    /// Returns a copy with the wire array removed.
    pub fn without_wires(&self) -> Self {
        Self { wires: None, ..self.clone() }
    }
}

/// Knobs for the detector cross-section used throughout the examples and
/// acceptance checks. Dimensions follow the fabricated device; the two
/// documented ambiguities (AlGaAs composition and NbN thickness) are exposed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDesign {
    pub wavelength: f64,
    pub al_fraction: f64,
    pub cladding_thickness: f64,
    pub core_thickness: f64,
    pub ridge_width: f64,
    pub etch_depth: f64,
    pub wire_count: usize,
    pub wire_width: f64,
    pub wire_pitch: f64,
    pub wire_thickness: f64,
    pub cap_thickness: f64,
    pub wire_offset: f64,
    pub with_wires: bool,
}

impl Default for ReferenceDesign {
    fn default() -> Self {
        Self {
            wavelength: 1300e-9,
            al_fraction: 0.75,
            cladding_thickness: 1.5e-6,
            core_thickness: 300e-9,
            ridge_width: 1.85e-6,
            etch_depth: 250e-9,
            wire_count: 4,
            wire_width: 100e-9,
            wire_pitch: 250e-9,
            wire_thickness: 4.3e-9,
            cap_thickness: 100e-9,
            wire_offset: 0.0,
            with_wires: true,
        }
    }
}

impl ReferenceDesign {
    /// Builds the cross-section with a window that leaves exactly the minimum
    /// clearance laterally (rounded up to 50 nm) and above the caps.
    pub fn cross_section(&self) -> Result<CrossSection> {
        let mut materials = MaterialLibrary::standard();
        let cladding = algaas_name(self.al_fraction);
        if materials.get(&cladding).is_err() {
            let x = self.al_fraction;
            materials.insert(crate::materials::Material::from_model(cladding.clone(), move |l| {
                crate::materials::dispersion::afromowitz_algaas(x, l)
            })?);
        }
        let stack = LayerStack::new(
            "GaAs",
            vec![
                Layer { material: cladding, thickness: self.cladding_thickness },
                Layer { material: "GaAs".into(), thickness: self.core_thickness },
            ],
            "air",
        )?;
        let ridge = RidgeSpec { width: self.ridge_width, etch_depth: self.etch_depth, center: 0.0 };
        let wires = self.with_wires.then(|| NanowireArray {
            count: self.wire_count,
            width: self.wire_width,
            pitch: self.wire_pitch,
            thickness: self.wire_thickness,
            material: "NbN".into(),
            cap: (self.cap_thickness > 0.0)
                .then(|| CapLayer { material: "SiOx".into(), thickness: self.cap_thickness }),
            offset: self.wire_offset,
        });
        let mut xs = CrossSection {
            materials,
            stack,
            ridge,
            wires,
            window: Window { width: 0.0, bottom: 0.0, top: 0.0 },
            wavelength: self.wavelength,
        };
        xs.window = xs.fitted_window();
        xs.validate()?;
        Ok(xs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn array(count: usize, width: f64, pitch: f64, offset: f64) -> NanowireArray {
        NanowireArray { count, width, pitch, thickness: 4e-9, material: "NbN".into(), cap: None, offset }
    }

    #[test]
    fn reference_margin_is_half_micron() {
        let ridge = RidgeSpec { width: 1.85e-6, etch_depth: 250e-9, center: 0.0 };
        let a = array(4, 100e-9, 250e-9, 0.0);
        assert_relative_eq!(a.extent(), 850e-9, max_relative = 1e-12);
        assert_relative_eq!(alignment_margin(&ridge, &a), 0.5e-6, max_relative = 1e-12);
        let shifted = array(4, 100e-9, 250e-9, -100e-9);
        assert_relative_eq!(alignment_margin(&ridge, &shifted), 0.4e-6, max_relative = 1e-12);
    }

    #[test]
    fn margin_zero_when_array_fills_ridge() {
        let a = array(2, 100e-9, 200e-9, 0.0);
        let ridge = RidgeSpec { width: a.extent(), etch_depth: 1e-7, center: 0.0 };
        assert_eq!(alignment_margin(&ridge, &a), 0.0);
    }

    #[test]
    fn pitch_below_width_rejected() {
        assert!(array(2, 100e-9, 90e-9, 0.0).validate().is_err());
        assert!(array(0, 100e-9, 200e-9, 0.0).validate().is_err());
    }

    #[test]
    fn reference_cross_section_layout() {
        let xs = ReferenceDesign::default().cross_section().unwrap();
        assert_relative_eq!(xs.stack_top(), 1.8e-6, max_relative = 1e-12);
        assert_relative_eq!(xs.etch_floor(), 1.55e-6, max_relative = 1e-12);
        let wires = xs.wire_rects();
        assert_eq!(wires.len(), 4);
        assert_relative_eq!(wires[0].x0, -425e-9, epsilon = 1e-18);
        assert_relative_eq!(wires[3].x1, 425e-9, epsilon = 1e-18);
        assert_eq!(xs.material_at(-375e-9, 1.8e-6 + 2e-9), "NbN");
        assert_eq!(xs.material_at(-375e-9, 1.8e-6 + 50e-9), "SiOx");
        assert_eq!(xs.material_at(-200e-9, 1.8e-6 + 2e-9), "air");
        assert_eq!(xs.material_at(0.0, 1.7e-6), "GaAs");
        assert_eq!(xs.material_at(1.5e-6, 1.7e-6), "air");
        assert_eq!(xs.material_at(1.5e-6, 1.52e-6), "GaAs");
        assert_eq!(xs.material_at(1.5e-6, 1.0e-6), "Al0.75Ga0.25As");
        assert_eq!(xs.material_at(0.0, -1e-7), "GaAs");
        assert_relative_eq!(xs.alignment_margin().unwrap(), 0.5e-6, max_relative = 1e-12);
    }

    #[test]
    fn window_clearance_enforced() {
        let mut xs = ReferenceDesign::default().cross_section().unwrap();
        xs.window.width = 4.0e-6;
        assert!(xs.validate().is_err());
        let mut xs = ReferenceDesign::default().cross_section().unwrap();
        xs.window.top = 2.5e-6;
        assert!(xs.validate().is_err());
    }

    #[test]
    fn negative_thickness_rejected() {
        let err = LayerStack::new("GaAs", vec![Layer { material: "GaAs".into(), thickness: -1e-9 }], "air");
        assert!(err.is_err());
    }
}
