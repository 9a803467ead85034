//! Rasterization of a [`CrossSection`] onto a nonuniform tensor grid.
//!
//! Every material interface is placed on a grid line. Cell sizes are graded
//! smoothly between three regimes: `fine` next to the nanowires (vertically
//! around the film, laterally around every wire sidewall), `base` over the
//! ridge core, and `far` towards the window walls.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::CrossSection;

/// How finely to discretize a cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionPolicy {
    /// Cell size over the ridge core [m].
    pub base: f64,
    /// Cell size next to the nanowires [m].
    pub fine: f64,
    /// Distance from the wires over which `fine` is held before grading [m].
    pub band: f64,
    /// Largest cell size anywhere [m].
    pub far: f64,
    /// Linear growth rate of the cell size with distance (dimensionless).
    pub growth: f64,
}

impl Default for ResolutionPolicy {
    fn default() -> Self {
        Self { base: 20e-9, fine: 2e-9, band: 4e-9, far: 100e-9, growth: 0.3 }
    }
}

impl ResolutionPolicy {
    /// Same policy with every cell size divided by `factor`; `band` and
    /// `growth` are geometric and stay put.
    pub fn refined(&self, factor: f64) -> Self {
        Self { base: self.base / factor, fine: self.fine / factor, far: self.far / factor, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.base) && ok(self.fine) && ok(self.far) && ok(self.growth) && self.band >= 0.0) {
            return Err(Error::config("resolution policy sizes must be positive"));
        }
        if self.fine > self.base || self.base > self.far {
            return Err(Error::config("resolution policy needs fine <= base <= far"));
        }
        Ok(())
    }
}

/// Cell-wise complex permittivity on a nonuniform rectangular grid.
///
/// Cells are stored row-major: cell `(i, j)` (column `i` along x, row `j`
/// along y) lives at index `j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivityGrid {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    pub eps: Vec<Complex64>,
    /// Index into `material_names` per cell.
    pub material_ids: Vec<u16>,
    pub material_names: Vec<String>,
    pub wavelength: f64,
    /// Largest real index among the media that bound the window (lower
    /// cladding and ambient); guided modes must exceed it.
    pub cladding_index: f64,
    /// Largest real index anywhere in the grid.
    pub max_index: f64,
    /// Largest real index among the dielectric stack layers.
    pub core_index: f64,
}

impl PermittivityGrid {
    pub fn nx(&self) -> usize {
        self.x_edges.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.y_edges.len() - 1
    }

    pub fn cell_count(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn eps_at(&self, i: usize, j: usize) -> Complex64 {
        self.eps[j * self.nx() + i]
    }

    pub fn dx(&self, i: usize) -> f64 {
        self.x_edges[i + 1] - self.x_edges[i]
    }

    pub fn dy(&self, j: usize) -> f64 {
        self.y_edges[j + 1] - self.y_edges[j]
    }

    pub fn x_centers(&self) -> Vec<f64> {
        self.x_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn y_centers(&self) -> Vec<f64> {
        self.y_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Total area of cells filled with the named material.
    pub fn material_area(&self, name: &str) -> f64 {
        let Some(id) = self.material_names.iter().position(|n| n == name) else { return 0.0 };
        let nx = self.nx();
        self.material_ids
            .iter()
            .enumerate()
            .filter(|(_, &m)| m as usize == id)
            .map(|(c, _)| self.dx(c % nx) * self.dy(c / nx))
            .sum()
    }

    pub fn max_abs_imag_eps(&self) -> f64 {
        self.eps.iter().map(|e| e.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_lossless(&self) -> bool {
        self.max_abs_imag_eps() == 0.0
    }

    /// Writes `<stem>_eps_re.csv`, `<stem>_eps_im.csv` (rows = y, columns =
    /// x, bottom row first) and `<stem>_grid.json` with the coordinates.
    /// Each CSV starts with the given comment lines (prefixed with `# `).
    pub fn export(&self, dir: &Path, stem: &str, header: &[String]) -> Result<Vec<std::path::PathBuf>> {
        let nx = self.nx();
        let mut written = Vec::new();
        for (suffix, part) in [("eps_re", 0usize), ("eps_im", 1)] {
            let path = dir.join(format!("{stem}_{suffix}.csv"));
            let rows = self
                .eps
                .chunks(nx)
                .map(|row| row.iter().map(|e| if part == 0 { e.re } else { e.im }).collect::<Vec<_>>());
            write_matrix(&path, header, rows)?;
            written.push(path);
        }
        #[derive(Serialize)]
        struct Sidecar<'a> {
            header: &'a [String],
            wavelength_nm: f64,
            nx: usize,
            ny: usize,
            x_edges_nm: Vec<f64>,
            y_edges_nm: Vec<f64>,
            materials: &'a [String],
        }
        let path = dir.join(format!("{stem}_grid.json"));
        let sidecar = Sidecar {
            header,
            wavelength_nm: self.wavelength * 1e9,
            nx,
            ny: self.ny(),
            x_edges_nm: self.x_edges.iter().map(|v| v * 1e9).collect(),
            y_edges_nm: self.y_edges.iter().map(|v| v * 1e9).collect(),
            materials: &self.material_names,
        };
        std::fs::write(&path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
        written.push(path);
        Ok(written)
    }
}

/// Writes a comma-separated numeric matrix preceded by `# ` comment lines.
pub fn write_matrix(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for h in header {
        writeln!(out, "# {h}")?;
    }
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.9e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Target cell size along one axis as a function of position.
struct Sizing {
    base_zone: (f64, f64),
    fine_zones: Vec<(f64, f64)>,
    policy: ResolutionPolicy,
}

impl Sizing {
    fn size_at(&self, t: f64) -> f64 {
        let p = &self.policy;
        let dist = |(a, b): (f64, f64)| (a - t).max(t - b).max(0.0);
        let mut s = (p.base + p.growth * dist(self.base_zone)).min(p.far);
        for &z in &self.fine_zones {
            s = s.min(p.fine + p.growth * (dist(z) - p.band).max(0.0));
        }
        s
    }

    /// Splits `[a, b]` into cells that follow the sizing function.
    fn mesh_interval(&self, a: f64, b: f64, out: &mut Vec<f64>) {
        const SAMPLES: usize = 4096;
        let h = (b - a) / SAMPLES as f64;
        let mut cumulative = Vec::with_capacity(SAMPLES + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..SAMPLES {
            acc += h / self.size_at(a + (k as f64 + 0.5) * h);
            cumulative.push(acc);
        }
        let cells = ((acc - 1e-9).ceil() as usize).max(1);
        for m in 1..cells {
            let target = acc * m as f64 / cells as f64;
            let k = cumulative.partition_point(|&c| c < target).clamp(1, SAMPLES);
            let (c0, c1) = (cumulative[k - 1], cumulative[k]);
            let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
            out.push(a + (k as f64 - 1.0 + frac) * h);
        }
        out.push(b);
    }

    fn mesh(&self, breakpoints: &[f64]) -> Vec<f64> {
        let mut out = vec![breakpoints[0]];
        for w in breakpoints.windows(2) {
            self.mesh_interval(w[0], w[1], &mut out);
        }
        out
    }
}

fn sorted_breakpoints(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.retain(|&p| p > lo && p < hi);
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    let tol = 1e-6 * (hi - lo) / 1e3;
    pts.dedup_by(|a, b| (*a - *b).abs() < tol);
    pts
}

/// Discretizes the cross-section. Fails when the policy cannot put at least
/// two cells across the wire thickness and four across each wire width.
pub fn rasterize(xs: &CrossSection, policy: &ResolutionPolicy) -> Result<PermittivityGrid> {
    policy.validate()?;
    xs.validate()?;
    let win = xs.window;
    let (x_lo, x_hi) = (-win.width / 2.0, win.width / 2.0);
    let (ridge_l, ridge_r) = xs.ridge_edges();
    let wires = xs.wire_rects();
    let caps = xs.cap_rects();

    let mut xb = vec![ridge_l, ridge_r];
    let mut yb = xs.stack.interfaces();
    yb.push(xs.etch_floor());
    for r in wires.iter().chain(&caps) {
        xb.extend([r.x0, r.x1]);
        yb.extend([r.y0, r.y1]);
    }
    let xb = sorted_breakpoints(xb, x_lo, x_hi);
    let yb = sorted_breakpoints(yb, win.bottom, win.top);

    let bounds = xs.structure_bounds();
    let core_bottom = xs.stack_top() - xs.stack.top_layer().thickness;
    let x_sizing = Sizing {
        base_zone: (ridge_l, ridge_r),
        fine_zones: wires.iter().flat_map(|r| [(r.x0, r.x0), (r.x1, r.x1)]).collect(),
        policy: *policy,
    };
    let y_sizing = Sizing {
        base_zone: (core_bottom.min(bounds.y0), bounds.y1),
        fine_zones: wires.first().map(|r| (r.y0, r.y1)).into_iter().collect(),
        policy: *policy,
    };
    let x_edges = x_sizing.mesh(&xb);
    let y_edges = y_sizing.mesh(&yb);

    if let Some(w) = &xs.wires {
        let r = wires[0];
        let across = |edges: &[f64], a: f64, b: f64| {
            edges.windows(2).filter(|e| 0.5 * (e[0] + e[1]) > a && 0.5 * (e[0] + e[1]) < b).count()
        };
        let vertical = across(&y_edges, r.y0, r.y1);
        if vertical < 2 {
            return Err(Error::config(format!(
                "resolution policy puts {vertical} cell(s) across the {:.2} nm wire thickness (need >= 2)",
                w.thickness * 1e9
            )));
        }
        for r in &wires {
            let lateral = across(&x_edges, r.x0, r.x1);
            if lateral < 4 {
                return Err(Error::config(format!(
                    "resolution policy puts {lateral} cell(s) across a {:.1} nm wire (need >= 4)",
                    w.width * 1e9
                )));
            }
        }
    }

    let xc: Vec<f64> = x_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let yc: Vec<f64> = y_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut material_names: Vec<String> = Vec::new();
    let mut material_eps: Vec<Complex64> = Vec::new();
    let mut material_ids = Vec::with_capacity(xc.len() * yc.len());
    let mut eps = Vec::with_capacity(xc.len() * yc.len());
    let mut max_index = 0.0f64;
    for &y in &yc {
        for &x in &xc {
            let name = xs.material_at(x, y);
            let id = match material_names.iter().position(|n| n == name) {
                Some(id) => id,
                None => {
                    let n = xs.materials.get(name)?.lookup_index(xs.wavelength)?;
                    max_index = max_index.max(n.re);
                    material_names.push(name.to_string());
                    material_eps.push(n * n);
                    material_names.len() - 1
                }
            };
            material_ids.push(id as u16);
            eps.push(material_eps[id]);
        }
    }
    let bottom_material = xs.stack.material_at_window_bottom(win.bottom);
    let cladding_index = [bottom_material, xs.stack.ambient.as_str()]
        .iter()
        .map(|m| xs.materials.get(m).and_then(|m| m.lookup_index(xs.wavelength)).map(|n| n.re))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let core_index = xs
        .stack
        .layers
        .iter()
        .map(|l| xs.materials.get(&l.material).and_then(|m| m.lookup_index(xs.wavelength)).map(|n| n.re))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    Ok(PermittivityGrid {
        x_edges,
        y_edges,
        eps,
        material_ids,
        material_names,
        wavelength: xs.wavelength,
        cladding_index,
        max_index,
        core_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ReferenceDesign;

    fn reference_grid() -> (CrossSection, PermittivityGrid) {
        let xs = ReferenceDesign::default().cross_section().unwrap();
        let g = rasterize(&xs, &ResolutionPolicy::default()).unwrap();
        (xs, g)
    }

    #[test]
    fn nbn_cells_carry_nbn_permittivity() {
        let (_, g) = reference_grid();
        let nbn = Complex64::new(5.23, -5.82);
        let id = g.material_names.iter().position(|n| n == "NbN").unwrap() as u16;
        let mut seen = 0;
        for (c, &m) in g.material_ids.iter().enumerate() {
            if m == id {
                assert_eq!(g.eps[c], nbn * nbn);
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn nbn_area_matches_geometry() {
        let (xs, g) = reference_grid();
        let w = xs.wires.as_ref().unwrap();
        let expected = w.count as f64 * w.width * w.thickness;
        let area = g.material_area("NbN");
        assert!(((area - expected) / expected).abs() < 1e-6, "area {area} vs {expected}");
    }

    #[test]
    fn lossless_without_wires() {
        let xs = ReferenceDesign::default().cross_section().unwrap().without_wires();
        let g = rasterize(&xs, &ResolutionPolicy::default()).unwrap();
        assert_eq!(g.max_abs_imag_eps(), 0.0);
        assert!(!g.material_names.iter().any(|n| n == "NbN"));
    }

    #[test]
    fn symmetric_geometry_gives_mirrored_grid() {
        let (_, g) = reference_grid();
        let (nx, ny) = (g.nx(), g.ny());
        for j in 0..ny {
            for i in 0..nx {
                assert_eq!(g.eps_at(i, j), g.eps_at(nx - 1 - i, j), "cell ({i},{j})");
            }
        }
        for i in 0..=nx {
            assert!((g.x_edges[i] + g.x_edges[nx - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn rasterize_is_deterministic() {
        let (xs, g) = reference_grid();
        let again = rasterize(&xs, &ResolutionPolicy::default()).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn interfaces_on_grid_lines() {
        let (xs, g) = reference_grid();
        let on_line = |edges: &[f64], v: f64| edges.iter().any(|e| (e - v).abs() < 1e-15);
        for r in xs.wire_rects().iter().chain(&xs.cap_rects()) {
            assert!(on_line(&g.x_edges, r.x0) && on_line(&g.x_edges, r.x1));
            assert!(on_line(&g.y_edges, r.y0) && on_line(&g.y_edges, r.y1));
        }
        let (l, r) = xs.ridge_edges();
        assert!(on_line(&g.x_edges, l) && on_line(&g.x_edges, r));
        assert!(on_line(&g.y_edges, xs.etch_floor()));
    }

    #[test]
    fn coarse_policy_rejected() {
        let xs = ReferenceDesign::default().cross_section().unwrap();
        let policy = ResolutionPolicy { fine: 5e-9, ..ResolutionPolicy::default() };
        let err = rasterize(&xs, &policy).unwrap_err();
        assert!(err.to_string().contains("wire thickness"), "{err}");
    }

    #[test]
    fn cladding_index_is_lower_cladding() {
        let (xs, g) = reference_grid();
        let al = xs.materials.get("Al0.75Ga0.25As").unwrap().lookup_index(1.3e-6).unwrap().re;
        assert_eq!(g.cladding_index, al);
        assert!(g.max_index > 5.0);
    }

    #[test]
    fn grid_is_graded() {
        let (_, g) = reference_grid();
        let dy: Vec<f64> = (0..g.ny()).map(|j| g.dy(j)).collect();
        let dx: Vec<f64> = (0..g.nx()).map(|i| g.dx(i)).collect();
        for d in [&dx, &dy] {
            for w in d.windows(2) {
                let ratio = w[1] / w[0];
                assert!(ratio < 1.6 && ratio > 1.0 / 1.6, "abrupt step {ratio}");
            }
        }
    }
}
