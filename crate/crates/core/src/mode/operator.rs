//! Full-vector finite-difference operator for guided modes.
//!
//! The transverse electric field lives on a staggered (Yee) lattice built on
//! top of the permittivity cells:
//!
//! * `Ex` (and `Hy`) on interior vertical cell edges, at cell-centre height;
//! * `Ey` (and `Hx`) on interior horizontal cell edges, at cell-centre abscissa;
//! * `Ez` at cell centres, `Hz` on interior grid nodes.
//!
//! Every field sample outside that set is held at zero, which closes the
//! domain with zero-field walls. Permittivity at an `Ex` (`Ey`) sample is the
//! width-weighted harmonic mean of the two cells it straddles, which keeps the
//! normal component of `D` continuous across interfaces that sit on grid
//! lines; `Ez` sees its own cell.
//!
//! With coordinates scaled by `k0` and `H̃ = -i·η0·H`, Maxwell's curl
//! equations for `exp(iωt - γz)` fields reduce to
//!
//! ```text
//! γ [Hx Hy]ᵀ = Q [Ex Ey]ᵀ,    γ [Ex Ey]ᵀ = P [Hx Hy]ᵀ,
//! ```
//!
//! so `-P·Q` has eigenvalues `n_eff²` with `γ = i·n_eff`.

use num_complex::Complex64;

use super::sparse::{CsrMatrix, TripletBuilder};
use crate::constants::wavenumber;
use crate::error::{Error, Result};
use crate::grid::PermittivityGrid;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Index bookkeeping for the staggered unknowns of an `nx × ny` cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct YeeLayout {
    pub nx: usize,
    pub ny: usize,
    /// Physical cell edges [m].
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
}

impl YeeLayout {
    /// Ex at interior edge `i` (1..nx), row `j` (0..ny).
    pub fn ex(&self, i: usize, j: usize) -> usize {
        j * (self.nx - 1) + (i - 1)
    }

    /// Ey at column `i` (0..nx), interior edge `j` (1..ny).
    pub fn ey(&self, i: usize, j: usize) -> usize {
        (j - 1) * self.nx + i
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        (j - 1) * (self.nx - 1) + (i - 1)
    }

    pub fn center(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn n_ex(&self) -> usize {
        (self.nx - 1) * self.ny
    }

    pub fn n_ey(&self) -> usize {
        self.nx * (self.ny - 1)
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    pub fn n_centers(&self) -> usize {
        self.nx * self.ny
    }

    pub fn dim(&self) -> usize {
        self.n_ex() + self.n_ey()
    }

    pub fn x_centers(&self) -> Vec<f64> {
        self.x_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn y_centers(&self) -> Vec<f64> {
        self.y_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Physical area [m²] attributed to each Ex sample.
    pub fn ex_areas(&self) -> Vec<f64> {
        let xc = self.x_centers();
        let mut out = vec![0.0; self.n_ex()];
        for j in 0..self.ny {
            let dy = self.y_edges[j + 1] - self.y_edges[j];
            for i in 1..self.nx {
                out[self.ex(i, j)] = (xc[i] - xc[i - 1]) * dy;
            }
        }
        out
    }

    /// Physical area [m²] attributed to each Ey sample.
    pub fn ey_areas(&self) -> Vec<f64> {
        let yc = self.y_centers();
        let mut out = vec![0.0; self.n_ey()];
        for j in 1..self.ny {
            for i in 0..self.nx {
                let dx = self.x_edges[i + 1] - self.x_edges[i];
                out[self.ey(i, j)] = dx * (yc[j] - yc[j - 1]);
            }
        }
        out
    }

    pub fn center_areas(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_centers()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                out[self.center(i, j)] =
                    (self.x_edges[i + 1] - self.x_edges[i]) * (self.y_edges[j + 1] - self.y_edges[j]);
            }
        }
        out
    }
}

/// Assembled eigen-operator plus everything needed to rebuild full fields.
#[derive(Debug, Clone)]
pub struct ModeOperator {
    pub layout: YeeLayout,
    pub wavelength: f64,
    /// `-P·Q`, eigenvalues `n_eff²`.
    pub a: CsrMatrix,
    /// Maps `[Ex Ey]` to `γ·[Hx Hy]` (normalized magnetic field).
    pub q: CsrMatrix,
    /// Discrete divergence pieces: `∂x` from Ex samples and `∂y` from Ey
    /// samples onto cell centres.
    pub div_x: CsrMatrix,
    pub div_y: CsrMatrix,
    pub eps_xx: Vec<Complex64>,
    pub eps_yy: Vec<Complex64>,
    pub eps_zz: Vec<Complex64>,
    pub cladding_index: f64,
    pub max_index: f64,
    pub lossless: bool,
}

impl ModeOperator {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }
}

/// Builds the sparse eigen-operator for `grid` at `wavelength` [m].
pub fn assemble_operator(grid: &PermittivityGrid, wavelength: f64) -> Result<ModeOperator> {
    let (nx, ny) = (grid.nx(), grid.ny());
    if nx < 3 || ny < 3 {
        return Err(Error::config(format!("grid of {nx} x {ny} cells is too small (need >= 3 x 3)")));
    }
    let k0 = wavenumber(wavelength);
    let layout = YeeLayout { nx, ny, x_edges: grid.x_edges.clone(), y_edges: grid.y_edges.clone() };
    let xc = layout.x_centers();
    let yc = layout.y_centers();
    // Normalized cell sizes (primary) and centre-to-centre spacings (dual).
    let hx: Vec<f64> = (0..nx).map(|i| grid.dx(i) * k0).collect();
    let hy: Vec<f64> = (0..ny).map(|j| grid.dy(j) * k0).collect();
    let hx_dual = |i: usize| (xc[i] - xc[i - 1]) * k0;
    let hy_dual = |j: usize| (yc[j] - yc[j - 1]) * k0;

    let (n_ex, n_ey, n_nodes, n_c) = (layout.n_ex(), layout.n_ey(), layout.n_nodes(), layout.n_centers());

    let mut eps_xx = vec![ONE; n_ex];
    for j in 0..ny {
        for i in 1..nx {
            let (a, b) = (grid.eps_at(i - 1, j), grid.eps_at(i, j));
            let (wa, wb) = (grid.dx(i - 1), grid.dx(i));
            eps_xx[layout.ex(i, j)] = (wa + wb) / (wa / a + wb / b);
        }
    }
    let mut eps_yy = vec![ONE; n_ey];
    for j in 1..ny {
        for i in 0..nx {
            let (a, b) = (grid.eps_at(i, j - 1), grid.eps_at(i, j));
            let (wa, wb) = (grid.dy(j - 1), grid.dy(j));
            eps_yy[layout.ey(i, j)] = (wa + wb) / (wa / a + wb / b);
        }
    }
    let eps_zz: Vec<Complex64> = grid.eps.clone();

    // Hz = ∂x Ey - ∂y Ex on interior nodes.
    let mut gx = TripletBuilder::new(n_nodes, n_ey);
    let mut gy = TripletBuilder::new(n_nodes, n_ex);
    for j in 1..ny {
        for i in 1..nx {
            let n = layout.node(i, j);
            let h = hx_dual(i);
            gx.push(n, layout.ey(i, j), 1.0 / h);
            gx.push(n, layout.ey(i - 1, j), -1.0 / h);
            let h = hy_dual(j);
            gy.push(n, layout.ex(i, j), 1.0 / h);
            gy.push(n, layout.ex(i, j - 1), -1.0 / h);
        }
    }
    let (gx, gy) = (gx.build(), gy.build());

    // ∂x Hz onto Ey/Hx samples and ∂y Hz onto Ex/Hy samples (wall nodes are zero).
    let mut kx = TripletBuilder::new(n_ey, n_nodes);
    for j in 1..ny {
        for i in 0..nx {
            let r = layout.ey(i, j);
            if i + 1 < nx {
                kx.push(r, layout.node(i + 1, j), 1.0 / hx[i]);
            }
            if i >= 1 {
                kx.push(r, layout.node(i, j), -1.0 / hx[i]);
            }
        }
    }
    let mut ky = TripletBuilder::new(n_ex, n_nodes);
    for j in 0..ny {
        for i in 1..nx {
            let r = layout.ex(i, j);
            if j + 1 < ny {
                ky.push(r, layout.node(i, j + 1), 1.0 / hy[j]);
            }
            if j >= 1 {
                ky.push(r, layout.node(i, j), -1.0 / hy[j]);
            }
        }
    }
    let (kx, ky) = (kx.build(), ky.build());

    // ∂x of Ex-located quantities and ∂y of Ey-located quantities onto centres.
    let mut lx = TripletBuilder::new(n_c, n_ex);
    let mut ly = TripletBuilder::new(n_c, n_ey);
    for j in 0..ny {
        for i in 0..nx {
            let r = layout.center(i, j);
            if i + 1 < nx {
                lx.push(r, layout.ex(i + 1, j), 1.0 / hx[i]);
            }
            if i >= 1 {
                lx.push(r, layout.ex(i, j), -1.0 / hx[i]);
            }
            if j + 1 < ny {
                ly.push(r, layout.ey(i, j + 1), 1.0 / hy[j]);
            }
            if j >= 1 {
                ly.push(r, layout.ey(i, j), -1.0 / hy[j]);
            }
        }
    }
    let (lx, ly) = (lx.build(), ly.build());

    // ∂x and ∂y of centre quantities onto Ex and Ey samples.
    let mut mx = TripletBuilder::new(n_ex, n_c);
    for j in 0..ny {
        for i in 1..nx {
            let h = hx_dual(i);
            mx.push(layout.ex(i, j), layout.center(i, j), 1.0 / h);
            mx.push(layout.ex(i, j), layout.center(i - 1, j), -1.0 / h);
        }
    }
    let mut my = TripletBuilder::new(n_ey, n_c);
    for j in 1..ny {
        for i in 0..nx {
            let h = hy_dual(j);
            my.push(layout.ey(i, j), layout.center(i, j), 1.0 / h);
            my.push(layout.ey(i, j), layout.center(i, j - 1), -1.0 / h);
        }
    }
    let (mx, my) = (mx.build(), my.build());

    // Q: rows (Hx | Hy), columns (Ex | Ey).
    let mut q = TripletBuilder::new(n_ey + n_ex, n_ex + n_ey);
    q.add_block(0, 0, &kx.mul(&gy), ONE);
    q.add_block(0, n_ex, &CsrMatrix::diagonal(&eps_yy), -ONE);
    q.add_block(0, n_ex, &kx.mul(&gx), -ONE);
    q.add_block(n_ey, 0, &CsrMatrix::diagonal(&eps_xx), ONE);
    q.add_block(n_ey, 0, &ky.mul(&gy), ONE);
    q.add_block(n_ey, n_ex, &ky.mul(&gx), -ONE);
    let q = q.build();

    // P: rows (Ex | Ey), columns (Hx | Hy).
    let inv_zz: Vec<Complex64> = eps_zz.iter().map(|e| ONE / e).collect();
    let lx_z = lx.scale_rows(&inv_zz);
    let ly_z = ly.scale_rows(&inv_zz);
    let mut p = TripletBuilder::new(n_ex + n_ey, n_ey + n_ex);
    p.add_block(0, 0, &mx.mul(&ly_z), ONE);
    p.add_block(0, n_ey, &CsrMatrix::identity(n_ex), -ONE);
    p.add_block(0, n_ey, &mx.mul(&lx_z), -ONE);
    p.add_block(n_ex, 0, &CsrMatrix::identity(n_ey), ONE);
    p.add_block(n_ex, 0, &my.mul(&ly_z), ONE);
    p.add_block(n_ex, n_ey, &my.mul(&lx_z), -ONE);
    let p = p.build();

    let mut a = TripletBuilder::new(n_ex + n_ey, n_ex + n_ey);
    a.add_block(0, 0, &p.mul(&q), -ONE);
    let a = a.build();

    Ok(ModeOperator {
        layout,
        wavelength,
        a,
        q,
        div_x: lx,
        div_y: ly,
        eps_xx,
        eps_yy,
        eps_zz,
        cladding_index: grid.cladding_index,
        max_index: grid.max_index,
        lossless: grid.is_lossless(),
    })
}
