//! Independent 1-D planar-waveguide oracles, written without reference to
//! the 2-D solver.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use wspd_core::grid::PermittivityGrid;

/// TE root of a symmetric three-layer slab: core index `n1`, thickness `d`
/// [m], cladding `n2`, by bisection on the even-mode dispersion relation.
pub fn symmetric_slab_te(n1: f64, n2: f64, d: f64, wavelength: f64) -> f64 {
    let k0 = 2.0 * std::f64::consts::PI / wavelength;
    let f = |n: f64| {
        let kx = k0 * (n1 * n1 - n * n).sqrt();
        let g = k0 * (n * n - n2 * n2).sqrt();
        kx * (kx * d / 2.0).tan() - g
    };
    // The fundamental root has kx·d/2 in (0, π/2).
    let n_cut = (n1 * n1 - (std::f64::consts::PI / (k0 * d)).powi(2)).max(n2 * n2).sqrt();
    let (mut lo, mut hi) = (n_cut + 1e-12, n1 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy, PartialEq)]
pub enum Pol {
    Te,
    Tm,
}

/// Dispersion function of a planar stack (bottom half-space, finite layers,
/// top half-space) in the `n - ik` material convention. Zero at a bound mode.
pub fn stack_dispersion(bottom: C, layers: &[(C, f64)], top: C, wavelength: f64, pol: Pol, n_eff: C) -> C {
    let k0 = 2.0 * std::f64::consts::PI / wavelength;
    let eps = |n: C| n * n;
    let q = |n: C| {
        let v = (n_eff * n_eff - eps(n)).sqrt();
        if v.re < 0.0 {
            -v
        } else {
            v
        }
    };
    let p = |n: C| match pol {
        Pol::Te => C::new(1.0, 0.0),
        Pol::Tm => eps(n),
    };
    // State (ψ, ψ'/(k0·p)) propagated upward.
    let mut psi = C::new(1.0, 0.0);
    let mut phi = q(bottom) / p(bottom);
    for &(n, d) in layers {
        let (qi, pi) = (q(n), p(n));
        let x = qi * k0 * d;
        let (ch, sh) = (x.cosh(), x.sinh());
        let new_psi = ch * psi + pi * sh / qi * phi;
        let new_phi = qi * sh / pi * psi + ch * phi;
        psi = new_psi;
        phi = new_phi;
        let s = psi.norm().max(phi.norm());
        psi /= s;
        phi /= s;
    }
    phi + q(top) / p(top) * psi
}

/// Complex root of [`stack_dispersion`] by the secant method from `guess`.
pub fn stack_root(bottom: C, layers: &[(C, f64)], top: C, wavelength: f64, pol: Pol, guess: C) -> C {
    let f = |n: C| stack_dispersion(bottom, layers, top, wavelength, pol, n);
    let (mut x0, mut x1) = (guess, guess + C::new(1e-4, 1e-5));
    let (mut f0, mut f1) = (f(x0), f(x1));
    for _ in 0..200 {
        if (x1 - x0).norm() < 1e-15 || f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1);
    }
    x1
}

/// Builds an x-uniform grid of `nx` cells over `width` [m] from a list of
/// `(n, thickness, largest cell)` layers bottom-to-top. Vertical cells are
/// `fine` at every interface and grow by 10% of the distance from it.
pub fn layered_grid(
    layers: &[(C, f64, f64)],
    fine: f64,
    width: f64,
    nx: usize,
    wavelength: f64,
    cladding_index: f64,
) -> PermittivityGrid {
    let x_edges: Vec<f64> = (0..=nx).map(|i| -width / 2.0 + width * i as f64 / nx as f64).collect();
    let mut y_edges = vec![0.0];
    let mut row_eps = Vec::new();
    let mut row_id = Vec::new();
    for (k, &(n, t, coarse)) in layers.iter().enumerate() {
        let y0 = *y_edges.last().unwrap();
        let size = |y: f64| coarse.min(fine + 0.1 * y.min(t - y));
        let mut local = vec![0.0];
        while *local.last().unwrap() < t {
            let y = *local.last().unwrap();
            local.push(y + size(y));
        }
        let scale = t / *local.last().unwrap();
        for &y in &local[1..] {
            y_edges.push(y0 + y * scale);
            row_eps.push(n * n);
            row_id.push(k as u16);
        }
    }
    let ny = row_eps.len();
    let mut eps = Vec::with_capacity(nx * ny);
    let mut material_ids = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for _ in 0..nx {
            eps.push(row_eps[j]);
            material_ids.push(row_id[j]);
        }
    }
    let max_index = layers.iter().map(|l| l.0.re).fold(0.0, f64::max);
    PermittivityGrid {
        x_edges,
        y_edges,
        eps,
        material_ids,
        material_names: (0..layers.len()).map(|k| format!("layer{k}")).collect(),
        wavelength,
        cladding_index,
        max_index,
        core_index: max_index,
    }
}

/// Like [`stack_root`], but first brackets the lossless root (extinction
/// dropped) on the real axis within `(lo, hi)` by bisection, then ramps the
/// extinction back in while tracking the root.
pub fn stack_root_continued(bottom: C, layers: &[(C, f64)], top: C, wavelength: f64, pol: Pol, lo: f64, hi: f64) -> C {
    let lossless: Vec<(C, f64)> = layers.iter().map(|&(n, d)| (C::new(n.re, 0.0), d)).collect();
    let f = |n: f64| stack_dispersion(bottom, &lossless, top, wavelength, pol, C::new(n, 0.0)).re;
    let (mut a, mut b) = (lo, hi);
    assert!(f(a).signum() != f(b).signum(), "root not bracketed");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m).signum() == f(a).signum() {
            a = m;
        } else {
            b = m;
        }
    }
    let mut root = C::new(0.5 * (a + b), 0.0);
    let steps = 100;
    for s in 1..=steps {
        let t = s as f64 / steps as f64;
        let scaled: Vec<(C, f64)> = layers.iter().map(|&(n, d)| (C::new(n.re, t * n.im), d)).collect();
        root = stack_root(bottom, &scaled, top, wavelength, pol, root);
    }
    root
}
