mod common;

use common::{layered_grid, stack_root, stack_root_continued, symmetric_slab_te, Pol};
use num_complex::Complex64 as C;
use wspd_core::mode::{assemble_operator, solve_modes, Polarization, SolverConfig};

const LAMBDA: f64 = 1.3e-6;

fn re(n: f64) -> C {
    C::new(n, 0.0)
}

#[test]
fn oracle_matches_textbook_slab() {
    // Thick-slab limit approaches the core index; thin-slab limit the cladding.
    let thick = symmetric_slab_te(3.4, 3.0, 5e-6, LAMBDA);
    assert!(thick > 3.39 && thick < 3.4);
    let thin = symmetric_slab_te(3.4, 3.0, 20e-9, LAMBDA);
    assert!(thin > 3.0 && thin < 3.01);
    // The general stack oracle agrees with the symmetric formula.
    let layers = [(re(3.4), 300e-9)];
    let general = stack_root(re(3.0), &layers, re(3.0), LAMBDA, Pol::Te, re(3.2));
    let sym = symmetric_slab_te(3.4, 3.0, 300e-9, LAMBDA);
    assert!((general.re - sym).abs() < 1e-12 && general.im.abs() < 1e-12, "{general} vs {sym}");
}

#[test]
fn wide_slab_matches_analytic_root() {
    let (n1, n2, d) = (3.413, 3.03, 300e-9);
    let width = 60e-6;
    let grid =
        layered_grid(&[(re(n2), 2e-6, 40e-9), (re(n1), d, 2.5e-9), (re(n2), 2e-6, 40e-9)], 1e-9, width, 24, LAMBDA, n2);
    let op = assemble_operator(&grid, LAMBDA).unwrap();
    let cfg = SolverConfig { num_modes: 2, target_index: Some(n1 - 0.05), ..Default::default() };
    let modes = solve_modes(&op, &cfg, n1).unwrap();
    let te = modes.iter().find(|m| m.polarization == Polarization::TeLike).expect("TE slab mode");
    let exact = symmetric_slab_te(n1, n2, d, LAMBDA);
    assert!((te.n_eff.re - exact).abs() <= 1e-4, "FD {} vs slab {exact}", te.n_eff.re);
    assert!(te.n_eff.im.abs() < 1e-9);
    assert!(te.te_fraction > 1.0 - 1e-9, "TE fraction {}", te.te_fraction);
}

#[test]
fn lossy_film_matches_transfer_matrix_root() {
    let nbn = C::new(5.23, -5.82);
    let (gaas, algaas, siox, air) = (re(3.413), re(3.03), re(1.447), re(1.0));
    let stack = [
        (algaas, 1.5e-6, 40e-9),
        (gaas, 300e-9, 5e-9),
        (nbn, 4.3e-9, 0.5e-9),
        (siox, 100e-9, 10e-9),
        (air, 1.5e-6, 40e-9),
    ];
    let grid = layered_grid(&stack, 0.5e-9, 60e-6, 24, LAMBDA, 3.03);
    let op = assemble_operator(&grid, LAMBDA).unwrap();
    let layers = [(gaas, 300e-9), (nbn, 4.3e-9), (siox, 100e-9)];
    for (pol, want, lo, hi) in [(Pol::Te, Polarization::TeLike, 3.15, 3.25), (Pol::Tm, Polarization::TmLike, 3.1, 3.13)]
    {
        // The oracle works in the n - ik convention; reported indices are conjugated.
        let exact = stack_root_continued(algaas, &layers, air, LAMBDA, pol, lo, hi).conj();
        let cfg = SolverConfig { num_modes: 2, target_index: Some(exact.re), ..Default::default() };
        let modes = solve_modes(&op, &cfg, 3.413).unwrap();
        let m = modes.iter().find(|m| m.polarization == want).expect("mode of the wanted polarization");
        let rel_alpha = (m.n_eff.im - exact.im).abs() / exact.im;
        assert!(exact.im > 0.0);
        assert!((m.n_eff.re - exact.re).abs() < 1e-4, "{want}: FD {} vs {exact}", m.n_eff);
        assert!(rel_alpha < 5e-3, "{want}: FD {} vs {exact}", m.n_eff);
    }
}
