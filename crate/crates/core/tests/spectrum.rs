use std::f64::consts::PI;

use shs_core::coefficients::{CoefficientField, HamiltonianSpec};
use shs_core::corpus;
use shs_core::riccati::{Chart, IntegrationOptions};
use shs_core::spectrum::{
    blowup_chain_1d, bracket_first_eigenvalue, check_h5, eigenvalue_1d, eigenvalues_1d,
    first_eigenvalue_multidim, growth_order_fit, no_eigenvalue_below_rho_b, scaled_blow_up_time,
    MultiDimOptions, SpectrumOptions,
};
use shs_core::Error;

#[test]
fn constant_family_chain_at_rho_two() {
    let spec = corpus::constant_family(PI);
    let chain = blowup_chain_1d(&spec, 2.0, 10).unwrap();
    assert_eq!(chain.links.len(), 2);
    assert_eq!(chain.links[0].family, Chart::Primal);
    assert_eq!(chain.links[1].family, Chart::Dual);
    assert!((chain.links[0].t - PI / 2.0).abs() < 1e-6);
    assert!(chain.links[1].t.abs() < 1e-6);
}

#[test]
fn chain_just_above_rho_b_has_one_negative_link() {
    let spec = corpus::constant_family(PI);
    // The first link must fall inside the search window [-2T, T].
    let eps = 0.1;
    let chain = blowup_chain_1d(&spec, 1.0 + eps, 10).unwrap();
    assert_eq!(chain.links.len(), 1);
    let expect = PI - PI / (2.0 * eps.sqrt());
    assert!((chain.links[0].t - expect).abs() < 1e-6, "{chain:?}");
}

#[test]
fn chain_rejects_rho_at_or_below_rho_b() {
    let spec = corpus::constant_family(PI);
    assert!(matches!(blowup_chain_1d(&spec, 1.0, 4), Err(Error::Precondition(_))));
}

#[test]
fn chains_strictly_decrease() {
    for spec in [corpus::constant_family(PI), corpus::time_varying_family(PI)] {
        for rho in [1.5, 4.0, 12.0, 40.0] {
            let chain = blowup_chain_1d(&spec, rho, 64).unwrap();
            let mut prev = spec.horizon();
            for (i, l) in chain.links.iter().enumerate() {
                assert!(l.t < prev);
                assert_eq!(l.family, if i % 2 == 0 { Chart::Primal } else { Chart::Dual });
                prev = l.t;
            }
        }
    }
}

#[test]
fn chain_links_are_nondecreasing_in_rho() {
    let spec = corpus::time_varying_family(PI);
    let grid: Vec<f64> = (0..25).map(|i| 2.0 + i as f64 * 0.75).collect();
    let chains: Vec<_> = grid.iter().map(|&r| blowup_chain_1d(&spec, r, 6).unwrap()).collect();
    for j in 1..=6 {
        for w in chains.windows(2) {
            let (a, b) = (w[0].link_time(j), w[1].link_time(j));
            if a.is_finite() && w[0].links.len() >= j && w[0].links[..j - 1].iter().all(|l| l.t > 0.0) {
                assert!(b >= a - 1e-7, "link {j}: {a} then {b}");
            }
        }
    }
}

#[test]
fn constant_family_eigenvalues() {
    let spec = corpus::constant_family(PI);
    let records = eigenvalues_1d(&spec, 5, &SpectrumOptions::default()).unwrap();
    for r in &records {
        let expect = corpus::constant_family_eigenvalue(r.m);
        assert!((r.rho - expect).abs() < 1e-5, "m = {}: {} vs {expect}", r.m, r.rho);
        assert_eq!(r.chain.len(), 2 * r.m - 1);
        assert!(r.chain.last().unwrap().t.abs() < 1e-6);
        assert!(r.tol <= 1e-8);
    }
}

#[test]
fn eigenvalues_are_ordered_above_rho_b() {
    for spec in [corpus::constant_family(PI), corpus::time_varying_family(PI)] {
        let rho_b = shs_core::coefficients::compute_rho_b(&spec).unwrap();
        let records = eigenvalues_1d(&spec, 3, &SpectrumOptions::default()).unwrap();
        assert!(records[0].rho > rho_b);
        assert!(records[0].rho < records[1].rho && records[1].rho < records[2].rho);
    }
}

#[test]
fn roots_are_certified_by_sign_flips() {
    let spec = corpus::time_varying_family(PI);
    let opts = SpectrumOptions::default();
    for m in [1, 2] {
        let r = eigenvalue_1d(&spec, m, &opts).unwrap();
        let j = r.chain.len();
        let link = |rho: f64| blowup_chain_1d(&spec, rho, j).unwrap().link_time(j);
        assert!(link(r.rho - 100.0 * opts.tol) < 0.0);
        assert!(link(r.rho + 100.0 * opts.tol) > 0.0);
    }
}

#[test]
fn eigenvalue_search_is_deterministic() {
    let spec = corpus::time_varying_family(PI);
    let a = eigenvalue_1d(&spec, 2, &SpectrumOptions::default()).unwrap();
    let b = eigenvalue_1d(&spec, 2, &SpectrumOptions::default()).unwrap();
    assert_eq!(a.rho.to_bits(), b.rho.to_bits());
    assert_eq!(a, b);
}

#[test]
fn index_beyond_link_budget_is_an_error() {
    let spec = corpus::constant_family(PI);
    let opts = SpectrumOptions {
        max_links: 4,
        ..Default::default()
    };
    assert!(matches!(eigenvalue_1d(&spec, 3, &opts), Err(Error::Budget { .. })));
}

#[test]
fn growth_exponents() {
    let spec = corpus::constant_family(PI);
    let records = eigenvalues_1d(&spec, 10, &SpectrumOptions::default()).unwrap();
    let fit = growth_order_fit(&records).unwrap();
    assert!((fit.exponent - 2.0).abs() < 0.05, "{fit:?}");

    let spec = corpus::time_varying_family(PI);
    let records = eigenvalues_1d(&spec, 8, &SpectrumOptions::default()).unwrap();
    let fit = growth_order_fit(&records).unwrap();
    assert!((1.8..=2.2).contains(&fit.exponent), "{fit:?}");
}

#[test]
fn block_diagonal_first_eigenvalue() {
    let spec = corpus::block_diagonal_two_dim(PI);
    let opts = MultiDimOptions::default();
    let bracket = bracket_first_eigenvalue(&spec, &opts.integration).unwrap();
    let r = first_eigenvalue_multidim(&spec, bracket, &opts).unwrap();
    // Component i has first eigenvalue 1 + (1/2)^2 / H11_i with H11 = diag(1, 2).
    let expect = f64::min(1.0 + 0.25, 1.0 + 0.25 / 2.0);
    assert!((r.rho - expect).abs() < 1e-5, "{} vs {expect}", r.rho);
    assert_eq!(r.kernel_basis.len(), 1);
    let v = &r.kernel_basis[0];
    assert!(v[0].abs() < 1e-4 && (v[1].abs() - 1.0).abs() < 1e-8, "{v:?}");
}

#[test]
fn multidim_matches_one_dimensional_first_eigenvalue() {
    // Mixed blocks vanish, so both perturbation patterns give the same equation.
    let spec = corpus::constant_family(PI);
    let opts = MultiDimOptions::default();
    let r = first_eigenvalue_multidim(&spec, (1.0, 2.0), &opts).unwrap();
    let s = eigenvalue_1d(&spec, 1, &SpectrumOptions::default()).unwrap();
    assert!((r.rho - s.rho).abs() < 1e-6);
}

#[test]
fn no_blow_up_just_below_first_eigenvalue() {
    let spec = corpus::coupled_two_dim(1.0);
    let opts = MultiDimOptions::default();
    let bracket = bracket_first_eigenvalue(&spec, &opts.integration).unwrap();
    let r = first_eigenvalue_multidim(&spec, bracket, &opts).unwrap();
    let below = scaled_blow_up_time(&spec, r.rho - 10.0 * opts.tol, &IntegrationOptions::default()).unwrap();
    assert!(below.value < 0.0, "{below:?}");
    assert!(r.chain[0].t.abs() < 1e-6);
    assert!(!r.kernel_basis.is_empty() && r.kernel_basis.len() <= 2);
}

#[test]
fn multidim_rejects_non_straddling_bracket() {
    let spec = corpus::block_diagonal_two_dim(PI);
    let r = first_eigenvalue_multidim(&spec, (1.0, 1.05), &MultiDimOptions::default());
    assert!(matches!(r, Err(Error::Bracket { .. })));
}

fn growth_spec(horizon: f64) -> HamiltonianSpec {
    let h = CoefficientField::scalar(
        horizon,
        &[((1, 1), 0.01), ((1, 2), 0.5), ((2, 2), -1.0), ((3, 3), -1.0), ((4, 4), -1.0)],
    )
    .unwrap();
    let hbar = CoefficientField::scalar(horizon, &[((2, 2), -1.0)]).unwrap();
    HamiltonianSpec::new(h, hbar, corpus::symmetric_two_state(), 0.009, 0.5, 2.0).unwrap()
}

#[test]
fn growth_condition_examples() {
    let r = check_h5(&corpus::weak_coupling_family().unwrap()).unwrap();
    assert!(r.holds, "{r:?}");
    assert!((r.mid - 1.0).abs() < 1e-12);
    assert!((r.rhs - 4.0).abs() < 1e-12);
    assert!((r.lhs - 0.0004).abs() < 1e-9, "{r:?}");
    let r = check_h5(&growth_spec(10.0)).unwrap();
    assert!(!r.holds && (r.mid - 1.0).abs() < 1e-12 && (r.rhs - 0.04).abs() < 1e-12);
}

#[test]
fn no_spectrum_below_rho_b() {
    let spec = corpus::weak_coupling_family().unwrap();
    let r = no_eigenvalue_below_rho_b(&spec, 32).unwrap();
    assert!(r.holds, "{r:?}");
    assert!(r.max_blow_up_time < 0.0);
    let violating = growth_spec(10.0);
    assert!(matches!(no_eigenvalue_below_rho_b(&violating, 8), Err(Error::Precondition(_))));
}
