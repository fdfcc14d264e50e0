use proptest::prelude::*;
use ptep_core::capacitance::build_leading_order;
use ptep_core::epfinder::{newton_solve, EpProblem, EpSolution, SolverConfig, QUADRIMER_FAMILIES};
use ptep_core::linalg::{ComplexMatrix, C64};
use ptep_core::model::scale_gain_loss;
use ptep_core::sensing::{
    log_grid, site_ranking, split_at_ep, split_regular, PerturbationKind, PerturbationSpec, SensingError,
};

fn leading(order: usize, start: &[f64]) -> EpSolution {
    newton_solve(&EpProblem::leading(order).unwrap(), start, &SolverConfig::default()).unwrap()
}

fn eps_at(order: usize) -> EpSolution {
    match order {
        2 => leading(2, &[1.0]),
        3 => leading(3, &[1.5, 0.5]),
        _ => leading(4, &QUADRIMER_FAMILIES[0]),
    }
}

fn grid() -> Vec<f64> {
    log_grid(1e-8, 1e-2, 25)
}

#[test]
fn pair_splits_as_square_root() {
    let ep = eps_at(2);
    let spec = PerturbationSpec::diagonal_site(0, grid()).unwrap();
    let fit = split_at_ep(&ep.matrix().unwrap(), ep.gamma, &spec).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.03, "{}", fit.slope);
    // closed form: x^2 - s x - i s = 0, largest root modulus
    for (s, d) in fit.sizes.iter().zip(&fit.max_shift) {
        let disc = (C64::new(s * s, 4.0 * s)).sqrt();
        let r = ((C64::new(*s, 0.0) + disc) / 2.0).norm().max(((C64::new(*s, 0.0) - disc) / 2.0).norm());
        assert!((d - r).abs() < 1e-9 * (1.0 + r), "{s}: {d} vs {r}");
    }
}

#[test]
fn exponents_for_orders_two_to_four() {
    for order in 2..=4 {
        let ep = eps_at(order);
        for site in 0..order {
            let spec = PerturbationSpec::diagonal_site(site, grid()).unwrap();
            let fit = split_at_ep(&ep.matrix().unwrap(), ep.gamma, &spec).unwrap();
            assert!((fit.slope - 1.0 / order as f64).abs() < 0.05, "N={order} site {site}: {}", fit.slope);
            assert!(fit.r_squared >= 0.99);
        }
    }
}

#[test]
fn regular_baseline_has_unit_slope() {
    let ep = eps_at(3);
    for tau in [0.0, 0.5] {
        let p = scale_gain_loss(&ep.profile(), tau);
        let diag: Vec<C64> = p.a.iter().zip(&p.b).map(|(&a, &b)| C64::new(a, b)).collect();
        let m = build_leading_order(&diag).unwrap();
        let spec = PerturbationSpec::diagonal_site(0, grid()).unwrap();
        let fit = split_regular(&m, &spec).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05, "tau {tau}: {}", fit.slope);
    }
}

#[test]
fn full_matrix_direction() {
    let ep = eps_at(3);
    let e = ComplexMatrix::from_fn(3, |i, j| C64::new((i + 2 * j) as f64, 1.0)).unwrap();
    let spec = PerturbationSpec::new(PerturbationKind::FullMatrix(e), grid()).unwrap();
    let fit = split_at_ep(&ep.matrix().unwrap(), ep.gamma, &spec).unwrap();
    assert!((fit.slope - 1.0 / 3.0).abs() < 0.05, "{}", fit.slope);
}

#[test]
fn mirror_sites_rank_equally() {
    for order in 2..=4 {
        let ep = eps_at(order);
        let ranking = site_ranking(&ep.matrix().unwrap(), ep.gamma, order).unwrap();
        let mut by_site = vec![0.0; order];
        for (site, c) in &ranking {
            by_site[*site] = *c;
        }
        for i in 0..order {
            assert!((by_site[i] - by_site[order - 1 - i]).abs() < 1e-6, "N={order}: {by_site:?}");
        }
        assert!(ranking.windows(2).all(|w| w[0].1 >= w[1].1));
    }
}

#[test]
fn out_of_range_site() {
    let ep = eps_at(2);
    let spec = PerturbationSpec::diagonal_site(5, grid()).unwrap();
    assert!(matches!(
        split_at_ep(&ep.matrix().unwrap(), ep.gamma, &spec),
        Err(SensingError::SiteOutOfRange { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn shift_is_monotone_in_size(order in 2usize..5, site in 0usize..4, lo in -9.0f64..-6.0, points in 8usize..20) {
        let site = site % order;
        let ep = eps_at(order);
        let spec = PerturbationSpec::diagonal_site(site, log_grid(10f64.powf(lo), 10f64.powf(lo + 4.0), points)).unwrap();
        let fit = split_at_ep(&ep.matrix().unwrap(), ep.gamma, &spec).unwrap();
        // sizes decrease, so shifts must not increase
        for w in fit.max_shift.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9), "{:?}", fit.max_shift);
        }
    }
}
