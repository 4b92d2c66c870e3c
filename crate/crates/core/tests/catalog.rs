use alignbounds_core::bestofn::{exp_reference_kl, f_bound_closed, f_bound_generic, renyi_bound_closed, renyi_bound_generic};
use alignbounds_core::continuous::exp_order_stat_law;
use alignbounds_core::divergence::{f_div_continuous, renyi_continuous, FGenerator};
use alignbounds_core::Exponential;

#[test]
fn exp_max_kl_matches_reference() {
    let unit = Exponential::unit();
    for n in 1..=100u64 {
        let law = exp_order_stat_law(n).unwrap();
        let v = f_div_continuous(&law, &unit, &FGenerator::kl()).unwrap().value;
        assert!((v - exp_reference_kl(n)).abs() < 1e-8, "n={n}: {v}");
    }
}

#[test]
fn generic_integral_matches_closed_forms() {
    for gen in FGenerator::catalog() {
        for n in 2..=50u64 {
            let q = f_bound_generic(&gen, n).unwrap();
            let c = f_bound_closed(gen.name(), n).unwrap();
            assert!((q - c).abs() < 1e-8, "{} n={n}: {q} vs {c}", gen.name());
        }
    }
}

#[test]
fn continuous_divergences_reproduce_catalog() {
    let unit = Exponential::unit();
    for n in [2u64, 3, 10, 50] {
        let law = exp_order_stat_law(n).unwrap();
        for gen in FGenerator::catalog() {
            let v = f_div_continuous(&law, &unit, &gen).unwrap().value;
            let c = f_bound_closed(gen.name(), n).unwrap();
            assert!((v - c).abs() < 1e-8, "{} n={n}: {v} vs {c}", gen.name());
        }
    }
}

#[test]
fn renyi_quadrature_matches_closed_form() {
    let unit = Exponential::unit();
    for alpha in [0.25, 0.5, 0.9, 2.0, 4.0] {
        for n in 2..=50u64 {
            let law = exp_order_stat_law(n).unwrap();
            let q = renyi_continuous(&law, &unit, alpha).unwrap().value;
            let c = renyi_bound_closed(alpha, n).unwrap();
            assert!((q - c).abs() < 1e-7, "alpha={alpha} n={n}: {q} vs {c}");
            let g = renyi_bound_generic(alpha, n).unwrap();
            assert!((g - c).abs() < 1e-7);
        }
    }
}
