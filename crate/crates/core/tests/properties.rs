use std::f64::consts::TAU;

use irs_sim::channel::{los_gain, wrap_phase, ChannelParams, ChannelSet};
use irs_sim::experiments::{
    diagnostic_ue, phase_histogram, phase_profile, reflection_profile, unwrap,
};
use irs_sim::geometry::{IrsGeometry, Point3, ScenarioConfig};
use irs_sim::link_metrics::{effective_gain, snr_gain_db, LinkParams};
use irs_sim::phase_control::{
    binarize, column_aggregate, column_group, configure, coordinate_ascent_column_binary,
    exhaustive_column_binary, optimal_continuous, PhaseVector, ReflectionConfig, Scheme,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn arb_point() -> impl Strategy<Value = Point3> {
    (-50.0..50.0f64, -50.0..50.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn arb_complex() -> impl Strategy<Value = Complex64> {
    (0.01..2.0f64, 0.0..TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn arb_channels(nx: usize, ny: usize) -> impl Strategy<Value = ChannelSet> {
    let n = nx * ny;
    (
        prop::collection::vec(arb_complex(), n),
        prop::collection::vec(arb_complex(), n),
        (1e-3..3.0f64, 0.0..TAU),
    )
        .prop_map(|(g, h, (r, t))| ChannelSet {
            ap_to_irs: g,
            irs_to_ue: h,
            direct: Complex64::from_polar(r, t),
        })
}

fn arb_problem() -> impl Strategy<Value = (IrsGeometry, ChannelSet)> {
    (1usize..7, 1usize..5).prop_flat_map(|(nx, ny)| {
        let g = IrsGeometry::new(nx, ny, 26e9, Point3::default()).unwrap();
        arb_channels(nx, ny).prop_map(move |ch| (g.clone(), ch))
    })
}

fn params() -> ChannelParams {
    ChannelParams::friis(0.011528, 2.0, 1.0).unwrap()
}

proptest! {
    #[test]
    fn lattice_positions_follow_formula(nx in 1usize..12, ny in 1usize..12, c in arb_point()) {
        let g = IrsGeometry::new(nx, ny, 26e9, c).unwrap();
        let s = g.spacing();
        for row in 0..ny {
            for col in 0..nx {
                let p = g.element_positions()[g.index(row, col)];
                let x = c.x + (col as f64 - (nx as f64 - 1.0) / 2.0) * s;
                let z = c.z + ((ny as f64 - 1.0) / 2.0 - row as f64) * s;
                prop_assert!((p.x - x).abs() <= 1e-12 && (p.z - z).abs() <= 1e-12 && p.y == c.y);
                prop_assert_eq!(g.column_of(g.index(row, col)), col);
            }
        }
        let mut counts = vec![0; nx];
        for n in 0..g.len() {
            counts[g.column_of(n)] += 1;
        }
        prop_assert!(counts.iter().all(|&k| k == ny));
    }

    #[test]
    fn magnitude_is_reciprocal(a in arb_point(), b in arb_point()) {
        prop_assume!(a.distance(&b) > 1e-6);
        let p = params();
        let ab = los_gain(&a, &b, &p).unwrap().norm();
        let ba = los_gain(&b, &a, &p).unwrap().norm();
        prop_assert!((ab - ba).abs() <= 1e-15 * ab);
    }

    #[test]
    fn phase_repeats_every_wavelength(d in 0.1..100.0f64) {
        let p = params();
        let o = Point3::default();
        let h1 = los_gain(&o, &Point3::new(d, 0.0, 0.0), &p).unwrap();
        let h2 = los_gain(&o, &Point3::new(d + p.wavelength, 0.0, 0.0), &p).unwrap();
        let (a, b) = (wrap_phase(h1.arg()), wrap_phase(h2.arg()));
        let diff = (a - b).abs();
        prop_assert!(diff.min(TAU - diff) < 1e-9);
    }

    #[test]
    fn amplitude_decreases_beyond_reference(d in 1.0..100.0f64, step in 1e-3..10.0f64, alpha in 0.1..4.0f64) {
        let p = ChannelParams::new(0.01, alpha, 1.0, -20.0).unwrap();
        prop_assert!(p.amplitude(d + step) < p.amplitude(d));
        prop_assert_eq!(p.amplitude(d * 0.0 + 0.5), p.amplitude(1.0));
    }

    #[test]
    fn co_phased_terms_share_direct_phase((g, ch) in arb_problem()) {
        let rc = configure(&ch, &g, Scheme::ElementContinuous).unwrap();
        let zeta = ch.direct.arg();
        for ((h, c), a) in ch.irs_to_ue.iter().zip(&rc.coeffs).zip(&ch.ap_to_irs) {
            let d = wrap_phase((h * c * a).arg() - zeta);
            prop_assert!(d.min(TAU - d) < 1e-9);
        }
        for c in &rc.coeffs {
            prop_assert!((c.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn configs_respect_scheme_shape((g, ch) in arb_problem()) {
        for s in Scheme::ALL {
            let rc = configure(&ch, &g, s).unwrap();
            if s.is_binary() {
                prop_assert!(rc.coeffs.iter().all(|c| c.im == 0.0 && c.re.abs() == 1.0));
            }
            if s.is_columnwise() {
                for n in 0..g.len() {
                    prop_assert_eq!(rc.coeffs[n], rc.coeffs[g.topmost(g.column_of(n))]);
                }
            }
        }
    }

    #[test]
    fn grouping_commutes_with_quantization((g, ch) in arb_problem()) {
        let theta = optimal_continuous(&ch);
        let grouped_then_binary = binarize(&column_group(&theta, &g).unwrap(), Scheme::ColumnBinary).unwrap();
        let binary = binarize(&theta, Scheme::ElementBinary).unwrap();
        let expanded: Vec<Complex64> =
            (0..g.len()).map(|n| binary.coeffs[g.topmost(g.column_of(n))]).collect();
        prop_assert_eq!(grouped_then_binary.coeffs, expanded);
    }

    #[test]
    fn column_sums_agree_with_flat_sum((g, ch) in arb_problem()) {
        let agg = column_aggregate(&ch, &g).unwrap();
        let by_cols: Complex64 = agg.sums.iter().sum();
        let flat: Complex64 = ch.cascade().sum();
        prop_assert!((by_cols - flat).norm() <= 1e-9 * flat.norm().max(1e-300));
        // linearity: column signs act on the aggregate
        let signs: Vec<f64> = (0..g.n_cols()).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let rc = ReflectionConfig::from_column_signs(&signs, &g);
        let eff = effective_gain(&ch, &rc).unwrap();
        let via_agg: Complex64 = agg.sums.iter().zip(&signs).map(|(c, s)| c * s).sum::<Complex64>() + ch.direct;
        prop_assert!((eff - via_agg).norm() <= 1e-9 * eff.norm().max(1.0));
    }

    #[test]
    fn search_never_loses_to_quantized_start((g, ch) in arb_problem()) {
        let lp = LinkParams::new(1.0, 1.0).unwrap();
        let quant = configure(&ch, &g, Scheme::ColumnBinary).unwrap();
        let q = effective_gain(&ch, &quant).unwrap().norm_sqr();
        let (best, snr) = exhaustive_column_binary(&ch, &g, &lp, 24).unwrap();
        prop_assert!(snr >= q * (1.0 - 1e-12));
        prop_assert!((effective_gain(&ch, &best).unwrap().norm_sqr() - snr).abs() <= 1e-9 * snr);
        let asc = coordinate_ascent_column_binary(&ch, &g, &quant, 50).unwrap();
        prop_assert!(asc.power_trace.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(asc.final_power() >= asc.power_trace[0]);
        prop_assert!(asc.final_power() <= snr * (1.0 + 1e-12));
    }

    #[test]
    fn continuous_optimum_dominates((g, ch) in arb_problem(), phases in prop::collection::vec(0.0..TAU, 24)) {
        let lp = LinkParams::new(0.05, 1e-9).unwrap();
        let best = snr_gain_db(&ch, &configure(&ch, &g, Scheme::ElementContinuous).unwrap(), &lp).unwrap();
        prop_assert!(best >= 0.0);
        let arbitrary = PhaseVector::new((0..g.len()).map(|n| phases[n % phases.len()]).collect()).unwrap();
        let rc = ReflectionConfig::new(arbitrary.to_coeffs(), Scheme::ElementContinuous);
        prop_assert!(snr_gain_db(&ch, &rc, &lp).unwrap() <= best + 1e-9);
    }
}

/// Sign vectors enumerated directly, for N_x = 8.
#[test]
fn exhaustive_matches_enumeration_for_eight_columns() {
    use rand::{Rng, SeedableRng};
    let g = IrsGeometry::new(8, 2, 26e9, Point3::default()).unwrap();
    let lp = LinkParams::new(1.0, 1.0).unwrap();
    for seed in 0..20u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut c = || Complex64::from_polar(rng.gen_range(0.1..1.0), rng.gen_range(0.0..TAU));
        let ch = ChannelSet {
            ap_to_irs: (0..16).map(|_| c()).collect(),
            irs_to_ue: (0..16).map(|_| c()).collect(),
            direct: c(),
        };
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for code in 0..256u32 {
            let signs: Vec<f64> =
                (0..8).map(|k| if code & (1 << (7 - k)) != 0 { -1.0 } else { 1.0 }).collect();
            let p = effective_gain(&ch, &ReflectionConfig::from_column_signs(&signs, &g))
                .unwrap()
                .norm_sqr();
            if p > best.0 + 1e-12 {
                best = (p, signs);
            }
        }
        let (rc, snr) = exhaustive_column_binary(&ch, &g, &lp, 24).unwrap();
        assert_eq!(rc.column_signs(&g).unwrap(), best.1, "seed {seed}");
        assert!((snr - best.0).abs() <= 1e-12 * best.0);
    }
}

#[test]
fn diagnostic_profiles_contrast_between_scenarios() {
    let s1 = ScenarioConfig::preset(1).unwrap();
    let s3 = ScenarioConfig::preset(3).unwrap();
    let g1 = s1.irs().unwrap();
    let g3 = s3.irs().unwrap();
    let col = g1.n_cols() / 2;
    let p1 = phase_profile(&s1, &g1, &diagnostic_ue(&s1), col).unwrap();
    let p3 = phase_profile(&s3, &g3, &diagnostic_ue(&s3), col).unwrap();
    assert_eq!(p1.phases.len(), 32);
    assert!(p1.unwrapped_spread() < 1.0);

    // scenario 3 drifts steadily down the column
    let u = unwrap(&p3.phases);
    let steps: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|&d| d > 0.0) || steps.iter().all(|&d| d < 0.0));
    assert!(p3.unwrapped_spread() > 10.0);

    let h1 = phase_histogram(&p1, 16).unwrap();
    let h3 = phase_histogram(&p3, 16).unwrap();
    let occupied = |h: &irs_sim::experiments::PhaseHistogram| h.counts.iter().filter(|&&c| c > 0).count();
    assert!(occupied(&h1) <= 2, "{:?}", h1.counts);
    assert!(occupied(&h3) >= 12, "{:?}", h3.counts);
}

#[test]
fn co_phased_reflection_cancels_propagation() {
    let cfg = ScenarioConfig::preset(3).unwrap();
    let geom = cfg.irs().unwrap();
    let ue = diagnostic_ue(&cfg);
    let prop = phase_profile(&cfg, &geom, &ue, 5).unwrap();
    let refl = reflection_profile(&cfg, &geom, &ue, 5, Scheme::ElementContinuous).unwrap();
    let ch = irs_sim::channel::compute_channels(
        &geom,
        &cfg.ap_pos,
        &ue,
        &ChannelParams::from_scenario(&cfg).unwrap(),
    )
    .unwrap();
    let zeta = wrap_phase(ch.direct.arg());
    for (a, b) in prop.phases.iter().zip(&refl.phases) {
        let d = wrap_phase(a + b - zeta);
        assert!(d.min(TAU - d) < 1e-9);
    }
    // element-wise control varies along the column
    let spread = refl.phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - refl.phases.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread > 1.0);
}
