//! Property tests over the market primitives.

use gridbroker_core::broker::{base_price, PriceVector};
use gridbroker_core::loads::select_sla;
use gridbroker_core::metrics;
use gridbroker_core::scenario::builtin;
use proptest::prelude::*;

proptest! {
    // Band schedules are total on [0, 86400).
    #[test]
    fn tariff_and_plan_cover_every_second(t in 0u32..86_400) {
        let get = builtin::italian_get();
        let fit = builtin::italian_fit();
        prop_assert!(get.price_at(t) > 0.0);
        prop_assert!(fit.price_at(t) > 0.0);
        for idx in 0..=4 {
            let p = builtin::plan(idx).power_at(t);
            prop_assert!(p.is_finite() && p >= 0.0);
        }
    }

    // The supply cost stays between the two tariffs and is monotone in the
    // demanded power.
    #[test]
    fn base_price_bounded_and_monotone(
        p_s in 0.0f64..10_000.0,
        p_re in 0.0f64..10_000.0,
        fit in 0.0f64..1.0,
        get_extra in 0.0f64..1.0,
    ) {
        let get = fit + get_extra;
        let p = base_price(p_s, p_re, fit, get);
        prop_assert!(p >= fit - 1e-12 && p <= get + 1e-12, "p={p} fit={fit} get={get}");

        // Non-decreasing in P_s for fixed P_re.
        let p_more = base_price(p_s + 500.0, p_re, fit, get);
        prop_assert!(p_more >= p - 1e-12);

        // Non-increasing in P_re for fixed P_s.
        let p_greener = base_price(p_s, p_re + 500.0, fit, get);
        prop_assert!(p_greener <= p + 1e-12);
    }

    #[test]
    fn base_price_continuous_at_crossover(
        p_re in 1.0f64..10_000.0,
        fit in 0.0f64..1.0,
        get in 0.0f64..1.0,
    ) {
        let at = base_price(p_re, p_re, fit, get);
        let just_above = base_price(p_re * (1.0 + 1e-12), p_re, fit, get);
        prop_assert!((at - just_above).abs() < 1e-9);
    }

    // Best-fit selection against a brute-force oracle over the catalog.
    #[test]
    fn select_sla_matches_brute_force(
        remaining in 1u64..4000,
        prices in proptest::collection::vec(0.0f64..1.5, 7),
        psi in 0.0f64..1.2,
    ) {
        let catalog = builtin::catalog();
        let pv = PriceVector::from_vec(prices.clone());
        let qv = select_sla(100.0, remaining, &pv, psi, &catalog);

        // Oracle: filter affordable entries, prefer the shortest covering
        // duration, fall back to the longest affordable one.
        let affordable: Vec<usize> =
            (0..7).filter(|&k| prices[k] <= psi).collect();
        let expected = affordable
            .iter()
            .copied()
            .filter(|&k| catalog.durations[k] as u64 >= remaining)
            .min_by_key(|&k| catalog.durations[k])
            .or_else(|| affordable.iter().copied().max_by_key(|&k| catalog.durations[k]));

        prop_assert_eq!(qv.demand().map(|(k, _)| k), expected);
        if let Some((k, power)) = qv.demand() {
            prop_assert!(prices[k] <= psi);
            prop_assert_eq!(power, 100.0);
        }
    }

    // PAR of a non-negative series is at least 1 and exactly 1 iff constant.
    #[test]
    fn par_at_least_one(series in proptest::collection::vec(0.0f64..5000.0, 1..200)) {
        let par = metrics::par(&series).unwrap();
        prop_assert!(par >= 1.0 - 1e-12);
        let constant = series.windows(2).all(|w| w[0] == w[1]);
        if constant {
            prop_assert!((par - 1.0).abs() < 1e-12);
        }
    }

    // Availability and unavailability always partition the unit interval,
    // and scaling all segments leaves availability unchanged.
    #[test]
    fn availability_partitions_and_scales(
        up in proptest::collection::vec(1u64..5000, 0..20),
        down in proptest::collection::vec(1u64..5000, 0..20),
        scale in 2u64..10,
    ) {
        let a = metrics::availability(&up, &down);
        prop_assert!((a.availability + a.unavailability - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.availability));

        let up_scaled: Vec<u64> = up.iter().map(|&x| x * scale).collect();
        let down_scaled: Vec<u64> = down.iter().map(|&x| x * scale).collect();
        let b = metrics::availability(&up_scaled, &down_scaled);
        prop_assert!((a.availability - b.availability).abs() < 1e-9);
    }

    // Reactivity is scale-invariant.
    #[test]
    fn reactivity_scale_invariant(cbp in 0u64..1000, cnbp in 0u64..1000, k in 1u64..50) {
        let r1 = metrics::reactivity(cbp, cnbp);
        let r2 = metrics::reactivity(cbp * k, cnbp * k);
        prop_assert!((r1 - r2).abs() < 1e-12);
    }
}
