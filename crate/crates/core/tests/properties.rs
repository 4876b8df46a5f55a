use aoi_hetero::chain::average_age;
use aoi_hetero::closed_form::{candidate_constants, FamilyModel, DEFAULT_EPS};
use aoi_hetero::mdp::{relative_value_iteration, CostFunction, OracleOptions};
use aoi_hetero::{classify_region, solve, Candidate, ChannelParams, Region};
use proptest::prelude::*;

fn away_from_boundary(p: f64, q: f64, d: u32) -> Option<ChannelParams> {
    let pr = ChannelParams::new(p, q, d).ok()?;
    (classify_region(&pr).margin() > 1e-3).then_some(pr)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimum_undercuts_every_candidate(p in 0.02..0.98f64, q in 0.02..0.98f64, d in 2u32..15) {
        let Some(pr) = away_from_boundary(p, q, d) else { return Ok(()) };
        let res = solve(&pr).unwrap();
        prop_assert!(res.delta_opt >= 1.0);
        for c in &res.candidates {
            prop_assert!(res.delta_opt <= c.value);
        }
        let k = candidate_constants(&pr);
        prop_assert!(res.delta_opt <= k.always_ch2 + 1e-12);
        if matches!(res.region.region, Region::B1 | Region::B4) {
            prop_assert!(res.delta_opt <= k.always_ch1 + 1e-12);
        }
        prop_assert!(res.argmin.iter().all(|a| Candidate::for_region(res.region.region).contains(a)));
    }

    #[test]
    fn solved_policy_attains_its_value(p in 0.05..0.95f64, q in 0.05..0.95f64, d in 2u32..8) {
        let Some(pr) = away_from_boundary(p, q, d) else { return Ok(()) };
        let res = solve(&pr).unwrap();
        prop_assume!(res.policy.lambda0 < 200);
        let chain = average_age(&pr, &res.policy, 1000).unwrap();
        prop_assert!((chain - res.delta_opt).abs() < 1e-9 * res.delta_opt, "{} vs {}", chain, res.delta_opt);
    }

    #[test]
    fn bisection_root_zeroes_h(p in 0.5..0.99f64, q in 0.02..0.98f64, d in 2u32..12) {
        let Some(pr) = away_from_boundary(p, q, d) else { return Ok(()) };
        prop_assume!(matches!(classify_region(&pr).region, Region::B2 | Region::B3));
        let families = Candidate::for_region(classify_region(&pr).region).iter().filter_map(|c| c.family());
        for family in families {
            let model = FamilyModel::new(family, &pr).unwrap();
            let root = model.solve(DEFAULT_EPS).unwrap();
            prop_assert!(model.h(root.beta).abs() < 1e-6 * root.beta.max(1.0));
            prop_assert!((model.ratio(root.threshold).unwrap() - root.ratio).abs() < 1e-12 * root.ratio);
            prop_assert!(root.ratio <= model.ratio(family.domain_min(d).max(1)).unwrap() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Doubling the age cap leaves the oracle gain unchanged when the
    /// channel mixes fast enough for the tail to be negligible.
    #[test]
    fn gain_insensitive_to_cap_doubling(p in 0.1..0.8f64, q in 0.1..0.8f64, d in 2u32..5) {
        let cap = 20 * u64::from(d) + 100;
        let pr = ChannelParams::new(p, q, d).unwrap();
        let a = relative_value_iteration(&pr, &CostFunction::Linear, &OracleOptions::with_cap(cap)).unwrap();
        let b = relative_value_iteration(&pr, &CostFunction::Linear, &OracleOptions::with_cap(2 * cap)).unwrap();
        let (a, b) = (a.gain.unwrap(), b.gain.unwrap());
        prop_assert!((a - b).abs() < 1e-7 * b, "{} vs {}", a, b);
    }
}
