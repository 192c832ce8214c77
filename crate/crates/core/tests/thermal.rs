use dlr_core::thermal::{
    balance_residual, heat_losses, solve_ampacity, solve_conductor_temp, ConductorSpec, WeatherPoint,
};
use proptest::prelude::*;

// Reference values from a 50-digit bisection on the heat-balance residual,
// computed outside this crate.
const I_STAR: f64 = 141.903_046_521_355_18;
const I_STAR_STAR: f64 = 219.581_646_141_200_74;
const T_COND_80A: f64 = 44.810_527_207_214_04;

fn weather(ambient: f64, wind: f64, irradiance: f64) -> WeatherPoint {
    WeatherPoint {
        ambient_temp_c: ambient,
        wind_speed_ms: wind,
        humidity_pct: 60.0,
        irradiance_wm2: irradiance,
    }
}

#[test]
fn frozen_ampacity_values() {
    let spec = ConductorSpec::default();
    let hot = solve_ampacity(&spec, &weather(35.0, 0.6, 1000.0)).unwrap();
    let cool = solve_ampacity(&spec, &weather(25.0, 3.0, 0.0)).unwrap();
    assert!((hot - I_STAR).abs() < 1e-9 * I_STAR, "{hot}");
    assert!((cool - I_STAR_STAR).abs() < 1e-9 * I_STAR_STAR, "{cool}");
    assert!(cool > hot);
}

#[test]
fn adverse_weather_lands_near_static_rating_band() {
    let i = solve_ampacity(&ConductorSpec::default(), &weather(35.0, 0.6, 1000.0)).unwrap();
    assert!((90.0..160.0).contains(&i), "{i}");
}

#[test]
fn frozen_conductor_temperature_round_trips() {
    let spec = ConductorSpec::default();
    let w = weather(30.0, 1.0, 800.0);
    let t = solve_conductor_temp(&spec, &w, 80.0).unwrap();
    assert!((t - T_COND_80A).abs() < 1e-6, "{t}");
    let at_t = ConductorSpec {
        max_conductor_temp_c: t,
        ..spec
    };
    let i = solve_ampacity(&at_t, &w).unwrap();
    assert!((i - 80.0).abs() < 1e-6, "{i}");
}

#[test]
fn hotter_with_more_current() {
    let spec = ConductorSpec::default();
    let w = weather(30.0, 1.0, 800.0);
    let t50 = solve_conductor_temp(&spec, &w, 50.0).unwrap();
    let t100 = solve_conductor_temp(&spec, &w, 100.0).unwrap();
    assert!(t100 > t50);
    assert!((solve_conductor_temp(&spec, &weather(12.0, 2.0, 0.0), 0.0).unwrap() - 12.0).abs() < 1e-8);
}

#[test]
fn independent_bisection_agrees() {
    // Plain bisection on the ampacity residual at T_max, written separately
    // from the closed-form solver.
    let spec = ConductorSpec::default();
    for w in [weather(35.0, 0.6, 1000.0), weather(25.0, 3.0, 0.0), weather(0.0, 8.0, 300.0)] {
        let f = |i: f64| balance_residual(&spec, &w, spec.max_conductor_temp_c, i);
        let (mut lo, mut hi) = (0.0f64, 5000.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let got = solve_ampacity(&spec, &w).unwrap();
        assert!((got - lo).abs() < 1e-9 * lo, "{got} vs {lo}");
    }
}

#[test]
fn sun_alone_overwhelms_cooling() {
    let spec = ConductorSpec {
        max_conductor_temp_c: 35.5,
        ..ConductorSpec::default()
    };
    let w = weather(35.0, 0.0, 1200.0);
    assert!(heat_losses(&spec, &w, 35.5).net_cooling() < 0.0);
    assert_eq!(solve_ampacity(&spec, &w).unwrap(), 0.0);
}

fn spec_strategy() -> impl Strategy<Value = ConductorSpec> {
    (
        0.004..0.04f64,
        1e-4..2e-3f64,
        0.002..0.005f64,
        0.2..1.0f64,
        0.2..1.0f64,
        50.0..150.0f64,
        0.1..3.0f64,
        0.1..8.0f64,
    )
        .prop_map(|(d, r, alpha, eps, abs, tmax, ln, lf)| ConductorSpec {
            diameter_m: d,
            resistance_ref_ohm_per_m: r,
            ref_temp_c: 20.0,
            alpha_per_c: alpha,
            emissivity: eps,
            absorptivity: abs,
            max_conductor_temp_c: tmax,
            lambda_nat: ln,
            lambda_forced: lf,
        })
}

fn weather_strategy() -> impl Strategy<Value = WeatherPoint> {
    (-20.0..45.0f64, 0.0..15.0f64, 0.0..100.0f64, 0.0..1200.0f64).prop_map(|(a, v, h, s)| WeatherPoint {
        ambient_temp_c: a,
        wind_speed_ms: v,
        humidity_pct: h,
        irradiance_wm2: s,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn residual_vanishes_at_ampacity(spec in spec_strategy(), w in weather_strategy()) {
        let i = solve_ampacity(&spec, &w).unwrap();
        prop_assert!(i >= 0.0);
        if i > 0.0 {
            let r = balance_residual(&spec, &w, spec.max_conductor_temp_c, i);
            prop_assert!(r.abs() < 1e-6, "residual {}", r);
        }
    }

    #[test]
    fn temperature_round_trip(spec in spec_strategy(), w in weather_strategy()) {
        let i = solve_ampacity(&spec, &w).unwrap();
        if i > 0.0 {
            let t = solve_conductor_temp(&spec, &w, i).unwrap();
            prop_assert!((t - spec.max_conductor_temp_c).abs() < 1e-6, "{} vs {}", t, spec.max_conductor_temp_c);
        }
    }

    #[test]
    fn monotone_in_weather(spec in spec_strategy(), w in weather_strategy(), a in 0.0..15.0f64, b in 0.0..15.0f64) {
        let i0 = solve_ampacity(&spec, &w).unwrap();
        let windier = WeatherPoint { wind_speed_ms: w.wind_speed_ms + a, ..w };
        prop_assert!(solve_ampacity(&spec, &windier).unwrap() >= i0);
        let hotter = WeatherPoint { ambient_temp_c: w.ambient_temp_c + b, ..w };
        prop_assert!(solve_ampacity(&spec, &hotter).unwrap() <= i0);
        let sunnier = WeatherPoint { irradiance_wm2: w.irradiance_wm2 + 50.0 * a, ..w };
        prop_assert!(solve_ampacity(&spec, &sunnier).unwrap() <= i0);
    }

    #[test]
    fn humidity_never_matters(spec in spec_strategy(), w in weather_strategy(), h in 0.0..=100.0f64) {
        let other = WeatherPoint { humidity_pct: h, ..w };
        prop_assert_eq!(
            solve_ampacity(&spec, &w).unwrap().to_bits(),
            solve_ampacity(&spec, &other).unwrap().to_bits()
        );
    }

    #[test]
    fn conductor_temp_increases_with_current(w in weather_strategy(), i in 0.0..150.0f64, di in 1.0..100.0f64) {
        let spec = ConductorSpec::default();
        let t1 = solve_conductor_temp(&spec, &w, i).unwrap();
        let t2 = solve_conductor_temp(&spec, &w, i + di).unwrap();
        prop_assert!(t2 > t1);
    }
}
