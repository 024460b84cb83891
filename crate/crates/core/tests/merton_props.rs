use moreau::merton::*;
use moreau::{dual_conjugate, Grid, GridFn, Kernel};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = MertonParams> {
    (0.01f64..0.1, 0.01f64..0.2, 0.1f64..0.5).prop_map(|(r, d, s)| MertonParams::new(r, r + d, s, 1.0).unwrap())
}

fn member(x: f64, xi: f64, p: &MertonParams) -> f64 {
    x * (p.r + (p.alpha - p.r) * xi + (x - 1.0) * p.sigma * p.sigma * xi * xi / 2.0)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let k = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 * (1.0 + b.abs()) {
        let (c, d) = (b - k * (b - a), a + k * (b - a));
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn closed_forms_match_grid_oracles(p in params()) {
        for k in 0..10 {
            let x = k as f64 / 10.0;
            let hi = if x > 0.0 { 2.0 * xi_star(x, &p) } else { 1.0 };
            let xi = XiGrid { min: 0.0, max: hi, step: hi / 200_000.0 }.nodes().unwrap();
            let bf = brute_force_g(x, &p, &xi);
            prop_assert!((bf - g_closed(x, &p).value()).abs() < 1e-6, "x={} {} vs {:?}", x, bf, g_closed(x, &p));
            if x > 0.0 {
                let arg = golden_max(|s| member(x, s, &p), 0.0, hi);
                prop_assert!((arg - xi_star(x, &p)).abs() < 1e-6);
            }
        }
        let slope = brute_force_g(1e-8, &p, &XiGrid { min: 0.0, max: 2.0 * xi_star(1e-8, &p), step: xi_star(0.0, &p) / 1e5 }.nodes().unwrap()) / 1e-8;
        prop_assert!((slope - z0(&p)).abs() < 1e-6);
        // g* as a sup over x in [0,1) of xy - g(x).
        for dy in [-0.01, 0.0, 0.01, 0.05, 0.2] {
            let y = z0(&p) + dy;
            let xo = golden_max(|x| x * y - g_closed(x, &p).value(), 0.0, 1.0 - 1e-9);
            let oracle = (xo * y - g_closed(xo, &p).value()).max(0.0);
            prop_assert!((oracle - g_star(y, &p)).abs() < 1e-6, "y={} {} {}", y, oracle, g_star(y, &p));
        }
    }

    #[test]
    fn truncation_brackets_the_sample_form(p in params(), xi in 0.2f64..3.0, xk in 0u32..10, a in -0.2f64..0.05, seed in any::<u64>()) {
        let y = Grid::line(-1.0, 1.0, 201).unwrap();
        let s = simulate(&p, &ControlSpec::Constant { xi }, 20.0, 500, seed).unwrap();
        let f = empirical_form(&s, &y).unwrap();
        let (g, _) = truncate_form(&f, a, &p).unwrap();
        let k = Kernel::bilinear(Grid::line(0.0, 0.9, 10).unwrap(), y.clone()).unwrap();
        let x = xk as f64 / 10.0;
        let fx = f.evaluate_section(&k, xk as usize).unwrap().value();
        let gx = g.evaluate_section(&k, xk as usize).unwrap().value();
        let lo = fx.max(x * a);
        let eps = 1.0 / s.t;
        prop_assert!(gx >= lo - 1e-12 * (1.0 + lo.abs()), "{} < {}", gx, lo);
        prop_assert!(gx <= lo + eps * std::f64::consts::LN_2 + 1e-12, "{} > {} + eps ln 2", gx, lo);
    }
}

#[test]
fn legendre_consistency() {
    let p = MertonParams::new(0.05, 0.10, 0.20, 1.0).unwrap();
    let xg = Grid::line(0.0, 0.99, 100).unwrap();
    let yg = Grid::line(0.0, 1.0, 201).unwrap();
    let g = GridFn::sample(&xg, |q| g_closed(q[0], &p));
    let rate = dual_conjugate(&g, &Kernel::bilinear(xg.clone(), yg.clone()).unwrap()).unwrap();
    // Slopes up to y_max stay inside the sampled x range; the error is at most h·max|y|.
    let h = xg.axis(0).step();
    for j in 0..yg.len() {
        let y = yg.coord(j);
        let e = (rate.get(j).value() - g_star(y, &p)).abs();
        assert!(e <= h * 1.0 + 1e-12, "y={y}: {e}");
        assert!(rate.get(j).value() <= g_star(y, &p) + 1e-12);
    }
}

#[test]
fn monte_carlo_matches_exact_moments() {
    let p = MertonParams::new(0.05, 0.10, 0.20, 1.5).unwrap();
    for (i, &(x, xi, t)) in [(0.5, 2.5, 10.0), (0.3, 1.0, 5.0), (0.8, 0.5, 20.0), (0.1, 4.0, 2.0)].iter().enumerate() {
        let s = simulate(&p, &ControlSpec::Constant { xi }, t, 100_000, 100 + i as u64).unwrap();
        let v = risk_sensitive_value(x, &s);
        let se = risk_sensitive_se(x, &s, 200, 9);
        let exact = risk_sensitive_exact(x, xi, &p, t);
        assert!((v - exact).abs() < 3.0 * se, "x={x} xi={xi} T={t}: {v} vs {exact} (se {se})");
    }
}

#[test]
fn simulation_ignores_thread_count() {
    let p = MertonParams::new(0.05, 0.10, 0.20, 1.0).unwrap();
    let run = |n| {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| {
            simulate(&p, &ControlSpec::Constant { xi: 1.3 }, 7.0, 10_000, 42).unwrap().values
        })
    };
    assert_eq!(run(1), run(4));
}

fn ldp_cfg(truncation: Option<f64>) -> MertonLdpConfig {
    let params = MertonParams::new(0.05, 0.10, 0.20, 1.0).unwrap();
    let (x, y) = match truncation {
        Some(a) => ((0.0, 0.9, 46), (a, 0.5, 101)),
        None => ((-0.2, 0.9, 56), (-0.5, 0.5, 201)),
    };
    MertonLdpConfig {
        params,
        x,
        y,
        xi: XiGrid { min: -5.0, max: 30.0, step: 0.01 },
        t_list: vec![1e3, 1e4, 1e5],
        truncation,
        margin: 0.1,
    }
}

#[test]
fn truncated_pipeline_identifies_the_rate_above_z0() {
    let cfg = ldp_cfg(Some(0.0));
    let p = cfg.params;
    let out = ldp_pipeline(&cfg).unwrap();
    let xg = out.g.grid();
    for i in 0..xg.len() {
        assert!((out.g.get(i).value() - g_closed(xg.coord(i), &p).value()).abs() < 1e-6);
    }
    assert_eq!(out.assumptions.tightness.x0, Some(0));
    assert!(out.assumptions.tightness.holds_evidence);
    assert!(out.upper_bound && out.lower_bound_on_z);
    assert_ne!(out.verdict, moreau::GartnerVerdict::Inconclusive);
    let yg = out.rate_lower.grid();
    assert!(!out.z.is_empty());
    assert!(out.z.iter().all(|&j| yg.coord(j) > z0(&p)));
    for j in 0..yg.len() {
        let y = yg.coord(j);
        assert!((out.rate_lower.get(j).value() - g_star(y, &p)).abs() <= 0.02 * y.abs() + 1e-9, "y={y}");
    }
}

#[test]
fn untruncated_pipeline_loses_the_tightness_witness() {
    let cfg = ldp_cfg(None);
    let out = ldp_pipeline(&cfg).unwrap();
    let xg = out.g.grid();
    for i in 0..xg.len() {
        if xg.coord(i) < -1e-12 {
            assert!(out.g.get(i).is_pos_inf());
        }
    }
    let zero = xg.nearest([0.0, 0.0]);
    assert!(!out.idom.contains(&zero));
    assert!(!out.assumptions.tightness.holds_evidence);
    assert_eq!(out.assumptions.tightness.x0, None);
}
