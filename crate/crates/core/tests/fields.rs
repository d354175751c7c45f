use belief_thermo::bandit::{AgentParams, BanditConfig, BeliefState};
use belief_thermo::fokker_planck::*;
use belief_thermo::irreversibility::{phi_monte_carlo_model, MonteCarloSettings};
use belief_thermo::rng::aux_rng;
use rand::Rng;

fn params(beta: f64, gamma: f64, sigma_eta: f64) -> AgentParams {
    AgentParams::new(beta, gamma, sigma_eta).unwrap()
}

fn random_case(rng: &mut impl Rng) -> (BanditConfig, AgentParams, [f64; 2]) {
    let config = BanditConfig::new(
        rng.random_range(0.0..1.0),
        rng.random_range(0.0..1.0),
        rng.random_range(0.01..0.5),
        rng.random_range(0.01..0.5),
    )
    .unwrap();
    let p = params(
        rng.random_range(0.01..1.0),
        rng.random_range(0.0..10.0),
        rng.random_range(0.001..0.1),
    );
    let x = [rng.random_range(-0.2..0.8), rng.random_range(-0.2..0.8)];
    (config, p, x)
}

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

#[test]
fn diffusion_at_passive_equilibrium() {
    let d = diffusion(&BeliefState::new(0.25, 0.25), &BanditConfig::symmetric(), &params(0.1, 0.0, 0.01));
    // (0.05)² (0.25 · 0.25 + 1e-4)
    assert!((d.matrix[0][0] - 1.565e-4).abs() < 1e-12);
    assert!((d.matrix[1][1] - 1.565e-4).abs() < 1e-12);
    assert_eq!(d.matrix[0][1], 0.0);
    assert_eq!(d.divergence, [0.0, 0.0]);
}

#[test]
fn drift_vanishes_at_passive_equilibrium() {
    let f = drift(&BeliefState::new(0.25, 0.25), &BanditConfig::symmetric(), &params(0.1, 0.0, 0.01));
    assert!(f[0].abs() < 1e-15 && f[1].abs() < 1e-15);
}

#[test]
fn divergences_match_finite_differences() {
    let mut rng = aux_rng(11, 0);
    let h = 1e-5;
    for _ in 0..1000 {
        let (config, p, x) = random_case(&mut rng);
        let model = BanditModel::new(config, p);
        let f = model.fields(x);
        let at = |dx: f64, dy: f64| model.fields([x[0] + dx, x[1] + dy]);
        let k = (p.beta / 2.0).powi(2);
        let scale = k * (1.0 + p.gamma * p.gamma);

        let dxx_x = (at(h, 0.0).diffusion[0][0] - at(-h, 0.0).diffusion[0][0]) / (2.0 * h);
        let dyy_y = (at(0.0, h).diffusion[1][1] - at(0.0, -h).diffusion[1][1]) / (2.0 * h);
        assert!(close(f.div_diffusion[0], dxx_x, 1e-6, 1e-6 * scale), "{:?} vs {dxx_x}", f.div_diffusion);
        assert!(close(f.div_diffusion[1], dyy_y, 1e-6, 1e-6 * scale), "{:?} vs {dyy_y}", f.div_diffusion);

        let fx_x = (at(h, 0.0).drift[0] - at(-h, 0.0).drift[0]) / (2.0 * h);
        let fy_y = (at(0.0, h).drift[1] - at(0.0, -h).drift[1]) / (2.0 * h);
        assert!(close(f.div_drift, fx_x + fy_y, 1e-6, 1e-8 * p.beta * (1.0 + p.gamma)));

        let qx = (at(h, 0.0).div_diffusion[0] - at(-h, 0.0).div_diffusion[0]) / (2.0 * h);
        let hy = (at(0.0, h).div_diffusion[1] - at(0.0, -h).div_diffusion[1]) / (2.0 * h);
        assert!(close(f.div_div_diffusion, qx + hy, 1e-6, 1e-6 * scale * (1.0 + p.gamma)));
    }
}

#[test]
fn curl_vanishes_without_exploitation() {
    let mut rng = aux_rng(12, 0);
    for _ in 0..1000 {
        let (config, p, x) = random_case(&mut rng);
        let p = p.with_gamma(0.0);
        let c = curl_force(&BeliefState::from(x), &config, &p).unwrap();
        assert!(c.abs() < 1e-6, "curl {c} at {x:?}");
    }
}

#[test]
fn curl_witness_with_exploitation() {
    let c = curl_force(&BeliefState::new(0.3, 0.2), &BanditConfig::symmetric(), &params(0.1, 2.5, 0.01)).unwrap();
    assert!(c.abs() > 1e-3, "curl {c}");
}

#[test]
fn closed_form_curl_matches_numeric() {
    let mut rng = aux_rng(13, 0);
    for _ in 0..300 {
        let (config, p, x) = random_case(&mut rng);
        let s = BeliefState::from(x);
        let exact = curl_force(&s, &config, &p).unwrap();
        let numeric = curl_force_numeric(&s, &config, &p, 1e-5).unwrap();
        let force = thermodynamic_force(&s, &config, &p).unwrap();
        let scale = (force[0].abs() + force[1].abs()) * (1.0 + p.gamma);
        assert!(close(exact, numeric, 1e-4, 1e-6 * scale), "{exact} vs {numeric}");
    }
}

#[test]
fn curl_is_odd_under_arm_exchange() {
    let mut rng = aux_rng(14, 0);
    for _ in 0..200 {
        let (config, p, x) = random_case(&mut rng);
        let c = curl_force(&BeliefState::from(x), &config, &p).unwrap();
        let m = curl_force(&BeliefState::new(x[1], x[0]), &config.mirrored(), &p).unwrap();
        assert!(close(c, -m, 1e-9, 1e-12), "{c} vs {m}");
    }
}

#[test]
fn zero_exogenous_noise_is_singular_where_allocation_saturates() {
    let p = params(0.1, 10.0, 0.0);
    let config = BanditConfig::symmetric();
    // a(δ) rounds to 1, so D_yy is exactly zero.
    let r = thermodynamic_force(&BeliefState::new(10.0, 0.0), &config, &p);
    assert!(matches!(r, Err(belief_thermo::Error::SingularDiffusion { .. })));
}

#[test]
fn field_scan_exports_every_point() {
    let scan = field_scan(&BanditConfig::symmetric(), &params(0.1, 2.5, 0.01), [0.0, 0.5, 0.0, 0.5], 5);
    assert_eq!(scan.len(), 25);
    let mut buf = Vec::new();
    write_field_scan_csv(&scan, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("x,y,F_x,F_y,D_xx,D_yy,force_x,force_y,curl\n"));
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn delta_force_is_odd_for_symmetric_arms() {
    let config = BanditConfig::symmetric();
    for gamma in [0.0, 1.0, 2.5, 7.0] {
        let p = params(0.1, gamma, 0.01);
        for d in [0.01, 0.1, 0.3, 0.55] {
            let f = delta_force(d, &config, &p, true);
            let g = delta_force(-d, &config, &p, true);
            assert!(close(f, -g, 1e-12, 1e-12), "Γ={gamma} δ={d}: {f} vs {g}");
        }
    }
}

#[test]
fn delta_force_leading_term_prefactor() {
    // Without exogenous noise and correction, force · S = (2/β)(−2δ + ΔR + ΣR tanh Γδ)
    // with S = σ_A² a² + σ_B² (1−a)².
    let config = BanditConfig::new(0.6, 0.4, 0.2, 0.3).unwrap();
    let p = params(0.1, 2.0, 0.0);
    for d in [-0.3, -0.05, 0.07, 0.25] {
        let a = allocation_from(d, p.gamma);
        let s = config.var_a * a * a + config.var_b * (1.0 - a) * (1.0 - a);
        let numerator = -2.0 * d + (config.mean_a - config.mean_b) + (config.mean_a + config.mean_b) * (p.gamma * d).tanh();
        let f = delta_force(d, &config, &p, false);
        assert!(close(f * s / numerator, 2.0 / p.beta, 1e-12, 0.0));
    }
}

fn allocation_from(d: f64, gamma: f64) -> f64 {
    belief_thermo::bandit::allocation_from_delta(d, gamma)
}

#[test]
fn delta_pdf_is_normalized_and_symmetric() {
    let grid = DeltaGrid::default();
    for gamma in [0.0, 1.5, 2.4] {
        let m = stationary_delta_pdf(&BanditConfig::symmetric(), &params(0.1, gamma, 0.01), &grid).unwrap();
        assert!((m.expectation(|_| 1.0) - 1.0).abs() < 1e-12);
        let n = m.pdf.len();
        for i in 0..n {
            assert!(close(m.pdf[i], m.pdf[n - 1 - i], 1e-9, 1e-12));
        }
        assert!(m.mean().abs() < 1e-12);
    }
}

#[test]
fn delta_pdf_is_gibbs_in_its_potential() {
    let m = stationary_delta_pdf(&BanditConfig::new(0.51, 0.49, 0.25, 0.25).unwrap(), &params(0.1, 2.0, 0.01), &DeltaGrid::default())
        .unwrap();
    let i0 = m.pdf.len() / 2;
    for i in (0..m.pdf.len()).step_by(97) {
        let ratio = m.pdf[i] / m.pdf[i0];
        let gibbs = (m.potential[i0] - m.potential[i]).exp();
        assert!(close(ratio, gibbs, 1e-9, 1e-300));
    }
}

#[test]
fn variance_asymmetry_favours_the_steadier_arm() {
    let config = BanditConfig::new(0.5, 0.5, 0.125, 0.25).unwrap();
    let m = stationary_delta_pdf(&config, &params(0.1, 2.0, 0.01), &DeltaGrid::default()).unwrap();
    assert!(m.mean() > 0.0);
}

#[test]
fn analytic_reward_for_equal_means() {
    let r = analytic_mean_reward(&BanditConfig::symmetric(), &params(0.1, 1.5, 0.01)).unwrap();
    assert!((r - 0.5).abs() < 1e-12);
}

#[test]
fn narrow_grid_is_rejected() {
    let grid = DeltaGrid { lo: -0.05, hi: 0.05, n: 201 };
    let r = stationary_delta_pdf(&BanditConfig::symmetric(), &params(0.1, 1.0, 0.01), &grid);
    assert!(matches!(r, Err(belief_thermo::Error::NonNormalizable { .. })));
}

#[test]
fn monte_carlo_phi_is_dilation_invariant() {
    let model = BanditModel::new(BanditConfig::symmetric(), params(0.1, 2.5, 0.01));
    let mut rng = aux_rng(15, 0);
    let paths: Vec<Vec<[f64; 2]>> = (0..4)
        .map(|_| (0..500).map(|_| [rng.random_range(0.0..0.5), rng.random_range(0.0..0.5)]).collect())
        .collect();
    let settings = MonteCarloSettings::default();
    let base = phi_monte_carlo_model(&paths, 1.0, &model, &settings).unwrap();
    let scaled_paths: Vec<Vec<[f64; 2]>> = paths.iter().map(|p| p.iter().map(|x| [2.0 * x[0], 2.0 * x[1]]).collect()).collect();
    let dilated = Dilated { inner: model, scale: 2.0 };
    let scaled = phi_monte_carlo_model(&scaled_paths, 1.0, &dilated, &settings).unwrap();
    assert!(close(base.value, scaled.value, 1e-10, 0.0), "{} vs {}", base.value, scaled.value);
}
