use gravdec::com::{
    com_marginal, evolve_two_particle, run_decoupling, InterferenceScenario, PairPotential, TwoParticleStepper,
};

#[test]
fn center_of_mass_ignores_relative_potential_at_two_softenings() {
    let sc = InterferenceScenario::default();
    let h = sc.spacing();
    for cells in [4.0, 8.0] {
        let r = run_decoupling(&sc, PairPotential::Relative { g: 1.0, eps: cells * h }, 0.005, 40).unwrap();
        assert!(r.times.len() >= 5);
        assert!(r.max_com_l1() < 1e-6, "eps {cells} cells: {:e}", r.max_com_l1());
        assert!(r.max_oracle_l1() < 1e-6, "oracle {:e}", r.max_oracle_l1());
        assert!((r.visibility_free - r.visibility_interacting).abs() < 1e-4);
        assert!(r.relative_l1_final > 1e-2, "relative sector unchanged: {:e}", r.relative_l1_final);
        assert!(r.max_norm_drift < 1e-10);
        assert!((r.visibility_free - 1.0).abs() < 0.02, "{}", r.visibility_free);
    }
}

#[test]
fn interacting_marginal_matches_free_evolution_oracle() {
    let sc = InterferenceScenario::default();
    let f = sc.initial_field((1.0, 1.0)).unwrap();
    let t = sc.meeting_time();
    let dt = 0.005;
    let out = evolve_two_particle(&f, PairPotential::Relative { g: 1.0, eps: sc.default_eps() }, 1.0, dt, (t / dt).round() as usize)
        .unwrap();
    let oracle = sc.analytic_com_marginal(out.t, (1.0, 1.0));
    assert!(com_marginal(&out).l1_distance(&oracle).unwrap() < 1e-6);
}

#[test]
fn external_potential_breaks_decoupling() {
    let sc = InterferenceScenario::default();
    let r = run_decoupling(&sc, PairPotential::External { g: 1.0, eps: sc.default_eps() }, 0.005, 40).unwrap();
    assert!(r.max_com_l1() > 1e-3, "{:e}", r.max_com_l1());
}

#[test]
fn total_momentum_is_conserved() {
    let sc = InterferenceScenario { n: 128, extent: 30.0, ..Default::default() };
    let mut f = sc.initial_field((1.0, 0.0)).unwrap();
    let p0 = f.total_momentum(1.0);
    assert!((p0 - sc.k0).abs() < 1e-6, "{p0}");
    let st = TwoParticleStepper::new(&f, PairPotential::Relative { g: 2.0, eps: sc.default_eps() }, 1.0, 0.005).unwrap();
    for _ in 0..200 {
        let n0 = f.norm_sqr();
        st.step(&mut f);
        assert!((f.norm_sqr() - n0).abs() < 1e-10);
    }
    assert!((f.total_momentum(1.0) / p0 - 1.0).abs() < 1e-8);
}
