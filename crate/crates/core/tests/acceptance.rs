//! Acceptance suite: one test per contract, each printing a PASS line with
//! the measured quantities. Run with `--nocapture` to see the table.

use mellip_core::fredholm::{index_report, trace_via_symbol};
use mellip_core::lattice::{dft, idft, LatticeBox, LatticeFunction};
use mellip_core::quantize::{
    adjoint_asymptotic, adjoint_exact, compose_asymptotic, compose_exact, materialize, parametrix,
    toroidal_duality_check, transpose_exact,
};
use mellip_core::rng::SplitMix64;
use mellip_core::scalar::unit_phase;
use mellip_core::sobolev::{apriori_probe, compactness_probe, SobolevSpec};
use mellip_core::symbols::{
    class_report, m_ellipticity, quotient_symbol, random_trig_symbol, ClassVariants, SymbolGrid,
    Verdict,
};
use mellip_core::weights::{validate_weight, WeightFunction};
use mellip_core::C64;

fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn standard_weight(n: usize, m: f64) -> WeightFunction<f64> {
    WeightFunction::standard(n, m).unwrap()
}

/// The running M-elliptic example `Lambda_1(k) + e^{2 pi i x_1} / 2`.
fn running_elliptic(boxx: LatticeBox, w: &WeightFunction<f64>) -> SymbolGrid<f64> {
    let lam = SymbolGrid::lambda_power(boxx, w, 1.0).unwrap();
    let mode = SymbolGrid::sample(boxx, w, 0.0, 1.0, "expi(1)", |_, x| unit_phase(x[0])).unwrap();
    lam.add(&mode.scale(cr(0.5)))
        .unwrap()
        .with_order(1.0)
        .with_label("Lambda + expi(1)/2")
}

#[test]
fn criterion_01_exact_calculus_oracle_agreement() {
    let mut worst = 0.0f64;
    for (n, k, count) in [(1usize, 16i64, 10usize), (2, 6, 10)] {
        let boxx = LatticeBox::new(n, k).unwrap();
        let w = standard_weight(n, 1.0);
        let mut rng = SplitMix64::new(0xACCE_0001);
        let symbols: Vec<_> = (0..count)
            .map(|_| random_trig_symbol(boxx, &w, &mut rng, 3).unwrap())
            .collect();
        for i in 0..count {
            let s = &symbols[i];
            let t = &symbols[(i + 1) % count];

            let comp = compose_exact(s, t).unwrap();
            let err = materialize(&comp)
                .kernel()
                .max_abs_diff(&materialize(s).kernel().mul(materialize(t).kernel()));
            worst = worst.max(err);

            let adj = adjoint_exact(s).unwrap();
            let err = materialize(&adj)
                .kernel()
                .max_abs_diff(&materialize(s).kernel().conj_transpose());
            worst = worst.max(err);

            let tr = transpose_exact(s).unwrap();
            let err =
                materialize(&tr).kernel().max_abs_diff(&materialize(s).kernel().transpose());
            worst = worst.max(err);
        }
    }
    assert!(worst <= 1e-10, "worst relative max-entry error {worst:.3e}");
    println!("ACCEPTANCE 1 PASS: exact compose/adjoint/transpose vs kernel algebra, max error {worst:.3e} <= 1e-10");
}

#[test]
fn criterion_02_composition_termination() {
    let boxx = LatticeBox::new(1, 16).unwrap();
    let w = standard_weight(1, 1.0);
    let mode = SymbolGrid::sample(boxx, &w, 0.0, 1.0, "expi(1)", |_, x| unit_phase(x[0])).unwrap();
    let a = SymbolGrid::lambda_power(boxx, &w, 1.0).unwrap();
    let res = compose_asymptotic(&mode, &a, 2).unwrap();
    let scale = res.exact.max_abs().max(1.0);
    let err_term = res.remainder(2).max_abs() / scale;
    assert!(err_term <= 1e-10, "termination defect {err_term:.3e}");

    let hand = SymbolGrid::sample(boxx, &w, 1.0, 1.0, "hand", |k, x| {
        cr(w.eval(&[boxx.wrap(k[0] + 1)])) * unit_phase(x[0])
    })
    .unwrap();
    let err_hand = res.exact.max_abs_diff(&hand) / scale;
    assert!(err_hand <= 1e-10, "hand form defect {err_hand:.3e}");
    println!("ACCEPTANCE 2 PASS: N=2 partial sum terminates ({err_term:.3e}) and matches a(k+1)e^(2 pi i x) ({err_hand:.3e}), both <= 1e-10");
}

#[test]
fn criterion_03_asymptotic_remainder_orders() {
    let boxx = LatticeBox::new(1, 32).unwrap();
    let w = standard_weight(1, 1.0);
    let s = running_elliptic(boxx, &w);

    let comp = compose_asymptotic(&s, &s, 3).unwrap();
    let mut lines = Vec::new();
    for n in 1..=3usize {
        let bound = 2.0 - n as f64 + 0.3;
        let fit = comp.slope(n);
        assert!(fit.satisfies(bound), "compose N={n}: slope {:?} !<= {bound}", fit.slope);
        lines.push(format!("compose N={n} slope {:?}", fit.slope.map(|s| (s * 1e3).round() / 1e3)));
    }
    let adj = adjoint_asymptotic(&s, 3).unwrap();
    for n in 1..=3usize {
        let bound = 1.0 - n as f64 + 0.3;
        let fit = adj.slope(n);
        assert!(fit.satisfies(bound), "adjoint N={n}: slope {:?} !<= {bound}", fit.slope);
        lines.push(format!("adjoint N={n} slope {:?}", fit.slope.map(|s| (s * 1e3).round() / 1e3)));
    }
    println!("ACCEPTANCE 3 PASS: remainder slopes within (m1+m2-N)+0.3 / (m-N)+0.3 [{}]", lines.join("; "));
}

#[test]
fn criterion_04_parametrix_depth_three() {
    let boxx = LatticeBox::new(1, 32).unwrap();
    let w = standard_weight(1, 1.0);
    let s = running_elliptic(boxx, &w);
    let px = parametrix(&s, 3, 1.0).unwrap();
    assert!(
        px.left_slope.satisfies(-3.0 + 0.3),
        "left remainder slope {:?} !<= -2.7 (max {:.3e})",
        px.left_slope.slope,
        px.left_slope.max_abs
    );
    let hw = boxx.half_width();
    let tail_norm = px.left_matrix.mode_restricted_norm(|k| LatticeBox::norm_inf(k) >= hw / 2);
    assert!(tail_norm <= 0.1, "tail-restricted remainder norm {tail_norm:.3e} > 0.1");
    println!(
        "ACCEPTANCE 4 PASS: parametrix N=3 remainder slope {:?} <= -2.7, tail norm {tail_norm:.3e} <= 0.1",
        px.left_slope.slope.map(|s| (s * 1e3).round() / 1e3)
    );
}

#[test]
fn criterion_05_toroidal_duality() {
    let mut worst = 0.0f64;
    for (n, k) in [(1usize, 8i64), (2, 4)] {
        let boxx = LatticeBox::new(n, k).unwrap();
        let w = standard_weight(n, 1.0);
        let mut rng = SplitMix64::new(0xACCE_0005);
        for _ in 0..10 {
            let s = random_trig_symbol(boxx, &w, &mut rng, 2).unwrap();
            worst = worst.max(toroidal_duality_check(&s));
        }
    }
    assert!(worst <= 1e-10, "worst duality discrepancy {worst:.3e}");
    println!("ACCEPTANCE 5 PASS: lattice/toroidal duality on 20 random symbols, max discrepancy {worst:.3e} <= 1e-10");
}

#[test]
fn criterion_06_plancherel_and_round_trip() {
    let mut worst_p = 0.0f64;
    let mut worst_rt = 0.0f64;
    for (n, k) in [(1usize, 8i64), (1, 16), (1, 32), (1, 64), (2, 4), (2, 6)] {
        let boxx = LatticeBox::new(n, k).unwrap();
        let mut rng = SplitMix64::new(0xACCE_0006);
        let f = LatticeFunction::<f64>::random(boxx, &mut rng);
        let g = dft(&f);
        let lhs = f.l2_norm_sq();
        worst_p = worst_p.max((lhs - g.l2_norm_sq()).abs() / lhs);
        worst_rt = worst_rt.max(idft(&g).max_abs_diff(&f));
    }
    assert!(worst_p <= 1e-12, "Plancherel defect {worst_p:.3e}");
    assert!(worst_rt <= 1e-12, "round-trip defect {worst_rt:.3e}");
    println!("ACCEPTANCE 6 PASS: Plancherel ({worst_p:.3e}) and dft/idft round trip ({worst_rt:.3e}) <= 1e-12 at all sizes");
}

#[test]
fn criterion_07_weight_validation() {
    let w1 = standard_weight(1, 1.0);
    let r1 = validate_weight(&w1, 256, 2).unwrap();
    assert!(r1.passed, "Lambda_1 failed: {r1:?}");
    assert!(
        r1.sandwich[0].c0 >= 0.70 && r1.sandwich[0].c0 <= 0.71,
        "measured C0 = {}",
        r1.sandwich[0].c0
    );

    let w2 = standard_weight(1, 2.0);
    let r2 = validate_weight(&w2, 256, 2).unwrap();
    assert!(r2.passed, "Lambda_2 failed");

    let wa = WeightFunction::<f64>::anisotropic(vec![1, 2]).unwrap();
    let ra = validate_weight(&wa, 256, 2).unwrap();
    assert!(ra.passed, "anisotropic (1,2) failed");
    println!(
        "ACCEPTANCE 7 PASS: Lambda_1, Lambda_2, anisotropic(1,2) validated on windows 256/512; C0(Lambda_1) = {:.6} in [0.70, 0.71]",
        r1.sandwich[0].c0
    );
}

#[test]
fn criterion_08_class_machinery() {
    let b16 = LatticeBox::new(1, 16).unwrap();
    let b32 = LatticeBox::new(1, 32).unwrap();
    let w = standard_weight(1, 1.0);

    // Lambda_1 in the order-1 Taylor class at rho = 1.
    let l16 = SymbolGrid::lambda_power(b16, &w, 1.0).unwrap();
    let l32 = SymbolGrid::lambda_power(b32, &w, 1.0).unwrap();
    let rep = class_report(&[&l16, &l32], 2, 2, ClassVariants::default()).unwrap();
    assert_eq!(rep.taylor, Verdict::Pass, "Lambda_1 not confirmed in M^1");

    // The product Lambda_1 (2 + expi(1)) stays order 1.
    let prod = |b: LatticeBox| {
        let lam = SymbolGrid::lambda_power(b, &w, 1.0).unwrap();
        let osc =
            SymbolGrid::sample(b, &w, 0.0, 1.0, "2+expi(1)", |_, x| cr(2.0) + unit_phase(x[0]))
                .unwrap();
        lam.mul_pointwise(&osc).unwrap()
    };
    let p16 = prod(b16);
    let p32 = prod(b32);
    assert_eq!(p16.order(), 1.0);
    let rep_prod = class_report(&[&p16, &p32], 2, 2, ClassVariants::default()).unwrap();
    assert_eq!(rep_prod.taylor, Verdict::Pass, "product not confirmed in M^1");

    // At rho = 1/2 the gap N0 = n(1/mu0 - rho) = 1/2: a symbol built at
    // order m - N0 passes the order-m check.
    let rho = 0.5;
    let m = 1.0;
    let gap_symbol = |b: LatticeBox| {
        SymbolGrid::sample(b, &w, m, rho, "Lambda^(m-N0) osc", |k, x| {
            cr(w.eval(k).powf(0.5)) * (cr(1.0) + unit_phase(x[0]) * cr(0.5))
        })
        .unwrap()
    };
    let g16 = gap_symbol(b16);
    let g32 = gap_symbol(b32);
    let rep_gap = class_report(&[&g16, &g32], 2, 2, ClassVariants::default()).unwrap();
    assert!((rep_gap.n0 - 0.5).abs() < 1e-15, "N0 = {}", rep_gap.n0);
    assert_eq!(rep_gap.taylor, Verdict::Pass, "order-gap symbol not confirmed in M^1");

    println!("ACCEPTANCE 8 PASS: Lambda_1, Lambda_1*(2+expi(1)), and Lambda^(m-N0) (N0 = {}) all pass their class checks across K = 16, 32", rep_gap.n0);
}

#[test]
fn criterion_09_sobolev_scale() {
    let w = standard_weight(1, 1.0);

    // Embedding, exact on 100 seeded vectors for (0,1) and (1,2).
    let b16 = LatticeBox::new(1, 16).unwrap();
    let mut rng = SplitMix64::new(0xACCE_0009);
    for (m1, m2) in [(0.0, 1.0), (1.0, 2.0)] {
        let lo = SobolevSpec::new(w.clone(), m1);
        let hi = SobolevSpec::new(w.clone(), m2);
        for _ in 0..100 {
            let u = LatticeFunction::random(b16, &mut rng);
            assert!(lo.norm(&u) <= hi.norm(&u) * (1.0 + 1e-15), "embedding ({m1},{m2})");
        }
    }

    // Isometry round trip.
    let spec = SobolevSpec::new(w.clone(), 1.25);
    let back = SobolevSpec::new(w.clone(), -1.25);
    let mut worst_rt = 0.0f64;
    for _ in 0..20 {
        let u = LatticeFunction::random(b16, &mut rng);
        worst_rt = worst_rt.max(back.apply(&spec.apply(&u)).max_abs_diff(&u));
    }
    assert!(worst_rt <= 1e-12, "round trip {worst_rt:.3e}");

    // A-priori band across box sizes.
    let mut bands = Vec::new();
    for k in [16i64, 32] {
        let boxx = LatticeBox::new(1, k).unwrap();
        let s = running_elliptic(boxx, &w);
        let rep = apriori_probe(&s, 32, 0xACCE, 1.0).unwrap();
        assert!(rep.c_min >= 0.4 && rep.c_max <= 3.0, "K={k}: [{}, {}]", rep.c_min, rep.c_max);
        bands.push((rep.c_min, rep.c_max));
    }

    // Singular values of Lambda(D)^{-1} at K = 64.
    let b64 = LatticeBox::new(1, 64).unwrap();
    let inv = SobolevSpec::new(w.clone(), -1.0);
    let sv = inv.multiplier_singular_values(b64).unwrap();
    let mut expect: Vec<f64> =
        (-64i64..=64).map(|k| 1.0 / w.eval(&[k])).collect();
    expect.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut worst_sv = 0.0f64;
    for (a, e) in sv.iter().zip(&expect) {
        worst_sv = worst_sv.max((a - e).abs());
    }
    assert!(worst_sv <= 1e-12, "singular values deviate by {worst_sv:.3e}");
    assert!((sv[0] - 1.0).abs() <= 1e-12);
    assert!((sv.last().unwrap() - (1.0f64 + 64.0 * 64.0).powf(-0.5)).abs() <= 1e-12);

    println!("ACCEPTANCE 9 PASS: embedding exact, isometry round trip {worst_rt:.3e} <= 1e-12, a-priori bands {bands:?} within [0.4, 3], multiplier singular values exact to {worst_sv:.3e}");
}

#[test]
fn criterion_10_compactness_probes() {
    let boxx = LatticeBox::new(1, 32).unwrap();
    let w = standard_weight(1, 1.0);
    let inv = SobolevSpec::new(w.clone(), -1.0).multiplier_symbol(boxx).unwrap();
    let tails = compactness_probe(&inv).unwrap();
    let mut printed = Vec::new();
    for t in &tails {
        let bound = 1.0 / w.eval(&[t.k1 + 1]);
        assert!(t.norm <= bound + 1e-12, "k1 = {}: {} > {}", t.k1, t.norm, bound);
        printed.push(format!("k1={} norm={:.4e} (bound {:.4e})", t.k1, t.norm, bound));
    }
    assert!(tails[0].norm > tails[1].norm && tails[1].norm > tails[2].norm, "tails not decreasing");

    let one = SymbolGrid::one(boxx, &w, 1.0).unwrap();
    let flat = compactness_probe(&one).unwrap();
    for t in &flat {
        assert!((t.norm - 1.0).abs() <= 1e-12, "negative control decayed at k1 = {}", t.k1);
    }
    println!("ACCEPTANCE 10 PASS: Lambda(D)^-1 tails decrease within their bounds [{}]; identity shows no decay", printed.join(", "));
}

#[test]
fn criterion_11_fredholm_traces_and_index() {
    let b8 = LatticeBox::new(1, 8).unwrap();
    let w = standard_weight(1, 1.0);
    let mut rng = SplitMix64::new(0xACCE_0011);
    let mut worst_trace = 0.0f64;
    for _ in 0..10 {
        let s = random_trig_symbol(b8, &w, &mut rng, 3).unwrap();
        let diff = (trace_via_symbol(&s) - materialize(&s).kernel().trace()).norm();
        worst_trace = worst_trace.max(diff);
    }
    assert!(worst_trace <= 1e-10, "trace identity defect {worst_trace:.3e}");

    let b16 = LatticeBox::new(1, 16).unwrap();
    let one = SymbolGrid::one(b16, &w, 1.0).unwrap();
    let shift = SymbolGrid::sample(b16, &w, 0.0, 1.0, "expi(1)", |_, x| unit_phase(x[0])).unwrap();
    let lam = SymbolGrid::lambda_power(b16, &w, 1.0).unwrap();
    let (quot, _) = quotient_symbol(&running_elliptic(b16, &w), &lam, 1, 1, 1.0).unwrap();

    let mut summaries = Vec::new();
    for (name, sym, depth) in
        [("1", &one, 2usize), ("expi(1)", &shift, 2), ("(Lambda+expi/2)/Lambda", &quot, 3)]
    {
        assert!(m_ellipticity(sym, 1.0).unwrap().elliptic, "{name} not elliptic");
        let rep = index_report(sym, depth, 1.0, 1e-8).unwrap();
        assert_eq!(rep.index_kernels, 0, "{name}: kernel index {}", rep.index_kernels);
        assert!(
            rep.index_traces.norm() <= 1e-8,
            "{name}: trace index {:.3e}",
            rep.index_traces.norm()
        );
        assert!(rep.tau1_decay.passed && rep.tau2_decay.passed, "{name}: remainder decay");
        assert!(rep.consistent);
        summaries.push(format!("{name}: dims ({},{}), |trace index| {:.2e}", rep.dim_null, rep.dim_null_transpose, rep.index_traces.norm()));
    }
    println!("ACCEPTANCE 11 PASS: symbol trace vs matrix trace {worst_trace:.3e} <= 1e-10; index 0 by both routes [{}]", summaries.join("; "));
}
