use proptest::prelude::*;

use ulatv::certifier::{eval_f, eval_g, eval_omega, euler_drift, Route, SplitChoice, TvCertifier};
use ulatv::oracle::{gaussian_kl, gaussian_tv, GaussianDist};
use ulatv::potentials::{BuiltinPotential, ClassCertificate};
use ulatv::sampler::{run_chains, ChainEnsemble, MomentAccumulator};
use ulatv::schedule::StepSchedule;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn f_below_g_and_decreasing_in_a(
        lambda in 0.01f64..0.999,
        a in 0.0f64..50.0,
        da in 0.0f64..10.0,
        c in 1e-3f64..1e3,
        gamma in 1e-3f64..1.0,
        w in 0.0f64..1e4,
    ) {
        let f = eval_f(lambda, a, c, gamma, w).unwrap();
        let f_later = eval_f(lambda, a + da, c, gamma, w).unwrap();
        let g = eval_g(lambda, c, gamma, w).unwrap();
        prop_assert!(f <= g * (1.0 + 1e-12));
        prop_assert!(f_later <= f * (1.0 + 1e-12));
    }

    #[test]
    fn omega_increases_with_epsilon(e1 in 1e-6f64..0.99, de in 1e-4f64..0.5, r in 0.01f64..100.0) {
        let e2 = (e1 + de).min(0.999_999);
        let w1: f64 = eval_omega(e1, r).unwrap();
        let w2: f64 = eval_omega(e2, r).unwrap();
        prop_assert!(w1 <= w2);
    }

    #[test]
    fn schedule_sums_split(g1 in 1e-3f64..0.5, alpha in 0.0f64..1.0, n in 1u64..50, m in 0u64..200, extra in 0u64..200) {
        let s = StepSchedule::polynomial(g1, alpha).unwrap();
        let mid = n + m;
        let p = mid + extra;
        let whole = s.partial_sum(n, p);
        let parts = s.partial_sum(n, mid) + s.partial_sum(mid + 1, p);
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1.0));
        prop_assert!(s.power_sum(n, p, 2) <= g1 * whole * (1.0 + 1e-12));
    }

    #[test]
    fn tv_respects_pinsker(
        mean in prop::collection::vec(-5.0f64..5.0, 1..6),
        var_a in 0.05f64..5.0,
        var_b in 0.05f64..5.0,
        equal in any::<bool>(),
    ) {
        let d = mean.len();
        let a = GaussianDist::new(mean.clone(), var_a).unwrap();
        // equal variances or equal means are the two multi-dimensional closed forms
        let b = if equal {
            GaussianDist::new(vec![0.0; d], var_a).unwrap()
        } else {
            GaussianDist::new(mean, var_b).unwrap()
        };
        let tv = gaussian_tv(&a, &b).unwrap();
        let kl = gaussian_kl(&a, &b).unwrap();
        prop_assert!(tv.tv >= 0.0 && tv.tv <= 1.0);
        prop_assert!(tv.tv * tv.tv <= 0.5 * kl + 1e-12);
        let back = gaussian_tv(&b, &a).unwrap();
        prop_assert!((back.tv - tv.tv).abs() <= 1e-10);
    }

    #[test]
    fn moment_merge_matches_single_pass(
        rows in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0, -5.0f64..5.0), 3..60),
        cut1 in 0usize..60,
        cut2 in 0usize..60,
    ) {
        let (i, j) = { let (a, b) = (cut1 % rows.len(), cut2 % rows.len()); (a.min(b), a.max(b)) };
        let mut whole = MomentAccumulator::new(0);
        for &(a, b, c) in &rows { whole.push(a, b, c); }
        let mut parts: Vec<MomentAccumulator> = [&rows[..i], &rows[i..j], &rows[j..]]
            .iter()
            .map(|chunk| {
                let mut m = MomentAccumulator::new(0);
                for &(a, b, c) in chunk.iter() { m.push(a, b, c); }
                m
            })
            .collect();
        // (p0 ⊕ p1) ⊕ p2 against p0 ⊕ (p1 ⊕ p2)
        let mut left = parts[0].clone();
        left.merge(&parts[1]);
        left.merge(&parts[2]);
        let tail = parts.pop().unwrap();
        parts[1].merge(&tail);
        let mut right = parts[0].clone();
        right.merge(&parts[1]);
        for acc in [&left, &right] {
            let (x, y) = (acc.sq_dist(), whole.sq_dist());
            prop_assert!((x.mean - y.mean).abs() <= 1e-10 * y.mean.max(1.0));
            prop_assert!((x.se - y.se).abs() <= 1e-8 * y.se.max(1.0));
            prop_assert!((acc.log_v().0 - whole.log_v().0).abs() <= 1e-10);
            prop_assert!((acc.grad_sq().mean - whole.grad_sq().mean).abs() <= 1e-10 * whole.grad_sq().mean.max(1.0));
        }
    }

    #[test]
    fn certified_bound_is_clamped(x in -20.0f64..20.0, gamma in 0.005f64..0.5, p in 1u64..3000) {
        let u = BuiltinPotential::isotropic_quadratic(1).unwrap();
        let cert = ClassCertificate::StronglyConvexOutsideBall { m: 1.0, m_s: 0.0 };
        let s = StepSchedule::constant(gamma).unwrap();
        let cer = TvCertifier::new(&u, &cert, &Route::StrongConvex, &s, &[x], None, p);
        prop_assume!(cer.is_ok());
        let b = cer.unwrap().bound(p, SplitChoice::Optimize).unwrap();
        prop_assert!(b.total >= 0.0 && b.total <= 2.0);
        prop_assert_eq!(b.clamped, b.raw_total > 2.0);
        prop_assert!(b.n <= p);
    }
}

#[test]
fn single_precision_drift_tracks_double() {
    let u32_ = BuiltinPotential::<f32>::isotropic_quadratic(3).unwrap();
    let u64_ = BuiltinPotential::<f64>::isotropic_quadratic(3).unwrap();
    let c32 = ClassCertificate::<f32>::LogConcave { eta: 1.0, m_eta: 2.0 };
    let c64 = ClassCertificate::<f64>::LogConcave { eta: 1.0, m_eta: 2.0 };
    let a = euler_drift(&u32_, &c32, 0.5f32).unwrap();
    let b = euler_drift(&u64_, &c64, 0.5f64).unwrap();
    assert!((a.log_lambda as f64 - b.log_lambda).abs() < 1e-6);
    assert!((a.log_c as f64 - b.log_c).abs() < 1e-5);
}

#[test]
fn single_precision_bound_tracks_double() {
    let s32 = StepSchedule::<f32>::constant(0.05).unwrap();
    let s64 = StepSchedule::<f64>::constant(0.05).unwrap();
    let u32_ = BuiltinPotential::<f32>::isotropic_quadratic(2).unwrap();
    let u64_ = BuiltinPotential::<f64>::isotropic_quadratic(2).unwrap();
    let c32 = ClassCertificate::<f32>::StronglyConvexOutsideBall { m: 1.0, m_s: 0.0 };
    let c64 = ClassCertificate::<f64>::StronglyConvexOutsideBall { m: 1.0, m_s: 0.0 };
    let b32 = TvCertifier::new(&u32_, &c32, &Route::StrongConvex, &s32, &[2.0, 0.0], None, 500)
        .unwrap()
        .bound(500, SplitChoice::Optimize)
        .unwrap();
    let b64 = TvCertifier::new(&u64_, &c64, &Route::StrongConvex, &s64, &[2.0, 0.0], None, 500)
        .unwrap()
        .bound(500, SplitChoice::Optimize)
        .unwrap();
    assert!((b32.total as f64 - b64.total).abs() < 1e-4 * b64.total.max(1e-3));
}

#[test]
fn single_precision_chains_run() {
    let u = BuiltinPotential::<f32>::isotropic_quadratic(2).unwrap();
    let ens = ChainEnsemble::new(&u, StepSchedule::constant(0.1f32).unwrap(), 4000, vec![3.0f32, 0.0], 5).unwrap();
    let out = run_chains(&ens, 200, &[200], None).unwrap();
    let m: f64 = out.states.iter().map(|s| s[0] as f64).sum::<f64>() / 4000.0;
    // stationary variance 1/(1−γ/2) per coordinate
    let se = (1.0 / 0.95f64 / 4000.0).sqrt();
    assert!(m.abs() < 5.0 * se, "mean {m}");
}

#[test]
fn ensemble_results_do_not_depend_on_thread_count() {
    let u = BuiltinPotential::<f64>::huber(3, 1.0).unwrap();
    let go = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let ens = ChainEnsemble::new(&u, StepSchedule::constant(0.2).unwrap(), 3000, vec![1.0, -2.0, 0.5], 99).unwrap();
            run_chains(&ens, 50, &[10, 50], None).unwrap()
        })
    };
    let (a, b) = (go(1), go(3));
    assert_eq!(a.states, b.states);
    for (x, y) in a.moments.iter().zip(&b.moments) {
        assert_eq!(x.csv_row(), y.csv_row());
    }
}
