//! Acceptance suite. Each criterion runs once on an eight-thread pool and
//! once on a single-thread pool; the two results must agree byte for byte.
//! One line per criterion is printed and the process fails if any line
//! reads FAIL.

use std::time::{Duration, Instant};

use mala_core::kernel::{acceptance_from_delta, lemma_max_eta, log_transition_density};
use mala_core::mixing::{
    discretize_1d, exact_warmness, lovasz_bound_check, scaling_experiment, FiniteChain, ScalingOptions, ALLOWED_DIMS,
};
use mala_core::stats::normal_interval_mass;
use mala_core::theory::{
    acceptance_tail, decomposition_check, moment_b_eta, moment_delta, moment_grad_diff, moment_grad_norm,
    moment_quadratic_form, moment_quadratic_form_at_qt, proposal_overlap_grid, random_phase_points, MomentOptions,
    MomentReport, NON_POLYNOMIAL_QUADRATURE_ORDER,
};
use mala_core::{
    acceptance_probability, energy_difference, leapfrog, make_anisotropic, make_cosine_perturbed, make_flat,
    make_isotropic, make_quadratic, PhasePoint, StepSizePolicy, TargetDensity,
};
use nalgebra::DMatrix;

const SEED: u64 = 20_260_101;

struct Verdict {
    pass: bool,
    detail: String,
    fingerprint: String,
}

fn catalog() -> Vec<TargetDensity> {
    vec![
        make_isotropic(1, 1.0).unwrap(),
        make_isotropic(3, 0.7).unwrap(),
        make_anisotropic(4, 1.0).unwrap(),
        make_anisotropic(32, 1.0).unwrap(),
        make_quadratic(&[1.0, 0.5, 0.25, 2.0]).unwrap(),
        make_cosine_perturbed(1, 0.8).unwrap(),
        make_cosine_perturbed(3, 0.5).unwrap(),
        make_flat(2),
    ]
}

fn exact_sampler_targets() -> Vec<TargetDensity> {
    catalog().into_iter().filter(|t| t.has_exact_sampler()).collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn step_for(t: &TargetDensity, scale: f64) -> f64 {
    let l = t.profile().l;
    if l > 0.0 {
        scale / l.sqrt()
    } else {
        scale
    }
}

fn leapfrog_map(t: &TargetDensity, z: &[f64], eta: f64) -> Vec<f64> {
    let d = z.len() / 2;
    let y = leapfrog(t, &PhasePoint::new(z[..d].to_vec(), z[d..].to_vec()).unwrap(), eta).unwrap();
    y.q.into_iter().chain(y.p).collect()
}

fn jacobian_det(t: &TargetDensity, x: &PhasePoint, eta: f64) -> f64 {
    let z: Vec<f64> = x.q.iter().chain(&x.p).copied().collect();
    let n = z.len();
    let h = 1e-5;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut up = z.clone();
        let mut dn = z.clone();
        up[j] += h;
        dn[j] -= h;
        let (fu, fd) = (leapfrog_map(t, &up, eta), leapfrog_map(t, &dn, eta));
        for i in 0..n {
            jac[(i, j)] = (fu[i] - fd[i]) / (2.0 * h);
        }
    }
    jac.determinant()
}

fn kernel_identities() -> Verdict {
    let mut worst_rev: f64 = 0.0;
    let mut worst_acc: f64 = 0.0;
    let mut worst_jac: f64 = 0.0;
    let mut failures = 0;
    let mut fp = String::new();
    for (i, t) in catalog().iter().enumerate() {
        let eta = step_for(t, 0.5);
        for x in random_phase_points(t, 100, SEED + i as u64) {
            let y = leapfrog(t, &x, eta).unwrap();
            let back = leapfrog(t, &y.flip_momentum(), eta).unwrap().flip_momentum();
            for (a, b) in back.q.iter().chain(&back.p).zip(x.q.iter().chain(&x.p)) {
                let err = (a - b).abs() / b.abs().max(1.0);
                worst_rev = worst_rev.max(err);
                failures += usize::from(err > 1e-12);
            }
            let direct = acceptance_probability(t, &x, eta).unwrap();
            let via = acceptance_from_delta(energy_difference(t, &x, eta));
            worst_acc = worst_acc.max((direct - via).abs());
            failures += usize::from(!close(direct, via, 1e-12));
            fp.push_str(&format!("{:?}{direct:?}", y));
        }
        if t.dim() <= 3 {
            for x in random_phase_points(t, 20, SEED + 100 + i as u64) {
                let det = jacobian_det(t, &x, eta);
                worst_jac = worst_jac.max((det - 1.0).abs());
                failures += usize::from((det - 1.0).abs() > 1e-5);
            }
        }
    }
    Verdict {
        pass: failures == 0,
        detail: format!(
            "reversibility err {worst_rev:.1e}, acceptance/energy err {worst_acc:.1e}, |det J - 1| {worst_jac:.1e}"
        ),
        fingerprint: fp,
    }
}

fn detailed_balance() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut fp = String::new();
    for (i, t) in catalog().iter().enumerate() {
        let pol = StepSizePolicy::manual(step_for(t, 0.5)).unwrap();
        for ph in random_phase_points(t, 1000, SEED + 200 + i as u64) {
            let x = ph.q;
            let y: Vec<f64> = x.iter().zip(&ph.p).map(|(a, b)| a + pol.eta() * b).collect();
            let fwd = -t.potential(&x) + log_transition_density(t, &x, &y, &pol);
            let rev = -t.potential(&y) + log_transition_density(t, &y, &x, &pol);
            worst = worst.max((rev - fwd).exp_m1().abs());
            fp.push_str(&format!("{fwd:?}{rev:?}"));
        }
    }
    Verdict {
        pass: worst < 1e-10,
        detail: format!("max relative balance residual {worst:.1e} over 1000 pairs per target"),
        fingerprint: fp,
    }
}

fn decomposition() -> Verdict {
    let mut worst_poly: f64 = 0.0;
    let mut worst_cos: f64 = 0.0;
    let mut fp = String::new();
    let targets = [
        make_quadratic(&[1.0]).unwrap(),
        make_quadratic(&[1.0, 0.5, 0.25, 2.0]).unwrap(),
        make_anisotropic(8, 1.0).unwrap(),
        make_cosine_perturbed(1, 0.8).unwrap(),
        make_cosine_perturbed(3, 0.5).unwrap(),
    ];
    for (i, t) in targets.iter().enumerate() {
        let poly = t.eigenvalues().is_some();
        for &eta in &[0.1, 0.3, 0.5] {
            for ph in random_phase_points(t, 100, SEED + 300 + i as u64) {
                let dec = decomposition_check(t, &ph, eta, NON_POLYNOMIAL_QUADRATURE_ORDER).unwrap();
                if poly {
                    worst_poly = worst_poly.max(dec.residual);
                } else {
                    worst_cos = worst_cos.max(dec.residual);
                }
                fp.push_str(&format!("{dec:?}"));
            }
        }
    }
    Verdict {
        pass: worst_poly <= 1e-12 && worst_cos <= 1e-9,
        detail: format!("max residual quadratic {worst_poly:.1e} (tol 1e-12), cosine {worst_cos:.1e} (tol 1e-9)"),
        fingerprint: fp,
    }
}

fn summarize(reports: &[MomentReport]) -> (bool, String, String) {
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} {} l={}", r.lemma.name(), r.target, r.ell))
        .collect();
    let tightest = reports
        .iter()
        .filter(|r| r.bound > 0.0)
        .map(|r| r.estimate / r.bound)
        .fold(0.0, f64::max);
    let detail = if failed.is_empty() {
        format!("{} of {} one-sided tests pass, largest estimate/bound {tightest:.4}", reports.len(), reports.len())
    } else {
        format!("{} of {} fail: {}", failed.len(), reports.len(), failed.join(", "))
    };
    (failed.is_empty(), detail, format!("{reports:?}"))
}

fn moment_lemmas() -> Verdict {
    let mut reports = Vec::new();
    for (i, t) in exact_sampler_targets().iter().enumerate() {
        let opts = MomentOptions::new(100_000, SEED + 400 + i as u64);
        let eta = step_for(t, 1.0);
        let off: Vec<f64> = (0..t.dim()).map(|j| 0.7 - 0.3 * j as f64).collect();
        for ell in [1, 2, 4, 8] {
            reports.push(moment_grad_norm(t, ell, &opts).unwrap());
            for x in [vec![0.0; t.dim()], off.clone()] {
                reports.push(moment_quadratic_form(t, &x, ell, &opts).unwrap());
            }
            reports.push(moment_quadratic_form_at_qt(t, 0.5 * eta, ell, &opts).unwrap());
            let (a, b) = moment_grad_diff(t, 0.5 * eta, eta, ell, &opts).unwrap();
            reports.extend([a, b]);
        }
    }
    let (pass, detail, fingerprint) = summarize(&reports);
    Verdict { pass, detail, fingerprint }
}

fn b_eta_delta() -> Verdict {
    let mut reports = Vec::new();
    let targets = [make_quadratic(&[1.0]).unwrap(), make_quadratic(&[1.0, 0.5, 0.25, 2.0]).unwrap()];
    for (i, t) in targets.iter().enumerate() {
        let opts = MomentOptions::new(100_000, SEED + 500 + i as u64);
        for eta in [0.1, 0.2, 0.3] {
            assert!(eta * eta * t.profile().l <= 0.5);
            for ell in [2, 4] {
                reports.push(moment_b_eta(t, eta, ell, NON_POLYNOMIAL_QUADRATURE_ORDER, &opts).unwrap());
                reports.push(moment_delta(t, eta, ell, &opts).unwrap());
            }
        }
    }
    let (pass, detail, fingerprint) = summarize(&reports);
    Verdict { pass, detail, fingerprint }
}

fn tail() -> Verdict {
    let mut fp = String::new();
    let mut failed = Vec::new();
    let mut worst: f64 = f64::INFINITY;
    let mut count = 0;
    for (i, t) in exact_sampler_targets().iter().enumerate() {
        for delta in [0.5, 0.1, 0.05] {
            let r = acceptance_tail(t, delta, 100_000, SEED + 600 + i as u64).unwrap();
            assert_eq!(Some(r.eta), lemma_max_eta(&t.profile(), delta));
            if !r.pass {
                failed.push(format!("{} delta={delta}", r.target));
            }
            worst = worst.min(r.threshold - r.estimate);
            count += 1;
            fp.push_str(&format!("{r:?}"));
        }
    }
    Verdict {
        pass: failed.is_empty(),
        detail: format!(
            "{} of {count} (target, delta) pairs within delta + 3 stderr, smallest margin {worst:.4} {}",
            count - failed.len(),
            failed.join(", ")
        )
        .trim_end()
        .to_string(),
        fingerprint: fp,
    }
}

fn overlap() -> Verdict {
    let cases = [
        (make_quadratic(&[1.0, 4.0]).unwrap(), vec![0.3, -1.2]),
        (make_isotropic(1, 1.0).unwrap(), vec![0.0]),
        (make_anisotropic(4, 2.0).unwrap(), vec![1.0, -0.5, 0.2, 0.0]),
        (make_cosine_perturbed(3, 0.5).unwrap(), vec![0.2, 1.1, -2.0]),
    ];
    let mut fp = String::new();
    let mut held = 0;
    let mut total = 0;
    for (t, x) in &cases {
        let grid = proposal_overlap_grid(t, x, 20, 1.0).unwrap();
        held += grid.iter().filter(|c| c.holds).count();
        total += grid.len();
        fp.push_str(&format!("{grid:?}"));
    }
    Verdict {
        pass: held == total,
        detail: format!("{held} of {total} grid points satisfy the overlap inequality"),
        fingerprint: fp,
    }
}

fn binned_gaussian(k: usize, a: f64, b: f64, sd: f64) -> Vec<f64> {
    let w = (b - a) / k as f64;
    let raw: Vec<f64> = (0..k)
        .map(|i| normal_interval_mass(a + i as f64 * w, a + (i + 1) as f64 * w, 0.0, sd))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|m| m / total).collect()
}

fn lovasz_finite() -> Verdict {
    let mut fp = String::new();
    let mut worst: f64 = f64::INFINITY;
    let mut runs = 0;
    let mut failed = 0;
    let targets = [make_isotropic(1, 1.0).unwrap(), make_cosine_perturbed(1, 0.8).unwrap()];
    for t in &targets {
        for k in [2, 8, 12] {
            let chain: FiniteChain =
                discretize_1d(t, -7.0, 7.0, k, &StepSizePolicy::manual(0.9).unwrap()).unwrap();
            let argmax = (0..k).fold(0, |m, i| if chain.pi()[i] > chain.pi()[m] { i } else { m });
            let mut point = vec![0.0; k];
            point[argmax] = 1.0;
            let mut half: Vec<f64> = chain.pi().iter().enumerate().map(|(i, &p)| if 2 * i < k { p } else { 0.0 }).collect();
            let hm: f64 = half.iter().sum();
            half.iter_mut().for_each(|x| *x /= hm);
            for mu0 in [point, half, binned_gaussian(k, -7.0, 7.0, 0.5)] {
                let m = exact_warmness(&mu0, chain.pi());
                for s in [0.0, 0.01, 0.05, 0.1] {
                    let rep = lovasz_bound_check(&chain, &mu0, m, s, 10_000).unwrap();
                    worst = worst.min(rep.min_slack);
                    runs += 1;
                    failed += usize::from(!rep.pass);
                    fp.push_str(&format!("{:?}{:?}{:?}", rep.phi_s, rep.min_slack, rep.rows.last()));
                }
            }
        }
    }
    Verdict {
        pass: failed == 0,
        detail: format!("{} of {runs} (chain, start, s) runs hold for n <= 10000, min slack {worst:.3e}", runs - failed),
        fingerprint: fp,
    }
}

fn scaling() -> Verdict {
    let opts = ScalingOptions::new(0.2, std::f64::consts::E.powi(2), 20_000, SEED + 900);
    let rep = scaling_experiment(&ALLOWED_DIMS, &opts).unwrap();
    let taus: Vec<String> = rep
        .rows
        .iter()
        .map(|r| format!("d={}:{}", r.dim, r.tau_hat.map_or("-".into(), |t| t.to_string())))
        .collect();
    let pass = rep.slope.is_some_and(|s| s <= 1.35);
    let ci = rep.slope_ci.map_or("none".into(), |(lo, hi)| format!("[{lo:.3}, {hi:.3}]"));
    Verdict {
        pass,
        detail: format!(
            "slope {} (99% CI {ci}, limit 1.35, naive exponent 1.5), tau {}",
            rep.slope.map_or("none".into(), |s| format!("{s:.3}")),
            taus.join(" ")
        ),
        fingerprint: format!("{rep:?}"),
    }
}

fn on_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, Duration); 9] = [
        ("kernel identities", kernel_identities, Duration::from_secs(10)),
        ("detailed balance", detailed_balance, Duration::from_secs(10)),
        ("energy decomposition", decomposition, Duration::from_secs(30)),
        ("moment lemmas", moment_lemmas, Duration::from_secs(300)),
        ("B_eta and Delta moments", b_eta_delta, Duration::from_secs(600)),
        ("acceptance tail", tail, Duration::from_secs(300)),
        ("proposal overlap", overlap, Duration::from_secs(1)),
        ("warm-start bound on finite chains", lovasz_finite, Duration::from_secs(120)),
        ("dimension scaling", scaling, Duration::from_secs(3600)),
    ];
    let mut all_pass = true;
    let mut mismatched = Vec::new();
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let many = on_pool(8, run);
        let elapsed = start.elapsed();
        let one = on_pool(1, run);
        if many.fingerprint != one.fingerprint {
            mismatched.push(i + 1);
        }
        let ok = many.pass && elapsed <= *budget;
        all_pass &= ok;
        println!(
            "criterion {}: {} {name}: {} [{:.1}s of {}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            many.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    let ok = mismatched.is_empty();
    all_pass &= ok;
    println!(
        "criterion 10: {} reproducibility: {}",
        if ok { "PASS" } else { "FAIL" },
        if ok {
            "criteria 1-9 identical across repeated runs on 8-thread and 1-thread pools".to_string()
        } else {
            format!("outputs differ for criteria {mismatched:?}")
        }
    );
    if !all_pass {
        std::process::exit(1);
    }
}
