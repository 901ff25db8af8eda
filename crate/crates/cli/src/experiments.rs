//! One function per subcommand. Each returns the artifacts to write and
//! tallies its assertions in the main CSV document.

use rayon::prelude::*;

use mala_core::kernel::{run_chain, Init, RunOptions, Stationary};
use mala_core::mixing::{
    discretize_1d, exact_warmness, lovasz_bound_check, s_conductance_exact, scaling_experiment, FiniteChain,
    ScalingOptions, SLOPE_CONFIDENCE,
};
use mala_core::stats::normal_interval_mass;
use mala_core::targets::TargetDensity;
use mala_core::theory::{
    acceptance_tail, acceptance_tail_at, decomposition_check, moment_b_eta, moment_delta, moment_grad_diff,
    moment_grad_norm, moment_quadratic_form, moment_quadratic_form_at_qt, proposal_overlap_grid,
    random_phase_points, MomentOptions, MomentReport, DEFAULT_QUADRATURE_ORDER, NON_POLYNOMIAL_QUADRATURE_ORDER,
};

use crate::config::{section, ChainSpec, Config, LemmaName, StartKind, TrajectoryFormat};
use crate::error::LabError;
use crate::output::{fmt_f, fmt_pass, CsvDoc, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Sample,
    VerifyMoments,
    AcceptanceTail,
    DecompositionCheck,
    ProposalOverlap,
    MixingScan,
    Conductance,
    LovaszCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Sample => "sample",
            Experiment::VerifyMoments => "verify-moments",
            Experiment::AcceptanceTail => "acceptance-tail",
            Experiment::DecompositionCheck => "decomposition-check",
            Experiment::ProposalOverlap => "proposal-overlap",
            Experiment::MixingScan => "mixing-scan",
            Experiment::Conductance => "conductance",
            Experiment::LovaszCheck => "lovasz-check",
        }
    }

    pub fn schema(self) -> Schema {
        match self {
            Experiment::Sample => Schema::Sample,
            Experiment::VerifyMoments
            | Experiment::AcceptanceTail
            | Experiment::DecompositionCheck
            | Experiment::ProposalOverlap => Schema::Theory,
            Experiment::MixingScan => Schema::Mixing,
            Experiment::Conductance => Schema::Conductance,
            Experiment::LovaszCheck => Schema::Lovasz,
        }
    }
}

pub enum Extra {
    /// Comma-separated text; written after the run header.
    Text { name: String, body: String },
    Binary { name: String, bytes: Vec<u8> },
}

pub struct Outcome {
    pub doc: CsvDoc,
    pub extras: Vec<Extra>,
}

pub fn run(exp: Experiment, cfg: &Config, seed: u64) -> Result<Outcome, LabError> {
    match exp {
        Experiment::Sample => sample(cfg, seed),
        Experiment::VerifyMoments => verify_moments(cfg, seed).map(plain),
        Experiment::AcceptanceTail => tail(cfg, seed).map(plain),
        Experiment::DecompositionCheck => decomposition(cfg, seed).map(plain),
        Experiment::ProposalOverlap => overlap(cfg).map(plain),
        Experiment::MixingScan => mixing_scan(cfg, seed).map(plain),
        Experiment::Conductance => conductance(cfg).map(plain),
        Experiment::LovaszCheck => lovasz(cfg).map(plain),
    }
}

fn plain(doc: CsvDoc) -> Outcome {
    Outcome { doc, extras: Vec::new() }
}

fn require_nonempty<T>(v: &[T], what: &str) -> Result<(), LabError> {
    if v.is_empty() {
        Err(LabError::Config(format!("{what} must not be empty")))
    } else {
        Ok(())
    }
}

fn sample(cfg: &Config, seed: u64) -> Result<Outcome, LabError> {
    let target = cfg.target()?;
    let policy = cfg.policy(&target)?;
    let spec = section(&cfg.sample, "sample")?;
    if spec.chains == 0 {
        return Err(LabError::Config("sample.chains must be at least 1".into()));
    }
    let start = match &spec.q0 {
        Some(_) => None,
        None => Some(Stationary::new(&target).map_err(|e| {
            LabError::Config(format!("{e}; give sample.q0 for targets without an exact sampler"))
        })?),
    };
    let runs = (0..spec.chains as u64)
        .into_par_iter()
        .map(|c| {
            let init = match (&spec.q0, &start) {
                (Some(q0), _) => Init::Point(q0.clone()),
                (None, Some(s)) => Init::Sampler(s),
                (None, None) => unreachable!(),
            };
            let opts = RunOptions {
                n_steps: spec.n_steps,
                thinning: spec.thinning,
                lazy: spec.lazy,
                seed,
                chain_id: c,
            };
            run_chain(&target, init, &policy, &opts)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut doc = CsvDoc::new(Schema::Sample);
    let mut extras = Vec::new();
    for (c, traj) in runs.iter().enumerate() {
        let st = traj.stats;
        let name = match spec.format {
            TrajectoryFormat::Csv => {
                let mut body = Vec::new();
                traj.write_csv(&mut body)?;
                let name = format!("trajectory_{c}.csv");
                extras.push(Extra::Text {
                    name: name.clone(),
                    body: String::from_utf8(body).expect("csv output is utf-8"),
                });
                name
            }
            TrajectoryFormat::Binary => {
                let mut bytes = Vec::new();
                traj.write_binary(&mut bytes)?;
                let name = format!("trajectory_{c}.bin");
                extras.push(Extra::Binary { name: name.clone(), bytes });
                name
            }
        };
        doc.tally(st.accepted + st.rejected + st.held == st.iterations);
        doc.push(vec![
            c.to_string(),
            st.iterations.to_string(),
            st.accepted.to_string(),
            st.rejected.to_string(),
            st.held.to_string(),
            fmt_f(st.acceptance_rate()),
            name,
        ]);
    }
    doc.foot("target", target.label());
    doc.foot_f("eta", policy.eta());
    doc.foot_f("h", policy.h());
    Ok(Outcome { doc, extras })
}

fn moment_row(doc: &mut CsvDoc, r: &MomentReport, detail: String) {
    doc.tally(r.pass);
    doc.push(vec![
        r.lemma.name().to_string(),
        r.target.clone(),
        r.ell.to_string(),
        fmt_f(r.estimate),
        fmt_f(r.ci_lo),
        fmt_f(r.ci_hi),
        fmt_f(r.bound),
        fmt_pass(r.pass),
        detail,
    ]);
}

fn quadrature_order(target: &TargetDensity, order: Option<usize>) -> usize {
    order.unwrap_or(if target.eigenvalues().is_some() {
        DEFAULT_QUADRATURE_ORDER
    } else {
        NON_POLYNOMIAL_QUADRATURE_ORDER
    })
}

fn verify_moments(cfg: &Config, seed: u64) -> Result<CsvDoc, LabError> {
    let target = cfg.target()?;
    let spec = section(&cfg.moments, "moments")?;
    require_nonempty(&spec.lemmas, "moments.lemmas")?;
    require_nonempty(&spec.ells, "moments.ells")?;
    let opts = MomentOptions {
        n_samples: spec.n_samples,
        resamples: spec.resamples,
        seed,
    };
    let path_lemma = |l: &LemmaName| {
        matches!(
            l,
            LemmaName::QuadraticFormAtQt | LemmaName::GradDiff | LemmaName::BEta | LemmaName::Delta
        )
    };
    if spec.lemmas.iter().any(path_lemma) {
        require_nonempty(&spec.etas, "moments.etas")?;
    }
    if spec
        .lemmas
        .iter()
        .any(|l| matches!(l, LemmaName::QuadraticFormAtQt | LemmaName::GradDiff))
    {
        require_nonempty(&spec.t_fractions, "moments.t_fractions")?;
        if spec.t_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(LabError::Config("moments.t_fractions must lie in [0, 1]".into()));
        }
    }
    let x = spec.x.clone().unwrap_or_else(|| vec![0.0; target.dim()]);
    let order = quadrature_order(&target, spec.quadrature_order);

    let mut doc = CsvDoc::new(Schema::Theory);
    for lemma in &spec.lemmas {
        match lemma {
            LemmaName::GradNorm => {
                for &ell in &spec.ells {
                    moment_row(&mut doc, &moment_grad_norm(&target, ell, &opts)?, format!("n={}", spec.n_samples));
                }
            }
            LemmaName::QuadraticForm => {
                for &ell in &spec.ells {
                    let r = moment_quadratic_form(&target, &x, ell, &opts)?;
                    moment_row(&mut doc, &r, format!("x={x:?}").replace(',', ";"));
                }
            }
            LemmaName::QuadraticFormAtQt | LemmaName::GradDiff => {
                for &eta in &spec.etas {
                    for &f in &spec.t_fractions {
                        let t = f * eta;
                        for &ell in &spec.ells {
                            let detail = format!("t={t};eta={eta}");
                            if *lemma == LemmaName::GradDiff {
                                let (a, b) = moment_grad_diff(&target, t, eta, ell, &opts)?;
                                moment_row(&mut doc, &a, detail.clone());
                                moment_row(&mut doc, &b, detail);
                            } else {
                                let r = moment_quadratic_form_at_qt(&target, t, ell, &opts)?;
                                moment_row(&mut doc, &r, format!("t={t}"));
                            }
                        }
                    }
                }
            }
            LemmaName::BEta | LemmaName::Delta => {
                for &eta in &spec.etas {
                    for &ell in &spec.ells {
                        let r = if *lemma == LemmaName::BEta {
                            moment_b_eta(&target, eta, ell, order, &opts)?
                        } else {
                            moment_delta(&target, eta, ell, &opts)?
                        };
                        moment_row(&mut doc, &r, format!("eta={eta}"));
                    }
                }
            }
        }
    }
    doc.foot("confidence", mala_core::theory::CONFIDENCE);
    doc.foot("resamples", spec.resamples);
    Ok(doc)
}

fn tail(cfg: &Config, seed: u64) -> Result<CsvDoc, LabError> {
    let target = cfg.target()?;
    let spec = section(&cfg.tail, "tail")?;
    require_nonempty(&spec.deltas, "tail.deltas")?;
    let mut doc = CsvDoc::new(Schema::Theory);
    for &delta in &spec.deltas {
        let r = match spec.eta {
            Some(eta) => acceptance_tail_at(&target, delta, eta, spec.n_samples, seed)?,
            None => acceptance_tail(&target, delta, spec.n_samples, seed)?,
        };
        let half = 2.576 * (r.estimate * (1.0 - r.estimate) / r.n_samples as f64).sqrt();
        doc.tally(r.pass);
        doc.push(vec![
            "acceptance-tail".into(),
            r.target.clone(),
            fmt_f(delta),
            fmt_f(r.estimate),
            fmt_f((r.estimate - half).max(0.0)),
            fmt_f((r.estimate + half).min(1.0)),
            fmt_f(r.threshold),
            fmt_pass(r.pass),
            format!("eta={};n={};exceedances={}", r.eta, r.n_samples, r.exceedances),
        ]);
    }
    Ok(doc)
}

fn decomposition(cfg: &Config, seed: u64) -> Result<CsvDoc, LabError> {
    let target = cfg.target()?;
    let spec = section(&cfg.decomposition, "decomposition")?;
    require_nonempty(&spec.etas, "decomposition.etas")?;
    if spec.n_points == 0 {
        return Err(LabError::Config("decomposition.n_points must be positive".into()));
    }
    let polynomial = target.eigenvalues().is_some() || target.profile().l == 0.0;
    let order = quadrature_order(&target, spec.order);
    let tol = spec.tolerance.unwrap_or(if polynomial { 1e-12 } else { 1e-9 });
    let points = random_phase_points(&target, spec.n_points, seed);
    let mut doc = CsvDoc::new(Schema::Theory);
    for &eta in &spec.etas {
        let residuals = points
            .par_iter()
            .map(|ph| decomposition_check(&target, ph, eta, order).map(|d| d.residual))
            .collect::<Result<Vec<_>, _>>()?;
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        let pass = worst <= tol;
        doc.tally(pass);
        doc.push(vec![
            "decomposition".into(),
            target.label().to_string(),
            fmt_f(eta),
            fmt_f(worst),
            String::new(),
            String::new(),
            fmt_f(tol),
            fmt_pass(pass),
            format!("points={};order={order}", spec.n_points),
        ]);
    }
    Ok(doc)
}

fn overlap(cfg: &Config) -> Result<CsvDoc, LabError> {
    let target = cfg.target()?;
    let spec = section(&cfg.overlap, "overlap")?;
    let x = spec.x.clone().unwrap_or_else(|| vec![0.0; target.dim()]);
    let checks = proposal_overlap_grid(&target, &x, spec.grid, spec.max_ratio)?;
    let mut doc = CsvDoc::new(Schema::Theory);
    for c in &checks {
        doc.tally(c.holds);
        doc.push(vec![
            "proposal-overlap".into(),
            target.label().to_string(),
            fmt_f(c.eta),
            fmt_f(c.tv_exact),
            String::new(),
            String::new(),
            fmt_f(c.tv_bound),
            fmt_pass(c.holds),
            format!("distance={}", c.distance),
        ]);
    }
    Ok(doc)
}

fn mixing_scan(cfg: &Config, seed: u64) -> Result<CsvDoc, LabError> {
    let spec = section(&cfg.mixing, "mixing")?;
    let mut opts = ScalingOptions::new(spec.eps, spec.m_target, spec.replicas, seed);
    opts.l = spec.l;
    opts.n_max = spec.n_max;
    opts.resamples = spec.resamples;
    opts.calibration_delta = spec.calibration_delta;
    let rep = scaling_experiment(&spec.dims, &opts)?;
    let mut doc = CsvDoc::new(Schema::Mixing);
    for r in &rep.rows {
        doc.tally(r.tau_hat.is_some());
        doc.push(vec![
            r.dim.to_string(),
            fmt_f(r.eta),
            r.tau_hat.map_or_else(|| "not-reached".to_string(), |t| t.to_string()),
            fmt_f(r.predicted_n),
            fmt_f(r.predicted_n_naive),
            fmt_f(r.h),
            fmt_f(r.noise_floor),
            fmt_f(r.initial_tv),
            fmt_f(r.acceptance_rate),
        ]);
    }
    match rep.slope {
        Some(s) => doc.foot_f("slope", s),
        None => doc.foot("slope", "none"),
    }
    if let Some((lo, hi)) = rep.slope_ci {
        doc.foot_f("slope_ci_lo", lo);
        doc.foot_f("slope_ci_hi", hi);
        doc.foot("slope_ci_level", SLOPE_CONFIDENCE);
    }
    doc.foot_f("predicted_slope", rep.predicted_slope);
    doc.foot_f("naive_slope", rep.naive_slope);
    doc.foot("reference_exponents", "trace-aware 1; naive 1.5");
    doc.foot_f("c0", rep.c0);
    doc.foot("marginal", "worst coordinate marginal TV");
    if let Some(limit) = spec.max_slope {
        let ok = rep.slope.is_some_and(|s| s <= limit);
        doc.tally(ok);
        doc.foot_f("max_slope", limit);
        doc.foot("slope_check", fmt_pass(ok));
    }
    for w in &rep.warnings {
        doc.foot("warning", w);
    }
    Ok(doc)
}

/// The discretized chain and a start vector with its exact warmness.
fn finite_setup(cfg: &Config) -> Result<(FiniteChain, Vec<f64>, f64, &ChainSpec), LabError> {
    let target = cfg.target()?;
    let policy = cfg.policy(&target)?;
    let spec = section(&cfg.chain, "chain")?;
    let chain = discretize_1d(&target, spec.a, spec.b, spec.k, &policy)?;
    let pi = chain.pi().to_vec();
    let mu0 = match spec.start {
        StartKind::Stationary => pi.clone(),
        StartKind::PointMass => {
            let i = (0..pi.len()).fold(0, |best, i| if pi[i] > pi[best] { i } else { best });
            let mut v = vec![0.0; pi.len()];
            v[i] = 1.0;
            v
        }
        StartKind::Gaussian => {
            let sd = spec
                .start_sd
                .filter(|s| *s > 0.0)
                .ok_or_else(|| LabError::Config("chain.start_sd must be a positive number".into()))?;
            let w = (spec.b - spec.a) / spec.k as f64;
            let raw: Vec<f64> = (0..spec.k)
                .map(|j| {
                    let lo = spec.a + j as f64 * w;
                    normal_interval_mass(lo, lo + w, 0.0, sd)
                })
                .collect();
            let z: f64 = raw.iter().sum();
            raw.iter().map(|m| m / z).collect()
        }
    };
    let m = exact_warmness(&mu0, &pi);
    Ok((chain, mu0, m, spec))
}

fn conductance(cfg: &Config) -> Result<CsvDoc, LabError> {
    let (chain, mu0, m, chain_spec) = finite_setup(cfg)?;
    let spec = section(&cfg.conductance, "conductance")?;
    require_nonempty(&spec.s_values, "conductance.s_values")?;
    let mut doc = CsvDoc::new(Schema::Conductance);
    for &s in &spec.s_values {
        let phi = s_conductance_exact(&chain, s)?;
        let check = lovasz_bound_check(&chain, &mu0, m, s, spec.n_max)?;
        doc.tally(check.pass);
        doc.push(vec![fmt_f(s), fmt_f(phi), fmt_pass(check.pass)]);
    }
    doc.foot("k", chain.k());
    doc.foot("grid", format!("[{}, {}]", chain_spec.a, chain_spec.b));
    doc.foot_f("warmness", m);
    doc.foot("bound_check", format!("warm-start bound for n <= {}", spec.n_max));
    Ok(doc)
}

fn lovasz(cfg: &Config) -> Result<CsvDoc, LabError> {
    let (chain, mu0, m, _) = finite_setup(cfg)?;
    let spec = section(&cfg.lovasz, "lovasz")?;
    let s = match (spec.s, spec.eps) {
        (Some(s), None) => s,
        (None, Some(eps)) => eps / (2.0 * m),
        _ => return Err(LabError::Config("lovasz: give exactly one of s and eps".into())),
    };
    let rep = lovasz_bound_check(&chain, &mu0, m, s, spec.n_max)?;
    let mut doc = CsvDoc::new(Schema::Lovasz);
    for r in &rep.rows {
        let ok = r.slack >= mala_core::mixing::LOVASZ_SLACK;
        doc.tally(ok);
        doc.push(vec![r.n.to_string(), fmt_f(r.tv), fmt_f(r.bound), fmt_f(r.slack), fmt_pass(ok)]);
    }
    doc.foot("k", chain.k());
    doc.foot_f("s", s);
    doc.foot_f("phi_s", rep.phi_s);
    doc.foot_f("warmness", m);
    doc.foot_f("min_slack", rep.min_slack);
    Ok(doc)
}
