//! Acceptance suite: one pass/fail line per criterion, each with its pinned
//! tolerance and runtime budget.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use weakval::bounds::{
    factorial_ratio, gamma_half_integer, moment_norm_gaussian, series_error_bound, BoundMode, SeriesBoundInputs,
};
use weakval::composite::{
    approx_composite_with, exact_composite_with, norm_difference, postselected_error, ProbeModel,
};
use weakval::experiment::{run_certify, BasisChoice, ModelKind, SweepPlan};
use weakval::gaussian::{
    gaussian_normalization, momentum_density, momentum_mean, momentum_spread, overlap_pa_qw, position_density,
    position_mean,
};
use weakval::hilbert::random_instance;
use weakval::numeric::log_log_slope;
use weakval::oracle::{
    dense_expm_apply, density_moments, integrate, quad_moment_norm, quad_normalization, quad_overlap, qubit_expm_apply,
    QuadratureRule, QuadratureSpec,
};
use weakval::qubit::{
    exact_state_qubit, overlap_qubit, prob_minus_z, prob_plus_axis, prob_plus_z, qubit_normalization, to_dense,
    BlochAxis, QubitState,
};
use weakval::weakcore::weak_profile;
use weakval::{CouplingConfig, GaussianParams, QubitModel, WeakValue, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn cfg(eps: f64) -> CouplingConfig {
    CouplingConfig::with_epsilon(eps).unwrap()
}

fn g(delta: f64) -> GaussianParams {
    GaussianParams::new(delta).unwrap()
}

const CONVERGENCE_EPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

fn diffs_for<M: ProbeModel>(model: &M, seed: u64) -> Vec<f64> {
    let inst = random_instance(4, seed).unwrap();
    CONVERGENCE_EPS
        .iter()
        .map(|&e| {
            let exact = exact_composite_with(model, &inst.observable, &inst.psi, &cfg(e)).unwrap();
            let approx = approx_composite_with(model, &inst.observable, &inst.psi, &inst.basis, &cfg(e)).unwrap();
            norm_difference(&exact, &approx).unwrap()
        })
        .collect()
}

fn convergence() -> Outcome {
    let mut failures = 0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 0..10 {
        for diffs in [diffs_for(&g(1.0), seed), diffs_for(&QubitModel, seed)] {
            let decreasing = diffs.windows(2).all(|w| w[1] < w[0]);
            let slope = log_log_slope(&CONVERGENCE_EPS, &diffs).unwrap_or(f64::NAN);
            lo = lo.min(slope);
            hi = hi.max(slope);
            if !(decreasing && (0.8..=1.2).contains(&slope)) {
                failures += 1;
            }
        }
    }
    outcome(failures == 0, format!("slope range [{lo:.4}, {hi:.4}] vs [0.8, 1.2], {failures}/20 runs outside"))
}

fn closed_form_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spec = QuadratureSpec::default();
    let (mut g_gap, mut q_gap): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let gp = g(rng.random_range(0.2..3.0));
        let c = cfg(rng.random_range(0.0..1.0));
        let a = rng.random_range(-3.0..3.0);
        let w = WeakValue::from_value(C64::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)), &c);
        let quad = quad_overlap(&gp.eigen_probe(a, &c), &gp.weak_probe(w.value, &c), &gp, &spec).unwrap().value;
        g_gap = g_gap.max((quad - overlap_pa_qw(a, &w, &gp, &c)).norm());
        let n = quad_normalization(w.beta, &gp, &spec).unwrap().value;
        g_gap = g_gap.max((n - gaussian_normalization(w.beta, &gp)).abs());

        let state = qubit_expm_apply(w.scaled(), QubitState::plus_z());
        let n = state.norm_sqr().sqrt().recip();
        let normalized = state.scale(C64::new(n, 0.0));
        let eigen = qubit_expm_apply(C64::new(c.ratio() * a, 0.0), QubitState::plus_z());
        q_gap = q_gap.max((eigen.inner(&normalized) - overlap_qubit(a, &w, &c)).norm());
        q_gap = q_gap.max((n - qubit_normalization(&w)).abs());
        let axis = BlochAxis::new(rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI)).unwrap();
        let p = axis.plus_state().inner(&normalized).norm_sqr();
        q_gap = q_gap.max((p - prob_plus_axis(&w, &axis)).abs());
        q_gap = q_gap.max((normalized.up.norm_sqr() - prob_plus_z(&w)).abs());
        q_gap = q_gap.max((normalized.down.norm_sqr() - prob_minus_z(&w)).abs());
    }
    for seed in 0..20 {
        let inst = random_instance(2 + (seed as usize % 5), seed).unwrap();
        for eps in [1e-3, 0.1, 1.0] {
            let dense = dense_expm_apply(&inst.observable, &cfg(eps), &inst.psi).unwrap();
            let closed = exact_state_qubit(&inst.observable, &inst.psi, &cfg(eps)).unwrap();
            q_gap = q_gap.max(dense.max_abs_diff(&closed));
        }
    }
    outcome(
        g_gap < 1e-7 && q_gap < 1e-10,
        format!("gaussian max gap {g_gap:.2e} (< 1e-7), qubit max gap {q_gap:.2e} (< 1e-10)"),
    )
}

fn readout_shifts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = QuadratureSpec { half_width: 14.0, points: 4096, rule: QuadratureRule::Simpson };
    let mut gap: f64 = 0.0;
    for _ in 0..100 {
        let gp = g(rng.random_range(0.3..3.0));
        let c = CouplingConfig::new(rng.random_range(0.0..0.5), rng.random_range(0.5..2.0)).unwrap();
        let w = WeakValue::from_value(C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)), &c);
        let d = gp.delta();
        let expected_q = -2.0 * d * d * c.ratio() * w.value.im;
        let expected_p = c.epsilon * w.value.re;

        let q = density_moments(|x| position_density(x, &w, &gp), expected_q, d, &spec).unwrap();
        let p =
            density_moments(|x| momentum_density(x, &w, &gp, &c), expected_p, momentum_spread(&gp, &c), &spec).unwrap();
        // position density straight from the wavefunction N e^{iλq} Q(q)
        let lam = w.scaled();
        let n = gaussian_normalization(w.beta, &gp);
        let psi2 = |x: f64| {
            let amp = n * (C64::i() * lam * x).exp() * (-x * x / (4.0 * d * d)).exp() / (2.0 * PI * d * d).powf(0.25);
            amp.norm_sqr()
        };
        let raw = density_moments(psi2, expected_q, d, &spec).unwrap();
        gap = gap
            .max((q.mean - expected_q).abs())
            .max((p.mean - expected_p).abs())
            .max((raw.mean - expected_q).abs())
            .max((position_mean(&w, &gp) - expected_q).abs())
            .max((momentum_mean(&w, &c) - expected_p).abs());
    }
    outcome(gap < 1e-8, format!("max mean error {gap:.2e} (< 1e-8) over 100 weak values"))
}

fn probability_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x_axis = BlochAxis::new(FRAC_PI_2, 0.0).unwrap();
    let (mut sum_gap, mut z_gap, mut x_gap, mut shift_gap): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..10_000 {
        let c = cfg(rng.random_range(0.0..2.0));
        let im = rng.random_range(-3.0..3.0);
        let w = WeakValue::from_value(C64::new(rng.random_range(-10.0..10.0), im), &c);
        sum_gap = sum_gap.max((prob_plus_z(&w) + prob_minus_z(&w) - 1.0).abs());
        let z_axis = BlochAxis::new(0.0, rng.random_range(0.0..2.0 * PI)).unwrap();
        z_gap = z_gap.max((prob_plus_axis(&w, &z_axis) - prob_plus_z(&w)).abs());
        let px = prob_plus_axis(&w, &x_axis);
        x_gap = x_gap.max((px - 0.5 * (1.0 - (2.0 * c.ratio() * im).tanh())).abs());
        let moved = WeakValue::from_value(C64::new(rng.random_range(-10.0..10.0), im), &c);
        shift_gap = shift_gap.max((prob_plus_axis(&moved, &x_axis) - px).abs());
    }
    let pass = sum_gap <= 1e-12 && z_gap <= 1e-12 && x_gap <= 1e-12 && shift_gap <= 1e-14;
    outcome(
        pass,
        format!("sum {sum_gap:.1e}, z-axis {z_gap:.1e}, x-axis {x_gap:.1e} (<= 1e-12); Re A_w invariance {shift_gap:.1e} (<= 1e-14)"),
    )
}

fn certification() -> Outcome {
    let mut failures = Vec::new();
    let mut runs = 0;
    let mut above_reported = 0;
    for xi in [0.5, 0.1, 0.01] {
        for dim in [2, 3, 4] {
            for seed in 0..5 {
                for model in [ModelKind::Gaussian, ModelKind::Qubit] {
                    let plan = SweepPlan::new(model, dim, seed, vec![1e-1]);
                    let report = run_certify(&plan, xi).unwrap();
                    let cert = report.certificate;
                    runs += 1;
                    if cert.achieved_norm_diff.is_nan()
                        || cert.achieved_norm_diff > 2.0 * xi.sqrt() + 2.0 * (xi * (1.0 + xi)).sqrt()
                    {
                        failures.push(format!("{model} dim {dim} seed {seed} xi {xi}"));
                    }
                    if cert.achieved_norm_diff > cert.paper_bound {
                        above_reported += 1;
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{}/{runs} certificates within 2√ξ+2√(ξ(1+ξ)); {above_reported} exceed ξ(6+4ξ) (reported only) {failures:?}", runs - failures.len()),
    )
}

/// `‖f - h‖` for the postselected probe wavefunctions, by quadrature.
fn quad_postselected_error(amps: &[(C64, f64)], weak: (C64, C64), gp: &GaussianParams, c: &CouplingConfig) -> f64 {
    let d = gp.delta();
    let r = c.ratio();
    let (scale, aw) = weak;
    let n = gaussian_normalization(r * aw.im, gp);
    let half = 14.0 * d + d * d * r * aw.im.abs() * 2.0;
    let f = |x: f64| {
        let q = (-x * x / (4.0 * d * d)).exp() / (2.0 * PI * d * d).powf(0.25);
        let exact: C64 = amps.iter().map(|(k, a)| k * C64::new(0.0, r * a * x).exp()).sum();
        let approx = scale * n * (C64::i() * r * aw * x).exp();
        C64::new((q * (exact - approx)).norm_sqr(), 0.0)
    };
    integrate(f, -half, half, 8192, QuadratureRule::Simpson).unwrap().value.re.sqrt()
}

fn series_bound() -> Outcome {
    let gp = g(1.0);
    let mut cases = 0;
    let mut violations = 0;
    let mut agreement: f64 = 0.0;
    let mut min_slack = f64::INFINITY;
    for seed in 0..100 {
        let inst = random_instance(3, seed).unwrap();
        let (a, psi, basis) = (&inst.observable, &inst.psi, &inst.basis);
        let comps = a.components(psi).unwrap();
        for (index, (amp, w)) in weak_profile(a, psi, basis).unwrap().into_iter().enumerate() {
            let w = w.unwrap();
            let phi = &basis.states()[index];
            let projected: Vec<(C64, f64)> = a
                .eigenvectors()
                .iter()
                .zip(&comps)
                .zip(a.eigenvalues())
                .map(|((v, c), &val)| (weakval::hilbert::inner(phi, v).unwrap() * c, val))
                .collect();
            for r in [0.01, 0.1, 0.3] {
                let overlap = amp.norm();
                let ed = r * overlap / a.op_norm();
                let c = cfg(ed / gp.delta());
                let inputs = SeriesBoundInputs::new(a.op_norm(), overlap, a.op_norm(), 0.5, ed).unwrap();
                let wv = WeakValue::from_value(w, &c);
                let bound = overlap * series_error_bound(&inputs, &c, &wv, BoundMode::OperatorNorm).unwrap();
                let exact = exact_composite_with(&gp, a, psi, &c).unwrap();
                let approx = approx_composite_with(&gp, a, psi, basis, &c).unwrap();
                let err = postselected_error(&exact, &approx, index).unwrap();
                let quad = quad_postselected_error(&projected, (amp, w), &gp, &c);
                agreement = agreement.max((err - quad).abs());
                min_slack = min_slack.min(bound - err);
                cases += 1;
                if err > bound {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0 && agreement < 1e-7,
        format!(
            "{violations}/{cases} bound violations, min slack {min_slack:.2e}, quadrature agreement {agreement:.1e}"
        ),
    )
}

fn special_functions() -> Outcome {
    let gamma_gap = (0..=50u64)
        .map(|j| (gamma_half_integer(j).log_value - ln_gamma(j as f64 + 0.5)).exp_m1().abs())
        .fold(0.0, f64::max);
    let mut monotone = true;
    let mut prev = f64::INFINITY;
    for j in 1..=300u64 {
        let l = factorial_ratio(j).unwrap().log_value;
        monotone &= l <= 0.0 && l <= prev;
        prev = l;
    }
    let mut moment_gap: f64 = 0.0;
    for delta in [0.5, 1.0, 2.0] {
        for j in 1..=6u32 {
            let closed = moment_norm_gaussian(j as u64, &g(delta)).unwrap().value();
            let quad = quad_moment_norm(j, &g(delta), &QuadratureSpec::default()).unwrap().value;
            moment_gap = moment_gap.max((closed - quad).abs());
        }
    }
    outcome(
        gamma_gap < 1e-12 && monotone && moment_gap < 1e-7,
        format!(
            "gamma rel {gamma_gap:.1e} (< 1e-12), ratio monotone {monotone}, moment norms {moment_gap:.1e} (< 1e-7)"
        ),
    )
}

fn normalization_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = 0;
    for i in 0..10_000 {
        let c = cfg(rng.random_range(1e-3..1.0));
        let gp = g(rng.random_range(0.1..5.0));
        let im =
            if i % 10 == 0 { 0.0 } else { rng.random_range(1e-3..5.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 } };
        let w = WeakValue::from_value(C64::new(rng.random_range(-5.0..5.0), im), &c);
        for n in [gaussian_normalization(w.beta, &gp), qubit_normalization(&w)] {
            let equal = (1.0 - n).abs() <= 1e-14;
            if n > 1.0 || equal != (im == 0.0) {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{bad} of 20000 normalizations break N <= 1 with equality iff Im A_w = 0"))
}

fn eigenbasis_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    for dim in [2, 3, 4] {
        for seed in 0..5 {
            let inst = random_instance(dim, seed).unwrap();
            let basis = inst.observable.eigenbasis();
            for eps in [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
                let c = cfg(eps);
                let gp = g(1.0);
                let ge = exact_composite_with(&gp, &inst.observable, &inst.psi, &c).unwrap();
                let ga = approx_composite_with(&gp, &inst.observable, &inst.psi, &basis, &c).unwrap();
                let qe = exact_composite_with(&QubitModel, &inst.observable, &inst.psi, &c).unwrap();
                let qa = approx_composite_with(&QubitModel, &inst.observable, &inst.psi, &basis, &c).unwrap();
                worst = worst
                    .max(norm_difference(&ge, &ga).unwrap())
                    .max(norm_difference(&qe, &qa).unwrap())
                    .max(to_dense(&qe).max_abs_diff(&to_dense(&qa)));
            }
        }
    }
    let plan = {
        let mut p = SweepPlan::new(ModelKind::Gaussian, 4, 1, vec![1e-1]);
        p.basis = BasisChoice::Eigen;
        p
    };
    let cert = run_certify(&plan, 0.1).unwrap().certificate;
    worst = worst.max(cert.achieved_norm_diff);
    outcome(worst < 1e-12, format!("max difference {worst:.1e} (< 1e-12)"))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

#[test]
fn acceptance() {
    let criteria = [
        Criterion { id: 1, name: "convergence", budget: Duration::from_secs(5), run: convergence },
        Criterion { id: 2, name: "closed forms vs oracles", budget: Duration::from_secs(30), run: closed_form_oracles },
        Criterion { id: 3, name: "readout shifts", budget: Duration::from_secs(5), run: readout_shifts },
        Criterion { id: 4, name: "probability algebra", budget: Duration::from_secs(2), run: probability_algebra },
        Criterion { id: 5, name: "certification", budget: Duration::from_secs(60), run: certification },
        Criterion { id: 6, name: "series bound dominance", budget: Duration::from_secs(10), run: series_bound },
        Criterion {
            id: 7,
            name: "special-function identities",
            budget: Duration::from_secs(5),
            run: special_functions,
        },
        Criterion { id: 8, name: "normalization bound", budget: Duration::from_secs(2), run: normalization_bound },
        Criterion { id: 9, name: "eigenbasis exactness", budget: Duration::from_secs(2), run: eigenbasis_exactness },
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr().lock();
    for c in &criteria {
        let start = Instant::now();
        let out = (c.run)();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed < c.budget;
        writeln!(
            err,
            "[{}] {}. {}: {} ({:.2} s, budget {} s)",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            out.detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        )
        .unwrap();
        if !pass {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
