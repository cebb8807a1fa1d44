//! Acceptance criteria. Prints one `ACn PASS|FAIL` line per criterion and
//! exits with a failure status if any criterion fails.
//!
//! Run a subset with `cargo test -p rdld-core --test acceptance -- ac2 ac5`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdld::driver::{experiment_hydrostatics, ExperimentConfig};
use rdld::elliptic::{constant_spectrum, linearization_spectrum, translation_mode, Census, ProfileKind};
use rdld::fwgraph::{
    brute_force_min_tree, invariant_sandwich, min_arborescence, stationary_vector, tree_polynomial_determinant,
    tree_polynomial_enumerated, w_eval, TreeWeights,
};
use rdld::ldp::{j_functional, rate_i, TestField};
use rdld::model::{kmc_run_replica, CylinderRate, LatticeConfig};
use rdld::pde::{hydro_solve, DensityField, DensityPath, HydroOptions};
use rdld::quasipotential::{mam_minimize, trace_connections, v_matrix, MamOptions, VMatrixOptions, ZERO_COST};
use rdld::reaction::{
    bd_polynomials, chafee_infante_params, chafee_infante_triple, concavity_check, pattern_polynomials, triple_table,
    ReactionPolynomials,
};

// Tolerances.
const AC1_SIGMAS: f64 = 3.0;
const AC3_MAX_PRINCIPLE_TOL: f64 = 1e-8;
const AC3_CONTRACTION_SLACK: f64 = 1.05;
const AC4_ZERO_PER_UNIT_TIME: f64 = 1e-5;
const AC4_EQUALITY_REL: f64 = 1e-6;
const AC5_REL: f64 = 1e-6;
const AC6_SPECTRUM_TOL: f64 = 1e-6;
const AC6_ZERO_EIGEN_TOL: f64 = 1e-6;
const AC8_DET_REL: f64 = 1e-10;
const AC9_DELTA: f64 = 0.05;
const AC9_WITHIN: f64 = 0.95;
const AC9_SPLIT_TOL: f64 = 0.1;
const AC10_A: f64 = 1.2;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn model(frak_a: f64, frak_b: f64) -> (CylinderRate, ReactionPolynomials) {
    let rates = chafee_infante_params(frak_a, frak_b, None).unwrap().rates().unwrap();
    let poly = bd_polynomials(&rates).unwrap();
    (rates, poly)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random smooth profile `mean + Σ_k (c_k cos + s_k sin)(2πkθ)`, clamped.
fn random_profile(r: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64) -> DensityField {
    let mean = r.gen_range(0.2..0.8);
    let coeffs: Vec<(f64, f64)> =
        (1..=4).map(|k| (r.gen_range(-0.3..0.3) / k as f64, r.gen_range(-0.3..0.3) / k as f64)).collect();
    DensityField::from_fn(m, |t| {
        let s: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(i, (c, s))| {
                let w = 2.0 * std::f64::consts::PI * (i + 1) as f64 * t;
                c * w.cos() + s * w.sin()
            })
            .sum();
        (mean + s).clamp(lo, hi)
    })
    .unwrap()
}

// ---------------------------------------------------------------- AC1

fn generator(n: usize, rates: &CylinderRate) -> DMatrix<f64> {
    let size = 1 << n;
    let exchange = 0.5 * (n * n) as f64;
    let mut q = DMatrix::zeros(size, size);
    for i in 0..size {
        let cfg = LatticeConfig::from_index(i, n);
        let occ = cfg.occupancy();
        for x in 0..n {
            let c = rates.rate_at(&cfg, x);
            q[(i, cfg.flipped(x).to_index())] += c;
            if occ[x] != occ[(x + 1) % n] {
                q[(i, cfg.exchanged(x).to_index())] += exchange;
            }
        }
        let out: f64 = (0..size).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
        q[(i, i)] = -out;
    }
    q
}

fn ac1() -> Outcome {
    let (n, horizon, runs) = (5, 0.3, 100_000u64);
    let (rates, _) = model(1.0, 2.0);
    ensure(rates.table() == triple_table(17.0, 1.0, 5.0).as_slice(), || "rates are not (17, 1, 5)".into())?;
    let init = LatticeConfig::parse_bits("10100").unwrap();
    let p = (generator(n, &rates) * horizon).exp();
    let row = p.row(init.to_index());
    let mut counts = vec![0u64; 1 << n];
    for r in 0..runs {
        let snap = kmc_run_replica(&init, &rates, horizon, 2024, r, &[horizon]).map_err(|e| e.to_string())?;
        counts[snap[0].config.to_index()] += 1;
    }
    let mut worst: (f64, usize) = (0.0, 0);
    for (s, &c) in counts.iter().enumerate() {
        let (emp, exact) = (c as f64 / runs as f64, row[s]);
        let sigma = (exact * (1.0 - exact) / runs as f64).sqrt().max(1.0 / runs as f64);
        let z = (emp - exact).abs() / sigma;
        if z > worst.0 {
            worst = (z, s);
        }
    }
    let mass: f64 = row.iter().sum();
    ensure((mass - 1.0).abs() < 1e-10, || format!("exponential row sums to {mass}"))?;
    ensure(worst.0 <= AC1_SIGMAS, || format!("state {} deviates by {:.2}σ", worst.1, worst.0))?;
    Ok(format!("{runs} runs, 32 states, worst deviation {:.2}σ at state {}", worst.0, worst.1))
}

// ---------------------------------------------------------------- AC2

type Q = Ratio<i64>;

fn rat_mul(a: &[Q], b: &[Q]) -> Vec<Q> {
    let mut out = vec![Q::from_integer(0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn trimmed(mut p: Vec<Q>) -> Vec<Q> {
    while p.len() > 1 && p.last() == Some(&Q::from_integer(0)) {
        p.pop();
    }
    p
}

fn rat_second_derivative_at(p: &[Q], x: Q) -> Q {
    p.iter()
        .enumerate()
        .skip(2)
        .map(|(k, c)| c * Q::from_integer((k * (k - 1)) as i64) * rat_pow(x, k - 2))
        .fold(Q::from_integer(0), |a, b| a + b)
}

fn rat_pow(x: Q, k: usize) -> Q {
    (0..k).fold(Q::from_integer(1), |acc, _| acc * x)
}

fn random_ratio(r: &mut ChaCha8Rng, num: std::ops::Range<i64>) -> Q {
    Q::new(r.gen_range(num), r.gen_range(1..12))
}

fn ac2() -> Outcome {
    let mut r = rng(2);
    let zero = Q::from_integer(0);
    let one = Q::from_integer(1);
    let two = Q::from_integer(2);
    let mut agree = 0;
    let mut criterion_true = 0;
    for case in 0..20 {
        let fa = random_ratio(&mut r, 1..40);
        let fb = fa + random_ratio(&mut r, 0..40);
        // Optionally raise a2 above its floor; a0 follows.
        let (mut a0, a1, mut a2) = chafee_infante_triple(fa, fb);
        if case % 2 == 1 {
            let extra = random_ratio(&mut r, 1..30);
            a2 += extra;
            a0 += two * extra;
        }
        let (b, d) = pattern_polynomials(1, &triple_table(a0, a1, a2));
        let f: Vec<Q> = (0..b.len().max(d.len()))
            .map(|k| b.get(k).copied().unwrap_or(zero) - d.get(k).copied().unwrap_or(zero))
            .collect();
        let s = vec![-one, two];
        let s3 = rat_mul(&rat_mul(&s, &s), &s);
        let expected: Vec<Q> = (0..4).map(|k| (fb - fa) * s.get(k).copied().unwrap_or(zero) - fb * s3[k]).collect();
        ensure(trimmed(f.clone()) == trimmed(expected.clone()), || {
            format!("(𝔞, 𝔟) = ({fa}, {fb}): F = {f:?}, expected {expected:?}")
        })?;
        // Exact concavity: B'' is affine, so checking both endpoints suffices; D(ρ) = B(1-ρ).
        let concave = |p: &[Q]| rat_second_derivative_at(p, zero) <= zero && rat_second_derivative_at(p, one) <= zero;
        let analytic = concave(&b) && concave(&d);
        let criterion = Q::from_integer(3) * a1 + a0 <= Q::from_integer(4) * a2 && a2 <= a0;
        ensure(analytic == criterion, || format!("exact concavity mismatch for ({a0}, {a1}, {a2})"))?;
        agree += 1;
        criterion_true += criterion as usize;
    }
    // Floating-point check on generic positive triples, where both outcomes occur.
    for _ in 0..500 {
        let (a0, a1, a2) = (r.gen_range(0.1..10.0), r.gen_range(0.1..10.0), r.gen_range(0.1..10.0));
        let rates = CylinderRate::from_triple(a0, a1, a2).map_err(|e| e.to_string())?;
        let c = concavity_check(&bd_polynomials(&rates).map_err(|e| e.to_string())?, Some(&rates));
        let criterion = c.triple_criterion.ok_or("triple not recognized")?;
        ensure(criterion == (c.b_concave && c.d_concave), || format!("concavity mismatch for ({a0}, {a1}, {a2})"))?;
        agree += 1;
        criterion_true += criterion as usize;
    }
    Ok(format!("20 exact F identities; concavity agrees on {agree} cases ({criterion_true} concave)"))
}

// ---------------------------------------------------------------- AC3

fn ac3() -> Outcome {
    let mut r = rng(3);
    let (m, horizon) = (64, 0.2);
    let models = [model(1.0, 2.0).1, model(1.0, 12.0).1];
    let opts =
        HydroOptions { dt: 1e-4, save_every: 20, check_max_principle: true, max_principle_tol: AC3_MAX_PRINCIPLE_TOL };
    let mut worst_ratio: f64 = 0.0;
    let mut worst_order: f64 = 0.0;
    for pair in 0..100 {
        let poly = &models[pair % 2];
        let g1 = random_profile(&mut r, m, 0.0, 1.0);
        let ordered = pair % 4 < 2;
        let g2 = if ordered {
            let bump = r.gen_range(0.0..0.2);
            let centre = r.gen_range(0.0..1.0);
            DensityField::from_fn(m, |t| {
                let d = (t - centre).abs().min(1.0 - (t - centre).abs());
                (g1.values()[(t * m as f64).round() as usize % m] + bump * (-40.0 * d * d).exp()).min(1.0)
            })
            .unwrap()
        } else {
            random_profile(&mut r, m, 0.0, 1.0)
        };
        let p1 = hydro_solve(&g1, horizon, poly, &opts).map_err(|e| format!("pair {pair}: {e}"))?;
        let p2 = hydro_solve(&g2, horizon, poly, &opts).map_err(|e| format!("pair {pair}: {e}"))?;
        let d0 = g1.l2_distance(&g2).unwrap();
        for (k, (a, b)) in p1.slices().iter().zip(p2.slices()).enumerate() {
            for s in [a, b] {
                ensure(s.min() >= -AC3_MAX_PRINCIPLE_TOL && s.max() <= 1.0 + AC3_MAX_PRINCIPLE_TOL, || {
                    format!("pair {pair}: range [{}, {}] at slice {k}", s.min(), s.max())
                })?;
            }
            if ordered {
                let breach = a.values().iter().zip(b.values()).map(|(x, y)| x - y).fold(0.0_f64, f64::max);
                worst_order = worst_order.max(breach);
                ensure(breach <= AC3_MAX_PRINCIPLE_TOL, || {
                    format!("pair {pair}: order lost by {breach:e} at slice {k}")
                })?;
            }
            if d0 > 0.0 {
                let ratio = a.l2_distance(b).unwrap() / (d0 * (poly.lipschitz_f * p1.time(k)).exp());
                worst_ratio = worst_ratio.max(ratio);
                ensure(ratio <= AC3_CONTRACTION_SLACK, || {
                    format!("pair {pair}: contraction ratio {ratio} at slice {k}")
                })?;
            }
        }
    }
    Ok(format!(
        "100 pairs; comparison bounds held, worst order breach {worst_order:.1e}, worst ‖Δρ_t‖/(e^(C_F t)‖Δρ_0‖) = {worst_ratio:.4}"
    ))
}

// ---------------------------------------------------------------- AC4

fn ac4() -> Outcome {
    let mut r = rng(4);
    let (_, poly) = model(1.0, 2.0);
    let (m, horizon) = (32, 0.5);
    let opts = HydroOptions { dt: 1e-4, save_every: 5, ..HydroOptions::default() };
    let mut worst_zero: f64 = 0.0;
    for case in 0..20 {
        let gamma = random_profile(&mut r, m, 0.03, 0.97);
        let path = hydro_solve(&gamma, horizon, &poly, &opts).map_err(|e| e.to_string())?;
        let i = rate_i(&path, &poly).map_err(|e| e.to_string())?.value;
        worst_zero = worst_zero.max(i / horizon);
        ensure(i < AC4_ZERO_PER_UNIT_TIME * horizon, || format!("profile {case}: I = {i:e}"))?;
    }
    // A path off the hydrodynamic flow.
    let path = DensityPath::from_fn(0.5, 100, m, |t, th| {
        let w = 2.0 * std::f64::consts::PI * th;
        0.5 + 0.25 * (w + 3.0 * t).cos() * (1.0 - t) + 0.1 * (2.0 * w).sin() * t
    })
    .map_err(|e| e.to_string())?;
    let eval = rate_i(&path, &poly).map_err(|e| e.to_string())?;
    let h = eval.h.ok_or("no maximizer")?.h;
    let i = eval.value;
    let jh = j_functional(&path, &h, &poly).map_err(|e| e.to_string())?;
    let rel = (jh - i).abs() / i;
    ensure(rel <= AC4_EQUALITY_REL, || format!("J(H) = {jh}, I = {i}, relative gap {rel:e}"))?;
    let n = path.n_intervals();
    let mut worst_gap = f64::INFINITY;
    for trial in 0..200 {
        let g: Vec<Vec<f64>> = if trial % 2 == 0 {
            let (amp, k, phase, om) =
                (r.gen_range(0.1..2.0), r.gen_range(0..4) as f64, r.gen_range(0.0..6.3), r.gen_range(0.0..6.0));
            (0..n)
                .map(|s| {
                    let t = (s as f64 + 0.5) * path.dt();
                    (0..m)
                        .map(|j| amp * (2.0 * std::f64::consts::PI * k * j as f64 / m as f64 + phase + om * t).cos())
                        .collect()
                })
                .collect()
        } else {
            let eps = r.gen_range(0.001..0.5);
            h.values().iter().map(|row| row.iter().map(|x| x + eps * r.gen_range(-1.0..1.0)).collect()).collect()
        };
        let j = j_functional(&path, &TestField::new(path.dt(), g).unwrap(), &poly).map_err(|e| e.to_string())?;
        worst_gap = worst_gap.min(i - j);
        ensure(j <= i * (1.0 + 1e-12), || format!("trial {trial}: J = {j} exceeds I = {i}"))?;
    }
    Ok(format!(
        "max I/T on hydro paths {worst_zero:.2e}; J(H) vs I relative {rel:.1e}; min I - J over 200 fields {worst_gap:.3e}"
    ))
}

// ---------------------------------------------------------------- AC5

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    let w = 2.0 / ((1.0 - x * x) * dp * dp);
                    return (x, w);
                }
            }
        })
        .collect()
}

fn scalar_lagrangian(rho: f64, w: f64, poly: &ReactionPolynomials) -> f64 {
    let (b, d) = (poly.b(rho), poly.d(rho));
    let h = ((w + (w * w + 4.0 * b * d).sqrt()) / (2.0 * b)).ln();
    w * h - b * (h.exp() - 1.0) - d * ((-h).exp() - 1.0)
}

fn ac5() -> Outcome {
    let mut r = rng(5);
    let (_, poly) = model(1.0, 2.0);
    let nodes = gauss_legendre(20);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let (u, v, t) = (r.gen_range(0.05..0.95), r.gen_range(0.05..0.95), r.gen_range(0.2..2.0));
        let path = DensityPath::from_fn(t, 4000, 16, |s, _| u + (v - u) * s / t).map_err(|e| e.to_string())?;
        let disc = rate_i(&path, &poly).map_err(|e| e.to_string())?.value;
        let panels = 64;
        let w = (v - u) / t;
        let oracle: f64 = (0..panels)
            .flat_map(|p| nodes.iter().map(move |&(x, wt)| (p, x, wt)))
            .map(|(p, x, wt)| {
                let h = t / panels as f64;
                let s = (p as f64 + 0.5 * (x + 1.0)) * h;
                0.5 * h * wt * scalar_lagrangian(u + w * s, w, &poly)
            })
            .sum();
        let rel = (disc - oracle).abs() / oracle;
        worst = worst.max(rel);
        ensure(rel <= AC5_REL, || {
            format!("case {case} (u, v, T) = ({u:.3}, {v:.3}, {t:.3}): {disc} vs {oracle}, rel {rel:e}")
        })?;
    }
    Ok(format!("20 constant paths, worst relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- AC6

fn ac6() -> Outcome {
    let mut details = Vec::new();
    for (a, expected) in [(0.5, 3usize), (5.5, 4)] {
        let (_, poly) = model(1.0, 1.0 + 2.0 * a);
        let census = Census::compute(&poly, 256).map_err(|e| e.to_string())?;
        ensure(census.len() == expected, || format!("a = {a}: {} families, expected {expected}", census.len()))?;
        let half =
            census.profiles.iter().find(|p| p.kind == ProfileKind::UnstableConstant).ok_or("no unstable constant")?;
        ensure((half.field.values()[0] - 0.5).abs() < 1e-12, || "unstable constant is not 1/2".into())?;
        let got = linearization_spectrum(half, &poly, 11);
        let want = constant_spectrum(4.0 * a, 11);
        let err = got.iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        ensure(err <= AC6_SPECTRUM_TOL, || format!("a = {a}: spectrum error {err:e}"))?;
        details.push(format!("a={a}: {} families, spectrum error {err:.1e}", census.len()));
        if a == 5.5 {
            let phi =
                census.profiles.iter().find(|p| p.kind == ProfileKind::Nonconstant && p.periods == 1).ok_or("no φ₁")?;
            let (lambda, cos) = translation_mode(phi, &poly);
            let top = linearization_spectrum(phi, &poly, 1)[0];
            ensure(lambda.abs() < AC6_ZERO_EIGEN_TOL, || format!("φ₁ zero eigenvalue {lambda:e}"))?;
            ensure(cos > 1.0 - 1e-6, || format!("φ₁ kernel vs ∇φ₁: |cos| = {cos}"))?;
            ensure(top > 0.0, || format!("φ₁ top eigenvalue {top}"))?;
            details.push(format!("φ₁: λ₀ = {lambda:.1e}, |cos| = {cos:.9}, top = {top:.3}"));
        }
    }
    Ok(details.join("; "))
}

// ---------------------------------------------------------------- AC7

fn ac7() -> Outcome {
    let (_, poly) = model(1.0, 2.0);
    let census = Census::compute(&poly, 256).map_err(|e| e.to_string())?;
    let kinds: Vec<ProfileKind> = census.profiles.iter().map(|p| p.kind).collect();
    ensure(kinds == [ProfileKind::StableConstant, ProfileKind::UnstableConstant, ProfileKind::StableConstant], || {
        format!("unexpected census {kinds:?}")
    })?;
    let opts = VMatrixOptions::default();
    let mut traced: Vec<(usize, usize)> = trace_connections(&census, &poly, &opts)
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter(|c| c.from != c.to)
        .map(|c| (c.from, c.to))
        .collect();
    traced.sort_unstable();
    traced.dedup();
    ensure(traced == [(1, 0), (1, 2)], || format!("traced connections {traced:?}"))?;
    let mam = MamOptions { t_grid: vec![8.0], ..MamOptions::default() };
    let mut edge_costs = Vec::new();
    for &(i, j) in &traced {
        let res =
            mam_minimize(&census.profiles[i], &census.profiles[j].field, &poly, &mam).map_err(|e| e.to_string())?;
        ensure(res.value < ZERO_COST, || format!("MAM cost {} on traced edge {i}->{j}", res.value))?;
        edge_costs.push(res.value);
    }
    let v = v_matrix(&census, &poly, &opts).map_err(|e| e.to_string())?;
    let mut out_costs = Vec::new();
    for i in census.stable() {
        for j in 0..census.len() {
            if i != j {
                ensure(v.v[i][j] > ZERO_COST, || format!("v({i}->{j}) = {}", v.v[i][j]))?;
                out_costs.push(v.v[i][j]);
            }
        }
    }
    let min_out = out_costs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!(
        "traced {traced:?}; MAM(T=8) on traced edges {:?}; min cost out of stable wells {min_out:.5}",
        edge_costs.iter().map(|c| format!("{c:.1e}")).collect::<Vec<_>>()
    ))
}

// ---------------------------------------------------------------- AC8

fn random_costs(r: &mut ChaCha8Rng, l: usize) -> Vec<Vec<f64>> {
    let style = r.gen_range(0..3);
    (0..l)
        .map(|i| {
            (0..l)
                .map(|j| match (i == j, style) {
                    (true, _) => 0.0,
                    (false, 0) => r.gen_range(0.0..1.0),
                    // Small integers force ties.
                    (false, 1) => r.gen_range(0..4) as f64,
                    // Sparse zero edges, as on heteroclinic connections.
                    _ => {
                        if r.gen_bool(0.3) {
                            0.0
                        } else {
                            r.gen_range(0.0..1.0)
                        }
                    }
                })
                .collect()
        })
        .collect()
}

fn ac8() -> Outcome {
    let mut r = rng(8);
    let mut worst_edmonds: f64 = 0.0;
    let mut worst_det: f64 = 0.0;
    for trial in 0..1000 {
        let l = 2 + trial % 6;
        let v = random_costs(&mut r, l);
        for root in 0..l {
            let fast = min_arborescence(&v, root).map_err(|e| e.to_string())?.weight;
            let slow = brute_force_min_tree(&v, root);
            let err = (fast - slow).abs();
            worst_edmonds = worst_edmonds.max(err);
            ensure(err <= 1e-12 * (1.0 + slow.abs()), || format!("trial {trial} root {root}: {fast} vs {slow}"))?;
        }
        let tw = TreeWeights::compute(&v).map_err(|e| e.to_string())?;
        if let Some((i, j)) = tw.triangle_violation(&v, 1e-12) {
            return Err(format!("trial {trial}: w_{i} > w_{j} + v_{j}{i}"));
        }
        for (i, &w_bar) in tw.normalized.iter().enumerate() {
            let costs: Vec<f64> = v.iter().map(|row| row[i]).collect();
            let w = w_eval(&costs, &tw).map_err(|e| e.to_string())?;
            ensure((w - w_bar).abs() <= 1e-12, || format!("trial {trial}: W(ρ̄_{i}) = {w}, w̄_{i} = {w_bar}"))?;
        }
        let p: Vec<Vec<f64>> =
            (0..l).map(|i| (0..l).map(|j| if i == j { 0.0 } else { r.gen_range(0.01..1.0) }).collect()).collect();
        for i in 0..l {
            let det = tree_polynomial_determinant(&p, i).map_err(|e| e.to_string())?;
            let en = tree_polynomial_enumerated(&p, i).map_err(|e| e.to_string())?;
            let rel = (det - en).abs() / en;
            worst_det = worst_det.max(rel);
            ensure(rel <= AC8_DET_REL, || format!("trial {trial} state {i}: det {det} vs enum {en}"))?;
        }
    }
    Ok(format!(
        "1000 matrices, l = 2..7; worst Edmonds gap {worst_edmonds:.1e}, worst tree-theorem relative gap {worst_det:.1e}"
    ))
}

// ---------------------------------------------------------------- AC9

fn ac9() -> Outcome {
    let cfg = ExperimentConfig::preset("hydrostatics").map_err(|e| e.to_string())?;
    ensure(cfg.n_sweep == [64, 128, 256] && cfg.samples == 10_000 && cfg.delta == AC9_DELTA, || {
        "hydrostatics preset does not match the criterion".into()
    })?;
    let rep = experiment_hydrostatics(&cfg).map_err(|e| e.to_string())?;
    let last = rep.summary.iter().find(|s| s.n == 256).ok_or("no N = 256 summary")?;
    let near: Vec<f64> = rep.summary.iter().map(|s| s.near_unstable).collect();
    let split = last.well_split.first().copied().unwrap_or(f64::NAN);
    let per_n: Vec<String> = rep
        .summary
        .iter()
        .map(|s| format!("N={} within {:.3} median {:.4}", s.n, s.within_stable, s.median_distance_stable))
        .collect();
    let detail = format!(
        "{}; N=256 samples {}, split {:.3}; flip-symmetric {}; near-½ mass over N {:?}",
        per_n.join(", "),
        last.samples,
        split,
        rep.flip_symmetric,
        near.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
    );
    let mut failures = Vec::new();
    if last.samples < 10_000 {
        failures.push("fewer than 10⁴ samples");
    }
    if last.within_stable < AC9_WITHIN {
        failures.push("concentration below 95%");
    }
    if !rep.flip_symmetric {
        failures.push("rates not flip-symmetric");
    }
    if split.is_nan() || (split - 0.5).abs() > AC9_SPLIT_TOL {
        failures.push("well split outside 0.5 ± 0.1");
    }
    if !near.windows(2).all(|w| w[1] < w[0]) {
        failures.push("mass near ½ not decreasing in N");
    }
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", failures.join(", ")))
    }
}

// ---------------------------------------------------------------- AC10

fn ac10() -> Outcome {
    let mut r = rng(10);
    let l = 4;
    let mut min_margin = f64::INFINITY;
    for trial in 0..1000 {
        let q: Vec<Vec<f64>> =
            (0..l).map(|i| (0..l).map(|j| if i == j { 0.0 } else { r.gen_range(0.01..0.25) }).collect()).collect();
        let mut p: Vec<Vec<f64>> = q
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&x| {
                        // Include the extreme ratios 1/a and a.
                        let e = match r.gen_range(0..4) {
                            0 => -1.0,
                            1 => 1.0,
                            _ => r.gen_range(-1.0..1.0),
                        };
                        x * AC10_A.powf(e)
                    })
                    .collect()
            })
            .collect();
        for (i, row) in p.iter_mut().enumerate() {
            row[i] = 0.0;
            row[i] = 1.0 - row.iter().sum::<f64>();
        }
        let nu = stationary_vector(&p).map_err(|e| e.to_string())?;
        let s = invariant_sandwich(&q, &q, AC10_A).map_err(|e| e.to_string())?;
        ensure(s.contains(&nu, 1e-12), || format!("trial {trial}: ν = {nu:?} outside [{:?}, {:?}]", s.lower, s.upper))?;
        for ((v, lo), hi) in nu.iter().zip(&s.lower).zip(&s.upper) {
            min_margin = min_margin.min((v / lo).min(hi / v));
        }
    }
    Ok(format!("1000 chains with a = {AC10_A}; tightest bound ratio {min_margin:.4}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1", "generator law", ac1),
        ("AC2", "birth/death polynomials", ac2),
        ("AC3", "hydrodynamic invariants", ac3),
        ("AC4", "rate functional zero set", ac4),
        ("AC5", "scalar rate oracle", ac5),
        ("AC6", "stationary census", ac6),
        ("AC7", "heteroclinic edges", ac7),
        ("AC8", "arborescences", ac8),
        ("AC9", "hydrostatic concentration", ac9),
        ("AC10", "invariant sandwich", ac10),
    ];
    let filters: Vec<String> =
        std::env::args().skip(1).filter(|a| !a.starts_with('-')).map(|a| a.to_lowercase()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|x| id.to_lowercase() == *x) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("{id} PASS {name} [{secs:.1}s]: {d}"),
            Err(d) => {
                failed += 1;
                println!("{id} FAIL {name} [{secs:.1}s]: {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
