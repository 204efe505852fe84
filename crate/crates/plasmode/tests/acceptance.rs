//! Acceptance gate: one test per core numerical contract, each printing a
//! PASS line with the measured values when it holds.

use plasmode::copula::{
    empirical_spearman, sample, solve_intermediate, MarginalSpec, SynthesisParams, SOLVE_TOL,
};
use plasmode::datagen::{CovariateTerm, ExposureModel, ExposureScheme, OutcomeModel};
use plasmode::ergm::{
    change_statistics, mple_fit, sample_many, statistics, ErgmModel, Proposal, Sampler,
    SamplerConfig, TermSpec,
};
use plasmode::estimands::{individual_apo, population_truth, LinearOutcomeOracle};
use plasmode::graph::Graph;
use plasmode::harness::{
    run_study, ScenarioConfig, SchoolTypeConfig, SizeMode, StudyConfig, StudyResults,
};
use plasmode::table::{NodeTable, Role};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[test]
fn c1_effect_truth_constants() {
    let model = OutcomeModel::read_json(data_dir().join("outcome_model.json")).unwrap();
    // Isolate-free populations: cycle graphs, where every node has degree 2.
    let schools: Vec<LinearOutcomeOracle> = [10usize, 7]
        .iter()
        .map(|&n| {
            let edges: Vec<(u32, u32)> = (0..n as u32)
                .map(|i| {
                    let j = (i + 1) % n as u32;
                    (i.min(j), i.max(j))
                })
                .collect();
            let graph = Graph::from_edges(n, &edges).unwrap();
            LinearOutcomeOracle {
                base: vec![0.0; n],
                degrees: (0..n as u32).map(|i| graph.degree(i)).collect(),
                beta_z: model.exposure,
                beta_zn: model.neighborhood,
                beta_zzn: model.interaction,
            }
        })
        .collect();
    let refs: Vec<&dyn plasmode::estimands::PotentialOutcomes> =
        schools.iter().map(|s| s as _).collect();

    let alphas = [0.2, 0.5, 0.8];
    let pairs = [(0.5, 0.2), (0.8, 0.2), (0.8, 0.5)];
    let truth = population_truth(&refs, &alphas, &pairs).unwrap();

    for (i, &alpha) in alphas.iter().enumerate() {
        let analytic = model.exposure + model.interaction * alpha;
        assert!(
            (truth.de[i] - analytic).abs() <= 1e-9,
            "de({alpha}) = {} vs analytic {analytic}",
            truth.de[i]
        );
    }
    for (i, &(a1, a0)) in pairs.iter().enumerate() {
        let analytic = model.neighborhood * (a1 - a0);
        assert!(
            (truth.ie[i] - analytic).abs() <= 1e-9,
            "ie({a1},{a0}) = {} vs analytic {analytic}",
            truth.ie[i]
        );
    }

    // Six-decimal reference constants for this coefficient set.
    let de_ref = [0.305563, 0.282361, 0.259160];
    let ie_ref = [0.123806, 0.247612, 0.123806];
    for i in 0..3 {
        assert!((truth.de[i] - de_ref[i]).abs() <= 1e-6, "de[{i}]={}", truth.de[i]);
        assert!((truth.ie[i] - ie_ref[i]).abs() <= 1e-6, "ie[{i}]={}", truth.ie[i]);
    }
    // Coarser cross-check constants from a larger population of the same
    // design; agreement is expected only to the hundredths.
    let de_coarse = [0.307, 0.284, 0.263];
    let ie_coarse = [0.120, 0.241, 0.120];
    for i in 0..3 {
        assert!((truth.de[i] - de_coarse[i]).abs() <= 0.01);
        assert!((truth.ie[i] - ie_coarse[i]).abs() <= 0.01);
    }
    println!(
        "PASS c1: de = {:.6}/{:.6}/{:.6}, ie = {:.6}/{:.6}/{:.6}",
        truth.de[0], truth.de[1], truth.de[2], truth.ie[0], truth.ie[1], truth.ie[2]
    );
}

#[test]
fn c2_apo_matches_brute_force() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xAB01);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let oracle = LinearOutcomeOracle {
            base: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
            degrees: (0..n).map(|_| rng.random_range(0..=5)).collect(),
            beta_z: rng.random_range(-2.0..2.0),
            beta_zn: rng.random_range(-2.0..2.0),
            beta_zzn: rng.random_range(-2.0..2.0),
        };
        for node in 0..n {
            let d = oracle.degrees[node];
            for &alpha in &[0.2f64, 0.5, 0.8] {
                for z in [0u8, 1] {
                    // Sum over every neighbor-treatment configuration.
                    let mut brute = 0.0;
                    for mask in 0u32..(1 << d) {
                        let s = mask.count_ones() as usize;
                        let p = alpha.powi(s as i32) * (1.0 - alpha).powi((d - s) as i32);
                        brute += p
                            * plasmode::estimands::PotentialOutcomes::outcome(
                                &oracle, node, z, s,
                            );
                    }
                    let apo = individual_apo(&oracle, node, z, alpha).unwrap();
                    worst = worst.max((apo - brute).abs());
                }
            }
        }
    }
    assert!(worst <= 1e-12, "worst APO deviation {worst}");
    println!("PASS c2: worst deviation from 2^d enumeration = {worst:.2e}");
}

#[test]
fn c3_change_statistics_match_differences() {
    let terms = vec![
        TermSpec::Edges,
        TermSpec::NodeFactor { attr: "b".into(), level: "Yes".into() },
        TermSpec::UniformHomophily { attr: "g".into() },
        TermSpec::AbsDiff { attr: "g".into() },
        TermSpec::GwDegree { decay: 0.75 },
        TermSpec::GwEsp { decay: 1.25 },
    ];
    let mut rng = ChaCha12Rng::seed_from_u64(0xAB03);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(4..=8usize);
        let mut table = NodeTable::new(n);
        table
            .push_categorical(
                "b",
                Role::Covariate,
                vec!["No".into(), "Yes".into()],
                (0..n).map(|_| rng.random_range(0..2u32)).collect(),
            )
            .unwrap();
        table
            .push_categorical(
                "g",
                Role::Covariate,
                vec!["7".into(), "8".into(), "9".into()],
                (0..n).map(|_| rng.random_range(0..3u32)).collect(),
            )
            .unwrap();
        let mut graph = Graph::empty(n);
        for i in 0..n as u32 {
            for j in (i + 1)..n as u32 {
                if rng.random::<f64>() < 0.35 {
                    graph.add_edge(i, j);
                }
            }
        }
        for i in 0..n as u32 {
            for j in (i + 1)..n as u32 {
                let mut off = graph.clone();
                if off.has_edge(i, j) {
                    off.remove_edge(i, j);
                }
                let mut on = off.clone();
                on.add_edge(i, j);
                let delta = change_statistics(&off, &table, &terms, i, j).unwrap();
                let g_on = statistics(&on, &table, &terms).unwrap();
                let g_off = statistics(&off, &table, &terms).unwrap();
                for k in 0..terms.len() {
                    worst = worst.max((delta[k] - (g_on[k] - g_off[k])).abs());
                }
            }
        }
    }
    assert!(worst <= 1e-12, "worst change-statistic deviation {worst}");
    println!("PASS c3: worst change-statistic deviation = {worst:.2e}");
}

#[test]
fn c4_sampler_density_and_equilibrium() {
    // (a) Edges-only chain reproduces the closed-form density.
    let model = ErgmModel::new(vec![TermSpec::Edges], vec![-2.0]).unwrap();
    let table = NodeTable::new(100);
    let cfg = SamplerConfig::with_seed(0xAB04);
    let draws = sample_many(&model, &table, 100, &cfg, 200).unwrap();
    let densities: Vec<f64> = draws
        .iter()
        .map(|g| g.n_edges() as f64 / g.n_dyads() as f64)
        .collect();
    let mean_density = mean(&densities);
    assert!(
        (mean_density - 0.1192).abs() <= 0.01,
        "mean density {mean_density} vs 0.1192"
    );

    // (b) At n = 4 the chain's equilibrium matches the exact distribution
    // over all 64 graphs (chi-squared, 63 df, 1% critical value 92.01).
    let dyads = [(0u32, 1u32), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let model4 = ErgmModel::new(
        vec![TermSpec::Edges, TermSpec::GwEsp { decay: 0.8 }],
        vec![-0.3, 0.25],
    )
    .unwrap();
    let table4 = NodeTable::new(4);
    let mut weights = [0.0f64; 64];
    for mask in 0..64usize {
        let edges: Vec<(u32, u32)> = dyads
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &d)| d)
            .collect();
        let g = Graph::from_edges(4, &edges).unwrap();
        weights[mask] = model4.log_weight(&g, &table4).unwrap().exp();
    }
    let z: f64 = weights.iter().sum();

    let mut chi2_by_proposal = Vec::new();
    for proposal in [Proposal::TieNoTie, Proposal::UniformDyad] {
        let mut sampler = Sampler::new(&model4, &table4, 4, proposal, 0xAB05).unwrap();
        sampler.run(5_000).unwrap();
        let n_samples = 20_000usize; // 50-step stride -> 1e6 proposals
        let mut counts = [0u64; 64];
        for _ in 0..n_samples {
            sampler.run(50).unwrap();
            let mut mask = 0usize;
            for (k, &(i, j)) in dyads.iter().enumerate() {
                if sampler.graph().has_edge(i, j) {
                    mask |= 1 << k;
                }
            }
            counts[mask] += 1;
        }
        let chi2: f64 = (0..64)
            .map(|m| {
                let expected = n_samples as f64 * weights[m] / z;
                (counts[m] as f64 - expected).powi(2) / expected
            })
            .sum();
        assert!(chi2 < 92.01, "{proposal:?} chi-squared {chi2} >= 92.01");
        chi2_by_proposal.push(chi2);
    }
    println!(
        "PASS c4: mean density {mean_density:.4} (target 0.1192 +- 0.01); \
         chi2 tie-no-tie {:.1}, uniform-dyad {:.1} (crit 92.01)",
        chi2_by_proposal[0], chi2_by_proposal[1]
    );
}

#[test]
fn c5_mple_recovers_generating_coefficients() {
    let n = 200usize;
    let theta = [-3.0, 1.0];
    let mut table = NodeTable::new(n);
    table
        .push_categorical(
            "b",
            Role::Covariate,
            vec!["No".into(), "Yes".into()],
            (0..n).map(|i| (i % 2) as u32).collect(),
        )
        .unwrap();
    let terms = vec![TermSpec::Edges, TermSpec::UniformHomophily { attr: "b".into() }];

    let mut rng = ChaCha12Rng::seed_from_u64(0xAB06);
    let mut estimates = [Vec::new(), Vec::new()];
    let mut covered = [0usize; 2];
    let reps = 50;
    for _ in 0..reps {
        // Both terms are dyad-local, so independent Bernoulli dyads sample
        // the model exactly.
        let mut g = Graph::empty(n);
        for i in 0..n as u32 {
            for j in (i + 1)..n as u32 {
                let same = (i % 2 == j % 2) as u8 as f64;
                let p = 1.0 / (1.0 + (-(theta[0] + theta[1] * same)).exp());
                if rng.random::<f64>() < p {
                    g.add_edge(i, j);
                }
            }
        }
        let fit = mple_fit(&g, &table, &terms).unwrap();
        for k in 0..2 {
            estimates[k].push(fit.model.theta[k]);
            if (fit.model.theta[k] - theta[k]).abs() <= 3.0 * fit.std_errors[k] {
                covered[k] += 1;
            }
        }
    }
    let means = [mean(&estimates[0]), mean(&estimates[1])];
    for k in 0..2 {
        assert!(
            (means[k] - theta[k]).abs() <= 0.1,
            "coefficient {k}: mean {} vs {}",
            means[k],
            theta[k]
        );
        assert!(
            covered[k] * 10 >= reps * 9,
            "coefficient {k}: only {}/{reps} fits within 3 SE",
            covered[k]
        );
    }
    println!(
        "PASS c5: means {:.3}/{:.3} (targets -3/1), 3-SE coverage {}/{} and {}/{}",
        means[0], means[1], covered[0], reps, covered[1], reps
    );
}

#[test]
fn c6_copula_solver_and_synthesis_fidelity() {
    // (a) Symmetric binary pair: target rank correlation 1/3 has the
    // closed-form latent correlation 1/2.
    let pair = SynthesisParams {
        variables: vec![
            MarginalSpec::new("a", vec!["0".into(), "1".into()], vec![0.5, 0.5]).unwrap(),
            MarginalSpec::new("b", vec!["0".into(), "1".into()], vec![0.5, 0.5]).unwrap(),
        ],
        spearman: vec![vec![1.0, 1.0 / 3.0], vec![1.0 / 3.0, 1.0]],
    };
    let inter = solve_intermediate(&pair, SOLVE_TOL).unwrap();
    let rho = inter.gaussian[(0, 1)];
    assert!((rho - 0.5).abs() <= 0.002, "latent correlation {rho} vs 0.500");

    // (b) Nine-variable synthesis from a shipped correlation target.
    let params =
        SynthesisParams::read_json(data_dir().join("synthesis/school_003.json")).unwrap();
    let inter = solve_intermediate(&params, SOLVE_TOL).unwrap();
    let n = 20_000usize;
    let table = sample(&params, &inter, n, 0xAB07).unwrap();
    let columns: Vec<Vec<f64>> = params
        .variables
        .iter()
        .map(|v| {
            table
                .codes(&v.name)
                .unwrap()
                .iter()
                .map(|&c| c as f64)
                .collect()
        })
        .collect();
    let k = params.variables.len();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..k {
        for j in (i + 1)..k {
            if inter.adjusted_pairs.contains(&(i, j)) {
                continue;
            }
            let got = empirical_spearman(&columns[i], &columns[j]);
            let want = params.spearman[i][j];
            worst = worst.max((got - want).abs());
            checked += 1;
            assert!(
                (got - want).abs() <= 0.03,
                "pair ({i},{j}): sample Spearman {got:.4} vs target {want:.4}"
            );
        }
    }
    println!(
        "PASS c6: latent rho {rho:.4} (target 0.500 +- 0.002); {checked} pairs within \
         0.03 (worst {worst:.4}, {} pairs PD-adjusted)",
        inter.adjusted_pairs.len()
    );
}

/// Shared 100-replicate benchmark study: two mild school types, a binary
/// covariate driving exposure, outcome, and tie formation, and scenarios
/// with and without that covariate visible to the working models.
fn benchmark_study() -> &'static StudyResults {
    static STUDY: OnceLock<StudyResults> = OnceLock::new();
    STUDY.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path();

        ErgmModel::new(
            vec![TermSpec::Edges, TermSpec::UniformHomophily { attr: "H".into() }],
            vec![-2.9, 0.6],
        )
        .unwrap()
        .write_json(base.join("net_a.json"))
        .unwrap();
        ErgmModel::new(
            vec![
                TermSpec::Edges,
                TermSpec::UniformHomophily { attr: "H".into() },
                TermSpec::NodeFactor { attr: "C".into(), level: "hi".into() },
            ],
            vec![-3.1, 0.8, 0.2],
        )
        .unwrap()
        .write_json(base.join("net_b.json"))
        .unwrap();

        let synth = SynthesisParams {
            variables: vec![
                MarginalSpec::new("Z", vec!["No".into(), "Yes".into()], vec![0.5, 0.5])
                    .unwrap(),
                MarginalSpec::new("H", vec!["No".into(), "Yes".into()], vec![0.5, 0.5])
                    .unwrap(),
                MarginalSpec::new(
                    "C",
                    vec!["lo".into(), "mid".into(), "hi".into()],
                    vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
                )
                .unwrap(),
            ],
            spearman: vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.1],
                vec![0.0, 0.1, 1.0],
            ],
        };
        synth.write_json(base.join("synth.json")).unwrap();

        ExposureModel {
            intercept: -0.6,
            covariates: vec![
                CovariateTerm { column: "H".into(), level: Some("Yes".into()), coef: 1.2 },
                CovariateTerm { column: "C".into(), level: Some("hi".into()), coef: 0.3 },
            ],
            school_variance: 0.0,
        }
        .write_json(base.join("exposure.json"))
        .unwrap();

        OutcomeModel {
            intercept: 0.1,
            exposure: 0.321031,
            neighborhood: 0.412686,
            interaction: -0.077339,
            covariates: vec![
                CovariateTerm { column: "H".into(), level: Some("Yes".into()), coef: 0.8 },
                CovariateTerm { column: "C".into(), level: Some("mid".into()), coef: 0.2 },
                CovariateTerm { column: "C".into(), level: Some("hi".into()), coef: -0.3 },
            ],
            residual_variance: 0.5,
            school_variance: 0.0,
        }
        .write_json(base.join("outcome.json"))
        .unwrap();

        let config = StudyConfig {
            master_seed: 0xAB08,
            replicates: 100,
            exposure_scheme: ExposureScheme::Logistic,
            exposure_variable: "Z".into(),
            alpha_grid: vec![0.5],
            ie_pairs: vec![],
            size_mode: SizeMode::Fixed,
            hajek: false,
            max_failure_share: 0.05,
            sampler: SamplerConfig::default(),
            solver_tol: SOLVE_TOL,
            school_types: vec![
                SchoolTypeConfig {
                    name: "a".into(),
                    size: 60,
                    replicas: 6,
                    ergm: "net_a.json".into(),
                    synthesis: "synth.json".into(),
                },
                SchoolTypeConfig {
                    name: "b".into(),
                    size: 60,
                    replicas: 6,
                    ergm: "net_b.json".into(),
                    synthesis: "synth.json".into(),
                },
            ],
            exposure_model: "exposure.json".into(),
            outcome_model: "outcome.json".into(),
            scenarios: vec![
                ScenarioConfig { name: "none".into(), drop: vec![] },
                ScenarioConfig { name: "hidden_h".into(), drop: vec!["H".into()] },
            ],
            output_dir: "out".into(),
        };
        run_study(&config, base).unwrap()
    })
}

fn metric(results: &StudyResults, scenario: &str, method: &str) -> (f64, f64) {
    let row = results
        .metrics
        .iter()
        .find(|m| m.scenario == scenario && m.method == method && m.estimand == "de(0.5)")
        .unwrap();
    (row.bias, row.mse)
}

#[test]
fn c7_estimators_unbiased_when_correctly_specified() {
    let results = benchmark_study();
    assert_eq!(results.manifest.replicates_failed, 0);
    let (bias_ipw, mse_ipw) = metric(results, "none", "ipw");
    let (bias_reg, mse_reg) = metric(results, "none", "reg");
    let (bias_dr, _) = metric(results, "none", "dr");
    assert!(bias_reg.abs() <= 0.02, "reg bias {bias_reg}");
    assert!(bias_dr.abs() <= 0.02, "dr bias {bias_dr}");
    assert!(bias_ipw.abs() <= 0.03, "ipw bias {bias_ipw}");
    assert!(
        mse_reg <= mse_ipw,
        "mse reg {mse_reg} should not exceed mse ipw {mse_ipw}"
    );
    println!(
        "PASS c7: de(0.5) bias ipw {bias_ipw:+.4} reg {bias_reg:+.4} dr {bias_dr:+.4}; \
         mse reg {mse_reg:.5} <= ipw {mse_ipw:.5}"
    );
}

#[test]
fn c8_hidden_homophilous_confounder_biases_reg() {
    let results = benchmark_study();
    // Per-replicate errors of REG for de(0.5) under each scenario.
    let errors = |scenario: &str| -> Vec<f64> {
        results
            .replicates
            .iter()
            .map(|r| {
                let sc = r.estimates.iter().find(|e| e.scenario == scenario).unwrap();
                let m = sc.methods.iter().find(|m| m.method == "reg").unwrap();
                m.de[0] - r.de_truth[0]
            })
            .collect()
    };
    let err_none = errors("none");
    let err_hidden = errors("hidden_h");
    let s = err_none.len() as f64;
    let (bias_none, bias_hidden) = (mean(&err_none), mean(&err_hidden));
    let (se_none, se_hidden) = (sd(&err_none) / s.sqrt(), sd(&err_hidden) / s.sqrt());
    let gap = bias_hidden.abs() - bias_none.abs();
    let two_se = 2.0 * (se_none.powi(2) + se_hidden.powi(2)).sqrt();
    assert!(
        gap > two_se,
        "not separated: |{bias_hidden:.4}| - |{bias_none:.4}| = {gap:.4} <= {two_se:.4}"
    );
    println!(
        "PASS c8: reg de(0.5) bias {bias_none:+.4} (adjusted) vs {bias_hidden:+.4} \
         (hidden confounder); gap {gap:.4} > 2 MC SE {two_se:.4}"
    );
}

#[test]
fn c9_studies_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    ErgmModel::new(vec![TermSpec::Edges], vec![-1.4])
        .unwrap()
        .write_json(base.join("net.json"))
        .unwrap();
    SynthesisParams {
        variables: vec![
            MarginalSpec::new("Z", vec!["No".into(), "Yes".into()], vec![0.5, 0.5]).unwrap(),
            MarginalSpec::new("A", vec!["No".into(), "Yes".into()], vec![0.4, 0.6]).unwrap(),
            MarginalSpec::new("B", vec!["No".into(), "Yes".into()], vec![0.7, 0.3]).unwrap(),
        ],
        spearman: vec![
            vec![1.0, 0.2, 0.0],
            vec![0.2, 1.0, 0.1],
            vec![0.0, 0.1, 1.0],
        ],
    }
    .write_json(base.join("synth.json"))
    .unwrap();
    ExposureModel {
        intercept: -0.4,
        covariates: vec![CovariateTerm {
            column: "A".into(),
            level: Some("Yes".into()),
            coef: 0.4,
        }],
        school_variance: 0.1,
    }
    .write_json(base.join("exposure.json"))
    .unwrap();
    OutcomeModel {
        intercept: 0.0,
        exposure: 0.4,
        neighborhood: 0.3,
        interaction: -0.1,
        covariates: vec![CovariateTerm {
            column: "A".into(),
            level: Some("Yes".into()),
            coef: 0.5,
        }],
        residual_variance: 0.3,
        school_variance: 0.05,
    }
    .write_json(base.join("outcome.json"))
    .unwrap();
    let config = StudyConfig {
        master_seed: 0xAB09,
        replicates: 3,
        exposure_scheme: ExposureScheme::Logistic,
        exposure_variable: "Z".into(),
        alpha_grid: vec![0.3, 0.6],
        ie_pairs: vec![(0.6, 0.3)],
        size_mode: SizeMode::PoissonOnce,
        hajek: true,
        max_failure_share: 0.05,
        sampler: SamplerConfig::default(),
        solver_tol: SOLVE_TOL,
        school_types: vec![SchoolTypeConfig {
            name: "t".into(),
            size: 40,
            replicas: 2,
            ergm: "net.json".into(),
            synthesis: "synth.json".into(),
        }],
        exposure_model: "exposure.json".into(),
        outcome_model: "outcome.json".into(),
        scenarios: vec![ScenarioConfig { name: "none".into(), drop: vec![] }],
        output_dir: "out".into(),
    };
    let a = run_study(&config, base).unwrap();
    let b = run_study(&config, base).unwrap();
    a.write_outputs(base.join("out_a")).unwrap();
    b.write_outputs(base.join("out_b")).unwrap();
    let bytes_a = std::fs::read(base.join("out_a/metrics.csv")).unwrap();
    let bytes_b = std::fs::read(base.join("out_b/metrics.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b, "metrics.csv differs between identical runs");
    println!(
        "PASS c9: identical runs wrote byte-identical metrics.csv ({} bytes)",
        bytes_a.len()
    );
}
