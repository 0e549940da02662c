use modap::engine::run_parallel_detailed;
use modap::geometry::eps_membership;
use modap::harness::config::ExperimentConfig;
use modap::harness::experiment::{format_metrics, run, run_experiment};
use modap::harness::problem::random_feasible_system;
use modap::{
    generate_model_problem, run_parallel, solve, Clock, DynamicSystemSource, DynamicsSpec, EngineConfig,
    ModelProblemSpec, SolverConfig, Status, Variant,
};

#[test]
fn unordered_reduce_still_converges() {
    let sys = generate_model_problem(&ModelProblemSpec::new(30)).unwrap();
    let mut src = DynamicSystemSource::stationary(sys.clone());
    let cfg = SolverConfig {
        initial_point: Some(vec![-250.0; 30]),
        ..SolverConfig::default()
    };
    let engine = EngineConfig {
        workers: 5,
        ordered_reduce: false,
    };
    let out = run_parallel(&mut src, &cfg, &engine).unwrap();
    assert_eq!(out.status, Status::Converged);
    assert!(eps_membership(&sys, &out.solution, cfg.eps).unwrap());
}

#[test]
fn workers_share_the_moving_system() {
    let sys = generate_model_problem(&ModelProblemSpec::new(12)).unwrap();
    let spec = DynamicsSpec::translation(3.0, 0.01);
    let mut src = DynamicSystemSource::new(sys, spec).unwrap();
    let engine = EngineConfig {
        workers: 4,
        ordered_reduce: true,
    };
    let (out, workers) = run_parallel_detailed(&mut src, &SolverConfig::default(), &engine).unwrap();
    assert_eq!(out.status, Status::Converged);
    // the returned point is feasible for the polytope at its final position
    assert!(eps_membership(src.system(), &out.solution, 1e-7).unwrap());
    assert_eq!(workers.len(), 4);
    assert_eq!(workers.iter().map(|w| w.rows_processed).sum::<usize>(), 26 * out.iterations);
    assert!(workers.iter().all(|w| w.supersteps == out.iterations && w.saw_exit));
}

#[test]
fn wall_clock_translation_runs_in_parallel() {
    let sys = generate_model_problem(&ModelProblemSpec::new(8)).unwrap();
    let spec = DynamicsSpec {
        clock: Clock::WallClock,
        ..DynamicsSpec::translation(0.5, 0.01)
    };
    let mut src = DynamicSystemSource::new(sys, spec).unwrap();
    let engine = EngineConfig {
        workers: 3,
        ordered_reduce: true,
    };
    let out = run_parallel(&mut src, &SolverConfig::default(), &engine).unwrap();
    assert_eq!(out.status, Status::Converged);
    assert!(out.wall_time > 0.0);
    assert!(eps_membership(src.system(), &out.solution, 1e-7).unwrap());
}

#[test]
fn ap_and_modap_agree_on_feasibility() {
    for seed in 0..5 {
        let (sys, witness) = random_feasible_system(8, 30, seed).unwrap();
        assert!(eps_membership(&sys, &witness, 1e-12).unwrap());
        let cfg = SolverConfig {
            variant: Variant::Ap,
            ..SolverConfig::default()
        };
        let out = solve(&mut DynamicSystemSource::stationary(sys.clone()), &cfg).unwrap();
        assert_eq!(out.status, Status::Converged, "seed {seed}");
        assert!(eps_membership(&sys, &out.solution, 1e-7).unwrap());
    }
}

#[test]
fn experiment_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        output_path: dir.path().join("nested/metrics.csv"),
        dynamics: DynamicsSpec::translation(1.0, 0.01),
        ..ExperimentConfig::default()
    };
    let res = run_experiment(&cfg).unwrap();
    let text = std::fs::read_to_string(&res.metrics_path).unwrap();
    assert_eq!(text, format_metrics(&res.outcome, false));
    assert_eq!(format_metrics(&run(&cfg).unwrap(), false), text);
}
