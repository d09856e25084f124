use std::fs;

use proptest::prelude::*;

use hexcircuit::harness::{
    read_comparison_csv, read_enumeration_csv, run_enumeration_study, run_solver_comparison, verify_against_oracle,
    write_comparison_csv, ComparisonRow, Dashed, ExperimentPlan, ObjectiveKind,
};
use hexcircuit::simulator::read_log;
use hexcircuit::solvers::{Budget, SolverKind};

fn small_plan(dir: &std::path::Path) -> ExperimentPlan {
    ExperimentPlan {
        tubes_per_row: vec![2, 3, 4],
        seeds: vec![1, 2],
        out_dir: dir.to_path_buf(),
        budget: Budget {
            max_simulator_calls: 150,
            ..Budget::default()
        },
        ..ExperimentPlan::default()
    }
}

/// Rows with the wall-time column blanked.
fn untimed(rows: &[ComparisonRow]) -> Vec<ComparisonRow> {
    rows.iter()
        .map(|r| ComparisonRow {
            time_s: Dashed(None),
            ..r.clone()
        })
        .collect()
}

#[test]
fn comparison_reproducible_and_thread_independent() {
    let a_dir = tempfile::tempdir().unwrap();
    let b_dir = tempfile::tempdir().unwrap();
    let a = run_solver_comparison(&small_plan(a_dir.path())).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| run_solver_comparison(&small_plan(b_dir.path()))).unwrap();
    assert_eq!(untimed(&a.rows), untimed(&b.rows));
    let a_csv = read_comparison_csv(a_dir.path().join("comparison.csv")).unwrap();
    assert_eq!(a_csv, a.rows);
}

#[test]
fn small_instances_hit_the_enumerated_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let plan = ExperimentPlan {
        budget: Budget::default(),
        seeds: vec![1],
        ..small_plan(dir.path())
    };
    let table = run_solver_comparison(&plan).unwrap();
    for row in table.rows.iter().filter(|r| r.instance == "4" || r.instance == "6") {
        assert_eq!(row.gap, Some(0.0), "{row:?}");
    }
    let study = run_enumeration_study(&ExperimentPlan {
        out_dir: dir.path().join("enum"),
        ..plan.clone()
    })
    .unwrap();
    let t4 = &study.rows[0];
    let best_q = table
        .rows
        .iter()
        .find(|r| r.instance == "4" && r.objective == "q")
        .unwrap();
    assert_eq!(best_q.best_value.0, Some(t4.solver_optimum_q));
    let best_ratio = table
        .rows
        .iter()
        .find(|r| r.instance == "4" && r.objective == "ratio")
        .unwrap();
    assert_eq!(best_ratio.best_value.0, Some(t4.solver_optimum_ratio));
}

#[test]
fn resume_reproduces_the_interrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut plan = small_plan(dir.path());
    plan.tubes_per_row = vec![4];
    let first = run_solver_comparison(&plan).unwrap();

    // Simulate an interruption: one run lost its report and half its log.
    let runs = dir.path().join("runs");
    let name = "ratio_t8_evo_s2";
    fs::remove_file(runs.join(format!("{name}.json"))).unwrap();
    let log_path = runs.join(format!("{name}.jsonl"));
    let log = fs::read_to_string(&log_path).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    fs::write(&log_path, lines[..lines.len() / 2].join("\n")).unwrap();

    plan.resume = true;
    let second = run_solver_comparison(&plan).unwrap();
    assert_eq!(untimed(&first.rows), untimed(&second.rows));
    let replayed = read_log(&log_path).unwrap();
    assert_eq!(replayed.len(), lines.len());
}

#[test]
fn enumeration_study_tables() {
    let dir = tempfile::tempdir().unwrap();
    let plan = ExperimentPlan {
        tubes_per_row: vec![2, 3, 4],
        out_dir: dir.path().to_path_buf(),
        ..ExperimentPlan::default()
    };
    let study = run_enumeration_study(&plan).unwrap();
    let expected = [(4, 5, 12), (6, 37, 104), (8, 361, 1168)];
    for (row, (t, s, c)) in study.rows.iter().zip(expected) {
        assert_eq!((row.tubes, row.solutions, row.combinations), (t, s, c));
        assert_eq!((row.oracle_solutions, row.oracle_combinations), (s, c));
        assert_eq!(row.published_solutions, Some(s));
        assert!(row.q_min_w <= row.q_mean_w && row.q_mean_w <= row.q_max_w);
        assert!(row.ratio_min <= row.ratio_mean && row.ratio_mean <= row.ratio_max);
        assert!(row.solver_optimum_q <= row.q_max_w);
        assert!(row.note.is_empty());
        for metric in ["q", "ratio"] {
            let bins: Vec<_> = study
                .histograms
                .iter()
                .filter(|b| b.tubes == t && b.metric == metric)
                .collect();
            assert_eq!(bins.len(), 25);
            assert_eq!(bins.iter().map(|b| b.count).sum::<u64>(), c);
        }
        // The optimum equals the best entry of the evaluation log.
        let log = read_log(dir.path().join(format!("logs/enumerate_t{t}.jsonl"))).unwrap();
        assert_eq!(log.len() as u64, c);
        let best = log.iter().map(|r| r.q_w).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, row.q_max_w);
    }
    let back = read_enumeration_csv(dir.path().join("enumeration.csv")).unwrap();
    let mut masked = study.rows.clone();
    for (a, b) in masked.iter_mut().zip(&back) {
        a.wall_seconds = b.wall_seconds;
    }
    assert_eq!(back, masked);
}

#[test]
fn enumeration_study_flags_published_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let plan = ExperimentPlan {
        tubes_per_row: vec![5],
        out_dir: dir.path().to_path_buf(),
        ..ExperimentPlan::default()
    };
    let study = run_enumeration_study(&plan).unwrap();
    assert_eq!(study.rows[0].solutions, 4361);
    assert_eq!(study.rows[0].published_solutions, Some(3965));
    assert!(study.notes[0].contains("3965"));
    let notes = fs::read_to_string(dir.path().join("enumeration_notes.txt")).unwrap();
    assert!(notes.contains("14976"));
}

#[test]
fn enumeration_cap_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let plan = ExperimentPlan {
        tubes_per_row: vec![7],
        out_dir: dir.path().to_path_buf(),
        ..ExperimentPlan::default()
    };
    assert!(matches!(
        run_enumeration_study(&plan),
        Err(hexcircuit::Error::EnumerationCap { tubes: 14, .. })
    ));
    assert!(verify_against_oracle(&plan, 7).is_err());
}

#[test]
fn verify_passes_at_desk_scale() {
    let plan = ExperimentPlan {
        solvers: vec![SolverKind::Direct, SolverKind::Evo],
        objectives: vec![ObjectiveKind::Q],
        ..ExperimentPlan::default()
    };
    let verdicts = verify_against_oracle(&plan, 3).unwrap();
    assert_eq!(verdicts.len(), 1);
    assert!(verdicts[0].pass());
    assert!(verdicts[0].solvers.iter().all(|s| s.gap == Some(0.0)));
}

fn cell() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![Just(None), any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Some)]
}

fn row() -> impl Strategy<Value = ComparisonRow> {
    (
        (
            "[0-9]{1,2}|geomean",
            prop_oneof![Just("q".to_string()), Just("ratio".to_string())],
            prop_oneof![Just("direct".to_string()), Just("evo".to_string()), Just("local".to_string())],
            proptest::option::of(any::<u64>()),
            cell(),
            cell(),
            cell(),
        ),
        (
            proptest::option::of(-1e12f64..1e12),
            proptest::option::of(0.0f64..1e3),
            proptest::option::of(any::<bool>()),
            proptest::option::of(-1e12f64..1e12),
            proptest::option::of(-1.0f64..1.0),
            proptest::option::of(0usize..100),
            "[a-z_]{0,12}",
            "([0-9]{1,2}(->[0-9]{1,2}){0,3}\\|?){0,3}",
        ),
    )
        .prop_map(|((instance, objective, solver, seed, v, t, e), (q, dp, sat, opt, gap, n, term, design))| {
            ComparisonRow {
                instance,
                objective,
                solver,
                seed,
                best_value: Dashed(v),
                time_s: Dashed(t),
                function_evaluations: Dashed(e),
                q_w: q,
                dp_kpa: dp,
                constraint_satisfied: sat,
                optimum: opt,
                gap,
                solved_runs: n,
                termination: term,
                best_design: design,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn comparison_rows_roundtrip(rows in proptest::collection::vec(row(), 1..8)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_comparison_csv(&path, &rows).unwrap();
        prop_assert_eq!(read_comparison_csv(&path).unwrap(), rows);
    }
}
