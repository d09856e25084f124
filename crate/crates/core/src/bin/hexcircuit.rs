use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use hexcircuit::circuitry::{decode, encode, CircuitryDesign, CircuitryVector, HexLayout};
use hexcircuit::enumeration::{count_deviation_note, count_oracle, enumerate, EnumOptions, PUBLISHED_COUNTS};
use hexcircuit::harness::{
    run_enumeration_study, run_solver_comparison, verify_against_oracle, write_manifest, ExperimentPlan,
    ObjectiveKind, COMPARISON_FOOTNOTE,
};
use hexcircuit::simulator::{simulate, Evaluator};
use hexcircuit::solvers::{solve, Problem, SolverKind};
use hexcircuit::{Error, Result};

#[derive(Parser)]
#[command(name = "hexcircuit", version, about = "Refrigerant circuitry optimization for fin-tube evaporators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List every feasible circuitry vector, then a CSV stats record.
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tubes: usize,
        /// Also simulate every directed design and write study tables to --out.
        #[arg(long)]
        study: bool,
    },
    /// Rate one design and print the result as JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tubes: usize,
        /// `t=<n>;bits=<0/1...>` as printed by `enumerate`.
        #[arg(long, conflicts_with = "design")]
        vector: Option<String>,
        /// Circuits as tube paths separated by `|`. With `->`, e.g.
        /// `1->2->7->8|4->3->6->5`, each path runs inlet first; with `-` the
        /// paths are undirected and --orientation picks the flow directions.
        #[arg(long)]
        design: Option<String>,
        /// Bit i reverses circuit i
        #[arg(long, default_value_t = 0)]
        orientation: u64,
        /// Include per-segment detail.
        #[arg(long)]
        segments: bool,
    },
    /// Run one solver on one instance and print its report as JSON.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        tubes: usize,
        /// direct, evo or local
        #[arg(long, value_parser = parse_solver)]
        solver: SolverKind,
        #[arg(long, value_parser = parse_objective, default_value = "q")]
        objective: ObjectiveKind,
    },
    /// Run the solver comparison and write its tables to --out.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
        /// Tube counts; defaults to the plan's instance list.
        #[arg(long, value_delimiter = ',')]
        tubes: Vec<usize>,
        /// Solvers to run, comma-separated
        #[arg(long, value_parser = parse_solver, value_delimiter = ',')]
        solver: Vec<SolverKind>,
        /// q, ratio or both, comma-separated
        #[arg(long, value_parser = parse_objective, value_delimiter = ',')]
        objective: Vec<ObjectiveKind>,
        /// Reuse finished runs and logs in --out.
        #[arg(long)]
        resume: bool,
    },
    /// Check solver results against the enumerated optimum.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        tubes: usize,
        /// Solvers to run, comma-separated
        #[arg(long, value_parser = parse_solver, value_delimiter = ',')]
        solver: Vec<SolverKind>,
        /// q, ratio or both, comma-separated
        #[arg(long, value_parser = parse_objective, value_delimiter = ',')]
        objective: Vec<ObjectiveKind>,
        /// Largest relative gap that passes.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Closed-form solution and combination counts.
    CountOracle {
        /// Tube count; omit to list every even count from 4 to 36.
        #[arg(long)]
        tubes: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Plan and model settings (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Saturation property table (CSV) replacing the embedded one.
    #[arg(long)]
    props: Option<PathBuf>,
    /// Allow enumerating coils above twelve tubes
    #[arg(long)]
    override_enum_cap: bool,
    /// Required heat duty for the ratio objective, W.
    #[arg(long)]
    q_lim: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Simulator calls per run
    #[arg(long)]
    budget_evals: Option<usize>,
    /// Wall-clock limit per run, seconds
    #[arg(long)]
    budget_seconds: Option<f64>,
    /// Comma-separated seeds
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
}

fn parse_solver(s: &str) -> std::result::Result<SolverKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_objective(s: &str) -> std::result::Result<ObjectiveKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn per_row(tubes: usize) -> Result<usize> {
    if tubes < 2 || tubes % 2 != 0 {
        return Err(Error::Config(format!("--tubes must be a positive even count, got {tubes}")));
    }
    Ok(tubes / 2)
}

fn plan(common: &Common, run: Option<&RunArgs>) -> Result<ExperimentPlan> {
    let mut plan = match &common.config {
        Some(p) => ExperimentPlan::from_path(p)?,
        None => ExperimentPlan::default(),
    };
    if let Some(out) = &common.out {
        plan.out_dir = out.clone();
    }
    if common.props.is_some() {
        plan.properties = common.props.clone();
    }
    if common.override_enum_cap {
        plan.study.override_enum_cap = true;
    }
    if let Some(q) = common.q_lim {
        plan.penalty.q_lim = q;
    }
    if let Some(run) = run {
        if let Some(n) = run.budget_evals {
            plan.budget.max_simulator_calls = n;
        }
        if let Some(s) = run.budget_seconds {
            plan.budget.max_wall_seconds = s;
        }
        if !run.seed.is_empty() {
            plan.seeds = run.seed.clone();
            plan.budget.seed = run.seed[0];
        }
    }
    Ok(plan)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse(_) | Error::EnumerationCap { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Enumerate { common, tubes, study } => {
            let mut plan = plan(&common, None)?;
            let n = per_row(tubes)?;
            let layout = HexLayout::two_row(n)?;
            let options = EnumOptions {
                override_cap: plan.study.override_enum_cap,
            };
            let start = Instant::now();
            let (mut solutions, mut combinations) = (0u64, 0u64);
            for x in enumerate(layout, options)? {
                writeln!(out, "{x}")?;
                solutions += 1;
                combinations += decode(&x)?.orientation_count();
            }
            let ms = start.elapsed().as_secs_f64() * 1e3;
            writeln!(out, "tubes,solutions,combinations,wall_ms")?;
            writeln!(out, "{tubes},{solutions},{combinations},{ms:.3}")?;
            out.flush()?;
            if let Some(note) = count_deviation_note(tubes, solutions, combinations) {
                eprintln!("note: {note}");
            }
            if study {
                plan.tubes_per_row = vec![n];
                write_manifest(&plan, "enumerate")?;
                let s = run_enumeration_study(&plan)?;
                eprintln!("wrote study tables to {}", plan.out_dir.display());
                for note in s.notes {
                    eprintln!("note: {note}");
                }
            }
        }
        Command::Simulate {
            common,
            tubes,
            vector,
            design,
            orientation,
            segments,
        } => {
            let mut plan = plan(&common, None)?;
            plan.simulator.record_segments |= segments;
            let instance = plan.instance_for(per_row(tubes)?)?;
            let design = match (vector, design) {
                (Some(v), None) => {
                    let x: CircuitryVector = v.parse()?;
                    if x.layout() != instance.layout {
                        return Err(Error::Config("vector tube count differs from --tubes".into()));
                    }
                    decode(&x)?.orientation(orientation)?
                }
                (None, Some(d)) => {
                    let d = CircuitryDesign::parse(instance.layout, &d)?;
                    if d.is_directed() {
                        d
                    } else {
                        decode(&encode(&d))?.orientation(orientation)?
                    }
                }
                _ => return Err(Error::Config("give --vector or --design".into())),
            };
            let result = simulate(&design, &instance, &plan.simulator, &*plan.property_table()?)?;
            serde_json::to_writer_pretty(&mut out, &result)?;
            writeln!(out)?;
        }
        Command::Solve {
            common,
            run,
            tubes,
            solver,
            objective,
        } => {
            let plan = plan(&common, Some(&run))?;
            let instance = plan.instance_for(per_row(tubes)?)?;
            let mut evaluator = Evaluator::new(instance, plan.simulator.clone(), plan.property_table()?);
            if common.out.is_some() {
                std::fs::create_dir_all(&plan.out_dir)?;
                write_manifest(&plan, "solve")?;
                let log = plan.out_dir.join(format!("{objective}_t{tubes}_{solver}_s{}.jsonl", plan.budget.seed));
                evaluator = evaluator.with_log_sink(BufWriter::new(File::create(log)?));
            }
            let problem = Problem::new(Arc::new(evaluator), objective.objective(&plan.penalty))?;
            let report = solve(solver, &problem, &plan.budget, &plan.solver)?;
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
        Command::Compare {
            common,
            run,
            tubes,
            solver,
            objective,
            resume,
        } => {
            let mut plan = plan(&common, Some(&run))?;
            if !tubes.is_empty() {
                plan.tubes_per_row = tubes.iter().map(|&t| per_row(t)).collect::<Result<_>>()?;
            }
            if !solver.is_empty() {
                plan.solvers = solver;
            }
            if !objective.is_empty() {
                plan.objectives = objective;
            }
            plan.resume |= resume;
            std::fs::create_dir_all(&plan.out_dir)?;
            write_manifest(&plan, "compare")?;
            run_solver_comparison(&plan)?;
            let csv = std::fs::read_to_string(plan.out_dir.join("comparison.csv"))?;
            write!(out, "{csv}")?;
            writeln!(out, "\n{COMPARISON_FOOTNOTE}")?;
        }
        Command::Verify {
            common,
            run,
            tubes,
            solver,
            objective,
            threshold,
        } => {
            let mut plan = plan(&common, Some(&run))?;
            if !solver.is_empty() {
                plan.solvers = solver;
            }
            if !objective.is_empty() {
                plan.objectives = objective;
            }
            if let Some(th) = threshold {
                plan.study.gap_threshold = th;
            }
            let verdicts = verify_against_oracle(&plan, per_row(tubes)?)?;
            let mut all = true;
            for v in &verdicts {
                for s in &v.solvers {
                    let gap = s.gap.map_or("-".to_string(), |g| format!("{:.4}%", 100.0 * g));
                    writeln!(
                        out,
                        "{} t={} objective={} solver={} seed={} optimum={} value={} gap={} calls={}",
                        if s.pass { "PASS" } else { "FAIL" },
                        v.tubes,
                        v.objective,
                        s.solver,
                        s.seed,
                        v.optimum,
                        s.value.map_or("-".to_string(), |x| x.to_string()),
                        gap,
                        s.calls
                    )?;
                }
                all &= v.pass();
            }
            out.flush()?;
            if !all {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::CountOracle { tubes } => {
            let list: Vec<usize> = match tubes {
                Some(t) => vec![t],
                None => (4..=36).step_by(2).collect(),
            };
            writeln!(out, "tubes,solutions,combinations,published_solutions,published_combinations")?;
            for t in list {
                let (s, c) = count_oracle(per_row(t)?)?;
                let published = PUBLISHED_COUNTS.iter().find(|p| p.0 == t);
                writeln!(
                    out,
                    "{t},{s},{c},{},{}",
                    published.map_or(String::new(), |p| p.1.to_string()),
                    published.map_or(String::new(), |p| p.2.to_string())
                )?;
                if let Some(note) = count_deviation_note(t, s as u64, c as u64) {
                    eprintln!("note: {note}");
                }
            }
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}
