//! Command-line surface. All heavy lifting lives in the library; the
//! binary parses arguments, wires files to library calls, and writes the
//! result documents. Identical inputs and flags produce byte-identical
//! output trees.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::elbow::{build_curve, detect, map_to_lambda, CurveSample, ElbowResult, ErrorCurve};
use crate::io::{
    containment_csv, curve_csv, elbow_json, export_graph, json_document, load_dataset, meta_value,
    ranking_csv, ranking_markdown, read_curve_csv, sweep_csv, write_text_file, DatasetSpec,
    GraphFormat, Orientation, OutputSelector,
};
use crate::matrix::{ForbiddenMask, GraphSignalMatrix};
use crate::ranking::rank;
use crate::sem::{lambda_max, solve_in_context, SemContext, SemProblem, SemSolution, SolveOptions};
use crate::sweep::{make_grid, sweep, ErrorRows, ScenarioConfig, SweepOptions, SweepResult};
use crate::synthetic::{run_containment, ContainmentOptions, CurveAxis, SyntheticScenario};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "semgraph",
    version,
    about = "Sparse feature-graph learning with elbow-interval model selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one graph at a fixed lambda and export it
    Learn(LearnArgs),
    /// Trace the lambda path, writing the sweep table and error curves
    Sweep(SweepArgs),
    /// Detect the elbow interval on a curve CSV (columns z,v[,lambda])
    Elbow(ElbowArgs),
    /// Rank the output-node connections of a fitted graph
    Rank(RankArgs),
    /// Synthetic lasso benchmark: elbow intervals vs exact-recovery intervals
    BenchLasso(BenchLassoArgs),
    /// Full study: two sweeps, four curves, elbows, graphs, and rankings
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OrientationArg {
    /// Rows are observations, columns are variables
    RowsAreObservations,
    /// Rows are variables, columns are observations
    RowsAreFeatures,
}

#[derive(Args)]
struct DataArgs {
    /// Input dataset (delimited, header row required)
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = OrientationArg::RowsAreObservations)]
    orientation: OrientationArg,
    /// Output variables: "last:k" or a comma-separated name list
    #[arg(long, default_value = "last:2")]
    outputs: String,
    /// Z-score each variable before fitting
    #[arg(long)]
    normalize: bool,
    /// Field delimiter
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

impl DataArgs {
    fn spec(&self) -> Result<DatasetSpec> {
        let orientation = match self.orientation {
            OrientationArg::RowsAreObservations => Orientation::RowsAreObservations,
            OrientationArg::RowsAreFeatures => Orientation::RowsAreFeatures,
        };
        Ok(DatasetSpec::new(&self.data)
            .orientation(orientation)
            .outputs(OutputSelector::parse(&self.outputs)?)
            .normalize(self.normalize)
            .delimiter(self.delimiter as u8))
    }

    fn config(&self) -> serde_json::Value {
        serde_json::json!({
            "data": self.data.display().to_string(),
            "orientation": format!("{:?}", self.orientation),
            "outputs": self.outputs,
            "normalize": self.normalize,
            "delimiter": self.delimiter.to_string(),
        })
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Relative objective-change convergence threshold
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    /// Link-count threshold on |weight|
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    /// Seed for any randomized step
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            ..SolveOptions::default()
        }
    }

    fn config(&self) -> serde_json::Value {
        serde_json::json!({
            "tol": self.tol,
            "max_iter": self.max_iter,
            "eps": self.eps,
            "seed": self.seed,
        })
    }
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    lambda: f64,
    /// Forbid the direct edge between output nodes
    #[arg(long)]
    no_interlink: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    no_interlink: bool,
    /// Positive grid points between lambda_max and lambda_max * min-ratio
    #[arg(long, default_value_t = 200)]
    grid_points: usize,
    #[arg(long, default_value_t = 1e-3)]
    min_ratio: f64,
    /// Solve grid points independently (parallel) instead of warm-starting
    #[arg(long)]
    cold: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ElbowArgs {
    /// Curve CSV with columns z,v[,lambda]
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    no_interlink: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BenchScenario {
    S1,
    S2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CurveAxisArg {
    /// z = 1/lambda, one sample per grid point
    InverseLambda,
    /// z = number of nonzero coefficients
    SupportSize,
}

#[derive(Args)]
struct BenchLassoArgs {
    #[arg(long, value_enum)]
    scenario: BenchScenario,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lasso path grid size
    #[arg(long, default_value_t = 300)]
    grid_points: usize,
    /// Grid floor as a fraction of lambda_max
    #[arg(long, default_value_t = 1e-2)]
    grid_floor: f64,
    #[arg(long, value_enum, default_value_t = CurveAxisArg::InverseLambda)]
    curve_axis: CurveAxisArg,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 200)]
    grid_points: usize,
    #[arg(long, default_value_t = 1e-3)]
    min_ratio: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Entry point used by the binary. Returns the process exit code: 0 on
/// success, clap's own code for usage errors, 1 for runtime failures (with
/// a single machine-parsable `error: ...` line on stderr).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    init_thread_pool();
    let outcome = match cli.command {
        Command::Learn(a) => cmd_learn(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Elbow(a) => cmd_elbow(a),
        Command::Rank(a) => cmd_rank(a),
        Command::BenchLasso(a) => cmd_bench_lasso(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("SEMGRAPH_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn mask_for(x: &GraphSignalMatrix, no_interlink: bool) -> Result<ForbiddenMask> {
    if !no_interlink {
        return Ok(ForbiddenMask::empty());
    }
    if x.output_nodes().len() < 2 {
        return Err(Error::InvalidInput(
            "--no-interlink needs at least two output nodes".into(),
        ));
    }
    Ok(ForbiddenMask::output_interlinks(x.output_nodes()))
}

fn solve_at(
    x: &GraphSignalMatrix,
    ctx: &SemContext,
    lambda: f64,
    mask: &ForbiddenMask,
    opts: &SolveOptions,
) -> Result<SemSolution> {
    solve_in_context(
        &SemProblem::new(x, lambda).with_mask(mask.clone()),
        ctx,
        opts,
    )
}

fn cmd_learn(a: LearnArgs) -> Result<()> {
    let x = load_dataset(&a.data.spec()?)?.matrix;
    let mask = mask_for(&x, a.no_interlink)?;
    let ctx = SemContext::new(&x)?;
    let sol = solve_at(&x, &ctx, a.lambda, &mask, &a.solver.solve_options())?;

    let config = serde_json::json!({
        "data": a.data.config(),
        "solver": a.solver.config(),
        "lambda": a.lambda,
        "no_interlink": a.no_interlink,
    });
    let meta = meta_value("learn", config);

    let links = crate::sem::edge_set(&sol.a_hat, a.solver.eps).len();
    let diagnostics = serde_json::json!({
        "lambda": a.lambda,
        "links": links,
        "objective": sol.objective,
        "fit_error": sol.fit_error,
        "nmse_all": sol.fit_error / x.fro_norm_sq(),
        "kkt_violation": sol.kkt_violation,
        "iterations": sol.iterations,
    });

    write_graph_pair(&a.out, "graph", &sol, &x, a.solver.eps, &meta)?;
    write_text_file(
        a.out.join("diagnostics.json"),
        &json_document(&meta, "diagnostics", &diagnostics)?,
    )?;
    println!(
        "learn: {} links at lambda {} -> {}",
        links,
        a.lambda,
        a.out.display()
    );
    Ok(())
}

fn write_graph_pair(
    dir: &Path,
    stem: &str,
    sol: &SemSolution,
    x: &GraphSignalMatrix,
    eps: f64,
    meta: &serde_json::Value,
) -> Result<()> {
    let json = export_graph(
        &sol.a_hat,
        x.node_names(),
        x.output_nodes(),
        eps,
        meta,
        GraphFormat::Json,
    )?;
    let dot = export_graph(
        &sol.a_hat,
        x.node_names(),
        x.output_nodes(),
        eps,
        meta,
        GraphFormat::Dot,
    )?;
    write_text_file(dir.join(format!("{stem}.json")), &json)?;
    write_text_file(dir.join(format!("{stem}.dot")), &dot)?;
    Ok(())
}

fn sweep_grid(x: &GraphSignalMatrix, mask: &ForbiddenMask, points: usize, min_ratio: f64) -> Result<(f64, Vec<f64>)> {
    let lmax = lambda_max(x, mask);
    if lmax <= 0.0 {
        return Err(Error::InvalidInput(
            "lambda_max is zero: variables are uncorrelated, the empty graph is always optimal"
                .into(),
        ));
    }
    let grid = if points == 1 {
        vec![lmax]
    } else {
        make_grid(lmax, points, min_ratio)?
    };
    Ok((lmax, grid))
}

fn run_one_sweep(
    x: &GraphSignalMatrix,
    no_interlink: bool,
    points: usize,
    min_ratio: f64,
    cold: bool,
    solver: &SolverArgs,
) -> Result<(f64, SweepResult)> {
    let mask = mask_for(x, no_interlink)?;
    let (lmax, grid) = sweep_grid(x, &mask, points, min_ratio)?;
    let sc = ScenarioConfig {
        allow_output_interlink: !no_interlink,
        error_rows: ErrorRows::AllRows,
    };
    let opts = SweepOptions {
        warm: !cold,
        eps: solver.eps,
        keep_adjacency: false,
        solve: solver.solve_options(),
    };
    Ok((lmax, sweep(x, &sc, &grid, &opts)?))
}

fn curve_samples(sr: &SweepResult, rows: ErrorRows) -> Result<Vec<CurveSample>> {
    sr.records
        .iter()
        .map(|r| {
            let v = match rows {
                ErrorRows::AllRows => r.nmse_all,
                ErrorRows::OutputRowsOnly => r.nmse_outputs.ok_or_else(|| {
                    Error::InvalidInput("sweep has no output-row errors".into())
                })?,
            };
            Ok(CurveSample::with_lambda(r.link_count as f64, v, r.lambda))
        })
        .collect()
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let x = load_dataset(&a.data.spec()?)?.matrix;
    let (lmax, sr) = run_one_sweep(
        &x,
        a.no_interlink,
        a.grid_points,
        a.min_ratio,
        a.cold,
        &a.solver,
    )?;
    let config = serde_json::json!({
        "data": a.data.config(),
        "solver": a.solver.config(),
        "no_interlink": a.no_interlink,
        "grid_points": a.grid_points,
        "min_ratio": a.min_ratio,
        "cold": a.cold,
        "lambda_max": lmax,
    });
    let meta = meta_value("sweep", config);

    write_text_file(a.out.join("sweep.csv"), &sweep_csv(&sr, &meta))?;
    write_text_file(
        a.out.join("curve_all.csv"),
        &curve_csv(&curve_samples(&sr, ErrorRows::AllRows)?, &meta),
    )?;
    if !x.output_nodes().is_empty() {
        write_text_file(
            a.out.join("curve_outputs.csv"),
            &curve_csv(&curve_samples(&sr, ErrorRows::OutputRowsOnly)?, &meta),
        )?;
    }
    println!(
        "sweep: {} grid points, lambda_max {} -> {}",
        sr.grid.len(),
        lmax,
        a.out.display()
    );
    Ok(())
}

fn detect_on_curve(samples: &[CurveSample]) -> Result<(ErrorCurve, ElbowResult)> {
    let curve = build_curve(samples)?;
    let mut result = detect(&curve)?;
    if curve.lambda_at().is_some() {
        result = map_to_lambda(&curve, &result)?;
    }
    Ok((curve, result))
}

fn cmd_elbow(a: ElbowArgs) -> Result<()> {
    let text = fs::read_to_string(&a.curve)?;
    let samples = read_curve_csv(&text)?;
    let (curve, result) = detect_on_curve(&samples)?;
    let config = serde_json::json!({ "curve": a.curve.display().to_string() });
    let meta = meta_value("elbow", config);
    write_text_file(a.out.join("elbow.json"), &elbow_json(&curve, &result, &meta)?)?;
    println!(
        "elbow: interval [{}, {}], point {} -> {}",
        result.k1_star,
        result.k2_star,
        result.point_elbow,
        a.out.display()
    );
    Ok(())
}

fn cmd_rank(a: RankArgs) -> Result<()> {
    let x = load_dataset(&a.data.spec()?)?.matrix;
    let mask = mask_for(&x, a.no_interlink)?;
    let ctx = SemContext::new(&x)?;
    let sol = solve_at(&x, &ctx, a.lambda, &mask, &a.solver.solve_options())?;
    let ranked = rank(&sol.a_hat, &x, a.solver.eps)?.with_lambda(a.lambda);

    let config = serde_json::json!({
        "data": a.data.config(),
        "solver": a.solver.config(),
        "lambda": a.lambda,
        "no_interlink": a.no_interlink,
    });
    let meta = meta_value("rank", config);
    write_text_file(a.out.join("ranking.md"), &ranking_markdown(&ranked, &meta))?;
    write_text_file(a.out.join("ranking.csv"), &ranking_csv(&ranked, &meta))?;
    println!("rank: {} outputs -> {}", ranked.outputs.len(), a.out.display());
    Ok(())
}

fn cmd_bench_lasso(a: BenchLassoArgs) -> Result<()> {
    let sc = match a.scenario {
        BenchScenario::S1 => SyntheticScenario::s1(a.seed),
        BenchScenario::S2 => SyntheticScenario::s2(a.seed),
    };
    let sc = SyntheticScenario { runs: a.runs, ..sc };
    let curve_axis = match a.curve_axis {
        CurveAxisArg::InverseLambda => CurveAxis::InverseLambda,
        CurveAxisArg::SupportSize => CurveAxis::SupportSize,
    };
    let opts = ContainmentOptions {
        grid_points: a.grid_points,
        grid_floor_ratio: a.grid_floor,
        tol: a.tol,
        max_iter: a.max_iter,
        curve_axis,
        ..ContainmentOptions::default()
    };
    let report = run_containment(&sc, &opts)?;

    let config = serde_json::json!({
        "scenario": format!("{:?}", a.scenario).to_lowercase(),
        "runs": a.runs,
        "seed": a.seed,
        "grid_points": a.grid_points,
        "grid_floor": a.grid_floor,
        "curve_axis": format!("{:?}", a.curve_axis),
        "tol": a.tol,
        "max_iter": a.max_iter,
    });
    let meta = meta_value("bench-lasso", config);
    write_text_file(a.out.join("containment.csv"), &containment_csv(&report, &meta))?;
    write_text_file(
        a.out.join("summary.json"),
        &json_document(&meta, "summary", &report.summary)?,
    )?;
    println!(
        "bench-lasso: {}/{} contained ({} with ground truth) -> {}",
        report.summary.contained,
        report.summary.runs,
        report.summary.with_ground_truth,
        a.out.display()
    );
    Ok(())
}

fn cmd_pipeline(a: PipelineArgs) -> Result<()> {
    let x = load_dataset(&a.data.spec()?)?.matrix;
    if x.output_nodes().len() < 2 {
        return Err(Error::InvalidInput(
            "pipeline needs at least two output nodes".into(),
        ));
    }
    let ctx = SemContext::new(&x)?;
    let config = serde_json::json!({
        "data": a.data.config(),
        "solver": a.solver.config(),
        "grid_points": a.grid_points,
        "min_ratio": a.min_ratio,
    });
    let meta = meta_value("pipeline", config.clone());
    write_text_file(a.out.join("meta.json"), &json_document(&meta, "run", &config)?)?;

    // One sweep per mask setting; each feeds two reporting scenarios.
    let mut sweeps: Vec<(bool, SweepResult)> = Vec::new();
    for no_interlink in [false, true] {
        let (lmax, sr) = run_one_sweep(
            &x,
            no_interlink,
            a.grid_points,
            a.min_ratio,
            false,
            &a.solver,
        )?;
        let dir = a.out.join(if no_interlink {
            "interlink_forbidden"
        } else {
            "interlink_allowed"
        });
        let sweep_meta = meta_value(
            "pipeline/sweep",
            serde_json::json!({
                "no_interlink": no_interlink,
                "lambda_max": lmax,
                "config": config,
            }),
        );
        write_text_file(dir.join("sweep.csv"), &sweep_csv(&sr, &sweep_meta))?;
        write_text_file(
            dir.join("curve_all.csv"),
            &curve_csv(&curve_samples(&sr, ErrorRows::AllRows)?, &sweep_meta),
        )?;
        write_text_file(
            dir.join("curve_outputs.csv"),
            &curve_csv(&curve_samples(&sr, ErrorRows::OutputRowsOnly)?, &sweep_meta),
        )?;
        sweeps.push((no_interlink, sr));
    }

    for scenario in 1..=4usize {
        let sc = ScenarioConfig::numbered(scenario)?;
        let no_interlink = !sc.allow_output_interlink;
        let (_, sr) = sweeps
            .iter()
            .find(|(ni, _)| *ni == no_interlink)
            .expect("both sweeps computed");
        let samples = curve_samples(sr, sc.error_rows)?;
        let (curve, result) = detect_on_curve(&samples)?;
        let dir = a.out.join(format!("scenario{scenario}"));
        let sc_meta = meta_value(
            "pipeline/scenario",
            serde_json::json!({
                "scenario": scenario,
                "no_interlink": no_interlink,
                "error_rows": format!("{:?}", sc.error_rows),
                "config": config,
            }),
        );
        write_text_file(dir.join("elbow.json"), &elbow_json(&curve, &result, &sc_meta)?)?;

        let (lambda_k1, lambda_k2) = result.lambda_interval.expect("sweep curves carry lambda");
        let lambda_elbow = result.lambda_point.expect("sweep curves carry lambda");
        let mask = mask_for(&x, no_interlink)?;
        let opts = a.solver.solve_options();

        let elbow_sol = solve_at(&x, &ctx, lambda_elbow, &mask, &opts)?;
        write_graph_pair(&dir, "graph_elbow", &elbow_sol, &x, a.solver.eps, &sc_meta)?;
        let sparse_sol = solve_at(&x, &ctx, lambda_k1, &mask, &opts)?;
        write_graph_pair(&dir, "graph_interval_sparse", &sparse_sol, &x, a.solver.eps, &sc_meta)?;
        let dense_sol = solve_at(&x, &ctx, lambda_k2, &mask, &opts)?;
        write_graph_pair(&dir, "graph_interval_dense", &dense_sol, &x, a.solver.eps, &sc_meta)?;

        let ranked = rank(&elbow_sol.a_hat, &x, a.solver.eps)?.with_lambda(lambda_elbow);
        write_text_file(dir.join("ranking_elbow.md"), &ranking_markdown(&ranked, &sc_meta))?;
        write_text_file(dir.join("ranking_elbow.csv"), &ranking_csv(&ranked, &sc_meta))?;
        println!(
            "pipeline scenario {scenario}: elbow {} links (lambda {:.2}), interval [{}, {}] links",
            result.point_elbow, lambda_elbow, result.k1_star, result.k2_star
        );
    }
    println!("pipeline: wrote {}", a.out.display());
    Ok(())
}
