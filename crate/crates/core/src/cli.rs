//! Command-line front end. [`run`] returns the process exit code: 0 on
//! success, 1 on a usage error, 2 on a data or IO error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::feature_space::FeatureMatrix;
use crate::io::svg::{render_candlestick_svg, render_loading_svg, render_scree_svg, ChartSpec};
use crate::io::table::{
    parse_feature_csv, parse_ohlc_csv, read_eigenvalues, read_scores_ohlc, write_feature_csv, write_model,
    write_ohlc_csv,
};
use crate::ohlc::{from_feature, to_feature, FlatPolicy, PreprocessConfig, Preprocessed, Preprocessor};
use crate::ppca::{component_label, PseudoPcModel};
use crate::simulate::{run_study, SimConfig, SimReport};

#[derive(Debug, Parser)]
#[command(name = "pseudo-pca", version, about = "Principal component analysis for OHLC price data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Map OHLC bars to unconstrained feature vectors.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        prep: PrepArgs,
    },
    /// Map feature vectors back to OHLC bars.
    Inverse {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit components and write the model, score bars and charts.
    Ppca {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = InputKind::Raw)]
        input_kind: InputKind,
        #[arg(long, default_value_t = 2)]
        components: usize,
        #[arg(long)]
        outdir: PathBuf,
        #[command(flatten)]
        prep: PrepArgs,
    },
    /// Monte Carlo study of loading accuracy under a redundant design.
    Simulate {
        /// Sample sizes, comma separated.
        #[arg(long = "n", value_delimiter = ',', default_values_t = [50usize, 100, 150, 200])]
        sample_sizes: Vec<usize>,
        #[arg(long, default_value_t = 300)]
        repeats: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Components counted in the reported cumulative contribution.
        #[arg(long, default_value_t = 4)]
        components: usize,
        #[arg(long)]
        output: PathBuf,
        /// Cumulative-variance chart of the mean spectrum at the largest sample size.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Render a chart from files written by `ppca`.
    Plot {
        #[command(subcommand)]
        chart: PlotCommand,
    },
}

#[derive(Debug, Subcommand)]
enum PlotCommand {
    Scree {
        /// Directory holding eigenvalues.csv.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    Candles {
        /// A scores_ohlc.csv file.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = 1)]
        component: usize,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputKind {
    Raw,
    Features,
    Standardized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FlatArg {
    LimitUp,
    LimitDown,
}

#[derive(Debug, Args)]
struct PrepArgs {
    #[arg(long, default_value_t = PreprocessConfig::default().epsilon)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = FlatArg::LimitUp)]
    flat_policy: FlatArg,
    #[arg(long)]
    jitter_seed: Option<u64>,
}

impl PrepArgs {
    fn config(&self) -> PreprocessConfig {
        PreprocessConfig {
            epsilon: self.epsilon,
            flat_policy: match self.flat_policy {
                FlatArg::LimitUp => FlatPolicy::LimitUp,
                FlatArg::LimitDown => FlatPolicy::LimitDown,
            },
            jitter_seed: self.jitter_seed,
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Transform { input, output, prep } => transform(&input, &output, prep.config()),
        Command::Inverse { input, output } => inverse(&input, &output),
        Command::Ppca { input, input_kind, components, outdir, prep } => {
            ppca(&input, input_kind, components, &outdir, prep.config())
        }
        Command::Simulate { sample_sizes, repeats, seed, components, output, svg } => {
            let config = SimConfig { sample_sizes, repeats, seed, component_count: components, ..SimConfig::default() };
            simulate(&config, &output, svg.as_deref())
        }
        Command::Plot { chart: PlotCommand::Scree { model, output } } => plot_scree(&model, &output),
        Command::Plot { chart: PlotCommand::Candles { scores, component, output } } => {
            plot_candles(&scores, component, &output)
        }
    }
}

fn with_row(path: &Path, line: usize, entity: &str, variable: &str, e: Error) -> Error {
    Error::Csv { path: path.display().to_string(), line, message: format!("{entity}/{variable}: {e}") }
}

fn transform(input: &Path, output: &Path, config: PreprocessConfig) -> Result<()> {
    let table = parse_ohlc_csv(input)?;
    let mut prep = Preprocessor::new(config)?;
    let mut rows = Vec::with_capacity(table.records.len());
    for r in &table.records {
        let wrap = |e| with_row(input, r.line, &r.entity, &r.variable, e);
        match prep.apply(r.bar).map_err(wrap)? {
            Preprocessed::Bar(bar) => rows.push((r, to_feature(&bar).map_err(wrap)?)),
            Preprocessed::Dropped => {
                eprintln!("note: line {}: {}/{} has all-zero prices, dropped", r.line, r.entity, r.variable)
            }
        }
    }
    write_feature_csv(output, rows.iter().map(|(r, fv)| (r.entity.as_str(), r.variable.as_str(), *fv)))
}

fn inverse(input: &Path, output: &Path) -> Result<()> {
    let table = parse_feature_csv(input)?;
    let bars = table
        .records
        .iter()
        .map(|r| from_feature(&r.features).map_err(|e| with_row(input, r.line, &r.entity, &r.variable, e)))
        .collect::<Result<Vec<_>>>()?;
    write_ohlc_csv(output, table.records.iter().zip(bars).map(|(r, b)| (r.entity.as_str(), r.variable.as_str(), b)))
}

/// Preprocesses and transforms a raw table into a feature matrix. Dropped bars
/// leave a hole in the grid, which surfaces as a ragged pivot.
fn raw_to_features(input: &Path, config: PreprocessConfig) -> Result<FeatureMatrix<f64>> {
    let table = parse_ohlc_csv(input)?;
    let mut prep = Preprocessor::new(config)?;
    let pivot = table.pivot()?;
    let mut cells = Vec::with_capacity(pivot.entities.len());
    for (entity, row) in pivot.entities.iter().zip(&pivot.cells) {
        let mut out = Vec::with_capacity(row.len());
        for (variable, raw) in pivot.variables.iter().zip(row) {
            let line =
                table.records.iter().find(|r| r.entity == *entity && r.variable == *variable).map_or(0, |r| r.line);
            let wrap = |e| with_row(input, line, entity, variable, e);
            match prep.apply(*raw).map_err(wrap)? {
                Preprocessed::Bar(bar) => out.push(to_feature(&bar).map_err(wrap)?),
                Preprocessed::Dropped => {
                    return Err(Error::RaggedPivot {
                        path: input.display().to_string(),
                        entity: entity.clone(),
                        variable: variable.clone(),
                    })
                }
            }
        }
        cells.push(out);
    }
    FeatureMatrix::from_rows(pivot.entities, pivot.variables, &cells)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ppca(input: &Path, kind: InputKind, components: usize, outdir: &Path, config: PreprocessConfig) -> Result<()> {
    let matrix = match kind {
        InputKind::Raw => raw_to_features(input, config)?,
        // Already standardized input is standardized again; on such data this
        // is close to the identity and keeps score statistics exact.
        InputKind::Features | InputKind::Standardized => parse_feature_csv(input)?.to_matrix()?,
    };
    let model = PseudoPcModel::fit(&matrix, components)?;
    let bars = model.scores(&matrix)?.to_ohlc()?;
    write_model(&model, &bars, outdir)?;

    let scree =
        render_scree_svg(model.spectrum(), &ChartSpec::default().with_title("Cumulative variance contribution"))?;
    write_text(&outdir.join("scree.svg"), &scree)?;
    for h in 0..model.n_components() {
        let spec = ChartSpec::default().with_title(format!("{} scores", component_label(h)));
        write_text(
            &outdir.join(format!("candles_pc{}.svg", h + 1)),
            &render_candlestick_svg(&bars.labeled(h), &spec)?,
        )?;
        let spec = ChartSpec::default()
            .with_title(format!("{} variable correlations", component_label(h)))
            .with_y_label("correlation");
        let svg = render_loading_svg(model.labels(), &model.variable_correlations(h), &spec)?;
        write_text(&outdir.join(format!("loadings_pc{}.svg", h + 1)), &svg)?;
    }
    eprintln!(
        "fitted {} components on {} observations x {} variables; retained contribution {:.4}",
        model.n_components(),
        matrix.n_rows(),
        matrix.n_cols(),
        model.retained_contribution()
    );
    Ok(())
}

pub fn report_csv(report: &SimReport) -> String {
    use crate::io::table::fmt_sig6;
    let mut out = String::from("sample_size,pc_index,mape_mean_pct,mape_sd,q4_mean\n");
    for s in &report.summaries {
        let q = fmt_sig6(s.contribution_mean);
        for (h, (m, sd)) in s.mape_mean_pct.iter().zip(&s.mape_sd).enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", s.sample_size, h + 1, fmt_sig6(*m), fmt_sig6(*sd), q));
        }
        out.push_str(&format!(
            "{},mean,{},{},{}\n",
            s.sample_size,
            fmt_sig6(s.overall_mape_pct()),
            fmt_sig6(s.overall_sd()),
            q
        ));
    }
    out
}

fn simulate(config: &SimConfig, output: &Path, svg: Option<&Path>) -> Result<()> {
    let report = run_study(config)?;
    for s in &report.summaries {
        for (r, msg) in &s.failures {
            eprintln!("warning: n={} repeat {r} failed: {msg}", s.sample_size);
        }
    }
    write_text(output, &report_csv(&report))?;
    if let Some(path) = svg {
        let last = report.summaries.last().ok_or(Error::EmptyInput)?;
        let spec =
            ChartSpec::default().with_title(format!("Cumulative variance contribution, n = {}", last.sample_size));
        write_text(path, &render_scree_svg(&last.mean_spectrum, &spec)?)?;
    }
    Ok(())
}

fn plot_scree(model_dir: &Path, output: &Path) -> Result<()> {
    let rows = read_eigenvalues(&model_dir.join("eigenvalues.csv"))?;
    let spectrum: Vec<f64> = rows.iter().map(|r| r.eigenvalue).collect();
    let spec = ChartSpec::default().with_title("Cumulative variance contribution");
    write_text(output, &render_scree_svg(&spectrum, &spec)?)
}

fn plot_candles(scores: &Path, component: usize, output: &Path) -> Result<()> {
    let rows = read_scores_ohlc(scores)?;
    let available = rows.iter().map(|r| r.component).max().unwrap_or(0);
    if component == 0 || component > available {
        return Err(Error::ComponentsOutOfRange { requested: component, available });
    }
    let bars: Vec<_> = rows.into_iter().filter(|r| r.component == component).map(|r| (r.entity, r.bar)).collect();
    let spec = ChartSpec::default().with_title(format!("{} scores", component_label(component - 1)));
    write_text(output, &render_candlestick_svg(&bars, &spec)?)
}
