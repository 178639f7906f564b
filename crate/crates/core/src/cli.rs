//! The `deodata` command line.
//!
//! Exit codes: 0 success, 1 user or input error, 2 internal invariant
//! violation.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::{
    load_table_with_outcome, read_query_rows, validate_query, Schema, TrainingTable,
};
use crate::error::{Error, Result};
use crate::harness::{
    evaluate_accuracy, run_convergence, summarize, write_report, Arm, SyntheticSpec,
};
use crate::kernels::{certify_lead, make_kernel, KernelChoice, KernelKind};
use crate::predictors::{fit, FitOptions, FittedModel, Prediction, PredictorKind};

#[derive(Debug, Parser)]
#[command(
    name = "deodata",
    version,
    about = "Deodata field predictors for tabular data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model on a training CSV and write the model file.
    Fit(FitArgs),
    /// Predict outcomes for queries with a fitted model.
    Predict(PredictArgs),
    /// Fit on one CSV and report accuracy on another.
    Eval(EvalArgs),
    /// Run a convergence experiment on a synthetic spec.
    Converge(ConvergeArgs),
    /// Inspect kernel kinds.
    Kernels {
        #[command(subcommand)]
        action: KernelsAction,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Training CSV with a header row; the outcome is the last column unless
    /// --outcome-column is given.
    #[arg(long)]
    pub train: PathBuf,
    /// Schema JSON; inferred from the data when absent.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, default_value = "delanga")]
    pub predictor: String,
    /// Kernel for rasturnat, e.g. bridge, newton, spliced:pow_e,
    /// inv_additive_residue:square.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Apply sampling-density compensation (rasturnat only).
    #[arg(long)]
    pub density: bool,
    /// Override the kernel's multiplier lead (rasturnat only).
    #[arg(long)]
    pub mld: Option<f64>,
    #[arg(long)]
    pub outcome_column: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Record per-prediction traces.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// One comma-separated query; repeatable.
    #[arg(long = "query", conflicts_with = "queries")]
    pub query: Vec<String>,
    /// CSV of queries with a header row; a trailing outcome column is ignored.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, value_parser = ["text", "json"], default_value = "text")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub test: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// Synthetic spec JSON, or the built-in `standard` / `adversarial`.
    #[arg(long, default_value = "standard")]
    pub spec: String,
    /// Arm such as delanga, nearest, rasturnat:bridge, rasturnat:newton+density;
    /// repeatable.
    #[arg(long = "arm", required = true)]
    pub arms: Vec<String>,
    /// Strictly increasing training sizes, e.g. 10,100,1000.
    #[arg(long)]
    pub schedule: String,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 1000)]
    pub test_size: usize,
    /// Replace the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report CSV; written to standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum KernelsAction {
    /// All kernel kinds with their formulas.
    List,
    /// Lead certificate of every kind for a table of M rows.
    Check {
        #[arg(long)]
        m: usize,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Contract(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Contract(format!("cannot write {}: {e}", path.display())))
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Contract(format!("cannot read {}: {e}", path.display())))
}

impl ModelArgs {
    fn predictor(&self) -> Result<PredictorKind> {
        self.predictor.parse()
    }

    fn kernel(&self, predictor: PredictorKind) -> Result<Option<KernelChoice>> {
        match (predictor, &self.kernel) {
            (PredictorKind::Rasturnat, None) => {
                Err(Error::Contract("rasturnat requires --kernel".into()))
            }
            (PredictorKind::Rasturnat, Some(k)) => Ok(Some(k.parse()?)),
            (p, Some(_)) => Err(Error::Contract(format!(
                "--kernel applies to rasturnat, not {p}"
            ))),
            (_, None) => Ok(None),
        }
    }

    fn load_train(&self) -> Result<TrainingTable> {
        let schema = self
            .schema
            .as_deref()
            .map(|p| read_to_string(p).and_then(|s| Schema::from_json(&s)))
            .transpose()?;
        load_table_with_outcome(
            open(&self.train)?,
            schema.as_ref(),
            self.outcome_column.as_deref(),
        )
    }

    fn fit(&self, trace: bool) -> Result<FittedModel> {
        let predictor = self.predictor()?;
        let kernel = self.kernel(predictor)?;
        if self.density && predictor != PredictorKind::Rasturnat {
            return Err(Error::Contract(
                "--density applies to rasturnat only".into(),
            ));
        }
        if self.mld.is_some() && predictor != PredictorKind::Rasturnat {
            return Err(Error::Contract("--mld applies to rasturnat only".into()));
        }
        let table = self.load_train()?;
        let options = FitOptions {
            density: self.density,
            mld_override: self.mld,
            trace,
            ..FitOptions::default()
        };
        fit(table, predictor, kernel, options)
    }
}

fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let model = args.model.fit(args.trace)?;
    let mut file = create(&args.out)?;
    file.write_all(model.to_json()?.as_bytes())?;
    file.flush()?;
    let table = model.table();
    writeln!(out, "predictor: {}", model.predictor())?;
    writeln!(out, "M_TEN={}", table.n_rows())?;
    writeln!(out, "N_TAC={}", table.n_attributes())?;
    match model.kernel() {
        None => writeln!(out, "kernel: none")?,
        Some(k) => {
            writeln!(out, "kernel: {}", k.descriptor())?;
            let c = certify_lead(k, table.n_rows());
            writeln!(
                out,
                "sepm={:.6} seap={:.6} maxsap={:.6}",
                c.sepm, c.seap, c.maxsap
            )?;
            writeln!(out, "certified: {}", c.certified)?;
        }
    }
    writeln!(out, "model written to {}", args.out.display())?;
    Ok(())
}

fn split_inline(text: &str) -> Result<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    match reader.records().next() {
        Some(record) => Ok(record?.iter().map(str::to_string).collect()),
        None => Ok(vec![String::new()]),
    }
}

fn format_prediction(p: &Prediction, schema: &Schema, json: bool) -> Result<String> {
    let labels = &schema.outcome_labels;
    if !json {
        let mut line = p.winner_label(schema).to_string();
        for (label, l) in labels.iter().zip(&p.likelihoods) {
            line.push_str(&format!(" {label}={l:.6}"));
        }
        return Ok(line);
    }
    let likelihoods = labels
        .iter()
        .zip(&p.likelihoods)
        .map(|(label, l)| Ok(format!("{}:{l:.6}", serde_json::to_string(label)?)))
        .collect::<Result<Vec<_>>>()?
        .join(",");
    let mut line = format!(
        "{{\"winner\":{},\"likelihoods\":{{{likelihoods}}},\"tie_depth\":{}",
        serde_json::to_string(p.winner_label(schema))?,
        p.tie_depth
    );
    if let Some(trace) = &p.trace {
        line.push_str(&format!(",\"trace\":{}", serde_json::to_string(trace)?));
    }
    line.push('}');
    Ok(line)
}

fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let model = FittedModel::from_json(&read_to_string(&args.model)?)?;
    let schema = model.schema();
    let queries: Vec<(String, Vec<String>)> = match &args.queries {
        Some(path) => read_query_rows(open(path)?, schema)?
            .into_iter()
            .map(|(line, cells)| (format!("{} line {line}", path.display()), cells))
            .collect(),
        None if args.query.is_empty() => {
            return Err(Error::Contract("give --query or --queries".into()));
        }
        None => args
            .query
            .iter()
            .enumerate()
            .map(|(i, q)| Ok((format!("query {}", i + 1), split_inline(q)?)))
            .collect::<Result<_>>()?,
    };
    // Validate everything before printing anything.
    let parsed = queries
        .iter()
        .map(|(whence, cells)| {
            validate_query(cells, schema).map_err(|e| Error::Contract(format!("{whence}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let json = args.format == "json";
    for q in &parsed {
        let p = model.predict(q)?;
        writeln!(out, "{}", format_prediction(&p, schema, json)?)?;
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let model = args.model.fit(false)?;
    let test = load_table_with_outcome(
        open(&args.test)?,
        Some(&model.schema().relaxed()),
        args.model.outcome_column.as_deref(),
    )?;
    let accuracy = evaluate_accuracy(&model, &test)?;
    writeln!(out, "accuracy={accuracy:.6}")?;
    Ok(())
}

fn parse_schedule(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Contract(format!("bad schedule entry `{s}`")))
        })
        .collect()
}

fn load_spec(name: &str) -> Result<SyntheticSpec> {
    match name {
        "standard" => Ok(SyntheticSpec::standard()),
        "adversarial" => Ok(SyntheticSpec::adversarial()),
        path => SyntheticSpec::from_json(&read_to_string(Path::new(path))?),
    }
}

fn cmd_converge(args: &ConvergeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut spec = load_spec(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let arms = args
        .arms
        .iter()
        .map(|a| a.parse())
        .collect::<Result<Vec<Arm>>>()?;
    let schedule = parse_schedule(&args.schedule)?;
    for arm in &arms {
        writeln!(
            err,
            "arm {arm}: {} sizes x {} trials, test size {}",
            schedule.len(),
            args.trials,
            args.test_size
        )?;
    }
    let rows = run_convergence(&spec, &arms, &schedule, args.trials, args.test_size)?;
    let summary = summarize(&rows);
    match &args.out {
        Some(path) => {
            let mut file = create(path)?;
            write_report(&rows, &mut file)?;
            file.flush()?;
            for s in &summary {
                writeln!(out, "{s}")?;
            }
        }
        None => {
            write_report(&rows, &mut *out)?;
            for s in &summary {
                writeln!(err, "{s}")?;
            }
        }
    }
    Ok(())
}

fn cmd_kernels(action: &KernelsAction, out: &mut dyn Write) -> Result<()> {
    match *action {
        KernelsAction::List => {
            for kind in KernelKind::ALL {
                writeln!(out, "{kind}: {}", kind.formula())?;
            }
        }
        KernelsAction::Check { m } => {
            if m < 2 {
                return Err(Error::Contract(format!("--m must be at least 2, got {m}")));
            }
            writeln!(out, "kernel,sepm,seap,maxsap,certified")?;
            for kind in KernelKind::ALL {
                let k = make_kernel(kind, m, 1.0, None)?;
                let c = certify_lead(&k, m);
                writeln!(
                    out,
                    "{kind},{:.6},{:.6},{:.6},{}",
                    c.sepm, c.seap, c.maxsap, c.certified
                )?;
            }
        }
    }
    Ok(())
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Invariant(_) => 2,
        _ => 1,
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Converge(a) => cmd_converge(a, out, err),
        Command::Kernels { action } => cmd_kernels(action, out),
    };
    match result.and_then(|()| out.flush().map_err(Error::from)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = BufWriter::new(stdout.lock());
    let mut err = stderr.lock();
    let code = run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
