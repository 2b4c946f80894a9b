//! The `rnnkit` command line.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 when the input
//! data, a model file or a numerical procedure fails. Failures are reported
//! on stderr as a single line `error[<kind>]: <message>`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::{Array2, ArrayView2};

use crate::conv::{conv_cluster, conv_single, conv_twin, prepare_kernel, ActivationParams, Scheme};
use crate::error::{Result, RnnError};
use crate::io::config::TrainFile;
use crate::io::dataset::{load_dataset, read_csv_features, read_idx_images, DatasetSource, LabelColumn, MinMaxScaler, Normalization};
use crate::io::image::{read_matrix, read_pgm, write_pgm};
use crate::io::model::{load_model, save_model, ModelFile};
use crate::io::netfile::read_network;
use crate::mlrnn::{accuracy, train_with_log, LabeledDataset};
use crate::network::{solve_steady_state, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::sim::{simulate, SimConfig};

#[derive(Parser, Debug)]
#[command(name = "rnnkit", version, about = "Random neural network toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the steady-state equations of a network file.
    Solve {
        network: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Simulate the spiking process and compare with the analytic solution.
    Simulate {
        network: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        events: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        burn_in: f64,
        /// Largest acceptable |q̂ - q|.
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
    /// Convolve a PGM image with an RNN receptive field and write a PGM.
    ConvDemo {
        image: PathBuf,
        kernel: PathBuf,
        #[arg(long, default_value = "twin")]
        scheme: Scheme,
        #[arg(long, short)]
        out: PathBuf,
        /// External excitatory rate of single cells.
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Firing rate of single cells.
        #[arg(long, default_value_t = 0.1)]
        rate: f64,
        /// Exchange the excitatory and inhibitory kernel parts (single cells).
        #[arg(long)]
        swapped: bool,
    },
    /// Train a classifier and write a model file.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Print one predicted class per input row.
    Predict {
        #[arg(long, short)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// The CSV has no label column.
        #[arg(long)]
        unlabeled: bool,
    },
    /// Report accuracy and the confusion matrix on a labelled dataset.
    Eval {
        #[arg(long, short)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
}

#[derive(Args, Debug)]
#[group(skip)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["csv", "idx_images"])))]
struct DataArgs {
    /// Headed CSV file.
    #[arg(long, conflicts_with_all = ["idx_images", "idx_labels"])]
    csv: Option<PathBuf>,
    /// Label column name or zero-based index; defaults to the last column.
    #[arg(long)]
    label: Option<LabelColumn>,
    #[arg(long, requires = "idx_labels")]
    idx_images: Option<PathBuf>,
    #[arg(long, requires = "idx_images")]
    idx_labels: Option<PathBuf>,
}

impl DataArgs {
    fn source(&self) -> Result<DatasetSource> {
        match (&self.csv, &self.idx_images, &self.idx_labels) {
            (Some(p), None, None) => Ok(DatasetSource::csv(p, self.label.clone().unwrap_or(LabelColumn::Last))),
            (None, Some(i), Some(l)) => Ok(DatasetSource::idx(i, l)),
            _ => Err(RnnError::arg("give either --csv or both --idx-images and --idx-labels")),
        }
    }

    fn features(&self) -> Result<Array2<f64>> {
        match (&self.csv, &self.idx_images) {
            (Some(p), None) => read_csv_features(p),
            (None, Some(i)) => read_idx_images(i),
            _ => Err(RnnError::arg("give either --csv or --idx-images")),
        }
    }
}

fn kind(err: &RnnError) -> &'static str {
    match err {
        RnnError::InvalidArgument(_) => "invalid-argument",
        RnnError::NoConvergence { .. } => "no-convergence",
        RnnError::Degenerate(_) => "degenerate",
        RnnError::NonFinite { .. } => "non-finite",
        RnnError::Parse { .. } => "parse",
        RnnError::ModelFile(_) => "model",
        RnnError::Io(_) => "io",
    }
}

/// Runs the command line with the given arguments (program name first) and
/// returns the exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let first = e.to_string();
                    let first = first.lines().next().unwrap_or("").trim_start_matches("error: ");
                    let _ = writeln!(err, "error[usage]: {first}");
                    1
                }
            };
        }
    };
    if let Some(msg) = usage_problem(&cli.command) {
        let _ = writeln!(err, "error[usage]: {msg}");
        return 1;
    }
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", kind(&e));
            2
        }
    }
}

/// Option values that parse but are out of range.
fn usage_problem(command: &Command) -> Option<String> {
    match command {
        Command::Solve { tol, max_iter, .. } if !(*tol > 0.0) || *max_iter == 0 => {
            Some("--tol must be positive and --max-iter at least 1".into())
        }
        Command::Simulate { events, burn_in, tol, .. } if *events == 0 || !(0.0..1.0).contains(burn_in) || !(*tol >= 0.0) => {
            Some("--events must be positive, --burn-in in [0, 1) and --tol non-negative".into())
        }
        Command::ConvDemo { lambda, rate, .. } => ActivationParams::new(*lambda, *rate).err().map(|e| e.to_string()),
        _ => None,
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Solve { network, tol, max_iter } => solve(&network, tol, max_iter, out),
        Command::Simulate {
            network,
            events,
            seed,
            burn_in,
            tol,
        } => run_simulation(&network, events, seed, burn_in, tol, out),
        Command::ConvDemo {
            image,
            kernel,
            scheme,
            out: path,
            lambda,
            rate,
            swapped,
        } => conv_demo(&image, &kernel, scheme, &path, ActivationParams::new(lambda, rate)?, swapped, out),
        Command::Train {
            data,
            config,
            seed,
            out: path,
        } => run_training(&data, config.as_deref(), seed, &path, out),
        Command::Predict { model, data, unlabeled } => predict(&model, &data, unlabeled, out),
        Command::Eval { model, data } => eval(&model, &data, out),
    }
}

fn solve(path: &Path, tol: f64, max_iter: usize, out: &mut dyn Write) -> Result<()> {
    let net = read_network(path)?;
    let ss = solve_steady_state(&net, tol, max_iter)?;
    writeln!(out, "neuron\tq")?;
    for (i, q) in ss.q.iter().enumerate() {
        writeln!(out, "{}\t{q}", i + 1)?;
    }
    writeln!(out, "iterations\t{}", ss.iterations)?;
    writeln!(out, "residual\t{:e}", ss.residual)?;
    Ok(())
}

fn run_simulation(path: &Path, events: u64, seed: u64, burn_in: f64, tol: f64, out: &mut dyn Write) -> Result<()> {
    let net = read_network(path)?;
    let cfg = SimConfig {
        total_events: events,
        burn_in_fraction: burn_in,
        seed,
    };
    let analytic = solve_steady_state(&net, DEFAULT_TOL, DEFAULT_MAX_ITER)?.q;
    let sim = simulate(&net, &cfg)?;
    writeln!(out, "neuron\tq_hat\tq\tabs_diff")?;
    let mut max_dev = 0.0f64;
    for (i, (qh, q)) in sim.q_hat.iter().zip(&analytic).enumerate() {
        let d = (qh - q).abs();
        max_dev = max_dev.max(d);
        writeln!(out, "{}\t{qh}\t{q}\t{d:.6}", i + 1)?;
    }
    let c = &sim.event_counts;
    writeln!(out, "model_time\t{}", sim.model_time)?;
    writeln!(out, "absorbed\t{}", sim.absorbed)?;
    writeln!(
        out,
        "events\text_exc={} ext_inh={} firings={} int_exc={} int_inh={} departures={}",
        c.external_excitatory, c.external_inhibitory, c.firings, c.internal_excitatory, c.internal_inhibitory, c.departures
    )?;
    writeln!(out, "rng\t{} seed={seed}", sim.rng_algorithm)?;
    let verdict = if max_dev <= tol { "PASS" } else { "FAIL" };
    writeln!(out, "max_deviation\t{max_dev:.6}\ttol={tol}\t{verdict}")?;
    Ok(())
}

fn conv_demo(
    image: &Path,
    kernel: &Path,
    scheme: Scheme,
    path: &Path,
    params: ActivationParams,
    swapped: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let img = read_pgm(image)?;
    let k = prepare_kernel(read_matrix(kernel)?.view(), scheme)?;
    let (result, clamped) = match scheme {
        Scheme::Single => {
            let o = conv_single(&img, &k, params, swapped)?;
            (o.output, o.clamped)
        }
        Scheme::Twin => {
            let o = conv_twin(&img, &k)?;
            writeln!(out, "bound_holds\t{}", o.bound_holds)?;
            (o.output, o.clamped)
        }
        Scheme::Cluster => {
            let o = conv_cluster(&img, &k)?;
            (o.output, o.clamped)
        }
    };
    let rescale = write_pgm(path, &result)?;
    let (h, w) = result.dim();
    writeln!(out, "output\t{}x{} -> {}", h, w, path.display())?;
    writeln!(out, "clamped\t{}", clamped.iter().filter(|&&c| c).count())?;
    writeln!(out, "rescale\tbyte = round((value - {}) * {})", rescale.offset, rescale.scale)?;
    Ok(())
}

fn scale_with(scaler: &[MinMaxScaler], x: ArrayView2<f64>) -> Result<Array2<f64>> {
    match scaler.first() {
        Some(s) => s.transform(x),
        None => Ok(x.to_owned()),
    }
}

fn run_training(data: &DataArgs, config: Option<&Path>, seed: Option<u64>, path: &Path, out: &mut dyn Write) -> Result<()> {
    let mut file = match config {
        Some(p) => TrainFile::read(p)?,
        None => TrainFile::default(),
    };
    if let Some(s) = seed {
        file.seed = s;
    }
    let cfg = file.train_config();
    let all = load_dataset(&data.source()?)?;
    let (mut train, mut test) = if file.train_fraction < 1.0 {
        all.split(file.train_fraction, file.seed)
    } else {
        (all.clone(), all.select(&[]))
    };
    let scaling = match file.normalization()? {
        Normalization::MinMax => vec![MinMaxScaler::fit(train.x.view())],
        Normalization::None => Vec::new(),
    };
    train.x = scale_with(&scaling, train.x.view())?;
    test.x = scale_with(&scaling, test.x.view())?;

    let start = std::time::Instant::now();
    let (model, log) = train_with_log(&train, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    let train_acc = accuracy(&model.predict(train.x.view())?, &train.labels());
    let sizes: Vec<String> = model.layer_sizes().iter().map(usize::to_string).collect();
    writeln!(out, "layers\t{}", sizes.join("-"))?;
    writeln!(out, "alpha\t{}", log.alpha)?;
    writeln!(out, "train_rows\t{}", train.len())?;
    writeln!(out, "train_accuracy\t{train_acc:.4}")?;
    if test.is_empty() {
        writeln!(out, "test_accuracy\tn/a")?;
    } else {
        let test_acc = accuracy(&model.predict(test.x.view())?, &test.labels());
        writeln!(out, "test_rows\t{}", test.len())?;
        writeln!(out, "test_accuracy\t{test_acc:.4}")?;
    }
    writeln!(out, "train_seconds\t{elapsed:.3}")?;
    save_model(
        &ModelFile {
            model,
            class_names: all.class_names.clone(),
            input_scaling: scaling,
        },
        path,
    )?;
    writeln!(out, "model\t{}", path.display())?;
    Ok(())
}

fn class_name(file: &ModelFile, k: usize) -> String {
    file.class_names.get(k).cloned().unwrap_or_else(|| k.to_string())
}

fn predict(model: &Path, data: &DataArgs, unlabeled: bool, out: &mut dyn Write) -> Result<()> {
    let file = load_model(model)?;
    let x = if unlabeled {
        data.features()?
    } else {
        load_dataset(&data.source()?)?.x
    };
    let x = scale_with(&file.input_scaling, x.view())?;
    for k in file.model.predict(x.view())? {
        writeln!(out, "{}", class_name(&file, k))?;
    }
    Ok(())
}

/// Class indices of `data` in the model's class order.
fn model_labels(file: &ModelFile, data: &LabeledDataset) -> Result<Vec<usize>> {
    let map: Vec<usize> = data
        .class_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            if file.class_names.is_empty() {
                name.parse::<usize>().or(Ok(i))
            } else {
                file.class_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| RnnError::arg(format!("class '{name}' is unknown to the model")))
            }
        })
        .collect::<Result<_>>()?;
    Ok(data.labels().into_iter().map(|k| map[k]).collect())
}

fn eval(model: &Path, data: &DataArgs, out: &mut dyn Write) -> Result<()> {
    let file = load_model(model)?;
    let data = load_dataset(&data.source()?)?;
    let truth = model_labels(&file, &data)?;
    let x = scale_with(&file.input_scaling, data.x.view())?;
    let predicted = file.model.predict(x.view())?;
    let n = file.model.output_width();
    let mut confusion = Array2::<usize>::zeros((n, n));
    for (&t, &p) in truth.iter().zip(&predicted) {
        if t >= n {
            return Err(RnnError::arg(format!("label {t} exceeds the model's {n} classes")));
        }
        confusion[[t, p]] += 1;
    }
    writeln!(out, "rows\t{}", truth.len())?;
    writeln!(out, "accuracy\t{:.4}", accuracy(&predicted, &truth))?;
    writeln!(out, "confusion (row = true class, column = predicted)")?;
    let names: Vec<String> = (0..n).map(|k| class_name(&file, k)).collect();
    writeln!(out, "\t{}", names.join("\t"))?;
    for (k, row) in confusion.rows().into_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        writeln!(out, "{}\t{}", names[k], cells.join("\t"))?;
    }
    Ok(())
}
