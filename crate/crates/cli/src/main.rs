use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use kolmac::completion::{CompletionConfig, CompletionModel};
use kolmac::evaluation::{
    alpha_grid, best_alpha, cross_validate_sweep, render_table, EvaluationOptions, FoldSource,
};
use kolmac::ratings::{
    generate_synthetic, load_dataset, numerical_rank, split_folds, write_triplets_csv, CsvOptions,
    Dataset, DatasetFormat, RatingScale,
};
use kolmac::similarity::{build_similarity_cached, Axis, Compressor, CompressorProfile, SimilarityCache};
use kolmac::{with_workers, Measure};

#[derive(Parser, Debug)]
#[command(name = "kolmac", version, about = "Matrix completion with compression-based similarities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// k-fold cross-validated RMSE, written as JSON and a text table
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Evaluate alpha = 0, 0.1, ..., 1 and report the best
        #[arg(long)]
        sweep: bool,
        /// Evaluate on a seeded sample of this fraction of the users
        #[arg(long, value_name = "FRACTION")]
        subsample_users: Option<f64>,
        /// Ignore predefined splits and draw random folds
        #[arg(long)]
        random_folds: bool,
    },
    /// Complete the whole matrix and write `user,item,score,source`
    Complete {
        #[command(flatten)]
        common: Common,
    },
    /// Top-k unrated items for one user
    Recommend {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        user: String,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
    },
    /// Write a dense similarity matrix as CSV
    Similarity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "user")]
        axis: AxisArg,
    },
    /// Generate full-rank synthetic rating matrices
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[arg(long, default_value_t = 20)]
        rows: usize,
        #[arg(long, default_value_t = 30)]
        cols: usize,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Dataset path, or `ml-100k` / `ml-1m` under the data directory
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Directory holding named datasets [env: KOLMAC_DATA, default: ./data]
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Field delimiter for CSV input
    #[arg(long, default_value = ",")]
    delimiter: char,
    #[arg(long, value_enum, default_value = "ks")]
    measure: MeasureArg,
    #[arg(long, default_value_t = 0.5, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u32).range(0..=9))]
    compression_level: u32,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    folds: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads [default: available cores]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Output file (complete, recommend, similarity) or directory (evaluate, synth)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Normalize terms over all other users/items instead of only raters
    #[arg(long)]
    literal_denominator: bool,
    /// Reuse similarity matrices across runs
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Ml100k,
    Ml100kSplit,
    Ml1m,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MeasureArg {
    Ks,
    Cs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AxisArg {
    User,
    Item,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("alpha must be in [0, 1], got {v}"))
    }
}

impl Common {
    fn measure(&self) -> Measure {
        match self.measure {
            MeasureArg::Ks => Measure::Ks,
            MeasureArg::Cs => Measure::Cs,
        }
    }

    fn profile(&self) -> Result<CompressorProfile> {
        Ok(CompressorProfile::zlib(self.compression_level)?)
    }

    fn completion(&self) -> Result<CompletionConfig> {
        let mut cfg = CompletionConfig::new(self.alpha)?;
        cfg.literal_denominator = self.literal_denominator;
        Ok(cfg)
    }

    fn cache(&self) -> Option<SimilarityCache> {
        self.cache_dir.as_ref().map(SimilarityCache::new)
    }

    fn workers(&self) -> usize {
        self.workers.map(|w| w as usize).unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
    }

    fn data_dir(&self) -> PathBuf {
        self.data_dir
            .clone()
            .or_else(|| std::env::var_os("KOLMAC_DATA").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data"))
    }

    fn resolve_dataset(&self) -> Result<(PathBuf, DatasetFormat)> {
        let Some(name) = self.dataset.as_deref() else {
            bail!("--dataset is required");
        };
        let explicit = self.format.map(|f| match f {
            FormatArg::Ml100k => DatasetFormat::Ml100kData,
            FormatArg::Ml100kSplit => DatasetFormat::Ml100kSplit,
            FormatArg::Ml1m => DatasetFormat::Ml1m,
            FormatArg::Csv => DatasetFormat::Csv,
        });
        let (path, inferred) = match name {
            "ml-100k" | "ml100k" => (self.data_dir().join("ml-100k"), DatasetFormat::Ml100kSplit),
            "ml-1m" | "ml1m" => (self.data_dir().join("ml-1m").join("ratings.dat"), DatasetFormat::Ml1m),
            other => {
                let path = PathBuf::from(other);
                let format = if path.is_dir() {
                    DatasetFormat::Ml100kSplit
                } else {
                    match path.extension().and_then(|e| e.to_str()) {
                        Some("dat") => DatasetFormat::Ml1m,
                        Some("csv") | Some("tsv") => DatasetFormat::Csv,
                        _ => DatasetFormat::Ml100kData,
                    }
                };
                (path, format)
            }
        };
        Ok((path, explicit.unwrap_or(inferred)))
    }

    fn load(&self) -> Result<Dataset> {
        let (path, format) = self.resolve_dataset()?;
        if !path.exists() {
            bail!("dataset not found: {}", path.display());
        }
        let delimiter = u8::try_from(self.delimiter).context("--delimiter must be a single byte")?;
        let csv = CsvOptions {
            delimiter,
            ..CsvOptions::default()
        };
        let mut ds = load_dataset(&path, format, &csv)
            .with_context(|| format!("loading {} as {format}", path.display()))?;
        if let Some(name) = &self.dataset {
            if !Path::new(name).exists() {
                ds.name = name.clone();
            }
        }
        Ok(ds)
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(
                fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
            ),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn evaluate(common: &Common, sweep: bool, subsample: Option<f64>, random_folds: bool) -> Result<()> {
    let mut dataset = common.load()?;
    if let Some(fraction) = subsample {
        dataset = dataset.subsample_users(fraction, common.seed)?;
    }
    let k = common.folds as usize;
    let (folds, source) = match dataset.folds.take() {
        Some(f) if !random_folds && f.k() == k => {
            let name = format!("{}-predefined", dataset.name);
            (f, FoldSource::Predefined { name })
        }
        _ => (
            split_folds(&dataset.matrix, k, common.seed)?,
            FoldSource::Random { seed: common.seed },
        ),
    };
    let options = EvaluationOptions {
        measure: common.measure(),
        profile: common.profile()?,
        completion: common.completion()?,
        cache: common.cache(),
    };
    let alphas = if sweep { alpha_grid() } else { vec![common.alpha] };
    let reports = cross_validate_sweep(&dataset.name, &dataset.matrix, &folds, &source, &alphas, &options)?;
    let best = best_alpha(&reports).expect("at least one alpha");

    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("report.json"), best.to_json()? + "\n")?;
    if sweep {
        fs::write(out.join("sweep.json"), serde_json::to_string_pretty(&reports)? + "\n")?;
    }
    let table = render_table(if sweep { &reports } else { std::slice::from_ref(best) });
    fs::write(out.join("report.txt"), &table)?;
    print!("{table}");
    println!(
        "best: {} alpha={:.2} mean RMSE {:.4} -> {}",
        best.measure,
        best.alpha,
        best.mean_rmse,
        out.join("report.json").display()
    );
    Ok(())
}

fn model_inputs(
    common: &Common,
    dataset: &Dataset,
) -> Result<(kolmac::similarity::SimilarityMatrix, kolmac::similarity::SimilarityMatrix)> {
    let compressor = Compressor::new(common.profile()?);
    let cache = common.cache();
    let user = build_similarity_cached(&dataset.matrix, Axis::User, common.measure(), &compressor, cache.as_ref())?;
    let item = build_similarity_cached(&dataset.matrix, Axis::Item, common.measure(), &compressor, cache.as_ref())?;
    Ok((user, item))
}

fn complete(common: &Common) -> Result<()> {
    let dataset = common.load()?;
    let (user, item) = model_inputs(common, &dataset)?;
    let model = CompletionModel::new(&dataset.matrix, &user, &item, common.completion()?)?;
    model
        .complete_matrix()
        .write_csv(&dataset.users, &dataset.items, common.writer()?)?;
    Ok(())
}

fn recommend(common: &Common, user_id: &str, top_k: usize) -> Result<()> {
    let dataset = common.load()?;
    let Some(u) = dataset.users.index_of(user_id) else {
        bail!("unknown user '{user_id}'");
    };
    let (user, item) = model_inputs(common, &dataset)?;
    let model = CompletionModel::new(&dataset.matrix, &user, &item, common.completion()?)?;
    let mut out = common.writer()?;
    writeln!(out, "rank,item,score,source")?;
    for (rank, (o, p)) in model.recommend(u, top_k).into_iter().enumerate() {
        writeln!(out, "{},{},{},{}", rank + 1, dataset.items.id_of(o), p.score, p.source)?;
    }
    out.flush()?;
    Ok(())
}

fn similarity(common: &Common, axis: AxisArg) -> Result<()> {
    let dataset = common.load()?;
    let (axis, ids) = match axis {
        AxisArg::User => (Axis::User, &dataset.users),
        AxisArg::Item => (Axis::Item, &dataset.items),
    };
    let compressor = Compressor::new(common.profile()?);
    let sim = build_similarity_cached(&dataset.matrix, axis, common.measure(), &compressor, common.cache().as_ref())?;
    sim.write_csv(ids, common.writer()?)?;
    Ok(())
}

fn synth(common: &Common, count: usize, rows: usize, cols: usize) -> Result<()> {
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("synthetic"));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut entries = Vec::new();
    for i in 0..count {
        let seed = common.seed.wrapping_add(i as u64);
        let matrix = generate_synthetic(rows, cols, RatingScale::FIVE_STAR, seed)?;
        let rank = numerical_rank(&matrix);
        let file = format!("synthetic_{}.csv", i + 1);
        write_triplets_csv(&Dataset::from_matrix(file.clone(), matrix), out.join(&file))?;
        entries.push(serde_json::json!({ "file": file, "seed": seed, "rank": rank }));
    }
    let manifest = serde_json::json!({
        "rows": rows,
        "cols": cols,
        "scale": RatingScale::FIVE_STAR,
        "base_seed": common.seed,
        "matrices": entries,
    });
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("wrote {count} matrices to {}", out.display());
    Ok(())
}

fn run(command: Command) -> Result<()> {
    let common = match &command {
        Command::Evaluate { common, .. }
        | Command::Complete { common }
        | Command::Recommend { common, .. }
        | Command::Similarity { common, .. }
        | Command::Synth { common, .. } => common,
    };
    with_workers(common.workers(), || match &command {
        Command::Evaluate {
            common,
            sweep,
            subsample_users,
            random_folds,
        } => evaluate(common, *sweep, *subsample_users, *random_folds),
        Command::Complete { common } => complete(common),
        Command::Recommend { common, user, top_k } => recommend(common, user, *top_k),
        Command::Similarity { common, axis } => similarity(common, *axis),
        Command::Synth {
            common,
            count,
            rows,
            cols,
        } => synth(common, *count, *rows, *cols),
    })?
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
