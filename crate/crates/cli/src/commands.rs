use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use icboost::metrics::auc;
use icboost::validation::{feature_importance, histogram, ks_test, ks_transform};
use icboost::{
    persist, synthetic, train_with, Dataset, EnsembleModel, Error, GrowthMode, LossKind, LossSpec,
    Result, TrainConfig,
};
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::{BenchmarkArgs, ImportanceArgs, PredictArgs, TrainArgs, TrainingFlags, ValidateArgs};

const HISTOGRAM_BINS: usize = 20;

impl TrainingFlags {
    fn loss(&self) -> Result<LossSpec> {
        LossSpec::new(self.loss, self.dispersion)
    }

    fn config(&self, mode: GrowthMode) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            mode,
            seed: self.seed,
            n_sim: self.nsim,
            max_iterations: self.max_iterations,
        }
    }
}

/// Attaches the offending path to I/O errors.
fn with_path<T>(path: &Path, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::Io(io) => Error::Io(io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    })
}

fn read_csv(path: &Path, target: Option<&str>) -> Result<Dataset> {
    with_path(path, Dataset::from_csv_path(path, target))
}

fn load_model(path: &Path) -> Result<EnsembleModel> {
    with_path(path, persist::load_path(path))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    with_path(
        path,
        File::create(path).map(BufWriter::new).map_err(Error::from),
    )
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `x` rounded to `digits` significant digits, trailing zeros removed.
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&magnitude) {
        return format!("{:.*e}", digits - 1, x);
    }
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn train(args: TrainArgs) -> Result<()> {
    let loss = args.training.loss()?;
    let config = args.training.config(args.algorithm_mode());
    config.validate()?;
    let data = read_csv(&args.data, Some(&args.target))?;
    let period = args.verbose;
    let model = train_with(&data, loss, &config, |rec| {
        if period > 0 && (rec.iteration == 1 || rec.iteration % period == 0) {
            println!(
                "it: {} | n-leaves: {} | tr loss: {:.4} | gen loss: {:.4}",
                rec.iteration, rec.leaves, rec.train_loss, rec.gen_loss
            );
        }
    })?;
    with_path(&args.out, persist::save_path(&model, &args.out))?;
    if let Some(path) = &args.log {
        let mut w = create(path)?;
        writeln!(w, "iteration,leaves,train_loss,gen_loss")?;
        for rec in &model.log {
            writeln!(
                w,
                "{},{},{:?},{:?}",
                rec.iteration, rec.leaves, rec.train_loss, rec.gen_loss
            )?;
        }
        w.flush()?;
    }
    Ok(())
}

impl TrainArgs {
    fn algorithm_mode(&self) -> GrowthMode {
        self.training.algorithm.into()
    }
}

/// Features of `path` in model order: the target column is dropped when named,
/// and columns are reordered by name when they are exactly the model's features.
fn features_for(model: &EnsembleModel, path: &Path, target: Option<&str>) -> Result<Dataset> {
    let data = read_csv(path, target)?;
    let names = data.names();
    let by_name: Option<Vec<usize>> = model
        .feature_names
        .iter()
        .map(|n| names.iter().position(|h| h == n))
        .collect();
    match by_name {
        Some(idx) if idx.len() == names.len() && idx.iter().enumerate().any(|(i, &j)| i != j) => {
            let columns = idx.iter().map(|&j| data.column(j).to_vec()).collect();
            if data.has_response() {
                Dataset::with_names(
                    model.feature_names.clone(),
                    columns,
                    data.response().to_vec(),
                )
            } else {
                Dataset::features_only(model.feature_names.clone(), columns)
            }
        }
        _ => Ok(data),
    }
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let data = features_for(&model, &args.data, args.target.as_deref())?;
    let predictions = if args.response_scale {
        model.predict_response(&data)?
    } else {
        model.predict(&data)?
    };
    let mut w = output(args.out.as_deref())?;
    writeln!(w, "prediction")?;
    for p in predictions {
        writeln!(w, "{p:?}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn validate(args: ValidateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let data = features_for(&model, &args.data, Some(&args.target))?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(args.seed);
    let transform = ks_transform(&model, &data, &mut rng)?;
    let ks = ks_test(&transform.u)?;
    println!("{}", model.loss.kind().family());
    println!("One-sample Kolmogorov-Smirnov test");
    println!(
        "D = {}, p-value = {}",
        significant(ks.statistic, 6),
        significant(ks.p_value, 6)
    );
    if let Some(n) = transform.nuisance {
        println!("{} = {}", n.name, significant(n.value, 6));
    }
    if let Some(path) = &args.hist {
        let mut w = create(path)?;
        writeln!(w, "lower,upper,count")?;
        for (b, count) in histogram(&transform.u, HISTOGRAM_BINS).iter().enumerate() {
            let width = 1.0 / HISTOGRAM_BINS as f64;
            writeln!(w, "{},{},{count}", b as f64 * width, (b + 1) as f64 * width)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn importance(args: ImportanceArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let mut names = model.feature_names.clone();
    if let Some(path) = &args.names {
        let text = with_path(path, std::fs::read_to_string(path).map_err(Error::from))?;
        let given: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        if given.len() != names.len() {
            return Err(Error::Arity {
                expected: names.len(),
                actual: given.len(),
            });
        }
        names = given;
    }
    let imp = feature_importance(&model);
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| imp.shares[b].total_cmp(&imp.shares[a]).then(a.cmp(&b)));
    let mut w = output(args.out.as_deref())?;
    writeln!(w, "feature,raw,share")?;
    for j in order {
        writeln!(w, "{},{:?},{:?}", names[j], imp.raw[j], imp.shares[j])?;
    }
    w.flush()?;
    Ok(())
}

pub fn benchmark(args: BenchmarkArgs) -> Result<()> {
    let loss = args.training.loss()?;
    let report_auc = loss.kind() == LossKind::Logloss;
    if args.auc && !report_auc {
        return Err(Error::Config(format!(
            "AUC needs a binary task, but the loss is {}",
            loss.kind()
        )));
    }
    let (train_set, test_set) = match (&args.train, &args.test) {
        (Some(tr), Some(te)) => (
            read_csv(tr, Some(&args.target))?,
            read_csv(te, Some(&args.target))?,
        ),
        _ => {
            let all = match loss.kind() {
                LossKind::Logloss => {
                    synthetic::binary(args.n + args.n_test, args.features, args.training.seed)
                }
                LossKind::Mse => synthetic::additive_first_feature(
                    args.n + args.n_test,
                    args.features.max(1),
                    args.training.seed,
                ),
                other => {
                    return Err(Error::Config(format!(
                        "no synthetic generator for {other}; pass --train and --test"
                    )))
                }
            };
            (
                all.slice_rows(0, args.n),
                all.slice_rows(args.n, args.n + args.n_test),
            )
        }
    };

    println!(
        "{:<14} {:>8} {:>8} {:>9} {:>7} {:>8} {:>9}",
        "Algorithm", "Loss", "AUC", "Time", "#trees", "#leaves", "#features"
    );
    for mode in [GrowthMode::Vanilla, GrowthMode::GlobalSubset] {
        let config = args.training.config(mode);
        config.validate()?;
        let start = Instant::now();
        let model = train_with(&train_set, loss, &config, |_| {})?;
        let seconds = start.elapsed().as_secs_f64();
        let f = model.predict(&test_set)?;
        let test_loss = loss.mean_loss(test_set.response(), &f)?;
        let auc_cell = if report_auc {
            format!(
                "{:.4}",
                auc(&model.predict_response(&test_set)?, test_set.response())?
            )
        } else {
            "-".to_string()
        };
        let leaves: usize = model.trees.iter().map(|t| t.n_leaves()).sum();
        let mut used: Vec<usize> = model
            .trees
            .iter()
            .flat_map(|t| t.internal_nodes().map(|(j, _, _)| j))
            .collect();
        used.sort_unstable();
        used.dedup();
        println!(
            "{:<14} {:>8.4} {:>8} {:>9.3} {:>7} {:>8} {:>9}",
            mode.name(),
            test_loss,
            auc_cell,
            seconds,
            model.trees.len(),
            leaves,
            used.len()
        );
    }
    Ok(())
}
