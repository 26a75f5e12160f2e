use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use voxcade::cascade::{
    confidence_grid_search, evaluate_cascade, CascadeOptions, CascadeStats, Rule, StagePredictions, ThresholdTable,
    TimingConfig, TimingMode, TimingReport,
};
use voxcade::datasets::{DatasetReader, SampleSource, SplitReader};
use voxcade::models::{CascadeBundle, InputTransform, BUNDLE_FILE};
use voxcade::nn::{count_params_flops, Mode, ModelCheckpoint, Tensor};

use crate::config::write_resolved;
use crate::error::CliError;
use crate::train_cmd::MODEL_FILE;

#[derive(Args, Debug, Serialize)]
pub struct BundleArgs {
    /// A bundle directory, or three comma-separated stage checkpoints (or
    /// training output directories) in stage order.
    #[arg(long)]
    pub bundle: String,
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
}

fn checkpoint_path(p: &str) -> PathBuf {
    let p = PathBuf::from(p.trim());
    if p.is_dir() {
        p.join(MODEL_FILE)
    } else {
        p
    }
}

pub fn load_bundle(spec: &str) -> Result<CascadeBundle, CliError> {
    let parts: Vec<&str> = spec.split(',').collect();
    match parts.as_slice() {
        [dir] => {
            let dir = Path::new(dir.trim());
            if !dir.join(BUNDLE_FILE).is_file() {
                return Err(CliError::Io(format!("{} has no {BUNDLE_FILE}", dir.display())));
            }
            Ok(CascadeBundle::load(dir)?)
        }
        [a, b, c] => {
            let mut nets = Vec::new();
            let mut meta = Vec::new();
            for p in [a, b, c] {
                let path = checkpoint_path(p);
                if !path.is_file() {
                    return Err(CliError::Io(format!("{} does not exist", path.display())));
                }
                let ck = ModelCheckpoint::load(&path)?;
                nets.push(ck.to_network()?);
                meta.push(ck.metadata);
            }
            let transform = match meta[0].get("input_transform") {
                Some(t) => InputTransform::parse(t)?,
                None => InputTransform::Downsample { target: 8 },
            };
            let variant = meta[1].get("variant").cloned().unwrap_or_default();
            let s3 = nets.pop().expect("three stages");
            let s2 = nets.pop().expect("three stages");
            let s1 = nets.pop().expect("three stages");
            Ok(CascadeBundle::new(s1, s2, s3, transform, &variant)?)
        }
        _ => Err(CliError::input("--bundle takes a directory or three checkpoints")),
    }
}

fn open_split(data: &Path, split: &str, bundle: &CascadeBundle) -> Result<SplitReader, CliError> {
    let reader = DatasetReader::open(data)?;
    let m = reader.manifest();
    if !bundle.variant.is_empty() && m.variant != bundle.variant {
        return Err(CliError::input(format!(
            "dataset variant {} does not match bundle variant {}",
            m.variant, bundle.variant
        )));
    }
    let src = reader.split(split)?;
    if src.is_empty() {
        return Err(CliError::input(format!("split {split} of {} is empty", data.display())));
    }
    Ok(src)
}

fn parse_rule(token: &str, mode: &str) -> Result<Rule, CliError> {
    let t = token.trim();
    if t.contains('=') {
        return t.parse().map_err(|e: voxcade::cascade::CascadeError| CliError::input(e.to_string()));
    }
    let v: f64 = t
        .parse()
        .map_err(|_| CliError::input(format!("bad confidence {t:?}")))?;
    Rule::from_parts(mode, v).map_err(|e| CliError::input(e.to_string()))
}

fn parse_pair(text: &str, mode: &str) -> Result<[Rule; 2], CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok([parse_rule(a, mode)?, parse_rule(b, mode)?]),
        _ => Err(CliError::input(format!("expected two confidences, got {text:?}"))),
    }
}

#[derive(Args, Debug, Serialize)]
pub struct CalibrateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub bundle: BundleArgs,
    /// p (baseline precision) or q (incremental precision).
    #[arg(long, default_value = "q")]
    pub mode: String,
    /// Stage-1 and stage-2 confidences, e.g. "0.8,0.66". Tokens such as
    /// "p=0.9" override --mode.
    #[arg(long, default_value = "0.8,0.66")]
    pub values: String,
    /// Confidence pairs to compare, separated by ';'.
    #[arg(long)]
    pub grid: Option<String>,
    /// Calibrate on the test split instead of val. Reported results are
    /// then optimistic.
    #[arg(long)]
    pub calibrate_on_test: bool,
    /// Split on which grid pairs are evaluated.
    #[arg(long, default_value = "test")]
    pub eval_split: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct CalibrationSummary {
    calibration_split: String,
    optimistic: bool,
    rules: [String; 2],
    calibration_samples: usize,
    calibration_stats: CascadeStats,
    grid_best: Option<[String; 2]>,
}

pub fn calibrate(a: &CalibrateArgs) -> Result<(), CliError> {
    if a.mode != "p" && a.mode != "q" {
        return Err(CliError::input("--mode must be p or q"));
    }
    let rules = parse_pair(&a.values, &a.mode)?;
    let grid: Option<Vec<[Rule; 2]>> = match &a.grid {
        Some(g) => {
            let pairs: Vec<&str> = g.split(';').map(str::trim).filter(|s| !s.is_empty()).collect();
            if pairs.is_empty() {
                return Err(CliError::input("--grid is empty"));
            }
            Some(pairs.iter().map(|p| parse_pair(p, &a.mode)).collect::<Result<_, _>>()?)
        }
        None => None,
    };
    let bundle = load_bundle(&a.bundle.bundle)?;
    let cal_split = if a.calibrate_on_test { "test" } else { "val" };
    let cal_src = open_split(&a.bundle.data, cal_split, &bundle)?;
    let cal = StagePredictions::compute(&bundle, &cal_src)?;
    let table = ThresholdTable::calibrate(&cal.records(1), &cal.records(2), bundle.class_count, rules)?;
    std::fs::create_dir_all(&a.out)?;
    std::fs::write(a.out.join("thresholds.txt"), table.to_text())?;
    let mut grid_best = None;
    if let Some(grid) = grid {
        let eval = if a.eval_split == cal_split {
            cal.clone()
        } else {
            StagePredictions::compute(&bundle, &open_split(&a.bundle.data, &a.eval_split, &bundle)?)?
        };
        let result = confidence_grid_search(&cal, &eval, &grid)?;
        std::fs::write(a.out.join("grid.csv"), result.to_csv())?;
        let best = result.best_cell();
        std::fs::write(a.out.join("grid_best_thresholds.txt"), best.table.to_text())?;
        grid_best = Some([best.rules[0].to_string(), best.rules[1].to_string()]);
        print!("{}", result.to_csv());
    }
    let summary = CalibrationSummary {
        calibration_split: cal_split.to_string(),
        optimistic: a.calibrate_on_test,
        rules: [rules[0].to_string(), rules[1].to_string()],
        calibration_samples: cal.len(),
        calibration_stats: cal.replay(&table, CascadeOptions::default())?,
        grid_best,
    };
    std::fs::write(a.out.join("calibration.json"), serde_json::to_string_pretty(&summary)?)?;
    write_resolved(a, "calibrate", &a.out.join("config.txt"))?;
    if a.calibrate_on_test {
        println!("note: thresholds were calibrated on the test split; accuracy on it is optimistic");
    }
    println!("thresholds written to {}", a.out.join("thresholds.txt").display());
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub bundle: BundleArgs,
    /// Threshold table from `calibrate`.
    #[arg(long)]
    pub thresholds: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// sequential, parallel or off.
    #[arg(long, default_value = "sequential")]
    pub timing: String,
    /// Time at most this many samples, spread over the split.
    #[arg(long)]
    pub timing_samples: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub warmup: usize,
    /// Also report each stage's standalone accuracy.
    #[arg(long)]
    pub stage_accuracy: bool,
    /// JSON report path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct AblateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub eval: EvalArgs,
    /// stage1 or stage2.
    #[arg(long)]
    pub remove: String,
}

#[derive(Serialize)]
struct EvalReport {
    split: String,
    samples: usize,
    accuracy: f64,
    lambda1: f64,
    lambda2: f64,
    stats: CascadeStats,
    stage_accuracy: Option<[f64; 3]>,
    timing: Option<TimingReport>,
}

fn run_eval(a: &EvalArgs, opts: CascadeOptions, reproducible: bool, command: &str) -> Result<(), CliError> {
    let mode: TimingMode = a.timing.parse().map_err(CliError::input)?;
    let bundle = load_bundle(&a.bundle.bundle)?;
    let text = std::fs::read_to_string(&a.thresholds)
        .map_err(|e| CliError::Io(format!("{}: {e}", a.thresholds.display())))?;
    let table = ThresholdTable::parse(&text)?;
    let src = open_split(&a.bundle.data, &a.split, &bundle)?;
    let timing = TimingConfig {
        mode,
        max_samples: a.timing_samples,
        warmup: a.warmup,
    };
    let (stats, report) = evaluate_cascade(&bundle, &table, &src, opts, &timing)?;
    let stage_accuracy = if a.stage_accuracy {
        let p = StagePredictions::compute(&bundle, &src)?;
        Some([p.stage_accuracy(1), p.stage_accuracy(2), p.stage_accuracy(3)])
    } else {
        None
    };
    let out = EvalReport {
        split: a.split.clone(),
        samples: stats.total,
        accuracy: stats.accuracy,
        lambda1: stats.lambda1,
        lambda2: stats.lambda2,
        stats,
        stage_accuracy,
        timing: if reproducible { None } else { report },
    };
    let json = serde_json::to_string_pretty(&out)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&a.out, &json)?;
    write_resolved(a, command, &a.out.with_extension("config.txt"))?;
    println!("{json}");
    Ok(())
}

pub fn eval(a: &EvalArgs, reproducible: bool) -> Result<(), CliError> {
    run_eval(a, CascadeOptions::default(), reproducible, "eval")
}

pub fn ablate(a: &AblateArgs, reproducible: bool) -> Result<(), CliError> {
    let opts = match a.remove.as_str() {
        "stage1" => CascadeOptions {
            use_stage1: false,
            use_stage2: true,
        },
        "stage2" => CascadeOptions {
            use_stage1: true,
            use_stage2: false,
        },
        other => return Err(CliError::input(format!("--remove takes stage1 or stage2, got {other:?}"))),
    };
    run_eval(&a.eval, opts, reproducible, "ablate")?;
    write_resolved(a, "ablate", &a.eval.out.with_extension("config.txt"))
}

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub bundle: BundleArgs,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Timed passes over the sample set.
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    /// Samples per pass.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    /// CSV output path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct BenchRow {
    component: &'static str,
    params: u64,
    flops: u64,
    mean_s: Option<f64>,
    median_s: Option<f64>,
}

fn summarize(mut v: Vec<f64>) -> (f64, f64) {
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let mid = v.len() / 2;
    let median = if v.len().is_multiple_of(2) { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] };
    (mean, median)
}

pub fn bench(a: &BenchArgs, reproducible: bool) -> Result<(), CliError> {
    if a.repeat == 0 || a.samples == 0 {
        return Err(CliError::input("--repeat and --samples must be at least 1"));
    }
    let mut bundle = load_bundle(&a.bundle.bundle)?;
    let src = open_split(&a.bundle.data, &a.split, &bundle)?;
    let n = a.samples.min(src.len());
    let (dims, channels) = (src.dims(), src.channels());
    let mut raws = Vec::with_capacity(n);
    for k in 0..n {
        let mut raw = vec![0.0f32; src.sample_len()];
        src.fetch(k * src.len() / n, &mut raw)?;
        raws.push(raw);
    }
    let s1_shape = bundle.stage1.spec().input_shape.clone();
    let s2_shape = bundle.stage2.spec().input_shape.clone();
    let s1_len = bundle.stage1_input.output_len(dims, channels)?;
    let batch1 = |shape: &[usize], data: Vec<f32>| {
        let mut full = vec![1];
        full.extend_from_slice(shape);
        Tensor::from_vec(&full, data)
    };
    // times[i]: stage1, stage2, stage3 full, stage3 after the trunk
    let mut times: [Vec<f64>; 4] = Default::default();
    for rep in 0..=a.repeat {
        for raw in &raws {
            let mut s1_in = vec![0.0f32; s1_len];
            let t = Instant::now();
            bundle.stage1_input.apply(raw, dims, channels, &mut s1_in);
            std::hint::black_box(bundle.stage1_logits(&batch1(&s1_shape, s1_in)?)?);
            let d1 = t.elapsed().as_secs_f64();
            let t = Instant::now();
            std::hint::black_box(bundle.stage2.forward(&batch1(&s2_shape, raw.clone())?, Mode::Eval)?);
            let d2 = t.elapsed().as_secs_f64();
            let t = Instant::now();
            std::hint::black_box(bundle.stage3.forward(&batch1(&s2_shape, raw.clone())?, Mode::Eval)?);
            let d3 = t.elapsed().as_secs_f64();
            let trunk = bundle.trunk(&batch1(&s2_shape, raw.clone())?)?;
            let t = Instant::now();
            std::hint::black_box(bundle.stage3_tail(&trunk)?);
            let d4 = t.elapsed().as_secs_f64();
            // the first pass only warms caches
            if rep > 0 {
                for (v, d) in times.iter_mut().zip([d1, d2, d3, d4]) {
                    v.push(d);
                }
            }
        }
    }
    let c1 = count_params_flops(bundle.stage1.spec())?;
    let c2 = count_params_flops(bundle.stage2.spec())?;
    let c3 = count_params_flops(bundle.stage3.spec())?;
    let k = bundle.trunk_end();
    let c3m = bundle.stage3.spec().cost_of(k..bundle.stage3.num_layers())?;
    let names = ["stage1", "stage2", "stage3", "stage3_marginal"];
    let rows: Vec<BenchRow> = names
        .into_iter()
        .zip([c1, c2, c3, c3m])
        .zip(times)
        .map(|((component, c), t)| {
            let (mean, median) = summarize(t);
            BenchRow {
                component,
                params: c.params,
                flops: c.flops,
                mean_s: (!reproducible).then_some(mean),
                median_s: (!reproducible).then_some(median),
            }
        })
        .collect();
    let mut csv = String::from("component,params,flops,mean_s,median_s\n");
    let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.9}"));
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.component,
            r.params,
            r.flops,
            fmt(r.mean_s),
            fmt(r.median_s)
        ));
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&a.out, &csv)?;
    write_resolved(a, "bench", &a.out.with_extension("config.txt"))?;
    print!("{csv}");
    Ok(())
}
