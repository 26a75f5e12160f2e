use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::datasets::SampleSource;
use crate::models::{CascadeBundle, Prediction};
use crate::nn::{Mode, Tensor};

use super::timing::{ablation_mean_time, TimingReport};
use super::{CalibrationRecord, CascadeError, ThresholdTable};

/// The stage at which a sample leaves the cascade.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard];

    pub fn from_stage(stage: usize) -> Self {
        match stage {
            1 => Difficulty::Easy,
            2 => Difficulty::Moderate,
            _ => Difficulty::Hard,
        }
    }

    pub fn stage(self) -> usize {
        self as usize + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Moderate => "moderate",
            Difficulty::Hard => "hard",
        }
    }
}

/// Which early-exit stages are active. Stage 3 always runs for samples
/// that reach it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CascadeOptions {
    pub use_stage1: bool,
    pub use_stage2: bool,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        Self {
            use_stage1: true,
            use_stage2: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CascadeOutput {
    pub label: usize,
    pub exit: Difficulty,
    /// Top-1 probability of the emitting stage.
    pub eta: f32,
}

fn shape_check(bundle: &CascadeBundle, table: &ThresholdTable, len: usize) -> Result<(), CascadeError> {
    let want: usize = bundle.stage2.spec().input_shape.iter().product();
    if len != want {
        return Err(CascadeError::VariantMismatch(format!(
            "sample has {len} values, stage 2 expects {:?}",
            bundle.stage2.spec().input_shape
        )));
    }
    if table.class_count() != bundle.class_count {
        return Err(CascadeError::VariantMismatch(format!(
            "thresholds cover {} classes, bundle predicts {}",
            table.class_count(),
            bundle.class_count
        )));
    }
    Ok(())
}

/// `[channels, r, r, r]` of the full-resolution input.
fn volume_layout(bundle: &CascadeBundle) -> ([usize; 3], usize) {
    let s = &bundle.stage2.spec().input_shape;
    ([s[3], s[2], s[1]], s[0])
}

fn batch1(shape: &[usize], data: Vec<f32>) -> Result<Tensor, CascadeError> {
    let mut full = vec![1];
    full.extend_from_slice(shape);
    Ok(Tensor::from_vec(&full, data)?)
}

fn stage1_prediction(bundle: &mut CascadeBundle, sample: &[f32]) -> Result<Prediction, CascadeError> {
    let (dims, channels) = volume_layout(bundle);
    let len = bundle.stage1_input.output_len(dims, channels)?;
    let mut input = vec![0.0f32; len];
    bundle.stage1_input.apply(sample, dims, channels, &mut input);
    let shape = bundle.stage1.spec().input_shape.clone();
    let x = batch1(&shape, input).map_err(|_| {
        CascadeError::VariantMismatch(format!("stage-1 input of {len} values does not fit {shape:?}"))
    })?;
    Ok(Prediction::from_logits(bundle.stage1_logits(&x)?.data()))
}

fn trunk_features(bundle: &mut CascadeBundle, sample: &[f32]) -> Result<Tensor, CascadeError> {
    let shape = bundle.stage2.spec().input_shape.clone();
    let x = batch1(&shape, sample.to_vec())?;
    Ok(bundle.trunk(&x)?)
}

/// Classifies one full-resolution sample, leaving at the first active
/// stage whose top-1 probability beats that class's threshold.
pub fn cascade_infer(
    bundle: &mut CascadeBundle,
    table: &ThresholdTable,
    sample: &[f32],
    opts: CascadeOptions,
) -> Result<CascadeOutput, CascadeError> {
    shape_check(bundle, table, sample.len())?;
    if opts.use_stage1 {
        let p = stage1_prediction(bundle, sample)?;
        if table.passes(1, p.class, p.eta) {
            return Ok(CascadeOutput {
                label: p.class,
                exit: Difficulty::Easy,
                eta: p.eta,
            });
        }
    }
    let trunk = trunk_features(bundle, sample)?;
    if opts.use_stage2 {
        let p = Prediction::from_logits(bundle.stage2_tail(&trunk)?.data());
        if table.passes(2, p.class, p.eta) {
            return Ok(CascadeOutput {
                label: p.class,
                exit: Difficulty::Moderate,
                eta: p.eta,
            });
        }
    }
    let p = Prediction::from_logits(bundle.stage3_tail(&trunk)?.data());
    Ok(CascadeOutput {
        label: p.class,
        exit: Difficulty::Hard,
        eta: p.eta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageVote {
    pub class: usize,
    pub eta: f32,
}

/// Every stage's batch-1 prediction for every sample of a set, so
/// thresholds can be calibrated and replayed without rerunning networks.
#[derive(Clone, Debug, PartialEq)]
pub struct StagePredictions {
    pub labels: Vec<usize>,
    pub stages: [Vec<StageVote>; 3],
    pub class_count: usize,
}

impl StagePredictions {
    pub fn compute<S: SampleSource + ?Sized>(bundle: &CascadeBundle, source: &S) -> Result<Self, CascadeError> {
        let want: usize = bundle.stage2.spec().input_shape.iter().product();
        if source.sample_len() != want {
            return Err(CascadeError::VariantMismatch(format!(
                "samples have {} values, stage 2 expects {:?}",
                source.sample_len(),
                bundle.stage2.spec().input_shape
            )));
        }
        let rows: Vec<(usize, [StageVote; 3])> = (0..source.len())
            .into_par_iter()
            .map_init(
                || (bundle.clone(), vec![0.0f32; want]),
                |(b, raw), i| {
                    let label = source.fetch(i, raw)? as usize;
                    let vote = |p: Prediction| StageVote {
                        class: p.class,
                        eta: p.eta,
                    };
                    let s1 = vote(stage1_prediction(b, raw)?);
                    let trunk = trunk_features(b, raw)?;
                    let s2 = vote(Prediction::from_logits(b.stage2_tail(&trunk)?.data()));
                    let s3 = vote(Prediction::from_logits(b.stage3_tail(&trunk)?.data()));
                    Ok((label, [s1, s2, s3]))
                },
            )
            .collect::<Result<_, CascadeError>>()?;
        let mut out = Self {
            labels: Vec::with_capacity(rows.len()),
            stages: [Vec::new(), Vec::new(), Vec::new()],
            class_count: bundle.class_count,
        };
        for (label, votes) in rows {
            out.labels.push(label);
            for (s, v) in out.stages.iter_mut().zip(votes) {
                s.push(v);
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Calibration records of stage 1, 2 or 3.
    pub fn records(&self, stage: usize) -> Vec<CalibrationRecord> {
        self.stages[stage - 1]
            .iter()
            .zip(&self.labels)
            .map(|(v, &y)| CalibrationRecord {
                class: v.class,
                eta: v.eta as f64,
                correct: v.class == y,
            })
            .collect()
    }

    /// Fraction of samples a single stage gets right.
    pub fn stage_accuracy(&self, stage: usize) -> f64 {
        let correct = self.stages[stage - 1]
            .iter()
            .zip(&self.labels)
            .filter(|(v, &y)| v.class == y)
            .count();
        correct as f64 / self.len().max(1) as f64
    }

    /// Applies thresholds offline, mirroring [`cascade_infer`].
    pub fn replay(&self, table: &ThresholdTable, opts: CascadeOptions) -> Result<CascadeStats, CascadeError> {
        if self.is_empty() {
            return Err(CascadeError::EmptyDataset);
        }
        let outputs: Vec<CascadeOutput> = (0..self.len())
            .map(|i| {
                let [s1, s2, s3] = [self.stages[0][i], self.stages[1][i], self.stages[2][i]];
                let (v, exit) = if opts.use_stage1 && table.passes(1, s1.class, s1.eta) {
                    (s1, Difficulty::Easy)
                } else if opts.use_stage2 && table.passes(2, s2.class, s2.eta) {
                    (s2, Difficulty::Moderate)
                } else {
                    (s3, Difficulty::Hard)
                };
                CascadeOutput {
                    label: v.class,
                    exit,
                    eta: v.eta,
                }
            })
            .collect();
        Ok(CascadeStats::from_outputs(&outputs, &self.labels, self.class_count, opts))
    }
}

/// Aggregate outcome of running the cascade over a labelled set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CascadeStats {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Samples leaving at stages 1, 2, 3.
    pub exits: [usize; 3],
    /// Correct samples among those leaving at each stage.
    pub exit_correct: [usize; 3],
    pub lambda1: f64,
    pub lambda2: f64,
    pub easy: usize,
    pub moderate: usize,
    pub hard: usize,
    /// `[easy, moderate, hard]` counts per true class.
    pub difficulty_by_class: Vec<[usize; 3]>,
    pub options: CascadeOptions,
    #[serde(skip)]
    pub tags: Vec<Difficulty>,
    #[serde(skip)]
    pub predicted: Vec<usize>,
}

impl CascadeStats {
    pub fn from_outputs(outputs: &[CascadeOutput], labels: &[usize], class_count: usize, opts: CascadeOptions) -> Self {
        let mut exits = [0; 3];
        let mut exit_correct = [0; 3];
        let mut by_class = vec![[0usize; 3]; class_count];
        for (o, &y) in outputs.iter().zip(labels) {
            let s = o.exit as usize;
            exits[s] += 1;
            if o.label == y {
                exit_correct[s] += 1;
            }
            if let Some(row) = by_class.get_mut(y) {
                row[s] += 1;
            }
        }
        let total = outputs.len();
        let correct: usize = exit_correct.iter().sum();
        let n = total.max(1) as f64;
        Self {
            total,
            correct,
            accuracy: correct as f64 / n,
            exits,
            exit_correct,
            lambda1: exits[0] as f64 / n,
            lambda2: exits[1] as f64 / n,
            easy: exits[0],
            moderate: exits[1],
            hard: exits[2],
            difficulty_by_class: by_class,
            options: opts,
            tags: outputs.iter().map(|o| o.exit).collect(),
            predicted: outputs.iter().map(|o| o.label).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimingMode {
    /// No timing pass.
    Off,
    /// One sample at a time on the calling thread.
    Sequential,
    /// Samples timed concurrently on the worker pool; faster, noisier.
    Parallel,
}

impl std::str::FromStr for TimingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "off" => Ok(Self::Off),
            "sequential" => Ok(Self::Sequential),
            "parallel" => Ok(Self::Parallel),
            _ => Err(format!("unknown timing mode {s:?}")),
        }
    }
}

impl TimingMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Off => "off",
            Self::Sequential => "sequential",
            Self::Parallel => "parallel",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimingConfig {
    pub mode: TimingMode,
    /// Timed samples are spread evenly over the set; `None` times all.
    pub max_samples: Option<usize>,
    /// Untimed runs before measuring.
    pub warmup: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            mode: TimingMode::Sequential,
            max_samples: None,
            warmup: 5,
        }
    }
}

#[derive(Clone, Copy, Default)]
struct SampleTimes {
    stage1: f64,
    trunk: f64,
    stage2_tail: f64,
    stage3_tail: f64,
    stage3_alone: f64,
    end_to_end: f64,
    exit: usize,
}

fn time_one(
    bundle: &mut CascadeBundle,
    table: &ThresholdTable,
    raw: &[f32],
    opts: CascadeOptions,
) -> Result<SampleTimes, CascadeError> {
    let t = Instant::now();
    let out = cascade_infer(bundle, table, raw, opts)?;
    let end_to_end = t.elapsed().as_secs_f64();

    let t = Instant::now();
    std::hint::black_box(stage1_prediction(bundle, raw)?);
    let stage1 = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let trunk_out = trunk_features(bundle, raw)?;
    let trunk = t.elapsed().as_secs_f64();

    let t = Instant::now();
    std::hint::black_box(Prediction::from_logits(bundle.stage2_tail(&trunk_out)?.data()));
    let stage2_tail = t.elapsed().as_secs_f64();

    let t = Instant::now();
    std::hint::black_box(Prediction::from_logits(bundle.stage3_tail(&trunk_out)?.data()));
    let stage3_tail = t.elapsed().as_secs_f64();

    let shape = bundle.stage3.spec().input_shape.clone();
    let t = Instant::now();
    let x = batch1(&shape, raw.to_vec())?;
    std::hint::black_box(Prediction::from_logits(bundle.stage3.forward(&x, Mode::Eval)?.data()));
    let stage3_alone = t.elapsed().as_secs_f64();

    Ok(SampleTimes {
        stage1,
        trunk,
        stage2_tail,
        stage3_tail,
        stage3_alone,
        end_to_end,
        exit: out.exit as usize,
    })
}

fn timing_pass<S: SampleSource + ?Sized>(
    bundle: &CascadeBundle,
    table: &ThresholdTable,
    source: &S,
    opts: CascadeOptions,
    cfg: &TimingConfig,
) -> Result<Option<TimingReport>, CascadeError> {
    let n = source.len();
    let count = cfg.max_samples.map_or(n, |m| m.min(n));
    if cfg.mode == TimingMode::Off || count == 0 {
        return Ok(None);
    }
    let indices: Vec<usize> = (0..count).map(|k| k * n / count).collect();
    let len = source.sample_len();
    let times: Vec<SampleTimes> = match cfg.mode {
        TimingMode::Sequential => {
            let mut b = bundle.clone();
            let mut raw = vec![0.0f32; len];
            for k in 0..cfg.warmup {
                source.fetch(indices[k % count], &mut raw)?;
                time_one(&mut b, table, &raw, opts)?;
            }
            let mut v = Vec::with_capacity(count);
            for &i in &indices {
                source.fetch(i, &mut raw)?;
                v.push(time_one(&mut b, table, &raw, opts)?);
            }
            v
        }
        _ => indices
            .par_iter()
            .map_init(
                || (bundle.clone(), vec![0.0f32; len]),
                |(b, raw), &i| {
                    source.fetch(i, raw)?;
                    time_one(b, table, raw, opts)
                },
            )
            .collect::<Result<_, CascadeError>>()?,
    };
    let m = count as f64;
    let mean = |f: fn(&SampleTimes) -> f64| times.iter().map(f).sum::<f64>() / m;
    let l1 = times.iter().filter(|t| t.exit == 0).count() as f64 / m;
    let l2 = times.iter().filter(|t| t.exit == 1).count() as f64 / m;
    let (t1, trunk, s2, s3) = (
        mean(|t| t.stage1),
        mean(|t| t.trunk),
        mean(|t| t.stage2_tail),
        mean(|t| t.stage3_tail),
    );
    let t_mean = ablation_mean_time(t1, trunk, s2, s3, l1, l2, opts.use_stage1, opts.use_stage2)?;
    Ok(Some(TimingReport {
        mode: cfg.mode.name().to_string(),
        samples: count,
        t1,
        t2: trunk + s2,
        t3: s3,
        trunk,
        stage2_tail: s2,
        stage3_alone: mean(|t| t.stage3_alone),
        lambda1: l1,
        lambda2: l2,
        t_mean,
        measured_mean: mean(|t| t.end_to_end),
    }))
}

/// Runs the cascade over every sample (in parallel), then optionally times
/// stage forwards and end-to-end inference on a spread of samples.
pub fn evaluate_cascade<S: SampleSource + ?Sized>(
    bundle: &CascadeBundle,
    table: &ThresholdTable,
    source: &S,
    opts: CascadeOptions,
    timing: &TimingConfig,
) -> Result<(CascadeStats, Option<TimingReport>), CascadeError> {
    if source.is_empty() {
        return Err(CascadeError::EmptyDataset);
    }
    shape_check(bundle, table, source.sample_len())?;
    let len = source.sample_len();
    let rows: Vec<(CascadeOutput, usize)> = (0..source.len())
        .into_par_iter()
        .map_init(
            || (bundle.clone(), vec![0.0f32; len]),
            |(b, raw), i| {
                let y = source.fetch(i, raw)? as usize;
                Ok((cascade_infer(b, table, raw, opts)?, y))
            },
        )
        .collect::<Result<_, CascadeError>>()?;
    let (outputs, labels): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let stats = CascadeStats::from_outputs(&outputs, &labels, bundle.class_count, opts);
    let report = timing_pass(bundle, table, source, opts, timing)?;
    Ok((stats, report))
}
