use serde::Serialize;

use super::CascadeError;

/// Mean per-sample inference time of a three-stage cascade:
/// `T1 + (1 - l1) T2 + (1 - l1 - l2) T3`.
pub fn mean_time(t1: f64, t2: f64, t3: f64, l1: f64, l2: f64) -> Result<f64, CascadeError> {
    check_rates(l1, l2)?;
    if [t1, t2, t3].iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(CascadeError::InvalidTime);
    }
    Ok(t1 + (1.0 - l1) * t2 + (1.0 - l1 - l2) * t3)
}

/// Same accounting when a stage may be skipped. Stage 2's cost is split
/// into the shared trunk (always paid before stage 3) and its own head.
pub fn ablation_mean_time(
    t1: f64,
    trunk: f64,
    s2_tail: f64,
    s3_tail: f64,
    l1: f64,
    l2: f64,
    use_stage1: bool,
    use_stage2: bool,
) -> Result<f64, CascadeError> {
    check_rates(l1, l2)?;
    let s1 = if use_stage1 { t1 } else { 0.0 };
    let s2 = if use_stage2 { s2_tail } else { 0.0 };
    Ok(s1 + (1.0 - l1) * (trunk + s2) + (1.0 - l1 - l2) * s3_tail)
}

fn check_rates(l1: f64, l2: f64) -> Result<(), CascadeError> {
    // counts divided by a total can overshoot 1 by an ulp
    if l1 >= 0.0 && l2 >= 0.0 && l1 + l2 <= 1.0 + 1e-12 {
        Ok(())
    } else {
        Err(CascadeError::InvalidRates(l1, l2))
    }
}

/// Per-sample mean times in seconds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingReport {
    pub mode: String,
    pub samples: usize,
    /// Stage-1 input transform and forward pass.
    pub t1: f64,
    /// Shared trunk plus stage-2 head.
    pub t2: f64,
    /// Stage-3 layers after the shared trunk.
    pub t3: f64,
    pub trunk: f64,
    pub stage2_tail: f64,
    /// Stage 3 run on its own (trunk plus its tail).
    pub stage3_alone: f64,
    /// Pass rates observed on the timed samples.
    pub lambda1: f64,
    pub lambda2: f64,
    /// Formula value from the times and pass rates above.
    pub t_mean: f64,
    /// Measured mean of the end-to-end early-exit inference.
    pub measured_mean: f64,
}

impl TimingReport {
    pub fn formula_relative_error(&self) -> f64 {
        (self.t_mean - self.measured_mean).abs() / self.measured_mean
    }
}
