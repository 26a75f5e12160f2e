//! Per-class exit thresholds from calibration records.
//!
//! A record passes threshold `theta` when `eta > theta`. Candidate
//! thresholds are `1.0` (passes nothing) and, for each distinct observed
//! score `s`, the largest double below `s` (passes every record scoring at
//! least `s`). A single descending sweep visits them all.

use super::CascadeError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationRecord {
    /// Predicted class.
    pub class: usize,
    /// Top-1 probability.
    pub eta: f64,
    pub correct: bool,
}

/// Passed-record counts at one candidate threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub theta: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Candidates in descending threshold order, starting with the sentinel.
pub fn candidates(records: &[CalibrationRecord]) -> Vec<Candidate> {
    let mut sorted: Vec<&CalibrationRecord> = records.iter().collect();
    sorted.sort_by(|a, b| b.eta.total_cmp(&a.eta));
    let mut out = vec![Candidate {
        theta: 1.0,
        n_pos: 0,
        n_neg: 0,
    }];
    let (mut pos, mut neg) = (0, 0);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].eta;
        while i < sorted.len() && sorted[i].eta == s {
            if sorted[i].correct {
                pos += 1;
            } else {
                neg += 1;
            }
            i += 1;
        }
        let theta = s.next_down();
        // scores above 1 cannot occur for probabilities; keep the order sane anyway
        if theta < out.last().expect("sentinel").theta {
            out.push(Candidate {
                theta,
                n_pos: pos,
                n_neg: neg,
            });
        } else {
            let last = out.last_mut().expect("sentinel");
            last.n_pos = pos;
            last.n_neg = neg;
        }
    }
    out
}

/// Precision of everything passed; an empty pass set counts as feasible.
pub fn baseline_feasible(c: &Candidate, p: f64) -> bool {
    let total = c.n_pos + c.n_neg;
    total == 0 || c.n_pos as f64 / total as f64 >= p
}

/// Precision of what is passed beyond the zero-error point, whose positive
/// count is `a`; `0 / 0` counts as feasible.
pub fn incremental_feasible(c: &Candidate, a: usize, q: f64) -> bool {
    let inc = c.n_pos as f64 - a as f64;
    let denom = inc + c.n_neg as f64;
    denom == 0.0 || inc / denom >= q
}

fn check_confidence(v: f64) -> Result<(), CascadeError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(CascadeError::InvalidConfidence(v))
    }
}

/// Feasible candidate with the most passed positives; ties go to the
/// larger threshold (the one reached first in the sweep).
fn best(cands: &[Candidate], feasible: impl Fn(&Candidate) -> bool) -> Candidate {
    let mut best = cands[0];
    for c in &cands[1..] {
        if c.n_pos > best.n_pos && feasible(c) {
            best = *c;
        }
    }
    best
}

/// Outcome of calibrating one class at one stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassThreshold {
    pub theta: f64,
    /// Lowest threshold that passes no negative record.
    pub theta_p1: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl ClassThreshold {
    /// For a class without calibration records.
    pub const UNSEEN: Self = Self {
        theta: 1.0,
        theta_p1: 1.0,
        n_pos: 0,
        n_neg: 0,
    };
}

/// Sweeps down from the sentinel and stops before the first group that
/// contains a negative record.
pub fn zero_error_threshold(cands: &[Candidate]) -> Candidate {
    let mut last = cands[0];
    for c in &cands[1..] {
        if c.n_neg > 0 {
            break;
        }
        last = *c;
    }
    last
}

fn per_class(
    records: &[CalibrationRecord],
    class_count: usize,
    pick: impl Fn(&[Candidate], Candidate) -> Candidate,
) -> Vec<ClassThreshold> {
    let mut by_class: Vec<Vec<CalibrationRecord>> = vec![Vec::new(); class_count];
    for r in records {
        if r.class < class_count {
            by_class[r.class].push(*r);
        }
    }
    by_class
        .iter()
        .map(|rs| {
            if rs.is_empty() {
                return ClassThreshold::UNSEEN;
            }
            let cands = candidates(rs);
            let p1 = zero_error_threshold(&cands);
            let c = pick(&cands, p1);
            ClassThreshold {
                theta: c.theta,
                theta_p1: p1.theta,
                n_pos: c.n_pos,
                n_neg: c.n_neg,
            }
        })
        .collect()
}

/// Maximizes passed positives subject to `N+ / (N+ + N-) >= p`.
pub fn calibrate_baseline(
    records: &[CalibrationRecord],
    class_count: usize,
    p: f64,
) -> Result<Vec<ClassThreshold>, CascadeError> {
    check_confidence(p)?;
    Ok(per_class(records, class_count, |cands, _| best(cands, |c| baseline_feasible(c, p))))
}

/// Maximizes passed positives subject to `(N+ - A) / (N+ - A + N-) >= q`,
/// where `A` is the positive count at the zero-error threshold.
pub fn calibrate_incremental(
    records: &[CalibrationRecord],
    class_count: usize,
    q: f64,
) -> Result<Vec<ClassThreshold>, CascadeError> {
    check_confidence(q)?;
    Ok(per_class(records, class_count, |cands, p1| {
        best(cands, |c| incremental_feasible(c, p1.n_pos, q))
    }))
}
