//! Exhaustive-search reference for the threshold calibrators.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use voxcade::cascade::{calibrate_baseline, calibrate_incremental, CalibrationRecord};

pub fn random_records(rng: &mut ChaCha8Rng, n: usize, classes: usize) -> Vec<CalibrationRecord> {
    // coarse score grid so ties are common
    (0..n)
        .map(|_| CalibrationRecord {
            class: rng.random_range(0..classes),
            eta: (rng.random_range(1..=40) as f64) / 40.0,
            correct: rng.random_bool(0.75),
        })
        .collect()
}

pub fn counts(rs: &[&CalibrationRecord], theta: f64) -> (usize, usize) {
    let pass = rs.iter().filter(|r| r.eta > theta);
    let pos = pass.clone().filter(|r| r.correct).count();
    (pos, pass.count() - pos)
}

fn thresholds(rs: &[&CalibrationRecord]) -> Vec<f64> {
    let mut t: Vec<f64> = rs.iter().map(|r| r.eta.next_down()).collect();
    t.push(1.0);
    t.sort_by(|a, b| b.total_cmp(a));
    t.dedup();
    t
}

/// Most positives, ties to the larger threshold.
fn argmax(rs: &[&CalibrationRecord], ok: impl Fn(usize, usize) -> bool) -> (f64, usize, usize) {
    let mut best: Option<(f64, usize, usize)> = None;
    for t in thresholds(rs) {
        let (p, n) = counts(rs, t);
        if ok(p, n) && best.is_none_or(|b| p > b.1) {
            best = Some((t, p, n));
        }
    }
    best.expect("the sentinel is always feasible")
}

pub fn oracle_baseline(recs: &[CalibrationRecord], classes: usize, p: f64) -> Vec<(f64, usize, usize)> {
    (0..classes)
        .map(|c| {
            let rs: Vec<_> = recs.iter().filter(|r| r.class == c).collect();
            if rs.is_empty() {
                return (1.0, 0, 0);
            }
            argmax(&rs, |pos, neg| pos + neg == 0 || pos as f64 / (pos + neg) as f64 >= p)
        })
        .collect()
}

pub fn oracle_incremental(recs: &[CalibrationRecord], classes: usize, q: f64) -> Vec<(f64, usize, usize, f64)> {
    (0..classes)
        .map(|c| {
            let rs: Vec<_> = recs.iter().filter(|r| r.class == c).collect();
            if rs.is_empty() {
                return (1.0, 0, 0, 1.0);
            }
            let p1 = thresholds(&rs)
                .into_iter()
                .filter(|&t| counts(&rs, t).1 == 0)
                .fold(f64::INFINITY, f64::min);
            let a = counts(&rs, p1).0;
            let (t, pos, neg) = argmax(&rs, |pos, neg| {
                let inc = pos as f64 - a as f64;
                inc + neg as f64 == 0.0 || inc / (inc + neg as f64) >= q
            });
            (t, pos, neg, p1)
        })
        .collect()
}

/// One random instance: both calibrators against the oracle. Returns a
/// description of the first disagreement.
pub fn check_random_instance(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(10..=500);
    let classes = rng.random_range(2..=40);
    let recs = random_records(rng, n, classes);
    let conf = [0.5, 0.66, 0.8, 0.9, 0.95, 1.0][rng.random_range(0..6)];
    let got: Vec<_> = calibrate_baseline(&recs, classes, conf)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|t| (t.theta, t.n_pos, t.n_neg))
        .collect();
    if got != oracle_baseline(&recs, classes, conf) {
        return Err(format!("baseline differs (n={n}, classes={classes}, p={conf})"));
    }
    let got: Vec<_> = calibrate_incremental(&recs, classes, conf)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|t| (t.theta, t.n_pos, t.n_neg, t.theta_p1))
        .collect();
    if got != oracle_incremental(&recs, classes, conf) {
        return Err(format!("incremental differs (n={n}, classes={classes}, q={conf})"));
    }
    Ok(())
}
