use std::fmt;
use std::str::FromStr;

use super::calibrate::{calibrate_baseline, calibrate_incremental, CalibrationRecord, ClassThreshold};
use super::CascadeError;

/// How one stage's thresholds were chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rule {
    /// Precision of all passed samples at least `p`.
    Baseline(f64),
    /// Precision of samples passed beyond the zero-error threshold at least `q`.
    Incremental(f64),
    /// The same threshold for every class.
    Fixed(f64),
}

impl Rule {
    pub fn mode(&self) -> &'static str {
        match self {
            Rule::Baseline(_) => "p",
            Rule::Incremental(_) => "q",
            Rule::Fixed(_) => "fixed",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Rule::Baseline(v) | Rule::Incremental(v) | Rule::Fixed(v) => v,
        }
    }

    pub fn from_parts(mode: &str, value: f64) -> Result<Self, CascadeError> {
        match mode {
            "p" => Ok(Rule::Baseline(value)),
            "q" => Ok(Rule::Incremental(value)),
            "fixed" => Ok(Rule::Fixed(value)),
            m => Err(CascadeError::Format(format!("unknown mode {m:?}"))),
        }
    }

    /// Thresholds for every class from this stage's records.
    pub fn calibrate(&self, records: &[CalibrationRecord], class_count: usize) -> Result<Vec<ClassThreshold>, CascadeError> {
        match *self {
            Rule::Baseline(p) => calibrate_baseline(records, class_count, p),
            Rule::Incremental(q) => calibrate_incremental(records, class_count, q),
            Rule::Fixed(t) => Ok(vec![
                ClassThreshold {
                    theta: t,
                    theta_p1: t,
                    n_pos: 0,
                    n_neg: 0,
                };
                class_count
            ]),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.mode(), self.value())
    }
}

/// Parses `p=0.9`, `q=0.8` or `fixed=1`.
impl FromStr for Rule {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self, CascadeError> {
        let (m, v) = s
            .split_once('=')
            .ok_or_else(|| CascadeError::Format(format!("expected mode=value, got {s:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CascadeError::Format(format!("bad confidence in {s:?}")))?;
        Rule::from_parts(m.trim(), v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageThresholds {
    pub rule: Rule,
    pub classes: Vec<ClassThreshold>,
}

/// Exit thresholds for stages 1 and 2 (stage 3 always emits).
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdTable {
    pub stages: [StageThresholds; 2],
}

const HEADER: &str = "stage,class,theta,theta_p1,mode,confidence,n_pos,n_neg";

impl ThresholdTable {
    pub fn calibrate(
        stage1: &[CalibrationRecord],
        stage2: &[CalibrationRecord],
        class_count: usize,
        rules: [Rule; 2],
    ) -> Result<Self, CascadeError> {
        Ok(Self {
            stages: [
                StageThresholds {
                    rule: rules[0],
                    classes: rules[0].calibrate(stage1, class_count)?,
                },
                StageThresholds {
                    rule: rules[1],
                    classes: rules[1].calibrate(stage2, class_count)?,
                },
            ],
        })
    }

    /// Same threshold everywhere; `0` sends every sample out at stage 1,
    /// `1` sends every sample to stage 3.
    pub fn uniform(class_count: usize, theta: f64) -> Self {
        let st = StageThresholds {
            rule: Rule::Fixed(theta),
            classes: Rule::Fixed(theta).calibrate(&[], class_count).expect("fixed rule"),
        };
        Self {
            stages: [st.clone(), st],
        }
    }

    pub fn class_count(&self) -> usize {
        self.stages[0].classes.len()
    }

    /// Threshold for `class` at stage 1 or 2.
    pub fn theta(&self, stage: usize, class: usize) -> f64 {
        self.stages[stage - 1].classes.get(class).map_or(1.0, |c| c.theta)
    }

    /// The exit rule: strictly above the threshold.
    pub fn passes(&self, stage: usize, class: usize, eta: f32) -> bool {
        eta as f64 > self.theta(stage, class)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{HEADER}\n");
        for (si, st) in self.stages.iter().enumerate() {
            for (c, t) in st.classes.iter().enumerate() {
                s.push_str(&format!(
                    "{},{c},{},{},{},{},{},{}\n",
                    si + 1,
                    t.theta,
                    t.theta_p1,
                    st.rule.mode(),
                    st.rule.value(),
                    t.n_pos,
                    t.n_neg
                ));
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CascadeError> {
        let mut rows: [Vec<(usize, ClassThreshold)>; 2] = [Vec::new(), Vec::new()];
        let mut rules: [Option<Rule>; 2] = [None, None];
        for (ln, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() || line.starts_with('#') || line == HEADER {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |what: &str| CascadeError::Format(format!("line {ln}: {what}"));
            if f.len() != 8 {
                return Err(bad("expected 8 fields"));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad("bad number"));
            let int = |i: usize| f[i].parse::<usize>().map_err(|_| bad("bad integer"));
            let stage = int(0)?;
            if !(1..=2).contains(&stage) {
                return Err(bad("stage must be 1 or 2"));
            }
            let rule = Rule::from_parts(f[4], num(5)?)?;
            match rules[stage - 1] {
                None => rules[stage - 1] = Some(rule),
                Some(r) if r == rule => {}
                Some(_) => return Err(bad("mixed rules within one stage")),
            }
            let theta = num(2)?;
            if !(0.0..=1.0).contains(&theta) {
                return Err(bad("threshold outside [0, 1]"));
            }
            rows[stage - 1].push((
                int(1)?,
                ClassThreshold {
                    theta,
                    theta_p1: num(3)?,
                    n_pos: int(6)?,
                    n_neg: int(7)?,
                },
            ));
        }
        let mut stages = Vec::with_capacity(2);
        for (si, mut r) in rows.into_iter().enumerate() {
            r.sort_by_key(|(c, _)| *c);
            if r.iter().enumerate().any(|(i, (c, _))| i != *c) {
                return Err(CascadeError::Format(format!("stage {} classes are not 0..n", si + 1)));
            }
            stages.push(StageThresholds {
                rule: rules[si].ok_or_else(|| CascadeError::Format(format!("stage {} missing", si + 1)))?,
                classes: r.into_iter().map(|(_, t)| t).collect(),
            });
        }
        if stages[0].classes.len() != stages[1].classes.len() {
            return Err(CascadeError::Format("stages disagree on the class count".into()));
        }
        let s2 = stages.pop().expect("two stages");
        let s1 = stages.pop().expect("two stages");
        Ok(Self { stages: [s1, s2] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        let recs: Vec<CalibrationRecord> = (0..40)
            .map(|i| CalibrationRecord {
                class: i % 3,
                eta: 0.3 + (i as f64 * 0.61803).fract() * 0.7,
                correct: i % 5 != 0,
            })
            .collect();
        let t = ThresholdTable::calibrate(&recs, &recs, 4, [Rule::Incremental(0.8), Rule::Baseline(0.66)]).unwrap();
        let back = ThresholdTable::parse(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.theta(1, 3), 1.0);
    }

    #[test]
    fn uniform_tables() {
        let t = ThresholdTable::uniform(3, 0.0);
        assert!(t.passes(1, 2, 0.34));
        let t = ThresholdTable::uniform(3, 1.0);
        assert!(!t.passes(2, 0, 1.0));
        assert_eq!(ThresholdTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn rule_parsing() {
        assert_eq!("q=0.66".parse::<Rule>().unwrap(), Rule::Incremental(0.66));
        assert_eq!("p=1".parse::<Rule>().unwrap(), Rule::Baseline(1.0));
        assert!("x=1".parse::<Rule>().is_err());
        assert!("0.5".parse::<Rule>().is_err());
    }
}
