//! Evaluation metrics: accuracy, timestamp-conditioned accuracy, macro F1 and
//! event-rate reports.
//!
//! Time bins are 10 ms windows counted from the start of each sample.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::event::{compute_stats, EventStream, StatsReport};
use crate::gnn::{argmax, Prediction};

pub const F1_EPSILON: f64 = 1e-12;
pub const DEFAULT_TS_TOLERANCES: [u32; 2] = [1, 3];

/// Ground truth and prediction for one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub sample_id: String,
    pub y: u32,
    /// End-of-word bin. Samples without a keyword may have none.
    pub t: Option<u32>,
    /// `None` when the model emitted no prediction.
    pub y_hat: Option<u32>,
    pub t_hat: Option<u32>,
}

impl EvalRecord {
    fn correct(&self) -> bool {
        self.y_hat == Some(self.y)
    }
}

/// Collapses a prediction sequence to one record: the bin with the highest
/// confidence (earliest on ties) and the class predicted at that bin.
pub fn record_from_predictions(
    sample_id: impl Into<String>,
    y: u32,
    t: Option<u32>,
    predictions: &[Prediction],
) -> EvalRecord {
    let best = (!predictions.is_empty()).then(|| {
        let confs: Vec<i32> = predictions.iter().map(|p| p.conf).collect();
        &predictions[argmax(&confs)]
    });
    EvalRecord {
        sample_id: sample_id.into(),
        y,
        t,
        y_hat: best.map(|p| p.class),
        t_hat: best.map(|p| p.window as u32),
    }
}

fn require_records(records: &[EvalRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::validation("metrics need at least one record"));
    }
    Ok(())
}

/// Percentage of samples whose predicted class is correct.
pub fn accuracy(records: &[EvalRecord]) -> Result<f64> {
    require_records(records)?;
    let hits = records.iter().filter(|r| r.correct()).count();
    Ok(100.0 * hits as f64 / records.len() as f64)
}

/// Percentage of samples with the correct class and `|t_hat - t| <= k`.
///
/// Records lacking either bin count toward the total but never as hits.
pub fn ts_accuracy(records: &[EvalRecord], k: u32) -> Result<f64> {
    require_records(records)?;
    let hits = records
        .iter()
        .filter(|r| {
            r.correct()
                && matches!((r.t, r.t_hat), (Some(t), Some(th)) if (t as i64 - th as i64).unsigned_abs() <= k as u64)
        })
        .count();
    Ok(100.0 * hits as f64 / records.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ClassCounts {
    pub fn support(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn precision(&self) -> f64 {
        let d = self.tp + self.fp;
        if d == 0 {
            0.0
        } else {
            self.tp as f64 / d as f64
        }
    }

    pub fn recall(&self) -> f64 {
        let d = self.support();
        if d == 0 {
            0.0
        } else {
            self.tp as f64 / d as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        2.0 * p * r / (p + r + F1_EPSILON)
    }
}

pub fn class_counts(records: &[EvalRecord]) -> BTreeMap<u32, ClassCounts> {
    let mut counts: BTreeMap<u32, ClassCounts> = BTreeMap::new();
    for r in records {
        match r.y_hat {
            Some(p) if p == r.y => counts.entry(p).or_default().tp += 1,
            Some(p) => {
                counts.entry(p).or_default().fp += 1;
                counts.entry(r.y).or_default().fn_ += 1;
            }
            None => counts.entry(r.y).or_default().fn_ += 1,
        }
    }
    counts
}

/// Macro F1 in percent over classes present in the ground truth, plus the
/// per-class F1 (percent) of those classes.
pub fn macro_f1(records: &[EvalRecord]) -> Result<(f64, BTreeMap<u32, f64>)> {
    require_records(records)?;
    let per_class: BTreeMap<u32, f64> = class_counts(records)
        .into_iter()
        .filter(|(_, c)| c.support() > 0)
        .map(|(k, c)| (k, 100.0 * c.f1()))
        .collect();
    let mean = per_class.values().sum::<f64>() / per_class.len() as f64;
    Ok((mean, per_class))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub acc: f64,
    pub ts_acc: BTreeMap<String, f64>,
    pub f1_macro: f64,
    pub per_class: BTreeMap<String, f64>,
    pub support: BTreeMap<String, u64>,
    /// Records without a ground-truth or predicted bin.
    pub ts_unscored: usize,
    pub ts_rule: String,
}

pub const TS_RULE: &str = "records without a ground-truth or predicted bin count in the denominator and never as hits";

pub fn metric_report(records: &[EvalRecord], tolerances: &[u32]) -> Result<MetricReport> {
    let acc = accuracy(records)?;
    let mut ks: Vec<u32> = tolerances.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut ts_acc = BTreeMap::new();
    let mut prev = 0.0;
    for &k in &ks {
        let v = ts_accuracy(records, k)?;
        debug_assert!(v >= prev && v <= acc, "ts_acc must be monotone in k and bounded by acc");
        prev = v;
        ts_acc.insert(k.to_string(), v);
    }
    let (f1_macro, per_class) = macro_f1(records)?;
    let support = class_counts(records)
        .into_iter()
        .filter(|(_, c)| c.support() > 0)
        .map(|(k, c)| (k.to_string(), c.support()))
        .collect();
    Ok(MetricReport {
        n: records.len(),
        acc,
        ts_acc,
        f1_macro,
        per_class: per_class.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        support,
        ts_unscored: records.iter().filter(|r| r.t.is_none() || r.t_hat.is_none()).count(),
        ts_rule: TS_RULE.to_string(),
    })
}

// ---- record files ----

#[derive(Debug, Deserialize)]
struct CsvRecord {
    sample_id: String,
    y: u32,
    t: Option<u32>,
    y_hat: Option<u32>,
    t_hat: Option<u32>,
}

/// Reads records as CSV `sample_id,y,t,y_hat,t_hat` (header optional, empty
/// fields mean "absent") or as JSON lines.
pub fn read_eval_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let text = fs::read_to_string(path)?;
    let is_json = path.extension().is_some_and(|e| e == "jsonl" || e == "json")
        || text.trim_start().starts_with('{');
    if is_json {
        parse_eval_jsonl(&text)
    } else {
        parse_eval_csv(&text)
    }
}

pub fn parse_eval_jsonl(text: &str) -> Result<Vec<EvalRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                location: Location::Line(i as u64 + 1),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn parse_eval_csv(text: &str) -> Result<Vec<EvalRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i as u64 + 1;
        let row = row.map_err(|e| Error::Parse { location: Location::Line(line), message: e.to_string() })?;
        if i == 0 && row.get(0) == Some("sample_id") {
            continue;
        }
        let rec: CsvRecord = row
            .deserialize(None)
            .map_err(|e| Error::Parse { location: Location::Line(line), message: e.to_string() })?;
        out.push(EvalRecord { sample_id: rec.sample_id, y: rec.y, t: rec.t, y_hat: rec.y_hat, t_hat: rec.t_hat });
    }
    Ok(out)
}

pub fn write_eval_csv(records: &[EvalRecord]) -> String {
    let opt = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut s = String::from("sample_id,y,t,y_hat,t_hat\n");
    for r in records {
        s.push_str(&format!("{},{},{},{},{}\n", r.sample_id, r.y, opt(r.t), opt(r.y_hat), opt(r.t_hat)));
    }
    s
}

// ---- event rates ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRateReport {
    pub unfiltered: StatsReport,
    pub filtered: Option<StatsReport>,
    /// Percentage of events removed; `None` when there were no input events.
    pub reduction_pct: Option<f64>,
}

/// Statistics of `pre`, and of `post` with the share of removed events when
/// the filtered samples are supplied in the same order.
pub fn event_rate_report(pre: &[EventStream], post: Option<&[EventStream]>, window_us: u32) -> Result<EventRateReport> {
    let unfiltered = compute_stats(pre, window_us)?;
    let (filtered, reduction_pct) = match post {
        None => (None, None),
        Some(post) => {
            let ids = |s: &[EventStream]| s.iter().map(|x| x.sample_id.clone()).collect::<Vec<_>>();
            if post.len() != pre.len() || ids(pre) != ids(post) {
                return Err(Error::validation("filtered and unfiltered sample sets differ"));
            }
            let stats = compute_stats(post, window_us)?;
            (Some(stats.to_report()), reduction_pct(unfiltered.total_events, stats.total_events))
        }
    };
    Ok(EventRateReport { unfiltered: unfiltered.to_report(), filtered, reduction_pct })
}

/// `100 * (1 - kept / total)`, `None` for an empty input.
pub fn reduction_pct(total: u64, kept: u64) -> Option<f64> {
    (total > 0).then(|| 100.0 * (total - kept.min(total)) as f64 / total as f64)
}

/// Distinct sample identifiers, for checking that record sets line up.
pub fn sample_ids(records: &[EvalRecord]) -> BTreeSet<&str> {
    records.iter().map(|r| r.sample_id.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::event::{Event, Polarity, SensorConfig, Topology};

    fn rec(y: u32, y_hat: Option<u32>, t: Option<u32>, t_hat: Option<u32>) -> EvalRecord {
        EvalRecord { sample_id: String::new(), y, t, y_hat, t_hat }
    }

    fn simple(pairs: &[(u32, u32)]) -> Vec<EvalRecord> {
        pairs.iter().map(|&(y, p)| rec(y, Some(p), Some(5), Some(5))).collect()
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&simple(&[(1, 1), (2, 2)])).unwrap(), 100.0);
        assert_eq!(accuracy(&simple(&[(1, 1), (2, 0), (3, 0), (0, 1)])).unwrap(), 25.0);
        assert!(accuracy(&[]).is_err());
        assert!(ts_accuracy(&[], 1).is_err());
        assert!(macro_f1(&[]).is_err());
    }

    #[test]
    fn ts_boundary_inclusive() {
        assert_eq!(ts_accuracy(&[rec(1, Some(1), Some(10), Some(13))], 3).unwrap(), 100.0);
        assert_eq!(ts_accuracy(&[rec(1, Some(1), Some(10), Some(7))], 3).unwrap(), 100.0);
        assert_eq!(ts_accuracy(&[rec(1, Some(1), Some(10), Some(14))], 3).unwrap(), 0.0);
        assert_eq!(ts_accuracy(&[rec(1, Some(2), Some(10), Some(10))], 3).unwrap(), 0.0);
        assert_eq!(ts_accuracy(&[rec(1, Some(1), None, Some(10)), rec(1, Some(1), Some(1), Some(1))], 0).unwrap(), 50.0);
    }

    #[test]
    fn f1_hand_values() {
        // class 0: tp 2, fp 1, fn 0 -> p 2/3, r 1, f1 0.8
        // class 1: tp 1, fp 0, fn 1 -> p 1, r 1/2, f1 2/3
        let r = simple(&[(0, 0), (0, 0), (1, 1), (1, 0)]);
        let (m, per) = macro_f1(&r).unwrap();
        assert!((per[&0] - 80.0).abs() < 1e-9);
        assert!((per[&1] - 200.0 / 3.0).abs() < 1e-9);
        assert!((m - (80.0 + 200.0 / 3.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn f1_never_predicted_and_absent_classes() {
        // class 2 in ground truth, never predicted -> 0, still averaged
        // class 9 predicted, absent from ground truth -> excluded
        let r = simple(&[(0, 0), (2, 9)]);
        let (m, per) = macro_f1(&r).unwrap();
        assert_eq!(per.keys().copied().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(per[&2], 0.0);
        assert!((m - 50.0).abs() < 1e-9);
        assert_eq!(macro_f1(&simple(&[(0, 0), (1, 1), (2, 2)])).unwrap().0, 100.0 * 2.0 / (2.0 + 1e-12));
    }

    #[test]
    fn missing_prediction_counts_as_wrong() {
        let r = vec![rec(0, None, Some(1), None), rec(0, Some(0), Some(1), Some(1))];
        assert_eq!(accuracy(&r).unwrap(), 50.0);
        let rep = metric_report(&r, &DEFAULT_TS_TOLERANCES).unwrap();
        assert_eq!(rep.ts_unscored, 1);
        assert_eq!(rep.ts_acc["1"], 50.0);
    }

    #[test]
    fn record_from_prediction_sequence() {
        let preds = vec![
            Prediction::new(0, vec![5, 1], 3),
            Prediction::new(1, vec![1, 5], 9),
            Prediction::new(2, vec![5, 1], 9),
        ];
        let r = record_from_predictions("a", 1, Some(1), &preds);
        assert_eq!((r.y_hat, r.t_hat), (Some(1), Some(1)));
        let r = record_from_predictions("a", 1, Some(1), &[]);
        assert_eq!((r.y_hat, r.t_hat), (None, None));
    }

    #[test]
    fn csv_and_jsonl_parsing() {
        let csv = "sample_id,y,t,y_hat,t_hat\na,1,4,1,5\nb,2,,3,\n";
        let r = parse_eval_csv(csv).unwrap();
        assert_eq!(r[1], EvalRecord { sample_id: "b".into(), y: 2, t: None, y_hat: Some(3), t_hat: None });
        assert_eq!(parse_eval_csv(&write_eval_csv(&r)).unwrap(), r);
        let bad = parse_eval_csv("a,1,4,x,5\n").unwrap_err();
        assert!(matches!(bad, Error::Parse { location: Location::Line(1), .. }));

        let jl = r.iter().map(|x| serde_json::to_string(x).unwrap()).collect::<Vec<_>>().join("\n");
        assert_eq!(parse_eval_jsonl(&jl).unwrap(), r);
        assert!(matches!(parse_eval_jsonl("{}\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn event_rate_reduction() {
        let cfg = SensorConfig::new(32, Topology::Cascade).unwrap();
        let s = EventStream::new(cfg, vec![Event::new(0, 1, Polarity::Positive), Event::new(5000, 2, Polarity::Negative)])
            .with_sample_id("x");
        let empty = EventStream::new(cfg, vec![]).with_sample_id("x");
        let same = event_rate_report(std::slice::from_ref(&s), Some(std::slice::from_ref(&s)), 10_000).unwrap();
        assert_eq!(same.reduction_pct, Some(0.0));
        let all = event_rate_report(std::slice::from_ref(&s), Some(std::slice::from_ref(&empty)), 10_000).unwrap();
        assert_eq!(all.reduction_pct, Some(100.0));
        let other = EventStream::new(cfg, vec![]).with_sample_id("y");
        assert!(event_rate_report(&[s], Some(&[other]), 10_000).is_err());
        assert_eq!(reduction_pct(0, 0), None);
    }

    fn arb_records() -> impl Strategy<Value = Vec<EvalRecord>> {
        prop::collection::vec(
            (0u32..5, prop::option::weighted(0.9, 0u32..5), prop::option::weighted(0.9, 0u32..30), prop::option::weighted(0.9, 0u32..30)),
            1..60,
        )
        .prop_map(|v| v.into_iter().map(|(y, p, t, th)| rec(y, p, t, th)).collect())
    }

    proptest! {
        #[test]
        fn ts_monotone_and_bounded(r in arb_records()) {
            let acc = accuracy(&r).unwrap();
            let mut prev = 0.0;
            for k in 0..40 {
                let v = ts_accuracy(&r, k).unwrap();
                prop_assert!(v >= prev && v <= acc);
                prev = v;
            }
        }

        #[test]
        fn ts_equals_acc_for_large_k_when_bins_known(r in arb_records()) {
            let full: Vec<_> = r.into_iter().map(|mut x| { x.t.get_or_insert(0); x.t_hat.get_or_insert(0); x }).collect();
            prop_assert_eq!(ts_accuracy(&full, 1000).unwrap(), accuracy(&full).unwrap());
        }

        #[test]
        fn f1_relabel_invariant(r in arb_records(), shift in 1u32..5) {
            let map = |c: u32| (c + shift) % 5 + 10;
            let relabeled: Vec<_> = r.iter().map(|x| EvalRecord { y: map(x.y), y_hat: x.y_hat.map(map), ..x.clone() }).collect();
            let (a, _) = macro_f1(&r).unwrap();
            let (b, _) = macro_f1(&relabeled).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
