//! Binary classification metrics: macro-averaged precision, recall, F1,
//! plus accuracy and the raw confusion counts.
//!
//! Precision/recall/F1 are computed per class and averaged over the two
//! classes (macro). A per-class score with a zero denominator is defined
//! as 0. Macro-F1 is the mean of the per-class F1 values, not the F1 of
//! the macro precision/recall.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    /// Counts indexed as `confusion[gold][pred]`.
    pub confusion: [[usize; 2]; 2],
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Compute metrics from parallel prediction/gold label lists.
pub fn compute(preds: &[u8], golds: &[u8]) -> Result<Metrics> {
    if preds.len() != golds.len() {
        return Err(Error::Config(format!(
            "prediction/gold length mismatch: {} vs {}",
            preds.len(),
            golds.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Config(
            "cannot compute metrics on empty input".into(),
        ));
    }

    let mut confusion = [[0usize; 2]; 2];
    for (&p, &g) in preds.iter().zip(golds) {
        if p > 1 || g > 1 {
            return Err(Error::Config(format!(
                "labels must be 0 or 1, got pred={p} gold={g}"
            )));
        }
        confusion[g as usize][p as usize] += 1;
    }

    let total = preds.len() as f64;
    let mut precisions = [0.0; 2];
    let mut recalls = [0.0; 2];
    let mut f1s = [0.0; 2];
    for class in 0..2 {
        let tp = confusion[class][class] as f64;
        let pred_as = (confusion[0][class] + confusion[1][class]) as f64;
        let gold_as = (confusion[class][0] + confusion[class][1]) as f64;
        precisions[class] = safe_div(tp, pred_as);
        recalls[class] = safe_div(tp, gold_as);
        f1s[class] = safe_div(
            2.0 * precisions[class] * recalls[class],
            precisions[class] + recalls[class],
        );
    }

    Ok(Metrics {
        precision: (precisions[0] + precisions[1]) / 2.0,
        recall: (recalls[0] + recalls[1]) / 2.0,
        macro_f1: (f1s[0] + f1s[1]) / 2.0,
        accuracy: (confusion[0][0] + confusion[1][1]) as f64 / total,
        confusion,
    })
}
