//! Small CSV formats the commands exchange: confusion matrices, ROC curves,
//! training histories, peak lists, and per-beat predictions.

use std::path::Path;

use ecgonn::beats::AamiClass;
use ecgonn::eval::{percent, ConfusionMatrix3, Metrics, RocCurve};

use crate::{usage, CliError};

/// Renders a confusion matrix with a class header row and labeled rows.
pub fn confusion_to_csv(matrix: &ConfusionMatrix3) -> String {
    let mut out = String::from(",N,S,V\n");
    for truth in AamiClass::ALL {
        out.push(truth.letter());
        for predicted in AamiClass::ALL {
            out.push(',');
            out.push_str(&matrix.count(truth, predicted).to_string());
        }
        out.push('\n');
    }
    out
}

fn class_from_label(label: &str) -> Option<AamiClass> {
    match label.trim() {
        "N" | "n" => Some(AamiClass::Normal),
        "S" | "s" => Some(AamiClass::Supraventricular),
        "V" | "v" => Some(AamiClass::Ventricular),
        _ => None,
    }
}

/// Parses a 3x3 confusion matrix CSV.
///
/// Accepts the format written by [`confusion_to_csv`], with or without the
/// header row and in any row order. Rows may also drop the class label and
/// rely on position: three bare counts per line, truth rows in N, S, V order.
pub fn confusion_from_csv(text: &str) -> Result<ConfusionMatrix3, CliError> {
    let mut matrix = ConfusionMatrix3::new();
    let mut seen = [false; 3];
    let mut bare_row = 0usize;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let (truth, counts) = match fields.as_slice() {
            [label, rest @ ..] if class_from_label(label).is_some() => {
                (class_from_label(label).unwrap(), rest)
            }
            // Header row: an empty or decorative corner cell, then labels.
            [corner, rest @ ..]
                if corner.parse::<u64>().is_err()
                    && rest.iter().all(|f| class_from_label(f).is_some()) =>
            {
                continue;
            }
            rest => {
                let truth = AamiClass::from_index(bare_row).ok_or_else(|| {
                    usage(format!("confusion CSV line {}: more than 3 rows", line_no + 1))
                })?;
                bare_row += 1;
                (truth, rest)
            }
        };
        if counts.len() != 3 {
            return Err(usage(format!(
                "confusion CSV line {}: expected 3 counts, got {}",
                line_no + 1,
                counts.len()
            )));
        }
        if seen[truth.index()] {
            return Err(usage(format!(
                "confusion CSV line {}: duplicate row for class {}",
                line_no + 1,
                truth.letter()
            )));
        }
        seen[truth.index()] = true;
        for (predicted, field) in AamiClass::ALL.into_iter().zip(counts) {
            let count: u64 = field.parse().map_err(|_| {
                usage(format!(
                    "confusion CSV line {}: '{field}' is not a count",
                    line_no + 1
                ))
            })?;
            for _ in 0..count {
                matrix.add(truth, predicted);
            }
        }
    }
    if seen != [true; 3] {
        let missing: String = AamiClass::ALL
            .into_iter()
            .filter(|c| !seen[c.index()])
            .map(AamiClass::letter)
            .collect();
        return Err(usage(format!("confusion CSV: missing row(s) for {missing}")));
    }
    Ok(matrix)
}

/// Per-class table of the rates a study reports, percentages to two places.
pub fn metrics_table(metrics: &Metrics) -> String {
    let mut out = String::from("class,sensitivity,specificity,precision,f1,accuracy\n");
    for class in AamiClass::ALL {
        let m = metrics.class(class);
        let total = m.true_positives + m.false_negatives + m.false_positives + m.true_negatives;
        let class_accuracy =
            (total > 0).then(|| (m.true_positives + m.true_negatives) as f64 / total as f64);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            class.letter(),
            percent(m.sensitivity),
            percent(m.specificity),
            percent(m.precision),
            percent(m.f1),
            percent(class_accuracy),
        ));
    }
    out.push_str(&format!(
        "overall,,,,{},{}\n",
        percent(metrics.macro_f1()),
        percent(Some(metrics.accuracy)),
    ));
    out
}

/// One operating point per line: threshold, false positive rate, true positive rate.
pub fn roc_to_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for (threshold, (fpr, tpr)) in curve.thresholds.iter().zip(&curve.points) {
        out.push_str(&format!("{threshold},{fpr},{tpr}\n"));
    }
    out.push_str(&format!("auc,{},\n", curve.auc));
    out
}

/// Reads R-peak sample indices from a one-column CSV, header optional.
pub fn peaks_from_csv(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read peaks {}: {e}", path.display())))?;
    let mut peaks = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<usize>() {
            Ok(sample) => peaks.push(sample),
            Err(_) if line_no == 0 => continue,
            Err(_) => {
                return Err(usage(format!(
                    "peaks CSV line {}: '{field}' is not a sample index",
                    line_no + 1
                )))
            }
        }
    }
    if peaks.is_empty() {
        return Err(usage(format!(
            "peaks CSV {} holds no sample indices",
            path.display()
        )));
    }
    Ok(peaks)
}
