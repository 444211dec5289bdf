//! Side-by-side confusion report in the layout of the build-outcome comparison table.

use commstream::ConfusionMatrix;

const LABEL_WIDTH: usize = 52;
const COLUMN_WIDTH: usize = 16;

/// Renders one column per `(name, matrix)`. The body has exactly five
/// numeric rows: correct/incorrect for successful builds, correct/incorrect
/// for failed builds, and overall accuracy as a percentage with four decimals.
pub fn comparison_table(columns: &[(String, ConfusionMatrix)]) -> String {
    let mut out = String::new();
    let mut line = |label: &str, cells: Vec<String>| {
        out.push_str(&format!("{label:<LABEL_WIDTH$}"));
        for c in cells {
            out.push_str(&format!("{c:>COLUMN_WIDTH$}"));
        }
        out.push('\n');
    };
    line("", columns.iter().map(|(n, _)| n.clone()).collect());
    let counts = |f: fn(&ConfusionMatrix) -> u64| columns.iter().map(|(_, m)| f(m).to_string()).collect();
    line("Successful Builds  Correctly Classified Instances", counts(|m| m.success_correct));
    line("                   Incorrectly Classified Instances", counts(|m| m.success_incorrect));
    line("Failed Builds      Correctly Classified Instances", counts(|m| m.fail_correct));
    line("                   Incorrectly Classified Instances", counts(|m| m.fail_incorrect));
    line(
        "Overall Accuracy of Prediction",
        columns.iter().map(|(_, m)| format_percent(m.accuracy())).collect(),
    );
    out
}

pub fn format_percent(fraction: f64) -> String {
    format!("{:.4}%", 100.0 * fraction)
}
