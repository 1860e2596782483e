//! Markdown and CSV renderings of a [`BenchReport`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{BenchCell, BenchReport, ConfusionMatrix};
use crate::classifiers::ClassifierKind;
use crate::error::{Error, Result};
use crate::landmarks::FaceShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            _ => Err(format!("unknown report format {s:?}")),
        }
    }
}

fn percent(v: f64) -> String {
    format!("{:.1}%", v * 100.0)
}

fn grid_table(out: &mut String, rep: &BenchReport, value: impl Fn(&BenchCell) -> f64) {
    out.push_str("| Training Size |");
    for s in &rep.sizes {
        let _ = write!(out, " {s} |");
    }
    out.push_str("\n|---|");
    for _ in &rep.sizes {
        out.push_str("---|");
    }
    out.push('\n');
    for (row, kind) in rep.classifiers.iter().enumerate() {
        let _ = write!(out, "| {} |", kind.display_name());
        for col in 0..rep.sizes.len() {
            let cell = &rep.cells[row * rep.sizes.len() + col];
            let _ = write!(out, " {} |", percent(value(cell)));
        }
        out.push('\n');
    }
}

fn confusion_table(out: &mut String, m: &ConfusionMatrix) {
    out.push_str("| true \\ predicted |");
    for c in FaceShape::ALL {
        let _ = write!(out, " {c} |");
    }
    out.push_str("\n|---|---|---|---|---|---|\n");
    for t in FaceShape::ALL {
        let _ = write!(out, "| {t} |");
        for p in FaceShape::ALL {
            let _ = write!(out, " {} |", m.0[t.index()][p.index()]);
        }
        out.push('\n');
    }
}

fn check(rep: &BenchReport) -> Result<()> {
    if rep.classifiers.is_empty() || rep.sizes.is_empty() {
        return Err(Error::invalid("report has no classifiers or no sizes"));
    }
    if rep.cells.len() != rep.classifiers.len() * rep.sizes.len() {
        return Err(Error::invalid("report grid is incomplete"));
    }
    Ok(())
}

pub fn render_report(rep: &BenchReport, format: ReportFormat) -> Result<String> {
    check(rep)?;
    let mut out = String::new();
    match format {
        ReportFormat::Markdown => {
            let md = &rep.metadata;
            out.push_str("# Face-shape classification benchmark\n\n");
            let _ = writeln!(
                out,
                "- dataset: {} ({} samples)",
                md.provenance, md.dataset_size
            );
            let _ = writeln!(out, "- seed: {}", md.seed);
            let _ = writeln!(out, "- subset strategy: {}", md.strategy);
            let _ = writeln!(out, "- evaluation: {}", md.eval_mode);
            out.push_str("\n## Training accuracy vs. training size\n\n");
            grid_table(&mut out, rep, |c| c.training_accuracy);
            out.push_str("\n## Overall accuracy vs. training size\n\n");
            grid_table(&mut out, rep, |c| c.overall_accuracy);
            out.push_str("\n## Appendix: confusion matrices\n\nRows are true classes, columns are predictions.\n");
            for cell in &rep.cells {
                let _ = write!(
                    out,
                    "\n### {}, training size {}\n\nTraining subset ({}):\n\n",
                    cell.classifier.display_name(),
                    cell.size,
                    percent(cell.training_accuracy)
                );
                confusion_table(&mut out, &cell.training_confusion);
                let _ = write!(
                    out,
                    "\nEvaluation set ({}):\n\n",
                    percent(cell.overall_accuracy)
                );
                confusion_table(&mut out, &cell.confusion);
                if !cell.converged {
                    out.push_str("\nSolver stopped at its iteration cap.\n");
                }
            }
        }
        ReportFormat::Csv => {
            out.push_str("classifier,size,training_accuracy,overall_accuracy\n");
            for cell in &rep.cells {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    cell.classifier.tag(),
                    cell.size,
                    cell.training_accuracy,
                    cell.overall_accuracy
                );
            }
        }
    }
    Ok(out)
}

pub fn emit_report(rep: &BenchReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = render_report(rep, format)?;
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub classifier: ClassifierKind,
    pub size: usize,
    pub training_accuracy: f64,
    pub overall_accuracy: f64,
}

pub fn parse_report_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let err = |detail: String| Error::Parse {
            line: i + 1,
            detail,
        };
        let f: Vec<&str> = line.split(',').collect();
        let [kind, size, train, overall] = f.as_slice() else {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        };
        rows.push(CsvRow {
            classifier: kind.parse().map_err(err)?,
            size: size.parse().map_err(|e| err(format!("size: {e}")))?,
            training_accuracy: train
                .parse()
                .map_err(|e| err(format!("training_accuracy: {e}")))?,
            overall_accuracy: overall
                .parse()
                .map_err(|e| err(format!("overall_accuracy: {e}")))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::super::{BenchMetadata, EvalMode, SubsetStrategy};
    use super::*;

    fn report(training_accuracy: f64, classifiers: Vec<ClassifierKind>) -> BenchReport {
        let cells = classifiers
            .iter()
            .map(|&k| BenchCell {
                classifier: k,
                size: 500,
                training_accuracy,
                overall_accuracy: 0.552,
                training_confusion: ConfusionMatrix::default(),
                confusion: ConfusionMatrix::default(),
                converged: true,
            })
            .collect();
        BenchReport {
            sizes: vec![500],
            classifiers,
            cells,
            subsets: vec![],
            metadata: BenchMetadata {
                seed: 1,
                strategy: SubsetStrategy::Stratified,
                eval_mode: EvalMode::OverallOnAll,
                dataset_size: 500,
                provenance: "test".into(),
                started_unix: 0,
                finished_unix: 0,
            },
        }
    }

    #[test]
    fn markdown_uses_one_decimal_percentages() {
        let md = render_report(
            &report(0.646, vec![ClassifierKind::Knn]),
            ReportFormat::Markdown,
        )
        .unwrap();
        assert!(md.contains("| KNN | 64.6% |"), "{md}");
        assert!(md.contains("| KNN | 55.2% |"));
        assert!(md.contains("## Appendix"));
    }

    #[test]
    fn empty_report_is_an_error() {
        let rep = report(0.5, vec![]);
        assert!(render_report(&rep, ReportFormat::Markdown).is_err());
        assert!(render_report(&rep, ReportFormat::Csv).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rep = report(1.0 / 3.0, vec![ClassifierKind::Lda, ClassifierKind::SvmRbf]);
        let rows = parse_report_csv(&render_report(&rep, ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(rows.len(), 2);
        for (row, cell) in rows.iter().zip(&rep.cells) {
            assert_eq!(row.classifier, cell.classifier);
            assert_eq!(row.size, cell.size);
            assert_eq!(
                row.training_accuracy.to_bits(),
                cell.training_accuracy.to_bits()
            );
            assert_eq!(
                row.overall_accuracy.to_bits(),
                cell.overall_accuracy.to_bits()
            );
        }
    }
}
