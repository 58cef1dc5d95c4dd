//! Per-locale, per-category accuracy evaluation and report rendering.
//!
//! The report mirrors the usual layout: one row per (locale, model) with
//! Overall, Locale-specific, Locale-independent, Single-locale, and Small
//! columns. Utterances are sliced by the category tags of their gold domain;
//! a category with no test support renders as `--`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::model::AnyModel;
use crate::registry::{Category, DomainRegistry, LocaleId};

pub const CATEGORY_COLUMNS: [&str; 5] = [
    "Overall",
    "Locale-specific",
    "Locale-independent",
    "Single-locale",
    "Small",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub correct: usize,
    pub support: usize,
}

impl Cell {
    /// Accuracy in percent; None when the category has no support.
    pub fn accuracy(&self) -> Option<f64> {
        if self.support == 0 {
            None
        } else {
            Some(100.0 * self.correct as f64 / self.support as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub locale: String,
    pub model: String,
    /// Overall, Locale-specific, Locale-independent, Single-locale, Small.
    pub cells: [Cell; 5],
}

impl ReportRow {
    pub fn cell(&self, column: &str) -> &Cell {
        let idx = CATEGORY_COLUMNS
            .iter()
            .position(|c| *c == column)
            .unwrap_or_else(|| panic!("unknown report column {column}"));
        &self.cells[idx]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

/// Evaluation outcome plus invariant counters.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: EvalReport,
    /// Predictions outside the request locale's domain set. Must stay 0.
    pub out_of_set_predictions: usize,
}

fn category_slot(c: &Category) -> usize {
    match c {
        Category::LocaleSpecific => 1,
        Category::LocaleIndependent => 2,
        Category::SingleLocale => 3,
        Category::Small => 4,
    }
}

/// Evaluate top-1 accuracy of `model` over `test`, restricted to the locales
/// the model serves. Utterances fan out across threads; the merge is a plain
/// indexed collect so the outcome is independent of scheduling.
pub fn evaluate(
    model: &AnyModel,
    model_name: &str,
    test: &Corpus,
    registry: &DomainRegistry,
) -> Result<EvalOutcome> {
    let served: Vec<LocaleId> = match model {
        AnyModel::Baseline(b) => match &b.scope {
            crate::model::BaselineScope::Locale(l) => vec![*l],
            crate::model::BaselineScope::AllLocales => registry.locale_ids().collect(),
        },
        AnyModel::Universal(_) => registry.locale_ids().collect(),
    };

    let tasks: Vec<(usize, LocaleId, &crate::corpus::Utterance)> = test
        .utterances
        .iter()
        .enumerate()
        .filter_map(|(i, u)| {
            let l = registry.locale_id(&u.locale).ok()?;
            served.contains(&l).then_some((i, l, u))
        })
        .collect();

    let predictions: Vec<(usize, LocaleId, String, String)> = tasks
        .par_iter()
        .map(|(i, l, u)| {
            let tokens = model.vocab().encode_text(&u.text);
            let ranked = model.classify(&tokens, *l, registry)?;
            let top = ranked
                .first()
                .map(|(d, _)| d.clone())
                .ok_or_else(|| Error::Input("classifier returned no domains".into()))?;
            Ok((*i, *l, u.domain.clone(), top))
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<ReportRow> = served
        .iter()
        .map(|l| ReportRow {
            locale: registry.locale_name(*l).to_string(),
            model: model_name.to_string(),
            cells: Default::default(),
        })
        .collect();
    let mut out_of_set = 0usize;

    for (_, locale, gold, predicted) in &predictions {
        if !registry.available(predicted, *locale) {
            out_of_set += 1;
        }
        let row = rows
            .iter_mut()
            .find(|r| r.locale == registry.locale_name(*locale))
            .expect("row exists for served locale");
        let hit = predicted == gold;
        row.cells[0].support += 1;
        row.cells[0].correct += hit as usize;
        for c in registry.categories(gold, *locale) {
            let slot = category_slot(c);
            row.cells[slot].support += 1;
            row.cells[slot].correct += hit as usize;
        }
    }

    Ok(EvalOutcome {
        report: EvalReport { rows },
        out_of_set_predictions: out_of_set,
    })
}

impl EvalReport {
    pub fn merge(reports: impl IntoIterator<Item = EvalReport>) -> EvalReport {
        let mut rows = Vec::new();
        for r in reports {
            rows.extend(r.rows);
        }
        EvalReport { rows }
    }

    /// Order rows by locale (in registry order) then by a fixed model order,
    /// for stable combined tables.
    pub fn sort_rows(&mut self, locale_order: &[String], model_order: &[String]) {
        let pos = |xs: &[String], x: &str| xs.iter().position(|v| v == x).unwrap_or(usize::MAX);
        self.rows.sort_by(|a, b| {
            pos(locale_order, &a.locale)
                .cmp(&pos(locale_order, &b.locale))
                .then(pos(model_order, &a.model).cmp(&pos(model_order, &b.model)))
        });
    }

    /// Plain-text table in the familiar layout; `--` marks empty categories.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<8}{:<16}{:>9}{:>17}{:>20}{:>15}{:>9}",
            "Locale", "Model", "Overall", "Locale-specific", "Locale-independent",
            "Single-locale", "Small"
        )
        .unwrap();
        let mut last_locale = None;
        for row in &self.rows {
            if last_locale.is_some() && last_locale != Some(&row.locale) {
                writeln!(out).unwrap();
            }
            last_locale = Some(&row.locale);
            let fmt = |c: &Cell| match c.accuracy() {
                Some(a) => format!("{a:.2}"),
                None => "--".to_string(),
            };
            writeln!(
                out,
                "{:<8}{:<16}{:>9}{:>17}{:>20}{:>15}{:>9}",
                row.locale,
                row.model,
                fmt(&row.cells[0]),
                fmt(&row.cells[1]),
                fmt(&row.cells[2]),
                fmt(&row.cells[3]),
                fmt(&row.cells[4]),
            )
            .unwrap();
        }
        out
    }

    /// CSV with full-precision accuracies and support counts; `--` marks
    /// empty categories. Round-trips through [`EvalReport::parse_csv`].
    pub fn render_csv(&self) -> String {
        let mut out = String::from("locale,model");
        for c in CATEGORY_COLUMNS {
            let key = c.to_lowercase().replace('-', "_");
            out.push_str(&format!(",{key}_accuracy,{key}_correct,{key}_support"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.locale);
            out.push(',');
            out.push_str(&row.model);
            for cell in &row.cells {
                match cell.accuracy() {
                    Some(a) => out.push_str(&format!(",{a}")),
                    None => out.push_str(",--"),
                }
                out.push_str(&format!(",{},{}", cell.correct, cell.support));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<EvalReport> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 + 3 * CATEGORY_COLUMNS.len() {
                return Err(Error::Parse {
                    path: "<csv>".into(),
                    line: i + 1,
                    message: format!("expected {} fields", 2 + 3 * CATEGORY_COLUMNS.len()),
                });
            }
            let mut cells = [Cell::default(); 5];
            for (slot, cell) in cells.iter_mut().enumerate() {
                let base = 2 + slot * 3;
                let parse = |s: &str, what: &str| -> Result<usize> {
                    s.parse().map_err(|_| Error::Parse {
                        path: "<csv>".into(),
                        line: i + 1,
                        message: format!("bad {what} {s:?}"),
                    })
                };
                cell.correct = parse(fields[base + 1], "correct")?;
                cell.support = parse(fields[base + 2], "support")?;
            }
            rows.push(ReportRow {
                locale: fields[0].to_string(),
                model: fields[1].to_string(),
                cells,
            });
        }
        Ok(EvalReport { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_with(cells: [Cell; 5]) -> EvalReport {
        EvalReport {
            rows: vec![ReportRow {
                locale: "US".into(),
                model: "universal".into(),
                cells,
            }],
        }
    }

    #[test]
    fn empty_category_renders_as_dashes() {
        let report = report_with([
            Cell {
                correct: 9,
                support: 10,
            },
            Cell::default(),
            Cell {
                correct: 9,
                support: 10,
            },
            Cell::default(),
            Cell::default(),
        ]);
        let table = report.render_table();
        assert!(table.contains("90.00"));
        assert!(table.contains("--"));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let report = report_with([
            Cell {
                correct: 821,
                support: 993,
            },
            Cell {
                correct: 7,
                support: 9,
            },
            Cell {
                correct: 814,
                support: 984,
            },
            Cell::default(),
            Cell {
                correct: 55,
                support: 89,
            },
        ]);
        let csv = report.render_csv();
        let back = EvalReport::parse_csv(&csv).unwrap();
        assert_eq!(report, back);
        // Accuracy values parse back to identical numbers.
        for (a, b) in report.rows[0].cells.iter().zip(&back.rows[0].cells) {
            assert_eq!(a.accuracy(), b.accuracy());
        }
    }

    #[test]
    fn accuracy_is_none_without_support() {
        assert_eq!(Cell::default().accuracy(), None);
        assert_eq!(
            Cell {
                correct: 1,
                support: 2
            }
            .accuracy(),
            Some(50.0)
        );
    }
}
