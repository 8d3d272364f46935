//! Data series behind the eight benchmark figures.
//!
//! Figures 1, 2, 5, 6 plot one table each (all six scenarios over the
//! surplus grid).  Figures 3/4 compare the aggregate-amount principles
//! (reported vs settled, i.e. tables 1 and 2) at q = 0.2 and q = 0.8;
//! figures 7/8 do the same for the count principles (tables 3 and 4).

use std::io::Write;

use crate::catalog::DelayCase;
use crate::reproduce::Workbench;
use crate::{Error, Result};

/// One plotted curve: a label and its (surplus, probability) points.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSeries {
    pub label: String,
    pub points: Vec<(i64, f64)>,
}

/// All curves of one figure.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub figure: u8,
    pub title: String,
    pub series: Vec<FigureSeries>,
}

/// Which tables and delay case a figure draws from.
enum Layout {
    /// All scenarios of one table.
    Table(u8),
    /// The reported-principle table vs the settled-principle table at a
    /// fixed delay case.
    Comparison {
        reported: u8,
        settled: u8,
        delay: DelayCase,
    },
}

fn layout(figure: u8) -> Result<(Layout, String)> {
    let principle_name = |table: u8| {
        crate::catalog::principle_for_table(table)
            .expect("layout tables are valid")
            .name()
    };
    Ok(match figure {
        1 | 2 | 5 | 6 => {
            let table = match figure {
                1 => 1,
                2 => 2,
                5 => 3,
                _ => 4,
            };
            (
                Layout::Table(table),
                format!(
                    "ruin probability by initial surplus, {} premiums",
                    principle_name(table)
                ),
            )
        }
        3 | 4 | 7 | 8 => {
            let (reported, settled) = if figure <= 4 { (1, 2) } else { (3, 4) };
            let delay = if figure % 2 == 1 {
                DelayCase::Rare
            } else {
                DelayCase::Frequent
            };
            (
                Layout::Comparison {
                    reported,
                    settled,
                    delay,
                },
                format!(
                    "{} vs {} premiums at q = {}",
                    principle_name(reported),
                    principle_name(settled),
                    delay.q()
                ),
            )
        }
        other => return Err(Error::BadFigure(other)),
    })
}

/// Computes (or fetches from the workbench cache) the data of one figure.
pub fn figure_data(wb: &mut Workbench, figure: u8) -> Result<FigureData> {
    let (layout, title) = layout(figure)?;
    let series = match layout {
        Layout::Table(table) => {
            let report = wb.table(table)?;
            report
                .scenarios()
                .into_iter()
                .map(|s| FigureSeries {
                    label: s.label(),
                    points: report.column(s),
                })
                .collect()
        }
        Layout::Comparison {
            reported,
            settled,
            delay,
        } => {
            let mut series = Vec::new();
            for (table, suffix) in [(reported, "reported"), (settled, "settled")] {
                let report = wb.table(table)?;
                for scenario in report.scenarios() {
                    if scenario.delay == delay {
                        series.push(FigureSeries {
                            label: format!("{}_{suffix}", scenario.label()),
                            points: report.column(scenario),
                        });
                    }
                }
            }
            series
        }
    };
    Ok(FigureData {
        figure,
        title,
        series,
    })
}

/// Writes a figure as wide CSV: a `u` column followed by one column per
/// series.
pub fn write_figure_csv(
    data: &FigureData,
    fmt: impl Fn(f64) -> String,
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["u".to_string()];
    header.extend(data.series.iter().map(|s| s.label.clone()));
    w.write_record(&header)?;
    let us: Vec<i64> = data
        .series
        .first()
        .map(|s| s.points.iter().map(|&(u, _)| u).collect())
        .unwrap_or_default();
    for (i, u) in us.iter().enumerate() {
        let mut record = vec![u.to_string()];
        for s in &data.series {
            record.push(fmt(s.points[i].1));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
