// SPDX-License-Identifier: MIT OR Apache-2.0

//! Report emission: every rendered figure is paired with a CSV carrying the
//! identical numbers, so plots are never the only record of a result.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::bench::{BenchmarkReport, WinRateTable};
use crate::bfi::{ArithmeticReport, ExpectedDirection, LinearFit};
use crate::error::{Error, Result};
use crate::extraction::{CosineMatrix, SweepAxis, SweepResult};
use crate::judge::Criterion;
use crate::ocean::Dimension;
use crate::plot::{self, Canvas, Scale};

/// Files produced for one rendered report.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub csv: PathBuf,
    pub image: PathBuf,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

fn fmt(v: f64) -> String {
    // Shortest round-trip representation keeps CSV and plot sources equal.
    format!("{v}")
}

/// Render the 10x10 cosine heatmap plus its CSV.
pub fn render_cosine(matrix: &CosineMatrix, out_dir: &Path, stem: &str) -> Result<Rendered> {
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let mut w = csv_writer(&csv_path)?;
    let mut header = vec!["trait".to_string()];
    header.extend(matrix.order.iter().map(|p| p.slug().to_string()));
    w.write_record(&header).map_err(|e| Error::Serde(e.to_string()))?;
    for (i, pole) in matrix.order.iter().enumerate() {
        let mut row = vec![pole.slug().to_string()];
        row.extend(matrix.values[i].iter().map(|&v| fmt(v)));
        w.write_record(&row).map_err(|e| Error::Serde(e.to_string()))?;
    }
    finish(w, &csv_path)?;

    let n = matrix.order.len() as i64;
    let cell = 44i64;
    let margin = 70i64;
    let size = (margin + n * cell + 10) as u32;
    let mut canvas = Canvas::new(size, size);
    for (i, pole) in matrix.order.iter().enumerate() {
        let label: String = pole.slug().chars().take(4).collect();
        canvas.text(
            4,
            margin + i as i64 * cell + cell / 2 - 3,
            &label,
            1,
            plot::BLACK,
        );
        canvas.text(
            margin + i as i64 * cell + 4,
            margin - 12,
            &label,
            1,
            plot::BLACK,
        );
    }
    for i in 0..matrix.order.len() {
        for j in 0..matrix.order.len() {
            let v = matrix.values[i][j];
            let x = margin + j as i64 * cell;
            let y = margin + i as i64 * cell;
            canvas.fill_rect(x, y, cell, cell, plot::diverging(v));
            canvas.rect_outline(x, y, cell, cell, plot::LIGHT_GRAY);
            let label = format!("{v:+.2}");
            canvas.text(x + 4, y + cell / 2 - 3, &label, 1, plot::BLACK);
        }
    }
    let image = out_dir.join(format!("{stem}.png"));
    canvas.save(&image)?;
    Ok(Rendered {
        csv: csv_path,
        image,
    })
}

/// Render coefficient-vs-score lines with slope and r-squared annotations.
/// Returns `None` (nothing to render) for an empty fit set.
pub fn render_linearity(
    fits: &BTreeMap<String, LinearFit>,
    out_dir: &Path,
    stem: &str,
) -> Result<Option<Rendered>> {
    if fits.is_empty() {
        return Ok(None);
    }
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let mut w = csv_writer(&csv_path)?;
    w.write_record(["series", "alpha", "score", "slope", "intercept", "pearson_r", "r_squared"])
        .map_err(|e| Error::Serde(e.to_string()))?;
    for (name, fit) in fits {
        for (alpha, score) in &fit.points {
            w.write_record([
                name.clone(),
                fmt(*alpha),
                fmt(*score),
                fmt(fit.slope),
                fmt(fit.intercept),
                fmt(fit.pearson_r),
                fmt(fit.r_squared),
            ])
            .map_err(|e| Error::Serde(e.to_string()))?;
        }
    }
    finish(w, &csv_path)?;

    let all_points: Vec<(f64, f64)> = fits.values().flat_map(|f| f.points.clone()).collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &all_points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let pad = ((y_max - y_min) * 0.1).max(0.5);
    let (width, height) = (640u32, 420u32);
    let mut canvas = Canvas::new(width, height);
    let xs = Scale {
        data_min: x_min,
        data_max: x_max,
        pixel_start: 60,
        pixel_end: width as i64 - 20,
    };
    let ys = Scale {
        data_min: y_max + pad,
        data_max: y_min - pad,
        pixel_start: 20,
        pixel_end: height as i64 - 60,
    };
    canvas.line(60, 20, 60, height as i64 - 60, plot::GRAY);
    canvas.line(60, height as i64 - 60, width as i64 - 20, height as i64 - 60, plot::GRAY);
    canvas.text(8, 16, "score", 1, plot::GRAY);
    canvas.text(width as i64 - 60, height as i64 - 40, "alpha", 1, plot::GRAY);
    for (idx, (name, fit)) in fits.iter().enumerate() {
        let color = plot::SERIES[idx % plot::SERIES.len()];
        let mut sorted = fit.points.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in sorted.windows(2) {
            canvas.line(
                xs.map(pair[0].0),
                ys.map(pair[0].1),
                xs.map(pair[1].0),
                ys.map(pair[1].1),
                color,
            );
        }
        for &(x, y) in &sorted {
            canvas.disc(xs.map(x), ys.map(y), 3, color);
        }
        let annotation = format!(
            "{name}: slope={:.3} r2={:.3}",
            fit.slope, fit.r_squared
        );
        canvas.text(70, 24 + idx as i64 * 12, &annotation, 1, color);
    }
    let image = out_dir.join(format!("{stem}.png"));
    canvas.save(&image)?;
    Ok(Some(Rendered {
        csv: csv_path,
        image,
    }))
}

/// Render paired baseline/steered bars per recipe expectation, green for
/// expected increases and red for expected decreases.
pub fn render_arithmetic(
    report: &ArithmeticReport,
    out_dir: &Path,
    stem: &str,
) -> Result<Option<Rendered>> {
    let rows: Vec<(String, Dimension, ExpectedDirection, f64, f64, f64, bool)> = report
        .recipes
        .iter()
        .flat_map(|r| {
            r.checks.iter().map(|c| {
                (
                    r.name.clone(),
                    c.dimension,
                    c.expected,
                    c.baseline,
                    c.steered,
                    c.delta,
                    c.met,
                )
            })
        })
        .collect();
    if rows.is_empty() {
        return Ok(None);
    }
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let mut w = csv_writer(&csv_path)?;
    w.write_record(["recipe", "dimension", "expected", "baseline", "steered", "delta", "met"])
        .map_err(|e| Error::Serde(e.to_string()))?;
    for (name, dim, expected, baseline, steered, delta, met) in &rows {
        w.write_record([
            name.clone(),
            dim.code().to_string(),
            format!("{expected:?}").to_lowercase(),
            fmt(*baseline),
            fmt(*steered),
            fmt(*delta),
            met.to_string(),
        ])
        .map_err(|e| Error::Serde(e.to_string()))?;
    }
    finish(w, &csv_path)?;

    let row_h = 34i64;
    let label_w = 270i64;
    let chart_w = 320i64;
    let height = (rows.len() as i64 * row_h + 50) as u32;
    let mut canvas = Canvas::new((label_w + chart_w + 30) as u32, height);
    let scale = Scale {
        data_min: 1.0,
        data_max: 5.0,
        pixel_start: label_w,
        pixel_end: label_w + chart_w,
    };
    canvas.text(label_w, 8, "1", 1, plot::GRAY);
    canvas.text(label_w + chart_w - 6, 8, "5", 1, plot::GRAY);
    for (i, (name, dim, expected, baseline, steered, _, met)) in rows.iter().enumerate() {
        let y = 24 + i as i64 * row_h;
        let arrow = match expected {
            ExpectedDirection::Up => "+",
            ExpectedDirection::Down => "-",
            ExpectedDirection::Flat => "=",
        };
        let label = format!("{name} {}{arrow} {}", dim.code(), if *met { "" } else { "(unmet)" });
        canvas.text(6, y + 8, &label, 1, plot::BLACK);
        let base_px = scale.map(*baseline);
        let steer_px = scale.map(*steered);
        canvas.fill_rect(label_w, y, base_px - label_w, 10, plot::GRAY);
        let color = match expected {
            ExpectedDirection::Up => plot::GREEN,
            ExpectedDirection::Down => plot::RED,
            ExpectedDirection::Flat => plot::ORANGE,
        };
        canvas.fill_rect(label_w, y + 12, steer_px - label_w, 10, color);
    }
    let image = out_dir.join(format!("{stem}.png"));
    canvas.save(&image)?;
    Ok(Some(Rendered {
        csv: csv_path,
        image,
    }))
}

/// Render the five-criterion win-rate table.
pub fn render_win_rates(table: &WinRateTable, out_dir: &Path, stem: &str) -> Result<Rendered> {
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let mut w = csv_writer(&csv_path)?;
    w.write_record(["metric", "wins", "losses", "malformed", "comparisons", "rate"])
        .map_err(|e| Error::Serde(e.to_string()))?;
    for criterion in Criterion::ALL {
        let m = table.get(criterion);
        w.write_record([
            criterion.short_name().to_string(),
            m.wins.to_string(),
            m.losses.to_string(),
            m.malformed.to_string(),
            m.comparisons.to_string(),
            m.rate.map(fmt).unwrap_or_default(),
        ])
        .map_err(|e| Error::Serde(e.to_string()))?;
    }
    finish(w, &csv_path)?;

    let row_h = 26i64;
    let mut canvas = Canvas::new(440, (Criterion::ALL.len() as i64 * row_h + 60) as u32);
    canvas.text(10, 10, "metric", 1, plot::GRAY);
    canvas.text(90, 10, "win rate", 1, plot::GRAY);
    for (i, criterion) in Criterion::ALL.iter().enumerate() {
        let m = table.get(*criterion);
        let y = 30 + i as i64 * row_h;
        canvas.text(10, y + 4, criterion.short_name(), 1, plot::BLACK);
        match m.rate {
            Some(rate) => {
                canvas.fill_rect(90, y, (rate * 250.0).round() as i64, 14, plot::BLUE);
                canvas.rect_outline(90, y, 250, 14, plot::LIGHT_GRAY);
                canvas.text(
                    350,
                    y + 4,
                    &format!("{:.1}% ({}/{})", rate * 100.0, m.wins, m.wins + m.losses),
                    1,
                    plot::BLACK,
                );
            }
            None => canvas.text(90, y + 4, "no judged comparisons", 1, plot::GRAY),
        }
    }
    let image = out_dir.join(format!("{stem}.png"));
    canvas.save(&image)?;
    Ok(Rendered {
        csv: csv_path,
        image,
    })
}

/// CSV for one sweep (columns: axis_value, mean, n_scored, n_refusals) plus
/// a mean-score line plot.
pub fn render_sweep(sweep: &SweepResult, out_dir: &Path, stem: &str) -> Result<Rendered> {
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let mut w = csv_writer(&csv_path)?;
    w.write_record(["axis_value", "mean", "n_scored", "n_refusals"])
        .map_err(|e| Error::Serde(e.to_string()))?;
    for p in &sweep.points {
        w.write_record([
            fmt(p.axis_value),
            p.mean_score.map(fmt).unwrap_or_default(),
            p.n_scored.to_string(),
            p.n_refusals.to_string(),
        ])
        .map_err(|e| Error::Serde(e.to_string()))?;
    }
    finish(w, &csv_path)?;

    let (width, height) = (520u32, 360u32);
    let mut canvas = Canvas::new(width, height);
    let defined: Vec<(f64, f64)> = sweep
        .points
        .iter()
        .filter_map(|p| p.mean_score.map(|m| (p.axis_value, m)))
        .collect();
    let axis_name = match sweep.axis {
        SweepAxis::Layer => "layer",
        SweepAxis::Coefficient => "alpha",
    };
    canvas.text(8, 8, &format!("{} expression vs {axis_name}", sweep.trait_id.slug()), 1, plot::BLACK);
    if !defined.is_empty() {
        let x_min = defined.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let x_max = defined.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let xs = Scale {
            data_min: x_min,
            data_max: x_max,
            pixel_start: 50,
            pixel_end: width as i64 - 20,
        };
        let ys = Scale {
            data_min: 100.0,
            data_max: 0.0,
            pixel_start: 30,
            pixel_end: height as i64 - 40,
        };
        canvas.line(50, 30, 50, height as i64 - 40, plot::GRAY);
        canvas.line(50, height as i64 - 40, width as i64 - 20, height as i64 - 40, plot::GRAY);
        for pair in defined.windows(2) {
            canvas.line(
                xs.map(pair[0].0),
                ys.map(pair[0].1),
                xs.map(pair[1].0),
                ys.map(pair[1].1),
                plot::BLUE,
            );
        }
        for &(x, y) in &defined {
            canvas.disc(xs.map(x), ys.map(y), 3, plot::BLUE);
            canvas.text(xs.map(x) - 8, ys.map(y) - 14, &format!("{y:.1}"), 1, plot::BLACK);
        }
    } else {
        canvas.text(50, 60, "no defined means", 1, plot::GRAY);
    }
    let image = out_dir.join(format!("{stem}.png"));
    canvas.save(&image)?;
    Ok(Rendered {
        csv: csv_path,
        image,
    })
}

/// CSV for a causal-independence grid.
pub fn write_grid_csv(
    report: &crate::bfi::GridReport,
    out_dir: &Path,
    stem: &str,
) -> Result<PathBuf> {
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let mut w = csv_writer(&csv_path)?;
    w.write_record([
        "layer",
        "swept_alpha",
        "fixed_mean",
        "fixed_ci",
        "swept_mean",
        "swept_ci",
        "delta_fixed",
        "delta_swept",
    ])
    .map_err(|e| Error::Serde(e.to_string()))?;
    for row in &report.rows {
        w.write_record([
            row.layer.to_string(),
            fmt(row.swept_alpha),
            fmt(row.fixed_score.mean),
            fmt(row.fixed_score.ci_half_width),
            fmt(row.swept_score.mean),
            fmt(row.swept_score.ci_half_width),
            fmt(row.delta_fixed),
            fmt(row.delta_swept),
        ])
        .map_err(|e| Error::Serde(e.to_string()))?;
    }
    finish(w, &csv_path)?;
    Ok(csv_path)
}

/// CSV for a cross-dimensional probe, sweep rows then the composition check.
pub fn write_cross_csv(
    report: &crate::bfi::CrossDimReport,
    out_dir: &Path,
    stem: &str,
) -> Result<PathBuf> {
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let mut w = csv_writer(&csv_path)?;
    w.write_record(["section", "alpha", "primary_score", "secondary_score"])
        .map_err(|e| Error::Serde(e.to_string()))?;
    for row in &report.rows {
        w.write_record([
            "sweep".to_string(),
            fmt(row.alpha),
            fmt(row.primary_score),
            fmt(row.secondary_score),
        ])
        .map_err(|e| Error::Serde(e.to_string()))?;
    }
    let c = &report.composition;
    for (label, value) in [
        ("baseline", c.baseline),
        ("a_only", c.a_only),
        ("b_only", c.b_only),
        ("combined_observed", c.combined_observed),
        ("combined_expected", c.combined_expected),
    ] {
        w.write_record([format!("composition/{label}"), String::new(), String::new(), fmt(value)])
            .map_err(|e| Error::Serde(e.to_string()))?;
    }
    finish(w, &csv_path)?;
    Ok(csv_path)
}

/// Timing CSV for a benchmark run.
pub fn write_timing_csv(report: &BenchmarkReport, out_dir: &Path, stem: &str) -> Result<PathBuf> {
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let mut w = csv_writer(&csv_path)?;
    w.write_record(["pipeline", "total_s", "per_response_s", "responses"])
        .map_err(|e| Error::Serde(e.to_string()))?;
    let t = &report.timing;
    w.write_record([
        "steered".to_string(),
        fmt(t.steered_total_s),
        fmt(t.steered_per_response_s),
        t.responses.to_string(),
    ])
    .map_err(|e| Error::Serde(e.to_string()))?;
    w.write_record([
        "vanilla".to_string(),
        fmt(t.vanilla_total_s),
        fmt(t.vanilla_per_response_s),
        t.responses.to_string(),
    ])
    .map_err(|e| Error::Serde(e.to_string()))?;
    finish(w, &csv_path)?;
    Ok(csv_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{aggregate_win_rates, PairwiseOutcome};
    use crate::bfi::fit_linear;
    use crate::extraction::{cosine_matrix, SweepPoint};
    use crate::judge::{Choice, PairwiseVerdict, PresentationOrder};
    use crate::synthetic::basis_library;

    #[test]
    fn cosine_csv_cells_equal_matrix_values_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let matrix = cosine_matrix(&basis_library("m", 0)).unwrap();
        let rendered = render_cosine(&matrix, dir.path(), "cosine").unwrap();
        assert!(rendered.image.exists());
        let mut reader = csv::Reader::from_path(&rendered.csv).unwrap();
        for (i, row) in reader.records().enumerate() {
            let row = row.unwrap();
            for j in 0..matrix.order.len() {
                let parsed: f64 = row[j + 1].parse().unwrap();
                assert_eq!(parsed, matrix.values[i][j], "cell ({i},{j}) exact");
            }
        }
    }

    #[test]
    fn linearity_csv_carries_fit_numbers_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let fit = fit_linear(&[(-1.0, 1.5), (0.0, 2.1), (1.0, 3.3), (2.0, 3.9)]).unwrap();
        let mut fits = BTreeMap::new();
        fits.insert("outgoing/E".to_string(), fit.clone());
        let rendered = render_linearity(&fits, dir.path(), "linearity")
            .unwrap()
            .expect("non-empty fits render");
        let mut reader = csv::Reader::from_path(&rendered.csv).unwrap();
        let first = reader.records().next().unwrap().unwrap();
        assert_eq!(first[3].parse::<f64>().unwrap(), fit.slope);
        assert_eq!(first[6].parse::<f64>().unwrap(), fit.r_squared);
    }

    #[test]
    fn empty_fit_set_renders_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let none = render_linearity(&BTreeMap::new(), dir.path(), "empty").unwrap();
        assert!(none.is_none());
        assert!(!dir.path().join("empty.csv").exists());
    }

    #[test]
    fn win_rate_csv_matches_table() {
        let dir = tempfile::tempdir().unwrap();
        let verdict = PairwiseVerdict {
            trait_adherence: Choice::A,
            role_consistency: Choice::A,
            response_appropriateness: Choice::B,
            insightfulness: Choice::A,
            overall: Choice::A,
            reasoning: String::new(),
            presentation_order: PresentationOrder::SteeredFirst,
        };
        let table = aggregate_win_rates(&[
            PairwiseOutcome::Verdict(verdict),
            PairwiseOutcome::Malformed,
        ]);
        let rendered = render_win_rates(&table, dir.path(), "rates").unwrap();
        let mut reader = csv::Reader::from_path(&rendered.csv).unwrap();
        let rows: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 5);
        let overall = rows.iter().find(|r| &r[0] == "Overall").unwrap();
        assert_eq!(overall[5].parse::<f64>().unwrap(), 1.0);
        assert_eq!(overall[3].parse::<usize>().unwrap(), 1, "malformed count");
    }

    #[test]
    fn sweep_csv_has_the_documented_columns() {
        let dir = tempfile::tempdir().unwrap();
        let sweep = SweepResult {
            trait_id: crate::ocean::TraitPole::Inventive,
            axis: SweepAxis::Coefficient,
            points: vec![
                SweepPoint {
                    axis_value: 0.0,
                    mean_score: Some(63.25),
                    n_scored: 4,
                    n_refusals: 1,
                    n_malformed: 0,
                },
                SweepPoint {
                    axis_value: 1.0,
                    mean_score: None,
                    n_scored: 0,
                    n_refusals: 5,
                    n_malformed: 0,
                },
            ],
        };
        let rendered = render_sweep(&sweep, dir.path(), "sweep").unwrap();
        let mut reader = csv::Reader::from_path(&rendered.csv).unwrap();
        assert_eq!(
            reader.headers().unwrap(),
            &csv::StringRecord::from(vec!["axis_value", "mean", "n_scored", "n_refusals"])
        );
        let rows: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), 63.25);
        assert_eq!(&rows[1][1], "", "absent mean stays blank");
    }
}
