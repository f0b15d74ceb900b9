//! Multi-seed comparison of all selection strategies.

use rayon::prelude::*;

use crate::engine::{audit_run, run_experiment_audited, ExperimentConfig, Oracle, RunRecord};
use crate::error::{Error, Result};
use crate::ingest::TARGET_RATIOS;
use crate::metrics::{growth_curve, target_fraction, CurvePoint, EfficiencyCurve};
use crate::pool::{split_pool, EssayPool};
use crate::strategies::StrategyKind;

/// One finished run of the grid, with the oracle that served it.
#[derive(Debug, Clone)]
pub struct GridRun {
    pub seed: u64,
    pub strategy: StrategyKind,
    pub record: RunRecord,
    pub oracle: Oracle,
    pub validation: EssayPool,
}

/// Runs every strategy on every seed. Each seed gets its own stratified
/// split, shared by all strategies. Results are ordered strategy-major,
/// then by position in `seeds`, regardless of completion order.
pub fn run_grid(
    pool: &EssayPool,
    base: &ExperimentConfig,
    seeds: &[u64],
    validation_fraction: f64,
) -> Result<Vec<GridRun>> {
    if seeds.is_empty() {
        return Err(Error::config("at least one seed is required"));
    }
    let splits = seeds
        .iter()
        .map(|&seed| {
            let (validation, rest) = split_pool(pool, validation_fraction, true, seed)?;
            Ok((seed, rest, validation))
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(StrategyKind, usize)> = StrategyKind::ALL
        .iter()
        .flat_map(|&s| (0..splits.len()).map(move |i| (s, i)))
        .collect();
    jobs.par_iter()
        .map(|&(strategy, i)| {
            let (seed, ref al_pool, ref validation) = splits[i];
            let config = ExperimentConfig { strategy, ..*base };
            let (record, oracle) = run_experiment_audited(al_pool, validation, &config, seed)?;
            audit_run(&record, &oracle, validation)?;
            Ok(GridRun {
                seed,
                strategy,
                record,
                oracle,
                validation: validation.clone(),
            })
        })
        .collect()
}

/// Median with the usual mean-of-middles rule for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

/// Median of optional values where absent counts as +infinity; an infinite
/// median is reported as absent.
pub fn median_reached(values: &[Option<f64>]) -> Option<f64> {
    let as_inf: Vec<f64> = values.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
    median(&as_inf).filter(|m| m.is_finite())
}

/// Pointwise median of curves sampled at identical fractions.
pub fn median_curve(curves: &[EfficiencyCurve]) -> Result<EfficiencyCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::argument("median of zero curves"))?;
    for c in curves {
        let same = c.len() == first.len()
            && c.points()
                .iter()
                .zip(first.points())
                .all(|(a, b)| a.fraction == b.fraction);
        if !same {
            return Err(Error::argument("curves are sampled at different fractions"));
        }
    }
    let points = (0..first.len())
        .map(|i| {
            let qwks: Vec<f64> = curves.iter().map(|c| c.points()[i].qwk).collect();
            CurvePoint {
                fraction: first.points()[i].fraction,
                qwk: median(&qwks).expect("non-empty"),
            }
        })
        .collect();
    EfficiencyCurve::new(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub strategy: StrategyKind,
    pub ratio: f64,
    pub median_fraction: Option<f64>,
    pub reached: usize,
    pub runs: usize,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub seeds: Vec<u64>,
    pub runs: Vec<GridRun>,
    pub rows: Vec<ComparisonRow>,
    pub median_curves: Vec<(StrategyKind, EfficiencyCurve)>,
}

impl Comparison {
    pub fn row(&self, strategy: StrategyKind, ratio: f64) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy && r.ratio == ratio)
    }

    pub fn median_curve(&self, strategy: StrategyKind) -> Option<&EfficiencyCurve> {
        self.median_curves
            .iter()
            .find(|(s, _)| *s == strategy)
            .map(|(_, c)| c)
    }
}

pub fn summarize(seeds: &[u64], runs: Vec<GridRun>) -> Result<Comparison> {
    let mut rows = Vec::new();
    let mut median_curves = Vec::new();
    for strategy in StrategyKind::ALL {
        let mine: Vec<&GridRun> = runs.iter().filter(|r| r.strategy == strategy).collect();
        let curves: Vec<EfficiencyCurve> = mine.iter().map(|r| growth_curve(&r.record)).collect();
        for ratio in TARGET_RATIOS {
            let fractions = mine
                .iter()
                .zip(&curves)
                .map(|(r, c)| {
                    if r.record.full_data_qwk > 0.0 {
                        target_fraction(c, r.record.full_data_qwk, ratio)
                    } else {
                        Ok(None)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(ComparisonRow {
                strategy,
                ratio,
                median_fraction: median_reached(&fractions),
                reached: fractions.iter().filter(|f| f.is_some()).count(),
                runs: fractions.len(),
            });
        }
        median_curves.push((strategy, median_curve(&curves)?));
    }
    Ok(Comparison {
        seeds: seeds.to_vec(),
        runs,
        rows,
        median_curves,
    })
}

pub fn compare_strategies(
    pool: &EssayPool,
    base: &ExperimentConfig,
    seeds: &[u64],
    validation_fraction: f64,
) -> Result<Comparison> {
    let runs = run_grid(pool, base, seeds, validation_fraction)?;
    summarize(seeds, runs)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:?}"))
}

/// `strategy,target_ratio,median_fraction,reached,runs`, one row per
/// strategy and ratio; unreached medians are `NA`.
pub fn render_table(cmp: &Comparison) -> String {
    let mut s = String::from("strategy,target_ratio,median_fraction,reached,runs\n");
    for r in &cmp.rows {
        s.push_str(&format!(
            "{},{:?},{},{},{}\n",
            r.strategy,
            r.ratio,
            opt(r.median_fraction),
            r.reached,
            r.runs
        ));
    }
    s
}

/// `fraction` followed by one median-QWK column per strategy.
pub fn render_median_curves(cmp: &Comparison) -> String {
    let mut s = String::from("fraction");
    for (k, _) in &cmp.median_curves {
        s.push_str(&format!(",{k}"));
    }
    s.push('\n');
    let Some((_, first)) = cmp.median_curves.first() else {
        return s;
    };
    for (i, p) in first.points().iter().enumerate() {
        s.push_str(&format!("{:?}", p.fraction));
        for (_, c) in &cmp.median_curves {
            s.push_str(&format!(",{:?}", c.points()[i].qwk));
        }
        s.push('\n');
    }
    s
}
