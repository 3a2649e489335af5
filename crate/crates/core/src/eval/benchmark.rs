use std::fmt::{self, Write as _};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::histeq::{hist_equalize_depth, DepthCdf};
use super::metrics::{estimate_contact_times, first_bounce_error, l2_traj, mean_trajectory, L2Mode};
use crate::formats::write_json;
use crate::neural::RegressionTarget;
use crate::pipeline::{
    apply_trajnet, correct_depths, features_of, network_trajectory, pixel_track, ModelDir,
};
use crate::scenegen::{SceneSample, MIN_CORRUPTED_DEPTH};
use crate::simulator::Trajectory;
use crate::{Error, Result};

/// Rows of the benchmark table, in display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Mean training trajectory for every scene.
    DatasetPrior,
    /// Simulation over the noisy depth.
    DepthFwdS,
    /// Simulation over noisy depth histogram-matched to training depth.
    DepthEqFwdS,
    /// Descriptor-only regression of pixel tracks.
    Regression2d,
    /// Descriptor-only regression of 3D positions.
    Regression3d,
    /// Simulation over depth rescaled by the depth network.
    DepNet,
    /// Trajectory network applied to the initial trajectory.
    TrajNet,
    /// Trajectory network applied after depth correction.
    Ours,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::DatasetPrior,
        Method::DepthFwdS,
        Method::DepthEqFwdS,
        Method::Regression2d,
        Method::Regression3d,
        Method::DepNet,
        Method::TrajNet,
        Method::Ours,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::DatasetPrior => "Dataset prior",
            Method::DepthFwdS => "Depth+fwdS",
            Method::DepthEqFwdS => "DepthEq+fwdS",
            Method::Regression2d => "2D regression",
            Method::Regression3d => "3D regression",
            Method::DepNet => "DepNet",
            Method::TrajNet => "TrajNet",
            Method::Ours => "Ours",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-record scores of one method; a column is empty when the method
/// does not produce that quantity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub l2_2d: Vec<f64>,
    pub l2_3d: Vec<f64>,
    pub first_bounce: Vec<f64>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub method: Method,
    pub name: String,
    /// Mean pixel error.
    pub l2_2d: Option<f64>,
    /// Mean 3D error in meters.
    pub l2_3d: Option<f64>,
    /// Mean first-bounce time error in seconds.
    pub first_bounce: Option<f64>,
    pub count: usize,
    pub per_record: Scores,
}

impl Row {
    fn new(method: Method, per_record: Scores, count: usize) -> Self {
        Self {
            method,
            name: method.label().into(),
            l2_2d: mean(&per_record.l2_2d),
            l2_3d: mean(&per_record.l2_3d),
            first_bounce: mean(&per_record.first_bounce),
            count,
            per_record,
        }
    }
}

/// One ordering between table rows on mean L2-3D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub description: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub record_ids: Vec<String>,
    pub rows: Vec<Row>,
}

impl EvalReport {
    pub fn row(&self, method: Method) -> Option<&Row> {
        self.rows.iter().find(|r| r.method == method)
    }

    fn l2_3d(&self, m: Method) -> Option<f64> {
        self.row(m).and_then(|r| r.l2_3d)
    }

    /// Share of records on which `a` has strictly lower 3D error than `b`.
    pub fn fraction_better(&self, a: Method, b: Method) -> Option<f64> {
        let (x, y) = (&self.row(a)?.per_record.l2_3d, &self.row(b)?.per_record.l2_3d);
        if x.is_empty() || x.len() != y.len() {
            return None;
        }
        Some(x.iter().zip(y).filter(|(p, q)| p < q).count() as f64 / x.len() as f64)
    }

    /// `Ours <= TrajNet <= Depth+fwdS`, `Ours <= DepNet <= Depth+fwdS`
    /// and the dataset prior worst, all on mean L2-3D. An ordering that
    /// involves a missing row fails.
    pub fn check_orderings(&self) -> Vec<OrderingCheck> {
        use Method::*;
        let le = |a: Method, b: Method| {
            let holds = matches!((self.l2_3d(a), self.l2_3d(b)), (Some(x), Some(y)) if x <= y);
            OrderingCheck { description: format!("{a} <= {b}"), holds }
        };
        let mut out = vec![le(Ours, TrajNet), le(TrajNet, DepthFwdS), le(Ours, DepNet), le(DepNet, DepthFwdS)];
        let prior = self.l2_3d(DatasetPrior);
        let others: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method != DatasetPrior)
            .filter_map(|r| r.l2_3d)
            .collect();
        out.push(OrderingCheck {
            description: format!("{DatasetPrior} worst"),
            holds: matches!(prior, Some(p) if others.iter().all(|o| *o <= p)),
        });
        out
    }

    pub fn orderings_hold(&self) -> bool {
        self.check_orderings().iter().all(|c| c.holds)
    }

    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |x| format!("{x:.digits$}"));
        let header = ["Method", "L2-2D (px)", "L2-3D (m)", "First bounce (s)", "N"];
        let body: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [r.name.clone(), cell(r.l2_2d, 2), cell(r.l2_3d, 3), cell(r.first_bounce, 3), r.count.to_string()]
            })
            .collect();
        let mut width = header.map(str::len);
        for row in &body {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            for (i, (c, w)) in cells.iter().zip(width).enumerate() {
                if i == 0 {
                    let _ = write!(out, "{c:<w$}");
                } else {
                    let _ = write!(out, "  {c:>w$}");
                }
            }
            out.push('\n');
        };
        line(&header.map(String::from));
        line(&width.map(|w| "-".repeat(w)));
        for row in &body {
            line(row);
        }
        out
    }

    pub fn save(&self, json_path: &Path, table_path: &Path) -> Result<()> {
        write_json(json_path, self)?;
        std::fs::write(table_path, self.to_table()).map_err(|e| Error::io(table_path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { methods: Method::ALL.to_vec() }
    }
}

fn l2_pixels(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / 2;
    a.chunks(2)
        .zip(b.chunks(2))
        .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
        .sum::<f64>()
        / n.max(1) as f64
}

/// 3D error, pixel error and first-bounce error of `pred` on `sample`.
pub fn score_trajectory(pred: &Trajectory, sample: &SceneSample) -> Result<(f64, f64, f64)> {
    let gt = &sample.gt_trajectory;
    let l3 = l2_traj(pred, gt, L2Mode::ThreeD)?;
    let l2 = l2_pixels(&pixel_track(pred, &sample.gt_depth)?, &pixel_track(gt, &sample.gt_depth)?);
    let fb = first_bounce_error(pred, gt, sample.sim().duration);
    Ok((l2, l3, fb))
}

fn score_all(preds: &[Trajectory], test: &[SceneSample]) -> Result<Scores> {
    let rows: Vec<(f64, f64, f64)> = preds
        .par_iter()
        .zip(test)
        .map(|(p, s)| score_trajectory(p, s))
        .collect::<Result<_>>()?;
    Ok(Scores {
        l2_2d: rows.iter().map(|r| r.0).collect(),
        l2_3d: rows.iter().map(|r| r.1).collect(),
        first_bounce: rows.iter().map(|r| r.2).collect(),
    })
}

/// Histogram-matches each noisy map to the training depth distribution
/// and simulates over it.
fn depth_eq_trajectories(train: &[SceneSample], test: &[SceneSample]) -> Result<Vec<Trajectory>> {
    let max_depth = train
        .iter()
        .chain(test)
        .flat_map(|s| [s.gt_depth.max(), s.noisy_depth.max()])
        .fold(0.0, f64::max);
    let target = DepthCdf::fit(train.iter().map(|s| &s.gt_depth), max_depth)?;
    let source = DepthCdf::fit(train.iter().map(|s| &s.noisy_depth), max_depth)?;
    test.par_iter()
        .map(|s| s.simulate_on(&hist_equalize_depth(&s.noisy_depth, &source, &target, MIN_CORRUPTED_DEPTH)?))
        .collect()
}

/// Evaluates every requested method on `test`. Training records supply the
/// dataset prior and the depth histograms; a method whose checkpoint is
/// absent from `models` fails with [`Error::MissingCheckpoint`].
pub fn run_benchmark(
    train: &[SceneSample],
    test: &[SceneSample],
    models: &ModelDir,
    cfg: &BenchmarkConfig,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InvalidInput("empty test split".into()));
    }
    let wants = |m: Method| cfg.methods.contains(&m);
    let feats = features_of(test)?;
    let descs: Vec<&[f64]> = feats.iter().map(|f| f.desc_image.as_slice()).collect();
    let initial: Vec<&[f64]> = feats.iter().map(|f| f.initial.as_slice()).collect();
    let n = test.len();
    let from_flat = |flat: Vec<Vec<f64>>| -> Result<Vec<Trajectory>> {
        flat.iter().zip(test).map(|(f, s)| network_trajectory(f, s)).collect()
    };

    let mut rows = Vec::new();
    for &method in Method::ALL.iter().filter(|m| wants(**m)) {
        let scores = match method {
            Method::DatasetPrior => {
                let mut prior = mean_trajectory(train.iter().map(|s| &s.gt_trajectory))?;
                prior.contact_times = estimate_contact_times(&prior, &test[0].sim().gravity);
                score_all(&vec![prior; n], test)?
            }
            Method::DepthFwdS => {
                let preds: Vec<Trajectory> = test.iter().map(|s| s.initial_trajectory.clone()).collect();
                score_all(&preds, test)?
            }
            Method::DepthEqFwdS => score_all(&depth_eq_trajectories(train, test)?, test)?,
            Method::Regression3d => {
                let r = models.require_regressor(RegressionTarget::Positions3d)?;
                score_all(&from_flat(r.apply(&descs)?)?, test)?
            }
            Method::Regression2d => {
                let r = models.require_regressor(RegressionTarget::Pixels2d)?;
                let out = r.apply(&descs)?;
                let l2_2d = out
                    .iter()
                    .zip(test)
                    .map(|(p, s)| Ok(l2_pixels(p, &pixel_track(&s.gt_trajectory, &s.gt_depth)?)))
                    .collect::<Result<_>>()?;
                Scores { l2_2d, ..Scores::default() }
            }
            Method::TrajNet => {
                let g = models.require_trajnet()?;
                score_all(&from_flat(apply_trajnet(g, &initial, &descs)?)?, test)?
            }
            Method::DepNet | Method::Ours => {
                let g1 = models.require_trajnet()?;
                let h = models.require_depthnet()?;
                let corrected = correct_depths(g1, h, test, &feats)?;
                let xh: Vec<Trajectory> = corrected.into_iter().map(|c| c.trajectory).collect();
                if method == Method::DepNet {
                    score_all(&xh, test)?
                } else {
                    let g = models.require_final_trajnet()?;
                    let flat: Vec<Vec<f64>> = xh.iter().map(Trajectory::flatten).collect();
                    let refs: Vec<&[f64]> = flat.iter().map(Vec::as_slice).collect();
                    score_all(&from_flat(apply_trajnet(g, &refs, &descs)?)?, test)?
                }
            }
        };
        rows.push(Row::new(method, scores, n));
    }
    Ok(EvalReport {
        record_ids: test.iter().map(|s| s.id().to_string()).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(values: &[(Method, f64)]) -> EvalReport {
        EvalReport {
            record_ids: vec!["000000".into()],
            rows: values
                .iter()
                .map(|&(m, v)| Row::new(m, Scores { l2_3d: vec![v], ..Default::default() }, 1))
                .collect(),
        }
    }

    #[test]
    fn orderings() {
        use Method::*;
        let good = report(&[(DatasetPrior, 0.9), (DepthFwdS, 0.5), (DepNet, 0.3), (TrajNet, 0.4), (Ours, 0.2)]);
        assert!(good.orderings_hold());
        let bad = report(&[(DatasetPrior, 0.1), (DepthFwdS, 0.5), (DepNet, 0.3), (TrajNet, 0.4), (Ours, 0.2)]);
        let failed: Vec<_> = bad.check_orderings().into_iter().filter(|c| !c.holds).collect();
        assert_eq!(failed.len(), 1);
        assert!(failed[0].description.contains("prior"));
        let missing = report(&[(DatasetPrior, 0.9), (DepthFwdS, 0.5)]);
        assert!(!missing.orderings_hold());
    }

    #[test]
    fn table_is_aligned() {
        let r = report(&[(Method::DatasetPrior, 0.91234), (Method::Ours, 0.2)]);
        let table = r.to_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
        assert!(lines[2].contains("0.912"));
        assert!(lines[2].trim_end().ends_with('1'));
    }

    #[test]
    fn pixel_distance() {
        assert_eq!(l2_pixels(&[0.0, 0.0, 1.0, 1.0], &[3.0, 4.0, 1.0, 1.0]), 2.5);
    }
}
