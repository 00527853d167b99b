//! Monte Carlo accuracy under converter reference-ladder variation.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::xml_escape;
use crate::tnn::{accuracy, ComponentAssignment, ComponentSource, TnnModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariationConfig {
    /// Relative standard deviation of every reference level.
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for VariationConfig {
    fn default() -> Self {
        Self { sigma: 0.10, trials: 200, seed: 0 }
    }
}

impl VariationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if self.trials == 0 {
            return Err(Error::Config("at least one trial is required".into()));
        }
        Ok(())
    }
}

/// Nominal levels `i/2^k` for `i = 1..2^k−1`.
pub fn nominal_thresholds(k: u32) -> Vec<f64> {
    let levels = 1u32 << k;
    (1..levels).map(|i| i as f64 / levels as f64).collect()
}

/// Nominal levels each scaled by an independent `N(1, σ²)` draw, sorted.
pub fn perturb_thresholds<R: Rng + ?Sized>(k: u32, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(1..=4).contains(&k) {
        return Err(Error::Config(format!("precision must be 1..=4 bits, got {k}")));
    }
    let normal = Normal::new(1.0, sigma).map_err(|e| Error::Config(format!("sigma {sigma}: {e}")))?;
    let mut t: Vec<f64> = nominal_thresholds(k).into_iter().map(|x| x * normal.sample(rng)).collect();
    t.sort_by(f64::total_cmp);
    Ok(t)
}

/// Converter output code: how many thresholds lie at or below `x`.
pub fn quantize_with_thresholds(x: f64, thresholds: &[f64]) -> u8 {
    let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    thresholds.partition_point(|&t| t <= x) as u8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub nominal_accuracy: f64,
    /// Empty when read back from a summary file.
    #[serde(default)]
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl VariationReport {
    fn from_samples(nominal_accuracy: f64, accuracies: Vec<f64>, cfg: &VariationConfig) -> Self {
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let var = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        let min = accuracies.iter().copied().fold(f64::INFINITY, f64::min);
        let max = accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { nominal_accuracy, accuracies, mean, std: var.sqrt(), min, max, sigma: cfg.sigma, seed: cfg.seed }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["trial", "accuracy"])?;
        for (i, a) in self.accuracies.iter().enumerate() {
            w.write_record([i.to_string(), format!("{a:.6}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Summary without the per-trial samples.
    pub fn write_summary_json(&self, path: &Path) -> Result<()> {
        let mut v = serde_json::to_value(self)?;
        if let Some(o) = v.as_object_mut() {
            o.remove("accuracies");
            o.insert("trials".into(), self.accuracies.len().into());
        }
        std::fs::write(path, serde_json::to_string_pretty(&v)?)?;
        Ok(())
    }
}

/// Test accuracy over `cfg.trials` independent ladder draws, one ladder per
/// input feature per trial. `features` are normalized rows.
pub fn mc_accuracy(
    model: &TnnModel,
    assignment: Option<(&ComponentAssignment, &dyn ComponentSource)>,
    features: &[Vec<f64>],
    labels: &[usize],
    cfg: &VariationConfig,
) -> Result<VariationReport> {
    cfg.validate()?;
    if features.is_empty() {
        return Err(Error::Dataset("empty test split".into()));
    }
    let k = model.k;
    let nominal = nominal_thresholds(k);
    let nominal_codes: Vec<Vec<u8>> =
        features.iter().map(|r| r.iter().map(|&x| quantize_with_thresholds(x, &nominal)).collect()).collect();
    let nominal_accuracy = accuracy(model, assignment, &nominal_codes, labels)?;
    let accuracies = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(trial as u64);
            let ladders = (0..model.features())
                .map(|_| perturb_thresholds(k, cfg.sigma, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let codes: Vec<Vec<u8>> = features
                .iter()
                .map(|r| r.iter().zip(&ladders).map(|(&x, t)| quantize_with_thresholds(x, t)).collect())
                .collect();
            accuracy(model, assignment, &codes, labels)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VariationReport::from_samples(nominal_accuracy, accuracies, cfg))
}

/// Box plot (quartiles, 1.5·IQR whiskers, outlier dots) of accuracy in
/// percent per labelled series.
pub fn boxplot_svg(series: &[(String, Vec<f64>)], title: &str) -> String {
    let (w, h, pad) = (120.0 + 90.0 * series.len() as f64, 400.0, 60.0);
    let all = series.iter().flat_map(|s| s.1.iter().copied());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (lo, hi) = if lo.is_finite() { ((lo - 0.01).max(0.0), (hi + 0.01).min(1.0)) } else { (0.0, 1.0) };
    let span = (hi - lo).max(1e-9);
    let sy = |y: f64| h - pad - (y - lo) / span * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, xml_escape(title));
    let _ = writeln!(s, r#"<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{}" stroke="black"/>"#, h - pad);
    for t in 0..=4 {
        let v = lo + span * t as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.1}%</text>"#, pad - 6.0, sy(v) + 4.0, v * 100.0);
    }
    for (i, (label, xs)) in series.iter().enumerate() {
        if xs.is_empty() {
            continue;
        }
        let mut v = xs.clone();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let (a, b) = (pos.floor() as usize, pos.ceil() as usize);
            v[a] + (v[b] - v[a]) * (pos - a as f64)
        };
        let (q1, med, q3) = (q(0.25), q(0.5), q(0.75));
        let iqr = q3 - q1;
        let wlo = v.iter().copied().find(|&x| x >= q1 - 1.5 * iqr).unwrap_or(q1);
        let whi = v.iter().rev().copied().find(|&x| x <= q3 + 1.5 * iqr).unwrap_or(q3);
        let cx = pad + 50.0 + 90.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{cx}" y1="{:.2}" x2="{cx}" y2="{:.2}" stroke="black"/>"#, sy(wlo), sy(whi));
        let _ = writeln!(
            s,
            r##"<rect x="{}" y="{:.2}" width="40" height="{:.2}" fill="#9ecae1" stroke="black"/>"##,
            cx - 20.0,
            sy(q3),
            (sy(q1) - sy(q3)).max(0.5)
        );
        let _ = writeln!(s, r#"<line x1="{}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="black" stroke-width="2"/>"#, cx - 20.0, sy(med), cx + 20.0, sy(med));
        for &x in v.iter().filter(|&&x| x < wlo || x > whi) {
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{:.2}" r="2" fill="none" stroke="black"/>"#, sy(x));
        }
        let _ = writeln!(s, r#"<text x="{cx}" y="{}" text-anchor="middle">{}</text>"#, h - pad + 18.0, xml_escape(label));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tnn::quantize;

    #[test]
    fn zero_sigma_is_nominal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 1..=4 {
            assert_eq!(perturb_thresholds(k, 0.0, &mut rng).unwrap(), nominal_thresholds(k));
        }
        assert_eq!(nominal_thresholds(1), vec![0.5]);
        assert!(perturb_thresholds(5, 0.1, &mut rng).is_err());
    }

    #[test]
    fn nominal_ladder_matches_quantize() {
        for k in 1..=4 {
            let t = nominal_thresholds(k);
            for i in 0..=2000 {
                let x = i as f64 / 2000.0;
                assert_eq!(quantize_with_thresholds(x, &t) as u32, quantize(x, k), "k={k} x={x}");
            }
            for x in [-0.3, 1.7, f64::NAN, 0.25, 0.5, 0.75] {
                assert_eq!(quantize_with_thresholds(x, &t) as u32, quantize(x, k));
            }
        }
    }

    #[test]
    fn perturbed_mean_close_to_nominal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let t = perturb_thresholds(2, 0.1, &mut rng).unwrap();
            assert!(t.windows(2).all(|w| w[0] <= w[1]));
            for (s, x) in sums.iter_mut().zip(t) {
                *s += x;
            }
        }
        for (s, nom) in sums.iter().zip(nominal_thresholds(2)) {
            assert!((s / n as f64 - nom).abs() / nom < 0.01);
        }
    }

    #[test]
    fn config_validation() {
        assert!(VariationConfig { sigma: -0.1, ..Default::default() }.validate().is_err());
        assert!(VariationConfig { trials: 0, ..Default::default() }.validate().is_err());
        assert!(VariationConfig::default().validate().is_ok());
    }
}
