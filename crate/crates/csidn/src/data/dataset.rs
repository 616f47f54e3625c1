//! In-memory dataset representation.

use ndarray::Array2;

use crate::error::{Error, Result};

/// One sample: features, optional ground-truth label, observed (possibly
/// noisy) label, and an optional confidence score in the observed label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub x: Vec<f64>,
    pub y_clean: Option<usize>,
    pub y_noisy: usize,
    pub r: Option<f64>,
}

/// Column-oriented dataset. `noisy_labels` always holds the labels used for
/// training; for clean data it simply mirrors `clean_labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub clean_labels: Option<Vec<usize>>,
    pub noisy_labels: Vec<usize>,
    pub confidence: Option<Vec<f64>>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn point(&self, i: usize) -> LabeledPoint {
        LabeledPoint {
            x: self.features.row(i).to_vec(),
            y_clean: self.clean_labels.as_ref().map(|v| v[i]),
            y_noisy: self.noisy_labels[i],
            r: self.confidence.as_ref().map(|v| v[i]),
        }
    }

    pub fn from_points(points: &[LabeledPoint], num_classes: usize) -> Result<Self> {
        if points.is_empty() {
            return Ok(Self {
                features: Array2::zeros((0, 0)),
                clean_labels: None,
                noisy_labels: Vec::new(),
                confidence: None,
                num_classes,
            });
        }
        let dim = points[0].x.len();
        let mut features = Array2::zeros((points.len(), dim));
        let has_clean = points[0].y_clean.is_some();
        let has_conf = points[0].r.is_some();
        let mut clean = has_clean.then(|| Vec::with_capacity(points.len()));
        let mut conf = has_conf.then(|| Vec::with_capacity(points.len()));
        let mut noisy = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.x.len() != dim {
                return Err(Error::Data(format!(
                    "point {i} has {} features, expected {dim}",
                    p.x.len()
                )));
            }
            if p.y_clean.is_some() != has_clean || p.r.is_some() != has_conf {
                return Err(Error::Data(format!(
                    "point {i} has inconsistent optional columns"
                )));
            }
            features.row_mut(i).assign(&ndarray::ArrayView1::from(&p.x));
            noisy.push(p.y_noisy);
            if let (Some(v), Some(y)) = (clean.as_mut(), p.y_clean) {
                v.push(y);
            }
            if let (Some(v), Some(r)) = (conf.as_mut(), p.r) {
                v.push(r);
            }
        }
        let ds = Self {
            features,
            clean_labels: clean,
            noisy_labels: noisy,
            confidence: conf,
            num_classes,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Check label ranges, confidence bounds, and column lengths.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.noisy_labels.len() != n {
            return Err(Error::Data(format!(
                "{} noisy labels for {n} rows",
                self.noisy_labels.len()
            )));
        }
        for labels in [Some(&self.noisy_labels), self.clean_labels.as_ref()]
            .into_iter()
            .flatten()
        {
            if labels.len() != n {
                return Err(Error::Data(format!("{} labels for {n} rows", labels.len())));
            }
            if let Some(&bad) = labels.iter().find(|&&y| y >= self.num_classes) {
                return Err(Error::Data(format!(
                    "label {bad} out of range for {} classes",
                    self.num_classes
                )));
            }
        }
        if let Some(conf) = &self.confidence {
            if conf.len() != n {
                return Err(Error::Data(format!(
                    "{} confidence scores for {n} rows",
                    conf.len()
                )));
            }
            if let Some(&bad) = conf.iter().find(|&&r| !(0.0..=1.0).contains(&r)) {
                return Err(Error::Data(format!("confidence {bad} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Confidence scores, or a schema error for pipelines that need them.
    pub fn require_confidence(&self) -> Result<&[f64]> {
        self.confidence
            .as_deref()
            .ok_or_else(|| Error::Schema("dataset is missing the confidence column `r`".into()))
    }

    /// Clean labels, or a data error for corruption paths that need them.
    pub fn require_clean(&self) -> Result<&[usize]> {
        self.clean_labels
            .as_deref()
            .ok_or_else(|| Error::Data("dataset is missing clean labels".into()))
    }

    /// Fraction of observed labels that disagree with the clean labels.
    pub fn measured_noise_rate(&self) -> Option<f64> {
        let clean = self.clean_labels.as_ref()?;
        if self.is_empty() {
            return None;
        }
        let flipped = clean
            .iter()
            .zip(&self.noisy_labels)
            .filter(|(a, b)| a != b)
            .count();
        Some(flipped as f64 / self.len() as f64)
    }

    /// Rows selected by index (clone).
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(ndarray::Axis(0), indices),
            clean_labels: self
                .clean_labels
                .as_ref()
                .map(|v| indices.iter().map(|&i| v[i]).collect()),
            noisy_labels: indices.iter().map(|&i| self.noisy_labels[i]).collect(),
            confidence: self
                .confidence
                .as_ref()
                .map(|v| indices.iter().map(|&i| v[i]).collect()),
            num_classes: self.num_classes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_round_trip() {
        let points = vec![
            LabeledPoint {
                x: vec![0.0, 1.0],
                y_clean: Some(0),
                y_noisy: 1,
                r: Some(0.25),
            },
            LabeledPoint {
                x: vec![2.0, -1.0],
                y_clean: Some(2),
                y_noisy: 2,
                r: Some(1.0),
            },
        ];
        let ds = Dataset::from_points(&points, 3).unwrap();
        assert_eq!(ds.point(0), points[0]);
        assert_eq!(ds.point(1), points[1]);
        assert_eq!(ds.measured_noise_rate(), Some(0.5));
    }

    #[test]
    fn validation_catches_bad_confidence_and_labels() {
        let mut ds = Dataset::from_points(
            &[LabeledPoint {
                x: vec![0.0],
                y_clean: None,
                y_noisy: 0,
                r: None,
            }],
            1,
        )
        .unwrap();
        ds.confidence = Some(vec![1.5]);
        assert!(ds.validate().is_err());
        ds.confidence = None;
        ds.noisy_labels = vec![7];
        assert!(ds.validate().is_err());
    }
}
