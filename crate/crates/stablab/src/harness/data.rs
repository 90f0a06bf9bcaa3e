//! Data ingestion and generation.

use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::losses::{dot, normalize_rows, sigmoid, Dataset, ParamVector};
use crate::optimizers::stream_rng;

/// Number of integer features per breast-cancer record.
pub const BREAST_CANCER_FEATURES: usize = 9;

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedData {
    pub dataset: Dataset,
    /// Records read, including the dropped ones.
    pub raw_rows: usize,
    /// Records dropped for missing values.
    pub dropped: usize,
}

/// Parse breast-cancer records: `id, f1, …, f9, class`.
///
/// Features (integers 1–10) are scaled to `v/10`, a constant intercept
/// column is appended (dimension 10) and rows are normalized to unit norm.
/// Class 4 maps to `y = 1`, class 2 to `y = 0`. Records with a `?` are
/// dropped.
pub fn parse_breast_cancer(text: &str) -> Result<LoadedData> {
    let dim = BREAST_CANCER_FEATURES + 1;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut raw_rows = 0;
    let mut dropped = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        raw_rows += 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != BREAST_CANCER_FEATURES + 2 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {} columns, found {}", BREAST_CANCER_FEATURES + 2, fields.len()),
            });
        }
        if fields.contains(&"?") {
            dropped += 1;
            continue;
        }
        for f in &fields[1..=BREAST_CANCER_FEATURES] {
            let v: u8 = f
                .parse()
                .map_err(|_| Error::Parse { line: line_no, msg: format!("feature '{f}' is not an integer") })?;
            if !(1..=10).contains(&v) {
                return Err(Error::Parse { line: line_no, msg: format!("feature {v} outside 1..=10") });
            }
            x.push(f64::from(v) / 10.0);
        }
        x.push(1.0);
        y.push(match fields[BREAST_CANCER_FEATURES + 1] {
            "2" => 0,
            "4" => 1,
            other => return Err(Error::Parse { line: line_no, msg: format!("class '{other}' is not 2 or 4") }),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let x = normalize_rows(&x, dim)?;
    Ok(LoadedData { dataset: Dataset::labeled(x, dim, y)?, raw_rows, dropped })
}

pub fn load_breast_cancer(path: &Path) -> Result<LoadedData> {
    parse_breast_cancer(&std::fs::read_to_string(path)?)
}

/// Synthetic logistic data: rows drawn from `N(0, I_d)` and normalized to
/// unit norm, labels `y ~ Bernoulli(σ(θ*ᵀx))` with `θ* = (1, …, 1)`.
pub fn gen_synthetic(d: usize, n: usize, seed: u64) -> Result<(Dataset, ParamVector)> {
    if d < 1 || n < 1 {
        return Err(Error::InvalidParameter("d and n must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let theta_star = vec![1.0; d];
    let raw: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    let x = normalize_rows(&raw, d)?;
    let y = x
        .chunks(d)
        .map(|row| u8::from(rng.random_bool(sigmoid(dot(&theta_star, row)))))
        .collect();
    Ok((Dataset::labeled(x, d, y)?, ParamVector::new(theta_star)?))
}

/// Split into a subsample of `size` points drawn without replacement and
/// the remaining points, both in original order.
pub fn subsample(data: &Dataset, size: usize, seed: u64) -> Result<(Dataset, Option<Dataset>)> {
    if size < 1 || size > data.len() {
        return Err(Error::InvalidParameter(format!(
            "subsample size {size} must lie in 1..={}",
            data.len()
        )));
    }
    let mut rng = stream_rng(seed, 3);
    let mut chosen = index::sample(&mut rng, data.len(), size).into_vec();
    chosen.sort_unstable();
    let mut taken = vec![false; data.len()];
    for &i in &chosen {
        taken[i] = true;
    }
    let rest: Vec<usize> = (0..data.len()).filter(|&i| !taken[i]).collect();
    let rest = if rest.is_empty() { None } else { Some(data.select(&rest)?) };
    Ok((data.select(&chosen)?, rest))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "1000025,5,1,1,1,2,1,3,1,1,2\n\
                           1002945,5,4,4,5,7,10,3,2,1,2\n\
                           1057013,8,4,5,1,2,?,7,3,1,4\n\
                           1015425,3,1,1,1,2,2,3,1,1,2\n\
                           1017122,8,10,10,8,7,10,9,7,1,4\n";

    #[test]
    fn fixture_drops_missing_rows() {
        let data = parse_breast_cancer(FIXTURE).unwrap();
        assert_eq!(data.dataset.len(), 4);
        assert_eq!((data.raw_rows, data.dropped), (5, 1));
        assert_eq!(data.dataset.labels().unwrap(), &[0, 0, 0, 1]);
        assert_eq!(data.dataset.dim(), Some(10));
        for row in data.dataset.design().unwrap().chunks(10) {
            assert!((dot(row, row).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(matches!(parse_breast_cancer("1,2,3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_breast_cancer("1,1,1,1,1,1,1,1,1,1,3\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_breast_cancer("1,1,1,1,1,1,1,1,1,x,2\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_breast_cancer("1,1,1,1,1,1,1,1,1,11,2\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn synthetic_is_deterministic_and_normalized() {
        let (a, star) = gen_synthetic(5, 300, 9).unwrap();
        let (b, _) = gen_synthetic(5, 300, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(star.as_slice(), &[1.0; 5]);
        for row in a.design().unwrap().chunks(5) {
            assert!((dot(row, row).sqrt() - 1.0).abs() < 1e-12);
        }
        let (c, _) = gen_synthetic(5, 300, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn subsample_partitions() {
        let (data, _) = gen_synthetic(3, 50, 1).unwrap();
        let (s, rest) = subsample(&data, 20, 4).unwrap();
        let rest = rest.unwrap();
        assert_eq!((s.len(), rest.len()), (20, 30));
        assert!(subsample(&data, 51, 4).is_err());
        let (all, none) = subsample(&data, 50, 4).unwrap();
        assert_eq!(all, data);
        assert!(none.is_none());
    }
}
