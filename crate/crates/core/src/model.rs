//! Linear-model data, the main/nuisance split, standardization and
//! multicollinearity diagnostics.

use std::io::Read;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, select_columns, sym_eigenvalues, Mat, Vector};
use nalgebra::{Cholesky, Dyn};

/// Designs whose condition number exceeds this are flagged as multicollinear.
pub const MULTICOLLINEARITY_THRESHOLD: f64 = 30.0;

/// Response vector plus design matrix with named covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vector,
    x: Mat,
    names: Vec<String>,
    response: String,
}

impl Dataset {
    pub fn new(x: Mat, y: Vector) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(x, y, names, "y".to_string())
    }

    pub fn with_names(x: Mat, y: Vector, names: Vec<String>, response: String) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!("design has {} rows but response has length {}", x.nrows(), y.len())));
        }
        if names.len() != x.ncols() {
            return Err(Error::Dimension(format!("{} names for {} columns", names.len(), x.ncols())));
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidInput("design has no columns".into()));
        }
        if x.ncols() > x.nrows() {
            return Err(Error::InvalidInput(format!("p = {} exceeds n = {}", x.ncols(), x.nrows())));
        }
        if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in data".into()));
        }
        Ok(Self { y, x, names, response })
    }

    /// Reads a headered numeric CSV; `response` names the response column and
    /// every other column becomes a covariate.
    pub fn from_csv<R: Read>(reader: R, response: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers().map_err(|e| Error::Io(e.to_string()))?.iter().map(str::to_string).collect();
        let resp_col = headers.iter().position(|h| h == response).ok_or_else(|| Error::MissingColumn(response.to_string()))?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Io(e.to_string()))?;
            if rec.len() != headers.len() {
                return Err(Error::Parse {
                    row: i + 1,
                    column: String::new(),
                    message: format!("expected {} fields, found {}", headers.len(), rec.len()),
                });
            }
            let mut row = Vec::with_capacity(rec.len());
            for (j, cell) in rec.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row: i + 1,
                    column: headers[j].clone(),
                    message: format!("non-numeric value {cell:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse { row: i + 1, column: headers[j].clone(), message: "non-finite value".into() });
                }
                row.push(v);
            }
            rows.push(row);
        }
        let n = rows.len();
        let cov: Vec<usize> = (0..headers.len()).filter(|&j| j != resp_col).collect();
        let x = Mat::from_fn(n, cov.len(), |i, j| rows[i][cov[j]]);
        let y = Vector::from_fn(n, |i, _| rows[i][resp_col]);
        let names = cov.iter().map(|&j| headers[j].clone()).collect();
        Self::with_names(x, y, names, response.to_string())
    }

    pub fn load_csv(path: &std::path::Path, response: &str) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_csv(f, response)
    }

    pub fn x(&self) -> &Mat {
        &self.x
    }
    pub fn y(&self) -> &Vector {
        &self.y
    }
    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn response_name(&self) -> &str {
        &self.response
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Rows picked by index (repeats allowed), keeping names.
    pub fn rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            y: Vector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i])),
            x: crate::linalg::select_rows(&self.x, idx),
            names: self.names.clone(),
            response: self.response.clone(),
        }
    }
}

/// Zero-based column indices of the main (kept) and nuisance blocks.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PartitionSpec {
    pub main_idx: Vec<usize>,
    pub nuisance_idx: Vec<usize>,
}

impl PartitionSpec {
    pub fn new(main_idx: Vec<usize>, nuisance_idx: Vec<usize>) -> Self {
        Self { main_idx, nuisance_idx }
    }

    /// First `p1` columns main, the next `p2` nuisance.
    pub fn leading(p1: usize, p2: usize) -> Self {
        Self::new((0..p1).collect(), (p1..p1 + p2).collect())
    }

    pub fn p1(&self) -> usize {
        self.main_idx.len()
    }
    pub fn p2(&self) -> usize {
        self.nuisance_idx.len()
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.main_idx.is_empty() {
            return Err(Error::InvalidInput("main block is empty".into()));
        }
        let mut seen = vec![false; p];
        for &j in self.main_idx.iter().chain(&self.nuisance_idx) {
            if j >= p {
                return Err(Error::InvalidInput(format!("column index {j} out of range for p = {p}")));
            }
            if seen[j] {
                return Err(Error::InvalidInput(format!("column index {j} appears twice")));
            }
            seen[j] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput(format!("partition covers {} of {p} columns", self.p1() + self.p2())));
        }
        Ok(())
    }

    /// Natural column order, main block first.
    pub fn order(&self) -> Vec<usize> {
        self.main_idx.iter().chain(&self.nuisance_idx).copied().collect()
    }
}

/// The `(X1, X2)` split with the gram blocks every estimator needs.
///
/// The annihilator `M1` is `n x n`; it is built on request by [`Self::m1`]
/// rather than stored, since the estimators only ever need its action on
/// `X2` and `y`, which the gram blocks provide.
#[derive(Debug, Clone)]
pub struct PartitionedDesign {
    x1: Mat,
    x2: Mat,
    g11: Mat,
    g12: Mat,
    g22: Mat,
    g11_chol: Cholesky<f64, Dyn>,
    g22_1: Mat,
}

impl PartitionedDesign {
    pub fn new(x: &Mat, spec: &PartitionSpec) -> Result<Self> {
        spec.validate(x.ncols())?;
        let x1 = select_columns(x, &spec.main_idx);
        let x2 = select_columns(x, &spec.nuisance_idx);
        let g11 = x1.tr_mul(&x1);
        let g12 = x1.tr_mul(&x2);
        let g22 = x2.tr_mul(&x2);
        let g11_chol = cholesky(&g11, "X1'X1")?;
        let g22_1 = &g22 - g12.transpose() * g11_chol.solve(&g12);
        Ok(Self { x1, x2, g11, g12, g22, g11_chol, g22_1 })
    }

    pub fn n(&self) -> usize {
        self.x1.nrows()
    }
    pub fn p1(&self) -> usize {
        self.x1.ncols()
    }
    pub fn p2(&self) -> usize {
        self.x2.ncols()
    }
    pub fn x1(&self) -> &Mat {
        &self.x1
    }
    pub fn x2(&self) -> &Mat {
        &self.x2
    }
    /// `X1'X1`
    pub fn g11(&self) -> &Mat {
        &self.g11
    }
    /// `X1'X2`
    pub fn g12(&self) -> &Mat {
        &self.g12
    }
    /// `X2'X2`
    pub fn g22(&self) -> &Mat {
        &self.g22
    }
    /// `X2' M1 X2`
    pub fn g22_1(&self) -> &Mat {
        &self.g22_1
    }

    pub fn solve_g11(&self, b: &Vector) -> Vector {
        self.g11_chol.solve(b)
    }

    /// `M1 = I - X1 (X1'X1)^{-1} X1'`, materialized.
    pub fn m1(&self) -> Mat {
        let n = self.n();
        let proj = &self.x1 * self.g11_chol.solve(&self.x1.transpose());
        Mat::identity(n, n) - proj
    }

    /// `M1 v` without forming `M1`.
    pub fn apply_m1(&self, v: &Vector) -> Vector {
        v - &self.x1 * self.g11_chol.solve(&self.x1.tr_mul(v))
    }
}

pub fn partition(dataset: &Dataset, spec: &PartitionSpec) -> Result<PartitionedDesign> {
    PartitionedDesign::new(dataset.x(), spec)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ConditionNumber {
    pub value: f64,
    pub multicollinear: bool,
}

/// `lambda_max / lambda_min` of `X'X`.
pub fn condition_number(x: &Mat) -> Result<ConditionNumber> {
    condition_number_of_gram(&x.tr_mul(x))
}

pub fn condition_number_of_gram(g: &Mat) -> Result<ConditionNumber> {
    let ev = sym_eigenvalues(g);
    let (min, max) = (ev[0], ev[ev.len() - 1]);
    if !(max > 0.0) || min < 1e-12 * max {
        return Err(Error::Singular("X'X is numerically singular".into()));
    }
    let value = max / min;
    Ok(ConditionNumber { value, multicollinear: value > MULTICOLLINEARITY_THRESHOLD })
}

/// Column centering/scaling learned from one dataset, reusable on another.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StandardizationTransform {
    pub x_mean: Vec<f64>,
    pub x_sd: Vec<f64>,
    pub y_mean: f64,
}

impl StandardizationTransform {
    pub fn fit(dataset: &Dataset) -> Result<Self> {
        let n = dataset.n();
        if n < 2 {
            return Err(Error::InvalidInput("need at least two rows to standardize".into()));
        }
        let x = dataset.x();
        let mut x_mean = Vec::with_capacity(x.ncols());
        let mut x_sd = Vec::with_capacity(x.ncols());
        for (j, col) in x.column_iter().enumerate() {
            let m = col.mean();
            let ss: f64 = col.iter().map(|v| (v - m).powi(2)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            if !(sd > 1e-12 * m.abs().max(1.0)) {
                return Err(Error::DegenerateColumn(dataset.names()[j].clone()));
            }
            x_mean.push(m);
            x_sd.push(sd);
        }
        Ok(Self { x_mean, x_sd, y_mean: dataset.y().mean() })
    }

    pub fn apply_x(&self, x: &Mat) -> Mat {
        Mat::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.x_mean[j]) / self.x_sd[j])
    }

    pub fn invert_x(&self, z: &Mat) -> Mat {
        Mat::from_fn(z.nrows(), z.ncols(), |i, j| z[(i, j)] * self.x_sd[j] + self.x_mean[j])
    }

    pub fn apply_y(&self, y: &Vector) -> Vector {
        y.map(|v| v - self.y_mean)
    }

    /// Raw-scale `(intercept, slopes)` equivalent to standardized coefficients.
    pub fn to_raw(&self, beta_std: &Vector) -> (f64, Vector) {
        let slopes = Vector::from_fn(beta_std.len(), |j, _| beta_std[j] / self.x_sd[j]);
        let shift: f64 = slopes.iter().zip(&self.x_mean).map(|(b, m)| b * m).sum();
        (self.y_mean - shift, slopes)
    }

    /// Predictions on raw covariates from standardized-scale coefficients.
    pub fn predict(&self, x_raw: &Mat, beta_std: &Vector) -> Vector {
        self.apply_x(x_raw) * beta_std + Vector::from_element(x_raw.nrows(), self.y_mean)
    }
}

/// Standardized covariates, centered response, and the transform that did it.
pub fn standardize(dataset: &Dataset) -> Result<(Dataset, StandardizationTransform)> {
    let t = StandardizationTransform::fit(dataset)?;
    let out = Dataset { x: t.apply_x(dataset.x()), y: t.apply_y(dataset.y()), names: dataset.names.clone(), response: dataset.response.clone() };
    Ok((out, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn orthonormal_two_column_projector() {
        let s = 0.5_f64.sqrt();
        let x = Mat::from_row_slice(4, 2, &[s, 0.5, s, -0.5, 0.0, 0.5, 0.0, 0.5]);
        let pd = PartitionedDesign::new(&x, &PartitionSpec::new(vec![0], vec![1])).unwrap();
        let x1 = x.column(0).into_owned();
        let expected = Mat::identity(4, 4) - &x1 * x1.transpose();
        assert!((pd.m1() - expected).abs().max() < 1e-14);
    }

    #[test]
    fn main_columns_keep_requested_order() {
        let mut rng = crate::rng::stream(1, &[]);
        let x = Mat::from_fn(10, 8, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng));
        let spec = PartitionSpec::new(vec![0, 1, 3, 4, 5], vec![2, 6, 7]);
        let pd = PartitionedDesign::new(&x, &spec).unwrap();
        for (k, &j) in [0, 1, 3, 4, 5].iter().enumerate() {
            assert_eq!(pd.x1().column(k), x.column(j));
        }
        for (k, &j) in [2, 6, 7].iter().enumerate() {
            assert_eq!(pd.x2().column(k), x.column(j));
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let x = Mat::identity(4, 3);
        assert!(PartitionSpec::new(vec![0, 3], vec![1]).validate(3).is_err());
        assert!(PartitionSpec::new(vec![0, 1], vec![1, 2]).validate(3).is_err());
        assert!(PartitionSpec::new(vec![0], vec![1]).validate(3).is_err());
        assert!(PartitionSpec::new(vec![], vec![0, 1, 2]).validate(3).is_err());
        let singular = Mat::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let spec = PartitionSpec::new(vec![0, 1], vec![]);
        assert!(matches!(PartitionedDesign::new(&singular, &spec), Err(Error::Singular(_))));
        assert!(PartitionedDesign::new(&x, &PartitionSpec::leading(2, 1)).is_ok());
    }

    #[test]
    fn condition_number_simple_cases() {
        let cn = condition_number(&Mat::identity(5, 3)).unwrap();
        assert_relative_eq!(cn.value, 1.0, epsilon = 1e-12);
        assert!(!cn.multicollinear);
        let cn = condition_number(&Mat::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]))).unwrap();
        assert_relative_eq!(cn.value, 4.0, epsilon = 1e-12);
        let sing = Mat::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert!(condition_number(&sing).is_err());
    }

    #[test]
    fn equicorrelation_gram_condition_number() {
        let rho = 0.9;
        let g = Mat::from_fn(20, 20, |i, j| if i == j { 1.0 } else { rho });
        let cn = condition_number_of_gram(&g).unwrap();
        let expected = (1.0 + 19.0 * rho) / (1.0 - rho);
        assert_relative_eq!(cn.value, expected, max_relative = 1e-10);
        assert_relative_eq!(cn.value, 181.0, max_relative = 1e-10);
        assert!(cn.multicollinear);
    }

    #[test]
    fn three_point_standardization() {
        let ds = Dataset::new(Mat::from_column_slice(3, 1, &[1.0, 2.0, 3.0]), Vector::from_vec(vec![4.0, 5.0, 9.0])).unwrap();
        let (z, t) = standardize(&ds).unwrap();
        assert_eq!(t.x_mean, vec![2.0]);
        assert_relative_eq!(t.x_sd[0], 1.0);
        assert_eq!(z.x().as_slice(), &[-1.0, 0.0, 1.0]);
        assert_relative_eq!(z.y().sum(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn standardized_column_is_fixed_point() {
        let col = [-1.0, 0.0, 1.0];
        let ds = Dataset::new(Mat::from_column_slice(3, 1, &col), Vector::from_vec(vec![0.0, 1.0, 2.0])).unwrap();
        let (z, t) = standardize(&ds).unwrap();
        assert_eq!(z.x().as_slice(), &col);
        assert_eq!(t.x_mean[0], 0.0);
        assert_eq!(t.x_sd[0], 1.0);
    }

    #[test]
    fn constant_column_named_in_error() {
        let x = Mat::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let ds = Dataset::with_names(x, Vector::zeros(3), vec!["a".into(), "flat".into()], "y".into()).unwrap();
        assert_eq!(standardize(&ds).unwrap_err(), Error::DegenerateColumn("flat".into()));
    }

    #[test]
    fn csv_errors_carry_location() {
        let text = "a,b,y\n1,2,3\n4,oops,6\n";
        match Dataset::from_csv(text.as_bytes(), "y") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(Dataset::from_csv(text.as_bytes(), "z").unwrap_err(), Error::MissingColumn("z".into()));
        let ok = Dataset::from_csv("a,y,b\n1,2,3\n4,5,7\n7,8,8\n".as_bytes(), "y").unwrap();
        assert_eq!(ok.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(ok.y().as_slice(), &[2.0, 5.0, 8.0]);
        assert_eq!(ok.x()[(2, 1)], 8.0);
    }

    #[test]
    fn dataset_invariants_enforced() {
        assert!(Dataset::new(Mat::zeros(3, 2), Vector::zeros(4)).is_err());
        assert!(Dataset::new(Mat::zeros(2, 3), Vector::zeros(2)).is_err());
        let mut x = Mat::zeros(3, 1);
        x[(0, 0)] = f64::NAN;
        assert!(Dataset::new(x, Vector::zeros(3)).is_err());
    }
}
