use crate::error::{Error, Result};

/// Dense column vector of `f64`.
///
/// Construction through [`DenseVec::new`] rejects non-finite entries;
/// every operation in this crate that consumes a `DenseVec` may assume
/// finiteness.
///
/// ```
/// use matiso::mat::DenseVec;
/// let v = DenseVec::new(vec![1.0, 2.0, 3.0]).unwrap();
/// assert_eq!(v.len(), 3);
/// assert!(DenseVec::new(vec![f64::NAN]).is_err());
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVec {
    data: Vec<f64>,
}

impl DenseVec {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        for (index, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    op: "DenseVec::new",
                    index,
                });
            }
        }
        Ok(Self { data })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![0.0; len],
        }
    }

    /// Wraps values produced by crate-internal arithmetic, which is
    /// closed over finite inputs.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Largest absolute difference between two equal-length vectors.
    pub fn max_abs_diff(&self, other: &DenseVec) -> f64 {
        assert_eq!(self.len(), other.len(), "max_abs_diff on unequal lengths");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for DenseVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for DenseVec {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

/// Dense row-major matrix of `f64`.
///
/// `data[r * cols + c]` holds entry `(r, c)`. Row-major layout is part of
/// the contract: flattened images and stacked hidden states rely on it.
///
/// ```
/// use matiso::mat::DenseMat;
/// let m = DenseMat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
/// assert_eq!(m.get(1, 0), 3.0);
/// assert_eq!(m.transpose().get(0, 1), 3.0);
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                op: "DenseMat::new",
                expected: rows * cols,
                got: data.len(),
            });
        }
        for (index, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    op: "DenseMat::new",
                    index,
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        for row in rows {
            if row.len() != c {
                return Err(Error::LengthMismatch {
                    op: "DenseMat::from_rows",
                    expected: c,
                    got: row.len(),
                });
            }
        }
        Self::new(r, c, rows.concat())
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row `r` viewed as a vector.
    pub fn row_vec(&self, r: usize) -> DenseVec {
        DenseVec::from_raw(self.row(r).to_vec())
    }

    pub fn transpose(&self) -> DenseMat {
        let mut out = DenseMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// `self * x`. Each output entry is reduced in ascending column order,
    /// so repeated runs are bit-identical.
    pub fn matvec(&self, x: &DenseVec) -> Result<DenseVec> {
        if x.len() != self.cols {
            return Err(Error::LengthMismatch {
                op: "DenseMat::matvec",
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.as_slice()) {
                acc += a * b;
            }
            out[r] = acc;
        }
        Ok(DenseVec::from_raw(out))
    }

    pub fn max_abs_diff(&self, other: &DenseMat) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "max_abs_diff on unequal shapes"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMat {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

/// `a * b` with every inner reduction running in ascending index order.
///
/// The fixed order makes products reproducible bit for bit, which the
/// recurrence builder depends on when it compares power chains.
pub fn dense_matmul(a: &DenseMat, b: &DenseMat) -> Result<DenseMat> {
    if a.cols != b.rows {
        return Err(Error::ShapeMismatch {
            op: "dense_matmul",
            a_rows: a.rows,
            a_cols: a.cols,
            b_rows: b.rows,
            b_cols: b.cols,
        });
    }
    let mut out = DenseMat::zeros(a.rows, b.cols);
    for r in 0..a.rows {
        for c in 0..b.cols {
            let mut acc = 0.0;
            for k in 0..a.cols {
                acc += a.data[r * a.cols + k] * b.data[k * b.cols + c];
            }
            out.data[r * b.cols + c] = acc;
        }
    }
    Ok(out)
}
