use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;

use super::ring::EuclideanRing;

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

/// Integer matrix; the workhorse type of the library.
pub type IntMatrix = Matrix<BigInt>;

impl<E: Clone> Matrix<E> {
    pub fn filled(rows: usize, cols: usize, value: E) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<E>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    /// Builds a `len × columns.len()` matrix from column vectors.
    pub fn from_columns(len: usize, columns: &[Vec<E>], zero: E) -> Self {
        let mut m = Self::filled(len, columns.len(), zero);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), len);
            for (i, x) in col.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [E] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<E> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<E>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self[(i, j)].clone());
            }
        }
        Self { rows: self.cols, cols: self.rows, data }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// Keeps the columns in `range`.
    pub fn column_slice(&self, range: std::ops::Range<usize>) -> Self {
        let cols = range.len();
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[range.clone()]);
        }
        Self { rows: self.rows, cols, data }
    }

    /// Keeps the rows in `range`.
    pub fn row_slice(&self, range: std::ops::Range<usize>) -> Self {
        let rows = range.len();
        let data = self.data[range.start * self.cols..range.end * self.cols].to_vec();
        Self { rows, cols: self.cols, data }
    }

    pub fn map<F, T>(&self, f: F) -> Matrix<T>
    where
        F: Fn(&E) -> T,
    {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

impl<E> Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    fn index(&self, (i, j): (usize, usize)) -> &E {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<E> IndexMut<(usize, usize)> for Matrix<E> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<E: fmt::Debug> fmt::Debug for Matrix<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{:?}", self.data[i * self.cols + j])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl IntMatrix {
    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn to_nested(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

// Ring-dependent helpers live as free functions so `Matrix` stays a plain container.

pub fn zeros<R: EuclideanRing>(ring: &R, rows: usize, cols: usize) -> Matrix<R::Elem> {
    Matrix::filled(rows, cols, ring.zero())
}

pub fn identity<R: EuclideanRing>(ring: &R, n: usize) -> Matrix<R::Elem> {
    let mut m = zeros(ring, n, n);
    for i in 0..n {
        m[(i, i)] = ring.one();
    }
    m
}

pub fn mat_mul<R: EuclideanRing>(ring: &R, a: &Matrix<R::Elem>, b: &Matrix<R::Elem>) -> Matrix<R::Elem> {
    assert_eq!(a.cols(), b.rows(), "dimension mismatch in product");
    let mut out = zeros(ring, a.rows(), b.cols());
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            let x = &a[(i, k)];
            if ring.is_zero(x) {
                continue;
            }
            for j in 0..b.cols() {
                let y = &b[(k, j)];
                ring.add_mul_assign(&mut out[(i, j)], x, y);
            }
        }
    }
    out
}

pub fn mat_vec<R: EuclideanRing>(ring: &R, a: &Matrix<R::Elem>, v: &[R::Elem]) -> Vec<R::Elem> {
    assert_eq!(a.cols(), v.len(), "dimension mismatch in product");
    (0..a.rows())
        .map(|i| {
            let mut acc = ring.zero();
            for (x, y) in a.row(i).iter().zip(v) {
                ring.add_mul_assign(&mut acc, x, y);
            }
            acc
        })
        .collect()
}

pub fn mat_add<R: EuclideanRing>(ring: &R, a: &Matrix<R::Elem>, b: &Matrix<R::Elem>) -> Matrix<R::Elem> {
    assert!(a.rows() == b.rows() && a.cols() == b.cols());
    let mut out = a.clone();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out[(i, j)] = ring.add(&a[(i, j)], &b[(i, j)]);
        }
    }
    out
}

pub fn mat_scale<R: EuclideanRing>(ring: &R, a: &Matrix<R::Elem>, s: &R::Elem) -> Matrix<R::Elem> {
    a.map(|x| ring.mul(x, s))
}

pub fn is_zero_matrix<R: EuclideanRing>(ring: &R, a: &Matrix<R::Elem>) -> bool {
    (0..a.rows()).all(|i| a.row(i).iter().all(|x| ring.is_zero(x)))
}

/// Converts a matrix between rings through integer representatives.
pub fn convert<R: EuclideanRing, S: EuclideanRing>(from: &R, to: &S, a: &Matrix<R::Elem>) -> Matrix<S::Elem> {
    a.map(|x| to.from_int(&from.to_int(x)))
}
