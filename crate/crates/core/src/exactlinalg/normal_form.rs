//! Echelon, Hermite and Smith normal forms over a Euclidean ring.
//!
//! Pivots are always chosen with minimal Euclidean size; ties are broken by
//! position, so every routine is deterministic.

use std::cmp::Ordering;

use super::matrix::{identity, Matrix};
use super::ring::EuclideanRing;

fn row_sub_mul<R: EuclideanRing>(ring: &R, m: &mut Matrix<R::Elem>, target: usize, q: &R::Elem, source: usize) {
    if ring.is_zero(q) {
        return;
    }
    for j in 0..m.cols() {
        let s = m[(source, j)].clone();
        ring.sub_mul_assign(&mut m[(target, j)], q, &s);
    }
}

fn col_sub_mul<R: EuclideanRing>(ring: &R, m: &mut Matrix<R::Elem>, target: usize, q: &R::Elem, source: usize) {
    if ring.is_zero(q) {
        return;
    }
    for i in 0..m.rows() {
        let s = m[(i, source)].clone();
        ring.sub_mul_assign(&mut m[(i, target)], q, &s);
    }
}

fn row_scale<R: EuclideanRing>(ring: &R, m: &mut Matrix<R::Elem>, row: usize, u: &R::Elem) {
    for x in m.row_mut(row) {
        *x = ring.mul(x, u);
    }
}

fn col_scale<R: EuclideanRing>(ring: &R, m: &mut Matrix<R::Elem>, col: usize, u: &R::Elem) {
    for i in 0..m.rows() {
        m[(i, col)] = ring.mul(&m[(i, col)], u);
    }
}

/// Row operations applied to a matrix together with the accumulated
/// transform `L` and, optionally, its inverse.
struct RowOps<'a, R: EuclideanRing> {
    ring: &'a R,
    l: Option<Matrix<R::Elem>>,
    l_inv: Option<Matrix<R::Elem>>,
}

impl<'a, R: EuclideanRing> RowOps<'a, R> {
    fn new(ring: &'a R, n: usize, track: bool, track_inverse: bool) -> Self {
        Self {
            ring,
            l: track.then(|| identity(ring, n)),
            l_inv: track_inverse.then(|| identity(ring, n)),
        }
    }

    // row_i -= q row_t
    fn sub_mul(&mut self, m: &mut Matrix<R::Elem>, i: usize, q: &R::Elem, t: usize) {
        row_sub_mul(self.ring, m, i, q, t);
        if let Some(l) = self.l.as_mut() {
            row_sub_mul(self.ring, l, i, q, t);
        }
        if let Some(li) = self.l_inv.as_mut() {
            let nq = self.ring.neg(q);
            col_sub_mul(self.ring, li, t, &nq, i);
        }
    }

    fn swap(&mut self, m: &mut Matrix<R::Elem>, a: usize, b: usize) {
        m.swap_rows(a, b);
        if let Some(l) = self.l.as_mut() {
            l.swap_rows(a, b);
        }
        if let Some(li) = self.l_inv.as_mut() {
            li.swap_cols(a, b);
        }
    }

    fn scale(&mut self, m: &mut Matrix<R::Elem>, row: usize, u: &R::Elem) {
        row_scale(self.ring, m, row, u);
        if let Some(l) = self.l.as_mut() {
            row_scale(self.ring, l, row, u);
        }
        if let Some(li) = self.l_inv.as_mut() {
            let ui = self.ring.unit_inverse(u);
            col_scale(self.ring, li, row, &ui);
        }
    }
}

/// Result of [`row_echelon`]: `L · A = E` with `L` unimodular.
#[derive(Clone, Debug)]
pub struct RowEchelon<E> {
    pub echelon: Matrix<E>,
    pub rank: usize,
    /// Pivot column of each of the first `rank` rows, strictly increasing.
    pub pivots: Vec<usize>,
    pub transform: Option<Matrix<E>>,
    pub transform_inverse: Option<Matrix<E>>,
}

/// Row echelon form by Euclidean row reduction.
///
/// With `reduce` set, entries above each pivot are reduced modulo the pivot
/// and pivots are normalized, which yields the Hermite normal form of the row
/// lattice.
pub fn row_echelon<R: EuclideanRing>(
    ring: &R,
    a: &Matrix<R::Elem>,
    track: bool,
    track_inverse: bool,
    reduce: bool,
) -> RowEchelon<R::Elem> {
    let mut m = a.clone();
    let mut ops = RowOps::new(ring, a.rows(), track, track_inverse);
    let mut rank = 0;
    let mut pivots = Vec::new();
    for col in 0..m.cols() {
        if rank == m.rows() {
            break;
        }
        loop {
            let best = (rank..m.rows())
                .filter(|&i| !ring.is_zero(&m[(i, col)]))
                .min_by(|&i, &j| ring.size_cmp(&m[(i, col)], &m[(j, col)]).then(i.cmp(&j)));
            let Some(best) = best else { break };
            ops.swap(&mut m, rank, best);
            let mut clean = true;
            for i in rank + 1..m.rows() {
                if ring.is_zero(&m[(i, col)]) {
                    continue;
                }
                let (q, r) = ring.div_rem(&m[(i, col)], &m[(rank, col)]);
                ops.sub_mul(&mut m, i, &q, rank);
                if !ring.is_zero(&r) {
                    clean = false;
                }
            }
            if clean {
                pivots.push(col);
                rank += 1;
                break;
            }
        }
    }
    if reduce {
        for (r, &col) in pivots.iter().enumerate() {
            let u = ring.normalizing_unit(&m[(r, col)]);
            if !ring.is_one(&u) {
                ops.scale(&mut m, r, &u);
            }
            for i in 0..r {
                if ring.is_zero(&m[(i, col)]) {
                    continue;
                }
                let (mut q, rem) = ring.div_rem(&m[(i, col)], &m[(r, col)]);
                // canonical representative: remainder in [0, pivot)
                if ring.to_int(&rem) < num_bigint::BigInt::from(0) {
                    q = ring.sub(&q, &ring.one());
                }
                ops.sub_mul(&mut m, i, &q, r);
            }
        }
    }
    RowEchelon { echelon: m, rank, pivots, transform: ops.l, transform_inverse: ops.l_inv }
}

/// Rank of a matrix (over the fraction field).
pub fn rank<R: EuclideanRing>(ring: &R, a: &Matrix<R::Elem>) -> usize {
    row_echelon(ring, a, false, false, false).rank
}

/// A lattice (or subspace) given by a basis in Hermite normal form, with
/// exact membership and coordinates.
#[derive(Clone, Debug)]
pub struct LatticeBasis<R: EuclideanRing> {
    ring: R,
    ambient: usize,
    /// Basis vectors as rows, in Hermite normal form.
    rows: Matrix<R::Elem>,
    pivots: Vec<usize>,
}

impl<R: EuclideanRing> LatticeBasis<R> {
    /// Lattice spanned by the columns of `gens`.
    pub fn from_columns(ring: &R, gens: &Matrix<R::Elem>) -> Self {
        Self::from_rows(ring, &gens.transpose())
    }

    /// Lattice spanned by the rows of `gens`.
    pub fn from_rows(ring: &R, gens: &Matrix<R::Elem>) -> Self {
        let e = row_echelon(ring, gens, false, false, true);
        Self {
            ring: ring.clone(),
            ambient: gens.cols(),
            rows: e.echelon.row_slice(0..e.rank),
            pivots: e.pivots,
        }
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Canonical basis, one vector per column.
    pub fn basis_columns(&self) -> Matrix<R::Elem> {
        self.rows.transpose()
    }

    pub fn basis_vector(&self, i: usize) -> Vec<R::Elem> {
        self.rows.row(i).to_vec()
    }

    /// Coordinates of `v` in the canonical basis, or `None` if `v` is not in
    /// the lattice.
    pub fn solve(&self, v: &[R::Elem]) -> Option<Vec<R::Elem>> {
        assert_eq!(v.len(), self.ambient);
        let ring = &self.ring;
        let mut residual = v.to_vec();
        let mut x = Vec::with_capacity(self.rank());
        for (i, &col) in self.pivots.iter().enumerate() {
            // entries left of this pivot are already zero
            if ring.is_zero(&residual[col]) {
                x.push(ring.zero());
                continue;
            }
            let (q, r) = ring.div_rem(&residual[col], &self.rows[(i, col)]);
            if !ring.is_zero(&r) {
                return None;
            }
            for (j, b) in self.rows.row(i).iter().enumerate().skip(col) {
                ring.sub_mul_assign(&mut residual[j], &q, b);
            }
            x.push(q);
        }
        residual.iter().all(|e| ring.is_zero(e)).then_some(x)
    }

    pub fn contains(&self, v: &[R::Elem]) -> bool {
        self.solve(v).is_some()
    }

    /// Equality of lattices (canonical forms agree).
    pub fn same_lattice(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.pivots == other.pivots && self.rows == other.rows
    }
}

/// Columns forming a basis of the kernel `{x : A x = 0}`, in Hermite normal
/// form. Over the integers the basis spans a saturated sublattice.
pub fn kernel_basis<R: EuclideanRing>(ring: &R, a: &Matrix<R::Elem>) -> Matrix<R::Elem> {
    let raw = kernel_rows(ring, a);
    if raw.rows() == 0 {
        return Matrix::filled(a.cols(), 0, ring.zero());
    }
    LatticeBasis::from_rows(ring, &raw).basis_columns()
}

/// Kernel vectors as rows (not normalized).
pub(crate) fn kernel_rows<R: EuclideanRing>(ring: &R, a: &Matrix<R::Elem>) -> Matrix<R::Elem> {
    // L · Aᵀ = E; rows of L beyond the rank are killed by A.
    let e = row_echelon(ring, &a.transpose(), true, false, false);
    let l = e.transform.expect("tracked");
    l.row_slice(e.rank..l.rows())
}

/// Smith normal form `A = U · D · V`.
#[derive(Clone, Debug)]
pub struct Smith<E> {
    /// Diagonal entries, length `min(rows, cols)`, with the divisibility
    /// chain; zero entries come last.
    pub diagonal: Vec<E>,
    pub rank: usize,
    pub u: Matrix<E>,
    pub u_inv: Matrix<E>,
    pub v: Option<Matrix<E>>,
    pub v_inv: Option<Matrix<E>>,
}

impl<E: Clone> Smith<E> {
    /// The diagonal matrix `D` with the shape of the input.
    pub fn d_matrix(&self, rows: usize, cols: usize, zero: E) -> Matrix<E> {
        let mut d = Matrix::filled(rows, cols, zero);
        for (i, x) in self.diagonal.iter().enumerate() {
            d[(i, i)] = x.clone();
        }
        d
    }
}

/// Smith normal form with full transforms.
pub fn smith_normal_form<R: EuclideanRing>(ring: &R, a: &Matrix<R::Elem>) -> Smith<R::Elem> {
    smith(ring, a, true)
}

/// Smith normal form; the right transform is only computed on request.
pub fn smith<R: EuclideanRing>(ring: &R, a: &Matrix<R::Elem>, right: bool) -> Smith<R::Elem> {
    let (rows, cols) = (a.rows(), a.cols());
    let mut m = a.clone();
    // L A R = D; U = L⁻¹, V = R⁻¹.
    let mut ops = RowOps::new(ring, rows, true, true);
    let mut r_mat = right.then(|| identity(ring, cols));
    let mut r_inv = right.then(|| identity(ring, cols));

    let col_sub = |m: &mut Matrix<R::Elem>,
                   r_mat: &mut Option<Matrix<R::Elem>>,
                   r_inv: &mut Option<Matrix<R::Elem>>,
                   j: usize,
                   q: &R::Elem,
                   t: usize| {
        col_sub_mul(ring, m, j, q, t);
        if let Some(r) = r_mat.as_mut() {
            col_sub_mul(ring, r, j, q, t);
        }
        if let Some(ri) = r_inv.as_mut() {
            let nq = ring.neg(q);
            row_sub_mul(ring, ri, t, &nq, j);
        }
    };
    let col_swap = |m: &mut Matrix<R::Elem>,
                    r_mat: &mut Option<Matrix<R::Elem>>,
                    r_inv: &mut Option<Matrix<R::Elem>>,
                    a: usize,
                    b: usize| {
        m.swap_cols(a, b);
        if let Some(r) = r_mat.as_mut() {
            r.swap_cols(a, b);
        }
        if let Some(ri) = r_inv.as_mut() {
            ri.swap_rows(a, b);
        }
    };

    let mut diagonal = Vec::new();
    let mut rank = 0;
    for t in 0..rows.min(cols) {
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if ring.is_zero(&m[(i, j)]) {
                    continue;
                }
                if best.is_none_or(|(bi, bj)| ring.size_cmp(&m[(i, j)], &m[(bi, bj)]) == Ordering::Less) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        ops.swap(&mut m, t, bi);
        col_swap(&mut m, &mut r_mat, &mut r_inv, t, bj);

        loop {
            for i in t + 1..rows {
                if !ring.is_zero(&m[(i, t)]) {
                    let (q, _) = ring.div_rem(&m[(i, t)], &m[(t, t)]);
                    ops.sub_mul(&mut m, i, &q, t);
                }
            }
            for j in t + 1..cols {
                if !ring.is_zero(&m[(t, j)]) {
                    let (q, _) = ring.div_rem(&m[(t, j)], &m[(t, t)]);
                    col_sub(&mut m, &mut r_mat, &mut r_inv, j, &q, t);
                }
            }
            // smallest leftover in the pivot row/column moves into the pivot
            let mut leftover: Option<(bool, usize)> = None;
            for i in t + 1..rows {
                if !ring.is_zero(&m[(i, t)])
                    && leftover.is_none_or(|(is_row, k)| {
                        let cur = if is_row { &m[(k, t)] } else { &m[(t, k)] };
                        ring.size_cmp(&m[(i, t)], cur) == Ordering::Less
                    })
                {
                    leftover = Some((true, i));
                }
            }
            for j in t + 1..cols {
                if !ring.is_zero(&m[(t, j)])
                    && leftover.is_none_or(|(is_row, k)| {
                        let cur = if is_row { &m[(k, t)] } else { &m[(t, k)] };
                        ring.size_cmp(&m[(t, j)], cur) == Ordering::Less
                    })
                {
                    leftover = Some((false, j));
                }
            }
            match leftover {
                Some((true, i)) => {
                    ops.swap(&mut m, t, i);
                    continue;
                }
                Some((false, j)) => {
                    col_swap(&mut m, &mut r_mat, &mut r_inv, t, j);
                    continue;
                }
                None => {}
            }
            // divisibility chain: fold an offending row into the pivot row
            let pivot = m[(t, t)].clone();
            let size_one = ring.size_cmp(&pivot, &ring.one()) != Ordering::Greater;
            if size_one {
                break;
            }
            let offending = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !ring.divides(&pivot, &m[(i, j)])));
            match offending {
                Some(i) => {
                    let minus_one = ring.neg(&ring.one());
                    ops.sub_mul(&mut m, t, &minus_one, i);
                }
                None => break,
            }
        }
        let u = ring.normalizing_unit(&m[(t, t)]);
        if !ring.is_one(&u) {
            ops.scale(&mut m, t, &u);
        }
        diagonal.push(m[(t, t)].clone());
        rank += 1;
    }
    while diagonal.len() < rows.min(cols) {
        diagonal.push(ring.zero());
    }
    Smith {
        diagonal,
        rank,
        u: ops.l_inv.expect("tracked"),
        u_inv: ops.l.expect("tracked"),
        v: r_inv,
        v_inv: r_mat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlinalg::matrix::{mat_mul, mat_vec, IntMatrix};
    use crate::exactlinalg::ring::{Integers, PrimeField};
    use num_bigint::BigInt;
    use num_integer::Integer;
    use num_traits::{Signed, Zero};
    use proptest::prelude::*;

    fn z(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64_rows(rows)
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// Independent oracle: invariant factors via determinantal divisors
    /// (gcd of all k×k minors), brute force.
    fn determinantal_factors(a: &IntMatrix) -> Vec<BigInt> {
        fn det(m: &[Vec<BigInt>]) -> BigInt {
            let n = m.len();
            if n == 0 {
                return BigInt::from(1);
            }
            let mut acc = BigInt::zero();
            for j in 0..n {
                let minor: Vec<Vec<BigInt>> =
                    m[1..].iter().map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, x)| x.clone()).collect()).collect();
                let term = &m[0][j] * det(&minor);
                if j % 2 == 0 {
                    acc += term
                } else {
                    acc -= term
                }
            }
            acc
        }
        fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            if n < k {
                return vec![];
            }
            let mut out = subsets(n - 1, k);
            for mut s in subsets(n - 1, k - 1) {
                s.push(n - 1);
                out.push(s);
            }
            out
        }
        let mut out = Vec::new();
        let mut prev = BigInt::from(1);
        for k in 1..=a.rows().min(a.cols()) {
            let mut g = BigInt::zero();
            for rs in subsets(a.rows(), k) {
                for cs in subsets(a.cols(), k) {
                    let minor: Vec<Vec<BigInt>> = rs.iter().map(|&i| cs.iter().map(|&j| a[(i, j)].clone()).collect()).collect();
                    g = g.gcd(&det(&minor));
                }
            }
            if g.is_zero() {
                out.push(BigInt::zero());
                prev = BigInt::zero();
                continue;
            }
            out.push(&g / &prev);
            prev = g;
        }
        out
    }

    fn check_smith(a: &IntMatrix) -> Smith<BigInt> {
        let s = smith_normal_form(&Integers, a);
        let d = s.d_matrix(a.rows(), a.cols(), BigInt::zero());
        let back = mat_mul(&Integers, &mat_mul(&Integers, &s.u, &d), s.v.as_ref().unwrap());
        assert_eq!(&back, a);
        let ui = mat_mul(&Integers, &s.u, &s.u_inv);
        assert_eq!(ui, identity(&Integers, a.rows()));
        let v = s.v.as_ref().unwrap();
        let vi = mat_mul(&Integers, v, s.v_inv.as_ref().unwrap());
        assert_eq!(vi, identity(&Integers, a.cols()));
        for w in s.diagonal.windows(2) {
            assert!(Integers.divides(&w[0], &w[1]), "chain broken: {:?}", s.diagonal);
        }
        s
    }

    #[test]
    fn smith_examples() {
        let s = check_smith(&z(&[&[2, 4], &[6, 8]]));
        assert_eq!(s.diagonal, big(&[2, 4]));
        assert_eq!(determinantal_factors(&z(&[&[2, 4], &[6, 8]])), big(&[2, 4]));
        let s = check_smith(&z(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]));
        assert_eq!(s.diagonal, big(&[1, 1, 1]));
        let s = check_smith(&z(&[&[0, 0], &[0, 0], &[0, 0]]));
        assert_eq!(s.diagonal, big(&[0, 0]));
        assert_eq!(s.rank, 0);
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_basis(&Integers, &z(&[&[1, 1]])).columns(), vec![big(&[1, -1])]);
        assert_eq!(kernel_basis(&Integers, &z(&[&[2]])).cols(), 0);
        assert_eq!(kernel_basis(&Integers, &z(&[&[1, 2], &[2, 4]])).columns(), vec![big(&[2, -1])]);
    }

    #[test]
    fn kernel_over_field() {
        let f = PrimeField::new(5).unwrap();
        let a = Matrix::from_rows(vec![vec![1u64, 2, 3], vec![0, 1, 1]]);
        let k = kernel_basis(&f, &a);
        assert_eq!(k.cols(), 1);
        assert!(mat_vec(&f, &a, &k.column(0)).iter().all(|&x| x == 0));
    }

    #[test]
    fn lattice_membership() {
        let l = LatticeBasis::from_columns(&Integers, &z(&[&[2, 0], &[0, 3]]));
        assert!(l.contains(&big(&[4, -3])));
        assert!(!l.contains(&big(&[1, 0])));
        let x = l.solve(&big(&[4, 9])).unwrap();
        assert_eq!(x, big(&[2, 3]));
    }

    fn small_matrix() -> impl Strategy<Value = IntMatrix> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-9i64..10, r * c).prop_map(move |v| {
                IntMatrix::from_rows(v.chunks(c).map(|row| row.iter().map(|&x| BigInt::from(x)).collect()).collect())
            })
        })
    }

    proptest! {
        #[test]
        fn smith_reconstructs(a in small_matrix()) {
            let s = check_smith(&a);
            prop_assert_eq!(s.diagonal.clone(), determinantal_factors(&a));
        }

        #[test]
        fn rank_nullity(a in small_matrix()) {
            let k = kernel_basis(&Integers, &a);
            prop_assert_eq!(rank(&Integers, &a) + k.cols(), a.cols());
            for col in k.columns() {
                prop_assert!(mat_vec(&Integers, &a, &col).iter().all(|x| x.is_zero()));
            }
            // saturation: the kernel lattice has trivial elementary divisors
            if k.cols() > 0 {
                let s = smith(&Integers, &k, false);
                prop_assert!(s.diagonal.iter().all(|d| d.abs() == BigInt::from(1)));
            }
        }

        #[test]
        fn pivot_order_independent(a in small_matrix()) {
            // permuting rows and columns does not change invariant factors
            let mut b = a.transpose();
            b.swap_rows(0, b.rows() - 1);
            let s1 = smith(&Integers, &a, false);
            let s2 = smith(&Integers, &b, false);
            prop_assert_eq!(s1.diagonal, s2.diagonal);
        }
    }
}
