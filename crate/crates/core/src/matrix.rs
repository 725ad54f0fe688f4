//! Dense exact matrices over the integers and rationals.
//!
//! Every matrix stores [`Scalar`] entries (arbitrary-precision rationals) plus
//! a [`Ring`] tag.  Over [`Ring::Int`] all entries are integral and Smith
//! normal form uses exact integer pivoting; over [`Ring::Rat`] Gaussian
//! elimination applies and the Smith form degenerates to unit pivots.
//!
//! Composition convention: matrices act on column vectors, so `f.then(&g)`
//! (first `f`, then `g`) is the product `g * f`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

pub type Scalar = BigRational;

/// Coefficient ring tag carried at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ring {
    /// Integers; entries must have denominator one.
    Int,
    /// Rationals.
    Rat,
}

impl std::fmt::Display for Ring {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ring::Int => write!(f, "Z"),
            Ring::Rat => write!(f, "Q"),
        }
    }
}

pub fn int(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat(num: i64, den: i64) -> Scalar {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Dense row-major matrix with an explicit ring tag.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub ring: Ring,
    data: Vec<Scalar>,
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} over {}", self.rows, self.cols, self.ring)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.at(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize, ring: Ring) -> Self {
        Matrix { rows, cols, ring, data: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize, ring: Ring) -> Self {
        let mut m = Matrix::zero(n, n, ring);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn from_rows(ring: Ring, rows: &[Vec<Scalar>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows.iter().flat_map(|row| row.iter().cloned()).collect();
        Matrix { rows: r, cols: c, ring, data }
    }

    pub fn from_i64(ring: Ring, rows: &[&[i64]]) -> Self {
        let converted: Vec<Vec<Scalar>> =
            rows.iter().map(|row| row.iter().map(|&x| int(x)).collect()).collect();
        Matrix::from_rows(ring, &converted)
    }

    pub fn at(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.denom().is_one())
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j { self.at(i, j).is_one() } else { self.at(i, j).is_zero() }
                })
            })
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zero(self.cols, self.rows, self.ring);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.at(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        assert_eq!(self.ring, other.ring, "ring mismatch in mul");
        let mut out = Matrix::zero(self.rows, other.cols, self.ring);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.at(i, j).clone();
                    out.set(i, j, cur + a * b);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        assert_eq!(self.ring, other.ring);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, ring: self.ring, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        assert_eq!(self.ring, other.ring);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, ring: self.ring, data }
    }

    pub fn neg(&self) -> Matrix {
        let data = self.data.iter().map(|a| -a).collect();
        Matrix { rows: self.rows, cols: self.cols, ring: self.ring, data }
    }

    pub fn scale(&self, c: &Scalar) -> Matrix {
        let data = self.data.iter().map(|a| a * c).collect();
        Matrix { rows: self.rows, cols: self.cols, ring: self.ring, data }
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.ring, other.ring);
        let mut out = Matrix::zero(self.rows, self.cols + other.cols, self.ring);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.at(i, j).clone());
            }
            for j in 0..other.cols {
                out.set(i, self.cols + j, other.at(i, j).clone());
            }
        }
        out
    }

    /// Vertical concatenation, `self` on top.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols);
        assert_eq!(self.ring, other.ring);
        let mut out = Matrix::zero(self.rows + other.rows, self.cols, self.ring);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.at(i, j).clone());
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out.set(self.rows + i, j, other.at(i, j).clone());
            }
        }
        out
    }

    /// Block diagonal `[self 0; 0 other]`.
    pub fn block_diag(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.ring, other.ring);
        let mut out = Matrix::zero(self.rows + other.rows, self.cols + other.cols, self.ring);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.at(i, j).clone());
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out.set(self.rows + i, self.cols + j, other.at(i, j).clone());
            }
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut out = Matrix::zero(rows.len(), cols.len(), self.ring);
        for (oi, &i) in rows.iter().enumerate() {
            for (oj, &j) in cols.iter().enumerate() {
                out.set(oi, oj, self.at(i, j).clone());
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<Scalar> {
        (0..self.cols).map(|j| self.at(i, j).clone()).collect()
    }

    pub fn with_ring(&self, ring: Ring) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, ring, data: self.data.clone() }
    }

    /// Composition in diagram order: first `self`, then `g`.
    pub fn then(&self, g: &Matrix) -> Matrix {
        g.mul(self)
    }

    /// Rank over the fraction field.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        let mut pivot_row = 0;
        for col in 0..m.cols {
            let found = (pivot_row..m.rows).find(|&r| !m.at(r, col).is_zero());
            let Some(r) = found else { continue };
            m.swap_rows(pivot_row, r);
            let inv = m.at(pivot_row, col).recip();
            for j in 0..m.cols {
                let v = m.at(pivot_row, j) * &inv;
                m.set(pivot_row, j, v);
            }
            for i in 0..m.rows {
                if i != pivot_row && !m.at(i, col).is_zero() {
                    let factor = m.at(i, col).clone();
                    for j in 0..m.cols {
                        let v = m.at(i, j) - &factor * m.at(pivot_row, j);
                        m.set(i, j, v);
                    }
                }
            }
            rank += 1;
            pivot_row += 1;
            if pivot_row == m.rows {
                break;
            }
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[a] += c * row[b]
    fn row_axpy(&mut self, a: usize, c: &Scalar, b: usize) {
        for j in 0..self.cols {
            let v = self.at(a, j) + c * self.at(b, j);
            self.set(a, j, v);
        }
    }

    /// col[a] += c * col[b]
    fn col_axpy(&mut self, a: usize, c: &Scalar, b: usize) {
        for i in 0..self.rows {
            let v = self.at(i, a) + c * self.at(i, b);
            self.set(i, a, v);
        }
    }

    fn scale_row(&mut self, i: usize, c: &Scalar) {
        for j in 0..self.cols {
            let v = self.at(i, j) * c;
            self.set(i, j, v);
        }
    }

    fn scale_col(&mut self, j: usize, c: &Scalar) {
        for i in 0..self.rows {
            let v = self.at(i, j) * c;
            self.set(i, j, v);
        }
    }
}

/// Smith normal form `d = u * a * v` with recorded inverses.
///
/// `u` and `v` are invertible over the ring; `d` is diagonal with each
/// diagonal entry dividing the next (over `Rat` the nonzero entries are 1).
/// `u_inv` and `v_inv` satisfy `u * u_inv = I` and `v * v_inv = I`, so
/// `a = u_inv * d * v_inv`.
#[derive(Clone, Debug)]
pub struct Snf {
    pub d: Matrix,
    pub u: Matrix,
    pub u_inv: Matrix,
    pub v: Matrix,
    pub v_inv: Matrix,
}

impl Snf {
    /// Number of nonzero diagonal entries.
    pub fn rank(&self) -> usize {
        (0..self.d.rows.min(self.d.cols)).take_while(|&i| !self.d.at(i, i).is_zero()).count()
    }

    /// Nonzero diagonal entries, each dividing the next.
    pub fn diagonal(&self) -> Vec<Scalar> {
        (0..self.rank()).map(|i| self.d.at(i, i).clone()).collect()
    }
}

/// Smith normal form by exact pivoting.
///
/// Over `Int` the pivot chosen at each step is a minimal-absolute-value
/// nonzero entry, with Euclidean reduction of its row and column; the final
/// pass enforces the divisibility chain and positive diagonal.  Over `Rat`
/// any nonzero pivot is scaled to 1.
pub fn smith_normal_form(a: &Matrix) -> Snf {
    let mut d = a.clone();
    let mut u = Matrix::identity(a.rows, a.ring);
    let mut u_inv = Matrix::identity(a.rows, a.ring);
    let mut v = Matrix::identity(a.cols, a.ring);
    let mut v_inv = Matrix::identity(a.cols, a.ring);
    if a.ring == Ring::Int {
        assert!(a.is_integral(), "integer SNF requires integral entries");
    }

    let n = d.rows.min(d.cols);
    let mut k = 0;
    while k < n {
        let pivot = find_pivot(&d, k);
        let Some((pi, pj)) = pivot else { break };
        // Row swap k<->pi: track u (left) and u_inv (right inverse).
        d.swap_rows(k, pi);
        u.swap_rows(k, pi);
        u_inv.swap_cols(k, pi);
        d.swap_cols(k, pj);
        v.swap_cols(k, pj);
        v_inv.swap_rows(k, pj);

        if d.ring == Ring::Rat {
            let c = d.at(k, k).recip();
            d.scale_row(k, &c);
            u.scale_row(k, &c);
            u_inv.scale_col(k, &c.recip());
            for i in (k + 1)..d.rows {
                if !d.at(i, k).is_zero() {
                    let f = -d.at(i, k).clone();
                    d.row_axpy(i, &f, k);
                    u.row_axpy(i, &f, k);
                    u_inv.col_axpy(k, &(-&f), i);
                }
            }
            for j in (k + 1)..d.cols {
                if !d.at(k, j).is_zero() {
                    let f = -d.at(k, j).clone();
                    d.col_axpy(j, &f, k);
                    v.col_axpy(j, &f, k);
                    v_inv.row_axpy(k, &(-&f), j);
                }
            }
            k += 1;
            continue;
        }

        // Integer case: Euclidean reduction until pivot divides its row and
        // column, then clear.
        let mut clean = false;
        while !clean {
            clean = true;
            for i in (k + 1)..d.rows {
                if !d.at(i, k).is_zero() {
                    let q = div_floor_rational(d.at(i, k), d.at(k, k));
                    let f = -q;
                    d.row_axpy(i, &f, k);
                    u.row_axpy(i, &f, k);
                    u_inv.col_axpy(k, &(-&f), i);
                    if !d.at(i, k).is_zero() {
                        // Remainder nonzero: swap it into pivot position.
                        d.swap_rows(k, i);
                        u.swap_rows(k, i);
                        u_inv.swap_cols(k, i);
                        clean = false;
                    }
                }
            }
            for j in (k + 1)..d.cols {
                if !d.at(k, j).is_zero() {
                    let q = div_floor_rational(d.at(k, j), d.at(k, k));
                    let f = -q;
                    d.col_axpy(j, &f, k);
                    v.col_axpy(j, &f, k);
                    v_inv.row_axpy(k, &(-&f), j);
                    if !d.at(k, j).is_zero() {
                        d.swap_cols(k, j);
                        v.swap_cols(k, j);
                        v_inv.row_axpy(j, &Scalar::zero(), j); // no-op, keep shape symmetric
                        v_inv.swap_rows(k, j);
                        clean = false;
                    }
                }
            }
        }
        k += 1;
    }

    // Positive diagonal over Int, unit diagonal over Rat was handled above.
    if d.ring == Ring::Int {
        for i in 0..n {
            if d.at(i, i).is_negative() {
                let m1 = -Scalar::one();
                d.scale_row(i, &m1);
                u.scale_row(i, &m1);
                u_inv.scale_col(i, &m1);
            }
        }
        // Divisibility fixup: if d[i] does not divide d[i+1], fold the pair.
        let rank = (0..n).take_while(|&i| !d.at(i, i).is_zero()).count();
        let mut stable = false;
        while !stable {
            stable = true;
            for i in 0..rank.saturating_sub(1) {
                let a_ = d.at(i, i).clone();
                let b_ = d.at(i + 1, i + 1).clone();
                if !(&b_ % &a_).is_zero() {
                    stable = false;
                    // col[i] += col[i+1]; creates entry b at (i+1, i).
                    d.col_axpy(i, &Scalar::one(), i + 1);
                    v.col_axpy(i, &Scalar::one(), i + 1);
                    v_inv.row_axpy(i + 1, &(-Scalar::one()), i);
                    // Reduce the 2x2 block back to diagonal form.
                    reduce_pair(&mut d, &mut u, &mut u_inv, &mut v, &mut v_inv, i);
                }
            }
        }
    }

    debug_assert!(u.mul(&u_inv).is_identity());
    debug_assert!(v.mul(&v_inv).is_identity());
    debug_assert_eq!(u.mul(a).mul(&v), d);
    Snf { d, u, u_inv, v, v_inv }
}

/// Minimal-absolute-value nonzero entry in the trailing block at `(k.., k..)`.
fn find_pivot(d: &Matrix, k: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in k..d.rows {
        for j in k..d.cols {
            let x = d.at(i, j);
            if x.is_zero() {
                continue;
            }
            match &best {
                None => best = Some((i, j)),
                Some((bi, bj)) => {
                    if x.abs() < d.at(*bi, *bj).abs() {
                        best = Some((i, j));
                    }
                }
            }
        }
    }
    best
}

/// Floor division of integral rationals, as a rational.
fn div_floor_rational(a: &Scalar, b: &Scalar) -> Scalar {
    use num_integer::Integer;
    debug_assert!(a.denom().is_one() && b.denom().is_one());
    let q = a.numer().div_floor(b.numer());
    BigRational::from_integer(q)
}

/// Re-diagonalize rows/cols i, i+1 after a divisibility fold.
fn reduce_pair(
    d: &mut Matrix,
    u: &mut Matrix,
    u_inv: &mut Matrix,
    v: &mut Matrix,
    v_inv: &mut Matrix,
    i: usize,
) {
    loop {
        let sub_zero = d.at(i + 1, i).is_zero()
            && d.at(i, i + 1).is_zero()
            && !d.at(i, i).is_zero()
            && (d.at(i + 1, i + 1) % d.at(i, i)).is_zero();
        if sub_zero {
            break;
        }
        // Pick min-|.| nonzero among the 2x2 block into (i, i).
        let mut best = (i, i);
        for (r, c) in [(i, i), (i, i + 1), (i + 1, i), (i + 1, i + 1)] {
            let x = d.at(r, c);
            if x.is_zero() {
                continue;
            }
            if d.at(best.0, best.1).is_zero() || x.abs() < d.at(best.0, best.1).abs() {
                best = (r, c);
            }
        }
        if best.0 != i {
            d.swap_rows(i, i + 1);
            u.swap_rows(i, i + 1);
            u_inv.swap_cols(i, i + 1);
        }
        if best.1 != i {
            d.swap_cols(i, i + 1);
            v.swap_cols(i, i + 1);
            v_inv.swap_rows(i, i + 1);
        }
        for r in [i + 1] {
            if !d.at(r, i).is_zero() {
                let q = div_floor_rational(d.at(r, i), d.at(i, i));
                let f = -q;
                d.row_axpy(r, &f, i);
                u.row_axpy(r, &f, i);
                u_inv.col_axpy(i, &(-&f), r);
            }
        }
        for c in [i + 1] {
            if !d.at(i, c).is_zero() {
                let q = div_floor_rational(d.at(i, c), d.at(i, i));
                let f = -q;
                d.col_axpy(c, &f, i);
                v.col_axpy(c, &f, i);
                v_inv.row_axpy(i, &(-&f), c);
            }
        }
        if d.at(i, i).is_negative() {
            let m1 = -Scalar::one();
            d.scale_row(i, &m1);
            u.scale_row(i, &m1);
            u_inv.scale_col(i, &m1);
        }
        if d.at(i + 1, i + 1).is_negative() {
            let m1 = -Scalar::one();
            d.scale_row(i + 1, &m1);
            u.scale_row(i + 1, &m1);
            u_inv.scale_col(i + 1, &m1);
        }
    }
}

/// Solve `a * x = b` for a matrix `x` over the tagged ring (integral solution
/// when the ring is `Int`).  Returns one solution, or an error if none exists.
pub fn solve_right(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows != b.rows {
        return Err(Error::Dimension(format!(
            "solve_right: lhs has {} rows, rhs has {}",
            a.rows, b.rows
        )));
    }
    if a.ring != b.ring {
        return Err(Error::Ring(format!("solve_right: {} vs {}", a.ring, b.ring)));
    }
    let snf = smith_normal_form(a);
    // a x = b  <=>  d (v_inv x) = u b; solve diagonal then x = v y.
    let rhs = snf.u.mul(b);
    let mut y = Matrix::zero(a.cols, b.cols, a.ring);
    let r = snf.rank();
    for i in 0..a.rows {
        for j in 0..b.cols {
            let val = rhs.at(i, j);
            if i < r {
                let d = snf.d.at(i, i);
                let q = val / d;
                if a.ring == Ring::Int && !q.denom().is_one() {
                    return Err(Error::NoSolution(format!(
                        "solve_right: entry ({i},{j}) needs {val}/{d}, not integral"
                    )));
                }
                y.set(i, j, q);
            } else if !val.is_zero() {
                return Err(Error::NoSolution(format!(
                    "solve_right: inconsistent row {i}, column {j}"
                )));
            }
        }
    }
    Ok(snf.v.mul(&y))
}

/// Solve `x * a = b` over the tagged ring.
pub fn solve_left(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let xt = solve_right(&a.transpose(), &b.transpose())?;
    Ok(xt.transpose())
}

/// Basis for `{ x : a x = 0 }` as matrix columns.
///
/// Over `Int` the basis spans the full integer kernel (saturated), which the
/// trailing columns of `v` provide since `d v_inv x = 0` forces the last
/// coordinates free and the first `rank` zero.
pub fn nullspace(a: &Matrix) -> Matrix {
    let snf = smith_normal_form(a);
    let r = snf.rank();
    let free = a.cols - r;
    let mut out = Matrix::zero(a.cols, free, a.ring);
    for j in 0..free {
        for i in 0..a.cols {
            out.set(i, j, snf.v.at(i, r + j).clone());
        }
    }
    out
}

/// Two-sided inverse, if it exists over the tagged ring.
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    if a.rows != a.cols {
        return Err(Error::NotInvertible(format!("nonsquare {}x{}", a.rows, a.cols)));
    }
    let id = Matrix::identity(a.rows, a.ring);
    solve_right(a, &id).map_err(|_| Error::NotInvertible("singular over the ring".into()))
}
