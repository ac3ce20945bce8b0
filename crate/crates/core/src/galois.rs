//! Arithmetic in GF(2^8) and dense matrices over it.
//!
//! The field uses the reduction polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11D)
//! with generator 2. Log/antilog tables and the derived 64 KiB product table
//! are evaluated at compile time, so they are immutable and shareable across
//! threads without synchronization.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Sub};

use thiserror::Error;

/// Reduction polynomial, recorded in tool output so results can be reproduced bit-exactly.
pub const POLYNOMIAL: u16 = 0x11D;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaloisError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
}

struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
}

const fn build_tables() -> Tables {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= POLYNOMIAL;
        }
        i += 1;
    }
    // doubled so log[a] + log[b] never needs a modulo
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    Tables { exp, log }
}

static TABLES: Tables = build_tables();

const fn build_mul_table() -> [[u8; 256]; 256] {
    let t = build_tables();
    let mut table = [[0u8; 256]; 256];
    let mut a = 1;
    while a < 256 {
        let mut b = 1;
        while b < 256 {
            table[a][b] = t.exp[t.log[a] as usize + t.log[b] as usize];
            b += 1;
        }
        a += 1;
    }
    table
}

/// Full product table; row `c` is the map `x -> c * x`.
static MUL_TABLE: [[u8; 256]; 256] = build_mul_table();

/// An element of GF(2^8).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    #[inline]
    pub fn value(self) -> u8 {
        self.0
    }

    pub fn inv(self) -> Result<Gf256, GaloisError> {
        gf_inv(self.0).map(Gf256)
    }

    pub fn pow(self, exp: u32) -> Gf256 {
        if exp == 0 {
            return Gf256::ONE;
        }
        if self.0 == 0 {
            return Gf256::ZERO;
        }
        let l = TABLES.log[self.0 as usize] as u64 * exp as u64 % 255;
        Gf256(TABLES.exp[l as usize])
    }
}

impl fmt::Display for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl Add for Gf256 {
    type Output = Gf256;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf256 {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

// Characteristic 2: subtraction is addition.
impl Sub for Gf256 {
    type Output = Gf256;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    #[inline]
    fn mul(self, rhs: Gf256) -> Gf256 {
        Gf256(gf_mul(self.0, rhs.0))
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf256) {
        self.0 = gf_mul(self.0, rhs.0);
    }
}

/// Product of two field symbols via the log/antilog tables.
#[inline]
pub fn gf_mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    TABLES.exp[TABLES.log[a as usize] as usize + TABLES.log[b as usize] as usize]
}

#[inline]
pub fn gf_inv(a: u8) -> Result<u8, GaloisError> {
    if a == 0 {
        return Err(GaloisError::ZeroInverse);
    }
    Ok(TABLES.exp[255 - TABLES.log[a as usize] as usize])
}

/// `dst[i] ^= c * src[i]` over the common length. This is the bulk kernel
/// behind encoding, decoding and row reduction.
#[inline]
pub fn mul_acc(dst: &mut [u8], src: &[u8], c: u8) {
    match c {
        0 => {}
        1 => {
            for (d, s) in dst.iter_mut().zip(src) {
                *d ^= *s;
            }
        }
        _ => {
            let row = &MUL_TABLE[c as usize];
            for (d, s) in dst.iter_mut().zip(src) {
                *d ^= row[*s as usize];
            }
        }
    }
}

/// `buf[i] = c * buf[i]`.
#[inline]
pub fn scale(buf: &mut [u8], c: u8) {
    if c == 1 {
        return;
    }
    let row = &MUL_TABLE[c as usize];
    for b in buf.iter_mut() {
        *b = row[*b as usize];
    }
}

/// Dense row-major matrix over GF(2^8).
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<u8>,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:02x?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix {
            rows,
            cols,
            cells: vec![0; rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m.cells[i * size + i] = 1;
        }
        m
    }

    pub fn from_cells(rows: usize, cols: usize, cells: Vec<u8>) -> Result<Self, GaloisError> {
        if cells.len() != rows * cols {
            return Err(GaloisError::DimensionMismatch {
                expected: rows * cols,
                actual: cells.len(),
            });
        }
        Ok(FieldMatrix { rows, cols, cells })
    }

    /// Vandermonde matrix with row `i` equal to `[x_i^0, x_i^1, ..., x_i^(cols-1)]`,
    /// taking `0^0 = 1`.
    pub fn vandermonde(points: &[u8], cols: usize) -> Self {
        let mut m = Self::zeros(points.len(), cols);
        for (r, &x) in points.iter().enumerate() {
            let mut acc = 1u8;
            for c in 0..cols {
                m.cells[r * cols + c] = acc;
                acc = gf_mul(acc, x);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Gf256 {
        Gf256(self.cells[r * self.cols + c])
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Gf256) {
        self.cells[r * self.cols + c] = v.0;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u8] {
        &self.cells[r * self.cols..(r + 1) * self.cols]
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| {
                self.row(r)
                    .iter()
                    .enumerate()
                    .all(|(c, &v)| v == u8::from(r == c))
            })
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut cells = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            cells.extend_from_slice(self.row(r));
        }
        FieldMatrix {
            rows: rows.len(),
            cols: self.cols,
            cells,
        }
    }

    pub fn mul_vec(&self, v: &[u8]) -> Result<Vec<u8>, GaloisError> {
        if v.len() != self.cols {
            return Err(GaloisError::DimensionMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(0u8, |acc, (&a, &b)| acc ^ gf_mul(a, b))
            })
            .collect())
    }

    pub fn mul(&self, rhs: &FieldMatrix) -> Result<FieldMatrix, GaloisError> {
        if self.cols != rhs.rows {
            return Err(GaloisError::DimensionMismatch {
                expected: self.cols,
                actual: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let dst = &mut out.cells[r * rhs.cols..(r + 1) * rhs.cols];
            for (i, &c) in self.row(r).iter().enumerate() {
                mul_acc(dst, rhs.row(i), c);
            }
        }
        Ok(out)
    }

    /// Gauss-Jordan inversion on the augmented matrix `[M | I]`.
    ///
    /// The pivot for column `c` is the first row at or below `c` with a nonzero
    /// entry. Row operations touch only the nonzero support of the pivot row,
    /// which keeps decoding matrices (mostly identity rows) cheap to invert.
    pub fn invert(&self) -> Result<FieldMatrix, GaloisError> {
        if self.rows != self.cols {
            return Err(GaloisError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let width = 2 * n;
        let mut aug = vec![0u8; n * width];
        for r in 0..n {
            aug[r * width..r * width + n].copy_from_slice(self.row(r));
            aug[r * width + n + r] = 1;
        }

        let mut support: Vec<usize> = Vec::with_capacity(width);
        let mut pivot_row = vec![0u8; width];
        for c in 0..n {
            let p = (c..n)
                .find(|&r| aug[r * width + c] != 0)
                .ok_or(GaloisError::Singular)?;
            if p != c {
                let (upper, lower) = aug.split_at_mut(p * width);
                upper[c * width..(c + 1) * width].swap_with_slice(&mut lower[..width]);
            }
            let pr = &mut aug[c * width..(c + 1) * width];
            let lead = pr[c];
            if lead != 1 {
                // columns left of c are already zero in the pivot row
                scale(&mut pr[c..], gf_inv(lead)?);
            }
            pivot_row.copy_from_slice(pr);

            support.clear();
            support.extend(
                pivot_row[c..]
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(j, _)| c + j),
            );
            let dense = support.len() * 2 > width - c;

            for (r, row) in aug.chunks_exact_mut(width).enumerate() {
                let f = row[c];
                if f == 0 || r == c {
                    continue;
                }
                if dense {
                    mul_acc(&mut row[c..], &pivot_row[c..], f);
                } else {
                    let t = &MUL_TABLE[f as usize];
                    for &j in &support {
                        row[j] ^= t[pivot_row[j] as usize];
                    }
                }
            }
        }

        let mut cells = Vec::with_capacity(n * n);
        for r in 0..n {
            cells.extend_from_slice(&aug[r * width + n..(r + 1) * width]);
        }
        Ok(FieldMatrix {
            rows: n,
            cols: n,
            cells,
        })
    }
}
