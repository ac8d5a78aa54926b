//! Dense row-major matrices sized for desk-scale network simulations
//! (hundreds of agents, low-dimensional decision variables).
//!
//! Everything here is deliberately plain: `Vec<f64>` storage, loops tuned
//! only as far as skipping structural zeros in matrix products, and a cyclic
//! Jacobi sweep for symmetric eigenvalues. No BLAS, no unsafe.

use std::fmt::Write as FmtWrite;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
///
/// Rows usually index agents and columns index coordinates of the decision
/// variable, so `n x d` iterate blocks and `n x n` gossip matrices share the
/// same type.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from explicit rows. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Shape("from_rows: no rows given".into()));
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "from_rows: row {} has {} entries, expected {}",
                    i,
                    r.len(),
                    cols
                )));
            }
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Column-wise mean, i.e. the average row.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                m[j] += v;
            }
        }
        let inv = 1.0 / self.rows as f64;
        for v in &mut m {
            *v *= inv;
        }
        m
    }

    /// Subtracts the average row from every row (projection onto the
    /// consensus-orthogonal subspace).
    pub fn center_rows(&self) -> Mat {
        let m = self.mean_row();
        let mut out = self.clone();
        for i in 0..self.rows {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v -= m[j];
            }
        }
        out
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += w;
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v -= w;
        }
        out
    }

    /// `self + s * other`, the workhorse update in every iterate recursion.
    pub fn add_scaled(&self, s: f64, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += s * w;
        }
        out
    }

    /// Three-term linear combination `a*x + b*y + c*z` over matching shapes.
    pub fn lin3(a: f64, x: &Mat, b: f64, y: &Mat, c: f64, z: &Mat) -> Mat {
        assert_eq!((x.rows, x.cols), (y.rows, y.cols));
        assert_eq!((x.rows, x.cols), (z.rows, z.cols));
        let mut out = Mat::zeros(x.rows, x.cols);
        for i in 0..out.data.len() {
            out.data[i] = a * x.data[i] + b * y.data[i] + c * z.data[i];
        }
        out
    }

    /// Matrix product `self * rhs`. Skips structural zeros in `self`, which
    /// makes products with sparse gossip matrices cost O(edges * cols).
    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let w = self[(i, k)];
                if w == 0.0 {
                    continue;
                }
                let src = rhs.row(k);
                let dst = out.row_mut(i);
                for j in 0..src.len() {
                    dst[j] += w * src[j];
                }
            }
        }
        out
    }

    /// Stacks `self` on top of `other` (column counts must match).
    pub fn vstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut data = Vec::with_capacity((self.rows + other.rows) * self.cols);
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Mat {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    /// Copies rows `[start, start+len)` into a new matrix.
    pub fn row_block(&self, start: usize, len: usize) -> Mat {
        assert!(start + len <= self.rows);
        Mat {
            rows: len,
            cols: self.cols,
            data: self.data[start * self.cols..(start + len) * self.cols].to_vec(),
        }
    }

    /// Serializes as plain text: a `rows cols` header line followed by one
    /// space-separated line per row, 17 significant digits per entry.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.rows, self.cols);
        for i in 0..self.rows {
            let mut first = true;
            for v in self.row(i) {
                if !first {
                    s.push(' ');
                }
                let _ = write!(s, "{:.16e}", v);
                first = false;
            }
            s.push('\n');
        }
        s
    }

    /// Parses the format produced by [`Mat::to_text`]. Reports 1-based line
    /// numbers on failure; `line_offset` shifts them when the text is
    /// embedded in a larger file.
    pub fn from_text(text: &str, line_offset: usize) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::Parse {
                line: line_offset + 1,
                msg: "empty matrix text".into(),
            })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: line_offset + hline + 1,
                msg: format!("expected 'rows cols' header, got '{}'", header.trim()),
            });
        }
        let parse_dim = |s: &str, ln: usize| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: line_offset + ln + 1,
                msg: format!("invalid dimension '{}'", s),
            })
        };
        let rows = parse_dim(dims[0], hline)?;
        let cols = parse_dim(dims[1], hline)?;
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen = 0usize;
        for (ln, line) in lines {
            if seen == rows {
                if !line.trim().is_empty() {
                    return Err(Error::Parse {
                        line: line_offset + ln + 1,
                        msg: "trailing content after last row".into(),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                return Err(Error::Parse {
                    line: line_offset + ln + 1,
                    msg: "unexpected blank line inside matrix".into(),
                });
            }
            let mut count = 0usize;
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: line_offset + ln + 1,
                    msg: format!("invalid number '{}'", tok),
                })?;
                data.push(v);
                count += 1;
            }
            if count != cols {
                return Err(Error::Parse {
                    line: line_offset + ln + 1,
                    msg: format!("expected {} entries, found {}", cols, count),
                });
            }
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Parse {
                line: line_offset + 1,
                msg: format!("expected {} rows, found {}", rows, seen),
            });
        }
        Ok(Mat { rows, cols, data })
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Writes named matrix sections: for each pair, a bare name line followed by
/// the matrix in [`Mat::to_text`] form. Used for algorithm state snapshots.
pub fn sections_to_text(sections: &[(&str, &Mat)]) -> String {
    let mut out = String::new();
    for (name, m) in sections {
        out.push_str(name);
        out.push('\n');
        out.push_str(&m.to_text());
    }
    out
}

/// Parses the section format of [`sections_to_text`], returning pairs in
/// file order. Blank lines between sections are tolerated; a section name
/// must be a single non-numeric token.
pub fn sections_from_text(text: &str) -> Result<Vec<(String, Mat)>> {
    let lines: Vec<&str> = text.lines().collect();
    let mut out: Vec<(String, Mat)> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let name = lines[i].trim();
        if name.is_empty() {
            i += 1;
            continue;
        }
        if name.split_whitespace().count() != 1 || name.parse::<f64>().is_ok() {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected a section name, found '{name}'"),
            });
        }
        let header = lines.get(i + 1).ok_or_else(|| Error::Parse {
            line: i + 2,
            msg: format!("section '{name}' has no dimension header"),
        })?;
        let rows: usize = header
            .split_whitespace()
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: i + 2,
                msg: format!("bad dimension header in section '{name}'"),
            })?;
        if lines.len() < i + 2 + rows {
            return Err(Error::Parse {
                line: lines.len(),
                msg: format!("section '{name}' is truncated"),
            });
        }
        let block = lines[i + 1..i + 2 + rows].join("\n");
        let m = Mat::from_text(&block, i + 1)?;
        out.push((name.to_string(), m));
        i += 2 + rows;
    }
    Ok(out)
}

/// Like [`sections_from_text`] but insists on exactly the given section
/// names in order, returning the matrices alone.
pub fn named_sections(text: &str, names: &[&str]) -> Result<Vec<Mat>> {
    let sections = sections_from_text(text)?;
    let got: Vec<&str> = sections.iter().map(|(n, _)| n.as_str()).collect();
    if got != names {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected sections {names:?}, found {got:?}"),
        });
    }
    Ok(sections.into_iter().map(|(_, m)| m).collect())
}

/// Eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi sweeps.
///
/// Converges when the off-diagonal Frobenius norm drops below
/// `1e-14 * max(1, ||A||_F)`; fails after 100 full sweeps, which in practice
/// is never reached for the well-conditioned gossip matrices handled here.
pub fn sym_eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    if a.rows != a.cols {
        return Err(Error::Shape(format!(
            "sym_eigenvalues: matrix is {}x{}, not square",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    if n == 0 {
        return Err(Error::Shape("sym_eigenvalues: empty matrix".into()));
    }
    let mut w = a.clone();
    let tol = 1e-14 * w.frobenius().max(1.0);

    let off_norm = |m: &Mat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _sweep in 0..100 {
        if off_norm(&w) < tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Column rotation, then row rotation: w <- J^T w J.
                for k in 0..n {
                    let akp = w[(k, p)];
                    let akq = w[(k, q)];
                    w[(k, p)] = c * akp - s * akq;
                    w[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[(p, k)];
                    let aqk = w[(q, k)];
                    w[(p, k)] = c * apk - s * aqk;
                    w[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    if !converged && off_norm(&w) >= tol {
        return Err(Error::Numerical(
            "jacobi eigenvalue iteration did not converge in 100 sweeps".into(),
        ));
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| w[(i, i)]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigs)
}
