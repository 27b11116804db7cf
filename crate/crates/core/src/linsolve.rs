//! Sparse symmetric storage, Jacobi-preconditioned conjugate gradients, an
//! envelope Cholesky fallback and the small dense kernels used by element projectors and the diagnostics.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VemError};

/// Accumulates `(row, col, value)` contributions of a symmetric matrix.
///
/// Only the lower triangle (`row >= col`) is kept, so a full symmetric
/// matrix can be pushed entry by entry.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.n && col < self.n, "triplet index out of range");
        if row >= col {
            self.entries.push((row, col, value));
        }
    }

    /// Adds a dense symmetric block whose local index `i` maps to global
    /// `map[i]`; `None` entries are skipped.
    pub fn add_block(&mut self, map: &[Option<usize>], block: &DMatrix<f64>) {
        debug_assert_eq!(block.nrows(), map.len());
        for (i, gi) in map.iter().enumerate() {
            let Some(gi) = *gi else { continue };
            for (j, gj) in map.iter().enumerate() {
                let Some(gj) = *gj else { continue };
                if gi >= gj {
                    self.entries.push((gi, gj, block[(i, j)]));
                }
            }
        }
    }

    pub fn extend(&mut self, other: TripletBuilder) {
        assert_eq!(self.n, other.n);
        self.entries.extend(other.entries);
    }

    /// Sorts by `(row, col, value)` and sums duplicates, so the result does
    /// not depend on the insertion order.
    pub fn into_csr(mut self) -> SymmetricCsr {
        self.entries.sort_by(|a, b| {
            (a.0, a.1)
                .cmp(&(b.0, b.1))
                .then_with(|| a.2.total_cmp(&b.2))
        });
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        let mut k = 0;
        while k < self.entries.len() {
            let (r, c, _) = self.entries[k];
            let mut sum = 0.0;
            while k < self.entries.len() && self.entries[k].0 == r && self.entries[k].1 == c {
                sum += self.entries[k].2;
                k += 1;
            }
            if sum != 0.0 {
                col_idx.push(c);
                values.push(sum);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..self.n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SymmetricCsr {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Symmetric matrix in compressed sparse row form, lower triangle only.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricCsr {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricCsr {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_stored(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored lower-triangle entries `(row, col, value)`.
    pub fn iter_lower(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (r, c) = if row >= col { (row, col) } else { (col, row) };
        let slice = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match slice.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let a = self.values[k];
                acc += a * x[c];
                if c != r {
                    y[c] += a * x[r];
                }
            }
            y[r] += acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.apply(x))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (r, c, v) in self.iter_lower() {
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
        m
    }

    /// Writes the lower triangle in MatrixMarket coordinate format
    /// (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.values.len())?;
        for (r, c, v) in self.iter_lower() {
            writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
        }
        Ok(())
    }
}

/// Global matrix plus right-hand side.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: SymmetricCsr,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.apply(x);
        let r: Vec<f64> = self.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let bn = norm(&self.rhs);
        if bn == 0.0 {
            norm(&r)
        } else {
            norm(&r) / bn
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradients for an SPD system.
///
/// Converged when `‖b − Ax‖ / ‖b‖ ≤ tol`. A non-positive curvature `pᵀAp`
/// aborts with [`VemError::NotPositiveDefinite`].
pub fn cg_solve(system: &SparseSystem, tol: f64, max_iter: usize) -> Result<CgOutcome> {
    if tol <= 0.0 {
        return Err(VemError::InvalidInput(format!("CG tolerance must be positive, got {tol}")));
    }
    let a = &system.matrix;
    let b = &system.rhs;
    let n = a.dim();
    assert_eq!(b.len(), n);
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let diag = a.diagonal();
    if let Some(&d) = diag.iter().find(|&&d| d <= 0.0) {
        return Err(VemError::NotPositiveDefinite {
            iteration: 0,
            curvature: d,
        });
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;

    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if curvature <= 0.0 {
            return Err(VemError::NotPositiveDefinite {
                iteration: it,
                curvature,
            });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / b_norm;
        if res <= tol {
            // guard against drift of the recursive residual
            let true_res = system.relative_residual(&x);
            if true_res <= tol {
                return Ok(CgOutcome {
                    solution: x,
                    iterations: it,
                    residual: true_res,
                });
            }
            let ax = a.apply(&x);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(VemError::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}

/// Reverse Cuthill–McKee ordering of the matrix graph. `perm[new] = old`.
pub fn rcm_ordering(a: &SymmetricCsr) -> Vec<usize> {
    let n = a.dim();
    let mut adj = vec![Vec::new(); n];
    for (r, c, _) in a.iter_lower() {
        if r != c {
            adj[r].push(c);
            adj[c].push(r);
        }
    }
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| adj[i].len());
    for &start in &by_degree {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let head = order.len();
        order.push(start);
        let mut k = head;
        while k < order.len() {
            let v = order[k];
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !seen[w]).collect();
            next.sort_by_key(|&w| (adj[w].len(), w));
            next.dedup();
            for w in next {
                seen[w] = true;
                order.push(w);
            }
            k += 1;
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factor `PAPᵀ = LLᵀ` under an RCM ordering.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    /// First stored column of each row of `L`.
    first: Vec<usize>,
    row_start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn new(a: &SymmetricCsr) -> Result<Self> {
        let n = a.dim();
        let perm = rcm_ordering(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (r, c, _) in a.iter_lower() {
            let (i, j) = (inv[r].max(inv[c]), inv[r].min(inv[c]));
            first[i] = first[i].min(j);
        }
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0);
        for i in 0..n {
            row_start.push(row_start[i] + i - first[i] + 1);
        }
        let mut values = vec![0.0; row_start[n]];
        for (r, c, v) in a.iter_lower() {
            let (i, j) = (inv[r].max(inv[c]), inv[r].min(inv[c]));
            values[row_start[i] + j - first[i]] += v;
        }
        for i in 0..n {
            let (fi, si) = (first[i], row_start[i]);
            for j in fi..=i {
                let (fj, sj) = (first[j], row_start[j]);
                let k0 = fi.max(fj);
                let mut s = values[si + j - fi];
                for k in k0..j {
                    s -= values[si + k - fi] * values[sj + k - fj];
                }
                if j < i {
                    values[si + j - fi] = s / values[sj + j - fj];
                } else {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(VemError::NotPositiveDefinite {
                            iteration: 0,
                            curvature: s,
                        });
                    }
                    values[si + i - fi] = s.sqrt();
                }
            }
        }
        Ok(Self {
            perm,
            first,
            row_start,
            values,
        })
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        self.values[self.row_start[i] + j - self.first[i]]
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in self.first[i]..i {
                s -= self.l(i, k) * y[k];
            }
            y[i] = s / self.l(i, i);
        }
        for i in (0..n).rev() {
            y[i] /= self.l(i, i);
            let yi = y[i];
            for k in self.first[i]..i {
                y[k] -= self.l(i, k) * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// LU factorisation with partial pivoting of a small dense matrix.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: DMatrix<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(VemError::InvalidInput("LU of a non-square matrix".into()));
        }
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut piv, mut best) = (k, lu[(k, k)].abs());
            for i in k + 1..n {
                if lu[(i, k)].abs() > best {
                    piv = i;
                    best = lu[(i, k)].abs();
                }
            }
            if best <= 1e-14 * scale {
                return Err(VemError::SingularMatrix {
                    column: k,
                    pivot: best,
                });
            }
            if piv != k {
                lu.swap_rows(piv, k);
                perm.swap(piv, k);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / d;
                lu[(i, k)] = l;
                for j in k + 1..n {
                    lu[(i, j)] -= l * lu[(k, j)];
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.lu.nrows();
        let mut x = DVector::from_fn(n, |i, _| b[self.perm[i]]);
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            out.set_column(c, &self.solve(&b.column(c).into_owned()));
        }
        out
    }
}

pub fn dense_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(DenseLu::new(a)?.solve(b))
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn dense_symmetric_eigen(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenpairs of a symmetric matrix, ascending by eigenvalue; eigenvectors
/// are the columns of the returned matrix.
pub fn dense_symmetric_eigenpairs(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}
