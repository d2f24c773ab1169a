//! Basis factorization for the simplex kernel: structural singleton
//! columns (slacks and other one-entry columns) are eliminated by
//! triangular permutation, and the remaining dense core — the coupled
//! block, in the master problem the basic learner columns — is LU-factored
//! densely with partial pivoting. Product-form eta updates carry the
//! factorization across pivots between refactorizations.

/// `|pivot|` below this is treated as singular.
pub const ZERO_PIVOT_TOL: f64 = 1e-10;

/// Dense PA = LU with partial pivoting, stored packed (L strictly below the
/// unit diagonal, U on and above). `swaps[k]` is the row exchanged with `k`
/// at step `k`.
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    swaps: Vec<usize>,
}

impl LuFactors {
    pub fn factorize(mut a: Vec<f64>, n: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut swaps = vec![0usize; n];
        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_val = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = i;
                }
            }
            if pivot_val < ZERO_PIVOT_TOL {
                return None;
            }
            swaps[k] = pivot_row;
            if pivot_row != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot_row * n + j);
                }
            }
            let pivot_inv = 1.0 / a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] * pivot_inv;
                a[i * n + k] = factor;
                if factor != 0.0 {
                    let (head, tail) = a.split_at_mut(i * n);
                    let row_k = &head[k * n + k + 1..k * n + n];
                    let row_i = &mut tail[k + 1..n];
                    for (x, &y) in row_i.iter_mut().zip(row_k) {
                        *x -= factor * y;
                    }
                }
            }
        }
        Some(LuFactors { n, lu: a, swaps })
    }

    /// Solves `A x = v` in place.
    pub fn solve(&self, v: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            v.swap(k, self.swaps[k]);
        }
        for i in 1..n {
            let mut s = v[i];
            let row = &self.lu[i * n..i * n + i];
            for (j, &l) in row.iter().enumerate() {
                s -= l * v[j];
            }
            v[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = v[i];
            let row = &self.lu[i * n + i + 1..i * n + n];
            for (j, &u) in row.iter().enumerate() {
                s -= u * v[i + 1 + j];
            }
            v[i] = s / self.lu[i * n + i];
        }
    }

    /// Solves `Aᵀ y = c` in place.
    pub fn solve_transpose(&self, c: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = c[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * c[j];
            }
            c[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = c[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i] * c[j];
            }
            c[i] = s;
        }
        for k in (0..n).rev() {
            c.swap(k, self.swaps[k]);
        }
    }
}

struct Stage {
    slot: u32,
    row: u32,
    pivot: f64,
}

/// Factorization of one basis matrix. Column `slot` of the basis is given
/// sparsely; after singleton elimination the dense core is LU-factored.
pub struct BasisFactors {
    m: usize,
    cols: Vec<Vec<(u32, f64)>>,
    rows: Vec<Vec<(u32, f64)>>, // row -> (slot, value)
    stages: Vec<Stage>,
    core_rows: Vec<u32>,
    core_row_pos: Vec<u32>, // row -> dense index, u32::MAX outside the core
    core_slots: Vec<u32>,
    core_slot_pos: Vec<u32>,
    core_lu: Option<LuFactors>, // None when the core is empty
}

const NOT_CORE: u32 = u32::MAX;

impl BasisFactors {
    pub fn factorize(cols: Vec<Vec<(u32, f64)>>, m: usize) -> Option<Self> {
        debug_assert_eq!(cols.len(), m);
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); m];
        let mut col_nnz = vec![0usize; m];
        for (slot, col) in cols.iter().enumerate() {
            col_nnz[slot] = col.len();
            for &(r, v) in col {
                rows[r as usize].push((slot as u32, v));
            }
        }
        if col_nnz.iter().any(|&c| c == 0) {
            return None; // empty column: structurally singular
        }

        let mut row_done = vec![false; m];
        let mut col_done = vec![false; m];
        let mut stages: Vec<Stage> = Vec::new();
        let mut work: Vec<u32> =
            (0..m as u32).filter(|&j| col_nnz[j as usize] == 1).collect();
        while let Some(slot) = work.pop() {
            if col_done[slot as usize] {
                continue;
            }
            let Some(&(row, pivot)) = cols[slot as usize]
                .iter()
                .find(|&&(r, _)| !row_done[r as usize])
            else {
                return None; // nnz bookkeeping says 1, none remaining: singular
            };
            if pivot.abs() < ZERO_PIVOT_TOL {
                continue; // leave tiny pivots to the partial-pivoting core
            }
            col_done[slot as usize] = true;
            row_done[row as usize] = true;
            stages.push(Stage { slot, row, pivot });
            for &(other, _) in &rows[row as usize] {
                if !col_done[other as usize] {
                    col_nnz[other as usize] -= 1;
                    if col_nnz[other as usize] == 1 {
                        work.push(other);
                    }
                }
            }
        }

        let core_rows: Vec<u32> = (0..m as u32).filter(|&r| !row_done[r as usize]).collect();
        let core_slots: Vec<u32> = (0..m as u32).filter(|&j| !col_done[j as usize]).collect();
        debug_assert_eq!(core_rows.len(), core_slots.len());
        let c = core_rows.len();
        let mut core_row_pos = vec![NOT_CORE; m];
        for (q, &r) in core_rows.iter().enumerate() {
            core_row_pos[r as usize] = q as u32;
        }
        let mut core_slot_pos = vec![NOT_CORE; m];
        for (q, &j) in core_slots.iter().enumerate() {
            core_slot_pos[j as usize] = q as u32;
        }

        let core_lu = if c == 0 {
            None
        } else {
            let mut dense = vec![0.0; c * c];
            for (q, &slot) in core_slots.iter().enumerate() {
                for &(r, v) in &cols[slot as usize] {
                    let p = core_row_pos[r as usize];
                    if p != NOT_CORE {
                        dense[p as usize * c + q] = v;
                    }
                }
            }
            Some(LuFactors::factorize(dense, c)?)
        };

        Some(BasisFactors {
            m,
            cols,
            rows,
            stages,
            core_rows,
            core_row_pos,
            core_slots,
            core_slot_pos,
            core_lu,
        })
    }

    /// Solves `B x = v` in place: `v` enters indexed by row, leaves indexed
    /// by basis slot.
    pub fn solve(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.m);
        let c = self.core_rows.len();
        let mut x = vec![0.0; self.m];
        if c > 0 {
            // eliminated columns have no entries in core rows
            let mut rhs: Vec<f64> =
                self.core_rows.iter().map(|&r| v[r as usize]).collect();
            self.core_lu.as_ref().expect("nonempty core").solve(&mut rhs);
            for (q, &slot) in self.core_slots.iter().enumerate() {
                x[slot as usize] = rhs[q];
            }
        }
        for stage in self.stages.iter().rev() {
            let mut s = v[stage.row as usize];
            for &(slot, val) in &self.rows[stage.row as usize] {
                if slot != stage.slot {
                    s -= val * x[slot as usize];
                }
            }
            x[stage.slot as usize] = s / stage.pivot;
        }
        v.copy_from_slice(&x);
    }

    /// Solves `Bᵀ y = c` in place: `c` enters indexed by basis slot, leaves
    /// indexed by row.
    pub fn solve_transpose(&self, cvec: &mut [f64]) {
        debug_assert_eq!(cvec.len(), self.m);
        let c = self.core_rows.len();
        let mut y = vec![0.0; self.m];
        for stage in &self.stages {
            let mut s = cvec[stage.slot as usize];
            for &(r, val) in &self.cols[stage.slot as usize] {
                if r != stage.row {
                    s -= val * y[r as usize];
                }
            }
            y[stage.row as usize] = s / stage.pivot;
        }
        if c > 0 {
            let mut rhs = vec![0.0; c];
            for (q, &slot) in self.core_slots.iter().enumerate() {
                let mut s = cvec[slot as usize];
                for &(r, val) in &self.cols[slot as usize] {
                    if self.core_row_pos[r as usize] == NOT_CORE {
                        s -= val * y[r as usize];
                    }
                }
                rhs[q] = s;
            }
            self.core_lu.as_ref().expect("nonempty core").solve_transpose(&mut rhs);
            for (q, &r) in self.core_rows.iter().enumerate() {
                y[r as usize] = rhs[q];
            }
        }
        cvec.copy_from_slice(&y);
    }
}

/// One basis change: the entering column in the old basis coordinates and
/// the slot it replaced.
pub struct Eta {
    pub slot: usize,
    pub col: Vec<f64>,
}

/// Applies the eta sequence after a factor solve: `x ← E_k⁻¹ … E_1⁻¹ x`.
pub fn ftran_etas(etas: &[Eta], x: &mut [f64]) {
    for eta in etas {
        let r = x[eta.slot] / eta.col[eta.slot];
        if r != 0.0 {
            for (k, &w) in eta.col.iter().enumerate() {
                x[k] -= w * r;
            }
            // the loop above also touched the pivot slot; restore it
        }
        x[eta.slot] = r;
    }
}

/// Pre-transforms the cost vector before a transpose factor solve:
/// `c ← E_1⁻ᵀ … E_k⁻ᵀ c` (reverse order).
pub fn btran_etas(etas: &[Eta], c: &mut [f64]) {
    for eta in etas.iter().rev() {
        let mut s = c[eta.slot];
        for (k, &w) in eta.col.iter().enumerate() {
            if k != eta.slot {
                s -= w * c[k];
            }
        }
        c[eta.slot] = s / eta.col[eta.slot];
    }
}
