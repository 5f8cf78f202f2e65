//! Maximum-weight bipartite matching and rounding of fractional associations.

use nalgebra::DMatrix;

use crate::error::{Result, TcrError};

/// Edge weights between rows (users) and columns (server slots).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub w: DMatrix<f64>,
    /// User index of every row.
    pub row_user: Vec<usize>,
    /// Server index of every column.
    pub col_server: Vec<usize>,
}

impl WeightTable {
    /// Table whose rows are users and columns are servers, one slot each.
    pub fn plain(w: DMatrix<f64>) -> Self {
        let row_user = (0..w.nrows()).collect();
        let col_server = (0..w.ncols()).collect();
        Self { w, row_user, col_server }
    }

    /// Replicates every column of an `N x M` affinity table `slots` times.
    pub fn with_slots(affinity: &DMatrix<f64>, slots: usize) -> Self {
        let (n, m) = affinity.shape();
        let w = DMatrix::from_fn(n, m * slots, |i, j| affinity[(i, j / slots)]);
        Self { w, row_user: (0..n).collect(), col_server: (0..m * slots).map(|j| j / slots).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// Matched `(user, server)` pairs, sorted by user.
    pub pairs: Vec<(usize, usize)>,
    /// Column matched to each row, `None` when the row got a padding column.
    pub row_to_col: Vec<Option<usize>>,
    /// Sum of the weights of the matched edges.
    pub total: f64,
}

/// Minimum-cost perfect assignment on a square matrix (shortest augmenting
/// paths with potentials). Returns the column of each row.
fn assign_min(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    // 1-based arrays; column 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_col[p[j] - 1] = j - 1;
        }
    }
    row_col
}

/// Maximum-weight matching. Rectangular tables are padded to square with
/// zero weights; rows matched to padding come back as `None`.
pub fn hungarian_max(table: &WeightTable) -> Result<Matching> {
    let (rows, cols) = table.w.shape();
    if table.row_user.len() != rows || table.col_server.len() != cols {
        return Err(TcrError::Dimension("weight table index maps do not match its shape".into()));
    }
    if let Some(bad) = table.w.iter().find(|v| !v.is_finite()) {
        return Err(TcrError::InvalidAllocation(format!("non-finite matching weight {bad}")));
    }
    let n = rows.max(cols);
    if n == 0 {
        return Ok(Matching { pairs: Vec::new(), row_to_col: Vec::new(), total: 0.0 });
    }
    let cost = DMatrix::from_fn(n, n, |i, j| if i < rows && j < cols { -table.w[(i, j)] } else { 0.0 });
    let assigned = assign_min(&cost);

    let mut row_to_col = Vec::with_capacity(rows);
    let mut pairs = Vec::new();
    let mut total = 0.0;
    for (i, &j) in assigned.iter().enumerate().take(rows) {
        if j < cols {
            row_to_col.push(Some(j));
            pairs.push((table.row_user[i], table.col_server[j]));
            total += table.w[(i, j)];
        } else {
            row_to_col.push(None);
        }
    }
    pairs.sort_unstable();
    Ok(Matching { pairs, row_to_col, total })
}

/// Round-robin association: user `n` goes to server `n mod M`.
pub fn round_robin_association(n_users: usize, n_servers: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n_users, n_servers, |n, m| if n % n_servers == m { 1.0 } else { 0.0 })
}

/// Rounds a fractional association to a binary one with `ceil(N / M)` slots
/// per server.
pub fn round_connection(x_frac: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, m) = x_frac.shape();
    if m == 0 {
        return Err(TcrError::Dimension("association has no servers".into()));
    }
    round_connection_with_slots(x_frac, n.div_ceil(m))
}

/// Rounding with an explicit slot count per server (`slots * M >= N`).
///
/// Rows summing to more than one are renormalized and the result is used as
/// matching affinity. A row with no positive entry gets a vanishing
/// preference for low server indices so that it still lands deterministically.
pub fn round_connection_with_slots(x_frac: &DMatrix<f64>, slots: usize) -> Result<DMatrix<f64>> {
    let (n, m) = x_frac.shape();
    if slots * m < n {
        return Err(TcrError::Dimension(format!("{slots} slots on {m} servers cannot host {n} users")));
    }
    if let Some(v) = x_frac.iter().find(|v| !v.is_finite() || **v < -1e-9) {
        return Err(TcrError::InvalidAllocation(format!("association entry {v} is negative or non-finite")));
    }
    let mut aff = x_frac.map(|v| v.max(0.0));
    for i in 0..n {
        let s: f64 = aff.row(i).sum();
        if s > 1.0 {
            aff.row_mut(i).scale_mut(1.0 / s);
        } else if s == 0.0 {
            for j in 0..m {
                aff[(i, j)] = 1e-12 * (m - j) as f64 / m as f64;
            }
        }
    }
    let matching = hungarian_max(&WeightTable::with_slots(&aff, slots))?;
    let mut x = DMatrix::zeros(n, m);
    for &(user, server) in &matching.pairs {
        x[(user, server)] = 1.0;
    }
    Ok(x)
}
