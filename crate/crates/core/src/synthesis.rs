//! Normalized (N+2) coupling matrices for in-line filters.
//!
//! Row and column 0 hold the source port `P1`, row `N+1` the load port `P2`,
//! and rows `1..=N` the resonators.

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Normalized lowpass coupling matrix with port rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl CouplingMatrix {
    /// Wrap a square, symmetric matrix of size `N + 2` with `N >= 1`.
    ///
    /// Port self-terms (`M[0][0]`, `M[N+1][N+1]`) must be zero: port
    /// susceptances have no place in the nodal model.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if size < 3 {
            return Err(Error::invalid(format!(
                "coupling matrix must be at least 3x3, got {size}x{size}"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::invalid(format!(
                    "coupling matrix is not square: row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite entry at ({i}, {j})")));
            }
        }
        for i in 0..size {
            for j in (i + 1)..size {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::Asymmetric { i, j, a, b });
                }
            }
        }
        if rows[0][0] != 0.0 || rows[size - 1][size - 1] != 0.0 {
            return Err(Error::invalid("port diagonal entries must be zero"));
        }
        Ok(Self {
            order: size - 2,
            entries: rows.iter().flatten().copied().collect(),
        })
    }

    /// In-line matrix from main-line couplings `[M_P1,1, M_12, ..., M_N,P2]`
    /// and resonator self-couplings `[M_11, ..., M_NN]`.
    pub fn inline(couplings: &[f64], self_couplings: &[f64]) -> Result<Self> {
        let n = self_couplings.len();
        if couplings.len() != n + 1 {
            return Err(Error::invalid(format!(
                "{} main-line couplings given for order {n}, expected {}",
                couplings.len(),
                n + 1
            )));
        }
        let size = n + 2;
        let mut rows = vec![vec![0.0; size]; size];
        for (i, &m) in couplings.iter().enumerate() {
            rows[i][i + 1] = m;
            rows[i + 1][i] = m;
        }
        for (u, &b) in self_couplings.iter().enumerate() {
            rows[u + 1][u + 1] = b;
        }
        Self::new(&rows)
    }

    /// Number of resonators `N`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Matrix dimension `N + 2`.
    pub fn size(&self) -> usize {
        self.order + 2
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.size())
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// `true` when `i` addresses one of the two port rows.
    pub fn is_port(&self, i: usize) -> bool {
        i == 0 || i == self.order + 1
    }

    /// Largest deviation from `M[i][j] = M[N+1-i][N+1-j]`.
    pub fn mirror_asymmetry(&self) -> f64 {
        let last = self.size() - 1;
        let mut worst: f64 = 0.0;
        for i in 0..self.size() {
            for j in 0..self.size() {
                worst = worst.max((self.get(i, j) - self.get(last - i, last - j)).abs());
            }
        }
        worst
    }

    /// Copy with the symmetric pair `(i, j)`, `(j, i)` set to `value`.
    pub(crate) fn with_symmetric_entry(&self, i: usize, j: usize, value: f64) -> Self {
        let mut out = self.clone();
        let size = self.size();
        out.entries[i * size + j] = value;
        out.entries[j * size + i] = value;
        out
    }
}

/// Validate a user-supplied matrix. Requires at least two resonators.
pub fn load_matrix(rows: &[Vec<f64>]) -> Result<CouplingMatrix> {
    if rows.len() < 4 {
        return Err(Error::invalid(format!(
            "a {0}x{0} matrix cannot hold two ports plus two resonators",
            rows.len()
        )));
    }
    CouplingMatrix::new(rows)
}

/// Ripple factor for an equiripple passband with the given return loss.
pub fn ripple_factor(return_loss_db: f64) -> f64 {
    1.0 / (10f64.powf(return_loss_db / 10.0) - 1.0).sqrt()
}

/// Chebyshev lowpass prototype element values `g_0 ..= g_{N+1}`.
pub fn chebyshev_g_values(order: usize, return_loss_db: f64) -> Result<Vec<f64>> {
    if order < 1 {
        return Err(Error::invalid("filter order must be at least 1"));
    }
    if !(return_loss_db > 0.0 && return_loss_db.is_finite()) {
        return Err(Error::invalid(format!(
            "return loss must be positive, got {return_loss_db} dB"
        )));
    }
    let n = order as f64;
    let eps = ripple_factor(return_loss_db);
    let beta = (1.0 / eps).asinh() / n;
    let gamma = beta.sinh();
    let a = |k: usize| ((2 * k - 1) as f64 * std::f64::consts::PI / (2.0 * n)).sin();
    let b = |k: usize| gamma * gamma + (k as f64 * std::f64::consts::PI / n).sin().powi(2);

    let mut g = Vec::with_capacity(order + 2);
    g.push(1.0);
    g.push(2.0 * a(1) / gamma);
    for k in 2..=order {
        let prev = g[k - 1];
        g.push(4.0 * a(k - 1) * a(k) / (b(k - 1) * prev));
    }
    let load = if order % 2 == 1 {
        1.0
    } else {
        // coth^2(beta'/4) with beta' = ln coth(L_Ar / 17.37)
        let ripple_db = 10.0 * (1.0 + eps * eps).log10();
        let x = ripple_db * std::f64::consts::LN_10 / 40.0;
        let beta_prime = (1.0 / x.tanh()).ln();
        (1.0 / (beta_prime / 4.0).tanh()).powi(2)
    };
    g.push(load);
    Ok(g)
}

/// Synchronously tuned in-line Chebyshev coupling matrix.
///
/// Couplings follow `M_{i,i+1} = 1 / sqrt(g_i g_{i+1})`; for even orders the
/// mismatched load element is absorbed into the output coupling so both
/// ports see unit terminations.
pub fn chebyshev_inline(order: usize, return_loss_db: f64) -> Result<CouplingMatrix> {
    if order < 2 {
        return Err(Error::invalid(format!(
            "in-line synthesis needs at least 2 resonators, got {order}"
        )));
    }
    let g = chebyshev_g_values(order, return_loss_db)?;
    let couplings: Vec<f64> = g.windows(2).map(|w| 1.0 / (w[0] * w[1]).sqrt()).collect();
    CouplingMatrix::inline(&couplings, &vec![0.0; order])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_three_matches_published_matrix() {
        let m = chebyshev_inline(3, 13.0).unwrap();
        assert!((m.get(0, 1) - 0.8894).abs() < 1e-3);
        assert!((m.get(3, 4) - 0.8894).abs() < 1e-3);
        assert!((m.get(1, 2) - 0.8294).abs() < 1e-3);
        assert!((m.get(2, 3) - 0.8294).abs() < 1e-3);
        for u in 1..=3 {
            assert_eq!(m.get(u, u), 0.0);
        }
        assert_eq!(m.get(0, 4), 0.0);
    }

    #[test]
    fn even_order_load_element_closed_form() {
        // For even N the load equals (eps + sqrt(1 + eps^2))^2.
        for &(n, rl) in &[(2, 20.0), (4, 18.5), (6, 15.0)] {
            let g = chebyshev_g_values(n, rl).unwrap();
            let eps = ripple_factor(rl);
            let closed = (eps + (1.0 + eps * eps).sqrt()).powi(2);
            assert!((g[n + 1] - closed).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn outputs_are_mirror_symmetric() {
        for n in 2..=8 {
            for rl in [10.0, 13.0, 18.5, 25.0] {
                let m = chebyshev_inline(n, rl).unwrap();
                assert!(m.mirror_asymmetry() < 1e-9, "n = {n}, rl = {rl}");
            }
        }
    }

    #[test]
    fn rejects_bad_synthesis_arguments() {
        assert!(chebyshev_inline(1, 13.0).is_err());
        assert!(chebyshev_inline(3, 0.0).is_err());
        assert!(chebyshev_inline(3, -2.0).is_err());
    }

    #[test]
    fn load_accepts_published_order_three() {
        let rows = vec![
            vec![0.0, 0.8894, 0.0, 0.0, 0.0],
            vec![0.8894, 0.0, 0.8294, 0.0, 0.0],
            vec![0.0, 0.8294, 0.0, 0.8294, 0.0],
            vec![0.0, 0.0, 0.8294, 0.0, 0.8894],
            vec![0.0, 0.0, 0.0, 0.8894, 0.0],
        ];
        let m = load_matrix(&rows).unwrap();
        assert_eq!(m.order(), 3);
        assert_eq!(m.rows(), rows);
    }

    #[test]
    fn load_rejects_asymmetry() {
        let mut rows = vec![vec![0.0; 4]; 4];
        rows[0][1] = 1.0;
        rows[1][0] = 0.9;
        assert!(matches!(
            load_matrix(&rows),
            Err(Error::Asymmetric { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn load_rejects_small_and_ragged_input() {
        assert!(load_matrix(&vec![vec![0.0; 3]; 3]).is_err());
        let ragged = vec![vec![0.0; 4], vec![0.0; 4], vec![0.0; 3], vec![0.0; 4]];
        assert!(load_matrix(&ragged).is_err());
    }
}
