//! Generalized Rademacher functions, Vilenkin characters and Dirichlet
//! kernels.
//!
//! Characters are evaluated from the structure's root tables:
//! `psi_n(x) = prod_k exp(2 pi i n_k x_k / m_k)`.

use num_complex::Complex64;

use crate::error::{out_of_range, Result};
use crate::group::{GroupElement, GroupStructure, MixedRadixIndex};

fn check_coordinate(g: &GroupStructure, k: usize) -> Result<()> {
    if k >= g.depth() {
        return Err(out_of_range("k", k, format!("[0, {})", g.depth())));
    }
    Ok(())
}

/// `r_k(x) = exp(2 pi i x_k / m_k)`.
pub fn rademacher(g: &GroupStructure, k: usize, x: &GroupElement) -> Result<Complex64> {
    check_coordinate(g, k)?;
    g.check_element(x)?;
    Ok(g.root(k, x.digits[k]))
}

/// `sum_{s < m_n} r_n(x)^s`, summed term by term.
pub fn rademacher_power_sum(g: &GroupStructure, n: usize, x: &GroupElement) -> Result<Complex64> {
    check_coordinate(g, n)?;
    g.check_element(x)?;
    Ok((0..g.radix(n)).map(|s| g.root(n, s * x.digits[n])).sum())
}

/// `psi_n(x)` for a validated index and element.
pub fn vilenkin(g: &GroupStructure, n: &MixedRadixIndex, x: &GroupElement) -> Result<Complex64> {
    g.check_element(x)?;
    let mut acc = Complex64::new(1.0, 0.0);
    for (k, (&nk, &xk)) in n.digits.iter().zip(&x.digits).enumerate() {
        if nk != 0 && xk != 0 {
            acc *= g.root(k, nk * xk);
        }
    }
    Ok(acc)
}

/// `psi_n(x)` on linear indices. Both arguments must be below `M_L`.
#[inline]
pub fn vilenkin_index(g: &GroupStructure, n: usize, x: usize) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for k in 0..g.depth() {
        let e = g.digit(n, k) * g.digit(x, k);
        if e % g.radix(k) != 0 {
            acc *= g.root(k, e);
        }
    }
    acc
}

/// `D_k(x) = sum_{j < k} psi_j(x)` by direct summation.
pub fn dirichlet(g: &GroupStructure, k: usize, x: &GroupElement) -> Result<Complex64> {
    if k > g.size() {
        return Err(out_of_range("k", k, format!("[0, {}]", g.size())));
    }
    let x = g.index_of(x)?;
    Ok(dirichlet_index(g, k, x))
}

pub fn dirichlet_index(g: &GroupStructure, k: usize, x: usize) -> Complex64 {
    (0..k).map(|j| vilenkin_index(g, j, x)).sum()
}

/// `D_{M_n}(x) = M_n [x in I_n]`, the closed form of the block kernel.
#[inline]
pub fn block_dirichlet(g: &GroupStructure, n: usize, x: usize) -> f64 {
    if g.in_interval_index(0, n, x) {
        g.order(n) as f64
    } else {
        0.0
    }
}

/// Right-hand side of the shift identity
/// `D_{j + r M_A} = (sum_{q<r} psi_{M_A}^q) D_{M_A} + psi_{M_A}^r D_j`.
pub fn dirichlet_shift(
    g: &GroupStructure,
    j: usize,
    r: usize,
    a: usize,
    x: &GroupElement,
) -> Result<Complex64> {
    if a >= g.depth() {
        return Err(out_of_range("A", a, format!("[0, {})", g.depth())));
    }
    if r == 0 || r >= g.radix(a) {
        return Err(out_of_range("r", r, format!("[1, {})", g.radix(a))));
    }
    if j >= g.order(a) {
        return Err(out_of_range("j", j, format!("[0, {})", g.order(a))));
    }
    let xi = g.index_of(x)?;
    let partial: Complex64 = (0..r).map(|q| g.root(a, q * x.digits[a])).sum();
    Ok(partial * block_dirichlet(g, a, xi) + g.root(a, r * x.digits[a]) * dirichlet_index(g, j, xi))
}

/// Character table `table[n * M + x] = psi_n(x)`.
pub fn character_table(g: &GroupStructure) -> Vec<Complex64> {
    let m = g.size();
    let mut out = Vec::with_capacity(m * m);
    for n in 0..m {
        for x in 0..m {
            out.push(vilenkin_index(g, n, x));
        }
    }
    out
}

/// Rows `D_0..=D_{M_L}` as cumulative character sums, `table[k * M + x]`.
pub fn dirichlet_table(g: &GroupStructure) -> Vec<Complex64> {
    let m = g.size();
    let mut out = vec![Complex64::new(0.0, 0.0); (m + 1) * m];
    for k in 0..m {
        for x in 0..m {
            out[(k + 1) * m + x] = out[k * m + x] + vilenkin_index(g, k, x);
        }
    }
    out
}
