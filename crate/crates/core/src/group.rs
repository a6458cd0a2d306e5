//! Bounded Vilenkin groups truncated at a finite depth.
//!
//! The group is `Z_{m_0} x ... x Z_{m_{L-1}}` with coordinate-wise modular
//! addition and normalized counting (Haar) measure. Points are addressed
//! either as digit sequences ([`GroupElement`]) or as linear indices in
//! mixed-radix order, digit 0 fastest: `index = sum_j x_j * M_j`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};

/// Default cap on the number of 2-D grid points, `M_L^2`.
pub const DEFAULT_GRID_CAP: u128 = 100_000_000;

/// Radix sequence, cumulative orders `M_0..M_L` and the root-of-unity tables
/// used by every character evaluation.
#[derive(Clone, PartialEq)]
pub struct GroupStructure {
    radices: Vec<usize>,
    orders: Vec<usize>,
    roots: Vec<Vec<Complex64>>,
}

impl fmt::Debug for GroupStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupStructure")
            .field("radices", &self.radices)
            .field("orders", &self.orders)
            .finish()
    }
}

impl GroupStructure {
    /// Builds the truncated group with the default grid cap.
    ///
    /// A radix list shorter than `depth` is repeated cyclically, a longer one
    /// is cut at `depth`.
    pub fn new(radices: &[usize], depth: usize) -> Result<Self> {
        Self::with_cap(radices, depth, DEFAULT_GRID_CAP)
    }

    pub fn with_cap(radices: &[usize], depth: usize, cap: u128) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidDepth(depth));
        }
        if radices.is_empty() {
            return Err(Error::Parse("empty radix list".into()));
        }
        let radices: Vec<usize> = radices.iter().copied().cycle().take(depth).collect();
        if let Some((position, &radix)) = radices.iter().enumerate().find(|(_, &r)| r < 2) {
            return Err(Error::InvalidRadix { position, radix });
        }

        let mut orders = Vec::with_capacity(depth + 1);
        let mut acc: u128 = 1;
        orders.push(1usize);
        for &m in &radices {
            acc *= m as u128;
            if acc * acc > cap {
                return Err(Error::TooLarge {
                    points: acc * acc,
                    cap,
                });
            }
            orders.push(acc as usize);
        }

        let roots = radices.iter().map(|&m| root_table(m)).collect();
        Ok(Self {
            radices,
            orders,
            roots,
        })
    }

    /// Truncation depth `L`.
    pub fn depth(&self) -> usize {
        self.radices.len()
    }

    /// Group order `M_L`, the number of grid points per axis.
    pub fn size(&self) -> usize {
        self.orders[self.depth()]
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// `M_0..=M_L`.
    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn radix(&self, k: usize) -> usize {
        self.radices[k]
    }

    /// `m_k` for `k < L`; coordinates past the truncation are trivial (1).
    pub fn radix_or_trivial(&self, k: usize) -> usize {
        self.radices.get(k).copied().unwrap_or(1)
    }

    /// `M_k` for `k <= L`.
    pub fn order(&self, k: usize) -> usize {
        self.orders[k]
    }

    /// `exp(2 pi i j / m_k)`, read from the precomputed table.
    #[inline]
    pub fn root(&self, k: usize, j: usize) -> Complex64 {
        let table = &self.roots[k];
        table[j % table.len()]
    }

    #[inline]
    pub fn digit(&self, index: usize, k: usize) -> usize {
        (index / self.orders[k]) % self.radices[k]
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.depth()).map(|k| self.digit(index, k)).collect()
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.size() {
            return Err(Error::IndexOverflow {
                index,
                size: self.size(),
            });
        }
        Ok(())
    }

    pub fn element(&self, index: usize) -> Result<GroupElement> {
        self.check_index(index)?;
        Ok(GroupElement {
            digits: self.digits(index),
        })
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement {
            digits: vec![0; self.depth()],
        }
    }

    /// Validates that `x` is a point of this group.
    pub fn check_element(&self, x: &GroupElement) -> Result<()> {
        if x.digits.len() != self.depth() {
            return Err(Error::StructureMismatch(format!(
                "element has {} digits, group depth is {}",
                x.digits.len(),
                self.depth()
            )));
        }
        for (k, (&d, &m)) in x.digits.iter().zip(&self.radices).enumerate() {
            if d >= m {
                return Err(Error::StructureMismatch(format!(
                    "digit {d} at coordinate {k} exceeds radix {m}"
                )));
            }
        }
        Ok(())
    }

    pub fn index_of(&self, x: &GroupElement) -> Result<usize> {
        self.check_element(x)?;
        Ok(x.digits
            .iter()
            .zip(&self.orders)
            .map(|(&d, &order)| d * order)
            .sum())
    }

    /// Mixed-radix expansion `n = sum_j n_j M_j` together with `|n|`.
    pub fn index_digits(&self, n: usize) -> Result<MixedRadixIndex> {
        self.check_index(n)?;
        let digits = self.digits(n);
        let order = digits.iter().rposition(|&d| d != 0);
        Ok(MixedRadixIndex {
            value: n,
            digits,
            order,
        })
    }

    pub fn add(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check_element(x)?;
        self.check_element(y)?;
        let digits = x
            .digits
            .iter()
            .zip(&y.digits)
            .zip(&self.radices)
            .map(|((&a, &b), &m)| (a + b) % m)
            .collect();
        Ok(GroupElement { digits })
    }

    pub fn sub(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check_element(x)?;
        self.check_element(y)?;
        let digits = x
            .digits
            .iter()
            .zip(&y.digits)
            .zip(&self.radices)
            .map(|((&a, &b), &m)| (a + m - b) % m)
            .collect();
        Ok(GroupElement { digits })
    }

    /// `e_k`: digit 1 at coordinate `k`, zero elsewhere.
    pub fn basis_element(&self, k: usize) -> Result<GroupElement> {
        if k >= self.depth() {
            return Err(out_of_range("k", k, format!("[0, {})", self.depth())));
        }
        let mut digits = vec![0; self.depth()];
        digits[k] = 1;
        Ok(GroupElement { digits })
    }

    /// `y in I_n(center)`: the first `n` digits agree.
    pub fn in_interval(&self, center: &GroupElement, n: usize, y: &GroupElement) -> bool {
        let n = n.min(self.depth());
        center.digits[..n] == y.digits[..n]
    }

    // Linear-index arithmetic used by the numeric kernels.

    #[inline]
    pub fn add_index(&self, a: usize, b: usize) -> usize {
        let mut out = 0;
        for k in 0..self.depth() {
            let m = self.radices[k];
            let order = self.orders[k];
            out += ((a / order % m + b / order % m) % m) * order;
        }
        out
    }

    #[inline]
    pub fn sub_index(&self, a: usize, b: usize) -> usize {
        let mut out = 0;
        for k in 0..self.depth() {
            let m = self.radices[k];
            let order = self.orders[k];
            out += ((a / order % m + m - b / order % m) % m) * order;
        }
        out
    }

    #[inline]
    pub fn neg_index(&self, a: usize) -> usize {
        self.sub_index(0, a)
    }

    /// Linear index of `v * e_k`.
    #[inline]
    pub fn scaled_basis_index(&self, k: usize, v: usize) -> usize {
        (v % self.radices[k]) * self.orders[k]
    }

    /// Index-level membership test `y in I_n(center)`.
    #[inline]
    pub fn in_interval_index(&self, center: usize, n: usize, y: usize) -> bool {
        let modulus = self.orders[n.min(self.depth())];
        center % modulus == y % modulus
    }

    /// Members of `I_n(center)`, i.e. `center mod M_n + M_n * h`.
    pub fn interval(&self, center: usize, n: usize) -> impl Iterator<Item = usize> {
        let n = n.min(self.depth());
        let step = self.orders[n];
        let low = center % step;
        let count = self.size() / step;
        (0..count).map(move |h| low + step * h)
    }

    /// Lower-digit pattern of the shifted interval `I_k(v e_q)`: the shift is
    /// visible only when `q < k`.
    #[inline]
    pub fn shifted_interval_low(&self, k: usize, q: usize, v: usize) -> usize {
        if q < k.min(self.depth()) {
            self.scaled_basis_index(q, v)
        } else {
            0
        }
    }
}

fn root_table(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|j| {
            // snap the points where sin/cos are exact
            if j == 0 {
                Complex64::new(1.0, 0.0)
            } else if 2 * j == m {
                Complex64::new(-1.0, 0.0)
            } else if 4 * j == m {
                Complex64::new(0.0, 1.0)
            } else if 4 * j == 3 * m {
                Complex64::new(0.0, -1.0)
            } else {
                Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)
            }
        })
        .collect()
}

/// A point of the truncated group as its digit sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    pub digits: Vec<usize>,
}

impl GroupElement {
    pub fn new(digits: Vec<usize>) -> Self {
        Self { digits }
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }
}

/// A nonnegative integer below `M_L` with its mixed-radix digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedRadixIndex {
    pub value: usize,
    pub digits: Vec<usize>,
    /// `|n| = max{k : n_k != 0}`; `None` for `n = 0`.
    pub order: Option<usize>,
}

impl MixedRadixIndex {
    pub fn recompose(&self, structure: &GroupStructure) -> usize {
        self.digits
            .iter()
            .zip(structure.orders())
            .map(|(&d, &order)| d * order)
            .sum()
    }
}

/// `|n|` for `n >= 1`, i.e. the `A` with `M_A <= n < M_{A+1}`; `n = M_L` maps
/// to `L`.
pub fn order_of(structure: &GroupStructure, n: usize) -> Option<usize> {
    if n == 0 {
        return None;
    }
    structure.orders().iter().rposition(|&order| order <= n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_small_structures() {
        assert_eq!(GroupStructure::new(&[2, 3], 2).unwrap().orders(), &[1, 2, 6]);
        assert_eq!(
            GroupStructure::new(&[2, 2, 2], 3).unwrap().orders(),
            &[1, 2, 4, 8]
        );
        assert_eq!(
            GroupStructure::new(&[2, 3, 2, 3], 4).unwrap().orders(),
            &[1, 2, 6, 12, 36]
        );
    }

    #[test]
    fn short_radix_list_repeats() {
        let g = GroupStructure::new(&[2, 3], 4).unwrap();
        assert_eq!(g.radices(), &[2, 3, 2, 3]);
        assert_eq!(g.size(), 36);
    }

    #[test]
    fn rejects_bad_radix_and_oversized_grid() {
        assert!(matches!(
            GroupStructure::new(&[2, 1], 2),
            Err(Error::InvalidRadix { position: 1, radix: 1 })
        ));
        assert!(matches!(
            GroupStructure::new(&[2], 0),
            Err(Error::InvalidDepth(0))
        ));
        assert!(matches!(
            GroupStructure::new(&[2], 14),
            Err(Error::TooLarge { .. })
        ));
        assert!(GroupStructure::with_cap(&[2], 14, 1 << 28).is_ok());
    }

    #[test]
    fn index_digits_examples() {
        let g = GroupStructure::new(&[2, 3], 2).unwrap();
        let five = g.index_digits(5).unwrap();
        assert_eq!(five.digits, vec![1, 2]);
        assert_eq!(five.order, Some(1));
        let zero = g.index_digits(0).unwrap();
        assert_eq!(zero.digits, vec![0, 0]);
        assert_eq!(zero.order, None);
        assert!(matches!(g.index_digits(6), Err(Error::IndexOverflow { .. })));

        let g = GroupStructure::new(&[2, 3, 2], 3).unwrap();
        let seven = g.index_digits(7).unwrap();
        assert_eq!(seven.digits, vec![1, 0, 1]);
        assert_eq!(seven.order, Some(2));
    }

    #[test]
    fn recomposition_and_order_bounds() {
        let g = GroupStructure::new(&[2, 3, 2, 3], 4).unwrap();
        for n in 0..g.size() {
            let idx = g.index_digits(n).unwrap();
            assert_eq!(idx.recompose(&g), n);
            if let Some(a) = idx.order {
                assert!(g.order(a) <= n && n < g.order(a + 1));
                assert_eq!(order_of(&g, n), Some(a));
            }
        }
        assert_eq!(order_of(&g, g.size()), Some(4));
    }

    #[test]
    fn group_operations() {
        let g = GroupStructure::new(&[2, 3], 2).unwrap();
        let x = GroupElement::new(vec![1, 2]);
        let y = GroupElement::new(vec![1, 1]);
        assert_eq!(g.add(&x, &y).unwrap(), g.zero());
        assert_eq!(g.sub(&x, &x).unwrap(), g.zero());
        let a = GroupElement::new(vec![0, 1]);
        let b = GroupElement::new(vec![0, 2]);
        assert_eq!(g.sub(&a, &b).unwrap().digits, vec![0, 2]);

        let e1 = g.basis_element(1).unwrap();
        assert_eq!(g.basis_element(0).unwrap().digits, vec![1, 0]);
        assert_eq!(e1.digits, vec![0, 1]);
        assert_eq!(g.add(&e1, &e1).unwrap().digits, vec![0, 2]);
        assert!(g.basis_element(2).is_err());

        let other = GroupElement::new(vec![0, 0, 0]);
        assert!(matches!(g.add(&x, &other), Err(Error::StructureMismatch(_))));
        let bad = GroupElement::new(vec![0, 3]);
        assert!(matches!(g.sub(&x, &bad), Err(Error::StructureMismatch(_))));
    }

    #[test]
    fn group_axioms_exhaustive() {
        let g = GroupStructure::new(&[2, 3, 2], 3).unwrap();
        let n = g.size();
        for a in 0..n {
            assert_eq!(g.add_index(a, 0), a);
            assert_eq!(g.add_index(a, g.neg_index(a)), 0);
            for b in 0..n {
                let ab = g.add_index(a, b);
                assert_eq!(ab, g.add_index(b, a));
                assert_eq!(g.sub_index(ab, b), a);
                for c in 0..n {
                    assert_eq!(g.add_index(ab, c), g.add_index(a, g.add_index(b, c)));
                }
            }
        }
        // element and index paths agree
        for a in 0..n {
            for b in 0..n {
                let x = g.element(a).unwrap();
                let y = g.element(b).unwrap();
                assert_eq!(g.index_of(&g.add(&x, &y).unwrap()).unwrap(), g.add_index(a, b));
                assert_eq!(g.index_of(&g.sub(&x, &y).unwrap()).unwrap(), g.sub_index(a, b));
            }
        }
    }

    #[test]
    fn interval_membership_and_measure() {
        let g = GroupStructure::new(&[2, 3, 2], 3).unwrap();
        let zero = g.zero();
        let y = GroupElement::new(vec![1, 0, 0]);
        assert!(g.in_interval(&zero, 0, &y));
        assert!(!g.in_interval(&zero, 1, &y));
        for c in 0..g.size() {
            let center = g.element(c).unwrap();
            for n in 0..=g.depth() {
                assert!(g.in_interval(&center, n, &center));
                let members: Vec<usize> = g.interval(c, n).collect();
                let counted = (0..g.size())
                    .filter(|&t| g.in_interval(&center, n, &g.element(t).unwrap()))
                    .count();
                assert_eq!(members.len(), counted);
                assert_eq!(members.len() * g.order(n), g.size());
                assert!(members.iter().all(|&t| g.in_interval_index(c, n, t)));
            }
        }
    }

    #[test]
    fn roots_are_exact_at_quarter_points() {
        let g = GroupStructure::new(&[2, 4], 2).unwrap();
        assert_eq!(g.root(0, 1), Complex64::new(-1.0, 0.0));
        assert_eq!(g.root(1, 1), Complex64::new(0.0, 1.0));
        assert_eq!(g.root(1, 3), Complex64::new(0.0, -1.0));
    }
}
