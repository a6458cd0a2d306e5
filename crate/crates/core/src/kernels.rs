//! Fejer and Marcinkiewicz-Fejer kernels, the `r_{i,n}` factor, the exact
//! decomposition of `M_A K_{M_A}(x, y)` and the majorant sums whose constants
//! are measured by [`estimate_scan`].

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{block_dirichlet, dirichlet_table};
use crate::error::{out_of_range, Error, Result};
use crate::function::SampledFunction;
use crate::group::{order_of, GroupElement, GroupStructure};
use crate::transform::{inverse, Spectrum};

/// Values below this are treated as zero by the estimate scans.
pub const ZERO_TOL: f64 = 1e-9;

/// Index convention for Fejer-type averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `(1/n) sum_{k=0}^{n-1}`.
    #[default]
    ZeroBased,
    /// `(1/n) sum_{k=1}^{n}`.
    OneBased,
}

impl Convention {
    /// Summation range of kernel indices for order `n`.
    pub fn range(self, n: usize) -> std::ops::Range<usize> {
        match self {
            Convention::ZeroBased => 0..n,
            Convention::OneBased => 1..n + 1,
        }
    }

    /// `#{k in range(n) : k > a} / n`, the multiplier of the average.
    pub fn multiplier(self, n: usize, a: usize) -> f64 {
        let r = self.range(n);
        r.end.saturating_sub(r.start.max(a + 1)) as f64 / n as f64
    }
}

/// Tabulated kernel on the full grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    structure: Arc<GroupStructure>,
    order: usize,
    arity: usize,
    values: Vec<Complex64>,
}

impl KernelTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn structure(&self) -> &GroupStructure {
        &self.structure
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, x: usize) -> Complex64 {
        self.values[x]
    }

    #[inline]
    pub fn at2(&self, x: usize, y: usize) -> Complex64 {
        self.values[x * self.structure.size() + y]
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    pub fn to_function(&self) -> SampledFunction {
        SampledFunction::new(self.structure.clone(), self.arity, self.values.clone())
            .expect("kernel values are finite")
    }
}

fn check_order(g: &GroupStructure, n: usize) -> Result<()> {
    if n == 0 || n > g.size() {
        return Err(out_of_range("n", n, format!("[1, {}]", g.size())));
    }
    Ok(())
}

/// 1-D Fejer kernel `K_n = (1/n) sum_{k<n} D_k`, synthesized from its
/// multiplier `(n - 1 - a)^+ / n`.
pub fn fejer_kernel_1d(g: &Arc<GroupStructure>, n: usize) -> Result<KernelTable> {
    fejer_kernel_1d_with(g, n, Convention::ZeroBased)
}

pub fn fejer_kernel_1d_with(g: &Arc<GroupStructure>, n: usize, convention: Convention) -> Result<KernelTable> {
    check_order(g, n)?;
    let coeffs = (0..g.size())
        .map(|a| Complex64::new(convention.multiplier(n, a), 0.0))
        .collect();
    let values = inverse(&Spectrum::new(g.clone(), 1, coeffs)?).into_values();
    Ok(KernelTable {
        structure: g.clone(),
        order: n,
        arity: 1,
        values,
    })
}

/// `K_n(x, y) = (1/n) sum_k D_k(x) D_k(y)` by direct summation of Dirichlet
/// kernel products.
pub fn marcinkiewicz_kernel(g: &Arc<GroupStructure>, n: usize) -> Result<KernelTable> {
    marcinkiewicz_kernel_with(g, n, Convention::ZeroBased)
}

pub fn marcinkiewicz_kernel_with(
    g: &Arc<GroupStructure>,
    n: usize,
    convention: Convention,
) -> Result<KernelTable> {
    check_order(g, n)?;
    let m = g.size();
    let d = dirichlet_table(g);
    let range = convention.range(n);
    let mut values = vec![Complex64::new(0.0, 0.0); m * m];
    values.par_chunks_mut(m).enumerate().for_each(|(x, row)| {
        for k in range.clone() {
            let dx = d[k * m + x];
            if dx == Complex64::new(0.0, 0.0) {
                continue;
            }
            let dk = &d[k * m..(k + 1) * m];
            for (v, &dy) in row.iter_mut().zip(dk) {
                *v += dx * dy;
            }
        }
        row.iter_mut().for_each(|v| *v /= n as f64);
    });
    Ok(KernelTable {
        structure: g.clone(),
        order: n,
        arity: 2,
        values,
    })
}

/// Closed form of `prod_{l=lo}^{hi-1} sum_s psi_{M_l}^s(x + y)`: the product of
/// the radices when every `(x_l + y_l) mod m_l` vanishes, else 0.
#[inline]
pub(crate) fn r_closed(g: &GroupStructure, lo: usize, hi: usize, x: usize, y: usize) -> f64 {
    let mut p = 1.0;
    for l in lo..hi {
        let m = g.radix(l);
        if (g.digit(x, l) + g.digit(y, l)) % m != 0 {
            return 0.0;
        }
        p *= m as f64;
    }
    p
}

fn check_r_range(g: &GroupStructure, i: usize, n: usize) -> Result<()> {
    if i <= n && n >= g.depth() {
        return Err(out_of_range("n", n, format!("[0, {})", g.depth())));
    }
    Ok(())
}

/// `r_{i,n}(x, y)` by the closed form; the empty product (`i > n`) is 1.
pub fn r_factor(g: &GroupStructure, i: usize, n: usize, x: &GroupElement, y: &GroupElement) -> Result<f64> {
    check_r_range(g, i, n)?;
    let (x, y) = (g.index_of(x)?, g.index_of(y)?);
    Ok(if i > n { 1.0 } else { r_closed(g, i, n + 1, x, y) })
}

/// `r_{i,n}(x, y)` as the literal product of character power sums.
pub fn r_factor_product(
    g: &GroupStructure,
    i: usize,
    n: usize,
    x: &GroupElement,
    y: &GroupElement,
) -> Result<Complex64> {
    check_r_range(g, i, n)?;
    let z = g.add(x, y)?;
    let mut p = Complex64::new(1.0, 0.0);
    if i > n {
        return Ok(p);
    }
    for l in i..=n {
        // psi_{M_l}(z) = r_l(z)
        let base = g.root(l, z.digits[l]);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut power = Complex64::new(1.0, 0.0);
        for _ in 0..g.radix(l) {
            sum += power;
            power *= base;
        }
        p *= sum;
    }
    Ok(p)
}

/// Convention for the coordinate range of the single-shift sums in the
/// block-kernel majorants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SRange {
    /// Shifts along coordinates `s <= A`.
    #[default]
    ThroughA,
    /// Shifts along coordinates `s <= A - 1`.
    BelowA,
}

impl SRange {
    fn count(self, a: usize) -> usize {
        match self {
            SRange::ThroughA => a + 1,
            SRange::BelowA => a,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SRange::ThroughA => "s<=A",
            SRange::BelowA => "s<=A-1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateId {
    Est1,
    Est2,
    Fejer,
    Lemma2,
}

impl EstimateId {
    pub const ALL: [EstimateId; 4] = [
        EstimateId::Est1,
        EstimateId::Est2,
        EstimateId::Fejer,
        EstimateId::Lemma2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimateId::Est1 => "est1",
            EstimateId::Est2 => "est2",
            EstimateId::Fejer => "fejer",
            EstimateId::Lemma2 => "lemma2",
        }
    }
}

impl std::str::FromStr for EstimateId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EstimateId::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown estimate '{s}'")))
    }
}

/// Cached tables for kernel identities and majorant sums on one structure.
pub struct KernelLab {
    g: Arc<GroupStructure>,
    dirichlet: Vec<Complex64>,
    /// `K_{M_k}` on the 1-D grid for `k = 0..=L`.
    block_fejer: Vec<Vec<Complex64>>,
}

impl KernelLab {
    pub fn new(g: Arc<GroupStructure>) -> Result<Self> {
        let block_fejer = (0..=g.depth())
            .map(|k| fejer_kernel_1d(&g, g.order(k)).map(|t| t.values))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dirichlet: dirichlet_table(&g),
            g,
            block_fejer,
        })
    }

    pub fn structure(&self) -> &Arc<GroupStructure> {
        &self.g
    }

    #[inline]
    fn d(&self, k: usize, x: usize) -> Complex64 {
        self.dirichlet[k * self.g.size() + x]
    }

    /// `sum_{k<n} D_k(x)`, i.e. `n K_n(x)`.
    pub fn fejer_sum_1d(&self, n: usize, x: usize) -> Complex64 {
        (0..n).map(|k| self.d(k, x)).sum()
    }

    /// `sum_{k<n} D_k(x) D_k(y)`, i.e. `n K_n(x, y)`.
    pub fn fejer_sum_2d(&self, n: usize, x: usize, y: usize) -> Complex64 {
        (0..n).map(|k| self.d(k, x) * self.d(k, y)).sum()
    }

    /// `K_{M_k}(x)` from the cached table.
    pub fn block_fejer(&self, k: usize, x: usize) -> Complex64 {
        self.block_fejer[k][x]
    }

    /// `sum_{v=1}^{m_s-1} D_{M_j}(x - v e_s)`; a coordinate past the
    /// truncation is trivial and contributes nothing.
    pub fn shift_block_sum(&self, j: usize, s: usize, x: usize) -> f64 {
        let g = &*self.g;
        if s >= g.depth() {
            return 0.0;
        }
        (1..g.radix(s))
            .map(|v| block_dirichlet(g, j, g.sub_index(x, g.scaled_basis_index(s, v))))
            .sum()
    }

    fn check_point(&self, x: &GroupElement, y: &GroupElement) -> Result<(usize, usize)> {
        Ok((self.g.index_of(x)?, self.g.index_of(y)?))
    }

    fn check_a(&self, a: usize, lo: usize, hi: usize) -> Result<()> {
        if a < lo || a > hi {
            return Err(out_of_range("A", a, format!("[{lo}, {hi}]")));
        }
        Ok(())
    }

    fn check_n(&self, n: usize) -> Result<usize> {
        if n == 0 || n > self.g.size() {
            return Err(out_of_range("n", n, format!("[1, {}]", self.g.size())));
        }
        Ok(order_of(&self.g, n).expect("n >= 1"))
    }

    /// Four-group decomposition of `M_A K_{M_A}(x, y)`, iterated down to the
    /// vanishing `M_0 K_{M_0}` term.
    pub fn decomposition_rhs(&self, a: usize, x: &GroupElement, y: &GroupElement) -> Result<Complex64> {
        self.check_a(a, 1, self.g.depth())?;
        let (x, y) = self.check_point(x, y)?;
        Ok(self.decomposition_rhs_at(a, x, y))
    }

    /// The decomposition with the extra trailing `r_{1,A-1}(x, y)` term.
    pub fn decomposition_rhs_literal(&self, a: usize, x: &GroupElement, y: &GroupElement) -> Result<Complex64> {
        self.check_a(a, 1, self.g.depth())?;
        let (x, y) = self.check_point(x, y)?;
        Ok(self.decomposition_rhs_at(a, x, y) + r_closed(&self.g, 1, a, x, y))
    }

    pub fn decomposition_rhs_at(&self, a: usize, x: usize, y: usize) -> Complex64 {
        let g = &*self.g;
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..a {
            let r = r_closed(g, k + 1, a, x, y);
            if r == 0.0 {
                continue;
            }
            let mk = g.order(k) as f64;
            let (xk, yk) = (g.digit(x, k), g.digit(y, k));
            let (dx, dy) = (block_dirichlet(g, k, x), block_dirichlet(g, k, y));
            let (kx, ky) = (self.block_fejer(k, x), self.block_fejer(k, y));
            let mut sx = Complex64::new(0.0, 0.0);
            let mut sy = Complex64::new(0.0, 0.0);
            let mut group = Complex64::new(0.0, 0.0);
            for rr in 1..g.radix(k) {
                sx += g.root(k, (rr - 1) * xk);
                sy += g.root(k, (rr - 1) * yk);
                group += mk * sx * sy * dx * dy
                    + sx * g.root(k, rr * yk) * dx * mk * ky
                    + sy * g.root(k, rr * xk) * dy * mk * kx;
            }
            total += r * group;
        }
        total
    }

    /// `sum_{s} (M_s / M_A) sum_v D_{M_A}(x - v e_s)`.
    pub fn est1_rhs(&self, a: usize, x: &GroupElement, range: SRange) -> Result<f64> {
        self.check_a(a, 0, self.g.depth())?;
        Ok(self.est1_rhs_at(a, self.g.index_of(x)?, range))
    }

    pub fn est1_rhs_at(&self, a: usize, x: usize, range: SRange) -> f64 {
        let ma = self.g.order(a) as f64;
        (0..range.count(a))
            .map(|s| self.g.order(s.min(self.g.depth())) as f64 / ma * self.shift_block_sum(a, s, x))
            .sum()
    }

    /// `sum_{j <= A} M_j |K_{M_j}(x)|` with `M_A <= n < M_{A+1}`.
    pub fn est2_rhs(&self, n: usize, x: &GroupElement) -> Result<f64> {
        let a = self.check_n(n)?;
        Ok(self.est2_rhs_for_order(a, self.g.index_of(x)?))
    }

    pub fn est2_rhs_for_order(&self, a: usize, x: usize) -> f64 {
        (0..=a)
            .map(|j| self.g.order(j) as f64 * self.block_fejer(j, x).norm())
            .sum()
    }

    /// `sum_{j <= A} sum_{s} M_s sum_v D_{M_j}(x - v e_s)`.
    pub fn fejer_rhs(&self, n: usize, x: &GroupElement, range: SRange) -> Result<f64> {
        let a = self.check_n(n)?;
        Ok(self.fejer_rhs_for_order(a, self.g.index_of(x)?, range))
    }

    pub fn fejer_rhs_for_order(&self, a: usize, x: usize, range: SRange) -> f64 {
        let mut total = 0.0;
        for j in 0..=a {
            for s in 0..range.count(j) {
                total += self.order_or_last(s) * self.shift_block_sum(j, s, x);
            }
        }
        total
    }

    /// The same double sum with the order of summation exchanged.
    pub fn fejer_rhs_reordered(&self, n: usize, x: &GroupElement, range: SRange) -> Result<f64> {
        let a = self.check_n(n)?;
        Ok(self.fejer_rhs_reordered_for_order(a, self.g.index_of(x)?, range))
    }

    pub fn fejer_rhs_reordered_for_order(&self, a: usize, x: usize, range: SRange) -> f64 {
        let mut total = 0.0;
        for s in 0..range.count(a) {
            let first = match range {
                SRange::ThroughA => s,
                SRange::BelowA => s + 1,
            };
            let inner: f64 = (first..=a).map(|j| self.shift_block_sum(j, s, x)).sum();
            total += self.order_or_last(s) * inner;
        }
        total
    }

    fn order_or_last(&self, s: usize) -> f64 {
        self.g.order(s.min(self.g.depth())) as f64
    }

    /// The four-sum majorant of `n |K_n(x, y)|` with `r_{k+1,j-1}` weights.
    pub fn lemma2_rhs(&self, n: usize, x: &GroupElement, y: &GroupElement) -> Result<f64> {
        let a = self.check_n(n)?;
        if a >= self.g.depth() {
            return Err(out_of_range("n", n, format!("[1, {})", self.g.size())));
        }
        let (x, y) = self.check_point(x, y)?;
        Ok(self.lemma2_rhs_for_order(a, x, y))
    }

    pub fn lemma2_rhs_for_order(&self, a: usize, x: usize, y: usize) -> f64 {
        let g = &*self.g;
        let mut total = 0.0;
        for j in 0..=a {
            for q in 0..j {
                for k in q..j {
                    let r = r_closed(g, k + 1, j, x, y);
                    if r == 0.0 {
                        continue;
                    }
                    let mq = g.order(q) as f64;
                    total += r
                        * mq
                        * (block_dirichlet(g, k, x) * self.shift_block_sum(k, q, y)
                            + block_dirichlet(g, k, y) * self.shift_block_sum(k, q, x));
                }
            }
            let (dx, dy) = (block_dirichlet(g, j, x), block_dirichlet(g, j, y));
            if dx == 0.0 && dy == 0.0 {
                continue;
            }
            let (mut sy, mut sx) = (0.0, 0.0);
            for s in 0..=j {
                let ms = self.order_or_last(s);
                for i in s..=j {
                    sy += ms * self.shift_block_sum(i, s, y);
                    sx += ms * self.shift_block_sum(i, s, x);
                }
            }
            total += dx * sy + dy * sx;
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRatio {
    pub n: usize,
    pub max_ratio: f64,
    pub zero_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: EstimateId,
    pub radices: Vec<usize>,
    pub depth: usize,
    pub s_range: SRange,
    pub per_order: Vec<OrderRatio>,
    /// Max ratio over all orders.
    pub observed_constant: f64,
}

impl EstimateReport {
    pub fn zero_mismatches(&self) -> usize {
        self.per_order.iter().map(|o| o.zero_mismatches).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.per_order
            .iter()
            .all(|o| o.max_ratio.is_finite() && o.max_ratio >= 0.0)
    }
}

fn ratio_over(lhs: &[f64], rhs: &[f64]) -> (f64, usize) {
    let mut max_ratio: f64 = 0.0;
    let mut mismatches = 0;
    for (&l, &r) in lhs.iter().zip(rhs) {
        if r > ZERO_TOL {
            max_ratio = max_ratio.max(l / r);
        } else if l > ZERO_TOL {
            mismatches += 1;
        }
    }
    (max_ratio, mismatches)
}

/// Maximal `LHS / RHS` per order over the whole grid for one estimate.
///
/// `est1` is scanned over block orders `M_A` with `A < L`; the other
/// estimates over `1 <= n < M_L`.
pub fn estimate_scan(lab: &KernelLab, id: EstimateId, range: SRange) -> EstimateReport {
    let g = lab.structure().clone();
    let m = g.size();
    let mut per_order = Vec::new();
    match id {
        EstimateId::Est1 => {
            for a in 0..g.depth() {
                let lhs: Vec<f64> = (0..m).map(|x| lab.block_fejer(a, x).norm()).collect();
                let rhs: Vec<f64> = (0..m).map(|x| lab.est1_rhs_at(a, x, range)).collect();
                let (max_ratio, zero_mismatches) = ratio_over(&lhs, &rhs);
                per_order.push(OrderRatio {
                    n: g.order(a),
                    max_ratio,
                    zero_mismatches,
                });
            }
        }
        EstimateId::Est2 | EstimateId::Fejer => {
            let rhs_by_order: Vec<Vec<f64>> = (0..g.depth())
                .map(|a| {
                    (0..m)
                        .map(|x| match id {
                            EstimateId::Est2 => lab.est2_rhs_for_order(a, x),
                            _ => lab.fejer_rhs_for_order(a, x, range),
                        })
                        .collect()
                })
                .collect();
            let mut running = vec![Complex64::new(0.0, 0.0); m];
            for n in 1..m {
                for (x, acc) in running.iter_mut().enumerate() {
                    *acc += lab.d(n - 1, x);
                }
                let lhs: Vec<f64> = running.iter().map(|v| v.norm()).collect();
                let a = order_of(&g, n).expect("n >= 1");
                let (max_ratio, zero_mismatches) = ratio_over(&lhs, &rhs_by_order[a]);
                per_order.push(OrderRatio {
                    n,
                    max_ratio,
                    zero_mismatches,
                });
            }
        }
        EstimateId::Lemma2 => {
            let rhs_by_order: Vec<Vec<f64>> = (0..g.depth())
                .map(|a| {
                    (0..m * m)
                        .into_par_iter()
                        .map(|i| lab.lemma2_rhs_for_order(a, i / m, i % m))
                        .collect()
                })
                .collect();
            let mut running = vec![Complex64::new(0.0, 0.0); m * m];
            for n in 1..m {
                let k = n - 1;
                running.par_chunks_mut(m).enumerate().for_each(|(x, row)| {
                    let dx = lab.d(k, x);
                    for (y, acc) in row.iter_mut().enumerate() {
                        *acc += dx * lab.d(k, y);
                    }
                });
                let lhs: Vec<f64> = running.iter().map(|v| v.norm()).collect();
                let a = order_of(&g, n).expect("n >= 1");
                let (max_ratio, zero_mismatches) = ratio_over(&lhs, &rhs_by_order[a]);
                per_order.push(OrderRatio {
                    n,
                    max_ratio,
                    zero_mismatches,
                });
            }
        }
    }
    let observed_constant = per_order.iter().map(|o| o.max_ratio).fold(0.0, f64::max);
    EstimateReport {
        estimate: id,
        radices: g.radices().to_vec(),
        depth: g.depth(),
        s_range: range,
        per_order,
        observed_constant,
    }
}

/// Scans one estimate at several depths of the same radix pattern.
pub fn estimate_scan_depths(
    radices: &[usize],
    depths: &[usize],
    id: EstimateId,
    range: SRange,
) -> Result<Vec<EstimateReport>> {
    depths
        .iter()
        .map(|&depth| {
            let lab = KernelLab::new(Arc::new(GroupStructure::new(radices, depth)?))?;
            Ok(estimate_scan(&lab, id, range))
        })
        .collect()
}

/// Relative change of the observed constant between the two deepest reports.
pub fn constant_drift(reports: &[EstimateReport]) -> Option<f64> {
    let mut sorted: Vec<&EstimateReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.depth);
    let [.., prev, last] = sorted.as_slice() else {
        return None;
    };
    if prev.observed_constant <= 0.0 {
        return None;
    }
    Some((last.observed_constant - prev.observed_constant).abs() / prev.observed_constant)
}
