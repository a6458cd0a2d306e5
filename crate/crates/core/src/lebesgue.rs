//! The operators `W_A` (1-D) and `W_j` (2-D), the majorant components
//! `V_n^(1..4)` with their maximal operator, the martingale maximal function
//! and per-point Lebesgue classification.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::function::SampledFunction;
use crate::group::{GroupElement, GroupStructure};
use crate::kernels::{r_closed, Convention};
use crate::transform::{forward, inverse, Spectrum};

fn check_point(g: &GroupStructure, x: usize, y: usize) -> Result<()> {
    for idx in [x, y] {
        if idx >= g.size() {
            return Err(Error::IndexOverflow { index: idx, size: g.size() });
        }
    }
    Ok(())
}

fn check_order(g: &GroupStructure, name: &'static str, n: usize) -> Result<()> {
    if n > g.depth() {
        return Err(out_of_range(name, n, format!("[0, {}]", g.depth())));
    }
    Ok(())
}

/// `W_A f(x) = sum_{s<A} M_s sum_{r=1}^{m_s-1} int_{I_A(x - r e_s)} |f(t) - f(x)|`.
pub fn w_operator_1d(f: &SampledFunction, x: &GroupElement, a: usize) -> Result<f64> {
    f.expect_arity(1)?;
    let g = f.structure();
    check_order(g, "A", a)?;
    let x = g.index_of(x)?;
    Ok(w_operator_1d_index(f, x, a))
}

pub fn w_operator_1d_index(f: &SampledFunction, x: usize, a: usize) -> f64 {
    let g = f.structure();
    let fx = f.at(x);
    let mut total = 0.0;
    for s in 0..a {
        for r in 1..g.radix(s) {
            let center = g.sub_index(x, g.scaled_basis_index(s, r));
            let integral: f64 = g.interval(center, a).map(|t| (f.at(t) - fx).norm()).sum();
            total += g.order(s) as f64 * integral / g.size() as f64;
        }
    }
    total
}

/// Calls `visit(t, u, weight)` for every `(t, u)` in the support of the
/// component kernel `kappa_n^(i)`; repeated pairs accumulate.
/// Components 1 and 2 carry the indicator of `(t_r + u_r) mod m_r = 0` for
/// `r = k+1..n-1`, expressed through the closed `r` factor.
fn for_each_term(g: &GroupStructure, n: usize, component: usize, mut visit: impl FnMut(usize, usize, f64)) {
    let size = g.size();
    let big = g.order(n) as f64;
    match component {
        1 | 2 => {
            for q in 0..n {
                for k in q..n {
                    let step = g.order(k);
                    let count = size / step;
                    // M_q M_k / m_k on the indicator, i.e. M_q M_k^2 / M_n on r
                    let weight = (g.order(q) * step) as f64 * step as f64 / big;
                    for v in 1..g.radix(q) {
                        let shifted = g.shifted_interval_low(k, q, v);
                        for ha in 0..count {
                            for hb in 0..count {
                                let (a, b) = (shifted + step * ha, step * hb);
                                let r = r_closed(g, k + 1, n, a, b);
                                if r == 0.0 {
                                    continue;
                                }
                                if component == 1 {
                                    visit(a, b, weight * r);
                                } else {
                                    visit(b, a, weight * r);
                                }
                            }
                        }
                    }
                }
            }
        }
        3 | 4 => {
            let outer_step = g.order(n);
            // a coordinate s >= L is trivial and contributes no shifts
            for s in 0..=n.min(g.depth() - 1) {
                for i in s..=n {
                    let step = g.order(i);
                    let weight = (g.order(s) * step) as f64;
                    for v in 1..g.radix(s) {
                        let shifted = g.shifted_interval_low(i, s, v);
                        for ha in 0..size / outer_step {
                            for hb in 0..size / step {
                                let (a, b) = (outer_step * ha, shifted + step * hb);
                                if component == 3 {
                                    visit(a, b, weight);
                                } else {
                                    visit(b, a, weight);
                                }
                            }
                        }
                    }
                }
            }
        }
        _ => unreachable!("component index checked by callers"),
    }
}

/// `(1/M^2) sum kappa(t, u) vals[t * M + u]` for a displacement table.
fn component_at(g: &GroupStructure, vals: &[Complex64], n: usize, component: usize) -> Complex64 {
    let m = g.size();
    let mut acc = Complex64::new(0.0, 0.0);
    for_each_term(g, n, component, |t, u, w| acc += vals[t * m + u] * w);
    acc / (m * m) as f64
}

/// Displacement table `h(x - t, y - u)` at the point `(x, y)`.
fn displaced(f: &SampledFunction, x: usize, y: usize, map: impl Fn(Complex64) -> Complex64 + Sync) -> Vec<Complex64> {
    let g = f.structure();
    let m = g.size();
    let ys: Vec<usize> = (0..m).map(|u| g.sub_index(y, u)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
    out.par_chunks_mut(m).enumerate().for_each(|(t, row)| {
        let xt = g.sub_index(x, t);
        for (u, v) in row.iter_mut().enumerate() {
            *v = map(f.at2(xt, ys[u]));
        }
    });
    out
}

/// `W_j(x, y; f)`: the four sums over `|f(x - t, y - u) - f(x, y)|` with the
/// weights `M_q M_k^2 / M_j * r_{k+1,j-1}` and `M_s M_i`.
pub fn w_operator_2d(f: &SampledFunction, x: &GroupElement, y: &GroupElement, j: usize) -> Result<f64> {
    f.expect_arity(2)?;
    let g = f.structure();
    check_order(g, "j", j)?;
    let (x, y) = (g.index_of(x)?, g.index_of(y)?);
    let fxy = f.at2(x, y);
    let gm = displaced(f, x, y, |v| Complex64::new((v - fxy).norm(), 0.0));
    Ok((1..=4).map(|c| component_at(g, &gm, j, c).re).sum())
}

/// `W_j(x, y; f)` for `j = 0..=L`.
pub fn w_sequence_at(f: &SampledFunction, x: usize, y: usize) -> Vec<f64> {
    let g = f.structure();
    let fxy = f.at2(x, y);
    let gm = displaced(f, x, y, |v| Complex64::new((v - fxy).norm(), 0.0));
    (0..=g.depth())
        .into_par_iter()
        .map(|j| (1..=4).map(|c| component_at(g, &gm, j, c).re).sum())
        .collect()
}

pub fn w_sequence(f: &SampledFunction, x: &GroupElement, y: &GroupElement) -> Result<Vec<f64>> {
    f.expect_arity(2)?;
    let g = f.structure();
    let (x, y) = (g.index_of(x)?, g.index_of(y)?);
    Ok(w_sequence_at(f, x, y))
}

fn check_component(i: usize) -> Result<()> {
    if !(1..=4).contains(&i) {
        return Err(out_of_range("i", i, "[1, 4]".into()));
    }
    Ok(())
}

/// `V_n^(i) f(x, y)` evaluated by direct summation over the kernel support.
pub fn v_component(f: &SampledFunction, x: &GroupElement, y: &GroupElement, n: usize, i: usize) -> Result<Complex64> {
    f.expect_arity(2)?;
    let g = f.structure();
    check_order(g, "n", n)?;
    check_component(i)?;
    let (x, y) = (g.index_of(x)?, g.index_of(y)?);
    Ok(v_component_at(f, x, y, n, i))
}

pub fn v_component_at(f: &SampledFunction, x: usize, y: usize, n: usize, i: usize) -> Complex64 {
    let vals = displaced(f, x, y, |v| v);
    component_at(f.structure(), &vals, n, i)
}

/// Component kernel `kappa_n^(i)(t, u)`, so that `V_n^(i) f = f * kappa`.
pub fn v_kernel(g: &GroupStructure, n: usize, i: usize) -> Result<Vec<f64>> {
    check_order(g, "n", n)?;
    check_component(i)?;
    let m = g.size();
    let mut table = vec![0.0; m * m];
    for_each_term(g, n, i, |t, u, w| table[t * m + u] += w);
    Ok(table)
}

/// `V_n^(1..4)` and their sum at one point, plus the truncated sups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorProfile {
    pub x: usize,
    pub y: usize,
    /// Entry `n` holds `V_n^(1..4) f(x, y)` for `n = 0..=L`.
    pub components: Vec<[Complex64; 4]>,
    /// `sum_i V_n^(i) f(x, y)` for `n = 0..=L`.
    pub sums: Vec<Complex64>,
    /// `V^(i) f(x, y) = sup_{1 <= n <= L} |V_n^(i) f(x, y)|`.
    pub sup_components: [f64; 4],
    /// `V f(x, y) = sup_{1 <= n <= L} |V_n f(x, y)|`.
    pub sup: f64,
}

impl OperatorProfile {
    fn from_components(x: usize, y: usize, components: Vec<[Complex64; 4]>) -> Self {
        let sums: Vec<Complex64> = components.iter().map(|c| c.iter().sum()).collect();
        let mut sup_components = [0.0f64; 4];
        for c in components.iter().skip(1) {
            for (s, v) in sup_components.iter_mut().zip(c) {
                *s = s.max(v.norm());
            }
        }
        let sup = sums.iter().skip(1).map(|v| v.norm()).fold(0.0, f64::max);
        OperatorProfile { x, y, components, sums, sup_components, sup }
    }
}

/// Maximal operator profile at a point by direct summation.
pub fn v_maximal(f: &SampledFunction, x: &GroupElement, y: &GroupElement) -> Result<OperatorProfile> {
    f.expect_arity(2)?;
    let g = f.structure();
    let (x, y) = (g.index_of(x)?, g.index_of(y)?);
    Ok(v_maximal_at(f, x, y))
}

pub fn v_maximal_at(f: &SampledFunction, x: usize, y: usize) -> OperatorProfile {
    let g = f.structure();
    let vals = displaced(f, x, y, |v| v);
    let components = (0..=g.depth())
        .into_par_iter()
        .map(|n| std::array::from_fn(|c| component_at(g, &vals, n, c + 1)))
        .collect();
    OperatorProfile::from_components(x, y, components)
}

/// All component kernels of one structure, kept in spectral form so that a
/// whole grid of `V_n^(i) f` values costs one forward transform of `f`.
#[derive(Debug, Clone)]
pub struct VOperator {
    structure: Arc<GroupStructure>,
    kernels: Vec<[Vec<f64>; 4]>,
    spectra: Vec<[Spectrum; 4]>,
}

/// Grid values of every `V_n^(i) f` with the truncated sups.
#[derive(Debug, Clone)]
pub struct VField {
    /// `components[n][i - 1][x * M + y]` for `n = 0..=L`.
    pub components: Vec<[Vec<Complex64>; 4]>,
    /// `V^(i) f` on the grid.
    pub sup_components: [Vec<f64>; 4],
    /// `V f` on the grid.
    pub sup: Vec<f64>,
}

impl VOperator {
    pub fn new(g: Arc<GroupStructure>) -> Result<Self> {
        let depth = g.depth();
        let kernels: Vec<[Vec<f64>; 4]> = (0..=depth)
            .into_par_iter()
            .map(|n| std::array::from_fn(|c| v_kernel(&g, n, c + 1).expect("n <= L")))
            .collect();
        let spectra = kernels
            .iter()
            .map(|ks| {
                std::array::from_fn(|c| {
                    let f = SampledFunction::from_real(g.clone(), 2, &ks[c]).expect("grid sized table");
                    forward(&f)
                })
            })
            .collect();
        Ok(VOperator { structure: g, kernels, spectra })
    }

    pub fn structure(&self) -> &Arc<GroupStructure> {
        &self.structure
    }

    pub fn kernel(&self, n: usize, i: usize) -> &[f64] {
        &self.kernels[n][i - 1]
    }

    /// `sum_i int kappa_n^(i)` for `n = 0..=L`; the sup over `n >= 1` bounds
    /// `||V f||_inf / ||f||_inf`.
    pub fn linf_constants(&self) -> Vec<f64> {
        let m2 = (self.structure.size() * self.structure.size()) as f64;
        self.kernels
            .iter()
            .map(|ks| ks.iter().map(|k| k.iter().sum::<f64>()).sum::<f64>() / m2)
            .collect()
    }

    pub fn linf_constant(&self) -> f64 {
        self.linf_constants().into_iter().skip(1).fold(0.0, f64::max)
    }

    pub fn apply(&self, f: &SampledFunction) -> Result<VField> {
        f.expect_arity(2)?;
        if f.structure() != &*self.structure {
            return Err(Error::StructureMismatch(format!(
                "{:?} vs {:?}",
                f.structure().radices(),
                self.structure.radices()
            )));
        }
        let spec = forward(f);
        let components: Vec<[Vec<Complex64>; 4]> = self
            .spectra
            .par_iter()
            .map(|ks| {
                std::array::from_fn(|c| {
                    let coeffs = spec.coeffs().iter().zip(ks[c].coeffs()).map(|(a, b)| a * b).collect();
                    let s = Spectrum::new(self.structure.clone(), 2, coeffs).expect("same shape");
                    inverse(&s).into_values()
                })
            })
            .collect();
        let len = spec.coeffs().len();
        let mut sup_components: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; len]);
        let mut sup = vec![0.0; len];
        for c in components.iter().skip(1) {
            for p in 0..len {
                let mut total = Complex64::new(0.0, 0.0);
                for i in 0..4 {
                    sup_components[i][p] = sup_components[i][p].max(c[i][p].norm());
                    total += c[i][p];
                }
                sup[p] = f64::max(sup[p], total.norm());
            }
        }
        Ok(VField { components, sup_components, sup })
    }

    pub fn profile(&self, field: &VField, x: usize, y: usize) -> OperatorProfile {
        let p = x * self.structure.size() + y;
        let components = field
            .components
            .iter()
            .map(|c| std::array::from_fn(|i| c[i][p]))
            .collect();
        OperatorProfile::from_components(x, y, components)
    }
}

/// `f*(x, y) = sup_{n <= L} |average of f over I_n(x) x I_n(y)|`.
pub fn maximal_function(f: &SampledFunction, x: &GroupElement, y: &GroupElement) -> Result<f64> {
    f.expect_arity(2)?;
    let g = f.structure();
    let (x, y) = (g.index_of(x)?, g.index_of(y)?);
    Ok(maximal_function_grid(f)?[x * g.size() + y])
}

/// `f*` on the whole grid. Square averages are built from the finest level
/// down, each level summing `m_n x m_n` blocks of the level above.
pub fn maximal_function_grid(f: &SampledFunction) -> Result<Vec<f64>> {
    f.expect_arity(2)?;
    let g = f.structure();
    let m = g.size();
    let mut best: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    // level n averages indexed by the residues (x mod M_n, y mod M_n)
    let mut avg: Vec<Complex64> = f.values().to_vec();
    for n in (0..g.depth()).rev() {
        let (mn, radix) = (g.order(n), g.radix(n));
        let mn1 = g.order(n + 1);
        let mut next = vec![Complex64::new(0.0, 0.0); mn * mn];
        for a in 0..mn {
            for b in 0..mn {
                let mut acc = Complex64::new(0.0, 0.0);
                for va in 0..radix {
                    for vb in 0..radix {
                        acc += avg[(a + va * mn) * mn1 + b + vb * mn];
                    }
                }
                next[a * mn + b] = acc / (radix * radix) as f64;
            }
        }
        for x in 0..m {
            for y in 0..m {
                let v = next[(x % mn) * mn + y % mn].norm();
                let slot = &mut best[x * m + y];
                *slot = slot.max(v);
            }
        }
        avg = next;
    }
    Ok(best)
}

/// Position of a point relative to the jump set of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointClass {
    /// No single-digit shift along either axis changes `f`.
    Off,
    /// `f` changes along exactly one axis.
    Edge,
    /// `f` changes along both axes.
    Interface,
}

/// Which axes carry a single-digit shift `v e_k` that changes `f` at `(x, y)`.
pub fn jump_axes(f: &SampledFunction, x: usize, y: usize, tol: f64) -> (bool, bool) {
    let g = f.structure();
    let fxy = f.at2(x, y);
    let mut along = [false, false];
    for k in 0..g.depth() {
        for v in 1..g.radix(k) {
            let shift = g.scaled_basis_index(k, v);
            along[0] |= (f.at2(g.add_index(x, shift), y) - fxy).norm() > tol;
            along[1] |= (f.at2(x, g.add_index(y, shift)) - fxy).norm() > tol;
        }
    }
    (along[0], along[1])
}

pub fn point_class(f: &SampledFunction, x: usize, y: usize) -> PointClass {
    match jump_axes(f, x, y, 0.0) {
        (false, false) => PointClass::Off,
        (true, true) => PointClass::Interface,
        _ => PointClass::Edge,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converging,
    NonConverging,
    Inconclusive,
}

/// Threshold and trend rule applied to `W_1..W_L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictRule {
    pub threshold: f64,
    /// `W_L` above `divergence_factor * threshold` reads as non-converging.
    pub divergence_factor: f64,
    /// Length of the tail that must be nonincreasing.
    pub trend_window: usize,
}

impl Default for VerdictRule {
    fn default() -> Self {
        VerdictRule { threshold: 0.02, divergence_factor: 10.0, trend_window: 3 }
    }
}

impl VerdictRule {
    pub fn with_threshold(threshold: f64) -> Self {
        VerdictRule { threshold, ..Self::default() }
    }

    pub fn apply(&self, w: &[f64]) -> Verdict {
        let Some(&last) = w.last() else {
            return Verdict::Inconclusive;
        };
        let deepest_small = w.iter().rev().take(2).all(|&v| v < self.threshold);
        let tail = &w[w.len().saturating_sub(self.trend_window)..];
        // a tiny slack keeps rounding noise from breaking a flat tail
        let nonincreasing = tail.windows(2).all(|p| p[1] <= p[0] + 1e-12);
        if deepest_small && nonincreasing {
            Verdict::Converging
        } else if last > self.divergence_factor * self.threshold {
            Verdict::NonConverging
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LebesgueReport {
    pub x_digits: Vec<usize>,
    pub y_digits: Vec<usize>,
    /// `W_1..W_L` at the point.
    #[serde(rename = "W")]
    pub w: Vec<f64>,
    /// `|sigma_{M_j} f - f|(x, y)` for `j = 1..=L`.
    pub sigma_err: Vec<f64>,
    pub verdict: Verdict,
    pub class: PointClass,
}

/// `sigma_{M_j} f` on the grid for `j = 1..=L`.
fn block_means(f: &SampledFunction) -> Vec<SampledFunction> {
    let g = f.structure();
    let spec = forward(f);
    (1..=g.depth())
        .into_par_iter()
        .map(|j| {
            let n = g.order(j);
            let mut s = spec.clone();
            s.apply_multiplier(|a, b| Convention::ZeroBased.multiplier(n, a.max(b)));
            inverse(&s)
        })
        .collect()
}

fn report_from(f: &SampledFunction, means: &[SampledFunction], x: usize, y: usize, rule: &VerdictRule) -> LebesgueReport {
    let g = f.structure();
    let w = w_sequence_at(f, x, y)[1..].to_vec();
    let fxy = f.at2(x, y);
    let sigma_err = means.iter().map(|s| (s.at2(x, y) - fxy).norm()).collect();
    LebesgueReport {
        x_digits: g.digits(x),
        y_digits: g.digits(y),
        verdict: rule.apply(&w),
        w,
        sigma_err,
        class: point_class(f, x, y),
    }
}

pub fn classify_point(f: &SampledFunction, x: &GroupElement, y: &GroupElement, rule: &VerdictRule) -> Result<LebesgueReport> {
    f.expect_arity(2)?;
    let g = f.structure();
    let (x, y) = (g.index_of(x)?, g.index_of(y)?);
    Ok(report_from(f, &block_means(f), x, y, rule))
}

/// Reports for many `(x, y)` index pairs sharing one set of block means.
pub fn classify_points(f: &SampledFunction, points: &[(usize, usize)], rule: &VerdictRule) -> Result<Vec<LebesgueReport>> {
    f.expect_arity(2)?;
    for &(x, y) in points {
        check_point(f.structure(), x, y)?;
    }
    let means = block_means(f);
    Ok(points.iter().map(|&(x, y)| report_from(f, &means, x, y, rule)).collect())
}
