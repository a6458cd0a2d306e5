//! Rectangular partial sums and Marcinkiewicz-Fejer means
//! `sigma_n f = (1/n) sum_j S_{j,j} f`, computed three independent ways:
//! diagonal partial sums, the spectral multiplier, and convolution with the
//! tabulated kernel.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::character_table;
use crate::error::{out_of_range, Error, Result};
use crate::function::{max_abs_diff, SampledFunction};
pub use crate::kernels::Convention;
use crate::kernels::marcinkiewicz_kernel_with;
use crate::lebesgue::w_sequence_at;
use crate::transform::{convolve, forward, inverse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeansMethod {
    Direct,
    Multiplier,
    Kernel,
}

impl MeansMethod {
    pub const ALL: [MeansMethod; 3] = [MeansMethod::Direct, MeansMethod::Multiplier, MeansMethod::Kernel];
}

impl std::str::FromStr for MeansMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(MeansMethod::Direct),
            "multiplier" => Ok(MeansMethod::Multiplier),
            "kernel" => Ok(MeansMethod::Kernel),
            other => Err(Error::Parse(format!("unknown means method '{other}'"))),
        }
    }
}

/// One method's `sigma_n f` with its largest deviation from the other two.
#[derive(Debug, Clone)]
pub struct MeansEvaluation {
    pub n: usize,
    pub method: MeansMethod,
    pub convention: Convention,
    pub result: SampledFunction,
    pub max_discrepancy: f64,
}

/// JSON sidecar written next to a means CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeansSidecar {
    pub n: usize,
    pub method: MeansMethod,
    pub max_discrepancy: f64,
}

impl MeansEvaluation {
    pub fn sidecar(&self) -> MeansSidecar {
        MeansSidecar {
            n: self.n,
            method: self.method,
            max_discrepancy: self.max_discrepancy,
        }
    }
}

fn check_means_order(f: &SampledFunction, n: usize) -> Result<()> {
    let size = f.structure().size();
    if n == 0 || n > size {
        return Err(out_of_range("n", n, format!("[1, {size}]")));
    }
    Ok(())
}

/// `S_{M,N} f = sum_{a<M, b<N} f^(a,b) psi_a(x) psi_b(y)`.
pub fn partial_sum_2d(f: &SampledFunction, mm: usize, nn: usize) -> Result<SampledFunction> {
    f.expect_arity(2)?;
    let size = f.structure().size();
    for (name, v) in [("M", mm), ("N", nn)] {
        if v > size {
            return Err(out_of_range(name, v, format!("[0, {size}]")));
        }
    }
    let mut s = forward(f);
    s.apply_multiplier(|a, b| if a < mm && b < nn { 1.0 } else { 0.0 });
    Ok(inverse(&s))
}

/// Cumulative diagonal sums: `cum[j] = sum_{i<j} S_{i,i} f`, built shell by
/// shell from the character table.
fn cumulative_diagonal_sums(f: &SampledFunction, upto: usize) -> Vec<Vec<Complex64>> {
    let g = f.structure();
    let m = g.size();
    let psi = character_table(g);
    let spec = forward(f);
    let mut current = vec![Complex64::new(0.0, 0.0); m * m];
    let mut cum = vec![vec![Complex64::new(0.0, 0.0); m * m]];
    let mut running = vec![Complex64::new(0.0, 0.0); m * m];
    for j in 0..upto {
        // running = sum_{i<=j} S_{i,i}; current = S_{j,j}
        running
            .par_iter_mut()
            .zip(&current)
            .for_each(|(r, c)| *r += c);
        cum.push(running.clone());
        if j == m {
            break;
        }
        // S_{j+1,j+1} = S_{j,j} + shell at max(a, b) = j
        let row_part: Vec<Complex64> = (0..m)
            .map(|y| (0..=j).map(|b| spec.at2(j, b) * psi[b * m + y]).sum())
            .collect();
        let col_part: Vec<Complex64> = (0..m)
            .map(|x| (0..j).map(|a| spec.at2(a, j) * psi[a * m + x]).sum())
            .collect();
        current.par_chunks_mut(m).enumerate().for_each(|(x, row)| {
            let px = psi[j * m + x];
            for (y, v) in row.iter_mut().enumerate() {
                *v += px * row_part[y] + psi[j * m + y] * col_part[x];
            }
        });
    }
    cum
}

fn means_from_cumulative(cum: &[Vec<Complex64>], n: usize, convention: Convention) -> Vec<Complex64> {
    let r = convention.range(n);
    cum[r.end]
        .iter()
        .zip(&cum[r.start])
        .map(|(hi, lo)| (hi - lo) / n as f64)
        .collect()
}

/// `sigma_n f` by a single method.
pub fn means(
    f: &SampledFunction,
    n: usize,
    method: MeansMethod,
    convention: Convention,
) -> Result<SampledFunction> {
    f.expect_arity(2)?;
    check_means_order(f, n)?;
    match method {
        MeansMethod::Direct => {
            let cum = cumulative_diagonal_sums(f, convention.range(n).end);
            SampledFunction::new(f.structure_arc().clone(), 2, means_from_cumulative(&cum, n, convention))
        }
        MeansMethod::Multiplier => {
            let mut s = forward(f);
            s.apply_multiplier(|a, b| convention.multiplier(n, a.max(b)));
            Ok(inverse(&s))
        }
        MeansMethod::Kernel => {
            let kernel = marcinkiewicz_kernel_with(f.structure_arc(), n, convention)?;
            convolve(f, &kernel.to_function())
        }
    }
}

/// `sigma_n f` by `method`, cross-checked against the other two methods.
pub fn marcinkiewicz_means(f: &SampledFunction, n: usize, method: MeansMethod) -> Result<MeansEvaluation> {
    marcinkiewicz_means_with(f, n, method, Convention::ZeroBased)
}

pub fn marcinkiewicz_means_with(
    f: &SampledFunction,
    n: usize,
    method: MeansMethod,
    convention: Convention,
) -> Result<MeansEvaluation> {
    let result = means(f, n, method, convention)?;
    let mut max_discrepancy: f64 = 0.0;
    for other in MeansMethod::ALL {
        if other != method {
            let alt = means(f, n, other, convention)?;
            max_discrepancy = max_discrepancy.max(max_abs_diff(result.values(), alt.values()));
        }
    }
    Ok(MeansEvaluation {
        n,
        method,
        convention,
        result,
        max_discrepancy,
    })
}

/// All orders `n = 1..=M_L` by the direct method, sharing one pass of
/// diagonal sums. Entry `n - 1` holds `sigma_n f`.
pub fn direct_means_all(f: &SampledFunction, convention: Convention) -> Result<Vec<SampledFunction>> {
    f.expect_arity(2)?;
    let size = f.structure().size();
    let cum = cumulative_diagonal_sums(f, convention.range(size).end);
    (1..=size)
        .map(|n| {
            SampledFunction::new(
                f.structure_arc().clone(),
                2,
                means_from_cumulative(&cum, n, convention),
            )
        })
        .collect()
}

/// 1-D Fejer means `(1/n) sum_{k<n} S_k f` through the multiplier
/// `(n - 1 - a)^+ / n`.
pub fn fejer_means_1d(f: &SampledFunction, n: usize) -> Result<SampledFunction> {
    fejer_means_1d_with(f, n, Convention::ZeroBased)
}

pub fn fejer_means_1d_with(f: &SampledFunction, n: usize, convention: Convention) -> Result<SampledFunction> {
    f.expect_arity(1)?;
    check_means_order(f, n)?;
    let mut s = forward(f);
    s.apply_multiplier(|a, _| convention.multiplier(n, a));
    Ok(inverse(&s))
}

/// Pointwise error of `sigma_n f` and the majorant
/// `(1/n) sum_{j <= |n|} M_j W_j(x, y; f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeansError {
    pub error: f64,
    pub majorant: f64,
    /// `error / majorant`; `None` when the majorant vanishes.
    pub ratio: Option<f64>,
}

pub fn means_error(
    f: &SampledFunction,
    n: usize,
    x: usize,
    y: usize,
    convention: Convention,
) -> Result<MeansError> {
    f.expect_arity(2)?;
    check_means_order(f, n)?;
    let g = f.structure();
    for idx in [x, y] {
        if idx >= g.size() {
            return Err(Error::IndexOverflow {
                index: idx,
                size: g.size(),
            });
        }
    }
    let sigma = means(f, n, MeansMethod::Multiplier, convention)?;
    let error = (sigma.at2(x, y) - f.at2(x, y)).norm();
    let a = crate::group::order_of(g, n).expect("n >= 1");
    let w = w_sequence_at(f, x, y);
    let majorant = (0..=a).map(|j| g.order(j) as f64 * w[j]).sum::<f64>() / n as f64;
    let ratio = (majorant > 0.0).then(|| error / majorant);
    Ok(MeansError {
        error,
        majorant,
        ratio,
    })
}
