//! Fast Vilenkin-Chrestenson transforms and group convolution.
//!
//! Analysis is `f^(n) = (1/M_L) sum_x f(x) conj(psi_n(x))`, synthesis is
//! `f(x) = sum_n f^(n) psi_n(x)`. With the normalized convolution
//! `(f * g)(x) = (1/M_L) sum_t f(t) g(x - t)` this gives `(f * g)^ = f^ g^`.
//!
//! The fast path runs one naive length-`m_k` DFT per coordinate, coordinate 0
//! first, across stride-`M_k` lanes inside blocks of `M_{k+1}`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::vilenkin_index;
use crate::error::{Error, Result};
use crate::function::{check_arity, grid_len, read_grid_csv, write_grid_csv, SampledFunction};
use crate::group::{GroupStructure, DEFAULT_GRID_CAP};

pub const SPECTRUM_KIND: &str = "spectrum";

/// Fourier coefficients on the full index grid, same layout as
/// [`SampledFunction`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    structure: Arc<GroupStructure>,
    arity: usize,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(structure: Arc<GroupStructure>, arity: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        check_arity(arity)?;
        let expected = grid_len(&structure, arity);
        if coeffs.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Self {
            structure,
            arity,
            coeffs,
        })
    }

    /// Unit coefficient at `index` (1-D) or `(index / M, index % M)` (2-D).
    pub fn delta(structure: Arc<GroupStructure>, arity: usize, index: usize) -> Result<Self> {
        check_arity(arity)?;
        let len = grid_len(&structure, arity);
        if index >= len {
            return Err(Error::IndexOverflow { index, size: len });
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); len];
        coeffs[index] = Complex64::new(1.0, 0.0);
        Self::new(structure, arity, coeffs)
    }

    pub fn structure(&self) -> &GroupStructure {
        &self.structure
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn at(&self, n: usize) -> Complex64 {
        self.coeffs[n]
    }

    #[inline]
    pub fn at2(&self, a: usize, b: usize) -> Complex64 {
        self.coeffs[a * self.structure.size() + b]
    }

    /// Pointwise multiplier `c(a)` (1-D) or `c(a, b)` (2-D) applied in place.
    pub fn apply_multiplier(&mut self, c: impl Fn(usize, usize) -> f64 + Sync) {
        let m = self.structure.size();
        if self.arity == 1 {
            for (a, v) in self.coeffs.iter_mut().enumerate() {
                *v *= c(a, 0);
            }
        } else {
            self.coeffs
                .par_chunks_mut(m)
                .enumerate()
                .for_each(|(a, row)| {
                    for (b, v) in row.iter_mut().enumerate() {
                        *v *= c(a, b);
                    }
                });
        }
    }

    /// `sum |f^(n)|^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_grid_csv(writer, &self.structure, self.arity, &self.coeffs, Some(SPECTRUM_KIND))
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let grid = read_grid_csv(reader, DEFAULT_GRID_CAP)?;
        if grid.kind.as_deref() != Some(SPECTRUM_KIND) {
            return Err(Error::Parse("header lacks kind=spectrum".into()));
        }
        Self::new(Arc::new(grid.structure), grid.arity, grid.values)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Analysis,
    Synthesis,
}

/// In-place unnormalized transform of one length-`M_L` line.
fn butterflies(g: &GroupStructure, data: &mut [Complex64], dir: Direction) {
    let size = g.size();
    let mut tmp = Vec::with_capacity(g.radices().iter().copied().max().unwrap_or(2));
    for k in 0..g.depth() {
        let m = g.radix(k);
        let stride = g.order(k);
        let block = g.order(k + 1);
        for start in (0..size).step_by(block) {
            for lane in start..start + stride {
                tmp.clear();
                tmp.extend((0..m).map(|j| data[lane + j * stride]));
                for h in 0..m {
                    let mut acc = tmp[0];
                    for (j, &v) in tmp.iter().enumerate().skip(1) {
                        let w = g.root(k, h * j);
                        acc += v * if dir == Direction::Analysis { w.conj() } else { w };
                    }
                    data[lane + h * stride] = acc;
                }
            }
        }
    }
}

fn transform_lines(g: &GroupStructure, values: &mut [Complex64], arity: usize, dir: Direction) {
    let m = g.size();
    let scale = if dir == Direction::Analysis {
        1.0 / m as f64
    } else {
        1.0
    };
    let line = |row: &mut [Complex64]| {
        butterflies(g, row, dir);
        if scale != 1.0 {
            row.iter_mut().for_each(|v| *v *= scale);
        }
    };
    if arity == 1 {
        line(values);
        return;
    }
    values.par_chunks_mut(m).for_each(line);
    transpose_square(values, m);
    values.par_chunks_mut(m).for_each(line);
    transpose_square(values, m);
}

fn transpose_square(values: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in i + 1..m {
            values.swap(i * m + j, j * m + i);
        }
    }
}

/// Fast analysis, `O(M_L sum_k m_k)` per line.
pub fn forward(f: &SampledFunction) -> Spectrum {
    let mut coeffs = f.values().to_vec();
    transform_lines(f.structure(), &mut coeffs, f.arity(), Direction::Analysis);
    Spectrum {
        structure: f.structure_arc().clone(),
        arity: f.arity(),
        coeffs,
    }
}

/// Fast synthesis.
pub fn inverse(s: &Spectrum) -> SampledFunction {
    let mut values = s.coeffs.clone();
    transform_lines(&s.structure, &mut values, s.arity, Direction::Synthesis);
    SampledFunction::new(s.structure.clone(), s.arity, values)
        .expect("synthesis of a finite spectrum is finite")
}

fn naive_line(g: &GroupStructure, input: &[Complex64], dir: Direction) -> Vec<Complex64> {
    let m = g.size();
    (0..m)
        .into_par_iter()
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, &v) in input.iter().enumerate() {
                let psi = vilenkin_index(g, n, x);
                acc += v * if dir == Direction::Analysis { psi.conj() } else { psi };
            }
            if dir == Direction::Analysis {
                acc / m as f64
            } else {
                acc
            }
        })
        .collect()
}

fn naive_lines(g: &GroupStructure, values: &[Complex64], arity: usize, dir: Direction) -> Vec<Complex64> {
    let m = g.size();
    if arity == 1 {
        return naive_line(g, values, dir);
    }
    let mut rows: Vec<Complex64> = values
        .chunks(m)
        .flat_map(|row| naive_line(g, row, dir))
        .collect();
    transpose_square(&mut rows, m);
    let mut out: Vec<Complex64> = rows.chunks(m).flat_map(|row| naive_line(g, row, dir)).collect();
    transpose_square(&mut out, m);
    out
}

/// Reference analysis by direct summation, `O(M_L^2)` per line.
pub fn naive_forward(f: &SampledFunction) -> Spectrum {
    Spectrum {
        structure: f.structure_arc().clone(),
        arity: f.arity(),
        coeffs: naive_lines(f.structure(), f.values(), f.arity(), Direction::Analysis),
    }
}

pub fn naive_inverse(s: &Spectrum) -> SampledFunction {
    let values = naive_lines(&s.structure, &s.coeffs, s.arity, Direction::Synthesis);
    SampledFunction::new(s.structure.clone(), s.arity, values)
        .expect("synthesis of a finite spectrum is finite")
}

/// Normalized group convolution through the spectral product.
pub fn convolve(f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
    f.expect_same_structure(g)?;
    let mut fs = forward(f);
    let gs = forward(g);
    fs.coeffs
        .iter_mut()
        .zip(&gs.coeffs)
        .for_each(|(a, b)| *a *= b);
    Ok(inverse(&fs))
}

/// Direct double-sum convolution, used as an oracle.
pub fn convolve_direct(f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
    f.expect_same_structure(g)?;
    let s = f.structure();
    let m = s.size();
    if f.arity() == 1 {
        let values = (0..m)
            .map(|x| {
                (0..m)
                    .map(|t| f.at(t) * g.at(s.sub_index(x, t)))
                    .sum::<Complex64>()
                    / m as f64
            })
            .collect();
        return SampledFunction::new(f.structure_arc().clone(), 1, values);
    }
    let diff: Vec<usize> = (0..m * m).map(|i| s.sub_index(i / m, i % m)).collect();
    let values = (0..m * m)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i / m, i % m);
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..m {
                let xt = diff[x * m + t];
                for u in 0..m {
                    acc += f.at2(t, u) * g.at2(xt, diff[y * m + u]);
                }
            }
            acc / (m * m) as f64
        })
        .collect();
    SampledFunction::new(f.structure_arc().clone(), 2, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn structure(radices: &[usize], depth: usize) -> Arc<GroupStructure> {
        Arc::new(GroupStructure::new(radices, depth).unwrap())
    }

    fn random(g: &Arc<GroupStructure>, arity: usize, seed: u64) -> SampledFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = g.size().pow(arity as u32);
        let values = (0..len)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SampledFunction::new(g.clone(), arity, values).unwrap()
    }

    // independent oracle: an explicit matrix of conjugated characters
    fn matrix_forward(f: &SampledFunction) -> Vec<Complex64> {
        let g = f.structure();
        let m = g.size();
        (0..m)
            .map(|n| {
                (0..m)
                    .map(|x| {
                        let phase: f64 = (0..g.depth())
                            .map(|k| (g.digit(n, k) * g.digit(x, k)) as f64 / g.radix(k) as f64)
                            .sum();
                        f.at(x) * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase)
                    })
                    .sum::<Complex64>()
                    / m as f64
            })
            .collect()
    }

    #[test]
    fn constant_and_character_spectra() {
        let g = structure(&[2, 3, 2], 3);
        let one = SampledFunction::constant(g.clone(), 1, Complex64::new(1.0, 0.0)).unwrap();
        let s = forward(&one);
        assert!((s.at(0) - 1.0).norm() < 1e-15);
        assert!(s.coeffs()[1..].iter().all(|c| c.norm() < 1e-15));
        for k in 0..g.size() {
            let psi = SampledFunction::from_fn_1d(g.clone(), |x| vilenkin_index(&g, k, x)).unwrap();
            let s = forward(&psi);
            for n in 0..g.size() {
                let expected = if n == k { 1.0 } else { 0.0 };
                assert!((s.at(n) - expected).norm() < 1e-12);
            }
            let back = inverse(&Spectrum::delta(g.clone(), 1, k).unwrap());
            assert!(back.max_abs_diff(&psi).unwrap() < 1e-12);
        }
    }

    #[test]
    fn indicator_spectrum_matches_matrix_oracle() {
        let g = structure(&[2, 3], 2);
        let ind = SampledFunction::from_fn_1d(g.clone(), |x| {
            Complex64::new(g.in_interval_index(0, 1, x) as u8 as f64, 0.0)
        })
        .unwrap();
        let s = forward(&ind);
        // frozen from the matrix oracle: 1/2 where n_1 = 0, zero elsewhere
        let frozen = [0.5, 0.5, 0.0, 0.0, 0.0, 0.0];
        for (n, &v) in frozen.iter().enumerate() {
            assert!((s.at(n) - Complex64::new(v, 0.0)).norm() < 1e-12);
        }
        let oracle = matrix_forward(&ind);
        for n in 0..g.size() {
            assert!((s.at(n) - oracle[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn fast_matches_naive_and_matrix_oracle() {
        for (radices, depth) in [
            (vec![2], 6),
            (vec![2, 3], 4),
            (vec![3], 3),
            (vec![5, 2, 4], 3),
            (vec![6, 3], 3),
        ] {
            let g = structure(&radices, depth);
            let f = random(&g, 1, 3);
            let fast = forward(&f);
            let naive = naive_forward(&f);
            let oracle = matrix_forward(&f);
            for n in 0..g.size() {
                assert!((fast.at(n) - naive.at(n)).norm() < 1e-12);
                assert!((fast.at(n) - oracle[n]).norm() < 1e-12);
            }
            let back = inverse(&fast);
            assert!(back.max_abs_diff(&naive_inverse(&naive)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_fast_matches_naive() {
        for (radices, depth) in [(vec![2, 3, 2], 3), (vec![2, 2, 2], 3), (vec![3, 3], 2)] {
            let g = structure(&radices, depth);
            let f = random(&g, 2, 11);
            let fast = forward(&f);
            let naive = naive_forward(&f);
            let err = fast
                .coeffs()
                .iter()
                .zip(naive.coeffs())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "{radices:?}: {err}");
            assert!(inverse(&fast).max_abs_diff(&f).unwrap() < 1e-12);
        }
    }

    #[test]
    fn tensor_spectrum_factors() {
        let g = structure(&[2, 3], 2);
        let a = random(&g, 1, 1);
        let b = random(&g, 1, 2);
        let s = forward(&SampledFunction::tensor(&a, &b).unwrap());
        let (sa, sb) = (forward(&a), forward(&b));
        for i in 0..g.size() {
            for j in 0..g.size() {
                assert!((s.at2(i, j) - sa.at(i) * sb.at(j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn convolution_examples() {
        let g = structure(&[2, 3, 2], 3);
        let m = g.size();
        let f = random(&g, 1, 5);
        // smoothing by the block kernel averages over I_n(x)
        for n in 0..=g.depth() {
            let kernel = SampledFunction::from_fn_1d(g.clone(), |x| {
                Complex64::new(crate::basis::block_dirichlet(&g, n, x), 0.0)
            })
            .unwrap();
            let smooth = convolve(&f, &kernel).unwrap();
            for x in 0..m {
                let members: Vec<usize> = g.interval(x, n).collect();
                let avg: Complex64 =
                    members.iter().map(|&t| f.at(t)).sum::<Complex64>() / members.len() as f64;
                assert!((smooth.at(x) - avg).norm() < 1e-12);
            }
        }
        let one = SampledFunction::constant(g.clone(), 1, Complex64::new(1.0, 0.0)).unwrap();
        let mean = f.haar_integrate();
        assert!(convolve(&f, &one)
            .unwrap()
            .values()
            .iter()
            .all(|v| (v - mean).norm() < 1e-12));
        for a in [0, 1, 7, 11] {
            let psi = SampledFunction::from_fn_1d(g.clone(), |x| vilenkin_index(&g, a, x)).unwrap();
            assert!(convolve(&psi, &psi).unwrap().max_abs_diff(&psi).unwrap() < 1e-12);
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let g = structure(&[2, 3], 2);
        let (f, h) = (random(&g, 1, 8), random(&g, 1, 9));
        assert!(convolve(&f, &h)
            .unwrap()
            .max_abs_diff(&convolve_direct(&f, &h).unwrap())
            .unwrap()
            < 1e-10);
        let (f, h) = (random(&g, 2, 8), random(&g, 2, 9));
        assert!(convolve(&f, &h)
            .unwrap()
            .max_abs_diff(&convolve_direct(&f, &h).unwrap())
            .unwrap()
            < 1e-10);
        let other = structure(&[3, 2], 2);
        assert!(convolve(&f, &random(&other, 2, 1)).is_err());
    }

    #[test]
    fn spectrum_csv_roundtrip() {
        let g = structure(&[2, 3], 2);
        let s = forward(&random(&g, 2, 4));
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("radices=2,3;depth=2;kind=spectrum\n"));
        assert_eq!(Spectrum::read_csv(&buf[..]).unwrap(), s);
        let mut plain = Vec::new();
        random(&g, 1, 4).write_csv(&mut plain).unwrap();
        assert!(Spectrum::read_csv(&plain[..]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn roundtrip_and_parseval(seed in 0u64..1000, which in 0usize..4) {
            let (radices, depth) = [(vec![2], 6), (vec![2, 3], 4), (vec![3], 3), (vec![4, 3, 2], 3)][which].clone();
            let g = structure(&radices, depth);
            let f = random(&g, 1, seed);
            let s = forward(&f);
            prop_assert!(inverse(&s).max_abs_diff(&f).unwrap() < 1e-12);
            let mean_sq = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / g.size() as f64;
            prop_assert!((mean_sq - s.energy()).abs() < 1e-12);
        }

        #[test]
        fn translation_covariance(seed in 0u64..1000, a in 0usize..36) {
            let g = structure(&[2, 3, 2, 3], 4);
            let f = random(&g, 1, seed);
            let lhs = forward(&f.translate(a).unwrap());
            let rhs = forward(&f);
            for n in 0..g.size() {
                let expected = vilenkin_index(&g, n, a).conj() * rhs.at(n);
                prop_assert!((lhs.at(n) - expected).norm() < 1e-12);
            }
        }

        #[test]
        fn convolution_theorem(seed in 0u64..1000) {
            let g = structure(&[3, 2], 2);
            let (f, h) = (random(&g, 2, seed), random(&g, 2, seed + 1));
            let lhs = forward(&convolve_direct(&f, &h).unwrap());
            let (sf, sh) = (forward(&f), forward(&h));
            for i in 0..lhs.coeffs().len() {
                prop_assert!((lhs.coeffs()[i] - sf.coeffs()[i] * sh.coeffs()[i]).norm() < 1e-12);
            }
        }

        #[test]
        fn linearity(seed in 0u64..1000, c in -2.0f64..2.0) {
            let g = structure(&[2, 3, 2], 3);
            let (f, h) = (random(&g, 1, seed), random(&g, 1, seed ^ 77));
            let lhs = forward(&f.scale(Complex64::new(c, 0.5)).add(&h).unwrap());
            let (sf, sh) = (forward(&f), forward(&h));
            for n in 0..g.size() {
                prop_assert!((lhs.at(n) - (sf.at(n) * Complex64::new(c, 0.5) + sh.at(n))).norm() < 1e-12);
            }
        }
    }
}
