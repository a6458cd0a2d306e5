//! Functions sampled on the full truncated grid, Haar integration and the
//! shared CSV grid format.
//!
//! 1-D samples hold `M_L` values in mixed-radix order. 2-D samples hold
//! `M_L^2` values laid out as `values[ix * M_L + iy]`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{GroupStructure, DEFAULT_GRID_CAP};

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    structure: Arc<GroupStructure>,
    arity: usize,
    values: Vec<Complex64>,
}

pub(crate) fn check_arity(arity: usize) -> Result<()> {
    if arity == 1 || arity == 2 {
        Ok(())
    } else {
        Err(Error::ArityMismatch {
            expected: 2,
            got: arity,
        })
    }
}

pub(crate) fn grid_len(structure: &GroupStructure, arity: usize) -> usize {
    structure.size().pow(arity as u32)
}

impl SampledFunction {
    pub fn new(structure: Arc<GroupStructure>, arity: usize, values: Vec<Complex64>) -> Result<Self> {
        check_arity(arity)?;
        let expected = grid_len(&structure, arity);
        if values.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            structure,
            arity,
            values,
        })
    }

    pub fn from_real(structure: Arc<GroupStructure>, arity: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            structure,
            arity,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn from_fn_1d(structure: Arc<GroupStructure>, f: impl Fn(usize) -> Complex64) -> Result<Self> {
        let values = (0..structure.size()).map(f).collect();
        Self::new(structure, 1, values)
    }

    pub fn from_fn_2d(
        structure: Arc<GroupStructure>,
        f: impl Fn(usize, usize) -> Complex64,
    ) -> Result<Self> {
        let m = structure.size();
        let values = (0..m * m).map(|i| f(i / m, i % m)).collect();
        Self::new(structure, 2, values)
    }

    pub fn constant(structure: Arc<GroupStructure>, arity: usize, c: Complex64) -> Result<Self> {
        check_arity(arity)?;
        let len = grid_len(&structure, arity);
        Self::new(structure, arity, vec![c; len])
    }

    pub fn zeros(structure: Arc<GroupStructure>, arity: usize) -> Result<Self> {
        Self::constant(structure, arity, Complex64::new(0.0, 0.0))
    }

    /// Outer product `g(x) h(y)` of two 1-D samples.
    pub fn tensor(g: &SampledFunction, h: &SampledFunction) -> Result<Self> {
        g.expect_arity(1)?;
        h.expect_arity(1)?;
        g.expect_same_structure(h)?;
        Self::from_fn_2d(g.structure.clone(), |x, y| g.values[x] * h.values[y])
    }

    pub fn structure(&self) -> &GroupStructure {
        &self.structure
    }

    pub fn structure_arc(&self) -> &Arc<GroupStructure> {
        &self.structure
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    #[inline]
    pub fn at(&self, x: usize) -> Complex64 {
        self.values[x]
    }

    #[inline]
    pub fn at2(&self, x: usize, y: usize) -> Complex64 {
        self.values[x * self.structure.size() + y]
    }

    pub fn expect_arity(&self, arity: usize) -> Result<()> {
        if self.arity != arity {
            return Err(Error::ArityMismatch {
                expected: arity,
                got: self.arity,
            });
        }
        Ok(())
    }

    pub fn expect_same_structure(&self, other: &SampledFunction) -> Result<()> {
        if self.structure != other.structure {
            return Err(Error::StructureMismatch(format!(
                "{:?} vs {:?}",
                self.structure.radices(),
                other.structure.radices()
            )));
        }
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: other.arity,
            });
        }
        Ok(())
    }

    /// Integral against normalized Haar measure: the arithmetic mean.
    pub fn haar_integrate(&self) -> Complex64 {
        let sum: Complex64 = self.values.iter().sum();
        sum / self.values.len() as f64
    }

    /// `(mean |f|^p)^(1/p)` for `0 < p < inf`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm_of(self.values.iter().map(|v| v.norm()), self.values.len(), p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            structure: self.structure.clone(),
            arity: self.arity,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &SampledFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(
        &self,
        other: &SampledFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.expect_same_structure(other)?;
        Ok(Self {
            structure: self.structure.clone(),
            arity: self.arity,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &SampledFunction) -> Result<f64> {
        self.expect_same_structure(other)?;
        Ok(max_abs_diff(&self.values, &other.values))
    }

    /// `f(. - a)` in 1-D.
    pub fn translate(&self, a: usize) -> Result<Self> {
        self.expect_arity(1)?;
        let g = &self.structure;
        if a >= g.size() {
            return Err(Error::IndexOverflow {
                index: a,
                size: g.size(),
            });
        }
        Self::from_fn_1d(self.structure.clone(), |x| self.values[g.sub_index(x, a)])
    }

    /// `f(. - a, . - b)` in 2-D.
    pub fn translate2(&self, a: usize, b: usize) -> Result<Self> {
        self.expect_arity(2)?;
        let g = &self.structure;
        for idx in [a, b] {
            if idx >= g.size() {
                return Err(Error::IndexOverflow {
                    index: idx,
                    size: g.size(),
                });
            }
        }
        let m = g.size();
        let xs: Vec<usize> = (0..m).map(|x| g.sub_index(x, a)).collect();
        let ys: Vec<usize> = (0..m).map(|y| g.sub_index(y, b)).collect();
        Self::from_fn_2d(self.structure.clone(), |x, y| self.values[xs[x] * m + ys[y]])
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_grid_csv(writer, &self.structure, self.arity, &self.values, None)
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        Self::read_csv_with_cap(reader, DEFAULT_GRID_CAP)
    }

    pub fn read_csv_with_cap<R: BufRead>(reader: R, cap: u128) -> Result<Self> {
        let grid = read_grid_csv(reader, cap)?;
        if grid.kind.is_some() {
            return Err(Error::Parse(format!(
                "expected a sampled function, found kind={}",
                grid.kind.unwrap_or_default()
            )));
        }
        Self::new(Arc::new(grid.structure), grid.arity, grid.values)
    }
}

pub(crate) fn lp_norm_of(abs_values: impl Iterator<Item = f64>, len: usize, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let mean = abs_values.map(|v| v.powf(p)).sum::<f64>() / len as f64;
    Ok(mean.powf(1.0 / p))
}

pub(crate) fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Parsed content of a grid CSV file.
#[derive(Debug)]
pub(crate) struct GridCsv {
    pub structure: GroupStructure,
    pub arity: usize,
    pub values: Vec<Complex64>,
    pub kind: Option<String>,
}

pub(crate) fn header_line(structure: &GroupStructure, kind: Option<&str>) -> String {
    let radices: Vec<String> = structure.radices().iter().map(|r| r.to_string()).collect();
    let mut line = format!("radices={};depth={}", radices.join(","), structure.depth());
    if let Some(kind) = kind {
        line.push_str(";kind=");
        line.push_str(kind);
    }
    line
}

pub(crate) fn write_grid_csv<W: Write>(
    mut writer: W,
    structure: &GroupStructure,
    arity: usize,
    values: &[Complex64],
    kind: Option<&str>,
) -> Result<()> {
    writeln!(writer, "{}", header_line(structure, kind))?;
    let mut csv = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    let m = structure.size();
    for (i, v) in values.iter().enumerate() {
        if arity == 1 {
            csv.write_record(&[i.to_string(), v.re.to_string(), v.im.to_string()])?;
        } else {
            csv.write_record(&[
                (i / m).to_string(),
                (i % m).to_string(),
                v.re.to_string(),
                v.im.to_string(),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Result<(Vec<usize>, usize, Option<String>)> {
    let mut radices = None;
    let mut depth = None;
    let mut kind = None;
    for part in line.trim().split(';') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("malformed header field '{part}'")))?;
        match key.trim() {
            "radices" => {
                let list = value
                    .split(',')
                    .map(|r| r.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parse(format!("radices: {e}")))?;
                radices = Some(list);
            }
            "depth" => {
                depth = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| Error::Parse(format!("depth: {e}")))?,
                )
            }
            "kind" => kind = Some(value.trim().to_string()),
            other => return Err(Error::Parse(format!("unknown header field '{other}'"))),
        }
    }
    match (radices, depth) {
        (Some(r), Some(d)) => Ok((r, d, kind)),
        _ => Err(Error::Parse("header must carry radices and depth".into())),
    }
}

pub(crate) fn read_grid_csv<R: BufRead>(mut reader: R, cap: u128) -> Result<GridCsv> {
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let (radices, depth, kind) = parse_header(&header)?;
    let structure = GroupStructure::with_cap(&radices, depth, cap)?;
    let m = structure.size();

    let mut rows = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut entries: Vec<(usize, Complex64)> = Vec::new();
    let mut arity = None;
    for record in rows.records() {
        let record = record?;
        let fields: Vec<&str> = record.iter().collect();
        let this_arity = match fields.len() {
            3 => 1,
            4 => 2,
            n => return Err(Error::Parse(format!("row with {n} fields"))),
        };
        if *arity.get_or_insert(this_arity) != this_arity {
            return Err(Error::Parse("rows mix 1-D and 2-D layouts".into()));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("'{s}': {e}")))
        };
        let idx = |s: &str| -> Result<usize> {
            let v = s
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("'{s}': {e}")))?;
            if v >= m {
                return Err(Error::IndexOverflow { index: v, size: m });
            }
            Ok(v)
        };
        let (pos, re, im) = if this_arity == 1 {
            (idx(fields[0])?, num(fields[1])?, num(fields[2])?)
        } else {
            (
                idx(fields[0])? * m + idx(fields[1])?,
                num(fields[2])?,
                num(fields[3])?,
            )
        };
        entries.push((pos, Complex64::new(re, im)));
    }
    let arity = arity.ok_or_else(|| Error::Parse("no data rows".into()))?;
    let expected = grid_len(&structure, arity);
    if entries.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            got: entries.len(),
        });
    }
    let mut values = vec![Complex64::new(0.0, 0.0); expected];
    let mut seen = vec![false; expected];
    for (pos, v) in entries {
        if std::mem::replace(&mut seen[pos], true) {
            return Err(Error::Parse(format!("duplicate grid position {pos}")));
        }
        values[pos] = v;
    }
    Ok(GridCsv {
        structure,
        arity,
        values,
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::vilenkin_index;
    use proptest::prelude::*;

    fn structure(radices: &[usize], depth: usize) -> Arc<GroupStructure> {
        Arc::new(GroupStructure::new(radices, depth).unwrap())
    }

    #[test]
    fn rejects_bad_lengths_and_values() {
        let g = structure(&[2, 3], 2);
        assert!(matches!(
            SampledFunction::new(g.clone(), 1, vec![Complex64::new(0.0, 0.0); 5]),
            Err(Error::SizeMismatch { expected: 6, got: 5 })
        ));
        let mut v = vec![Complex64::new(0.0, 0.0); 6];
        v[3].re = f64::NAN;
        assert!(matches!(
            SampledFunction::new(g.clone(), 1, v),
            Err(Error::NonFinite(3))
        ));
        assert!(SampledFunction::zeros(g, 3).is_err());
    }

    #[test]
    fn integral_of_constant_and_interval_indicator() {
        let g = structure(&[2, 3, 2], 3);
        let c = Complex64::new(1.5, -2.0);
        let f = SampledFunction::constant(g.clone(), 2, c).unwrap();
        assert!((f.haar_integrate() - c).norm() < 1e-15);
        for n in 0..=3 {
            for center in [0, 5, 11] {
                let f = SampledFunction::from_fn_1d(g.clone(), |x| {
                    Complex64::new(g.in_interval_index(center, n, x) as u8 as f64, 0.0)
                })
                .unwrap();
                let expected = 1.0 / g.order(n) as f64;
                assert!((f.haar_integrate().re - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn character_integrals() {
        let g = structure(&[2, 3], 2);
        for n in 0..g.size() {
            let f = SampledFunction::from_fn_1d(g.clone(), |x| vilenkin_index(&g, n, x)).unwrap();
            let expected = if n == 0 { 1.0 } else { 0.0 };
            assert!((f.haar_integrate() - Complex64::new(expected, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn lp_norm_rejects_nonpositive_exponent() {
        let g = structure(&[2], 2);
        let f = SampledFunction::constant(g, 1, Complex64::new(-3.0, 0.0)).unwrap();
        assert!((f.lp_norm(0.5).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(f.lp_norm(0.0), Err(Error::InvalidExponent(_))));
        assert!(matches!(f.lp_norm(-1.0), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn translation_composes() {
        let g = structure(&[2, 3, 2], 3);
        let f = SampledFunction::from_fn_1d(g.clone(), |x| Complex64::new(x as f64, 0.0)).unwrap();
        let a = 7;
        let b = 4;
        let once = f.translate(g.add_index(a, b)).unwrap();
        let twice = f.translate(a).unwrap().translate(b).unwrap();
        assert_eq!(once, twice);
        assert!(f.translate(12).is_err());
    }

    #[test]
    fn csv_roundtrip_1d_and_2d() {
        let g = structure(&[2, 3], 2);
        let f = SampledFunction::from_fn_1d(g.clone(), |x| Complex64::new(x as f64 * 0.1, -1.0 / 3.0))
            .unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("radices=2,3;depth=2\n0,0,"));
        assert_eq!(SampledFunction::read_csv(&buf[..]).unwrap(), f);

        let h = SampledFunction::from_fn_2d(g, |x, y| Complex64::new(x as f64, y as f64 + 0.25)).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(8).unwrap().starts_with("1,1,1,1.25"));
        assert_eq!(SampledFunction::read_csv(&buf[..]).unwrap(), h);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        let bad_header = "radix=2;depth=1\n0,1,0\n1,1,0\n";
        assert!(SampledFunction::read_csv(bad_header.as_bytes()).is_err());
        let short = "radices=2;depth=1\n0,1,0\n";
        assert!(matches!(
            SampledFunction::read_csv(short.as_bytes()),
            Err(Error::SizeMismatch { .. })
        ));
        let dup = "radices=2;depth=1\n0,1,0\n0,1,0\n";
        assert!(SampledFunction::read_csv(dup.as_bytes()).is_err());
        let overflow = "radices=2;depth=1\n0,1,0\n2,1,0\n";
        assert!(matches!(
            SampledFunction::read_csv(overflow.as_bytes()),
            Err(Error::IndexOverflow { .. })
        ));
        let spectrum = "radices=2;depth=1;kind=spectrum\n0,1,0\n1,1,0\n";
        assert!(SampledFunction::read_csv(spectrum.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn haar_integral_is_linear(
            a in proptest::collection::vec(-10.0f64..10.0, 12),
            b in proptest::collection::vec(-10.0f64..10.0, 12),
            c in -3.0f64..3.0,
        ) {
            let g = structure(&[2, 3, 2], 3);
            let f = SampledFunction::from_real(g.clone(), 1, &a).unwrap();
            let h = SampledFunction::from_real(g, 1, &b).unwrap();
            let lhs = f.scale(Complex64::new(c, 0.0)).add(&h).unwrap().haar_integrate();
            let rhs = f.haar_integrate() * c + h.haar_integrate();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn translation_preserves_integral(a in 0usize..36, vals in proptest::collection::vec(-5.0f64..5.0, 36)) {
            let g = structure(&[2, 3, 2, 3], 4);
            let f = SampledFunction::from_real(g, 1, &vals).unwrap();
            let t = f.translate(a).unwrap();
            prop_assert!((t.haar_integrate() - f.haar_integrate()).norm() < 1e-12);
        }
    }
}
