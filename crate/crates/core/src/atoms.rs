//! Seeded p-atoms, their validity checks, region integrals of the maximal
//! operator `V` off the support square, weak-type ratios and Hardy
//! quasi-norms.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::function::{lp_norm_of, SampledFunction};
use crate::group::GroupStructure;
use crate::lebesgue::{maximal_function_grid, VField, VOperator};

/// Tolerance for the atom conditions.
pub const ATOM_TOL: f64 = 1e-10;

/// Relative tolerance (against `||a||_inf`) for vanishing checks on values
/// that pass through the spectral convolution.
pub const VANISH_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Atom {
    pub p: f64,
    /// Support depth `N`.
    pub n: usize,
    /// Square centers `(z', z'')`.
    pub center: (usize, usize),
    pub seed: u64,
    pub values: SampledFunction,
}

impl Atom {
    pub fn structure(&self) -> &GroupStructure {
        self.values.structure()
    }

    pub fn in_support(&self, x: usize, y: usize) -> bool {
        let g = self.structure();
        g.in_interval_index(self.center.0, self.n, x) && g.in_interval_index(self.center.1, self.n, y)
    }

    /// `M_N^{2/p}`, the reciprocal of `mu(I x J)^{1/p}`.
    pub fn sup_bound(&self) -> f64 {
        sup_bound(self.structure(), self.n, self.p)
    }
}

fn sup_bound(g: &GroupStructure, n: usize, p: f64) -> f64 {
    (g.order(n) as f64).powf(2.0 / p)
}

fn check_atom_exponent(p: f64) -> Result<()> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// Random real atom on `I_N(z') x I_N(z'')`: uniform values, mean removed,
/// then scaled so the sup norm equals `M_N^{2/p}`.
pub fn make_atom(g: &Arc<GroupStructure>, p: f64, n: usize, z1: usize, z2: usize, seed: u64) -> Result<Atom> {
    check_atom_exponent(p)?;
    if n > g.depth() {
        return Err(out_of_range("N", n, format!("[0, {}]", g.depth())));
    }
    for z in [z1, z2] {
        if z >= g.size() {
            return Err(Error::IndexOverflow { index: z, size: g.size() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<usize> = g.interval(z1, n).collect();
    let ys: Vec<usize> = g.interval(z2, n).collect();
    let mut raw: Vec<f64> = (0..xs.len() * ys.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    raw.iter_mut().for_each(|v| *v -= mean);
    let peak = raw.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak == 0.0 {
        // a one-point support (N = L) only carries the zero function
        return Err(Error::InvalidAtom("support too small for a nonzero mean-zero atom".into()));
    }
    let scale = sup_bound(g, n, p) / peak;
    let m = g.size();
    let mut values = vec![Complex64::new(0.0, 0.0); m * m];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            values[x * m + y] = Complex64::new(raw[i * ys.len() + j] * scale, 0.0);
        }
    }
    Ok(Atom {
        p,
        n,
        center: (z1, z2),
        seed,
        values: SampledFunction::new(g.clone(), 2, values)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomCheck {
    pub valid: bool,
    /// Names of the failed conditions: "mean", "sup-bound", "support".
    pub diagnostics: Vec<String>,
}

pub fn verify_atom(a: &Atom) -> AtomCheck {
    let g = a.structure();
    let m = g.size();
    let bound = a.sup_bound();
    let mut diagnostics = Vec::new();
    let mean = a.values.haar_integrate().norm();
    // the mean is compared on the scale of the values it averages
    if mean > ATOM_TOL * bound.max(1.0) {
        diagnostics.push("mean".to_string());
    }
    if a.values.sup_norm() > bound * (1.0 + ATOM_TOL) {
        diagnostics.push("sup-bound".to_string());
    }
    let leaks = (0..m * m).any(|p| !a.in_support(p / m, p % m) && a.values.values()[p] != Complex64::new(0.0, 0.0));
    if leaks {
        diagnostics.push("support".to_string());
    }
    AtomCheck { valid: diagnostics.is_empty(), diagnostics }
}

/// Parts of the complement of the support square `I x J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// `x` off `I`, `y` off `J`.
    ComplementComplement,
    /// `x` off `I`, `y` in `J`.
    ComplementSupport,
    /// `x` in `I`, `y` off `J`.
    SupportComplement,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::ComplementComplement, Region::ComplementSupport, Region::SupportComplement];

    fn of(a: &Atom, x: usize, y: usize) -> Option<Region> {
        let g = a.structure();
        let in_x = g.in_interval_index(a.center.0, a.n, x);
        let in_y = g.in_interval_index(a.center.1, a.n, y);
        match (in_x, in_y) {
            (false, false) => Some(Region::ComplementComplement),
            (false, true) => Some(Region::ComplementSupport),
            (true, false) => Some(Region::SupportComplement),
            (true, true) => None,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionIntegrals {
    pub cc: f64,
    pub cs: f64,
    pub sc: f64,
}

impl RegionIntegrals {
    fn from_array(v: [f64; 3]) -> Self {
        RegionIntegrals { cc: v[0], cs: v[1], sc: v[2] }
    }

    pub fn get(&self, r: Region) -> f64 {
        [self.cc, self.cs, self.sc][r.slot()]
    }

    pub fn total(&self) -> f64 {
        self.cc + self.cs + self.sc
    }

    pub fn max(&self) -> f64 {
        self.cc.max(self.cs).max(self.sc)
    }

    fn max_with(&self, other: &RegionIntegrals) -> Self {
        RegionIntegrals {
            cc: self.cc.max(other.cc),
            cs: self.cs.max(other.cs),
            sc: self.sc.max(other.sc),
        }
    }
}

/// Largest `|V_n^(i) a|` seen in each region, per component (index `i - 1`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComponentMaxima {
    pub cc: [f64; 4],
    pub cs: [f64; 4],
    pub sc: [f64; 4],
}

impl ComponentMaxima {
    pub fn get(&self, r: Region) -> [f64; 4] {
        [self.cc, self.cs, self.sc][r.slot()]
    }
}

/// Vanishing diagnostics for one atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vanishing {
    /// `max |V_n^(i) a|` over the grid, all components and `n < N`.
    pub below_support_depth: f64,
    /// `sup_{1 <= n <= L} |V_n^(i) a|` maximized over each region.
    pub by_region: ComponentMaxima,
    /// Threshold applied to these maxima: `VANISH_TOL * ||a||_inf`.
    pub tolerance: f64,
}

impl Vanishing {
    pub fn vanishes(&self, value: f64) -> bool {
        value <= self.tolerance
    }

    /// `V_n a = 0` for every `n < N`.
    pub fn below_depth_holds(&self) -> bool {
        self.vanishes(self.below_support_depth)
    }

    /// Components `i` (1-based) vanish on region `r`.
    pub fn components_vanish(&self, r: Region, components: &[usize]) -> bool {
        let m = self.by_region.get(r);
        components.iter().all(|&i| self.vanishes(m[i - 1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRow {
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub center: (usize, usize),
    pub region_integrals: RegionIntegrals,
    pub weak_ratio: f64,
    pub vanishing: Vanishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiLocalityReport {
    pub p: f64,
    pub radices: Vec<usize>,
    pub depth: usize,
    pub atoms: Vec<AtomRow>,
    pub max_by_region: RegionIntegrals,
}

impl QuasiLocalityReport {
    pub fn new(p: f64, g: &GroupStructure, atoms: Vec<AtomRow>) -> Self {
        let max_by_region = atoms
            .iter()
            .fold(RegionIntegrals::default(), |acc, r| acc.max_with(&r.region_integrals));
        QuasiLocalityReport {
            p,
            radices: g.radices().to_vec(),
            depth: g.depth(),
            atoms,
            max_by_region,
        }
    }
}

fn check_operator(op: &VOperator, f: &SampledFunction) -> Result<()> {
    if f.structure() != &**op.structure() {
        return Err(Error::StructureMismatch(format!(
            "{:?} vs {:?}",
            f.structure().radices(),
            op.structure().radices()
        )));
    }
    Ok(())
}

/// `int_region (V a)^p` over the three parts of the complement, the
/// vanishing diagnostics and the exact weak-type ratio of `V a`.
pub fn quasilocality_integral(op: &VOperator, a: &Atom, p: f64) -> Result<AtomRow> {
    check_operator(op, &a.values)?;
    let check = verify_atom(a);
    if !check.valid {
        return Err(Error::InvalidAtom(check.diagnostics.join(", ")));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let g = a.structure();
    let m = g.size();
    let field = op.apply(&a.values)?;
    let mut sums = [0.0; 3];
    let mut by_region = ComponentMaxima::default();
    for pos in 0..m * m {
        let (x, y) = (pos / m, pos % m);
        let Some(region) = Region::of(a, x, y) else { continue };
        sums[region.slot()] += field.sup[pos].powf(p);
        let slot = match region {
            Region::ComplementComplement => &mut by_region.cc,
            Region::ComplementSupport => &mut by_region.cs,
            Region::SupportComplement => &mut by_region.sc,
        };
        for (i, s) in slot.iter_mut().enumerate() {
            *s = s.max(field.sup_components[i][pos]);
        }
    }
    let below_support_depth = below_depth_max(&field, a.n);
    let measure = (m * m) as f64;
    Ok(AtomRow {
        seed: a.seed,
        n: a.n,
        center: a.center,
        region_integrals: RegionIntegrals::from_array(sums.map(|s| s / measure)),
        weak_ratio: weak_ratio_of(&field.sup, &a.values)?,
        vanishing: Vanishing {
            below_support_depth,
            by_region,
            tolerance: VANISH_TOL * a.values.sup_norm(),
        },
    })
}

fn below_depth_max(field: &VField, n: usize) -> f64 {
    field.components[..n.min(field.components.len())]
        .iter()
        .flat_map(|c| c.iter())
        .flat_map(|v| v.iter())
        .fold(0.0, |acc, v| acc.max(v.norm()))
}

/// Rows for a seeded sample of atoms; seeds `seed0..seed0 + count`.
pub fn quasilocality_sample(
    op: &VOperator,
    p: f64,
    n: usize,
    center: (usize, usize),
    seed0: u64,
    count: usize,
) -> Result<QuasiLocalityReport> {
    use rayon::prelude::*;
    let g = op.structure();
    let rows = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let atom = make_atom(g, p, n, center.0, center.1, seed0 + i)?;
            quasilocality_integral(op, &atom, p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuasiLocalityReport::new(p, g, rows))
}

fn l1_norm(f: &SampledFunction) -> Result<f64> {
    let l1 = f.values().iter().map(|v| v.norm()).sum::<f64>() / f.values().len() as f64;
    if l1 == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(l1)
}

/// `sup_lambda lambda mu{Vf > lambda} / ||f||_1` by sweeping every level of
/// `Vf`: sorted descending, the k-th value `v_k` gives `v_k * k / M^2`.
fn weak_ratio_of(sup: &[f64], f: &SampledFunction) -> Result<f64> {
    let l1 = l1_norm(f)?;
    let mut sorted = sup.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let measure = sorted.len() as f64;
    let best = sorted
        .iter()
        .enumerate()
        .map(|(k, v)| v * (k + 1) as f64 / measure)
        .fold(0.0, f64::max);
    Ok(best / l1)
}

/// Exact weak-type ratio of `V` at `f`.
pub fn weak_type_ratio(op: &VOperator, f: &SampledFunction) -> Result<f64> {
    check_operator(op, f)?;
    let l1 = l1_norm(f);
    if l1.is_err() {
        return Ok(0.0);
    }
    weak_ratio_of(&op.apply(f)?.sup, f)
}

/// `sup_{lambda in grid} lambda mu{Vf > lambda} / ||f||_1`; `f = 0` gives 0.
pub fn weak_type_check(op: &VOperator, f: &SampledFunction, lambdas: &[f64]) -> Result<f64> {
    check_operator(op, f)?;
    if let Some(&bad) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::Parse(format!("lambda grid must be positive, got {bad}")));
    }
    let Ok(l1) = l1_norm(f) else { return Ok(0.0) };
    let sup = op.apply(f)?.sup;
    let measure = sup.len() as f64;
    let best = lambdas
        .iter()
        .map(|&l| l * sup.iter().filter(|&&v| v > l).count() as f64 / measure)
        .fold(0.0, f64::max);
    Ok(best / l1)
}

/// `||f||_{H_p} = ||f*||_p` with `f*` the martingale maximal function.
pub fn hardy_quasinorm(f: &SampledFunction, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let star = maximal_function_grid(f)?;
    lp_norm_of(star.iter().copied(), star.len(), p)
}
