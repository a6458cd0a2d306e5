//! Built-in 2-D test functions and their textual specs, e.g.
//! `character:1,2`, `indicator:2,0,0`, `polynomial:0,0,1;1,3,0.5`,
//! `jump:0.3333`, `random:7`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::vilenkin_index;
use crate::error::{Error, Result};
use crate::function::SampledFunction;
use crate::group::{order_of, GroupStructure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestFunction {
    /// `psi_a(x) psi_b(y)`.
    Character { a: usize, b: usize },
    /// Indicator of `I_N(cx) x I_N(cy)`.
    Indicator { n: usize, cx: usize, cy: usize },
    /// `sum c psi_a(x) psi_b(y)` over `(a, b, c)` terms.
    Polynomial { terms: Vec<(usize, usize, f64)> },
    /// `[rho(x) < theta] [rho(y) < theta]` with `rho(x) = sum_k x_k / M_{k+1}`.
    Jump { theta: f64 },
    /// Independent uniform values in `[-1, 1)`.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    /// Name followed by its parameter list, e.g. "character a,b".
    pub signature: &'static str,
    pub example: &'static str,
    pub description: &'static str,
}

pub fn list_test_functions() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "character",
            signature: "character a,b",
            example: "character:1,2",
            description: "product character psi_a(x) psi_b(y)",
        },
        CatalogEntry {
            name: "indicator",
            signature: "indicator N,center",
            example: "indicator:2,0,0",
            description: "indicator of the square I_N(cx) x I_N(cy); center is cx,cy and defaults to 0,0",
        },
        CatalogEntry {
            name: "polynomial",
            signature: "polynomial coefficient-list",
            example: "polynomial:0,0,1;1,3,0.5",
            description: "sum of c psi_a(x) psi_b(y) over semicolon-separated a,b,c terms",
        },
        CatalogEntry {
            name: "jump",
            signature: "jump theta",
            example: "jump:0.3333",
            description: "[rho(x) < theta][rho(y) < theta] with rho the digit expansion of x in [0, 1)",
        },
        CatalogEntry {
            name: "random",
            signature: "random seed",
            example: "random:7",
            description: "seeded uniform noise on [-1, 1)",
        },
    ]
}

fn numbers<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad {what} parameter '{t}'")))
        })
        .collect()
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s.trim(), None),
        };
        let arity_error = |want: &str| Error::Parse(format!("{name} expects {want}"));
        match name {
            "character" => {
                let v: Vec<usize> = numbers(params.unwrap_or("1,1"), name)?;
                match v[..] {
                    [a, b] => Ok(TestFunction::Character { a, b }),
                    _ => Err(arity_error("a,b")),
                }
            }
            "indicator" => {
                let v: Vec<usize> = numbers(params.unwrap_or("2"), name)?;
                match v[..] {
                    [n] => Ok(TestFunction::Indicator { n, cx: 0, cy: 0 }),
                    [n, cx, cy] => Ok(TestFunction::Indicator { n, cx, cy }),
                    _ => Err(arity_error("N or N,cx,cy")),
                }
            }
            "polynomial" => {
                let terms = params
                    .unwrap_or("0,0,1;1,1,0.5")
                    .split(';')
                    .map(|term| {
                        let v: Vec<f64> = numbers(term, name)?;
                        match v[..] {
                            [a, b, c] if a >= 0.0 && b >= 0.0 && a.fract() == 0.0 && b.fract() == 0.0 => {
                                Ok((a as usize, b as usize, c))
                            }
                            _ => Err(arity_error("a,b,c terms with integer a,b")),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(TestFunction::Polynomial { terms })
            }
            "jump" => {
                let theta = match params {
                    Some(p) => p.parse().map_err(|_| arity_error("theta"))?,
                    None => 1.0 / 3.0,
                };
                Ok(TestFunction::Jump { theta })
            }
            "random" => {
                let seed = match params {
                    Some(p) => p.parse().map_err(|_| arity_error("seed"))?,
                    None => 0,
                };
                Ok(TestFunction::Random { seed })
            }
            other => Err(Error::Parse(format!("unknown test function '{other}'"))),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Character { a, b } => write!(f, "character:{a},{b}"),
            TestFunction::Indicator { n, cx, cy } => write!(f, "indicator:{n},{cx},{cy}"),
            TestFunction::Polynomial { terms } => {
                let parts: Vec<String> = terms.iter().map(|(a, b, c)| format!("{a},{b},{c}")).collect();
                write!(f, "polynomial:{}", parts.join(";"))
            }
            TestFunction::Jump { theta } => write!(f, "jump:{theta}"),
            TestFunction::Random { seed } => write!(f, "random:{seed}"),
        }
    }
}

/// `sum_k x_k / M_{k+1}`, the point of `[0, 1)` with digits `x_k`.
pub fn digit_position(g: &GroupStructure, x: usize) -> f64 {
    (0..g.depth()).map(|k| g.digit(x, k) as f64 / g.order(k + 1) as f64).sum()
}

impl TestFunction {
    /// Smallest `d` with every coefficient index below `M_d`; `None` for
    /// functions that are not polynomials of known degree.
    pub fn spectral_depth(&self, g: &GroupStructure) -> Option<usize> {
        let max_index = match self {
            TestFunction::Character { a, b } => (*a).max(*b),
            TestFunction::Polynomial { terms } => terms.iter().map(|t| t.0.max(t.1)).max().unwrap_or(0),
            _ => return None,
        };
        if max_index == 0 {
            return Some(0);
        }
        order_of(g, max_index).map(|a| a + 1)
    }

    pub fn sample(&self, g: &Arc<GroupStructure>) -> Result<SampledFunction> {
        let size = g.size();
        let check = |idx: usize, what: &str| -> Result<()> {
            if idx >= size {
                return Err(Error::Parse(format!("{what} = {idx} exceeds the group order {size}")));
            }
            Ok(())
        };
        match self {
            TestFunction::Character { a, b } => {
                check(*a, "a")?;
                check(*b, "b")?;
                SampledFunction::from_fn_2d(g.clone(), |x, y| vilenkin_index(g, *a, x) * vilenkin_index(g, *b, y))
            }
            TestFunction::Indicator { n, cx, cy } => {
                if *n > g.depth() {
                    return Err(Error::Parse(format!("indicator depth {n} exceeds {}", g.depth())));
                }
                check(*cx, "cx")?;
                check(*cy, "cy")?;
                SampledFunction::from_fn_2d(g.clone(), |x, y| {
                    let inside = g.in_interval_index(*cx, *n, x) && g.in_interval_index(*cy, *n, y);
                    Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0)
                })
            }
            TestFunction::Polynomial { terms } => {
                for (a, b, _) in terms {
                    check(*a, "a")?;
                    check(*b, "b")?;
                }
                SampledFunction::from_fn_2d(g.clone(), |x, y| {
                    terms
                        .iter()
                        .map(|&(a, b, c)| vilenkin_index(g, a, x) * vilenkin_index(g, b, y) * c)
                        .sum()
                })
            }
            TestFunction::Jump { theta } => {
                let below: Vec<bool> = (0..size).map(|x| digit_position(g, x) < *theta).collect();
                SampledFunction::from_fn_2d(g.clone(), |x, y| {
                    Complex64::new(if below[x] && below[y] { 1.0 } else { 0.0 }, 0.0)
                })
            }
            TestFunction::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let v: Vec<f64> = (0..size * size).map(|_| rng.gen_range(-1.0..1.0)).collect();
                SampledFunction::from_real(g.clone(), 2, &v)
            }
        }
    }
}
