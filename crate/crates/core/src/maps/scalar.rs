use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wave {
    Cos,
    Sin,
}

/// `coef · cos(2π ξ·y)` or `coef · sin(2π ξ·y)` with integer frequency `ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub coef: f64,
    pub freq: Vec<i32>,
    pub wave: Wave,
}

impl TrigTerm {
    pub fn new(coef: f64, freq: &[i32], wave: Wave) -> Self {
        Self { coef, freq: freq.to_vec(), wave }
    }

    fn phase(&self, y: &[f64]) -> f64 {
        TAU * self.freq.iter().zip(y).map(|(f, y)| *f as f64 * y).sum::<f64>()
    }
}

/// Closed-form real functions on the target, with exact partial derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFn {
    Const { value: f64 },
    Poly { terms: Vec<Monomial> },
    Trig { terms: Vec<TrigTerm> },
    /// `(1 − |y − c|²/r²)⁴` inside the ball; on a torus target the displacement
    /// is taken to the nearest lattice translate.
    Bump { center: Vec<f64>, radius: f64, torus: bool },
    /// `∂_axis` of a bump.
    BumpPartial { center: Vec<f64>, radius: f64, torus: bool, axis: usize },
    Sum { terms: Vec<ScalarFn> },
    Product { factors: Vec<ScalarFn> },
}

pub(crate) fn wrapped_delta(y: f64, c: f64, torus: bool) -> f64 {
    let d = y - c;
    if torus {
        d - d.round()
    } else {
        d
    }
}

impl ScalarFn {
    pub fn constant(value: f64) -> Self {
        ScalarFn::Const { value }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn trig(terms: Vec<TrigTerm>) -> Self {
        ScalarFn::Trig { terms }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            ScalarFn::Const { value } => *value,
            ScalarFn::Poly { terms } => terms
                .iter()
                .map(|t| t.coef * t.powers.iter().zip(y).map(|(p, y)| y.powi(*p as i32)).product::<f64>())
                .sum(),
            ScalarFn::Trig { terms } => terms
                .iter()
                .map(|t| {
                    let ph = t.phase(y);
                    t.coef * if t.wave == Wave::Cos { ph.cos() } else { ph.sin() }
                })
                .sum(),
            ScalarFn::Bump { center, radius, torus } => {
                let t = bump_t(y, center, *radius, *torus);
                if t >= 1.0 {
                    0.0
                } else {
                    (1.0 - t).powi(4)
                }
            }
            ScalarFn::BumpPartial { center, radius, torus, axis } => {
                let t = bump_t(y, center, *radius, *torus);
                if t >= 1.0 {
                    0.0
                } else {
                    let d = wrapped_delta(y[*axis], center[*axis], *torus);
                    -8.0 * (1.0 - t).powi(3) * d / (radius * radius)
                }
            }
            ScalarFn::Sum { terms } => terms.iter().map(|t| t.eval(y)).sum(),
            ScalarFn::Product { factors } => factors.iter().map(|f| f.eval(y)).product(),
        }
    }

    /// Exact `∂f/∂y_axis`. Second derivatives of bumps are not represented.
    pub fn partial(&self, axis: usize) -> ScalarFn {
        match self {
            ScalarFn::Const { .. } => ScalarFn::zero(),
            ScalarFn::Poly { terms } => ScalarFn::Poly {
                terms: terms
                    .iter()
                    .filter(|t| t.powers.get(axis).copied().unwrap_or(0) > 0)
                    .map(|t| {
                        let mut powers = t.powers.clone();
                        let p = powers[axis];
                        powers[axis] -= 1;
                        Monomial { coef: t.coef * p as f64, powers }
                    })
                    .collect(),
            },
            ScalarFn::Trig { terms } => ScalarFn::Trig {
                terms: terms
                    .iter()
                    .filter(|t| t.freq.get(axis).copied().unwrap_or(0) != 0)
                    .map(|t| {
                        let w = TAU * t.freq[axis] as f64;
                        match t.wave {
                            Wave::Cos => TrigTerm { coef: -w * t.coef, freq: t.freq.clone(), wave: Wave::Sin },
                            Wave::Sin => TrigTerm { coef: w * t.coef, freq: t.freq.clone(), wave: Wave::Cos },
                        }
                    })
                    .collect(),
            },
            ScalarFn::Bump { center, radius, torus } => {
                ScalarFn::BumpPartial { center: center.clone(), radius: *radius, torus: *torus, axis }
            }
            ScalarFn::BumpPartial { .. } => {
                panic!("second derivatives of bump coefficients are not supported")
            }
            ScalarFn::Sum { terms } => ScalarFn::Sum { terms: terms.iter().map(|t| t.partial(axis)).collect() },
            ScalarFn::Product { factors } => ScalarFn::Sum {
                terms: (0..factors.len())
                    .map(|i| ScalarFn::Product {
                        factors: factors
                            .iter()
                            .enumerate()
                            .map(|(j, f)| if i == j { f.partial(axis) } else { f.clone() })
                            .collect(),
                    })
                    .collect(),
            },
        }
    }

    /// The value if the function is a constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarFn::Const { value } => Some(*value),
            ScalarFn::Poly { terms } if terms.iter().all(|t| t.powers.iter().all(|p| *p == 0)) => {
                Some(terms.iter().map(|t| t.coef).sum())
            }
            ScalarFn::Trig { terms } if terms.iter().all(|t| t.freq.iter().all(|f| *f == 0)) => {
                Some(terms.iter().filter(|t| t.wave == Wave::Cos).map(|t| t.coef).sum())
            }
            ScalarFn::Sum { terms } => terms.iter().map(|t| t.as_constant()).sum(),
            ScalarFn::Product { factors } => factors.iter().map(|f| f.as_constant()).product(),
            _ => None,
        }
    }

    /// Whether the function is `ℤ^m`-periodic by construction.
    pub fn is_periodic(&self) -> bool {
        match self {
            ScalarFn::Const { .. } | ScalarFn::Trig { .. } => true,
            ScalarFn::Poly { .. } => self.as_constant().is_some(),
            ScalarFn::Bump { torus, radius, .. } | ScalarFn::BumpPartial { torus, radius, .. } => {
                *torus && *radius <= 0.5
            }
            ScalarFn::Sum { terms } => terms.iter().all(|t| t.is_periodic()),
            ScalarFn::Product { factors } => factors.iter().all(|f| f.is_periodic()),
        }
    }

    /// Flattens into trig terms when the function is a trigonometric
    /// polynomial (constants become zero-frequency cosines).
    pub fn trig_terms(&self, m: usize) -> Option<Vec<TrigTerm>> {
        match self {
            ScalarFn::Const { value } => Some(vec![TrigTerm::new(*value, &vec![0; m], Wave::Cos)]),
            ScalarFn::Trig { terms } => Some(terms.clone()),
            ScalarFn::Sum { terms } => {
                let mut out = Vec::new();
                for t in terms {
                    out.extend(t.trig_terms(m)?);
                }
                Some(out)
            }
            ScalarFn::Poly { .. } => self.as_constant().map(|c| vec![TrigTerm::new(c, &vec![0; m], Wave::Cos)]),
            ScalarFn::Product { factors } => {
                let mut acc = vec![TrigTerm::new(1.0, &vec![0; m], Wave::Cos)];
                for f in factors {
                    let rhs = f.trig_terms(m)?;
                    acc = acc.iter().flat_map(|a| rhs.iter().flat_map(move |b| trig_product(a, b))).collect();
                }
                Some(acc)
            }
            _ => None,
        }
    }
}

/// Product-to-sum for two trig terms.
fn trig_product(a: &TrigTerm, b: &TrigTerm) -> [TrigTerm; 2] {
    let plus: Vec<i32> = a.freq.iter().zip(&b.freq).map(|(x, y)| x + y).collect();
    let minus: Vec<i32> = a.freq.iter().zip(&b.freq).map(|(x, y)| x - y).collect();
    let c = 0.5 * a.coef * b.coef;
    let (wave, sp, sm) = match (a.wave, b.wave) {
        (Wave::Cos, Wave::Cos) => (Wave::Cos, c, c),
        (Wave::Sin, Wave::Sin) => (Wave::Cos, -c, c),
        (Wave::Sin, Wave::Cos) => (Wave::Sin, c, c),
        (Wave::Cos, Wave::Sin) => (Wave::Sin, c, -c),
    };
    [TrigTerm { coef: sp, freq: plus, wave }, TrigTerm { coef: sm, freq: minus, wave }]
}

fn bump_t(y: &[f64], center: &[f64], radius: f64, torus: bool) -> f64 {
    y.iter().zip(center).map(|(y, c)| wrapped_delta(*y, *c, torus).powi(2)).sum::<f64>() / (radius * radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: &ScalarFn, y: &[f64], axis: usize) -> f64 {
        let e = 1e-6;
        let mut p = y.to_vec();
        let mut m = y.to_vec();
        p[axis] += e;
        m[axis] -= e;
        (f.eval(&p) - f.eval(&m)) / (2.0 * e)
    }

    #[test]
    fn partials_match_differences() {
        let fns = vec![
            ScalarFn::Poly { terms: vec![Monomial { coef: 2.0, powers: vec![2, 1] }] },
            ScalarFn::trig(vec![
                TrigTerm::new(0.7, &[1, 2], Wave::Sin),
                TrigTerm::new(-0.3, &[0, 1], Wave::Cos),
            ]),
            ScalarFn::Bump { center: vec![0.9, 0.1], radius: 0.3, torus: true },
            ScalarFn::Product {
                factors: vec![
                    ScalarFn::trig(vec![TrigTerm::new(1.0, &[1, 0], Wave::Cos)]),
                    ScalarFn::Poly { terms: vec![Monomial { coef: 1.0, powers: vec![0, 3] }] },
                ],
            },
        ];
        for f in &fns {
            for y in [[0.05, 0.07], [0.95, 0.2], [0.3, 0.6]] {
                for axis in 0..2 {
                    let d = f.partial(axis).eval(&y);
                    assert!((d - fd(f, &y, axis)).abs() < 1e-6, "{f:?} at {y:?}");
                }
            }
        }
    }

    #[test]
    fn torus_bump_wraps() {
        let b = ScalarFn::Bump { center: vec![0.95, 0.5], radius: 0.2, torus: true };
        assert!((b.eval(&[0.05, 0.5]) - b.eval(&[0.85, 0.5])).abs() < 1e-12);
        assert!(b.eval(&[0.05, 0.5]) > 0.0);
        assert_eq!(ScalarFn::constant(2.0).as_constant(), Some(2.0));
    }

    #[test]
    fn products_flatten_to_trig_terms() {
        let a = ScalarFn::trig(vec![TrigTerm::new(0.7, &[1, 2], Wave::Sin), TrigTerm::new(0.2, &[0, 1], Wave::Cos)]);
        let b = ScalarFn::trig(vec![TrigTerm::new(-1.3, &[1, 0], Wave::Cos), TrigTerm::new(0.4, &[2, -1], Wave::Sin)]);
        let f = ScalarFn::Sum {
            terms: vec![ScalarFn::Product { factors: vec![ScalarFn::constant(-2.0), a.clone(), b] }, a.partial(1)],
        };
        let flat = ScalarFn::trig(f.trig_terms(2).unwrap());
        for y in [[0.1, 0.3], [0.77, 0.42], [0.5, 0.9]] {
            assert!((flat.eval(&y) - f.eval(&y)).abs() < 1e-12);
        }
        assert!(ScalarFn::Bump { center: vec![0.5, 0.5], radius: 0.2, torus: true }.trig_terms(2).is_none());
    }
}
