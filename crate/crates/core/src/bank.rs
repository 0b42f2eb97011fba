//! Seeded banks of smooth test functions for the inequality sweeps and the
//! Hessian bounds.
//!
//! Every bank draws its parameters from ChaCha8 (`rand_chacha::ChaCha8Rng`)
//! seeded with `seed_from_u64(seed)`, so a `(bank, seed, count)` triple
//! always produces the same functions. Families cycle with the case index:
//! case `k` uses family `k % families` and draws its parameters in order.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

/// Default number of cases per bank.
pub const BANK_SIZE: usize = 200;

/// The generator behind every bank.
pub fn bank_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A closed-form scalar function of one variable.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `slope x + offset`
    Affine {
        slope: f64,
        offset: f64,
    },
    /// `a x^2 + b x + c`
    Quadratic {
        a: f64,
        b: f64,
        c: f64,
    },
    /// `amplitude sin(frequency x + phase)`
    Sine {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
    /// `amplitude exp(-(x - center)^2 / (2 width^2))`
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `amplitude exp(1 - 1 / (1 - s^2))` for `s = (x - center) / width`,
    /// zero for `|s| >= 1`: smooth with compact support, peak `amplitude`.
    Bump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `(1 + (x / scale)^2)^(-exponent)`
    Algebraic {
        scale: f64,
        exponent: f64,
    },
    Sum(Vec<TestFunction>),
    Product(Vec<TestFunction>),
    Exp(Box<TestFunction>),
}

impl TestFunction {
    pub fn eval<T: Real>(&self, x: T) -> T {
        use TestFunction::*;
        let l = T::lit;
        match self {
            Constant(c) => l(*c),
            Affine { slope, offset } => l(*slope) * x + l(*offset),
            Quadratic { a, b, c } => (l(*a) * x + l(*b)) * x + l(*c),
            Sine {
                amplitude,
                frequency,
                phase,
            } => l(*amplitude) * (l(*frequency) * x + l(*phase)).sin(),
            Gaussian {
                amplitude,
                center,
                width,
            } => {
                let s = (x - l(*center)) / l(*width);
                l(*amplitude) * (-s * s * l(0.5)).exp()
            }
            Bump {
                amplitude,
                center,
                width,
            } => {
                let s = (x - l(*center)) / l(*width);
                let q = T::one() - s * s;
                if q <= T::zero() {
                    T::zero()
                } else {
                    l(*amplitude) * (T::one() - T::one() / q).exp()
                }
            }
            Algebraic { scale, exponent } => {
                let s = x / l(*scale);
                (T::one() + s * s).powf(-l(*exponent))
            }
            Sum(parts) => parts.iter().fold(T::zero(), |acc, f| acc + f.eval(x)),
            Product(parts) => parts.iter().fold(T::one(), |acc, f| acc * f.eval(x)),
            Exp(inner) => inner.eval(x).exp(),
        }
    }

    /// Samples on `nodes`.
    pub fn sample<T: Real>(&self, nodes: &[T]) -> Vec<T> {
        nodes.iter().map(|&x| self.eval(x)).collect()
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TestFunction::*;
        match self {
            Constant(c) => write!(f, "{c}"),
            Affine { slope, offset } => write!(f, "({slope}*x+{offset})"),
            Quadratic { a, b, c } => write!(f, "({a}*x^2+{b}*x+{c})"),
            Sine {
                amplitude,
                frequency,
                phase,
            } => write!(f, "{amplitude}*sin({frequency}*x+{phase})"),
            Gaussian {
                amplitude,
                center,
                width,
            } => write!(f, "{amplitude}*gauss({center},{width})"),
            Bump {
                amplitude,
                center,
                width,
            } => write!(f, "{amplitude}*bump({center},{width})"),
            Algebraic { scale, exponent } => write!(f, "(1+(x/{scale})^2)^-{exponent}"),
            Sum(parts) => join(f, parts, "+"),
            Product(parts) => join(f, parts, "*"),
            Exp(inner) => write!(f, "exp({inner})"),
        }
    }
}

fn join(f: &mut fmt::Formatter<'_>, parts: &[TestFunction], sep: &str) -> fmt::Result {
    write!(f, "(")?;
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            write!(f, "{sep}")?;
        }
        write!(f, "{p}")?;
    }
    write!(f, ")")
}

/// A frequency drawn from a fixed ladder, so the banks cover several scales.
fn frequency(rng: &mut ChaCha8Rng) -> f64 {
    const LADDER: [f64; 5] = [0.5, 1.0, 2.0, 3.0, 5.0];
    LADDER[rng.gen_range(0..LADDER.len())]
}

/// Potentials `Phi` on the line: affine, quadratic, sine, cosine and
/// compactly supported bumps inside `[-half_width, half_width]`.
pub fn line_potentials(seed: u64, count: usize, half_width: f64) -> Vec<TestFunction> {
    let mut rng = bank_rng(seed);
    (0..count)
        .map(|k| match k % 5 {
            0 => TestFunction::Affine {
                slope: rng.gen_range(-2.0..2.0),
                offset: rng.gen_range(-1.0..1.0),
            },
            1 => TestFunction::Quadratic {
                a: rng.gen_range(-1.0..1.0),
                b: rng.gen_range(-1.0..1.0),
                c: 0.0,
            },
            2 => TestFunction::Sine {
                amplitude: rng.gen_range(0.1..1.0),
                frequency: frequency(&mut rng),
                phase: rng.gen_range(0.0..2.0 * PI),
            },
            3 => TestFunction::Sine {
                amplitude: rng.gen_range(0.1..1.0),
                frequency: frequency(&mut rng),
                phase: PI / 2.0,
            },
            _ => {
                let width = rng.gen_range(0.5..0.5 * half_width);
                TestFunction::Bump {
                    amplitude: rng.gen_range(-2.0..2.0),
                    center: rng.gen_range(-(half_width - width)..(half_width - width)),
                    width,
                }
            }
        })
        .collect()
}

/// Smooth radial potentials `Phi(r)` (even in `r`, so smooth at the
/// origin) on a ball of radius `radius`.
pub fn radial_potentials(seed: u64, count: usize, radius: f64) -> Vec<TestFunction> {
    let mut rng = bank_rng(seed);
    (0..count)
        .map(|k| match k % 4 {
            0 => TestFunction::Quadratic {
                a: rng.gen_range(-1.0..1.0),
                b: 0.0,
                c: rng.gen_range(-1.0..1.0),
            },
            1 => TestFunction::Sine {
                amplitude: rng.gen_range(0.1..1.0),
                frequency: frequency(&mut rng),
                phase: PI / 2.0,
            },
            2 => TestFunction::Gaussian {
                amplitude: rng.gen_range(-2.0..2.0),
                center: 0.0,
                width: rng.gen_range(0.3..0.3 * radius),
            },
            _ => {
                let width = rng.gen_range(0.3..0.25 * radius);
                TestFunction::Bump {
                    amplitude: rng.gen_range(-2.0..2.0),
                    center: rng.gen_range(width..radius - width),
                    width,
                }
            }
        })
        .collect()
}

/// Positive functions on the line with moderate growth, for the Gaussian
/// log-Sobolev sweep. Pure exponentials (the equality cases) are left out.
pub fn lsi_functions(seed: u64, count: usize) -> Vec<TestFunction> {
    let mut rng = bank_rng(seed);
    (0..count)
        .map(|k| match k % 5 {
            0 => TestFunction::Sum(vec![
                TestFunction::Constant(1.0),
                TestFunction::Sine {
                    amplitude: rng.gen_range(0.05..0.9),
                    frequency: frequency(&mut rng),
                    phase: rng.gen_range(0.0..2.0 * PI),
                },
            ]),
            1 => TestFunction::Sum(vec![
                TestFunction::Constant(rng.gen_range(0.05..1.0)),
                TestFunction::Gaussian {
                    amplitude: rng.gen_range(0.1..5.0),
                    center: rng.gen_range(-3.0..3.0),
                    width: rng.gen_range(0.3..2.0),
                },
            ]),
            2 => {
                let c = rng.gen_range(-2.0..2.0);
                let a = rng.gen_range(0.05..1.0);
                // a (x - c)^2 + d with d > 0
                TestFunction::Quadratic {
                    a,
                    b: -2.0 * a * c,
                    c: a * c * c + rng.gen_range(0.1..2.0),
                }
            }
            3 => TestFunction::Exp(Box::new(TestFunction::Sine {
                amplitude: rng.gen_range(0.1..1.5),
                frequency: frequency(&mut rng),
                phase: rng.gen_range(0.0..2.0 * PI),
            })),
            _ => TestFunction::Sum(vec![
                TestFunction::Constant(rng.gen_range(0.1..1.0)),
                TestFunction::Bump {
                    amplitude: rng.gen_range(0.1..3.0),
                    center: rng.gen_range(-3.0..3.0),
                    width: rng.gen_range(0.3..3.0),
                },
            ]),
        })
        .collect()
}

/// Smooth, rapidly decaying radial functions for the Sobolev sweep; each
/// is below `1e-8` of its maximum at radius 200.
pub fn sobolev_functions(seed: u64, count: usize) -> Vec<TestFunction> {
    let mut rng = bank_rng(seed);
    (0..count)
        .map(|k| match k % 4 {
            0 => TestFunction::Gaussian {
                amplitude: 1.0,
                center: 0.0,
                width: rng.gen_range(0.3..5.0),
            },
            1 => TestFunction::Algebraic {
                scale: rng.gen_range(0.3..2.0),
                exponent: rng.gen_range(2.5..4.0),
            },
            2 => TestFunction::Sum(vec![
                TestFunction::Gaussian {
                    amplitude: 1.0,
                    center: 0.0,
                    width: rng.gen_range(0.3..2.0),
                },
                TestFunction::Gaussian {
                    amplitude: rng.gen_range(0.05..2.0),
                    center: 0.0,
                    width: rng.gen_range(2.0..10.0),
                },
            ]),
            _ => TestFunction::Product(vec![
                TestFunction::Gaussian {
                    amplitude: 1.0,
                    center: 0.0,
                    width: rng.gen_range(1.0..5.0),
                },
                TestFunction::Sum(vec![
                    TestFunction::Constant(1.0),
                    TestFunction::Sine {
                        amplitude: rng.gen_range(0.1..0.9),
                        frequency: frequency(&mut rng),
                        phase: PI / 2.0,
                    },
                ]),
            ]),
        })
        .collect()
}

/// A multiplicative perturbation `1 + epsilon * shape` with
/// `|shape| <= 1`, so the perturbed function stays positive for
/// `epsilon < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub epsilon: f64,
    pub shape: TestFunction,
}

impl Perturbation {
    pub fn factor<T: Real>(&self, x: T) -> T {
        T::one() + T::lit(self.epsilon) * self.shape.eval(x)
    }
}

/// Perturbations on `[a, b]`: oscillations, broad and strongly localized
/// bumps and Gaussians. Amplitudes stay within `[0.01, max_epsilon]`.
pub fn perturbations(seed: u64, count: usize, a: f64, b: f64, max_epsilon: f64) -> Vec<Perturbation> {
    let mut rng = bank_rng(seed);
    let len = b - a;
    (0..count)
        .map(|k| {
            let epsilon = rng.gen_range(0.01..max_epsilon);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let shape = match k % 4 {
                0 => TestFunction::Sine {
                    amplitude: 1.0,
                    frequency: rng.gen_range(1.0..20.0) / len,
                    phase: rng.gen_range(0.0..2.0 * PI),
                },
                1 => {
                    let width = rng.gen_range(0.1..0.4) * len;
                    TestFunction::Bump {
                        amplitude: sign,
                        center: rng.gen_range(a + width..b - width),
                        width,
                    }
                }
                2 => {
                    // strongly localized
                    let width = rng.gen_range(0.01..0.05) * len;
                    TestFunction::Bump {
                        amplitude: sign,
                        center: rng.gen_range(a + width..b - width),
                        width,
                    }
                }
                _ => TestFunction::Gaussian {
                    amplitude: sign,
                    center: rng.gen_range(a..b),
                    width: rng.gen_range(0.02..0.3) * len,
                },
            };
            Perturbation { epsilon, shape }
        })
        .collect()
}

/// Gaussian mixtures on the line, as `(weight, mean, sd)` triples.
pub fn gaussian_mixtures(seed: u64, count: usize) -> Vec<Vec<(f64, f64, f64)>> {
    let mut rng = bank_rng(seed);
    (0..count)
        .map(|_| {
            let parts = rng.gen_range(1..=3);
            (0..parts)
                .map(|_| {
                    (
                        rng.gen_range(0.2..1.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(0.4..1.5),
                    )
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banks_are_reproducible_and_seed_dependent() {
        assert_eq!(lsi_functions(7, 20), lsi_functions(7, 20));
        assert_ne!(lsi_functions(7, 20), lsi_functions(8, 20));
        assert_eq!(perturbations(3, 10, 0.0, 1.0, 0.5), perturbations(3, 10, 0.0, 1.0, 0.5));
    }

    #[test]
    fn bump_is_compactly_supported() {
        let b = TestFunction::Bump {
            amplitude: 2.0,
            center: 1.0,
            width: 0.5,
        };
        assert_eq!(b.eval(1.0f64), 2.0);
        assert_eq!(b.eval(1.5f64), 0.0);
        assert_eq!(b.eval(0.4f64), 0.0);
        assert!(b.eval(1.2f64) > 0.0);
    }

    #[test]
    fn lsi_functions_are_positive() {
        let xs: Vec<f64> = (0..=400).map(|i| -10.0 + 0.05 * i as f64).collect();
        for f in lsi_functions(11, BANK_SIZE) {
            assert!(f.sample(&xs).iter().all(|&v| v > 0.0), "{f}");
        }
    }

    #[test]
    fn sobolev_functions_decay_at_truncation() {
        for f in sobolev_functions(5, 100) {
            let peak = f.eval(0.0f64).abs();
            assert!(f.eval(200.0f64).abs() <= 1e-8 * peak, "{f}");
        }
    }

    #[test]
    fn perturbations_keep_positivity() {
        let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        for p in perturbations(1, BANK_SIZE, 0.0, 1.0, 0.9) {
            assert!(xs.iter().all(|&x| p.factor(x) > 0.0));
        }
    }

    #[test]
    fn display_names_the_family() {
        let f = TestFunction::Exp(Box::new(TestFunction::Affine {
            slope: 0.7,
            offset: 0.0,
        }));
        assert_eq!(f.to_string(), "exp((0.7*x+0))");
    }
}
