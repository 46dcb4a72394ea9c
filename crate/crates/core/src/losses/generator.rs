use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Built-in f-divergence generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BuiltinGenerator {
    /// `F(r) = 1 − √r`
    Hellinger2,
    /// `F(r) = r ln r`
    KL,
    /// `F(r) = (r − 1)²`
    ChiSquared,
}

/// User-supplied convex `F` with `F(1) = 0` and its first two derivatives.
#[derive(Clone)]
pub struct CustomGenerator {
    pub name: String,
    pub f: ScalarFn,
    pub f1: ScalarFn,
    pub f2: ScalarFn,
}

impl fmt::Debug for CustomGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomGenerator({})", self.name)
    }
}

/// Generator `F` of the f-divergence `E_Q[F(dP/dQ)]`.
#[derive(Debug, Clone)]
pub enum Generator {
    Builtin(BuiltinGenerator),
    Custom(CustomGenerator),
}

pub fn builtin_generator(kind: BuiltinGenerator) -> Generator {
    Generator::Builtin(kind)
}

impl Generator {
    pub fn custom(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let g = Generator::Custom(CustomGenerator {
            name: name.to_string(),
            f: Arc::new(f),
            f1: Arc::new(f1),
            f2: Arc::new(f2),
        });
        g.validate()?;
        Ok(g)
    }

    pub fn name(&self) -> String {
        match self {
            Generator::Builtin(BuiltinGenerator::Hellinger2) => "hellinger2".into(),
            Generator::Builtin(BuiltinGenerator::KL) => "kl".into(),
            Generator::Builtin(BuiltinGenerator::ChiSquared) => "chi_squared".into(),
            Generator::Custom(c) => c.name.clone(),
        }
    }

    pub fn f(&self, r: f64) -> f64 {
        match self {
            Generator::Builtin(BuiltinGenerator::Hellinger2) => 1.0 - r.sqrt(),
            Generator::Builtin(BuiltinGenerator::KL) => {
                if r == 0.0 {
                    0.0
                } else {
                    r * r.ln()
                }
            }
            Generator::Builtin(BuiltinGenerator::ChiSquared) => (r - 1.0) * (r - 1.0),
            Generator::Custom(c) => (c.f)(r),
        }
    }

    pub fn f_prime(&self, r: f64) -> f64 {
        match self {
            Generator::Builtin(BuiltinGenerator::Hellinger2) => -0.5 / r.sqrt(),
            Generator::Builtin(BuiltinGenerator::KL) => r.ln() + 1.0,
            Generator::Builtin(BuiltinGenerator::ChiSquared) => 2.0 * (r - 1.0),
            Generator::Custom(c) => (c.f1)(r),
        }
    }

    pub fn f_second(&self, r: f64) -> f64 {
        match self {
            Generator::Builtin(BuiltinGenerator::Hellinger2) => 0.25 * r.powf(-1.5),
            Generator::Builtin(BuiltinGenerator::KL) => 1.0 / r,
            Generator::Builtin(BuiltinGenerator::ChiSquared) => 2.0,
            Generator::Custom(c) => (c.f2)(r),
        }
    }

    /// `γ = F″(1)`, the factor relating the loss Hessian to Fisher information.
    pub fn gamma(&self) -> f64 {
        self.f_second(1.0)
    }

    /// `G(r) = F(r) − F′(1)(r − 1)` at `r = exp(d)`.
    ///
    /// `E_Q[G(r)] = E_Q[F(r)]` because `E_Q[r] = 1`, and `G ≥ 0` with a
    /// double zero at `r = 1`, so near-identical distributions do not lose
    /// precision to cancellation.
    pub fn centered(&self, d: f64) -> f64 {
        if d == f64::NEG_INFINITY {
            return self.f(0.0) + self.f_prime(1.0);
        }
        match self {
            Generator::Builtin(BuiltinGenerator::Hellinger2) => {
                let e = (0.5 * d).exp_m1();
                0.5 * e * e
            }
            Generator::Builtin(BuiltinGenerator::KL) => {
                // r ln r − (r − 1) with ln r = d.
                d.exp() * d - d.exp_m1()
            }
            Generator::Builtin(BuiltinGenerator::ChiSquared) => {
                let e = d.exp_m1();
                e * e
            }
            Generator::Custom(_) => {
                let r = d.exp();
                self.f(r) - self.f_prime(1.0) * (r - 1.0)
            }
        }
    }

    /// Checks `F(1) = 0`, `F″ ≥ 0` and convexity on a log-spaced grid.
    pub fn validate(&self) -> Result<()> {
        if self.f(1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("generator {} has F(1) = {}", self.name(), self.f(1.0))));
        }
        let grid: Vec<f64> = (0..=120).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 120.0)).collect();
        for w in grid.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            // Chord above the graph at the middle point.
            let chord = self.f(a) + (self.f(c) - self.f(a)) * (b - a) / (c - a);
            let scale = 1.0 + self.f(a).abs().max(self.f(c).abs());
            if self.f(b) > chord + 1e-12 * scale || self.f_second(b) < 0.0 {
                return Err(Error::InvalidArgument(format!("generator {} is not convex near r = {b}", self.name())));
            }
        }
        Ok(())
    }
}
