use super::grid::{GridSpec, VelocityGrid};
use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum_by;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFunction {
    /// M(v) = exp(−|v|²).
    Maxwellian,
    /// m(v) = exp(−a|v|^s).
    Stretched { a: f64, s: f64 },
    /// ⟨v⟩^q = (1 + |v|²)^{q/2}.
    Bracket { q: f64 },
    /// Inverse of another weight's value, w(v)⁻¹ (used for L¹(m⁻¹)).
    InverseStretched { a: f64, s: f64 },
}

impl WeightFunction {
    /// Stretched weight admissible for a kernel with exponent γ (0 < s < γ/2, a > 0).
    pub fn stretched(a: f64, s: f64, gamma: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::config("weight.a", format!("a = {a} must be positive")));
        }
        if !(s > 0.0 && s < gamma / 2.0) {
            return Err(Error::config("weight.s", format!("s = {s} must lie in (0, γ/2) = (0, {})", gamma / 2.0)));
        }
        Ok(WeightFunction::Stretched { a, s })
    }

    /// Value at a node with squared speed `v2`.
    #[inline]
    pub fn eval_sq(&self, v2: f64) -> f64 {
        match *self {
            WeightFunction::Maxwellian => (-v2).exp(),
            WeightFunction::Stretched { a, s } => (-a * v2.powf(0.5 * s)).exp(),
            WeightFunction::InverseStretched { a, s } => (a * v2.powf(0.5 * s)).exp(),
            WeightFunction::Bracket { q } => (1.0 + v2).powf(0.5 * q),
        }
    }

    pub fn on_grid(&self, grid: &VelocityGrid) -> Vec<f64> {
        grid.speeds2().iter().map(|&v2| self.eval_sq(v2)).collect()
    }
}

/// How stored node values relate to the physical distribution f.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightConvention {
    /// values = f (or a signed field used as-is).
    #[default]
    Plain,
    /// values = h with f = M + M h.
    RelativeToM,
    /// values = g with f = M + m g.
    RelativeToStretched { a: f64, s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub convention: WeightConvention,
}

impl DistributionField {
    pub fn new(grid: &VelocityGrid, values: Vec<f64>, convention: WeightConvention) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("field contains non-finite values"));
        }
        Ok(DistributionField { grid: grid.spec(), values, convention })
    }

    pub fn plain(grid: &VelocityGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, WeightConvention::Plain)
    }

    pub fn from_fn(grid: &VelocityGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        DistributionField { grid: grid.spec(), values, convention: WeightConvention::Plain }
    }

    pub fn zeros(grid: &VelocityGrid) -> Self {
        DistributionField { grid: grid.spec(), values: vec![0.0; grid.len()], convention: WeightConvention::Plain }
    }

    pub fn check_grid(&self, grid: &VelocityGrid) -> Result<()> {
        if self.grid != grid.spec() {
            return Err(Error::GridMismatch(format!("field on {:?}, operator on {:?}", self.grid, grid.spec())));
        }
        Ok(())
    }

    /// Node values of the physical f described by this field.
    pub fn to_plain(&self, grid: &VelocityGrid) -> Result<DistributionField> {
        self.check_grid(grid)?;
        let values = match self.convention {
            WeightConvention::Plain => self.values.clone(),
            WeightConvention::RelativeToM => grid
                .speeds2()
                .iter()
                .zip(&self.values)
                .map(|(&v2, &h)| (-v2).exp() * (1.0 + h))
                .collect(),
            WeightConvention::RelativeToStretched { a, s } => grid
                .speeds2()
                .iter()
                .zip(&self.values)
                .map(|(&v2, &g)| (-v2).exp() + (-a * v2.powf(0.5 * s)).exp() * g)
                .collect(),
        };
        Ok(DistributionField { grid: self.grid, values, convention: WeightConvention::Plain })
    }

    pub fn is_physical(&self) -> bool {
        self.convention == WeightConvention::Plain && self.values.iter().all(|v| *v >= 0.0)
    }
}

pub fn maxwellian_field(grid: &VelocityGrid) -> DistributionField {
    let values = grid.speeds2().iter().map(|v2| (-v2).exp()).collect();
    DistributionField { grid: grid.spec(), values, convention: WeightConvention::Plain }
}

/// Maxwellian with density ρ, bulk velocity u and temperature T in the
/// normalization where (ρ, u, T) = (π^{N/2}, 0, 1/2) gives exp(−|v|²).
pub fn maxwellian_with(grid: &VelocityGrid, rho: f64, u: &[f64], temp: f64) -> DistributionField {
    let n = grid.dim as f64;
    let c = rho / (2.0 * std::f64::consts::PI * temp).powf(0.5 * n);
    DistributionField::from_fn(grid, |v| {
        let d2: f64 = v.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum();
        c * (-d2 / (2.0 * temp)).exp()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mass: f64,
    pub momentum: Vec<f64>,
    /// ½ ∫ |v|² f.
    pub energy: f64,
    pub temperature: f64,
}

impl Moments {
    pub fn velocity(&self) -> Vec<f64> {
        self.momentum.iter().map(|p| p / self.mass).collect()
    }
}

pub fn moments(grid: &VelocityGrid, f: &DistributionField) -> Result<Moments> {
    f.check_grid(grid)?;
    let v = &f.values;
    let w = grid.weights();
    let mass = pairwise_sum_by(grid.len(), |i| w[i] * v[i]);
    if mass <= 0.0 {
        return Err(Error::domain("field has nonpositive mass"));
    }
    let momentum: Vec<f64> =
        (0..grid.dim).map(|d| pairwise_sum_by(grid.len(), |i| w[i] * grid.node(i)[d] * v[i])).collect();
    let u: Vec<f64> = momentum.iter().map(|p| p / mass).collect();
    let energy = 0.5 * pairwise_sum_by(grid.len(), |i| w[i] * grid.speed2(i) * v[i]);
    let spread = pairwise_sum_by(grid.len(), |i| {
        let d2: f64 = grid.node(i).iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum();
        w[i] * d2 * v[i]
    });
    Ok(Moments { mass, momentum, energy, temperature: spread / (grid.dim as f64 * mass) })
}

/// Collision invariants φ ∈ {1, v_1, …, v_N, |v|²} at node i.
#[inline]
pub fn invariant(grid: &VelocityGrid, a: usize, i: usize) -> f64 {
    match a {
        0 => 1.0,
        a if a <= grid.dim => grid.node(i)[a - 1],
        _ => grid.speed2(i),
    }
}

pub fn n_invariants(grid: &VelocityGrid) -> usize {
    grid.dim + 2
}

/// Σ_i w_i values_i φ_a(v_i) for every collision invariant.
pub fn invariant_moments(grid: &VelocityGrid, values: &[f64]) -> Vec<f64> {
    let w = grid.weights();
    (0..n_invariants(grid))
        .map(|a| pairwise_sum_by(grid.len(), |i| w[i] * values[i] * invariant(grid, a, i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    LInf,
}

/// Discrete ‖f‖_{L^p(w)}: (Σ w_i ω(v_i) |f_i|^p)^{1/p} for p ∈ {1, 2}, max ω|f| for ∞.
pub fn weighted_norm(grid: &VelocityGrid, f: &DistributionField, weight: &WeightFunction, p: Norm) -> Result<f64> {
    f.check_grid(grid)?;
    Ok(weighted_norm_raw(grid, &f.values, weight, p))
}

pub fn weighted_norm_raw(grid: &VelocityGrid, values: &[f64], weight: &WeightFunction, p: Norm) -> f64 {
    let w = grid.weights();
    let om = |i: usize| weight.eval_sq(grid.speed2(i));
    match p {
        Norm::L1 => pairwise_sum_by(grid.len(), |i| w[i] * om(i) * values[i].abs()),
        Norm::L2 => pairwise_sum_by(grid.len(), |i| w[i] * om(i) * values[i] * values[i]).sqrt(),
        Norm::LInf => (0..grid.len()).map(|i| om(i) * values[i].abs()).fold(0.0, f64::max),
    }
}

/// Plain discrete L¹ norm Σ w |f|.
pub fn l1(grid: &VelocityGrid, values: &[f64]) -> f64 {
    let w = grid.weights();
    pairwise_sum_by(grid.len(), |i| w[i] * values[i].abs())
}

/// H(f) = Σ w f log f with 0 log 0 = 0.
pub fn h_functional(grid: &VelocityGrid, f: &DistributionField) -> Result<f64> {
    f.check_grid(grid)?;
    if let Some(v) = f.values.iter().find(|v| **v < 0.0) {
        return Err(Error::domain(format!("H functional needs f ≥ 0, found {v}")));
    }
    let w = grid.weights();
    let v = &f.values;
    Ok(pairwise_sum_by(grid.len(), |i| if v[i] > 0.0 { w[i] * v[i] * v[i].ln() } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn maxwellian_moments() {
        let g = VelocityGrid::new(3, 31, 6.0).unwrap();
        let m = moments(&g, &maxwellian_field(&g)).unwrap();
        assert!((m.mass - PI.powf(1.5)).abs() < 1e-10);
        assert!(m.momentum.iter().all(|p| p.abs() < 1e-14));
        assert!((m.temperature - 0.5).abs() < 1e-10);
        assert!((m.energy - 0.75 * PI.powf(1.5)).abs() < 1e-10);
        let two = DistributionField::plain(&g, maxwellian_field(&g).values.iter().map(|v| 2.0 * v).collect()).unwrap();
        let m2 = moments(&g, &two).unwrap();
        assert!((m2.mass - 2.0 * m.mass).abs() < 1e-10);
        assert!((m2.temperature - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shifted_maxwellian_velocity() {
        let g = VelocityGrid::new(2, 41, 7.0).unwrap();
        let u0 = [0.7, -0.4];
        let f = maxwellian_with(&g, 2.0, &u0, 0.3);
        let m = moments(&g, &f).unwrap();
        let u = m.velocity();
        assert!((u[0] - 0.7).abs() < 1e-10 && (u[1] + 0.4).abs() < 1e-10);
        assert!((m.mass - 2.0).abs() < 1e-10 && (m.temperature - 0.3).abs() < 1e-10);
    }

    #[test]
    fn norms() {
        let g = VelocityGrid::new(3, 21, 6.0).unwrap();
        let m = maxwellian_field(&g);
        let l1 = weighted_norm(&g, &m, &WeightFunction::Bracket { q: 0.0 }, Norm::L1).unwrap();
        assert!((l1 - PI.powf(1.5)).abs() < 1e-10);
        let inv = WeightFunction::InverseStretched { a: 1.0, s: 2.0 };
        let l2 = weighted_norm(&g, &m, &inv, Norm::L2).unwrap();
        assert!((l2 * l2 - PI.powf(1.5)).abs() < 1e-9);
        assert_eq!(weighted_norm(&g, &DistributionField::zeros(&g), &WeightFunction::Maxwellian, Norm::L1).unwrap(), 0.0);
    }

    #[test]
    fn entropy_of_maxwellian() {
        let g = VelocityGrid::new(3, 31, 6.0).unwrap();
        let h = h_functional(&g, &maxwellian_field(&g)).unwrap();
        assert!((h + 1.5 * PI.powf(1.5)).abs() < 1e-9);
        let ones = DistributionField::plain(&g, vec![1.0; g.len()]).unwrap();
        assert_eq!(h_functional(&g, &ones).unwrap(), 0.0);
        let neg = DistributionField::plain(&g, vec![-1.0; g.len()]).unwrap();
        assert!(h_functional(&g, &neg).is_err());
    }

    #[test]
    fn stretched_admissibility() {
        assert!(WeightFunction::stretched(0.5, 0.2, 1.0).is_ok());
        assert!(WeightFunction::stretched(0.5, 0.5, 1.0).is_err());
        assert!(WeightFunction::stretched(0.0, 0.2, 1.0).is_err());
    }
}
