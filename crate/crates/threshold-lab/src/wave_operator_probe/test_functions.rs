//! Test functions with annulus-concentrated Fourier transforms, sampled on a polar grid.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::quadrature::{laguerre, uniform_panels};
use crate::error::{Error, Result};
use crate::green_functions::bessel_j0_real;

/// Radial profile `p` together with its transform `p̂(ρ) = ∫ p(r) J₀(ρr) r dr`.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `p̂(ρ) = Σ c_m ρ^{2m} e^{-ρ²/2}`, so `p(r) = Σ c_m 2^m m! L_m(r²/2) e^{-r²/2}`.
    Laguerre { terms: Vec<(usize, f64)> },
    /// `p̂(ρ) = exp(-1/((ρ-a)(b-ρ)))` on `(a, b)`, zero outside.
    Bump { lo: f64, hi: f64 },
}

impl Profile {
    /// `ρ^{2m} e^{-ρ²/2}`.
    pub fn monomial(m: usize) -> Self {
        Profile::Laguerre { terms: vec![(m, 1.0)] }
    }

    /// Second difference in `m`; the spherical-mean profile vanishes to second order at 0.
    pub fn second_difference(m: usize) -> Self {
        let w = |m: usize| 1.0 / (1..=m).map(|i| 2.0 * i as f64).product::<f64>();
        Profile::Laguerre { terms: vec![(m, w(m)), (m + 1, -2.0 * w(m + 1)), (m + 2, w(m + 2))] }
    }

    pub fn transform(&self, rho: f64) -> f64 {
        match self {
            Profile::Laguerre { terms } => {
                let q = rho * rho;
                terms.iter().map(|&(m, c)| c * q.powi(m as i32)).sum::<f64>() * (-q / 2.0).exp()
            }
            Profile::Bump { lo, hi } => {
                if rho <= *lo || rho >= *hi {
                    0.0
                } else {
                    (-1.0 / ((rho - lo) * (hi - rho))).exp()
                }
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            Profile::Laguerre { terms } => {
                let x = r * r / 2.0;
                let s: f64 = terms
                    .iter()
                    .map(|&(m, c)| {
                        let f: f64 = (1..=m).map(|i| 2.0 * i as f64).product();
                        c * f * laguerre(m, x)
                    })
                    .sum();
                s * (-x).exp()
            }
            Profile::Bump { lo, hi } => {
                let (nodes, weights) = uniform_panels(*lo, *hi, 16, 16);
                nodes
                    .iter()
                    .zip(&weights)
                    .map(|(rho, w)| w * self.transform(*rho) * bessel_j0_real(rho * r) * rho)
                    .sum()
            }
        }
    }

    /// Interval outside which `p̂` is below `1e-17` of its maximum.
    pub fn band(&self) -> (f64, f64) {
        match self {
            Profile::Bump { lo, hi } => (*lo, *hi),
            Profile::Laguerre { .. } => {
                let step = 0.01;
                let vals: Vec<f64> = (0..3000).map(|i| self.transform(i as f64 * step).abs()).collect();
                let peak = vals.iter().cloned().fold(0.0, f64::max);
                let last = vals.iter().rposition(|v| *v > 1e-17 * peak).unwrap_or(0);
                (0.0, (last + 1) as f64 * step)
            }
        }
    }
}

/// `u(x) = e^{iω·x} p(|x - x₀|/σ) cos(n θ)`, with `θ` the polar angle of `x - x₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct Descriptor {
    pub profile: Profile,
    pub scale: f64,
    pub shift: [f64; 2],
    pub frequency: [f64; 2],
    pub angular_order: u32,
}

impl Descriptor {
    pub fn radial(profile: Profile) -> Self {
        Self { profile, scale: 1.0, shift: [0.0; 2], frequency: [0.0; 2], angular_order: 0 }
    }

    pub fn dilated(mut self, scale: f64) -> Self {
        self.scale *= scale;
        self
    }

    pub fn translated(mut self, shift: [f64; 2]) -> Self {
        self.shift = [self.shift[0] + shift[0], self.shift[1] + shift[1]];
        self
    }

    pub fn modulated(mut self, frequency: [f64; 2]) -> Self {
        self.frequency = [self.frequency[0] + frequency[0], self.frequency[1] + frequency[1]];
        self
    }

    pub fn is_radial(&self) -> bool {
        self.shift == [0.0; 2] && self.frequency == [0.0; 2] && self.angular_order == 0
    }

    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        let (dx, dy) = (x[0] - self.shift[0], x[1] - self.shift[1]);
        let r = dx.hypot(dy);
        let mut v = self.profile.value(r / self.scale);
        if self.angular_order > 0 {
            v *= (self.angular_order as f64 * dy.atan2(dx)).cos();
        }
        let phase = self.frequency[0] * x[0] + self.frequency[1] * x[1];
        Complex64::from_polar(v, phase)
    }

    /// `û(ξ) = σ² e^{-i(ξ-ω)·x₀} p̂(σ|ξ - ω|)`.
    pub fn fourier(&self, xi: [f64; 2]) -> Result<Complex64> {
        self.require_round()?;
        let (ex, ey) = (xi[0] - self.frequency[0], xi[1] - self.frequency[1]);
        let v = self.scale * self.scale * self.profile.transform(self.scale * ex.hypot(ey));
        Ok(Complex64::from_polar(v, -(ex * self.shift[0] + ey * self.shift[1])))
    }

    /// `(1/2π)∫_{S¹} û(ρω) dω`, in closed form when unmodulated.
    pub fn spectral_mean(&self, rho: f64, n_theta: usize) -> Result<Complex64> {
        self.require_round()?;
        if self.frequency == [0.0; 2] {
            let a = self.shift[0].hypot(self.shift[1]);
            let v = self.scale * self.scale * self.profile.transform(self.scale * rho);
            return Ok(Complex64::new(v * bessel_j0_real(rho * a), 0.0));
        }
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n_theta {
            let t = 2.0 * PI * i as f64 / n_theta as f64;
            s += self.fourier([rho * t.cos(), rho * t.sin()])?;
        }
        Ok(s / n_theta as f64)
    }

    /// Effective spectral support in `|ξ|`.
    pub fn band(&self) -> (f64, f64) {
        let (lo, hi) = self.profile.band();
        let w = self.frequency[0].hypot(self.frequency[1]);
        ((lo / self.scale - w).max(0.0), hi / self.scale + w)
    }

    /// Radius beyond which `|u|` stays below `1e-17` of its maximum.
    pub fn support_radius(&self) -> f64 {
        let step = 0.02;
        let vals: Vec<f64> = (0..4000).map(|i| self.profile.value(i as f64 * step).abs()).collect();
        let peak = vals.iter().cloned().fold(0.0, f64::max);
        let last = vals.iter().rposition(|v| *v > 1e-17 * peak).unwrap_or(0);
        (last + 1) as f64 * step * self.scale + self.shift[0].hypot(self.shift[1])
    }

    fn require_round(&self) -> Result<()> {
        if self.angular_order > 0 {
            return Err(Error::Precondition(
                "Fourier data are only available for angular order 0".into(),
            ));
        }
        Ok(())
    }
}

/// Midpoint polar grid: `r_i = (i + ½) R/n_r`, `θ_j = 2πj/n_θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarGrid {
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for PolarGrid {
    fn default() -> Self {
        Self { r_max: 40.0, n_r: 2048, n_theta: 256 }
    }
}

impl PolarGrid {
    pub fn refined(&self) -> Self {
        Self { r_max: self.r_max, n_r: 2 * self.n_r, n_theta: 2 * self.n_theta }
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.n_r as f64
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.n_r).map(|i| (i as f64 + 0.5) * self.dr()).collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_theta).map(|j| 2.0 * PI * j as f64 / self.n_theta as f64).collect()
    }

    /// Uniform step of the `s = r²` line used by the half-line projection.
    pub fn s_step(&self) -> f64 {
        self.dr() / 2.0
    }
}

/// A test function with its descriptor and sampling grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTestFunction {
    pub descriptor: Descriptor,
    pub grid: PolarGrid,
}

impl RadialTestFunction {
    pub fn new(descriptor: Descriptor, grid: PolarGrid) -> Result<Self> {
        if !(descriptor.scale > 0.0 && descriptor.scale.is_finite()) {
            return Err(Error::Domain(format!("scale {} must be positive", descriptor.scale)));
        }
        if let Profile::Bump { lo, hi } = descriptor.profile {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::Domain(format!("bump band [{lo}, {hi}] is not an annulus")));
            }
        }
        if !(grid.r_max > 0.0) || grid.n_r < 8 || grid.n_theta < 8 {
            return Err(Error::Domain("polar grid too small".into()));
        }
        Ok(Self { descriptor, grid })
    }

    pub fn with_grid(&self, grid: PolarGrid) -> Self {
        Self { descriptor: self.descriptor.clone(), grid }
    }

    /// Values on the polar grid, radius-major.
    pub fn samples(&self) -> Vec<Complex64> {
        let angles = self.grid.angles();
        let mut out = Vec::with_capacity(self.grid.n_r * self.grid.n_theta);
        for r in self.grid.radii() {
            for t in &angles {
                out.push(self.descriptor.eval([r * t.cos(), r * t.sin()]));
            }
        }
        out
    }

    /// `‖u‖_p` by midpoint quadrature on the grid.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.lp_norms(&[p])[0]
    }

    /// [`Self::lp_norm`] for several exponents in one pass over the grid.
    pub fn lp_norms(&self, ps: &[f64]) -> Vec<f64> {
        let angles = self.grid.angles();
        let (dr, dt) = (self.grid.dr(), 2.0 * PI / self.grid.n_theta as f64);
        let mut s = vec![0.0; ps.len()];
        for r in self.grid.radii() {
            for t in &angles {
                let a = self.descriptor.eval([r * t.cos(), r * t.sin()]).norm();
                for (acc, p) in s.iter_mut().zip(ps) {
                    *acc += a.powf(*p) * r * dr * dt;
                }
            }
        }
        s.iter().zip(ps).map(|(v, p)| v.powf(1.0 / p)).collect()
    }

    /// Fails when `|u|` on the outer ring exceeds `1e-8` of its maximum.
    pub fn check_extent(&self) -> Result<()> {
        let angles = self.grid.angles();
        let ring_max = |r: f64| {
            angles
                .iter()
                .map(|t| self.descriptor.eval([r * t.cos(), r * t.sin()]).norm())
                .fold(0.0, f64::max)
        };
        let radii = self.grid.radii();
        let peak = radii.iter().step_by(8).map(|r| ring_max(*r)).fold(0.0, f64::max);
        let edge = ring_max(self.grid.r_max);
        if edge > 1e-8 * peak {
            return Err(Error::Truncation(format!(
                "|u| = {edge:e} at R_max = {} (peak {peak:e})",
                self.grid.r_max
            )));
        }
        Ok(())
    }
}

/// `M_u(r) = (1/2π)∫_{S¹} u(rω) dω` by the trapezoidal rule over `n_θ` angles.
pub fn spherical_mean(u: &RadialTestFunction, r: f64) -> Result<Complex64> {
    if !(r >= 0.0) || r > u.grid.r_max {
        return Err(Error::Domain(format!(
            "radius {r} outside the sampled range [0, {}]",
            u.grid.r_max
        )));
    }
    let d = &u.descriptor;
    if d.is_radial() {
        return Ok(Complex64::new(d.profile.value(r / d.scale), 0.0));
    }
    let n = u.grid.n_theta;
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let t = 2.0 * PI * j as f64 / n as f64;
        s += d.eval([r * t.cos(), r * t.sin()]);
    }
    Ok(s / n as f64)
}

/// Twelve dilations, translations and modulations of `ρ⁴ e^{-ρ²/2}`.
pub fn annular_corpus() -> Vec<Descriptor> {
    let base = Descriptor::radial(Profile::monomial(2));
    vec![
        base.clone(),
        base.clone().dilated(0.5),
        base.clone().dilated(1.5),
        base.clone().dilated(2.0),
        base.clone().translated([1.0, 0.0]),
        base.clone().translated([0.0, 2.5]),
        base.clone().translated([-2.0, 1.5]),
        base.clone().modulated([0.25, 0.0]),
        base.clone().modulated([0.0, 0.5]),
        base.clone().dilated(1.5).translated([1.0, 1.0]),
        base.clone().dilated(0.75).translated([-1.5, 0.0]),
        base.translated([0.5, -1.0]).modulated([0.3, 0.3]),
    ]
}
