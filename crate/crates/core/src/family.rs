//! Parametric component families `f(x, theta)` with their CDFs, exact
//! theta-derivatives and samplers, plus the mixture-level evaluators built
//! on top of them.

use rand::RngCore;

use crate::error::{MixError, Result};
use crate::mixing::MixingDistribution;
use crate::sample::EmpiricalSample;
use crate::scalar::{normal_cdf, normal_pdf, Scalar};
use crate::DEFAULT_M_MAX;

/// Closed parameter interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDomain<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> ParamDomain<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(MixError::InvalidArgument(format!(
                "parameter domain [{lo}, {hi}] is empty or unbounded"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, theta: T) -> bool {
        self.lo <= theta && theta <= self.hi
    }

    pub fn check(&self, theta: T) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(MixError::OutOfDomain {
                value: theta.as_f64(),
                lo: self.lo.as_f64(),
                hi: self.hi.as_f64(),
            })
        }
    }

    pub fn clamp(&self, theta: T) -> T {
        theta.max(self.lo).min(self.hi)
    }

    /// Distance from `theta` to the nearest endpoint.
    pub fn distance_to_boundary(&self, theta: T) -> T {
        (theta - self.lo).min(self.hi - theta)
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }
}

impl<T: Scalar> Default for ParamDomain<T> {
    fn default() -> Self {
        Self {
            lo: T::lit(-10.0),
            hi: T::lit(10.0),
        }
    }
}

/// A one-dimensional parametric family of densities with respect to
/// Lebesgue measure.
///
/// Implementations must be pure: every evaluator depends only on its
/// arguments, and samplers draw all randomness from the supplied stream.
pub trait ComponentFamily<T: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    fn domain(&self) -> ParamDomain<T>;

    /// Highest supported theta-derivative order.
    fn max_deriv_order(&self) -> usize;

    /// Characteristic width of a single component, used to size grids.
    fn scale(&self) -> T;

    fn pdf(&self, x: T, theta: T) -> T;

    fn cdf(&self, x: T, theta: T) -> T;

    /// `d^p/dtheta^p F(x, theta)` without argument checks.
    fn cdf_deriv_unchecked(&self, p: usize, x: T, theta: T) -> T;

    /// `d^p/dtheta^p f(x, theta)` without argument checks.
    fn pdf_deriv_unchecked(&self, p: usize, x: T, theta: T) -> T;

    fn sample(&self, theta: T, rng: &mut dyn RngCore) -> T;

    /// `ln f(x, theta)`; override when the density underflows in the tails.
    fn ln_pdf(&self, x: T, theta: T) -> T {
        self.pdf(x, theta).ln()
    }

    /// `ln |d^p/dtheta^p f(x, theta)|`, `-inf` at zeros.
    fn ln_abs_pdf_deriv(&self, p: usize, x: T, theta: T) -> T {
        if p == 0 {
            return self.ln_pdf(x, theta);
        }
        self.pdf_deriv_unchecked(p, x, theta).abs().ln()
    }

    /// `E[(X - theta)^k]` when the family is a location family with finite
    /// moments; used to deconvolve sample moments.
    fn location_noise_moment(&self, _k: usize) -> Option<T> {
        None
    }

    fn check_args(&self, p: usize, theta: T) -> Result<()> {
        if p > self.max_deriv_order() {
            return Err(MixError::UnsupportedOrder {
                order: p,
                max: self.max_deriv_order(),
            });
        }
        self.domain().check(theta)
    }

    fn cdf_deriv(&self, p: usize, x: T, theta: T) -> Result<T> {
        self.check_args(p, theta)?;
        if p == 0 {
            return Ok(self.cdf(x, theta));
        }
        Ok(self.cdf_deriv_unchecked(p, x, theta))
    }

    fn pdf_deriv(&self, p: usize, x: T, theta: T) -> Result<T> {
        self.check_args(p, theta)?;
        if p == 0 {
            return Ok(self.pdf(x, theta));
        }
        Ok(self.pdf_deriv_unchecked(p, x, theta))
    }
}

/// Probabilists' Hermite polynomial `He_k(z)`.
pub fn hermite<T: Scalar>(k: usize, z: T) -> T {
    let (mut prev, mut cur) = (T::one(), z);
    match k {
        0 => prev,
        _ => {
            for j in 1..k {
                let next = z * cur - T::from_usize_lossy(j) * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Gaussian location family `N(theta, sigma^2)` with fixed `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLocation<T> {
    sigma: T,
    domain: ParamDomain<T>,
    max_order: usize,
}

impl<T: Scalar> GaussianLocation<T> {
    pub fn new(sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(MixError::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            sigma,
            domain: ParamDomain::default(),
            max_order: 2 * DEFAULT_M_MAX,
        })
    }

    pub fn standard() -> Self {
        Self::new(T::one()).expect("unit scale")
    }

    pub fn with_domain(mut self, domain: ParamDomain<T>) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order.max(1);
        self
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }
}

impl<T: Scalar> ComponentFamily<T> for GaussianLocation<T> {
    fn name(&self) -> &str {
        "gaussian"
    }

    fn domain(&self) -> ParamDomain<T> {
        self.domain
    }

    fn max_deriv_order(&self) -> usize {
        self.max_order
    }

    fn scale(&self) -> T {
        self.sigma
    }

    #[inline]
    fn pdf(&self, x: T, theta: T) -> T {
        normal_pdf((x - theta) / self.sigma) / self.sigma
    }

    #[inline]
    fn cdf(&self, x: T, theta: T) -> T {
        normal_cdf((x - theta) / self.sigma)
    }

    /// `-sigma^-p He_{p-1}(z) phi(z)` for `p >= 1`.
    fn cdf_deriv_unchecked(&self, p: usize, x: T, theta: T) -> T {
        if p == 0 {
            return self.cdf(x, theta);
        }
        let z = (x - theta) / self.sigma;
        -hermite(p - 1, z) * normal_pdf(z) / self.sigma.powi(p as i32)
    }

    /// `sigma^-(p+1) He_p(z) phi(z)`.
    fn pdf_deriv_unchecked(&self, p: usize, x: T, theta: T) -> T {
        let z = (x - theta) / self.sigma;
        hermite(p, z) * normal_pdf(z) / self.sigma.powi(p as i32 + 1)
    }

    fn sample(&self, theta: T, rng: &mut dyn RngCore) -> T {
        theta + self.sigma * T::standard_normal(rng)
    }

    fn ln_pdf(&self, x: T, theta: T) -> T {
        let z = (x - theta) / self.sigma;
        -z * z / T::lit(2.0) - (T::TAU()).sqrt().ln() - self.sigma.ln()
    }

    fn ln_abs_pdf_deriv(&self, p: usize, x: T, theta: T) -> T {
        let z = (x - theta) / self.sigma;
        hermite(p, z).abs().ln() + self.ln_pdf(x, theta) - T::from_usize_lossy(p) * self.sigma.ln()
    }

    fn location_noise_moment(&self, k: usize) -> Option<T> {
        if k % 2 == 1 {
            return Some(T::zero());
        }
        // (k-1)!! sigma^k
        let mut dbl = T::one();
        let mut j = 1;
        while j < k {
            dbl *= T::from_usize_lossy(j);
            j += 2;
        }
        Some(dbl * self.sigma.powi(k as i32))
    }
}

/// Serializable description of a family: `name` plus its scale, with the
/// parameter interval `[theta_lo, theta_hi]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default = "FamilySpec::default_name")]
    pub name: String,
    #[serde(default = "FamilySpec::default_scale")]
    pub sigma: f64,
    #[serde(default = "FamilySpec::default_lo")]
    pub theta_lo: f64,
    #[serde(default = "FamilySpec::default_hi")]
    pub theta_hi: f64,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self {
            name: Self::default_name(),
            sigma: Self::default_scale(),
            theta_lo: Self::default_lo(),
            theta_hi: Self::default_hi(),
        }
    }
}

impl FamilySpec {
    fn default_name() -> String {
        "gaussian".into()
    }
    fn default_scale() -> f64 {
        1.0
    }
    fn default_lo() -> f64 {
        -10.0
    }
    fn default_hi() -> f64 {
        10.0
    }

    pub fn domain(&self) -> Result<ParamDomain<f64>> {
        ParamDomain::new(self.theta_lo, self.theta_hi)
    }

    pub fn build(&self) -> Result<Box<dyn ComponentFamily<f64>>> {
        let domain = self.domain()?;
        match self.name.as_str() {
            "gaussian" => Ok(Box::new(GaussianLocation::new(self.sigma)?.with_domain(domain))),
            #[cfg(feature = "cauchy")]
            "cauchy" => Ok(Box::new(CauchyLocation::new(self.sigma)?.with_domain(domain))),
            other => Err(MixError::InvalidArgument(format!("unknown family `{other}`"))),
        }
    }
}

/// Cauchy location family with fixed scale `gamma`.
#[cfg(feature = "cauchy")]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyLocation<T> {
    gamma: T,
    domain: ParamDomain<T>,
    max_order: usize,
}

#[cfg(feature = "cauchy")]
impl<T: Scalar> CauchyLocation<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(MixError::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self {
            gamma,
            domain: ParamDomain::default(),
            max_order: 2 * DEFAULT_M_MAX,
        })
    }

    pub fn with_domain(mut self, domain: ParamDomain<T>) -> Self {
        self.domain = domain;
        self
    }

    /// `d^n/dz^n atan(z) = (-1)^(n-1) (n-1)! sin(n acot z) / (1+z^2)^(n/2)`.
    fn atan_deriv(n: usize, z: T) -> T {
        let acot = T::one().atan2(z);
        let mut fact = T::one();
        for j in 1..n {
            fact *= T::from_usize_lossy(j);
        }
        let sign = if n % 2 == 1 { T::one() } else { -T::one() };
        let nn = T::from_usize_lossy(n);
        sign * fact * (nn * acot).sin() / (T::one() + z * z).powf(nn * T::lit(0.5))
    }
}

#[cfg(feature = "cauchy")]
impl<T: Scalar> ComponentFamily<T> for CauchyLocation<T> {
    fn name(&self) -> &str {
        "cauchy"
    }

    fn domain(&self) -> ParamDomain<T> {
        self.domain
    }

    fn max_deriv_order(&self) -> usize {
        self.max_order
    }

    fn scale(&self) -> T {
        self.gamma
    }

    fn pdf(&self, x: T, theta: T) -> T {
        let z = (x - theta) / self.gamma;
        T::FRAC_1_PI() / (self.gamma * (T::one() + z * z))
    }

    fn cdf(&self, x: T, theta: T) -> T {
        let z = (x - theta) / self.gamma;
        T::lit(0.5) + z.atan() * T::FRAC_1_PI()
    }

    fn cdf_deriv_unchecked(&self, p: usize, x: T, theta: T) -> T {
        if p == 0 {
            return self.cdf(x, theta);
        }
        let z = (x - theta) / self.gamma;
        let chain = (-T::one() / self.gamma).powi(p as i32);
        chain * Self::atan_deriv(p, z) * T::FRAC_1_PI()
    }

    fn pdf_deriv_unchecked(&self, p: usize, x: T, theta: T) -> T {
        let z = (x - theta) / self.gamma;
        let chain = (-T::one() / self.gamma).powi(p as i32);
        chain * Self::atan_deriv(p + 1, z) * T::FRAC_1_PI() / self.gamma
    }

    fn sample(&self, theta: T, rng: &mut dyn RngCore) -> T {
        let u = T::unit_uniform(rng);
        theta + self.gamma * (T::PI() * (u - T::lit(0.5))).tan()
    }
}

fn check_atoms<T: Scalar, F: ComponentFamily<T> + ?Sized>(
    family: &F,
    g: &MixingDistribution<T>,
) -> Result<()> {
    let dom = family.domain();
    g.locations().iter().try_for_each(|&t| dom.check(t))
}

/// `F(x, G) = sum_j pi_j F(x, theta_j)` without domain checks.
#[inline]
pub fn mixture_cdf_unchecked<T: Scalar, F: ComponentFamily<T> + ?Sized>(
    family: &F,
    g: &MixingDistribution<T>,
    x: T,
) -> T {
    g.atoms().map(|(theta, w)| w * family.cdf(x, theta)).sum()
}

/// `f(x, G) = sum_j pi_j f(x, theta_j)` without domain checks.
#[inline]
pub fn mixture_pdf_unchecked<T: Scalar, F: ComponentFamily<T> + ?Sized>(
    family: &F,
    g: &MixingDistribution<T>,
    x: T,
) -> T {
    g.atoms().map(|(theta, w)| w * family.pdf(x, theta)).sum()
}

pub fn mixture_cdf<T: Scalar, F: ComponentFamily<T> + ?Sized>(
    family: &F,
    g: &MixingDistribution<T>,
    x: T,
) -> Result<T> {
    check_atoms(family, g)?;
    Ok(mixture_cdf_unchecked(family, g, x).max(T::zero()).min(T::one()))
}

pub fn mixture_pdf<T: Scalar, F: ComponentFamily<T> + ?Sized>(
    family: &F,
    g: &MixingDistribution<T>,
    x: T,
) -> Result<T> {
    check_atoms(family, g)?;
    Ok(mixture_pdf_unchecked(family, g, x))
}

/// `n` draws as `(value, component index)`, in draw order. Component
/// indices are 1-based positions in the canonical atom order.
pub fn sample_mixture_labeled<T: Scalar, F: ComponentFamily<T> + ?Sized>(
    family: &F,
    g: &MixingDistribution<T>,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<(T, usize)>> {
    if n == 0 {
        return Err(MixError::EmptySample);
    }
    check_atoms(family, g)?;
    let mut cumulative: Vec<T> = g
        .weights()
        .iter()
        .scan(T::zero(), |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    *cumulative.last_mut().unwrap() = T::one();
    let locs = g.locations();
    Ok((0..n)
        .map(|_| {
            let j = if locs.len() == 1 {
                0
            } else {
                let u = T::unit_uniform(rng);
                cumulative.partition_point(|&c| c <= u).min(locs.len() - 1)
            };
            (family.sample(locs[j], rng), j + 1)
        })
        .collect())
}

/// `n` i.i.d. draws from `F(., G)`, sorted.
pub fn sample_mixture<T: Scalar, F: ComponentFamily<T> + ?Sized>(
    family: &F,
    g: &MixingDistribution<T>,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<EmpiricalSample<T>> {
    let draws = sample_mixture_labeled(family, g, n, rng)?;
    EmpiricalSample::new(draws.into_iter().map(|d| d.0).collect())
}
