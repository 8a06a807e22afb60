//! Weighted linear least squares shared by the extrapolation routines.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quantity::{Quantity, EXP};

#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub params: DVector<f64>,
    /// Linear map from the observations to the parameters, `params = L·y`.
    pub estimator: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub dof: usize,
    /// True when the fit used inverse-variance weights.
    pub weighted: bool,
}

impl LinearFit {
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

/// Minimizes Σ wᵢ (yᵢ − Xᵢ·p)² with wᵢ = 1/σᵢ² when `sigma` is given and
/// wᵢ = 1 otherwise.
///
/// With known σ the covariance is (XᵀWX)⁻¹. Without weights it is scaled by
/// the residual variance RSS/dof; an exactly determined unweighted fit has no
/// residual information and reports zero covariance.
pub fn weighted_least_squares(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    sigma: Option<&DVector<f64>>,
) -> Result<LinearFit> {
    let (m, p) = design.shape();
    if y.len() != m {
        return Err(Error::input(format!(
            "{m} design rows but {} observations",
            y.len()
        )));
    }
    if m < p {
        return Err(Error::input(format!(
            "{m} points cannot determine {p} parameters"
        )));
    }
    let w_sqrt = match sigma {
        Some(s) => {
            if s.len() != m {
                return Err(Error::input("uncertainty vector length differs from data"));
            }
            if let Some(bad) = s.iter().find(|&&u| !(u > 0.0 && u.is_finite())) {
                return Err(Error::input(format!(
                    "weights need positive uncertainties, got {bad}"
                )));
            }
            s.map(|u| 1.0 / u)
        }
        None => DVector::from_element(m, 1.0),
    };
    let a = DMatrix::from_fn(m, p, |i, j| design[(i, j)] * w_sqrt[i]);
    let b = y.component_mul(&w_sqrt);

    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if !(s_max > 0.0) || s_min <= 1e-12 * s_max {
        return Err(Error::Singular(format!(
            "design matrix has condition number {:e}",
            s_max / s_min
        )));
    }
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let inv_s = svd.singular_values.map(|x| 1.0 / x);
    let pinv = v_t.transpose() * DMatrix::from_diagonal(&inv_s) * u.transpose();
    let estimator = &pinv * DMatrix::from_diagonal(&w_sqrt);
    let params = &pinv * &b;
    let resid = &b - &a * &params;
    let chi2 = resid.norm_squared();
    let dof = m - p;
    let mut covariance = v_t.transpose() * DMatrix::from_diagonal(&inv_s.map(|x| x * x)) * v_t;
    if sigma.is_none() {
        let scale = if dof > 0 { chi2 / dof as f64 } else { 0.0 };
        covariance *= scale;
    }
    Ok(LinearFit {
        params,
        estimator,
        covariance,
        chi2,
        dof,
        weighted: sigma.is_some(),
    })
}

/// Fits y = Σ_j p_j·f_j(x) for the basis functions `basis`.
pub fn fit_basis(
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    basis: &[fn(f64) -> f64],
) -> Result<LinearFit> {
    let design = DMatrix::from_fn(x.len(), basis.len(), |i, j| basis[j](x[i]));
    weighted_least_squares(
        &design,
        &DVector::from_column_slice(y),
        sigma.map(DVector::from_column_slice).as_ref(),
    )
}

/// Rejects repeated abscissae, which leave an extrapolation underdetermined
/// even when the design matrix is formally of full rank.
pub fn require_distinct(x: &[f64], what: &str) -> Result<()> {
    for (i, a) in x.iter().enumerate() {
        if x[i + 1..].contains(a) {
            return Err(Error::Singular(format!(
                "{what} value {a} appears more than once"
            )));
        }
    }
    Ok(())
}

/// Intercept and slope of `f = f₀ + k·g(x)` fitted to frequency points.
#[derive(Clone, Debug, PartialEq)]
pub struct Extrapolation {
    /// f₀ with its fit uncertainty in `exp`; other components of the inputs
    /// are carried through the linear estimator in quadrature.
    pub intercept: Quantity,
    pub slope: f64,
    pub slope_sigma: f64,
    pub fit: LinearFit,
}

/// Least-squares extrapolation to x = 0 of `f = f₀ + k·g(x)`. Points are
/// weighted by 1/u_exp² when every point carries a positive `exp`
/// component and unweighted when none does.
pub fn extrapolate(
    points: &[(f64, Quantity)],
    g: fn(f64) -> f64,
    what: &str,
) -> Result<Extrapolation> {
    if points.len() < 3 {
        return Err(Error::input(format!(
            "extrapolation in {what} needs at least 3 points, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    require_distinct(&xs, what)?;
    let unit = &points[0].1.unit;
    if let Some((_, q)) = points.iter().find(|(_, q)| &q.unit != unit) {
        return Err(Error::input(format!(
            "unit mismatch: '{unit}' vs '{}'",
            q.unit
        )));
    }
    let u: Vec<f64> = points.iter().map(|(_, q)| q.component(EXP)).collect();
    let n_weighted = u.iter().filter(|&&x| x > 0.0).count();
    let sigma = if n_weighted == points.len() {
        Some(DVector::from_vec(u))
    } else if n_weighted == 0 {
        None
    } else {
        return Err(Error::input(format!(
            "{n_weighted} of {} points carry an exp uncertainty; give all or none",
            points.len()
        )));
    };
    let design = DMatrix::from_fn(points.len(), 2, |i, j| if j == 0 { 1.0 } else { g(xs[i]) });
    let y = DVector::from_iterator(points.len(), points.iter().map(|(_, q)| q.value));
    let fit = weighted_least_squares(&design, &y, sigma.as_ref())?;

    let mut intercept = Quantity::new(fit.params[0], unit.clone());
    let mut names: Vec<&String> = points
        .iter()
        .flat_map(|(_, q)| q.components().keys())
        .collect();
    names.sort();
    names.dedup();
    for name in names.into_iter().filter(|n| n.as_str() != EXP) {
        let u2: f64 = points
            .iter()
            .enumerate()
            .map(|(i, (_, q))| (fit.estimator[(0, i)] * q.component(name)).powi(2))
            .sum();
        intercept.set(name.clone(), u2.sqrt())?;
    }
    intercept.set(EXP, fit.sigma(0))?;
    Ok(Extrapolation {
        intercept,
        slope: fit.params[1],
        slope_sigma: fit.sigma(1),
        fit,
    })
}
