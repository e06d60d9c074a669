use serde::Serialize;

use super::config::{parse_config, RunConfig};
use super::ConfigError;

/// A built-in configuration. Negative controls list the checks they are
/// built to break; every other check of theirs is expected to pass.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub positive: bool,
    pub expected_failures: &'static [&'static str],
    #[serde(skip)]
    pub source: &'static str,
}

macro_rules! fixture {
    ($name:literal, $desc:literal, [$($fail:literal),*]) => {
        Fixture {
            name: $name,
            description: $desc,
            positive: <[&str]>::is_empty(&[$($fail),*]),
            expected_failures: &[$($fail),*],
            source: include_str!(concat!("../../catalog/", $name, ".json")),
        }
    };
}

pub const FIXTURES: &[Fixture] = &[
    fixture!("flat_trivial", "flat plane, constant potential, lambda = 0", []),
    fixture!("flat_trivial_broken", "flat plane with lambda = 1/2", ["qe_residual", "TRACE"]),
    fixture!("round_sphere_trivial", "unit sphere, constant potential, m = 2", []),
    fixture!("round_sphere_broken", "unit sphere with f = 0.3 cos(th)", ["qe_residual", "E4"]),
    fixture!("round_sphere_kazdan_warner", "unit sphere, conformal u = cos(th), full chart", []),
    fixture!("cosh_line", "line with u = cosh(x), m = 2, lambda = -2", []),
    fixture!("cosh_line_perturbed", "line with u = cosh(x) + x^3/10", ["qe_residual", "E4", "mu_constancy", "warp_lift"]),
    fixture!("hyperbolic_exponential", "hyperbolic plane, u = e^r, m = 1, lambda = -2", []),
    fixture!("hyperbolic_exponential_3d", "hyperbolic 3-space, u = e^r, m = 2, lambda = -4", []),
    fixture!("hyperbolic_exponential_perturbed", "hyperbolic plane with u = e^(1.2 r)", ["qe_residual", "mu_constancy"]),
    fixture!("gaussian_soliton", "Gaussian shrinking soliton on the plane, m = inf", []),
    fixture!("gaussian_soliton_broken", "plane with f = 0.4 |x|^2, m = inf", ["qe_residual", "TRACE"]),
    fixture!("product_kahler_qe", "hyperbolic plane times 2-D exponential fixture, block J", []),
    fixture!(
        "product_kahler_broken",
        "product with u mixing both factors",
        ["qe_residual", "phi_antisymmetry", "wedge", "directional_hessian", "parallel_transport"]
    ),
    fixture!("m1_family", "m = 1: hemisphere with u = cos(th) and profile trajectories", []),
    fixture!(
        "m1_family_broken",
        "m = 1 with nonzero fiber constant: perturbed u and an off-family trajectory",
        ["qe_residual", "mu_constancy", "ode_lift"]
    ),
];

pub fn catalog_names() -> Vec<&'static str> {
    FIXTURES.iter().map(|f| f.name).collect()
}

/// The fixture called `name` with its parsed configuration.
pub fn catalog(name: &str) -> Result<(Fixture, RunConfig), ConfigError> {
    let f = FIXTURES
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| ConfigError::UnknownFixture(name.to_string()))?;
    Ok((*f, parse_config(f.source)?))
}
