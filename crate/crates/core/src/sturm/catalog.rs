//! Named problems: `free`, `harmonic(omega)`, `bessel(q)`, `bessel_r(r)`, `mathieu(a,q)`,
//! `nbody-asymptotic(config, motion)`.

use nalgebra::DMatrix;

use super::problem::{Builtin, CatalogEntry, EndpointKind, SlProblem};
use super::SlError;
use crate::bessel;

const NAMES: [&str; 5] = ["free", "harmonic", "bessel", "mathieu", "nbody-asymptotic"];

pub fn catalog_names() -> &'static [&'static str] {
    &NAMES
}

/// Splits `name(arg, key=value, ...)` into the name and its raw arguments.
fn split_call(spec: &str) -> Result<(String, Vec<(Option<String>, String)>), SlError> {
    let spec = spec.trim();
    let (name, rest) = match spec.find('(') {
        Some(i) => {
            let inner = spec[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| SlError::Catalog(format!("unbalanced parentheses in `{spec}`")))?;
            (&spec[..i], inner)
        }
        None => (spec, ""),
    };
    let args = rest
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s.split_once('=') {
            Some((k, v)) => (Some(k.trim().to_string()), v.trim().to_string()),
            None => (None, s.to_string()),
        })
        .collect();
    Ok((name.trim().to_ascii_lowercase(), args))
}

fn number(args: &[(Option<String>, String)], pos: usize, key: &str, default: Option<f64>) -> Result<f64, SlError> {
    let raw = args
        .iter()
        .find(|(k, _)| k.as_deref() == Some(key))
        .or_else(|| args.iter().filter(|(k, _)| k.is_none()).nth(pos))
        .map(|(_, v)| v.as_str());
    match raw {
        Some(v) => v.parse::<f64>().map_err(|_| SlError::Catalog(format!("`{key}` is not a number: {v}"))),
        None => default.ok_or_else(|| SlError::Catalog(format!("missing argument `{key}`"))),
    }
}

fn text(args: &[(Option<String>, String)], pos: usize, key: &str) -> Result<String, SlError> {
    args.iter()
        .find(|(k, _)| k.as_deref() == Some(key))
        .or_else(|| args.iter().filter(|(k, _)| k.is_none()).nth(pos))
        .map(|(_, v)| v.clone())
        .ok_or_else(|| SlError::Catalog(format!("missing argument `{key}`")))
}

/// Resolves a catalog name into a problem on its default interval.
pub fn parse_catalog(spec: &str) -> Result<SlProblem, SlError> {
    let (name, args) = split_call(spec)?;
    match name.as_str() {
        "free" => Ok(free()),
        "harmonic" => Ok(harmonic(number(&args, 0, "omega", Some(1.0))?)),
        "bessel" => bessel_problem(number(&args, 0, "q", None)?),
        "bessel_r" => {
            let r = number(&args, 0, "r", None)?;
            bessel_problem(bessel::q_of_r(r).map_err(|e| SlError::Catalog(e.to_string()))?)
        }
        "mathieu" => Ok(mathieu(number(&args, 0, "a", None)?, number(&args, 1, "q", None)?)),
        "nbody-asymptotic" | "nbody_asymptotic" => {
            let config = text(&args, 0, "config")?;
            let motion = text(&args, 1, "motion")?;
            crate::nbody::asymptotic_problem(&config, &motion).map_err(|e| SlError::Catalog(e.to_string()))
        }
        other => Err(SlError::UnknownCatalogEntry(other.to_string())),
    }
}

pub fn free() -> SlProblem {
    SlProblem::new(Builtin::schrodinger(1, |_| DMatrix::zeros(1, 1)), (0.0, 1.0))
        .with_label("free")
        .with_catalog(CatalogEntry::Free)
}

pub fn harmonic(omega: f64) -> SlProblem {
    SlProblem::new(Builtin::schrodinger(1, move |_| DMatrix::from_element(1, 1, -omega * omega)), (0.0, 1.0))
        .with_label(format!("harmonic({omega})"))
        .with_catalog(CatalogEntry::Harmonic { omega })
}

/// `−x'' + q t⁻² x` on `(0, 1]`.
pub fn bessel_problem(q: f64) -> Result<SlProblem, SlError> {
    if !q.is_finite() {
        return Err(SlError::Catalog("q must be finite".into()));
    }
    let left = if q >= 0.75 { EndpointKind::SingularLimitPoint } else { EndpointKind::SingularLimitCircle };
    Ok(SlProblem::new(Builtin::schrodinger(1, move |t| DMatrix::from_element(1, 1, q / (t * t))), (0.0, 1.0))
        .with_endpoints(left, EndpointKind::Regular)
        .with_label(format!("bessel({q})"))
        .with_catalog(CatalogEntry::Bessel { q }))
}

/// `x'' + (a − 2q cos 2t) x = 0` on `(0, π)`.
pub fn mathieu(a: f64, q: f64) -> SlProblem {
    SlProblem::new(
        Builtin::schrodinger(1, move |t| DMatrix::from_element(1, 1, 2.0 * q * (2.0 * t).cos() - a)),
        (0.0, std::f64::consts::PI),
    )
    .with_label(format!("mathieu({a},{q})"))
    .with_catalog(CatalogEntry::Mathieu { a, q })
}

/// Human-readable description of a catalog entry.
pub fn describe(name: &str) -> Result<String, SlError> {
    let (name, _) = split_call(name)?;
    let text = match name.as_str() {
        "free" => "free: −x'' = 0 on (0, 1). Solutions 1 and t; γ(t) = [[1, 0], [t, 1]] in (x', x) order.",
        "harmonic" => {
            "harmonic(omega): −x'' − ω² x = 0 on (0, 1) by default. Solutions cos ωt and sin(ωt)/ω; \
             Dirichlet eigenvalues (kπ/L)² − ω²."
        }
        "bessel" | "bessel_r" => {
            "bessel(q) / bessel_r(r): −x'' + q t⁻² x = 0 on (0, 1], q = −1/4 + r² (r ≥ 0), q = −1/4 − r² (r < 0).\n\
             r in (0,1): y1 = (t^(1/2−r) + t^(1/2+r))/2, y2 = (t^(1/2+r) − t^(1/2−r))/(2r)\n\
             r = 0:      y1 = t^(1/2), y2 = t^(1/2) ln t\n\
             r < 0:      y1 = t^(1/2) cos(r ln t), y2 = t^(1/2) sin(r ln t)/r\n\
             Limit circle at 0 for q < 3/4, limit point for q ≥ 3/4; [y1, y2] = −1."
        }
        "mathieu" => "mathieu(a,q): x'' + (a − 2q cos 2t) x = 0 on (0, π); regular at both ends.",
        "nbody-asymptotic" | "nbody_asymptotic" => {
            "nbody-asymptotic(config, motion): limiting variational equation along a homographic motion \
             of a central configuration. motion = collision: −x'' + B̃ t⁻² x on (0, 1]; parabolic: the \
             same on [1, ∞); hyperbolic: −x'' + B̃ t⁻³ x on [1, ∞). Configs: two-body, lagrange, euler, \
             square, or a JSON file."
        }
        other => return Err(SlError::UnknownCatalogEntry(other.to_string())),
    };
    Ok(text.to_string())
}
