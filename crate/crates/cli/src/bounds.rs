//! The `bounds` report: constant overrides and rendering.

use setupq::analytic::{bounds_report, BoundConstants, BoundsReport};
use setupq::model::SystemParams;

use crate::output::real;
use crate::CliError;

pub const CSV_HEADER: &str = "q_approx,q_upper,q_lower,q_low_r,t_approx,t_erlang_c,tightness_ratio,in_region";

pub const CONSTANT_NAMES: [&str; 12] =
    ["l1", "c_apx", "f1", "f2", "b1", "b2", "d1", "d2", "d3", "mpol_f2", "mpol_f3", "mpol_f4"];

fn slot<'a>(c: &'a mut BoundConstants<f64>, name: &str) -> Option<&'a mut f64> {
    Some(match name {
        "l1" => &mut c.l1,
        "c_apx" => &mut c.c_apx,
        "f1" => &mut c.f1,
        "f2" => &mut c.f2,
        "b1" => &mut c.b1,
        "b2" => &mut c.b2,
        "d1" => &mut c.d1,
        "d2" => &mut c.d2,
        "d3" => &mut c.d3,
        "mpol_f2" => &mut c.mpol_f2,
        "mpol_f3" => &mut c.mpol_f3,
        "mpol_f4" => &mut c.mpol_f4,
        _ => return None,
    })
}

/// Applies `name=value` overrides to the default constants and validates them.
pub fn constants_with_overrides(overrides: &[String]) -> Result<BoundConstants<f64>, CliError> {
    let mut c = BoundConstants::default();
    for item in overrides {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("constant override {item:?} is not of the form name=value")))?;
        let value: f64 =
            value.trim().parse().map_err(|_| CliError::Usage(format!("constant {name}: {value:?} is not a number")))?;
        let field = slot(&mut c, name.trim()).ok_or_else(|| {
            CliError::Usage(format!("unknown constant {name:?}; expected one of {}", CONSTANT_NAMES.join(", ")))
        })?;
        *field = value;
    }
    c.validate()?;
    Ok(c)
}

pub fn report(params: &SystemParams<f64>, c: &BoundConstants<f64>) -> BoundsReport<f64> {
    bounds_report(params, c)
}

/// Human-readable table, one `name value` pair per line.
pub fn table(params: &SystemParams<f64>, r: &BoundsReport<f64>) -> String {
    let rows: [(&str, String); 19] = [
        ("k", params.k().to_string()),
        ("rho", real(params.rho())),
        ("mu", real(params.mu())),
        ("beta", real(params.beta())),
        ("offered_load", real(params.offered_load())),
        ("q_approx", real(r.q_approx)),
        ("q_upper", real(r.q_upper)),
        ("q_lower", real(r.q_lower)),
        ("q_low_r", real(r.q_low_r)),
        ("t_approx", real(r.t_approx)),
        ("t_upper", real(r.t_upper)),
        ("t_lower", real(r.t_lower)),
        ("t_low_r", real(r.t_low_r)),
        ("t_erlang_c", real(r.t_erlang_c)),
        ("tightness_ratio", real(r.tightness_ratio)),
        ("in_region", r.in_region.to_string()),
        ("lower_available", r.lower_available.to_string()),
        ("lower_clamped", r.lower_clamped.to_string()),
        ("relative_setup", real(params.relative_setup())),
    ];
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    rows.iter().map(|(n, v)| format!("{n:<width$}  {v}\n")).collect()
}

pub fn csv(r: &BoundsReport<f64>) -> String {
    format!(
        "{CSV_HEADER}\n{},{},{},{},{},{},{},{}\n",
        real(r.q_approx),
        real(r.q_upper),
        real(r.q_lower),
        real(r.q_low_r),
        real(r.t_approx),
        real(r.t_erlang_c),
        real(r.tightness_ratio),
        r.in_region
    )
}
