//! Sweep tables as CSV.

use std::fmt::Write as _;

use bellpoly::epsrho::SweepRow;

pub const HEADER: &str = "rho,epsilon,e_ab,e_ab2,e_a2b,e_a2b2,chsh,violates,regime";
pub const MC_HEADER: &str = ",mc_chsh,mc_stderr";

/// `printf("%.12g")`: twelve significant digits, trailing zeros dropped,
/// exponent form outside `[1e-5, 1e12)`. Negative zero prints as `0`.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    strip_zeros(&format!("{x:.decimals$}"))
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn render(rows: &[SweepRow]) -> String {
    let with_mc = rows.iter().any(|r| r.mc.is_some());
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    if with_mc {
        out.push_str(MC_HEADER);
    }
    out.push('\n');
    for r in rows {
        let nums = [r.rho, r.epsilon, r.e_ab, r.e_ab2, r.e_a2b, r.e_a2b2, r.chsh].map(fmt_g12);
        write!(out, "{},{},{}", nums.join(","), u8::from(r.violates), r.regime.as_str()).unwrap();
        if with_mc {
            let (c, s) = r.mc.map_or((f64::NAN, f64::NAN), |m| (m.chsh, m.stderr));
            write!(out, ",{},{}", fmt_g12(c), fmt_g12(s)).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_g12(2.0 * std::f64::consts::SQRT_2), "2.82842712475");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(0.05), "0.05");
        assert_eq!(fmt_g12(-0.0), "0");
        assert_eq!(fmt_g12(-0.7071067811865476), "-0.707106781187");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g12(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g12(123456.0), "123456");
        assert_eq!(fmt_g12(0.0001234), "0.0001234");
    }
}
