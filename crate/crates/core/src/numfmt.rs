//! Number formatting shared by every text output.

use serde::Serializer;

/// Formats `v` with 17 significant digits (enough to round-trip any f64),
/// dropping trailing zeros. Plain notation is used for exponents in
/// `-5..17`, scientific otherwise. Non-finite values print as `NaN`, `inf`
/// or `-inf`.
pub fn fmt_g17(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// serde helper: writes an f64 as a raw JSON number with [`fmt_g17`].
/// Non-finite values become `null`.
pub fn ser_g17<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    use serde::Serialize;
    if v.is_finite() {
        let raw = serde_json::value::RawValue::from_string(fmt_g17(*v))
            .map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    } else {
        s.serialize_none()
    }
}

/// Same as [`ser_g17`] for optional values.
pub fn ser_opt_g17<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => ser_g17(x, s),
        None => s.serialize_none(),
    }
}
