/// Rounds to `digits` significant digits and prints the shortest decimal
/// that parses back to the rounded value.
pub fn number(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = digits.clamp(1, 17);
    let rounded: f64 = format!("{:.*e}", digits - 1, x)
        .parse()
        .expect("valid float literal");
    // normalize −0
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:?}")
}

pub fn optional(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| "inf".into(), |v| number(v, digits))
}

/// Parses a field written by [`number`].
pub fn parse(field: &str) -> Option<f64> {
    match field.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        s => s.parse().ok(),
    }
}
