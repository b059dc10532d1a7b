//! Locale-free number formatting and small argument parsers.

/// `%g`-style rendering with `digits` significant digits and trailing zeros removed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let exp_sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), exp_sign, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

/// Six significant digits, the format of every float in CSV output.
pub fn fmt6(x: f64) -> String {
    fmt_sig(x, 6)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Panel sizes given as `a:b:n` (n evenly spaced sizes from a to b, rounded,
/// deduplicated) or as a comma-separated list.
pub fn parse_sizes(spec: &str) -> Result<Vec<usize>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err("empty size list".into());
    }
    let sizes: Vec<usize> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected a:b:n, got {spec:?}"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| format!("{s:?} is not a non-negative integer"));
        let (a, b, n) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if n == 0 || a > b || (n == 1 && a != b) {
            return Err(format!("invalid range {spec:?}"));
        }
        if n == 1 {
            vec![a]
        } else {
            let step = (b - a) as f64 / (n - 1) as f64;
            (0..n).map(|i| (a as f64 + step * i as f64).round() as usize).collect()
        }
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| format!("{:?} is not a non-negative integer", s.trim())))
            .collect::<Result<_, _>>()?
    };
    let mut sorted = sizes.clone();
    sorted.dedup();
    if sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(format!("sizes must be increasing: {spec:?}"));
    }
    Ok(sorted)
}
