//! Duration and byte-size texts as written in configtx.yaml.

/// Go-style duration (`2s`, `500ms`, `1m30s`, `1.5h`) in whole milliseconds.
/// Returns `None` for unknown units or malformed text.
pub fn parse_duration_ms(text: &str) -> Option<u64> {
    let s = text.trim();
    if s == "0" {
        return Some(0);
    }
    if s.is_empty() {
        return None;
    }
    let mut rest = s;
    let mut total_ns: f64 = 0.0;
    while !rest.is_empty() {
        let num_len = rest.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(rest.len());
        if num_len == 0 {
            return None;
        }
        let value: f64 = rest[..num_len].parse().ok()?;
        rest = &rest[num_len..];
        let unit_len = rest.find(|c: char| c.is_ascii_digit() || c == '.').unwrap_or(rest.len());
        let scale = match &rest[..unit_len] {
            "ns" => 1.0,
            "us" | "µs" | "μs" => 1e3,
            "ms" => 1e6,
            "s" => 1e9,
            "m" => 60e9,
            "h" => 3600e9,
            _ => return None,
        };
        total_ns += value * scale;
        rest = &rest[unit_len..];
    }
    Some((total_ns / 1e6).floor() as u64)
}

/// Byte sizes such as `99 MB`, `512KB` or a bare integer, 1024-based.
pub fn parse_bytes(text: &str) -> Option<u64> {
    let s = text.trim();
    let num_len = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    if num_len == 0 {
        return None;
    }
    let value: u64 = s[..num_len].parse().ok()?;
    let scale: u64 = match s[num_len..].trim().to_ascii_uppercase().as_str() {
        "" | "B" => 1,
        "K" | "KB" => 1 << 10,
        "M" | "MB" => 1 << 20,
        "G" | "GB" => 1 << 30,
        _ => return None,
    };
    value.checked_mul(scale)
}
