use std::str::FromStr;

/// Strictly increasing list of positive sequence lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MGrid(pub Vec<u32>);

impl FromStr for MGrid {
    type Err = String;

    /// Comma-separated values and inclusive `a..b` ranges.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim) {
            if let Some((a, b)) = part.split_once("..") {
                let a: u32 = a.trim().parse().map_err(|_| format!("bad range start in '{part}'"))?;
                let b: u32 = b.trim().parse().map_err(|_| format!("bad range end in '{part}'"))?;
                if b < a {
                    return Err(format!("empty range '{part}'"));
                }
                out.extend(a..=b);
            } else {
                out.push(part.parse().map_err(|_| format!("bad length '{part}'"))?);
            }
        }
        if out.is_empty() {
            return Err("empty m grid".into());
        }
        if out.windows(2).any(|w| w[0] >= w[1]) {
            return Err("m grid must be strictly increasing".into());
        }
        Ok(MGrid(out))
    }
}
