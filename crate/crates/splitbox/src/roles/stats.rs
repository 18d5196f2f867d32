//! Plain-text counter snapshots.
//!
//! Every role exposes its counters as `name value` lines, one per counter,
//! sorted by name — trivially diffable and greppable, and the same shape
//! across roles.

/// Renders counters as sorted `name value` lines (newline-terminated).
pub fn render_stats(pairs: &[(&str, u64)]) -> String {
    let mut sorted: Vec<_> = pairs.to_vec();
    sorted.sort_by_key(|(name, _)| *name);
    let mut out = String::new();
    for (name, value) in sorted {
        out.push_str(name);
        out.push(' ');
        out.push_str(&value.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_are_sorted_and_terminated() {
        let s = render_stats(&[("zeta", 3), ("alpha", 1), ("mid", 2)]);
        assert_eq!(s, "alpha 1\nmid 2\nzeta 3\n");
    }

    #[test]
    fn empty_renders_empty() {
        assert_eq!(render_stats(&[]), "");
    }
}
