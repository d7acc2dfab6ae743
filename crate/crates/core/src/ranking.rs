use std::cmp::Ordering;

/// Indices of the `n` highest scores, descending, ties broken by the
/// lexicographic order of `label(i)`. `n` larger than the input is clamped.
pub(crate) fn top_n_by<'a, L>(scores: &[f64], n: usize, label: L) -> Vec<usize>
where
    L: Fn(usize) -> &'a str,
{
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| label(a).cmp(label(b)))
    });
    order.truncate(n.min(scores.len()));
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_are_lexicographic() {
        let words = ["b", "a", "c"];
        let ranked = top_n_by(&[0.5, 0.5, 0.9], 3, |i| words[i]);
        assert_eq!(ranked, vec![2, 1, 0]);
    }

    #[test]
    fn clamps_to_len() {
        let words = ["x"];
        assert_eq!(top_n_by(&[1.0], 10, |i| words[i]), vec![0]);
    }
}
