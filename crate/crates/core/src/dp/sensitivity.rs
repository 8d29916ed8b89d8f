use crate::data::{Dataset, Record};
use crate::group::Group;
use crate::loss::BoundedLoss;
use crate::risk::{weighted_gap, Predict};

/// Brute-force sensitivity of the weighted-gap query
/// `P_n(g) (L_n(f|g) - L_n(h|g))` under single-record replacement.
///
/// Every record of `data` is replaced in turn by every record of `universe`;
/// the largest absolute change of the query is returned. `f` and `h` are held
/// fixed. Cost is `O(n^2 |universe|)`, so this is for small `n` only.
pub fn query_sensitivity_oracle<F: Predict + ?Sized, H: Predict + ?Sized>(
    data: &Dataset,
    f: &F,
    h: &H,
    loss: &BoundedLoss,
    group: &Group,
    universe: &[Record],
) -> f64 {
    let base = weighted_gap(data, f, h, loss, group);
    let mut worst = 0.0f64;
    for i in 0..data.len() {
        for r in universe {
            let Ok(neighbor) = data.with_replaced(i, r.clone()) else {
                continue;
            };
            let v = weighted_gap(&neighbor, f, h, loss, group);
            worst = worst.max((v - base).abs());
        }
    }
    worst
}
