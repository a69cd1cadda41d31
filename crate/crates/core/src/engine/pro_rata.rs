//! Proportional allocation with largest-remainder rounding.

use alloc::vec::Vec;

use crate::types::Qty;

/// Splits `incoming` across resting quantities `resting` (given in time priority order).
///
/// Each order gets `floor(incoming * q_i / total)`; the leftover shares go one at a
/// time to the largest fractional remainders, earlier orders winning ties. When
/// `incoming >= total` every order is filled in full.
pub fn allocate(incoming: Qty, resting: &[Qty]) -> Vec<Qty> {
    let total: u128 = resting.iter().map(|q| q.0 as u128).sum();
    if total == 0 {
        return alloc::vec![Qty::ZERO; resting.len()];
    }
    let q_in = incoming.0 as u128;
    if q_in >= total {
        return resting.to_vec();
    }

    let mut shares = Vec::with_capacity(resting.len());
    // Fractional parts compared as numerators over the common denominator `total`.
    let mut remainders = Vec::with_capacity(resting.len());
    let mut allocated: u128 = 0;
    for (i, q) in resting.iter().enumerate() {
        let num = q_in * q.0 as u128;
        let floor = num / total;
        shares.push(floor);
        remainders.push((num % total, i));
        allocated += floor;
    }

    let mut leftover = q_in - allocated;
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in &remainders {
        if leftover == 0 {
            break;
        }
        shares[i] += 1;
        leftover -= 1;
    }
    debug_assert_eq!(leftover, 0);

    shares.into_iter().map(|s| Qty(s as u64)).collect()
}
