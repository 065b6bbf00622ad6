//! (x, t) ↔ (n, m) for the two parities of t − x.
//!
//! Parity + (t − x even): n = (t − x + 2)/2, m = (t + x)/2.
//! Parity − (t − x odd):  n = (t − x + 1)/2, m = (t + x + 1)/2.
//! n counts columns across the light cone (n = 1 on its edge), m counts
//! columns along it.

use crate::brute_force::Parity;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    /// x > t or x below the backward light cone: operators commute, C = 1.
    Outside,
    Inside { n: usize, m: usize, parity: Parity },
}

pub fn parity_of(x: i64, t: i64) -> Parity {
    if (t - x).rem_euclid(2) == 0 {
        Parity::Plus
    } else {
        Parity::Minus
    }
}

pub fn to_light_cone(x: i64, t: i64) -> Result<Location> {
    if t < 1 {
        return Err(Error::InvalidCoordinates(format!("t = {t} < 1")));
    }
    let parity = parity_of(x, t);
    let (n2, m2) = match parity {
        Parity::Plus => (t - x + 2, t + x),
        Parity::Minus => (t - x + 1, t + x + 1),
    };
    let (n, m) = (n2 / 2, m2 / 2);
    if n < 1 || m < 1 {
        return Ok(Location::Outside);
    }
    Ok(Location::Inside { n: n as usize, m: m as usize, parity })
}

pub fn from_light_cone(n: usize, m: usize, parity: Parity) -> (i64, i64) {
    let (n, m) = (n as i64, m as i64);
    match parity {
        Parity::Plus => (m - n + 1, n + m - 1),
        Parity::Minus => (m - n, n + m - 1),
    }
}
