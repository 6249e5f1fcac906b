use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Row `i - 1` holds `sqrt(2/M)·cos(π·i/M·(j − 0.5))` for `j = 1..=M`, `i = 1..=num_ceps`.
pub fn dct_matrix(num_filters: usize, num_ceps: usize) -> Result<Vec<Vec<f64>>> {
    if num_ceps > num_filters {
        return Err(Error::Config(format!(
            "cannot take {num_ceps} cepstral coefficients from {num_filters} filterbank channels"
        )));
    }
    let m = num_filters as f64;
    let scale = (2.0 / m).sqrt();
    Ok((1..=num_ceps)
        .map(|i| {
            (1..=num_filters)
                .map(|j| scale * (PI * i as f64 / m * (j as f64 - 0.5)).cos())
                .collect()
        })
        .collect())
}

/// Cepstral coefficients `C_1..C_N` of a log filterbank-energy vector.
pub fn dct_cepstra(log_energies: &[f64], num_ceps: usize) -> Result<Vec<f64>> {
    let basis = dct_matrix(log_energies.len(), num_ceps)?;
    Ok(apply_dct(&basis, log_energies))
}

pub(crate) fn apply_dct(basis: &[Vec<f64>], log_energies: &[f64]) -> Vec<f64> {
    basis
        .iter()
        .map(|row| row.iter().zip(log_energies).map(|(b, m)| b * m).sum())
        .collect()
}

/// Sinusoidal lifter weights `1 + (L/2)·sin(π·n/L)` for `n = 0..len`; all ones when `L = 0`.
pub fn lifter_weights(len: usize, lifter: u32) -> Vec<f64> {
    if lifter == 0 {
        return vec![1.0; len];
    }
    let l = f64::from(lifter);
    (0..len)
        .map(|n| 1.0 + 0.5 * l * (PI * n as f64 / l).sin())
        .collect()
}

pub fn lifter(cepstra: &[f64], lifter: u32) -> Vec<f64> {
    cepstra
        .iter()
        .zip(lifter_weights(cepstra.len(), lifter))
        .map(|(c, w)| c * w)
        .collect()
}
