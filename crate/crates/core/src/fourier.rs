//! Pseudo-spectral operations on uniform periodic grids of the unit torus.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Integer wavenumber stored at each FFT index.
pub fn wavenumbers(m: usize) -> Vec<i64> {
    (0..m).map(|i| if i <= m / 2 { i as i64 } else { i as i64 - m as i64 }).collect()
}

fn forward(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(x.len()).process(&mut buf);
    buf
}

fn inverse_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let m = buf.len();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    buf.iter().map(|c| c.re / m as f64).collect()
}

/// Multiplies every Fourier mode by a real, even symbol `s(k)`.
pub fn apply_even_symbol(x: &[f64], symbol: impl Fn(i64) -> f64) -> Vec<f64> {
    let mut buf = forward(x);
    for (c, k) in buf.iter_mut().zip(wavenumbers(x.len())) {
        *c *= symbol(k);
    }
    inverse_real(buf)
}

/// Spectral second derivative on the unit torus.
pub fn laplacian(x: &[f64]) -> Vec<f64> {
    apply_even_symbol(x, |k| -(2.0 * PI * k as f64).powi(2))
}

/// Spectral first derivative; the Nyquist mode of even grids is dropped.
pub fn derivative(x: &[f64]) -> Vec<f64> {
    let m = x.len();
    let mut buf = forward(x);
    for (c, k) in buf.iter_mut().zip(wavenumbers(m)) {
        if m.is_multiple_of(2) && k == (m / 2) as i64 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, 2.0 * PI * k as f64);
        }
    }
    inverse_real(buf)
}

/// Trigonometric interpolation `x(θ + s)` of grid data.
pub fn shift(x: &[f64], s: f64) -> Vec<f64> {
    let m = x.len();
    let mut buf = forward(x);
    for (c, k) in buf.iter_mut().zip(wavenumbers(m)) {
        let phase = 2.0 * PI * k as f64 * s;
        if m.is_multiple_of(2) && k == (m / 2) as i64 {
            *c *= phase.cos();
        } else {
            *c *= Complex64::new(phase.cos(), phase.sin());
        }
    }
    inverse_real(buf)
}

/// Resamples grid data onto `m_new` nodes by trigonometric interpolation.
pub fn resample(x: &[f64], m_new: usize) -> Vec<f64> {
    let m = x.len();
    if m == m_new {
        return x.to_vec();
    }
    let coeffs = forward(x);
    let scale = m_new as f64 / m as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); m_new];
    let nyquist_old = (m.is_multiple_of(2)).then_some((m / 2) as i64);
    let nyquist_new = (m_new.is_multiple_of(2)).then_some((m_new / 2) as i64);
    for (c, k) in coeffs.iter().zip(wavenumbers(m)) {
        let c = c * scale;
        if m_new > m {
            if Some(k) == nyquist_old {
                // Split the old Nyquist mode between +k and -k.
                out[k as usize] += c * 0.5;
                out[m_new - k as usize] += c * 0.5;
            } else {
                out[k.rem_euclid(m_new as i64) as usize] += c;
            }
        } else {
            let kn = nyquist_new.unwrap_or(i64::MAX);
            if k.abs() < kn && 2 * k.abs() < m_new as i64 {
                out[k.rem_euclid(m_new as i64) as usize] += c;
            } else if k.abs() == kn {
                // The cosine parts of +k and -k alias onto the new Nyquist node.
                out[kn as usize] += c;
            }
        }
    }
    if let Some(kn) = nyquist_new.filter(|_| m_new < m) {
        out[kn as usize] = Complex64::new(out[kn as usize].re, 0.0);
    }
    inverse_real(out)
}

/// Dense matrix of the spectral second derivative (symmetric circulant).
pub fn laplacian_matrix(m: usize) -> nalgebra::DMatrix<f64> {
    let mut unit = vec![0.0; m];
    unit[0] = 1.0;
    let column = laplacian(&unit);
    nalgebra::DMatrix::from_fn(m, m, |i, j| column[(i + m - j) % m])
}
