//! Checks `dft_magnitudes` against a direct O(K^2) transform and Parseval's
//! identity. The oracle shares no code with the library path.

use prunekit_core::rng::PortableRng;
use prunekit_core::scoring::dft_magnitudes;

/// Direct one-sided magnitudes: |sum_t x_t * exp(-2*pi*i*m*t/K)| for
/// m in 0..=K/2.
fn direct_magnitudes(signal: &[f64]) -> Vec<f64> {
    let k = signal.len();
    let half = k / 2;
    (0..=half)
        .map(|m| {
            let mut re = 0.0f64;
            let mut im = 0.0f64;
            for (t, &x) in signal.iter().enumerate() {
                let angle = -std::f64::consts::TAU * (m as f64) * (t as f64) / (k as f64);
                re += x * angle.cos();
                im += x * angle.sin();
            }
            re.hypot(im)
        })
        .collect()
}

fn check_against_oracle(signal: &[f64]) {
    let got = dft_magnitudes(signal).unwrap();
    let want = direct_magnitudes(signal);
    assert_eq!(got.len(), want.len(), "K = {}", signal.len());
    for (m, (&g, &w)) in got.iter().zip(&want).enumerate() {
        assert!(
            (g - w).abs() <= 1e-9 * w.abs().max(1.0),
            "K = {}, bin {m}: {g} vs {w}",
            signal.len()
        );
    }
}

/// One-sided Parseval: sum_t x_t^2 == (1/K) * (|F_0|^2 + 2 * interior
/// + Nyquist once when K is even).
fn check_parseval(signal: &[f64]) {
    let k = signal.len();
    let mags = dft_magnitudes(signal).unwrap();
    let time_energy: f64 = signal.iter().map(|&x| x * x).sum();
    let mut freq_energy = mags[0] * mags[0];
    let even = k.is_multiple_of(2);
    let interior_end = if even { mags.len() - 1 } else { mags.len() };
    for &m in &mags[1..interior_end] {
        freq_energy += 2.0 * m * m;
    }
    if even && k > 1 {
        let ny = mags[mags.len() - 1];
        freq_energy += ny * ny;
    }
    freq_energy /= k as f64;
    assert!(
        (time_energy - freq_energy).abs() <= 1e-9 * time_energy.max(1.0),
        "K = {k}: {time_energy} vs {freq_energy}"
    );
}

#[test]
fn matches_direct_transform_on_random_signals() {
    let mut rng = PortableRng::seed_from_u64(7);
    for trial in 0..400 {
        let k = 2 + rng.below(255) as usize;
        let signal: Vec<f64> = (0..k).map(|_| rng.range_f64(-2.0, 2.0)).collect();
        check_against_oracle(&signal);
        if trial % 4 == 0 {
            check_parseval(&signal);
        }
    }
}

#[test]
fn matches_direct_transform_on_structured_signals() {
    for k in [2usize, 3, 4, 5, 8, 16, 17, 64, 150, 151, 256] {
        let impulse: Vec<f64> = (0..k).map(|t| if t == 0 { 1.0 } else { 0.0 }).collect();
        check_against_oracle(&impulse);
        check_parseval(&impulse);

        let ramp: Vec<f64> = (0..k).map(|t| t as f64 / k as f64).collect();
        check_against_oracle(&ramp);
        check_parseval(&ramp);

        if k >= 4 {
            let wave: Vec<f64> = (0..k)
                .map(|t| (std::f64::consts::TAU * 2.0 * t as f64 / k as f64).cos())
                .collect();
            check_against_oracle(&wave);
            check_parseval(&wave);
        }
    }
}

#[test]
fn single_tone_lands_in_one_bin() {
    let k = 64;
    let bin = 5;
    let signal: Vec<f64> = (0..k)
        .map(|t| (std::f64::consts::TAU * bin as f64 * t as f64 / k as f64).cos())
        .collect();
    let mags = dft_magnitudes(&signal).unwrap();
    for (m, &mag) in mags.iter().enumerate() {
        let want = if m == bin { k as f64 / 2.0 } else { 0.0 };
        assert!((mag - want).abs() <= 1e-9, "bin {m}: {mag} vs {want}");
    }
}

#[test]
fn constant_signal_has_only_dc() {
    let mags = dft_magnitudes(&[0.75; 40]).unwrap();
    assert!((mags[0] - 0.75 * 40.0).abs() <= 1e-9);
    for (m, &mag) in mags.iter().enumerate().skip(1) {
        assert!(mag.abs() <= 1e-9, "bin {m}: {mag}");
    }
}
