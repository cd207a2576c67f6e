//! Statistical properties of the EEG simulator as seen through the PLV pipeline.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use assr_bci::dsp::{feature_vector, DspConfig};
use assr_bci::eegsim::{colored_noise, derive_seed, simulate_epoch, simulate_session, EpochLabel, SimConfig};
use assr_bci::session::ProtocolConfig;
use assr_bci::{Condition, Direction, StimulusKind};

fn label(f_m: f64, length: f64, attended: bool) -> EpochLabel {
    EpochLabel {
        f_m,
        direction: Direction::Center,
        attended,
        condition: Condition::new(StimulusKind::Sam, length),
        trial_index: 0,
    }
}

fn mean_plv(cfg: &SimConfig, l: EpochLabel, seeds: std::ops::Range<u64>) -> f64 {
    let dsp = DspConfig::default();
    let n = seeds.end - seeds.start;
    seeds
        .map(|s| {
            let e = simulate_epoch(cfg, l, derive_seed(s, &[17])).unwrap();
            let f = feature_vector(&e, l.f_m, &dsp).unwrap();
            f.values.iter().sum::<f64>() / f.values.len() as f64
        })
        .sum::<f64>()
        / n as f64
}

/// Frequency response of `taps` on an `m`-point grid over `[0, rate)`.
fn response(taps: &[f64], m: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = taps.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    buf.resize(m, Complex64::default());
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf
}

/// `2F1(1/2, 1/2; 2; x)` by its power series.
fn hyp2f1_half_half_2(x: f64) -> f64 {
    if x >= 1.0 {
        return 4.0 / PI;
    }
    let (mut term, mut sum) = (1.0, 1.0);
    for n in 0..200_000 {
        let n = n as f64;
        term *= (n + 0.5) * (n + 0.5) / ((n + 2.0) * (n + 1.0)) * x;
        sum += term;
        if term < 1e-12 {
            break;
        }
    }
    sum
}

/// Effective number of independent phase samples in the analysis window for
/// pure `1/f^α` noise: `L² / Σ_τ (L − |τ|) |ρ(τ)|²`, where `ρ` is the
/// autocorrelation of the unit phasor `z/|z|` of the band-limited analytic
/// noise. For circular Gaussian `z` with normalized autocorrelation `r`,
/// `|ρ| = (π/4) |r| 2F1(1/2, 1/2; 2; |r|²)`.
fn effective_window(dsp: &DspConfig, f_m: f64, rate: f64, len: usize, alpha: f64) -> f64 {
    let m = 1 << 15;
    let mut power = vec![Complex64::default(); m];
    let specs = [dsp.band_filter(), dsp.notch_filter(), dsp.narrow_filter(f_m)];
    let responses: Vec<Vec<Complex64>> = specs
        .iter()
        .map(|s| response(&s.design(rate, s.taps_for(rate, len).unwrap()), m))
        .collect();
    for (k, p) in power.iter_mut().enumerate().take(m / 2).skip(1) {
        let f = k as f64 * rate / m as f64;
        // Forward-backward filtering squares each magnitude response.
        let gain: f64 = responses.iter().map(|h| h[k].norm_sqr().powi(2)).product();
        *p = Complex64::new(gain * f.powf(-alpha), 0.0);
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut power);
    let r0 = power[0].re;
    let window = len - 2 * dsp.trim_len(len);
    let mut denom = window as f64;
    for tau in 1..window {
        let r = (power[tau].norm() / r0).min(1.0);
        let rho = PI / 4.0 * r * hyp2f1_half_half_2(r * r);
        denom += 2.0 * (window - tau) as f64 * rho * rho;
    }
    (window * window) as f64 / denom
}

#[test]
fn phasor_correlation_series_limits() {
    assert!((hyp2f1_half_half_2(0.0) - 1.0).abs() < 1e-15);
    // Closed form at x = 1 is 4/π; the series approaches it from below.
    let near = hyp2f1_half_half_2(0.999_999);
    assert!(near < 4.0 / PI && near > 4.0 / PI - 1e-2);
}

#[test]
fn pure_noise_plv_matches_effective_window_prediction() {
    let cfg = SimConfig {
        assr_amplitude: 0.0,
        n_channels: 8,
        ..SimConfig::default()
    };
    let dsp = DspConfig::default();
    let (f_m, length) = (40.0, 3.0);
    let len = (length * cfg.eeg_rate as f64) as usize;
    let l_eff = effective_window(&dsp, f_m, cfg.eeg_rate as f64, len, cfg.noise_exponent);
    let expected = (PI / (4.0 * l_eff)).sqrt();
    let observed = mean_plv(&cfg, label(f_m, length, false), 0..1000);
    println!("L_eff = {l_eff:.2}, expected {expected:.4}, observed {observed:.4}");
    assert!(l_eff > 2.0 && l_eff < (len as f64) / 10.0);
    assert!(
        (observed - expected).abs() <= 0.1 * expected,
        "observed {observed:.4} vs {expected:.4}"
    );
}

#[test]
fn noise_spectral_slope() {
    let (len, rate) = (4096, 512.0);
    let fft = FftPlanner::new().plan_fft_forward(len);
    for alpha in [0.5, 1.0, 2.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut psd = vec![0.0; len / 2];
        for _ in 0..40 {
            let x = colored_noise(&mut rng, len, rate, alpha);
            let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft.process(&mut buf);
            for (p, b) in psd.iter_mut().zip(&buf) {
                *p += b.norm_sqr();
            }
        }
        let pts: Vec<(f64, f64)> = (1..len / 2)
            .map(|k| (k as f64 * rate / len as f64, psd[k]))
            .filter(|&(f, _)| (1.0..=100.0).contains(&f))
            .map(|(f, p)| (f.log10(), p.log10()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope + alpha).abs() <= 0.3, "alpha {alpha}: slope {slope}");
    }
}

#[test]
fn plv_non_decreasing_in_snr() {
    let mut last = 0.0;
    for amp in [0.0, 0.05, 0.1, 0.2, 0.4, 1.0] {
        let cfg = SimConfig {
            assr_amplitude: amp,
            ..SimConfig::default()
        };
        let m = mean_plv(&cfg, label(40.0, 1.0, true), 0..20);
        assert!(m >= last, "amplitude {amp}: {m} < {last}");
        last = m;
    }
    assert!(last > 0.95);
}

#[test]
fn attended_epochs_lock_more_strongly() {
    for jitter in [SimConfig::default().ignored_phase_jitter, 0.0] {
        let cfg = SimConfig {
            ignored_phase_jitter: jitter,
            ..SimConfig::default()
        };
        for f_m in [25.0, 40.0, 60.0] {
            let att = mean_plv(&cfg, label(f_m, 1.0, true), 0..30);
            let ign = mean_plv(&cfg, label(f_m, 1.0, false), 0..30);
            assert!(att > ign, "jitter {jitter}, f_m {f_m}: {att} <= {ign}");
        }
    }
}

#[test]
fn session_layout() {
    let protocol = ProtocolConfig::default();
    let sets = simulate_session(&protocol, &SimConfig::default(), 3).unwrap();
    assert_eq!(sets.len(), 12);
    assert_eq!(sets.iter().map(|s| s.epochs.len()).sum::<usize>(), 1080);
    for set in &sets {
        assert_eq!(set.epochs.len(), 90);
        assert_eq!(set.epochs.iter().filter(|e| e.label.attended).count(), 30);
        for d in Direction::ALL {
            let of_dir: Vec<_> = set.epochs.iter().filter(|e| e.label.direction == d).collect();
            assert_eq!(of_dir.len(), 30);
            assert_eq!(of_dir.iter().filter(|e| e.label.attended).count(), 10);
            assert!(of_dir.iter().all(|e| e.label.f_m == protocol.directions.get(d)));
        }
        for (t, trial) in set.epochs.chunks(3).enumerate() {
            let target = Direction::ALL[t / 10];
            assert!(trial.iter().all(|e| e.label.trial_index == t));
            assert_eq!(trial.iter().filter(|e| e.label.attended).count(), 1);
            assert!(trial.iter().any(|e| e.label.attended && e.label.direction == target));
        }
        let expected_len = (set.condition.length_s() * 512.0).round() as usize;
        assert!(set.epochs.iter().all(|e| e.len() == expected_len));
    }
}
