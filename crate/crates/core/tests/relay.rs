use latcf::dither::{gaussian_at, DitherSource};
use latcf::rates::{relay_rate_rprime, two_hop_rate};
use latcf::relay::{
    dest_decode_relay, relay_decode_scale, relay_encode, simulate_cf, CfCodebooks, CfConfig, PropagationMode,
};

/// Message and relay rates at 60% of their ideal bounds.
fn backed_off(k1: u64) -> CfConfig {
    let p1: f64 = 6.7337;
    let d = 1.0 + p1 / (p1 + 1.0);
    let p2 = (p1 + 1.0) * (2f64.powf(2.0 * 2.0 / 0.6) - 1.0);
    CfConfig {
        p1,
        p2,
        n2: 1.0,
        n3: 1.0,
        d,
        dim: 8,
        blocks: 50,
        k1,
        k2: 4,
        kq: 4,
        seed: 3,
        ..CfConfig::default()
    }
}

#[test]
fn combined_residual_matches_effective_noise() {
    let cfg = backed_off(2);
    let rep = simulate_cf::<f64>(&cfg, 100, None).unwrap();
    let z = (rep.comb_residual_var - rep.comb_residual_pred).abs() / rep.comb_residual_se;
    assert!(
        z < 3.0,
        "var {} pred {} ({z} SE)",
        rep.comb_residual_var,
        rep.comb_residual_pred
    );
    // With the design distortion in place of the measured one this is N_eff.
    assert!((rep.eq_second_moment - cfg.d).abs() / cfg.d < 0.02);
    assert!((rep.comb_residual_pred - rep.n_eff).abs() / rep.n_eff < 0.02);
}

#[test]
fn message_error_non_increasing_as_rate_drops() {
    let errs: Vec<f64> = [6u64, 5, 4, 3]
        .iter()
        .map(|&k1| simulate_cf::<f64>(&backed_off(k1), 40, None).unwrap().msg_err)
        .collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
}

#[test]
fn chained_never_beats_genie() {
    // Relay link near its limit so relay-codeword errors actually occur.
    let cfg = CfConfig {
        p2: 60.0,
        ..backed_off(2)
    };
    let chained = simulate_cf::<f64>(&cfg, 60, None).unwrap();
    let genie = simulate_cf::<f64>(
        &CfConfig {
            mode: PropagationMode::GenieReset,
            ..cfg
        },
        60,
        None,
    )
    .unwrap();
    assert!(chained.t2_err > 0.0);
    assert!(
        chained.msg_err >= genie.msg_err,
        "{} < {}",
        chained.msg_err,
        genie.msg_err
    );
}

fn relay_link_error_rate(cfg: &CfConfig, blocks: u64) -> f64 {
    let books: CfCodebooks<f64> = cfg.codebooks().unwrap();
    let beta = relay_decode_scale(cfg.p1, cfg.p2, cfg.n3);
    let size = books.c2.codebook_size();
    let mut errors = 0;
    for b in 0..blocks {
        let i = (b as u128 * 7919) % size;
        let u2 = DitherSource::at(5, "U2", b).next(books.c2.coarse()).unwrap();
        let x2 = relay_encode(&books.c2, i, &u2).unwrap();
        // X1 treated as noise: Gaussian with the source power.
        let x1: Vec<f64> = gaussian_at(5, "X1", b, cfg.dim, cfg.p1);
        let z3: Vec<f64> = gaussian_at(5, "Z3", b, cfg.dim, cfg.n3);
        let y3: Vec<f64> = (0..cfg.dim).map(|j| x2[j] + x1[j] + z3[j]).collect();
        let (_, idx) = dest_decode_relay(&books.c2, &y3, &u2, beta).unwrap();
        if idx != i {
            errors += 1;
        }
    }
    errors as f64 / blocks as f64
}

#[test]
fn relay_link_threshold() {
    let good = backed_off(2);
    assert!((good.rate_prime() - 0.6 * relay_rate_rprime(good.p1, good.p2, good.n3).unwrap()).abs() < 1e-9);
    assert!(relay_link_error_rate(&good, 1000) < 1e-2);
    // R' = 2 bits against a link that carries about 0.1 bit: decoding is a guess.
    let bad = CfConfig { p2: 2.0, ..good };
    assert!(relay_link_error_rate(&bad, 1000) > 0.99);
}

#[test]
fn backed_off_message_rate_decodes() {
    let cfg = backed_off(2);
    let ideal = two_hop_rate(cfg.p1, cfg.n2, cfg.n3, cfg.d).unwrap();
    assert!((cfg.rate() - 0.6 * ideal).abs() < 1e-3);
    let rep = simulate_cf::<f64>(&cfg, 20, None).unwrap();
    assert!(rep.msg_err < 0.1, "{}", rep.msg_err);
}
