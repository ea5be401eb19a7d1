//! Certificates and block compositions produced by the library survive a
//! trip through CSV unchanged.

use sampgap::certify::{convolution_square_lower, interleaved_schedule, tail_block_lower, Certificate};
use sampgap::report::{
    certificate_from_row, certificate_row, read_block_rows, read_bound_reports, write_block_rows,
    write_bound_reports, BlockRow,
};
use sampgap::seq::{convolution_square, DecayTail, Profile};
use sampgap::trace_infty::{block_oracles, decay_value, select_indices};
use sampgap::{DecaySequence, SpectralSequence};

#[test]
fn produced_certificates_round_trip() {
    let mut certs: Vec<Certificate> = Vec::new();
    let mu = SpectralSequence::from_entries(2, [(0, 1.0), (1, 0.5), (2, 0.25)]).unwrap();
    let g = convolution_square(&mu).unwrap();
    for n in 0..4 {
        certs.push(convolution_square_lower(&g, n).unwrap());
    }
    let pl = SpectralSequence::power_log(0.5, 1.0, 3, 1 << 10).unwrap();
    for r in [1, 10, 100] {
        certs.push(tail_block_lower(&pl, r).unwrap());
    }
    let a = DecaySequence::power_log(0.5, 1.0, 3, 256).unwrap();
    certs.extend(interleaved_schedule(&a, 32).unwrap().into_iter().map(|e| e.certificate));

    let rows: Vec<_> = certs.iter().map(|c| certificate_row("mixed", c, 11)).collect();
    let mut buf = Vec::new();
    write_bound_reports(&mut buf, &rows).unwrap();
    let back = read_bound_reports(buf.as_slice()).unwrap();
    assert_eq!(back, rows);
    let parsed: Vec<Certificate> = back.iter().map(|r| certificate_from_row(r).unwrap()).collect();
    assert_eq!(parsed, certs);
}

#[test]
fn composition_rows_round_trip() {
    let sigma = DecaySequence::with_tail(
        vec![1.0],
        Some(DecayTail::Single(Profile::PowerLog {
            r: 0.5,
            beta: 0.0,
            scale: 1.0,
            stretch: 1.0,
            shift: 1.0,
        })),
    )
    .unwrap();
    // tau_n = ln(n+2)^-1 falls off faster, so the indices stay smaller
    let tau = DecaySequence::with_tail(
        vec![],
        Some(DecayTail::Single(Profile::PowerLog {
            r: 0.0,
            beta: 1.0,
            scale: 1.0,
            stretch: 1.0,
            shift: 2.0,
        })),
    )
    .unwrap();
    let idx = select_indices(&sigma, &tau, 5, 1e6).unwrap();
    let oracles = block_oracles(&sigma, &idx).unwrap();
    let rows: Vec<BlockRow> = oracles
        .iter()
        .map(|o| BlockRow::from_oracle(o, decay_value(&tau, o.start).unwrap()))
        .collect();
    assert!(rows.iter().all(|r| r.composed >= r.tau_start));
    let mut buf = Vec::new();
    write_block_rows(&mut buf, &rows).unwrap();
    assert_eq!(read_block_rows(buf.as_slice()).unwrap(), rows);
}
