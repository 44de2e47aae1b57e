//! CSV output for sweep results.

use std::io::{self, Write};

use crate::harness::SimRecord;

pub const HEADER: &str = "scheme,sf,axis,axis_db,bits_sent,bit_errors,ber,symbol_errors,ser,throughput_bps,censored,seed";

/// Formats a float with six significant digits in the style of C's `%g`:
/// fixed notation for exponents in `-4..6`, scientific otherwise, trailing
/// zeros removed.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    // `{:e}` rounds first, so its exponent already accounts for carries
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn row(r: &SimRecord) -> [String; 12] {
    [
        r.scheme.to_string(),
        r.sf.sf().to_string(),
        r.axis.name().to_string(),
        fmt_g(r.axis_db),
        r.bits_sent.to_string(),
        r.bit_errors.to_string(),
        fmt_g(r.ber),
        r.symbol_errors.to_string(),
        fmt_g(r.ser),
        fmt_g(r.throughput_bps),
        r.censored.to_string(),
        r.seed.to_string(),
    ]
}

pub fn write_records<W: Write>(w: W, records: &[SimRecord]) -> io::Result<()> {
    let mut out = ::csv::Writer::from_writer(w);
    out.write_record(HEADER.split(','))?;
    for r in records {
        out.write_record(row(r))?;
    }
    out.flush()
}

pub fn to_string(records: &[SimRecord]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
