//! Per-slot learning traces.

use std::io::Write;

use super::StepOutcome;
use crate::config::Scheme;
use crate::error::Result;
use crate::model::ContentId;

pub const TRACE_HEADER: [&str; 9] = ["slot", "content_id", "p1", "p2", "q1", "q2", "U_group", "U_publisher", "scheme"];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub slot: u64,
    pub content_id: ContentId,
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
    pub u_group: f64,
    pub u_publisher: f64,
    pub scheme: Scheme,
}

impl TraceRow {
    pub fn from_outcome(slot: u64, content_id: ContentId, o: &StepOutcome, scheme: Scheme) -> Self {
        Self {
            slot,
            content_id,
            p1: o.price.raw_price,
            p2: o.price.result_price,
            q1: o.qocs.raw_quality,
            q2: o.qocs.result_quality,
            u_group: o.u_group,
            u_publisher: o.u_publisher,
            scheme,
        }
    }

    pub fn mean_qocs(&self) -> f64 {
        0.5 * (self.q1 + self.q2)
    }
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    for r in rows {
        out.write_record([
            r.slot.to_string(),
            r.content_id.to_string(),
            r.p1.to_string(),
            r.p2.to_string(),
            r.q1.to_string(),
            r.q2.to_string(),
            r.u_group.to_string(),
            r.u_publisher.to_string(),
            r.scheme.name().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_rows() {
        let row = TraceRow { slot: 3, content_id: 7, p1: 1.25, p2: 0.0, q1: 0.5, q2: 1.0, u_group: 2.0, u_publisher: -0.1, scheme: Scheme::Spad };
        let mut buf = Vec::new();
        write_trace_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("slot,content_id,p1,p2,q1,q2,U_group,U_publisher,scheme"));
        assert_eq!(lines.next(), Some("3,7,1.25,0,0.5,1,2,-0.1,SPAD"));
        assert_eq!(lines.next(), None);
    }
}
