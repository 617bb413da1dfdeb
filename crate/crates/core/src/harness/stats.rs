//! Counter export.

use crate::index::{IndexMode, Stats};
use crate::ordering::OrderKind;

pub const CSV_HEADER: [&str; 17] = [
    "script",
    "mode",
    "order",
    "queries",
    "answers",
    "demodulators",
    "tods",
    "created_term",
    "created_success",
    "created_pos",
    "processed_term",
    "processed_success",
    "processed_pos",
    "traversed_term",
    "traversed_success",
    "traversed_pos",
    "naive_comparisons",
];

#[derive(Clone, Debug)]
pub struct StatsRow {
    pub script: String,
    pub mode: IndexMode,
    pub order: OrderKind,
    pub stats: Stats,
}

impl StatsRow {
    fn fields(&self) -> Vec<String> {
        let s = &self.stats;
        let mut out = vec![self.script.clone(), self.mode.to_string(), self.order.to_string()];
        out.extend(
            [
                s.queries,
                s.answers,
                s.demodulators,
                s.tods,
                s.created.term,
                s.created.success,
                s.created.pos,
                s.processed.term,
                s.processed.success,
                s.processed.pos,
                s.traversed.term,
                s.traversed.success,
                s.traversed.pos,
                s.naive_comparisons,
            ]
            .iter()
            .map(u64::to_string),
        );
        out
    }
}

pub fn emit_stats_csv(rows: &[StatsRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in rows {
        w.write_record(row.fields()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gives_header_only() {
        let text = emit_stats_csv(&[]);
        assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn one_row_per_report() {
        let stats = Stats {
            queries: 2,
            answers: 3,
            ..Default::default()
        };
        let row = StatsRow {
            script: "worked".into(),
            mode: IndexMode::SharedByLhs,
            order: OrderKind::Kbo,
            stats,
        };
        let text = emit_stats_csv(&[row]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "worked,shared,kbo,2,3,0,0,0,0,0,0,0,0,0,0,0,0");
    }
}
