use std::fmt::Write;

/// One completed iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub iter: usize,
    pub loss: f64,
    /// Mean cosine between online and target representations.
    pub s_bar: f64,
    /// Mean Euclidean distance between online and target representations.
    pub d_bar: f64,
    pub probe_acc: Option<f64>,
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsLog {
    pub records: Vec<MetricsRecord>,
    /// Rows dropped from the loss or the predictor because their norm vanished.
    pub degenerate_rows: usize,
}

pub const METRICS_HEADER: &str = "iter,loss,s_bar,d_bar,probe_acc,wall_ms";

impl MetricsLog {
    pub fn push(&mut self, record: MetricsRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.iter < record.iter));
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&MetricsRecord> {
        self.records.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for r in &self.records {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iter,
                r.loss,
                r.s_bar,
                r.d_bar,
                opt(r.probe_acc),
                opt(r.wall_ms)
            )
            .expect("writing to a String");
        }
        out
    }
}
