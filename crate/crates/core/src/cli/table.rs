/// 17 significant digits: enough to reproduce any `f64` exactly.
pub(super) fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub(super) struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub(super) fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Table { writer }
    }

    pub(super) fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        self.writer.write_record(fields.iter().map(AsRef::as_ref)).expect("writing to memory");
    }

    pub(super) fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("flushing to memory");
        String::from_utf8(bytes).expect("fields are UTF-8")
    }
}
