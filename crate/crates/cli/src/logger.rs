//! One JSON object per line on standard error.

use std::io::Write;

use log::{Level, Log, Metadata, Record};

struct JsonLines {
    level: Level,
}

impl Log for JsonLines {
    fn enabled(&self, metadata: &Metadata) -> bool {
        metadata.level() <= self.level
    }

    fn log(&self, record: &Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let line = serde_json::json!({
            "level": record.level().as_str().to_ascii_lowercase(),
            "target": record.target(),
            "msg": record.args().to_string(),
        });
        let mut err = std::io::stderr().lock();
        let _ = writeln!(err, "{line}");
    }

    fn flush(&self) {
        let _ = std::io::stderr().flush();
    }
}

pub fn init(level: Level) {
    if log::set_logger(Box::leak(Box::new(JsonLines { level }))).is_ok() {
        log::set_max_level(level.to_level_filter());
    }
}
