//! Stderr logging gated by `AMS_LOG_LEVEL`.

#[derive(PartialEq, PartialOrd)]
pub enum Level {
    Quiet,
    Info,
    Debug,
}

pub fn level() -> Level {
    match std::env::var("AMS_LOG_LEVEL").as_deref() {
        Ok("quiet") => Level::Quiet,
        Ok("debug") => Level::Debug,
        _ => Level::Info,
    }
}

pub fn info(message: impl AsRef<str>) {
    if level() >= Level::Info {
        eprintln!("[ams] {}", message.as_ref());
    }
}

pub fn debug(message: impl AsRef<str>) {
    if level() >= Level::Debug {
        eprintln!("[ams:debug] {}", message.as_ref());
    }
}
