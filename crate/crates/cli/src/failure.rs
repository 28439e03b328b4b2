use std::fmt;

/// Everything a command can fail with, mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Core(drag_readout::Error),
    Validation(String),
    Io(String),
    /// Self-test criteria failed; the lines are already printed.
    Selftest(usize),
}

impl From<drag_readout::Error> for Failure {
    fn from(e: drag_readout::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    pub fn code(&self) -> &'static str {
        match self {
            Failure::Core(e) => e.code(),
            Failure::Validation(_) => "validation",
            Failure::Io(_) => "io",
            Failure::Selftest(_) => "selftest",
        }
    }

    pub fn exit_code(&self) -> i32 {
        use drag_readout::Error as E;
        match self {
            Failure::Core(E::Resolution(_) | E::Fit(_)) => 3,
            Failure::Core(_) | Failure::Validation(_) => 2,
            Failure::Io(_) => 4,
            Failure::Selftest(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    /// `error:<code>:<detail>` on a single line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let detail = match self {
            Failure::Core(e) => e.to_string(),
            Failure::Validation(s) | Failure::Io(s) => s.clone(),
            Failure::Selftest(n) => format!("{n} criteria failed"),
        };
        write!(f, "error:{}:{}", self.code(), detail.replace('\n', " "))
    }
}
