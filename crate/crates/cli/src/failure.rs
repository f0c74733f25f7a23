use std::fmt;

/// Machine-readable failure class, printed as `error[CATEGORY]` and mapped
/// to a distinct exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Config,
    Input,
    Numeric,
    Io,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Usage => "USAGE",
            Category::Config => "CONFIG",
            Category::Input => "INPUT",
            Category::Numeric => "NUMERIC",
            Category::Io => "IO",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage => 2,
            Category::Config => 3,
            Category::Input => 4,
            Category::Numeric => 5,
            Category::Io => 6,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub category: Category,
    pub message: String,
}

impl Failure {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self { category, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Category::Config, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category.name(), self.message)
    }
}

impl From<liushrink::Error> for Failure {
    fn from(e: liushrink::Error) -> Self {
        use liushrink::Error as E;
        let category = match &e {
            E::InvalidInput(_) | E::Dimension(_) | E::DegenerateColumn(_) | E::Parse { .. } | E::MissingColumn(_) | E::Unsupported(_) => {
                Category::Input
            }
            E::Io(_) => Category::Io,
            _ => Category::Numeric,
        };
        Failure::new(category, e.to_string())
    }
}
