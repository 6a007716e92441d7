use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A malformed event record; `line` is 1-based.
    Parse { line: usize, message: String },
    /// Filtering removed every user or item.
    EmptyCorpus,
    /// Not enough users to fill every partition of a split.
    TooFewUsers { users: usize, partitions: usize },
    /// A behavior sequence shorter than the minimum the operation needs.
    SequenceTooShort { user: u32, len: usize, min: usize },
    EmptyHistory,
    ItemOutOfRange { item: u32, n_items: usize },
    Dimension(String),
    Checkpoint(String),
    NoNegativeCandidates,
    NonFinite(String),
    InvalidConfig(String),
    MissingSource(String),
    /// Mined labels are missing for these `(user, t)` training instances.
    CoverageGap(alloc::vec::Vec<(u32, usize)>),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, message } => write!(f, "parse error on line {line}: {message}"),
            Error::EmptyCorpus => write!(f, "empty corpus: filtering removed every user"),
            Error::TooFewUsers { users, partitions } => {
                write!(f, "cannot split {users} users into {partitions} partitions")
            }
            Error::SequenceTooShort { user, len, min } => {
                write!(f, "sequence of user {user} has {len} items, need at least {min}")
            }
            Error::EmptyHistory => write!(f, "history is empty"),
            Error::ItemOutOfRange { item, n_items } => {
                write!(f, "item index {item} out of range for {n_items} items")
            }
            Error::Dimension(m) => write!(f, "dimension mismatch: {m}"),
            Error::Checkpoint(m) => write!(f, "invalid checkpoint: {m}"),
            Error::NoNegativeCandidates => {
                write!(f, "exclusion set leaves no candidates for negative sampling")
            }
            Error::NonFinite(m) => write!(f, "non-finite value: {m}"),
            Error::InvalidConfig(m) => write!(f, "invalid configuration: {m}"),
            Error::MissingSource(m) => write!(f, "missing weak-supervision artifact: {m}"),
            Error::CoverageGap(missing) => {
                write!(f, "mined table is missing {} training instances", missing.len())?;
                for (u, t) in missing.iter().take(10) {
                    write!(f, " (user {u}, t {t})")?;
                }
                if missing.len() > 10 {
                    write!(f, " ...")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for Error {}
