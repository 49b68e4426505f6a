use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure a platform operation can report.
///
/// [`Error::code`] gives the stable machine name used on the wire.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("name already in use: {0}")]
    NameConflict(String),
    #[error("user {0} is not a member of the workspace")]
    NotAMember(String),
    #[error("name must not be empty")]
    EmptyName,
    #[error("operation requires a higher role")]
    Forbidden,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("move would create a cycle")]
    Cycle,
    #[error("a sibling named {0:?} already exists")]
    SiblingConflict(String),
    #[error("undelete window of {days} days has expired")]
    WindowExpired { days: i64 },
    #[error("dataset is locked pending a publication decision")]
    DatasetLocked,

    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("values violate schema for properties {0:?}")]
    SchemaViolation(Vec<String>),
    #[error("endpoints belong to different datasets")]
    CrossDataset,
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("unknown property {0:?}")]
    UnknownProperty(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("file {path:?} declares {size} bytes, above the per-file limit")]
    FileTooLarge { path: String, size: u64 },
    #[error("duplicate manifest path {0:?}")]
    DuplicatePath(String),
    #[error("chunk offset mismatch, expected {expected}")]
    OffsetMismatch { expected: u64 },
    #[error("no manifest entry for {0:?}")]
    EntryNotFound(String),
    #[error("chunk would exceed declared size {declared}")]
    Overflow { declared: u64 },
    #[error("manifest is finalized")]
    ManifestFinalized,
    #[error("entry incomplete: {received} of {declared} bytes received")]
    Incomplete { received: u64, declared: u64 },
    #[error("entry {0:?} failed verification and must be reset")]
    EntryFailed(String),

    #[error("owner role can only be assigned by ownership transfer")]
    OwnerViaGrant,

    #[error("missing publication fields {0:?}")]
    MissingFields(Vec<String>),
    #[error("dataset has no verified files")]
    EmptyDataset,
    #[error("datasets above the free publication size require a justification")]
    JustificationRequired,
    #[error("reviewer is not on the workspace publishing team")]
    NotOnPublishingTeam,
    #[error("submitter cannot review their own request")]
    SelfReview,
    #[error("illegal transition {event} from state {state}")]
    IllegalTransition { state: String, event: String },
    #[error("embargo of {0} days exceeds one year")]
    EmbargoTooLong(u32),
    #[error("unknown DOI {0:?}")]
    UnknownDoi(String),
    #[error("unknown version {0}")]
    UnknownVersion(u32),
    #[error("{pending} objects are being restored from archive, retry later")]
    PendingRestore { pending: usize },

    #[error("object {0:?} is archived and must be restored first")]
    TierNotReadable(String),
    #[error("requester-pays object needs a payer token")]
    PayerRequired,
    #[error("object {0:?} is not deleted")]
    NotDeleted(String),
    #[error("object {0:?} is not archived")]
    NotArchived(String),

    #[error("persistence failure: {0}")]
    Persistence(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotFound(_) => "NotFound",
            Error::NameConflict(_) => "NameConflict",
            Error::NotAMember(_) => "NotAMember",
            Error::EmptyName => "EmptyName",
            Error::Forbidden => "Forbidden",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Cycle => "Cycle",
            Error::SiblingConflict(_) => "SiblingConflict",
            Error::WindowExpired { .. } => "WindowExpired",
            Error::DatasetLocked => "DatasetLocked",
            Error::InvalidSchema(_) => "InvalidSchema",
            Error::SchemaViolation(_) => "SchemaViolation",
            Error::CrossDataset => "CrossDataset",
            Error::UnknownModel(_) => "UnknownModel",
            Error::UnknownProperty(_) => "UnknownProperty",
            Error::TypeMismatch(_) => "TypeMismatch",
            Error::FileTooLarge { .. } => "FileTooLarge",
            Error::DuplicatePath(_) => "DuplicatePath",
            Error::OffsetMismatch { .. } => "OffsetMismatch",
            Error::EntryNotFound(_) => "EntryNotFound",
            Error::Overflow { .. } => "Overflow",
            Error::ManifestFinalized => "ManifestFinalized",
            Error::Incomplete { .. } => "Incomplete",
            Error::EntryFailed(_) => "EntryFailed",
            Error::OwnerViaGrant => "OwnerViaGrant",
            Error::MissingFields(_) => "MissingFields",
            Error::EmptyDataset => "EmptyDataset",
            Error::JustificationRequired => "JustificationRequired",
            Error::NotOnPublishingTeam => "NotOnPublishingTeam",
            Error::SelfReview => "SelfReview",
            Error::IllegalTransition { .. } => "IllegalTransition",
            Error::EmbargoTooLong(_) => "EmbargoTooLong",
            Error::UnknownDoi(_) => "UnknownDOI",
            Error::UnknownVersion(_) => "UnknownVersion",
            Error::PendingRestore { .. } => "PendingRestore",
            Error::TierNotReadable(_) => "TierNotReadable",
            Error::PayerRequired => "PayerRequired",
            Error::NotDeleted(_) => "NotDeleted",
            Error::NotArchived(_) => "NotArchived",
            Error::Persistence(_) => "Persistence",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Persistence(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Persistence(err.to_string())
    }
}
