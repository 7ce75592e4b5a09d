use mmpyramid::MmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("at line {line}, column {col}: {source}")]
    Eval {
        line: usize,
        col: usize,
        #[source]
        source: MmError,
    },
    #[error("{0}")]
    Core(#[from] MmError),
    #[error("{path}: {msg}")]
    File { path: String, msg: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// The budget flag that lifts a resource limit, if any applies.
    pub fn budget_hint(&self) -> Option<&'static str> {
        let msg = match self {
            CliError::Core(MmError::ResourceLimit(m)) | CliError::Eval { source: MmError::ResourceLimit(m), .. } => m,
            _ => return None,
        };
        let table = [
            ("box distance", "--box-pairs"),
            ("isomorphism", "--iso-points"),
            ("domination", "--dominance-points"),
            ("map search", "--dominance-points"),
            ("product", "--max-points"),
            ("power", "--max-points"),
            ("partial diameter", "--pdiam-points"),
            ("separation on", "--sep-points"),
            ("subset scan", "--subset-scan-points"),
            ("exceeded", "--search-nodes"),
        ];
        table.iter().find(|(k, _)| msg.contains(k)).map(|(_, v)| *v)
    }
}
