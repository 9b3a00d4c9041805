//! Workspace-level acceptance run; see `tests/acceptance.rs`.
