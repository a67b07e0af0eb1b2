//! Persistent state carried between invocations.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::inference::PriorStore;
use crate::spec::Specification;

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub spec_hash: String,
    pub priors: PriorStore,
    /// Surprise history per invariant id, as `(iteration, surprise)`.
    pub histories: BTreeMap<String, Vec<(u64, f64)>>,
    pub iteration: u64,
    pub processed: Vec<String>,
}

/// SHA-256 of the canonical rendering, hex encoded.
pub fn spec_hash(spec: &Specification) -> String {
    Sha256::digest(spec.render().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Session {
    pub fn new(spec: &Specification, priors: PriorStore) -> Self {
        Session {
            spec_hash: spec_hash(spec),
            priors,
            histories: BTreeMap::new(),
            iteration: 0,
            processed: Vec::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path.as_ref())?;
        let session: Session = serde_json::from_str(&text)?;
        if session.iteration as usize != session.processed.len() {
            return Err(PipelineError::Session(format!(
                "iteration {} does not match {} processed traces",
                session.iteration,
                session.processed.len()
            )));
        }
        Ok(session)
    }

    /// Writes through a temporary file so a crash never leaves a torn session.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_string_pretty(self)? + "\n")?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn check_spec(&self, spec: &Specification) -> Result<(), PipelineError> {
        if self.spec_hash != spec_hash(spec) {
            return Err(PipelineError::Session(
                "specification differs from the one the session was started with".into(),
            ));
        }
        Ok(())
    }
}

/// Exclusive claim on a session path, released on drop.
#[derive(Debug)]
pub struct SessionLock {
    path: PathBuf,
}

impl SessionLock {
    pub fn acquire(session: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let mut name = session.as_ref().as_os_str().to_owned();
        name.push(".lock");
        let path = PathBuf::from(name);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(SessionLock { path }),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(PipelineError::SessionLocked(path)),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for SessionLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::PriorEntry;
    use crate::spec::parse_spec;

    fn spec(text: &str) -> Specification {
        parse_spec(text).unwrap()
    }

    #[test]
    fn round_trip_and_hash_check() {
        let a = spec("OUTCOMES o, INT-Eq, , o == 1, GIVENS g, INT-Eq, , g == 1,");
        let b = spec("OUTCOMES o, INT-Eq, , o == 2, GIVENS g, INT-Eq, , g == 1,");
        let mut priors = PriorStore::new();
        priors.insert("o == 1", PriorEntry { probability: 0.25, supporting_timesteps: 40 });
        let mut s = Session::new(&a, priors);
        s.histories.insert("x".into(), vec![(1, 1.5)]);
        s.iteration = 1;
        s.processed.push("t1.csv".into());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        s.save(&p).unwrap();
        let back = Session::load(&p).unwrap();
        assert_eq!(back, s);
        back.check_spec(&a).unwrap();
        assert!(matches!(back.check_spec(&b), Err(PipelineError::Session(_))));
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = spec("OUTCOMES o, INT-Eq, , o == 1, GIVENS g, INT-Eq, , g == 1,");
        let b = spec("OUTCOMES\n  o, INT-Eq, , o==1,\nGIVENS\n  g, INT-Eq, , g==1, # comment\n");
        assert_eq!(spec_hash(&a), spec_hash(&b));
        assert_eq!(spec_hash(&a).len(), 64);
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        let l = SessionLock::acquire(&p).unwrap();
        assert!(matches!(SessionLock::acquire(&p), Err(PipelineError::SessionLocked(_))));
        drop(l);
        SessionLock::acquire(&p).unwrap();
    }
}
