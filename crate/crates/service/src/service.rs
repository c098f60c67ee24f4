//! The session registry shared by all requests.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use partsketch_core::engine::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};
use crate::session::{DesignSession, SessionInfo, DEFAULT_CANVAS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub class: String,
    pub representative: String,
    pub models: usize,
    pub categories: Vec<String>,
}

/// Body of a session creation request; missing λ values use the engine
/// defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub class: String,
    #[serde(default)]
    pub lambda1: Option<f64>,
    #[serde(default)]
    pub lambda2: Option<f64>,
}

/// Sessions keyed by id. The engine is shared read-only; each session sits
/// behind its own lock so requests on one session run one at a time.
pub struct SessionService {
    engine: Arc<Engine>,
    sessions: Mutex<BTreeMap<String, Arc<Mutex<DesignSession>>>>,
    next_id: AtomicU64,
    canvas: usize,
}

impl SessionService {
    pub fn new(engine: Arc<Engine>) -> SessionService {
        SessionService::with_canvas(engine, DEFAULT_CANVAS)
    }

    pub fn with_canvas(engine: Arc<Engine>, canvas: usize) -> SessionService {
        SessionService {
            engine,
            sessions: Mutex::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
            canvas,
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn classes(&self) -> Vec<ClassInfo> {
        let db = &self.engine.db;
        db.representatives
            .iter()
            .map(|(class, &rep)| {
                let models: Vec<_> = db.models.iter().filter(|m| &m.class == class).collect();
                let categories: BTreeSet<String> = models
                    .iter()
                    .flat_map(|m| m.parts.iter().map(|&p| db.parts[p].category.clone()))
                    .collect();
                ClassInfo {
                    class: class.clone(),
                    representative: db.models[rep].id.clone(),
                    models: models.len(),
                    categories: categories.into_iter().collect(),
                }
            })
            .collect()
    }

    pub fn create(&self, req: &CreateSession) -> ServiceResult<SessionInfo> {
        let rc = &self.engine.config.retrieval;
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let session = DesignSession::new(
            &self.engine,
            id.clone(),
            &req.class,
            req.lambda1.unwrap_or(rc.lambda1),
            req.lambda2.unwrap_or(rc.lambda2),
            self.canvas,
        )?;
        let info = session.info(&self.engine);
        self.sessions
            .lock()
            .unwrap()
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(info)
    }

    pub fn session(&self, id: &str) -> ServiceResult<Arc<Mutex<DesignSession>>> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    /// Runs `f` with exclusive access to session `id`.
    pub fn with<R>(
        &self,
        id: &str,
        f: impl FnOnce(&mut DesignSession, &Engine) -> ServiceResult<R>,
    ) -> ServiceResult<R> {
        let s = self.session(id)?;
        let mut guard = s.lock().unwrap_or_else(|e| e.into_inner());
        f(&mut guard, &self.engine)
    }

    pub fn delete(&self, id: &str) -> ServiceResult<()> {
        self.sessions
            .lock()
            .unwrap()
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.lock().unwrap().keys().cloned().collect()
    }
}
