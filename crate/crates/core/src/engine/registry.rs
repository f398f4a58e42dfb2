use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Engine, GillespieEngine, PoissonEngine};
use crate::error::{Error, Result};

/// Engines by name.
#[derive(Clone)]
pub struct EngineRegistry {
    engines: BTreeMap<&'static str, Arc<dyn Engine>>,
}

impl EngineRegistry {
    pub fn empty() -> Self {
        Self { engines: BTreeMap::new() }
    }

    /// Registers an engine. Fails if the name is taken.
    pub fn register(&mut self, engine: Arc<dyn Engine>) -> Result<()> {
        let name = engine.name();
        if self.engines.contains_key(name) {
            return Err(Error::Precondition(format!("engine '{name}' already registered")));
        }
        self.engines.insert(name, engine);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Engine>> {
        self.engines.get(name).cloned().ok_or_else(|| Error::UnknownEngine(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.engines.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Engine>> {
        self.engines.values()
    }
}

impl Default for EngineRegistry {
    /// The stream engine (`poisson`) and the generator oracle (`gillespie`).
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(PoissonEngine)).expect("fresh registry");
        reg.register(Arc::new(GillespieEngine)).expect("fresh registry");
        reg
    }
}

impl std::fmt::Debug for EngineRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.engines.keys()).finish()
    }
}
