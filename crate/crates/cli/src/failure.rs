use lmcanvas_core::store::StoreError;
use lmcanvas_core::{BlockId, CanvasError, ProviderError};
use lmcanvas_service::ServiceError;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Document,
    Provider,
}

/// A command failure: what to print and which exit code to use.
#[derive(Debug)]
pub struct Failure {
    pub category: Category,
    pub error: String,
    pub message: String,
    pub cycle: Option<Vec<BlockId>>,
}

impl Failure {
    fn new(category: Category, error: impl Into<String>, message: impl Into<String>) -> Self {
        Self { category, error: error.into(), message: message.into(), cycle: None }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Category::Usage, "UsageError", message)
    }

    pub fn document(error: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(Category::Document, error, message)
    }

    pub fn provider(message: impl Into<String>) -> Self {
        Self::new(Category::Provider, "ProviderError", message)
    }

    pub fn exit_code(&self) -> u8 {
        match self.category {
            Category::Usage => 1,
            Category::Document => 2,
            Category::Provider => 3,
        }
    }

    pub fn report(&self, as_json: bool) {
        if as_json {
            let mut body = json!({"error": self.error, "message": self.message});
            if let Some(cycle) = &self.cycle {
                body["cycle"] = json!(cycle);
            }
            eprintln!("{body}");
        } else {
            eprintln!("error[{}]: {}", self.error, self.message);
        }
    }
}

impl From<CanvasError> for Failure {
    fn from(e: CanvasError) -> Self {
        let mut failure = Self::document(e.name(), e.to_string());
        if let CanvasError::CycleDetected { cycle } = &e {
            failure.cycle = Some(cycle.clone());
        }
        failure
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            // A cyclic file never loads, so the cycle is reported as such.
            StoreError::Integrity { cycle: Some(ref cycle), .. } => {
                let mut failure = Self::document("CycleDetected", e.to_string());
                failure.cycle = Some(cycle.clone());
                failure
            }
            e => Self::document(e.name(), e.to_string()),
        }
    }
}

impl From<ProviderError> for Failure {
    fn from(e: ProviderError) -> Self {
        Self::provider(e.to_string())
    }
}

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Io(e) => Self::document("IoError", e.to_string()),
            ServiceError::Provider(e) => e.into(),
        }
    }
}
