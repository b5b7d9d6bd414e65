use std::sync::Arc;

use arc_swap::ArcSwap;
use empathd_core::model::{validate_profile, Violation};
use empathd_core::ImpairmentProfile;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VersionedProfile {
    pub version: u64,
    #[serde(flatten)]
    pub profile: ImpairmentProfile,
}

/// Atomically swapped impairment profile. Readers take a snapshot and use
/// it for a whole frame; writers never wait for readers.
#[derive(Debug, Clone)]
pub struct ProfileStore {
    inner: Arc<ArcSwap<VersionedProfile>>,
}

impl Default for ProfileStore {
    fn default() -> Self {
        Self::from_valid(ImpairmentProfile::default())
    }
}

impl ProfileStore {
    pub fn new(profile: ImpairmentProfile) -> Result<Self, Vec<Violation>> {
        let v = validate_profile(&profile);
        if !v.is_empty() {
            return Err(v);
        }
        Ok(Self::from_valid(profile))
    }

    fn from_valid(profile: ImpairmentProfile) -> Self {
        ProfileStore {
            inner: Arc::new(ArcSwap::from_pointee(VersionedProfile {
                version: 1,
                profile,
            })),
        }
    }

    pub fn snapshot(&self) -> Arc<VersionedProfile> {
        self.inner.load_full()
    }

    pub fn version(&self) -> u64 {
        self.inner.load().version
    }

    /// Validates and installs `profile`, returning the new version.
    pub fn update(&self, profile: ImpairmentProfile) -> Result<u64, Vec<Violation>> {
        let v = validate_profile(&profile);
        if !v.is_empty() {
            return Err(v);
        }
        let prev = self.inner.rcu(|cur| {
            Arc::new(VersionedProfile {
                version: cur.version + 1,
                profile: profile.clone(),
            })
        });
        Ok(prev.version + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use empathd_core::FilterSpec;

    #[test]
    fn update_bumps_version_and_rejects_invalid() {
        let store = ProfileStore::default();
        assert_eq!(store.version(), 1);
        let v = store
            .update(ImpairmentProfile::new(vec![FilterSpec::cataract_from_severity(0.7)]))
            .unwrap();
        assert_eq!(v, 2);
        let bad = ImpairmentProfile::new(vec![FilterSpec::Glaucoma {
            inner_radius_frac: 0.8,
            outer_radius_frac: 0.2,
            blur_sigma_px: 1.0,
        }]);
        assert!(!store.update(bad).unwrap_err().is_empty());
        assert_eq!(store.version(), 2);
        assert_eq!(store.snapshot().profile.filters.len(), 1);
    }

    #[test]
    fn snapshot_is_stable_across_updates() {
        let store = ProfileStore::default();
        let snap = store.snapshot();
        store
            .update(ImpairmentProfile::new(vec![FilterSpec::hearing_loss(40.0)]))
            .unwrap();
        assert!(snap.profile.is_empty());
        assert_eq!(snap.version, 1);
    }

    #[test]
    fn concurrent_updates_get_distinct_versions() {
        let store = ProfileStore::default();
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let s = store.clone();
                std::thread::spawn(move || {
                    (0..50)
                        .map(|_| s.update(ImpairmentProfile::default()).unwrap())
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut all: Vec<u64> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 200);
        assert_eq!(store.version(), 201);
    }
}
