//! Within-class versus between-class feature distances across two devices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};
use crate::pose::Label;

/// Normalised distances of one feature, one entry per complete subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDistances {
    pub feature: String,
    pub subjects: Vec<String>,
    pub aa: Vec<f64>,
    pub nn: Vec<f64>,
    pub na: Vec<f64>,
    pub mean_aa: f64,
    pub mean_nn: f64,
    pub mean_na: f64,
    /// Largest raw N-A distance, used as the divisor (0 leaves values raw).
    pub scale: f64,
}

impl FeatureDistances {
    /// Both within-class means strictly below the between-class mean.
    pub fn separates(&self) -> bool {
        self.mean_aa < self.mean_na && self.mean_nn < self.mean_na
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    /// The two device identifiers, in the order used for "P" and "T".
    pub devices: [String; 2],
    pub subjects: Vec<String>,
    pub skipped_subjects: Vec<String>,
    pub features: Vec<FeatureDistances>,
    /// Share of reported features for which [`FeatureDistances::separates`] holds.
    pub separating_fraction: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per feature and subject: A-A = |A_T - A_P|, N-N = |N_T - N_P| and
/// N-A = mean(|A_T - N_P|, |N_T - A_P|), all divided by the largest N-A over subjects.
///
/// The table must hold exactly two device identifiers; the one sorting first
/// plays "P". Subjects lacking one of the four recordings are skipped, and a
/// subject missing a feature value is left out of that feature only.
pub fn distance_study(m: &FeatureMatrix) -> Result<DistanceReport> {
    let devices: std::collections::BTreeSet<&str> = m.meta().iter().map(|r| r.device.as_str()).collect();
    if devices.len() != 2 {
        return Err(Error::InsufficientData(format!("expected two devices, found {}", devices.len())));
    }
    let devices: Vec<&str> = devices.into_iter().collect();
    // subject -> [N_P, N_T, A_P, A_T]
    let mut roles: BTreeMap<&str, [Option<usize>; 4]> = BTreeMap::new();
    for (i, r) in m.meta().iter().enumerate() {
        let class = match r.label {
            Label::Normal => 0,
            Label::Abnormal => 2,
            Label::Unlabeled => continue,
        };
        let dev = usize::from(r.device == devices[1]);
        let slot = &mut roles.entry(r.subject_id.as_str()).or_default()[class + dev];
        if slot.is_some() {
            return Err(Error::Schema(format!("subject {} has two {:?} recordings on {}", r.subject_id, r.label, r.device)));
        }
        *slot = Some(i);
    }
    let mut complete = Vec::new();
    let mut skipped = Vec::new();
    for (s, r) in &roles {
        match r {
            [Some(np), Some(nt), Some(ap), Some(at)] => complete.push((s.to_string(), [*np, *nt, *ap, *at])),
            _ => {
                log::warn!("subject {s} lacks one of the four recordings; skipped");
                skipped.push(s.to_string());
            }
        }
    }
    if complete.is_empty() {
        return Err(Error::InsufficientData("no subject has all four recordings".into()));
    }
    let mut features = Vec::new();
    for (j, name) in m.names().iter().enumerate() {
        let mut fd = FeatureDistances {
            feature: name.clone(),
            subjects: Vec::new(),
            aa: Vec::new(),
            nn: Vec::new(),
            na: Vec::new(),
            mean_aa: 0.0,
            mean_nn: 0.0,
            mean_na: 0.0,
            scale: 0.0,
        };
        for (s, idx) in &complete {
            let v = idx.map(|i| m.values()[i][j]);
            let [Some(np), Some(nt), Some(ap), Some(at)] = v else { continue };
            fd.subjects.push(s.clone());
            fd.aa.push((at - ap).abs());
            fd.nn.push((nt - np).abs());
            fd.na.push(0.5 * ((at - np).abs() + (nt - ap).abs()));
        }
        if fd.subjects.is_empty() {
            log::warn!("feature {name} has no complete subject; left out of the distance study");
            continue;
        }
        fd.scale = fd.na.iter().copied().fold(0.0, f64::max);
        if fd.scale > 0.0 {
            for v in fd.aa.iter_mut().chain(fd.nn.iter_mut()).chain(fd.na.iter_mut()) {
                *v /= fd.scale;
            }
        }
        fd.mean_aa = mean(&fd.aa);
        fd.mean_nn = mean(&fd.nn);
        fd.mean_na = mean(&fd.na);
        features.push(fd);
    }
    if features.is_empty() {
        return Err(Error::InsufficientData("no feature has a complete subject".into()));
    }
    let separating_fraction = features.iter().filter(|f| f.separates()).count() as f64 / features.len() as f64;
    Ok(DistanceReport {
        devices: [devices[0].to_string(), devices[1].to_string()],
        subjects: complete.into_iter().map(|(s, _)| s).collect(),
        skipped_subjects: skipped,
        features,
        separating_fraction,
    })
}
