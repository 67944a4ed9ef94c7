//! Local edge-quality measures: the per-pair reward signals the learner
//! feeds back into its weights.
//!
//! All measures look only at the current candidate graph and its clustering.
//! Base measures score in `[0, 1]`; `consistent` variants flip the sign for
//! pairs the clustering separates, scoring in `[-1, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Clustering, Graph};

/// Logarithm used in the neighborhood-overlap damping term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    Natural,
    Base2,
    Base10,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Base2 => x.log2(),
            LogBase::Base10 => x.log10(),
        }
    }
}

/// Cluster agreement: 1 when the clustering puts `u` and `v` together,
/// else 0.
pub fn ec(c: &Clustering, u: usize, v: usize) -> f64 {
    if c.same_cluster(u, v) {
        1.0
    } else {
        0.0
    }
}

/// Neighborhood overlap `|N(u) ∩ N(v)| / (|N(u) ∩ N(v)| + log |V|)`.
///
/// The additive log term damps small accidental overlaps on large vertex
/// sets. Panics if the graph has fewer than two vertices, where the damping
/// term degenerates.
pub fn neighborhood_overlap(g: &Graph, u: usize, v: usize, base: LogBase) -> f64 {
    let n = g.vertex_count();
    assert!(n >= 2, "neighborhood overlap needs at least 2 vertices, got {n}");
    let shared = g.common_neighbors(u, v) as f64;
    shared / (shared + base.log(n as f64))
}

/// Jaccard similarity of the neighbor sets; 0 when both are empty.
pub fn jaccard(g: &Graph, u: usize, v: usize) -> f64 {
    let shared = g.common_neighbors(u, v) as f64;
    let union = g.degree(u) as f64 + g.degree(v) as f64 - shared;
    if union == 0.0 {
        0.0
    } else {
        shared / union
    }
}

/// Dice similarity `2|N(u) ∩ N(v)| / (|N(u)| + |N(v)|)`; 0 when both
/// neighborhoods are empty.
pub fn dice(g: &Graph, u: usize, v: usize) -> f64 {
    let total = (g.degree(u) + g.degree(v)) as f64;
    if total == 0.0 {
        0.0
    } else {
        2.0 * g.common_neighbors(u, v) as f64 / total
    }
}

/// Signs a base score by cluster agreement: `+base` together, `-base` apart.
pub fn consistent(base: f64, same_cluster: bool) -> f64 {
    if same_cluster {
        base
    } else {
        -base
    }
}

/// Ground-truth reward: +1 for pairs the reference clustering joins, -1 for
/// pairs it separates.
pub fn oracle(c: &Clustering, u: usize, v: usize) -> f64 {
    if c.same_cluster(u, v) {
        1.0
    } else {
        -1.0
    }
}

/// The quality measures the engine can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QualityKind {
    Ec,
    No,
    ConsistentNo,
    Jaccard,
    Dice,
    ConsistentJaccard,
    ConsistentDice,
    Oracle,
}

impl QualityKind {
    pub fn name(self) -> &'static str {
        match self {
            QualityKind::Ec => "ec",
            QualityKind::No => "no",
            QualityKind::ConsistentNo => "consistentno",
            QualityKind::ConsistentJaccard => "consistentjaccard",
            QualityKind::ConsistentDice => "consistentdice",
            QualityKind::Jaccard => "jaccard",
            QualityKind::Dice => "dice",
            QualityKind::Oracle => "oracle",
        }
    }
}

/// A configured quality measure: the measure kind, the overlap log base,
/// and, for the oracle, the reference clustering.
#[derive(Debug, Clone)]
pub struct QualitySpec {
    pub kind: QualityKind,
    pub log_base: LogBase,
    pub oracle: Option<Clustering>,
}

impl QualitySpec {
    pub fn new(kind: QualityKind) -> Self {
        QualitySpec {
            kind,
            log_base: LogBase::default(),
            oracle: None,
        }
    }

    pub fn ec() -> Self {
        Self::new(QualityKind::Ec)
    }

    pub fn consistent_no() -> Self {
        Self::new(QualityKind::ConsistentNo)
    }

    /// Oracle reward against a fixed reference clustering.
    pub fn oracle(reference: Clustering) -> Self {
        QualitySpec {
            kind: QualityKind::Oracle,
            log_base: LogBase::default(),
            oracle: Some(reference),
        }
    }

    pub fn with_log_base(mut self, base: LogBase) -> Self {
        self.log_base = base;
        self
    }

    pub fn with_oracle(mut self, reference: Clustering) -> Self {
        self.oracle = Some(reference);
        self
    }

    /// Looks up a non-oracle measure by CLI-style name.
    pub fn by_name(name: &str) -> Result<Self> {
        let kind = match name.to_lowercase().replace(['-', '_'], "").as_str() {
            "ec" => QualityKind::Ec,
            "no" => QualityKind::No,
            "consistentno" => QualityKind::ConsistentNo,
            "jaccard" => QualityKind::Jaccard,
            "dice" => QualityKind::Dice,
            "consistentjaccard" => QualityKind::ConsistentJaccard,
            "consistentdice" => QualityKind::ConsistentDice,
            "oracle" => QualityKind::Oracle,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown quality measure '{other}' (known: ec, no, consistentno, jaccard, \
                     dice, consistentjaccard, consistentdice, oracle)"
                )))
            }
        };
        Ok(Self::new(kind))
    }

    /// Whether the measure reads the round clustering at all. Measures that
    /// do cannot run under the null clusterer.
    pub fn requires_clustering(&self) -> bool {
        matches!(
            self.kind,
            QualityKind::Ec
                | QualityKind::ConsistentNo
                | QualityKind::ConsistentJaccard
                | QualityKind::ConsistentDice
        )
    }

    /// Scores one pair against the candidate graph and its clustering.
    ///
    /// Panics if the measure needs a clustering and none is given, or if the
    /// oracle reference is missing; engine configuration validation rules
    /// both out up front.
    pub fn reward(&self, g: &Graph, clustering: Option<&Clustering>, u: usize, v: usize) -> f64 {
        let same = |c: Option<&Clustering>| {
            c.expect("quality measure needs a clustering").same_cluster(u, v)
        };
        match self.kind {
            QualityKind::Ec => {
                if same(clustering) {
                    1.0
                } else {
                    0.0
                }
            }
            QualityKind::No => neighborhood_overlap(g, u, v, self.log_base),
            QualityKind::Jaccard => jaccard(g, u, v),
            QualityKind::Dice => dice(g, u, v),
            QualityKind::ConsistentNo => {
                consistent(neighborhood_overlap(g, u, v, self.log_base), same(clustering))
            }
            QualityKind::ConsistentJaccard => consistent(jaccard(g, u, v), same(clustering)),
            QualityKind::ConsistentDice => consistent(dice(g, u, v), same(clustering)),
            QualityKind::Oracle => {
                let reference = self.oracle.as_ref().expect("oracle quality needs a reference");
                oracle(reference, u, v)
            }
        }
    }
}
