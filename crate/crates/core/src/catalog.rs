//! QoS parameter catalog: priority-ordered parameter lists per protocol
//! layer and service type, plus the directed "influences" relation.
//!
//! The catalog is loaded from a versioned JSON document and is immutable
//! afterwards, so it can be shared freely across threads. The shipped
//! default data file covers the three service types (voice, video, data)
//! across the application, network and physical layers, plus a stock
//! influence relation. Users can extend the graph with their own edges
//! tagged [`Provenance::UserSupplied`].

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Protocol layer a QoS parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Application,
    Network,
    Physical,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::Application, Layer::Network, Layer::Physical];

    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Application => "application",
            Layer::Network => "network",
            Layer::Physical => "physical",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "application" | "app" => Ok(Layer::Application),
            "network" | "net" => Ok(Layer::Network),
            "physical" | "phy" => Ok(Layer::Physical),
            other => Err(format!(
                "unknown layer `{other}` (expected application, network or physical)"
            )),
        }
    }
}

/// Service type a QoS parameter applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Service {
    Voice,
    Video,
    Data,
}

impl Service {
    pub const ALL: [Service; 3] = [Service::Voice, Service::Video, Service::Data];

    pub fn as_str(self) -> &'static str {
        match self {
            Service::Voice => "voice",
            Service::Video => "video",
            Service::Data => "data",
        }
    }
}

impl fmt::Display for Service {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Service {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "voice" => Ok(Service::Voice),
            "video" => Ok(Service::Video),
            "data" => Ok(Service::Data),
            other => Err(format!(
                "unknown service `{other}` (expected voice, video or data)"
            )),
        }
    }
}

/// Where an influence edge comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Part of the relation shipped with the default data file.
    Stock,
    /// Added by a user extending the shipped graph.
    UserSupplied,
}

/// One (layer, service) slot a parameter occupies, with its priority rank
/// within that slot's list (1 = highest priority).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub layer: Layer,
    pub service: Service,
    pub priority_rank: u32,
}

/// A named QoS metric and every (layer, service) list it appears in.
///
/// A parameter that shows up in several service columns is a single entity
/// with one placement per column, so graph queries see one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QosParameter {
    pub id: String,
    pub display_name: String,
    pub placements: Vec<Placement>,
}

impl QosParameter {
    /// Rank of this parameter within the given (layer, service) list, if placed there.
    pub fn rank(&self, layer: Layer, service: Service) -> Option<u32> {
        self.placements
            .iter()
            .find(|p| p.layer == layer && p.service == service)
            .map(|p| p.priority_rank)
    }
}

/// Directed "influences" relation: degradation of `influencer` can degrade
/// `influenced`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub influencer: String,
    pub influenced: String,
    pub provenance: Provenance,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog document does not match the schema: {0}")]
    Schema(String),
    #[error("unsupported schema_version {0} (this build reads version 1)")]
    SchemaVersion(u32),
    #[error("duplicate parameter id `{0}`")]
    DuplicateId(String),
    #[error("parameter `{0}` has an empty placements list")]
    EmptyPlacements(String),
    #[error("parameter `{id}` has priority_rank 0 in {layer}/{service} (ranks start at 1)")]
    ZeroRank {
        id: String,
        layer: Layer,
        service: Service,
    },
    #[error("parameter `{id}` is placed more than once in {layer}/{service}")]
    DuplicatePlacement {
        id: String,
        layer: Layer,
        service: Service,
    },
    #[error("duplicate priority_rank {rank} in {layer}/{service}: `{first}` and `{second}`")]
    DuplicateRank {
        layer: Layer,
        service: Service,
        rank: u32,
        first: String,
        second: String,
    },
    #[error(
        "{layer}/{service} ranks are not contiguous from 1: no parameter holds rank {missing}"
    )]
    RankGap {
        layer: Layer,
        service: Service,
        missing: u32,
    },
    #[error("edge `{influencer}` -> `{influenced}` references unknown parameter `{unknown}`")]
    DanglingEdge {
        influencer: String,
        influenced: String,
        unknown: String,
    },
    #[error("edge `{0}` -> `{0}` is a self-loop")]
    SelfLoop(String),
    #[error("unknown parameter `{key}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownParameter {
        key: String,
        suggestion: Option<String>,
    },
}

#[derive(Debug, Deserialize)]
struct CatalogFile {
    schema_version: u32,
    parameters: Vec<ParameterRecord>,
    edges: Vec<DependencyEdge>,
}

#[derive(Debug, Deserialize)]
struct ParameterRecord {
    id: String,
    display_name: String,
    placements: Vec<PlacementRecord>,
}

/// File-level placement: one layer, the services in that layer's column
/// sharing the same rank.
#[derive(Debug, Deserialize)]
struct PlacementRecord {
    layer: Layer,
    services: Vec<Service>,
    priority_rank: u32,
}

/// Validated, immutable catalog of QoS parameters and influence edges.
#[derive(Debug, Clone)]
pub struct Catalog {
    parameters: Vec<QosParameter>,
    edges: Vec<DependencyEdge>,
    index: HashMap<String, usize>,
    forward: Vec<Vec<usize>>,
    reverse: Vec<Vec<usize>>,
}

/// Parse and validate a catalog from its JSON document form.
pub fn load_catalog(json: &str) -> Result<Catalog, CatalogError> {
    Catalog::from_json(json)
}

impl Catalog {
    /// The data file shipped with the crate.
    pub const DEFAULT_JSON: &'static str = include_str!("../data/qos_catalog.json");

    /// The shipped default catalog. Its validity is covered by tests, so
    /// the expect here cannot fire on a released build.
    pub fn shipped_default() -> Catalog {
        Catalog::from_json(Self::DEFAULT_JSON).expect("shipped catalog data is valid")
    }

    pub fn from_json(json: &str) -> Result<Catalog, CatalogError> {
        let file: CatalogFile =
            serde_json::from_str(json).map_err(|e| CatalogError::Schema(e.to_string()))?;
        if file.schema_version != 1 {
            return Err(CatalogError::SchemaVersion(file.schema_version));
        }

        let mut parameters = Vec::with_capacity(file.parameters.len());
        let mut index = HashMap::new();
        for record in file.parameters {
            if index.contains_key(&record.id) {
                return Err(CatalogError::DuplicateId(record.id));
            }
            let mut placements = Vec::new();
            for placement in &record.placements {
                for &service in &placement.services {
                    if placement.priority_rank == 0 {
                        return Err(CatalogError::ZeroRank {
                            id: record.id,
                            layer: placement.layer,
                            service,
                        });
                    }
                    if placements
                        .iter()
                        .any(|p: &Placement| p.layer == placement.layer && p.service == service)
                    {
                        return Err(CatalogError::DuplicatePlacement {
                            id: record.id,
                            layer: placement.layer,
                            service,
                        });
                    }
                    placements.push(Placement {
                        layer: placement.layer,
                        service,
                        priority_rank: placement.priority_rank,
                    });
                }
            }
            if placements.is_empty() {
                return Err(CatalogError::EmptyPlacements(record.id));
            }
            index.insert(record.id.clone(), parameters.len());
            parameters.push(QosParameter {
                id: record.id,
                display_name: record.display_name,
                placements,
            });
        }

        // Every (layer, service) list must carry unique, contiguous ranks from 1.
        for layer in Layer::ALL {
            for service in Service::ALL {
                let mut by_rank: HashMap<u32, &str> = HashMap::new();
                for param in &parameters {
                    if let Some(rank) = param.rank(layer, service) {
                        if let Some(first) = by_rank.insert(rank, &param.id) {
                            return Err(CatalogError::DuplicateRank {
                                layer,
                                service,
                                rank,
                                first: first.to_owned(),
                                second: param.id.clone(),
                            });
                        }
                    }
                }
                for rank in 1..=by_rank.len() as u32 {
                    if !by_rank.contains_key(&rank) {
                        return Err(CatalogError::RankGap {
                            layer,
                            service,
                            missing: rank,
                        });
                    }
                }
            }
        }

        let mut forward = vec![Vec::new(); parameters.len()];
        let mut reverse = vec![Vec::new(); parameters.len()];
        for edge in &file.edges {
            let missing = if !index.contains_key(&edge.influencer) {
                Some(&edge.influencer)
            } else if !index.contains_key(&edge.influenced) {
                Some(&edge.influenced)
            } else {
                None
            };
            if let Some(unknown) = missing {
                return Err(CatalogError::DanglingEdge {
                    influencer: edge.influencer.clone(),
                    influenced: edge.influenced.clone(),
                    unknown: unknown.clone(),
                });
            }
            if edge.influencer == edge.influenced {
                return Err(CatalogError::SelfLoop(edge.influencer.clone()));
            }
            let from = index[&edge.influencer];
            let to = index[&edge.influenced];
            forward[from].push(to);
            reverse[to].push(from);
        }

        Ok(Catalog {
            parameters,
            edges: file.edges,
            index,
            forward,
            reverse,
        })
    }

    pub fn parameters(&self) -> &[QosParameter] {
        &self.parameters
    }

    pub fn edges(&self) -> &[DependencyEdge] {
        &self.edges
    }

    pub fn get(&self, id: &str) -> Option<&QosParameter> {
        self.index.get(id).map(|&i| &self.parameters[i])
    }

    /// Look a parameter up by id, falling back to its exact display name.
    /// Unknown keys come back with a nearest-match suggestion.
    pub fn resolve(&self, key: &str) -> Result<&QosParameter, CatalogError> {
        if let Some(param) = self.get(key) {
            return Ok(param);
        }
        if let Some(param) = self.parameters.iter().find(|p| p.display_name == key) {
            return Ok(param);
        }
        Err(CatalogError::UnknownParameter {
            key: key.to_owned(),
            suggestion: self.nearest(key),
        })
    }

    /// All parameters placed in the given (layer, service) list, ascending
    /// by priority rank. Empty when the list has no entries.
    pub fn parameters_by_priority(&self, service: Service, layer: Layer) -> Vec<&QosParameter> {
        let mut out: Vec<(&QosParameter, u32)> = self
            .parameters
            .iter()
            .filter_map(|p| p.rank(layer, service).map(|rank| (p, rank)))
            .collect();
        out.sort_by_key(|&(_, rank)| rank);
        out.into_iter().map(|(p, _)| p).collect()
    }

    /// Transitive closure of "influences" starting at `id`, excluding `id`
    /// itself. Cycles are fine: the walk keeps a visited set.
    pub fn dependents_of(&self, id: &str) -> Result<Vec<&QosParameter>, CatalogError> {
        self.closure(id, &self.forward)
    }

    /// Transitive closure over reversed edges: everything whose degradation
    /// can degrade `id`.
    pub fn influencers_of(&self, id: &str) -> Result<Vec<&QosParameter>, CatalogError> {
        self.closure(id, &self.reverse)
    }

    fn closure(
        &self,
        id: &str,
        adjacency: &[Vec<usize>],
    ) -> Result<Vec<&QosParameter>, CatalogError> {
        let start = *self
            .index
            .get(id)
            .ok_or_else(|| CatalogError::UnknownParameter {
                key: id.to_owned(),
                suggestion: self.nearest(id),
            })?;
        let mut visited = HashSet::new();
        visited.insert(start);
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            for &next in &adjacency[node] {
                if visited.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        visited.remove(&start);
        let mut out: Vec<&QosParameter> =
            visited.into_iter().map(|i| &self.parameters[i]).collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    fn nearest(&self, key: &str) -> Option<String> {
        let key = key.to_ascii_lowercase();
        self.parameters
            .iter()
            .map(|p| {
                let by_id = levenshtein(&key, &p.id.to_ascii_lowercase());
                let by_name = levenshtein(&key, &p.display_name.to_ascii_lowercase());
                (by_id.min(by_name), &p.id)
            })
            .min_by_key(|&(d, id)| (d, id.clone()))
            .map(|(_, id)| id.clone())
    }
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            curr[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}
