//! The unified network model.
//!
//! Every frontend produces a [`Fragment`]; [`merge_sources`] folds the
//! fragments of one network into an immutable [`NetworkModel`] that the
//! pattern engine reads. Nothing here touches the filesystem.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::policy::PolicyAst;

/// Where something came from: a path relative to the network directory plus
/// an optional 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceLocation {
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<u32>,
}

impl SourceLocation {
    pub fn file(file: impl Into<String>) -> Self {
        let file = file.into();
        debug_assert!(!file.is_empty());
        Self { file, line: None, column: None }
    }

    pub fn at(file: impl Into<String>, line: u32) -> Self {
        Self { line: Some(line), ..Self::file(file) }
    }

    pub fn at_column(file: impl Into<String>, line: u32, column: u32) -> Self {
        Self { line: Some(line), column: Some(column), ..Self::file(file) }
    }

    /// Same position without the column.
    pub fn line_only(&self) -> Self {
        Self { file: self.file.clone(), line: self.line, column: None }
    }
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{}:{}", self.file, l, c),
            (Some(l), None) => write!(f, "{}:{}", self.file, l),
            _ => f.write_str(&self.file),
        }
    }
}

/// The five canonical configuration file roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileRole {
    CryptoConfig,
    Configtx,
    Compose,
    StartScript,
    ChannelScript,
}

impl FileRole {
    pub const ALL: [FileRole; 5] = [
        FileRole::CryptoConfig,
        FileRole::Configtx,
        FileRole::Compose,
        FileRole::StartScript,
        FileRole::ChannelScript,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FileRole::CryptoConfig => "crypto_config",
            FileRole::Configtx => "configtx",
            FileRole::Compose => "compose",
            FileRole::StartScript => "start_script",
            FileRole::ChannelScript => "channel_script",
        }
    }

    pub fn is_script(self) -> bool {
        matches!(self, FileRole::StartScript | FileRole::ChannelScript)
    }
}

/// Role-to-paths table. Single-file roles hold one path; compose and the
/// script roles may hold several, in merge order.
pub type Sources = BTreeMap<FileRole, Vec<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrgKind {
    Peer,
    Orderer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgSpec {
    pub name: String,
    pub domain: String,
    pub kind: OrgKind,
    pub msp_id: Option<String>,
    /// Short host names (`peer0`, `company`), not fully qualified.
    pub peer_hostnames: Vec<String>,
    pub template_count: Option<u64>,
    pub user_count: Option<u64>,
    pub location: SourceLocation,
}

impl OrgSpec {
    /// `peer0.org1.example.com` style names for every host of the org.
    pub fn fqdns(&self) -> impl Iterator<Item = String> + '_ {
        self.peer_hostnames.iter().map(move |h| format!("{}.{}", h, self.domain))
    }
}

/// An environment value as written, plus its interpolation against the host
/// environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvValue {
    pub raw: String,
    pub resolved: Option<String>,
    pub is_literal: bool,
    pub location: SourceLocation,
}

impl EnvValue {
    /// The best known value: the resolved text, else `None` while a
    /// reference is still unresolved.
    pub fn value(&self) -> Option<&str> {
        self.resolved.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Peer,
    Orderer,
    Cli,
    Ca,
    CouchDb,
    Unknown,
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Peer => "peer",
            NodeRole::Orderer => "orderer",
            NodeRole::Cli => "cli",
            NodeRole::Ca => "ca",
            NodeRole::CouchDb => "couchdb",
            NodeRole::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainerSpec {
    pub service_key: String,
    pub container_name: Option<String>,
    pub name_location: Option<SourceLocation>,
    pub image: Option<String>,
    pub env: BTreeMap<String, EnvValue>,
    pub command: Option<String>,
    pub command_location: Option<SourceLocation>,
    pub volumes: Vec<String>,
    pub depends_on: Vec<String>,
    pub depends_on_location: Option<SourceLocation>,
    pub location: SourceLocation,
}

impl ContainerSpec {
    /// `container_name` when set, else the service key.
    pub fn display_name(&self) -> &str {
        self.container_name.as_deref().unwrap_or(&self.service_key)
    }

    pub fn env_value(&self, key: &str) -> Option<&EnvValue> {
        self.env.get(key)
    }

    /// Every name another component could use to reach this container.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.service_key.as_str())
            .chain(self.container_name.as_deref())
            .chain(self.env.get("CORE_PEER_ID").and_then(|v| v.value()))
            .chain(self.env.get("ORDERER_GENERAL_ID").and_then(|v| v.value()))
    }

    pub fn answers_to(&self, host: &str) -> bool {
        self.names().any(|n| n == host)
    }

    /// Node role from the image name, falling back to env key prefixes.
    pub fn role(&self) -> NodeRole {
        if let Some(image) = &self.image {
            let image = image.to_ascii_lowercase();
            for (needle, role) in [
                ("fabric-peer", NodeRole::Peer),
                ("fabric-orderer", NodeRole::Orderer),
                ("fabric-tools", NodeRole::Cli),
                ("fabric-ca", NodeRole::Ca),
                ("couchdb", NodeRole::CouchDb),
            ] {
                if image.contains(needle) {
                    return role;
                }
            }
        }
        let has_prefix = |p: &str| self.env.keys().any(|k| k.starts_with(p));
        if has_prefix("ORDERER_GENERAL_") {
            NodeRole::Orderer
        } else if has_prefix("COUCHDB_") {
            NodeRole::CouchDb
        } else if has_prefix("FABRIC_CA_") {
            NodeRole::Ca
        } else if has_prefix("CORE_LEDGER_") || self.env.contains_key("CORE_PEER_GOSSIP_EXTERNALENDPOINT") {
            NodeRole::Peer
        } else if has_prefix("CORE_PEER_") {
            if self.command.as_deref().is_some_and(|c| c.contains("peer node start")) {
                NodeRole::Peer
            } else {
                NodeRole::Cli
            }
        } else {
            NodeRole::Unknown
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusType {
    Solo,
    Kafka,
    Etcdraft,
    #[default]
    Unknown,
}

impl ConsensusType {
    pub fn from_text(text: &str) -> Self {
        match text.trim().to_ascii_lowercase().as_str() {
            "solo" => ConsensusType::Solo,
            "kafka" => ConsensusType::Kafka,
            "etcdraft" => ConsensusType::Etcdraft,
            _ => ConsensusType::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OrdererConfig {
    pub consensus_type: ConsensusType,
    pub batch_timeout_ms: Option<u64>,
    pub max_message_count: Option<u64>,
    pub absolute_max_bytes: Option<u64>,
    pub preferred_max_bytes: Option<u64>,
    pub orderer_addresses: Vec<String>,
    pub location: Option<SourceLocation>,
    /// Per-field locations, keyed by the configtx key name.
    pub field_locations: BTreeMap<String, SourceLocation>,
}

impl OrdererConfig {
    pub fn field_location(&self, key: &str) -> Option<&SourceLocation> {
        self.field_locations.get(key).or(self.location.as_ref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateDbKind {
    LevelDb,
    CouchDb,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDbConfig {
    pub kind: StateDbKind,
    pub couch_address: Option<String>,
    pub peer_username: Option<EnvValue>,
    pub peer_password: Option<EnvValue>,
    /// Service key of the peer this database belongs to.
    pub owning_peer: String,
    pub location: SourceLocation,
}

impl StateDbConfig {
    /// Host part of `couch_address` (`couchdb0:5984` → `couchdb0`).
    pub fn couch_host(&self) -> Option<&str> {
        self.couch_address.as_deref().map(|a| strip_port(strip_scheme(a)))
    }
}

pub(crate) fn strip_scheme(addr: &str) -> &str {
    addr.split_once("://").map_or(addr, |(_, rest)| rest)
}

/// `host:7050` → `host`; leaves text without a numeric port untouched.
pub fn strip_port(addr: &str) -> &str {
    match addr.rsplit_once(':') {
        Some((host, port)) if !port.is_empty() && port.bytes().all(|b| b.is_ascii_digit()) => host,
        _ => addr,
    }
}

/// Who a chaincode was installed on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstallTarget {
    /// The `CORE_PEER_ADDRESS` in effect for the install command.
    Peer(String),
    /// No address context; identified by the script line.
    Anonymous { file: String, line: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaincodeDeployment {
    pub name: String,
    pub channel: Option<String>,
    pub policy_raw: Option<String>,
    #[serde(skip)]
    pub policy: Option<PolicyAst>,
    /// Byte offset and message when `policy_raw` failed to parse.
    pub policy_error: Option<String>,
    pub install_targets: Vec<InstallTarget>,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub name: String,
    /// MSP ids (or peer addresses when no MSP context) that joined.
    pub members: Vec<String>,
    pub anchor_orgs: Vec<String>,
    /// Where `peer channel create` ran, when it did.
    pub created_at: Option<SourceLocation>,
    pub location: SourceLocation,
}

/// An organization declared in configtx.yaml.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MspDeclaration {
    pub name: Option<String>,
    pub id: String,
    pub msp_dir: Option<String>,
    pub location: SourceLocation,
}

/// A `configtxgen -outputCreateChannelTx` invocation: which profile produced
/// which channel id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelDeclaration {
    pub channel: Option<String>,
    pub profile: Option<String>,
    pub location: SourceLocation,
}

/// Something a frontend noticed is structurally absent, for the
/// component-missing pattern to report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralNote {
    pub message: String,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Functionality,
    Performance,
    Security,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Functionality => "Functionality",
            Category::Performance => "Performance",
            Category::Security => "Security",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Finding severity; ordered `Info < Warning < Error`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Info,
    Warning,
    Error,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Info => "Info",
            Level::Warning => "Warning",
            Level::Error => "Error",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The twelve check patterns, declared in report-table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternId {
    StateDbChoice,
    InconsistentParams,
    ParamHardcoded,
    ComponentMissing,
    YamlSyntax,
    ComposeSyntax,
    BlockParams,
    ComplexPolicy,
    SimplePolicy,
    TlsOnoff,
    StateDbSecurity,
    ConsensusMechanism,
}

impl PatternId {
    pub const ALL: [PatternId; 12] = [
        PatternId::StateDbChoice,
        PatternId::InconsistentParams,
        PatternId::ParamHardcoded,
        PatternId::ComponentMissing,
        PatternId::YamlSyntax,
        PatternId::ComposeSyntax,
        PatternId::BlockParams,
        PatternId::ComplexPolicy,
        PatternId::SimplePolicy,
        PatternId::TlsOnoff,
        PatternId::StateDbSecurity,
        PatternId::ConsensusMechanism,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternId::StateDbChoice => "state_db_choice",
            PatternId::InconsistentParams => "inconsistent_params",
            PatternId::ParamHardcoded => "param_hardcoded",
            PatternId::ComponentMissing => "component_missing",
            PatternId::YamlSyntax => "yaml_syntax",
            PatternId::ComposeSyntax => "compose_syntax",
            PatternId::BlockParams => "block_params",
            PatternId::ComplexPolicy => "complex_policy",
            PatternId::SimplePolicy => "simple_policy",
            PatternId::TlsOnoff => "tls_onoff",
            PatternId::StateDbSecurity => "state_db_security",
            PatternId::ConsensusMechanism => "consensus_mechanism",
        }
    }

    /// Human title used in text reports and the corpus table.
    pub fn title(self) -> &'static str {
        match self {
            PatternId::StateDbChoice => "State database choice",
            PatternId::InconsistentParams => "Inconsistent parameters",
            PatternId::ParamHardcoded => "Parameter hardcoded",
            PatternId::ComponentMissing => "Component missing",
            PatternId::YamlSyntax => "Yaml syntax",
            PatternId::ComposeSyntax => "Docker compose file syntax",
            PatternId::BlockParams => "BlockTime / BlockSize",
            PatternId::ComplexPolicy => "Complex chaincode endorsement policy",
            PatternId::SimplePolicy => "Simple chaincode endorsement policy",
            PatternId::TlsOnoff => "TLS on/off",
            PatternId::StateDbSecurity => "State database security",
            PatternId::ConsensusMechanism => "Consensus mechanism",
        }
    }

    pub fn category(self) -> Category {
        match self {
            PatternId::StateDbChoice
            | PatternId::InconsistentParams
            | PatternId::ParamHardcoded
            | PatternId::ComponentMissing
            | PatternId::YamlSyntax
            | PatternId::ComposeSyntax => Category::Functionality,
            PatternId::BlockParams | PatternId::ComplexPolicy => Category::Performance,
            PatternId::SimplePolicy
            | PatternId::TlsOnoff
            | PatternId::StateDbSecurity
            | PatternId::ConsensusMechanism => Category::Security,
        }
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PatternId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PatternId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown pattern id `{s}`"))
    }
}

/// One detected reasonableness problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub category: Category,
    #[serde(rename = "type")]
    pub kind: String,
    pub message: String,
    pub location: SourceLocation,
    pub recommendation: String,
    pub pattern: PatternId,
    pub level: Level,
}

impl Finding {
    /// A finding with the pattern's default category.
    pub fn new(
        pattern: PatternId,
        level: Level,
        kind: impl Into<String>,
        message: impl Into<String>,
        location: SourceLocation,
        recommendation: impl Into<String>,
    ) -> Self {
        Self {
            category: pattern.category(),
            kind: kind.into(),
            message: message.into(),
            location: location.line_only(),
            recommendation: recommendation.into(),
            pattern,
            level,
        }
    }

    /// Deterministic report order: file, line (absent first), pattern, then
    /// the remaining fields so equal keys still sort stably.
    pub fn sort_key(&self) -> impl Ord + '_ {
        (
            &self.location.file,
            self.location.line,
            self.pattern,
            self.level,
            &self.kind,
            &self.message,
        )
    }
}

/// Tunable bounds for the threshold-driven patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub batch_timeout_min_ms: u64,
    pub batch_timeout_max_ms: u64,
    pub max_message_count_min: u64,
    pub max_message_count_max: u64,
    pub complex_min_signers: u64,
    pub complex_max_depth: u64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            batch_timeout_min_ms: 200,
            batch_timeout_max_ms: 10_000,
            max_message_count_min: 10,
            max_message_count_max: 500,
            complex_min_signers: 4,
            complex_max_depth: 3,
        }
    }
}

impl ThresholdConfig {
    /// Checks positivity and `min < max`; the error names the offending key.
    pub fn validate(&self) -> Result<(), String> {
        let values = [
            ("batch_timeout_min_ms", self.batch_timeout_min_ms),
            ("batch_timeout_max_ms", self.batch_timeout_max_ms),
            ("max_message_count_min", self.max_message_count_min),
            ("max_message_count_max", self.max_message_count_max),
            ("complex_min_signers", self.complex_min_signers),
            ("complex_max_depth", self.complex_max_depth),
        ];
        if let Some((key, _)) = values.iter().find(|(_, v)| *v == 0) {
            return Err(format!("{key} must be positive"));
        }
        if self.batch_timeout_min_ms >= self.batch_timeout_max_ms {
            return Err("batch_timeout_min_ms must be less than batch_timeout_max_ms".into());
        }
        if self.max_message_count_min >= self.max_message_count_max {
            return Err("max_message_count_min must be less than max_message_count_max".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CryptoFragment {
    pub path: String,
    pub orgs: Vec<OrgSpec>,
    pub notes: Vec<StructuralNote>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigtxFragment {
    pub path: String,
    pub orderer: OrdererConfig,
    pub orgs: Vec<MspDeclaration>,
    /// Profile names with their locations.
    pub profiles: Vec<(String, SourceLocation)>,
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComposeFragment {
    pub path: String,
    pub containers: Vec<ContainerSpec>,
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptFragment {
    pub path: String,
    pub role: FileRole,
    pub chaincodes: Vec<ChaincodeDeployment>,
    pub channels: Vec<ChannelSpec>,
    pub declarations: Vec<ChannelDeclaration>,
    pub notes: Vec<StructuralNote>,
}

/// The typed output of one frontend for one file.
#[derive(Debug, Clone, PartialEq)]
pub enum Fragment {
    CryptoConfig(CryptoFragment),
    Configtx(ConfigtxFragment),
    Compose(ComposeFragment),
    Script(ScriptFragment),
    /// A file that was read but could not be parsed; carries its syntax
    /// findings.
    Unparsed { role: FileRole, path: String, findings: Vec<Finding> },
}

impl Fragment {
    pub fn role(&self) -> FileRole {
        match self {
            Fragment::CryptoConfig(_) => FileRole::CryptoConfig,
            Fragment::Configtx(_) => FileRole::Configtx,
            Fragment::Compose(_) => FileRole::Compose,
            Fragment::Script(s) => s.role,
            Fragment::Unparsed { role, .. } => *role,
        }
    }

    pub fn path(&self) -> &str {
        match self {
            Fragment::CryptoConfig(f) => &f.path,
            Fragment::Configtx(f) => &f.path,
            Fragment::Compose(f) => &f.path,
            Fragment::Script(f) => &f.path,
            Fragment::Unparsed { path, .. } => path,
        }
    }
}

/// The merged view of one network. Built once by [`merge_sources`] and
/// never mutated afterwards.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct NetworkModel {
    pub orgs: Vec<OrgSpec>,
    pub containers: Vec<ContainerSpec>,
    pub orderer: Option<OrdererConfig>,
    pub state_dbs: Vec<StateDbConfig>,
    pub channels: Vec<ChannelSpec>,
    pub chaincodes: Vec<ChaincodeDeployment>,
    pub msp_declarations: Vec<MspDeclaration>,
    pub profiles: Vec<String>,
    pub channel_declarations: Vec<ChannelDeclaration>,
    pub structural_notes: Vec<StructuralNote>,
    /// Lines the script tokenizer had to skip.
    pub script_notes: Vec<StructuralNote>,
    pub parse_findings: Vec<Finding>,
    pub sources: Sources,
}

impl NetworkModel {
    pub fn has_role(&self, role: FileRole) -> bool {
        self.sources.get(&role).is_some_and(|p| !p.is_empty())
    }

    pub fn has_scripts(&self) -> bool {
        self.has_role(FileRole::StartScript) || self.has_role(FileRole::ChannelScript)
    }

    pub fn containers_with_role(&self, role: NodeRole) -> impl Iterator<Item = &ContainerSpec> {
        self.containers.iter().filter(move |c| c.role() == role)
    }

    pub fn container_answering(&self, host: &str) -> Option<&ContainerSpec> {
        self.containers.iter().find(|c| c.answers_to(host))
    }

    /// All paths named in `sources`.
    pub fn source_paths(&self) -> BTreeSet<&str> {
        self.sources.values().flatten().map(String::as_str).collect()
    }
}

/// Folds per-file fragments into one model.
///
/// Compose fragments merge in file-name order, later files overriding
/// earlier ones field by field. Cross references stay as written; nothing
/// is dropped for failing to resolve.
pub fn merge_sources(fragments: Vec<Fragment>) -> NetworkModel {
    let mut model = NetworkModel::default();
    let mut crypto: Vec<CryptoFragment> = Vec::new();
    let mut configtx: Vec<ConfigtxFragment> = Vec::new();
    let mut compose: Vec<ComposeFragment> = Vec::new();
    let mut scripts: Vec<ScriptFragment> = Vec::new();

    for fragment in fragments {
        model
            .sources
            .entry(fragment.role())
            .or_default()
            .push(fragment.path().to_string());
        match fragment {
            Fragment::CryptoConfig(f) => crypto.push(f),
            Fragment::Configtx(f) => configtx.push(f),
            Fragment::Compose(f) => compose.push(f),
            Fragment::Script(f) => scripts.push(f),
            Fragment::Unparsed { findings, .. } => model.parse_findings.extend(findings),
        }
    }
    for paths in model.sources.values_mut() {
        paths.dedup();
    }
    if let Some(paths) = model.sources.get_mut(&FileRole::Compose) {
        paths.sort_by(|a, b| file_name(a).cmp(file_name(b)).then(a.cmp(b)));
    }

    for f in crypto {
        model.orgs.extend(f.orgs);
        model.structural_notes.extend(f.notes);
    }

    for f in configtx {
        if model.orderer.is_none() {
            model.orderer = Some(f.orderer);
        }
        model.msp_declarations.extend(f.orgs);
        model.profiles.extend(f.profiles.into_iter().map(|(name, _)| name));
        model.parse_findings.extend(f.findings);
    }
    for org in &mut model.orgs {
        org.msp_id = match_msp(org, &model.msp_declarations);
    }

    compose.sort_by(|a, b| file_name(&a.path).cmp(file_name(&b.path)).then(a.path.cmp(&b.path)));
    let mut containers: Vec<ContainerSpec> = Vec::new();
    for f in compose {
        model.parse_findings.extend(f.findings);
        for c in f.containers {
            match containers.iter_mut().find(|e| e.service_key == c.service_key) {
                Some(existing) => overlay_container(existing, c),
                None => containers.push(c),
            }
        }
    }
    model.containers = containers;
    model.parse_findings.extend(crate::yaml::cross_service_findings(&model.containers));
    model.state_dbs = model.containers.iter().filter_map(state_db_of).collect();

    for f in scripts {
        for ch in f.channels {
            match model.channels.iter_mut().find(|e| e.name == ch.name) {
                Some(existing) => {
                    push_unique(&mut existing.members, ch.members);
                    push_unique(&mut existing.anchor_orgs, ch.anchor_orgs);
                    if existing.created_at.is_none() {
                        existing.created_at = ch.created_at;
                    }
                }
                None => model.channels.push(ch),
            }
        }
        merge_chaincodes(&mut model.chaincodes, f.chaincodes);
        model.channel_declarations.extend(f.declarations);
        model.script_notes.extend(f.notes);
    }
    finish_chaincodes(&mut model.chaincodes);

    model
}

fn file_name(path: &str) -> &str {
    path.rsplit(['/', '\\']).next().unwrap_or(path)
}

fn push_unique(into: &mut Vec<String>, from: Vec<String>) {
    for item in from {
        if !into.contains(&item) {
            into.push(item);
        }
    }
}

fn match_msp(org: &OrgSpec, decls: &[MspDeclaration]) -> Option<String> {
    let needle = format!("/{}/", org.domain);
    decls
        .iter()
        .find(|d| {
            d.msp_dir.as_deref().is_some_and(|dir| {
                let dir = dir.replace('\\', "/");
                dir.contains(&needle) || dir.ends_with(&needle[..needle.len() - 1])
            })
        })
        .or_else(|| decls.iter().find(|d| d.name.as_deref() == Some(org.name.as_str())))
        .map(|d| d.id.clone())
}

/// Later compose files override scalars, merge env, and extend lists.
fn overlay_container(base: &mut ContainerSpec, over: ContainerSpec) {
    if over.container_name.is_some() {
        base.container_name = over.container_name;
        base.name_location = over.name_location;
    }
    if over.image.is_some() {
        base.image = over.image;
    }
    if over.command.is_some() {
        base.command = over.command;
        base.command_location = over.command_location;
    }
    base.env.extend(over.env);
    for v in over.volumes {
        if !base.volumes.contains(&v) {
            base.volumes.push(v);
        }
    }
    if over.depends_on_location.is_some() {
        base.depends_on_location = over.depends_on_location;
    }
    push_unique(&mut base.depends_on, over.depends_on);
}

const STATE_DB_KEY: &str = "CORE_LEDGER_STATE_STATEDATABASE";
const COUCH_ADDRESS_KEY: &str = "CORE_LEDGER_STATE_COUCHDBCONFIG_COUCHDBADDRESS";
const COUCH_USER_KEY: &str = "CORE_LEDGER_STATE_COUCHDBCONFIG_USERNAME";
const COUCH_PASSWORD_KEY: &str = "CORE_LEDGER_STATE_COUCHDBCONFIG_PASSWORD";

fn state_db_of(c: &ContainerSpec) -> Option<StateDbConfig> {
    if c.role() != NodeRole::Peer {
        return None;
    }
    let selector = c.env_value(STATE_DB_KEY);
    let is_couch = selector
        .and_then(|v| v.value().or(Some(v.raw.as_str())))
        .is_some_and(|v| v.trim().eq_ignore_ascii_case("couchdb"));
    let location = selector.map_or_else(|| c.location.clone(), |v| v.location.clone());
    if is_couch {
        Some(StateDbConfig {
            kind: StateDbKind::CouchDb,
            couch_address: c
                .env_value(COUCH_ADDRESS_KEY)
                .map(|v| v.value().unwrap_or(&v.raw).to_string()),
            peer_username: c.env_value(COUCH_USER_KEY).cloned(),
            peer_password: c.env_value(COUCH_PASSWORD_KEY).cloned(),
            owning_peer: c.service_key.clone(),
            location,
        })
    } else {
        Some(StateDbConfig {
            kind: StateDbKind::LevelDb,
            couch_address: None,
            peer_username: None,
            peer_password: None,
            owning_peer: c.service_key.clone(),
            location,
        })
    }
}

fn merge_chaincodes(into: &mut Vec<ChaincodeDeployment>, from: Vec<ChaincodeDeployment>) {
    for cc in from {
        match into.iter_mut().find(|e| e.name == cc.name && e.channel == cc.channel) {
            Some(existing) => {
                for t in cc.install_targets {
                    if !existing.install_targets.contains(&t) {
                        existing.install_targets.push(t);
                    }
                }
                if cc.policy_raw.is_some() {
                    existing.policy_raw = cc.policy_raw;
                    existing.policy = cc.policy;
                    existing.policy_error = cc.policy_error;
                    existing.location = cc.location;
                }
            }
            None => into.push(cc),
        }
    }
}

/// Install-only entries (channel absent) lend their targets to every
/// instantiated deployment of the same name and then disappear if such a
/// deployment exists.
fn finish_chaincodes(chaincodes: &mut Vec<ChaincodeDeployment>) {
    let installs: Vec<(String, Vec<InstallTarget>)> = chaincodes
        .iter()
        .filter(|c| c.channel.is_none())
        .map(|c| (c.name.clone(), c.install_targets.clone()))
        .collect();
    for cc in chaincodes.iter_mut().filter(|c| c.channel.is_some()) {
        for (name, targets) in &installs {
            if *name == cc.name {
                for t in targets {
                    if !cc.install_targets.contains(t) {
                        cc.install_targets.push(t.clone());
                    }
                }
            }
        }
    }
    let instantiated: BTreeSet<String> = chaincodes
        .iter()
        .filter(|c| c.channel.is_some())
        .map(|c| c.name.clone())
        .collect();
    chaincodes.retain(|c| {
        c.channel.is_some() || c.policy_raw.is_some() || !instantiated.contains(&c.name)
    });
}
