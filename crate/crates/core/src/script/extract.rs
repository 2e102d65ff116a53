use std::collections::BTreeMap;

use crate::model::{
    ChaincodeDeployment, ChannelDeclaration, ChannelSpec, FileRole, InstallTarget, ScriptFragment,
    SourceLocation, StructuralNote,
};
use crate::policy::parse_policy;

use super::lexer::Vars;
use super::{basename, scan_script, scan_with_vars, CommandInvocation};

/// A `peer …` command with everything before the subcommand stripped,
/// whether it was run directly or through `docker exec`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerCommand {
    /// Arguments after `peer`.
    pub args: Vec<String>,
    pub context: BTreeMap<String, String>,
    pub line: u32,
}

/// Unwraps `peer …`, `docker exec [opts] CONTAINER peer …` and
/// `docker exec … CONTAINER sh -c "peer …"`. `-e KEY=VALUE` options feed the
/// command context.
pub fn effective_peer_commands(inv: &CommandInvocation) -> Vec<PeerCommand> {
    let mut context = inv.context.clone();
    for (k, v) in &inv.env {
        context.insert(k.clone(), v.clone());
    }
    unwrap_argv(&inv.argv, context, inv.line)
}

fn unwrap_argv(argv: &[String], mut context: BTreeMap<String, String>, line: u32) -> Vec<PeerCommand> {
    let Some(program) = argv.first().map(|p| basename(p)) else { return Vec::new() };
    if program == "peer" {
        return vec![PeerCommand { args: argv[1..].to_vec(), context, line }];
    }
    if program != "docker" || argv.get(1).map(String::as_str) != Some("exec") {
        return Vec::new();
    }
    let mut i = 2;
    while i < argv.len() && argv[i].starts_with('-') {
        let opt = argv[i].as_str();
        let inline = opt.split_once('=').map(|(o, v)| (o, v.to_string()));
        let (name, value) = match inline {
            Some((o, v)) if o.starts_with("--") => (o, Some(v)),
            _ => (opt, None),
        };
        let takes_value = matches!(name, "-e" | "--env" | "-w" | "--workdir" | "-u" | "--user" | "--env-file");
        let value = match value {
            Some(v) => Some(v),
            None if takes_value => {
                i += 1;
                argv.get(i).cloned()
            }
            None => None,
        };
        if matches!(name, "-e" | "--env") {
            if let Some((k, v)) = value.as_deref().and_then(|v| v.split_once('=')) {
                context.insert(k.to_string(), v.to_string());
            }
        }
        i += 1;
    }
    // argv[i] is the container
    let rest = argv.get(i + 1..).unwrap_or_default();
    match rest.first().map(|p| basename(p)) {
        Some("peer") => unwrap_argv(rest, context, line),
        Some("sh" | "bash") if rest.get(1).map(String::as_str) == Some("-c") => {
            let Some(inner) = rest.get(2) else { return Vec::new() };
            let mut vars: Vars = context.clone();
            scan_with_vars(inner, &mut vars)
                .invocations
                .iter()
                .flat_map(|inv| {
                    let mut ctx = context.clone();
                    ctx.extend(inv.context.clone());
                    ctx.extend(inv.env.iter().cloned());
                    unwrap_argv(&inv.argv, ctx, line)
                })
                .collect()
        }
        _ => Vec::new(),
    }
}

fn option<'a>(args: &'a [String], names: &[&str]) -> Option<&'a str> {
    let mut i = 0;
    while i < args.len() {
        let a = args[i].as_str();
        if names.contains(&a) {
            return Some(args.get(i + 1).map_or("", String::as_str));
        }
        if let Some((flag, value)) = a.split_once('=') {
            if flag.starts_with("--") && names.contains(&flag) {
                return Some(value);
            }
        }
        i += 1;
    }
    None
}

fn subcommand(args: &[String]) -> (&str, &str) {
    (
        args.first().map_or("", String::as_str),
        args.get(1).map_or("", String::as_str),
    )
}

fn is_unresolved(text: &str) -> bool {
    text.contains('$')
}

/// Chaincode installs and instantiations. Installs contribute targets keyed
/// by `CORE_PEER_ADDRESS`; instantiate/upgrade contribute channel and
/// policy. Entries with the same name and channel merge.
pub fn extract_chaincode_deployments(invocations: &[CommandInvocation], path: &str) -> Vec<ChaincodeDeployment> {
    let mut out: Vec<ChaincodeDeployment> = Vec::new();
    for inv in invocations {
        for cmd in effective_peer_commands(inv) {
            let (group, action) = subcommand(&cmd.args);
            if group != "chaincode" || !matches!(action, "install" | "instantiate" | "upgrade") {
                continue;
            }
            let Some(name) = option(&cmd.args, &["-n", "--name"]).filter(|n| !n.is_empty()) else {
                continue;
            };
            let location = SourceLocation::at(path, cmd.line);
            let mut entry = ChaincodeDeployment {
                name: name.to_string(),
                channel: None,
                policy_raw: None,
                policy: None,
                policy_error: None,
                install_targets: Vec::new(),
                location,
            };
            if action == "install" {
                entry.install_targets.push(match cmd.context.get("CORE_PEER_ADDRESS") {
                    Some(addr) => InstallTarget::Peer(addr.clone()),
                    None => InstallTarget::Anonymous { file: path.to_string(), line: cmd.line },
                });
            } else {
                entry.channel = option(&cmd.args, &["-C", "--channelID"]).map(str::to_string);
                if let Some(raw) = option(&cmd.args, &["-P", "--policy"]) {
                    entry.policy_raw = Some(raw.to_string());
                    if raw.trim().is_empty() {
                        entry.policy_error = Some("empty policy".into());
                    } else if !is_unresolved(raw) {
                        match parse_policy(raw) {
                            Ok(ast) => entry.policy = Some(ast),
                            Err(e) => entry.policy_error = Some(e.to_string()),
                        }
                    }
                }
            }
            merge_deployment(&mut out, entry);
        }
    }
    out
}

fn merge_deployment(out: &mut Vec<ChaincodeDeployment>, entry: ChaincodeDeployment) {
    match out.iter_mut().find(|e| e.name == entry.name && e.channel == entry.channel) {
        Some(existing) => {
            for t in entry.install_targets {
                if !existing.install_targets.contains(&t) {
                    existing.install_targets.push(t);
                }
            }
            if entry.policy_raw.is_some() {
                existing.policy_raw = entry.policy_raw;
                existing.policy = entry.policy;
                existing.policy_error = entry.policy_error;
                existing.location = entry.location;
            }
        }
        None => out.push(entry),
    }
}

/// Channel create / join / anchor-update operations, one entry per channel.
pub fn extract_channel_ops(invocations: &[CommandInvocation], path: &str) -> Vec<ChannelSpec> {
    let mut channels: Vec<ChannelSpec> = Vec::new();
    for inv in invocations {
        for cmd in effective_peer_commands(inv) {
            let (group, action) = subcommand(&cmd.args);
            if group != "channel" {
                continue;
            }
            let location = SourceLocation::at(path, cmd.line);
            let msp = cmd.context.get("CORE_PEER_LOCALMSPID").cloned();
            match action {
                "create" => {
                    let Some(name) = option(&cmd.args, &["-c", "--channelID"]).filter(|n| !n.is_empty()) else {
                        continue;
                    };
                    let ch = channel_entry(&mut channels, name, &location);
                    if ch.created_at.is_none() {
                        ch.created_at = Some(location);
                    }
                }
                "join" => {
                    let Some(block) = option(&cmd.args, &["-b", "--blockpath"]) else { continue };
                    let name = basename(block).trim_end_matches(".block");
                    if name.is_empty() {
                        continue;
                    }
                    let member = msp
                        .or_else(|| cmd.context.get("CORE_PEER_ADDRESS").cloned())
                        .unwrap_or_else(|| format!("anonymous@{}", cmd.line));
                    let ch = channel_entry(&mut channels, name, &location);
                    if !ch.members.contains(&member) {
                        ch.members.push(member);
                    }
                }
                "update" => {
                    let Some(file) = option(&cmd.args, &["-f", "--file"]) else { continue };
                    if !basename(file).to_ascii_lowercase().contains("anchor") {
                        continue;
                    }
                    let Some(name) = option(&cmd.args, &["-c", "--channelID"]).filter(|n| !n.is_empty()) else {
                        continue;
                    };
                    let Some(org) = msp.filter(|m| !is_unresolved(m)).or_else(|| anchor_org_from_file(file)) else {
                        continue;
                    };
                    let ch = channel_entry(&mut channels, name, &location);
                    if !ch.anchor_orgs.contains(&org) {
                        ch.anchor_orgs.push(org);
                    }
                }
                _ => {}
            }
        }
    }
    channels
}

fn channel_entry<'a>(channels: &'a mut Vec<ChannelSpec>, name: &str, location: &SourceLocation) -> &'a mut ChannelSpec {
    let idx = match channels.iter().position(|c| c.name == name) {
        Some(i) => i,
        None => {
            channels.push(ChannelSpec {
                name: name.to_string(),
                members: Vec::new(),
                anchor_orgs: Vec::new(),
                created_at: None,
                location: location.clone(),
            });
            channels.len() - 1
        }
    };
    &mut channels[idx]
}

/// `Org1MSPanchors.tx` → `Org1MSP`.
fn anchor_org_from_file(file: &str) -> Option<String> {
    let name = basename(file);
    let pos = name.to_ascii_lowercase().find("anchor")?;
    let prefix = name[..pos].trim_end_matches(['_', '-', '.']);
    (!prefix.is_empty() && !is_unresolved(prefix)).then(|| prefix.to_string())
}

/// `configtxgen -profile P [-channelID C] …` invocations. The channel is
/// recorded only for channel-creation and anchor-update outputs.
pub fn extract_channel_declarations(invocations: &[CommandInvocation], path: &str) -> Vec<ChannelDeclaration> {
    invocations
        .iter()
        .filter(|inv| inv.program() == "configtxgen")
        .filter_map(|inv| {
            let args = &inv.argv[1..];
            let profile = option(args, &["-profile", "--profile"]).map(str::to_string);
            let creates_channel = args
                .iter()
                .any(|a| a.starts_with("-outputCreateChannelTx") || a.starts_with("-outputAnchorPeersUpdate"));
            let channel = creates_channel
                .then(|| option(args, &["-channelID", "--channelID"]).map(str::to_string))
                .flatten();
            (profile.is_some() || channel.is_some()).then(|| ChannelDeclaration {
                channel,
                profile,
                location: SourceLocation::at(path, inv.line),
            })
        })
        .collect()
}

/// Runs every extractor over one script.
pub fn parse_script(text: &str, path: &str, role: FileRole) -> ScriptFragment {
    let scan = scan_script(text);
    ScriptFragment {
        path: path.to_string(),
        role,
        chaincodes: extract_chaincode_deployments(&scan.invocations, path),
        channels: extract_channel_ops(&scan.invocations, path),
        declarations: extract_channel_declarations(&scan.invocations, path),
        notes: scan
            .notes
            .into_iter()
            .map(|n| StructuralNote { message: n.message, location: SourceLocation::at(path, n.line) })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{min_orgs, PolicyAst};
    use crate::script::extract_commands;

    fn deployments(text: &str) -> Vec<ChaincodeDeployment> {
        extract_chaincode_deployments(&extract_commands(text), "scripts/script.sh")
    }

    fn channels(text: &str) -> Vec<ChannelSpec> {
        extract_channel_ops(&extract_commands(text), "scripts/script.sh")
    }

    #[test]
    fn instantiate_with_or_policy() {
        let d = deployments(
            "peer chaincode instantiate -o orderer:7050 -C mychannel -n mycc -v 1.0 -c '{\"Args\":[\"init\"]}' -P \"OR('Org1MSP.member','Org2MSP.member')\"\n",
        );
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].channel.as_deref(), Some("mychannel"));
        assert_eq!(d[0].policy_raw.as_deref(), Some("OR('Org1MSP.member','Org2MSP.member')"));
        assert!(matches!(d[0].policy, Some(PolicyAst::Or(_))));
    }

    #[test]
    fn install_only_has_no_policy() {
        let d = deployments("peer chaincode install -n mycc -v 1.0 -p github.com/chaincode\n");
        assert_eq!(d.len(), 1);
        assert!(d[0].policy_raw.is_none());
        assert!(d[0].channel.is_none());
        assert!(matches!(d[0].install_targets[0], InstallTarget::Anonymous { line: 1, .. }));
    }

    #[test]
    fn and_policy_across_two_orgs() {
        let d = deployments("peer chaincode instantiate -C ch -n cc -P \"AND ('Org1MSP.peer','Org2MSP.peer')\"\n");
        assert_eq!(min_orgs(d[0].policy.as_ref().unwrap()), 2);
    }

    #[test]
    fn empty_policy_argument() {
        let d = deployments("peer chaincode instantiate -C ch -n cc -P ''\n");
        assert_eq!(d[0].policy_raw.as_deref(), Some(""));
        assert!(d[0].policy.is_none());
        assert!(d[0].policy_error.is_some());
    }

    #[test]
    fn install_targets_follow_peer_address() {
        let text = "CORE_PEER_ADDRESS=peer0.org1.example.com:7051\npeer chaincode install -n mycc\nCORE_PEER_ADDRESS=peer0.org2.example.com:9051\npeer chaincode install -n mycc\n";
        let d = deployments(text);
        assert_eq!(d.len(), 1);
        assert_eq!(
            d[0].install_targets,
            vec![
                InstallTarget::Peer("peer0.org1.example.com:7051".into()),
                InstallTarget::Peer("peer0.org2.example.com:9051".into())
            ]
        );
    }

    #[test]
    fn docker_exec_unwraps_to_peer_with_env() {
        let text = "docker exec -e \"CORE_PEER_LOCALMSPID=Org1MSP\" -e CORE_PEER_ADDRESS=peer0:7051 cli peer channel join -b mychannel.block\n";
        let ch = channels(text);
        assert_eq!(ch.len(), 1);
        assert_eq!(ch[0].name, "mychannel");
        assert_eq!(ch[0].members, vec!["Org1MSP"]);
    }

    #[test]
    fn docker_exec_sh_c() {
        let text = "docker exec cli sh -c \"CORE_PEER_ADDRESS=p:7051 peer chaincode install -n mycc\"\n";
        let d = deployments(text);
        assert_eq!(d[0].install_targets, vec![InstallTarget::Peer("p:7051".into())]);
    }

    #[test]
    fn create_then_two_anchor_updates() {
        let text = "peer channel create -o orderer:7050 -c mychannel -f ./channel-artifacts/channel.tx\nCORE_PEER_LOCALMSPID=Org1MSP\npeer channel update -o orderer:7050 -c mychannel -f ./channel-artifacts/Org1MSPanchors.tx\nCORE_PEER_LOCALMSPID=Org2MSP\npeer channel update -o orderer:7050 -c mychannel -f ./channel-artifacts/Org2MSPanchors.tx\n";
        let ch = channels(text);
        assert_eq!(ch.len(), 1);
        assert_eq!(ch[0].anchor_orgs, vec!["Org1MSP", "Org2MSP"]);
        assert_eq!(ch[0].created_at.as_ref().unwrap().line, Some(1));
    }

    #[test]
    fn anchor_org_from_filename_prefix() {
        let ch = channels("peer channel update -c mychannel -f ./channel-artifacts/Org1MSPanchors.tx\n");
        assert_eq!(ch[0].anchor_orgs, vec!["Org1MSP"]);
        assert_eq!(anchor_org_from_file("Org2MSP_anchors.tx").as_deref(), Some("Org2MSP"));
        assert_eq!(anchor_org_from_file("anchors.tx"), None);
    }

    #[test]
    fn non_anchor_update_is_ignored() {
        assert!(channels("peer channel update -c ch -f config_update.pb\n").is_empty());
        assert!(channels("echo nothing\n").is_empty());
    }

    #[test]
    fn configtxgen_declarations() {
        let text = "configtxgen -profile TwoOrgsOrdererGenesis -channelID sys -outputBlock ./genesis.block\nconfigtxgen -profile TwoOrgsChannel -outputCreateChannelTx ./channel.tx -channelID mychannel\n";
        let decls = extract_channel_declarations(&extract_commands(text), "start.sh");
        assert_eq!(decls.len(), 2);
        assert_eq!(decls[0].channel, None);
        assert_eq!(decls[1].channel.as_deref(), Some("mychannel"));
        assert_eq!(decls[1].profile.as_deref(), Some("TwoOrgsChannel"));
    }
}
